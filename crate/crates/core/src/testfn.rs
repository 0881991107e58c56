//! Polynomial-trigonometric test functions over affine forms in `(w, c)` and
//! their exact right/left invariant derivatives.
//!
//! A [`TestFunction`] is `Σ coeff · Π atom`, each atom being `L`, `sin L` or
//! `cos L` for an affine form `L(g) = ⟨λ_w, w⟩ + ⟨λ_c, c⟩ + κ`. Forms carry a
//! slot index so the same type describes cylinder functions of several group
//! points. Differentiating `L` along `εh·g` yields the affine form
//! `⟨λ_w, A⟩ + ⟨λ_c, a⟩ + ½⟨λ_c, ω(A, w)⟩`, so the family is closed.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::group::{GroupPoint, OmegaForm};
use crate::path::{GroupPath, TimeGrid};

/// `⟨λ_w, w⟩ + ⟨λ_c, c⟩ + κ` evaluated on the point in `slot`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineForm {
    #[serde(default)]
    pub slot: usize,
    pub lw: Vec<f64>,
    pub lc: Vec<f64>,
    #[serde(default)]
    pub kappa: f64,
}

impl AffineForm {
    pub fn new(lw: Vec<f64>, lc: Vec<f64>, kappa: f64) -> Self {
        Self { slot: 0, lw, lc, kappa }
    }

    pub fn at_slot(mut self, slot: usize) -> Self {
        self.slot = slot;
        self
    }

    pub fn eval(&self, g: &GroupPoint) -> f64 {
        let w: f64 = self.lw.iter().zip(&g.w).map(|(a, b)| a * b).sum();
        let c: f64 = self.lc.iter().zip(&g.c).map(|(a, b)| a * b).sum();
        w + c + self.kappa
    }

    fn is_constant(&self) -> bool {
        self.lw.iter().chain(&self.lc).all(|&x| x == 0.0)
    }

    fn negated(&self) -> Self {
        Self {
            slot: self.slot,
            lw: self.lw.iter().map(|x| -x).collect(),
            lc: self.lc.iter().map(|x| -x).collect(),
            kappa: -self.kappa,
        }
    }

    /// Derivative along `ε ↦ εh·g` (`sign = ½`) or `ε ↦ g·εh` (`sign = −½`).
    fn derive(&self, h: &GroupPoint, omega: &OmegaForm, sign: f64) -> Self {
        let constant: f64 = self.lw.iter().zip(&h.w).map(|(a, b)| a * b).sum::<f64>()
            + self.lc.iter().zip(&h.c).map(|(a, b)| a * b).sum::<f64>();
        let lw = omega
            .contract_left(&self.lc, &h.w)
            .into_iter()
            .map(|x| sign * x)
            .collect();
        Self {
            slot: self.slot,
            lw,
            lc: vec![0.0; self.lc.len()],
            kappa: constant,
        }
    }

    /// `max(|κ|, ‖λ_w‖, ‖λ_c‖)`, so `|L(g)| ≤ bound · (1 + ‖g‖)`.
    fn growth(&self) -> f64 {
        let n = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.kappa.abs().max(n(&self.lw)).max(n(&self.lc))
    }

    fn key_cmp(&self, other: &Self) -> Ordering {
        self.slot.cmp(&other.slot).then_with(|| {
            let a = self.lw.iter().chain(&self.lc).chain(std::iter::once(&self.kappa));
            let b = other.lw.iter().chain(&other.lc).chain(std::iter::once(&other.kappa));
            a.zip(b)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(Ordering::Equal)
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Atom {
    Affine(AffineForm),
    Sin(AffineForm),
    Cos(AffineForm),
}

impl Atom {
    fn form(&self) -> &AffineForm {
        match self {
            Atom::Affine(l) | Atom::Sin(l) | Atom::Cos(l) => l,
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Atom::Affine(_) => 0,
            Atom::Sin(_) => 1,
            Atom::Cos(_) => 2,
        }
    }

    pub fn eval(&self, points: &[GroupPoint]) -> f64 {
        let x = self.form().eval(&points[self.form().slot]);
        match self {
            Atom::Affine(_) => x,
            Atom::Sin(_) => x.sin(),
            Atom::Cos(_) => x.cos(),
        }
    }

    fn cmp_key(&self, other: &Self) -> Ordering {
        self.rank().cmp(&other.rank()).then_with(|| self.form().key_cmp(other.form()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Term {
    pub coeff: f64,
    #[serde(default)]
    pub atoms: Vec<Atom>,
}

/// A formal sum of products of atoms in `slots` group points of dimension
/// `(dim_w, dim_c)`. Always kept in canonical form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTestFunction", into = "RawTestFunction")]
pub struct TestFunction {
    dim_w: usize,
    dim_c: usize,
    slots: usize,
    terms: Vec<Term>,
}

/// Serialized layout of [`TestFunction`].
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTestFunction {
    pub dim_w: usize,
    pub dim_c: usize,
    #[serde(default = "one")]
    pub slots: usize,
    pub terms: Vec<Term>,
}

fn one() -> usize {
    1
}

impl TryFrom<RawTestFunction> for TestFunction {
    type Error = Error;

    fn try_from(raw: RawTestFunction) -> Result<Self> {
        TestFunction::from_terms(raw.dim_w, raw.dim_c, raw.slots, raw.terms)
    }
}

impl From<TestFunction> for RawTestFunction {
    fn from(f: TestFunction) -> Self {
        Self {
            dim_w: f.dim_w,
            dim_c: f.dim_c,
            slots: f.slots,
            terms: f.terms,
        }
    }
}

impl TestFunction {
    pub fn from_terms(dim_w: usize, dim_c: usize, slots: usize, terms: Vec<Term>) -> Result<Self> {
        if dim_w == 0 || dim_c == 0 || slots == 0 {
            return Err(Error::Config("test function dimensions and slot count must be positive".into()));
        }
        for t in &terms {
            if !t.coeff.is_finite() {
                return Err(Error::Config("test function coefficients must be finite".into()));
            }
            for a in &t.atoms {
                let l = a.form();
                check_dim("test function lambda_w", dim_w, l.lw.len())?;
                check_dim("test function lambda_c", dim_c, l.lc.len())?;
                if l.slot >= slots {
                    return Err(Error::Config(format!("atom slot {} exceeds slot count {slots}", l.slot)));
                }
                if l.lw.iter().chain(&l.lc).chain(std::iter::once(&l.kappa)).any(|x| !x.is_finite()) {
                    return Err(Error::Config("affine form entries must be finite".into()));
                }
            }
        }
        let mut f = Self {
            dim_w,
            dim_c,
            slots,
            terms,
        };
        f.canonicalize();
        Ok(f)
    }

    pub fn constant(dim_w: usize, dim_c: usize, value: f64) -> Self {
        Self::from_terms(dim_w, dim_c, 1, vec![Term { coeff: value, atoms: vec![] }]).expect("constant is valid")
    }

    pub fn zero(dim_w: usize, dim_c: usize) -> Self {
        Self::constant(dim_w, dim_c, 0.0)
    }

    /// The single atom `coeff · atom` on one group point.
    pub fn atom(coeff: f64, atom: Atom) -> Result<Self> {
        let (dw, dc) = (atom.form().lw.len(), atom.form().lc.len());
        let slots = atom.form().slot + 1;
        Self::from_terms(dw, dc, slots, vec![Term { coeff, atoms: vec![atom] }])
    }

    /// `⟨λ_w, w⟩ + ⟨λ_c, c⟩`.
    pub fn linear(lw: Vec<f64>, lc: Vec<f64>) -> Result<Self> {
        Self::atom(1.0, Atom::Affine(AffineForm::new(lw, lc, 0.0)))
    }

    pub fn sin(form: AffineForm) -> Result<Self> {
        Self::atom(1.0, Atom::Sin(form))
    }

    pub fn cos(form: AffineForm) -> Result<Self> {
        Self::atom(1.0, Atom::Cos(form))
    }

    pub fn dim_w(&self) -> usize {
        self.dim_w
    }

    pub fn dim_c(&self) -> usize {
        self.dim_c
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn terms(&self) -> &[Term] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// No affine atoms: bounded by `Σ|coeff|`.
    pub fn is_bounded(&self) -> bool {
        self.terms.iter().all(|t| t.atoms.iter().all(|a| !matches!(a, Atom::Affine(_))))
    }

    fn compatible(&self, other: &Self) -> Result<()> {
        check_dim("test function dim_w", self.dim_w, other.dim_w)?;
        check_dim("test function dim_c", self.dim_c, other.dim_c)
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let terms = self.terms.iter().chain(&other.terms).cloned().collect();
        Self::from_terms(self.dim_w, self.dim_c, self.slots.max(other.slots), terms)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.compatible(other)?;
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                let mut atoms = a.atoms.clone();
                atoms.extend(b.atoms.iter().cloned());
                terms.push(Term {
                    coeff: a.coeff * b.coeff,
                    atoms,
                });
            }
        }
        Self::from_terms(self.dim_w, self.dim_c, self.slots.max(other.slots), terms)
    }

    pub fn scale(&self, factor: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .map(|t| Term {
                coeff: factor * t.coeff,
                atoms: t.atoms.clone(),
            })
            .collect();
        Self::from_terms(self.dim_w, self.dim_c, self.slots, terms).expect("scaling preserves validity")
    }

    /// Single-point evaluation; requires `slots == 1`.
    pub fn eval(&self, g: &GroupPoint) -> Result<f64> {
        self.eval_points(std::slice::from_ref(g))
    }

    pub fn eval_points(&self, points: &[GroupPoint]) -> Result<f64> {
        check_dim("test function points", self.slots, points.len())?;
        for p in points {
            check_dim("test function point w", self.dim_w, p.w.len())?;
            check_dim("test function point c", self.dim_c, p.c.len())?;
        }
        Ok(self.eval_unchecked(points))
    }

    pub(crate) fn eval_unchecked(&self, points: &[GroupPoint]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.atoms.iter().map(|a| a.eval(points)).product::<f64>())
            .sum()
    }

    fn derive(&self, dirs: &[GroupPoint], omega: &OmegaForm, sign: f64) -> Result<Self> {
        check_dim("test function dim_w vs omega", omega.dim_w(), self.dim_w)?;
        check_dim("test function dim_c vs omega", omega.dim_c(), self.dim_c)?;
        check_dim("derivative directions", self.slots, dirs.len())?;
        for h in dirs {
            check_dim("direction w", self.dim_w, h.w.len())?;
            check_dim("direction c", self.dim_c, h.c.len())?;
        }
        let mut terms = Vec::new();
        for t in &self.terms {
            for (i, atom) in t.atoms.iter().enumerate() {
                let l = atom.form();
                let dl = Atom::Affine(l.derive(&dirs[l.slot], omega, sign));
                let mut atoms: Vec<Atom> = t
                    .atoms
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, a)| a.clone())
                    .collect();
                let coeff = match atom {
                    Atom::Affine(_) => t.coeff,
                    Atom::Sin(l) => {
                        atoms.push(Atom::Cos(l.clone()));
                        t.coeff
                    }
                    Atom::Cos(l) => {
                        atoms.push(Atom::Sin(l.clone()));
                        -t.coeff
                    }
                };
                atoms.push(dl);
                terms.push(Term { coeff, atoms });
            }
        }
        Self::from_terms(self.dim_w, self.dim_c, self.slots, terms)
    }

    /// `ĥf(g) = d/dε|₀ f(εh·g)` with one direction per slot.
    pub fn right_derive_multi(&self, dirs: &[GroupPoint], omega: &OmegaForm) -> Result<Self> {
        self.derive(dirs, omega, 0.5)
    }

    /// `h̃f(g) = d/dε|₀ f(g·εh)` with one direction per slot.
    pub fn left_derive_multi(&self, dirs: &[GroupPoint], omega: &OmegaForm) -> Result<Self> {
        self.derive(dirs, omega, -0.5)
    }

    /// Smallest `(K, M)` this term list certifies for `|f(g)| ≤ K(1 + ‖g‖)^M`,
    /// where `‖g‖` is the largest slot norm `‖w‖ + ‖c‖`.
    pub fn polynomial_bound(&self) -> (f64, u32) {
        let mut k = 0.0;
        let mut m = 0;
        for t in &self.terms {
            let mut prod = t.coeff.abs();
            let mut deg = 0;
            for a in &t.atoms {
                if let Atom::Affine(l) = a {
                    prod *= l.growth();
                    deg += 1;
                }
            }
            k += prod;
            m = m.max(deg);
        }
        (k, m)
    }

    /// Sign-normalizes atoms, folds constant atoms into coefficients, sorts,
    /// merges like terms and drops zero terms.
    fn canonicalize(&mut self) {
        let mut terms: Vec<Term> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            let mut coeff = t.coeff;
            let mut atoms = Vec::with_capacity(t.atoms.len());
            for a in t.atoms {
                let l = a.form();
                if l.is_constant() {
                    coeff *= match &a {
                        Atom::Affine(l) => l.kappa,
                        Atom::Sin(l) => l.kappa.sin(),
                        Atom::Cos(l) => l.kappa.cos(),
                    };
                    continue;
                }
                let lead = l.lw.iter().chain(&l.lc).find(|&&x| x != 0.0).copied().unwrap_or(0.0);
                if lead < 0.0 {
                    let neg = l.negated();
                    match a {
                        Atom::Affine(_) => {
                            coeff = -coeff;
                            atoms.push(Atom::Affine(neg));
                        }
                        Atom::Sin(_) => {
                            coeff = -coeff;
                            atoms.push(Atom::Sin(neg));
                        }
                        Atom::Cos(_) => atoms.push(Atom::Cos(neg)),
                    }
                } else {
                    atoms.push(a);
                }
            }
            if coeff == 0.0 {
                continue;
            }
            atoms.sort_by(Atom::cmp_key);
            terms.push(Term { coeff, atoms });
        }
        terms.sort_by(|a, b| cmp_atoms(&a.atoms, &b.atoms));
        let mut merged: Vec<Term> = Vec::with_capacity(terms.len());
        for t in terms {
            match merged.last_mut() {
                Some(last) if cmp_atoms(&last.atoms, &t.atoms).is_eq() => last.coeff += t.coeff,
                _ => merged.push(t),
            }
        }
        merged.retain(|t| t.coeff != 0.0);
        self.terms = merged;
    }
}

fn cmp_atoms(a: &[Atom], b: &[Atom]) -> Ordering {
    a.len().cmp(&b.len()).then_with(|| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.cmp_key(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x:?}")).collect();
    format!("[{}]", parts.join(","))
}

impl fmt::Display for AffineForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}(w={},c={}", self.slot, fmt_vec(&self.lw), fmt_vec(&self.lc))?;
        if self.kappa != 0.0 {
            write!(f, ",k={:?}", self.kappa)?;
        }
        write!(f, ")")
    }
}

impl fmt::Display for Atom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Atom::Affine(l) => write!(f, "{l}"),
            Atom::Sin(l) => write!(f, "sin({l})"),
            Atom::Cos(l) => write!(f, "cos({l})"),
        }
    }
}

/// Deterministic text form, e.g. `2.0*L0(w=[1.0,0.0],c=[0.0])*cos(…) + …`.
impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, t) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(f, "{:?}", t.coeff)?;
            for a in &t.atoms {
                write!(f, "*{a}")?;
            }
        }
        Ok(())
    }
}

/// `ĥf` for a single-point function.
pub fn right_derive(f: &TestFunction, h: &GroupPoint, omega: &OmegaForm) -> Result<TestFunction> {
    f.right_derive_multi(std::slice::from_ref(h), omega)
}

/// `h̃f` for a single-point function.
pub fn left_derive(f: &TestFunction, h: &GroupPoint, omega: &OmegaForm) -> Result<TestFunction> {
    f.left_derive_multi(std::slice::from_ref(h), omega)
}

/// `u(g) = f(g⁻¹) = f(−g)`.
pub fn invert_precompose(f: &TestFunction) -> TestFunction {
    let terms = f
        .terms
        .iter()
        .map(|t| Term {
            coeff: t.coeff,
            atoms: t
                .atoms
                .iter()
                .map(|a| {
                    let l = a.form();
                    let flipped = AffineForm {
                        slot: l.slot,
                        lw: l.lw.iter().map(|x| -x).collect(),
                        lc: l.lc.iter().map(|x| -x).collect(),
                        kappa: l.kappa,
                    };
                    match a {
                        Atom::Affine(_) => Atom::Affine(flipped),
                        Atom::Sin(_) => Atom::Sin(flipped),
                        Atom::Cos(_) => Atom::Cos(flipped),
                    }
                })
                .collect(),
        })
        .collect();
    TestFunction::from_terms(f.dim_w, f.dim_c, f.slots, terms).expect("negated forms stay valid")
}

/// `ĥ₁⋯ĥ_m f`: `ĥ_m` is applied first, `ĥ₁` last.
pub fn iterated_right_derive(f: &TestFunction, hs: &[GroupPoint], omega: &OmegaForm) -> Result<TestFunction> {
    check_order(hs.len())?;
    hs.iter().rev().try_fold(f.clone(), |acc, h| right_derive(&acc, h, omega))
}

/// `h̃₁⋯h̃_m f`: `h̃_m` is applied first.
pub fn iterated_left_derive(f: &TestFunction, hs: &[GroupPoint], omega: &OmegaForm) -> Result<TestFunction> {
    check_order(hs.len())?;
    hs.iter().rev().try_fold(f.clone(), |acc, h| left_derive(&acc, h, omega))
}

/// Iterated right derivative of a cylinder function; `dirs[i]` holds one
/// direction per slot for the `i`-th derivative.
pub fn iterated_right_derive_multi(
    f: &TestFunction,
    dirs: &[Vec<GroupPoint>],
    omega: &OmegaForm,
) -> Result<TestFunction> {
    check_order(dirs.len())?;
    dirs.iter().rev().try_fold(f.clone(), |acc, d| acc.right_derive_multi(d, omega))
}

fn check_order(m: usize) -> Result<()> {
    if m > crate::ibp::MAX_ORDER {
        Err(Error::OrderOutOfRange(m))
    } else {
        Ok(())
    }
}

/// A test function of `ξ(t₁), …, ξ(t_k)`; slot `i` reads time `times[i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CylinderFunction {
    pub times: Vec<f64>,
    pub f: TestFunction,
}

impl CylinderFunction {
    pub fn new(times: Vec<f64>, f: TestFunction) -> Result<Self> {
        if times.is_empty() || times.windows(2).any(|w| w[0] >= w[1]) || times[0] < 0.0 {
            return Err(Error::Config(format!("cylinder times {times:?} must be increasing and nonnegative")));
        }
        check_dim("cylinder slots", times.len(), f.slots())?;
        Ok(Self { times, f })
    }

    /// Depends only on `ξ_T`.
    pub fn terminal(grid: &TimeGrid, f: TestFunction) -> Result<Self> {
        Self::new(vec![grid.horizon()], f)
    }

    /// Grid indices of the evaluation times.
    pub fn indices(&self, grid: &TimeGrid) -> Result<Vec<usize>> {
        self.times.iter().map(|&t| grid.index_of(t)).collect()
    }

    pub fn eval_path(&self, xi: &GroupPath, grid: &TimeGrid) -> Result<f64> {
        let points: Vec<GroupPoint> = self.indices(grid)?.into_iter().map(|k| xi.point(k)).collect();
        self.f.eval_points(&points)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::group::{inverse, multiply};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::FRAC_PI_2;

    fn pt(w: &[f64], c: &[f64]) -> GroupPoint {
        GroupPoint::new(w.to_vec(), c.to_vec())
    }

    fn form(lw: &[f64], lc: &[f64], k: f64) -> AffineForm {
        AffineForm::new(lw.to_vec(), lc.to_vec(), k)
    }

    #[test]
    fn evaluation_examples() {
        let proj = TestFunction::linear(vec![0.0, 0.0], vec![1.0]).unwrap();
        assert_eq!(proj.eval(&pt(&[3.0, 4.0], &[-2.5])).unwrap(), -2.5);
        let s = TestFunction::sin(form(&[1.0, 0.0], &[0.0], 0.0)).unwrap();
        assert_eq!(s.eval(&pt(&[FRAC_PI_2, 0.0], &[7.0])).unwrap(), 1.0);
        // 2·L₁·cos(L₂) with L₁ = w₁ + c, L₂ = w₂ at ((1, π), 2): 2·3·(−1).
        let l1 = TestFunction::linear(vec![1.0, 0.0], vec![1.0]).unwrap();
        let c2 = TestFunction::cos(form(&[0.0, 1.0], &[0.0], 0.0)).unwrap();
        let prod = l1.mul(&c2).unwrap().scale(2.0);
        assert!((prod.eval(&pt(&[1.0, std::f64::consts::PI], &[2.0])).unwrap() + 6.0).abs() < 1e-15);
        assert!(prod.eval(&pt(&[1.0], &[2.0])).is_err());
    }

    #[test]
    fn hand_derivatives() {
        let om = OmegaForm::standard(2, 1);
        let lc = TestFunction::linear(vec![0.0, 0.0], vec![2.0]).unwrap();
        let h = pt(&[1.0, -1.0], &[0.5]);
        let g = pt(&[0.3, 0.7], &[1.1]);
        // ⟨λ_c, a⟩ ± ½⟨λ_c, ω(A, w)⟩ with ω(A, w) = A₁w₂ − A₂w₁ = 1.0.
        let r = right_derive(&lc, &h, &om).unwrap();
        let l = left_derive(&lc, &h, &om).unwrap();
        assert!((r.eval(&g).unwrap() - (1.0 + 1.0)).abs() < 1e-15);
        assert!((l.eval(&g).unwrap() - (1.0 - 1.0)).abs() < 1e-15);
        let lw = TestFunction::linear(vec![2.0, 3.0], vec![0.0]).unwrap();
        let d = right_derive(&lw, &h, &om).unwrap();
        assert_eq!(d, TestFunction::constant(2, 1, -1.0));
        let central = pt(&[0.0, 0.0], &[0.5]);
        let dc = right_derive(&lc, &central, &om).unwrap();
        assert_eq!(dc, TestFunction::constant(2, 1, 1.0));
        assert!(right_derive(&dc, &h, &om).unwrap().is_zero());
    }

    #[test]
    fn iterated_order() {
        let om = OmegaForm::standard(2, 1);
        let f = TestFunction::linear(vec![0.0, 0.0], vec![1.5]).unwrap();
        let h1 = pt(&[1.0, 2.0], &[0.3]);
        let h2 = pt(&[-0.5, 1.0], &[0.7]);
        // ½⟨λ_c, ω(A₂, A₁)⟩ = ½·1.5·(−0.5·2 − 1·1) = −1.5.
        let d = iterated_right_derive(&f, &[h1.clone(), h2.clone()], &om).unwrap();
        assert_eq!(d, TestFunction::constant(2, 1, -1.5));
        assert!(iterated_right_derive(&f, &[h1.clone(), h2.clone(), h1.clone()], &om).unwrap().is_zero());
        let k = TestFunction::constant(2, 1, 4.0);
        assert!(iterated_right_derive(&k, &[h1], &om).unwrap().is_zero());
        assert_eq!(iterated_right_derive(&f, &[], &om).unwrap(), f);
    }

    #[test]
    fn abelian_left_equals_right() {
        let om = OmegaForm::zero(2, 1);
        let f = random_function(2, 1, 5);
        let h = pt(&[0.4, -1.0], &[0.9]);
        assert_eq!(right_derive(&f, &h, &om).unwrap(), left_derive(&f, &h, &om).unwrap());
    }

    #[test]
    fn inversion_examples() {
        let f = random_function(2, 1, 6);
        assert_eq!(invert_precompose(&invert_precompose(&f)), f);
        let lw = TestFunction::linear(vec![1.0, 2.0], vec![0.0]).unwrap();
        assert_eq!(invert_precompose(&lw), lw.scale(-1.0));
        let c = TestFunction::cos(form(&[1.0, -2.0], &[0.5], 0.0)).unwrap();
        assert_eq!(invert_precompose(&c), c);
    }

    #[test]
    fn canonical_form_merges_and_folds() {
        let a = TestFunction::linear(vec![1.0, 0.0], vec![0.0]).unwrap();
        let twice = a.add(&a).unwrap();
        assert_eq!(twice, a.scale(2.0));
        assert!(a.add(&a.scale(-1.0)).unwrap().is_zero());
        let s = TestFunction::sin(form(&[0.0, 0.0], &[0.0], FRAC_PI_2)).unwrap();
        assert_eq!(s, TestFunction::constant(2, 1, 1.0));
        let neg = TestFunction::sin(form(&[-1.0, 0.0], &[0.0], 0.0)).unwrap();
        let pos = TestFunction::sin(form(&[1.0, 0.0], &[0.0], 0.0)).unwrap();
        assert_eq!(neg, pos.scale(-1.0));
    }

    #[test]
    fn display_is_deterministic() {
        let f = TestFunction::linear(vec![1.0, 0.0], vec![0.5])
            .unwrap()
            .mul(&TestFunction::cos(form(&[0.0, 2.0], &[0.0], 0.25)).unwrap())
            .unwrap()
            .add(&TestFunction::constant(2, 1, 3.0))
            .unwrap();
        let text = f.to_string();
        assert_eq!(text, "3.0 + 1.0*L0(w=[1.0,0.0],c=[0.5])*cos(L0(w=[0.0,2.0],c=[0.0],k=0.25))");
        assert_eq!(text, f.clone().to_string());
        assert!(text.contains("L0(w="));
        assert_eq!(TestFunction::zero(2, 1).to_string(), "0");
    }

    #[test]
    fn bound_examples() {
        let f = TestFunction::linear(vec![3.0, 4.0], vec![0.0])
            .unwrap()
            .mul(&TestFunction::cos(form(&[1.0, 0.0], &[1.0], 0.0)).unwrap())
            .unwrap()
            .scale(2.0);
        assert_eq!(f.polynomial_bound(), (10.0, 1));
        assert_eq!(TestFunction::constant(2, 1, -3.0).polynomial_bound(), (3.0, 0));
    }

    #[test]
    fn cylinder_validation_and_eval() {
        let g = TimeGrid::new(1.0, 4).unwrap();
        let f = TestFunction::linear(vec![1.0, 0.0], vec![0.0]).unwrap();
        assert!(CylinderFunction::new(vec![0.5, 0.25], f.clone()).is_err());
        assert!(CylinderFunction::new(vec![0.25, 0.5], f.clone()).is_err());
        let cyl = CylinderFunction::terminal(&g, f).unwrap();
        assert_eq!(cyl.indices(&g).unwrap(), vec![4]);
        let off = CylinderFunction::new(vec![0.3], TestFunction::zero(2, 1)).unwrap();
        assert!(off.indices(&g).is_err());
    }

    pub(crate) fn random_form(rng: &mut ChaCha8Rng, d: usize, n: usize, slots: usize) -> AffineForm {
        let mut v = |k: usize| (0..k).map(|_| rng.random_range(-1.5..1.5)).collect::<Vec<f64>>();
        let lw = v(d);
        let lc = v(n);
        let kappa = v(1)[0];
        let slot = rng.random_range(0..slots);
        AffineForm::new(lw, lc, kappa).at_slot(slot)
    }

    pub(crate) fn random_function_slots(d: usize, n: usize, slots: usize, seed: u64) -> TestFunction {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut terms = Vec::new();
        for _ in 0..rng.random_range(1..4) {
            let mut atoms = Vec::new();
            for _ in 0..rng.random_range(0..3) {
                let l = random_form(&mut rng, d, n, slots);
                atoms.push(match rng.random_range(0..3) {
                    0 => Atom::Affine(l),
                    1 => Atom::Sin(l),
                    _ => Atom::Cos(l),
                });
            }
            terms.push(Term {
                coeff: rng.random_range(-2.0..2.0),
                atoms,
            });
        }
        TestFunction::from_terms(d, n, slots, terms).unwrap()
    }

    fn random_function(d: usize, n: usize, seed: u64) -> TestFunction {
        random_function_slots(d, n, 1, seed)
    }

    fn random_point(rng: &mut ChaCha8Rng, d: usize, n: usize, scale: f64) -> GroupPoint {
        GroupPoint::new(
            (0..d).map(|_| scale * rng.random_range(-1.0..1.0)).collect(),
            (0..n).map(|_| scale * rng.random_range(-1.0..1.0)).collect(),
        )
    }

    #[test]
    fn symbolic_matches_finite_difference() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for case in 0..20 {
            let om = OmegaForm::random(3, 2, case, 1.0);
            let f = random_function(3, 2, 1000 + case);
            let h = random_point(&mut rng, 3, 2, 1.0);
            let g = random_point(&mut rng, 3, 2, 1.0);
            for (sym, left) in [(right_derive(&f, &h, &om).unwrap(), false), (left_derive(&f, &h, &om).unwrap(), true)] {
                let at = |e: f64| {
                    let eh = h.scaled(e);
                    let moved = if left { multiply(&g, &eh, &om) } else { multiply(&eh, &g, &om) };
                    f.eval(&moved.unwrap()).unwrap()
                };
                // Richardson combination of δ and 2δ cancels the δ² term.
                let dl = 1e-4;
                let cd = |d: f64| (at(d) - at(-d)) / (2.0 * d);
                let fd = (4.0 * cd(dl) - cd(2.0 * dl)) / 3.0;
                let exact = sym.eval(&g).unwrap();
                assert!((fd - exact).abs() <= 1e-6 * exact.abs().max(1.0), "case {case}: {fd} vs {exact}");
            }
        }
    }

    #[test]
    fn left_right_inversion_identity() {
        // h̃f(g) = −(ĥu)(g⁻¹) with u = f∘inverse.
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        for case in 0..20 {
            let om = OmegaForm::random(2, 2, case + 50, 1.0);
            let f = random_function(2, 2, 2000 + case);
            let h = random_point(&mut rng, 2, 2, 1.0);
            let g = random_point(&mut rng, 2, 2, 2.0);
            let lhs = left_derive(&f, &h, &om).unwrap().eval(&g).unwrap();
            let u = invert_precompose(&f);
            let rhs = -right_derive(&u, &h, &om).unwrap().eval(&inverse(&g)).unwrap();
            assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0), "{lhs} vs {rhs}");
        }
    }

    #[test]
    fn bound_certificate_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let fs: Vec<TestFunction> = (0..10).map(|s| random_function(2, 1, 3000 + s)).collect();
        for i in 0..10_000 {
            let f = &fs[i % fs.len()];
            let scale = 10f64.powf(rng.random_range(-1.0..3.0));
            let g = random_point(&mut rng, 2, 1, scale);
            let (k, m) = f.polynomial_bound();
            assert!(f.eval(&g).unwrap().abs() <= k * (1.0 + g.norm()).powi(m as i32) * (1.0 + 1e-12));
        }
    }

    proptest! {
        #[test]
        fn derivatives_stay_in_family(seed in 0u64..500, hs in proptest::collection::vec(-2.0f64..2.0, 3)) {
            let om = OmegaForm::standard(2, 1);
            let f = random_function(2, 1, seed);
            let h = pt(&hs[..2], &hs[2..]);
            for d in [right_derive(&f, &h, &om).unwrap(), left_derive(&f, &h, &om).unwrap()] {
                let text = serde_json::to_string(&d).unwrap();
                let back: TestFunction = serde_json::from_str(&text).unwrap();
                prop_assert_eq!(back, d);
            }
        }

        #[test]
        fn inversion_is_pointwise(seed in 0u64..500, w in proptest::collection::vec(-3.0f64..3.0, 2), c in -3.0f64..3.0) {
            let f = random_function(2, 1, seed);
            let g = pt(&w, &[c]);
            let a = invert_precompose(&f).eval(&g).unwrap();
            let b = f.eval(&inverse(&g)).unwrap();
            prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
        }
    }
}
