//! Finite-dimensional Heisenberg-like groups `G = W × C`.
//!
//! The group law is `(w₁,c₁)·(w₂,c₂) = (w₁+w₂, c₁+c₂+½ω(w₁,w₂))` for a skew
//! bilinear map `ω: W×W → C`, stored as `N` skew-symmetric `d×d` matrices.
//! The same `(w, c)` pair doubles as a Lie-algebra element with bracket
//! `[(X₁,V₁),(X₂,V₂)] = (0, ω(X₁,X₂))`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Largest tolerated symmetric part of an input matrix before it is rejected.
pub const SKEW_TOLERANCE: f64 = 1e-12;

/// Skew bilinear map `ω: R^d × R^d → R^N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "OmegaMatrices", into = "OmegaMatrices")]
pub struct OmegaForm {
    dim_w: usize,
    dim_c: usize,
    /// `dim_c` row-major `dim_w × dim_w` blocks.
    mats: Vec<f64>,
}

/// Serialized form of [`OmegaForm`]: one nested row list per center coordinate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OmegaMatrices {
    pub matrices: Vec<Vec<Vec<f64>>>,
}

impl TryFrom<OmegaMatrices> for OmegaForm {
    type Error = Error;

    fn try_from(value: OmegaMatrices) -> Result<Self> {
        OmegaForm::from_matrices(&value.matrices)
    }
}

impl From<OmegaForm> for OmegaMatrices {
    fn from(omega: OmegaForm) -> Self {
        let d = omega.dim_w;
        let matrices = (0..omega.dim_c)
            .map(|k| {
                (0..d)
                    .map(|i| omega.block(k)[i * d..(i + 1) * d].to_vec())
                    .collect()
            })
            .collect();
        OmegaMatrices { matrices }
    }
}

impl OmegaForm {
    /// Builds `ω` from `N` nested `d×d` matrices.
    ///
    /// Each matrix is replaced by its skew projection `(M − Mᵀ)/2`; inputs whose
    /// symmetric part exceeds [`SKEW_TOLERANCE`] are rejected.
    pub fn from_matrices(matrices: &[Vec<Vec<f64>>]) -> Result<Self> {
        let dim_c = matrices.len();
        if dim_c == 0 {
            return Err(Error::Config("omega needs at least one matrix".into()));
        }
        let dim_w = matrices[0].len();
        if dim_w == 0 {
            return Err(Error::Config("omega matrices must be non-empty".into()));
        }
        let mut flat = Vec::with_capacity(dim_c * dim_w * dim_w);
        for m in matrices {
            check_dim("omega matrix rows", dim_w, m.len())?;
            for row in m {
                check_dim("omega matrix columns", dim_w, row.len())?;
                flat.extend_from_slice(row);
            }
        }
        Self::from_flat(dim_w, dim_c, flat)
    }

    /// Builds `ω` from `N` row-major `d×d` blocks laid end to end.
    pub fn from_flat(dim_w: usize, dim_c: usize, mut mats: Vec<f64>) -> Result<Self> {
        if dim_w == 0 || dim_c == 0 {
            return Err(Error::Config("omega dimensions must be positive".into()));
        }
        check_dim("omega storage", dim_c * dim_w * dim_w, mats.len())?;
        if mats.iter().any(|x| !x.is_finite()) {
            return Err(Error::Config("omega entries must be finite".into()));
        }
        let d = dim_w;
        for k in 0..dim_c {
            let m = &mut mats[k * d * d..(k + 1) * d * d];
            let scale = m.iter().fold(1.0f64, |acc, x| acc.max(x.abs()));
            for i in 0..d {
                for j in i..d {
                    if i == j && m[i * d + i].abs() <= SKEW_TOLERANCE * scale {
                        m[i * d + i] = 0.0;
                        continue;
                    }
                    let sym = 0.5 * (m[i * d + j] + m[j * d + i]);
                    if sym.abs() > SKEW_TOLERANCE * scale {
                        return Err(Error::Config(format!(
                            "omega matrix {k} is not skew-symmetric: symmetric part {sym:e} at ({i},{j})"
                        )));
                    }
                    let skew = 0.5 * (m[i * d + j] - m[j * d + i]);
                    m[i * d + j] = skew;
                    m[j * d + i] = -skew;
                }
            }
        }
        Ok(Self { dim_w, dim_c, mats })
    }

    /// The identically zero form; the group is then abelian.
    pub fn zero(dim_w: usize, dim_c: usize) -> Self {
        Self {
            dim_w,
            dim_c,
            mats: vec![0.0; dim_c * dim_w * dim_w],
        }
    }

    /// Block-symplectic form. Center coordinate `k` pairs the W-coordinates
    /// `(k+2p, k+2p+1) mod d`, so `k = 0` with `d = 2` is the classical
    /// Heisenberg group with `Ω = [[0,1],[−1,0]]`.
    pub fn standard(dim_w: usize, dim_c: usize) -> Self {
        let d = dim_w;
        let mut mats = vec![0.0; dim_c * d * d];
        for k in 0..dim_c {
            let m = &mut mats[k * d * d..(k + 1) * d * d];
            for p in 0..d / 2 {
                let i = (k + 2 * p) % d;
                let j = (k + 2 * p + 1) % d;
                m[i * d + j] += 1.0;
                m[j * d + i] -= 1.0;
            }
        }
        Self { dim_w, dim_c, mats }
    }

    /// I.i.d. Gaussian entries, skew-projected, multiplied by `scale`.
    pub fn random(dim_w: usize, dim_c: usize, seed: u64, scale: f64) -> Self {
        let d = dim_w;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut mats = vec![0.0; dim_c * d * d];
        for k in 0..dim_c {
            let m = &mut mats[k * d * d..(k + 1) * d * d];
            for x in m.iter_mut() {
                *x = StandardNormal.sample(&mut rng);
            }
            for i in 0..d {
                m[i * d + i] = 0.0;
                for j in i + 1..d {
                    let skew = 0.5 * scale * (m[i * d + j] - m[j * d + i]);
                    m[i * d + j] = skew;
                    m[j * d + i] = -skew;
                }
            }
        }
        Self { dim_w, dim_c, mats }
    }

    pub fn dim_w(&self) -> usize {
        self.dim_w
    }

    pub fn dim_c(&self) -> usize {
        self.dim_c
    }

    /// Row-major matrix `Ωᵏ`.
    pub fn block(&self, k: usize) -> &[f64] {
        let dd = self.dim_w * self.dim_w;
        &self.mats[k * dd..(k + 1) * dd]
    }

    pub fn is_zero(&self) -> bool {
        self.mats.iter().all(|&x| x == 0.0)
    }

    /// `λ·ω`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            dim_w: self.dim_w,
            dim_c: self.dim_c,
            mats: self.mats.iter().map(|x| factor * x).collect(),
        }
    }

    /// `out[k] = xᵀ Ωᵏ y` without dimension checks. Hot-loop entry point.
    ///
    /// Summed over the upper triangle as `Ωᵏ_ij (x_i y_j − x_j y_i)`, so
    /// `ω(x, x) = 0` and `ω(x, y) = −ω(y, x)` hold exactly in floating point.
    #[inline]
    pub fn apply_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        let d = self.dim_w;
        for (k, o) in out.iter_mut().enumerate().take(self.dim_c) {
            let m = &self.mats[k * d * d..(k + 1) * d * d];
            let mut acc = 0.0;
            for i in 0..d {
                let row = &m[i * d..(i + 1) * d];
                for j in i + 1..d {
                    acc += row[j] * (x[i] * y[j] - x[j] * y[i]);
                }
            }
            *o = acc;
        }
    }

    /// `ω(x, y)`, checked.
    pub fn apply(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        check_dim("omega left argument", self.dim_w, x.len())?;
        check_dim("omega right argument", self.dim_w, y.len())?;
        let mut out = vec![0.0; self.dim_c];
        self.apply_into(x, y, &mut out);
        Ok(out)
    }

    /// `Σₖ λₖ (Ωᵏ)ᵀ x`, the W-covector of `w ↦ ⟨λ, ω(x, w)⟩`.
    pub fn contract_left(&self, lambda: &[f64], x: &[f64]) -> Vec<f64> {
        let d = self.dim_w;
        let mut out = vec![0.0; d];
        for (k, &l) in lambda.iter().enumerate().take(self.dim_c) {
            if l == 0.0 {
                continue;
            }
            let m = self.block(k);
            for i in 0..d {
                if x[i] == 0.0 {
                    continue;
                }
                for j in 0..d {
                    out[j] += l * x[i] * m[i * d + j];
                }
            }
        }
        out
    }

    /// Diagnostic estimate of `‖ω‖₀` as the operator norm of
    /// `x ↦ (Ω¹x, …, Ωᴺx)`, by power iteration on `Σₖ (Ωᵏ)ᵀΩᵏ`.
    pub fn operator_norm_estimate(&self) -> f64 {
        let d = self.dim_w;
        if self.is_zero() {
            return 0.0;
        }
        let mut gram = vec![0.0; d * d];
        for k in 0..self.dim_c {
            let m = self.block(k);
            for i in 0..d {
                for j in 0..d {
                    let mut s = 0.0;
                    for r in 0..d {
                        s += m[r * d + i] * m[r * d + j];
                    }
                    gram[i * d + j] += s;
                }
            }
        }
        // Irrational-ish start vector avoids landing in an invariant subspace.
        let mut v: Vec<f64> = (0..d).map(|i| 1.0 + 0.618_033_988_7 * i as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..500 {
            let mut next = vec![0.0; d];
            for i in 0..d {
                for j in 0..d {
                    next[i] += gram[i * d + j] * v[j];
                }
            }
            let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            next.iter_mut().for_each(|x| *x /= norm);
            let converged = (norm - lambda).abs() <= 1e-14 * norm;
            lambda = norm;
            v = next;
            if converged {
                break;
            }
        }
        lambda.sqrt()
    }
}

/// An element `(w, c)` of `G`; also used for Lie-algebra elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupPoint {
    pub w: Vec<f64>,
    pub c: Vec<f64>,
}

impl GroupPoint {
    pub fn new(w: Vec<f64>, c: Vec<f64>) -> Self {
        Self { w, c }
    }

    pub fn identity(dim_w: usize, dim_c: usize) -> Self {
        Self {
            w: vec![0.0; dim_w],
            c: vec![0.0; dim_c],
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            w: self.w.iter().map(|x| factor * x).collect(),
            c: self.c.iter().map(|x| factor * x).collect(),
        }
    }

    /// `‖w‖ + ‖c‖` with Euclidean component norms.
    pub fn norm(&self) -> f64 {
        euclid(&self.w) + euclid(&self.c)
    }

    /// Squared Cameron–Martin norm `|w|² + |c|²`.
    pub fn norm_sq(&self) -> f64 {
        self.w.iter().chain(&self.c).map(|x| x * x).sum()
    }

    fn check(&self, omega: &OmegaForm, context: &'static str) -> Result<()> {
        check_dim(context, omega.dim_w, self.w.len())?;
        check_dim(context, omega.dim_c, self.c.len())
    }
}

fn euclid(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// `g₁·g₂ = (w₁+w₂, c₁+c₂+½ω(w₁,w₂))`.
pub fn multiply(g1: &GroupPoint, g2: &GroupPoint, omega: &OmegaForm) -> Result<GroupPoint> {
    g1.check(omega, "multiply left factor")?;
    g2.check(omega, "multiply right factor")?;
    let mut c = omega.apply(&g1.w, &g2.w)?;
    for (k, ck) in c.iter_mut().enumerate() {
        *ck = g1.c[k] + g2.c[k] + 0.5 * *ck;
    }
    let w = g1.w.iter().zip(&g2.w).map(|(a, b)| a + b).collect();
    Ok(GroupPoint { w, c })
}

/// `g⁻¹ = −g`.
pub fn inverse(g: &GroupPoint) -> GroupPoint {
    g.scaled(-1.0)
}

/// Lie bracket `(0, ω(X₁, X₂))`.
pub fn bracket(h1: &GroupPoint, h2: &GroupPoint, omega: &OmegaForm) -> Result<GroupPoint> {
    h1.check(omega, "bracket left argument")?;
    h2.check(omega, "bracket right argument")?;
    Ok(GroupPoint {
        w: vec![0.0; omega.dim_w],
        c: omega.apply(&h1.w, &h2.w)?,
    })
}

/// `ω(x, y)`.
pub fn omega_apply(x: &[f64], y: &[f64], omega: &OmegaForm) -> Result<Vec<f64>> {
    omega.apply(x, y)
}

/// Tangent of `ε ↦ εh·g` at `ε = 0`: `(A, a + ½ω(A, w))`.
pub fn right_vf_coeff(h: &GroupPoint, g: &GroupPoint, omega: &OmegaForm) -> Result<GroupPoint> {
    vf_coeff(h, g, omega, 0.5)
}

/// Tangent of `ε ↦ g·εh` at `ε = 0`: `(A, a − ½ω(A, w))`.
pub fn left_vf_coeff(h: &GroupPoint, g: &GroupPoint, omega: &OmegaForm) -> Result<GroupPoint> {
    vf_coeff(h, g, omega, -0.5)
}

fn vf_coeff(h: &GroupPoint, g: &GroupPoint, omega: &OmegaForm, sign: f64) -> Result<GroupPoint> {
    h.check(omega, "vector field direction")?;
    g.check(omega, "vector field base point")?;
    let mut c = omega.apply(&h.w, &g.w)?;
    for (k, ck) in c.iter_mut().enumerate() {
        *ck = h.c[k] + sign * *ck;
    }
    Ok(GroupPoint { w: h.w.clone(), c })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(w: &[f64], c: &[f64]) -> GroupPoint {
        GroupPoint::new(w.to_vec(), c.to_vec())
    }

    #[test]
    fn multiply_hand_example() {
        let om = OmegaForm::standard(2, 1);
        let g = multiply(&pt(&[1.0, 0.0], &[2.0]), &pt(&[0.0, 1.0], &[3.0]), &om).unwrap();
        assert_eq!(g, pt(&[1.0, 1.0], &[5.5]));
    }

    #[test]
    fn identity_and_inverse() {
        let om = OmegaForm::random(3, 2, 5, 1.3);
        let g = pt(&[0.3, -1.2, 2.0], &[0.7, -0.1]);
        let e = GroupPoint::identity(3, 2);
        assert_eq!(multiply(&e, &g, &om).unwrap(), g);
        assert_eq!(multiply(&g, &inverse(&g), &om).unwrap(), e);
        assert_eq!(inverse(&pt(&[1.0, 0.0], &[2.0])), pt(&[-1.0, 0.0], &[-2.0]));
        assert_eq!(inverse(&e), e.scaled(-1.0));
    }

    #[test]
    fn bracket_examples() {
        let om = OmegaForm::standard(2, 1);
        let b = bracket(&pt(&[1.0, 0.0], &[0.0]), &pt(&[0.0, 1.0], &[0.0]), &om).unwrap();
        assert_eq!(b, pt(&[0.0, 0.0], &[1.0]));
        let h = pt(&[0.4, -2.0], &[1.0]);
        assert_eq!(bracket(&h, &h, &om).unwrap(), pt(&[0.0, 0.0], &[0.0]));
        let bb = bracket(&b, &h, &om).unwrap();
        assert_eq!(bb, pt(&[0.0, 0.0], &[0.0]));
    }

    #[test]
    fn omega_apply_hand_example() {
        let om = OmegaForm::standard(2, 1);
        assert_eq!(omega_apply(&[1.0, 2.0], &[3.0, 4.0], &om).unwrap(), vec![-2.0]);
    }

    #[test]
    fn vector_field_coefficients() {
        let om = OmegaForm::standard(2, 1);
        let h = pt(&[1.0, 0.0], &[0.0]);
        let g = pt(&[0.0, 2.0], &[5.0]);
        assert_eq!(right_vf_coeff(&h, &g, &om).unwrap(), pt(&[1.0, 0.0], &[1.0]));
        assert_eq!(left_vf_coeff(&h, &g, &om).unwrap(), pt(&[1.0, 0.0], &[-1.0]));
        let e = GroupPoint::identity(2, 1);
        let h2 = pt(&[0.3, 0.9], &[-0.2]);
        assert_eq!(right_vf_coeff(&h2, &e, &om).unwrap(), h2);
        assert_eq!(left_vf_coeff(&h2, &e, &om).unwrap(), h2);
        let central = pt(&[0.0, 0.0], &[4.0]);
        assert_eq!(right_vf_coeff(&central, &g, &om).unwrap(), central);
    }

    #[test]
    fn dimension_errors() {
        let om = OmegaForm::standard(2, 1);
        let bad = pt(&[1.0, 0.0, 0.0], &[0.0]);
        let ok = pt(&[1.0, 0.0], &[0.0]);
        assert!(matches!(
            multiply(&bad, &ok, &om),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(bracket(&ok, &pt(&[1.0, 0.0], &[0.0, 1.0]), &om).is_err());
        assert!(om.apply(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn rejects_non_skew_input() {
        let err = OmegaForm::from_matrices(&[vec![vec![0.0, 1.0], vec![1.0, 0.0]]]);
        assert!(matches!(err, Err(Error::Config(_))));
        let tiny = OmegaForm::from_matrices(&[vec![vec![1e-14, 1.0], vec![-1.0, 0.0]]]).unwrap();
        assert_eq!(tiny.block(0), &[0.0, 1.0, -1.0, 0.0]);
    }

    #[test]
    fn serde_roundtrip_matches_nested_rows() {
        let om = OmegaForm::random(3, 2, 11, 0.5);
        let text = serde_json::to_string(&om).unwrap();
        assert!(text.starts_with("{\"matrices\":[[["));
        let back: OmegaForm = serde_json::from_str(&text).unwrap();
        assert_eq!(back, om);
    }

    #[test]
    fn operator_norm_of_standard_form() {
        assert!((OmegaForm::standard(2, 1).operator_norm_estimate() - 1.0).abs() < 1e-12);
        // Two centers with Ω¹ = −Ω⁰ stack to √2.
        let n = OmegaForm::standard(2, 2).operator_norm_estimate();
        assert!((n - 2f64.sqrt()).abs() < 1e-12);
        assert_eq!(OmegaForm::zero(3, 1).operator_norm_estimate(), 0.0);
    }

    fn vec_strategy(n: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-10.0f64..10.0, n)
    }

    proptest! {
        #[test]
        fn associativity(seed in 0u64..1000, a in vec_strategy(5), b in vec_strategy(5), c in vec_strategy(5)) {
            let om = OmegaForm::random(3, 2, seed, 1.0);
            let g = |v: &Vec<f64>| pt(&v[..3], &v[3..]);
            let (g1, g2, g3) = (g(&a), g(&b), g(&c));
            let left = multiply(&multiply(&g1, &g2, &om).unwrap(), &g3, &om).unwrap();
            let right = multiply(&g1, &multiply(&g2, &g3, &om).unwrap(), &om).unwrap();
            let scale = 1.0 + left.norm();
            for (x, y) in left.w.iter().chain(&left.c).zip(right.w.iter().chain(&right.c)) {
                prop_assert!((x - y).abs() <= 1e-12 * scale);
            }
        }

        #[test]
        fn omega_skew_and_bilinear(seed in 0u64..1000, x in vec_strategy(4), y in vec_strategy(4), z in vec_strategy(4), s in -3.0f64..3.0) {
            let om = OmegaForm::random(4, 2, seed, 1.0);
            let xy = om.apply(&x, &y).unwrap();
            let yx = om.apply(&y, &x).unwrap();
            let xx = om.apply(&x, &x).unwrap();
            let comb: Vec<f64> = x.iter().zip(&z).map(|(a, b)| s * a + b).collect();
            let lin = om.apply(&comb, &y).unwrap();
            let zy = om.apply(&z, &y).unwrap();
            for k in 0..2 {
                prop_assert!((xy[k] + yx[k]).abs() <= 1e-9);
                prop_assert!(xx[k].abs() <= 1e-9);
                prop_assert!((lin[k] - (s * xy[k] + zy[k])).abs() <= 1e-9 * (1.0 + lin[k].abs()));
            }
        }

        #[test]
        fn inverse_cancels(seed in 0u64..1000, a in vec_strategy(4)) {
            let om = OmegaForm::random(3, 1, seed, 2.0);
            let g = pt(&a[..3], &a[3..]);
            let e = multiply(&g, &inverse(&g), &om).unwrap();
            prop_assert!(e.norm() == 0.0);
        }

        #[test]
        fn bracket_is_central(seed in 0u64..1000, a in vec_strategy(4), b in vec_strategy(4), c in vec_strategy(4)) {
            let om = OmegaForm::random(3, 1, seed, 1.0);
            let (h1, h2, h3) = (pt(&a[..3], &a[3..]), pt(&b[..3], &b[3..]), pt(&c[..3], &c[3..]));
            let b12 = bracket(&h1, &h2, &om).unwrap();
            prop_assert!(b12.w.iter().all(|&x| x == 0.0));
            prop_assert!(bracket(&b12, &h3, &om).unwrap().norm() == 0.0);
        }

        #[test]
        fn right_minus_left_is_omega(seed in 0u64..1000, a in vec_strategy(5), b in vec_strategy(5)) {
            let om = OmegaForm::random(3, 2, seed, 1.0);
            let (h, g) = (pt(&a[..3], &a[3..]), pt(&b[..3], &b[3..]));
            let r = right_vf_coeff(&h, &g, &om).unwrap();
            let l = left_vf_coeff(&h, &g, &om).unwrap();
            let w = om.apply(&h.w, &g.w).unwrap();
            prop_assert_eq!(&r.w, &l.w);
            for k in 0..2 {
                prop_assert!((r.c[k] - l.c[k] - w[k]).abs() <= 1e-10 * (1.0 + w[k].abs()));
            }
        }
    }
}
