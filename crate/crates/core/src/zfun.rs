//! The `Z` functionals of orders 1–4 that make up the integration-by-parts
//! weights, their noise-translated versions, and the cubic `β` expansion of a
//! translated first-order `Z`.
//!
//! With `v_i(t) = ȧ_i(t) − ω(B_t, Ȧ_i(t))` and `p_ji(t) = ω(A_j(t), Ȧ_i(t))`:
//!
//! ```text
//! Z_i    = ∫⟨Ȧ_i, dB⟩ + ⟨v_i, dB⁰⟩
//! Z_ij   = ∫⟨p_ji, dB⁰⟩ − ∫(⟨Ȧ_i, Ȧ_j⟩ + ⟨v_i, v_j⟩) dt
//! Z_ijk  = −∫(⟨v_i, p_kj⟩ + ⟨v_j, p_ki⟩ + ⟨v_k, p_ji⟩) dt
//! Z_ijkl = −∫(⟨p_li, p_kj⟩ + ⟨p_ki, p_lj⟩ + ⟨p_ji, p_lk⟩) dt
//! ```
//!
//! Each order is the `ε`-derivative at zero of the previous one evaluated on
//! the noise translated by `εh_next`. The published third-order display uses
//! `ȧ + ω(B, Ȧ)` in place of `v`; that variant is kept as
//! [`Z3Convention::Printed`] so the derivative check can arbitrate between
//! the two (see [`arbitrate_z3`]).

use serde::{Deserialize, Serialize};

use crate::density::j_h;
use crate::error::{Error, Result};
use crate::group::OmegaForm;
use crate::numeric::{central_difference_curve, FdCurve};
use crate::path::{shift_noise, CMPath, WienerPath};

/// Which sign to use inside the third-order functional.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Z3Convention {
    /// `ȧ + ω(B, Ȧ)` as displayed in the source formula.
    Printed,
    /// `ȧ − ω(B, Ȧ)`, the form satisfying the derivative identity.
    #[default]
    Corrected,
}

/// One evaluated functional `Z_γ` for an increasing index block `γ`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZValue {
    pub order: usize,
    pub indices: Vec<usize>,
    pub value: f64,
}

/// `Z_i(shifted by εh_j) = Z_i + εZ_ij + ε²β₂ + ε³β₃`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BetaCoeffs {
    pub beta2: f64,
    pub beta3: f64,
}

/// Largest roster an engine accepts (order cap plus one extra direction).
pub const MAX_ROSTER: usize = crate::ibp::MAX_ORDER + 1;

/// Noise-independent data for a roster of Cameron–Martin paths, shared
/// read-only across sample paths.
#[derive(Debug, Clone)]
pub struct ZEngine {
    roster: Vec<CMPath>,
    omega: OmegaForm,
    steps: usize,
    dt: f64,
    /// `pairs[j * m + i]` holds `p_ji` on every interval, `dim_c` values each.
    pairs: Vec<Vec<f64>>,
    /// `Σ_k ⟨Ȧ_i, Ȧ_j⟩`, row-major `m × m`.
    rate_dots: Vec<f64>,
    /// Deterministic fourth-order values keyed by block bitmask.
    fourth: Vec<f64>,
}

impl ZEngine {
    pub fn new<'a, I>(roster: I, omega: &OmegaForm) -> Result<Self>
    where
        I: IntoIterator<Item = &'a CMPath>,
    {
        let roster: Vec<CMPath> = roster.into_iter().cloned().collect();
        if roster.is_empty() || roster.len() > MAX_ROSTER {
            return Err(Error::OrderOutOfRange(roster.len()));
        }
        let grid = *roster[0].grid();
        for h in &roster {
            if *h.grid() != grid {
                return Err(Error::GridMismatch("Z roster paths live on different grids".into()));
            }
            h.check_omega(omega)?;
        }
        let m = roster.len();
        let (steps, nc, d) = (grid.steps(), omega.dim_c(), omega.dim_w());
        let mut pairs = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                let mut p = vec![0.0; steps * nc];
                for k in 0..steps {
                    omega.apply_into(
                        roster[j].w_values().at(k),
                        roster[i].w_rate().at(k),
                        &mut p[k * nc..(k + 1) * nc],
                    );
                }
                pairs.push(p);
            }
        }
        let mut rate_dots = vec![0.0; m * m];
        for i in 0..m {
            for j in 0..m {
                let (ri, rj) = (roster[i].w_rate(), roster[j].w_rate());
                rate_dots[i * m + j] = (0..steps)
                    .map(|k| (0..d).map(|x| ri.at(k)[x] * rj.at(k)[x]).sum::<f64>())
                    .sum();
            }
        }
        let mut engine = Self {
            roster,
            omega: omega.clone(),
            steps,
            dt: grid.dt(),
            pairs,
            rate_dots,
            fourth: vec![f64::NAN; 1 << m],
        };
        for mask in 0u32..(1 << m) {
            if mask.count_ones() == 4 {
                let idx = mask_indices(mask);
                engine.fourth[mask as usize] = engine.z4_value(idx[0], idx[1], idx[2], idx[3]);
            }
        }
        Ok(engine)
    }

    pub fn roster_len(&self) -> usize {
        self.roster.len()
    }

    fn pair(&self, j: usize, i: usize) -> &[f64] {
        &self.pairs[j * self.roster.len() + i]
    }

    fn z4_value(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        let s = dot(self.pair(l, i), self.pair(k, j))
            + dot(self.pair(k, i), self.pair(l, j))
            + dot(self.pair(j, i), self.pair(l, k));
        -s * self.dt
    }

    /// Per-path state for evaluating any `Z_γ` on `path`.
    pub fn sample(&self, path: &WienerPath) -> Result<ZSample<'_>> {
        for h in &self.roster {
            h.check_against(path)?;
        }
        let (d, nc, n) = (self.omega.dim_w(), self.omega.dim_c(), self.steps);
        let mut db = vec![0.0; n * d];
        let mut db0 = vec![0.0; n * nc];
        for k in 0..n {
            for i in 0..d {
                db[k * d + i] = path.b().at(k + 1)[i] - path.b().at(k)[i];
            }
            for i in 0..nc {
                db0[k * nc + i] = path.b0().at(k + 1)[i] - path.b0().at(k)[i];
            }
        }
        let mut tmp = vec![0.0; nc];
        let v = self
            .roster
            .iter()
            .map(|h| {
                let mut v = vec![0.0; n * nc];
                for k in 0..n {
                    self.omega.apply_into(path.b().at(k), h.w_rate().at(k), &mut tmp);
                    for i in 0..nc {
                        v[k * nc + i] = h.c_rate().at(k)[i] - tmp[i];
                    }
                }
                v
            })
            .collect();
        Ok(ZSample {
            engine: self,
            db,
            db0,
            v,
            memo: self.fourth.clone(),
        })
    }
}

/// Memoized `Z` evaluation on one sample path.
#[derive(Debug)]
pub struct ZSample<'e> {
    engine: &'e ZEngine,
    db: Vec<f64>,
    db0: Vec<f64>,
    v: Vec<Vec<f64>>,
    memo: Vec<f64>,
}

impl ZSample<'_> {
    /// `Z_γ` for a strictly increasing block of 1 to 4 roster indices.
    pub fn z(&mut self, block: &[usize]) -> Result<f64> {
        let m = self.engine.roster.len();
        if block.is_empty() || block.len() > 4 {
            return Err(Error::Config(format!("Z blocks have 1 to 4 indices, got {}", block.len())));
        }
        if block.windows(2).any(|w| w[0] >= w[1]) || block.iter().any(|&i| i >= m) {
            return Err(Error::Config(format!(
                "Z block {block:?} must be strictly increasing indices below {m}"
            )));
        }
        let mask = block.iter().fold(0usize, |acc, &i| acc | (1 << i));
        let cached = self.memo[mask];
        if !cached.is_nan() {
            return Ok(cached);
        }
        let value = match *block {
            [i] => self.z1(i),
            [i, j] => self.z2(i, j),
            [i, j, k] => self.z3(i, j, k),
            [i, j, k, l] => self.engine.z4_value(i, j, k, l),
            _ => unreachable!("block length checked above"),
        };
        self.memo[mask] = value;
        Ok(value)
    }

    fn z1(&self, i: usize) -> f64 {
        let h = &self.engine.roster[i];
        let d = self.engine.omega.dim_w();
        let mut s = 0.0;
        for k in 0..self.engine.steps {
            let r = h.w_rate().at(k);
            for x in 0..d {
                s += r[x] * self.db[k * d + x];
            }
        }
        s + dot(&self.v[i], &self.db0)
    }

    fn z2(&self, i: usize, j: usize) -> f64 {
        let e = self.engine;
        let m = e.roster.len();
        dot(e.pair(j, i), &self.db0) - (e.rate_dots[i * m + j] + dot(&self.v[i], &self.v[j])) * e.dt
    }

    fn z3(&self, i: usize, j: usize, k: usize) -> f64 {
        let e = self.engine;
        let s = dot(&self.v[i], e.pair(k, j)) + dot(&self.v[j], e.pair(k, i)) + dot(&self.v[k], e.pair(j, i));
        -s * e.dt
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn mask_indices(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask & (1 << i) != 0).collect()
}

/// `Z_γ` for a block of indices into `roster`.
pub fn z_block(block: &[usize], roster: &[CMPath], path: &WienerPath, omega: &OmegaForm) -> Result<ZValue> {
    let engine = ZEngine::new(roster, omega)?;
    let value = engine.sample(path)?.z(block)?;
    Ok(ZValue {
        order: block.len(),
        indices: block.to_vec(),
        value,
    })
}

pub fn z1(hi: &CMPath, path: &WienerPath, omega: &OmegaForm) -> Result<f64> {
    ZEngine::new([hi], omega)?.sample(path)?.z(&[0])
}

pub fn z2(hi: &CMPath, hj: &CMPath, path: &WienerPath, omega: &OmegaForm) -> Result<f64> {
    ZEngine::new([hi, hj], omega)?.sample(path)?.z(&[0, 1])
}

pub fn z3(hi: &CMPath, hj: &CMPath, hk: &CMPath, path: &WienerPath, omega: &OmegaForm) -> Result<f64> {
    ZEngine::new([hi, hj, hk], omega)?.sample(path)?.z(&[0, 1, 2])
}

/// Third-order functional under an explicit sign convention.
pub fn z3_with(
    convention: Z3Convention,
    hi: &CMPath,
    hj: &CMPath,
    hk: &CMPath,
    path: &WienerPath,
    omega: &OmegaForm,
) -> Result<f64> {
    match convention {
        Z3Convention::Corrected => z3(hi, hj, hk, path, omega),
        Z3Convention::Printed => {
            for h in [hi, hj, hk] {
                h.check_against(path)?;
                h.check_omega(omega)?;
            }
            let nc = omega.dim_c();
            let dt = path.grid().dt();
            let (mut plus, mut p) = (vec![0.0; nc], vec![0.0; nc]);
            let mut s = 0.0;
            for t in 0..path.grid().steps() {
                let b = path.b().at(t);
                let terms = [(hi, hk, hj), (hj, hk, hi), (hk, hj, hi)];
                for (outer, pa, pb) in terms {
                    omega.apply_into(b, outer.w_rate().at(t), &mut plus);
                    omega.apply_into(pa.w_values().at(t), pb.w_rate().at(t), &mut p);
                    for x in 0..nc {
                        s += (outer.c_rate().at(t)[x] + plus[x]) * p[x];
                    }
                }
            }
            Ok(-s * dt)
        }
    }
}

/// Deterministic fourth-order functional; no noise input.
pub fn z4(hi: &CMPath, hj: &CMPath, hk: &CMPath, hl: &CMPath, omega: &OmegaForm) -> Result<f64> {
    let engine = ZEngine::new([hi, hj, hk, hl], omega)?;
    Ok(engine.fourth[0b1111])
}

/// `Z_γ` evaluated on the noise translated by `εh_shift`.
pub fn z_translated(
    block: &[usize],
    roster: &[CMPath],
    h_shift: &CMPath,
    eps: f64,
    path: &WienerPath,
    omega: &OmegaForm,
) -> Result<f64> {
    let shifted = shift_noise(path, h_shift, eps, omega)?;
    Ok(z_block(block, roster, &shifted, omega)?.value)
}

/// `β₂, β₃` computed directly from their integrands.
pub fn beta_expansion(hi: &CMPath, hj: &CMPath, path: &WienerPath, omega: &OmegaForm) -> Result<BetaCoeffs> {
    for h in [hi, hj] {
        h.check_against(path)?;
        h.check_omega(omega)?;
    }
    let nc = omega.dim_c();
    let dt = path.grid().dt();
    let (mut wi, mut wj, mut pjj, mut pji) = (vec![0.0; nc], vec![0.0; nc], vec![0.0; nc], vec![0.0; nc]);
    let (mut b2, mut b3) = (0.0, 0.0);
    for t in 0..path.grid().steps() {
        let b = path.b().at(t);
        omega.apply_into(b, hi.w_rate().at(t), &mut wi);
        omega.apply_into(b, hj.w_rate().at(t), &mut wj);
        omega.apply_into(hj.w_values().at(t), hj.w_rate().at(t), &mut pjj);
        omega.apply_into(hj.w_values().at(t), hi.w_rate().at(t), &mut pji);
        for x in 0..nc {
            let vi = hi.c_rate().at(t)[x] - wi[x];
            let vj = hj.c_rate().at(t)[x] - wj[x];
            b2 += 0.5 * vi * pjj[x] + vj * pji[x];
            b3 += pji[x] * pjj[x];
        }
    }
    Ok(BetaCoeffs {
        beta2: -b2 * dt,
        beta3: -0.5 * b3 * dt,
    })
}

/// Outcome of checking both third-order conventions against the central
/// difference of the translated second-order functional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Z3Arbitration {
    pub printed: FdCurve,
    pub corrected: FdCurve,
    pub chosen: Z3Convention,
    pub note: String,
}

/// Checks `Z_ijk = d/dε|₀ Z_ij(translated by εh_k)` for both conventions.
pub fn arbitrate_z3(
    hi: &CMPath,
    hj: &CMPath,
    hk: &CMPath,
    path: &WienerPath,
    omega: &OmegaForm,
    deltas: &[f64],
) -> Result<Z3Arbitration> {
    let translated = |eps: f64| -> Result<f64> {
        let shifted = shift_noise(path, hk, eps, omega)?;
        z2(hi, hj, &shifted, omega)
    };
    let printed_target = z3_with(Z3Convention::Printed, hi, hj, hk, path, omega)?;
    let corrected_target = z3_with(Z3Convention::Corrected, hi, hj, hk, path, omega)?;
    let printed = central_difference_curve(&translated, printed_target, deltas)?;
    let corrected = central_difference_curve(&translated, corrected_target, deltas)?;
    let (chosen, note) = match (printed.passes(), corrected.passes()) {
        (false, true) => (
            Z3Convention::Corrected,
            "printed Z_ijk (a + w(B,A')) fails the derivative identity; shipping the sign-corrected form a - w(B,A')".to_string(),
        ),
        (true, _) => (
            Z3Convention::Printed,
            "printed Z_ijk satisfies the derivative identity".to_string(),
        ),
        (false, false) => (
            Z3Convention::Corrected,
            "neither Z_ijk convention satisfies the derivative identity".to_string(),
        ),
    };
    Ok(Z3Arbitration {
        printed,
        corrected,
        chosen,
        note,
    })
}

/// Central differences of `ε ↦ J_{εh}` at zero against `Z_h`.
pub fn lemma_first_order(h: &CMPath, path: &WienerPath, omega: &OmegaForm, deltas: &[f64]) -> Result<FdCurve> {
    let f = |eps: f64| j_h(&h.scaled(eps), path, omega);
    central_difference_curve(&f, z1(h, path, omega)?, deltas)
}

/// Central differences of the translated order-`r` functional against the
/// order-`r+1` one, for `roster = [h_1, …, h_{r+1}]`, `r = 1, 2, 3`.
pub fn lemma_higher_order(roster: &[CMPath], path: &WienerPath, omega: &OmegaForm, deltas: &[f64]) -> Result<FdCurve> {
    let r = roster.len();
    if !(2..=4).contains(&r) {
        return Err(Error::OrderOutOfRange(r));
    }
    let (lower, shift) = roster.split_at(r - 1);
    let lower_block: Vec<usize> = (0..r - 1).collect();
    let full_block: Vec<usize> = (0..r).collect();
    let f = |eps: f64| z_translated(&lower_block, lower, &shift[0], eps, path, omega);
    let target = z_block(&full_block, roster, path, omega)?.value;
    central_difference_curve(&f, target, deltas)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numeric::{polyfit, polyval};
    use crate::path::{cm_inner, sample_wiener, PathSeed, Series, TimeGrid};

    const DELTAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

    fn roster(omega: &OmegaForm, count: usize, seed: u64) -> (Vec<CMPath>, WienerPath) {
        let g = TimeGrid::new(1.0, 64).unwrap();
        let w = sample_wiener(g, omega.dim_w(), omega.dim_c(), PathSeed::new(seed, 0));
        let hs = (0..count)
            .map(|i| CMPath::random(g, omega.dim_w(), omega.dim_c(), 4, seed * 31 + i as u64, 1.0))
            .collect();
        (hs, w)
    }

    #[test]
    fn zero_direction_gives_zero() {
        let om = OmegaForm::standard(2, 1);
        let (hs, w) = roster(&om, 2, 1);
        let zero = CMPath::zero(*w.grid(), 2, 1);
        assert_eq!(z1(&zero, &w, &om).unwrap(), 0.0);
        assert_eq!(z2(&zero, &hs[0], &w, &om).unwrap(), 0.0);
        assert_eq!(z2(&hs[1], &zero, &w, &om).unwrap(), 0.0);
    }

    #[test]
    fn z1_equals_alpha1() {
        let om = OmegaForm::random(3, 2, 2, 1.0);
        let (hs, w) = roster(&om, 1, 2);
        let a = crate::density::alpha_coeffs(&hs[0], &w, &om).unwrap();
        assert!((z1(&hs[0], &w, &om).unwrap() - a.alpha1).abs() <= 1e-12 * (1.0 + a.alpha1.abs()));
    }

    #[test]
    fn flat_case_reductions() {
        let om = OmegaForm::zero(2, 1);
        let (hs, w) = roster(&om, 4, 3);
        let inner = cm_inner(&hs[0], &hs[1]).unwrap();
        assert!((z2(&hs[0], &hs[1], &w, &om).unwrap() + inner).abs() < 1e-12);
        assert_eq!(z3(&hs[0], &hs[1], &hs[2], &w, &om).unwrap(), 0.0);
        assert_eq!(z4(&hs[0], &hs[1], &hs[2], &hs[3], &om).unwrap(), 0.0);
        let b = beta_expansion(&hs[0], &hs[1], &w, &om).unwrap();
        assert_eq!((b.beta2, b.beta3), (0.0, 0.0));
        let z = z1(&hs[0], &w, &om).unwrap();
        let shifted = z_translated(&[0], &hs[..1], &hs[1], 0.6, &w, &om).unwrap();
        assert!((shifted - (z - 0.6 * inner)).abs() < 1e-12);
    }

    #[test]
    fn zero_shift_direction_kills_betas() {
        let om = OmegaForm::standard(2, 1);
        let (hs, w) = roster(&om, 1, 4);
        let zero = CMPath::zero(*w.grid(), 2, 1);
        let b = beta_expansion(&hs[0], &zero, &w, &om).unwrap();
        assert_eq!((b.beta2, b.beta3), (0.0, 0.0));
    }

    #[test]
    fn fourth_order_ignores_noise() {
        let om = OmegaForm::random(3, 1, 9, 1.0);
        let (hs, _) = roster(&om, 4, 5);
        let engine = ZEngine::new(&hs, &om).unwrap();
        let first = z4(&hs[0], &hs[1], &hs[2], &hs[3], &om).unwrap();
        for s in 0..100 {
            let w = sample_wiener(*hs[0].grid(), 3, 1, PathSeed::new(77, s));
            assert_eq!(engine.sample(&w).unwrap().z(&[0, 1, 2, 3]).unwrap(), first);
        }
    }

    #[test]
    fn third_order_by_hand_with_zero_noise() {
        // Two steps of Δt = 1 with B ≡ 0, so v = ȧ and p_ji = ω(A_j, Ȧ_i).
        let om = OmegaForm::standard(2, 1);
        let g = TimeGrid::new(2.0, 2).unwrap();
        let mk = |w: [[f64; 2]; 2], c: [f64; 2]| {
            CMPath::from_rates(
                g,
                Series::from_rows(&[w[0].to_vec(), w[1].to_vec()], 2).unwrap(),
                Series::from_rows(&[vec![c[0]], vec![c[1]]], 1).unwrap(),
            )
            .unwrap()
        };
        let hi = mk([[1.0, 0.0], [0.0, 1.0]], [1.0, 2.0]);
        let hj = mk([[0.0, 1.0], [1.0, 0.0]], [0.0, 1.0]);
        let hk = mk([[1.0, 1.0], [0.0, 0.0]], [3.0, 0.0]);
        // At step 1: A_i = (1,0), A_j = (0,1), A_k = (1,1); rates Ȧ_i=(0,1),
        // Ȧ_j=(1,0), Ȧ_k=(0,0); ȧ = (2, 1, 0). Step 0 has A ≡ 0 so p ≡ 0.
        // p_kj = ω((1,1),(1,0)) = −1, p_ki = ω((1,1),(0,1)) = 1,
        // p_ji = ω((0,1),(0,1)) = 0 ⇒ Z_ijk = −(2·(−1) + 1·1 + 0) = 1.
        let w = WienerPath::zero(g, 2, 1);
        assert_eq!(z3(&hi, &hj, &hk, &w, &om).unwrap(), 1.0);
    }

    #[test]
    fn translated_first_order_is_exact_cubic() {
        let om = OmegaForm::random(2, 2, 6, 1.0);
        let (hs, w) = roster(&om, 2, 6);
        let nodes = [-1.0, -0.3, 0.4, 1.0];
        let vals: Vec<f64> = nodes
            .iter()
            .map(|&e| z_translated(&[0], &hs[..1], &hs[1], e, &w, &om).unwrap())
            .collect();
        let c = polyfit(&nodes, &vals, &[0, 1, 2, 3]).unwrap();
        let beta = beta_expansion(&hs[0], &hs[1], &w, &om).unwrap();
        let expect = [
            z1(&hs[0], &w, &om).unwrap(),
            z2(&hs[0], &hs[1], &w, &om).unwrap(),
            beta.beta2,
            beta.beta3,
        ];
        for (got, want) in c.iter().zip(expect) {
            assert!((got - want).abs() <= 1e-8 * (1.0 + want.abs()), "{got} vs {want}");
        }
        for e in [-0.8, 0.15, 0.9] {
            let direct = z_translated(&[0], &hs[..1], &hs[1], e, &w, &om).unwrap();
            assert!((polyval(&c, &[0, 1, 2, 3], e) - direct).abs() <= 1e-9 * (1.0 + direct.abs()));
        }
        assert_eq!(z_translated(&[0], &hs[..1], &hs[1], 0.0, &w, &om).unwrap(), expect[0]);
    }

    #[test]
    fn derivative_identities_hold() {
        let om = OmegaForm::standard(2, 1);
        let (hs, w) = roster(&om, 4, 7);
        let first = lemma_first_order(&hs[0], &w, &om, &DELTAS).unwrap();
        assert!(first.passes(), "{first:?}");
        for r in 2..=4 {
            let curve = lemma_higher_order(&hs[..r], &w, &om, &DELTAS).unwrap();
            assert!(curve.passes(), "order {r}: {curve:?}");
        }
    }

    #[test]
    fn arbitration_rejects_printed_sign() {
        let om = OmegaForm::standard(2, 1);
        let (hs, w) = roster(&om, 3, 8);
        let out = arbitrate_z3(&hs[0], &hs[1], &hs[2], &w, &om, &DELTAS).unwrap();
        assert!(!out.printed.passes());
        assert!(out.corrected.passes());
        assert_eq!(out.chosen, Z3Convention::Corrected);
    }

    #[test]
    fn blocks_must_increase() {
        let om = OmegaForm::standard(2, 1);
        let (hs, w) = roster(&om, 3, 9);
        let engine = ZEngine::new(&hs, &om).unwrap();
        let mut s = engine.sample(&w).unwrap();
        assert!(s.z(&[1, 0]).is_err());
        assert!(s.z(&[0, 3]).is_err());
        assert!(s.z(&[]).is_err());
        let memo_first = s.z(&[0, 2]).unwrap();
        assert_eq!(s.z(&[0, 2]).unwrap(), memo_first);
    }
}
