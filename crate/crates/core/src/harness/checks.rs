//! Deterministic, per-path checks of the algebraic identities: polynomial
//! exactness in `ε`, derivative identities, the partition engine and the
//! left/right inversion formula.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::density::{alpha_coeffs, log_j_h};
use crate::error::Result;
use crate::group::{inverse, GroupPoint, OmegaForm};
use crate::ibp::{enumerate_lambda, phi, phi_recursion_check};
use crate::numeric::{polyfit, polyval, FdCurve};
use crate::path::{cm_inner, sample_wiener, CMPath, PathSeed, TimeGrid, WienerPath};
use crate::testfn::{invert_precompose, left_derive, right_derive, AffineForm, TestFunction};
use crate::zfun::{arbitrate_z3, beta_expansion, lemma_first_order, lemma_higher_order, z1, z2, z_translated, Z3Convention};

/// Outcome of one deterministic check; `pass ⇔ metric ≤ threshold`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckReport {
    pub identity: String,
    pub pass: bool,
    pub metric: f64,
    pub threshold: f64,
    pub details: serde_json::Value,
}

impl CheckReport {
    fn new(identity: &str, metric: f64, threshold: f64, details: serde_json::Value) -> Self {
        Self {
            identity: identity.into(),
            pass: metric <= threshold,
            metric,
            threshold,
            details,
        }
    }
}

pub const FD_DELTAS: [f64; 3] = [1e-2, 1e-3, 1e-4];

/// Random noise and Cameron–Martin paths shared by the per-path checks.
#[derive(Debug, Clone)]
pub struct PathBatch {
    pub omega: OmegaForm,
    pub grid: TimeGrid,
    pub seed: u64,
    pub paths: usize,
}

impl PathBatch {
    pub fn new(omega: OmegaForm, grid: TimeGrid, seed: u64, paths: usize) -> Self {
        Self {
            omega,
            grid,
            seed,
            paths,
        }
    }

    pub fn noise(&self, i: usize) -> WienerPath {
        sample_wiener(self.grid, self.omega.dim_w(), self.omega.dim_c(), PathSeed::new(self.seed, i as u64))
    }

    /// `count` directions for path `i`, four random pieces each.
    pub fn directions(&self, i: usize, count: usize) -> Vec<CMPath> {
        (0..count)
            .map(|j| {
                let s = self.seed.wrapping_mul(0x9e37_79b9).wrapping_add((i * 8 + j) as u64);
                CMPath::random(self.grid, self.omega.dim_w(), self.omega.dim_c(), 4, s, 1.0)
            })
            .collect()
    }
}

/// `max|a − b| / max|b|` over the two vectors.
fn rel_max(got: &[f64], want: &[f64]) -> f64 {
    let num = got.iter().zip(want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    let den = want.iter().map(|b| b.abs()).fold(0.0, f64::max);
    if den > 0.0 {
        num / den
    } else {
        num
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

/// A degree-4 fit of `ε ↦ log J_{εh}` on 9 nodes in `[−1, 1]` predicts 10
/// held-out values.
pub fn quartic_log_density(batch: &PathBatch, tol: f64) -> Result<CheckReport> {
    let nodes = linspace(-1.0, 1.0, 9);
    let held: Vec<f64> = (0..10).map(|j| -0.93 + 0.19 * j as f64).collect();
    let powers = [0, 1, 2, 3, 4];
    let (mut worst, mut worst_coeff) = (0.0f64, 0.0f64);
    for i in 0..batch.paths {
        let w = batch.noise(i);
        let h = &batch.directions(i, 1)[0];
        let log_j = |e: f64| log_j_h(&h.scaled(e), &w, &batch.omega);
        let ys = nodes.iter().map(|&e| log_j(e)).collect::<Result<Vec<_>>>()?;
        let c = polyfit(&nodes, &ys, &powers)?;
        let direct = held.iter().map(|&e| log_j(e)).collect::<Result<Vec<_>>>()?;
        let pred: Vec<f64> = held.iter().map(|&e| polyval(&c, &powers, e)).collect();
        worst = worst.max(rel_max(&pred, &direct));
        let a = alpha_coeffs(h, &w, &batch.omega)?;
        worst_coeff = worst_coeff.max(rel_max(&c, &[0.0, a.alpha1, a.alpha2, a.alpha3, a.alpha4]));
    }
    Ok(CheckReport::new(
        "log_density_quartic",
        worst,
        tol,
        json!({
            "paths": batch.paths,
            "fit_nodes": nodes,
            "held_out": held,
            "max_coefficient_deviation_vs_alpha": worst_coeff,
        }),
    ))
}

/// A cubic fit of the translated first-order functional reproduces it
/// exactly and its top coefficients equal `β₂, β₃`.
pub fn translated_z1_cubic(batch: &PathBatch, residual_tol: f64, beta_tol: f64) -> Result<CheckReport> {
    let nodes = linspace(-1.0, 1.0, 8);
    let held = [-0.77, -0.21, 0.05, 0.48, 0.91];
    let powers = [0, 1, 2, 3];
    let (mut resid, mut beta_dev, mut lower_dev) = (0.0f64, 0.0f64, 0.0f64);
    for i in 0..batch.paths {
        let w = batch.noise(i);
        let hs = batch.directions(i, 2);
        let om = &batch.omega;
        let f = |e: f64| z_translated(&[0], &hs[..1], &hs[1], e, &w, om);
        let ys = nodes.iter().map(|&e| f(e)).collect::<Result<Vec<_>>>()?;
        let c = polyfit(&nodes, &ys, &powers)?;
        let xs: Vec<f64> = nodes.iter().chain(&held).copied().collect();
        let direct = xs.iter().map(|&e| f(e)).collect::<Result<Vec<_>>>()?;
        let pred: Vec<f64> = xs.iter().map(|&e| polyval(&c, &powers, e)).collect();
        resid = resid.max(rel_max(&pred, &direct));
        let beta = beta_expansion(&hs[0], &hs[1], &w, om)?;
        for (got, want) in [(c[2], beta.beta2), (c[3], beta.beta3)] {
            beta_dev = beta_dev.max((got - want).abs() / want.abs().max(1.0));
        }
        let low = [z1(&hs[0], &w, om)?, z2(&hs[0], &hs[1], &w, om)?];
        for (got, want) in c[..2].iter().zip(low) {
            lower_dev = lower_dev.max((got - want).abs() / want.abs().max(1.0));
        }
    }
    let mut report = CheckReport::new(
        "translated_z1_cubic",
        resid,
        residual_tol,
        json!({
            "paths": batch.paths,
            "max_beta_deviation": beta_dev,
            "beta_tolerance": beta_tol,
            "max_low_order_deviation": lower_dev,
        }),
    );
    report.pass &= beta_dev <= beta_tol;
    Ok(report)
}

fn curve_json(c: &FdCurve) -> serde_json::Value {
    json!({ "errors": c.errors, "slope": c.slope, "resolved": c.resolved(), "exact": c.exact(), "target": c.target })
}

/// Central differences at orders one through four, and the arbitration of
/// the third-order sign convention on the first path.
pub fn derivative_identities(batch: &PathBatch) -> Result<CheckReport> {
    let mut failures = 0usize;
    let mut slopes: Vec<Vec<f64>> = vec![Vec::new(); 4];
    let mut exact = [0usize; 4];
    let mut examples = Vec::new();
    for i in 0..batch.paths {
        let w = batch.noise(i);
        let hs = batch.directions(i, 4);
        let mut curves = vec![lemma_first_order(&hs[0], &w, &batch.omega, &FD_DELTAS)?];
        for r in 2..=4 {
            curves.push(lemma_higher_order(&hs[..r], &w, &batch.omega, &FD_DELTAS)?);
        }
        for (o, c) in curves.iter().enumerate() {
            failures += usize::from(!c.passes());
            if c.exact() {
                exact[o] += 1;
            } else if c.slope.is_finite() {
                slopes[o].push(c.slope);
            }
        }
        if i == 0 {
            examples = curves.iter().map(curve_json).collect();
        }
    }
    let w = batch.noise(0);
    let hs = batch.directions(0, 3);
    let arb = arbitrate_z3(&hs[0], &hs[1], &hs[2], &w, &batch.omega, &FD_DELTAS)?;
    let slope_range = |v: &[f64]| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        json!([lo, hi])
    };
    let mut report = CheckReport::new(
        "derivative_identities",
        failures as f64,
        0.0,
        json!({
            "paths": batch.paths,
            "deltas": FD_DELTAS,
            "slope_range_by_order": slopes.iter().map(|v| slope_range(v)).collect::<Vec<_>>(),
            "exact_curves_by_order": exact,
            "first_path": examples,
            "z3_arbitration": {
                "printed": curve_json(&arb.printed),
                "corrected": curve_json(&arb.corrected),
                "chosen": arb.chosen,
                "note": arb.note,
            },
        }),
    );
    report.pass &= arb.chosen == Z3Convention::default();
    Ok(report)
}

/// `|Λ_m|` by labelling every map `{0..m} → {0..m}` and keeping canonical
/// ones with all blocks of size at most four.
pub fn brute_force_lambda_count(m: usize) -> usize {
    let total = m.pow(m as u32);
    let mut count = 0;
    let mut labels = vec![0usize; m];
    for mut code in 0..total {
        for l in labels.iter_mut() {
            *l = code % m;
            code /= m;
        }
        let mut next = 0;
        let canonical = labels.iter().all(|&l| {
            if l < next {
                true
            } else if l == next {
                next += 1;
                true
            } else {
                false
            }
        });
        if !canonical {
            continue;
        }
        if (0..next).all(|b| labels.iter().filter(|&&l| l == b).count() <= crate::ibp::MAX_BLOCK) {
            count += 1;
        }
    }
    count
}

/// Partition counts for `m = 1..=max_m` against the brute-force count, and
/// the one-step recursion of `Φ` for `m = 1, 2, 3`.
pub fn partition_engine(batch: &PathBatch, max_m: usize, tol: f64) -> Result<CheckReport> {
    let mut counts = Vec::new();
    let mut mismatch = false;
    for m in 1..=max_m {
        let (got, want) = (enumerate_lambda(m)?.len(), brute_force_lambda_count(m));
        mismatch |= got != want;
        counts.push(json!({ "m": m, "engine": got, "brute_force": want }));
    }
    let mut worst = [0.0f64; 3];
    for i in 0..batch.paths {
        let w = batch.noise(i);
        let hs = batch.directions(i, 4);
        for m in 1..=3 {
            let r = phi_recursion_check(&hs[..m], &hs[m], &w, &batch.omega)?;
            worst[m - 1] = worst[m - 1].max(r.relative());
        }
    }
    let metric = worst.iter().copied().fold(0.0, f64::max);
    let mut report = CheckReport::new(
        "partition_engine",
        metric,
        tol,
        json!({ "counts": counts, "paths": batch.paths, "max_relative_residual_by_m": worst }),
    );
    report.pass &= !mismatch;
    Ok(report)
}

/// With `ω = 0`, `Φ_{h₁h₂} = Z₁Z₂ − ⟨h₁, h₂⟩` on every path.
pub fn flat_hermite(batch: &PathBatch, tol: f64) -> Result<CheckReport> {
    let flat = OmegaForm::zero(batch.omega.dim_w(), batch.omega.dim_c());
    let flat_batch = PathBatch::new(flat.clone(), batch.grid, batch.seed, batch.paths);
    let mut worst = 0.0f64;
    for i in 0..batch.paths {
        let w = flat_batch.noise(i);
        let hs = flat_batch.directions(i, 2);
        let hermite = z1(&hs[0], &w, &flat)? * z1(&hs[1], &w, &flat)? - cm_inner(&hs[0], &hs[1])?;
        let got = phi(&hs, &w, &flat)?;
        worst = worst.max((got - hermite).abs() / hermite.abs().max(1.0));
    }
    Ok(CheckReport::new(
        "flat_hermite",
        worst,
        tol,
        json!({ "paths": batch.paths }),
    ))
}

fn random_vec(rng: &mut ChaCha8Rng, n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|_| rng.random_range(-r..r)).collect()
}

/// A bounded trigonometric function plus an affine-times-cosine term.
pub fn random_test_function(dim_w: usize, dim_c: usize, seed: u64) -> Result<TestFunction> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let form = |rng: &mut ChaCha8Rng| {
        AffineForm::new(random_vec(rng, dim_w, 1.0), random_vec(rng, dim_c, 1.0), rng.random_range(-1.0..1.0))
    };
    let a = TestFunction::cos(form(&mut rng))?.mul(&TestFunction::sin(form(&mut rng))?)?;
    let lin = TestFunction::linear(random_vec(&mut rng, dim_w, 1.0), random_vec(&mut rng, dim_c, 1.0))?;
    let b = lin.mul(&TestFunction::cos(form(&mut rng))?)?;
    let c = TestFunction::sin(form(&mut rng))?.scale(rng.random_range(-2.0..2.0));
    a.add(&b)?.add(&c)
}

/// `(h̃f)(g) = −(ĥu)(g⁻¹)` with `u = f∘inverse`, symbolically, at random
/// points and directions.
pub fn left_right_inversion(omega: &OmegaForm, points: usize, seed: u64, tol: f64) -> Result<CheckReport> {
    let (d, n) = (omega.dim_w(), omega.dim_c());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for i in 0..points {
        let f = random_test_function(d, n, seed.wrapping_add(i as u64))?;
        let u = invert_precompose(&f);
        let h = GroupPoint::new(random_vec(&mut rng, d, 1.5), random_vec(&mut rng, n, 1.5));
        let g = GroupPoint::new(random_vec(&mut rng, d, 2.0), random_vec(&mut rng, n, 2.0));
        let left = left_derive(&f, &h, omega)?.eval(&g)?;
        let right = right_derive(&u, &h, omega)?.eval(&inverse(&g))?;
        worst = worst.max((left + right).abs() / left.abs().max(1.0));
    }
    Ok(CheckReport::new(
        "left_right_inversion",
        worst,
        tol,
        json!({ "points": points }),
    ))
}
