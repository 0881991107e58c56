//! The Girsanov density `J_h` of left translation by a Cameron–Martin path,
//! and its quartic log-polynomial expansion in the scaling `ε`.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::group::OmegaForm;
use crate::path::{CMPath, WienerPath};

/// Coefficients of `log J_{εh} = εα₁ + ε²α₂ + ε³α₃ + ε⁴α₄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaCoeffs {
    pub alpha1: f64,
    pub alpha2: f64,
    pub alpha3: f64,
    pub alpha4: f64,
}

impl AlphaCoeffs {
    pub fn log_density(&self, eps: f64) -> f64 {
        eps * (self.alpha1 + eps * (self.alpha2 + eps * (self.alpha3 + eps * self.alpha4)))
    }

    /// `d/dε log J_{εh}`.
    pub fn log_derivative(&self, eps: f64) -> f64 {
        self.alpha1 + eps * (2.0 * self.alpha2 + eps * (3.0 * self.alpha3 + eps * 4.0 * self.alpha4))
    }
}

/// `log J_h`: the Itô sums `Σ⟨Ȧ,ΔB⟩ + ⟨q,ΔB⁰⟩` minus `½Σ(|Ȧ|² + |q|²)Δt`,
/// with `q_k = ȧ_k + ½ω(A(t_k) − 2B_k, Ȧ_k)`.
pub fn log_j_h(h: &CMPath, path: &WienerPath, omega: &OmegaForm) -> Result<f64> {
    h.check_against(path)?;
    h.check_omega(omega)?;
    let (d, nc) = (omega.dim_w(), omega.dim_c());
    let dt = path.grid().dt();
    let (b, b0) = (path.b(), path.b0());
    let mut x = vec![0.0; d];
    let mut q = vec![0.0; nc];
    let mut stoch = 0.0;
    let mut energy = 0.0;
    for k in 0..path.grid().steps() {
        let (a, ad, cd) = (h.w_values().at(k), h.w_rate().at(k), h.c_rate().at(k));
        let (bk, bk1) = (b.at(k), b.at(k + 1));
        for i in 0..d {
            x[i] = a[i] - 2.0 * bk[i];
            stoch += ad[i] * (bk1[i] - bk[i]);
            energy += ad[i] * ad[i];
        }
        omega.apply_into(&x, ad, &mut q);
        let (ck, ck1) = (b0.at(k), b0.at(k + 1));
        for i in 0..nc {
            let qi = cd[i] + 0.5 * q[i];
            stoch += qi * (ck1[i] - ck[i]);
            energy += qi * qi;
        }
    }
    Ok(stoch - 0.5 * energy * dt)
}

/// `J_h`, exponentiated once from log space.
pub fn j_h(h: &CMPath, path: &WienerPath, omega: &OmegaForm) -> Result<f64> {
    Ok(log_j_h(h, path, omega)?.exp())
}

/// The four coefficients, each accumulated from its own integrand with
/// `v_k = ȧ_k − ω(B_k, Ȧ_k)` and `p_k = ω(A(t_k), Ȧ_k)`.
pub fn alpha_coeffs(h: &CMPath, path: &WienerPath, omega: &OmegaForm) -> Result<AlphaCoeffs> {
    h.check_against(path)?;
    h.check_omega(omega)?;
    let (d, nc) = (omega.dim_w(), omega.dim_c());
    let dt = path.grid().dt();
    let (b, b0) = (path.b(), path.b0());
    let mut v = vec![0.0; nc];
    let mut p = vec![0.0; nc];
    let (mut a1, mut a2_stoch, mut a2_det, mut a3, mut a4) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for k in 0..path.grid().steps() {
        let (a, ad, cd) = (h.w_values().at(k), h.w_rate().at(k), h.c_rate().at(k));
        let (bk, bk1) = (b.at(k), b.at(k + 1));
        omega.apply_into(bk, ad, &mut v);
        omega.apply_into(a, ad, &mut p);
        for i in 0..d {
            a1 += ad[i] * (bk1[i] - bk[i]);
            a2_det += ad[i] * ad[i];
        }
        let (ck, ck1) = (b0.at(k), b0.at(k + 1));
        for i in 0..nc {
            let vi = cd[i] - v[i];
            let dbi = ck1[i] - ck[i];
            a1 += vi * dbi;
            a2_stoch += p[i] * dbi;
            a2_det += vi * vi;
            a3 += vi * p[i];
            a4 += p[i] * p[i];
        }
    }
    Ok(AlphaCoeffs {
        alpha1: a1,
        alpha2: 0.5 * a2_stoch - 0.5 * a2_det * dt,
        alpha3: -0.5 * a3 * dt,
        alpha4: -0.125 * a4 * dt,
    })
}

/// `d/dε J_{εh} = J_{εh}·(α₁ + 2εα₂ + 3ε²α₃ + 4ε³α₄)`.
pub fn dj_deps(h: &CMPath, path: &WienerPath, omega: &OmegaForm, eps: f64) -> Result<f64> {
    let alpha = alpha_coeffs(h, path, omega)?;
    Ok(alpha.log_density(eps).exp() * alpha.log_derivative(eps))
}
