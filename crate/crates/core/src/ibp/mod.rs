//! Integration-by-parts weights: `Φ` on path space as a sum over `Λ_m` of
//! products of `Z` functionals, and `Ψ` on the group via linear lifts.

mod partition;

pub use partition::{enumerate_lambda, Partition, MAX_BLOCK};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::{GroupPoint, OmegaForm};
use crate::path::{shift_noise, CMPath, TimeGrid, WienerPath};
use crate::zfun::{ZEngine, ZSample};

/// Highest supported IBP order.
pub const MAX_ORDER: usize = 8;

/// `Φ` (or `Ψ`) of order `m` on one sample path; the empty product is 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IbpFactor {
    pub m: usize,
    pub value: f64,
}

impl IbpFactor {
    pub fn empty() -> Self {
        Self { m: 0, value: 1.0 }
    }
}

/// `Φ` over the first `m` roster entries of an evaluated sample.
pub fn phi_from(sample: &mut ZSample<'_>, m: usize) -> Result<IbpFactor> {
    if m == 0 {
        return Ok(IbpFactor::empty());
    }
    let mut total = 0.0;
    for theta in enumerate_lambda(m)? {
        let mut prod = 1.0;
        for block in theta.blocks() {
            prod *= sample.z(block)?;
        }
        total += prod;
    }
    Ok(IbpFactor { m, value: total })
}

fn check_order(m: usize) -> Result<()> {
    if (1..=MAX_ORDER).contains(&m) {
        Ok(())
    } else {
        Err(Error::OrderOutOfRange(m))
    }
}

/// `Φ_{h₁…h_m}` on one noise path; the empty roster gives 1.
pub fn phi(hs: &[CMPath], path: &WienerPath, omega: &OmegaForm) -> Result<f64> {
    if hs.is_empty() {
        return Ok(IbpFactor::empty().value);
    }
    check_order(hs.len())?;
    let engine = ZEngine::new(hs, omega)?;
    Ok(phi_from(&mut engine.sample(path)?, hs.len())?.value)
}

/// `Φ` on the noise translated by `εh_extra`.
pub fn phi_translated(
    hs: &[CMPath],
    h_extra: &CMPath,
    eps: f64,
    path: &WienerPath,
    omega: &OmegaForm,
) -> Result<f64> {
    phi(hs, &shift_noise(path, h_extra, eps, omega)?, omega)
}

/// `Φ_{m+1}` from `Λ_{m+1}` against its assembly from `Λ_m`: every block of
/// size at most three absorbs the new index, plus the new singleton.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionResidual {
    pub direct: f64,
    pub assembled: f64,
    pub residual: f64,
    /// Sum of absolute values of all assembled terms.
    pub scale: f64,
}

impl RecursionResidual {
    pub fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.residual / self.scale
        } else {
            self.residual
        }
    }
}

pub fn phi_recursion_check(
    hs: &[CMPath],
    h_extra: &CMPath,
    path: &WienerPath,
    omega: &OmegaForm,
) -> Result<RecursionResidual> {
    let m = hs.len();
    check_order(m + 1)?;
    let engine = ZEngine::new(hs.iter().chain(std::iter::once(h_extra)), omega)?;
    let mut sample = engine.sample(path)?;
    let direct = phi_from(&mut sample, m + 1)?.value;
    let z_new = sample.z(&[m])?;
    let (mut assembled, mut scale) = (0.0, 0.0);
    for theta in enumerate_lambda(m)? {
        let zs = theta
            .blocks()
            .iter()
            .map(|b| sample.z(b))
            .collect::<Result<Vec<f64>>>()?;
        let base: f64 = zs.iter().product();
        let term = base * z_new;
        assembled += term;
        scale += term.abs();
        for (j, block) in theta.blocks().iter().enumerate() {
            if block.len() >= MAX_BLOCK {
                continue;
            }
            let mut grown = block.clone();
            grown.push(m);
            let mut term = sample.z(&grown)?;
            for (l, z) in zs.iter().enumerate() {
                if l != j {
                    term *= z;
                }
            }
            assembled += term;
            scale += term.abs();
        }
    }
    Ok(RecursionResidual {
        direct,
        assembled,
        residual: (direct - assembled).abs(),
        scale,
    })
}

/// Linear lifts `t ↦ (t/T)h` of group directions.
pub fn lift_all(group_hs: &[GroupPoint], grid: TimeGrid, omega: &OmegaForm) -> Result<Vec<CMPath>> {
    group_hs
        .iter()
        .map(|h| {
            crate::error::check_dim("direction w", omega.dim_w(), h.w.len())?;
            crate::error::check_dim("direction c", omega.dim_c(), h.c.len())?;
            Ok(CMPath::linear_lift(grid, h))
        })
        .collect()
}

/// `Ψ`: `Φ` of the linear lifts.
pub fn psi(group_hs: &[GroupPoint], path: &WienerPath, omega: &OmegaForm, grid: TimeGrid) -> Result<f64> {
    phi(&lift_all(group_hs, grid, omega)?, path, omega)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{cm_inner, sample_wiener, PathSeed};
    use crate::zfun::{z1, z2};

    fn setup(omega: &OmegaForm, count: usize, seed: u64) -> (Vec<CMPath>, WienerPath) {
        let g = TimeGrid::new(1.0, 48).unwrap();
        let w = sample_wiener(g, omega.dim_w(), omega.dim_c(), PathSeed::new(seed, 3));
        let hs = (0..count)
            .map(|i| CMPath::random(g, omega.dim_w(), omega.dim_c(), 3, seed * 17 + i as u64, 1.0))
            .collect();
        (hs, w)
    }

    #[test]
    fn first_and_second_order_by_hand() {
        let om = OmegaForm::standard(2, 1);
        let (hs, w) = setup(&om, 2, 1);
        assert_eq!(phi(&hs[..1], &w, &om).unwrap(), z1(&hs[0], &w, &om).unwrap());
        let expect = z1(&hs[0], &w, &om).unwrap() * z1(&hs[1], &w, &om).unwrap() + z2(&hs[0], &hs[1], &w, &om).unwrap();
        assert!((phi(&hs, &w, &om).unwrap() - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }

    #[test]
    fn flat_second_order_is_hermite() {
        let om = OmegaForm::zero(2, 1);
        let (hs, w) = setup(&om, 2, 2);
        let z = |h: &CMPath| z1(h, &w, &om).unwrap();
        let expect = z(&hs[0]) * z(&hs[1]) - cm_inner(&hs[0], &hs[1]).unwrap();
        assert!((phi(&hs, &w, &om).unwrap() - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
    }

    #[test]
    fn homogeneous_in_first_direction() {
        let om = OmegaForm::standard(2, 1);
        let (hs, w) = setup(&om, 2, 3);
        let lam = -1.7;
        let scaled = [hs[0].scaled(lam), hs[1].clone()];
        let base = phi(&hs, &w, &om).unwrap();
        assert!((phi(&scaled, &w, &om).unwrap() - lam * base).abs() <= 1e-11 * (1.0 + base.abs()));
    }

    #[test]
    fn recursion_holds() {
        for (om, tol) in [(OmegaForm::standard(2, 1), 1e-9), (OmegaForm::random(3, 2, 5, 1.0), 1e-9), (OmegaForm::zero(2, 1), 1e-12)] {
            for m in 1..=3 {
                for s in 0..10 {
                    let (hs, w) = setup(&om, m + 1, 100 + s);
                    let r = phi_recursion_check(&hs[..m], &hs[m], &w, &om).unwrap();
                    assert!(r.relative() <= tol, "m={m}: {r:?}");
                }
            }
        }
    }

    #[test]
    fn translated_at_zero_and_flat_shift() {
        let om = OmegaForm::standard(2, 1);
        let (hs, w) = setup(&om, 2, 4);
        assert_eq!(phi_translated(&hs[..1], &hs[1], 0.0, &w, &om).unwrap(), phi(&hs[..1], &w, &om).unwrap());
        let flat = OmegaForm::zero(2, 1);
        let (hs, w) = setup(&flat, 2, 5);
        let z = z1(&hs[0], &w, &flat).unwrap();
        let inner = cm_inner(&hs[0], &hs[1]).unwrap();
        let got = phi_translated(&hs[..1], &hs[1], 0.3, &w, &flat).unwrap();
        assert!((got - (z - 0.3 * inner)).abs() < 1e-12);
    }

    #[test]
    fn psi_of_zero_and_central_direction() {
        let om = OmegaForm::standard(2, 1);
        let g = TimeGrid::new(2.0, 16).unwrap();
        let w = sample_wiener(g, 2, 1, PathSeed::new(6, 0));
        assert_eq!(psi(&[GroupPoint::identity(2, 1)], &w, &om, g).unwrap(), 0.0);
        let h = GroupPoint::new(vec![0.0, 0.0], vec![1.5]);
        let expect = 1.5 / 2.0 * w.b0().at(16)[0];
        assert!((psi(&[h], &w, &om, g).unwrap() - expect).abs() < 1e-12);
        assert!(psi(&[GroupPoint::new(vec![0.0], vec![1.0])], &w, &om, g).is_err());
    }

    #[test]
    fn order_bounds() {
        let om = OmegaForm::standard(2, 1);
        let (hs, w) = setup(&om, 1, 7);
        assert_eq!(phi(&[], &w, &om).unwrap(), 1.0);
        assert!(phi(&vec![hs[0].clone(); MAX_ORDER + 1], &w, &om).is_err());
        let many = vec![hs[0].clone(); MAX_ORDER];
        assert!(phi_recursion_check(&many, &hs[0], &w, &om).is_err());
    }
}
