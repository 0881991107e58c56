//! Monte Carlo verification of quasi-invariance and integration-by-parts
//! identities for Brownian motion on finite-dimensional Heisenberg-like
//! groups `G = W × C`.

pub mod density;
pub mod error;
pub mod group;
pub mod harness;
pub mod ibp;
pub mod numeric;
pub mod path;
pub mod testfn;
pub mod zfun;

pub use density::{alpha_coeffs, dj_deps, j_h, log_j_h, AlphaCoeffs};
pub use error::{Error, Result};
pub use group::{bracket, inverse, left_vf_coeff, multiply, omega_apply, right_vf_coeff, GroupPoint, OmegaForm};
pub use ibp::{enumerate_lambda, phi, phi_recursion_check, phi_translated, psi, IbpFactor, Partition, MAX_ORDER};
pub use path::{
    build_xi, cm_inner, levy_integral, sample_wiener, shift_noise, translate_path, u_a, xi_terminal, CMPath, CmSpec,
    GroupPath, PathSeed, Series, TimeGrid, WienerPath,
};
pub use zfun::{beta_expansion, z1, z2, z3, z4, z_block, z_translated, BetaCoeffs, Z3Convention, ZEngine, ZValue};
pub use testfn::{
    invert_precompose, iterated_left_derive, iterated_right_derive, left_derive, right_derive, AffineForm, Atom,
    CylinderFunction, Term, TestFunction,
};
pub use harness::{
    convergence, moment_diagnostics, verify_girsanov, verify_group_ibp, verify_identity, verify_inversion,
    verify_left_ibp, verify_path_ibp, CheckReport, ConfigEcho, ConvergenceReport, Identity, MCEstimate, McSettings,
    Mode, ModeResult, MomentReport, MomentTarget, Setup, VerificationReport,
};
