//! Monte Carlo estimators, paired-sample verification of every identity, and
//! report generation.
//!
//! Sample `i` is always driven by the ChaCha8 stream `(seed, i)`, samples are
//! grouped in fixed-size chunks, and chunk statistics are merged in chunk
//! order. Results are therefore bit-identical for any worker count, and the
//! first `N` samples of a `2N` run are exactly an `N` run.

pub mod checks;
pub mod report;
pub mod verify;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::group::OmegaForm;
use crate::path::{sample_wiener, PathSeed, TimeGrid, WienerPath};

pub use checks::CheckReport;
pub use report::{
    fmt_float, to_json_string, write_convergence_csv, write_csv, write_json, write_moment_csv, JsonFloatFormatter,
};
pub use verify::{
    convergence, moment_diagnostics, verify_girsanov, verify_group_ibp, verify_identity, verify_inversion,
    verify_left_ibp, verify_path_ibp, ConvergenceReport, Evaluator, Identity, Mode, ModeResult, MomentReport,
    MomentRow, MomentTarget, TargetCheck, VerificationReport,
};

/// Default tolerance multiplier `k` in `|lhs − rhs| ≤ k·SE + allowance`.
pub const DEFAULT_TOL_MULT: f64 = 4.0;
/// Samples per chunk; the unit of parallel work and of reduction order.
pub const DEFAULT_CHUNK: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "default_workers")]
    pub workers: usize,
    #[serde(default = "default_tol")]
    pub tol_mult: f64,
    #[serde(default = "default_chunk")]
    pub chunk_size: usize,
    /// Estimate the `C·Δt` allowance from a half-resolution rerun on the
    /// same noise.
    #[serde(default = "default_true")]
    pub richardson: bool,
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn default_tol() -> f64 {
    DEFAULT_TOL_MULT
}

fn default_chunk() -> usize {
    DEFAULT_CHUNK
}

fn default_true() -> bool {
    true
}

impl McSettings {
    pub fn new(samples: usize, seed: u64) -> Self {
        Self {
            samples,
            seed,
            workers: default_workers(),
            tol_mult: DEFAULT_TOL_MULT,
            chunk_size: DEFAULT_CHUNK,
            richardson: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.samples < 2 {
            return Err(Error::Config("need at least two samples".into()));
        }
        if self.workers == 0 || self.chunk_size == 0 {
            return Err(Error::Config("workers and chunk_size must be positive".into()));
        }
        if !(self.tol_mult.is_finite() && self.tol_mult > 0.0) {
            return Err(Error::Config("tol_mult must be positive".into()));
        }
        Ok(())
    }
}

/// Everything a verification run needs besides the identity itself.
#[derive(Debug, Clone, PartialEq)]
pub struct Setup {
    pub omega: OmegaForm,
    pub grid: TimeGrid,
    pub mc: McSettings,
}

impl Setup {
    pub fn new(omega: OmegaForm, grid: TimeGrid, mc: McSettings) -> Self {
        Self { omega, grid, mc }
    }

    pub fn with_grid(&self, grid: TimeGrid) -> Self {
        Self {
            grid,
            ..self.clone()
        }
    }

    pub fn with_omega(&self, omega: OmegaForm) -> Self {
        Self {
            omega,
            ..self.clone()
        }
    }

    pub fn with_samples(&self, samples: usize) -> Self {
        let mut s = self.clone();
        s.mc.samples = samples;
        s
    }

    /// Noise path of sample `index` on the setup grid.
    pub fn noise(&self, index: u64) -> WienerPath {
        sample_wiener(
            self.grid,
            self.omega.dim_w(),
            self.omega.dim_c(),
            PathSeed::new(self.mc.seed, index),
        )
    }

    pub fn echo(&self) -> ConfigEcho {
        ConfigEcho {
            seed: self.mc.seed,
            dim_w: self.omega.dim_w(),
            dim_c: self.omega.dim_c(),
            steps: self.grid.steps(),
            horizon: self.grid.horizon(),
            samples: self.mc.samples,
            tol_mult: self.mc.tol_mult,
            source: None,
        }
    }
}

/// The run parameters copied into every report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub seed: u64,
    pub dim_w: usize,
    pub dim_c: usize,
    pub steps: usize,
    pub horizon: f64,
    pub samples: usize,
    pub tol_mult: f64,
    /// Full configuration as given to the command line tool, when available.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<serde_json::Value>,
}

/// Sample mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_samples: usize,
}

/// Streaming means and co-moments of a fixed number of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnStats {
    n: usize,
    mean: Vec<f64>,
    /// Row-major `Σ (x_a − x̄_a)(x_b − x̄_b)`.
    comoment: Vec<f64>,
}

impl ColumnStats {
    pub fn new(cols: usize) -> Self {
        Self {
            n: 0,
            mean: vec![0.0; cols],
            comoment: vec![0.0; cols * cols],
        }
    }

    pub fn cols(&self) -> usize {
        self.mean.len()
    }

    pub fn count(&self) -> usize {
        self.n
    }

    pub fn push(&mut self, x: &[f64], delta: &mut [f64]) {
        let k = self.cols();
        self.n += 1;
        let nf = self.n as f64;
        for a in 0..k {
            delta[a] = x[a] - self.mean[a];
            self.mean[a] += delta[a] / nf;
        }
        for a in 0..k {
            let after = x[a] - self.mean[a];
            for b in 0..k {
                self.comoment[a * k + b] += delta[b] * after;
            }
        }
    }

    /// Chan et al. pairwise merge.
    pub fn merge(&mut self, other: &Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other.clone();
            return;
        }
        let k = self.cols();
        let (n1, n2) = (self.n as f64, other.n as f64);
        let n = n1 + n2;
        let delta: Vec<f64> = (0..k).map(|a| other.mean[a] - self.mean[a]).collect();
        for a in 0..k {
            for b in 0..k {
                self.comoment[a * k + b] += other.comoment[a * k + b] + delta[a] * delta[b] * n1 * n2 / n;
            }
        }
        for a in 0..k {
            self.mean[a] += delta[a] * n2 / n;
        }
        self.n += other.n;
    }

    pub fn mean(&self, a: usize) -> f64 {
        self.mean[a]
    }

    /// Unbiased covariance of columns `a` and `b`.
    pub fn covariance(&self, a: usize, b: usize) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        self.comoment[a * self.cols() + b] / (self.n - 1) as f64
    }

    pub fn estimate(&self, a: usize) -> MCEstimate {
        MCEstimate {
            mean: self.mean[a],
            std_error: (self.covariance(a, a).max(0.0) / self.n as f64).sqrt(),
            n_samples: self.n,
        }
    }

    /// Mean and standard error of `x_a − x_b` computed per sample.
    pub fn difference(&self, a: usize, b: usize) -> MCEstimate {
        self.contrast(&[(a, 1.0), (b, -1.0)])
    }

    /// Mean and standard error of the per-sample combination `Σ w·x_col`.
    pub fn contrast(&self, weights: &[(usize, f64)]) -> MCEstimate {
        let mut var = 0.0;
        for &(a, wa) in weights {
            for &(b, wb) in weights {
                var += wa * wb * self.covariance(a, b);
            }
        }
        MCEstimate {
            mean: weights.iter().map(|&(a, w)| w * self.mean[a]).sum(),
            std_error: (var.max(0.0) / self.n as f64).sqrt(),
            n_samples: self.n,
        }
    }
}

/// Statistics of a run, also split at `samples / 2` for independent-halves
/// comparisons and subset-stability checks.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitStats {
    pub full: ColumnStats,
    pub first: ColumnStats,
    pub second: ColumnStats,
}

/// Runs `eval(i, out)` for `i in 0..samples` on a pool of `workers` threads
/// and reduces deterministically.
pub fn run_columns<F>(mc: &McSettings, samples: usize, cols: usize, eval: F) -> Result<SplitStats>
where
    F: Fn(u64, &mut [f64]) -> Result<()> + Sync,
{
    mc.validate()?;
    let half = samples / 2;
    let chunk = mc.chunk_size;
    let n_chunks = samples.div_ceil(chunk);
    let work = |c: usize| -> Result<(ColumnStats, ColumnStats)> {
        let mut first = ColumnStats::new(cols);
        let mut second = ColumnStats::new(cols);
        let mut out = vec![0.0; cols];
        let mut delta = vec![0.0; cols];
        for i in c * chunk..((c + 1) * chunk).min(samples) {
            out.iter_mut().for_each(|x| *x = 0.0);
            eval(i as u64, &mut out)?;
            if let Some(bad) = out.iter().position(|x| !x.is_finite()) {
                return Err(Error::Numerical(format!("sample {i} produced a non-finite value in column {bad}")));
            }
            if i < half {
                first.push(&out, &mut delta);
            } else {
                second.push(&out, &mut delta);
            }
        }
        Ok((first, second))
    };
    let parts: Vec<Result<(ColumnStats, ColumnStats)>> = if mc.workers == 1 {
        (0..n_chunks).map(work).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(mc.workers)
            .build()
            .map_err(|e| Error::Config(format!("cannot build worker pool: {e}")))?;
        pool.install(|| (0..n_chunks).into_par_iter().map(work).collect())
    };
    let mut first = ColumnStats::new(cols);
    let mut second = ColumnStats::new(cols);
    for part in parts {
        let (a, b) = part?;
        first.merge(&a);
        second.merge(&b);
    }
    let mut full = first.clone();
    full.merge(&second);
    Ok(SplitStats { full, first, second })
}
