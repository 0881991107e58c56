//! Time grids, Wiener paths, the Brownian motion `ξ` on `G`, and piecewise
//! linear Cameron–Martin paths.
//!
//! Every stochastic integral is a left-point (Itô) sum on a uniform grid.
//! Cameron–Martin paths share the Wiener grid and are stored through their
//! per-interval derivatives, so energies and integrals against `ḣ` are exact
//! finite sums.

use std::io::Write;

use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::group::{GroupPoint, OmegaForm};

/// Uniform grid `t_k = k·T/n`, `k = 0..=n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    horizon: f64,
    steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, steps: usize) -> Result<Self> {
        if !(horizon.is_finite() && horizon > 0.0) {
            return Err(Error::Config(format!("horizon must be positive, got {horizon}")));
        }
        if steps == 0 {
            return Err(Error::Config("grid needs at least one step".into()));
        }
        Ok(Self { horizon, steps })
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            k as f64 * self.dt()
        }
    }

    /// Grid index of time `t`, which must sit on the grid.
    pub fn index_of(&self, t: f64) -> Result<usize> {
        let x = t / self.dt();
        let k = x.round();
        if !(0.0..=self.steps as f64).contains(&k) || (x - k).abs() > 1e-9 {
            return Err(Error::GridMismatch(format!(
                "time {t} is not a point of the grid with {} steps over [0, {}]",
                self.steps, self.horizon
            )));
        }
        Ok(k as usize)
    }

    /// Grid with `steps / factor` steps over the same horizon.
    pub fn coarsened(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.steps % factor != 0 {
            return Err(Error::GridMismatch(format!(
                "cannot coarsen {} steps by {factor}",
                self.steps
            )));
        }
        Self::new(self.horizon, self.steps / factor)
    }

    fn ensure_same(&self, other: &TimeGrid, context: &str) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!(
                "{context}: {} steps over {} vs {} steps over {}",
                self.steps, self.horizon, other.steps, other.horizon
            )))
        }
    }
}

/// A row-major table of equally sized vectors, one row per grid point or
/// grid interval.
#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    dim: usize,
    data: Vec<f64>,
}

impl Series {
    pub fn zeros(rows: usize, dim: usize) -> Self {
        Self {
            dim,
            data: vec![0.0; rows * dim],
        }
    }

    pub fn from_rows(rows: &[Vec<f64>], dim: usize) -> Result<Self> {
        let mut data = Vec::with_capacity(rows.len() * dim);
        for r in rows {
            check_dim("series row", dim, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self { dim, data })
    }

    pub fn from_flat(data: Vec<f64>, dim: usize) -> Result<Self> {
        if dim == 0 || data.len() % dim != 0 {
            return Err(Error::Config(format!(
                "flat series of length {} does not split into rows of {dim}",
                data.len()
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn rows(&self) -> usize {
        if self.dim == 0 {
            0
        } else {
            self.data.len() / self.dim
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn at(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    #[inline]
    pub fn at_mut(&mut self, k: usize) -> &mut [f64] {
        &mut self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Seed of one sample path: a master seed plus an independent stream index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PathSeed {
    pub master: u64,
    pub stream: u64,
}

impl PathSeed {
    pub fn new(master: u64, stream: u64) -> Self {
        Self { master, stream }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.master);
        rng.set_stream(self.stream);
        rng
    }
}

/// The driving noise `(B, B⁰)` sampled on a grid; both start at the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct WienerPath {
    grid: TimeGrid,
    b: Series,
    b0: Series,
}

impl WienerPath {
    /// A path that stays at the origin.
    pub fn zero(grid: TimeGrid, dim_w: usize, dim_c: usize) -> Self {
        Self {
            grid,
            b: Series::zeros(grid.steps + 1, dim_w),
            b0: Series::zeros(grid.steps + 1, dim_c),
        }
    }

    /// Wraps explicit values; rows must number `steps + 1` and start at zero.
    pub fn from_values(grid: TimeGrid, b: Series, b0: Series) -> Result<Self> {
        check_dim("B rows", grid.steps + 1, b.rows())?;
        check_dim("B0 rows", grid.steps + 1, b0.rows())?;
        if b.at(0).iter().chain(b0.at(0)).any(|&x| x != 0.0) {
            return Err(Error::Config("Wiener paths must start at the origin".into()));
        }
        Ok(Self { grid, b, b0 })
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim_w(&self) -> usize {
        self.b.dim
    }

    pub fn dim_c(&self) -> usize {
        self.b0.dim
    }

    pub fn b(&self) -> &Series {
        &self.b
    }

    pub fn b0(&self) -> &Series {
        &self.b0
    }

    /// Overwrites the path with fresh Gaussian increments drawn from `rng`.
    pub fn resample<R: RngCore>(&mut self, rng: &mut R) {
        let sd = self.grid.dt().sqrt();
        let (d, n) = (self.b.dim, self.b0.dim);
        for k in 0..self.grid.steps {
            for i in 0..d {
                let z: f64 = StandardNormal.sample(rng);
                self.b.data[(k + 1) * d + i] = self.b.data[k * d + i] + sd * z;
            }
            for i in 0..n {
                let z: f64 = StandardNormal.sample(rng);
                self.b0.data[(k + 1) * n + i] = self.b0.data[k * n + i] + sd * z;
            }
        }
    }

    /// Same path seen on a grid with `steps / factor` steps.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.coarsened(factor)?;
        let pick = |s: &Series| {
            let mut out = Series::zeros(grid.steps + 1, s.dim);
            for k in 0..=grid.steps {
                out.at_mut(k).copy_from_slice(s.at(k * factor));
            }
            out
        };
        Ok(Self {
            grid,
            b: pick(&self.b),
            b0: pick(&self.b0),
        })
    }

    fn check(&self, omega: &OmegaForm) -> Result<()> {
        check_dim("Wiener path W-dimension", omega.dim_w(), self.dim_w())?;
        check_dim("Wiener path C-dimension", omega.dim_c(), self.dim_c())
    }
}

/// Draws `(B, B⁰)` with i.i.d. `N(0, Δt·I)` increments; deterministic in `seed`.
pub fn sample_wiener(grid: TimeGrid, dim_w: usize, dim_c: usize, seed: PathSeed) -> WienerPath {
    let mut path = WienerPath::zero(grid, dim_w, dim_c);
    path.resample(&mut seed.rng());
    path
}

/// A discrete `G`-valued path, stored componentwise.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupPath {
    pub w: Series,
    pub c: Series,
}

impl GroupPath {
    pub fn len(&self) -> usize {
        self.w.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn point(&self, k: usize) -> GroupPoint {
        GroupPoint::new(self.w.at(k).to_vec(), self.c.at(k).to_vec())
    }
}

/// Cumulative Itô sums `S[j] = Σ_{k<j} ω(B_k, B_{k+1} − B_k)`.
pub fn levy_integral(path: &WienerPath, omega: &OmegaForm) -> Result<Series> {
    path.check(omega)?;
    let (d, nc) = (path.dim_w(), path.dim_c());
    let mut out = Series::zeros(path.grid.steps + 1, nc);
    let mut inc = vec![0.0; d];
    let mut term = vec![0.0; nc];
    for k in 0..path.grid.steps {
        let (bk, bk1) = (path.b.at(k), path.b.at(k + 1));
        for i in 0..d {
            inc[i] = bk1[i] - bk[i];
        }
        omega.apply_into(bk, &inc, &mut term);
        for i in 0..nc {
            out.data[(k + 1) * nc + i] = out.data[k * nc + i] + term[i];
        }
    }
    Ok(out)
}

/// `ξ_j = (B_j, B⁰_j + ½ S_j)`.
pub fn build_xi(path: &WienerPath, omega: &OmegaForm) -> Result<GroupPath> {
    let levy = levy_integral(path, omega)?;
    let mut c = path.b0.clone();
    for (ci, si) in c.data.iter_mut().zip(&levy.data) {
        *ci += 0.5 * si;
    }
    Ok(GroupPath {
        w: path.b.clone(),
        c,
    })
}

/// `ξ_T` alone, without materializing the whole group path.
pub fn xi_terminal(path: &WienerPath, omega: &OmegaForm) -> Result<GroupPoint> {
    path.check(omega)?;
    let (d, nc, n) = (path.dim_w(), path.dim_c(), path.grid.steps);
    let mut area = vec![0.0; nc];
    let mut inc = vec![0.0; d];
    let mut term = vec![0.0; nc];
    for k in 0..n {
        let (bk, bk1) = (path.b.at(k), path.b.at(k + 1));
        for i in 0..d {
            inc[i] = bk1[i] - bk[i];
        }
        omega.apply_into(bk, &inc, &mut term);
        for i in 0..nc {
            area[i] += term[i];
        }
    }
    let c = path.b0.at(n).iter().zip(&area).map(|(b, s)| b + 0.5 * s).collect();
    Ok(GroupPoint::new(path.b.at(n).to_vec(), c))
}

/// A piecewise linear Cameron–Martin path `h = (A, a)` with `h(0) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct CMPath {
    grid: TimeGrid,
    w_rate: Series,
    c_rate: Series,
    w_val: Series,
    c_val: Series,
}

impl CMPath {
    /// Builds a path from its per-interval derivatives (`steps` rows each).
    pub fn from_rates(grid: TimeGrid, w_rate: Series, c_rate: Series) -> Result<Self> {
        check_dim("CM path W-rate rows", grid.steps, w_rate.rows())?;
        check_dim("CM path C-rate rows", grid.steps, c_rate.rows())?;
        if w_rate.data.iter().chain(&c_rate.data).any(|x| !x.is_finite()) {
            return Err(Error::Config("CM path rates must be finite".into()));
        }
        let dt = grid.dt();
        let integrate = |rate: &Series| {
            let dim = rate.dim;
            let mut val = Series::zeros(grid.steps + 1, dim);
            for k in 0..grid.steps {
                for i in 0..dim {
                    val.data[(k + 1) * dim + i] = val.data[k * dim + i] + rate.data[k * dim + i] * dt;
                }
            }
            val
        };
        let w_val = integrate(&w_rate);
        let c_val = integrate(&c_rate);
        Ok(Self {
            grid,
            w_rate,
            c_rate,
            w_val,
            c_val,
        })
    }

    pub fn zero(grid: TimeGrid, dim_w: usize, dim_c: usize) -> Self {
        Self::from_rates(
            grid,
            Series::zeros(grid.steps, dim_w),
            Series::zeros(grid.steps, dim_c),
        )
        .expect("zero rates are valid")
    }

    /// The lift `h(t) = (t/T)·h` of an algebra element.
    pub fn linear_lift(grid: TimeGrid, h: &GroupPoint) -> Self {
        let t = grid.horizon;
        let mut w_rate = Series::zeros(grid.steps, h.w.len());
        let mut c_rate = Series::zeros(grid.steps, h.c.len());
        for k in 0..grid.steps {
            for (x, v) in w_rate.at_mut(k).iter_mut().zip(&h.w) {
                *x = v / t;
            }
            for (x, v) in c_rate.at_mut(k).iter_mut().zip(&h.c) {
                *x = v / t;
            }
        }
        Self::from_rates(grid, w_rate, c_rate).expect("lift rates are valid")
    }

    /// Random piecewise-constant rates: `pieces` equal pieces with i.i.d.
    /// `N(0, scale²)` rates. Used for stress tests and benchmarks.
    pub fn random(
        grid: TimeGrid,
        dim_w: usize,
        dim_c: usize,
        pieces: usize,
        seed: u64,
        scale: f64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pieces = pieces.clamp(1, grid.steps);
        let draws: Vec<(Vec<f64>, Vec<f64>)> = (0..pieces)
            .map(|_| {
                let mut g = || {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    scale * z
                };
                let w = (0..dim_w).map(|_| g()).collect();
                let c = (0..dim_c).map(|_| g()).collect();
                (w, c)
            })
            .collect();
        let mut w_rate = Series::zeros(grid.steps, dim_w);
        let mut c_rate = Series::zeros(grid.steps, dim_c);
        for k in 0..grid.steps {
            let p = k * pieces / grid.steps;
            w_rate.at_mut(k).copy_from_slice(&draws[p].0);
            c_rate.at_mut(k).copy_from_slice(&draws[p].1);
        }
        Self::from_rates(grid, w_rate, c_rate).expect("random rates are valid")
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim_w(&self) -> usize {
        self.w_rate.dim
    }

    pub fn dim_c(&self) -> usize {
        self.c_rate.dim
    }

    /// `Ȧ` on each interval.
    pub fn w_rate(&self) -> &Series {
        &self.w_rate
    }

    /// `ȧ` on each interval.
    pub fn c_rate(&self) -> &Series {
        &self.c_rate
    }

    /// `A(t_k)`.
    pub fn w_values(&self) -> &Series {
        &self.w_val
    }

    /// `a(t_k)`.
    pub fn c_values(&self) -> &Series {
        &self.c_val
    }

    pub fn value(&self, k: usize) -> GroupPoint {
        GroupPoint::new(self.w_val.at(k).to_vec(), self.c_val.at(k).to_vec())
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let scale = |s: &Series| Series {
            dim: s.dim,
            data: s.data.iter().map(|x| factor * x).collect(),
        };
        Self {
            grid: self.grid,
            w_rate: scale(&self.w_rate),
            c_rate: scale(&self.c_rate),
            w_val: scale(&self.w_val),
            c_val: scale(&self.c_val),
        }
    }

    /// `‖h‖² = Σ_k (|Ȧ_k|² + |ȧ_k|²)Δt`.
    pub fn energy(&self) -> f64 {
        self.w_rate.data.iter().chain(&self.c_rate.data).map(|x| x * x).sum::<f64>() * self.grid.dt()
    }

    pub fn is_zero(&self) -> bool {
        self.w_rate.data.iter().chain(&self.c_rate.data).all(|&x| x == 0.0)
    }

    pub(crate) fn check_against(&self, path: &WienerPath) -> Result<()> {
        self.grid.ensure_same(&path.grid, "CM path vs Wiener path")?;
        check_dim("CM path W-dimension", path.dim_w(), self.dim_w())?;
        check_dim("CM path C-dimension", path.dim_c(), self.dim_c())
    }

    pub(crate) fn check_omega(&self, omega: &OmegaForm) -> Result<()> {
        check_dim("CM path W-dimension", omega.dim_w(), self.dim_w())?;
        check_dim("CM path C-dimension", omega.dim_c(), self.dim_c())
    }
}

/// One constant-derivative piece of a Cameron–Martin path, active from `start`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSegment {
    pub start: f64,
    pub w_rate: Vec<f64>,
    pub c_rate: Vec<f64>,
}

/// Grid-independent description of a Cameron–Martin path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CmSpec {
    /// `h(t) = (t/T)·(w, c)`.
    Linear { w: Vec<f64>, c: Vec<f64> },
    /// Piecewise constant derivatives; each interval `[t_k, t_{k+1})` takes the
    /// last segment whose `start ≤ t_k`.
    Segments { segments: Vec<RateSegment> },
}

impl CmSpec {
    /// `pieces` equal segments over `[0, horizon]` with i.i.d. `N(0, scale²)`
    /// rates. Breakpoints sit on any grid whose step count `pieces` divides.
    pub fn random(dim_w: usize, dim_c: usize, pieces: usize, horizon: f64, seed: u64, scale: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut g = || {
            let z: f64 = StandardNormal.sample(&mut rng);
            scale * z
        };
        let segments = (0..pieces.max(1))
            .map(|p| RateSegment {
                start: horizon * p as f64 / pieces.max(1) as f64,
                w_rate: (0..dim_w).map(|_| g()).collect(),
                c_rate: (0..dim_c).map(|_| g()).collect(),
            })
            .collect();
        CmSpec::Segments { segments }
    }

    /// Same path with every rate multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mul = |v: &[f64]| v.iter().map(|x| factor * x).collect();
        match self {
            CmSpec::Linear { w, c } => CmSpec::Linear { w: mul(w), c: mul(c) },
            CmSpec::Segments { segments } => CmSpec::Segments {
                segments: segments
                    .iter()
                    .map(|s| RateSegment {
                        start: s.start,
                        w_rate: mul(&s.w_rate),
                        c_rate: mul(&s.c_rate),
                    })
                    .collect(),
            },
        }
    }

    pub fn build(&self, grid: TimeGrid, dim_w: usize, dim_c: usize) -> Result<CMPath> {
        match self {
            CmSpec::Linear { w, c } => {
                check_dim("linear CM path W-part", dim_w, w.len())?;
                check_dim("linear CM path C-part", dim_c, c.len())?;
                Ok(CMPath::linear_lift(grid, &GroupPoint::new(w.clone(), c.clone())))
            }
            CmSpec::Segments { segments } => {
                if segments.is_empty() || segments[0].start != 0.0 {
                    return Err(Error::Config("CM segments must start at t = 0".into()));
                }
                if segments.windows(2).any(|s| s[1].start <= s[0].start) {
                    return Err(Error::Config("CM segment starts must increase".into()));
                }
                let mut w_rate = Series::zeros(grid.steps, dim_w);
                let mut c_rate = Series::zeros(grid.steps, dim_c);
                for seg in segments {
                    check_dim("CM segment W-rate", dim_w, seg.w_rate.len())?;
                    check_dim("CM segment C-rate", dim_c, seg.c_rate.len())?;
                }
                let tol = 1e-9 * grid.dt();
                for k in 0..grid.steps {
                    let t = grid.time(k);
                    let seg = segments
                        .iter()
                        .rev()
                        .find(|s| s.start <= t + tol)
                        .expect("first segment starts at zero");
                    w_rate.at_mut(k).copy_from_slice(&seg.w_rate);
                    c_rate.at_mut(k).copy_from_slice(&seg.c_rate);
                }
                CMPath::from_rates(grid, w_rate, c_rate)
            }
        }
    }
}

/// `(εh·ξ)(t_j) = εh(t_j)·ξ(t_j)` pointwise.
pub fn translate_path(h: &CMPath, xi: &GroupPath, eps: f64, omega: &OmegaForm) -> Result<GroupPath> {
    h.check_omega(omega)?;
    check_dim("group path length", h.grid.steps + 1, xi.len())?;
    check_dim("group path W-dimension", omega.dim_w(), xi.w.dim)?;
    check_dim("group path C-dimension", omega.dim_c(), xi.c.dim)?;
    let (d, nc) = (omega.dim_w(), omega.dim_c());
    let mut out = xi.clone();
    let mut aw = vec![0.0; d];
    let mut term = vec![0.0; nc];
    for j in 0..xi.len() {
        for i in 0..d {
            aw[i] = eps * h.w_val.at(j)[i];
        }
        omega.apply_into(&aw, xi.w.at(j), &mut term);
        for i in 0..d {
            out.w.at_mut(j)[i] += aw[i];
        }
        for i in 0..nc {
            out.c.at_mut(j)[i] += eps * h.c_val.at(j)[i] + 0.5 * term[i];
        }
    }
    Ok(out)
}

/// Cumulative left-point sums of `½ω(εA(t_k) − 2B_k, εȦ_k)Δt`.
pub fn u_a(h: &CMPath, path: &WienerPath, eps: f64, omega: &OmegaForm) -> Result<Series> {
    h.check_against(path)?;
    path.check(omega)?;
    let (d, nc) = (path.dim_w(), path.dim_c());
    let dt = path.grid.dt();
    let mut out = Series::zeros(path.grid.steps + 1, nc);
    let mut x = vec![0.0; d];
    let mut y = vec![0.0; d];
    let mut term = vec![0.0; nc];
    for k in 0..path.grid.steps {
        let (a, b, ad) = (h.w_val.at(k), path.b.at(k), h.w_rate.at(k));
        for i in 0..d {
            x[i] = eps * a[i] - 2.0 * b[i];
            y[i] = eps * ad[i];
        }
        omega.apply_into(&x, &y, &mut term);
        for i in 0..nc {
            out.data[(k + 1) * nc + i] = out.data[k * nc + i] + 0.5 * term[i] * dt;
        }
    }
    Ok(out)
}

/// Noise translated by `εh`: `(B − εA, B⁰ − εa − u_{εA})`, with `u` built
/// from the untranslated `B`.
pub fn shift_noise(path: &WienerPath, h: &CMPath, eps: f64, omega: &OmegaForm) -> Result<WienerPath> {
    let u = u_a(h, path, eps, omega)?;
    let mut out = path.clone();
    for (x, a) in out.b.data.iter_mut().zip(&h.w_val.data) {
        *x -= eps * a;
    }
    for ((x, a), uu) in out.b0.data.iter_mut().zip(&h.c_val.data).zip(&u.data) {
        *x -= eps * a + uu;
    }
    Ok(out)
}

/// Polarized Cameron–Martin inner product `Σ_k (⟨Ȧ₁,Ȧ₂⟩ + ⟨ȧ₁,ȧ₂⟩)Δt`.
pub fn cm_inner(h1: &CMPath, h2: &CMPath) -> Result<f64> {
    h1.grid.ensure_same(&h2.grid, "cm_inner")?;
    check_dim("cm_inner W-dimension", h1.dim_w(), h2.dim_w())?;
    check_dim("cm_inner C-dimension", h1.dim_c(), h2.dim_c())?;
    let dot = |a: &Series, b: &Series| a.data.iter().zip(&b.data).map(|(x, y)| x * y).sum::<f64>();
    Ok((dot(&h1.w_rate, &h2.w_rate) + dot(&h1.c_rate, &h2.c_rate)) * h1.grid.dt())
}

/// Writes `t, B_1..B_d, B0_1..B0_N, xi_c_1..xi_c_N` rows for plotting.
pub fn write_path_csv<W: Write>(out: W, path: &WienerPath, xi: &GroupPath) -> Result<()> {
    let io = |e: csv::Error| Error::Io(format!("csv output failed: {e}"));
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["t".to_string()];
    header.extend((1..=path.dim_w()).map(|i| format!("B_{i}")));
    header.extend((1..=path.dim_c()).map(|i| format!("B0_{i}")));
    header.extend((1..=path.dim_c()).map(|i| format!("xi_c_{i}")));
    wtr.write_record(&header).map_err(io)?;
    for k in 0..=path.grid.steps {
        let mut row = vec![format!("{:.16e}", path.grid.time(k))];
        row.extend(
            path.b
                .at(k)
                .iter()
                .chain(path.b0.at(k))
                .chain(xi.c.at(k))
                .map(|x| format!("{x:.16e}")),
        );
        wtr.write_record(&row).map_err(io)?;
    }
    wtr.flush()
        .map_err(|e| Error::Io(format!("csv output failed: {e}")))?;
    Ok(())
}
