// SPDX-License-Identifier: Apache-2.0

//! Ensemble-averaged predictions for the depolarizing radius `α(t)`.
//!
//! For GUE the average of `|f(t)|²` is built from the one-point density
//! `R1(E) = Σ_j φ_j(E)²` and the cluster function
//! `T2(E1, E2) = (Σ_j φ_j(E1) φ_j(E2))²`, where `φ_j` are Hermite functions
//! scaled to the spectral span 4. Their Fourier transforms
//!
//! ```text
//! b1(t) = (1/N) Σ_j c_jj(t)        b2(t) = (1/N) Σ_jk |c_jk(t)|²
//! c_jk(t) = ∫ φ_j(E) φ_k(E) e^{-iEt} dE
//! ```
//!
//! give `<α>_GUE = (N² b1² + N(1 - b2) - 1) / (N² - 1)`.
//!
//! The `c_jk` integrals are done with Gauss-Legendre quadrature on
//! `[-2-δ, 2+δ]`, `δ = 10/√N`, doubling the node count until two successive
//! rules agree to 1e-7. The rule is symmetric and `φ_j` has parity `(-1)^j`,
//! so only the positive nodes are stored: `c_jk` is real for even `j + k` and
//! purely imaginary for odd `j + k`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::channel;
use crate::ensembles::{self, Spectrum};
use crate::error::{Error, Result};
use crate::parallel;
use crate::special::{self, GaussLegendre};

/// Agreement required between successive quadrature refinements.
pub const QUADRATURE_TOL: f64 = 1e-7;
/// Largest `N` for which `b2` is evaluated exactly; above it the linear
/// ramp `1 - b2 = min(t/2N, 1)` is used.
pub const EXACT_B2_MAX_DIM: usize = 512;
const MIN_NODES: usize = 64;
const MAX_NODES: usize = 1 << 17;

/// Matrix dimension, possibly infinite.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Size {
    Finite(usize),
    Infinite,
}

impl Size {
    pub fn finite(self) -> Option<usize> {
        match self {
            Size::Finite(n) => Some(n),
            Size::Infinite => None,
        }
    }
}

impl std::fmt::Display for Size {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Size::Finite(n) => write!(f, "{n}"),
            Size::Infinite => write!(f, "inf"),
        }
    }
}

/// Half-width of the quadrature interval for dimension `n`.
pub fn quadrature_half_width(n: usize) -> f64 {
    2.0 + 10.0 / (n as f64).sqrt()
}

/// Hermite function `φ_j(x)` for matrix dimension `n`:
/// `e^{-Nx²/4} H_j(x√(N/2)) / sqrt(2^j j! sqrt(2π/N))`.
pub fn hermite_phi(j: i64, x: f64, n: usize) -> Result<f64> {
    if j < 0 {
        return Err(Error::InvalidIndex(j));
    }
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let mut buf = vec![0.0; j as usize + 1];
    scaled_hermite_functions(x, n, &mut buf);
    Ok(buf[j as usize])
}

/// `φ_0(x) .. φ_{len-1}(x)` for dimension `n`.
fn scaled_hermite_functions(x: f64, n: usize, out: &mut [f64]) {
    let half_n = 0.5 * n as f64;
    special::hermite_functions(x * half_n.sqrt(), out);
    let scale = half_n.powf(0.25);
    out.iter_mut().for_each(|v| *v *= scale);
}

/// GUE level density `R1(E) = Σ_{j<N} φ_j(E)²`.
pub fn level_density_r1(e: f64, n: usize) -> f64 {
    let mut buf = vec![0.0; n];
    scaled_hermite_functions(e, n, &mut buf);
    buf.iter().map(|p| p * p).sum()
}

/// GUE cluster function `T2(E1, E2) = (Σ_{j<N} φ_j(E1) φ_j(E2))²`.
pub fn cluster_t2(e1: f64, e2: f64, n: usize) -> f64 {
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    scaled_hermite_functions(e1, n, &mut a);
    scaled_hermite_functions(e2, n, &mut b);
    let k: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    k * k
}

/// Two-point correlation `R2 = R1(E1) R1(E2) - T2(E1, E2)`.
pub fn correlation_r2(e1: f64, e2: f64, n: usize) -> f64 {
    level_density_r1(e1, n) * level_density_r1(e2, n) - cluster_t2(e1, e2, n)
}

/// Hermite functions `φ_0..φ_{N-1}` tabulated on a Gauss-Legendre rule over
/// `[-L, L]`, stored on the non-negative half of the symmetric rule.
#[derive(Debug, Clone)]
pub struct HermiteBasis {
    dim: usize,
    n_nodes: usize,
    /// positive nodes, ascending
    nodes: Vec<f64>,
    weights: Vec<f64>,
    /// `phi[p * dim + j] = φ_j(nodes[p])`
    phi: Vec<f64>,
    /// `R1` at the positive nodes
    r1: Vec<f64>,
    /// weight of the node at 0 (odd rules) and `φ_j(0)`
    center: Option<(f64, Vec<f64>)>,
}

impl HermiteBasis {
    pub fn new(dim: usize, n_nodes: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        let half_width = quadrature_half_width(dim);
        let rule = GaussLegendre::new(n_nodes);
        let (x, w) = rule.on_interval(-half_width, half_width);
        let first_positive = n_nodes.div_ceil(2);
        let nodes: Vec<f64> = x[first_positive..].to_vec();
        let weights: Vec<f64> = w[first_positive..].to_vec();
        let mut phi = vec![0.0; nodes.len() * dim];
        for (p, &xp) in nodes.iter().enumerate() {
            scaled_hermite_functions(xp, dim, &mut phi[p * dim..(p + 1) * dim]);
        }
        let r1 = phi.chunks(dim).map(|row| row.iter().map(|v| v * v).sum()).collect();
        let center = (n_nodes % 2 == 1).then(|| {
            let mut c = vec![0.0; dim];
            scaled_hermite_functions(0.0, dim, &mut c);
            (w[n_nodes / 2], c)
        });
        Ok(HermiteBasis { dim, n_nodes, nodes, weights, phi, r1, center })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn max_index(&self) -> usize {
        self.dim - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.n_nodes
    }

    /// Overlap matrix `∫ φ_j φ_k dE` (row-major, `dim × dim`).
    pub fn overlaps(&self) -> Vec<f64> {
        let (re, _) = self.transform_matrix(0.0);
        re
    }

    /// `max_jk |∫ φ_j φ_k - δ_jk|` on this rule.
    pub fn orthonormality_error(&self) -> f64 {
        let g = self.overlaps();
        let n = self.dim;
        (0..n * n)
            .map(|idx| {
                let target = if idx / n == idx % n { 1.0 } else { 0.0 };
                (g[idx] - target).abs()
            })
            .fold(0.0, f64::max)
    }

    /// `∫ R1(E) dE` on this rule.
    pub fn r1_integral(&self) -> f64 {
        let mut s: f64 = self.r1.iter().zip(&self.weights).map(|(r, w)| 2.0 * r * w).sum();
        if let Some((w0, c)) = &self.center {
            s += w0 * c.iter().map(|v| v * v).sum::<f64>();
        }
        s
    }

    /// `c_jk(t)` split as `(Re, Im)` row-major matrices. The real part is
    /// nonzero only for even `j + k`, the imaginary part only for odd.
    pub fn transform_matrix(&self, t: f64) -> (Vec<f64>, Vec<f64>) {
        let n = self.dim;
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        for (p, (&x, &w)) in self.nodes.iter().zip(&self.weights).enumerate() {
            let (s, c) = (x * t).sin_cos();
            let (wc, ws) = (2.0 * w * c, -2.0 * w * s);
            let row = &self.phi[p * n..(p + 1) * n];
            for j in 0..n {
                let pj = row[j];
                let (a, b) = (wc * pj, ws * pj);
                for k in (j..n).step_by(2) {
                    re[j * n + k] += a * row[k];
                }
                for k in ((j + 1)..n).step_by(2) {
                    im[j * n + k] += b * row[k];
                }
            }
        }
        if let Some((w0, c)) = &self.center {
            for j in 0..n {
                for k in (j..n).step_by(2) {
                    re[j * n + k] += w0 * c[j] * c[k];
                }
            }
        }
        for j in 0..n {
            for k in (j + 1)..n {
                re[k * n + j] = re[j * n + k];
                im[k * n + j] = im[j * n + k];
            }
        }
        (re, im)
    }

    /// `b1(t)` on this rule.
    pub fn b1(&self, t: f64) -> f64 {
        let mut s: f64 = self
            .nodes
            .iter()
            .zip(&self.weights)
            .zip(&self.r1)
            .map(|((&x, &w), &r)| 2.0 * w * r * (x * t).cos())
            .sum();
        if let Some((w0, c)) = &self.center {
            s += w0 * c.iter().map(|v| v * v).sum::<f64>();
        }
        s / self.dim as f64
    }

    /// `b2(t)` on this rule.
    pub fn b2(&self, t: f64) -> f64 {
        let (re, im) = self.transform_matrix(t);
        let s: f64 = re.iter().chain(&im).map(|v| v * v).sum();
        s / self.dim as f64
    }
}

/// `b1(t)` and `b2(t)` at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormFactors {
    pub t: f64,
    pub b1: f64,
    pub b2: f64,
}

impl FormFactors {
    /// `<|f(t)|²>_GUE = b1² + (1 - b2)/N`.
    pub fn mean_f2(&self, n: usize) -> f64 {
        self.b1 * self.b1 + (1.0 - self.b2) / n as f64
    }
}

/// Quadrature engine for the GUE form factors at one dimension. Rules are
/// built lazily per node count (powers of two) and reused across times.
#[derive(Debug, Clone)]
pub struct FormFactorEngine {
    dim: usize,
    levels: Vec<HermiteBasis>,
}

impl FormFactorEngine {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidDimension(0));
        }
        Ok(FormFactorEngine { dim, levels: Vec::new() })
    }

    /// Engine with every rule needed for `|t| <= horizon` prebuilt, so that
    /// [`FormFactorEngine::evaluate`] never has to build one.
    pub fn for_horizon(dim: usize, horizon: f64) -> Result<Self> {
        let mut engine = Self::new(dim)?;
        let top = 2 * engine.start_nodes(horizon);
        let mut n = MIN_NODES;
        while n <= top {
            engine.levels.push(HermiteBasis::new(dim, n)?);
            n *= 2;
        }
        Ok(engine)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Smallest power-of-two rule expected to resolve `e^{-iEt}`.
    fn start_nodes(&self, t: f64) -> usize {
        let omega = quadrature_half_width(self.dim) * t.abs();
        let need = MIN_NODES + 2 * self.dim + (0.5 * omega).ceil() as usize;
        need.next_power_of_two().max(MIN_NODES)
    }

    fn level(&self, n_nodes: usize) -> Option<&HermiteBasis> {
        let idx = (n_nodes / MIN_NODES).trailing_zeros() as usize;
        self.levels.get(idx).filter(|b| b.n_nodes() == n_nodes)
    }

    fn with_level<R>(&self, n_nodes: usize, f: impl FnOnce(&HermiteBasis) -> R) -> Result<R> {
        match self.level(n_nodes) {
            Some(b) => Ok(f(b)),
            None => Ok(f(&HermiteBasis::new(self.dim, n_nodes)?)),
        }
    }

    /// `b1(t)` only (cheap: one pass over the nodes).
    pub fn b1(&self, t: f64) -> Result<f64> {
        self.refine(t, |b| (b.b1(t), 0.0)).map(|(b1, _)| b1)
    }

    /// `b1(t)` and `b2(t)` with refinement until successive rules agree.
    pub fn evaluate(&self, t: f64) -> Result<FormFactors> {
        let (b1, b2) = self.refine(t, |b| (b.b1(t), b.b2(t)))?;
        Ok(FormFactors { t, b1, b2 })
    }

    fn refine(&self, t: f64, eval: impl Fn(&HermiteBasis) -> (f64, f64)) -> Result<(f64, f64)> {
        let mut n = self.start_nodes(t);
        let mut coarse = self.with_level(n, &eval)?;
        let mut disagreement = f64::INFINITY;
        while 2 * n <= MAX_NODES {
            n *= 2;
            let fine = self.with_level(n, &eval)?;
            disagreement = (fine.0 - coarse.0).abs().max((fine.1 - coarse.1).abs());
            if disagreement < QUADRATURE_TOL {
                return Ok(fine);
            }
            coarse = fine;
        }
        Err(Error::Accuracy { t, disagreement })
    }
}

/// GUE form factors `b1(t)`, `b2(t)` for dimension `n`.
pub fn form_factors(t: f64, n: usize) -> Result<FormFactors> {
    FormFactorEngine::new(n)?.evaluate(t)
}

/// Large-`N` ramp of the form factor: `1 - b2 ≈ min(|t|/2N, 1)`.
pub fn ramp_one_minus_b2(t: f64, n: usize) -> f64 {
    (t.abs() / (2.0 * n as f64)).min(1.0)
}

fn alpha_from_form_factors(b1: f64, one_minus_b2: f64, n: usize) -> f64 {
    let nf = n as f64;
    (nf * nf * b1 * b1 + nf * one_minus_b2 - 1.0) / (nf * nf - 1.0)
}

/// Exact finite-`N` GUE average `<α(t)>`.
///
/// `b2` is exact up to [`EXACT_B2_MAX_DIM`]; larger `N` uses the ramp.
pub fn alpha_gue(t: f64, n: usize) -> Result<f64> {
    if n < 2 {
        return Err(Error::UnsupportedDimension(n));
    }
    let engine = FormFactorEngine::new(n)?;
    alpha_gue_with(&engine, t)
}

fn alpha_gue_with(engine: &FormFactorEngine, t: f64) -> Result<f64> {
    let n = engine.dim();
    if n <= EXACT_B2_MAX_DIM {
        let ff = engine.evaluate(t)?;
        Ok(alpha_from_form_factors(ff.b1, 1.0 - ff.b2, n))
    } else {
        let b1 = engine.b1(t)?;
        Ok(alpha_from_form_factors(b1, ramp_one_minus_b2(t, n), n))
    }
}

/// `lim_{N→∞} b1(t) = J1(2t)/t`, equal to 1 at `t = 0`.
pub fn b1_infinite(t: f64) -> f64 {
    2.0 * special::bessel_j1_over_x(2.0 * t)
}

/// `lim_{N→∞} <α(t)>_GUE = (J1(2t)/t)²`.
pub fn alpha_gue_infinite(t: f64) -> f64 {
    b1_infinite(t).powi(2)
}

/// `(J1(2t)/t)²` plus the finite-`N` ramp correction
/// `(N min(t/2N, 1) - 1)/(N² - 1)`.
pub fn alpha_gue_infinite_corrected(t: f64, n: usize) -> f64 {
    let nf = n as f64;
    alpha_gue_infinite(t) + (nf * ramp_one_minus_b2(t, n) - 1.0) / (nf * nf - 1.0)
}

/// Uncorrelated flat spectrum on `[-2, 2]`:
/// `<α(t)> = N/(N+1) (sin 2t / 2t)² + 1/(N+1)`; `(sin 2t / 2t)²` for infinite `N`.
pub fn alpha_poisson(t: f64, size: Size) -> Result<f64> {
    let s2 = special::sinc(2.0 * t).powi(2);
    match size {
        Size::Infinite => Ok(s2),
        Size::Finite(0) => Err(Error::InvalidDimension(0)),
        Size::Finite(n) => {
            let nf = n as f64;
            Ok(1.0 / (nf + 1.0) + nf / (nf + 1.0) * s2)
        }
    }
}

/// Which model produced an [`AlphaCurve`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CurveModel {
    PerSpectrum,
    GueExactN,
    PoissonN,
    GueInfinite,
    PoissonInfinite,
    MonteCarlo,
    /// Curve read from a file.
    External,
}

impl CurveModel {
    pub fn is_analytic(self) -> bool {
        !matches!(self, CurveModel::MonteCarlo | CurveModel::External)
    }
}

/// Uniform time grid `start, start + step, ..., <= end`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub start: f64,
    pub end: f64,
    pub step: f64,
}

impl TimeGrid {
    pub fn new(start: f64, end: f64, step: f64) -> Result<Self> {
        if !(start.is_finite() && end.is_finite() && step.is_finite()) || !(start < end) || !(step > 0.0) {
            return Err(Error::InvalidArgument(format!("bad time grid [{start}, {end}] step {step}")));
        }
        Ok(TimeGrid { start, end, step })
    }

    pub fn len(&self) -> usize {
        ((self.end - self.start) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.start + i as f64 * self.step).collect()
    }
}

/// Sampled `α(t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaCurve {
    times: Vec<f64>,
    values: Vec<f64>,
    model: CurveModel,
    size: Option<Size>,
}

impl AlphaCurve {
    pub fn new(times: Vec<f64>, values: Vec<f64>, model: CurveModel, size: Option<Size>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch { expected: times.len(), found: values.len() });
        }
        if times.is_empty() || times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::BadGrid(1));
        }
        if times.iter().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("curve samples"));
        }
        Ok(AlphaCurve { times, values, model, size })
    }

    fn from_fn(grid: &TimeGrid, model: CurveModel, size: Option<Size>, f: impl Fn(f64) -> Result<f64> + Sync + Send) -> Result<Self> {
        let times = grid.points();
        let values = parallel::map_slice(&times, |&t| f(t)).into_iter().collect::<Result<Vec<_>>>()?;
        AlphaCurve::new(times, values, model, size)
    }

    /// Exact finite-`N` GUE curve.
    pub fn gue_exact(n: usize, grid: &TimeGrid) -> Result<Self> {
        if n < 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        let horizon = grid.start.abs().max(grid.end.abs());
        let engine = FormFactorEngine::for_horizon(n, horizon)?;
        Self::from_fn(grid, CurveModel::GueExactN, Some(Size::Finite(n)), |t| alpha_gue_with(&engine, t))
    }

    pub fn gue_infinite(grid: &TimeGrid) -> Result<Self> {
        Self::from_fn(grid, CurveModel::GueInfinite, Some(Size::Infinite), |t| Ok(alpha_gue_infinite(t)))
    }

    pub fn poisson(size: Size, grid: &TimeGrid) -> Result<Self> {
        let model = match size {
            Size::Finite(_) => CurveModel::PoissonN,
            Size::Infinite => CurveModel::PoissonInfinite,
        };
        Self::from_fn(grid, model, Some(size), |t| alpha_poisson(t, size))
    }

    /// `α(t)` of one fixed spectrum (Haar average over eigenvectors only).
    pub fn per_spectrum(spec: &Spectrum, grid: &TimeGrid) -> Result<Self> {
        let n = spec.dim();
        if n < 2 {
            return Err(Error::UnsupportedDimension(n));
        }
        Self::from_fn(grid, CurveModel::PerSpectrum, Some(Size::Finite(n)), |t| channel::alpha_from_spectrum(spec, t))
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn model(&self) -> CurveModel {
        self.model
    }

    pub fn size(&self) -> Option<Size> {
        self.size
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Final sample time.
    pub fn horizon(&self) -> f64 {
        *self.times.last().unwrap_or(&0.0)
    }
}

/// Empirical `<|f(t)|²>` over `n_spectra` GUE draws of dimension `n`
/// (draw `i` uses stream `(seed, i)`), with standard errors.
pub fn empirical_gue_mean_f2(n: usize, times: &[f64], n_spectra: usize, seed: u64) -> Result<Vec<(f64, f64)>> {
    if n_spectra < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n_spectra });
    }
    let per_draw = parallel::map_indexed(n_spectra, |i| -> Result<Vec<f64>> {
        let h = ensembles::sample_gue_with(n, &mut crate::rng::stream(seed, i as u64))?;
        let (spec, _) = ensembles::eigen_decompose(&h)?;
        Ok(times.iter().map(|&t| ensembles::f_transform(&spec, t).value.norm_sqr()).collect())
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok((0..times.len())
        .map(|ti| {
            let xs: Vec<f64> = per_draw.iter().map(|d| d[ti]).collect();
            (crate::stats::mean(&xs), crate::stats::stderr(&xs))
        })
        .collect())
}

/// Semicircle density `(N/2π) sqrt(4 - E²)`.
pub fn semicircle(e: f64, n: usize) -> f64 {
    if e.abs() >= 2.0 {
        0.0
    } else {
        n as f64 / (2.0 * PI) * (4.0 - e * e).sqrt()
    }
}
