// SPDX-License-Identifier: Apache-2.0

//! Non-Markovianity of a depolarizing channel with radius `α(t)`.
//!
//! All three measures only see the intervals on which `α` increases:
//!
//! - `M1 = (3/2) Σ [ln α(t_f) - ln α(t_i)]`, the integral of
//!   `g(t) = 3α̇/2α` (rate of Choi-positivity violation of the intermediate
//!   maps). Diverges when `α` touches zero at the start of an interval.
//! - `M2 = 2 Σ [α(t_f) - α(t_i)]`, trace-distance backflow between two
//!   orthogonal pure states (full trace norm, so the distance is `2α`).
//! - `M3 = (3/2) Σ` of the increase restricted to `α > 1/3`, the revival of
//!   concurrence `max(0, (3α - 1)/2)` of a Bell pair.
//!
//! Each sum is finished with a tail estimate that extrapolates a `1/t²`
//! decay of the increments: the contribution from `[T/2, T]` equals the
//! contribution from `[T, ∞)` for that law.

use nalgebra::Matrix4;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytics::AlphaCurve;
use crate::channel::{pauli, DensityMatrix, PauliTransferMatrix};
use crate::error::{Error, Result};

/// Finite differences below this slope count as flat.
pub const DEFAULT_SLOPE_TOL: f64 = 1e-10;
/// `α(t_i)` below this makes `M1` divergent.
pub const DEFAULT_FLOOR: f64 = 1e-9;
/// Maximal tail estimate relative to the running total.
pub const DEFAULT_TAIL_FRACTION: f64 = 0.005;

/// One interval on which the curve increases.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub v_start: f64,
    pub v_end: f64,
    /// grid indices of the unrefined endpoints
    pub i_start: usize,
    pub i_end: usize,
}

impl Segment {
    pub fn increase(&self) -> f64 {
        self.v_end - self.v_start
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct MonotoneSegments {
    pub segments: Vec<Segment>,
}

impl MonotoneSegments {
    pub fn len(&self) -> usize {
        self.segments.len()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Segment> {
        self.segments.iter()
    }
}

/// Vertex of the parabola through three points, if it is an extremum of the
/// requested kind lying between the outer points.
fn refine_extremum(t: [f64; 3], v: [f64; 3], minimum: bool) -> Option<(f64, f64)> {
    let (u0, u2) = (t[0] - t[1], t[2] - t[1]);
    let (d0, d2) = (v[0] - v[1], v[2] - v[1]);
    // d = A u² + B u at u0 and u2
    let det = u0 * u0 * u2 - u2 * u2 * u0;
    if det == 0.0 {
        return None;
    }
    let a = (d0 * u2 - d2 * u0) / det;
    let b = (u0 * u0 * d2 - u2 * u2 * d0) / det;
    if (minimum && a <= 0.0) || (!minimum && a >= 0.0) {
        return None;
    }
    let u = -b / (2.0 * a);
    if !(u0..=u2).contains(&u) {
        return None;
    }
    let value = v[1] - b * b / (4.0 * a);
    let better = if minimum { value <= v[1] } else { value >= v[1] };
    better.then_some((t[1] + u, value))
}

fn endpoint(times: &[f64], values: &[f64], i: usize, minimum: bool) -> (f64, f64) {
    if i > 0 && i + 1 < times.len() {
        let t = [times[i - 1], times[i], times[i + 1]];
        let v = [values[i - 1], values[i], values[i + 1]];
        if let Some(r) = refine_extremum(t, v, minimum) {
            return r;
        }
    }
    (times[i], values[i])
}

/// Maximal intervals on which the finite-difference slope exceeds
/// `slope_tol`, with interior endpoints moved to the vertex of a local
/// quadratic fit.
pub fn monotone_segments_raw(times: &[f64], values: &[f64], slope_tol: f64) -> Result<MonotoneSegments> {
    if times.len() < 3 || times.len() != values.len() {
        return Err(Error::BadGrid(3));
    }
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::BadGrid(3));
    }
    let rising: Vec<bool> = (0..times.len() - 1)
        .map(|i| (values[i + 1] - values[i]) / (times[i + 1] - times[i]) > slope_tol)
        .collect();
    let mut segments = Vec::new();
    let mut i = 0;
    while i < rising.len() {
        if !rising[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < rising.len() && rising[i] {
            i += 1;
        }
        let end = i;
        let (t_start, v_start) = endpoint(times, values, start, true);
        let (t_end, v_end) = endpoint(times, values, end, false);
        segments.push(Segment { t_start, t_end, v_start, v_end, i_start: start, i_end: end });
    }
    Ok(MonotoneSegments { segments })
}

pub fn monotone_segments(curve: &AlphaCurve, slope_tol: f64) -> Result<MonotoneSegments> {
    monotone_segments_raw(curve.times(), curve.values(), slope_tol)
}

/// `g(t) = 3α̇/2α` where `α` increases, 0 elsewhere.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    /// `α <= floor` at a point where it increases
    pub divergent: bool,
}

impl GCurve {
    /// Trapezoid integral over the grid.
    pub fn integral(&self) -> f64 {
        self.times
            .windows(2)
            .zip(self.values.windows(2))
            .map(|(t, g)| 0.5 * (t[1] - t[0]) * (g[0] + g[1]))
            .sum()
    }
}

/// `g(t)` from centered differences of the curve.
pub fn g_of_t(curve: &AlphaCurve) -> Result<GCurve> {
    let (t, v) = (curve.times(), curve.values());
    let n = t.len();
    if n < 3 {
        return Err(Error::BadGrid(3));
    }
    let mut divergent = false;
    let values = (0..n)
        .map(|i| {
            let (lo, hi) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let slope = (v[hi] - v[lo]) / (t[hi] - t[lo]);
            if slope > DEFAULT_SLOPE_TOL {
                if v[i] <= DEFAULT_FLOOR {
                    divergent = true;
                    0.0
                } else {
                    1.5 * slope / v[i]
                }
            } else {
                0.0
            }
        })
        .collect();
    Ok(GCurve { times: t.to_vec(), values, divergent })
}

/// `M1` value: finite or divergent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum M1Value {
    Finite(f64),
    Divergent,
}

impl M1Value {
    pub fn finite(self) -> Option<f64> {
        match self {
            M1Value::Finite(v) => Some(v),
            M1Value::Divergent => None,
        }
    }
}

impl std::fmt::Display for M1Value {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            M1Value::Finite(v) => write!(f, "{v}"),
            M1Value::Divergent => write!(f, "inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureOptions {
    pub slope_tol: f64,
    pub floor: f64,
    pub tail_fraction: f64,
}

impl Default for MeasureOptions {
    fn default() -> Self {
        MeasureOptions { slope_tol: DEFAULT_SLOPE_TOL, floor: DEFAULT_FLOOR, tail_fraction: DEFAULT_TAIL_FRACTION }
    }
}

/// One measure: grid sum, tail estimate, total.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasureValue {
    pub sum: f64,
    pub tail: f64,
}

impl MeasureValue {
    pub fn total(&self) -> f64 {
        self.sum + self.tail
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureReport {
    pub m1: M1Value,
    /// grid sum and tail of `M1` (present when finite)
    pub m1_parts: Option<MeasureValue>,
    pub m2: f64,
    pub m2_parts: MeasureValue,
    pub m3: f64,
    pub m3_parts: MeasureValue,
    pub horizon: f64,
    /// largest tail estimate among the finite measures
    pub tail_bound: f64,
    pub segment_count: usize,
    pub floor: f64,
}

fn m1_term(s: &Segment) -> f64 {
    1.5 * (s.v_end.ln() - s.v_start.ln())
}

fn m2_term(s: &Segment) -> f64 {
    2.0 * s.increase()
}

fn m3_term(s: &Segment) -> f64 {
    let third = 1.0 / 3.0;
    1.5 * (s.v_end - s.v_start.max(third)).max(0.0)
}

fn accumulate(segs: &MonotoneSegments, horizon: f64, term: impl Fn(&Segment) -> f64, opts: &MeasureOptions) -> Result<MeasureValue> {
    let sum: f64 = segs.iter().map(&term).sum();
    let tail = segs.iter().filter(|s| s.t_start >= 0.5 * horizon).map(&term).sum::<f64>().max(0.0);
    let limit = opts.tail_fraction * sum.abs();
    if tail > limit && tail > 1e-12 {
        return Err(Error::Horizon { horizon, tail, limit });
    }
    Ok(MeasureValue { sum, tail })
}

fn prepare(curve: &AlphaCurve, opts: &MeasureOptions) -> Result<MonotoneSegments> {
    monotone_segments(curve, opts.slope_tol)
}

fn m1_from(segs: &MonotoneSegments, horizon: f64, opts: &MeasureOptions) -> Result<(M1Value, Option<MeasureValue>)> {
    if segs.iter().any(|s| !(s.v_start >= opts.floor)) {
        return Ok((M1Value::Divergent, None));
    }
    let v = accumulate(segs, horizon, m1_term, opts)?;
    Ok((M1Value::Finite(v.total()), Some(v)))
}

pub fn measure_m1(curve: &AlphaCurve) -> Result<M1Value> {
    let opts = MeasureOptions::default();
    let segs = prepare(curve, &opts)?;
    Ok(m1_from(&segs, curve.horizon(), &opts)?.0)
}

pub fn measure_m2(curve: &AlphaCurve) -> Result<f64> {
    let opts = MeasureOptions::default();
    let segs = prepare(curve, &opts)?;
    Ok(accumulate(&segs, curve.horizon(), m2_term, &opts)?.total())
}

pub fn measure_m3(curve: &AlphaCurve) -> Result<f64> {
    let opts = MeasureOptions::default();
    let segs = prepare(curve, &opts)?;
    Ok(accumulate(&segs, curve.horizon(), m3_term, &opts)?.total())
}

/// All three measures with diagnostics.
pub fn measure_all(curve: &AlphaCurve, opts: &MeasureOptions) -> Result<MeasureReport> {
    let segs = prepare(curve, opts)?;
    let horizon = curve.horizon();
    let (m1, m1_parts) = m1_from(&segs, horizon, opts)?;
    let m2_parts = accumulate(&segs, horizon, m2_term, opts)?;
    let m3_parts = accumulate(&segs, horizon, m3_term, opts)?;
    let tail_bound = m1_parts.map_or(0.0, |p| p.tail).max(m2_parts.tail).max(m3_parts.tail);
    Ok(MeasureReport {
        m1,
        m1_parts,
        m2: m2_parts.total(),
        m2_parts,
        m3: m3_parts.total(),
        m3_parts,
        horizon,
        tail_bound,
        segment_count: segs.len(),
        floor: opts.floor,
    })
}

/// Concurrence of the Bell state after the depolarizing channel.
pub fn concurrence_of_alpha(alpha: f64) -> f64 {
    (0.5 * (3.0 * alpha - 1.0)).max(0.0)
}

/// Jamiołkowski state of a one-qubit map, basis `|00>, |01>, |10>, |11>`
/// with the map acting on the first factor.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    pub entries: Matrix4<Complex64>,
    /// `α` (or `α_r` for an intermediate map) when built from one
    pub alpha: Option<f64>,
}

impl ChoiMatrix {
    /// `J = (1/4) Σ_jk Λ_jk σ^j ⊗ (σ^k)*`.
    pub fn from_ptm(ptm: &PauliTransferMatrix) -> Self {
        let mut m = Matrix4::<Complex64>::zeros();
        for j in 0..4 {
            for k in 0..4 {
                let c = ptm.get(j, k);
                if c == 0.0 {
                    continue;
                }
                let (a, b) = (pauli(j), pauli(k).map(|z| z.conj()));
                for r in 0..4 {
                    for s in 0..4 {
                        m[(r, s)] += 0.25 * c * a[(r / 2, s / 2)] * b[(r % 2, s % 2)];
                    }
                }
            }
        }
        ChoiMatrix { entries: m, alpha: None }
    }

    pub fn eigenvalues(&self) -> [f64; 4] {
        let eig = nalgebra::SymmetricEigen::new(self.entries);
        let mut ev = [eig.eigenvalues[0], eig.eigenvalues[1], eig.eigenvalues[2], eig.eigenvalues[3]];
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Trace norm from the eigenvalues.
    pub fn trace_norm(&self) -> f64 {
        self.eigenvalues().iter().map(|e| e.abs()).sum()
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }
}

/// Jamiołkowski state of the depolarizing channel with radius `alpha`;
/// eigenvalues `(1 - α)/4` (three times) and `(1 + 3α)/4`.
pub fn choi_of_depolarizing(alpha: f64) -> ChoiMatrix {
    let c = |x: f64| Complex64::new(x, 0.0);
    let (p, q) = (0.25 * (1.0 + alpha), 0.25 * (1.0 - alpha));
    let h = 0.5 * alpha;
    #[rustfmt::skip]
    let entries = Matrix4::new(
        c(p), c(0.0), c(0.0), c(h),
        c(0.0), c(q), c(0.0), c(0.0),
        c(0.0), c(0.0), c(q), c(0.0),
        c(h), c(0.0), c(0.0), c(p),
    );
    ChoiMatrix { entries, alpha: Some(alpha) }
}

/// Jamiołkowski state of the intermediate map from `t1` to `t2`, which is
/// depolarizing with `α_r = α(t2)/α(t1)`.
pub fn intermediate_choi(alpha_t2: f64, alpha_t1: f64) -> ChoiMatrix {
    choi_of_depolarizing(alpha_t2 / alpha_t1)
}

/// `‖J(D_{α_r})‖₁ = 3|1 - α_r|/4 + |1 + 3α_r|/4`.
pub fn choi_trace_norm(alpha_ratio: f64) -> f64 {
    0.75 * (1.0 - alpha_ratio).abs() + 0.25 * (1.0 + 3.0 * alpha_ratio).abs()
}

/// Full trace norm `‖ρ0 - ρ1‖₁` (no factor ½).
pub fn trace_distance(rho0: &DensityMatrix, rho1: &DensityMatrix) -> Result<f64> {
    if rho0.dim() != rho1.dim() {
        return Err(Error::DimensionMismatch { expected: rho0.dim(), found: rho1.dim() });
    }
    let diff = rho0.matrix() - rho1.matrix();
    let eig = nalgebra::SymmetricEigen::new(diff);
    Ok(eig.eigenvalues.iter().map(|e| e.abs()).sum())
}
