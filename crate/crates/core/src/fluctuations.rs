// SPDX-License-Identifier: Apache-2.0

//! Variances of the channel matrix elements over Haar eigenvectors.
//!
//! By symmetry the 12 non-trivial entries `Λ_jk` (`j < 3`) fall into three
//! classes: diagonal `Λ_ii`, column three `Λ_i3` and off-diagonal `Λ_ij`.
//! The exact expressions hold for a fixed spectrum (any spectrum) and are
//! written in terms of `f(t)` and `f(2t)`; the leading order in `1/N`
//! replaces `f` with its ensemble average `h_t`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{self, EnvironmentSpec, PauliTransferMatrix};
use crate::ensembles::{self, Spectrum};
use crate::error::{Error, Result};
use crate::parallel;
use crate::rng;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluctuationKind {
    /// `Λ_ii`, `i ∈ {0,1,2}`
    Diagonal,
    /// `Λ_i3`
    Column3,
    /// `Λ_ij`, `i ≠ j`
    OffDiagonal,
}

impl FluctuationKind {
    pub const ALL: [FluctuationKind; 3] = [FluctuationKind::Diagonal, FluctuationKind::Column3, FluctuationKind::OffDiagonal];

    /// Matrix positions belonging to this class.
    pub fn entries(self) -> &'static [(usize, usize)] {
        match self {
            FluctuationKind::Diagonal => &[(0, 0), (1, 1), (2, 2)],
            FluctuationKind::Column3 => &[(0, 3), (1, 3), (2, 3)],
            FluctuationKind::OffDiagonal => &[(0, 1), (0, 2), (1, 0), (1, 2), (2, 0), (2, 1)],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            FluctuationKind::Diagonal => "diagonal",
            FluctuationKind::Column3 => "column3",
            FluctuationKind::OffDiagonal => "offdiagonal",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Order {
    Exact,
    Leading,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluctuationPrediction {
    pub t: f64,
    pub kind: FluctuationKind,
    pub second_moment: f64,
    pub variance: f64,
    pub order: Order,
}

fn check_exact_dim(n: usize) -> Result<f64> {
    // the prefactor has poles at N = 1 and N = 3
    if n < 4 {
        return Err(Error::UnsupportedDimension(n));
    }
    Ok(n as f64)
}

/// `f*(t)² f(2t) + f(t)² f*(2t)`
fn cross_term(f_t: Complex64, f_2t: Complex64) -> f64 {
    2.0 * (f_t.conj() * f_t.conj() * f_2t).re
}

fn prefactor(n: f64) -> f64 {
    1.0 / (2.0 * n * (1.0 - 1.0 / (n * n)) * (1.0 - 9.0 / (n * n)))
}

/// Exact Haar second moment `<Λ_00²>` for a fixed spectrum.
pub fn second_moment_00(f_t: Complex64, f_2t: Complex64, n: usize) -> Result<f64> {
    let n = check_exact_dim(n)?;
    let n2 = n * n;
    let a = f_t.norm_sqr();
    let bracket = (1.0 - 9.0 / n2)
        + (2.0 - 3.0 / n - 6.0 / n2) * (n * a * a + f_2t.norm_sqr() / n - 4.0 / n * a)
        + (1.0 - 4.0 / n) * cross_term(f_t, f_2t);
    Ok(prefactor(n) * bracket)
}

/// Exact variance of `Λ_i3`.
fn variance_column3(f_t: Complex64, f_2t: Complex64, n: f64) -> f64 {
    let n2 = n * n;
    let a = f_t.norm_sqr();
    let bracket = (1.0 - 9.0 / n2) - 3.0 * a * a - 3.0 / n2 * f_2t.norm_sqr() + 12.0 / n2 * a + cross_term(f_t, f_2t);
    (1.0 - 2.0 / n) * prefactor(n) * bracket
}

/// Exact variance of `Λ_ij`, `i ≠ j`.
fn variance_offdiagonal(f_t: Complex64, f_2t: Complex64, n: f64) -> f64 {
    let n2 = n * n;
    let a = f_t.norm_sqr();
    let bracket = (1.0 - 9.0 / n2) + a * a + f_2t.norm_sqr() / n2 - 4.0 / n2 * a - (1.0 - 6.0 / n2) * cross_term(f_t, f_2t);
    prefactor(n) * bracket
}

/// Exact variance of one entry class at time `t` for a fixed spectrum with
/// transforms `f(t)`, `f(2t)`. `mean_alpha` is the Haar mean of the diagonal
/// entries (only used for [`FluctuationKind::Diagonal`]); the other classes
/// have zero mean.
pub fn sigma2_exact(
    t: f64,
    kind: FluctuationKind,
    f_t: Complex64,
    f_2t: Complex64,
    n: usize,
    mean_alpha: f64,
) -> Result<FluctuationPrediction> {
    let nf = check_exact_dim(n)?;
    let (second_moment, variance) = match kind {
        FluctuationKind::Diagonal => {
            let m2 = second_moment_00(f_t, f_2t, n)?;
            (m2, m2 - mean_alpha * mean_alpha)
        }
        FluctuationKind::Column3 => {
            let v = variance_column3(f_t, f_2t, nf);
            (v, v)
        }
        FluctuationKind::OffDiagonal => {
            let v = variance_offdiagonal(f_t, f_2t, nf);
            (v, v)
        }
    };
    Ok(FluctuationPrediction { t, kind, second_moment, variance, order: Order::Exact })
}

/// Leading order in `1/N` with `h_t = <f(t)>`. The reported second moment
/// adds the leading-order mean `|h_t|²` squared for the diagonal class.
pub fn sigma2_leading(t: f64, kind: FluctuationKind, h_t: Complex64, h_2t: Complex64, n: usize) -> Result<FluctuationPrediction> {
    if n == 0 {
        return Err(Error::InvalidDimension(0));
    }
    let nf = n as f64;
    let a = h_t.norm_sqr();
    let cross = cross_term(h_t, h_2t);
    let (variance, mean) = match kind {
        FluctuationKind::Diagonal => ((1.0 + cross - 3.0 * a * a) / (2.0 * nf), a),
        FluctuationKind::Column3 => ((1.0 + cross - 3.0 * a * a) / (2.0 * nf), 0.0),
        FluctuationKind::OffDiagonal => ((1.0 + a * a - cross) / (2.0 * nf), 0.0),
    };
    Ok(FluctuationPrediction { t, kind, second_moment: variance + mean * mean, variance, order: Order::Leading })
}

/// Exact predictions for all three classes on a fixed spectrum.
pub fn exact_for_spectrum(spec: &Spectrum, t: f64) -> Result<[FluctuationPrediction; 3]> {
    let f_t = ensembles::f_transform(spec, t).value;
    let f_2t = ensembles::f_transform(spec, 2.0 * t).value;
    let n = spec.dim();
    let mean_alpha = channel::alpha_from_spectrum(spec, t)?;
    let mut out = [FluctuationPrediction { t, kind: FluctuationKind::Diagonal, second_moment: 0.0, variance: 0.0, order: Order::Exact }; 3];
    for (slot, kind) in out.iter_mut().zip(FluctuationKind::ALL) {
        *slot = sigma2_exact(t, kind, f_t, f_2t, n, mean_alpha)?;
    }
    Ok(out)
}

/// Variance over both eigenvectors and spectra: the spectrum-conditional
/// exact variance averaged over `n_spectra` sampled spectra, plus (for the
/// diagonal class) the spectral variance of the conditional mean `α`.
/// `sampler(i)` must return spectrum `i` of the ensemble.
pub fn ensemble_sigma2<F>(kind: FluctuationKind, t: f64, n_spectra: usize, sampler: F) -> Result<f64>
where
    F: Fn(usize) -> Result<Spectrum> + Sync + Send,
{
    if n_spectra < 2 {
        return Err(Error::TooFewSamples { required: 2, got: n_spectra });
    }
    let per = parallel::map_indexed(n_spectra, |i| -> Result<(f64, f64)> {
        let spec = sampler(i)?;
        let pred = exact_for_spectrum(&spec, t)?;
        let p = pred.iter().find(|p| p.kind == kind).copied().unwrap_or(pred[0]);
        Ok((p.variance, channel::alpha_from_spectrum(&spec, t)?))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let conditional: Vec<f64> = per.iter().map(|p| p.0).collect();
    let alphas: Vec<f64> = per.iter().map(|p| p.1).collect();
    let mut total = stats::mean(&conditional);
    if kind == FluctuationKind::Diagonal {
        total += stats::variance(&alphas);
    }
    Ok(total)
}

/// Pooled statistics of one entry class at one time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    /// average of the per-entry unbiased variances
    pub variance: f64,
    /// bootstrap standard error of `variance`
    pub variance_stderr: f64,
    /// mean over draws of the class-averaged entry
    pub mean: f64,
    pub mean_stderr: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalFluctuations {
    pub t: f64,
    pub diagonal: ClassStats,
    pub column3: ClassStats,
    pub offdiagonal: ClassStats,
    /// sample mean of `Λ_00²` and its standard error
    pub second_moment_00: (f64, f64),
}

impl EmpiricalFluctuations {
    pub fn class(&self, kind: FluctuationKind) -> &ClassStats {
        match kind {
            FluctuationKind::Diagonal => &self.diagonal,
            FluctuationKind::Column3 => &self.column3,
            FluctuationKind::OffDiagonal => &self.offdiagonal,
        }
    }
}

pub const MIN_MC_SAMPLES: usize = 30;
const BOOTSTRAP_RESAMPLES: usize = 200;

/// Empirical variances of the channel entries over Haar draws for a fixed
/// spectrum, pooled by symmetry class, at every time in `times`.
pub fn monte_carlo_fluctuations(
    spec: &Spectrum,
    env: &EnvironmentSpec,
    times: &[f64],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<EmpiricalFluctuations>> {
    if n_samples < MIN_MC_SAMPLES {
        return Err(Error::TooFewSamples { required: MIN_MC_SAMPLES, got: n_samples });
    }
    let draws = channel::sample_ptms(spec, env, times, n_samples, seed)?;
    Ok(parallel::map_indexed(times.len(), |ti| {
        let slice: Vec<&PauliTransferMatrix> = draws.iter().map(|d| &d[ti]).collect();
        let boot_seed = rng::derive_seed(seed, ti as u64);
        let class_stats = |kind: FluctuationKind, stream: u64| class_statistics(&slice, kind, boot_seed, stream);
        let sq: Vec<f64> = slice.iter().map(|p| p.get(0, 0).powi(2)).collect();
        EmpiricalFluctuations {
            t: times[ti],
            diagonal: class_stats(FluctuationKind::Diagonal, 0),
            column3: class_stats(FluctuationKind::Column3, 1),
            offdiagonal: class_stats(FluctuationKind::OffDiagonal, 2),
            second_moment_00: (stats::mean(&sq), stats::stderr(&sq)),
        }
    }))
}

fn pooled_variance(draws: &[&PauliTransferMatrix], entries: &[(usize, usize)], idx: &[usize]) -> f64 {
    let n = idx.len() as f64;
    entries
        .iter()
        .map(|&(j, k)| {
            let mean = idx.iter().map(|&i| draws[i].get(j, k)).sum::<f64>() / n;
            idx.iter().map(|&i| (draws[i].get(j, k) - mean).powi(2)).sum::<f64>() / (n - 1.0)
        })
        .sum::<f64>()
        / entries.len() as f64
}

fn class_statistics(draws: &[&PauliTransferMatrix], kind: FluctuationKind, boot_seed: u64, stream: u64) -> ClassStats {
    let entries = kind.entries();
    let all: Vec<usize> = (0..draws.len()).collect();
    let variance = pooled_variance(draws, entries, &all);
    let mut boot_rng = rng::stream(boot_seed, stream);
    let variance_stderr =
        stats::bootstrap_stderr(draws.len(), BOOTSTRAP_RESAMPLES, &mut boot_rng, |idx| pooled_variance(draws, entries, idx));
    let per_draw: Vec<f64> = draws
        .iter()
        .map(|p| entries.iter().map(|&(j, k)| p.get(j, k)).sum::<f64>() / entries.len() as f64)
        .collect();
    ClassStats { variance, variance_stderr, mean: stats::mean(&per_draw), mean_stderr: stats::stderr(&per_draw) }
}
