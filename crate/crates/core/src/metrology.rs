//! Fisher information, Cramér–Rao bounds, peak search, noise thresholds and
//! regime classification.

use rayon::prelude::*;

use crate::noise::{NoiseSpec, NoisyModel};
use crate::protocols::{Correlation, ProtocolKind, ProtocolSpec, SpectralModel};
use crate::{Error, Result};

pub mod optimize;

/// Probability below which an outcome's contribution is taken from the
/// local curvature instead of `P'^2 / P`.
pub const FI_GUARD: f64 = 1e-9;

/// Coarse grid step of the peak search, in units of `1/omega_p`.
pub const PEAK_STEP: f64 = 0.05;

/// `P'^2 / P` with a guard for outcomes that (nearly) vanish.
///
/// Near a double zero `P ~ P'' x^2 / 2`, so `P'^2 / P -> 2 P''`; the guard
/// caps the ratio by that limit once `P` falls below [`FI_GUARD`].
fn contribution(p: f64, dp: f64, d2p: f64) -> f64 {
    let curvature = 2.0 * d2p.max(0.0);
    if p >= FI_GUARD {
        dp * dp / p
    } else if p > 0.0 {
        (dp * dp / p).min(curvature)
    } else {
        curvature
    }
}

/// Fisher information about `delta` of a prepared model.
pub fn fisher_from_model(model: &NoisyModel, delta: f64) -> f64 {
    let p = model.distribution(delta).as_array();
    let d1 = model.derivative(delta).as_array();
    let d2 = model.second_derivative(delta).as_array();
    (0..3).map(|m| contribution(p[m], d1[m], d2[m])).sum()
}

pub fn fisher_information(spec: &ProtocolSpec, spectral: &SpectralModel, noise: &NoiseSpec, delta: f64) -> Result<f64> {
    Ok(fisher_from_model(&NoisyModel::new(spec, spectral, noise)?, delta))
}

/// Variance bound `1 / (N F)`.
pub fn cramer_rao_bound(fisher: f64, shots: u64) -> Result<f64> {
    if fisher <= 0.0 {
        return Err(Error::ZeroInformation);
    }
    if shots == 0 {
        return Err(Error::InvalidParameter("shot count must be at least 1".into()));
    }
    Ok(1.0 / (shots as f64 * fisher))
}

/// Fisher information sampled on a delay grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FisherScan {
    pub label: String,
    pub delta_grid: Vec<f64>,
    pub values: Vec<f64>,
}

pub fn fisher_scan(model: &NoisyModel, label: impl Into<String>, grid: &[f64]) -> FisherScan {
    let values = grid.par_iter().map(|&d| fisher_from_model(model, d)).collect();
    FisherScan { label: label.into(), delta_grid: grid.to_vec(), values }
}

/// Evenly spaced grid from `lo` to `hi` inclusive with spacing at most `step`.
pub fn linspace(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = (((hi - lo) / step) - 1e-9).ceil().max(1.0) as usize;
    (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
}

/// Default peak search window.  The MZ protocols use the central fringe
/// `|delta| <= pi`.  HOM has no fringes and an even information curve, so
/// its window runs from 0 to five (noise-broadened) coherence widths.
pub fn default_window(spec: &ProtocolSpec, spectral: &SpectralModel, noise: &NoiseSpec) -> (f64, f64) {
    match spec.kind {
        ProtocolKind::Hom => {
            let s = spectral.sigma;
            let mut w = 5.0 * (1.0 + 4.0 * noise.eta_eps * noise.eta_eps * s * s).sqrt() / s;
            if spectral.correlation == Correlation::Independent {
                w *= std::f64::consts::SQRT_2;
            }
            (0.0, w)
        }
        _ => (-std::f64::consts::PI / spectral.pump, std::f64::consts::PI / spectral.pump),
    }
}

/// Global maximum of the Fisher information over `window`: a coarse grid with
/// spacing [`PEAK_STEP`], then golden-section refinement of the best local maxima.
pub fn peak_fisher_model(model: &NoisyModel, window: (f64, f64)) -> (f64, f64) {
    let (lo, hi) = window;
    let grid = linspace(lo, hi, PEAK_STEP);
    let vals: Vec<f64> = grid.par_iter().map(|&d| fisher_from_model(model, d)).collect();
    let h = if grid.len() > 1 { grid[1] - grid[0] } else { 0.0 };
    let mut candidates: Vec<usize> = (0..grid.len())
        .filter(|&k| {
            let left = k == 0 || vals[k - 1] <= vals[k];
            let right = k + 1 == grid.len() || vals[k + 1] <= vals[k];
            left && right
        })
        .collect();
    candidates.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    candidates.truncate(8);
    let mut best = (grid[0], vals[0]);
    for &k in &candidates {
        if vals[k] > best.1 {
            best = (grid[k], vals[k]);
        }
        if h == 0.0 {
            continue;
        }
        let a = (grid[k] - h).max(lo);
        let b = (grid[k] + h).min(hi);
        let (x, fx) = optimize::golden_max(|d| fisher_from_model(model, d), a, b, 1e-8);
        if fx > best.1 {
            best = (x, fx);
        }
    }
    best
}

/// Location and value of the largest Fisher information in `window`
/// (or [`default_window`] when `None`).
pub fn peak_fisher(
    spec: &ProtocolSpec,
    spectral: &SpectralModel,
    noise: &NoiseSpec,
    window: Option<(f64, f64)>,
) -> Result<(f64, f64)> {
    let model = NoisyModel::new(spec, spectral, noise)?;
    let w = window.unwrap_or_else(|| default_window(spec, spectral, noise));
    Ok(peak_fisher_model(&model, w))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoiseAxis {
    Eps,
    Theta,
}

impl NoiseAxis {
    pub fn name(self) -> &'static str {
        match self {
            NoiseAxis::Eps => "eps",
            NoiseAxis::Theta => "theta",
        }
    }

    /// Gaussian noise of strength `eta` on this axis only.
    pub fn noise(self, eta: f64) -> NoiseSpec {
        match self {
            NoiseAxis::Eps => NoiseSpec::gaussian(eta, 0.0),
            NoiseAxis::Theta => NoiseSpec::gaussian(0.0, eta),
        }
    }
}

/// Peak information with Gaussian noise `eta` on one axis.
pub fn peak_on_axis(spec: &ProtocolSpec, spectral: &SpectralModel, axis: NoiseAxis, eta: f64) -> Result<f64> {
    Ok(peak_fisher(spec, spectral, &axis.noise(eta), None)?.1)
}

/// Noise strength at which the peak information falls to half its noiseless value.
pub fn half_noise_threshold(spec: &ProtocolSpec, spectral: &SpectralModel, axis: NoiseAxis) -> Result<f64> {
    let no_decay = || Error::NoDecayAxis { protocol: spec.kind.name().to_string(), axis: axis.name().to_string() };
    if spec.kind == ProtocolKind::Hom && axis == NoiseAxis::Theta {
        return Err(no_decay());
    }
    let f0 = peak_on_axis(spec, spectral, axis, 0.0)?;
    let ratio = |eta: f64| -> Result<f64> { Ok(peak_on_axis(spec, spectral, axis, eta)? / f0 - 0.5) };
    let mut hi = 0.25;
    while ratio(hi)? > 0.0 {
        hi *= 1.5;
        if hi > 1e4 {
            return Err(no_decay());
        }
    }
    // the peak must decay monotonically across the bracket
    let samples: Vec<f64> = (0..=8).map(|k| hi * k as f64 / 8.0).collect();
    let values = samples.par_iter().map(|&e| ratio(e)).collect::<Result<Vec<f64>>>()?;
    if values.windows(2).any(|w| w[1] > w[0] + 1e-9) {
        return Err(Error::NonMonotoneDecay { lo: 0.0, hi });
    }
    let k = values.iter().position(|&v| v <= 0.0).unwrap_or(8).max(1);
    optimize::bisect(|e| ratio(e), samples[k - 1], samples[k], 1e-5)
}

/// Optimal protocol for a noise level, by comparison of peak information.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    /// MZ2d is best.
    Low,
    /// Two independent single-photon runs are best.
    Moderate,
    /// HOM is best.
    High,
}

impl Regime {
    pub fn protocol(self) -> &'static str {
        match self {
            Regime::Low => "MZ2d",
            Regime::Moderate => "2xMZ1",
            Regime::High => "HOM",
        }
    }
}

/// Peak information of MZ2d, two MZ1 runs and HOM at a given noise level.
pub fn regime_peaks(noise: &NoiseSpec, alpha: f64, spectral: &SpectralModel) -> Result<[f64; 3]> {
    let kinds = [ProtocolKind::Mz2d, ProtocolKind::Mz1, ProtocolKind::Hom];
    let peaks = kinds
        .par_iter()
        .map(|&k| Ok(peak_fisher(&ProtocolSpec::new(k, alpha), spectral, noise, None)?.1))
        .collect::<Result<Vec<f64>>>()?;
    Ok([peaks[0], 2.0 * peaks[1], peaks[2]])
}

/// Best protocol among MZ2d, 2xMZ1 and HOM; ties go to the higher-noise choice.
pub fn classify_regime(noise: &NoiseSpec, alpha: f64, spectral: &SpectralModel) -> Result<Regime> {
    let [mz2d, mz1x2, hom] = regime_peaks(noise, alpha, spectral)?;
    Ok(if hom >= mz2d.max(mz1x2) {
        Regime::High
    } else if mz1x2 >= mz2d {
        Regime::Moderate
    } else {
        Regime::Low
    })
}

/// Noise strengths on `axis` where MZ2d hands over to 2xMZ1 and 2xMZ1 hands
/// over to HOM.  Found by scanning `eta` up to `eta_max` and bisecting each
/// first sign change.
pub fn regime_crossovers(axis: NoiseAxis, alpha: f64, spectral: &SpectralModel, eta_max: f64) -> Result<(f64, f64)> {
    let diffs = |eta: f64| -> Result<(f64, f64)> {
        let [a, b, c] = regime_peaks(&axis.noise(eta), alpha, spectral)?;
        Ok((a - b, b - c))
    };
    let grid = linspace(0.0, eta_max, 0.1);
    let values = grid.par_iter().map(|&e| diffs(e)).collect::<Result<Vec<_>>>()?;
    let find = |pick: fn(&(f64, f64)) -> f64| -> Result<f64> {
        let k = (1..grid.len())
            .find(|&k| pick(&values[k - 1]) > 0.0 && pick(&values[k]) <= 0.0)
            .ok_or(Error::InvalidParameter(format!("no crossover below eta = {eta_max}")))?;
        optimize::bisect(|e| Ok(pick(&diffs(e)?)), grid[k - 1], grid[k], 1e-5)
    };
    Ok((find(|v| v.0)?, find(|v| v.1)?))
}
