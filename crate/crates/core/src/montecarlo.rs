//! Shot-level simulation: per-shot noise draws, outcome sampling and a
//! maximum-likelihood delay estimator.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::metrology::{fisher_from_model, linspace, optimize};
use crate::noise::{NoiseSpec, NoisyModel, ThetaDistribution};
use crate::protocols::{Arm, FixedShiftModel, FixedShifts, Mode, ModeShift, ProtocolSpec, ShiftKind, SpectralModel};
use crate::{Error, Result};

/// Shots per parallel work unit.
const CHUNK: u64 = 4096;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrialConfig {
    pub shots: u64,
    pub seed: u64,
    pub delta: f64,
    pub spec: ProtocolSpec,
    pub spectral: SpectralModel,
    pub noise: NoiseSpec,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ShotCounts {
    pub n1: u64,
    pub n2: u64,
    pub nc: u64,
}

impl ShotCounts {
    pub fn total(&self) -> u64 {
        self.n1 + self.n2 + self.nc
    }

    pub fn as_array(&self) -> [u64; 3] {
        [self.n1, self.n2, self.nc]
    }

    fn merge(self, o: ShotCounts) -> ShotCounts {
        ShotCounts { n1: self.n1 + o.n1, n2: self.n2 + o.n2, nc: self.nc + o.nc }
    }
}

/// Generator for one shot.  Every shot has its own ChaCha stream under a
/// key derived from the seed, so results do not depend on how shots are
/// split between threads.
fn shot_rng(key: [u8; 32], shot: u64) -> ChaCha8Rng {
    let mut r = ChaCha8Rng::from_seed(key);
    r.set_stream(shot);
    r
}

/// Von Mises draw with concentration `kappa` (Best & Fisher rejection).
pub fn sample_von_mises<R: Rng + ?Sized>(rng: &mut R, kappa: f64) -> f64 {
    if kappa < 1e-8 {
        return PI * (2.0 * rng.random::<f64>() - 1.0);
    }
    let tau = 1.0 + (1.0 + 4.0 * kappa * kappa).sqrt();
    let rho = (tau - (2.0 * tau).sqrt()) / (2.0 * kappa);
    let r = (1.0 + rho * rho) / (2.0 * rho);
    loop {
        let u1: f64 = rng.random();
        let z = (PI * u1).cos();
        let f = (1.0 + r * z) / (r + z);
        let c = kappa * (r - f);
        let u2: f64 = rng.random();
        if c * (2.0 - c) - u2 > 0.0 || (c / u2).ln() + 1.0 - c >= 0.0 {
            let u3: f64 = rng.random();
            let theta = f.clamp(-1.0, 1.0).acos();
            return if u3 > 0.5 { theta } else { -theta };
        }
    }
}

fn wrap(theta: f64) -> f64 {
    (theta + PI).rem_euclid(2.0 * PI) - PI
}

fn draw_theta<R: Rng + ?Sized>(rng: &mut R, eta: f64, dist: ThetaDistribution) -> f64 {
    if eta == 0.0 {
        return 0.0;
    }
    match dist {
        ThetaDistribution::Gaussian => eta * rng.sample::<f64, _>(StandardNormal),
        ThetaDistribution::WrappedGaussian => wrap(eta * rng.sample::<f64, _>(StandardNormal)),
        ThetaDistribution::VonMises => sample_von_mises(rng, 1.0 / (eta * eta)),
    }
}

/// Draws the shifts of one shot.  Mode-correlated noise reuses one pair of
/// draws for both modes.
fn draw_shifts<R: Rng + ?Sized>(rng: &mut R, spec: &ProtocolSpec, noise: &NoiseSpec) -> FixedShifts {
    let mut s = FixedShifts::zero();
    for v in spec.noise_variables() {
        let f = spec.variance_fraction(v.kind, v.arm).sqrt();
        let x = match v.kind {
            ShiftKind::Eps => noise.eta_eps * f * rng.sample::<f64, _>(StandardNormal),
            ShiftKind::Theta => draw_theta(rng, noise.eta_theta * f, noise.theta_dist),
        };
        let put = |m: &mut ModeShift| match v.kind {
            ShiftKind::Eps => m.eps = x,
            ShiftKind::Theta => m.theta = x,
        };
        match (v.arm, v.mode) {
            (Arm::Upper, Mode::Shared) => {
                put(&mut s.upper);
                put(&mut s.upper_f);
            }
            (Arm::Upper, Mode::E) => put(&mut s.upper),
            (Arm::Upper, Mode::F) => put(&mut s.upper_f),
            (Arm::Lower, Mode::Shared) => {
                put(&mut s.lower);
                put(&mut s.lower_f);
            }
            (Arm::Lower, Mode::E) => put(&mut s.lower),
            (Arm::Lower, Mode::F) => put(&mut s.lower_f),
        }
    }
    s
}

/// Simulates `cfg.shots` detection events.
pub fn sample_outcomes(cfg: &TrialConfig) -> Result<ShotCounts> {
    if cfg.shots == 0 {
        return Err(Error::InvalidParameter("shot count must be at least 1".into()));
    }
    cfg.noise.validate()?;
    let model = FixedShiftModel::new(&cfg.spec, &cfg.spectral)?;
    let key = ChaCha8Rng::seed_from_u64(cfg.seed).get_seed();
    let chunks = cfg.shots.div_ceil(CHUNK);
    let counts = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut out = ShotCounts::default();
            for shot in c * CHUNK..((c + 1) * CHUNK).min(cfg.shots) {
                let mut rng = shot_rng(key, shot);
                let shifts = draw_shifts(&mut rng, &cfg.spec, &cfg.noise);
                let p = model.distribution(cfg.delta, &shifts);
                let u: f64 = rng.random();
                if u < p.p1 {
                    out.n1 += 1;
                } else if u < p.p1 + p.p2 {
                    out.n2 += 1;
                } else {
                    out.nc += 1;
                }
            }
            out
        })
        .reduce(ShotCounts::default, ShotCounts::merge);
    Ok(counts)
}

/// Multinomial log-likelihood of `counts` at `delta`.
pub fn log_likelihood(model: &NoisyModel, counts: &ShotCounts, delta: f64) -> f64 {
    let p = model.distribution(delta).as_array();
    let n = counts.as_array();
    let mut l = 0.0;
    for m in 0..3 {
        if n[m] > 0 {
            l += n[m] as f64 * p[m].max(1e-300).ln();
        }
    }
    l
}

/// Maximum-likelihood delay inside `window`: grid search, then golden-section
/// refinement around the best grid point.
pub fn estimate_delay_mle(model: &NoisyModel, counts: &ShotCounts, window: (f64, f64)) -> Result<f64> {
    let (lo, hi) = window;
    if !(hi >= lo) {
        return Err(Error::InvalidParameter(format!("empty window [{lo}, {hi}]")));
    }
    let step = ((hi - lo) / 400.0).min(0.05).max(1e-9);
    let grid = linspace(lo, hi, step);
    let vals: Vec<f64> = grid.iter().map(|&d| log_likelihood(model, counts, d)).collect();
    let max = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    if grid.len() > 1 && max - min <= 1e-12 {
        return Err(Error::FlatLikelihood);
    }
    let k = vals.iter().position(|&v| v == max).unwrap();
    if grid.len() == 1 {
        return Ok(grid[0]);
    }
    let a = grid[k.saturating_sub(1)];
    let b = grid[(k + 1).min(grid.len() - 1)];
    let (x, _) = optimize::golden_max(|d| log_likelihood(model, counts, d), a, b, 1e-9);
    Ok(x)
}

/// Repeated-trial estimator study.
#[derive(Clone, Debug, PartialEq)]
pub struct MleStudy {
    pub estimates: Vec<f64>,
    pub mean: f64,
    /// Sample variance (`n - 1` denominator).
    pub variance: f64,
    pub fisher: f64,
    pub crb: f64,
}

impl MleStudy {
    pub fn ratio(&self) -> f64 {
        self.variance / self.crb
    }
}

/// Runs `trials` independent experiments of `cfg.shots` shots; trial `t`
/// uses seed `cfg.seed + t`.
pub fn mle_study(cfg: &TrialConfig, trials: usize, window: (f64, f64)) -> Result<MleStudy> {
    if trials < 2 {
        return Err(Error::InvalidParameter("an estimator study needs at least two trials".into()));
    }
    let model = NoisyModel::new(&cfg.spec, &cfg.spectral, &cfg.noise)?;
    let estimates = (0..trials as u64)
        .into_par_iter()
        .map(|t| {
            let c = TrialConfig { seed: cfg.seed.wrapping_add(t), ..*cfg };
            estimate_delay_mle(&model, &sample_outcomes(&c)?, window)
        })
        .collect::<Result<Vec<f64>>>()?;
    let n = estimates.len() as f64;
    let mean = estimates.iter().sum::<f64>() / n;
    let variance = estimates.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n - 1.0);
    let fisher = fisher_from_model(&model, cfg.delta);
    let crb = crate::metrology::cramer_rao_bound(fisher, cfg.shots)?;
    Ok(MleStudy { estimates, mean, variance, fisher, crb })
}
