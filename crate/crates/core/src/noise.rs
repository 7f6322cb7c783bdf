//! Noise-averaged detection probabilities.
//!
//! Frequency-dependent shifts are always Gaussian and are integrated in
//! closed form.  Phase shifts can follow a Gaussian, a wrapped Gaussian or a
//! von Mises law; the last two are averaged numerically.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::protocols::{
    build_probability_terms, OutcomeDistribution, ProbabilityTerms, ProtocolKind, ProtocolSpec, ShiftKind,
    SpectralModel, DELTA,
};
use crate::quadrature::gauss_legendre;
use crate::special::bessel_i0e;
use crate::term_algebra::TermSum;
use crate::{Error, Result};

/// Distribution family of the frequency-independent phase shifts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum ThetaDistribution {
    #[default]
    Gaussian,
    WrappedGaussian,
    VonMises,
}

impl ThetaDistribution {
    pub fn name(self) -> &'static str {
        match self {
            ThetaDistribution::Gaussian => "gaussian",
            ThetaDistribution::WrappedGaussian => "wrapped",
            ThetaDistribution::VonMises => "vonmises",
        }
    }
}

/// Noise strengths: `eta_eps` in units of `1/omega_p`, `eta_theta` in radians.
/// For the von Mises family `eta_theta` sets the concentration `1/eta_theta^2`.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct NoiseSpec {
    pub eta_eps: f64,
    pub eta_theta: f64,
    pub theta_dist: ThetaDistribution,
}

impl NoiseSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn gaussian(eta_eps: f64, eta_theta: f64) -> Self {
        NoiseSpec { eta_eps, eta_theta, theta_dist: ThetaDistribution::Gaussian }
    }

    pub fn with_distribution(mut self, d: ThetaDistribution) -> Self {
        self.theta_dist = d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eta_eps", self.eta_eps), ("eta_theta", self.eta_theta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite and >= 0, got {v}")));
            }
        }
        Ok(())
    }

    fn eta(&self, kind: ShiftKind) -> f64 {
        match kind {
            ShiftKind::Eps => self.eta_eps,
            ShiftKind::Theta => self.eta_theta,
        }
    }
}

/// Noise-averaged probabilities and their first two delay derivatives, kept
/// as exact sums in `delta`.
#[derive(Clone, Debug)]
pub struct NoisyModel {
    spec: ProtocolSpec,
    probs: ProbabilityTerms,
    first: ProbabilityTerms,
    second: ProbabilityTerms,
}

impl NoisyModel {
    pub fn new(spec: &ProtocolSpec, spectral: &SpectralModel, noise: &NoiseSpec) -> Result<Self> {
        noise.validate()?;
        let terms = build_probability_terms(spec, spectral)?;
        let probs = terms.try_map(|s| average(s, spec, noise, false))?;
        Ok(Self::from_terms(spec, probs))
    }

    /// The `eta_theta -> infinity` limit.  `noise.eta_theta` and the theta
    /// family are ignored: every term carrying a phase variable averages to
    /// zero in the limit.
    pub fn high_theta_limit(spec: &ProtocolSpec, spectral: &SpectralModel, noise: &NoiseSpec) -> Result<Self> {
        noise.validate()?;
        let terms = build_probability_terms(spec, spectral)?;
        let probs = terms.try_map(|s| average(s, spec, noise, true))?;
        Ok(Self::from_terms(spec, probs))
    }

    fn from_terms(spec: &ProtocolSpec, probs: ProbabilityTerms) -> Self {
        let first = probs.map(|s| s.differentiate(DELTA).simplify());
        let second = first.map(|s| s.differentiate(DELTA).simplify());
        NoisyModel { spec: *spec, probs, first, second }
    }

    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    /// Probability sums over `delta` (or constants).
    pub fn terms(&self) -> &ProbabilityTerms {
        &self.probs
    }

    pub fn distribution(&self, delta: f64) -> OutcomeDistribution {
        eval3(&self.probs, delta).clamped()
    }

    /// `dP/d delta` for the three outcomes.
    pub fn derivative(&self, delta: f64) -> OutcomeDistribution {
        eval3(&self.first, delta)
    }

    pub fn second_derivative(&self, delta: f64) -> OutcomeDistribution {
        eval3(&self.second, delta)
    }
}

fn eval_at(s: &TermSum, delta: f64) -> f64 {
    match s.vars().len() {
        0 => s.evaluate_ordered(&[]),
        _ => s.evaluate_ordered(&[delta]),
    }
}

fn eval3(t: &ProbabilityTerms, delta: f64) -> OutcomeDistribution {
    OutcomeDistribution { p1: eval_at(&t.p1, delta), p2: eval_at(&t.p2, delta), pc: eval_at(&t.pc, delta) }
}

/// Integrates every noise variable out of `s`.
fn average(s: &TermSum, spec: &ProtocolSpec, noise: &NoiseSpec, theta_limit: bool) -> Result<TermSum> {
    let mut s = s.clone();
    let vars = spec.noise_variables();
    if theta_limit {
        for v in vars.iter().filter(|v| v.kind == ShiftKind::Theta) {
            s = s.drop_dependent(v.name());
        }
    }
    for v in &vars {
        if s.index_of(v.name()).is_none() {
            continue;
        }
        let eta = noise.eta(v.kind) * spec.variance_fraction(v.kind, v.arm).sqrt();
        s = match (v.kind, noise.theta_dist) {
            (ShiftKind::Eps, _) | (ShiftKind::Theta, ThetaDistribution::Gaussian) => {
                s.integrate_gaussian(v.name(), eta)?
            }
            _ if eta == 0.0 => s.integrate_gaussian(v.name(), 0.0)?,
            (ShiftKind::Theta, ThetaDistribution::VonMises) => {
                s.average_linear(v.name(), |b| von_mises_average(b, eta))?
            }
            (ShiftKind::Theta, ThetaDistribution::WrappedGaussian) => {
                s.average_linear(v.name(), |b| wrapped_gaussian_average(b, eta))?
            }
        };
    }
    debug_assert!(s.vars().iter().all(|v| v == DELTA));
    Ok(s)
}

const GL_START: usize = 64;
const GL_CAP: usize = 4096;
const GL_RTOL: f64 = 1e-10;
/// Absolute floor of the stopping rule, relative to `int |f|`.  Strongly
/// oscillating averages cancel to far below the integrand's size, and a
/// relative test alone cannot settle under rounding noise.
const GL_ATOL: f64 = 1e-15;

/// `int_{-l}^{l} f` by Gauss–Legendre, doubling the node count until two
/// successive results agree to `GL_RTOL` (or to `GL_ATOL` of `int |f|`).
fn adaptive_legendre(l: f64, f: impl Fn(f64) -> C64) -> Result<C64> {
    let rule = |n: usize| -> (C64, f64) {
        let (x, w) = gauss_legendre(n);
        x.iter().zip(&w).fold((C64::new(0.0, 0.0), 0.0), |(s, a), (x, w)| {
            let v = f(l * x) * (w * l);
            (s + v, a + v.norm())
        })
    };
    let mut n = GL_START;
    let (mut prev, _) = rule(n);
    while n < GL_CAP {
        n *= 2;
        let (next, scale) = rule(n);
        if (next - prev).norm() <= GL_RTOL * next.norm() + GL_ATOL * scale {
            return Ok(next);
        }
        prev = next;
    }
    Err(Error::QuadratureNotConverged { nodes: n })
}

/// `E[exp(b theta)]` for the von Mises law with concentration `1/eta^2` on `[-pi, pi]`.
pub fn von_mises_average(b: C64, eta: f64) -> Result<C64> {
    let kappa = 1.0 / (eta * eta);
    let l = if 80.0 * eta * eta < 2.0 { (1.0 - 80.0 * eta * eta).acos() } else { PI };
    let norm = 2.0 * PI * bessel_i0e(kappa);
    adaptive_legendre(l, |t| (b * t).exp() * ((-2.0 * kappa * (0.5 * t).sin().powi(2)).exp() / norm))
}

/// `E[exp(b theta)]` for a Gaussian of width `eta` wrapped onto `[-pi, pi]`.
pub fn wrapped_gaussian_average(b: C64, eta: f64) -> Result<C64> {
    let l = (12.0 * eta).min(PI);
    let inv = 1.0 / ((2.0 * PI).sqrt() * eta);
    // images whose weight on [-pi, pi] stays above 1e-16 of the peak
    let mut kmax = 0i64;
    while {
        let gap = 2.0 * PI * (kmax + 1) as f64 - PI;
        (-0.5 * gap * gap / (eta * eta)).exp() >= 1e-16
    } {
        kmax += 1;
    }
    adaptive_legendre(l, |t| {
        let mut dens = 0.0;
        for k in -kmax..=kmax {
            let x = t + 2.0 * PI * k as f64;
            dens += (-0.5 * x * x / (eta * eta)).exp();
        }
        (b * t).exp() * (dens * inv)
    })
}

/// Noise-averaged outcome probabilities at one delay.
pub fn noisy_distribution(
    spec: &ProtocolSpec,
    spectral: &SpectralModel,
    noise: &NoiseSpec,
    delta: f64,
) -> Result<OutcomeDistribution> {
    Ok(NoisyModel::new(spec, spectral, noise)?.distribution(delta))
}

/// Outcome probabilities in the limit of infinitely strong phase noise.
/// HOM has no phase dependence and is rejected.
pub fn high_theta_limit_distribution(
    spec: &ProtocolSpec,
    spectral: &SpectralModel,
    noise: &NoiseSpec,
    delta: f64,
) -> Result<OutcomeDistribution> {
    if spec.kind == ProtocolKind::Hom {
        return Err(Error::InvalidParameter("HOM does not depend on the phase shifts".into()));
    }
    Ok(NoisyModel::high_theta_limit(spec, spectral, noise)?.distribution(delta))
}
