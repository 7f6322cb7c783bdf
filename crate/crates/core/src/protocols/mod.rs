//! Protocol definitions and fixed-shift detection probabilities.
//!
//! Four interferometric protocols are modelled (plus the correlated pair of
//! single-photon runs): HOM, where the photons meet at one beam splitter;
//! MZ2s and MZ2d, where a photon pair enters a Mach–Zehnder interferometer
//! through the same or through different ports; and MZ1 with one photon.
//! The upper arm carries the noise shifts `(eps, theta)` and the lower arm the
//! delay `delta`.

mod builder;
mod closed_form;

use crate::term_algebra::TermSum;
use crate::{Error, Result};

pub use builder::build_probability_terms;
pub use closed_form::closed_form_distribution;

/// Name of the delay variable in every probability [`TermSum`].
pub const DELTA: &str = "delta";

/// Photon frequency correlation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Correlation {
    /// Frequencies sum to the pump frequency.
    FrequencyEntangled,
    /// Frequencies drawn independently from the same spectrum.
    Independent,
}

/// Pump frequency, spectral width and photon frequency correlation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralModel {
    pub pump: f64,
    pub sigma: f64,
    pub correlation: Correlation,
}

impl SpectralModel {
    /// Spectrum with unit pump frequency.
    pub fn new(sigma: f64, correlation: Correlation) -> Result<Self> {
        let s = SpectralModel { pump: 1.0, sigma, correlation };
        s.validate()?;
        Ok(s)
    }

    pub fn entangled(sigma: f64) -> Result<Self> {
        Self::new(sigma, Correlation::FrequencyEntangled)
    }

    pub fn independent(sigma: f64) -> Result<Self> {
        Self::new(sigma, Correlation::Independent)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0) || !self.sigma.is_finite() {
            return Err(Error::InvalidParameter(format!("sigma must be positive, got {}", self.sigma)));
        }
        if !(self.pump > 0.0) || !self.pump.is_finite() {
            return Err(Error::InvalidParameter(format!("pump must be positive, got {}", self.pump)));
        }
        Ok(())
    }

    /// A warning when the spectrum is so broad that negative frequencies
    /// carry noticeable weight.
    pub fn warning(&self) -> Option<String> {
        (self.sigma > 0.25 * self.pump).then(|| {
            format!(
                "sigma/omega_p = {} exceeds 1/4; the Gaussian spectrum reaches far towards zero frequency",
                self.sigma / self.pump
            )
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ProtocolKind {
    Hom,
    Mz2s,
    Mz2d,
    Mz1,
    /// Two single-photon runs sharing the same noise shifts.
    Mz1x2Correlated,
}

impl ProtocolKind {
    pub const ALL: [ProtocolKind; 5] = [
        ProtocolKind::Hom,
        ProtocolKind::Mz2s,
        ProtocolKind::Mz2d,
        ProtocolKind::Mz1,
        ProtocolKind::Mz1x2Correlated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProtocolKind::Hom => "HOM",
            ProtocolKind::Mz2s => "MZ2s",
            ProtocolKind::Mz2d => "MZ2d",
            ProtocolKind::Mz1 => "MZ1",
            ProtocolKind::Mz1x2Correlated => "MZ1x2",
        }
    }

    pub fn is_single_photon(self) -> bool {
        matches!(self, ProtocolKind::Mz1 | ProtocolKind::Mz1x2Correlated)
    }
}

/// Whether the two orthogonal photonic modes of the upper arm share their shifts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NoisePlacement {
    ModeCorrelated,
    ModeUncorrelated,
}

/// Where the noise acts.  With `Both`, each fraction is the share of the
/// noise variance placed in the upper arm: the upper arm gets `sqrt(f) eta`
/// and the lower arm `sqrt(1 - f) eta`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Arms {
    Single,
    Both { eps_fraction: f64, theta_fraction: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProtocolSpec {
    pub kind: ProtocolKind,
    pub alpha: f64,
    pub placement: NoisePlacement,
    pub arms: Arms,
}

impl ProtocolSpec {
    /// Mode-correlated noise in the upper arm only.
    pub fn new(kind: ProtocolKind, alpha: f64) -> Self {
        ProtocolSpec { kind, alpha, placement: NoisePlacement::ModeCorrelated, arms: Arms::Single }
    }

    pub fn with_placement(mut self, placement: NoisePlacement) -> Self {
        self.placement = placement;
        self
    }

    pub fn with_arms(mut self, arms: Arms) -> Self {
        self.arms = arms;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::InvalidParameter(format!("alpha must lie in [0, 1], got {}", self.alpha)));
        }
        if let Arms::Both { eps_fraction, theta_fraction } = self.arms {
            for f in [eps_fraction, theta_fraction] {
                if !(0.0..=1.0).contains(&f) {
                    return Err(Error::InvalidParameter(format!("arm fraction must lie in [0, 1], got {f}")));
                }
            }
        }
        Ok(())
    }

    /// Single-photon protocols have one mode, so they always use the
    /// mode-correlated variable set.
    pub fn effective_placement(&self) -> NoisePlacement {
        if self.kind.is_single_photon() {
            NoisePlacement::ModeCorrelated
        } else {
            self.placement
        }
    }

    /// The noise variables that can appear in this protocol's terms.
    pub fn noise_variables(&self) -> Vec<NoiseVariable> {
        let modes: &[Mode] = match self.effective_placement() {
            NoisePlacement::ModeCorrelated => &[Mode::Shared],
            NoisePlacement::ModeUncorrelated => &[Mode::E, Mode::F],
        };
        let arms: &[Arm] = match self.arms {
            Arms::Single => &[Arm::Upper],
            Arms::Both { .. } => &[Arm::Upper, Arm::Lower],
        };
        let mut out = Vec::new();
        for &arm in arms {
            for &mode in modes {
                for kind in [ShiftKind::Eps, ShiftKind::Theta] {
                    out.push(NoiseVariable { kind, mode, arm });
                }
            }
        }
        out
    }

    /// Fraction of the noise variance carried by `arm` for shifts of `kind`.
    pub fn variance_fraction(&self, kind: ShiftKind, arm: Arm) -> f64 {
        match self.arms {
            Arms::Single => match arm {
                Arm::Upper => 1.0,
                Arm::Lower => 0.0,
            },
            Arms::Both { eps_fraction, theta_fraction } => {
                let f = match kind {
                    ShiftKind::Eps => eps_fraction,
                    ShiftKind::Theta => theta_fraction,
                };
                match arm {
                    Arm::Upper => f,
                    Arm::Lower => 1.0 - f,
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ShiftKind {
    /// Frequency-dependent shift, multiplies the optical frequency.
    Eps,
    /// Frequency-independent phase.
    Theta,
}

/// Which photonic mode a shift acts on.  `Shared` acts on both.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Shared,
    E,
    F,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Arm {
    Upper,
    Lower,
}

/// One noise shift variable of a protocol's probability terms.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct NoiseVariable {
    pub kind: ShiftKind,
    pub mode: Mode,
    pub arm: Arm,
}

impl NoiseVariable {
    pub fn name(&self) -> &'static str {
        use Arm::*;
        use Mode::*;
        use ShiftKind::*;
        match (self.kind, self.mode, self.arm) {
            (Eps, Shared, Upper) => "eps",
            (Theta, Shared, Upper) => "theta",
            (Eps, E, Upper) => "eps1",
            (Theta, E, Upper) => "theta1",
            (Eps, F, Upper) => "eps2",
            (Theta, F, Upper) => "theta2",
            (Eps, Shared, Lower) => "eps_lower",
            (Theta, Shared, Lower) => "theta_lower",
            (Eps, E, Lower) => "eps1_lower",
            (Theta, E, Lower) => "theta1_lower",
            (Eps, F, Lower) => "eps2_lower",
            (Theta, F, Lower) => "theta2_lower",
        }
    }
}

/// The shifts seen by one photonic mode of one arm.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ModeShift {
    pub eps: f64,
    pub theta: f64,
}

/// Fixed noise shifts.  Mode-correlated protocols read `upper` (and `lower`
/// for two-arm noise); mode-uncorrelated ones read `upper` for the e mode and
/// `upper_f` for the f mode, likewise `lower` / `lower_f`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct FixedShifts {
    pub upper: ModeShift,
    pub upper_f: ModeShift,
    pub lower: ModeShift,
    pub lower_f: ModeShift,
}

impl FixedShifts {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The same `(eps, theta)` on both modes of the upper arm.
    pub fn correlated(eps: f64, theta: f64) -> Self {
        let s = ModeShift { eps, theta };
        FixedShifts { upper: s, upper_f: s, ..Self::default() }
    }

    /// Separate shifts for the e and f modes of the upper arm.
    pub fn uncorrelated(eps1: f64, theta1: f64, eps2: f64, theta2: f64) -> Self {
        FixedShifts {
            upper: ModeShift { eps: eps1, theta: theta1 },
            upper_f: ModeShift { eps: eps2, theta: theta2 },
            ..Self::default()
        }
    }

    /// Adds lower-arm shifts, shared by both modes.
    pub fn with_lower(mut self, eps: f64, theta: f64) -> Self {
        self.lower = ModeShift { eps, theta };
        self.lower_f = self.lower;
        self
    }

    /// The value this shift set assigns to a noise variable.
    pub fn value_of(&self, v: &NoiseVariable) -> f64 {
        let m = match (v.arm, v.mode) {
            (Arm::Upper, Mode::Shared | Mode::E) => self.upper,
            (Arm::Upper, Mode::F) => self.upper_f,
            (Arm::Lower, Mode::Shared | Mode::E) => self.lower,
            (Arm::Lower, Mode::F) => self.lower_f,
        };
        match v.kind {
            ShiftKind::Eps => m.eps,
            ShiftKind::Theta => m.theta,
        }
    }
}

/// Probabilities of the three detection events.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutcomeDistribution {
    /// Every photon at detector 1.
    pub p1: f64,
    /// Every photon at detector 2.
    pub p2: f64,
    /// One photon at each detector (always 0 for MZ1).
    pub pc: f64,
}

impl OutcomeDistribution {
    pub fn as_array(&self) -> [f64; 3] {
        [self.p1, self.p2, self.pc]
    }

    pub fn from_array(p: [f64; 3]) -> Self {
        OutcomeDistribution { p1: p[0], p2: p[1], pc: p[2] }
    }

    pub fn total(&self) -> f64 {
        self.p1 + self.p2 + self.pc
    }

    /// Clips rounding residue (of order 1e-16) into `[0, 1]`.
    pub fn clamped(self) -> Self {
        OutcomeDistribution { p1: self.p1.clamp(0.0, 1.0), p2: self.p2.clamp(0.0, 1.0), pc: self.pc.clamp(0.0, 1.0) }
    }
}

/// Per-outcome probability sums over `delta` and the noise variables.
#[derive(Clone, Debug, PartialEq)]
pub struct ProbabilityTerms {
    pub p1: TermSum,
    pub p2: TermSum,
    pub pc: TermSum,
}

impl ProbabilityTerms {
    pub fn outcomes(&self) -> [&TermSum; 3] {
        [&self.p1, &self.p2, &self.pc]
    }

    /// Applies `f` to each outcome.
    pub fn try_map(&self, mut f: impl FnMut(&TermSum) -> Result<TermSum>) -> Result<ProbabilityTerms> {
        Ok(ProbabilityTerms { p1: f(&self.p1)?, p2: f(&self.p2)?, pc: f(&self.pc)? })
    }

    pub fn map(&self, mut f: impl FnMut(&TermSum) -> TermSum) -> ProbabilityTerms {
        ProbabilityTerms { p1: f(&self.p1), p2: f(&self.p2), pc: f(&self.pc) }
    }

    pub fn evaluate(&self, assignment: &[(&str, f64)]) -> Result<OutcomeDistribution> {
        Ok(OutcomeDistribution {
            p1: self.p1.evaluate(assignment)?,
            p2: self.p2.evaluate(assignment)?,
            pc: self.pc.evaluate(assignment)?,
        })
    }
}

/// Fixed-shift model that keeps the terms around for repeated evaluation.
#[derive(Clone, Debug)]
pub struct FixedShiftModel {
    spec: ProtocolSpec,
    spectral: SpectralModel,
    noise_vars: Vec<NoiseVariable>,
    terms: Option<ProbabilityTerms>,
}

impl FixedShiftModel {
    pub fn new(spec: &ProtocolSpec, spectral: &SpectralModel) -> Result<Self> {
        spec.validate()?;
        spectral.validate()?;
        let terms = if closed_form::has_closed_form(spec, spectral) {
            None
        } else {
            Some(build_probability_terms(spec, spectral)?)
        };
        Ok(FixedShiftModel { spec: *spec, spectral: *spectral, noise_vars: spec.noise_variables(), terms })
    }

    pub fn spec(&self) -> &ProtocolSpec {
        &self.spec
    }

    pub fn distribution(&self, delta: f64, shifts: &FixedShifts) -> OutcomeDistribution {
        let d = match &self.terms {
            None => closed_form_distribution(&self.spec, &self.spectral, delta, shifts)
                .expect("closed form exists for this model"),
            Some(t) => {
                let mut assignment: Vec<(&str, f64)> = vec![(DELTA, delta)];
                for v in &self.noise_vars {
                    assignment.push((v.name(), shifts.value_of(v)));
                }
                t.evaluate(&assignment).expect("all variables assigned")
            }
        };
        d.clamped()
    }
}

/// Outcome probabilities at fixed shifts.  Uses the printed closed forms
/// where they exist and the exact term sums otherwise.
pub fn fixed_shift_distribution(
    spec: &ProtocolSpec,
    spectral: &SpectralModel,
    delta: f64,
    shifts: &FixedShifts,
) -> Result<OutcomeDistribution> {
    spec.validate()?;
    spectral.validate()?;
    if let Some(d) = closed_form_distribution(spec, spectral, delta, shifts) {
        return Ok(d.clamped());
    }
    let terms = build_probability_terms(spec, spectral)?;
    let model = FixedShiftModel { spec: *spec, spectral: *spectral, noise_vars: spec.noise_variables(), terms: Some(terms) };
    Ok(model.distribution(delta, shifts))
}

/// Two single-photon runs that see identical shifts: both photons at D1
/// with `P1^2`, both at D2 with `P2^2`, one each with `2 P1 P2`.
pub fn mz1x2_distribution(spectral: &SpectralModel, delta: f64, shifts: &FixedShifts) -> OutcomeDistribution {
    let s = closed_form::mz1(spectral, delta, shifts.upper.eps, shifts.upper.theta);
    OutcomeDistribution { p1: s.p1 * s.p1, p2: s.p2 * s.p2, pc: 2.0 * s.p1 * s.p2 }.clamped()
}
