//! Closed-form fixed-shift probabilities for entangled pairs with
//! mode-correlated noise in the upper arm, and for the single photon.

use super::{Arms, Correlation, FixedShifts, NoisePlacement, OutcomeDistribution, ProtocolKind, ProtocolSpec, SpectralModel};

pub(crate) fn has_closed_form(spec: &ProtocolSpec, spectral: &SpectralModel) -> bool {
    if spec.arms != Arms::Single {
        return false;
    }
    match spec.kind {
        ProtocolKind::Mz1 | ProtocolKind::Mz1x2Correlated => true,
        _ => {
            spectral.correlation == Correlation::FrequencyEntangled
                && spec.placement == NoisePlacement::ModeCorrelated
        }
    }
}

pub(crate) fn mz1(spectral: &SpectralModel, delta: f64, eps: f64, theta: f64) -> OutcomeDistribution {
    let d = delta - eps;
    let s = spectral.sigma;
    let fringe = (-0.5 * s * s * d * d).exp() * (theta - 0.5 * spectral.pump * d).cos();
    OutcomeDistribution { p1: 0.5 - 0.5 * fringe, p2: 0.5 + 0.5 * fringe, pc: 0.0 }
}

/// Printed closed forms, or `None` when the model has none.
pub fn closed_form_distribution(
    spec: &ProtocolSpec,
    spectral: &SpectralModel,
    delta: f64,
    shifts: &FixedShifts,
) -> Option<OutcomeDistribution> {
    if !has_closed_form(spec, spectral) {
        return None;
    }
    let eps = shifts.upper.eps;
    let theta = shifts.upper.theta;
    let d = delta - eps;
    let s2 = spectral.sigma * spectral.sigma;
    let g2 = (-2.0 * s2 * d * d).exp();
    let a = spec.alpha;
    let wd = spectral.pump * d;
    Some(match spec.kind {
        ProtocolKind::Hom => {
            let p = 0.25 * (1.0 + a * g2);
            OutcomeDistribution { p1: p, p2: p, pc: 0.5 * (1.0 - a * g2) }
        }
        ProtocolKind::Mz2s => {
            let c2 = (2.0 * theta - wd).cos();
            let c1 = 4.0 * (-0.5 * s2 * d * d).exp() * (theta - 0.5 * wd).cos();
            OutcomeDistribution {
                p1: (2.0 + g2 + c2 - c1) / 8.0,
                p2: (2.0 + g2 + c2 + c1) / 8.0,
                pc: 0.25 * (2.0 - c2 - g2),
            }
        }
        ProtocolKind::Mz2d => {
            let c2 = (2.0 * theta - wd).cos();
            let p = (2.0 - (1.0 - a) * g2 - (1.0 + a) * c2) / 8.0;
            OutcomeDistribution { p1: p, p2: p, pc: 0.25 * (2.0 + (1.0 - a) * g2 + (1.0 + a) * c2) }
        }
        ProtocolKind::Mz1 => mz1(spectral, delta, eps, theta),
        ProtocolKind::Mz1x2Correlated => super::mz1x2_distribution(spectral, delta, shifts),
    })
}
