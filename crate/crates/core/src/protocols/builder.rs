//! Exact probability terms built from the mode transformations.
//!
//! Photon A is the one that always occupies the e mode; photon B is in the
//! e mode with amplitude `sqrt(alpha)` and in the f mode with
//! `sqrt(1 - alpha)`.  Frequencies are written relative to half the pump:
//! for entangled pairs A sits at `wp/2 - nu` and B at `wp/2 + nu`, for
//! independent photons B sits at `wp/2 + nu1` and A at `wp/2 + nu2`.

use num_complex::Complex64 as C64;

use super::{Arm, Arms, Correlation, Mode, NoisePlacement, NoiseVariable, ProbabilityTerms, ProtocolKind, ProtocolSpec, ShiftKind, SpectralModel, DELTA};
use crate::term_algebra::{ComplexSum, GaussTerm, TermSum};
use crate::Result;

const NU: &str = "nu";
const NU1: &str = "nu1";
const NU2: &str = "nu2";

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

/// Beam splitter, `B[row][col]`.  Used for the input side with
/// row = port and col = arm, and for the output side with row = arm and
/// col = detector.
fn splitter() -> [[C64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [[c(0.0, h), c(h, 0.0)], [c(h, 0.0), c(0.0, h)]]
}

fn identity() -> [[C64; 2]; 2] {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

/// Which photon and which of its modes a phase belongs to.
#[derive(Clone, Copy)]
struct PhotonMode {
    /// Frequency variable and sign: `w = wp/2 + sign * var`.
    freq_var: &'static str,
    sign: f64,
    mode: Mode,
}

struct Builder<'a> {
    spec: &'a ProtocolSpec,
    pump: f64,
    vars: Vec<String>,
}

impl Builder<'_> {
    fn idx(&self, name: &str) -> usize {
        self.vars.iter().position(|v| v == name).expect("variable registered")
    }

    fn noise_name(&self, kind: ShiftKind, mode: Mode, arm: Arm) -> &'static str {
        let mode = match self.spec.effective_placement() {
            NoisePlacement::ModeCorrelated => Mode::Shared,
            NoisePlacement::ModeUncorrelated => mode,
        };
        NoiseVariable { kind, mode, arm }.name()
    }

    /// `exp(-i w T - i theta)` with `T` the sum of the listed delay variables.
    fn phase(&self, pm: PhotonMode, delays: &[&str], theta: Option<&str>) -> GaussTerm {
        let n = self.vars.len();
        let mut t = GaussTerm::constant(n, c(1.0, 0.0));
        let f = self.idx(pm.freq_var);
        for d in delays {
            let k = self.idx(d);
            t.add_lin(k, c(0.0, -0.5 * self.pump));
            t.add_quad(f, k, c(0.0, pm.sign));
        }
        if let Some(th) = theta {
            t.add_lin(self.idx(th), c(0.0, -1.0));
        }
        t
    }

    /// Phase picked up in arm 0 (upper, noise) or arm 1 (lower, delay).
    fn arm_phase(&self, pm: PhotonMode, arm: usize) -> GaussTerm {
        let two_arm = matches!(self.spec.arms, Arms::Both { .. });
        if arm == 0 {
            let e = self.noise_name(ShiftKind::Eps, pm.mode, Arm::Upper);
            let th = self.noise_name(ShiftKind::Theta, pm.mode, Arm::Upper);
            self.phase(pm, &[e], Some(th))
        } else if two_arm {
            let e = self.noise_name(ShiftKind::Eps, pm.mode, Arm::Lower);
            let th = self.noise_name(ShiftKind::Theta, pm.mode, Arm::Lower);
            self.phase(pm, &[DELTA, e], Some(th))
        } else {
            self.phase(pm, &[DELTA], None)
        }
    }

    /// Amplitudes to reach detector 0 and detector 1 from `port`.
    fn transfer(&self, pm: PhotonMode, port: usize) -> [ComplexSum; 2] {
        let b_in = if self.spec.kind == ProtocolKind::Hom { identity() } else { splitter() };
        let b_out = splitter();
        let phases = [self.arm_phase(pm, 0), self.arm_phase(pm, 1)];
        let make = |det: usize| {
            let mut terms = Vec::new();
            for (arm, ph) in phases.iter().enumerate() {
                let coeff = b_in[port][arm] * b_out[arm][det];
                if coeff != c(0.0, 0.0) {
                    let mut t = ph.clone();
                    t.add_log_amp(coeff.ln());
                    terms.push(t);
                }
            }
            ComplexSum::from_terms(self.vars.clone(), terms)
        };
        [make(0), make(1)]
    }

    /// Normalized Gaussian spectral amplitude in `var`.
    fn spectrum(&self, var: &str, sigma: f64) -> GaussTerm {
        let n = self.vars.len();
        let mut t = GaussTerm::constant(n, c(1.0, 0.0));
        let k = self.idx(var);
        t.add_log_amp(c(-0.25 * (2.0 * std::f64::consts::PI * sigma * sigma).ln(), 0.0));
        t.add_quad(k, k, c(1.0 / (2.0 * sigma * sigma), 0.0));
        t
    }
}

/// Builds `P1`, `P2` and `Pc` as exact term sums over `delta` and the
/// protocol's noise variables (see [`ProtocolSpec::noise_variables`]).
/// Variables that cancel, such as the phase shifts in HOM, are pruned.
pub fn build_probability_terms(spec: &ProtocolSpec, spectral: &SpectralModel) -> Result<ProbabilityTerms> {
    spec.validate()?;
    spectral.validate()?;
    match spec.kind {
        ProtocolKind::Mz1 => single_photon(spec, spectral),
        ProtocolKind::Mz1x2Correlated => {
            let one = single_photon(&ProtocolSpec { kind: ProtocolKind::Mz1, ..*spec }, spectral)?;
            Ok(ProbabilityTerms {
                p1: one.p1.multiply(&one.p1),
                p2: one.p2.multiply(&one.p2),
                pc: one.p1.multiply(&one.p2).scale(2.0),
            })
        }
        _ => two_photon(spec, spectral),
    }
}

fn base_vars(spec: &ProtocolSpec, freq: &[&str]) -> Vec<String> {
    let mut vars: Vec<String> = freq.iter().map(|s| s.to_string()).collect();
    vars.push(DELTA.to_string());
    vars.extend(spec.noise_variables().iter().map(|v| v.name().to_string()));
    vars
}

fn single_photon(spec: &ProtocolSpec, spectral: &SpectralModel) -> Result<ProbabilityTerms> {
    let b = Builder { spec, pump: spectral.pump, vars: base_vars(spec, &[NU]) };
    let pm = PhotonMode { freq_var: NU, sign: 1.0, mode: Mode::E };
    let phi = ComplexSum::from_terms(b.vars.clone(), vec![b.spectrum(NU, spectral.sigma)]);
    let [t0, t1] = b.transfer(pm, 0);
    let p1 = t0.mul(&phi).norm_sqr().integrate_unweighted(NU)?;
    let p2 = t1.mul(&phi).norm_sqr().integrate_unweighted(NU)?;
    let pc = TermSum::zero(&[]);
    Ok(ProbabilityTerms { p1, p2, pc })
}

fn two_photon(spec: &ProtocolSpec, spectral: &SpectralModel) -> Result<ProbabilityTerms> {
    let fe = spectral.correlation == Correlation::FrequencyEntangled;
    let freq: &[&str] = if fe { &[NU] } else { &[NU1, NU2] };
    let b = Builder { spec, pump: spectral.pump, vars: base_vars(spec, freq) };

    let (a_var, a_sign, b_var) = if fe { (NU, -1.0, NU) } else { (NU2, 1.0, NU1) };
    let mut phi = ComplexSum::from_terms(b.vars.clone(), vec![b.spectrum(freq[0], spectral.sigma)]);
    if !fe {
        phi = phi.mul(&ComplexSum::from_terms(b.vars.clone(), vec![b.spectrum(NU2, spectral.sigma)]));
    }

    let (port_a, port_b) = match spec.kind {
        ProtocolKind::Mz2s => (0, 0),
        _ => (0, 1),
    };
    let norm = if spec.kind == ProtocolKind::Mz2s { 1.0 / (1.0 + spec.alpha).sqrt() } else { 1.0 };

    let ta = b.transfer(PhotonMode { freq_var: a_var, sign: a_sign, mode: Mode::E }, port_a);
    let beta = [spec.alpha.sqrt(), (1.0 - spec.alpha).sqrt()];
    let mut amp: Vec<[[ComplexSum; 2]; 2]> = Vec::new();
    for (p, mode) in [Mode::E, Mode::F].into_iter().enumerate() {
        let tb = b.transfer(PhotonMode { freq_var: b_var, sign: 1.0, mode }, port_b);
        let scale = c(norm * beta[p], 0.0);
        let cell = |j: usize, k: usize| ta[j].mul(&tb[k]).mul(&phi).scale(scale);
        amp.push([[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]]);
    }
    let [ce, cf] = [&amp[0], &amp[1]];

    // exchange of the two photon labels: nu -> -nu, or nu1 <-> nu2
    let exchange = |s: &ComplexSum| if fe { s.reflect(NU) } else { s.swap(NU1, NU2) };

    let bunch = |j: usize| -> TermSum {
        let sym = ce[j][j].add(&exchange(&ce[j][j])).simplify();
        cf[j][j].norm_sqr().add(&sym.norm_sqr().scale(0.5)).simplify()
    };
    let p1 = bunch(0);
    let p2 = bunch(1);
    let cross = ce[0][1].add(&exchange(&ce[1][0])).simplify();
    let pc = cf[0][1].norm_sqr().add(&cf[1][0].norm_sqr()).add(&cross.norm_sqr()).simplify();

    let integrate = |s: TermSum| -> Result<TermSum> {
        let mut s = s;
        for v in freq {
            if s.index_of(v).is_some() {
                s = s.integrate_unweighted(v)?;
            }
        }
        Ok(s)
    };
    Ok(ProbabilityTerms { p1: integrate(p1)?, p2: integrate(p2)?, pc: integrate(pc)? })
}
