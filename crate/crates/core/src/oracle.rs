//! Brute-force validation path: tensor-product quadrature over the photon
//! frequencies and the noise shifts, evaluating the output amplitudes
//! directly from the beam-splitter matrices.  Shares no code with the term
//! kernel.

use num_complex::Complex64 as C64;

use crate::noise::{NoiseSpec, ThetaDistribution};
use crate::protocols::{
    Arm, Correlation, Mode, NoiseVariable, OutcomeDistribution, ProtocolKind, ProtocolSpec,
    ShiftKind, SpectralModel,
};
use crate::quadrature::{gauss_hermite, gk15_panel};
use crate::special::bessel_i0e;
use crate::{Error, Result};

/// Largest supported number of integration dimensions.
pub const MAX_DIMS: usize = 6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadSpec {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of refinements (order times 1.5) per dimension group.
    pub max_depth: u32,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec { rel_tol: 1e-10, abs_tol: 1e-13, max_depth: 5 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleResult {
    pub dist: OutcomeDistribution,
    /// Largest per-outcome change seen in the final convergence checks.
    pub error: f64,
    pub dims: usize,
}

const ZERO: C64 = C64::new(0.0, 0.0);

/// A 1D rule: nodes and weights including the density.
#[derive(Clone, Debug)]
struct Rule {
    x: Vec<f64>,
    w: Vec<f64>,
}

/// `E[f(x)]` for `x ~ N(0, eta^2)` by Gauss–Hermite of order `n`.
fn hermite_rule(n: usize, eta: f64) -> Rule {
    let (t, w) = gauss_hermite(n);
    let s = std::f64::consts::PI.sqrt();
    Rule { x: t.iter().map(|t| std::f64::consts::SQRT_2 * eta * t).collect(), w: w.iter().map(|w| w / s).collect() }
}

fn bounded_density(dist: ThetaDistribution, eta: f64) -> impl Fn(f64) -> f64 {
    use std::f64::consts::PI;
    let kappa = 1.0 / (eta * eta);
    let vm_norm = 1.0 / (2.0 * PI * bessel_i0e(kappa));
    let g_norm = 1.0 / ((2.0 * PI).sqrt() * eta);
    let images = (8.0 * eta / (2.0 * PI)).ceil() as i64 + 2;
    move |t: f64| match dist {
        ThetaDistribution::VonMises => (-2.0 * kappa * (0.5 * t).sin().powi(2)).exp() * vm_norm,
        _ => {
            let mut s = 0.0;
            for k in -images..=images {
                let x = t + 2.0 * PI * k as f64;
                s += (-0.5 * x * x / (eta * eta)).exp();
            }
            s * g_norm
        }
    }
}

/// Half-width outside which the density is below `e^-70` of its peak;
/// narrow laws would otherwise slip between the panels.
fn bounded_support(dist: ThetaDistribution, eta: f64) -> f64 {
    use std::f64::consts::PI;
    let l = match dist {
        ThetaDistribution::VonMises if 80.0 * eta * eta < 2.0 => (1.0 - 80.0 * eta * eta).acos(),
        ThetaDistribution::VonMises => PI,
        _ => 12.0 * eta,
    };
    l.min(PI)
}

/// Composite 15-point Kronrod rule on the support with `panels` panels,
/// density folded into the weights.
fn panel_rule(dist: ThetaDistribution, eta: f64, panels: usize) -> Rule {
    let dens = bounded_density(dist, eta);
    let l = bounded_support(dist, eta);
    let h = 2.0 * l / panels as f64;
    let mut rule = Rule { x: Vec::new(), w: Vec::new() };
    for p in 0..panels {
        let a = -l + h * p as f64;
        for (x, wk, _) in gk15_panel(a, a + h) {
            rule.x.push(x);
            rule.w.push(wk * dens(x));
        }
    }
    rule
}

/// Circular moments `E[cos k theta]`, `k = 0..=kmax`, by composite Kronrod
/// panels, doubling the panel count until the moments settle within `tol`.
fn bounded_moments(dist: ThetaDistribution, eta: f64, kmax: usize, tol: f64) -> Result<(Vec<f64>, f64)> {
    let moments = |r: &Rule| -> Vec<f64> {
        (0..=kmax).map(|k| r.x.iter().zip(&r.w).map(|(x, w)| w * (k as f64 * x).cos()).sum()).collect()
    };
    let mut panels = 1;
    let mut m = moments(&panel_rule(dist, eta, panels));
    while panels <= 512 {
        panels *= 2;
        let mn = moments(&panel_rule(dist, eta, panels));
        let err = m.iter().zip(&mn).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        if err <= tol {
            return Ok((mn, err));
        }
        m = mn;
    }
    Err(Error::QuadratureNotConverged { nodes: 15 * panels })
}

/// Rule on `2K + 1` equispaced phases that integrates every trigonometric
/// polynomial of degree `<= K` exactly against the phase law.  The weights
/// are the inverse discrete Fourier transform of the moments.
fn bounded_rule(moments: &[f64], k: usize) -> Rule {
    use std::f64::consts::PI;
    let n = 2 * k + 1;
    let mut rule = Rule { x: Vec::with_capacity(n), w: Vec::with_capacity(n) };
    for j in 0..n {
        let t = -PI + 2.0 * PI * (j as f64 + 0.5) / n as f64;
        let w = 1.0 + 2.0 * (1..=k).map(|q| moments[q] * (q as f64 * t).cos()).sum::<f64>();
        rule.x.push(t);
        rule.w.push(w / n as f64);
    }
    rule
}

/// One noise dimension.
#[derive(Clone, Copy, Debug)]
struct Dim {
    var: NoiseVariable,
    eta: f64,
}

/// Which value slot feeds the shift of each (arm, photon mode).
#[derive(Clone, Copy, Debug, Default)]
struct Slots {
    /// `[arm][mode]`, mode 0 = e, 1 = f.
    idx: [[Option<usize>; 2]; 2],
}

impl Slots {
    fn assign(&mut self, k: usize, v: &NoiseVariable) {
        let arm = match v.arm {
            Arm::Upper => 0,
            Arm::Lower => 1,
        };
        match v.mode {
            Mode::Shared => {
                self.idx[arm][0] = Some(k);
                self.idx[arm][1] = Some(k);
            }
            Mode::E => self.idx[arm][0] = Some(k),
            Mode::F => self.idx[arm][1] = Some(k),
        }
    }

    fn get(&self, values: &[f64], arm: usize, mode: usize) -> f64 {
        self.idx[arm][mode].map_or(0.0, |k| values[k])
    }
}

struct Layout {
    kind: ProtocolKind,
    pump: f64,
    sigma: f64,
    fe: bool,
    delta: f64,
    port_a: usize,
    port_b: usize,
    b_in: [[C64; 2]; 2],
    b_out: [[C64; 2]; 2],
    norm: f64,
    beta: [f64; 2],
    eps: Vec<Dim>,
    theta: Vec<Dim>,
    eps_slots: Slots,
    theta_slots: Slots,
    theta_dist: ThetaDistribution,
}

fn splitter() -> [[C64; 2]; 2] {
    let h = std::f64::consts::FRAC_1_SQRT_2;
    [[C64::new(0.0, h), C64::new(h, 0.0)], [C64::new(h, 0.0), C64::new(0.0, h)]]
}

impl Layout {
    fn new(spec: &ProtocolSpec, spectral: &SpectralModel, noise: &NoiseSpec, delta: f64) -> Self {
        let hom = spec.kind == ProtocolKind::Hom;
        let mut eps = Vec::new();
        let mut theta = Vec::new();
        for v in spec.noise_variables() {
            let (kind, arm) = (v.kind, v.arm);
            // in HOM only the e-mode photon from port 1 crosses the upper arm
            let used = !(hom && arm == Arm::Upper && v.mode == Mode::F);
            let eta = match kind {
                ShiftKind::Eps => noise.eta_eps,
                ShiftKind::Theta => noise.eta_theta,
            } * spec.variance_fraction(kind, arm).sqrt();
            if !used || eta == 0.0 {
                continue;
            }
            match kind {
                ShiftKind::Eps => eps.push(Dim { var: v, eta }),
                ShiftKind::Theta => theta.push(Dim { var: v, eta }),
            }
        }
        let mut eps_slots = Slots::default();
        for (k, d) in eps.iter().enumerate() {
            eps_slots.assign(k, &d.var);
        }
        let mut theta_slots = Slots::default();
        for (k, d) in theta.iter().enumerate() {
            theta_slots.assign(k, &d.var);
        }
        let one = C64::new(1.0, 0.0);
        Layout {
            kind: spec.kind,
            pump: spectral.pump,
            sigma: spectral.sigma,
            fe: spectral.correlation == Correlation::FrequencyEntangled,
            delta,
            port_a: 0,
            port_b: if spec.kind == ProtocolKind::Mz2s { 0 } else { 1 },
            b_in: if hom { [[one, ZERO], [ZERO, one]] } else { splitter() },
            b_out: splitter(),
            norm: if spec.kind == ProtocolKind::Mz2s { 1.0 / (1.0 + spec.alpha).sqrt() } else { 1.0 },
            beta: [spec.alpha.sqrt(), (1.0 - spec.alpha).sqrt()],
            eps,
            theta,
            eps_slots,
            theta_slots,
            theta_dist: noise.theta_dist,
        }
    }

    fn freq_dims(&self) -> usize {
        if self.kind.is_single_photon() || self.fe {
            1
        } else {
            2
        }
    }

    fn dims(&self) -> usize {
        self.freq_dims() + self.eps.len() + self.theta.len()
    }

    /// Coefficients `Bin[port][arm] * Bout[arm][det] * exp(-i w T_arm)` for one photon mode.
    fn freq_factors(&self, port: usize, w: f64, eps: &[f64], mode: usize) -> [[C64; 2]; 2] {
        let mut g = [[ZERO; 2]; 2];
        let t = [self.eps_slots.get(eps, 0, mode), self.delta + self.eps_slots.get(eps, 1, mode)];
        for arm in 0..2 {
            let ph = C64::from_polar(1.0, -w * t[arm]);
            for det in 0..2 {
                g[det][arm] = self.b_in[port][arm] * self.b_out[arm][det] * ph;
            }
        }
        g
    }
}

fn tensor(rules: &[Rule]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut pts = vec![Vec::new()];
    let mut wts = vec![1.0];
    for r in rules {
        let mut np = Vec::with_capacity(pts.len() * r.x.len());
        let mut nw = Vec::with_capacity(pts.len() * r.x.len());
        for (p, w) in pts.iter().zip(&wts) {
            for (x, v) in r.x.iter().zip(&r.w) {
                let mut q = p.clone();
                q.push(*x);
                np.push(q);
                nw.push(w * v);
            }
        }
        pts = np;
        wts = nw;
    }
    (pts, wts)
}

/// Theta phases per node: `exp(-i Theta)` for `[arm][mode]`.
struct ThetaNodes {
    phases: Vec<[[C64; 2]; 2]>,
    weights: Vec<f64>,
}

fn theta_nodes(layout: &Layout, rules: &[Rule]) -> ThetaNodes {
    let (pts, weights) = tensor(rules);
    let phases = pts
        .iter()
        .map(|p| {
            let mut ph = [[C64::new(1.0, 0.0); 2]; 2];
            for (arm, row) in ph.iter_mut().enumerate() {
                for (mode, z) in row.iter_mut().enumerate() {
                    *z = C64::from_polar(1.0, -layout.theta_slots.get(p, arm, mode));
                }
            }
            ph
        })
        .collect();
    ThetaNodes { phases, weights }
}

#[inline]
fn combine(g: &[[C64; 2]; 2], th: &[[C64; 2]; 2], mode: usize, det: usize) -> C64 {
    g[det][0] * th[0][mode] + g[det][1] * th[1][mode]
}

/// Frequency nodes: `(w_A, w_B, w_A', w_B', weight)` where the primed pair is
/// the exchanged configuration.
fn freq_nodes(layout: &Layout, n: usize) -> Vec<(f64, f64, f64, f64, f64)> {
    let r = hermite_rule(n, layout.sigma);
    let h = 0.5 * layout.pump;
    let mut out = Vec::new();
    if layout.kind.is_single_photon() {
        for (x, w) in r.x.iter().zip(&r.w) {
            out.push((h + x, 0.0, 0.0, 0.0, *w));
        }
    } else if layout.fe {
        for (x, w) in r.x.iter().zip(&r.w) {
            out.push((h - x, h + x, h + x, h - x, *w));
        }
    } else {
        for (x1, w1) in r.x.iter().zip(&r.w) {
            for (x2, w2) in r.x.iter().zip(&r.w) {
                // B at nu1, A at nu2; exchanged swaps the two
                out.push((h + x2, h + x1, h + x1, h + x2, w1 * w2));
            }
        }
    }
    out
}

/// Orders of the three dimension groups.
#[derive(Clone, Copy, Debug, PartialEq)]
struct Orders {
    freq: usize,
    eps: usize,
    theta: usize,
}

/// `bounded` holds the circular moments of bounded phase laws, one list per
/// theta dimension; `o.theta` is then the trigonometric degree of the rule.
fn integrate(layout: &Layout, o: Orders, bounded: Option<&[Vec<f64>]>) -> [f64; 3] {
    let eps_rules: Vec<Rule> = layout.eps.iter().map(|d| hermite_rule(o.eps, d.eta)).collect();
    let theta_rules: Vec<Rule> = match bounded {
        Some(m) => m.iter().map(|m| bounded_rule(m, o.theta)).collect(),
        None => layout.theta.iter().map(|d| hermite_rule(o.theta, d.eta)).collect(),
    };
    let (eps_pts, eps_w) = tensor(&eps_rules);
    let th = theta_nodes(layout, &theta_rules);
    let freq = freq_nodes(layout, o.freq);
    let mut acc = [0.0; 3];
    if layout.kind.is_single_photon() {
        let pair = layout.kind == ProtocolKind::Mz1x2Correlated;
        for (ep, ew) in eps_pts.iter().zip(&eps_w) {
            let gs: Vec<([[C64; 2]; 2], f64)> =
                freq.iter().map(|f| (layout.freq_factors(0, f.0, ep, 0), f.4)).collect();
            for (ph, tw) in th.phases.iter().zip(&th.weights) {
                let mut p = [0.0; 2];
                for (g, fw) in &gs {
                    for (det, pd) in p.iter_mut().enumerate() {
                        *pd += fw * combine(g, ph, 0, det).norm_sqr();
                    }
                }
                let w = ew * tw;
                if pair {
                    acc[0] += w * p[0] * p[0];
                    acc[1] += w * p[1] * p[1];
                    acc[2] += w * 2.0 * p[0] * p[1];
                } else {
                    acc[0] += w * p[0];
                    acc[1] += w * p[1];
                }
            }
        }
        return acc;
    }
    let (na, nb) = (layout.norm * layout.beta[0], layout.norm * layout.beta[1]);
    for (ep, ew) in eps_pts.iter().zip(&eps_w) {
        for f in &freq {
            let (wa, wb, wa2, wb2, fw) = *f;
            let ga = layout.freq_factors(layout.port_a, wa, ep, 0);
            let ga2 = layout.freq_factors(layout.port_a, wa2, ep, 0);
            let gbe = layout.freq_factors(layout.port_b, wb, ep, 0);
            let gbe2 = layout.freq_factors(layout.port_b, wb2, ep, 0);
            let gbf = layout.freq_factors(layout.port_b, wb, ep, 1);
            let base = ew * fw;
            for (ph, tw) in th.phases.iter().zip(&th.weights) {
                let ta = [combine(&ga, ph, 0, 0), combine(&ga, ph, 0, 1)];
                let ta2 = [combine(&ga2, ph, 0, 0), combine(&ga2, ph, 0, 1)];
                let tbe = [combine(&gbe, ph, 0, 0), combine(&gbe, ph, 0, 1)];
                let tbe2 = [combine(&gbe2, ph, 0, 0), combine(&gbe2, ph, 0, 1)];
                let tbf = [combine(&gbf, ph, 1, 0), combine(&gbf, ph, 1, 1)];
                // e-mode amplitude and its exchanged partner
                let ce = |j: usize, k: usize| ta[j] * tbe[k] * na;
                let ce2 = |j: usize, k: usize| ta2[j] * tbe2[k] * na;
                let cf = |j: usize, k: usize| (ta[j] * tbf[k] * nb).norm_sqr();
                let w = base * tw;
                acc[0] += w * (cf(0, 0) + 0.5 * (ce(0, 0) + ce2(0, 0)).norm_sqr());
                acc[1] += w * (cf(1, 1) + 0.5 * (ce(1, 1) + ce2(1, 1)).norm_sqr());
                acc[2] += w * (cf(0, 1) + cf(1, 0) + (ce(0, 1) + ce2(1, 0)).norm_sqr());
            }
        }
    }
    acc
}

/// Outcome probabilities by direct quadrature, with a convergence estimate.
pub fn oracle_distribution(
    spec: &ProtocolSpec,
    spectral: &SpectralModel,
    noise: &NoiseSpec,
    delta: f64,
    quad: &QuadSpec,
) -> Result<OracleResult> {
    spec.validate()?;
    spectral.validate()?;
    noise.validate()?;
    if !(quad.rel_tol > 0.0 && quad.abs_tol > 0.0) {
        return Err(Error::InvalidParameter("oracle tolerances must be positive".into()));
    }
    if quad.max_depth > 8 {
        return Err(Error::InvalidParameter("oracle max_depth must be at most 8".into()));
    }
    let layout = Layout::new(spec, spectral, noise, delta);
    let dims = layout.dims();
    if dims > MAX_DIMS {
        return Err(Error::DimensionTooHigh { dims, max: MAX_DIMS });
    }
    let bounded = layout.theta_dist != ThetaDistribution::Gaussian && !layout.theta.is_empty();
    // highest degree the refinement can reach
    let kmax = (0..=quad.max_depth + 1).fold(2usize, |k, _| k + k / 2);
    let mut bounded_err = 0.0;
    let mut moments = Vec::new();
    if bounded {
        for d in &layout.theta {
            let (m, e) = bounded_moments(layout.theta_dist, d.eta, kmax, quad.abs_tol)?;
            bounded_err = f64::max(bounded_err, e);
            moments.push(m);
        }
    }
    let marker = bounded.then_some(moments.as_slice());
    let within = |a: &[f64; 3], b: &[f64; 3]| -> (bool, f64) {
        let mut ok = true;
        let mut err = 0.0f64;
        for m in 0..3 {
            let d = (a[m] - b[m]).abs();
            err = err.max(d);
            ok &= d <= (quad.rel_tol * b[m].abs()).max(quad.abs_tol);
        }
        (ok, err)
    };
    let mut o = Orders { freq: 6, eps: 8, theta: if bounded { 2 } else { 8 } };
    let mut depth = 0;
    loop {
        let base = integrate(&layout, o, marker);
        let mut all_ok = true;
        let mut err = bounded_err;
        let mut next = o;
        let groups: [(bool, fn(&mut Orders)); 3] = [
            (true, |o| o.freq += o.freq / 2),
            (!layout.eps.is_empty(), |o| o.eps += o.eps / 2),
            (!layout.theta.is_empty(), |o| o.theta += o.theta / 2),
        ];
        for (active, bump) in groups {
            if !active {
                continue;
            }
            let mut finer = o;
            bump(&mut finer);
            let (ok, e) = within(&integrate(&layout, finer, marker), &base);
            err = err.max(e);
            if !ok {
                all_ok = false;
                bump(&mut next);
            }
        }
        if all_ok {
            return Ok(OracleResult { dist: OutcomeDistribution::from_array(base), error: err, dims });
        }
        depth += 1;
        if depth > quad.max_depth {
            return Err(Error::ToleranceNotMet { estimate: err, order: next.freq.max(next.eps).max(next.theta) });
        }
        o = next;
    }
}
