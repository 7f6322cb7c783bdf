//! Command-line definitions and the `key = value` config file.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use photon_delay::metrology::NoiseAxis;
use photon_delay::noise::ThetaDistribution;
use photon_delay::protocols::{Correlation, NoisePlacement, ProtocolKind};

#[derive(Parser, Debug)]
#[command(name = "photon-delay", version, about = "Delay estimation with photon pairs under phase noise")]
#[command(args_override_self = true)]
pub struct Cli {
    /// Flat `key = value` file; keys are the long flag names. Flags win.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub params: Params,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone)]
pub enum Command {
    /// Outcome probabilities (p1, p2, pc) at --delta-wp or over --grid.
    Prob,
    /// Fisher information F/wp^2 at --delta-wp or over --grid.
    Fisher,
    /// A quantity against one parameter (--over, --range, --quantity).
    Sweep,
    /// Write the data files of one figure into --out-dir.
    Figure { id: FigureId },
    /// Noise-threshold (2) or regime-crossover (3) report.
    Table { id: TableId },
    /// Shot simulation and, with --trials, a maximum-likelihood study.
    Montecarlo,
    /// Regime crossovers on both noise axes.
    Regimes,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum FigureId {
    #[value(name = "2")]
    F2,
    #[value(name = "3-left")]
    F3Left,
    #[value(name = "3-right")]
    F3Right,
    #[value(name = "4")]
    F4,
    #[value(name = "5")]
    F5,
    #[value(name = "6")]
    F6,
    #[value(name = "8")]
    F8,
    #[value(name = "9")]
    F9,
    #[value(name = "10")]
    F10,
    #[value(name = "11")]
    F11,
}

impl FigureId {
    pub fn stem(self) -> &'static str {
        match self {
            FigureId::F2 => "fig2",
            FigureId::F3Left => "fig3-left",
            FigureId::F3Right => "fig3-right",
            FigureId::F4 => "fig4",
            FigureId::F5 => "fig5",
            FigureId::F6 => "fig6",
            FigureId::F8 => "fig8",
            FigureId::F9 => "fig9",
            FigureId::F10 => "fig10",
            FigureId::F11 => "fig11",
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum TableId {
    #[value(name = "2")]
    T2,
    #[value(name = "3")]
    T3,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Protocol {
    Hom,
    Mz2s,
    Mz2d,
    Mz1,
    Mz1x2,
}

impl From<Protocol> for ProtocolKind {
    fn from(p: Protocol) -> Self {
        match p {
            Protocol::Hom => ProtocolKind::Hom,
            Protocol::Mz2s => ProtocolKind::Mz2s,
            Protocol::Mz2d => ProtocolKind::Mz2d,
            Protocol::Mz1 => ProtocolKind::Mz1,
            Protocol::Mz1x2 => ProtocolKind::Mz1x2Correlated,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Dist {
    Gaussian,
    Wrapped,
    VonMises,
}

impl From<Dist> for ThetaDistribution {
    fn from(d: Dist) -> Self {
        match d {
            Dist::Gaussian => ThetaDistribution::Gaussian,
            Dist::Wrapped => ThetaDistribution::WrappedGaussian,
            Dist::VonMises => ThetaDistribution::VonMises,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Corr {
    Entangled,
    Independent,
}

impl From<Corr> for Correlation {
    fn from(c: Corr) -> Self {
        match c {
            Corr::Entangled => Correlation::FrequencyEntangled,
            Corr::Independent => Correlation::Independent,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Placement {
    Correlated,
    Uncorrelated,
}

impl From<Placement> for NoisePlacement {
    fn from(p: Placement) -> Self {
        match p {
            Placement::Correlated => NoisePlacement::ModeCorrelated,
            Placement::Uncorrelated => NoisePlacement::ModeUncorrelated,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Axis {
    Eps,
    Theta,
}

impl From<Axis> for NoiseAxis {
    fn from(a: Axis) -> Self {
        match a {
            Axis::Eps => NoiseAxis::Eps,
            Axis::Theta => NoiseAxis::Theta,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepVar {
    EtaEpsWp,
    EtaTheta,
    Alpha,
    SigmaWp,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
pub enum Quantity {
    /// Largest Fisher information over the default window.
    Peak,
    /// Fisher information at --delta-wp.
    Fisher,
    P1,
    P2,
    Pc,
}

/// `lo:hi:step`, inclusive.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        photon_delay::metrology::linspace(self.lo, self.hi, self.step)
    }
}

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err("expected lo:hi:step".into());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p}: {e}"))).collect::<Result<_, _>>()?;
    let g = Grid { lo: v[0], hi: v[1], step: v[2] };
    if !(g.step > 0.0) || !(g.hi >= g.lo) || !g.lo.is_finite() || !g.hi.is_finite() {
        return Err("need lo <= hi and step > 0".into());
    }
    Ok(g)
}

fn parse_window(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(':').ok_or("expected lo:hi")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{a}: {e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{b}: {e}"))?;
    if !(hi > lo) {
        return Err("need lo < hi".into());
    }
    Ok((lo, hi))
}

/// Every option except `--config`.  All are optional so that config-file
/// values can fill the gaps.
#[derive(Args, Debug, Clone, Default)]
pub struct Params {
    #[arg(long, global = true, value_enum)]
    pub protocol: Option<Protocol>,
    /// Spectral width sigma/wp [default: 0.01].
    #[arg(long = "sigma-wp", global = true)]
    pub sigma: Option<f64>,
    /// Visibility [default: 0.9].
    #[arg(long, global = true)]
    pub alpha: Option<f64>,
    /// Frequency-dependent noise eta_eps * wp [default: 0].
    #[arg(long = "eta-eps-wp", global = true)]
    pub eta_eps: Option<f64>,
    /// Frequency-independent noise eta_theta [default: 0].
    #[arg(long = "eta-theta", global = true)]
    pub eta_theta: Option<f64>,
    /// Sets both noise strengths unless given separately.
    #[arg(long, global = true)]
    pub eta: Option<f64>,
    /// Law of the phase shifts [default: gaussian].
    #[arg(long, global = true, value_enum)]
    pub distribution: Option<Dist>,
    /// Photon pair spectrum [default: entangled].
    #[arg(long, global = true, value_enum)]
    pub correlation: Option<Corr>,
    /// Shorthand for --correlation independent.
    #[arg(long, global = true, num_args = 0..=1, default_missing_value = "true")]
    pub independent: Option<bool>,
    /// Whether the two photonic modes share their shifts [default: correlated].
    #[arg(long, global = true, value_enum)]
    pub placement: Option<Placement>,
    /// Share of the eps variance in the upper arm; enables noise in both arms.
    #[arg(long = "eps-fraction", global = true)]
    pub eps_fraction: Option<f64>,
    /// Share of the theta variance in the upper arm; enables noise in both arms.
    #[arg(long = "theta-fraction", global = true)]
    pub theta_fraction: Option<f64>,
    /// Use the infinite-phase-noise limit (eta_theta is ignored).
    #[arg(long = "theta-limit", global = true, num_args = 0..=1, default_missing_value = "true")]
    pub theta_limit: Option<bool>,
    /// Delay delta * wp.
    #[arg(long = "delta-wp", global = true, allow_negative_numbers = true)]
    pub delta: Option<f64>,
    /// Delay grid lo:hi:step [default: -100:100:0.5].
    #[arg(long, global = true, value_parser = parse_grid, allow_hyphen_values = true)]
    pub grid: Option<Grid>,
    /// Parameter swept by `sweep`.
    #[arg(long, global = true, value_enum)]
    pub over: Option<SweepVar>,
    /// Values of the swept parameter, lo:hi:step.
    #[arg(long, global = true, value_parser = parse_grid, allow_hyphen_values = true)]
    pub range: Option<Grid>,
    /// Quantity reported by `sweep` [default: peak].
    #[arg(long, global = true, value_enum)]
    pub quantity: Option<Quantity>,
    /// Noise axis for `regimes` (both when absent).
    #[arg(long, global = true, value_enum)]
    pub axis: Option<Axis>,
    /// Upper end of the crossover scan.
    #[arg(long = "eta-max", global = true)]
    pub eta_max: Option<f64>,
    /// Shots per experiment [default: 10000].
    #[arg(long, global = true)]
    pub shots: Option<u64>,
    /// Repeated experiments for the estimator study [default: 0].
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    /// Seed of the shot generator [default: 12345].
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Estimator search window lo:hi.
    #[arg(long, global = true, value_parser = parse_window, allow_hyphen_values = true)]
    pub window: Option<(f64, f64)>,
    /// Directory for data files; without it data goes to stdout.
    #[arg(long = "out-dir", global = true)]
    pub out_dir: Option<PathBuf>,
    /// Worker threads (also PHOTON_DELAY_THREADS) [default: logical cores].
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

macro_rules! fill {
    ($a:ident, $b:ident; $($f:ident),*) => { $( if $a.$f.is_none() { $a.$f = $b.$f.clone(); } )* };
}

impl Params {
    /// Fills every unset field from `other`.
    pub fn fill_from(&mut self, other: &Params) {
        fill!(self, other; protocol, sigma, alpha, eta_eps, eta_theta, eta, distribution, correlation,
            independent, placement, eps_fraction, theta_fraction, theta_limit, delta, grid, over, range,
            quantity, axis, eta_max, shots, trials, seed, window, out_dir, threads);
    }
}

#[derive(Parser)]
#[command(name = "config", no_binary_name = true, args_override_self = true)]
struct ConfigOnly {
    #[command(flatten)]
    params: Params,
}

/// Parses a config file: one `key = value` per line, `#` starts a comment.
pub fn read_config(path: &Path) -> Result<Params, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut argv = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("{}:{}: expected `key = value`", path.display(), n + 1))?;
        let key = k.trim().replace('_', "-");
        if key == "config" {
            return Err(format!("{}:{}: nested config files are not supported", path.display(), n + 1));
        }
        argv.push(format!("--{key}={}", v.trim()));
    }
    ConfigOnly::try_parse_from(argv).map(|c| c.params).map_err(|e| {
        let msg = e.render().to_string();
        let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
        format!("{}: {first}", path.display())
    })
}
