mod args;
mod figures;
mod output;
mod tables;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{CommandFactory, Parser};
use photon_delay::metrology::{default_window, fisher_from_model, peak_fisher_model, regime_crossovers, regime_peaks, NoiseAxis};
use photon_delay::montecarlo::{mle_study, sample_outcomes, TrialConfig};
use photon_delay::noise::{NoiseSpec, NoisyModel};
use photon_delay::protocols::{Arms, Correlation, NoisePlacement, ProtocolKind, ProtocolSpec, SpectralModel};
use photon_delay::Error;
use rayon::prelude::*;

use args::{Cli, Command, Params, Quantity, SweepVar};
use output::{g12, row, Curve};

/// Failure of a command: usage problems exit with 2, numerical ones with 1.
enum Failure {
    Usage(String),
    Numeric(Error),
    Io(std::io::Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter(m) => Failure::Usage(m),
            e => Failure::Numeric(e),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Io(e)
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parameters after defaults are applied.
struct Resolved {
    p: Params,
    spec: Option<ProtocolSpec>,
    spectral: SpectralModel,
    noise: NoiseSpec,
}

impl Resolved {
    fn new(p: Params) -> Outcome<Self> {
        let correlation = match (p.correlation, p.independent) {
            (Some(c), Some(true)) if Correlation::from(c) != Correlation::Independent => {
                return Err(Failure::Usage("--independent contradicts --correlation entangled".into()))
            }
            (_, Some(true)) => Correlation::Independent,
            (Some(c), _) => c.into(),
            (None, _) => Correlation::FrequencyEntangled,
        };
        let spectral = SpectralModel::new(p.sigma.unwrap_or(0.01), correlation)?;
        if let Some(w) = spectral.warning() {
            eprintln!("warning: {w}");
        }
        let noise = NoiseSpec {
            eta_eps: p.eta_eps.or(p.eta).unwrap_or(0.0),
            eta_theta: p.eta_theta.or(p.eta).unwrap_or(0.0),
            theta_dist: p.distribution.map(Into::into).unwrap_or_default(),
        };
        noise.validate()?;
        let spec = match p.protocol {
            Some(k) => {
                let mut s = ProtocolSpec::new(k.into(), p.alpha.unwrap_or(0.9))
                    .with_placement(p.placement.map_or(NoisePlacement::ModeCorrelated, Into::into));
                if p.eps_fraction.is_some() || p.theta_fraction.is_some() {
                    s = s.with_arms(Arms::Both {
                        eps_fraction: p.eps_fraction.unwrap_or(1.0),
                        theta_fraction: p.theta_fraction.unwrap_or(1.0),
                    });
                }
                s.validate()?;
                Some(s)
            }
            None => None,
        };
        Ok(Resolved { p, spec, spectral, noise })
    }

    fn spec(&self) -> Outcome<ProtocolSpec> {
        self.spec.ok_or_else(|| Failure::Usage("this command needs --protocol".into()))
    }

    fn alpha(&self) -> f64 {
        self.p.alpha.unwrap_or(0.9)
    }

    fn model(&self, spec: &ProtocolSpec, spectral: &SpectralModel, noise: &NoiseSpec) -> Outcome<NoisyModel> {
        if self.p.theta_limit == Some(true) {
            if spec.kind == ProtocolKind::Hom {
                return Err(Failure::Usage("HOM has no phase dependence; drop --theta-limit".into()));
            }
            Ok(NoisyModel::high_theta_limit(spec, spectral, noise)?)
        } else {
            Ok(NoisyModel::new(spec, spectral, noise)?)
        }
    }

    fn grid(&self) -> Vec<f64> {
        self.p.grid.map_or_else(|| args::Grid { lo: -100.0, hi: 100.0, step: 0.5 }.points(), |g| g.points())
    }
}

/// Prints to stdout, or writes one file per named column when --out-dir is set.
fn emit(r: &Resolved, stem: &str, xs: &[f64], columns: &[(&str, Vec<f64>)]) -> Outcome<String> {
    if let Some(dir) = &r.p.out_dir {
        let curves: Vec<Curve> = columns.iter().map(|(n, ys)| Curve::new(format!("{stem}_{n}"), xs, ys)).collect();
        let files = output::write_curves(dir, &curves)?;
        return Ok(files.join("\n") + "\n");
    }
    let mut s = String::new();
    for (k, x) in xs.iter().enumerate() {
        let mut v = vec![*x];
        v.extend(columns.iter().map(|c| c.1[k]));
        let _ = writeln!(s, "{}", row(&v));
    }
    Ok(s)
}

fn cmd_prob(r: &Resolved) -> Outcome<String> {
    let spec = r.spec()?;
    let model = r.model(&spec, &r.spectral, &r.noise)?;
    if let (Some(d), None) = (r.p.delta, r.p.grid) {
        return Ok(row(&model.distribution(d).as_array()) + "\n");
    }
    let xs = r.grid();
    let ps: Vec<[f64; 3]> = xs.par_iter().map(|&d| model.distribution(d).as_array()).collect();
    let col = |m: usize| ps.iter().map(|p| p[m]).collect::<Vec<f64>>();
    emit(r, "prob", &xs, &[("p1", col(0)), ("p2", col(1)), ("pc", col(2))])
}

fn cmd_fisher(r: &Resolved) -> Outcome<String> {
    let spec = r.spec()?;
    let model = r.model(&spec, &r.spectral, &r.noise)?;
    if let (Some(d), None) = (r.p.delta, r.p.grid) {
        return Ok(g12(fisher_from_model(&model, d)) + "\n");
    }
    let xs = r.grid();
    let ys: Vec<f64> = xs.par_iter().map(|&d| fisher_from_model(&model, d)).collect();
    emit(r, "fisher", &xs, &[("fisher", ys)])
}

fn cmd_sweep(r: &Resolved) -> Outcome<String> {
    let spec = r.spec()?;
    let over = r.p.over.ok_or_else(|| Failure::Usage("sweep needs --over".into()))?;
    let range = r.p.range.ok_or_else(|| Failure::Usage("sweep needs --range lo:hi:step".into()))?;
    let quantity = r.p.quantity.unwrap_or(Quantity::Peak);
    let delta = match quantity {
        Quantity::Peak => 0.0,
        _ => r.p.delta.ok_or_else(|| Failure::Usage("this quantity needs --delta-wp".into()))?,
    };
    let xs = range.points();
    let ys = xs
        .par_iter()
        .map(|&x| -> Outcome<f64> {
            let (mut spec, mut spectral, mut noise) = (spec, r.spectral, r.noise);
            match over {
                SweepVar::EtaEpsWp => noise.eta_eps = x,
                SweepVar::EtaTheta => noise.eta_theta = x,
                SweepVar::Alpha => spec.alpha = x,
                SweepVar::SigmaWp => spectral.sigma = x,
            }
            spec.validate()?;
            spectral.validate()?;
            noise.validate()?;
            let model = r.model(&spec, &spectral, &noise)?;
            Ok(match quantity {
                Quantity::Peak => peak_fisher_model(&model, r.p.window.unwrap_or_else(|| default_window(&spec, &spectral, &noise))).1,
                Quantity::Fisher => fisher_from_model(&model, delta),
                Quantity::P1 => model.distribution(delta).p1,
                Quantity::P2 => model.distribution(delta).p2,
                Quantity::Pc => model.distribution(delta).pc,
            })
        })
        .collect::<Outcome<Vec<f64>>>()?;
    let name = format!("{quantity:?}").to_lowercase();
    emit(r, "sweep", &xs, &[(name.as_str(), ys)])
}

fn cmd_figure(r: &Resolved, id: args::FigureId) -> Outcome<String> {
    let curves = figures::figure(id, r.spectral.sigma)?;
    let dir = r.p.out_dir.clone().unwrap_or_else(|| PathBuf::from("."));
    Ok(output::write_curves(&dir, &curves)?.join("\n") + "\n")
}

fn cmd_table(r: &Resolved, id: args::TableId) -> Outcome<String> {
    let fe = SpectralModel::new(r.spectral.sigma, Correlation::FrequencyEntangled)?;
    Ok(match id {
        args::TableId::T2 => tables::table2(r.alpha(), &fe)?,
        args::TableId::T3 => tables::table3(r.alpha(), &fe)?,
    })
}

fn cmd_montecarlo(r: &Resolved) -> Outcome<String> {
    let spec = r.spec()?;
    let delta = r.p.delta.ok_or_else(|| Failure::Usage("montecarlo needs --delta-wp".into()))?;
    let cfg = TrialConfig {
        shots: r.p.shots.unwrap_or(10_000),
        seed: r.p.seed.unwrap_or(12345),
        delta,
        spec,
        spectral: r.spectral,
        noise: r.noise,
    };
    let counts = sample_outcomes(&cfg)?;
    let model = NoisyModel::new(&spec, &r.spectral, &r.noise)?;
    let p = model.distribution(delta).as_array();
    let n = counts.total() as f64;
    let c = counts.as_array();
    let mut s = String::new();
    let _ = writeln!(s, "counts\t{}\t{}\t{}", c[0], c[1], c[2]);
    let _ = writeln!(s, "frequencies\t{}", row(&c.map(|k| k as f64 / n)));
    let _ = writeln!(s, "probabilities\t{}", row(&p));
    let trials = r.p.trials.unwrap_or(0);
    if trials > 0 {
        let window = r.p.window.unwrap_or_else(|| default_window(&spec, &r.spectral, &r.noise));
        let study = mle_study(&cfg, trials, window)?;
        let _ = writeln!(s, "trials\t{trials}");
        let _ = writeln!(s, "estimator_mean\t{}", g12(study.mean));
        let _ = writeln!(s, "estimator_variance\t{}", g12(study.variance));
        let _ = writeln!(s, "fisher\t{}", g12(study.fisher));
        let _ = writeln!(s, "crb\t{}", g12(study.crb));
        let _ = writeln!(s, "variance_over_crb\t{}", g12(study.ratio()));
    }
    Ok(s)
}

fn cmd_regimes(r: &Resolved) -> Outcome<String> {
    let alpha = r.alpha();
    let axes: Vec<NoiseAxis> = match r.p.axis {
        Some(a) => vec![a.into()],
        None => vec![NoiseAxis::Eps, NoiseAxis::Theta],
    };
    let mut s = String::new();
    let _ = writeln!(s, "axis\tMZ2d->2xMZ1\t2xMZ1->HOM");
    for axis in axes {
        let eta_max = r.p.eta_max.unwrap_or_else(|| tables::default_eta_max(axis));
        let (a, b) = regime_crossovers(axis, alpha, &r.spectral, eta_max)?;
        let _ = writeln!(s, "{}\t{}\t{}", tables::axis_name(axis), g12(a), g12(b));
    }
    if r.noise.eta_eps > 0.0 || r.noise.eta_theta > 0.0 {
        let peaks = regime_peaks(&r.noise, alpha, &r.spectral)?;
        let best = photon_delay::metrology::classify_regime(&r.noise, alpha, &r.spectral)?;
        let _ = writeln!(s, "peaks\tMZ2d={}\t2xMZ1={}\tHOM={}", g12(peaks[0]), g12(peaks[1]), g12(peaks[2]));
        let _ = writeln!(s, "best\t{}", best.protocol());
    }
    Ok(s)
}

fn threads(p: &Params) -> Outcome<Option<usize>> {
    if let Some(n) = p.threads {
        return Ok(Some(n));
    }
    match std::env::var("PHOTON_DELAY_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map(Some)
            .map_err(|_| Failure::Usage(format!("PHOTON_DELAY_THREADS must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

fn run(cli: Cli) -> Outcome<String> {
    let mut params = cli.params;
    if let Some(path) = &cli.config {
        let file = args::read_config(path).map_err(Failure::Usage)?;
        params.fill_from(&file);
    }
    if let Some(n) = threads(&params)? {
        if n == 0 {
            return Err(Failure::Usage("thread count must be at least 1".into()));
        }
        // only fails if a pool already exists, which cannot happen here
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let r = Resolved::new(params)?;
    match cli.command {
        Command::Prob => cmd_prob(&r),
        Command::Fisher => cmd_fisher(&r),
        Command::Sweep => cmd_sweep(&r),
        Command::Figure { id } => cmd_figure(&r, id),
        Command::Table { id } => cmd_table(&r, id),
        Command::Montecarlo => cmd_montecarlo(&r),
        Command::Regimes => cmd_regimes(&r),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(Failure::Usage(msg)) => {
            let msg = msg.trim_start_matches("error: ").trim_end().to_string();
            Cli::command().error(ErrorKind::InvalidValue, msg).exit()
        }
        Err(Failure::Numeric(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
