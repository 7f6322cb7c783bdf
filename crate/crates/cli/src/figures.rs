//! Data for each figure: one two-column curve per plotted line.

use photon_delay::metrology::{default_window, fisher_scan, linspace, peak_fisher, NoiseAxis};
use photon_delay::noise::{NoiseSpec, NoisyModel, ThetaDistribution};
use photon_delay::protocols::{ProtocolKind, ProtocolSpec, SpectralModel};
use photon_delay::Result;
use rayon::prelude::*;

use crate::args::FigureId;
use crate::output::Curve;

const TWO_PHOTON: [(ProtocolKind, &str); 3] =
    [(ProtocolKind::Hom, "hom"), (ProtocolKind::Mz2s, "mz2s"), (ProtocolKind::Mz2d, "mz2d")];

fn fisher_curve(name: String, spec: ProtocolSpec, spectral: &SpectralModel, noise: &NoiseSpec, grid: &[f64]) -> Result<Curve> {
    let model = NoisyModel::new(&spec, spectral, noise)?;
    Ok(Curve::new(name, grid, &fisher_scan(&model, "", grid).values))
}

/// Peak information against noise strength; `scale` is 2 for two MZ1 runs.
/// The search covers the HOM-like side lobes that survive strong phase
/// noise, not just the central fringe; every curve here is even in delta.
fn peak_curve(name: String, spec: ProtocolSpec, spectral: &SpectralModel, etas: &[f64], noise: impl Fn(f64) -> NoiseSpec + Sync, scale: f64) -> Result<Curve> {
    let hom = ProtocolSpec::new(ProtocolKind::Hom, spec.alpha);
    let ys = etas
        .par_iter()
        .map(|&e| {
            let n = noise(e);
            let window = default_window(&hom, spectral, &n);
            Ok(scale * peak_fisher(&spec, spectral, &n, Some(window))?.1)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(Curve::new(name, etas, &ys))
}

fn label(x: f64) -> String {
    crate::output::g12(x)
}

/// Fisher curves of the two-photon protocols at eta_eps * wp in {0, 5, 10}, alpha = 0.9.
fn noise_comparison(stem: &str, spectral: &SpectralModel) -> Result<Vec<Curve>> {
    let grid = linspace(-100.0, 100.0, 0.25);
    let mut out = Vec::new();
    for eta in [0.0, 5.0, 10.0] {
        for (kind, name) in TWO_PHOTON {
            let spec = ProtocolSpec::new(kind, 0.9);
            out.push(fisher_curve(format!("{stem}_eta{}_{name}", label(eta)), spec, spectral, &NoiseSpec::gaussian(eta, 0.0), &grid)?);
        }
    }
    Ok(out)
}

pub fn figure(id: FigureId, sigma: f64) -> Result<Vec<Curve>> {
    let fe = SpectralModel::entangled(sigma)?;
    let ind = SpectralModel::independent(sigma)?;
    let stem = id.stem();
    let mut out = Vec::new();
    match id {
        FigureId::F2 => out = noise_comparison(stem, &fe)?,
        FigureId::F9 => out = noise_comparison(stem, &ind)?,
        FigureId::F3Left => {
            let grid = linspace(-100.0, 100.0, 0.25);
            for k in 0..6 {
                let eta = 3.0 + 0.2 * k as f64;
                for (kind, name) in TWO_PHOTON {
                    let spec = ProtocolSpec::new(kind, 0.5);
                    out.push(fisher_curve(format!("{stem}_theta{}_{name}", label(eta)), spec, &fe, &NoiseSpec::gaussian(0.0, eta), &grid)?);
                }
            }
        }
        FigureId::F3Right => {
            let grid = linspace(-100.0, 100.0, 0.25);
            for k in 0..6 {
                let alpha = 0.2 * k as f64;
                let spec = ProtocolSpec::new(ProtocolKind::Mz2d, alpha);
                out.push(fisher_curve(format!("{stem}_alpha{}_mz2d", label(alpha)), spec, &fe, &NoiseSpec::gaussian(0.0, 4.0), &grid)?);
            }
        }
        FigureId::F4 => {
            for (sp, corr) in [(&fe, "entangled"), (&ind, "independent")] {
                for (kind, name) in [(ProtocolKind::Mz2d, "mz2d"), (ProtocolKind::Mz2s, "mz2s")] {
                    let spec = ProtocolSpec::new(kind, 0.5);
                    out.push(fisher_curve(format!("{stem}_{corr}_{name}"), spec, sp, &NoiseSpec::none(), &linspace(-150.0, 150.0, 0.1))?);
                }
            }
            for (kind, name) in [(ProtocolKind::Mz2d, "mz2d"), (ProtocolKind::Mz2s, "mz2s")] {
                let spec = ProtocolSpec::new(kind, 0.5);
                out.push(fisher_curve(format!("{stem}_entangled_inset_{name}"), spec, &fe, &NoiseSpec::none(), &linspace(175.0, 200.0, 0.02))?);
            }
        }
        FigureId::F5 => {
            for (kind, name) in [(ProtocolKind::Mz2s, "mz2s"), (ProtocolKind::Mz2d, "mz2d")] {
                let spec = ProtocolSpec::new(kind, 0.0);
                out.push(fisher_curve(format!("{stem}_{name}"), spec, &fe, &NoiseSpec::none(), &linspace(-150.0, 150.0, 0.1))?);
                out.push(fisher_curve(format!("{stem}_inset_{name}"), spec, &fe, &NoiseSpec::none(), &linspace(200.0, 215.0, 0.02))?);
            }
        }
        FigureId::F6 => {
            for (kind, name) in [(ProtocolKind::Mz2s, "mz2s"), (ProtocolKind::Mz2d, "mz2d"), (ProtocolKind::Mz1, "mz1")] {
                let spec = ProtocolSpec::new(kind, 0.0);
                out.push(fisher_curve(format!("{stem}_{name}"), spec, &ind, &NoiseSpec::none(), &linspace(-150.0, 150.0, 0.1))?);
            }
        }
        FigureId::F8 => {
            let etas = linspace(0.0, 5.0, 0.05);
            for axis in [NoiseAxis::Eps, NoiseAxis::Theta] {
                for (kind, name, scale) in [(ProtocolKind::Mz2s, "mz2s", 1.0), (ProtocolKind::Mz2d, "mz2d", 1.0), (ProtocolKind::Mz1, "2xmz1", 2.0)] {
                    let spec = ProtocolSpec::new(kind, 0.9);
                    out.push(peak_curve(format!("{stem}_{}_{name}", axis.name()), spec, &fe, &etas, |e| axis.noise(e), scale)?);
                }
            }
            let spec = ProtocolSpec::new(ProtocolKind::Hom, 0.9);
            out.push(peak_curve(format!("{stem}_inset_eps_hom"), spec, &fe, &linspace(0.0, 100.0, 1.0), |e| NoiseAxis::Eps.noise(e), 1.0)?);
        }
        FigureId::F10 => {
            let etas = linspace(0.0, 12.5, 0.05);
            for (dist, dname) in [(ThetaDistribution::Gaussian, "gaussian"), (ThetaDistribution::VonMises, "vonmises")] {
                for (kind, name, scale) in [(ProtocolKind::Mz2s, "mz2s", 1.0), (ProtocolKind::Mz2d, "mz2d", 1.0), (ProtocolKind::Mz1, "2xmz1", 2.0)] {
                    let spec = ProtocolSpec::new(kind, 0.9);
                    let noise = |e: f64| NoiseSpec::gaussian(0.0, e).with_distribution(dist);
                    out.push(peak_curve(format!("{stem}_{dname}_{name}"), spec, &fe, &etas, noise, scale)?);
                }
            }
        }
        FigureId::F11 => {
            let grid = linspace(225.0, 250.0, 0.01);
            for (sp, corr) in [(&fe, "entangled"), (&ind, "independent")] {
                let spec = ProtocolSpec::new(ProtocolKind::Mz2s, 0.5);
                let model = NoisyModel::new(&spec, sp, &NoiseSpec::none())?;
                let probs: Vec<[f64; 3]> = grid.iter().map(|&d| model.distribution(d).as_array()).collect();
                for (m, pname) in ["p1", "p2", "pc"].iter().enumerate() {
                    let ys: Vec<f64> = probs.iter().map(|p| p[m]).collect();
                    out.push(Curve::new(format!("{stem}_{corr}_{pname}"), &grid, &ys));
                }
                out.push(Curve::new(format!("{stem}_{corr}_fisher"), &grid, &fisher_scan(&model, "", &grid).values));
            }
        }
    }
    Ok(out)
}
