//! Number formatting and data-file emission.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

/// Shortest `%.12g`-style rendering: 12 significant digits, trailing zeros
/// dropped, scientific notation outside `1e-4 <= |x| < 1e12`.
pub fn g12(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{x:.11e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let e: i32 = exp.parse().unwrap();
    if (-4..12).contains(&e) {
        let decimals = (11 - e).max(0) as usize;
        trim(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}{:02}", trim(mant.to_string()), if e < 0 { '-' } else { '+' }, e.abs())
    }
}

fn trim(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

/// Tab-separated row.
pub fn row(values: &[f64]) -> String {
    values.iter().map(|v| g12(*v)).collect::<Vec<_>>().join("\t")
}

/// A two-column curve ready to be written.
pub struct Curve {
    pub name: String,
    pub points: Vec<(f64, f64)>,
}

impl Curve {
    pub fn new(name: impl Into<String>, xs: &[f64], ys: &[f64]) -> Curve {
        Curve { name: name.into(), points: xs.iter().copied().zip(ys.iter().copied()).collect() }
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        for (x, y) in &self.points {
            let _ = writeln!(s, "{}\t{}", g12(*x), g12(*y));
        }
        s
    }
}

/// Writes `<dir>/<name>.dat` for every curve and returns the paths.
pub fn write_curves(dir: &Path, curves: &[Curve]) -> std::io::Result<Vec<String>> {
    std::fs::create_dir_all(dir)?;
    let mut out = Vec::new();
    for c in curves {
        let path = dir.join(format!("{}.dat", c.name));
        let mut f = std::fs::File::create(&path)?;
        f.write_all(c.render().as_bytes())?;
        out.push(path.display().to_string());
    }
    Ok(out)
}
