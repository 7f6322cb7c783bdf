//! A single Gaussian term `poly(v) * exp(c - v^T A v / 2 + b^T v)`.
//!
//! The amplitude is stored through its logarithm `c` so that products of
//! many narrow Gaussians do not underflow before the exponents combine.

use num_complex::Complex64 as C64;

use super::poly::Poly;
use crate::Error;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Complex data of one term over an ordered list of `n` variables.
///
/// The variable names live in the owning [`TermSum`](super::TermSum) or
/// [`ComplexSum`](super::ComplexSum); a bare term only knows positions.
#[derive(Clone, Debug, PartialEq)]
pub struct GaussTerm {
    pub(crate) log_amp: C64,
    /// Row-major symmetric `n x n` matrix.
    pub(crate) quad: Vec<C64>,
    pub(crate) lin: Vec<C64>,
    pub(crate) poly: Poly,
}

impl GaussTerm {
    /// The constant term `z` over `n` variables.
    pub fn constant(n: usize, z: C64) -> Self {
        let (log_amp, poly) = if z == ZERO {
            (ZERO, Poly::zero(n))
        } else {
            (z.ln(), Poly::one(n))
        };
        GaussTerm { log_amp, quad: vec![ZERO; n * n], lin: vec![ZERO; n], poly }
    }

    pub fn nvars(&self) -> usize {
        self.lin.len()
    }

    pub fn amplitude(&self) -> C64 {
        self.log_amp.exp()
    }

    pub fn log_amplitude(&self) -> C64 {
        self.log_amp
    }

    pub fn quad(&self, i: usize, j: usize) -> C64 {
        self.quad[i * self.nvars() + j]
    }

    pub fn lin(&self, i: usize) -> C64 {
        self.lin[i]
    }

    pub fn poly(&self) -> &Poly {
        &self.poly
    }

    /// Adds `value` to `A[i][j]` and `A[j][i]` (once on the diagonal).
    pub fn add_quad(&mut self, i: usize, j: usize, value: C64) {
        let n = self.nvars();
        self.quad[i * n + j] += value;
        if i != j {
            self.quad[j * n + i] += value;
        }
    }

    pub fn add_lin(&mut self, i: usize, value: C64) {
        self.lin[i] += value;
    }

    pub fn add_log_amp(&mut self, value: C64) {
        self.log_amp += value;
    }

    pub fn set_poly(&mut self, poly: Poly) {
        assert_eq!(poly.nvars(), self.nvars());
        self.poly = poly;
    }

    pub fn is_zero(&self) -> bool {
        self.poly.is_zero()
    }

    /// Exponent `c - v^T A v / 2 + b^T v` at a real point.
    fn exponent(&self, v: &[f64]) -> C64 {
        let n = self.nvars();
        let mut e = self.log_amp;
        for i in 0..n {
            if v[i] == 0.0 {
                continue;
            }
            e += self.lin[i] * v[i];
            let row = &self.quad[i * n..(i + 1) * n];
            let mut s = row[i] * (0.5 * v[i]);
            for j in 0..i {
                s += row[j] * v[j];
            }
            e -= s * v[i];
        }
        e
    }

    /// Complex value of the term (before the real part is taken).
    pub fn value(&self, v: &[f64]) -> C64 {
        if self.poly.is_zero() {
            return ZERO;
        }
        let e = self.exponent(v);
        if e.re < -745.0 {
            return ZERO;
        }
        self.poly.eval(v) * e.exp()
    }

    pub fn conj(&self) -> GaussTerm {
        GaussTerm {
            log_amp: self.log_amp.conj(),
            quad: self.quad.iter().map(|q| q.conj()).collect(),
            lin: self.lin.iter().map(|b| b.conj()).collect(),
            poly: self.poly.conj(),
        }
    }

    /// Complex product (no real part taken).
    pub fn mul(&self, other: &GaussTerm) -> GaussTerm {
        debug_assert_eq!(self.nvars(), other.nvars());
        GaussTerm {
            log_amp: self.log_amp + other.log_amp,
            quad: self.quad.iter().zip(&other.quad).map(|(a, b)| a + b).collect(),
            lin: self.lin.iter().zip(&other.lin).map(|(a, b)| a + b).collect(),
            poly: self.poly.mul(&other.poly),
        }
    }

    /// Re-embeds into `new_n` variables; old variable `i` becomes `map[i]`.
    pub fn remap(&self, new_n: usize, map: &[usize]) -> GaussTerm {
        let n = self.nvars();
        let mut quad = vec![ZERO; new_n * new_n];
        let mut lin = vec![ZERO; new_n];
        for i in 0..n {
            lin[map[i]] = self.lin[i];
            for j in 0..n {
                quad[map[i] * new_n + map[j]] = self.quad[i * n + j];
            }
        }
        GaussTerm { log_amp: self.log_amp, quad, lin, poly: self.poly.remap(new_n, map) }
    }

    /// True when the term does not involve variable `i` at all.
    pub fn independent_of(&self, i: usize) -> bool {
        let n = self.nvars();
        self.lin[i] == ZERO
            && (0..n).all(|j| self.quad[i * n + j] == ZERO)
            && self.poly.degree_in(i) == 0
    }

    /// Drops variable `i`, which must not be involved.
    pub(crate) fn remove_var(&self, i: usize) -> GaussTerm {
        let n = self.nvars();
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mut quad = Vec::with_capacity((n - 1) * (n - 1));
        for &r in &keep {
            for &c in &keep {
                quad.push(self.quad[r * n + c]);
            }
        }
        let lin = keep.iter().map(|&j| self.lin[j]).collect();
        GaussTerm { log_amp: self.log_amp, quad, lin, poly: self.poly.remove_var(i) }
    }

    /// Sets `v_i = x` and removes the variable.
    pub fn substitute(&self, i: usize, x: f64) -> GaussTerm {
        let n = self.nvars();
        let mut t = self.clone();
        t.log_amp += self.lin[i] * x - self.quad[i * n + i] * (0.5 * x * x);
        for j in 0..n {
            if j != i {
                t.lin[j] -= self.quad[j * n + i] * x;
            }
        }
        t.poly = self.poly.substitute(i, x);
        // remove row/column i without touching the polynomial again
        let keep: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let mut quad = Vec::with_capacity((n - 1) * (n - 1));
        for &r in &keep {
            for &c in &keep {
                quad.push(t.quad[r * n + c]);
            }
        }
        GaussTerm {
            log_amp: t.log_amp,
            quad,
            lin: keep.iter().map(|&j| t.lin[j]).collect(),
            poly: t.poly,
        }
    }

    /// Applies `v_i -> -v_i`.
    pub fn reflect(&self, i: usize) -> GaussTerm {
        let n = self.nvars();
        let mut t = self.clone();
        t.lin[i] = -t.lin[i];
        for j in 0..n {
            if j != i {
                t.quad[i * n + j] = -t.quad[i * n + j];
                t.quad[j * n + i] = -t.quad[j * n + i];
            }
        }
        t.poly = self.poly.negate_var(i);
        t
    }

    /// Multiplies by the normalized weight `exp(-v_i^2 / (2 eta^2)) / (sqrt(2 pi) eta)`.
    pub(crate) fn apply_gaussian_weight(&mut self, i: usize, eta: f64) {
        let n = self.nvars();
        self.quad[i * n + i] += C64::new(1.0 / (eta * eta), 0.0);
        self.log_amp -= C64::new((2.0 * std::f64::consts::PI).sqrt().ln() + eta.ln(), 0.0);
    }

    /// Integrates variable `i` over the real line by completing the square.
    pub(crate) fn integrate(&self, i: usize, name: &str) -> Result<GaussTerm, Error> {
        let n = self.nvars();
        if self.poly.is_zero() {
            return Ok(GaussTerm::constant(n - 1, ZERO));
        }
        let a = self.quad[i * n + i];
        if !(a.re > 1e-300) || !a.re.is_finite() || !a.im.is_finite() {
            return Err(Error::NonConvergentIntegral { var: name.to_string() });
        }
        let inv_a = 1.0 / a;
        let bx = self.lin[i];
        let others: Vec<usize> = (0..n).filter(|&j| j != i).collect();
        let r: Vec<C64> = others.iter().map(|&j| self.quad[i * n + j]).collect();

        let m = n - 1;
        let mut quad = vec![ZERO; m * m];
        for (p, &jp) in others.iter().enumerate() {
            for (q, &jq) in others.iter().enumerate() {
                quad[p * m + q] = self.quad[jp * n + jq] - r[p] * r[q] * inv_a;
            }
        }
        // keep exact symmetry
        for p in 0..m {
            for q in 0..p {
                let s = 0.5 * (quad[p * m + q] + quad[q * m + p]);
                quad[p * m + q] = s;
                quad[q * m + p] = s;
            }
        }
        let lin: Vec<C64> = others
            .iter()
            .enumerate()
            .map(|(p, &j)| self.lin[j] - r[p] * bx * inv_a)
            .collect();
        let log_amp = self.log_amp
            + bx * bx * inv_a * 0.5
            + 0.5 * (C64::new(2.0 * std::f64::consts::PI, 0.0).ln() - a.ln());

        let poly = if self.poly.degree_in(i) == 0 {
            self.poly.remove_var(i)
        } else {
            // mean of the completed square, as a polynomial in the other variables
            let mut mu = Poly::constant(n, bx * inv_a);
            for (p, &j) in others.iter().enumerate() {
                if r[p] != ZERO {
                    mu = mu.add(&Poly::linear(n, j, -r[p] * inv_a));
                }
            }
            self.poly.gaussian_moments(i, &mu, inv_a)
        };
        Ok(GaussTerm { log_amp, quad, lin, poly })
    }

    /// Exact derivative with respect to variable `i`.
    pub fn differentiate(&self, i: usize) -> GaussTerm {
        let n = self.nvars();
        // d/dv_i of the exponent: b_i - sum_j A_ij v_j
        let mut g = Poly::constant(n, self.lin[i]);
        for j in 0..n {
            let aij = self.quad[i * n + j];
            if aij != ZERO {
                g = g.add(&Poly::linear(n, j, -aij));
            }
        }
        let poly = self.poly.derivative(i).add(&self.poly.mul(&g));
        GaussTerm { poly, ..self.clone() }
    }
}
