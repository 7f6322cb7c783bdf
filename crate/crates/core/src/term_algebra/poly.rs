//! Sparse multivariate polynomials with complex coefficients.
//!
//! Variables are addressed by position; the owning term keeps the names.

use std::collections::BTreeMap;

use num_complex::Complex64 as C64;

/// A polynomial `sum_k c_k * prod_i v_i^{e_ki}` over `nvars` variables.
///
/// Monomials are kept sorted by exponent vector with no duplicates and no
/// exact-zero coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly {
    nvars: usize,
    terms: Vec<(Vec<u32>, C64)>,
}

impl Poly {
    pub fn zero(nvars: usize) -> Self {
        Poly { nvars, terms: Vec::new() }
    }

    pub fn constant(nvars: usize, c: C64) -> Self {
        let mut p = Poly::zero(nvars);
        if c != C64::new(0.0, 0.0) {
            p.terms.push((vec![0; nvars], c));
        }
        p
    }

    pub fn one(nvars: usize) -> Self {
        Poly::constant(nvars, C64::new(1.0, 0.0))
    }

    /// The monomial `c * v_i`.
    pub fn linear(nvars: usize, i: usize, c: C64) -> Self {
        let mut e = vec![0; nvars];
        e[i] = 1;
        Poly::from_map(nvars, [(e, c)].into_iter().collect())
    }

    fn from_map(nvars: usize, map: BTreeMap<Vec<u32>, C64>) -> Self {
        let terms = map
            .into_iter()
            .filter(|(_, c)| *c != C64::new(0.0, 0.0))
            .collect();
        Poly { nvars, terms }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn monomials(&self) -> &[(Vec<u32>, C64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Returns the constant value when the polynomial has degree 0.
    pub fn as_constant(&self) -> Option<C64> {
        match self.terms.len() {
            0 => Some(C64::new(0.0, 0.0)),
            1 if self.terms[0].0.iter().all(|&e| e == 0) => Some(self.terms[0].1),
            _ => None,
        }
    }

    pub fn degree_in(&self, i: usize) -> u32 {
        self.terms.iter().map(|(e, _)| e[i]).max().unwrap_or(0)
    }

    pub fn max_abs_coeff(&self) -> f64 {
        self.terms.iter().map(|(_, c)| c.norm()).fold(0.0, f64::max)
    }

    /// Removes monomials whose coefficient magnitude is at most `threshold`.
    pub fn drop_below(&self, threshold: f64) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().filter(|(_, c)| c.norm() > threshold).cloned().collect(),
        }
    }

    /// Keeps only the real part of every coefficient.
    pub fn real_part(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .filter(|(_, c)| c.re != 0.0)
                .map(|(e, c)| (e.clone(), C64::new(c.re, 0.0)))
                .collect(),
        }
    }

    pub fn add(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, other.nvars);
        let mut map: BTreeMap<Vec<u32>, C64> = self.terms.iter().cloned().collect();
        for (e, c) in &other.terms {
            *map.entry(e.clone()).or_insert(C64::new(0.0, 0.0)) += c;
        }
        Poly::from_map(self.nvars, map)
    }

    pub fn scale(&self, s: C64) -> Poly {
        if s == C64::new(0.0, 0.0) {
            return Poly::zero(self.nvars);
        }
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect(),
        }
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        debug_assert_eq!(self.nvars, other.nvars);
        if let Some(c) = other.as_constant() {
            return self.scale(c);
        }
        if let Some(c) = self.as_constant() {
            return other.scale(c);
        }
        let mut map = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<u32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                *map.entry(e).or_insert(C64::new(0.0, 0.0)) += c1 * c2;
            }
        }
        Poly::from_map(self.nvars, map)
    }

    pub fn pow(&self, k: u32) -> Poly {
        let mut out = Poly::one(self.nvars);
        for _ in 0..k {
            out = out.mul(self);
        }
        out
    }

    pub fn conj(&self) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c.conj())).collect(),
        }
    }

    pub fn derivative(&self, i: usize) -> Poly {
        let mut map = BTreeMap::new();
        for (e, c) in &self.terms {
            if e[i] > 0 {
                let mut e2 = e.clone();
                e2[i] -= 1;
                *map.entry(e2).or_insert(C64::new(0.0, 0.0)) += c * e[i] as f64;
            }
        }
        Poly::from_map(self.nvars, map)
    }

    pub fn eval(&self, v: &[f64]) -> C64 {
        if let Some(c) = self.as_constant() {
            return c;
        }
        let mut acc = C64::new(0.0, 0.0);
        for (e, c) in &self.terms {
            let mut m = *c;
            for (x, &k) in v.iter().zip(e) {
                if k > 0 {
                    m *= x.powi(k as i32);
                }
            }
            acc += m;
        }
        acc
    }

    /// Re-embeds into `new_n` variables; old variable `i` becomes `map[i]`.
    pub fn remap(&self, new_n: usize, map: &[usize]) -> Poly {
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut e2 = vec![0; new_n];
                for (i, &k) in e.iter().enumerate() {
                    e2[map[i]] += k;
                }
                (e2, *c)
            })
            .collect::<BTreeMap<_, _>>();
        Poly::from_map(new_n, terms)
    }

    /// Drops variable `i`; panics in debug builds if it still appears.
    pub fn remove_var(&self, i: usize) -> Poly {
        debug_assert_eq!(self.degree_in(i), 0);
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut e2 = e.clone();
                e2.remove(i);
                (e2, *c)
            })
            .collect();
        Poly { nvars: self.nvars - 1, terms }
    }

    /// Substitutes `v_i = x` and removes the variable.
    pub fn substitute(&self, i: usize, x: f64) -> Poly {
        let mut map = BTreeMap::new();
        for (e, c) in &self.terms {
            let mut e2 = e.clone();
            let k = e2.remove(i);
            *map.entry(e2).or_insert(C64::new(0.0, 0.0)) += c * x.powi(k as i32);
        }
        Poly::from_map(self.nvars - 1, map)
    }

    /// Applies `v_i -> -v_i`.
    pub fn negate_var(&self, i: usize) -> Poly {
        Poly {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), if e[i] % 2 == 1 { -c } else { *c }))
                .collect(),
        }
    }

    /// Replaces `v_i` by `mu(y) + t` and takes the Gaussian moments of `t`
    /// with variance `var_t` (complex in general).  `mu` is given as a
    /// polynomial over the same variable list with no dependence on `v_i`.
    /// The variable `i` is removed from the result.
    pub fn gaussian_moments(&self, i: usize, mu: &Poly, var_t: C64) -> Poly {
        let n = self.degree_in(i);
        if n == 0 {
            return self.remove_var(i);
        }
        // (mu + t)^k averaged over t, for k = 0..=n
        let mut mu_pows = vec![Poly::one(self.nvars)];
        for k in 1..=n as usize {
            mu_pows.push(mu_pows[k - 1].mul(mu));
        }
        let mut shifted = Vec::with_capacity(n as usize + 1);
        for k in 0..=n {
            let mut acc = Poly::zero(self.nvars);
            let mut j = 0;
            while j <= k {
                // E[t^j] = (j-1)!! var^(j/2) for even j
                let moment = double_factorial(j.saturating_sub(1)) * var_t.powu(j / 2);
                let coeff = binomial(k, j) * moment;
                acc = acc.add(&mu_pows[(k - j) as usize].scale(coeff));
                j += 2;
            }
            shifted.push(acc);
        }
        let mut out = Poly::zero(self.nvars);
        for (e, c) in &self.terms {
            let mut rest = e.clone();
            let k = rest[i];
            rest[i] = 0;
            let mono = Poly::from_map(self.nvars, [(rest, *c)].into_iter().collect());
            out = out.add(&mono.mul(&shifted[k as usize]));
        }
        out.remove_var(i)
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    let mut r = 1.0;
    for j in 0..k {
        r = r * (n - j) as f64 / (j + 1) as f64;
    }
    r
}

fn double_factorial(n: u32) -> f64 {
    let mut r = 1.0;
    let mut k = n;
    while k > 1 {
        r *= k as f64;
        k -= 2;
    }
    r
}
