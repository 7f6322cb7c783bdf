//! Sums of Gaussian terms over a shared list of named variables.

use std::collections::HashMap;

use num_complex::Complex64 as C64;

use super::poly::Poly;
use super::term::GaussTerm;
use crate::Error;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Relative tolerance used when deciding that two exponents are equal.
pub const MERGE_TOL: f64 = 1e-12;

/// A real-valued sum `sum_k Re[term_k(v)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct TermSum {
    vars: Vec<String>,
    terms: Vec<GaussTerm>,
}

/// A complex-valued sum `sum_k term_k(v)`, used for probability amplitudes.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexSum {
    vars: Vec<String>,
    terms: Vec<GaussTerm>,
}

fn union_vars(a: &[String], b: &[String]) -> Vec<String> {
    let mut out = a.to_vec();
    for v in b {
        if !out.contains(v) {
            out.push(v.clone());
        }
    }
    out
}

fn embed(terms: &[GaussTerm], from: &[String], to: &[String]) -> Vec<GaussTerm> {
    if from == to {
        return terms.to_vec();
    }
    let map: Vec<usize> = from
        .iter()
        .map(|v| to.iter().position(|w| w == v).expect("target must contain source variables"))
        .collect();
    terms.iter().map(|t| t.remap(to.len(), &map)).collect()
}

fn close(a: C64, b: C64) -> bool {
    (a - b).norm() <= MERGE_TOL * (1.0 + a.norm().max(b.norm()))
}

fn same_exponent(s: &GaussTerm, t: &GaussTerm) -> bool {
    s.quad.iter().zip(&t.quad).all(|(a, b)| close(*a, *b))
        && s.lin.iter().zip(&t.lin).all(|(a, b)| close(*a, *b))
}

fn bucket_key(t: &GaussTerm) -> Vec<i64> {
    let q = |x: f64| (x * 1e8).round() as i64;
    t.quad
        .iter()
        .chain(&t.lin)
        .flat_map(|z| [q(z.re), q(z.im)])
        .collect()
}

/// Merges terms whose quadratic and linear parts agree within `MERGE_TOL`.
fn merge_terms(terms: Vec<GaussTerm>) -> Vec<GaussTerm> {
    let mut buckets: HashMap<Vec<i64>, Vec<usize>> = HashMap::new();
    let mut order = Vec::new();
    for (k, t) in terms.iter().enumerate() {
        if t.is_zero() {
            continue;
        }
        let key = bucket_key(t);
        let entry = buckets.entry(key.clone()).or_default();
        if entry.is_empty() {
            order.push(key);
        }
        entry.push(k);
    }
    let mut out = Vec::new();
    for key in order {
        let mut members = buckets.remove(&key).unwrap();
        while !members.is_empty() {
            let head = members[0];
            let (group, rest): (Vec<usize>, Vec<usize>) =
                members.iter().partition(|&&k| same_exponent(&terms[head], &terms[k]));
            members = rest;
            if group.len() == 1 {
                out.push(terms[head].clone());
                continue;
            }
            let reference = *group
                .iter()
                .max_by(|&&x, &&y| terms[x].log_amp.re.total_cmp(&terms[y].log_amp.re))
                .unwrap();
            let c_ref = terms[reference].log_amp;
            let n = terms[head].nvars();
            let mut poly = Poly::zero(n);
            let mut scale = 0.0f64;
            for &k in &group {
                let f = (terms[k].log_amp - c_ref).exp();
                scale = scale.max(terms[k].poly.max_abs_coeff() * f.norm());
                poly = poly.add(&terms[k].poly.scale(f));
            }
            let poly = poly.drop_below(1e-15 * scale);
            if !poly.is_zero() {
                let mut t = terms[reference].clone();
                t.poly = poly;
                out.push(t);
            }
        }
    }
    out
}

/// Chooses between a term and its conjugate (same real part) so that
/// conjugate pairs land on identical exponents.
fn canonical_real(t: GaussTerm) -> GaussTerm {
    for z in t.quad.iter().chain(&t.lin) {
        if z.im != 0.0 {
            return if z.im < 0.0 { t.conj() } else { t };
        }
    }
    // Real exponent: fold the phase of the amplitude into real coefficients.
    let phase = C64::new(0.0, t.log_amp.im).exp();
    let mut r = t;
    r.poly = r.poly.scale(phase).real_part();
    r.log_amp = C64::new(r.log_amp.re, 0.0);
    r
}

macro_rules! shared_impl {
    ($ty:ident) => {
        impl $ty {
            /// The empty sum (value zero) over the given variables.
            pub fn zero(vars: &[&str]) -> Self {
                $ty { vars: vars.iter().map(|s| s.to_string()).collect(), terms: Vec::new() }
            }

            /// Wraps already-built terms.  Every term must have `vars.len()` variables.
            pub fn from_terms(vars: Vec<String>, terms: Vec<GaussTerm>) -> Self {
                for t in &terms {
                    assert_eq!(t.nvars(), vars.len(), "term arity does not match variables");
                    for i in 0..vars.len() {
                        for j in 0..i {
                            assert!(t.quad(i, j) == t.quad(j, i), "quadratic form must be symmetric");
                        }
                    }
                }
                $ty { vars, terms }
            }

            pub fn vars(&self) -> &[String] {
                &self.vars
            }

            pub fn terms(&self) -> &[GaussTerm] {
                &self.terms
            }

            pub fn len(&self) -> usize {
                self.terms.len()
            }

            pub fn is_empty(&self) -> bool {
                self.terms.is_empty()
            }

            pub fn index_of(&self, var: &str) -> Option<usize> {
                self.vars.iter().position(|v| v == var)
            }

            /// True when some term involves `var`.
            pub fn depends_on(&self, var: &str) -> bool {
                match self.index_of(var) {
                    Some(i) => self.terms.iter().any(|t| !t.independent_of(i)),
                    None => false,
                }
            }

            /// Re-expresses the sum over `vars`, which must contain the current variables.
            pub fn embed_into(&self, vars: &[String]) -> Self {
                $ty { vars: vars.to_vec(), terms: embed(&self.terms, &self.vars, vars) }
            }

            pub fn add(&self, other: &Self) -> Self {
                let vars = union_vars(&self.vars, &other.vars);
                let mut terms = embed(&self.terms, &self.vars, &vars);
                terms.extend(embed(&other.terms, &other.vars, &vars));
                $ty { vars, terms }
            }

            /// Removes variables that no term involves.
            pub fn prune(&self) -> Self {
                let mut s = self.clone();
                let mut i = 0;
                while i < s.vars.len() {
                    if s.terms.iter().all(|t| t.independent_of(i)) {
                        s.terms = s.terms.iter().map(|t| t.remove_var(i)).collect();
                        s.vars.remove(i);
                    } else {
                        i += 1;
                    }
                }
                s
            }

            /// Sets `var = x` and removes it.  Absent variables leave the sum unchanged.
            pub fn substitute(&self, var: &str, x: f64) -> Self {
                match self.index_of(var) {
                    None => self.clone(),
                    Some(i) => {
                        let mut vars = self.vars.clone();
                        vars.remove(i);
                        $ty { vars, terms: self.terms.iter().map(|t| t.substitute(i, x)).collect() }
                    }
                }
            }

            /// Substitutes several variables at once.
            pub fn substitute_all(&self, assignment: &[(&str, f64)]) -> Self {
                let mut s = self.clone();
                for (name, x) in assignment {
                    s = s.substitute(name, *x);
                }
                s
            }

            /// Applies `var -> -var`.
            pub fn reflect(&self, var: &str) -> Self {
                match self.index_of(var) {
                    None => self.clone(),
                    Some(i) => $ty {
                        vars: self.vars.clone(),
                        terms: self.terms.iter().map(|t| t.reflect(i)).collect(),
                    },
                }
            }

            /// Exchanges the roles of two variables: the result at `(a, b) = (x, y)`
            /// equals the input at `(a, b) = (y, x)`.
            pub fn swap(&self, a: &str, b: &str) -> Self {
                let vars = union_vars(&self.vars, &[a.to_string(), b.to_string()]);
                let s = self.embed_into(&vars);
                let ia = s.index_of(a).unwrap();
                let ib = s.index_of(b).unwrap();
                let map: Vec<usize> = (0..vars.len())
                    .map(|k| if k == ia { ib } else if k == ib { ia } else { k })
                    .collect();
                $ty { vars, terms: s.terms.iter().map(|t| t.remap(map.len(), &map)).collect() }
            }

            /// Exact derivative with respect to `var` (zero if absent).
            pub fn differentiate(&self, var: &str) -> Self {
                match self.index_of(var) {
                    None => $ty { vars: self.vars.clone(), terms: Vec::new() },
                    Some(i) => $ty {
                        vars: self.vars.clone(),
                        terms: self
                            .terms
                            .iter()
                            .map(|t| t.differentiate(i))
                            .filter(|t| !t.is_zero())
                            .collect(),
                    },
                }
            }

            fn assignment_vector(&self, assignment: &[(&str, f64)]) -> Result<Vec<f64>, Error> {
                self.vars
                    .iter()
                    .map(|v| {
                        assignment
                            .iter()
                            .find(|(name, _)| name == v)
                            .map(|(_, x)| *x)
                            .ok_or_else(|| Error::UnboundVariable(v.clone()))
                    })
                    .collect()
            }
        }
    };
}

shared_impl!(TermSum);
shared_impl!(ComplexSum);

impl TermSum {
    /// A constant real sum.
    pub fn constant(c: f64) -> Self {
        TermSum { vars: Vec::new(), terms: vec![GaussTerm::constant(0, C64::new(c, 0.0))] }
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = self.clone();
        for t in &mut out.terms {
            t.poly = t.poly.scale(C64::new(s, 0.0));
        }
        out
    }

    /// Product of two real sums, expanded with `Re x Re y = (Re[xy] + Re[x conj y]) / 2`.
    pub fn multiply(&self, other: &TermSum) -> TermSum {
        let vars = union_vars(&self.vars, &other.vars);
        let a = embed(&self.terms, &self.vars, &vars);
        let b = embed(&other.terms, &other.vars, &vars);
        let half = C64::new(0.5f64.ln(), 0.0);
        let mut terms = Vec::with_capacity(2 * a.len() * b.len());
        for x in &a {
            for y in &b {
                let mut p = x.mul(y);
                p.log_amp += half;
                terms.push(p);
                let mut q = x.mul(&y.conj());
                q.log_amp += half;
                terms.push(q);
            }
        }
        TermSum { vars, terms }.simplify()
    }

    /// Canonicalizes conjugate pairs, merges equal exponents and drops zero terms.
    pub fn simplify(&self) -> TermSum {
        let terms = self.terms.iter().cloned().map(canonical_real).collect();
        TermSum { vars: self.vars.clone(), terms: merge_terms(terms) }
    }

    /// Averages over `var ~ N(0, eta^2)`.  `eta = 0` substitutes `var = 0`;
    /// an absent variable leaves the sum unchanged.
    pub fn integrate_gaussian(&self, var: &str, eta: f64) -> Result<TermSum, Error> {
        if !(eta >= 0.0) || !eta.is_finite() {
            return Err(Error::InvalidParameter(format!("noise width for {var} must be finite and >= 0")));
        }
        let Some(i) = self.index_of(var) else {
            return Ok(self.clone());
        };
        if eta == 0.0 {
            return Ok(self.substitute(var, 0.0).simplify().prune());
        }
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut w = t.clone();
            w.apply_gaussian_weight(i, eta);
            terms.push(w.integrate(i, var)?);
        }
        let mut vars = self.vars.clone();
        vars.remove(i);
        Ok(TermSum { vars, terms }.simplify().prune())
    }

    /// Integrates `var` over the real line with unit weight.
    pub fn integrate_unweighted(&self, var: &str) -> Result<TermSum, Error> {
        let Some(i) = self.index_of(var) else {
            return Err(Error::NonConvergentIntegral { var: var.to_string() });
        };
        let terms = self
            .terms
            .iter()
            .map(|t| t.integrate(i, var))
            .collect::<Result<Vec<_>, _>>()?;
        let mut vars = self.vars.clone();
        vars.remove(i);
        Ok(TermSum { vars, terms }.simplify().prune())
    }

    /// Averages over `var` when it enters every term only through `exp(b * var)`.
    /// `average(b)` must return the expectation of `exp(b * var)`; it is
    /// called once per term.  Terms with `var` in the quadratic form or the
    /// polynomial are rejected.
    pub fn average_linear(
        &self,
        var: &str,
        mut average: impl FnMut(C64) -> Result<C64, Error>,
    ) -> Result<TermSum, Error> {
        let Some(i) = self.index_of(var) else {
            return Ok(self.clone());
        };
        let n = self.vars.len();
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            if (0..n).any(|j| t.quad[i * n + j] != ZERO) || t.poly.degree_in(i) > 0 {
                return Err(Error::InvalidParameter(format!("{var} is not a pure phase variable")));
            }
            let mut u = t.clone();
            u.lin[i] = ZERO;
            let m = if t.lin[i] == ZERO { C64::new(1.0, 0.0) } else { average(t.lin[i])? };
            if m == ZERO {
                continue;
            }
            u.log_amp += m.ln();
            terms.push(u.remove_var(i));
        }
        let mut vars = self.vars.clone();
        vars.remove(i);
        Ok(TermSum { vars, terms }.simplify().prune())
    }

    /// Keeps only the terms that do not involve `var`, then removes it.
    pub fn drop_dependent(&self, var: &str) -> TermSum {
        match self.index_of(var) {
            None => self.clone(),
            Some(i) => {
                let mut vars = self.vars.clone();
                vars.remove(i);
                let terms = self
                    .terms
                    .iter()
                    .filter(|t| t.independent_of(i))
                    .map(|t| t.remove_var(i))
                    .collect();
                TermSum { vars, terms }
            }
        }
    }

    /// Value at a point.  Every variable of the sum must be assigned; extra
    /// names in the assignment are ignored.
    pub fn evaluate(&self, assignment: &[(&str, f64)]) -> Result<f64, Error> {
        let v = self.assignment_vector(assignment)?;
        Ok(self.evaluate_ordered(&v))
    }

    /// Value at a point given in the order of [`vars`](Self::vars).
    pub fn evaluate_ordered(&self, v: &[f64]) -> f64 {
        assert_eq!(v.len(), self.vars.len());
        self.terms.iter().map(|t| t.value(v).re).sum()
    }
}

impl ComplexSum {
    /// A sum holding the single term `t`.
    pub fn from_term(vars: &[&str], t: GaussTerm) -> Self {
        ComplexSum::from_terms(vars.iter().map(|s| s.to_string()).collect(), vec![t])
    }

    pub fn scale(&self, s: C64) -> Self {
        let mut out = self.clone();
        if s == ZERO {
            out.terms.clear();
            return out;
        }
        let ls = s.ln();
        for t in &mut out.terms {
            t.log_amp += ls;
        }
        out
    }

    /// Complex product.
    pub fn mul(&self, other: &ComplexSum) -> ComplexSum {
        let vars = union_vars(&self.vars, &other.vars);
        let a = embed(&self.terms, &self.vars, &vars);
        let b = embed(&other.terms, &other.vars, &vars);
        let mut terms = Vec::with_capacity(a.len() * b.len());
        for x in &a {
            for y in &b {
                terms.push(x.mul(y));
            }
        }
        ComplexSum { vars, terms }.simplify()
    }

    /// Merges terms with equal exponents.
    pub fn simplify(&self) -> ComplexSum {
        ComplexSum { vars: self.vars.clone(), terms: merge_terms(self.terms.clone()) }
    }

    /// `|x|^2` as a real sum.
    pub fn norm_sqr(&self) -> TermSum {
        let n = self.terms.len();
        let two = C64::new(2.0f64.ln(), 0.0);
        let mut terms = Vec::with_capacity(n * (n + 1) / 2);
        for k in 0..n {
            terms.push(self.terms[k].mul(&self.terms[k].conj()));
            for l in k + 1..n {
                let mut t = self.terms[k].mul(&self.terms[l].conj());
                t.log_amp += two;
                terms.push(t);
            }
        }
        TermSum { vars: self.vars.clone(), terms }.simplify()
    }

    pub fn evaluate(&self, assignment: &[(&str, f64)]) -> Result<C64, Error> {
        let v = self.assignment_vector(assignment)?;
        Ok(self.terms.iter().map(|t| t.value(&v)).sum())
    }
}
