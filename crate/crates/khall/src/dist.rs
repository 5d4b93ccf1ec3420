//! Two-sided expansion operators, formal delta distributions, and the
//! residue identity for exchanging ordered double expansions.
//!
//! A rational function with tracked binomial denominator factors can be
//! expanded at a variable's infinity or zero; the difference of the two
//! expansions annihilates Laurent polynomials and turns simple poles into
//! formal deltas `δ(m) = Σ_{k∈ℤ} m^k`.
//!
//! Truncation is explicit and honest: every series and coefficient window
//! carries the range on which its coefficients are exact, and arithmetic
//! propagates those ranges instead of silently pretending exactness.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{AlgebraError, Result};
use crate::laurent::{LaurentPoly, Monomial};
use crate::ratfun::RatFun;
use crate::ring::{Ring, RingElement};

/// Sentinel for "exact at every exponent" bounds.
pub const UNBOUNDED: i32 = i32::MAX / 4;

fn sat(x: i64) -> i32 {
    x.clamp(-(UNBOUNDED as i64), UNBOUNDED as i64) as i32
}

fn sat_add(a: i32, b: i32) -> i32 {
    sat(a as i64 + b as i64)
}

/// `u^k` for a unit (or ±unit-monomial) ring element and any integer `k`.
pub fn unit_pow(u: &RingElement, k: i32) -> Result<RingElement> {
    if k >= 0 {
        u.pow(k as u32)
    } else {
        u.unit_inverse()?.pow((-k) as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    AtInfinity,
    AtZero,
}

/// One-variable expansion with Laurent-polynomial coefficients in the
/// remaining variables, times one shared variable-free rational prefactor.
///
/// `coeffs` are exact for exponents in `[exact_lo, exact_hi]`; outside that
/// window nothing is claimed. The true support is contained in
/// `[sup_lo, sup_hi]`, which lets products propagate exactness.
#[derive(Clone)]
pub struct Series {
    var: String,
    base: RatFun,
    coeffs: BTreeMap<i32, LaurentPoly>,
    sup_lo: i32,
    sup_hi: i32,
    exact_lo: i32,
    exact_hi: i32,
}

impl Series {
    fn normalize(mut self) -> Series {
        // coefficients beyond the support bound are known zeros, so an exact
        // window reaching the support bound is exact without bound
        if self.exact_hi >= self.sup_hi {
            self.exact_hi = UNBOUNDED;
        }
        if self.exact_lo <= self.sup_lo {
            self.exact_lo = -UNBOUNDED;
        }
        let (lo, hi) = (self.exact_lo.max(self.sup_lo), self.exact_hi.min(self.sup_hi));
        self.coeffs.retain(|k, c| *k >= lo && *k <= hi && !c.is_zero());
        self
    }

    pub fn var(&self) -> &str {
        &self.var
    }

    /// The shared variable-free rational prefactor.
    pub fn base(&self) -> &RatFun {
        &self.base
    }

    pub fn exact_window(&self) -> (i32, i32) {
        (self.exact_lo, self.exact_hi)
    }

    pub fn coeffs(&self) -> &BTreeMap<i32, LaurentPoly> {
        &self.coeffs
    }

    /// Exact coefficient of `var^k`; errors outside the exact window.
    pub fn coeff(&self, k: i32, ring: &Ring) -> Result<RatFun> {
        if k < self.exact_lo || k > self.exact_hi {
            return Err(AlgebraError::IncompatibleTruncation(format!(
                "coefficient {k} outside exact window [{}, {}]",
                self.exact_lo, self.exact_hi
            )));
        }
        match self.coeffs.get(&k) {
            Some(p) => self.base.mul_poly(p),
            None => Ok(RatFun::zero(ring)),
        }
    }

    pub fn mul(&self, other: &Series) -> Result<Series> {
        if self.var != other.var {
            return Err(AlgebraError::VariableMismatch(format!(
                "{} vs {}",
                self.var, other.var
            )));
        }
        // exactness: unknown coefficients of one factor contaminate products
        // starting at (its exact bound) + (the other's support bound)
        let hi_from = |ea: i32, slo: i32| if ea >= UNBOUNDED { UNBOUNDED } else { sat_add(ea, slo) };
        let lo_from = |ea: i32, shi: i32| if ea <= -UNBOUNDED { -UNBOUNDED } else { sat_add(ea, shi) };
        let exact_hi = hi_from(self.exact_hi, other.sup_lo).min(hi_from(other.exact_hi, self.sup_lo));
        let exact_lo = lo_from(self.exact_lo, other.sup_hi).max(lo_from(other.exact_lo, self.sup_hi));
        let mut coeffs: BTreeMap<i32, LaurentPoly> = BTreeMap::new();
        for (a, ca) in &self.coeffs {
            for (b, cb) in &other.coeffs {
                let k = sat_add(*a, *b);
                if k < exact_lo || k > exact_hi {
                    continue;
                }
                let p = ca.mul(cb)?;
                match coeffs.entry(k) {
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        *o.get_mut() = o.get().add(&p);
                    }
                    std::collections::btree_map::Entry::Vacant(v) => {
                        v.insert(p);
                    }
                }
            }
        }
        Ok(Series {
            var: self.var.clone(),
            base: self.base.mul(&other.base)?,
            coeffs,
            sup_lo: sat_add(self.sup_lo, other.sup_lo),
            sup_hi: sat_add(self.sup_hi, other.sup_hi),
            exact_lo,
            exact_hi,
        }
        .normalize())
    }

    /// Restricts the exact window (dropping stored coefficients outside it).
    pub fn truncate(mut self, lo: i32, hi: i32) -> Series {
        self.exact_lo = self.exact_lo.max(lo);
        self.exact_hi = self.exact_hi.min(hi);
        self.normalize()
    }

    /// Substitutes `var := u * new_var` (the delta-support substitution):
    /// coefficients pick up `u^k` and the series is re-read in `new_var`.
    pub fn substitute_scaled(&self, new_var: &str, u: &RingElement) -> Result<Series> {
        let mut coeffs = BTreeMap::new();
        for (k, c) in &self.coeffs {
            coeffs.insert(*k, c.scale(&unit_pow(u, *k)?)?);
        }
        Ok(Series {
            var: new_var.to_string(),
            coeffs,
            ..self.clone()
        })
    }

    /// Spreads the series into a two-sided coefficient window; the prefactor
    /// must reduce to a Laurent polynomial in the remaining variables.
    pub fn to_tail(&self, ring: &Ring) -> Result<Tail> {
        let base = self
            .base
            .as_polynomial()
            .map_err(|_| AlgebraError::NonPolynomialCoefficient)?;
        let mut tail = Tail::zero(ring, self.valid_bound());
        for (k, c) in &self.coeffs {
            let mono = LaurentPoly::var_pow(ring, &self.var, *k);
            tail = tail.add(&Tail::from_poly(
                &mono.mul(&c.mul(&base)?)?,
                self.valid_bound(),
            ))?;
        }
        Ok(tail)
    }

    fn valid_bound(&self) -> i32 {
        (-(self.exact_lo.max(-UNBOUNDED))).min(self.exact_hi)
    }
}

impl fmt::Display for Series {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        if self.base != RatFun::one(self.base.ring()) {
            write!(f, "({}) * ", self.base)?;
        }
        let mut first = true;
        for (k, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            if *k == 0 {
                write!(f, "({c})")?;
            } else if *k == 1 {
                write!(f, "({c})*{}", self.var)?;
            } else {
                write!(f, "({c})*{}^{}", self.var, k)?;
            }
        }
        Ok(())
    }
}

/// Expands a factored rational function in one variable.
pub fn expand(f: &RatFun, var: &str, dir: Direction, n: i32) -> Result<Series> {
    let ring = f.ring().clone();
    let (num, factors) = f.factored_parts()?;
    let mut rest: Vec<Monomial> = Vec::new();
    let mut var_factors: Vec<Monomial> = Vec::new();
    for m in factors {
        if m.var_exp(var) != 0 {
            var_factors.push(m.clone());
        } else {
            rest.push(m.clone());
        }
    }
    // variable-free factors become the shared prefactor
    let base = RatFun::from_factored(LaurentPoly::one(&ring), rest);
    let coeffs: BTreeMap<i32, LaurentPoly> = num.split_by_var(var);
    let (num_lo, num_hi) = match (coeffs.keys().next(), coeffs.keys().next_back()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => (0, 0),
    };
    let mut s = Series {
        var: var.to_string(),
        base,
        coeffs,
        sup_lo: num_lo,
        sup_hi: num_hi,
        exact_lo: -UNBOUNDED,
        exact_hi: UNBOUNDED,
    };
    // expand each binomial factor far enough that the product is exact on
    // the requested window
    let need = n.abs() + num_lo.abs().max(num_hi.abs()) + 4;
    for m in var_factors {
        let e = m.var_exp(var);
        let mprime = m.mul(&Monomial::new(ring.one(), &[(var, -e)])?)?;
        let converges = (e > 0) == matches!(dir, Direction::AtZero);
        let kmax = need / e.abs() + 2;
        let one = RatFun::one(&ring);
        let mut c: BTreeMap<i32, LaurentPoly> = BTreeMap::new();
        let fs = if converges {
            // 1/(1-m) = Σ_{k≥0} m'^k var^{ek}
            for k in 0..=kmax {
                c.insert(e * k, mprime.pow(k)?.to_laurent());
            }
            if e > 0 {
                Series {
                    var: var.to_string(),
                    base: one,
                    coeffs: c,
                    sup_lo: 0,
                    sup_hi: UNBOUNDED,
                    exact_lo: -UNBOUNDED,
                    exact_hi: e * kmax,
                }
            } else {
                Series {
                    var: var.to_string(),
                    base: one,
                    coeffs: c,
                    sup_lo: -UNBOUNDED,
                    sup_hi: 0,
                    exact_lo: e * kmax,
                    exact_hi: UNBOUNDED,
                }
            }
        } else {
            // 1/(1-m) = -Σ_{k≥1} m'^{-k} var^{-ek}
            for k in 1..=kmax {
                c.insert(-e * k, mprime.pow(-k)?.to_laurent().neg());
            }
            if e > 0 {
                Series {
                    var: var.to_string(),
                    base: one,
                    coeffs: c,
                    sup_lo: -UNBOUNDED,
                    sup_hi: -e,
                    exact_lo: -e * kmax,
                    exact_hi: UNBOUNDED,
                }
            } else {
                Series {
                    var: var.to_string(),
                    base: one,
                    coeffs: c,
                    sup_lo: -e,
                    sup_hi: UNBOUNDED,
                    exact_lo: -UNBOUNDED,
                    exact_hi: -e * kmax,
                }
            }
        };
        s = s.mul(&fs)?;
    }
    Ok(s.truncate(-n, n))
}

/// Two-sided coefficient window: a truncated formal distribution tail over a
/// set of variables with base-ring coefficients, exact wherever every
/// exponent has absolute value at most `valid`.
#[derive(Clone)]
pub struct Tail {
    ring: Ring,
    vars: Vec<String>,
    coeffs: BTreeMap<Vec<i32>, RingElement>,
    valid: i32,
}

impl Tail {
    pub fn zero(ring: &Ring, valid: i32) -> Tail {
        Tail {
            ring: ring.clone(),
            vars: vec![],
            coeffs: BTreeMap::new(),
            valid,
        }
    }

    pub fn constant(c: RingElement, valid: i32) -> Tail {
        let ring = c.ring().clone();
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(vec![], c);
        }
        Tail {
            ring,
            vars: vec![],
            coeffs,
            valid,
        }
    }

    pub fn from_poly(p: &LaurentPoly, valid: i32) -> Tail {
        Tail {
            ring: p.ring().clone(),
            vars: p.vars().to_vec(),
            coeffs: p.terms().clone(),
            valid,
        }
        .normalized()
    }

    fn normalized(mut self) -> Tail {
        let v = self.valid;
        self.coeffs
            .retain(|e, c| !c.is_zero() && e.iter().all(|x| x.abs() <= v));
        self
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn valid(&self) -> i32 {
        self.valid
    }

    pub fn coeffs(&self) -> &BTreeMap<Vec<i32>, RingElement> {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn with_vars(&self, vars: &[String]) -> Tail {
        if self.vars == vars {
            return self.clone();
        }
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v).expect("superset"))
            .collect();
        let coeffs = self
            .coeffs
            .iter()
            .map(|(e, c)| {
                let mut ne = vec![0i32; vars.len()];
                for (i, x) in e.iter().enumerate() {
                    ne[map[i]] = *x;
                }
                (ne, c.clone())
            })
            .collect();
        Tail {
            ring: self.ring.clone(),
            vars: vars.to_vec(),
            coeffs,
            valid: self.valid,
        }
    }

    fn union_vars(&self, other: &Tail) -> Vec<String> {
        let mut vars: Vec<String> = self
            .vars
            .iter()
            .chain(other.vars.iter())
            .cloned()
            .collect();
        vars.sort();
        vars.dedup();
        vars
    }

    pub fn add(&self, other: &Tail) -> Result<Tail> {
        let vars = self.union_vars(other);
        let mut a = self.with_vars(&vars);
        let b = other.with_vars(&vars);
        a.valid = a.valid.min(b.valid);
        for (e, c) in &b.coeffs {
            let entry = a.coeffs.entry(e.clone()).or_insert_with(|| self.ring.zero());
            *entry = entry.add(c)?;
        }
        Ok(a.normalized())
    }

    pub fn neg(&self) -> Tail {
        Tail {
            ring: self.ring.clone(),
            vars: self.vars.clone(),
            coeffs: self.coeffs.iter().map(|(e, c)| (e.clone(), c.neg())).collect(),
            valid: self.valid,
        }
    }

    pub fn sub(&self, other: &Tail) -> Result<Tail> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &RingElement) -> Result<Tail> {
        let mut coeffs = BTreeMap::new();
        for (e, x) in &self.coeffs {
            let p = x.mul(c)?;
            if !p.is_zero() {
                coeffs.insert(e.clone(), p);
            }
        }
        Ok(Tail {
            ring: self.ring.clone(),
            vars: self.vars.clone(),
            coeffs,
            valid: self.valid,
        })
    }

    /// Multiplies by a Laurent polynomial; validity shrinks by the
    /// polynomial's largest exponent magnitude.
    pub fn mul_poly(&self, p: &LaurentPoly) -> Result<Tail> {
        let spread = p
            .terms()
            .keys()
            .flat_map(|e| e.iter().map(|x| x.abs()))
            .max()
            .unwrap_or(0);
        let mut vars: Vec<String> = self
            .vars
            .iter()
            .chain(p.vars().iter())
            .cloned()
            .collect();
        vars.sort();
        vars.dedup();
        let a = self.with_vars(&vars);
        let b = p.with_vars(&vars);
        let mut coeffs: BTreeMap<Vec<i32>, RingElement> = BTreeMap::new();
        for (e1, c1) in &a.coeffs {
            for (e2, c2) in b.terms() {
                let e: Vec<i32> = e1.iter().zip(e2.iter()).map(|(x, y)| sat_add(*x, *y)).collect();
                let prod = c1.mul(c2)?;
                let entry = coeffs.entry(e).or_insert_with(|| self.ring.zero());
                *entry = entry.add(&prod)?;
            }
        }
        Ok(Tail {
            ring: self.ring.clone(),
            vars,
            coeffs,
            valid: self.valid - spread,
        }
        .normalized())
    }

    /// Tensor product; the variable sets must be disjoint.
    pub fn tensor(&self, other: &Tail) -> Result<Tail> {
        if self.vars.iter().any(|v| other.vars.contains(v)) {
            return Err(AlgebraError::IncompatibleTruncation(
                "product of two-sided windows in a shared variable".into(),
            ));
        }
        let vars = self.union_vars(other);
        let a = self.with_vars(&vars);
        let b = other.with_vars(&vars);
        let mut coeffs: BTreeMap<Vec<i32>, RingElement> = BTreeMap::new();
        for (e1, c1) in &a.coeffs {
            for (e2, c2) in &b.coeffs {
                let e: Vec<i32> = e1.iter().zip(e2.iter()).map(|(x, y)| x + y).collect();
                let prod = c1.mul(c2)?;
                if !prod.is_zero() {
                    coeffs.insert(e, prod);
                }
            }
        }
        Ok(Tail {
            ring: self.ring.clone(),
            vars,
            coeffs,
            valid: self.valid.min(other.valid),
        }
        .normalized())
    }
}

/// A formal distribution: finite sum of terms `∏ δ(m_i) × tail`.
///
/// Tails never mention the variables eliminated by their delta factors.
#[derive(Clone)]
pub struct DistTerm {
    pub deltas: Vec<Monomial>,
    pub tail: Tail,
}

#[derive(Clone)]
pub struct FormalDist {
    ring: Ring,
    terms: Vec<DistTerm>,
}

/// Canonical representative of a delta argument: the lexicographically first
/// variable gets a positive exponent (δ(m) = δ(1/m)).
pub fn canonical_delta(m: &Monomial) -> Result<Monomial> {
    match m.vars().iter().next() {
        Some((_, e)) if *e < 0 => m.inv(),
        _ => Ok(m.clone()),
    }
}

impl FormalDist {
    pub fn zero(ring: &Ring) -> FormalDist {
        FormalDist {
            ring: ring.clone(),
            terms: vec![],
        }
    }

    pub fn from_tail(tail: Tail) -> FormalDist {
        let ring = tail.ring().clone();
        let terms = if tail.is_zero() {
            vec![]
        } else {
            vec![DistTerm {
                deltas: vec![],
                tail,
            }]
        };
        FormalDist { ring, terms }
    }

    pub fn from_term(deltas: Vec<Monomial>, tail: Tail) -> Result<FormalDist> {
        let ring = tail.ring().clone();
        let mut ds = deltas
            .iter()
            .map(canonical_delta)
            .collect::<Result<Vec<_>>>()?;
        ds.sort();
        let terms = if tail.is_zero() {
            vec![]
        } else {
            vec![DistTerm { deltas: ds, tail }]
        };
        Ok(FormalDist { ring, terms })
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn terms(&self) -> &[DistTerm] {
        &self.terms
    }

    pub fn neg(&self) -> FormalDist {
        FormalDist {
            ring: self.ring.clone(),
            terms: self
                .terms
                .iter()
                .map(|t| DistTerm {
                    deltas: t.deltas.clone(),
                    tail: t.tail.neg(),
                })
                .collect(),
        }
    }

    /// Adds, merging terms with identical delta structure.
    pub fn add(&self, other: &FormalDist) -> Result<FormalDist> {
        let mut groups: BTreeMap<Vec<Monomial>, Tail> = BTreeMap::new();
        for t in self.terms.iter().chain(other.terms.iter()) {
            match groups.entry(t.deltas.clone()) {
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    *o.get_mut() = o.get().add(&t.tail)?;
                }
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(t.tail.clone());
                }
            }
        }
        let terms = groups
            .into_iter()
            .filter(|(_, tail)| !tail.is_zero())
            .map(|(deltas, tail)| DistTerm { deltas, tail })
            .collect();
        Ok(FormalDist {
            ring: self.ring.clone(),
            terms,
        })
    }

    pub fn sub(&self, other: &FormalDist) -> Result<FormalDist> {
        self.add(&other.neg())
    }

    pub fn scale(&self, c: &RingElement) -> Result<FormalDist> {
        let mut terms = Vec::new();
        for t in &self.terms {
            let tail = t.tail.scale(c)?;
            if !tail.is_zero() {
                terms.push(DistTerm {
                    deltas: t.deltas.clone(),
                    tail,
                });
            }
        }
        Ok(FormalDist {
            ring: self.ring.clone(),
            terms,
        })
    }

    /// For each delta, picks the variable it eliminates: one with exponent
    /// ±1 that appears in no other delta of the term and not in the tail.
    fn solve_deltas(term: &DistTerm) -> Result<Vec<(String, i32, Monomial)>> {
        let mut remaining: Vec<&Monomial> = term.deltas.iter().collect();
        let mut solved: Vec<(String, i32, Monomial)> = Vec::new();
        let mut taken: Vec<String> = Vec::new();
        while !remaining.is_empty() {
            let mut found: Option<usize> = None;
            'search: for (i, m) in remaining.iter().enumerate() {
                for (v, e) in m.vars() {
                    if e.abs() == 1
                        && !term.tail.vars().contains(v)
                        && !taken.contains(v)
                        && remaining
                            .iter()
                            .enumerate()
                            .all(|(j, m2)| j == i || m2.var_exp(v) == 0)
                    {
                        solved.push((v.clone(), *e, (*m).clone()));
                        taken.push(v.clone());
                        found = Some(i);
                        break 'search;
                    }
                }
            }
            match found {
                Some(i) => {
                    remaining.remove(i);
                }
                None => {
                    return Err(AlgebraError::UnsupportedDeltaArgument(
                        remaining
                            .iter()
                            .map(|m| format!("delta({m})"))
                            .collect::<Vec<_>>()
                            .join("*"),
                    ))
                }
            }
        }
        Ok(solved)
    }

    /// Expands the deltas into a raw coefficient map over `vars`, exact for
    /// every multi-exponent of max-norm ≤ `window`.
    pub fn materialize(
        &self,
        vars: &[String],
        window: i32,
    ) -> Result<BTreeMap<Vec<i32>, RingElement>> {
        let mut out: BTreeMap<Vec<i32>, RingElement> = BTreeMap::new();
        for term in &self.terms {
            let solved = Self::solve_deltas(term)?;
            // each delta exponent k_i is pinned down by its solved variable,
            // but earlier-solved deltas may feed into it; bound iteratively
            let mut kmax: Vec<i64> = Vec::with_capacity(solved.len());
            for (i, (v, _, _)) in solved.iter().enumerate() {
                let mut bound = window as i64;
                for (j, (_, _, mj)) in solved.iter().enumerate().take(i) {
                    bound += kmax[j] * mj.var_exp(v).abs() as i64;
                }
                kmax.push(bound);
            }
            // certify the tail window is deep enough
            for v in term.tail.vars() {
                let need: i64 = window as i64
                    + solved
                        .iter()
                        .enumerate()
                        .map(|(j, (_, _, mj))| kmax[j] * mj.var_exp(v).abs() as i64)
                        .sum::<i64>();
                if (term.tail.valid() as i64) < need {
                    return Err(AlgebraError::IncompatibleTruncation(format!(
                        "tail valid to {} but window {} needs {}",
                        term.tail.valid(),
                        window,
                        need
                    )));
                }
            }
            let vidx = |v: &str| vars.iter().position(|w| w == v);
            let kmax: Vec<i32> = kmax
                .into_iter()
                .map(|b| i32::try_from(b).map_err(|_| AlgebraError::ExponentOverflow))
                .collect::<Result<_>>()?;
            let n_deltas = solved.len();
            let mut ks: Vec<i32> = kmax.iter().map(|b| -b).collect();
            loop {
                // contribution of the deltas at this exponent tuple
                let mut base = vec![0i32; vars.len()];
                let mut unit = self.ring.one();
                for (i, (_, _, m)) in solved.iter().enumerate() {
                    let k = ks[i];
                    unit = unit.mul(&unit_pow(m.unit(), k)?)?;
                    for (v, e) in m.vars() {
                        if let Some(j) = vidx(v) {
                            base[j] = sat_add(base[j], k * e);
                        }
                    }
                }
                for (te, tc) in term.tail.coeffs() {
                    let mut p = base.clone();
                    let mut skip = false;
                    for (v, x) in term.tail.vars().iter().zip(te.iter()) {
                        match vidx(v) {
                            Some(j) => p[j] = sat_add(p[j], *x),
                            None => {
                                if *x != 0 {
                                    skip = true;
                                }
                            }
                        }
                    }
                    if skip || p.iter().any(|x| x.abs() > window) {
                        continue;
                    }
                    let c = tc.mul(&unit)?;
                    let entry = out.entry(p).or_insert_with(|| self.ring.zero());
                    *entry = entry.add(&c)?;
                }
                // advance the exponent tuple
                let mut i = 0;
                loop {
                    if i == n_deltas {
                        break;
                    }
                    ks[i] += 1;
                    if ks[i] <= kmax[i] {
                        break;
                    }
                    ks[i] = -kmax[i];
                    i += 1;
                }
                if n_deltas == 0 || i == n_deltas {
                    break;
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        Ok(out)
    }

    /// All variables occurring in this distribution.
    pub fn all_vars(&self) -> Vec<String> {
        let mut vars: Vec<String> = Vec::new();
        for t in &self.terms {
            for m in &t.deltas {
                vars.extend(m.vars().keys().cloned());
            }
            vars.extend(t.tail.vars().iter().cloned());
        }
        vars.sort();
        vars.dedup();
        vars
    }

    /// Coefficientwise equality on the shared window.
    pub fn agrees(&self, other: &FormalDist, window: i32) -> Result<bool> {
        let mut vars = self.all_vars();
        vars.extend(other.all_vars());
        vars.sort();
        vars.dedup();
        let a = self.materialize(&vars, window)?;
        let b = other.materialize(&vars, window)?;
        Ok(a == b)
    }

    pub fn is_zero_to(&self, window: i32) -> Result<bool> {
        let vars = self.all_vars();
        Ok(self.materialize(&vars, window)?.is_empty())
    }

    /// Multiplies by a Laurent polynomial, substituting delta supports first
    /// (`δ(w/(αz))` forces `w := αz`).
    pub fn mul_poly(&self, p: &LaurentPoly) -> Result<FormalDist> {
        let mut terms = Vec::new();
        for term in &self.terms {
            let solved = Self::solve_deltas(term)?;
            let mut q = p.clone();
            for (v, e, m) in &solved {
                // on the support of δ(m): m = 1, so v = (m v^{-e})^{-e}
                let rest = m.mul(&Monomial::new(self.ring.one(), &[(v, -e)])?)?;
                let image = if *e == 1 { rest.inv()? } else { rest };
                q = q.substitute(v, &image)?;
            }
            let tail = term.tail.mul_poly(&q)?;
            if !tail.is_zero() {
                terms.push(DistTerm {
                    deltas: term.deltas.clone(),
                    tail,
                });
            }
        }
        Ok(FormalDist {
            ring: self.ring.clone(),
            terms,
        })
    }

    /// Product of two distributions with disjoint tail variables.
    pub fn mul(&self, other: &FormalDist) -> Result<FormalDist> {
        let mut out = FormalDist::zero(&self.ring);
        for t1 in &self.terms {
            for t2 in &other.terms {
                let mut deltas = t1.deltas.clone();
                for m in &t2.deltas {
                    let cm = canonical_delta(m)?;
                    if deltas.contains(&cm) {
                        return Err(AlgebraError::DeltaSquare);
                    }
                    deltas.push(cm);
                }
                deltas.sort();
                let tail = t1.tail.tensor(&t2.tail)?;
                out = out.add(&FormalDist::from_term(deltas, tail)?)?;
            }
        }
        Ok(out)
    }

    /// Recognizes single-variable tails of the shape `c·δ(u·x)` (all window
    /// coefficients related by a fixed unit monomial) and rewrites them in
    /// delta form. Certified only up to the tail window.
    pub fn canonicalize(&self) -> Result<FormalDist> {
        let mut out = FormalDist::zero(&self.ring);
        for term in &self.terms {
            let tail = &term.tail;
            let rec = if tail.vars().len() == 1 && tail.valid() >= 1 && tail.valid() < UNBOUNDED {
                recognize_delta(tail)?
            } else {
                None
            };
            let new_term = match rec {
                Some((u, c0)) => {
                    let var = tail.vars()[0].clone();
                    let mut deltas = term.deltas.clone();
                    deltas.push(canonical_delta(&Monomial::from_parts(
                        u,
                        BTreeMap::from([(var, 1)]),
                    )?)?);
                    FormalDist::from_term(deltas, Tail::constant(c0, tail.valid()))?
                }
                None => FormalDist {
                    ring: self.ring.clone(),
                    terms: vec![term.clone()],
                },
            };
            out = out.add(&new_term)?;
        }
        Ok(out)
    }
}

/// If `b = u·a` for a signed unit monomial `u`, returns `u`.
fn unit_ratio(a: &RingElement, b: &RingElement) -> Result<Option<RingElement>> {
    if a.is_zero() || b.is_zero() {
        return Ok(None);
    }
    let (ea, ca) = a.terms().iter().next().unwrap();
    let (eb, cb) = b.terms().iter().next().unwrap();
    if ca.magnitude() != cb.magnitude() {
        return Ok(None);
    }
    let sign = if ca.sign() == cb.sign() { 1 } else { -1 };
    let d: Vec<i32> = eb.iter().zip(ea.iter()).map(|(x, y)| x - y).collect();
    let mut terms = BTreeMap::new();
    terms.insert(d, num_bigint::BigInt::from(sign));
    let u = match a.ring().normalize(terms) {
        Ok(u) => u,
        Err(_) => return Ok(None),
    };
    if u.as_unit_monomial().is_none() {
        return Ok(None);
    }
    if u.mul(a)? == *b {
        Ok(Some(u))
    } else {
        Ok(None)
    }
}

/// Checks the full-window delta pattern `c_k = c_0·u^k` on a one-variable
/// tail; returns `(u, c_0)` on success.
fn recognize_delta(tail: &Tail) -> Result<Option<(RingElement, RingElement)>> {
    let v = tail.valid();
    let mut prev: Option<RingElement> = None;
    let mut u: Option<RingElement> = None;
    let mut c0: Option<RingElement> = None;
    for k in -v..=v {
        let c = match tail.coeffs().get(&vec![k]) {
            Some(c) => c.clone(),
            None => return Ok(None), // delta coefficients are never zero
        };
        if k == 0 {
            c0 = Some(c.clone());
        }
        if let Some(p) = prev {
            match unit_ratio(&p, &c)? {
                Some(r) => match &u {
                    Some(u0) if *u0 == r => {}
                    Some(_) => return Ok(None),
                    None => u = Some(r),
                },
                None => return Ok(None),
            }
        }
        prev = Some(c);
    }
    match (u, c0) {
        (Some(u), Some(c0)) => Ok(Some((u, c0))),
        _ => Ok(None),
    }
}

/// `f(x)|_{x=∞} − f(x)|_{x=0}` as a raw coefficient window.
pub fn two_sided_tail(f: &RatFun, var: &str, n: i32) -> Result<Tail> {
    let ring = f.ring().clone();
    let inf = expand(f, var, Direction::AtInfinity, n)?;
    let zero = expand(f, var, Direction::AtZero, n)?;
    inf.to_tail(&ring)?.sub(&zero.to_tail(&ring)?)
}

/// Two-sided expansion with delta recognition.
pub fn two_sided(f: &RatFun, var: &str, n: i32) -> Result<FormalDist> {
    FormalDist::from_tail(two_sided_tail(f, var, n)?).canonicalize()
}

/// Ordered double expansion: two-sided in `first` with rational coefficients,
/// then two-sided in `second` applied to each coefficient.
///
/// Both directional expansions in `first` share one variable-free rational
/// prefactor (the denominator factors not involving `first`), so the second
/// two-sided expansion is computed once for that prefactor and multiplied by
/// the polynomial coefficient differences.
pub fn ordered_double_expand(
    f: &RatFun,
    first: &str,
    second: &str,
    n: i32,
) -> Result<FormalDist> {
    let ring = f.ring().clone();
    let s_inf = expand(f, first, Direction::AtInfinity, n)?;
    let s_zero = expand(f, first, Direction::AtZero, n)?;
    for s in [&s_inf, &s_zero] {
        let (lo, hi) = s.exact_window();
        if lo > -n || hi < n {
            return Err(AlgebraError::IncompatibleTruncation(format!(
                "exact window [{lo}, {hi}] does not cover [-{n}, {n}]"
            )));
        }
    }
    let zero_poly = LaurentPoly::zero(&ring);
    let mut diffs: Vec<(i32, LaurentPoly)> = Vec::new();
    let mut spread = 0i32;
    for k in -n..=n {
        let a = s_inf.coeffs().get(&k).unwrap_or(&zero_poly);
        let b = s_zero.coeffs().get(&k).unwrap_or(&zero_poly);
        let d = a.sub(b);
        if d.is_zero() {
            continue;
        }
        let s = d
            .terms()
            .keys()
            .flat_map(|e| e.iter().map(|x| x.abs()))
            .max()
            .unwrap_or(0);
        spread = spread.max(s);
        diffs.push((k, d));
    }
    if diffs.is_empty() {
        return Ok(FormalDist::zero(&ring));
    }
    // deep enough that every coefficient product stays exact on the window
    let bt = two_sided_tail(s_inf.base(), second, sat_add(n, spread))?;
    let mut total = Tail::zero(&ring, n);
    for (k, d) in diffs {
        let t = bt.mul_poly(&d)?;
        let shifted = t.mul_poly(&LaurentPoly::var_pow(&ring, first, k))?;
        // the shift by first^k does not spend window validity in `second`
        total = total.add(&Tail {
            valid: t.valid().min(n),
            ..shifted
        })?;
    }
    Ok(FormalDist::from_tail(total))
}

/// `−(1/α)·δ(y/(αx))·{f(x) g(y)|_{(x,y)=∞−0}}` where the bracket is
/// `f|_∞ g|_∞ − f|_0 g|_0` and the delta support substitutes `y := αx`.
pub fn exchange_defect(
    f: &RatFun,
    g: &RatFun,
    alpha: &RingElement,
    x: &str,
    y: &str,
    n: i32,
) -> Result<FormalDist> {
    let ring = f.ring().clone();
    let fx_inf = expand(f, x, Direction::AtInfinity, n)?;
    let fx_zero = expand(f, x, Direction::AtZero, n)?;
    let gy_inf = expand(g, y, Direction::AtInfinity, n)?.substitute_scaled(x, alpha)?;
    let gy_zero = expand(g, y, Direction::AtZero, n)?.substitute_scaled(x, alpha)?;
    let p_inf = fx_inf.mul(&gy_inf)?;
    let p_zero = fx_zero.mul(&gy_zero)?;
    let tail = p_inf
        .to_tail(&ring)?
        .sub(&p_zero.to_tail(&ring)?)?
        .scale(&alpha.unit_inverse()?.neg())?;
    let delta = Monomial::from_parts(
        alpha.unit_inverse()?,
        BTreeMap::from([(y.to_string(), 1), (x.to_string(), -1)]),
    )?;
    FormalDist::from_term(vec![delta], tail)?.canonicalize()
}

impl fmt::Display for Tail {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.coeffs {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let mono: Vec<String> = self
                .vars
                .iter()
                .zip(e.iter())
                .filter(|(_, x)| **x != 0)
                .map(|(v, x)| if *x == 1 { v.clone() } else { format!("{v}^{x}") })
                .collect();
            if mono.is_empty() {
                write!(f, "({c})")?;
            } else {
                write!(f, "({c})*{}", mono.join("*"))?;
            }
        }
        Ok(())
    }
}

impl fmt::Display for FormalDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for t in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            for m in &t.deltas {
                write!(f, "delta({m})*")?;
            }
            write!(f, "[{}]", t.tail)?;
        }
        Ok(())
    }
}

impl fmt::Debug for FormalDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
