//! Multivariate Laurent polynomials over a base ring in distinguished formal
//! variables (z, w, x, y, z1..zn).

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::Signed;

use crate::error::{AlgebraError, Result};
use crate::ring::{Ring, RingElement};

/// A monomial `u * ∏ v_i^{e_i}` with `u` a (signed) unit monomial of the
/// base ring. Used for delta arguments, denominator factors and wedge-series
/// arguments.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Monomial {
    unit: RingElement,
    vars: BTreeMap<String, i32>,
}

impl Monomial {
    pub fn new(unit: RingElement, vars: &[(&str, i32)]) -> Result<Monomial> {
        if unit.as_unit_monomial().is_none() {
            return Err(AlgebraError::NotUnitMonomial(format!("{unit}")));
        }
        let mut m = BTreeMap::new();
        for (v, e) in vars {
            if *e != 0 {
                *m.entry(v.to_string()).or_insert(0) += e;
            }
        }
        m.retain(|_, e| *e != 0);
        Ok(Monomial { unit, vars: m })
    }

    pub fn one(ring: &Ring) -> Monomial {
        Monomial {
            unit: ring.one(),
            vars: BTreeMap::new(),
        }
    }

    pub fn var(ring: &Ring, v: &str) -> Monomial {
        Monomial::new(ring.one(), &[(v, 1)]).unwrap()
    }

    pub fn from_parts(unit: RingElement, vars: BTreeMap<String, i32>) -> Result<Monomial> {
        if unit.as_unit_monomial().is_none() {
            return Err(AlgebraError::NotUnitMonomial(format!("{unit}")));
        }
        let mut vars = vars;
        vars.retain(|_, e| *e != 0);
        Ok(Monomial { unit, vars })
    }

    pub fn unit(&self) -> &RingElement {
        &self.unit
    }

    pub fn vars(&self) -> &BTreeMap<String, i32> {
        &self.vars
    }

    pub fn var_exp(&self, v: &str) -> i32 {
        self.vars.get(v).copied().unwrap_or(0)
    }

    pub fn is_var_free(&self) -> bool {
        self.vars.is_empty()
    }

    /// True when the monomial is the constant 1.
    pub fn is_one(&self) -> bool {
        self.vars.is_empty() && self.unit.is_one()
    }

    pub fn ring(&self) -> &Ring {
        self.unit.ring()
    }

    pub fn mul(&self, other: &Monomial) -> Result<Monomial> {
        let unit = self.unit.mul(&other.unit)?;
        let mut vars = self.vars.clone();
        for (v, e) in &other.vars {
            *vars.entry(v.clone()).or_insert(0) += e;
        }
        vars.retain(|_, e| *e != 0);
        Ok(Monomial { unit, vars })
    }

    pub fn inv(&self) -> Result<Monomial> {
        Ok(Monomial {
            unit: self.unit.unit_inverse()?,
            vars: self.vars.iter().map(|(v, e)| (v.clone(), -e)).collect(),
        })
    }

    pub fn pow(&self, k: i32) -> Result<Monomial> {
        let base = if k < 0 { self.inv()? } else { self.clone() };
        let mut unit = base.unit.ring().one();
        for _ in 0..k.unsigned_abs() {
            unit = unit.mul(&base.unit)?;
        }
        Ok(Monomial {
            unit,
            vars: base
                .vars
                .iter()
                .map(|(v, e)| (v.clone(), e * k.abs()))
                .filter(|(_, e)| *e != 0)
                .collect(),
        })
    }

    /// Substitutes a variable by another monomial.
    pub fn substitute(&self, var: &str, m: &Monomial) -> Result<Monomial> {
        let e = self.var_exp(var);
        if e == 0 {
            return Ok(self.clone());
        }
        let mut base = self.clone();
        base.vars.remove(var);
        base.mul(&m.pow(e)?)
    }

    /// Renames variables simultaneously.
    pub fn rename_vars(&self, map: &BTreeMap<String, String>) -> Monomial {
        let mut vars = BTreeMap::new();
        for (v, e) in &self.vars {
            let nv = map.get(v).cloned().unwrap_or_else(|| v.clone());
            *vars.entry(nv).or_insert(0) += e;
        }
        vars.retain(|_, e| *e != 0);
        Monomial {
            unit: self.unit.clone(),
            vars,
        }
    }

    pub fn to_laurent(&self) -> LaurentPoly {
        let vars: Vec<String> = self.vars.keys().cloned().collect();
        let exps: Vec<i32> = vars.iter().map(|v| self.vars[v]).collect();
        let mut terms = BTreeMap::new();
        if !self.unit.is_zero() {
            terms.insert(exps, self.unit.clone());
        }
        LaurentPoly {
            ring: self.unit.ring().clone(),
            vars,
            terms,
        }
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = Vec::new();
        if !self.unit.is_one() || self.vars.is_empty() {
            parts.push(format!("{}", self.unit));
        }
        for (v, e) in &self.vars {
            if *e == 1 {
                parts.push(v.clone());
            } else {
                parts.push(format!("{v}^{e}"));
            }
        }
        write!(f, "{}", parts.join("*"))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Multivariate Laurent polynomial: exponent vectors over a declared
/// variable set with base-ring coefficients. No zero coefficients stored.
#[derive(Clone)]
pub struct LaurentPoly {
    ring: Ring,
    vars: Vec<String>,
    terms: BTreeMap<Vec<i32>, RingElement>,
}

impl LaurentPoly {
    pub fn zero(ring: &Ring) -> LaurentPoly {
        LaurentPoly {
            ring: ring.clone(),
            vars: vec![],
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(c: RingElement) -> LaurentPoly {
        let ring = c.ring().clone();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(vec![], c);
        }
        LaurentPoly {
            ring,
            vars: vec![],
            terms,
        }
    }

    pub fn one(ring: &Ring) -> LaurentPoly {
        LaurentPoly::constant(ring.one())
    }

    pub fn int(ring: &Ring, n: i64) -> LaurentPoly {
        LaurentPoly::constant(ring.int(n))
    }

    pub fn var(ring: &Ring, v: &str) -> LaurentPoly {
        Monomial::var(ring, v).to_laurent()
    }

    pub fn var_pow(ring: &Ring, v: &str, e: i32) -> LaurentPoly {
        Monomial::new(ring.one(), &[(v, e)]).unwrap().to_laurent()
    }

    pub fn from_terms(
        ring: &Ring,
        vars: Vec<String>,
        terms: BTreeMap<Vec<i32>, RingElement>,
    ) -> LaurentPoly {
        let mut p = LaurentPoly {
            ring: ring.clone(),
            vars,
            terms,
        };
        p.terms.retain(|_, c| !c.is_zero());
        p.trim();
        p
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn vars(&self) -> &[String] {
        &self.vars
    }

    pub fn terms(&self) -> &BTreeMap<Vec<i32>, RingElement> {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_one(&self) -> bool {
        self.terms.len() == 1
            && self
                .terms
                .iter()
                .all(|(e, c)| e.iter().all(|x| *x == 0) && c.is_one())
    }

    /// Drops variables that occur with exponent zero everywhere.
    fn trim(&mut self) {
        let used: Vec<bool> = (0..self.vars.len())
            .map(|i| self.terms.keys().any(|e| e[i] != 0))
            .collect();
        if used.iter().all(|u| *u) {
            return;
        }
        let vars: Vec<String> = self
            .vars
            .iter()
            .zip(&used)
            .filter(|(_, u)| **u)
            .map(|(v, _)| v.clone())
            .collect();
        let terms = std::mem::take(&mut self.terms)
            .into_iter()
            .map(|(e, c)| {
                (
                    e.into_iter()
                        .zip(&used)
                        .filter(|(_, u)| **u)
                        .map(|(x, _)| x)
                        .collect(),
                    c,
                )
            })
            .collect();
        self.vars = vars;
        self.terms = terms;
    }

    /// Re-expresses this polynomial over a (sorted) superset of variables.
    pub fn with_vars(&self, vars: &[String]) -> LaurentPoly {
        if self.vars == vars {
            return self.clone();
        }
        let map: Vec<usize> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v).expect("superset"))
            .collect();
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut ne = vec![0i32; vars.len()];
                for (i, x) in e.iter().enumerate() {
                    ne[map[i]] = *x;
                }
                (ne, c.clone())
            })
            .collect();
        LaurentPoly {
            ring: self.ring.clone(),
            vars: vars.to_vec(),
            terms,
        }
    }

    fn aligned(&self, other: &LaurentPoly) -> (LaurentPoly, LaurentPoly) {
        let mut vars: Vec<String> = self
            .vars
            .iter()
            .chain(other.vars.iter())
            .cloned()
            .collect();
        vars.sort();
        vars.dedup();
        (self.with_vars(&vars), other.with_vars(&vars))
    }

    pub fn add(&self, other: &LaurentPoly) -> LaurentPoly {
        let (mut a, b) = self.aligned(other);
        for (e, c) in b.terms {
            let entry = a.terms.entry(e);
            match entry {
                std::collections::btree_map::Entry::Occupied(mut o) => {
                    let s = o.get().add(&c).expect("same ring");
                    if s.is_zero() {
                        o.remove();
                    } else {
                        *o.get_mut() = s;
                    }
                }
                std::collections::btree_map::Entry::Vacant(v) => {
                    v.insert(c);
                }
            }
        }
        a.trim();
        a
    }

    pub fn sub(&self, other: &LaurentPoly) -> LaurentPoly {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> LaurentPoly {
        LaurentPoly {
            ring: self.ring.clone(),
            vars: self.vars.clone(),
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &LaurentPoly) -> Result<LaurentPoly> {
        let (a, b) = self.aligned(other);
        let mut terms: BTreeMap<Vec<i32>, RingElement> = BTreeMap::new();
        for (e1, c1) in &a.terms {
            for (e2, c2) in &b.terms {
                let mut e = Vec::with_capacity(e1.len());
                for (x, y) in e1.iter().zip(e2.iter()) {
                    e.push(x.checked_add(*y).ok_or(AlgebraError::ExponentOverflow)?);
                }
                let prod = c1.mul(c2)?;
                match terms.entry(e) {
                    std::collections::btree_map::Entry::Occupied(mut o) => {
                        let s = o.get().add(&prod)?;
                        if s.is_zero() {
                            o.remove();
                        } else {
                            *o.get_mut() = s;
                        }
                    }
                    std::collections::btree_map::Entry::Vacant(v) => {
                        if !prod.is_zero() {
                            v.insert(prod);
                        }
                    }
                }
            }
        }
        let mut out = LaurentPoly {
            ring: a.ring.clone(),
            vars: a.vars.clone(),
            terms,
        };
        out.trim();
        Ok(out)
    }

    pub fn scale(&self, c: &RingElement) -> Result<LaurentPoly> {
        Ok(self.mul(&LaurentPoly::constant(c.clone()))?)
    }

    pub fn pow(&self, k: u32) -> Result<LaurentPoly> {
        let mut acc = LaurentPoly::one(&self.ring);
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// `1 - m` as a polynomial.
    pub fn one_minus(m: &Monomial) -> LaurentPoly {
        LaurentPoly::one(m.ring()).sub(&m.to_laurent())
    }

    /// Substitutes `var := m` exactly.
    pub fn substitute(&self, var: &str, m: &Monomial) -> Result<LaurentPoly> {
        let idx = match self.vars.iter().position(|v| v == var) {
            Some(i) => i,
            None => return Ok(self.clone()),
        };
        let mut out = LaurentPoly::zero(&self.ring);
        for (e, c) in &self.terms {
            let k = e[idx];
            let mut rest = Monomial::from_parts(
                self.ring.one(),
                self.vars
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != idx)
                    .map(|(i, v)| (v.clone(), e[i]))
                    .collect(),
            )?;
            rest = rest.mul(&m.pow(k)?)?;
            let term = rest.to_laurent().scale_by(c)?;
            out = out.add(&term);
        }
        Ok(out)
    }

    fn scale_by(&self, c: &RingElement) -> Result<LaurentPoly> {
        let mut terms = BTreeMap::new();
        for (e, x) in &self.terms {
            let p = x.mul(c)?;
            if !p.is_zero() {
                terms.insert(e.clone(), p);
            }
        }
        Ok(LaurentPoly {
            ring: self.ring.clone(),
            vars: self.vars.clone(),
            terms,
        })
    }

    /// Renames variables according to `perm` (old name -> new name).
    pub fn rename_vars(&self, perm: &BTreeMap<String, String>) -> LaurentPoly {
        let vars_new: Vec<String> = self
            .vars
            .iter()
            .map(|v| perm.get(v).cloned().unwrap_or_else(|| v.clone()))
            .collect();
        // re-sort the variable axis
        let mut order: Vec<usize> = (0..vars_new.len()).collect();
        order.sort_by(|a, b| vars_new[*a].cmp(&vars_new[*b]));
        let vars: Vec<String> = order.iter().map(|i| vars_new[*i].clone()).collect();
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let ne: Vec<i32> = order.iter().map(|i| e[*i]).collect();
                (ne, c.clone())
            })
            .collect();
        LaurentPoly {
            ring: self.ring.clone(),
            vars,
            terms,
        }
    }

    /// Splits by the exponent of one variable: exponent -> polynomial in the
    /// remaining variables.
    pub fn split_by_var(&self, var: &str) -> BTreeMap<i32, LaurentPoly> {
        let idx = self.vars.iter().position(|v| v == var);
        let mut out: BTreeMap<i32, LaurentPoly> = BTreeMap::new();
        match idx {
            None => {
                if !self.is_zero() {
                    out.insert(0, self.clone());
                }
            }
            Some(idx) => {
                let rest_vars: Vec<String> = self
                    .vars
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| *i != idx)
                    .map(|(_, v)| v.clone())
                    .collect();
                for (e, c) in &self.terms {
                    let k = e[idx];
                    let ne: Vec<i32> = e
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != idx)
                        .map(|(_, x)| *x)
                        .collect();
                    let entry = out.entry(k).or_insert_with(|| LaurentPoly {
                        ring: self.ring.clone(),
                        vars: rest_vars.clone(),
                        terms: BTreeMap::new(),
                    });
                    entry.terms.insert(ne, c.clone());
                }
                for p in out.values_mut() {
                    p.trim();
                }
            }
        }
        out
    }

    /// The coefficient of a given exponent of `var` (zero if absent).
    pub fn coeff_of(&self, var: &str, k: i32) -> LaurentPoly {
        self.split_by_var(var)
            .remove(&k)
            .unwrap_or_else(|| LaurentPoly::zero(&self.ring))
    }

    /// If this polynomial is a single term `±u * vars`, returns it as a
    /// monomial (requires the coefficient to be a signed unit monomial).
    pub fn as_monomial(&self) -> Option<Monomial> {
        if self.terms.len() != 1 {
            return None;
        }
        let (e, c) = self.terms.iter().next().unwrap();
        c.as_unit_monomial()?;
        let vars: BTreeMap<String, i32> = self
            .vars
            .iter()
            .zip(e.iter())
            .filter(|(_, x)| **x != 0)
            .map(|(v, x)| (v.clone(), *x))
            .collect();
        Some(Monomial {
            unit: c.clone(),
            vars,
        })
    }

    /// Constant term as a ring element (coefficient of the zero multidegree).
    pub fn constant_term(&self) -> RingElement {
        self.terms
            .iter()
            .find(|(e, _)| e.iter().all(|x| *x == 0))
            .map(|(_, c)| c.clone())
            .unwrap_or_else(|| self.ring.zero())
    }

    /// Exact division; errors with `NotPolynomial` if a remainder is left.
    /// The divisor's leading coefficient (lex order) must divide exactly
    /// (unit monomials and integer constants are supported).
    pub fn div_exact(&self, divisor: &LaurentPoly) -> Result<LaurentPoly> {
        if divisor.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(LaurentPoly::zero(&self.ring));
        }
        let (mut rem, div) = self.aligned(divisor);
        let vars = div.vars.clone();
        let (dlead_e, dlead_c) = {
            let (e, c) = div.terms.iter().next_back().unwrap();
            (e.clone(), c.clone())
        };
        let nvars = vars.len();
        let mut quot: BTreeMap<Vec<i32>, RingElement> = BTreeMap::new();
        // bound iterations to guard nontermination on inexact Laurent division
        let mut budget = (self.terms.len() + 1) * (divisor.terms.len() + 1) * 64 + 4096;
        while !rem.terms.is_empty() {
            if budget == 0 {
                return Err(AlgebraError::NotPolynomial);
            }
            budget -= 1;
            let rem_aligned = rem.with_vars(&vars);
            let (rl_e, rl_c) = {
                let (e, c) = rem_aligned.terms.iter().next_back().unwrap();
                (e.clone(), c.clone())
            };
            let mut qe = vec![0i32; nvars];
            for i in 0..nvars {
                qe[i] = rl_e[i] - dlead_e[i];
            }
            let qc = rl_c
                .div_exact(&dlead_c)
                .map_err(|_| AlgebraError::NotPolynomial)?;
            let q_term = LaurentPoly {
                ring: rem_aligned.ring.clone(),
                vars: vars.clone(),
                terms: BTreeMap::from([(qe.clone(), qc.clone())]),
            };
            let prod = q_term.mul(&div)?;
            let next = rem_aligned.sub(&prod).with_vars(&vars);
            if let Some((nl_e, _)) = next.terms.iter().next_back() {
                if *nl_e >= rl_e {
                    return Err(AlgebraError::NotPolynomial);
                }
            }
            rem = next;
            let entry = quot.entry(qe).or_insert_with(|| self.ring.zero());
            *entry = entry.add(&qc)?;
        }
        let mut out = LaurentPoly {
            ring: self.ring.clone(),
            vars,
            terms: quot,
        };
        out.terms.retain(|_, c| !c.is_zero());
        out.trim();
        Ok(out)
    }
}

impl PartialEq for LaurentPoly {
    fn eq(&self, other: &Self) -> bool {
        let (a, b) = self.aligned(other);
        a.terms == b.terms
    }
}
impl Eq for LaurentPoly {}

impl fmt::Display for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in self.terms.iter().rev() {
            let mut mono = String::new();
            for (i, x) in e.iter().enumerate() {
                if *x == 0 {
                    continue;
                }
                if !mono.is_empty() {
                    mono.push('*');
                }
                if *x == 1 {
                    mono.push_str(&self.vars[i]);
                } else {
                    mono.push_str(&format!("{}^{}", self.vars[i], x));
                }
            }
            let cs = format!("{c}");
            let (sign, body) = if let Some(stripped) = cs.strip_prefix('-') {
                if c.terms().len() == 1 {
                    ("-", stripped.to_string())
                } else {
                    ("+", format!("({cs})"))
                }
            } else if c.terms().len() > 1 {
                ("+", format!("({cs})"))
            } else {
                ("+", cs.clone())
            };
            if first {
                if sign == "-" {
                    write!(f, "-")?;
                }
                first = false;
            } else {
                write!(f, "{sign}")?;
            }
            if mono.is_empty() {
                write!(f, "{body}")?;
            } else if body == "1" {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{body}*{mono}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for LaurentPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Integer content helper used by rational-function normalization.
pub fn bigint_gcd(a: &BigInt, b: &BigInt) -> BigInt {
    let mut a = a.abs();
    let mut b = b.abs();
    while !num_traits::Zero::is_zero(&b) {
        let r = &a % &b;
        a = b;
        b = r;
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn add_mul_basic() {
        let r = Ring::integers();
        let x = LaurentPoly::var(&r, "x");
        let one = LaurentPoly::one(&r);
        let p = one.sub(&x); // 1 - x
        let q = one.add(&x); // 1 + x
        let prod = p.mul(&q).unwrap(); // 1 - x^2
        let x2 = LaurentPoly::var_pow(&r, "x", 2);
        assert_eq!(prod, one.sub(&x2));
    }

    #[test]
    fn substitute_var() {
        let r = Ring::free_units(&["q"]);
        let x = LaurentPoly::var(&r, "x");
        let qz = Monomial::new(r.gen("q").unwrap(), &[("z", 1)]).unwrap();
        let s = x.substitute("x", &qz).unwrap();
        assert_eq!(s, qz.to_laurent());
        // substitute(x, x, 1) = 1
        let one_m = Monomial::one(&r);
        assert_eq!(x.substitute("x", &one_m).unwrap(), LaurentPoly::one(&r));
    }

    #[test]
    fn exact_division() {
        let r = Ring::integers();
        let z1 = LaurentPoly::var(&r, "z1");
        let z2 = LaurentPoly::var(&r, "z2");
        // (z2^2 - z1^2) / (z2 - z1) = z1 + z2
        let num = z2.mul(&z2).unwrap().sub(&z1.mul(&z1).unwrap());
        let den = z2.sub(&z1);
        assert_eq!(num.div_exact(&den).unwrap(), z1.add(&z2));
        // inexact
        let one = LaurentPoly::one(&r);
        assert_eq!(
            one.div_exact(&den).unwrap_err(),
            AlgebraError::NotPolynomial
        );
        // constant case: 6 / 2 = 3
        assert_eq!(
            LaurentPoly::int(&r, 6)
                .div_exact(&LaurentPoly::int(&r, 2))
                .unwrap(),
            LaurentPoly::int(&r, 3)
        );
    }
}
