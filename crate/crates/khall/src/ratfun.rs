//! Rational functions over a base ring with tracked denominators.
//!
//! Denominators coming from lambda-series are kept as a multiset of binomial
//! factors `(1 - m)` with `m` a unit monomial; residue extraction and series
//! expansion require this factored form. General division can fall back to an
//! opaque polynomial denominator, which still supports exact arithmetic and
//! cross-multiplication equality but not expansion.

use std::collections::BTreeMap;
use std::fmt;

use crate::error::{AlgebraError, Result};
use crate::laurent::{LaurentPoly, Monomial};
use crate::ring::{Ring, RingElement};

/// Denominator of a [`RatFun`].
#[derive(Clone, Debug)]
pub enum Den {
    /// `∏ (1 - m_i)`; the empty product is 1 (a Laurent polynomial).
    Factored(Vec<Monomial>),
    /// Arbitrary nonzero polynomial; loses expansion support.
    Opaque(LaurentPoly),
}

#[derive(Clone)]
pub struct RatFun {
    num: LaurentPoly,
    den: Den,
}

impl RatFun {
    pub fn from_poly(num: LaurentPoly) -> RatFun {
        RatFun {
            num,
            den: Den::Factored(vec![]),
        }
    }

    pub fn zero(ring: &Ring) -> RatFun {
        RatFun::from_poly(LaurentPoly::zero(ring))
    }

    pub fn one(ring: &Ring) -> RatFun {
        RatFun::from_poly(LaurentPoly::one(ring))
    }

    pub fn constant(c: RingElement) -> RatFun {
        RatFun::from_poly(LaurentPoly::constant(c))
    }

    /// `num / ∏ (1 - m_i)`, normalized (factors dividing the numerator are
    /// cancelled, remaining factors sorted).
    pub fn from_factored(num: LaurentPoly, factors: Vec<Monomial>) -> RatFun {
        let mut num = num;
        let mut kept: Vec<Monomial> = Vec::with_capacity(factors.len());
        if num.is_zero() {
            return RatFun::from_poly(num);
        }
        for m in factors {
            if let Ok(q) = num.div_exact(&LaurentPoly::one_minus(&m)) {
                num = q;
            } else {
                kept.push(m);
            }
        }
        kept.sort();
        RatFun {
            num,
            den: Den::Factored(kept),
        }
    }

    /// `1 / (1 - m)`.
    pub fn inv_one_minus(m: &Monomial) -> RatFun {
        RatFun {
            num: LaurentPoly::one(m.ring()),
            den: Den::Factored(vec![m.clone()]),
        }
    }

    fn from_opaque(num: LaurentPoly, den: LaurentPoly) -> Result<RatFun> {
        if den.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        if let Ok(q) = num.div_exact(&den) {
            return Ok(RatFun::from_poly(q));
        }
        Ok(RatFun {
            num,
            den: Den::Opaque(den),
        })
    }

    pub fn ring(&self) -> &Ring {
        self.num.ring()
    }

    pub fn num(&self) -> &LaurentPoly {
        &self.num
    }

    pub fn den(&self) -> &Den {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    /// Numerator and binomial factors; errors if the denominator is opaque.
    pub fn factored_parts(&self) -> Result<(&LaurentPoly, &[Monomial])> {
        match &self.den {
            Den::Factored(f) => Ok((&self.num, f)),
            Den::Opaque(d) => Err(AlgebraError::UnfactoredDenominator(format!("{d}"))),
        }
    }

    pub fn den_poly(&self) -> Result<LaurentPoly> {
        match &self.den {
            Den::Factored(fs) => {
                let mut d = LaurentPoly::one(self.num.ring());
                for m in fs {
                    d = d.mul(&LaurentPoly::one_minus(m))?;
                }
                Ok(d)
            }
            Den::Opaque(d) => Ok(d.clone()),
        }
    }

    pub fn neg(&self) -> RatFun {
        RatFun {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &RatFun) -> Result<RatFun> {
        let num = self.num.mul(&other.num)?;
        match (&self.den, &other.den) {
            (Den::Factored(a), Den::Factored(b)) => {
                let mut fs = a.clone();
                fs.extend(b.iter().cloned());
                Ok(RatFun::from_factored(num, fs))
            }
            _ => {
                let den = self.den_poly()?.mul(&other.den_poly()?)?;
                RatFun::from_opaque(num, den)
            }
        }
    }

    pub fn mul_poly(&self, p: &LaurentPoly) -> Result<RatFun> {
        self.mul(&RatFun::from_poly(p.clone()))
    }

    pub fn scale(&self, c: &RingElement) -> Result<RatFun> {
        Ok(RatFun {
            num: self.num.scale(c)?,
            den: self.den.clone(),
        })
    }

    pub fn add(&self, other: &RatFun) -> Result<RatFun> {
        match (&self.den, &other.den) {
            (Den::Factored(a), Den::Factored(b)) => {
                // least common multiple of the factor multisets
                let mut counts: BTreeMap<Monomial, (usize, usize)> = BTreeMap::new();
                for m in a {
                    counts.entry(m.clone()).or_default().0 += 1;
                }
                for m in b {
                    counts.entry(m.clone()).or_default().1 += 1;
                }
                let mut lcm: Vec<Monomial> = Vec::new();
                let mut extra_a: Vec<Monomial> = Vec::new();
                let mut extra_b: Vec<Monomial> = Vec::new();
                for (m, (ca, cb)) in counts {
                    let c = ca.max(cb);
                    for _ in 0..c {
                        lcm.push(m.clone());
                    }
                    for _ in ca..c {
                        extra_a.push(m.clone());
                    }
                    for _ in cb..c {
                        extra_b.push(m.clone());
                    }
                }
                let mut na = self.num.clone();
                for m in &extra_a {
                    na = na.mul(&LaurentPoly::one_minus(m))?;
                }
                let mut nb = other.num.clone();
                for m in &extra_b {
                    nb = nb.mul(&LaurentPoly::one_minus(m))?;
                }
                Ok(RatFun::from_factored(na.add(&nb), lcm))
            }
            _ => {
                let da = self.den_poly()?;
                let db = other.den_poly()?;
                let num = self.num.mul(&db)?.add(&other.num.mul(&da)?);
                RatFun::from_opaque(num, da.mul(&db)?)
            }
        }
    }

    pub fn sub(&self, other: &RatFun) -> Result<RatFun> {
        self.add(&other.neg())
    }

    pub fn div(&self, other: &RatFun) -> Result<RatFun> {
        if other.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        let inv = match (&other.den, other.num.as_monomial()) {
            // 1/(m · ∏(1-f)) is again factored: pull the monomial into the
            // numerator via its inverse
            (Den::Factored(fs), Some(m)) => {
                let mut den = m.inv()?.to_laurent();
                for f in fs {
                    den = den.mul(&LaurentPoly::one_minus(f))?;
                }
                RatFun::from_poly(den)
            }
            _ => RatFun::from_opaque(other.den_poly()?, other.num.clone())?,
        };
        self.mul(&inv)
    }

    /// Exact substitution `var := m` in numerator and denominator.
    pub fn substitute(&self, var: &str, m: &Monomial) -> Result<RatFun> {
        let num = self.num.substitute(var, m)?;
        match &self.den {
            Den::Factored(fs) => {
                let mut nfs = Vec::with_capacity(fs.len());
                for f in fs {
                    let nf = f.substitute(var, m)?;
                    if nf.is_one() {
                        return Err(AlgebraError::DenominatorVanishes(format!("1-{f}")));
                    }
                    nfs.push(nf);
                }
                Ok(RatFun::from_factored(num, nfs))
            }
            Den::Opaque(d) => {
                let nd = d.substitute(var, m)?;
                if nd.is_zero() {
                    return Err(AlgebraError::DenominatorVanishes(format!("{d}")));
                }
                RatFun::from_opaque(num, nd)
            }
        }
    }

    /// Renames variables simultaneously (used by symmetrization).
    pub fn rename_vars(&self, map: &BTreeMap<String, String>) -> RatFun {
        let num = self.num.rename_vars(map);
        let den = match &self.den {
            Den::Factored(fs) => {
                Den::Factored(fs.iter().map(|m| m.rename_vars(map)).collect())
            }
            Den::Opaque(d) => Den::Opaque(d.rename_vars(map)),
        };
        RatFun { num, den }
    }

    /// `Σ_{σ ∈ S_n} σ·f` over the listed variables.
    pub fn symmetrize(&self, vars: &[String]) -> Result<RatFun> {
        let mut acc = RatFun::zero(self.ring());
        for perm in permutations(vars.len()) {
            let map: BTreeMap<String, String> = vars
                .iter()
                .enumerate()
                .map(|(i, v)| (v.clone(), vars[perm[i]].clone()))
                .collect();
            acc = acc.add(&self.rename_vars(&map))?;
        }
        Ok(acc)
    }

    /// The Laurent polynomial equal to this function, if the denominator
    /// divides the numerator exactly.
    pub fn as_polynomial(&self) -> Result<LaurentPoly> {
        match &self.den {
            Den::Factored(fs) if fs.is_empty() => Ok(self.num.clone()),
            _ => self.num.div_exact(&self.den_poly()?),
        }
    }
}

/// All permutations of `0..n` (plain recursive generation; n stays small).
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![]];
    }
    let mut out = Vec::new();
    for p in permutations(n - 1) {
        for i in 0..n {
            let mut q = p.clone();
            q.insert(i, n - 1);
            out.push(q);
        }
    }
    out
}

impl PartialEq for RatFun {
    fn eq(&self, other: &Self) -> bool {
        // cross-multiplication: n1 d2 = n2 d1
        let d1 = self.den_poly().expect("denominator product");
        let d2 = other.den_poly().expect("denominator product");
        self.num.mul(&d2).expect("same ring") == other.num.mul(&d1).expect("same ring")
    }
}
impl Eq for RatFun {}

impl fmt::Display for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.den {
            Den::Factored(fs) if fs.is_empty() => write!(f, "{}", self.num),
            Den::Factored(fs) => {
                write!(f, "({})/(", self.num)?;
                for (i, m) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "*")?;
                    }
                    write!(f, "(1-{m})")?;
                }
                write!(f, ")")
            }
            Den::Opaque(d) => write!(f, "({})/({d})", self.num),
        }
    }
}

impl fmt::Debug for RatFun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}
