//! Finitely presented commutative rings with invertible generators.
//!
//! These serve as toy models of K(S): `Z`, `K(P^2) = Z[t,t^-1]/(t-1)^3`,
//! `K(P^1 x P^1)`, and free unit rings hosting Chern roots and `q = [omega_S]`.
//! Relations are monic univariate integer polynomials in a single generator,
//! which covers every preset while keeping normal forms computable by plain
//! polynomial division.
//!
//! A ring may carry a distinguished *diagonal* generator `D` (the class of
//! the diagonal on S x S). Monomials containing `D` have their tagged unit
//! families merged, and a product producing `D^2` is rejected.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::error::{AlgebraError, Result};

/// A univariate relation `g^deg = sum of lower terms`, stored via the
/// reduction polynomial for the top power.
#[derive(Debug, Clone, PartialEq, Eq)]
struct Relation {
    /// degree of the monic relation polynomial
    deg: u32,
    /// `g^deg ≡ red[0] + red[1] g + ... + red[deg-1] g^{deg-1}`
    red: Vec<BigInt>,
    /// `g^{-1}` as a polynomial in `g` (present iff the generator is invertible)
    inverse: Option<Vec<BigInt>>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct GenInfo {
    name: String,
    invertible: bool,
    relation: Option<Relation>,
}

/// Merging rule applied to monomials containing the diagonal generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiagRule {
    /// index of the diagonal generator `D`
    pub d_index: usize,
    /// exponent transfers `(from, to)` applied in `D`-monomials
    pub merges: Vec<(usize, usize)>,
}

#[derive(Debug, PartialEq, Eq)]
struct RingInner {
    gens: Vec<GenInfo>,
    diag: Option<DiagRule>,
}

/// Handle to a ring; cheap to clone, immutable after construction.
#[derive(Clone)]
pub struct Ring(Arc<RingInner>);

impl fmt::Debug for Ring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Ring[{}]",
            self.0
                .gens
                .iter()
                .map(|g| g.name.as_str())
                .collect::<Vec<_>>()
                .join(",")
        )
    }
}

impl PartialEq for Ring {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}
impl Eq for Ring {}

/// A presentation: generators with invertibility flags plus relations.
///
/// Each relation is a polynomial in exactly one generator, monic up to sign,
/// with integer coefficients, e.g. `(t-1)^3`.
#[derive(Debug, Clone, Default)]
pub struct RingPresentation {
    pub generators: Vec<(String, bool)>,
    /// raw relation polynomials: exponent vector over `generators` -> coefficient
    pub relations: Vec<BTreeMap<Vec<i32>, BigInt>>,
    pub diag: Option<DiagRule>,
}

impl RingPresentation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn gen(mut self, name: &str, invertible: bool) -> Self {
        self.generators.push((name.to_string(), invertible));
        self
    }

    /// Adds the relation `(g - c)^k`.
    pub fn relation_pow(mut self, name: &str, c: i64, k: u32) -> Self {
        let idx = self
            .generators
            .iter()
            .position(|(n, _)| n == name)
            .unwrap_or_else(|| panic!("unknown generator {name}"));
        let n = self.generators.len();
        // expand (g - c)^k by binomial
        let mut poly: BTreeMap<Vec<i32>, BigInt> = BTreeMap::new();
        let mut binom = BigInt::one();
        for i in 0..=k {
            // C(k,i) g^i (-c)^(k-i)
            let mut exps = vec![0i32; n];
            exps[idx] = i as i32;
            let coef = &binom * BigInt::from(-c).pow(k - i);
            poly.insert(exps, coef);
            binom = &binom * BigInt::from((k - i) as i64) / BigInt::from((i + 1) as i64);
        }
        poly.retain(|_, v| !v.is_zero());
        self.relations.push(poly);
        self
    }

    pub fn with_diag(mut self, rule: DiagRule) -> Self {
        self.diag = Some(rule);
        self
    }
}

fn poly_mul(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    if a.is_empty() || b.is_empty() {
        return vec![];
    }
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Reduce a univariate polynomial modulo the relation (top-power substitution).
fn poly_reduce(mut p: Vec<BigInt>, rel: &Relation) -> Vec<BigInt> {
    let d = rel.deg as usize;
    while p.len() > d {
        let top = p.pop().unwrap();
        if top.is_zero() {
            continue;
        }
        let shift = p.len() - d;
        for (i, r) in rel.red.iter().enumerate() {
            p[shift + i] += &top * r;
        }
        while p.last().map(|c| c.is_zero()).unwrap_or(false) {
            p.pop();
        }
    }
    p
}

impl Ring {
    pub fn make_ring(pres: RingPresentation) -> Result<Ring> {
        let n = pres.generators.len();
        let mut gens: Vec<GenInfo> = pres
            .generators
            .iter()
            .map(|(name, inv)| GenInfo {
                name: name.clone(),
                invertible: *inv,
                relation: None,
            })
            .collect();
        for rel in &pres.relations {
            // detect the unique generator with nonzero exponents
            let mut which: Option<usize> = None;
            for exps in rel.keys() {
                for (i, e) in exps.iter().enumerate() {
                    if *e != 0 {
                        if *e < 0 {
                            return Err(AlgebraError::BadRelation(
                                "negative exponent in relation".into(),
                            ));
                        }
                        match which {
                            None => which = Some(i),
                            Some(w) if w == i => {}
                            _ => {
                                return Err(AlgebraError::BadRelation(
                                    "relation mixes generators".into(),
                                ))
                            }
                        }
                    }
                }
            }
            let idx = which.ok_or_else(|| {
                AlgebraError::BadRelation("relation has no generator".into())
            })?;
            if gens[idx].relation.is_some() {
                return Err(AlgebraError::BadRelation(format!(
                    "generator {} has two relations",
                    gens[idx].name
                )));
            }
            // collect univariate coefficients
            let deg = rel
                .keys()
                .map(|e| e[idx] as u32)
                .max()
                .unwrap_or(0);
            if deg == 0 {
                return Err(AlgebraError::BadRelation("constant relation".into()));
            }
            let mut coeffs = vec![BigInt::zero(); deg as usize + 1];
            for (exps, c) in rel {
                coeffs[exps[idx] as usize] = c.clone();
            }
            let lead = coeffs[deg as usize].clone();
            if !(lead == BigInt::one() || lead == -BigInt::one()) {
                return Err(AlgebraError::BadRelation("relation is not monic".into()));
            }
            // normalize to monic with lead +1
            if lead == -BigInt::one() {
                for c in coeffs.iter_mut() {
                    *c = -&*c;
                }
            }
            // g^deg = -(lower part)
            let red: Vec<BigInt> = coeffs[..deg as usize].iter().map(|c| -c).collect();
            let mut relation = Relation {
                deg,
                red,
                inverse: None,
            };
            if gens[idx].invertible {
                let c0 = coeffs[0].clone();
                if !(c0.clone() == BigInt::one() || c0 == -BigInt::one()) {
                    return Err(AlgebraError::NonInvertibleGenerator(gens[idx].name.clone()));
                }
                // g * inv = 1 mod r with inv = -(r - c0)/g / c0
                let mut inv: Vec<BigInt> = coeffs[1..].to_vec();
                for c in inv.iter_mut() {
                    *c = -&*c / &c0;
                }
                relation.inverse = Some(poly_reduce(inv, &relation));
            }
            gens[idx].relation = Some(relation);
        }
        let _ = n;
        let ring = Ring(Arc::new(RingInner {
            gens,
            diag: pres.diag,
        }));
        ring.check_inverses()?;
        Ok(ring)
    }

    /// Verifies `g * g^{-1} = 1` for every invertible generator.
    fn check_inverses(&self) -> Result<()> {
        for (i, g) in self.0.gens.iter().enumerate() {
            if g.invertible && g.relation.is_some() {
                let gi = self.gen_by_index(i, 1);
                let inv = self.gen_by_index(i, -1);
                let prod = gi.mul(&inv)?;
                if !prod.is_one() {
                    return Err(AlgebraError::NonInvertibleGenerator(g.name.clone()));
                }
            }
        }
        Ok(())
    }

    /// The ring of integers (no generators).
    pub fn integers() -> Ring {
        Ring::make_ring(RingPresentation::new()).unwrap()
    }

    /// `K(P^2) = Z[t,t^-1]/(t-1)^3`.
    pub fn p2() -> Ring {
        Ring::make_ring(RingPresentation::new().gen("t", true).relation_pow("t", 1, 3)).unwrap()
    }

    /// `K(P^1 x P^1) = Z[a^±,b^±]/((a-1)^2,(b-1)^2)`.
    pub fn p1xp1() -> Ring {
        Ring::make_ring(
            RingPresentation::new()
                .gen("a", true)
                .gen("b", true)
                .relation_pow("a", 1, 2)
                .relation_pow("b", 1, 2),
        )
        .unwrap()
    }

    /// Free invertible units, no relations.
    pub fn free_units(names: &[&str]) -> Ring {
        let mut p = RingPresentation::new();
        for n in names {
            p = p.gen(n, true);
        }
        Ring::make_ring(p).unwrap()
    }

    pub fn gen_names(&self) -> Vec<&str> {
        self.0.gens.iter().map(|g| g.name.as_str()).collect()
    }

    pub fn gen_index(&self, name: &str) -> Result<usize> {
        self.0
            .gens
            .iter()
            .position(|g| g.name == name)
            .ok_or_else(|| AlgebraError::UnknownGenerator(name.to_string()))
    }

    pub fn is_invertible_gen(&self, idx: usize) -> bool {
        self.0.gens[idx].invertible
    }

    pub fn num_gens(&self) -> usize {
        self.0.gens.len()
    }

    pub fn diag(&self) -> Option<&DiagRule> {
        self.0.diag.as_ref()
    }

    /// Extension ring with fresh free invertible generators appended.
    pub fn adjoin_units(&self, names: &[&str]) -> Result<Ring> {
        for n in names {
            if self.gen_index(n).is_ok() {
                return Err(AlgebraError::NameCollision(n.to_string()));
            }
        }
        let mut gens = self.0.gens.clone();
        for n in names {
            gens.push(GenInfo {
                name: n.to_string(),
                invertible: true,
                relation: None,
            });
        }
        Ok(Ring(Arc::new(RingInner {
            gens,
            diag: self.0.diag.clone(),
        })))
    }

    /// Maps an element of a smaller ring into this one by generator name.
    pub fn promote(&self, e: &RingElement) -> Result<RingElement> {
        let map: Vec<usize> = e
            .ring
            .0
            .gens
            .iter()
            .map(|g| self.gen_index(&g.name))
            .collect::<Result<_>>()?;
        let mut terms = BTreeMap::new();
        for (exps, c) in &e.terms {
            let mut ne = vec![0i32; self.num_gens()];
            for (i, ex) in exps.iter().enumerate() {
                ne[map[i]] = *ex;
            }
            terms.insert(ne, c.clone());
        }
        RingElement::normalized(self.clone(), terms)
    }

    pub fn zero(&self) -> RingElement {
        RingElement {
            ring: self.clone(),
            terms: BTreeMap::new(),
        }
    }

    pub fn one(&self) -> RingElement {
        self.int(1)
    }

    pub fn int(&self, n: i64) -> RingElement {
        self.bigint(BigInt::from(n))
    }

    pub fn bigint(&self, n: BigInt) -> RingElement {
        let mut terms = BTreeMap::new();
        if !n.is_zero() {
            terms.insert(vec![0i32; self.num_gens()], n);
        }
        RingElement {
            ring: self.clone(),
            terms,
        }
    }

    pub fn gen(&self, name: &str) -> Result<RingElement> {
        Ok(self.gen_by_index(self.gen_index(name)?, 1))
    }

    pub fn gen_by_index(&self, idx: usize, pow: i32) -> RingElement {
        let mut exps = vec![0i32; self.num_gens()];
        exps[idx] = pow;
        let mut terms = BTreeMap::new();
        terms.insert(exps, BigInt::one());
        // generator powers always normalize without diagonal issues
        RingElement::normalized(self.clone(), terms).expect("generator power normalizes")
    }

    /// Monomial `∏ name^exp` with coefficient 1.
    pub fn monomial(&self, parts: &[(&str, i32)]) -> Result<RingElement> {
        let mut exps = vec![0i32; self.num_gens()];
        for (name, e) in parts {
            exps[self.gen_index(name)?] += e;
        }
        let mut terms = BTreeMap::new();
        terms.insert(exps, BigInt::one());
        RingElement::normalized(self.clone(), terms)
    }

    /// Normalizes a raw term map into a `RingElement`.
    pub fn normalize(&self, terms: BTreeMap<Vec<i32>, BigInt>) -> Result<RingElement> {
        RingElement::normalized(self.clone(), terms)
    }
}

/// Element of a ring in unique normal form.
#[derive(Clone, PartialEq, Eq)]
pub struct RingElement {
    ring: Ring,
    /// exponent vector over ring generators -> integer coefficient; no zeros
    terms: BTreeMap<Vec<i32>, BigInt>,
}

impl PartialOrd for RingElement {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for RingElement {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.terms.cmp(&other.terms)
    }
}

impl RingElement {
    fn normalized(ring: Ring, raw: BTreeMap<Vec<i32>, BigInt>) -> Result<RingElement> {
        let inner = &ring.0;
        let mut out: BTreeMap<Vec<i32>, BigInt> = BTreeMap::new();
        let mut work: Vec<(Vec<i32>, BigInt)> = raw.into_iter().collect();
        'outer: while let Some((mut exps, coef)) = work.pop() {
            if coef.is_zero() {
                continue;
            }
            if let Some(d) = &inner.diag {
                let de = exps[d.d_index];
                if de > 1 {
                    return Err(AlgebraError::DiagonalSquare);
                }
                if de < 0 {
                    return Err(AlgebraError::NotInvertible(
                        inner.gens[d.d_index].name.clone(),
                    ));
                }
                if de == 1 {
                    for (from, to) in &d.merges {
                        if exps[*from] != 0 {
                            exps[*to] += exps[*from];
                            exps[*from] = 0;
                        }
                    }
                }
            }
            for (i, g) in inner.gens.iter().enumerate() {
                let e = exps[i];
                match &g.relation {
                    Some(rel) => {
                        if e < 0 {
                            let inv = rel.inverse.as_ref().ok_or_else(|| {
                                AlgebraError::NotInvertible(g.name.clone())
                            })?;
                            // replace g^e by inv^{-e}
                            let mut p = vec![BigInt::one()];
                            for _ in 0..(-e) {
                                p = poly_reduce(poly_mul(&p, inv), rel);
                            }
                            exps[i] = 0;
                            for (k, c) in p.iter().enumerate() {
                                if c.is_zero() {
                                    continue;
                                }
                                let mut ne = exps.clone();
                                ne[i] = k as i32;
                                work.push((ne, &coef * c));
                            }
                            continue 'outer;
                        } else if e >= rel.deg as i32 {
                            // g^e = g^{e-deg} * red(g)
                            for (k, c) in rel.red.iter().enumerate() {
                                if c.is_zero() {
                                    continue;
                                }
                                let mut ne = exps.clone();
                                ne[i] = e - rel.deg as i32 + k as i32;
                                work.push((ne, &coef * c));
                            }
                            continue 'outer;
                        }
                    }
                    None => {
                        if e < 0 && !g.invertible {
                            return Err(AlgebraError::NotInvertible(g.name.clone()));
                        }
                    }
                }
            }
            // fully reduced
            let entry = out.entry(exps).or_insert_with(BigInt::zero);
            *entry += coef;
            if entry.is_zero() {
                // removal deferred
            }
        }
        out.retain(|_, v| !v.is_zero());
        Ok(RingElement { ring, terms: out })
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn terms(&self) -> &BTreeMap<Vec<i32>, BigInt> {
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

    fn check_ring(&self, other: &RingElement) -> Result<()> {
        if self.ring == other.ring {
            Ok(())
        } else {
            Err(AlgebraError::RingMismatch)
        }
    }

    pub fn add(&self, other: &RingElement) -> Result<RingElement> {
        self.check_ring(other)?;
        let mut terms = self.terms.clone();
        for (e, c) in &other.terms {
            let entry = terms.entry(e.clone()).or_insert_with(BigInt::zero);
            *entry += c;
        }
        terms.retain(|_, v| !v.is_zero());
        Ok(RingElement {
            ring: self.ring.clone(),
            terms,
        })
    }

    pub fn sub(&self, other: &RingElement) -> Result<RingElement> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> RingElement {
        RingElement {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), -c)).collect(),
        }
    }

    pub fn mul(&self, other: &RingElement) -> Result<RingElement> {
        self.check_ring(other)?;
        let mut raw: BTreeMap<Vec<i32>, BigInt> = BTreeMap::new();
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let mut e: Vec<i32> = Vec::with_capacity(e1.len());
                for (a, b) in e1.iter().zip(e2.iter()) {
                    e.push(a.checked_add(*b).ok_or(AlgebraError::ExponentOverflow)?);
                }
                let entry = raw.entry(e).or_insert_with(BigInt::zero);
                *entry += c1 * c2;
            }
        }
        RingElement::normalized(self.ring.clone(), raw)
    }

    pub fn scale(&self, n: i64) -> RingElement {
        if n == 0 {
            return self.ring.zero();
        }
        let n = BigInt::from(n);
        RingElement {
            ring: self.ring.clone(),
            terms: self.terms.iter().map(|(e, c)| (e.clone(), c * &n)).collect(),
        }
    }

    pub fn pow(&self, k: u32) -> Result<RingElement> {
        let mut acc = self.ring.one();
        for _ in 0..k {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    /// If this element is `±(single monomial in invertible generators)`,
    /// returns `(sign, exponent vector)`.
    pub fn as_unit_monomial(&self) -> Option<(i8, Vec<i32>)> {
        if self.terms.len() != 1 {
            return None;
        }
        let (exps, c) = self.terms.iter().next().unwrap();
        let sign = if c.is_one() {
            1
        } else if (-c).is_one() {
            -1
        } else {
            return None;
        };
        for (i, e) in exps.iter().enumerate() {
            if *e != 0 && !self.ring.is_invertible_gen(i) {
                return None;
            }
        }
        Some((sign, exps.clone()))
    }

    /// Inverse of a unit monomial.
    pub fn unit_inverse(&self) -> Result<RingElement> {
        let (sign, exps) = self
            .as_unit_monomial()
            .ok_or_else(|| AlgebraError::NotUnitMonomial(format!("{self}")))?;
        let mut terms = BTreeMap::new();
        let c = if sign >= 0 { BigInt::one() } else { -BigInt::one() };
        terms.insert(exps.iter().map(|e| -e).collect(), c);
        RingElement::normalized(self.ring.clone(), terms)
    }

    /// Exact division, e.g. by `q - 1`. The divisor must be either univariate
    /// in a free generator with unit leading coefficient (Laurent long
    /// division) or supported on relation-bound generators only, in which case
    /// the quotient is found by solving a finite integer linear system.
    pub fn div_exact(&self, divisor: &RingElement) -> Result<RingElement> {
        self.check_ring(divisor)?;
        if divisor.is_zero() {
            return Err(AlgebraError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(self.ring.zero());
        }
        // generators appearing in the divisor
        let mut support: Vec<usize> = Vec::new();
        for exps in divisor.terms.keys() {
            for (i, e) in exps.iter().enumerate() {
                if *e != 0 && !support.contains(&i) {
                    support.push(i);
                }
            }
        }
        support.sort_unstable();
        if support.is_empty() {
            // constant divisor: divide every coefficient exactly
            let (_, c0) = divisor.terms.iter().next().unwrap();
            let mut terms = BTreeMap::new();
            for (e, c) in &self.terms {
                let (q, r) = num_integer_div_rem(c, c0);
                if !r.is_zero() {
                    return Err(AlgebraError::NotDivisible(format!("{divisor}")));
                }
                terms.insert(e.clone(), q);
            }
            return RingElement::normalized(self.ring.clone(), terms);
        }
        if support
            .iter()
            .all(|&i| self.ring.0.gens[i].relation.is_some())
        {
            return self.div_exact_finite_rank(divisor, &support);
        }
        if support.len() != 1 {
            return Err(AlgebraError::NotDivisible(format!("{divisor}")));
        }
        let var = support[0];
        let hi = divisor.terms.keys().map(|e| e[var]).max().unwrap();
        let lo = divisor.terms.keys().map(|e| e[var]).min().unwrap();
        let lead = divisor.terms.iter().find(|(e, _)| e[var] == hi).unwrap().1;
        if !(lead.is_one() || (-lead).is_one()) {
            return Err(AlgebraError::NotDivisible(format!("{divisor}")));
        }
        // view self as Laurent polynomial in `var` with coefficient maps
        let mut rem: BTreeMap<i32, BTreeMap<Vec<i32>, BigInt>> = BTreeMap::new();
        for (exps, c) in &self.terms {
            let mut e = exps.clone();
            let k = e[var];
            e[var] = 0;
            let entry = rem.entry(k).or_default();
            *entry.entry(e).or_insert_with(BigInt::zero) += c;
        }
        let div: BTreeMap<i32, BigInt> = divisor
            .terms
            .iter()
            .map(|(e, c)| (e[var], c.clone()))
            .collect();
        let mut quot: BTreeMap<Vec<i32>, BigInt> = BTreeMap::new();
        let self_lo = rem.keys().next().copied().unwrap();
        // the lowest terms multiply, so an exact quotient never reaches below
        // (self's lowest exponent) - (divisor's lowest exponent)
        let floor = self_lo - lo;
        loop {
            rem.retain(|_, m| {
                m.retain(|_, v| !v.is_zero());
                !m.is_empty()
            });
            let top = match rem.keys().next_back() {
                Some(k) => *k,
                None => break,
            };
            if top - hi < floor {
                return Err(AlgebraError::NotDivisible(format!("{divisor}")));
            }
            let coef = rem.remove(&top).unwrap();
            // quotient term: coef / lead * var^(top - hi)
            for (e, c) in &coef {
                let qc = if lead.is_one() { c.clone() } else { -c };
                let mut qe = e.clone();
                qe[var] += top - hi;
                *quot.entry(qe).or_insert_with(BigInt::zero) += &qc;
                // subtract qc * var^(top-hi) * divisor
                for (de, dc) in &div {
                    let k = top - hi + de;
                    if k == top && *de == hi {
                        continue; // cancels the removed top block
                    }
                    let entry = rem.entry(k).or_default();
                    *entry.entry(e.clone()).or_insert_with(BigInt::zero) -= &qc * dc;
                }
            }
        }
        RingElement::normalized(self.ring.clone(), quot)
    }

    /// Exact division when the divisor lives in the subring generated by
    /// relation-bound generators, a finite-rank free Z-module. Writes the
    /// quotient over the monomial basis and solves `divisor * x = self`
    /// blockwise (per monomial in the remaining generators).
    fn div_exact_finite_rank(
        &self,
        divisor: &RingElement,
        support: &[usize],
    ) -> Result<RingElement> {
        let degs: Vec<i32> = support
            .iter()
            .map(|&i| self.ring.0.gens[i].relation.as_ref().unwrap().deg as i32)
            .collect();
        // enumerate the basis: exponent tuples over `support`, each < deg
        let mut basis: Vec<Vec<i32>> = vec![vec![]];
        for d in &degs {
            let mut next = Vec::new();
            for b in &basis {
                for e in 0..*d {
                    let mut nb = b.clone();
                    nb.push(e);
                    next.push(nb);
                }
            }
            basis = next;
        }
        let dim = basis.len();
        let basis_index = |exps: &[i32]| -> Option<usize> {
            let mut idx = 0usize;
            for (k, &i) in support.iter().enumerate() {
                let e = exps[i];
                if e < 0 || e >= degs[k] {
                    return None;
                }
                idx = idx * degs[k] as usize + e as usize;
            }
            Some(idx)
        };
        // multiplication-by-divisor matrix over the basis
        let n = self.ring.num_gens();
        let mut mat = vec![vec![BigInt::zero(); dim]; dim];
        for (j, b) in basis.iter().enumerate() {
            let mut exps = vec![0i32; n];
            for (k, &i) in support.iter().enumerate() {
                exps[i] = b[k];
            }
            let mut terms = BTreeMap::new();
            terms.insert(exps, BigInt::one());
            let mono = RingElement::normalized(self.ring.clone(), terms)?;
            let prod = mono.mul(divisor)?;
            for (e, c) in &prod.terms {
                let row = basis_index(e).expect("product stays in subring");
                mat[row][j] = c.clone();
            }
        }
        // split self into blocks by the exponents outside `support`
        let mut blocks: BTreeMap<Vec<i32>, Vec<BigInt>> = BTreeMap::new();
        for (exps, c) in &self.terms {
            let row = basis_index(exps)
                .ok_or_else(|| AlgebraError::NotDivisible(format!("{divisor}")))?;
            let mut key = exps.clone();
            for &i in support {
                key[i] = 0;
            }
            let entry = blocks.entry(key).or_insert_with(|| vec![BigInt::zero(); dim]);
            entry[row] = c.clone();
        }
        let mut quot: BTreeMap<Vec<i32>, BigInt> = BTreeMap::new();
        for (key, rhs) in blocks {
            let x = solve_integer_system(&mat, &rhs)
                .ok_or_else(|| AlgebraError::NotDivisible(format!("{divisor}")))?;
            for (j, c) in x.into_iter().enumerate() {
                if c.is_zero() {
                    continue;
                }
                let mut exps = key.clone();
                for (k, &i) in support.iter().enumerate() {
                    exps[i] = basis[j][k];
                }
                quot.insert(exps, c);
            }
        }
        let q = RingElement::normalized(self.ring.clone(), quot)?;
        // solutions can be non-unique when the divisor is a zero divisor;
        // the product check guarantees the returned quotient is valid
        if q.mul(divisor)? != *self {
            return Err(AlgebraError::NotDivisible(format!("{divisor}")));
        }
        Ok(q)
    }
}

/// Solves `M x = b` over the rationals (free variables set to zero) and
/// returns the solution if it exists and is integral.
fn solve_integer_system(mat: &[Vec<BigInt>], b: &[BigInt]) -> Option<Vec<BigInt>> {
    use num_rational::BigRational;
    let rows = mat.len();
    let cols = if rows == 0 { 0 } else { mat[0].len() };
    let mut a: Vec<Vec<BigRational>> = mat
        .iter()
        .zip(b.iter())
        .map(|(row, rhs)| {
            row.iter()
                .chain(std::iter::once(rhs))
                .map(|c| BigRational::from_integer(c.clone()))
                .collect()
        })
        .collect();
    let mut pivot_col: Vec<Option<usize>> = Vec::new();
    let mut r = 0usize;
    for c in 0..cols {
        let piv = (r..rows).find(|&i| !a[i][c].is_zero());
        let Some(piv) = piv else {
            continue;
        };
        a.swap(r, piv);
        let inv = a[r][c].clone();
        for v in a[r].iter_mut() {
            *v = &*v / &inv;
        }
        for i in 0..rows {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..=cols {
                    let sub = &f * &a[r][j];
                    a[i][j] = &a[i][j] - sub;
                }
            }
        }
        pivot_col.push(Some(c));
        r += 1;
        if r == rows {
            break;
        }
    }
    // consistency: zero rows must have zero rhs
    for row in a.iter().skip(r) {
        if !row[cols].is_zero() {
            return None;
        }
    }
    let mut x = vec![BigInt::zero(); cols];
    for (i, pc) in pivot_col.iter().enumerate() {
        let c = pc.unwrap();
        let v = &a[i][cols];
        if !v.is_integer() {
            return None;
        }
        x[c] = v.to_integer();
    }
    Some(x)
}

fn num_integer_div_rem(a: &BigInt, b: &BigInt) -> (BigInt, BigInt) {
    let q = a / b;
    let r = a - &q * b;
    (q, r)
}

impl fmt::Display for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let names = self.ring.gen_names();
        let mut first = true;
        // highest monomials first
        for (exps, c) in self.terms.iter().rev() {
            let mut mono = String::new();
            for (i, e) in exps.iter().enumerate() {
                if *e == 0 {
                    continue;
                }
                if !mono.is_empty() {
                    mono.push('*');
                }
                if *e == 1 {
                    mono.push_str(names[i]);
                } else {
                    mono.push_str(&format!("{}^{}", names[i], e));
                }
            }
            let (sign, abs) = if c.is_negative() {
                ("-", -c)
            } else {
                ("+", c.clone())
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
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{mono}")?;
            } else {
                write!(f, "{abs}*{mono}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for RingElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trivial_ring_arithmetic() {
        let z = Ring::integers();
        let a = z.int(2).add(&z.int(3)).unwrap();
        assert_eq!(a, z.int(5));
        assert_eq!(z.int(7), z.int(7));
    }

    #[test]
    fn p2_inverse_of_t() {
        let r = Ring::p2();
        // t^-1 = t^2 - 3t + 3
        let tinv = r.monomial(&[("t", -1)]).unwrap();
        let t = r.gen("t").unwrap();
        let t2 = t.mul(&t).unwrap();
        let expect = t2.sub(&t.scale(3)).unwrap().add(&r.int(3)).unwrap();
        assert_eq!(tinv, expect);
        assert!(t.mul(&tinv).unwrap().is_one());
    }

    #[test]
    fn p2_t_cubed_reduces() {
        let r = Ring::p2();
        let t = r.gen("t").unwrap();
        let t3 = t.pow(3).unwrap();
        // t^3 = 3t^2 - 3t + 1
        let expect = t
            .pow(2)
            .unwrap()
            .scale(3)
            .sub(&t.scale(3))
            .unwrap()
            .add(&r.int(1))
            .unwrap();
        assert_eq!(t3, expect);
    }

    #[test]
    fn p2_relation_is_zero() {
        let r = Ring::p2();
        let t = r.gen("t").unwrap();
        let tm1 = t.sub(&r.one()).unwrap();
        assert!(tm1.pow(3).unwrap().is_zero());
    }

    #[test]
    fn p1xp1_inverse() {
        let r = Ring::p1xp1();
        let ainv = r.monomial(&[("a", -1)]).unwrap();
        let a = r.gen("a").unwrap();
        let expect = r.int(2).sub(&a).unwrap();
        assert_eq!(ainv, expect);
        assert!(a.mul(&ainv).unwrap().is_one());
    }

    #[test]
    fn adjoin_units_extends() {
        let r = Ring::p2();
        let r2 = r.adjoin_units(&["f1"]).unwrap();
        let f1 = r2.gen("f1").unwrap();
        let f1inv = r2.monomial(&[("f1", -1)]).unwrap();
        assert!(f1.mul(&f1inv).unwrap().is_one());
        // promoting elements keeps identities
        let t = r.gen("t").unwrap();
        let t2 = r2.promote(&t).unwrap();
        let tinv2 = r2.monomial(&[("t", -1)]).unwrap();
        assert!(t2.mul(&tinv2).unwrap().is_one());
    }

    #[test]
    fn adjoin_collision_rejected() {
        let r = Ring::p2();
        assert_eq!(
            r.adjoin_units(&["t"]).unwrap_err(),
            AlgebraError::NameCollision("t".into())
        );
    }

    #[test]
    fn units_commute() {
        let r = Ring::free_units(&["f1", "f2"]);
        let e = r
            .monomial(&[("f1", 1), ("f2", 1), ("f1", -1)])
            .unwrap();
        assert_eq!(e, r.gen("f2").unwrap());
    }

    #[test]
    fn diag_merges_families() {
        let ring = hall_test_ring();
        let d = ring.gen("D").unwrap();
        let f2 = ring.gen("f2_1").unwrap();
        let merged = d.mul(&f2).unwrap();
        let expect = ring.monomial(&[("D", 1), ("f1_1", 1)]).unwrap();
        assert_eq!(merged, expect);
        // D^2 is out of theory
        assert_eq!(d.mul(&d).unwrap_err(), AlgebraError::DiagonalSquare);
    }

    #[test]
    fn div_exact_by_q_minus_one() {
        let r = Ring::free_units(&["q", "u"]);
        let q = r.gen("q").unwrap();
        let qm1 = q.sub(&r.one()).unwrap();
        let u = r.gen("u").unwrap();
        // (q-1)*(u + q^2) / (q-1)
        let prod = qm1.mul(&u.add(&q.pow(2).unwrap()).unwrap()).unwrap();
        assert_eq!(prod.div_exact(&qm1).unwrap(), u.add(&q.pow(2).unwrap()).unwrap());
        // non-divisible
        assert!(u.div_exact(&qm1).is_err());
    }

    #[test]
    fn div_exact_laurent_divisor() {
        // q = t^-3 in K(P^2): divide (q-1)*x exactly
        let r = Ring::p2();
        let q = r.monomial(&[("t", -3)]).unwrap();
        let qm1 = q.sub(&r.one()).unwrap();
        let x = r.gen("t").unwrap().add(&r.int(5)).unwrap();
        let prod = qm1.mul(&x).unwrap();
        assert_eq!(prod.div_exact(&qm1).unwrap(), x);
    }

    #[test]
    fn div_exact_by_unit_monomial() {
        // divisors with a positive lowest exponent: the quotient floor is
        // (self's lowest) - (divisor's lowest), not shifted by the spread
        let r = Ring::free_units(&["u", "q"]);
        let u = r.gen("u").unwrap();
        let mu = u.neg();
        assert_eq!(mu.div_exact(&mu).unwrap(), r.one());
        assert_eq!(mu.div_exact(&u).unwrap(), r.int(-1));
        let q = r.gen("q").unwrap();
        let e = u.mul(&q).unwrap().add(&u.pow(2).unwrap()).unwrap();
        assert_eq!(e.div_exact(&u).unwrap(), q.add(&u).unwrap());
        // Laurent division through the unit
        let uinv = u.unit_inverse().unwrap();
        assert_eq!(q.div_exact(&u).unwrap(), q.mul(&uinv).unwrap());
    }

    fn hall_test_ring() -> Ring {
        let pres = RingPresentation::new()
            .gen("q", true)
            .gen("f1_1", true)
            .gen("f2_1", true)
            .gen("D", false);
        let d_index = 3;
        let pres = pres.with_diag(DiagRule {
            d_index,
            merges: vec![(2, 1)],
        });
        Ring::make_ring(pres).unwrap()
    }

    #[test]
    fn normal_form_idempotent_and_ring_axioms() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let r = Ring::p2();
        let rand_el = |rng: &mut rand_chacha::ChaCha8Rng| {
            let mut e = r.zero();
            for _ in 0..3 {
                let pow: i32 = rng.gen_range(-3..4);
                let c: i64 = rng.gen_range(-5..6);
                e = e
                    .add(&r.monomial(&[("t", pow)]).unwrap().scale(c))
                    .unwrap();
            }
            e
        };
        for _ in 0..50 {
            let a = rand_el(&mut rng);
            let b = rand_el(&mut rng);
            let c = rand_el(&mut rng);
            let ab_c = a.mul(&b).unwrap().mul(&c).unwrap();
            let a_bc = a.mul(&b.mul(&c).unwrap()).unwrap();
            assert_eq!(ab_c, a_bc);
            let dist = a.mul(&b.add(&c).unwrap()).unwrap();
            let dist2 = a.mul(&b).unwrap().add(&a.mul(&c).unwrap()).unwrap();
            assert_eq!(dist, dist2);
            assert_eq!(a.mul(&b).unwrap(), b.mul(&a).unwrap());
        }
    }
}
