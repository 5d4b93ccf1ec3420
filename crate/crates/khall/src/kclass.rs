//! Split virtual K-classes: signed multisets of line elements, their
//! wedge/symmetric generating series, duals, determinants, and the
//! Euler-characteristic functional for the toy surfaces.

use std::collections::BTreeMap;

use num_bigint::BigInt;

use crate::dist::{two_sided, FormalDist};
use crate::error::{AlgebraError, Result};
use crate::laurent::{LaurentPoly, Monomial};
use crate::ratfun::RatFun;
use crate::ring::{Ring, RingElement};

/// A virtual class `Σ[plus] − Σ[minus]` whose summands are line elements
/// (unit monomials in the base ring). Identical elements occurring with both
/// signs cancel at construction.
#[derive(Clone, Debug, PartialEq)]
pub struct KClass {
    ring: Ring,
    plus: Vec<RingElement>,
    minus: Vec<RingElement>,
}

impl KClass {
    pub fn new(ring: &Ring, plus: Vec<RingElement>, minus: Vec<RingElement>) -> Result<KClass> {
        for e in plus.iter().chain(minus.iter()) {
            if e.as_unit_monomial().is_none() {
                return Err(AlgebraError::NotUnitMonomial(e.to_string()));
            }
        }
        let mut p = plus;
        let mut m = minus;
        // multiset cancellation
        let mut i = 0;
        while i < p.len() {
            match m.iter().position(|x| *x == p[i]) {
                Some(j) => {
                    p.remove(i);
                    m.remove(j);
                }
                None => i += 1,
            }
        }
        Ok(KClass {
            ring: ring.clone(),
            plus: p,
            minus: m,
        })
    }

    pub fn zero(ring: &Ring) -> KClass {
        KClass {
            ring: ring.clone(),
            plus: vec![],
            minus: vec![],
        }
    }

    /// The structure sheaf class `[1]`.
    pub fn trivial(ring: &Ring) -> KClass {
        KClass {
            ring: ring.clone(),
            plus: vec![ring.one()],
            minus: vec![],
        }
    }

    /// A single line element `[u]`.
    pub fn line(u: RingElement) -> Result<KClass> {
        let ring = u.ring().clone();
        KClass::new(&ring, vec![u], vec![])
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn plus(&self) -> &[RingElement] {
        &self.plus
    }

    pub fn minus(&self) -> &[RingElement] {
        &self.minus
    }

    pub fn rank(&self) -> i64 {
        self.plus.len() as i64 - self.minus.len() as i64
    }

    pub fn add(&self, other: &KClass) -> Result<KClass> {
        let mut plus = self.plus.clone();
        plus.extend(other.plus.iter().cloned());
        let mut minus = self.minus.clone();
        minus.extend(other.minus.iter().cloned());
        KClass::new(&self.ring, plus, minus)
    }

    pub fn neg(&self) -> KClass {
        KClass {
            ring: self.ring.clone(),
            plus: self.minus.clone(),
            minus: self.plus.clone(),
        }
    }

    pub fn sub(&self, other: &KClass) -> Result<KClass> {
        self.add(&other.neg())
    }

    /// Tensors every line element with the unit `u`.
    pub fn twist(&self, u: &RingElement) -> Result<KClass> {
        if u.as_unit_monomial().is_none() {
            return Err(AlgebraError::NotUnitMonomial(u.to_string()));
        }
        let plus = self
            .plus
            .iter()
            .map(|e| e.mul(u))
            .collect::<Result<Vec<_>>>()?;
        let minus = self
            .minus
            .iter()
            .map(|e| e.mul(u))
            .collect::<Result<Vec<_>>>()?;
        KClass::new(&self.ring, plus, minus)
    }

    /// Dual: every line element is inverted, signs preserved.
    pub fn dualize(&self) -> Result<KClass> {
        let plus = self
            .plus
            .iter()
            .map(|e| e.unit_inverse())
            .collect::<Result<Vec<_>>>()?;
        let minus = self
            .minus
            .iter()
            .map(|e| e.unit_inverse())
            .collect::<Result<Vec<_>>>()?;
        KClass::new(&self.ring, plus, minus)
    }

    /// `(det, rank)` where `det = ∏plus / ∏minus`.
    pub fn det_rank(&self) -> Result<(RingElement, i64)> {
        let mut det = self.ring.one();
        for e in &self.plus {
            det = det.mul(e)?;
        }
        for e in &self.minus {
            det = det.mul(&e.unit_inverse()?)?;
        }
        Ok((det, self.rank()))
    }

    /// The image `Σ plus − Σ minus` in the base ring.
    pub fn class_element(&self) -> Result<RingElement> {
        let mut out = self.ring.zero();
        for e in &self.plus {
            out = out.add(e)?;
        }
        for e in &self.minus {
            out = out.sub(e)?;
        }
        Ok(out)
    }

    /// `∧•(K·scale·var) = ∏_{plus}(1 − u·scale·var) / ∏_{minus}(…)`, with the
    /// denominator kept in tracked factored form.
    pub fn wedge_series(&self, var: &str, scale: Option<&Monomial>) -> Result<RatFun> {
        let factor = |u: &RingElement| -> Result<Monomial> {
            let mut m = Monomial::new(u.clone(), &[(var, 1)])?;
            if let Some(s) = scale {
                m = m.mul(s)?;
            }
            Ok(m)
        };
        let mut num = LaurentPoly::one(&self.ring);
        for u in &self.plus {
            num = num.mul(&LaurentPoly::one_minus(&factor(u)?))?;
        }
        let mut den = Vec::new();
        for u in &self.minus {
            den.push(factor(u)?);
        }
        Ok(RatFun::from_factored(num, den))
    }
}

/// `∧•((L−1)·K·x)|_{x=∞−0}` for a rank-0 class `K` and a line element `L`,
/// together with a verification of its inner window: the coefficient of
/// `x^{-1}` is `(1−L^{-1})·K^∨`, the coefficient of `x` is `(L−1)·K`, and the
/// constant coefficient vanishes.
pub fn twisted_expansion(
    k: &KClass,
    l: &RingElement,
    var: &str,
    n: i32,
) -> Result<FormalDist> {
    if k.rank() != 0 {
        return Err(AlgebraError::RankNotZero);
    }
    let ring = k.ring().clone();
    let lk = k.twist(l)?.sub(k)?;
    let w = lk.wedge_series(var, None)?;
    let d = two_sided(&w, var, n)?;
    // certify the inner window against the closed form
    let coeffs = d.materialize(&[var.to_string()], 1)?;
    let lm1 = l.sub(&ring.one())?;
    let expect_pos = lm1.mul(&k.class_element()?)?;
    let expect_neg = ring
        .one()
        .sub(&l.unit_inverse()?)?
        .mul(&k.dualize()?.class_element()?)?;
    let get = |e: i32| coeffs.get(&vec![e]).cloned().unwrap_or_else(|| ring.zero());
    if get(1) != expect_pos || get(-1) != expect_neg || !get(0).is_zero() {
        return Err(AlgebraError::IncompatibleTruncation(
            "twisted expansion failed its closed-form window check".into(),
        ));
    }
    Ok(d)
}

/// Euler-characteristic functional: ℤ-linear extension of a table defined on
/// the normal-form monomial basis of the base ring.
#[derive(Clone, Debug)]
pub struct ChiTable {
    ring: Ring,
    name: String,
    entries: BTreeMap<Vec<i32>, BigInt>,
}

impl ChiTable {
    pub fn from_entries(
        ring: &Ring,
        name: &str,
        entries: BTreeMap<Vec<i32>, BigInt>,
    ) -> ChiTable {
        ChiTable {
            ring: ring.clone(),
            name: name.to_string(),
            entries,
        }
    }

    /// `χ(O(k)) = (k+1)(k+2)/2` on the degree-k line bundle of the projective
    /// plane; the quotient ring normal form only needs k = 0, 1, 2.
    pub fn p2(ring: &Ring) -> ChiTable {
        let mut entries = BTreeMap::new();
        for k in 0..3i64 {
            entries.insert(vec![k as i32], BigInt::from((k + 1) * (k + 2) / 2));
        }
        ChiTable::from_entries(ring, "p2", entries)
    }

    /// `χ(O(j,k)) = (j+1)(k+1)` on the quadric; normal form needs j, k ∈ {0,1}.
    pub fn p1xp1(ring: &Ring) -> ChiTable {
        let mut entries = BTreeMap::new();
        for j in 0..2i64 {
            for k in 0..2i64 {
                entries.insert(vec![j as i32, k as i32], BigInt::from((j + 1) * (k + 1)));
            }
        }
        ChiTable::from_entries(ring, "p1xp1", entries)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn chi(&self, e: &RingElement) -> Result<BigInt> {
        let mut out = BigInt::from(0);
        for (exp, c) in e.terms() {
            let v = self.entries.get(exp).ok_or_else(|| {
                AlgebraError::UnknownMonomial(format!("{exp:?} in table {}", self.name))
            })?;
            out += c * v;
        }
        Ok(out)
    }
}
