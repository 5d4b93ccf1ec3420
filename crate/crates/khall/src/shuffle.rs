//! The integral shuffle algebra `⊕_{n≥0} Sym•ℤ(ℤ[z±¹])`: symmetric Laurent
//! polynomials in `z1..zn` with the symmetrized product
//! `f · g = Sym( f(z1..zn) g(z_{n+1}..z_{n+m}) / ∏_{i≤n<j}(1 − zᵢ/z_j) )`.

use crate::error::{AlgebraError, Result};
use crate::laurent::{LaurentPoly, Monomial};
use crate::ratfun::RatFun;
use crate::ring::Ring;
use std::collections::BTreeMap;

/// Canonical variable name for slot `i` (1-based).
pub fn zvar(i: usize) -> String {
    format!("z{i}")
}

/// A degree-`n` element: a symmetric Laurent polynomial in `z1..zn`.
/// Degree 0 elements are integers.
#[derive(Clone, Debug, PartialEq)]
pub struct ShuffleElement {
    degree: usize,
    value: LaurentPoly,
}

impl ShuffleElement {
    /// Wraps a Laurent polynomial after verifying symmetry in `z1..zn`.
    pub fn canonicalize(p: LaurentPoly, n: usize) -> Result<ShuffleElement> {
        let vars: Vec<String> = (1..=n).map(zvar).collect();
        for v in p.vars() {
            if !vars.contains(v) {
                return Err(AlgebraError::VariableMismatch(format!(
                    "{v} is not one of z1..z{n}"
                )));
            }
        }
        let p = p.with_vars(&vars);
        // adjacent transpositions generate the symmetric group
        for i in 1..n {
            let mut swap = BTreeMap::new();
            swap.insert(zvar(i), zvar(i + 1));
            swap.insert(zvar(i + 1), zvar(i));
            if p.rename_vars(&swap) != p {
                return Err(AlgebraError::NotSymmetric(format!(
                    "swapping z{i} and z{}",
                    i + 1
                )));
            }
        }
        Ok(ShuffleElement { degree: n, value: p })
    }

    /// The degree-0 element `c`.
    pub fn from_int(ring: &Ring, c: i64) -> ShuffleElement {
        ShuffleElement {
            degree: 0,
            value: LaurentPoly::int(ring, c),
        }
    }

    /// The unit of the algebra.
    pub fn one(ring: &Ring) -> ShuffleElement {
        ShuffleElement::from_int(ring, 1)
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn value(&self) -> &LaurentPoly {
        &self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn add(&self, other: &ShuffleElement) -> Result<ShuffleElement> {
        if self.degree != other.degree {
            return Err(AlgebraError::VariableMismatch(format!(
                "degrees {} and {} cannot be added",
                self.degree, other.degree
            )));
        }
        Ok(ShuffleElement {
            degree: self.degree,
            value: self.value.add(&other.value),
        })
    }

    pub fn neg(&self) -> ShuffleElement {
        ShuffleElement {
            degree: self.degree,
            value: self.value.neg(),
        }
    }
}

/// The symmetrized shuffle product. The sum runs over the `(n+m choose n)`
/// shuffles (coset representatives of `S_n × S_m` in `S_{n+m}`), which is the
/// full symmetrization divided by `n!·m!` since both factors are symmetric.
pub fn shuffle_mul(f: &ShuffleElement, g: &ShuffleElement) -> Result<ShuffleElement> {
    let ring = f.value.ring().clone();
    let n = f.degree;
    let m = g.degree;
    if n == 0 || m == 0 {
        // scalar action: multiply through
        let scalar = if n == 0 { &f.value } else { &g.value };
        let other = if n == 0 { g } else { f };
        return Ok(ShuffleElement {
            degree: n + m,
            value: other.value.mul(&scalar.constant_term_poly())?,
        });
    }
    let total = n + m;
    // sum all shuffle terms over the common denominator ∏_{i≠j}(1 − zᵢ/z_j):
    // each term's numerator carries the complement of its own pair set
    let pair_factor = |i: usize, j: usize| -> Result<Monomial> {
        Monomial::new(ring.one(), &[(&zvar(i), 1), (&zvar(j), -1)])
    };
    let mut num = LaurentPoly::zero(&ring);
    for subset in k_subsets(total, n) {
        let complement: Vec<usize> = (1..=total).filter(|i| !subset.contains(i)).collect();
        // assign f's slots to `subset`, g's slots to the complement
        let fv = f.value.rename_vars(
            &subset
                .iter()
                .enumerate()
                .map(|(a, b)| (zvar(a + 1), zvar(*b)))
                .collect(),
        );
        let gv = g.value.rename_vars(
            &complement
                .iter()
                .enumerate()
                .map(|(a, b)| (zvar(a + 1), zvar(*b)))
                .collect(),
        );
        let mut term = fv.mul(&gv)?;
        for i in 1..=total {
            for j in 1..=total {
                if i != j && !(subset.contains(&i) && complement.contains(&j)) {
                    term = term.mul(&LaurentPoly::one_minus(&pair_factor(i, j)?))?;
                }
            }
        }
        num = num.add(&term);
    }
    let mut den = Vec::new();
    for i in 1..=total {
        for j in 1..=total {
            if i != j {
                den.push(pair_factor(i, j)?);
            }
        }
    }
    let poly = RatFun::from_factored(num, den).as_polynomial()?;
    ShuffleElement::canonicalize(poly, total)
}

/// All ascending k-element subsets of `{1..total}`.
fn k_subsets(total: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, total: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..=total {
            cur.push(i);
            rec(i + 1, total, k, cur, out);
            cur.pop();
        }
    }
    rec(1, total, k, &mut cur, &mut out);
    out
}

impl LaurentPoly {
    /// Degree-0 shuffle values are constants; extract as a polynomial for
    /// scalar multiplication.
    fn constant_term_poly(&self) -> LaurentPoly {
        LaurentPoly::constant(self.constant_term())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ring() -> Ring {
        Ring::integers()
    }

    fn z_pow(a: i32) -> ShuffleElement {
        let r = ring();
        ShuffleElement::canonicalize(LaurentPoly::var_pow(&r, "z1", a), 1).unwrap()
    }

    #[test]
    fn canonicalize_checks_symmetry() {
        let r = ring();
        let p = LaurentPoly::var(&r, "z1").add(&LaurentPoly::var(&r, "z2"));
        assert!(ShuffleElement::canonicalize(p, 2).is_ok());
        let q = LaurentPoly::var(&r, "z1");
        assert_eq!(
            ShuffleElement::canonicalize(q, 2).unwrap_err(),
            AlgebraError::NotSymmetric("swapping z1 and z2".into())
        );
        assert!(ShuffleElement::canonicalize(LaurentPoly::int(&r, 5), 0).is_ok());
    }

    #[test]
    fn degree_one_products() {
        let r = ring();
        let one1 = z_pow(0); // the constant 1 in degree 1
        let z = z_pow(1);
        // 1 · 1 = 1 (in two variables)
        let p = shuffle_mul(&one1, &one1).unwrap();
        assert_eq!(p.value(), &LaurentPoly::one(&r).with_vars(&["z1".into(), "z2".into()]));
        // z · 1 = 0
        let p = shuffle_mul(&z, &one1).unwrap();
        assert!(p.is_zero());
        // 1 · z = z1 + z2
        let p = shuffle_mul(&one1, &z).unwrap();
        let expect = LaurentPoly::var(&r, "z1").add(&LaurentPoly::var(&r, "z2"));
        assert_eq!(p.value(), &expect.with_vars(&["z1".into(), "z2".into()]));
        // noncommutativity witness
        assert_ne!(shuffle_mul(&z, &one1).unwrap(), shuffle_mul(&one1, &z).unwrap());
    }

    #[test]
    fn unit_laws() {
        let r = ring();
        let e = ShuffleElement::one(&r);
        for a in -2..=2 {
            let z = z_pow(a);
            assert_eq!(shuffle_mul(&e, &z).unwrap(), z);
            assert_eq!(shuffle_mul(&z, &e).unwrap(), z);
        }
        let two = ShuffleElement::from_int(&r, 2);
        assert_eq!(
            shuffle_mul(&two, &two).unwrap(),
            ShuffleElement::from_int(&r, 4)
        );
    }

    #[test]
    fn associativity_degree_one_generators() {
        for a in -2..=2 {
            for b in -2..=2 {
                for c in -2..=2 {
                    let (f, g, h) = (z_pow(a), z_pow(b), z_pow(c));
                    let lhs = shuffle_mul(&shuffle_mul(&f, &g).unwrap(), &h).unwrap();
                    let rhs = shuffle_mul(&f, &shuffle_mul(&g, &h).unwrap()).unwrap();
                    assert_eq!(lhs, rhs, "a={a} b={b} c={c}");
                }
            }
        }
    }

    #[test]
    fn bilinearity() {
        let f1 = z_pow(1);
        let f2 = z_pow(-1);
        let g = z_pow(2);
        let sum = f1.add(&f2).unwrap();
        let lhs = shuffle_mul(&sum, &g).unwrap();
        let rhs = shuffle_mul(&f1, &g)
            .unwrap()
            .add(&shuffle_mul(&f2, &g).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
        let lhs = shuffle_mul(&g, &sum).unwrap();
        let rhs = shuffle_mul(&g, &f1)
            .unwrap()
            .add(&shuffle_mul(&g, &f2).unwrap())
            .unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn shuffle_matches_full_symmetrization() {
        // oracle: whole-group symmetrization equals n!·m! times the product
        let r = ring();
        let f = z_pow(2);
        let g = ShuffleElement::canonicalize(
            LaurentPoly::var(&r, "z1")
                .mul(&LaurentPoly::var(&r, "z2"))
                .unwrap()
                .add(&LaurentPoly::one(&r)),
            2,
        )
        .unwrap();
        let prod = shuffle_mul(&f, &g).unwrap();
        // build the raw rational function and symmetrize over all of S_3
        let shift: BTreeMap<String, String> =
            [("z1".into(), "z2".into()), ("z2".into(), "z3".into())]
                .into_iter()
                .collect();
        let gv = g.value().rename_vars(&shift);
        let mut factors = Vec::new();
        for t in 2..=3 {
            factors.push(
                Monomial::new(r.one(), &[("z1", 1), (&zvar(t), -1)]).unwrap(),
            );
        }
        let raw = RatFun::from_factored(f.value().mul(&gv).unwrap(), factors);
        let vars: Vec<String> = (1..=3).map(zvar).collect();
        let sym = raw.symmetrize(&vars).unwrap().as_polynomial().unwrap();
        // 1!·2! = 2
        assert_eq!(sym, prod.value().scale(&r.int(2)).unwrap());
    }
}
