//! Lowers parsed expressions onto kernel objects. Identifiers split into
//! formal expansion variables (`x`, `y`, `z`, `w`, `z1`, `z2`, ... plus any
//! explicitly designated name) and base-ring units (everything else, adjoined
//! as free invertible generators).

use khall::dist::{FormalDist, Tail};
use khall::kclass::KClass;
use khall::laurent::{LaurentPoly, Monomial};
use khall::ratfun::RatFun;
use khall::ring::{Ring, RingElement};
use std::collections::BTreeSet;
use std::fmt;

use crate::parse::{Expr, KClassLit, Scale};

/// Evaluation failure: a structural restriction of the expression language
/// (as opposed to a kernel arithmetic error).
#[derive(Clone, Debug)]
pub struct LowerError(pub String);

impl fmt::Display for LowerError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for LowerError {}

impl From<khall::AlgebraError> for LowerError {
    fn from(e: khall::AlgebraError) -> Self {
        LowerError(e.to_string())
    }
}

type Result<T> = std::result::Result<T, LowerError>;

/// A lowered expression: exactly one kernel object.
#[derive(Clone, Debug)]
pub enum Value {
    Rat(RatFun),
    Dist(FormalDist),
    Class(KClass),
}

pub struct Lowering {
    ring: Ring,
    formal: BTreeSet<String>,
    order: i32,
}

fn builtin_formal(name: &str) -> bool {
    matches!(name, "x" | "y" | "z" | "w")
        || (name.len() > 1
            && name.starts_with('z')
            && name[1..].chars().all(|c| c.is_ascii_digit()))
}

fn collect_idents(e: &Expr, out: &mut BTreeSet<String>) {
    match e {
        Expr::Int(_) => {}
        Expr::Ident(s) => {
            out.insert(s.clone());
        }
        Expr::Neg(a) | Expr::Pow(a, _) | Expr::Delta(a) => collect_idents(a, out),
        Expr::Add(a, b) | Expr::Sub(a, b) | Expr::Mul(a, b) | Expr::Div(a, b) => {
            collect_idents(a, out);
            collect_idents(b, out);
        }
        Expr::Wedge(lit, scale) | Expr::Sym(lit, scale) => {
            collect_class(lit, out);
            match scale {
                Scale::None => {}
                Scale::Times(a) | Scale::Over(a) => collect_idents(a, out),
            }
        }
        Expr::Class(lit) => collect_class(lit, out),
    }
}

fn collect_class(lit: &KClassLit, out: &mut BTreeSet<String>) {
    for e in lit.plus.iter().chain(lit.minus.iter()) {
        collect_idents(e, out);
    }
}

impl Lowering {
    /// Builds the evaluation context for a set of expressions: every
    /// non-formal identifier becomes a free invertible ring generator.
    pub fn for_exprs(exprs: &[&Expr], extra_formal: &[&str], order: i32) -> Lowering {
        let mut idents = BTreeSet::new();
        for e in exprs {
            collect_idents(e, &mut idents);
        }
        let mut formal: BTreeSet<String> =
            extra_formal.iter().map(|s| s.to_string()).collect();
        let mut units = Vec::new();
        for name in idents {
            if builtin_formal(&name) || formal.contains(&name) {
                formal.insert(name);
            } else {
                units.push(name);
            }
        }
        let unit_refs: Vec<&str> = units.iter().map(|s| s.as_str()).collect();
        Lowering { ring: Ring::free_units(&unit_refs), formal, order }
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn lower(&self, e: &Expr) -> Result<Value> {
        match e {
            Expr::Int(n) => Ok(Value::Rat(RatFun::from_poly(LaurentPoly::int(&self.ring, *n)))),
            Expr::Ident(s) => {
                if self.formal.contains(s) {
                    Ok(Value::Rat(RatFun::from_poly(LaurentPoly::var(&self.ring, s))))
                } else {
                    Ok(Value::Rat(RatFun::constant(self.ring.gen(s)?)))
                }
            }
            Expr::Neg(a) => match self.lower(a)? {
                Value::Rat(r) => Ok(Value::Rat(r.neg())),
                Value::Dist(d) => Ok(Value::Dist(d.neg())),
                Value::Class(k) => Ok(Value::Class(k.neg())),
            },
            Expr::Add(a, b) => self.combine(a, b, "+"),
            Expr::Sub(a, b) => self.combine(a, b, "-"),
            Expr::Mul(a, b) => self.multiply(&self.lower(a)?, &self.lower(b)?),
            Expr::Div(a, b) => self.multiply(&self.lower(a)?, &Value::Rat(self.inv_rat(b)?)),
            Expr::Pow(a, k) => {
                if *k >= 0 {
                    let base = self.lower_rat(a)?;
                    let mut out = RatFun::one(&self.ring);
                    for _ in 0..*k {
                        out = out.mul(&base)?;
                    }
                    Ok(Value::Rat(out))
                } else {
                    let base = self.inv_rat(a)?;
                    let mut out = RatFun::one(&self.ring);
                    for _ in 0..(-*k) {
                        out = out.mul(&base)?;
                    }
                    Ok(Value::Rat(out))
                }
            }
            Expr::Delta(a) => {
                let m = self.monomial(a)?;
                if m.is_var_free() {
                    return Err(LowerError(
                        "delta argument must involve a formal variable".into(),
                    ));
                }
                let tail = Tail::from_poly(&LaurentPoly::one(&self.ring), self.order);
                Ok(Value::Dist(FormalDist::from_term(vec![m], tail)?))
            }
            Expr::Wedge(lit, scale) => {
                let k = self.class(lit)?;
                Ok(Value::Rat(wedge_rat(&k, &self.scale_monomial(scale)?)?))
            }
            Expr::Sym(lit, scale) => {
                let k = self.class(lit)?.neg();
                Ok(Value::Rat(wedge_rat(&k, &self.scale_monomial(scale)?)?))
            }
            Expr::Class(lit) => Ok(Value::Class(self.class(lit)?)),
        }
    }

    pub fn lower_rat(&self, e: &Expr) -> Result<RatFun> {
        match self.lower(e)? {
            Value::Rat(r) => Ok(r),
            other => Err(LowerError(format!(
                "expected a rational expression, found a {}",
                kind_name(&other)
            ))),
        }
    }

    fn combine(&self, a: &Expr, b: &Expr, op: &str) -> Result<Value> {
        let (va, vb) = (self.lower(a)?, self.lower(b)?);
        match (&va, &vb, op) {
            (Value::Rat(x), Value::Rat(y), "+") => Ok(Value::Rat(x.add(y)?)),
            (Value::Rat(x), Value::Rat(y), "-") => Ok(Value::Rat(x.sub(y)?)),
            (Value::Dist(x), Value::Dist(y), "+") => Ok(Value::Dist(x.add(y)?)),
            (Value::Dist(x), Value::Dist(y), "-") => Ok(Value::Dist(x.sub(y)?)),
            (Value::Class(x), Value::Class(y), "+") => Ok(Value::Class(x.add(y)?)),
            (Value::Class(x), Value::Class(y), "-") => Ok(Value::Class(x.sub(y)?)),
            _ => Err(LowerError(format!(
                "cannot apply {op} to a {} and a {}",
                kind_name(&va),
                kind_name(&vb)
            ))),
        }
    }

    fn multiply(&self, a: &Value, b: &Value) -> Result<Value> {
        match (a, b) {
            (Value::Rat(x), Value::Rat(y)) => Ok(Value::Rat(x.mul(y)?)),
            (Value::Dist(d), Value::Rat(r)) | (Value::Rat(r), Value::Dist(d)) => {
                let p = r.as_polynomial().map_err(|_| {
                    LowerError("a distribution can only be multiplied by a polynomial".into())
                })?;
                Ok(Value::Dist(dist_mul_poly(d, &p)?))
            }
            _ => Err(LowerError(format!(
                "cannot multiply a {} and a {}",
                kind_name(a),
                kind_name(b)
            ))),
        }
    }

    /// The multiplicative inverse of `e`, keeping the denominator in tracked
    /// factored form. Supports monomials, `1 - monomial` binomials, and
    /// products/powers of such.
    fn inv_rat(&self, e: &Expr) -> Result<RatFun> {
        match e {
            Expr::Mul(a, b) => Ok(self.inv_rat(a)?.mul(&self.inv_rat(b)?)?),
            Expr::Neg(a) => Ok(self.inv_rat(a)?.neg()),
            Expr::Pow(a, k) => {
                let base = if *k >= 0 { self.inv_rat(a)? } else { self.lower_rat(a)? };
                let mut out = RatFun::one(&self.ring);
                for _ in 0..k.unsigned_abs() {
                    out = out.mul(&base)?;
                }
                Ok(out)
            }
            _ => {
                let r = self.lower_rat(e)?;
                let (num, factors) = r.factored_parts().map_err(|_| {
                    LowerError(format!("cannot invert {r}: denominator is opaque"))
                })?;
                // 1/(m·∏(1−f)) = m⁻¹·∏(1−f)⁻¹ stays factored
                if let Some(m) = num.as_monomial() {
                    let mut out = RatFun::from_poly(m.inv()?.to_laurent());
                    for f in factors {
                        out = out.mul(&RatFun::inv_one_minus(f))?;
                    }
                    return Ok(out);
                }
                if factors.is_empty() {
                    if let Some(m) = as_one_minus(num) {
                        return Ok(RatFun::inv_one_minus(&m));
                    }
                }
                Err(LowerError(format!(
                    "cannot invert {r}: only monomials, (1 - monomial) binomials, \
                     and their products are invertible"
                )))
            }
        }
    }

    /// Lowers to a single Laurent monomial.
    pub fn monomial(&self, e: &Expr) -> Result<Monomial> {
        let r = self.lower_rat(e)?;
        let (num, factors) = r
            .factored_parts()
            .map_err(|_| LowerError(format!("{r} is not a monomial")))?;
        if !factors.is_empty() {
            return Err(LowerError(format!("{r} is not a monomial")));
        }
        num.as_monomial()
            .ok_or_else(|| LowerError(format!("{num} is not a monomial")))
    }

    fn scale_monomial(&self, scale: &Scale) -> Result<Monomial> {
        match scale {
            Scale::None => Ok(Monomial::one(&self.ring)),
            Scale::Times(e) => self.monomial(e),
            Scale::Over(e) => Ok(self.monomial(e)?.inv()?),
        }
    }

    /// Lowers a class literal; every entry must be a variable-free unit.
    pub fn class(&self, lit: &KClassLit) -> Result<KClass> {
        let entry = |e: &Expr| -> Result<RingElement> {
            let m = self.monomial(e)?;
            if !m.is_var_free() {
                return Err(LowerError(format!(
                    "class entry {m} involves a formal variable"
                )));
            }
            Ok(m.unit().clone())
        };
        let plus: Vec<RingElement> =
            lit.plus.iter().map(entry).collect::<Result<_>>()?;
        let minus: Vec<RingElement> =
            lit.minus.iter().map(entry).collect::<Result<_>>()?;
        Ok(KClass::new(&self.ring, plus, minus)?)
    }
}

fn kind_name(v: &Value) -> &'static str {
    match v {
        Value::Rat(_) => "rational function",
        Value::Dist(_) => "distribution",
        Value::Class(_) => "class",
    }
}

/// Recognizes `1 - m` for a single monomial `m`.
fn as_one_minus(p: &LaurentPoly) -> Option<Monomial> {
    let terms = p.terms();
    if terms.len() != 2 {
        return None;
    }
    let zero = vec![0i32; p.vars().len()];
    if !terms.get(&zero)?.is_one() {
        return None;
    }
    let (exps, coeff) = terms.iter().find(|(e, _)| **e != zero)?;
    let vars = p
        .vars()
        .iter()
        .cloned()
        .zip(exps.iter().cloned())
        .filter(|(_, e)| *e != 0)
        .collect();
    Monomial::from_parts(coeff.neg(), vars).ok()
}

/// `∧•(K·arg) = ∏_plus (1 − u·arg) / ∏_minus (1 − u·arg)` at an arbitrary
/// monomial argument.
fn wedge_rat(k: &KClass, arg: &Monomial) -> Result<RatFun> {
    let ring = k.ring().clone();
    let term = |u: &RingElement| -> Result<Monomial> {
        Ok(Monomial::new(u.clone(), &[])?.mul(arg)?)
    };
    let mut num = LaurentPoly::one(&ring);
    for u in k.plus() {
        num = num.mul(&LaurentPoly::one_minus(&term(u)?))?;
    }
    let mut den = Vec::new();
    for u in k.minus() {
        den.push(term(u)?);
    }
    Ok(RatFun::from_factored(num, den))
}

fn dist_mul_poly(d: &FormalDist, p: &LaurentPoly) -> Result<FormalDist> {
    let ring = p.ring().clone();
    let mut out = FormalDist::zero(&ring);
    for t in d.terms() {
        let scaled = FormalDist::from_term(t.deltas.clone(), t.tail.mul_poly(p)?)?;
        out = out.add(&scaled)?;
    }
    Ok(out.canonicalize()?)
}

/// Renders a class back in literal syntax.
pub fn class_to_string(k: &KClass) -> String {
    let mut parts: Vec<String> = k.plus().iter().map(|u| format!("+{u}")).collect();
    parts.extend(k.minus().iter().map(|u| format!("-{u}")));
    format!("K[{}]", parts.join(","))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::parse::parse;

    fn lower_str(src: &str, order: i32) -> (Lowering, Value) {
        let e = parse(src).unwrap();
        let ctx = Lowering::for_exprs(&[&e], &[], order);
        let v = ctx.lower(&e).unwrap();
        (ctx, v)
    }

    #[test]
    fn rational_lowering_keeps_factored_denominator() {
        let (_, v) = lower_str("1/(1-u*x)", 8);
        match v {
            Value::Rat(r) => {
                let (num, fs) = r.factored_parts().unwrap();
                assert!(num.is_one());
                assert_eq!(fs.len(), 1);
                assert_eq!(fs[0].var_exp("x"), 1);
            }
            other => panic!("expected rational, got {other:?}"),
        }
    }

    #[test]
    fn compound_denominators() {
        let (_, v) = lower_str("x^2/(x*(1-x)^2*(1-u/x))", 8);
        match v {
            Value::Rat(r) => {
                let (_, fs) = r.factored_parts().unwrap();
                assert_eq!(fs.len(), 3);
            }
            other => panic!("expected rational, got {other:?}"),
        }
        let e = parse("1/(u+v)").unwrap();
        let ctx = Lowering::for_exprs(&[&e], &[], 8);
        assert!(ctx.lower(&e).is_err());
    }

    #[test]
    fn delta_and_class_lowering() {
        let (_, v) = lower_str("delta(w/z)", 8);
        match v {
            Value::Dist(d) => {
                assert_eq!(d.terms().len(), 1);
                let m = &d.terms()[0].deltas[0];
                assert_eq!((m.var_exp("w"), m.var_exp("z")), (1, -1));
            }
            other => panic!("expected distribution, got {other:?}"),
        }
        let (_, v) = lower_str("K[+u,-1]", 8);
        match v {
            Value::Class(k) => {
                assert_eq!(k.rank(), 0);
                assert_eq!(class_to_string(&k), "K[+u,-1]");
            }
            other => panic!("expected class, got {other:?}"),
        }
    }

    #[test]
    fn wedge_and_sym_lowering() {
        let (ctx, v) = lower_str("wedge(K[+u,-1]/z)", 8);
        match v {
            Value::Rat(r) => {
                // (1 - u/z) / (1 - 1/z)
                let (num, fs) = r.factored_parts().unwrap();
                assert_eq!(fs.len(), 1);
                assert_eq!(fs[0].var_exp("z"), -1);
                assert_eq!(num.terms().len(), 2);
                let _ = ctx;
            }
            other => panic!("expected rational, got {other:?}"),
        }
        // Sym is the reciprocal wedge: their product is 1
        let e1 = parse("wedge(K[+u,-1]*x)").unwrap();
        let e2 = parse("sym(K[+u,-1]*x)").unwrap();
        let ctx = Lowering::for_exprs(&[&e1, &e2], &[], 8);
        let (Value::Rat(a), Value::Rat(b)) =
            (ctx.lower(&e1).unwrap(), ctx.lower(&e2).unwrap())
        else {
            panic!("expected rationals");
        };
        let prod = a.mul(&b).unwrap().as_polynomial().unwrap();
        assert!(prod.is_one());
    }
}
