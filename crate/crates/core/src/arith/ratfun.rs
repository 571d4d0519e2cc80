use std::collections::HashMap;
use std::fmt;
use std::ops::Mul;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use super::poly::Polynomial;
use super::{ArithError, Rational};

/// Sign of a quantity that is known to be determined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn of(q: &Rational) -> Sign {
        if q.is_zero() {
            Sign::Zero
        } else if q.is_positive() {
            Sign::Positive
        } else {
            Sign::Negative
        }
    }

    pub fn flip(self) -> Sign {
        match self {
            Sign::Negative => Sign::Positive,
            Sign::Zero => Sign::Zero,
            Sign::Positive => Sign::Negative,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Sign::Negative => "<",
            Sign::Zero => "=",
            Sign::Positive => ">",
        }
    }
}

impl Mul for Sign {
    type Output = Sign;
    fn mul(self, rhs: Sign) -> Sign {
        match (self, rhs) {
            (Sign::Zero, _) | (_, Sign::Zero) => Sign::Zero,
            (a, b) if a == b => Sign::Positive,
            _ => Sign::Negative,
        }
    }
}

/// Append-only list of parameter polynomials whose signs are fixed by a
/// parameter region. Every non-constant denominator factor of a
/// [`RationalFunction`] refers into this list.
///
/// Members are stored primitive (integer coefficients, gcd 1) with the sign
/// they were first registered with; rational multiples share one entry.
#[derive(Clone, Debug, Default)]
pub struct PolyRegistry {
    members: Vec<Polynomial>,
    /// Keyed by the primitive part with positive leading coefficient.
    index: HashMap<Polynomial, usize>,
    negated: Vec<bool>,
}

impl PolyRegistry {
    pub fn new() -> Self {
        PolyRegistry::default()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn members(&self) -> &[Polynomial] {
        &self.members
    }

    pub fn get(&self, idx: usize) -> &Polynomial {
        &self.members[idx]
    }

    /// Finds `(idx, c)` with `p = c * members[idx]`.
    pub fn lookup(&self, p: &Polynomial) -> Option<(usize, Rational)> {
        if p.is_constant() {
            return None;
        }
        let (content, prim) = p.primitive_part();
        self.index.get(&prim).map(|&i| {
            if self.negated[i] {
                (i, -content)
            } else {
                (i, content)
            }
        })
    }

    /// Registers a non-constant polynomial. Returns its index, the scalar
    /// relating it to the stored member, and whether it was new.
    pub fn register(&mut self, p: &Polynomial) -> Option<(usize, Rational, bool)> {
        if p.is_constant() {
            return None;
        }
        if let Some((i, c)) = self.lookup(p) {
            return Some((i, c, false));
        }
        let (content, prim) = p.primitive_part();
        let i = self.members.len();
        let negated = content.is_negative();
        self.members
            .push(if negated { -&prim } else { prim.clone() });
        self.negated.push(negated);
        self.index.insert(prim, i);
        Some((i, content.abs(), true))
    }

    /// Product of the given members (with multiplicity).
    pub fn product(&self, factors: &[usize]) -> Polynomial {
        factors
            .iter()
            .fold(Polynomial::one(), |acc, &i| &acc * &self.members[i])
    }
}

/// Total sign assignment over a [`PolyRegistry`], indexed like its members.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct SignAssignment {
    signs: Vec<Sign>,
}

impl SignAssignment {
    pub fn new(signs: Vec<Sign>) -> Self {
        SignAssignment { signs }
    }

    pub fn get(&self, idx: usize) -> Option<Sign> {
        self.signs.get(idx).copied()
    }

    pub fn signs(&self) -> &[Sign] {
        &self.signs
    }

    pub fn len(&self) -> usize {
        self.signs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signs.is_empty()
    }

    pub fn push(&mut self, s: Sign) {
        self.signs.push(s);
    }

    /// Signs forced by evaluating every member at a parameter point.
    pub fn at_point(registry: &PolyRegistry, point: &[Rational]) -> Self {
        SignAssignment {
            signs: registry
                .members()
                .iter()
                .map(|m| Sign::of(&m.eval(point)))
                .collect(),
        }
    }
}

/// Quotient of a parameter polynomial by a factored denominator:
/// `numerator / (scalar * prod(registry[f] for f in factors))`.
///
/// Canonical form: the numerator has integer coefficients with gcd 1 (its
/// sign is kept), `scalar > 0`, `factors` is sorted, and no factor divides
/// the numerator exactly.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RationalFunction {
    numerator: Polynomial,
    scalar: Rational,
    factors: Vec<usize>,
}

impl Default for RationalFunction {
    fn default() -> Self {
        RationalFunction::zero()
    }
}

impl RationalFunction {
    pub fn zero() -> Self {
        RationalFunction {
            numerator: Polynomial::zero(),
            scalar: Rational::one(),
            factors: Vec::new(),
        }
    }

    pub fn one() -> Self {
        RationalFunction::constant(Rational::one())
    }

    pub fn constant(q: Rational) -> Self {
        RationalFunction::from_poly(Polynomial::constant(q))
    }

    pub fn from_int(v: i64) -> Self {
        RationalFunction::from_poly(Polynomial::from_int(v))
    }

    pub fn from_poly(p: Polynomial) -> Self {
        let (content, prim) = p.primitive_part();
        if content.is_zero() {
            return RationalFunction::zero();
        }
        // value = content * prim, sign carried by the numerator
        let numerator = if content.is_negative() { -&prim } else { prim };
        RationalFunction {
            numerator,
            scalar: content.abs().recip(),
            factors: Vec::new(),
        }
    }

    /// Builds and canonicalizes `num / (scalar * prod factors)`.
    pub fn from_parts(
        num: Polynomial,
        scalar: Rational,
        mut factors: Vec<usize>,
        reg: &PolyRegistry,
    ) -> Self {
        assert!(!scalar.is_zero(), "zero denominator scalar");
        if num.is_zero() {
            return RationalFunction::zero();
        }
        factors.sort_unstable();
        let mut num = num;
        let mut kept = Vec::with_capacity(factors.len());
        for f in factors {
            match num.div_exact(reg.get(f)) {
                Some(q) => num = q,
                None => kept.push(f),
            }
        }
        let (content, prim) = num.primitive_part();
        let numerator = if content.is_negative() { -&prim } else { prim };
        let mut scalar = scalar / content.abs();
        let numerator = if scalar.is_negative() {
            scalar = -scalar;
            -&numerator
        } else {
            numerator
        };
        RationalFunction {
            numerator,
            scalar,
            factors: kept,
        }
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.numerator
    }

    pub fn scalar(&self) -> &Rational {
        &self.scalar
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn is_zero(&self) -> bool {
        self.numerator.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.constant_value().map(|c| c.is_one()) == Some(true)
    }

    pub fn is_polynomial(&self) -> bool {
        self.factors.is_empty()
    }

    /// The value when the function is a rational constant.
    pub fn constant_value(&self) -> Option<Rational> {
        if self.factors.is_empty() {
            self.numerator.constant_value().map(|c| c / &self.scalar)
        } else {
            None
        }
    }

    /// The polynomial value when there are no denominator factors.
    pub fn as_polynomial(&self) -> Option<Polynomial> {
        if self.factors.is_empty() {
            Some(self.numerator.scale(&self.scalar.recip()))
        } else {
            None
        }
    }

    pub fn neg(&self) -> Self {
        RationalFunction {
            numerator: -&self.numerator,
            scalar: self.scalar.clone(),
            factors: self.factors.clone(),
        }
    }

    pub fn scale(&self, q: &Rational) -> Self {
        if q.is_zero() || self.is_zero() {
            return RationalFunction::zero();
        }
        let numerator = if q.is_negative() {
            -&self.numerator
        } else {
            self.numerator.clone()
        };
        RationalFunction {
            numerator,
            scalar: &self.scalar / q.abs(),
            factors: self.factors.clone(),
        }
    }

    pub fn add(&self, other: &Self, reg: &PolyRegistry) -> Self {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.factors == other.factors {
            let num = &self.numerator.scale(&self.scalar.recip())
                + &other.numerator.scale(&other.scalar.recip());
            return RationalFunction::from_parts(num, Rational::one(), self.factors.clone(), reg);
        }
        let common = multiset_max(&self.factors, &other.factors);
        let lhs = self
            .numerator
            .scale(&self.scalar.recip())
            .mul(&reg.product(&multiset_diff(&common, &self.factors)));
        let rhs = other
            .numerator
            .scale(&other.scalar.recip())
            .mul(&reg.product(&multiset_diff(&common, &other.factors)));
        RationalFunction::from_parts(&lhs + &rhs, Rational::one(), common, reg)
    }

    pub fn sub(&self, other: &Self, reg: &PolyRegistry) -> Self {
        self.add(&other.neg(), reg)
    }

    pub fn mul(&self, other: &Self, reg: &PolyRegistry) -> Self {
        if self.is_zero() || other.is_zero() {
            return RationalFunction::zero();
        }
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        RationalFunction::from_parts(
            &self.numerator * &other.numerator,
            &self.scalar * &other.scalar,
            factors,
            reg,
        )
    }

    /// `self / other`; the numerator of `other` must be a nonzero constant or
    /// a rational multiple of a registered polynomial.
    pub fn div(&self, other: &Self, reg: &PolyRegistry) -> Result<Self, ArithError> {
        if other.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(RationalFunction::zero());
        }
        // self / other = n1 * s2 * F2 / (s1 * F1 * n2)
        let (den_scalar, den_factor) = match other.numerator.constant_value() {
            Some(c) => (&self.scalar * c, None),
            None => {
                let (idx, c) = reg
                    .lookup(&other.numerator)
                    .ok_or(ArithError::UnregisteredDivisor)?;
                (&self.scalar * c, Some(idx))
            }
        };
        let mut den_factors = self.factors.clone();
        den_factors.extend(den_factor);
        den_factors.sort_unstable();
        // cancel other's factors against ours before expanding
        let mut moved_up = Vec::new();
        for &f in &other.factors {
            if let Some(pos) = den_factors.iter().position(|&g| g == f) {
                den_factors.remove(pos);
            } else {
                moved_up.push(f);
            }
        }
        let num = &self.numerator * &reg.product(&moved_up);
        Ok(RationalFunction::from_parts(
            num,
            den_scalar / &other.scalar,
            den_factors,
            reg,
        ))
    }

    pub fn eval(&self, point: &[Rational], reg: &PolyRegistry) -> Result<Rational, ArithError> {
        let mut den = self.scalar.clone();
        for &f in &self.factors {
            den *= reg.get(f).eval(point);
        }
        if den.is_zero() {
            return Err(ArithError::DivisionByZero);
        }
        Ok(self.numerator.eval(point) / den)
    }

    /// Expanded denominator polynomial `scalar * prod factors`.
    pub fn denominator(&self, reg: &PolyRegistry) -> Polynomial {
        reg.product(&self.factors).scale(&self.scalar)
    }

    pub fn degree(&self, reg: &PolyRegistry) -> u32 {
        let den: u32 = self.factors.iter().map(|&f| reg.get(f).degree()).sum();
        self.numerator.degree().max(den)
    }

    pub fn bit_size(&self, reg: &PolyRegistry) -> u64 {
        let den: u64 = self.factors.iter().map(|&f| reg.get(f).bit_size()).sum();
        self.numerator.bit_size() + self.scalar.numer().bits() + self.scalar.denom().bits() + den
    }

    /// Sign of the denominator under `sigma`, or an error if a factor is
    /// assigned zero.
    pub fn denominator_sign(&self, sigma: &SignAssignment) -> Result<Sign, ArithError> {
        let mut sign = Sign::Positive;
        for &f in &self.factors {
            match sigma.get(f) {
                Some(Sign::Zero) => return Err(ArithError::ZeroDenominator(f)),
                Some(s) => sign = sign * s,
                None => return Err(ArithError::MissingSign(f)),
            }
        }
        Ok(sign)
    }

    /// Sign of the function under `sigma`; `None` when the numerator is
    /// neither a constant nor a multiple of a registered polynomial.
    pub fn sign_of(
        &self,
        sigma: &SignAssignment,
        reg: &PolyRegistry,
    ) -> Result<Option<Sign>, ArithError> {
        let den = self.denominator_sign(sigma)?;
        let num = match self.numerator.constant_value() {
            Some(c) => Some(Sign::of(&c)),
            None => match reg.lookup(&self.numerator) {
                Some((idx, c)) => {
                    let s = sigma.get(idx).ok_or(ArithError::MissingSign(idx))?;
                    Some(Sign::of(&c) * s)
                }
                None => None,
            },
        };
        Ok(num.map(|n| n * den))
    }

    pub fn display<'a>(&'a self, names: &'a [String], reg: &'a PolyRegistry) -> RatFunDisplay<'a> {
        RatFunDisplay {
            f: self,
            names,
            reg,
        }
    }
}

/// Equality of the denoted functions, by cross-multiplying expanded
/// denominators.
pub fn ratfun_equal(f: &RationalFunction, g: &RationalFunction, reg: &PolyRegistry) -> bool {
    if f == g {
        return true;
    }
    let lhs = &f.numerator * &g.denominator(reg);
    let rhs = &g.numerator * &f.denominator(reg);
    lhs == rhs
}

fn multiset_max(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = Vec::with_capacity(a.len().max(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(x), Some(y)) if x == y => {
                out.push(*x);
                i += 1;
                j += 1;
            }
            (Some(x), Some(y)) if x < y => {
                out.push(*x);
                i += 1;
            }
            (Some(_), Some(y)) => {
                out.push(*y);
                j += 1;
            }
            (Some(x), None) => {
                out.push(*x);
                i += 1;
            }
            (None, Some(y)) => {
                out.push(*y);
                j += 1;
            }
            (None, None) => unreachable!(),
        }
    }
    out
}

fn multiset_diff(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out = a.to_vec();
    for x in b {
        if let Some(pos) = out.iter().position(|y| y == x) {
            out.remove(pos);
        }
    }
    out
}

pub struct RatFunDisplay<'a> {
    f: &'a RationalFunction,
    names: &'a [String],
    reg: &'a PolyRegistry,
}

impl RatFunDisplay<'_> {
    /// True when the printed form needs parentheses as a product operand.
    pub fn is_compound(&self) -> bool {
        let f = self.f;
        if !f.factors.is_empty() {
            return true;
        }
        let p = f.numerator.scale(&f.scalar.recip());
        p.num_terms() > 1
    }
}

impl fmt::Display for RatFunDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rf = self.f;
        if rf.factors.is_empty() {
            let p = rf.numerator.scale(&rf.scalar.recip());
            return write!(f, "{}", p.display(self.names));
        }
        let num = rf.numerator.scale(&rf.scalar.recip());
        if num.num_terms() > 1 {
            write!(f, "({})", num.display(self.names))?;
        } else {
            write!(f, "{}", num.display(self.names))?;
        }
        write!(f, "/")?;
        let parts: Vec<String> = rf
            .factors
            .iter()
            .map(|&i| {
                let m = self.reg.get(i);
                if m.num_terms() > 1 {
                    format!("({})", m.display(self.names))
                } else {
                    m.display(self.names).to_string()
                }
            })
            .collect();
        if parts.len() == 1 {
            write!(f, "{}", parts[0])
        } else {
            write!(f, "({})", parts.join("*"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn q(n: i64) -> Rational {
        Rational::from_integer(n.into())
    }

    fn p(i: usize) -> Polynomial {
        Polynomial::var(i)
    }

    fn names() -> Vec<String> {
        vec!["p1".into(), "p2".into()]
    }

    /// Registry holding the A2 leads: p2, p2+1, 1-p1+4p2^2, 1+p1p2-4p2^3.
    fn a2_registry() -> PolyRegistry {
        let mut reg = PolyRegistry::new();
        let one = Polynomial::one();
        reg.register(&p(1));
        reg.register(&(&p(1) + &one));
        reg.register(&(&(&one - &p(0)) + &p(1).pow(2).scale(&q(4))));
        reg.register(&(&(&one + &(&p(0) * &p(1))) - &p(1).pow(3).scale(&q(4))));
        reg
    }

    #[test]
    fn cancellation_of_registered_factor() {
        let reg = a2_registry();
        let p2 = RationalFunction::from_poly(p(1));
        let f = p2.div(&p2, &reg).unwrap();
        assert!(ratfun_equal(&f, &RationalFunction::one(), &reg));
        assert!(f.is_one());
    }

    #[test]
    fn equality_of_identical_quotients() {
        let reg = a2_registry();
        let num = RationalFunction::from_poly(&Polynomial::from_int(2) + &p(1));
        let den = RationalFunction::from_poly(reg.get(2).clone());
        let f = num.div(&den, &reg).unwrap();
        let g = num.div(&den, &reg).unwrap();
        assert!(ratfun_equal(&f, &g, &reg));
        assert_eq!(
            f.display(&names(), &reg).to_string(),
            "(2 + p2)/(1 - p1 + 4*p2^2)"
        );
    }

    #[test]
    fn distinct_variables_differ() {
        let reg = PolyRegistry::new();
        let f = RationalFunction::from_poly(p(0));
        let g = RationalFunction::from_poly(p(1));
        assert!(!ratfun_equal(&f, &g, &reg));
    }

    #[test]
    fn sign_under_assignment() {
        let reg = a2_registry();
        let sigma = SignAssignment::new(vec![Sign::Negative, Sign::Zero, Sign::Zero, Sign::Zero]);
        let p2 = RationalFunction::from_poly(p(1));
        assert_eq!(p2.sign_of(&sigma, &reg).unwrap(), Some(Sign::Negative));
        let c = RationalFunction::constant(Rational::new(3.into(), 2.into()));
        assert_eq!(c.sign_of(&sigma, &reg).unwrap(), Some(Sign::Positive));
        // (p2 + 1) / p2
        let f = RationalFunction::from_poly(&p(1) + &Polynomial::one())
            .div(&p2, &reg)
            .unwrap();
        assert_eq!(f.sign_of(&sigma, &reg).unwrap(), Some(Sign::Zero));
        // (p1 + p2) / p2 is not decidable from the assignment
        let g = RationalFunction::from_poly(&p(0) + &p(1))
            .div(&p2, &reg)
            .unwrap();
        assert_eq!(g.sign_of(&sigma, &reg).unwrap(), None);
    }

    #[test]
    fn zero_factor_is_an_error() {
        let reg = a2_registry();
        let sigma = SignAssignment::new(vec![Sign::Negative, Sign::Zero, Sign::Zero, Sign::Zero]);
        let f = RationalFunction::one()
            .div(&RationalFunction::from_poly(reg.get(1).clone()), &reg)
            .unwrap();
        assert!(matches!(
            f.sign_of(&sigma, &reg),
            Err(ArithError::ZeroDenominator(1))
        ));
    }

    #[test]
    fn eval_at_example_point() {
        let reg = a2_registry();
        let f = RationalFunction::from_poly(reg.get(3).clone());
        assert_eq!(f.eval(&[q(5), q(-1)], &reg).unwrap(), q(0));
        let g = RationalFunction::from_poly(&p(1).pow(2) - &Polynomial::from_int(2));
        assert_eq!(g.eval(&[q(5), q(-1)], &reg).unwrap(), q(-1));
        assert_eq!(
            RationalFunction::zero().eval(&[q(5), q(-1)], &reg).unwrap(),
            q(0)
        );
        let h = RationalFunction::one()
            .div(&RationalFunction::from_poly(reg.get(1).clone()), &reg)
            .unwrap();
        assert!(matches!(
            h.eval(&[q(5), q(-1)], &reg),
            Err(ArithError::DivisionByZero)
        ));
    }

    // -- property tests ---------------------------------------------------

    fn arb_poly() -> impl Strategy<Value = Polynomial> {
        prop::collection::vec(((0u32..3, 0u32..3), -4i64..5), 0..4).prop_map(|terms| {
            Polynomial::from_terms(terms.into_iter().map(|((a, b), c)| {
                (
                    super::super::poly::Monomial::from_exponents(vec![a, b]),
                    q(c),
                )
            }))
        })
    }

    fn arb_ratfun() -> impl Strategy<Value = RationalFunction> {
        (arb_poly(), prop::collection::vec(0usize..4, 0..3), 1i64..6)
            .prop_map(|(n, fs, s)| RationalFunction::from_parts(n, q(s), fs, &a2_registry()))
    }

    fn arb_point() -> impl Strategy<Value = Vec<Rational>> {
        prop::collection::vec((-20i64..21, 1i64..7), 2).prop_map(|v| {
            v.into_iter()
                .map(|(n, d)| Rational::new(n.into(), d.into()))
                .collect()
        })
    }

    proptest! {
        #[test]
        fn normalization_is_idempotent(f in arb_ratfun()) {
            let reg = a2_registry();
            let again = RationalFunction::from_parts(
                f.numerator().clone(), f.scalar().clone(), f.factors().to_vec(), &reg);
            prop_assert_eq!(again, f);
        }

        #[test]
        fn evaluation_is_a_homomorphism(f in arb_ratfun(), g in arb_ratfun(), pt in arb_point()) {
            let reg = a2_registry();
            let (Ok(fv), Ok(gv)) = (f.eval(&pt, &reg), g.eval(&pt, &reg)) else {
                return Ok(());
            };
            prop_assert_eq!(f.add(&g, &reg).eval(&pt, &reg).unwrap(), &fv + &gv);
            prop_assert_eq!(f.mul(&g, &reg).eval(&pt, &reg).unwrap(), &fv * &gv);
            prop_assert_eq!(f.sub(&g, &reg).eval(&pt, &reg).unwrap(), &fv - &gv);
        }

        #[test]
        fn sign_of_is_sound(f in arb_ratfun(), pt in arb_point()) {
            let reg = a2_registry();
            let sigma = SignAssignment::at_point(&reg, &pt);
            if let Ok(Some(s)) = f.sign_of(&sigma, &reg) {
                let v = f.eval(&pt, &reg).unwrap();
                prop_assert_eq!(Sign::of(&v), s);
            }
        }

        #[test]
        fn equal_functions_agree_pointwise(f in arb_ratfun(), g in arb_ratfun(),
                                          pts in prop::collection::vec(arb_point(), 100)) {
            let reg = a2_registry();
            // (f*g)/g and f are equal functions whenever g's numerator is registered
            let h = f.add(&g, &reg).sub(&g, &reg);
            prop_assert!(ratfun_equal(&h, &f, &reg));
            for pt in &pts {
                if let (Ok(a), Ok(b)) = (h.eval(pt, &reg), f.eval(pt, &reg)) {
                    prop_assert_eq!(a, b);
                }
            }
        }
    }
}
