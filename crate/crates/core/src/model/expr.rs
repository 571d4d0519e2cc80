use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::arith::{ArithError, PolyRegistry, Rational, RationalFunction};

use super::ClockId;

/// Linear combination of clocks with rational-function coefficients plus a
/// rational-function constant. Zero coefficients are never stored.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct ClockExpr {
    coeffs: BTreeMap<ClockId, RationalFunction>,
    constant: RationalFunction,
}

/// Right-hand side of a clock assignment.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum UpdateRhs {
    /// Expression over main clocks of strictly lower levels (or a constant).
    Linear(ClockExpr),
    /// Copy of another clock of the same level.
    Copy(ClockId),
}

impl UpdateRhs {
    pub fn as_expr(&self) -> ClockExpr {
        match self {
            UpdateRhs::Linear(e) => e.clone(),
            UpdateRhs::Copy(z) => ClockExpr::clock(*z),
        }
    }
}

/// Simultaneous assignment; clocks absent from the map are unchanged.
pub type Update = BTreeMap<ClockId, UpdateRhs>;

impl ClockExpr {
    pub fn zero() -> Self {
        ClockExpr::default()
    }

    pub fn constant(c: RationalFunction) -> Self {
        ClockExpr {
            coeffs: BTreeMap::new(),
            constant: c,
        }
    }

    pub fn rational(q: Rational) -> Self {
        ClockExpr::constant(RationalFunction::constant(q))
    }

    pub fn clock(z: ClockId) -> Self {
        ClockExpr::term(z, RationalFunction::one())
    }

    pub fn term(z: ClockId, c: RationalFunction) -> Self {
        let mut coeffs = BTreeMap::new();
        if !c.is_zero() {
            coeffs.insert(z, c);
        }
        ClockExpr {
            coeffs,
            constant: RationalFunction::zero(),
        }
    }

    pub fn from_parts(
        coeffs: impl IntoIterator<Item = (ClockId, RationalFunction)>,
        constant: RationalFunction,
    ) -> Self {
        ClockExpr {
            coeffs: coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect(),
            constant,
        }
    }

    pub fn coeffs(&self) -> &BTreeMap<ClockId, RationalFunction> {
        &self.coeffs
    }

    pub fn coeff(&self, z: ClockId) -> Option<&RationalFunction> {
        self.coeffs.get(&z)
    }

    pub fn constant_term(&self) -> &RationalFunction {
        &self.constant
    }

    pub fn clocks(&self) -> impl Iterator<Item = ClockId> + '_ {
        self.coeffs.keys().copied()
    }

    pub fn is_constant(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty() && self.constant.is_zero()
    }

    /// The single clock with coefficient one and no constant, if any.
    pub fn as_clock(&self) -> Option<ClockId> {
        if self.coeffs.len() == 1 && self.constant.is_zero() {
            let (z, c) = self.coeffs.iter().next().unwrap();
            if c.is_one() {
                return Some(*z);
            }
        }
        None
    }

    pub fn add(&self, other: &ClockExpr, reg: &PolyRegistry) -> ClockExpr {
        let mut coeffs = self.coeffs.clone();
        for (z, c) in &other.coeffs {
            let sum = match coeffs.get(z) {
                Some(a) => a.add(c, reg),
                None => c.clone(),
            };
            if sum.is_zero() {
                coeffs.remove(z);
            } else {
                coeffs.insert(*z, sum);
            }
        }
        ClockExpr {
            coeffs,
            constant: self.constant.add(&other.constant, reg),
        }
    }

    pub fn neg(&self) -> ClockExpr {
        ClockExpr {
            coeffs: self.coeffs.iter().map(|(z, c)| (*z, c.neg())).collect(),
            constant: self.constant.neg(),
        }
    }

    pub fn sub(&self, other: &ClockExpr, reg: &PolyRegistry) -> ClockExpr {
        self.add(&other.neg(), reg)
    }

    pub fn mul_ratfun(&self, f: &RationalFunction, reg: &PolyRegistry) -> ClockExpr {
        if f.is_zero() {
            return ClockExpr::zero();
        }
        ClockExpr::from_parts(
            self.coeffs.iter().map(|(z, c)| (*z, c.mul(f, reg))),
            self.constant.mul(f, reg),
        )
    }

    pub fn scale(&self, q: &Rational) -> ClockExpr {
        if q.is_zero() {
            return ClockExpr::zero();
        }
        ClockExpr {
            coeffs: self.coeffs.iter().map(|(z, c)| (*z, c.scale(q))).collect(),
            constant: self.constant.scale(q),
        }
    }

    /// Simultaneous substitution: every clock for which `map` returns an
    /// expression is replaced by it.
    pub fn substitute<F>(&self, map: F, reg: &PolyRegistry) -> ClockExpr
    where
        F: Fn(ClockId) -> Option<ClockExpr>,
    {
        let mut out = ClockExpr::constant(self.constant.clone());
        for (z, c) in &self.coeffs {
            let part = match map(*z) {
                Some(e) => e.mul_ratfun(c, reg),
                None => ClockExpr::term(*z, c.clone()),
            };
            out = out.add(&part, reg);
        }
        out
    }

    /// `C[u]`: applies an update simultaneously.
    pub fn apply_update(&self, u: &Update, reg: &PolyRegistry) -> ClockExpr {
        self.substitute(|z| u.get(&z).map(UpdateRhs::as_expr), reg)
    }

    /// Replaces every clock accepted by `pred` by zero.
    pub fn zero_clocks<F: Fn(ClockId) -> bool>(&self, pred: F) -> ClockExpr {
        ClockExpr {
            coeffs: self
                .coeffs
                .iter()
                .filter(|(z, _)| !pred(**z))
                .map(|(z, c)| (*z, c.clone()))
                .collect(),
            constant: self.constant.clone(),
        }
    }

    /// Substitutes a parameter valuation; the result has rational
    /// coefficients.
    pub fn instantiate(
        &self,
        params: &[Rational],
        reg: &PolyRegistry,
    ) -> Result<ClockExpr, ArithError> {
        let mut coeffs = BTreeMap::new();
        for (z, c) in &self.coeffs {
            let v = c.eval(params, reg)?;
            if !v.is_zero() {
                coeffs.insert(*z, RationalFunction::constant(v));
            }
        }
        Ok(ClockExpr {
            coeffs,
            constant: RationalFunction::constant(self.constant.eval(params, reg)?),
        })
    }

    /// Exact value under a parameter point and clock valuation (indexed by
    /// clock id).
    pub fn eval(
        &self,
        params: &[Rational],
        clocks: &[Rational],
        reg: &PolyRegistry,
    ) -> Result<Rational, ArithError> {
        let mut acc = self.constant.eval(params, reg)?;
        for (z, c) in &self.coeffs {
            acc += c.eval(params, reg)? * &clocks[z.0];
        }
        Ok(acc)
    }

    /// Value of a parameter-free expression at a clock valuation.
    pub fn eval_clocks(&self, clocks: &[Rational]) -> Rational {
        let reg = PolyRegistry::new();
        self.eval(&[], clocks, &reg)
            .expect("parameter-free expression has no denominators")
    }

    /// Rational value of a constant coefficient (parameter-free models).
    pub fn rational_coeffs(&self) -> Option<(BTreeMap<ClockId, Rational>, Rational)> {
        let mut out = BTreeMap::new();
        for (z, c) in &self.coeffs {
            out.insert(*z, c.constant_value()?);
        }
        Some((out, self.constant.constant_value()?))
    }

    pub fn max_factor_count(&self) -> usize {
        self.coeffs
            .values()
            .chain(std::iter::once(&self.constant))
            .map(|c| c.factors().len())
            .max()
            .unwrap_or(0)
    }

    pub fn degree(&self, reg: &PolyRegistry) -> u32 {
        self.coeffs
            .values()
            .chain(std::iter::once(&self.constant))
            .map(|c| c.degree(reg))
            .max()
            .unwrap_or(0)
    }

    /// Every polynomial factor index used by a denominator.
    pub fn denominator_factors(&self) -> impl Iterator<Item = usize> + '_ {
        self.coeffs
            .values()
            .chain(std::iter::once(&self.constant))
            .flat_map(|c| c.factors().iter().copied())
    }

    pub fn display<'a>(&'a self, names: &'a Names<'a>) -> ExprDisplay<'a> {
        ExprDisplay { expr: self, names }
    }
}

/// Everything needed to print expressions.
pub struct Names<'a> {
    pub clocks: Vec<&'a str>,
    pub params: &'a [String],
    pub reg: &'a PolyRegistry,
}

pub struct ExprDisplay<'a> {
    expr: &'a ClockExpr,
    names: &'a Names<'a>,
}

impl fmt::Display for ExprDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = self.names;
        let mut first = true;
        for (z, c) in &self.expr.coeffs {
            let name = n.clocks[z.0];
            let d = c.display(n.params, n.reg);
            let text = if c.is_one() {
                name.to_string()
            } else if c.constant_value() == Some(-Rational::one()) {
                format!("-{name}")
            } else if d.is_compound() && !c.factors().is_empty() {
                format!("{d}*{name}")
            } else if d.is_compound() {
                format!("({d})*{name}")
            } else {
                format!("{d}*{name}")
            };
            write_term(f, &text, first)?;
            first = false;
        }
        if !self.expr.constant.is_zero() || first {
            let text = self.expr.constant.display(n.params, n.reg).to_string();
            write_term(f, &text, first)?;
        }
        Ok(())
    }
}

fn write_term(f: &mut fmt::Formatter<'_>, text: &str, first: bool) -> fmt::Result {
    if first {
        write!(f, "{text}")
    } else if let Some(rest) = text.strip_prefix('-') {
        write!(f, " - {rest}")
    } else {
        write!(f, " + {text}")
    }
}
