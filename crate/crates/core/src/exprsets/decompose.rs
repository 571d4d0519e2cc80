use num_traits::Zero;

use crate::arith::{ArithError, PolyRegistry, Polynomial, RationalFunction};
use crate::model::{Automaton, ClockExpr, ClockId};

/// `lead`, `comp` and `compnorm` of an expression at a level.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Decomposition {
    /// The level-k clock, if the expression has one.
    pub clock: Option<ClockId>,
    /// Full level-k coefficient `a_k` (zero when there is no such clock).
    pub coeff: RationalFunction,
    /// Numerator of `a_k`.
    pub lead: Polynomial,
    /// `sum_{i<k} a_i x_i + b`, when the lead is not a nonzero rational.
    pub comp: Option<ClockExpr>,
    /// `-(sum_{i<k} a_i x_i + b) / a_k`, when the lead is nonzero.
    pub compnorm: Option<ClockExpr>,
}

impl Decomposition {
    /// The lead is a nonzero rational constant.
    pub fn lead_is_unit(&self) -> bool {
        self.lead.constant_value().map(|c| !c.is_zero()) == Some(true)
    }
}

/// Level-k normalization of an expression with rational coefficients:
/// divides by the coefficient of the level-k clock when it is nonzero.
pub fn normalize(c: &ClockExpr, k: usize, a: &Automaton) -> ClockExpr {
    let top = c
        .coeffs()
        .iter()
        .find(|(z, _)| a.clock_level(**z) == k)
        .and_then(|(_, f)| f.constant_value());
    match top {
        Some(q) if !q.is_zero() => c.scale(&q.recip()),
        _ => c.clone(),
    }
}

/// Splits `c` at level `k`. A non-constant lead must already be registered
/// (see [`register_lead`]) for `compnorm` to be formed.
pub fn decompose(
    c: &ClockExpr,
    k: usize,
    a: &Automaton,
    reg: &PolyRegistry,
) -> Result<Decomposition, ArithError> {
    let top = c
        .coeffs()
        .iter()
        .find(|(z, _)| a.clock_level(**z) == k)
        .map(|(z, f)| (*z, f.clone()));
    let (clock, coeff) = match top {
        Some((z, f)) => (Some(z), f),
        None => (None, RationalFunction::zero()),
    };
    let rest = match clock {
        Some(z) => c.zero_clocks(|y| y == z),
        None => c.clone(),
    };
    let lead = coeff.numerator().clone();
    let unit = lead.constant_value().map(|q| !q.is_zero()) == Some(true);
    let comp = if unit { None } else { Some(rest.clone()) };
    let compnorm = if lead.is_zero() {
        None
    } else {
        let inv = RationalFunction::one().div(&coeff, reg)?;
        Some(rest.mul_ratfun(&inv.neg(), reg))
    };
    Ok(Decomposition {
        clock,
        coeff,
        lead,
        comp,
        compnorm,
    })
}

/// Registers the lead of `c` at level `k` in `PolPar` when it is not a
/// rational constant. Returns true when a new member was added.
pub(crate) fn register_lead(
    c: &ClockExpr,
    k: usize,
    a: &Automaton,
    reg: &mut PolyRegistry,
) -> bool {
    let lead = c
        .coeffs()
        .iter()
        .find(|(z, _)| a.clock_level(**z) == k)
        .map(|(_, f)| f.numerator().clone());
    match lead {
        Some(p) if !p.is_constant() => reg.register(&p).map(|(_, _, new)| new).unwrap_or(false),
        _ => false,
    }
}
