//! Parameter regions: a sign for every member of `PolPar` plus a total
//! preorder on the parameter-only constants of `E_1`, with emptiness decided
//! by an external real-arithmetic solver or a built-in sampler.

mod constraints;
mod enumerate;
mod sampler;
mod smt;

use std::cmp::Ordering;
use std::path::Path;

use thiserror::Error;

use crate::arith::{ArithError, Polynomial, Rational, RationalFunction, Sign, SignAssignment};
use crate::exprsets::{canonical_key, ExprSet};
use crate::model::{Automaton, CmpOp};

pub use constraints::{fmt_point, poly_to_smt, ConstraintSystem, Formula, PolyAtom};
pub use enumerate::{enumerate_regions, EnumOptions, EnumStats, RegionEnumerator};
pub use sampler::Sampler;
pub use smt::{parse_sexps, solver_path, Sexp, SmtSolver, SolverStats};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("cannot launch solver {0}")]
    Launch(String),
    #[error("solver i/o: {0}")]
    Io(String),
    #[error("malformed solver output: {0}")]
    Malformed(String),
}

#[derive(Debug, Error)]
pub enum RegionError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Outcome of a non-emptiness query. A `Sat` witness is absent when the
/// solver only produced an algebraic point.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Emptiness {
    Sat(Option<Vec<Rational>>),
    Unsat,
    Unknown,
}

/// Default per-query solver timeout.
pub const SOLVER_TIMEOUT_MS: u64 = 20_000;

pub enum Backend {
    Smt(SmtSolver),
    Builtin(Sampler),
}

impl Backend {
    /// External solver if one is configured (`explicit`, then the
    /// environment), otherwise the sampler.
    pub fn select(params: &[String], explicit: Option<&Path>) -> Result<Backend, SolverError> {
        match solver_path(explicit) {
            Some(p) => Ok(Backend::Smt(SmtSolver::spawn(
                &p,
                params,
                SOLVER_TIMEOUT_MS,
            )?)),
            None => Ok(Backend::Builtin(Sampler::new(params.len()))),
        }
    }

    pub fn builtin(params: &[String]) -> Backend {
        Backend::Builtin(Sampler::new(params.len()))
    }

    /// Whether `Unknown` can only come from a solver giving up.
    pub fn is_complete(&self) -> bool {
        matches!(self, Backend::Smt(_))
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::Smt(_) => "smt",
            Backend::Builtin(_) => "sampler",
        }
    }

    pub fn queries(&self) -> usize {
        match self {
            Backend::Smt(s) => s.stats.queries,
            Backend::Builtin(s) => s.queries,
        }
    }

    fn check(&mut self, cs: &ConstraintSystem) -> Result<Emptiness, SolverError> {
        match self {
            Backend::Smt(s) => s.check(cs),
            Backend::Builtin(s) => Ok(s.check(cs)),
        }
    }
}

/// Decides whether a constraint system has a solution. Constant atoms and
/// parameter-free systems are decided without the back end.
pub fn check_nonempty(
    cs: &ConstraintSystem,
    backend: &mut Backend,
    nparams: usize,
) -> Result<Emptiness, SolverError> {
    let mut rest = Vec::with_capacity(cs.atoms.len());
    for atom in &cs.atoms {
        match atom.constant_truth() {
            Some(true) => {}
            Some(false) => return Ok(Emptiness::Unsat),
            None => rest.push(atom.clone()),
        }
    }
    let reduced = ConstraintSystem::new(rest, cs.scope.clone());
    if reduced.atoms.is_empty() && reduced.scope.is_none() {
        return Ok(Emptiness::Sat(Some(vec![
            Rational::from_integer(0.into());
            nparams
        ])));
    }
    if nparams == 0 {
        if let Some(v) = reduced.holds_at(&[]) {
            return Ok(if v {
                Emptiness::Sat(Some(Vec::new()))
            } else {
                Emptiness::Unsat
            });
        }
    }
    backend.check(&reduced)
}

/// `Π = (preg, ⪯₁)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamRegion {
    pub signs: SignAssignment,
    /// Ascending blocks of `E_1` indices (parameter-only members).
    pub order1: Vec<Vec<usize>>,
    pub open_only: bool,
    pub system: ConstraintSystem,
    pub witness: Option<Vec<Rational>>,
    /// Non-emptiness was not established.
    pub unknown: bool,
}

impl ParamRegion {
    /// `E_{k,preg}` as indices into `E_k`.
    pub fn filtered(&self, e: &ExprSet, k: usize) -> Vec<usize> {
        filter_level(e, &self.signs, k)
    }

    pub fn lines(&self, a: &Automaton, e: &ExprSet) -> Vec<String> {
        let names = a.names(&e.registry);
        let mut out = Vec::new();
        let chain: Vec<String> = self
            .order1
            .iter()
            .map(|b| {
                b.iter()
                    .map(|&i| e.get(1, i).display(&names).to_string())
                    .collect::<Vec<_>>()
                    .join(" = ")
            })
            .collect();
        out.push(format!("order {}", chain.join(" < ")));
        out.extend(self.system.lines(&a.params));
        if let Some(w) = &self.witness {
            out.push(format!("witness {}", fmt_point(w, &a.params)));
        }
        if self.unknown {
            out.push("status unknown".into());
        }
        out
    }
}

fn sign_op(s: Sign) -> CmpOp {
    match s {
        Sign::Negative => CmpOp::Lt,
        Sign::Zero => CmpOp::Eq,
        Sign::Positive => CmpOp::Gt,
    }
}

pub(crate) fn sign_ordering(s: Sign) -> Ordering {
    match s {
        Sign::Negative => Ordering::Less,
        Sign::Zero => Ordering::Equal,
        Sign::Positive => Ordering::Greater,
    }
}

fn filter_level(e: &ExprSet, sigma: &SignAssignment, k: usize) -> Vec<usize> {
    e.level(k)
        .iter()
        .enumerate()
        .filter(|(_, c)| {
            c.denominator_factors()
                .all(|f| sigma.get(f).is_some_and(|s| s != Sign::Zero))
        })
        .map(|(i, _)| i)
        .collect()
}

/// `E_{k,preg}` for every level.
pub fn filter_exprs(e: &ExprSet, sigma: &SignAssignment) -> Vec<Vec<usize>> {
    (1..=e.num_levels())
        .map(|k| filter_level(e, sigma, k))
        .collect()
}

/// Parameter-only members of `E_{1,preg}` in canonical order.
pub(crate) fn region_constants(a: &Automaton, e: &ExprSet, sigma: &SignAssignment) -> Vec<usize> {
    let mut out: Vec<usize> = filter_level(e, sigma, 1)
        .into_iter()
        .filter(|&i| e.get(1, i).is_constant())
        .collect();
    out.sort_by_cached_key(|&i| canonical_key(e.get(1, i), a, &e.registry));
    out
}

/// Result of clearing the denominators of `f op g`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Cleared {
    Decided(bool),
    Atom(PolyAtom),
}

/// `f op g` as a polynomial atom, or its truth value when the signs of the
/// region already decide it.
pub fn compare_functions(
    f: &RationalFunction,
    g: &RationalFunction,
    op: CmpOp,
    sigma: &SignAssignment,
    e: &ExprSet,
) -> Result<Cleared, ArithError> {
    let diff = f.sub(g, &e.registry);
    if let Some(s) = diff.sign_of(sigma, &e.registry)? {
        return Ok(Cleared::Decided(op.holds(sign_ordering(s))));
    }
    let den = diff.denominator_sign(sigma)?;
    let op = if den == Sign::Negative { op.swap() } else { op };
    Ok(Cleared::Atom(PolyAtom::new(diff.numerator().clone(), op)))
}

fn push_cleared(atoms: &mut Vec<PolyAtom>, c: Cleared) {
    match c {
        Cleared::Decided(true) => {}
        Cleared::Decided(false) => atoms.push(PolyAtom::new(Polynomial::one(), CmpOp::Eq)),
        Cleared::Atom(a) => atoms.push(a),
    }
}

/// Sign atoms for `PolPar`, then the order atoms of `order1` (strict between
/// adjacent blocks, equalities inside a block), then the scope.
pub fn region_constraints(
    signs: &SignAssignment,
    order1: &[Vec<usize>],
    e: &ExprSet,
    scope: Option<&Formula>,
) -> Result<ConstraintSystem, ArithError> {
    let mut atoms = Vec::new();
    for (i, p) in e.registry.members().iter().enumerate() {
        let s = signs.get(i).ok_or(ArithError::MissingSign(i))?;
        atoms.push(PolyAtom::new(p.clone(), sign_op(s)));
    }
    let value = |i: usize| e.get(1, i).constant_term().clone();
    for (b, block) in order1.iter().enumerate() {
        let rep = value(block[0]);
        for &other in &block[1..] {
            push_cleared(
                &mut atoms,
                compare_functions(&value(other), &rep, CmpOp::Eq, signs, e)?,
            );
        }
        if b + 1 < order1.len() {
            let next = value(order1[b + 1][0]);
            push_cleared(
                &mut atoms,
                compare_functions(&rep, &next, CmpOp::Lt, signs, e)?,
            );
        }
    }
    Ok(ConstraintSystem::new(atoms, scope.cloned()))
}

/// The region containing a parameter point (non-open enumeration).
pub fn region_of_point(
    a: &Automaton,
    e: &ExprSet,
    point: &[Rational],
) -> Result<ParamRegion, ArithError> {
    let signs = SignAssignment::at_point(&e.registry, point);
    let mut vals: Vec<(Rational, usize)> = Vec::new();
    for i in region_constants(a, e, &signs) {
        vals.push((e.get(1, i).constant_term().eval(point, &e.registry)?, i));
    }
    // stable: canonical order inside a block
    vals.sort_by(|x, y| x.0.cmp(&y.0));
    let mut order1: Vec<Vec<usize>> = Vec::new();
    let mut last: Option<Rational> = None;
    for (v, i) in vals {
        if last.as_ref() == Some(&v) {
            if let Some(b) = order1.last_mut() {
                b.push(i);
            }
        } else {
            order1.push(vec![i]);
            last = Some(v);
        }
    }
    let system = region_constraints(&signs, &order1, e, None)?;
    Ok(ParamRegion {
        signs,
        order1,
        open_only: false,
        system,
        witness: Some(point.to_vec()),
        unknown: false,
    })
}
