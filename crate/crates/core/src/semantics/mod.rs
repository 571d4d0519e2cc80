//! Concrete semantics of an instantiated automaton: configurations, steps,
//! random simulation and exact path feasibility.

mod feasibility;
mod simulate;

use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::arith::{fmt_rational, ArithError, PolyRegistry, Rational};
use crate::model::{Automaton, CmpOp, GuardAtom, StateId, TransitionId, UpdateRhs};

pub use feasibility::{path_feasible, AbstractPath, PathStep, DEFAULT_PATH_CAP};
pub use simulate::{simulate_random, Simulation};

#[derive(Debug, Error)]
pub enum SemError {
    #[error("parameter valuation has {got} values, model has {want} parameters")]
    ParamCount { got: usize, want: usize },
    #[error("automaton still has parameters; instantiate it first")]
    Parametric,
    #[error(transparent)]
    Arith(#[from] ArithError),
    #[error("guard of {0} is false in the current configuration")]
    GuardFalse(String),
    #[error("transition {0} does not leave the current state")]
    WrongSource(String),
    #[error("negative delay {0}")]
    NegativeDelay(String),
    #[error("path of {len} steps exceeds the cap of {cap}")]
    PathTooLong { len: usize, cap: usize },
    #[error("path does not chain: {0}")]
    BadPath(String),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Config {
    pub state: StateId,
    /// Clock values indexed by clock id.
    pub clocks: Vec<Rational>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Action {
    Delay(Rational),
    Fire(TransitionId),
}

/// `A(pi)`: every coefficient replaced by its value.
pub fn instantiate(a: &Automaton, pi: &[Rational]) -> Result<Automaton, SemError> {
    if pi.len() != a.params.len() {
        return Err(SemError::ParamCount {
            got: pi.len(),
            want: a.params.len(),
        });
    }
    if a.params.is_empty() {
        return Ok(a.clone());
    }
    let reg = PolyRegistry::new();
    let mut out = a.clone();
    out.params.clear();
    for tr in &mut out.transitions {
        for atom in &mut tr.guard {
            if let GuardAtom::Linear { expr, .. } = atom {
                *expr = expr.instantiate(pi, &reg)?;
            }
        }
        for rhs in tr.update.values_mut() {
            if let UpdateRhs::Linear(e) = rhs {
                *e = e.instantiate(pi, &reg)?;
            }
        }
    }
    out.rescale_guards();
    Ok(out)
}

pub fn initial_config(a: &Automaton) -> Config {
    Config {
        state: a
            .initial_state()
            .expect("validated automaton has an initial state"),
        clocks: vec![Rational::zero(); a.clocks.len()],
    }
}

pub fn atom_holds(atom: &GuardAtom, clocks: &[Rational]) -> bool {
    let (expr, op) = atom.as_expr();
    let v = expr.eval_clocks(clocks);
    op.holds(v.cmp(&Rational::zero()))
}

pub fn guard_holds(a: &Automaton, t: TransitionId, clocks: &[Rational]) -> bool {
    a.transition(t).guard.iter().all(|g| atom_holds(g, clocks))
}

/// Applies an update simultaneously (right-hand sides read the old values).
pub fn apply_update(a: &Automaton, t: TransitionId, clocks: &[Rational]) -> Vec<Rational> {
    let mut out = clocks.to_vec();
    for (z, rhs) in a.effective_update(t) {
        out[z.0] = match rhs {
            UpdateRhs::Linear(e) => e.eval_clocks(clocks),
            UpdateRhs::Copy(y) => clocks[y.0].clone(),
        };
    }
    out
}

pub fn step(a: &Automaton, c: &Config, action: &Action) -> Result<Config, SemError> {
    if !a.params.is_empty() {
        return Err(SemError::Parametric);
    }
    match action {
        Action::Delay(d) => {
            if d.is_negative() {
                return Err(SemError::NegativeDelay(fmt_rational(d)));
            }
            let mut out = c.clone();
            let act = a.state(c.state).active;
            out.clocks[act.0] += d;
            Ok(out)
        }
        Action::Fire(t) => {
            let tr = a.transition(*t);
            if tr.source != c.state {
                return Err(SemError::WrongSource(a.transition_name(*t)));
            }
            if !guard_holds(a, *t, &c.clocks) {
                return Err(SemError::GuardFalse(a.transition_name(*t)));
            }
            Ok(Config {
                state: tr.target,
                clocks: apply_update(a, *t, &c.clocks),
            })
        }
    }
}

/// Whether `a op b` holds for two rationals.
pub fn compare(a: &Rational, op: CmpOp, b: &Rational) -> bool {
    op.holds(a.cmp(b))
}

/// One trace line: `STATE | clock=value,... | action`.
pub fn trace_line(a: &Automaton, c: &Config, action: Option<&Action>) -> String {
    let vals: Vec<String> = a
        .clocks
        .iter()
        .zip(&c.clocks)
        .map(|(k, v)| format!("{}={}", k.name, fmt_rational(v)))
        .collect();
    let act = match action {
        None => "end".to_string(),
        Some(Action::Delay(d)) => format!("delay {}", fmt_rational(d)),
        Some(Action::Fire(t)) => format!("fire {}", a.transition_name(*t)),
    };
    format!("{} | {} | {}", a.state(c.state).name, vals.join(","), act)
}

pub struct Trace<'a> {
    pub automaton: &'a Automaton,
    pub steps: &'a [(Config, Action)],
    pub last: &'a Config,
}

impl fmt::Display for Trace<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (c, act) in self.steps {
            writeln!(f, "{}", trace_line(self.automaton, c, Some(act)))?;
        }
        writeln!(f, "{}", trace_line(self.automaton, self.last, None))
    }
}
