//! ITA / PITA data model.

mod expr;
mod policy;
mod validate;

use std::collections::BTreeMap;
use std::fmt;

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::arith::{PolyRegistry, Rational, RationalFunction};

pub use expr::{ClockExpr, ExprDisplay, Names, Update, UpdateRhs};
pub use policy::desugar_policies;
pub use validate::{validate, Report, Violation};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ClockId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TransitionId(pub usize);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ClockKind {
    Main,
    Aux,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Clock {
    pub name: String,
    pub level: usize,
    pub kind: ClockKind,
}

/// Timing policy of a state; only `Lazy` is understood by the core.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Policy {
    #[default]
    Lazy,
    Urgent,
    Delayed,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct State {
    pub name: String,
    pub level: usize,
    pub active: ClockId,
    pub initial: bool,
    pub accepting: bool,
    pub policy: Policy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    /// Whether `a op b` holds given `a.cmp(b)`.
    pub fn holds(self, ord: std::cmp::Ordering) -> bool {
        use std::cmp::Ordering::*;
        match self {
            CmpOp::Lt => ord == Less,
            CmpOp::Le => ord != Greater,
            CmpOp::Eq => ord == Equal,
            CmpOp::Ge => ord != Less,
            CmpOp::Gt => ord == Greater,
        }
    }

    /// The operator obtained by swapping the two sides.
    pub fn swap(self) -> CmpOp {
        match self {
            CmpOp::Lt => CmpOp::Gt,
            CmpOp::Le => CmpOp::Ge,
            CmpOp::Eq => CmpOp::Eq,
            CmpOp::Ge => CmpOp::Le,
            CmpOp::Gt => CmpOp::Lt,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

impl fmt::Display for CmpOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.symbol())
    }
}

/// One conjunct of a guard.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum GuardAtom {
    /// `expr op 0`
    Linear { expr: ClockExpr, op: CmpOp },
    /// `left - right op 0` for two clocks of the transition's level.
    Diff {
        left: ClockId,
        right: ClockId,
        op: CmpOp,
    },
}

impl GuardAtom {
    pub fn clocks(&self) -> Vec<ClockId> {
        match self {
            GuardAtom::Linear { expr, .. } => expr.clocks().collect(),
            GuardAtom::Diff { left, right, .. } => vec![*left, *right],
        }
    }

    pub fn as_expr(&self) -> (ClockExpr, CmpOp) {
        match self {
            GuardAtom::Linear { expr, op } => (expr.clone(), *op),
            GuardAtom::Diff { left, right, op } => (
                ClockExpr::clock(*left).sub(&ClockExpr::clock(*right), &PolyRegistry::new()),
                *op,
            ),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub source: StateId,
    pub target: StateId,
    pub label: Option<String>,
    pub guard: Vec<GuardAtom>,
    pub update: Update,
}

/// A PITA; an ITA is the case without parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Automaton {
    pub params: Vec<String>,
    pub levels: usize,
    pub clocks: Vec<Clock>,
    pub states: Vec<State>,
    pub transitions: Vec<Transition>,
}

impl Automaton {
    pub fn is_ita(&self) -> bool {
        self.params.is_empty()
    }

    pub fn clock(&self, z: ClockId) -> &Clock {
        &self.clocks[z.0]
    }

    pub fn state(&self, q: StateId) -> &State {
        &self.states[q.0]
    }

    pub fn transition(&self, t: TransitionId) -> &Transition {
        &self.transitions[t.0]
    }

    pub fn clock_level(&self, z: ClockId) -> usize {
        self.clocks[z.0].level
    }

    pub fn is_main(&self, z: ClockId) -> bool {
        self.clocks[z.0].kind == ClockKind::Main
    }

    pub fn main_clock(&self, level: usize) -> Option<ClockId> {
        self.clocks
            .iter()
            .position(|c| c.level == level && c.kind == ClockKind::Main)
            .map(ClockId)
    }

    /// Clocks of a level, main clock first.
    pub fn clocks_at(&self, level: usize) -> Vec<ClockId> {
        let mut out: Vec<ClockId> = (0..self.clocks.len())
            .map(ClockId)
            .filter(|z| self.clocks[z.0].level == level)
            .collect();
        out.sort_by_key(|z| (self.clocks[z.0].kind != ClockKind::Main, z.0));
        out
    }

    pub fn state_level(&self, q: StateId) -> usize {
        self.states[q.0].level
    }

    pub fn initial_state(&self) -> Option<StateId> {
        self.states.iter().position(|s| s.initial).map(StateId)
    }

    pub fn find_state(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s.name == name).map(StateId)
    }

    pub fn find_clock(&self, name: &str) -> Option<ClockId> {
        self.clocks.iter().position(|c| c.name == name).map(ClockId)
    }

    pub fn accepting_states(&self) -> Vec<StateId> {
        (0..self.states.len())
            .map(StateId)
            .filter(|q| self.states[q.0].accepting)
            .collect()
    }

    pub fn transition_ids(&self) -> impl Iterator<Item = TransitionId> {
        (0..self.transitions.len()).map(TransitionId)
    }

    pub fn outgoing(&self, q: StateId) -> impl Iterator<Item = TransitionId> + '_ {
        self.transition_ids()
            .filter(move |t| self.transitions[t.0].source == q)
    }

    /// Sorted set of action labels (epsilon excluded).
    pub fn alphabet(&self) -> Vec<String> {
        let mut out: Vec<String> = self
            .transitions
            .iter()
            .filter_map(|t| t.label.clone())
            .collect();
        out.sort();
        out.dedup();
        out
    }

    /// The update of a transition with the mandatory zero resets of a level
    /// decrease made explicit.
    pub fn effective_update(&self, t: TransitionId) -> Update {
        let tr = &self.transitions[t.0];
        let k = self.state_level(tr.source);
        let k2 = self.state_level(tr.target);
        let mut u = tr.update.clone();
        if k > k2 {
            for (i, c) in self.clocks.iter().enumerate() {
                if c.level > k2 && c.level <= k {
                    u.entry(ClockId(i))
                        .or_insert_with(|| UpdateRhs::Linear(ClockExpr::zero()));
                }
            }
        }
        u
    }

    /// Short human-readable transition name, e.g. `q1 -a-> q2`.
    pub fn transition_name(&self, t: TransitionId) -> String {
        let tr = &self.transitions[t.0];
        format!(
            "{} -{}-> {}",
            self.states[tr.source.0].name,
            tr.label.as_deref().unwrap_or("eps"),
            self.states[tr.target.0].name
        )
    }

    pub fn names<'a>(&'a self, reg: &'a PolyRegistry) -> Names<'a> {
        Names {
            clocks: self.clocks.iter().map(|c| c.name.as_str()).collect(),
            params: &self.params,
            reg,
        }
    }

    /// Rescales every linear guard atom of a parameter-free automaton so
    /// that its clock of the transition's level has coefficient 1.
    pub fn rescale_guards(&mut self) {
        if !self.is_ita() {
            return;
        }
        let levels: Vec<usize> = self
            .transitions
            .iter()
            .map(|t| self.states[t.source.0].level)
            .collect();
        let clock_levels: Vec<usize> = self.clocks.iter().map(|c| c.level).collect();
        for (tr, level) in self.transitions.iter_mut().zip(levels) {
            for atom in &mut tr.guard {
                if let GuardAtom::Linear { expr, op } = atom {
                    let top = expr
                        .coeffs()
                        .iter()
                        .find(|(z, _)| clock_levels[z.0] == level)
                        .and_then(|(_, c)| c.constant_value());
                    if let Some(a) = top {
                        if !a.is_zero() {
                            let inv = a.recip();
                            *expr = expr.scale(&inv);
                            if inv < Rational::zero() {
                                *op = op.swap();
                            }
                        }
                    }
                }
            }
        }
    }
}

/// Builder used by tests and model generators.
#[derive(Default)]
pub struct AutomatonBuilder {
    a: Automaton,
}

impl AutomatonBuilder {
    pub fn new(levels: usize) -> Self {
        let mut a = Automaton {
            levels,
            ..Automaton::default()
        };
        for l in 1..=levels {
            a.clocks.push(Clock {
                name: format!("x{l}"),
                level: l,
                kind: ClockKind::Main,
            });
        }
        AutomatonBuilder { a }
    }

    pub fn params(mut self, names: &[&str]) -> Self {
        self.a.params = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn main(&self, level: usize) -> ClockId {
        self.a.main_clock(level).expect("level exists")
    }

    pub fn aux(&mut self, name: &str, level: usize) -> ClockId {
        self.a.clocks.push(Clock {
            name: name.to_string(),
            level,
            kind: ClockKind::Aux,
        });
        ClockId(self.a.clocks.len() - 1)
    }

    pub fn state(&mut self, name: &str, level: usize) -> StateId {
        let active = self.main(level);
        self.state_with(name, level, active)
    }

    pub fn state_with(&mut self, name: &str, level: usize, active: ClockId) -> StateId {
        let initial = self.a.states.is_empty();
        self.a.states.push(State {
            name: name.to_string(),
            level,
            active,
            initial,
            accepting: false,
            policy: Policy::Lazy,
        });
        StateId(self.a.states.len() - 1)
    }

    pub fn accepting(&mut self, q: StateId) {
        self.a.states[q.0].accepting = true;
    }

    pub fn policy(&mut self, q: StateId, p: Policy) {
        self.a.states[q.0].policy = p;
    }

    pub fn transition(
        &mut self,
        source: StateId,
        target: StateId,
        label: Option<&str>,
        guard: Vec<GuardAtom>,
        update: Vec<(ClockId, UpdateRhs)>,
    ) -> TransitionId {
        self.a.transitions.push(Transition {
            source,
            target,
            label: label.map(str::to_string),
            guard,
            update: update.into_iter().collect::<BTreeMap<_, _>>(),
        });
        TransitionId(self.a.transitions.len() - 1)
    }

    pub fn build(self) -> Automaton {
        let mut a = self.a;
        a.rescale_guards();
        a
    }
}

/// Linear atom `sum coeffs * clocks + constant op 0` with rational numbers.
pub fn linear_atom(terms: &[(ClockId, Rational)], constant: Rational, op: CmpOp) -> GuardAtom {
    GuardAtom::Linear {
        expr: ClockExpr::from_parts(
            terms
                .iter()
                .map(|(z, c)| (*z, RationalFunction::constant(c.clone()))),
            RationalFunction::constant(constant),
        ),
        op,
    }
}
