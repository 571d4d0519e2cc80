//! Propositional planning compiled into a one-level ITA: proposition `i`
//! is true iff auxiliary clock `y_i` equals 1.

use std::collections::{HashSet, VecDeque};

use crate::arith::{int, Rational};
use crate::model::{
    linear_atom, Automaton, AutomatonBuilder, ClockExpr, CmpOp, StateId, UpdateRhs,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Literal {
    pub var: usize,
    pub positive: bool,
}

/// `if pre then post`; `post` assigns truth values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub pre: Vec<Literal>,
    pub post: Vec<(usize, bool)>,
}

/// All propositions start false; the goal is all of them true.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanningInstance {
    pub vars: usize,
    pub rules: Vec<Rule>,
}

fn bit(b: bool) -> Rational {
    int(b as i64)
}

/// Returns the automaton and its goal state `q1`.
pub fn compile_planning(inst: &PlanningInstance) -> (Automaton, StateId) {
    let mut b = AutomatonBuilder::new(1);
    let ys: Vec<_> = (1..=inst.vars)
        .map(|i| b.aux(&format!("y{i}"), 1))
        .collect();
    let q0 = b.state("q0", 1);
    let q1 = b.state("q1", 1);
    b.accepting(q1);
    for (r, rule) in inst.rules.iter().enumerate() {
        let guard = rule
            .pre
            .iter()
            .map(|l| linear_atom(&[(ys[l.var], int(1))], -bit(l.positive), CmpOp::Eq))
            .collect();
        let update = rule
            .post
            .iter()
            .map(|&(v, val)| (ys[v], UpdateRhs::Linear(ClockExpr::rational(bit(val)))))
            .collect();
        b.transition(q0, q0, Some(&format!("r{}", r + 1)), guard, update);
    }
    let goal = ys
        .iter()
        .map(|&y| linear_atom(&[(y, int(1))], int(-1), CmpOp::Eq))
        .collect();
    b.transition(q0, q1, Some("goal"), goal, vec![]);
    (b.build(), q1)
}

/// Exhaustive breadth-first search over the `2^n` truth assignments.
pub fn plan_exists(inst: &PlanningInstance) -> bool {
    let start = vec![false; inst.vars];
    let mut seen = HashSet::from([start.clone()]);
    let mut queue = VecDeque::from([start]);
    while let Some(s) = queue.pop_front() {
        if s.iter().all(|&v| v) {
            return true;
        }
        for r in &inst.rules {
            if r.pre.iter().all(|l| s[l.var] == l.positive) {
                let mut t = s.clone();
                for &(v, val) in &r.post {
                    t[v] = val;
                }
                if seen.insert(t.clone()) {
                    queue.push_back(t);
                }
            }
        }
    }
    false
}
