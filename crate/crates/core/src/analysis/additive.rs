//! Reduction of an additively parametrised PITA to a plain ITA whose lowest
//! levels guess the parameter values.

use std::collections::{BTreeMap, HashSet};

use num_traits::Zero;

use crate::arith::{PolyRegistry, Polynomial, Rational, RationalFunction};
use crate::model::{
    Automaton, Clock, ClockExpr, ClockId, ClockKind, GuardAtom, Policy, State, StateId, Transition,
    UpdateRhs,
};
use crate::regions::Formula;

use super::AnalysisError;

/// The reduced automaton. States of the input keep their ids.
#[derive(Clone, Debug)]
pub struct Reduction {
    pub automaton: Automaton,
    /// Clock standing for each parameter.
    pub param_clocks: Vec<ClockId>,
    pub prefix_states: Vec<StateId>,
}

/// Splits a parameter polynomial of degree at most one into its constant
/// and per-parameter coefficients.
fn linear_parts(p: &Polynomial, nparams: usize) -> Option<(Rational, Vec<Rational>)> {
    let mut constant = Rational::zero();
    let mut coeffs = vec![Rational::zero(); nparams];
    for (m, c) in p.terms() {
        match m.degree() {
            0 => constant = c.clone(),
            1 => {
                let v = (0..nparams).find(|&v| m.exponent(v) == 1)?;
                coeffs[v] = c.clone();
            }
            _ => return None,
        }
    }
    Some((constant, coeffs))
}

fn rational_of(f: &RationalFunction) -> Option<Rational> {
    f.constant_value()
}

/// Clock coefficients are rational and the constant is affine in the
/// parameters.
fn additive_expr(e: &ClockExpr, nparams: usize) -> bool {
    e.coeffs().values().all(|c| rational_of(c).is_some())
        && e.constant_term()
            .as_polynomial()
            .and_then(|p| linear_parts(&p, nparams))
            .is_some()
}

fn exprs(a: &Automaton) -> impl Iterator<Item = (usize, &ClockExpr)> {
    a.transitions.iter().enumerate().flat_map(|(i, tr)| {
        let guards = tr.guard.iter().filter_map(|g| match g {
            GuardAtom::Linear { expr, .. } => Some(expr),
            GuardAtom::Diff { .. } => None,
        });
        let updates = tr.update.values().filter_map(|u| match u {
            UpdateRhs::Linear(e) => Some(e),
            UpdateRhs::Copy(_) => None,
        });
        guards.chain(updates).map(move |e| (i, e))
    })
}

pub fn is_additive(a: &Automaton) -> bool {
    exprs(a).all(|(_, e)| additive_expr(e, a.params.len()))
}

/// Replaces parameters by clocks.
fn lift(e: &ClockExpr, nparams: usize, param_clocks: &[ClockId]) -> ClockExpr {
    let (constant, pcoeffs) = e
        .constant_term()
        .as_polynomial()
        .and_then(|p| linear_parts(&p, nparams))
        .expect("checked additive");
    let mut terms: BTreeMap<ClockId, Rational> = BTreeMap::new();
    for (z, c) in e.coeffs() {
        terms.insert(*z, rational_of(c).expect("checked additive"));
    }
    for (v, c) in pcoeffs.into_iter().enumerate() {
        if !c.is_zero() {
            *terms.entry(param_clocks[v]).or_insert_with(Rational::zero) += c;
        }
    }
    ClockExpr::from_parts(
        terms
            .into_iter()
            .map(|(z, c)| (z, RationalFunction::constant(c))),
        RationalFunction::constant(constant),
    )
}

fn fresh(taken: &mut HashSet<String>, base: &str) -> String {
    let mut name = base.to_string();
    while taken.contains(&name) {
        name.push('_');
    }
    taken.insert(name.clone());
    name
}

/// Builds the equivalent ITA with `k + 1` prefix levels below the levels of
/// `a`. A polyhedral scope becomes the guard of the entry transition.
pub fn reduce_additive(a: &Automaton, scope: Option<&Formula>) -> Result<Reduction, AnalysisError> {
    let np = a.params.len();
    if let Some((i, e)) = exprs(a).find(|(_, e)| !additive_expr(e, np)) {
        let reg = PolyRegistry::new();
        let names = a.names(&reg);
        return Err(AnalysisError::NotAdditive(format!(
            "{} in transition {}",
            e.display(&names),
            a.transition_name(crate::model::TransitionId(i))
        )));
    }
    let scope_atoms = match scope {
        None => Vec::new(),
        Some(f) => f.conjuncts().ok_or_else(|| {
            AnalysisError::Scope("only conjunctions of linear constraints are supported".into())
        })?,
    };
    let shift = np + 1;
    let mut out = a.clone();
    out.params.clear();
    out.levels = a.levels + shift;
    for c in &mut out.clocks {
        c.level += shift;
    }
    let mut taken: HashSet<String> = a.clocks.iter().map(|c| c.name.clone()).collect();
    let mut prefix_clocks = Vec::new();
    for i in 0..=np {
        let base = if i == 0 {
            "p0".to_string()
        } else {
            a.params[i - 1].clone()
        };
        out.clocks.push(Clock {
            name: fresh(&mut taken, &base),
            level: i + 1,
            kind: ClockKind::Main,
        });
        prefix_clocks.push(ClockId(out.clocks.len() - 1));
    }
    let param_clocks = prefix_clocks[1..].to_vec();

    let q0 = a
        .initial_state()
        .ok_or_else(|| AnalysisError::Invalid("no initial state".into()))?;
    for s in &mut out.states {
        s.level += shift;
        s.initial = false;
    }
    for tr in &mut out.transitions {
        for g in &mut tr.guard {
            if let GuardAtom::Linear { expr, .. } = g {
                *expr = lift(expr, np, &param_clocks);
            }
        }
        for u in tr.update.values_mut() {
            if let UpdateRhs::Linear(e) = u {
                *e = lift(e, np, &param_clocks);
            }
        }
    }

    let mut snames: HashSet<String> = a.states.iter().map(|s| s.name.clone()).collect();
    let mut add_state = |out: &mut Automaton, base: &str, level: usize| {
        out.states.push(State {
            name: fresh(&mut snames, base),
            level,
            active: prefix_clocks[level - 1],
            initial: false,
            accepting: false,
            policy: Policy::Lazy,
        });
        StateId(out.states.len() - 1)
    };
    let mut prefix_states = Vec::new();
    // level i + 1 lets p_i grow
    for i in 0..=np {
        prefix_states.push(add_state(&mut out, &format!("guess{i}"), i + 1));
    }
    out.states[prefix_states[0].0].initial = true;
    let edge = |out: &mut Automaton, source, target, guard, update: Vec<(ClockId, UpdateRhs)>| {
        out.transitions.push(Transition {
            source,
            target,
            label: None,
            guard,
            update: update.into_iter().collect(),
        });
    };
    for w in prefix_states.windows(2) {
        edge(&mut out, w[0], w[1], Vec::new(), Vec::new());
    }
    // sign choice: p_i := p_{i-1} or -p_{i-1}, from p_k down to p_1
    let mut cur = prefix_states[np];
    for i in (1..=np).rev() {
        let next = add_state(&mut out, &format!("sign{i}"), np + 1);
        prefix_states.push(next);
        let src = ClockExpr::clock(prefix_clocks[i - 1]);
        for e in [src.clone(), src.neg()] {
            edge(
                &mut out,
                cur,
                next,
                Vec::new(),
                vec![(prefix_clocks[i], UpdateRhs::Linear(e))],
            );
        }
        cur = next;
    }
    let mut guard = Vec::new();
    for atom in scope_atoms {
        let (constant, coeffs) = linear_parts(&atom.poly, np)
            .ok_or_else(|| AnalysisError::Scope("scope constraints must be linear".into()))?;
        let expr = ClockExpr::from_parts(
            coeffs
                .into_iter()
                .enumerate()
                .filter(|(_, c)| !c.is_zero())
                .map(|(v, c)| (param_clocks[v], RationalFunction::constant(c))),
            RationalFunction::constant(constant),
        );
        guard.push(GuardAtom::Linear { expr, op: atom.op });
    }
    edge(&mut out, cur, q0, guard, Vec::new());
    out.rescale_guards();
    Ok(Reduction {
        automaton: out,
        param_clocks,
        prefix_states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{existential_reach, Answer};
    use crate::arith::int;
    use crate::model::{validate, AutomatonBuilder, CmpOp};
    use crate::regions::Backend;

    /// `q0 -(x1 = p1)-> q1 -(x1 = p2 + 1)-> q2`
    fn two_params() -> Automaton {
        let mut b = AutomatonBuilder::new(1).params(&["p1", "p2"]);
        let x = b.main(1);
        let q0 = b.state("q0", 1);
        let q1 = b.state("q1", 1);
        let q2 = b.state("q2", 1);
        let atom = |pv: usize, c: i64| GuardAtom::Linear {
            expr: ClockExpr::from_parts(
                [(x, RationalFunction::one())],
                RationalFunction::from_poly(Polynomial::var(pv).scale(&int(-1)))
                    .add(&RationalFunction::from_int(-c), &PolyRegistry::new()),
            ),
            op: CmpOp::Eq,
        };
        b.transition(q0, q1, Some("a"), vec![atom(0, 0)], vec![]);
        b.transition(q1, q2, Some("b"), vec![atom(1, 1)], vec![]);
        b.transition(q2, q0, Some("c"), vec![], vec![]);
        b.transition(
            q2,
            q2,
            Some("d"),
            vec![],
            vec![(x, UpdateRhs::Linear(ClockExpr::zero()))],
        );
        b.build()
    }

    #[test]
    fn size_counts() {
        let a = two_params();
        assert!(is_additive(&a));
        let r = reduce_additive(&a, None).unwrap();
        let b = &r.automaton;
        assert!(validate(b).is_valid(), "{}", validate(b));
        assert_eq!(b.states.len(), 3 + 2 * 2 + 1);
        assert_eq!(b.transitions.len(), 4 + 3 * 2 + 1);
        assert_eq!(b.clocks.len(), 1 + 2 + 1);
        assert_eq!(b.levels, 1 + 2 + 1);
        assert!(b.is_ita());
    }

    #[test]
    fn no_parameters_adds_one_level() {
        let mut bld = AutomatonBuilder::new(1);
        let q0 = bld.state("q0", 1);
        let q1 = bld.state("q1", 1);
        bld.transition(q0, q1, None, vec![], vec![]);
        let a = bld.build();
        let r = reduce_additive(&a, None).unwrap();
        assert_eq!(r.automaton.levels, 2);
        assert_eq!(r.automaton.states.len(), 3);
        assert_eq!(r.automaton.transitions.len(), 2);
        let mut be = Backend::builtin(&[]);
        let v = existential_reach(&r.automaton, &[q1], None, &mut be).unwrap();
        assert_eq!(v.answer, Answer::Yes);
    }

    /// q1 needs p1 >= 0 and q2 additionally p2 >= -1.
    #[test]
    fn reduction_preserves_reachability() {
        let a = two_params();
        let r = reduce_additive(&a, None).unwrap();
        let mut be = Backend::builtin(&[]);
        let v = existential_reach(&r.automaton, &[StateId(2)], None, &mut be).unwrap();
        assert_eq!(v.answer, Answer::Yes);
        // scope p2 < -1 makes the second guard unsatisfiable
        let scope = Formula::Atom(crate::regions::PolyAtom::new(
            &Polynomial::var(1) + &Polynomial::from_int(1),
            CmpOp::Lt,
        ));
        let r = reduce_additive(&a, Some(&scope)).unwrap();
        let v = existential_reach(&r.automaton, &[StateId(1)], None, &mut be).unwrap();
        assert_eq!(v.answer, Answer::Yes);
        let v = existential_reach(&r.automaton, &[StateId(2)], None, &mut be).unwrap();
        assert_eq!(v.answer, Answer::No);
    }

    #[test]
    fn multiplicative_parameters_are_rejected() {
        let mut b = AutomatonBuilder::new(1).params(&["p"]);
        let x = b.main(1);
        let q0 = b.state("q0", 1);
        let q1 = b.state("q1", 1);
        let expr = ClockExpr::from_parts(
            [(x, RationalFunction::from_poly(Polynomial::var(0)))],
            RationalFunction::from_int(-1),
        );
        b.transition(
            q0,
            q1,
            None,
            vec![GuardAtom::Linear {
                expr,
                op: CmpOp::Lt,
            }],
            vec![],
        );
        let a = b.build();
        assert!(!is_additive(&a));
        assert!(matches!(
            reduce_additive(&a, None),
            Err(AnalysisError::NotAdditive(_))
        ));
    }
}
