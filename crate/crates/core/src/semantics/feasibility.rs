use std::fmt;

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::arith::Rational;
use crate::fm::{self, LinCon, Rel};
use crate::model::{Automaton, CmpOp, TransitionId, UpdateRhs};

use super::SemError;

pub const DEFAULT_PATH_CAP: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PathStep {
    /// A time step of unknown (possibly zero) duration.
    Delay,
    Fire(TransitionId),
}

/// Time/discrete step skeleton of a run from the initial state.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AbstractPath(pub Vec<PathStep>);

impl AbstractPath {
    pub fn transitions(&self) -> impl Iterator<Item = TransitionId> + '_ {
        self.0.iter().filter_map(|s| match s {
            PathStep::Fire(t) => Some(*t),
            PathStep::Delay => None,
        })
    }

    pub fn delay_count(&self) -> usize {
        self.0.iter().filter(|s| **s == PathStep::Delay).count()
    }

    pub fn display<'a>(&'a self, a: &'a Automaton) -> PathDisplay<'a> {
        PathDisplay { path: self, a }
    }
}

pub struct PathDisplay<'a> {
    path: &'a AbstractPath,
    a: &'a Automaton,
}

impl fmt::Display for PathDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .path
            .0
            .iter()
            .map(|s| match s {
                PathStep::Delay => "delay".to_string(),
                PathStep::Fire(t) => self.a.transition_name(*t),
            })
            .collect();
        write!(f, "{}", parts.join(" ; "))
    }
}

/// Linear form over the delay variables.
#[derive(Clone)]
struct Affine {
    coeffs: Vec<Rational>,
    constant: Rational,
}

impl Affine {
    fn zero(n: usize) -> Self {
        Affine {
            coeffs: vec![Rational::zero(); n],
            constant: Rational::zero(),
        }
    }

    fn add_scaled(&mut self, other: &Affine, k: &Rational) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += k * b;
        }
        self.constant += k * &other.constant;
    }
}

/// Decides whether the path can be executed from the initial configuration
/// of a parameter-free automaton and returns one delay per `Delay` step.
pub fn path_feasible(
    a: &Automaton,
    path: &AbstractPath,
    cap: usize,
) -> Result<Option<Vec<Rational>>, SemError> {
    if !a.params.is_empty() {
        return Err(SemError::Parametric);
    }
    if path.0.len() > cap {
        return Err(SemError::PathTooLong {
            len: path.0.len(),
            cap,
        });
    }
    let n = path.delay_count();
    let mut cons: Vec<LinCon> = Vec::new();
    for j in 0..n {
        let mut c = vec![Rational::zero(); n];
        c[j] = -Rational::one();
        cons.push(LinCon::new(c, Rational::zero(), Rel::Le));
    }
    let mut vals: Vec<Affine> = vec![Affine::zero(n); a.clocks.len()];
    let mut state = a
        .initial_state()
        .ok_or_else(|| SemError::BadPath("no initial state".into()))?;
    let mut dvar = 0;
    for s in &path.0 {
        match s {
            PathStep::Delay => {
                let act = a.state(state).active;
                vals[act.0].coeffs[dvar] += Rational::one();
                dvar += 1;
            }
            PathStep::Fire(t) => {
                let tr = a.transition(*t);
                if tr.source != state {
                    return Err(SemError::BadPath(format!(
                        "{} does not leave {}",
                        a.transition_name(*t),
                        a.state(state).name
                    )));
                }
                for atom in &tr.guard {
                    let (expr, op) = atom.as_expr();
                    let (coeffs, constant) = expr.rational_coeffs().ok_or(SemError::Parametric)?;
                    let mut form = Affine::zero(n);
                    form.constant = constant;
                    for (z, c) in &coeffs {
                        form.add_scaled(&vals[z.0], c);
                    }
                    cons.push(atom_constraint(form, op));
                }
                let old = vals.clone();
                for (z, rhs) in a.effective_update(*t) {
                    vals[z.0] = match rhs {
                        UpdateRhs::Copy(y) => old[y.0].clone(),
                        UpdateRhs::Linear(e) => {
                            let (coeffs, constant) =
                                e.rational_coeffs().ok_or(SemError::Parametric)?;
                            let mut form = Affine::zero(n);
                            form.constant = constant;
                            for (y, c) in &coeffs {
                                form.add_scaled(&old[y.0], c);
                            }
                            form
                        }
                    };
                }
                state = tr.target;
            }
        }
    }
    Ok(fm::solve(&cons, n))
}

fn atom_constraint(form: Affine, op: CmpOp) -> LinCon {
    let neg = |f: Affine| Affine {
        coeffs: f.coeffs.iter().map(|c| -c).collect(),
        constant: -f.constant,
    };
    let (f, rel) = match op {
        CmpOp::Lt => (form, Rel::Lt),
        CmpOp::Le => (form, Rel::Le),
        CmpOp::Eq => (form, Rel::Eq),
        CmpOp::Ge => (neg(form), Rel::Le),
        CmpOp::Gt => (neg(form), Rel::Lt),
    };
    LinCon::new(f.coeffs, f.constant, rel)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::int;
    use crate::model::{linear_atom, AutomatonBuilder};

    /// A2 instantiated at p1 = 5, p2 = -1, optionally with a lower bound on
    /// the firing time of `a`.
    fn a2_at_point(extra: Option<i64>) -> Automaton {
        let mut b = AutomatonBuilder::new(2);
        let q1 = b.state("q1", 1);
        let q2 = b.state("q2", 2);
        b.accepting(q2);
        let (x1, x2) = (b.main(1), b.main(2));
        let mut g = vec![linear_atom(&[(x1, int(1))], int(-5), CmpOp::Lt)];
        if let Some(lb) = extra {
            g.push(linear_atom(&[(x1, int(1))], int(-lb), CmpOp::Gt));
        }
        b.transition(q1, q2, Some("a"), g, vec![]);
        let upd = crate::model::ClockExpr::from_parts(
            [(x1, crate::arith::RationalFunction::from_int(1))],
            crate::arith::RationalFunction::from_int(-1),
        );
        b.transition(
            q2,
            q2,
            Some("b"),
            vec![linear_atom(
                &[(x1, int(1)), (x2, int(-1))],
                int(-2),
                CmpOp::Eq,
            )],
            vec![(x2, UpdateRhs::Linear(upd))],
        );
        b.build()
    }

    #[test]
    fn example_run_is_feasible() {
        let a = a2_at_point(None);
        let p = AbstractPath(vec![
            PathStep::Delay,
            PathStep::Fire(TransitionId(0)),
            PathStep::Delay,
            PathStep::Fire(TransitionId(1)),
        ]);
        let w = path_feasible(&a, &p, DEFAULT_PATH_CAP).unwrap().unwrap();
        assert_eq!(w.len(), 2);
        // x1 = d0, x2 = d1, guards d0 < 5 and d0 - d1 = 2
        assert!(w[0] < int(5));
        assert_eq!(&w[0] - &w[1], int(2));
    }

    #[test]
    fn immediate_firing_is_feasible() {
        let a = a2_at_point(None);
        let p = AbstractPath(vec![PathStep::Fire(TransitionId(0))]);
        assert!(path_feasible(&a, &p, DEFAULT_PATH_CAP).unwrap().is_some());
    }

    #[test]
    fn no_delay_in_q2_forces_x1_two() {
        let p = AbstractPath(vec![
            PathStep::Delay,
            PathStep::Fire(TransitionId(0)),
            PathStep::Fire(TransitionId(1)),
        ]);
        let w = path_feasible(&a2_at_point(None), &p, DEFAULT_PATH_CAP)
            .unwrap()
            .unwrap();
        assert_eq!(w, vec![int(2)]);
        assert!(path_feasible(&a2_at_point(Some(7)), &p, DEFAULT_PATH_CAP)
            .unwrap()
            .is_none());
    }

    #[test]
    fn cap_is_enforced() {
        let a = a2_at_point(None);
        let p = AbstractPath(vec![PathStep::Delay; 5]);
        assert!(matches!(
            path_feasible(&a, &p, 4),
            Err(SemError::PathTooLong { len: 5, cap: 4 })
        ));
    }
}
