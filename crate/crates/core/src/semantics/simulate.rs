use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::Rational;
use crate::model::{Automaton, StateId, TransitionId};

use super::{guard_holds, initial_config, step, Action, Config, SemError};

/// Result of a random run.
#[derive(Clone, Debug)]
pub struct Simulation {
    pub visited: BTreeSet<StateId>,
    pub steps: Vec<(Config, Action)>,
    pub last: Config,
}

impl Simulation {
    /// Every configuration of the run, the last one included.
    pub fn configs(&self) -> impl Iterator<Item = &Config> {
        self.steps
            .iter()
            .map(|(c, _)| c)
            .chain(std::iter::once(&self.last))
    }
}

/// Delays after which some guard atom of an outgoing transition changes
/// truth value, together with points between and beyond them.
/// Also returns the nearest positive cut.
fn delay_menu(a: &Automaton, c: &Config) -> (Vec<Rational>, Option<Rational>) {
    let act = a.state(c.state).active;
    let mut cuts: Vec<Rational> = vec![Rational::zero()];
    for t in a.outgoing(c.state) {
        for atom in &a.transition(t).guard {
            let (expr, _) = atom.as_expr();
            let Some(coef) = expr.coeff(act).and_then(|f| f.constant_value()) else {
                continue;
            };
            if coef.is_zero() {
                continue;
            }
            // expr(v + d * e_act) = expr(v) + coef * d
            let d = -expr.eval_clocks(&c.clocks) / coef;
            if !d.is_negative() {
                cuts.push(d);
            }
        }
    }
    cuts.sort();
    cuts.dedup();
    let two = Rational::from_integer(2.into());
    let mut menu = cuts.clone();
    for w in cuts.windows(2) {
        menu.push((&w[0] + &w[1]) / &two);
    }
    menu.push(cuts.last().unwrap() + Rational::one());
    (menu, cuts.get(1).cloned())
}

/// Random run of at most `budget` actions of a parameter-free automaton.
pub fn simulate_random(a: &Automaton, budget: usize, seed: u64) -> Result<Simulation, SemError> {
    if !a.params.is_empty() {
        return Err(SemError::Parametric);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut c = initial_config(a);
    let mut visited = BTreeSet::from([c.state]);
    let mut steps = Vec::new();
    for _ in 0..budget {
        let enabled: Vec<TransitionId> = a
            .outgoing(c.state)
            .filter(|t| guard_holds(a, *t, &c.clocks))
            .collect();
        let action = if !enabled.is_empty() && rng.gen_bool(0.5) {
            Action::Fire(*enabled.choose(&mut rng).unwrap())
        } else {
            let (menu, next_cut) = delay_menu(a, &c);
            match next_cut {
                // equality guards are only hit by landing exactly on a cut
                Some(d) if rng.gen_bool(0.5) => Action::Delay(d),
                _ => Action::Delay(menu.choose(&mut rng).unwrap().clone()),
            }
        };
        let next = step(a, &c, &action)?;
        steps.push((c, action));
        visited.insert(next.state);
        c = next;
    }
    Ok(Simulation {
        visited,
        steps,
        last: c,
    })
}
