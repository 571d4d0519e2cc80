//! Class automaton of a parameter region: a class is a state together with
//! one total preorder per level over the region's expressions, and edges
//! are discrete steps and abstract time steps.

mod build;
mod dot;

use std::cmp::Ordering;
use std::collections::HashMap;

use thiserror::Error;

use crate::arith::{ArithError, Rational, Sign};
use crate::exprsets::{decompose, ExprSet};
use crate::model::{Automaton, ClockExpr, CmpOp, GuardAtom, StateId, TransitionId};
use crate::regions::{sign_ordering, ParamRegion};
use crate::semantics::Config;

pub use build::{
    abstract_path_exists, build, build_with, untimed_words, BuildOptions, ClassAutomaton, Edge,
    EdgeLabel,
};
pub use dot::export_dot;

#[derive(Debug, Error)]
pub enum ClassError {
    #[error("class automaton grew past {0} classes")]
    CapExceeded(usize),
    #[error("internal error: {0}")]
    Internal(String),
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// A state and, for every level up to its level, the rank of each member
/// of `E_{k,preg}` (equal ranks form a block; ranks are dense from 0).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Class {
    pub state: StateId,
    pub orders: Vec<Vec<u32>>,
}

/// Dense ranks preserving the relative order.
fn normalize(ranks: &mut [u32]) {
    let mut distinct: Vec<u32> = ranks.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    for r in ranks.iter_mut() {
        *r = distinct.binary_search(r).unwrap_or(0) as u32;
    }
}

/// Sign of a quantity, read off a level's preorder.
#[derive(Clone, Debug, PartialEq, Eq)]
enum SignRecipe {
    Const(Sign),
    /// `cmp(rank[a], rank[b])`
    Cmp(usize, usize),
}

impl SignRecipe {
    fn eval(&self, ranks: &[u32]) -> Ordering {
        match self {
            SignRecipe::Const(s) => sign_ordering(*s),
            SignRecipe::Cmp(a, b) => ranks[*a].cmp(&ranks[*b]),
        }
    }
}

#[derive(Clone, Debug)]
enum LevelRecipe {
    /// `k <= min(l, l')`: rank of member i is the old rank of `image[i]`.
    Image(Vec<usize>),
    /// `l < k`: sign of `g_i[u] - g_j[u]` for `i < j`, row-major.
    Pairwise(Vec<SignRecipe>),
}

#[derive(Clone, Debug)]
struct TransitionRecipe {
    guard: Vec<(SignRecipe, CmpOp)>,
    levels: Vec<LevelRecipe>,
}

/// Expression sets of one region with positions, plus precomputed
/// firability and successor recipes.
pub struct Layout<'a> {
    pub a: &'a Automaton,
    pub e: &'a ExprSet,
    pub region: &'a ParamRegion,
    /// Per level, `E_{k,preg}` as indices into `E_k`.
    pub filtered: Vec<Vec<usize>>,
    pos: Vec<HashMap<usize, usize>>,
    zero: Vec<usize>,
    transitions: Vec<TransitionRecipe>,
}

impl<'a> Layout<'a> {
    pub fn new(
        a: &'a Automaton,
        e: &'a ExprSet,
        region: &'a ParamRegion,
    ) -> Result<Self, ClassError> {
        let filtered: Vec<Vec<usize>> = (1..=a.levels).map(|k| region.filtered(e, k)).collect();
        let pos: Vec<HashMap<usize, usize>> = filtered
            .iter()
            .map(|f| f.iter().enumerate().map(|(p, &i)| (i, p)).collect())
            .collect();
        let mut out = Layout {
            a,
            e,
            region,
            filtered,
            pos,
            zero: Vec::new(),
            transitions: Vec::new(),
        };
        for k in 1..=a.levels {
            let z = out
                .position(k, &ClockExpr::zero())
                .ok_or_else(|| ClassError::Internal(format!("0 missing from E{k}")))?;
            out.zero.push(z);
        }
        for t in a.transition_ids() {
            let r = out.transition_recipe(t)?;
            out.transitions.push(r);
        }
        Ok(out)
    }

    /// Position of an expression in `E_{k,preg}`.
    pub fn position(&self, k: usize, c: &ClockExpr) -> Option<usize> {
        self.e
            .find(k, c)
            .and_then(|i| self.pos[k - 1].get(&i).copied())
    }

    pub fn member(&self, k: usize, p: usize) -> &ClockExpr {
        self.e.get(k, self.filtered[k - 1][p])
    }

    fn require(&self, k: usize, c: &ClockExpr, what: &str) -> Result<usize, ClassError> {
        self.position(k, c).ok_or_else(|| {
            let names = self.a.names(&self.e.registry);
            ClassError::Internal(format!("{what} {} missing from E{k}", c.display(&names)))
        })
    }

    /// How to read the sign of `c` (clocks of level <= l only) from `⪯_l`.
    fn sign_recipe(&self, c: &ClockExpr, l: usize) -> Result<SignRecipe, ClassError> {
        let reg = &self.e.registry;
        let sigma = &self.region.signs;
        let d = decompose(c, l, self.a, reg)?;
        let lead_sign = match d.clock {
            None => Sign::Zero,
            Some(_) => d
                .coeff
                .sign_of(sigma, reg)?
                .ok_or_else(|| ClassError::Internal("lead sign undetermined".into()))?,
        };
        match (lead_sign, d.clock) {
            (Sign::Zero, _) => {
                let comp = match d.clock {
                    Some(z) => c.zero_clocks(|y| y == z),
                    None => c.clone(),
                };
                if comp.is_constant() {
                    if let Some(s) = comp.constant_term().sign_of(sigma, reg)? {
                        return Ok(SignRecipe::Const(s));
                    }
                }
                let zero = self.zero[l - 1];
                if let Some(p) = self.position(l, &comp) {
                    return Ok(SignRecipe::Cmp(p, zero));
                }
                if let Some(p) = self.position(l, &comp.neg()) {
                    return Ok(SignRecipe::Cmp(zero, p));
                }
                let names = self.a.names(reg);
                Err(ClassError::Internal(format!(
                    "comp {} missing from E{l}",
                    comp.display(&names)
                )))
            }
            (s, Some(z)) => {
                let zp = self.require(l, &ClockExpr::clock(z), "clock")?;
                let cn = d
                    .compnorm
                    .ok_or_else(|| ClassError::Internal("compnorm missing".into()))?;
                let cp = self.require(l, &cn, "compnorm")?;
                Ok(if s == Sign::Positive {
                    SignRecipe::Cmp(zp, cp)
                } else {
                    SignRecipe::Cmp(cp, zp)
                })
            }
            (_, None) => unreachable!("a missing clock has a zero lead"),
        }
    }

    fn transition_recipe(&self, t: TransitionId) -> Result<TransitionRecipe, ClassError> {
        let a = self.a;
        let tr = a.transition(t);
        let l = a.state_level(tr.source);
        let l2 = a.state_level(tr.target);
        let mut guard = Vec::new();
        for atom in &tr.guard {
            match atom {
                GuardAtom::Linear { expr, op } => guard.push((self.sign_recipe(expr, l)?, *op)),
                GuardAtom::Diff { left, right, op } => {
                    let lp = self.require(l, &ClockExpr::clock(*left), "clock")?;
                    let rp = self.require(l, &ClockExpr::clock(*right), "clock")?;
                    guard.push((SignRecipe::Cmp(lp, rp), *op));
                }
            }
        }
        let u = a.effective_update(t);
        let reg = &self.e.registry;
        let mut levels = Vec::new();
        for k in 1..=l2 {
            let members: Vec<&ClockExpr> = (0..self.filtered[k - 1].len())
                .map(|p| self.member(k, p))
                .collect();
            if k <= l {
                let mut image = Vec::with_capacity(members.len());
                for g in &members {
                    image.push(self.require(k, &g.apply_update(&u, reg), "image")?);
                }
                levels.push(LevelRecipe::Image(image));
            } else {
                let images: Vec<ClockExpr> = members
                    .iter()
                    .map(|g| {
                        g.apply_update(&u, reg)
                            .zero_clocks(|z| a.clock_level(z) > l)
                    })
                    .collect();
                let mut signs = Vec::new();
                for i in 0..images.len() {
                    for j in i + 1..images.len() {
                        let d = images[i].sub(&images[j], reg);
                        signs.push(if d.is_zero() {
                            SignRecipe::Const(Sign::Zero)
                        } else {
                            self.sign_recipe(&d, l)?
                        });
                    }
                }
                levels.push(LevelRecipe::Pairwise(signs));
            }
        }
        Ok(TransitionRecipe { guard, levels })
    }

    pub fn initial_class(&self) -> Result<Class, ClassError> {
        let q0 = self
            .a
            .initial_state()
            .ok_or_else(|| ClassError::Internal("no initial state".into()))?;
        if self.a.state_level(q0) != 1 {
            return Err(ClassError::Internal(
                "initial state must be at level 1".into(),
            ));
        }
        let mut block_of: HashMap<usize, u32> = HashMap::new();
        for (b, block) in self.region.order1.iter().enumerate() {
            for &i in block {
                block_of.insert(i, b as u32);
            }
        }
        let zero_idx = self.filtered[0][self.zero[0]];
        let zero_rank = block_of[&zero_idx];
        let mut ranks = Vec::with_capacity(self.filtered[0].len());
        for (p, &i) in self.filtered[0].iter().enumerate() {
            let r = match block_of.get(&i) {
                Some(&r) => r,
                None if self.member(1, p).as_clock().is_some() => zero_rank,
                None => {
                    return Err(ClassError::Internal(
                        "level-1 member is neither a clock nor a constant".into(),
                    ));
                }
            };
            ranks.push(r);
        }
        normalize(&mut ranks);
        Ok(Class {
            state: q0,
            orders: vec![ranks],
        })
    }

    fn level_of(&self, c: &Class) -> usize {
        self.a.state_level(c.state)
    }

    pub fn firable(&self, c: &Class, t: TransitionId) -> bool {
        let tr = self.a.transition(t);
        if tr.source != c.state {
            return false;
        }
        let ranks = &c.orders[self.level_of(c) - 1];
        self.transitions[t.0]
            .guard
            .iter()
            .all(|(s, op)| op.holds(s.eval(ranks)))
    }

    /// Successor of a class by a transition (assumed firable).
    pub fn discrete_successor(&self, c: &Class, t: TransitionId) -> Result<Class, ClassError> {
        let tr = self.a.transition(t);
        let l = self.level_of(c);
        let mut orders = Vec::new();
        for (k0, recipe) in self.transitions[t.0].levels.iter().enumerate() {
            match recipe {
                LevelRecipe::Image(image) => {
                    let old = &c.orders[k0];
                    let mut ranks: Vec<u32> = image.iter().map(|&p| old[p]).collect();
                    normalize(&mut ranks);
                    orders.push(ranks);
                }
                LevelRecipe::Pairwise(signs) => {
                    let src = &c.orders[l - 1];
                    let m = self.filtered[k0].len();
                    let mut rel = vec![vec![Ordering::Equal; m]; m];
                    let mut it = signs.iter();
                    #[allow(clippy::needless_range_loop)]
                    for i in 0..m {
                        for j in i + 1..m {
                            let o = it.next().map(|s| s.eval(src)).unwrap_or(Ordering::Equal);
                            rel[i][j] = o;
                            rel[j][i] = o.reverse();
                        }
                    }
                    orders.push(ranks_from_relation(&rel).ok_or_else(|| {
                        ClassError::Internal(format!(
                            "inconsistent order at level {} after {}",
                            k0 + 1,
                            self.a.transition_name(t)
                        ))
                    })?);
                }
            }
        }
        Ok(Class {
            state: tr.target,
            orders,
        })
    }

    /// `Post(R)`: the active clock moves right by one step.
    pub fn time_successor(&self, c: &Class) -> Class {
        let l = self.level_of(c);
        let act = self.a.state(c.state).active;
        let p = self
            .position(l, &ClockExpr::clock(act))
            .expect("clocks of a level belong to its expression set");
        let mut out = c.clone();
        let ranks = &mut out.orders[l - 1];
        let r = ranks[p];
        let alone = ranks.iter().filter(|&&x| x == r).count() == 1;
        let max = ranks.iter().copied().max().unwrap_or(0);
        if alone {
            if r == max {
                return out;
            }
            ranks[p] = r + 1;
        } else {
            for x in ranks.iter_mut() {
                if *x > r {
                    *x += 1;
                }
            }
            ranks[p] = r + 1;
        }
        normalize(ranks);
        out
    }

    /// The class of a concrete configuration at parameter point `pi`.
    pub fn class_of(&self, cfg: &Config, pi: &[Rational]) -> Result<Class, ClassError> {
        let l = self.a.state_level(cfg.state);
        let mut orders = Vec::with_capacity(l);
        for k in 1..=l {
            let mut vals = Vec::with_capacity(self.filtered[k - 1].len());
            for p in 0..self.filtered[k - 1].len() {
                vals.push(self.member(k, p).eval(pi, &cfg.clocks, &self.e.registry)?);
            }
            let mut sorted = vals.clone();
            sorted.sort();
            sorted.dedup();
            orders.push(
                vals.iter()
                    .map(|v| sorted.binary_search(v).unwrap_or(0) as u32)
                    .collect(),
            );
        }
        Ok(Class {
            state: cfg.state,
            orders,
        })
    }

    /// Human-readable chains, one per level: `x1 = 0 < 2 < p1`.
    pub fn describe(&self, c: &Class) -> Vec<String> {
        let names = self.a.names(&self.e.registry);
        let mut out = Vec::new();
        for (k0, ranks) in c.orders.iter().enumerate() {
            let nblocks = ranks.iter().copied().max().map_or(0, |m| m as usize + 1);
            let mut blocks: Vec<Vec<String>> = vec![Vec::new(); nblocks];
            for (p, &r) in ranks.iter().enumerate() {
                blocks[r as usize].push(self.member(k0 + 1, p).display(&names).to_string());
            }
            let chain: Vec<String> = blocks.into_iter().map(|b| b.join(" = ")).collect();
            out.push(chain.join(" < "));
        }
        out
    }

    /// Whether `g` and `h` lie in the same block of level `k`; `None` when
    /// one of them is not in `E_{k,preg}` or the class has no level `k`.
    pub fn equal_in(&self, c: &Class, k: usize, g: &ClockExpr, h: &ClockExpr) -> Option<bool> {
        let ranks = c.orders.get(k - 1)?;
        Some(ranks[self.position(k, g)?] == ranks[self.position(k, h)?])
    }
}

/// Dense ranks realizing a pairwise relation, or `None` if the relation
/// is not a total preorder.
fn ranks_from_relation(rel: &[Vec<Ordering>]) -> Option<Vec<u32>> {
    let m = rel.len();
    let mut idx: Vec<usize> = (0..m).collect();
    idx.sort_by(|&i, &j| rel[i][j]);
    let mut ranks = vec![0u32; m];
    for w in 1..m {
        let (prev, cur) = (idx[w - 1], idx[w]);
        ranks[cur] = ranks[prev] + u32::from(rel[prev][cur] == Ordering::Less);
    }
    for i in 0..m {
        for j in 0..m {
            if ranks[i].cmp(&ranks[j]) != rel[i][j] {
                return None;
            }
        }
    }
    Some(ranks)
}
