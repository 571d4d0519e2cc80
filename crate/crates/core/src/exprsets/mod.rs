//! The per-level expression sets `E_k` and the parameter polynomials
//! `PolPar` whose signs make normalization well defined.

mod bounds;
mod decompose;
mod saturate;

use std::collections::HashMap;
use std::fmt::Write as _;

use thiserror::Error;

use crate::arith::{ratfun_equal, ArithError, PolyRegistry, Rational};
use crate::model::{Automaton, ClockExpr, ClockId};

pub use bounds::{check_bounds, lemma_size_bound, BoundsReport, SizeBound};
pub use decompose::{decompose, normalize, Decomposition};
pub use saturate::{saturate, saturate_with, SaturateOptions};

#[derive(Debug, Error)]
pub enum ExprError {
    #[error("E_{level} grew past {cap} expressions")]
    CapExceeded { level: usize, cap: usize },
    #[error(transparent)]
    Arith(#[from] ArithError),
}

/// Exact value of an expression at a fixed parameter point, used to bucket
/// candidates before the exact equality test.
type Fingerprint = (Vec<(ClockId, Rational)>, Rational);

fn fingerprint_point(nparams: usize) -> Vec<Rational> {
    (0..nparams)
        .map(|i| {
            Rational::new(
                (7919 + 104 * i as i64).into(),
                (1013 + 37 * i as i64).into(),
            )
        })
        .collect()
}

fn fingerprint(e: &ClockExpr, point: &[Rational], reg: &PolyRegistry) -> Option<Fingerprint> {
    let mut coeffs = Vec::with_capacity(e.coeffs().len());
    for (z, c) in e.coeffs() {
        coeffs.push((*z, c.eval(point, reg).ok()?));
    }
    Some((coeffs, e.constant_term().eval(point, reg).ok()?))
}

/// Coefficient-wise equality of the denoted expressions.
pub fn expr_equal(a: &ClockExpr, b: &ClockExpr, reg: &PolyRegistry) -> bool {
    if a == b {
        return true;
    }
    if a.coeffs().len() != b.coeffs().len() {
        return false;
    }
    for ((za, ca), (zb, cb)) in a.coeffs().iter().zip(b.coeffs()) {
        if za != zb || !ratfun_equal(ca, cb, reg) {
            return false;
        }
    }
    ratfun_equal(a.constant_term(), b.constant_term(), reg)
}

/// One deduplicated level of expressions.
#[derive(Clone, Debug, Default)]
struct LevelIndex {
    buckets: HashMap<Fingerprint, Vec<usize>>,
    /// Members whose value is undefined at the fingerprint point.
    undefined: Vec<usize>,
}

/// `E_1, ..., E_n` together with `PolPar`.
#[derive(Clone, Debug)]
pub struct ExprSet {
    levels: Vec<Vec<ClockExpr>>,
    index: Vec<LevelIndex>,
    pub registry: PolyRegistry,
    point: Vec<Rational>,
}

impl ExprSet {
    /// `E_k = X_k ∪ {0}` for every level, `PolPar = ∅`.
    pub fn initial(a: &Automaton) -> Self {
        let mut out = ExprSet {
            levels: vec![Vec::new(); a.levels],
            index: vec![LevelIndex::default(); a.levels],
            registry: PolyRegistry::new(),
            point: fingerprint_point(a.params.len()),
        };
        for k in 1..=a.levels {
            for z in a.clocks_at(k) {
                out.insert(k, ClockExpr::clock(z));
            }
            out.insert(k, ClockExpr::zero());
        }
        out
    }

    pub fn num_levels(&self) -> usize {
        self.levels.len()
    }

    /// Members of `E_k` (levels start at 1).
    pub fn level(&self, k: usize) -> &[ClockExpr] {
        &self.levels[k - 1]
    }

    pub fn get(&self, k: usize, i: usize) -> &ClockExpr {
        &self.levels[k - 1][i]
    }

    pub fn total_len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn find(&self, k: usize, e: &ClockExpr) -> Option<usize> {
        let idx = &self.index[k - 1];
        let members = &self.levels[k - 1];
        let reg = &self.registry;
        let hit = |i: &usize| expr_equal(&members[*i], e, reg);
        match fingerprint(e, &self.point, reg) {
            Some(fp) => idx
                .buckets
                .get(&fp)
                .and_then(|b| b.iter().copied().find(hit))
                .or_else(|| idx.undefined.iter().copied().find(hit)),
            // cannot bucket: fall back to a full scan
            None => (0..members.len()).find(hit),
        }
    }

    /// Adds `e` to `E_k` unless an equal expression is present; returns its
    /// index and whether it was new.
    pub fn insert(&mut self, k: usize, e: ClockExpr) -> (usize, bool) {
        if let Some(i) = self.find(k, &e) {
            return (i, false);
        }
        let i = self.levels[k - 1].len();
        match fingerprint(&e, &self.point, &self.registry) {
            Some(fp) => self.index[k - 1].buckets.entry(fp).or_default().push(i),
            None => self.index[k - 1].undefined.push(i),
        }
        self.levels[k - 1].push(e);
        (i, true)
    }

    /// Level-tagged listing: `PolPar` first, then one expression per line.
    pub fn dump(&self, a: &Automaton) -> String {
        let names = a.names(&self.registry);
        let mut out = String::new();
        for p in self.registry.members() {
            let _ = writeln!(out, "polpar {}", p.display(&a.params));
        }
        for k in 1..=self.num_levels() {
            for e in self.level(k) {
                let _ = writeln!(out, "E{k} {}", e.display(&names));
            }
        }
        out
    }
}

/// Deterministic total order on expressions: fewer denominator factors
/// first, then lower degree, then the printed form.
pub fn canonical_key(e: &ClockExpr, a: &Automaton, reg: &PolyRegistry) -> (usize, u32, String) {
    let names = a.names(reg);
    (
        e.max_factor_count(),
        e.degree(reg),
        e.display(&names).to_string(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, Polynomial, RationalFunction};

    #[test]
    fn dedup_is_by_value() {
        let mut b = crate::model::AutomatonBuilder::new(1).params(&["p1"]);
        let _ = b.state("q0", 1);
        let a = b.build();
        let mut e = ExprSet::initial(&a);
        assert_eq!(e.level(1).len(), 2);
        let p1 = Polynomial::var(0);
        let (idx, _, _) = e.registry.register(&p1).unwrap();
        let f = RationalFunction::from_parts(p1.clone(), int(1), vec![idx], &e.registry);
        // p1 / p1 cancels to 1
        assert!(f.is_one());
        let (i, new) = e.insert(1, ClockExpr::constant(f));
        assert!(new);
        let (j, new) = e.insert(1, ClockExpr::rational(int(1)));
        assert!(!new);
        assert_eq!(i, j);
    }
}
