use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};

use crate::arith::PolyRegistry;
use crate::model::{Automaton, ClockExpr, GuardAtom, UpdateRhs};

use super::ExprSet;

/// A bound that may be too large to write down.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SizeBound {
    Exact(BigUint),
    /// More than 2^4096.
    Huge,
}

impl SizeBound {
    pub fn admits(&self, v: u64) -> bool {
        match self {
            SizeBound::Exact(b) => BigUint::from(v) <= *b,
            SizeBound::Huge => true,
        }
    }

    pub fn as_exact(&self) -> Option<usize> {
        match self {
            SizeBound::Exact(b) => b.to_usize(),
            SizeBound::Huge => None,
        }
    }
}

impl fmt::Display for SizeBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SizeBound::Exact(b) if b.bits() <= 64 => write!(f, "{b}"),
            SizeBound::Exact(b) => write!(f, "~2^{}", b.bits()),
            SizeBound::Huge => write!(f, ">2^4096"),
        }
    }
}

const HUGE_BITS: f64 = 4096.0;

fn pow_bound(base: u64, exp_log2: u64) -> SizeBound {
    // base^(2^exp_log2)
    if base <= 1 {
        return SizeBound::Exact(BigUint::from(base));
    }
    if exp_log2 >= 63 || (base as f64).log2() * 2f64.powi(exp_log2 as i32) > HUGE_BITS {
        return SizeBound::Huge;
    }
    SizeBound::Exact(BigUint::from(base).pow(1u32 << exp_log2))
}

fn mul(a: SizeBound, b: SizeBound) -> SizeBound {
    match (a, b) {
        (SizeBound::Exact(x), SizeBound::Exact(y)) => {
            let p = x * y;
            if p.bits() as f64 > HUGE_BITS {
                SizeBound::Huge
            } else {
                SizeBound::Exact(p)
            }
        }
        _ => SizeBound::Huge,
    }
}

/// `(H+M)^(2^(n-k)) * U^(2^(n(n-k+1)))`.
pub fn lemma_size_bound(a: &Automaton, k: usize) -> SizeBound {
    let n = a.levels as u64;
    let k = k as u64;
    let h: u64 = a.transitions.iter().map(|t| t.guard.len() as u64).sum();
    let u = (a.transitions.len() as u64).max(2);
    let m = (1..=a.levels)
        .map(|l| a.clocks_at(l).len() as u64)
        .max()
        .unwrap_or(0);
    mul(pow_bound(h + m, n - k), pow_bound(u, n * (n - k + 1)))
}

fn factorial(n: u64) -> BigUint {
    (1..=n).fold(BigUint::one(), |acc, i| acc * i)
}

fn expr_bits(e: &ClockExpr, reg: &PolyRegistry) -> u64 {
    e.coeffs()
        .values()
        .chain(std::iter::once(e.constant_term()))
        .map(|c| c.bit_size(reg))
        .sum()
}

/// Size diagnostics against the theoretical bounds on the expression sets.
#[derive(Clone, Debug)]
pub struct BoundsReport {
    /// Per level: `(|E_k|, bound)`.
    pub sizes: Vec<(usize, SizeBound)>,
    pub max_bits: u64,
    pub bits_bound: BigUint,
    pub max_degree: u32,
    pub degree_bound: BigUint,
    pub violations: Vec<String>,
}

impl BoundsReport {
    pub fn ok(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for BoundsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, (size, bound)) in self.sizes.iter().enumerate() {
            writeln!(f, "|E{}| = {size} (bound {bound})", k + 1)?;
        }
        writeln!(f, "bits {} (bound {})", self.max_bits, self.bits_bound)?;
        writeln!(
            f,
            "degree {} (bound {})",
            self.max_degree, self.degree_bound
        )?;
        for v in &self.violations {
            writeln!(f, "violation: {v}")?;
        }
        Ok(())
    }
}

pub fn check_bounds(e: &ExprSet, a: &Automaton) -> BoundsReport {
    let n = a.levels as u64;
    let input_reg = PolyRegistry::new();
    let mut b0 = 1u64;
    let mut d0 = 0u32;
    for tr in &a.transitions {
        let exprs = tr
            .guard
            .iter()
            .filter_map(|g| match g {
                GuardAtom::Linear { expr, .. } => Some(expr.clone()),
                GuardAtom::Diff { .. } => None,
            })
            .chain(tr.update.values().filter_map(|r| match r {
                UpdateRhs::Linear(e) => Some(e.clone()),
                UpdateRhs::Copy(_) => None,
            }));
        for ex in exprs {
            b0 = b0.max(expr_bits(&ex, &input_reg));
            d0 = d0.max(ex.degree(&input_reg));
        }
    }
    let reg = &e.registry;
    let mut max_bits = 0;
    let mut max_degree = 0;
    for p in reg.members() {
        max_bits = max_bits.max(p.bit_size());
        max_degree = max_degree.max(p.degree());
    }
    for k in 1..=e.num_levels() {
        for c in e.level(k) {
            max_bits = max_bits.max(expr_bits(c, reg));
            max_degree = max_degree.max(c.degree(reg));
        }
    }
    let fact = factorial(n + 1);
    let bits_bound = &fact * &fact * (n + 1) * (BigUint::one() << (3 * n + 1)) * b0;
    let degree_bound = &fact * BigUint::from(5u32).pow(n as u32) * d0;

    let mut violations = Vec::new();
    let mut sizes = Vec::new();
    for k in 1..=e.num_levels() {
        let bound = lemma_size_bound(a, k);
        let size = e.level(k).len();
        if !bound.admits(size as u64) {
            violations.push(format!("|E{k}| = {size} exceeds {bound}"));
        }
        sizes.push((size, bound));
    }
    if BigUint::from(max_bits) > bits_bound {
        violations.push(format!("coefficient bits {max_bits} exceed {bits_bound}"));
    }
    if BigUint::from(max_degree) > degree_bound {
        violations.push(format!("degree {max_degree} exceeds {degree_bound}"));
    }
    BoundsReport {
        sizes,
        max_bits,
        bits_bound,
        max_degree,
        degree_bound,
        violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exprsets::saturate;
    use crate::model::AutomatonBuilder;

    #[test]
    fn empty_automaton_is_within_bounds() {
        let mut b = AutomatonBuilder::new(1);
        b.state("q0", 1);
        let a = b.build();
        let r = check_bounds(&saturate(&a).unwrap(), &a);
        assert!(r.ok(), "{r}");
        // H + M = 1, U = 2: 1 * 2^2
        assert_eq!(r.sizes[0].1, SizeBound::Exact(BigUint::from(4u32)));
    }

    #[test]
    fn huge_bounds_saturate() {
        assert_eq!(pow_bound(3, 20), SizeBound::Huge);
        assert_eq!(pow_bound(3, 2), SizeBound::Exact(BigUint::from(81u32)));
    }
}
