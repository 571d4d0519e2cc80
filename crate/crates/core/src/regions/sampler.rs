//! Built-in emptiness check: exact evaluation on a deterministic sample of
//! rational points. It can prove non-emptiness, never emptiness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arith::{int, Rational};

use super::constraints::ConstraintSystem;
use super::Emptiness;

const GRID_LIMIT: usize = 5000;
const RANDOM_POINTS: usize = 3000;

pub struct Sampler {
    points: Vec<Vec<Rational>>,
    pub queries: usize,
}

impl Sampler {
    pub fn new(nparams: usize) -> Self {
        Sampler {
            points: sample_points(nparams, 0x17a),
            queries: 0,
        }
    }

    pub fn check(&mut self, cs: &ConstraintSystem) -> Emptiness {
        self.queries += 1;
        if cs.scope.as_ref().is_some_and(|s| s.is_raw()) {
            return Emptiness::Unknown;
        }
        match self.points.iter().find(|p| cs.holds_at(p) == Some(true)) {
            Some(p) => Emptiness::Sat(Some(p.clone())),
            None => Emptiness::Unknown,
        }
    }
}

/// Integer grid around the origin (as wide as fits in the budget), then
/// seeded random rationals with small denominators.
fn sample_points(k: usize, seed: u64) -> Vec<Vec<Rational>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut r = 10i64;
    while r > 1
        && ((2 * r + 1) as usize)
            .checked_pow(k as u32)
            .is_none_or(|n| n > GRID_LIMIT)
    {
        r -= 1;
    }
    let side: Vec<i64> = {
        // 0, 1, -1, 2, -2, ...: small magnitudes first
        let mut v = vec![0];
        for i in 1..=r {
            v.push(i);
            v.push(-i);
        }
        v
    };
    let mut out: Vec<Vec<Rational>> = vec![Vec::new()];
    for _ in 0..k {
        let mut next = Vec::with_capacity(out.len() * side.len());
        for p in &out {
            for &s in &side {
                let mut q = p.clone();
                q.push(int(s));
                next.push(q);
            }
        }
        out = next;
    }
    out.sort_by_key(|p| p.iter().map(|v| v.numer().magnitude().clone()).max());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..RANDOM_POINTS {
        out.push(
            (0..k)
                .map(|_| {
                    let n: i64 = rng.gen_range(-60..=60);
                    let d: i64 = rng.gen_range(1..=12);
                    Rational::new(n.into(), d.into())
                })
                .collect(),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::Polynomial;
    use crate::model::CmpOp;
    use crate::regions::PolyAtom;

    #[test]
    fn finds_forced_integer_points() {
        let mut s = Sampler::new(2);
        // p2 < 0, p2 + 1 = 0
        let p2 = Polynomial::var(1);
        let cs = ConstraintSystem::new(
            vec![
                PolyAtom::new(p2.clone(), CmpOp::Lt),
                PolyAtom::new(&p2 + &Polynomial::one(), CmpOp::Eq),
            ],
            None,
        );
        match s.check(&cs) {
            Emptiness::Sat(Some(w)) => assert_eq!(w[1], int(-1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn never_claims_emptiness() {
        let mut s = Sampler::new(1);
        let p1 = Polynomial::var(0);
        let cs = ConstraintSystem::new(
            vec![
                PolyAtom::new(p1.clone(), CmpOp::Gt),
                PolyAtom::new(p1, CmpOp::Lt),
            ],
            None,
        );
        assert_eq!(s.check(&cs), Emptiness::Unknown);
    }
}
