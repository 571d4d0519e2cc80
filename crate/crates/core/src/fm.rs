//! Exact Fourier–Motzkin elimination over the rationals with witness
//! reconstruction.

use num_traits::{One, Signed, Zero};
use rand::Rng;

use crate::arith::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
}

/// `coeffs . x + constant rel 0`
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct LinCon {
    pub coeffs: Vec<Rational>,
    pub constant: Rational,
    pub rel: Rel,
}

impl LinCon {
    pub fn new(coeffs: Vec<Rational>, constant: Rational, rel: Rel) -> Self {
        LinCon {
            coeffs,
            constant,
            rel,
        }
    }

    pub fn holds(&self, x: &[Rational]) -> bool {
        let mut v = self.constant.clone();
        for (c, xi) in self.coeffs.iter().zip(x) {
            if !c.is_zero() {
                v += c * xi;
            }
        }
        match self.rel {
            Rel::Lt => v.is_negative(),
            Rel::Le => !v.is_positive(),
            Rel::Eq => v.is_zero(),
        }
    }

    fn is_trivial(&self) -> bool {
        self.coeffs.iter().all(Zero::is_zero)
    }

    /// Divides by the absolute value of the first nonzero coefficient.
    fn normalized(mut self) -> Self {
        if let Some(c) = self.coeffs.iter().find(|c| !c.is_zero()).cloned() {
            let s = if self.rel == Rel::Eq { c } else { c.abs() };
            for a in &mut self.coeffs {
                *a /= &s;
            }
            self.constant /= &s;
        }
        self
    }
}

/// How free choices are resolved during back substitution.
pub enum Chooser<'a, R: Rng> {
    /// Smallest admissible value (or the midpoint of an open interval).
    Lowest,
    Random(&'a mut R),
}

type Bound = (Vec<Rational>, Rational, bool); // x_v >= / <= coeffs . x + c, strict

struct Elimination {
    var: usize,
    lower: Vec<Bound>,
    upper: Vec<Bound>,
}

struct Substitution {
    var: usize,
    coeffs: Vec<Rational>,
    constant: Rational,
}

/// Decides feasibility; returns a satisfying point when one exists.
pub fn solve(cons: &[LinCon], nvars: usize) -> Option<Vec<Rational>> {
    solve_with::<rand::rngs::ThreadRng>(cons, nvars, &mut Chooser::Lowest)
}

pub fn solve_with<R: Rng>(
    cons: &[LinCon],
    nvars: usize,
    chooser: &mut Chooser<'_, R>,
) -> Option<Vec<Rational>> {
    let mut work: Vec<LinCon> = cons.to_vec();
    for c in &mut work {
        c.coeffs.resize(nvars, Rational::zero());
    }

    // equalities first: each one removes a variable
    let mut subs: Vec<Substitution> = Vec::new();
    loop {
        let pos = work
            .iter()
            .position(|c| c.rel == Rel::Eq && !c.is_trivial());
        let Some(pos) = pos else { break };
        let eq = work.swap_remove(pos);
        let var = eq.coeffs.iter().position(|c| !c.is_zero()).unwrap();
        let a = eq.coeffs[var].clone();
        // x_var = -(rest + constant) / a
        let mut coeffs: Vec<Rational> = eq.coeffs.iter().map(|c| -c / &a).collect();
        coeffs[var] = Rational::zero();
        let constant = -&eq.constant / &a;
        for c in &mut work {
            let f = std::mem::take(&mut c.coeffs[var]);
            if !f.is_zero() {
                for (ci, si) in c.coeffs.iter_mut().zip(&coeffs) {
                    *ci += &f * si;
                }
                c.constant += &f * &constant;
            }
        }
        subs.push(Substitution {
            var,
            coeffs,
            constant,
        });
    }

    let mut elims: Vec<Elimination> = Vec::new();
    let mut remaining: Vec<usize> = (0..nvars)
        .filter(|v| !subs.iter().any(|s| s.var == *v))
        .collect();
    work = dedup(work);
    if !constants_ok(&work) {
        return None;
    }
    while let Some(var) = pick_var(&work, &remaining) {
        remaining.retain(|v| *v != var);
        let mut lower = Vec::new();
        let mut upper = Vec::new();
        let mut rest = Vec::new();
        for c in work.drain(..) {
            let a = c.coeffs[var].clone();
            if a.is_zero() {
                rest.push(c);
                continue;
            }
            // a x_v + r + k rel 0  =>  x_v rel' (-r - k)/a
            let mut coeffs: Vec<Rational> = c.coeffs.iter().map(|ci| -ci / &a).collect();
            coeffs[var] = Rational::zero();
            let constant = -&c.constant / &a;
            let strict = c.rel == Rel::Lt;
            if a.is_positive() {
                upper.push((coeffs, constant, strict));
            } else {
                lower.push((coeffs, constant, strict));
            }
        }
        for (lc, lk, ls) in &lower {
            for (uc, uk, us) in &upper {
                // l <= u  =>  l - u <= 0
                let coeffs: Vec<Rational> = lc.iter().zip(uc).map(|(l, u)| l - u).collect();
                let rel = if *ls || *us { Rel::Lt } else { Rel::Le };
                rest.push(LinCon::new(coeffs, lk - uk, rel));
            }
        }
        work = dedup(rest);
        if !constants_ok(&work) {
            return None;
        }
        elims.push(Elimination { var, lower, upper });
    }

    let mut x = vec![Rational::zero(); nvars];
    for e in elims.iter().rev() {
        let eval = |b: &Bound, x: &[Rational]| -> Rational {
            let mut v = b.1.clone();
            for (c, xi) in b.0.iter().zip(x) {
                if !c.is_zero() {
                    v += c * xi;
                }
            }
            v
        };
        let mut lo: Option<(Rational, bool)> = None;
        for b in &e.lower {
            let v = eval(b, &x);
            lo = match lo {
                Some((cur, s)) if cur > v || (cur == v && s) => Some((cur, s)),
                Some((cur, s)) if cur == v => Some((cur, s || b.2)),
                _ => Some((v, b.2)),
            };
        }
        let mut hi: Option<(Rational, bool)> = None;
        for b in &e.upper {
            let v = eval(b, &x);
            hi = match hi {
                Some((cur, s)) if cur < v || (cur == v && s) => Some((cur, s)),
                Some((cur, s)) if cur == v => Some((cur, s || b.2)),
                _ => Some((v, b.2)),
            };
        }
        x[e.var] = choose(lo, hi, chooser);
    }
    for s in subs.iter().rev() {
        let mut v = s.constant.clone();
        for (c, xi) in s.coeffs.iter().zip(&x) {
            if !c.is_zero() {
                v += c * xi;
            }
        }
        x[s.var] = v;
    }
    debug_assert!(cons.iter().all(|c| c.holds(&x)));
    Some(x)
}

fn choose<R: Rng>(
    lo: Option<(Rational, bool)>,
    hi: Option<(Rational, bool)>,
    chooser: &mut Chooser<'_, R>,
) -> Rational {
    let two = Rational::from_integer(2.into());
    match chooser {
        Chooser::Lowest => match (lo, hi) {
            (None, None) => Rational::zero(),
            (Some((l, false)), _) => l,
            (Some((l, true)), None) => l + Rational::one(),
            (Some((l, true)), Some((h, _))) => (l + h) / two,
            (None, Some((h, false))) => h.min(Rational::zero()),
            (None, Some((h, true))) => (h - Rational::one()).min(Rational::zero()),
        },
        Chooser::Random(rng) => {
            let frac = Rational::new(rng.gen_range(1..16).into(), 16.into());
            match (lo, hi) {
                (None, None) => Rational::new(rng.gen_range(0..40).into(), 4.into()),
                (Some((l, ls)), None) => {
                    if !ls && rng.gen_bool(0.3) {
                        l
                    } else {
                        l + frac * Rational::from_integer(rng.gen_range(1..6).into())
                    }
                }
                (None, Some((h, hs))) => {
                    if !hs && rng.gen_bool(0.3) {
                        h
                    } else {
                        h - frac * Rational::from_integer(rng.gen_range(1..6).into())
                    }
                }
                (Some((l, ls)), Some((h, hs))) => {
                    if l == h {
                        return l;
                    }
                    let pick = rng.gen_range(0..10);
                    if pick == 0 && !ls {
                        l
                    } else if pick == 1 && !hs {
                        h
                    } else {
                        &l + (&h - &l) * frac
                    }
                }
            }
        }
    }
}

fn constants_ok(cons: &[LinCon]) -> bool {
    cons.iter().filter(|c| c.is_trivial()).all(|c| c.holds(&[]))
}

fn dedup(cons: Vec<LinCon>) -> Vec<LinCon> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for c in cons {
        if c.is_trivial() {
            if !c.holds(&[]) {
                return vec![c];
            }
            continue;
        }
        let n = c.normalized();
        if seen.insert(n.clone()) {
            out.push(n);
        }
    }
    out
}

/// Variable whose elimination creates the fewest new constraints.
fn pick_var(cons: &[LinCon], remaining: &[usize]) -> Option<usize> {
    remaining.iter().copied().min_by_key(|&v| {
        let pos = cons.iter().filter(|c| c.coeffs[v].is_positive()).count();
        let neg = cons.iter().filter(|c| c.coeffs[v].is_negative()).count();
        pos * neg
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::int;
    use proptest::prelude::*;
    use rand::SeedableRng;

    fn con(c: &[i64], k: i64, rel: Rel) -> LinCon {
        LinCon::new(c.iter().map(|&v| int(v)).collect(), int(k), rel)
    }

    #[test]
    fn two_variable_system() {
        // x >= 0, y >= 0, x - y = 2, x < 5
        let cs = vec![
            con(&[-1, 0], 0, Rel::Le),
            con(&[0, -1], 0, Rel::Le),
            con(&[1, -1], -2, Rel::Eq),
            con(&[1, 0], -5, Rel::Lt),
        ];
        let x = solve(&cs, 2).unwrap();
        assert!(cs.iter().all(|c| c.holds(&x)));
        // adding x > 7 makes it infeasible
        let mut bad = cs.clone();
        bad.push(con(&[-1, 0], 7, Rel::Lt));
        assert!(solve(&bad, 2).is_none());
    }

    #[test]
    fn strict_contradiction() {
        let cs = vec![con(&[1], 0, Rel::Lt), con(&[-1], 0, Rel::Lt)];
        assert!(solve(&cs, 1).is_none());
        let cs = vec![con(&[1], 0, Rel::Le), con(&[-1], 0, Rel::Le)];
        assert_eq!(solve(&cs, 1), Some(vec![int(0)]));
    }

    proptest! {
        #[test]
        fn witnesses_satisfy_and_known_points_are_found(
            pt in prop::collection::vec(-5i64..6, 3),
            rows in prop::collection::vec((prop::collection::vec(-3i64..4, 3), 0usize..3, 0i64..3), 1..7),
            seed in 0u64..1000,
        ) {
            // build constraints satisfied by `pt`
            let cs: Vec<LinCon> = rows.iter().map(|(c, r, slack)| {
                let val: i64 = c.iter().zip(&pt).map(|(a, b)| a * b).sum();
                let rel = [Rel::Lt, Rel::Le, Rel::Eq][*r];
                let k = match rel { Rel::Eq => -val, Rel::Le => -val - slack, Rel::Lt => -val - slack - 1 };
                con(c, k, rel)
            }).collect();
            let x = solve(&cs, 3);
            prop_assert!(x.is_some());
            prop_assert!(cs.iter().all(|c| c.holds(x.as_ref().unwrap())));
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let y = solve_with(&cs, 3, &mut Chooser::Random(&mut rng)).unwrap();
            prop_assert!(cs.iter().all(|c| c.holds(&y)));
        }
    }
}
