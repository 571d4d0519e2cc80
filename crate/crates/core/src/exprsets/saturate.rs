use crate::model::{Automaton, ClockExpr, GuardAtom};

use super::bounds::lemma_size_bound;
use super::decompose::{decompose, register_lead};
use super::{canonical_key, ExprError, ExprSet};

#[derive(Clone, Copy, Debug)]
pub struct SaturateOptions {
    /// Absolute limit on `|E_k|`, checked alongside the lemma bound.
    pub cap: usize,
}

impl Default for SaturateOptions {
    fn default() -> Self {
        SaturateOptions { cap: 200_000 }
    }
}

pub fn saturate(a: &Automaton) -> Result<ExprSet, ExprError> {
    saturate_with(a, SaturateOptions::default())
}

/// Builds `PolPar` and `E_1..E_n`, top level first.
pub fn saturate_with(a: &Automaton, opts: SaturateOptions) -> Result<ExprSet, ExprError> {
    let mut e = ExprSet::initial(a);
    for k in (1..=a.levels).rev() {
        let cap = match lemma_size_bound(a, k).as_exact() {
            Some(b) => b.min(opts.cap),
            None => opts.cap,
        };

        // step 1: guards of edges leaving level k
        for t in a.transition_ids() {
            let tr = a.transition(t);
            if a.state_level(tr.source) != k {
                continue;
            }
            for atom in &tr.guard {
                if let GuardAtom::Linear { expr, .. } = atom {
                    add_decomposition(&mut e, a, expr, k)?;
                }
            }
        }
        check_cap(&e, k, cap)?;

        // step 2(a): closure under updates of edges staying at level >= k
        let stay: Vec<_> = a
            .transition_ids()
            .filter(|&t| {
                let tr = a.transition(t);
                a.state_level(tr.source) >= k && a.state_level(tr.target) >= k
            })
            .map(|t| a.effective_update(t))
            .collect();
        let mut i = 0;
        while i < e.level(k).len() {
            let c = e.get(k, i).clone();
            for u in &stay {
                let img = c.apply_update(u, &e.registry);
                if e.insert(k, img).1 {
                    check_cap(&e, k, cap)?;
                }
            }
            i += 1;
        }

        // step 2(b): differences through edges entering level >= k from below
        for t in a.transition_ids() {
            let tr = a.transition(t);
            let l = a.state_level(tr.source);
            if !(l < k && a.state_level(tr.target) >= k) {
                continue;
            }
            let u = a.effective_update(t);
            let mut members: Vec<&ClockExpr> = e.level(k).iter().collect();
            members.sort_by_cached_key(|c| canonical_key(c, a, &e.registry));
            let images: Vec<ClockExpr> = members
                .iter()
                .map(|c| {
                    c.apply_update(&u, &e.registry)
                        .zero_clocks(|z| a.clock_level(z) > l)
                })
                .collect();
            let mut diffs = Vec::new();
            for i in 0..images.len() {
                for j in i + 1..images.len() {
                    let d = images[i].sub(&images[j], &e.registry);
                    if !d.is_zero() {
                        diffs.push(d);
                    }
                }
            }
            for d in diffs {
                add_decomposition(&mut e, a, &d, l)?;
                check_cap(&e, l, opts.cap)?;
            }
        }
    }
    Ok(e)
}

/// Registers the lead of `c` at level `k` and adds its `comp`/`compnorm`.
fn add_decomposition(
    e: &mut ExprSet,
    a: &Automaton,
    c: &ClockExpr,
    k: usize,
) -> Result<(), ExprError> {
    register_lead(c, k, a, &mut e.registry);
    let d = decompose(c, k, a, &e.registry)?;
    if let Some(comp) = d.comp {
        e.insert(k, comp);
    }
    if let Some(cn) = d.compnorm {
        e.insert(k, cn);
    }
    Ok(())
}

fn check_cap(e: &ExprSet, k: usize, cap: usize) -> Result<(), ExprError> {
    if e.level(k).len() > cap {
        return Err(ExprError::CapExceeded { level: k, cap });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, RationalFunction};
    use crate::model::{linear_atom, AutomatonBuilder, CmpOp, UpdateRhs};

    /// One level, main clock x, aux clock y; the four edges of the
    /// (ab)+ example.
    fn a1() -> Automaton {
        let mut b = AutomatonBuilder::new(1);
        let x = b.main(1);
        let y = b.aux("y", 1);
        let q0 = b.state("q0", 1);
        let q1 = b.state("q1", 1);
        let q2 = b.state("q2", 1);
        let q3 = b.state("q3", 1);
        b.accepting(q2);
        let x_is_1 = || vec![linear_atom(&[(x, int(1))], int(-1), CmpOp::Eq)];
        let reset = || vec![(x, UpdateRhs::Linear(ClockExpr::zero()))];
        b.transition(q0, q1, Some("a"), x_is_1(), reset());
        b.transition(
            q1,
            q2,
            Some("b"),
            vec![
                linear_atom(&[(x, int(1))], int(0), CmpOp::Gt),
                linear_atom(&[(x, int(1))], int(-1), CmpOp::Lt),
            ],
            vec![(y, UpdateRhs::Copy(x))],
        );
        b.transition(q2, q3, Some("a"), x_is_1(), reset());
        b.transition(
            q3,
            q2,
            Some("b"),
            vec![
                GuardAtom::Diff {
                    left: y,
                    right: x,
                    op: CmpOp::Lt,
                },
                linear_atom(&[(x, int(1))], int(-1), CmpOp::Lt),
            ],
            vec![(y, UpdateRhs::Copy(x))],
        );
        b.build()
    }

    #[test]
    fn no_transitions_keeps_initial_sets() {
        let mut b = AutomatonBuilder::new(2);
        b.state("q0", 1);
        let e = saturate(&b.build()).unwrap();
        assert!(e.registry.is_empty());
        assert_eq!(e.level(1).len(), 2);
        assert_eq!(e.level(2).len(), 2);
    }

    #[test]
    fn single_level_example_by_hand() {
        let a = a1();
        let e = saturate(&a).unwrap();
        assert!(e.registry.is_empty());
        let (x, y) = (a.find_clock("x1").unwrap(), a.find_clock("y").unwrap());
        // manual fixpoint: {x, y, 0} from initialization, 1 from x = 1 and
        // x < 1, nothing new from x := 0 or y := x
        let want = [
            ClockExpr::clock(x),
            ClockExpr::clock(y),
            ClockExpr::zero(),
            ClockExpr::constant(RationalFunction::from_int(1)),
        ];
        assert_eq!(e.level(1).len(), want.len());
        for w in &want {
            assert!(e.find(1, w).is_some());
        }
    }

    #[test]
    fn saturation_is_a_fixpoint() {
        let a = a1();
        let e = saturate(&a).unwrap();
        let u: Vec<_> = a.transition_ids().map(|t| a.effective_update(t)).collect();
        for c in e.level(1) {
            for upd in &u {
                assert!(e.find(1, &c.apply_update(upd, &e.registry)).is_some());
            }
        }
    }

    #[test]
    fn a2_sets() {
        let a = crate::frontend::parse_model(include_str!("../../tests/data/a2.pita"))
            .unwrap()
            .core();
        let e = saturate(&a).unwrap();
        let names = a.names(&e.registry);
        let printed = |k: usize| -> Vec<String> {
            e.level(k)
                .iter()
                .map(|c| c.display(&names).to_string())
                .collect()
        };
        let polpar: Vec<String> = e
            .registry
            .members()
            .iter()
            .map(|p| p.display(&a.params).to_string())
            .collect();
        for p in ["p2", "1 + p2", "1 - p1 + 4*p2^2", "1 + p1*p2 - 4*p2^3"] {
            assert!(polpar.iter().any(|m| m == p), "{p}");
        }
        let e1 = printed(1);
        for c in [
            "x1",
            "0",
            "2",
            "p1",
            "-2 - p2",
            "(2 + p2)/(1 - p1 + 4*p2^2)",
            "(-2 - 2*p2)/p2",
            "(-2 + p2^2)/p2",
            "(2 - p2^2)/(1 + p1*p2 - 4*p2^3)",
        ] {
            assert!(e1.iter().any(|m| m == c), "{c}");
        }
        let mut e2 = printed(2);
        e2.sort();
        let mut want2 = vec![
            "x2",
            "0",
            "x1 - 2",
            "-1/p2*x1 + 2/p2",
            "(p1 - 4*p2^2)*x1 + p2",
        ];
        want2.sort();
        assert_eq!(e2, want2);
        // the pair {0, (p1 - 4*p2^2)*x1 + p2} of E2 has a non-constant lead,
        // adding it to PolPar and its comp and compnorm to E1
        assert_eq!(polpar.len(), 5);
        assert!(polpar.iter().any(|m| m == "-p1 + 4*p2^2"));
        assert_eq!(e1.len(), 11);
        assert!(e1.iter().any(|m| m == "-p2"));
        assert!(e1.iter().any(|m| m == "p2/(-p1 + 4*p2^2)"));
    }
}
