//! Acceptance suite: one line per criterion, nonzero exit on any failure.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{
    backend, bfs_plan, bisimulation_violations, load, path_mismatches, r, random_model,
    random_planning, GenSpec,
};
use itava::analysis::{
    compile_planning, existential_reach, is_additive, reduce_additive, robust_reach, Answer,
    Verdict,
};
use itava::arith::Rational;
use itava::classgraph::{build, untimed_words, EdgeLabel, Layout};
use itava::exprsets::{check_bounds, saturate, ExprSet};
use itava::frontend::parse_model;
use itava::model::{Automaton, ClockExpr, TransitionId};
use itava::regions::{enumerate_regions, Backend, EnumOptions, ParamRegion};
use itava::semantics::{
    initial_config, instantiate, path_feasible, step, Action, DEFAULT_PATH_CAP,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;

/// Name, time limit in seconds, check.
type Criterion = (&'static str, u64, fn() -> Outcome);

const TA: TransitionId = TransitionId(0);
const TB: TransitionId = TransitionId(1);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn printed(a: &Automaton, e: &ExprSet, k: usize, idx: &[usize]) -> Vec<String> {
    let names = a.names(&e.registry);
    let mut v: Vec<String> = idx
        .iter()
        .map(|&i| e.get(k, i).display(&names).to_string())
        .collect();
    v.sort();
    v
}

fn level_all(a: &Automaton, e: &ExprSet, k: usize) -> Vec<String> {
    let idx: Vec<usize> = (0..e.level(k).len()).collect();
    printed(a, e, k, &idx)
}

fn sorted(v: &[&str]) -> Vec<String> {
    let mut v: Vec<String> = v.iter().map(|s| s.to_string()).collect();
    v.sort();
    v
}

fn external(a: &Automaton) -> Result<Backend, String> {
    match backend(a) {
        b @ Backend::Smt(_) => Ok(b),
        _ => Err("no external SMT solver found".into()),
    }
}

fn certificate_holds(a: &Automaton, v: &Verdict) -> bool {
    let (Some(pi), Some(path)) = (
        v.valuation(),
        v.witness.as_ref().and_then(|w| w.path.as_ref()),
    ) else {
        return false;
    };
    let Ok(inst) = instantiate(a, pi) else {
        return false;
    };
    matches!(path_feasible(&inst, path, DEFAULT_PATH_CAP), Ok(Some(_)))
}

fn c1_a2_exprsets() -> Outcome {
    let a = load("a2.pita");
    let e = saturate(&a).map_err(|x| x.to_string())?;
    let polpar: Vec<String> = {
        let mut v: Vec<String> = e
            .registry
            .members()
            .iter()
            .map(|p| p.display(&a.params).to_string())
            .collect();
        v.sort();
        v
    };
    let want_pol = sorted(&["p2", "1 + p2", "1 - p1 + 4*p2^2", "1 + p1*p2 - 4*p2^3"]);
    let want_e1 = sorted(&[
        "x1",
        "0",
        "2",
        "p1",
        "-2 - p2",
        "(2 + p2)/(1 - p1 + 4*p2^2)",
        "(-2 - 2*p2)/p2",
        "(-2 + p2^2)/p2",
        "(2 - p2^2)/(1 + p1*p2 - 4*p2^3)",
    ]);
    let want_e2 = sorted(&[
        "x2",
        "0",
        "x1 - 2",
        "-1/p2*x1 + 2/p2",
        "(p1 - 4*p2^2)*x1 + p2",
    ]);
    let (e1, e2) = (level_all(&a, &e, 1), level_all(&a, &e, 2));
    let mut wrong = Vec::new();
    for (name, got, want) in [
        ("PolPar", &polpar, &want_pol),
        ("E1", &e1, &want_e1),
        ("E2", &e2, &want_e2),
    ] {
        if got != want {
            let extra: Vec<&String> = got.iter().filter(|m| !want.contains(m)).collect();
            let missing: Vec<&String> = want.iter().filter(|m| !got.contains(m)).collect();
            wrong.push(format!(
                "{name} has {} members, expected {} (extra {extra:?}, missing {missing:?})",
                got.len(),
                want.len()
            ));
        }
    }
    ensure(wrong.is_empty(), || wrong.join("; "))?;
    Ok("PolPar 4, E1 9, E2 5".into())
}

/// The first enumerated region whose system holds at (5, -1).
fn a2_region_at_point(
    a: &Automaton,
    e: &ExprSet,
    be: &mut Backend,
) -> Result<(ParamRegion, usize), String> {
    let pt = [r(5), r(-1)];
    let mut it = enumerate_regions(a, e, be, EnumOptions::default());
    let mut n = 0;
    for reg in it.by_ref() {
        let reg = reg.map_err(|x| x.to_string())?;
        n += 1;
        if reg.system.holds_at(&pt) == Some(true) {
            if it.stats.incomplete() || reg.unknown {
                return Err("enumeration hit Unknown".into());
            }
            return Ok((reg, n));
        }
    }
    Err(format!("no region among {n} contains (5, -1)"))
}

fn c2_a2_region() -> Outcome {
    let a = load("a2.pita");
    let e = saturate(&a).map_err(|x| x.to_string())?;
    let mut be = external(&a)?;
    let (reg, n) = a2_region_at_point(&a, &e, &mut be)?;
    let got = printed(&a, &e, 1, &reg.filtered(&e, 1));
    let want = sorted(&[
        "x1",
        "0",
        "2",
        "(-2 - 2*p2)/p2",
        "-2 - p2",
        "(-2 + p2^2)/p2",
        "p1",
    ]);
    ensure(got == want, || {
        format!(
            "region {n} holds at (5, -1); filtered E1 has {} members {got:?}, expected 7",
            got.len()
        )
    })?;
    Ok(format!("region {n}, filtered E1 has 7 members"))
}

fn c3_fragment() -> Outcome {
    let a = load("a2.pita");
    let e = saturate(&a).map_err(|x| x.to_string())?;
    let mut be = external(&a)?;
    let (reg, _) = a2_region_at_point(&a, &e, &mut be)?;
    let layout = Layout::new(&a, &e, &reg).map_err(|x| x.to_string())?;
    let ca = build(&layout).map_err(|x| x.to_string())?;
    let init = a.find_state("q1").ok_or("no initial state")?;

    let mut chain = vec![0];
    while let Some(n) = ca.time_succ(*chain.last().unwrap()) {
        if chain.contains(&n) {
            break;
        }
        chain.push(n);
    }
    ensure(chain.len() == 8, || {
        format!("time chain has {} classes", chain.len())
    })?;
    ensure(chain.iter().all(|&i| ca.classes[i].state == init), || {
        "time chain leaves the initial state".into()
    })?;
    let firable: Vec<bool> = chain
        .iter()
        .map(|&i| layout.firable(&ca.classes[i], TA))
        .collect();
    ensure(
        firable == [true, true, true, true, true, true, false, false],
        || format!("a firable pattern {firable:?}"),
    )?;

    let x2 = ClockExpr::clock(a.main_clock(2).ok_or("no level 2")?);
    for &i in &chain[..6] {
        let succ = layout
            .discrete_successor(&ca.classes[i], TA)
            .map_err(|x| x.to_string())?;
        ensure(
            layout.equal_in(&succ, 2, &x2, &ClockExpr::zero()) == Some(true),
            || "a-successor without x2 = 0".into(),
        )?;
    }

    let names = a.names(&e.registry);
    let find2 = |text: &str| {
        e.level(2)
            .iter()
            .find(|c| c.display(&names).to_string() == text)
            .cloned()
            .ok_or_else(|| format!("{text} not in E2"))
    };
    let before = find2("-1/p2*x1 + 2/p2")?;
    let after = find2("(p1 - 4*p2^2)*x1 + p2")?;
    let b_edge = ca.edges.iter().any(|ed| {
        ed.label == EdgeLabel::Fire(TB)
            && layout.equal_in(&ca.classes[ed.from], 2, &x2, &before) == Some(true)
            && layout.equal_in(&ca.classes[ed.to], 2, &x2, &after) == Some(true)
    });
    ensure(b_edge, || "no b-edge between the expected classes".into())?;
    Ok(format!(
        "{} classes, chain of 8, a on first 6, b-edge present",
        ca.classes.len()
    ))
}

fn c4_run_replay() -> Outcome {
    let a = load("a2.pita");
    let inst = instantiate(&a, &[r(5), r(-1)]).map_err(|x| x.to_string())?;
    let mut c = initial_config(&inst);
    for act in [
        Action::Delay(r(4)),
        Action::Fire(TA),
        Action::Delay(r(2)),
        Action::Fire(TB),
    ] {
        c = step(&inst, &c, &act).map_err(|x| x.to_string())?;
    }
    let q2 = a.find_state("q2").ok_or("no q2")?;
    ensure(c.state == q2 && c.clocks == [r(4), r(3)], || {
        format!("run ends at {:?}", c.clocks)
    })?;

    let mut be = backend(&a);
    let v = existential_reach(&a, &[q2], None, &mut be).map_err(|x| x.to_string())?;
    ensure(v.answer == Answer::Yes, || {
        format!("reach answered {:?}", v.answer)
    })?;
    ensure(certificate_holds(&a, &v), || {
        "witness path not feasible".into()
    })?;
    Ok("(q2, 4, 3); reach Yes with a feasible witness".into())
}

fn c5_a1_language() -> Outcome {
    let a = load("a1.pita");
    let e = saturate(&a).map_err(|x| x.to_string())?;
    let reg = itava::regions::region_of_point(&a, &e, &[]).map_err(|x| x.to_string())?;
    let layout = Layout::new(&a, &e, &reg).map_err(|x| x.to_string())?;
    let ca = build(&layout).map_err(|x| x.to_string())?;
    let words = untimed_words(&ca, &a, 12);
    let want: std::collections::BTreeSet<Vec<String>> = (1..=6)
        .map(|n| {
            (0..n)
                .flat_map(|_| ["a".to_string(), "b".to_string()])
                .collect()
        })
        .collect();
    ensure(words == want, || {
        format!("{} words, expected 6", words.len())
    })?;
    Ok("6 words, (ab)^n for n = 1..6".into())
}

fn c6_planning() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut yes = 0;
    for i in 0..30 {
        let inst = random_planning(&mut rng, 6, 8);
        let want = bfs_plan(&inst);
        let (a, goal) = compile_planning(&inst);
        let v = existential_reach(&a, &[goal], None, &mut Backend::builtin(&[]))
            .map_err(|x| x.to_string())?;
        ensure((v.answer == Answer::Yes) == want, || {
            format!("instance {i}: automaton {:?}, search {want}", v.answer)
        })?;
        yes += want as usize;
    }
    Ok(format!("30/30 agree ({yes} solvable)"))
}

fn c7_additive() -> Outcome {
    let spec = GenSpec {
        max_levels: 2,
        max_aux: 1,
        max_states: 4,
        max_trans: 4,
        params: 2,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut yes = 0;
    for m in 0..25 {
        let (src, a) = random_model(&mut rng, &spec);
        ensure(is_additive(&a), || format!("model {m} not additive"))?;
        let targets = a.accepting_states();
        let red = reduce_additive(&a, None).map_err(|x| x.to_string())?;
        let via_ita = existential_reach(&red.automaton, &targets, None, &mut Backend::builtin(&[]))
            .map_err(|x| x.to_string())?;
        let via_regions =
            existential_reach(&a, &targets, None, &mut external(&a)?).map_err(|x| x.to_string())?;
        ensure(
            via_regions.answer != Answer::Unknown && via_ita.answer == via_regions.answer,
            || {
                format!(
                    "model {m}: reduction {:?}, regions {:?}\n{src}",
                    via_ita.answer, via_regions.answer
                )
            },
        )?;
        yes += (via_ita.answer == Answer::Yes) as usize;
    }
    Ok(format!("25/25 agree ({yes} reachable)"))
}

fn c8_bisimulation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(2026);
    let mut classes = 0;
    for m in 0..50 {
        let (src, a) = random_model(&mut rng, &GenSpec::default());
        let e = saturate(&a).map_err(|x| x.to_string())?;
        let reg = itava::regions::region_of_point(&a, &e, &[]).map_err(|x| x.to_string())?;
        let layout = Layout::new(&a, &e, &reg).map_err(|x| x.to_string())?;
        let ca = build(&layout).map_err(|x| x.to_string())?;
        classes += ca.classes.len();
        let mut bad = bisimulation_violations(&a, &layout, &ca, 10, &mut rng);
        bad.extend(path_mismatches(&a, &ca, 10));
        ensure(bad.is_empty(), || {
            format!("model {m}: {}\n{src}", bad.join("; "))
        })?;
    }
    Ok(format!("50 models, {classes} classes, no violations"))
}

fn c9_bounds() -> Outcome {
    let dir = common::data("");
    let mut names: Vec<_> = std::fs::read_dir(&dir)
        .map_err(|x| x.to_string())?
        .filter_map(|d| d.ok().map(|d| d.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "pita"))
        .collect();
    names.sort();
    ensure(!names.is_empty(), || "empty corpus".into())?;
    for p in &names {
        let src = std::fs::read_to_string(p).map_err(|x| x.to_string())?;
        let a = parse_model(&src)
            .map_err(|d| format!("{}: {d:?}", p.display()))?
            .core();
        let e = saturate(&a).map_err(|x| x.to_string())?;
        let rep = check_bounds(&e, &a);
        ensure(rep.ok(), || {
            format!("{}: {}", p.display(), rep.violations.join("; "))
        })?;
    }
    Ok(format!("{} models within bounds", names.len()))
}

fn interior_points(reg: &ParamRegion, w: &[Rational], n: usize, seed: u64) -> Vec<Vec<Rational>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for _ in 0..100_000 {
        if out.len() == n {
            break;
        }
        let scale = 1i64 << rng.gen_range(2..12);
        let p: Vec<Rational> = w
            .iter()
            .map(|x| x + common::q(rng.gen_range(-64..=64), 64 * scale))
            .collect();
        if p != w && reg.system.holds_at(&p) == Some(true) && !out.contains(&p) {
            out.push(p);
        }
    }
    out
}

fn c10_robustness() -> Outcome {
    let pinned = load("pinned.pita");
    let q1 = pinned.find_state("q1").ok_or("no q1")?;
    let mut be = backend(&pinned);
    let v = existential_reach(&pinned, &[q1], None, &mut be).map_err(|x| x.to_string())?;
    ensure(v.answer == Answer::Yes, || {
        format!("pinned exist {:?}", v.answer)
    })?;
    let v = robust_reach(&pinned, &[q1], None, &mut be).map_err(|x| x.to_string())?;
    ensure(v.answer == Answer::No, || {
        format!("pinned robust {:?}", v.answer)
    })?;

    let a = load("a2.pita");
    let q2 = a.find_state("q2").ok_or("no q2")?;
    let mut be = backend(&a);
    let v = robust_reach(&a, &[q2], None, &mut be).map_err(|x| x.to_string())?;
    ensure(v.answer == Answer::Yes, || {
        format!("A2 robust {:?}", v.answer)
    })?;
    let w = v.witness.as_ref().ok_or("no witness")?;
    ensure(w.region.open_only && w.region.system.all_strict(), || {
        "witness region is not open".into()
    })?;
    let path = w.path.as_ref().ok_or("no witness path")?;
    let pts = interior_points(&w.region, v.valuation().ok_or("no valuation")?, 20, 2026);
    ensure(pts.len() == 20, || {
        format!("only {} interior points", pts.len())
    })?;
    for p in &pts {
        let inst = instantiate(&a, p).map_err(|x| x.to_string())?;
        ensure(
            matches!(path_feasible(&inst, path, DEFAULT_PATH_CAP), Ok(Some(_))),
            || format!("path infeasible at {p:?}"),
        )?;
    }
    Ok("pinned: exist Yes, robust No; A2 robust Yes at 20 points".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("A2 expression sets", 1, c1_a2_exprsets),
        ("A2 region and witness", 30, c2_a2_region),
        ("class automaton fragment", 30, c3_fragment),
        ("run replay and reach", 5, c4_run_replay),
        ("A1 untimed language", 5, c5_a1_language),
        ("planning reduction", 60, c6_planning),
        ("additive cross-validation", 600, c7_additive),
        ("bisimulation properties", 900, c8_bisimulation),
        ("bound diagnostics", 60, c9_bounds),
        ("robustness discrimination", 120, c10_robustness),
    ];
    let mut failed = 0;
    for (i, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let res = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let took = start.elapsed();
        let res = match res {
            Ok(_) if took > Duration::from_secs(*limit) => {
                Err(format!("took {took:.1?}, limit {limit} s"))
            }
            r => r,
        };
        match res {
            Ok(msg) => println!("PASS {:>2} {name} ({took:.2?}): {msg}", i + 1),
            Err(msg) => {
                failed += 1;
                println!("FAIL {:>2} {name} ({took:.2?}): {msg}", i + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
