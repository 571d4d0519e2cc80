//! Shared helpers for the integration tests: model loading, solver lookup,
//! a random model generator and the concrete-versus-abstract oracles.
#![allow(dead_code)]

use std::collections::BTreeSet;
use std::path::PathBuf;

use itava::arith::Rational;
use itava::classgraph::{abstract_path_exists, ClassAutomaton, Layout};
use itava::fm::{self, Chooser, LinCon, Rel};
use itava::frontend::parse_model;
use itava::model::{validate, Automaton, StateId};
use itava::regions::Backend;
use itava::semantics::{path_feasible, step, AbstractPath, Action, Config, PathStep};
use num_traits::{One, Signed, Zero};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn load(name: &str) -> Automaton {
    let src = std::fs::read_to_string(data(name)).unwrap();
    parse_model(&src)
        .unwrap_or_else(|e| panic!("{name}: {e:?}"))
        .core()
}

pub fn r(n: i64) -> Rational {
    Rational::from_integer(n.into())
}

pub fn q(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// z3 from `ITAVA_SMT_SOLVER` or `PATH`.
pub fn z3_path() -> Option<PathBuf> {
    if let Some(p) = itava::regions::solver_path(None) {
        return Some(p);
    }
    let path = std::env::var_os("PATH")?;
    std::env::split_paths(&path)
        .map(|d| d.join("z3"))
        .find(|p| p.is_file())
}

/// The external solver when available, otherwise the built-in sampler.
pub fn backend(a: &Automaton) -> Backend {
    Backend::select(&a.params, z3_path().as_deref()).unwrap_or_else(|_| Backend::builtin(&a.params))
}

#[derive(Clone, Copy, Debug)]
pub struct GenSpec {
    pub max_levels: usize,
    /// Auxiliary clocks per level.
    pub max_aux: usize,
    pub max_states: usize,
    pub max_trans: usize,
    /// Parameters used as additive constants.
    pub params: usize,
}

impl Default for GenSpec {
    fn default() -> Self {
        GenSpec {
            max_levels: 2,
            max_aux: 2,
            max_states: 5,
            max_trans: 7,
            params: 0,
        }
    }
}

fn small<R: Rng>(rng: &mut R) -> i64 {
    rng.gen_range(0..=3)
}

/// `c`, `p1 + c` or `-p2 + c` as source text.
fn constant<R: Rng>(rng: &mut R, spec: &GenSpec) -> String {
    let c = small(rng);
    if spec.params > 0 && rng.gen_bool(0.4) {
        let p = rng.gen_range(1..=spec.params);
        let sign = if rng.gen_bool(0.7) { "" } else { "-" };
        format!("{sign}p{p} + {c}")
    } else {
        c.to_string()
    }
}

struct Shape {
    /// Clock names per level; the first one is the main clock.
    clocks: Vec<Vec<String>>,
    /// Level and active clock of every state.
    states: Vec<(usize, String)>,
}

fn guard_atom<R: Rng>(rng: &mut R, sh: &Shape, k: usize, spec: &GenSpec) -> String {
    let ops = ["<", "<=", "=", ">=", ">"];
    let op = ops.choose(rng).unwrap();
    let top = &sh.clocks[k - 1];
    if top.len() > 1 && rng.gen_bool(0.25) {
        let l = top.choose(rng).unwrap();
        let r = top.choose(rng).unwrap();
        if l != r {
            return format!("{l} {op} {r}");
        }
    }
    let mut lhs = top.choose(rng).unwrap().clone();
    if k > 1 && rng.gen_bool(0.3) {
        let j = rng.gen_range(1..k);
        let sign = if rng.gen_bool(0.5) { "+" } else { "-" };
        lhs = format!("{lhs} {sign} {}", sh.clocks[j - 1][0]);
    }
    format!("{lhs} {op} {}", constant(rng, spec))
}

fn update_rhs<R: Rng>(
    rng: &mut R,
    sh: &Shape,
    z_level: usize,
    copy_ok: bool,
    z: &str,
    spec: &GenSpec,
) -> String {
    let same = &sh.clocks[z_level - 1];
    if copy_ok && same.len() > 1 && rng.gen_bool(0.3) {
        let y = same.choose(rng).unwrap();
        if y != z {
            return y.clone();
        }
    }
    if z_level > 1 && rng.gen_bool(0.3) {
        let j = rng.gen_range(1..z_level);
        return format!("{} + {}", sh.clocks[j - 1][0], constant(rng, spec));
    }
    if rng.gen_bool(0.6) {
        "0".into()
    } else {
        constant(rng, spec)
    }
}

/// Source text of a random model; not necessarily valid.
pub fn random_source<R: Rng>(rng: &mut R, spec: &GenSpec) -> String {
    let levels = rng.gen_range(1..=spec.max_levels);
    let clocks: Vec<Vec<String>> = (1..=levels)
        .map(|l| {
            let mut v = vec![format!("x{l}")];
            for i in 0..rng.gen_range(0..=spec.max_aux) {
                v.push(format!("y{l}{}", (b'a' + i as u8) as char));
            }
            v
        })
        .collect();
    let nstates = rng.gen_range(2..=spec.max_states.max(2));
    let states: Vec<(usize, String)> = (0..nstates)
        .map(|i| {
            let l = if i == 0 { 1 } else { rng.gen_range(1..=levels) };
            let act = if rng.gen_bool(0.8) {
                clocks[l - 1][0].clone()
            } else {
                clocks[l - 1].choose(rng).unwrap().clone()
            };
            (l, act)
        })
        .collect();
    let sh = Shape { clocks, states };

    let mut src = String::from("pita {\n");
    if spec.params > 0 {
        let ps: Vec<String> = (1..=spec.params).map(|p| format!("p{p}")).collect();
        src.push_str(&format!("  params {};\n", ps.join(" ")));
    }
    src.push_str(&format!("  levels {levels};\n"));
    for (l, cs) in sh.clocks.iter().enumerate() {
        let aux = if cs.len() > 1 {
            format!(" aux {};", cs[1..].join(" "))
        } else {
            String::new()
        };
        src.push_str(&format!("  level {} {{ main {};{aux} }}\n", l + 1, cs[0]));
    }
    let accepting = rng.gen_range(1..nstates);
    for (i, (l, act)) in sh.states.iter().enumerate() {
        let mut line = format!("  state q{i} level {l} active {act}");
        if i == 0 {
            line.push_str(" init");
        }
        if i == accepting {
            line.push_str(" final");
        }
        src.push_str(&line);
        src.push_str(";\n");
    }
    let labels = ["a", "b", "c"];
    // a chain through all states, then random transitions
    let ntrans = rng.gen_range(nstates - 1..=spec.max_trans.max(nstates - 1));
    for j in 0..ntrans {
        let (s, t) = if j + 1 < nstates {
            (j, j + 1)
        } else {
            (rng.gen_range(0..nstates), rng.gen_range(0..nstates))
        };
        let (k, k2) = (sh.states[s].0, sh.states[t].0);
        let mut line = format!("  trans q{s} -> q{t}");
        if rng.gen_bool(0.8) {
            line.push_str(&format!(" on {}", labels.choose(rng).unwrap()));
        }
        let atoms: Vec<String> = (0..rng.gen_range(0..=2))
            .map(|_| guard_atom(rng, &sh, k, spec))
            .collect();
        if !atoms.is_empty() {
            line.push_str(&format!(" when {}", atoms.join(" and ")));
        }
        let mut ups = Vec::new();
        for i in 1..=k {
            for (n, z) in sh.clocks[i - 1].iter().enumerate() {
                if !rng.gen_bool(0.3) {
                    continue;
                }
                let rhs = if k > k2 && i > k2 {
                    "0".to_string()
                } else {
                    let copy_ok = n > 0 || (i == k && k == k2);
                    update_rhs(rng, &sh, i, copy_ok, z, spec)
                };
                ups.push(format!("{z} := {rhs}"));
            }
        }
        if !ups.is_empty() {
            line.push_str(&format!(" do {}", ups.join(", ")));
        }
        src.push_str(&line);
        src.push_str(";\n");
    }
    src.push_str("}\n");
    src
}

/// A random valid model.
pub fn random_model<R: Rng>(rng: &mut R, spec: &GenSpec) -> (String, Automaton) {
    loop {
        let src = random_source(rng, spec);
        let Ok(doc) = parse_model(&src) else { continue };
        let a = doc.core();
        if validate(&a).is_valid() {
            return (src, a);
        }
    }
}

/// Linear constraints over the clocks describing a class (clocks above
/// the state's level are zero).
fn class_constraints(layout: &Layout<'_>, ca: &ClassAutomaton, i: usize) -> Vec<LinCon> {
    let a = layout.a;
    let c = &ca.classes[i];
    let n = a.clocks.len();
    let lvl = a.state_level(c.state);
    let mut out = Vec::new();
    for (z, clock) in a.clocks.iter().enumerate() {
        if clock.level > lvl {
            let mut co = vec![Rational::zero(); n];
            co[z] = Rational::one();
            out.push(LinCon::new(co, Rational::zero(), Rel::Eq));
        }
    }
    for (k0, ranks) in c.orders.iter().enumerate() {
        let lin: Vec<(Vec<Rational>, Rational)> = (0..ranks.len())
            .map(|p| {
                let (coeffs, b) = layout
                    .member(k0 + 1, p)
                    .rational_coeffs()
                    .expect("parameter-free");
                let mut v = vec![Rational::zero(); n];
                for (z, c) in coeffs {
                    v[z.0] = c;
                }
                (v, b)
            })
            .collect();
        for p in 0..ranks.len() {
            for p2 in 0..ranks.len() {
                let rel = if ranks[p] == ranks[p2] && p < p2 {
                    Rel::Eq
                } else if ranks[p] + 1 == ranks[p2] {
                    Rel::Lt
                } else {
                    continue;
                };
                // member p - member p2 rel 0
                let co: Vec<Rational> = lin[p]
                    .0
                    .iter()
                    .zip(&lin[p2].0)
                    .map(|(x, y)| x - y)
                    .collect();
                out.push(LinCon::new(co, &lin[p].1 - &lin[p2].1, rel));
            }
        }
    }
    out
}

/// Random configurations of a class, drawn by randomized back substitution.
pub fn sample_class<R: Rng>(
    layout: &Layout<'_>,
    ca: &ClassAutomaton,
    i: usize,
    n: usize,
    rng: &mut R,
) -> Vec<Config> {
    let cons = class_constraints(layout, ca, i);
    let nclocks = layout.a.clocks.len();
    (0..n)
        .filter_map(|_| {
            let v = fm::solve_with(&cons, nclocks, &mut Chooser::Random(&mut *rng))?;
            Some(Config {
                state: ca.classes[i].state,
                clocks: v,
            })
        })
        .collect()
}

/// Delays at which the class of `c` can change: cuts where the active
/// clock's level members meet, the midpoints between them and one beyond.
fn time_probe(a: &Automaton, layout: &Layout<'_>, c: &Config) -> Vec<Rational> {
    let l = a.state_level(c.state);
    let act = a.state(c.state).active;
    let vals: Vec<(Rational, Rational)> = layout.filtered[l - 1]
        .iter()
        .enumerate()
        .map(|(p, _)| {
            let m = layout.member(l, p);
            let (coeffs, _) = m.rational_coeffs().expect("parameter-free");
            let slope = coeffs.get(&act).cloned().unwrap_or_else(Rational::zero);
            (m.eval_clocks(&c.clocks), slope)
        })
        .collect();
    let mut cuts = vec![Rational::zero()];
    for (i, (vi, si)) in vals.iter().enumerate() {
        for (vj, sj) in &vals[i + 1..] {
            if si != sj {
                let d = (vj - vi) / (si - sj);
                if d.is_positive() {
                    cuts.push(d);
                }
            }
        }
    }
    cuts.sort();
    cuts.dedup();
    let mut probe = Vec::new();
    for w in cuts.windows(2) {
        probe.push(w[0].clone());
        probe.push((&w[0] + &w[1]) / r(2));
    }
    let last = cuts.last().unwrap().clone();
    probe.push(last.clone());
    probe.push(last + r(1));
    probe
}

/// Checks the discrete and time step properties on sampled configurations
/// of every class; returns the violations found.
pub fn bisimulation_violations<R: Rng>(
    a: &Automaton,
    layout: &Layout<'_>,
    ca: &ClassAutomaton,
    per_class: usize,
    rng: &mut R,
) -> Vec<String> {
    let mut out = Vec::new();
    for i in 0..ca.len() {
        let class = &ca.classes[i];
        let samples = sample_class(layout, ca, i, per_class, rng);
        if samples.is_empty() {
            out.push(format!("class {i} has no concrete configuration"));
            continue;
        }
        for cfg in samples {
            match layout.class_of(&cfg, &[]) {
                Ok(c) if &c == class => {}
                other => {
                    out.push(format!("sample of class {i} maps to {other:?}"));
                    continue;
                }
            }
            for t in a.outgoing(cfg.state) {
                let abs = layout.firable(class, t);
                let conc = step(a, &cfg, &Action::Fire(t));
                match (abs, conc) {
                    (true, Ok(next)) => {
                        let want = layout.discrete_successor(class, t).unwrap();
                        let got = layout.class_of(&next, &[]).unwrap();
                        if want != got {
                            out.push(format!(
                                "DS: class {i} by {} lands in {got:?}, expected {want:?}",
                                a.transition_name(t)
                            ));
                        }
                    }
                    (false, Err(_)) => {}
                    (abs, conc) => out.push(format!(
                        "DS: class {i}, {}: abstract firable {abs}, concrete {}",
                        a.transition_name(t),
                        conc.is_ok()
                    )),
                }
            }
            // time: the classes met while waiting follow Post
            let mut expected = vec![class.clone()];
            let mut cur = class.clone();
            for _ in 0..64 {
                let next = layout.time_successor(&cur);
                if next == cur {
                    break;
                }
                expected.push(next.clone());
                cur = next;
            }
            let mut seen: Vec<_> = Vec::new();
            for d in time_probe(a, layout, &cfg) {
                let moved = step(a, &cfg, &Action::Delay(d)).unwrap();
                let c = layout.class_of(&moved, &[]).unwrap();
                if seen.last() != Some(&c) {
                    seen.push(c);
                }
            }
            if seen.len() > expected.len() || seen[..] != expected[..seen.len()] {
                out.push(format!(
                    "TS: class {i} time chain {seen:?}, expected prefix of {expected:?}"
                ));
            }
        }
    }
    out
}

/// Every syntactic abstract path with at most `max_len` steps: no two
/// consecutive delays, transitions chained from the initial state.
pub fn all_paths(a: &Automaton, max_len: usize) -> Vec<AbstractPath> {
    let q0 = a.initial_state().unwrap();
    let mut out = Vec::new();
    let mut stack: Vec<(StateId, Vec<PathStep>)> = vec![(q0, Vec::new())];
    while let Some((s, p)) = stack.pop() {
        out.push(AbstractPath(p.clone()));
        if p.len() == max_len {
            continue;
        }
        if p.last() != Some(&PathStep::Delay) {
            let mut n = p.clone();
            n.push(PathStep::Delay);
            stack.push((s, n));
        }
        for t in a.outgoing(s) {
            let mut n = p.clone();
            n.push(PathStep::Fire(t));
            stack.push((a.transition(t).target, n));
        }
    }
    out
}

/// Paths of at most `max_len` steps whose concrete feasibility and
/// abstract existence disagree. Both notions are closed under prefixes, so
/// extensions of a path that is infeasible on both sides are skipped.
pub fn path_mismatches(a: &Automaton, ca: &ClassAutomaton, max_len: usize) -> Vec<String> {
    let mut out = Vec::new();
    let q0 = a.initial_state().unwrap();
    let mut stack: Vec<(StateId, Vec<PathStep>)> = vec![(q0, Vec::new())];
    while let Some((s, steps)) = stack.pop() {
        let p = AbstractPath(steps);
        let conc = path_feasible(a, &p, max_len.max(1)).unwrap().is_some();
        let abs = abstract_path_exists(ca, &p);
        if conc != abs {
            out.push(format!("{}: concrete {conc}, abstract {abs}", p.display(a)));
            continue;
        }
        if !conc || p.0.len() == max_len {
            continue;
        }
        if p.0.last() != Some(&PathStep::Delay) {
            let mut n = p.0.clone();
            n.push(PathStep::Delay);
            stack.push((s, n));
        }
        for t in a.outgoing(s) {
            let mut n = p.0.clone();
            n.push(PathStep::Fire(t));
            stack.push((a.transition(t).target, n));
        }
    }
    out
}

/// States reachable in the instantiated automaton according to the
/// concrete feasibility oracle on all paths up to `max_len` steps.
pub fn concretely_reachable(a: &Automaton, max_len: usize) -> BTreeSet<StateId> {
    let mut out = BTreeSet::new();
    let q0 = a.initial_state().unwrap();
    for p in all_paths(a, max_len) {
        if path_feasible(a, &p, max_len.max(1)).unwrap().is_some() {
            let last = p
                .transitions()
                .last()
                .map_or(q0, |t| a.transition(t).target);
            out.insert(last);
        }
    }
    out
}

/// Random planning instance with at most `max_vars` propositions and
/// `max_rules` rules.
pub fn random_planning<R: Rng>(
    rng: &mut R,
    max_vars: usize,
    max_rules: usize,
) -> itava::analysis::PlanningInstance {
    use itava::analysis::{Literal, PlanningInstance, Rule};
    let vars = rng.gen_range(1..=max_vars);
    let rules = (0..rng.gen_range(0..=max_rules))
        .map(|_| {
            let pick = |rng: &mut R, n: usize| {
                let mut v: Vec<usize> = (0..vars).collect();
                v.shuffle(rng);
                v.truncate(n);
                v
            };
            let npre = rng.gen_range(0..=vars.min(2));
            let pre = pick(rng, npre)
                .into_iter()
                .map(|var| Literal {
                    var,
                    positive: rng.gen_bool(0.5),
                })
                .collect();
            let npost = rng.gen_range(1..=vars.min(3));
            let post = pick(rng, npost)
                .into_iter()
                .map(|v| (v, rng.gen_bool(0.7)))
                .collect();
            Rule { pre, post }
        })
        .collect();
    PlanningInstance { vars, rules }
}

/// Breadth-first search over truth assignments (bit `i` is proposition `i`).
pub fn bfs_plan(inst: &itava::analysis::PlanningInstance) -> bool {
    let goal = (1u64 << inst.vars) - 1;
    let mut seen = vec![false; 1 << inst.vars];
    let mut queue = std::collections::VecDeque::from([0u64]);
    seen[0] = true;
    while let Some(s) = queue.pop_front() {
        if s == goal {
            return true;
        }
        for rule in &inst.rules {
            if rule
                .pre
                .iter()
                .all(|l| ((s >> l.var) & 1 == 1) == l.positive)
            {
                let mut t = s;
                for &(v, val) in &rule.post {
                    if val {
                        t |= 1 << v;
                    } else {
                        t &= !(1 << v);
                    }
                }
                if !seen[t as usize] {
                    seen[t as usize] = true;
                    queue.push_back(t);
                }
            }
        }
    }
    false
}
