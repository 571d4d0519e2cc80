//! Reachability queries: existential, universal, robust, each optionally
//! restricted to a parameter scope.

mod additive;
mod planning;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::arith::{fmt_rational, Rational};
use crate::classgraph::{build_with, BuildOptions, ClassError, Layout};
use crate::exprsets::{saturate, ExprError};
use crate::model::{validate, Automaton, StateId};
use crate::regions::{enumerate_regions, Backend, EnumOptions, Formula, ParamRegion, RegionError};
use crate::semantics::{instantiate, path_feasible, AbstractPath, SemError, DEFAULT_PATH_CAP};

pub use additive::{is_additive, reduce_additive, Reduction};
pub use planning::{compile_planning, plan_exists, Literal, PlanningInstance, Rule};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("invalid automaton:\n{0}")]
    Invalid(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error(transparent)]
    Class(#[from] ClassError),
    #[error(transparent)]
    Sem(#[from] SemError),
    #[error("not additively parametrised: {0}")]
    NotAdditive(String),
    #[error("scope cannot be used here: {0}")]
    Scope(String),
    #[error("witness path is not concretely feasible at the witness valuation")]
    Certificate,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Answer {
    Yes,
    No,
    Unknown,
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Answer::Yes => "Yes",
            Answer::No => "No",
            Answer::Unknown => "Unknown",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Exist,
    Forall,
    Robust,
}

#[derive(Clone, Debug)]
pub struct ReachOptions {
    pub mode: Mode,
    pub scope: Option<Formula>,
    /// Class automaton cap per region.
    pub cap: usize,
}

impl Default for ReachOptions {
    fn default() -> Self {
        ReachOptions {
            mode: Mode::Exist,
            scope: None,
            cap: BuildOptions::default().cap,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize)]
pub struct Stats {
    pub backend: String,
    pub regions: usize,
    pub unknown_regions: usize,
    pub pruned_unknown: usize,
    pub region_nodes: usize,
    pub solver_queries: usize,
    pub classes_total: usize,
    pub classes_max: usize,
    pub polpar: usize,
    pub expressions: Vec<usize>,
}

/// Witness region, valuation and run shipped with an answer.
#[derive(Clone, Debug)]
pub struct Witness {
    pub region: ParamRegion,
    pub region_index: usize,
    pub path: Option<AbstractPath>,
    /// One delay per `Delay` step of `path`, checked at the valuation.
    pub delays: Option<Vec<Rational>>,
}

#[derive(Clone, Debug)]
pub struct Verdict {
    pub answer: Answer,
    pub witness: Option<Witness>,
    pub stats: Stats,
}

#[derive(Serialize)]
struct VerdictDoc {
    answer: Answer,
    witness_region: Option<Vec<String>>,
    witness_valuation: Option<BTreeMap<String, String>>,
    witness_path: Option<Vec<String>>,
    witness_delays: Option<Vec<String>>,
    stats: Stats,
}

impl Verdict {
    pub fn valuation(&self) -> Option<&[Rational]> {
        self.witness.as_ref()?.region.witness.as_deref()
    }

    fn doc(&self, a: &Automaton) -> VerdictDoc {
        let w = self.witness.as_ref();
        VerdictDoc {
            answer: self.answer,
            witness_region: w.map(|w| w.region.system.lines(&a.params)),
            witness_valuation: self.valuation().map(|v| {
                a.params
                    .iter()
                    .cloned()
                    .zip(v.iter().map(fmt_rational))
                    .collect()
            }),
            witness_path: w.and_then(|w| w.path.as_ref()).map(|p| {
                p.0.iter()
                    .map(|s| match s {
                        crate::semantics::PathStep::Delay => "delay".to_string(),
                        crate::semantics::PathStep::Fire(t) => a.transition_name(*t),
                    })
                    .collect()
            }),
            witness_delays: w
                .and_then(|w| w.delays.as_ref())
                .map(|d| d.iter().map(fmt_rational).collect()),
            stats: self.stats.clone(),
        }
    }

    /// The JSON result document.
    pub fn to_json(&self, a: &Automaton) -> String {
        serde_json::to_string_pretty(&self.doc(a)).expect("verdict serializes")
    }

    /// Human-readable summary.
    pub fn lines(&self, a: &Automaton) -> Vec<String> {
        let doc = self.doc(a);
        let mut out = vec![format!("answer {}", self.answer)];
        if let Some(r) = doc.witness_region {
            out.push("witness region:".into());
            out.extend(r.into_iter().map(|l| format!("  {l}")));
        }
        if let Some(v) = doc.witness_valuation {
            let parts: Vec<String> = v.iter().map(|(k, v)| format!("{k} = {v}")).collect();
            out.push(format!("witness valuation: {}", parts.join(", ")));
        }
        if let Some(p) = doc.witness_path {
            out.push(format!("witness path: {}", p.join(" ; ")));
        }
        if let Some(d) = doc.witness_delays {
            out.push(format!("witness delays: {}", d.join(", ")));
        }
        let s = &self.stats;
        out.push(format!(
            "regions {} (unknown {}, pruned {}), classes {} (max {}), solver {} queries {}",
            s.regions,
            s.unknown_regions,
            s.pruned_unknown,
            s.classes_total,
            s.classes_max,
            s.backend,
            s.solver_queries
        ));
        out
    }
}

fn check_valid(a: &Automaton) -> Result<(), AnalysisError> {
    let report = validate(a);
    if report.is_valid() {
        Ok(())
    } else {
        Err(AnalysisError::Invalid(report.to_string()))
    }
}

/// States with a path to a target in the transition graph; classes in
/// other states cannot lead to a target.
fn coreachable(a: &Automaton, targets: &[StateId]) -> BTreeSet<StateId> {
    let mut out: BTreeSet<StateId> = targets.iter().copied().collect();
    let mut stack: Vec<StateId> = targets.to_vec();
    while let Some(q) = stack.pop() {
        for tr in &a.transitions {
            if tr.target == q && out.insert(tr.source) {
                stack.push(tr.source);
            }
        }
    }
    out
}

/// Concretizes a witness path at the region's valuation.
fn concretize(
    a: &Automaton,
    pi: &[Rational],
    path: &AbstractPath,
) -> Result<Vec<Rational>, AnalysisError> {
    let inst = instantiate(a, pi)?;
    let cap = DEFAULT_PATH_CAP.max(path.0.len());
    path_feasible(&inst, path, cap)?.ok_or(AnalysisError::Certificate)
}

pub fn existential_reach(
    a: &Automaton,
    targets: &[StateId],
    scope: Option<Formula>,
    backend: &mut Backend,
) -> Result<Verdict, AnalysisError> {
    let opts = ReachOptions {
        mode: Mode::Exist,
        scope,
        ..ReachOptions::default()
    };
    reach(a, targets, &opts, backend)
}

pub fn universal_reach(
    a: &Automaton,
    targets: &[StateId],
    scope: Option<Formula>,
    backend: &mut Backend,
) -> Result<Verdict, AnalysisError> {
    let opts = ReachOptions {
        mode: Mode::Forall,
        scope,
        ..ReachOptions::default()
    };
    reach(a, targets, &opts, backend)
}

pub fn robust_reach(
    a: &Automaton,
    targets: &[StateId],
    scope: Option<Formula>,
    backend: &mut Backend,
) -> Result<Verdict, AnalysisError> {
    let opts = ReachOptions {
        mode: Mode::Robust,
        scope,
        ..ReachOptions::default()
    };
    reach(a, targets, &opts, backend)
}

/// Runs a query by enumerating regions and building one class automaton
/// per region. A parameter-free automaton has a single region.
pub fn reach(
    a: &Automaton,
    targets: &[StateId],
    opts: &ReachOptions,
    backend: &mut Backend,
) -> Result<Verdict, AnalysisError> {
    check_valid(a)?;
    let e = saturate(a)?;
    let mut stats = Stats {
        backend: backend.name().to_string(),
        polpar: e.registry.len(),
        expressions: (1..=a.levels).map(|k| e.level(k).len()).collect(),
        ..Stats::default()
    };
    let queries_before = backend.queries();
    let enum_opts = EnumOptions {
        open_only: opts.mode == Mode::Robust,
        scope: opts.scope.clone(),
    };
    let build_opts = BuildOptions {
        cap: opts.cap,
        states: Some(coreachable(a, targets)),
    };

    let mut answer = None;
    let mut witness = None;
    // a region that reached a target without a proof that it is non-empty
    let mut unsure = false;
    {
        let mut regions = enumerate_regions(a, &e, backend, enum_opts);
        let mut index = 0;
        for region in regions.by_ref() {
            let region = region?;
            index += 1;
            stats.regions += 1;
            if region.unknown {
                stats.unknown_regions += 1;
            }
            let layout = Layout::new(a, &e, &region)?;
            let (ca, hit) =
                build_with(&layout, build_opts.clone(), |c| targets.contains(&c.state))?;
            stats.classes_total += ca.len();
            stats.classes_max = stats.classes_max.max(ca.len());
            match (opts.mode, hit) {
                (Mode::Exist | Mode::Robust, Some(j)) => {
                    if region.unknown {
                        unsure = true;
                        continue;
                    }
                    let path = ca.path_to(j);
                    let delays = match &region.witness {
                        Some(pi) => Some(concretize(a, pi, &path)?),
                        None => None,
                    };
                    witness = Some(Witness {
                        region,
                        region_index: index - 1,
                        path: Some(path),
                        delays,
                    });
                    answer = Some(Answer::Yes);
                    break;
                }
                (Mode::Forall, None) => {
                    if region.unknown {
                        unsure = true;
                        continue;
                    }
                    witness = Some(Witness {
                        region,
                        region_index: index - 1,
                        path: None,
                        delays: None,
                    });
                    answer = Some(Answer::No);
                    break;
                }
                _ => {}
            }
        }
        stats.pruned_unknown = regions.stats.pruned_unknown;
        stats.region_nodes = regions.stats.nodes;
        unsure |= regions.stats.incomplete();
    }
    stats.solver_queries = backend.queries() - queries_before;
    let answer = answer.unwrap_or(match (opts.mode, unsure) {
        (_, true) => Answer::Unknown,
        (Mode::Forall, false) => Answer::Yes,
        (_, false) => Answer::No,
    });
    Ok(Verdict {
        answer,
        witness,
        stats,
    })
}
