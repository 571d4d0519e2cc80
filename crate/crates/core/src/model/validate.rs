use std::fmt;

use super::{Automaton, ClockKind, GuardAtom, Policy, UpdateRhs};

/// A broken structural rule, named after the offending element.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.message)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    pub violations: Vec<Violation>,
    /// The automaton has no parameters.
    pub plain_ita: bool,
}

impl Report {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    /// True when every violation only concerns a timing policy.
    pub fn only_policies(&self) -> bool {
        self.violations
            .iter()
            .all(|v| v.message.starts_with("policy"))
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate(a: &Automaton) -> Report {
    let mut out = Vec::new();
    let mut push = |subject: String, message: String| out.push(Violation { subject, message });

    if a.levels == 0 {
        push("automaton".into(), "at least one level is required".into());
    }
    for level in 1..=a.levels {
        let mains = a
            .clocks
            .iter()
            .filter(|c| c.level == level && c.kind == ClockKind::Main)
            .count();
        if mains != 1 {
            push(
                format!("level {level}"),
                format!("exactly one main clock required, found {mains}"),
            );
        }
    }
    for (i, c) in a.clocks.iter().enumerate() {
        if c.level == 0 || c.level > a.levels {
            push(
                format!("clock {}", c.name),
                format!("level {} out of range", c.level),
            );
        }
        if a.clocks[..i].iter().any(|d| d.name == c.name) {
            push(format!("clock {}", c.name), "duplicate clock name".into());
        }
    }

    let initials: Vec<_> = a.states.iter().filter(|s| s.initial).collect();
    if initials.len() != 1 {
        push(
            "automaton".into(),
            format!(
                "exactly one initial state required, found {}",
                initials.len()
            ),
        );
    } else if initials[0].level != 1 {
        push(
            format!("state {}", initials[0].name),
            "the initial state must be at level 1".into(),
        );
    }
    for s in &a.states {
        if s.level == 0 || s.level > a.levels {
            push(
                format!("state {}", s.name),
                format!("level {} out of range", s.level),
            );
        }
        if s.active.0 >= a.clocks.len() || a.clock(s.active).level != s.level {
            push(
                format!("state {}", s.name),
                "active clock must belong to the state's level".into(),
            );
        }
        if s.policy != Policy::Lazy {
            push(
                format!("state {}", s.name),
                "policy annotation must be desugared before analysis".into(),
            );
        }
    }

    for t in a.transition_ids() {
        let tr = a.transition(t);
        let name = format!("transition {} ({})", t.0, a.transition_name(t));
        let k = a.state_level(tr.source);
        let k2 = a.state_level(tr.target);

        for atom in &tr.guard {
            match atom {
                GuardAtom::Linear { expr, .. } => {
                    let mut top = 0;
                    for z in expr.clocks() {
                        let l = a.clock_level(z);
                        if l > k {
                            push(
                                name.clone(),
                                format!(
                                    "guard outside C(X_{k}, X_<{k}): clock {} has level {l}",
                                    a.clock(z).name
                                ),
                            );
                        } else if l == k {
                            top += 1;
                        } else if !a.is_main(z) {
                            push(
                                name.clone(),
                                format!(
                                    "guard outside C(X_{k}, X_<{k}): auxiliary clock {} of a lower level",
                                    a.clock(z).name
                                ),
                            );
                        }
                    }
                    if top > 1 {
                        push(
                            name.clone(),
                            format!(
                                "guard atom uses {top} clocks of level {k}, at most one allowed"
                            ),
                        );
                    }
                }
                GuardAtom::Diff { left, right, .. } => {
                    if a.clock_level(*left) != k || a.clock_level(*right) != k {
                        push(
                            name.clone(),
                            format!(
                                "guard outside C(X_{k}, X_<{k}): clock difference not at level {k}"
                            ),
                        );
                    }
                }
            }
        }

        for (z, rhs) in &tr.update {
            let i = a.clock_level(*z);
            let zname = &a.clock(*z).name;
            if i > k {
                push(
                    name.clone(),
                    format!("update of {zname} at level {i} above the source level {k}"),
                );
                continue;
            }
            let resets = k > k2 && i > k2;
            match rhs {
                UpdateRhs::Linear(e) => {
                    if resets && !e.is_zero() {
                        push(
                            name.clone(),
                            format!(
                                "clock {zname} of level {i} must be reset to 0 on a level decrease"
                            ),
                        );
                    }
                    if e.as_clock() == Some(*z) {
                        continue;
                    }
                    for y in e.clocks() {
                        if !(a.is_main(y) && a.clock_level(y) < i) {
                            push(
                                name.clone(),
                                format!(
                                    "update of {zname} may only use main clocks of levels below {i}, found {}",
                                    a.clock(y).name
                                ),
                            );
                        }
                    }
                }
                UpdateRhs::Copy(y) => {
                    if resets {
                        push(
                            name.clone(),
                            format!(
                                "clock {zname} of level {i} must be reset to 0 on a level decrease"
                            ),
                        );
                    }
                    if *y == *z {
                        continue;
                    }
                    let same_level = a.clock_level(*y) == i;
                    let aux_target = a.clock(*z).kind == ClockKind::Aux;
                    if !same_level || !(aux_target || (i == k && k == k2)) {
                        push(
                            name.clone(),
                            format!(
                                "copy restriction: {zname} := {} is not allowed",
                                a.clock(*y).name
                            ),
                        );
                    }
                }
            }
        }
    }

    Report {
        violations: out,
        plain_ita: a.params.is_empty(),
    }
}
