use super::{Automaton, Clock, ClockId, ClockKind, GuardAtom, Policy, UpdateRhs};
use crate::model::CmpOp;

/// Replaces urgent/delayed annotations by one fresh auxiliary clock per
/// affected level: entering such a state from the same or a higher level
/// copies its active clock into the auxiliary clock, and its outgoing edges
/// compare the two (`=` for urgent, `<` for delayed).
pub fn desugar_policies(a: &Automaton) -> Automaton {
    let mut out = a.clone();
    let mut aux: Vec<Option<ClockId>> = vec![None; a.levels + 1];
    for s in &a.states {
        if s.policy != Policy::Lazy && aux[s.level].is_none() {
            let mut name = format!("y{}", s.level);
            while out.clocks.iter().any(|c| c.name == name) {
                name.insert(0, '_');
            }
            out.clocks.push(Clock {
                name,
                level: s.level,
                kind: ClockKind::Aux,
            });
            aux[s.level] = Some(ClockId(out.clocks.len() - 1));
        }
    }
    for tr in &mut out.transitions {
        let target = &a.states[tr.target.0];
        let source = &a.states[tr.source.0];
        if target.policy != Policy::Lazy && source.level >= target.level {
            let y = aux[target.level].expect("aux clock allocated");
            // value of the active clock after the update
            let rhs = match tr.update.get(&target.active) {
                Some(r) => r.clone(),
                None => UpdateRhs::Copy(target.active),
            };
            tr.update.insert(y, rhs);
        }
        match source.policy {
            Policy::Lazy => {}
            Policy::Urgent | Policy::Delayed => {
                let y = aux[source.level].expect("aux clock allocated");
                let op = if source.policy == Policy::Urgent {
                    CmpOp::Eq
                } else {
                    CmpOp::Lt
                };
                tr.guard.push(GuardAtom::Diff {
                    left: y,
                    right: source.active,
                    op,
                });
            }
        }
    }
    for s in &mut out.states {
        s.policy = Policy::Lazy;
    }
    out
}
