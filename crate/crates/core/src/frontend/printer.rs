use std::fmt::Write as _;

use crate::arith::PolyRegistry;
use crate::model::{Automaton, ClockExpr, ClockKind, GuardAtom, Names, Policy, UpdateRhs};

/// `clock part op -constant`, or `constant op 0` without clocks.
fn guard_text(expr: &ClockExpr, op: &str, names: &Names<'_>) -> String {
    if expr.is_constant() {
        return format!("{} {op} 0", expr.display(names));
    }
    let clocks = ClockExpr::from_parts(
        expr.coeffs().iter().map(|(z, c)| (*z, c.clone())),
        crate::arith::RationalFunction::zero(),
    );
    let rhs = ClockExpr::constant(expr.constant_term().neg());
    format!("{} {op} {}", clocks.display(names), rhs.display(names))
}

/// Prints a model in the `.pita` format; `parse_model` reads it back.
pub fn print_model(a: &Automaton) -> String {
    let reg = PolyRegistry::new();
    let names = a.names(&reg);
    let mut out = String::from("pita {\n");
    if !a.params.is_empty() {
        let _ = writeln!(out, "  params {};", a.params.join(" "));
    }
    let _ = writeln!(out, "  levels {};", a.levels);
    for l in 1..=a.levels {
        let mut parts = Vec::new();
        if let Some(m) = a.main_clock(l) {
            parts.push(format!("main {};", a.clock(m).name));
        }
        let aux: Vec<&str> = a
            .clocks
            .iter()
            .filter(|c| c.level == l && c.kind == ClockKind::Aux)
            .map(|c| c.name.as_str())
            .collect();
        if !aux.is_empty() {
            parts.push(format!("aux {};", aux.join(" ")));
        }
        let _ = writeln!(out, "  level {l} {{ {} }}", parts.join(" "));
    }
    for s in &a.states {
        let mut line = format!("  state {} level {}", s.name, s.level);
        if Some(s.active) != a.main_clock(s.level) {
            let _ = write!(line, " active {}", a.clock(s.active).name);
        }
        if s.initial {
            line.push_str(" init");
        }
        if s.accepting {
            line.push_str(" final");
        }
        match s.policy {
            Policy::Lazy => {}
            Policy::Urgent => line.push_str(" urgent"),
            Policy::Delayed => line.push_str(" delayed"),
        }
        let _ = writeln!(out, "{line};");
    }
    for tr in &a.transitions {
        let mut line = format!(
            "  trans {} -> {}",
            a.state(tr.source).name,
            a.state(tr.target).name
        );
        if let Some(l) = &tr.label {
            let _ = write!(line, " on {l}");
        }
        if !tr.guard.is_empty() {
            let atoms: Vec<String> = tr
                .guard
                .iter()
                .map(|g| match g {
                    GuardAtom::Linear { expr, op } => guard_text(expr, op.symbol(), &names),
                    GuardAtom::Diff { left, right, op } => {
                        format!("{} {op} {}", a.clock(*left).name, a.clock(*right).name)
                    }
                })
                .collect();
            let _ = write!(line, " when {}", atoms.join(" and "));
        }
        if !tr.update.is_empty() {
            let ups: Vec<String> = tr
                .update
                .iter()
                .map(|(z, rhs)| {
                    let v = match rhs {
                        UpdateRhs::Linear(e) => e.display(&names).to_string(),
                        UpdateRhs::Copy(y) => a.clock(*y).name.clone(),
                    };
                    format!("{} := {v}", a.clock(*z).name)
                })
                .collect();
            let _ = write!(line, " do {}", ups.join(", "));
        }
        let _ = writeln!(out, "{line};");
    }
    out.push_str("}\n");
    out
}
