use std::fmt::Write as _;

use super::{ClassAutomaton, EdgeLabel, Layout};

fn escape(s: &str) -> String {
    s.replace('\\', "\\\\").replace('"', "\\\"")
}

/// Deterministic DOT rendering; time edges are dashed.
pub fn export_dot(ca: &ClassAutomaton, layout: &Layout<'_>) -> String {
    let a = layout.a;
    let mut out = String::from(
        "digraph classes {\n  rankdir=LR;\n  node [shape=box, fontname=\"monospace\"];\n",
    );
    for (i, c) in ca.classes.iter().enumerate() {
        let mut label = a.state(c.state).name.clone();
        for chain in layout.describe(c) {
            label.push_str("\\n");
            label.push_str(&escape(&chain));
        }
        let style = if a.state(c.state).accepting {
            ", peripheries=2"
        } else {
            ""
        };
        let _ = writeln!(out, "  c{i} [label=\"{label}\"{style}];");
    }
    for e in &ca.edges {
        match e.label {
            EdgeLabel::Time => {
                let _ = writeln!(out, "  c{} -> c{} [style=dashed];", e.from, e.to);
            }
            EdgeLabel::Fire(t) => {
                let name = a
                    .transition(t)
                    .label
                    .clone()
                    .unwrap_or_else(|| "eps".into());
                let _ = writeln!(
                    out,
                    "  c{} -> c{} [label=\"{}\"];",
                    e.from,
                    e.to,
                    escape(&name)
                );
            }
        }
    }
    out.push_str("}\n");
    out
}
