//! Client for an external SMT-LIB solver running as a persistent
//! subprocess (quantifier-free nonlinear real arithmetic).

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::{Child, ChildStdin, ChildStdout, Command, Stdio};

use num_traits::Zero;

use crate::arith::{parse_rational, Rational};

use super::constraints::{smt_name, ConstraintSystem};
use super::{Emptiness, SolverError};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Sexp {
    Atom(String),
    List(Vec<Sexp>),
}

impl Sexp {
    fn as_atom(&self) -> Option<&str> {
        match self {
            Sexp::Atom(s) => Some(s),
            Sexp::List(_) => None,
        }
    }
}

/// Parses every complete s-expression of `text`.
pub fn parse_sexps(text: &str) -> Result<Vec<Sexp>, String> {
    let mut stack: Vec<Vec<Sexp>> = vec![Vec::new()];
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        match c {
            '(' => stack.push(Vec::new()),
            ')' => {
                let done = stack.pop().ok_or("unbalanced ')'")?;
                stack
                    .last_mut()
                    .ok_or("unbalanced ')'")?
                    .push(Sexp::List(done));
            }
            ';' => {
                for c in chars.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
            }
            '"' => {
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '"' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().ok_or("bad string")?.push(Sexp::Atom(s));
            }
            c if c.is_whitespace() => {}
            '|' => {
                let mut s = String::new();
                for c in chars.by_ref() {
                    if c == '|' {
                        break;
                    }
                    s.push(c);
                }
                stack.last_mut().ok_or("bad symbol")?.push(Sexp::Atom(s));
            }
            c => {
                let mut s = c.to_string();
                while let Some(&d) = chars.peek() {
                    if d.is_whitespace() || d == '(' || d == ')' {
                        break;
                    }
                    s.push(d);
                    chars.next();
                }
                stack.last_mut().ok_or("bad atom")?.push(Sexp::Atom(s));
            }
        }
    }
    if stack.len() != 1 {
        return Err("unbalanced '('".into());
    }
    Ok(stack.pop().unwrap_or_default())
}

/// Value of a model term: `Ok(None)` for algebraic numbers.
fn term_value(s: &Sexp) -> Result<Option<Rational>, String> {
    match s {
        Sexp::Atom(a) => {
            let t = a.trim_end_matches('?');
            parse_rational(t)
                .map(Some)
                .ok_or_else(|| format!("bad number {a}"))
        }
        Sexp::List(items) => {
            let head = items.first().and_then(Sexp::as_atom).unwrap_or("");
            match (head, items.len()) {
                ("-", 2) => Ok(term_value(&items[1])?.map(|v| -v)),
                ("/", 3) => {
                    let (n, d) = (term_value(&items[1])?, term_value(&items[2])?);
                    match (n, d) {
                        (Some(n), Some(d)) if !d.is_zero() => Ok(Some(n / d)),
                        (Some(_), Some(_)) => Err("division by zero in model".into()),
                        _ => Ok(None),
                    }
                }
                ("root-obj", _) => Ok(None),
                _ => Err(format!("unsupported model term {s:?}")),
            }
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SolverStats {
    pub queries: usize,
    pub sat: usize,
    pub unsat: usize,
    pub unknown: usize,
}

/// Launch arguments that put known solvers into interactive SMT-LIB mode.
fn launch_args(path: &Path) -> Vec<&'static str> {
    let stem = path
        .file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or_default();
    if stem.contains("cvc") {
        vec!["--lang=smt2", "--incremental", "--produce-models"]
    } else if stem.contains("yices") {
        vec!["--incremental"]
    } else {
        vec!["-in", "-smt2"]
    }
}

pub struct SmtSolver {
    path: PathBuf,
    child: Child,
    stdin: ChildStdin,
    stdout: BufReader<ChildStdout>,
    params: Vec<String>,
    /// Tried before the plain `check-sat`; z3's incremental core gives up on
    /// queries its nonlinear tactic decides at once.
    tactic: Option<String>,
    pub stats: SolverStats,
}

impl SmtSolver {
    pub fn spawn(path: &Path, params: &[String], timeout_ms: u64) -> Result<Self, SolverError> {
        let launch = |e: std::io::Error| SolverError::Launch(format!("{}: {e}", path.display()));
        let mut child = Command::new(path)
            .args(launch_args(path))
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::null())
            .spawn()
            .map_err(launch)?;
        let stdin = child
            .stdin
            .take()
            .ok_or_else(|| SolverError::Launch("no stdin".into()))?;
        let stdout = BufReader::new(
            child
                .stdout
                .take()
                .ok_or_else(|| SolverError::Launch("no stdout".into()))?,
        );
        let mut s = SmtSolver {
            path: path.to_path_buf(),
            child,
            stdin,
            stdout,
            params: params.to_vec(),
            tactic: None,
            stats: SolverStats::default(),
        };
        if s.is_z3() {
            s.tactic = Some(if timeout_ms > 0 {
                format!("(check-sat-using (try-for qfnra-nlsat {timeout_ms}))")
            } else {
                "(check-sat-using qfnra-nlsat)".to_string()
            });
        }
        let mut preamble =
            String::from("(set-option :print-success false)\n(set-option :produce-models true)\n");
        if timeout_ms > 0 && s.is_z3() {
            preamble.push_str(&format!("(set-option :timeout {timeout_ms})\n"));
        }
        preamble.push_str("(set-logic QF_NRA)\n");
        for p in params {
            preamble.push_str(&format!("(declare-const {} Real)\n", smt_name(p)));
        }
        s.send(&preamble)?;
        Ok(s)
    }

    fn is_z3(&self) -> bool {
        launch_args(&self.path) == ["-in", "-smt2"]
    }

    fn send(&mut self, text: &str) -> Result<(), SolverError> {
        self.stdin
            .write_all(text.as_bytes())
            .and_then(|_| self.stdin.flush())
            .map_err(|e| SolverError::Io(e.to_string()))
    }

    /// Reads one complete s-expression (or bare atom) from the solver.
    fn read_response(&mut self) -> Result<Sexp, SolverError> {
        let mut buf = String::new();
        let mut depth = 0i64;
        loop {
            let mut line = String::new();
            let n = self
                .stdout
                .read_line(&mut line)
                .map_err(|e| SolverError::Io(e.to_string()))?;
            if n == 0 {
                return Err(SolverError::Io("solver closed its output".into()));
            }
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with(';') {
                continue;
            }
            let mut in_str = false;
            for c in trimmed.chars() {
                match c {
                    '"' => in_str = !in_str,
                    '(' if !in_str => depth += 1,
                    ')' if !in_str => depth -= 1,
                    _ => {}
                }
            }
            buf.push_str(&line);
            if depth <= 0 {
                break;
            }
        }
        let mut items = parse_sexps(&buf).map_err(SolverError::Malformed)?;
        if items.len() != 1 {
            return Err(SolverError::Malformed(buf));
        }
        let item = items.pop().unwrap_or(Sexp::List(vec![]));
        if let Sexp::List(xs) = &item {
            if xs.first().and_then(Sexp::as_atom) == Some("error") {
                return Err(SolverError::Malformed(buf.trim().to_string()));
            }
        }
        Ok(item)
    }

    fn read_model(&mut self) -> Result<Vec<Option<Rational>>, SolverError> {
        let model = self.read_response()?;
        let mut values: Vec<Option<Rational>> = vec![Some(Rational::zero()); self.params.len()];
        let Sexp::List(items) = model else {
            return Err(SolverError::Malformed(format!("{model:?}")));
        };
        for item in items {
            let Sexp::List(def) = item else { continue };
            if def.first().and_then(Sexp::as_atom) != Some("define-fun") || def.len() != 5 {
                continue;
            }
            let name = def[1].as_atom().unwrap_or_default();
            if let Some(i) = self.params.iter().position(|p| p == name) {
                values[i] = term_value(&def[4]).map_err(SolverError::Malformed)?;
            }
        }
        Ok(values)
    }

    /// Decimal approximations of the current model.
    fn read_decimals(&mut self, digits: u32) -> Result<Option<Vec<Rational>>, SolverError> {
        if self.params.is_empty() {
            return Ok(Some(Vec::new()));
        }
        let names: Vec<String> = self.params.iter().map(|p| smt_name(p)).collect();
        self.send(&format!(
            "(set-option :pp.decimal true)\n(set-option :pp.decimal_precision {digits})\n(get-value ({}))\n(set-option :pp.decimal false)\n",
            names.join(" ")
        ))?;
        let resp = self.read_response()?;
        let Sexp::List(pairs) = resp else {
            return Err(SolverError::Malformed(format!("{resp:?}")));
        };
        let mut out = vec![Rational::zero(); self.params.len()];
        for pair in pairs {
            let Sexp::List(kv) = pair else { continue };
            if kv.len() != 2 {
                continue;
            }
            let name = kv[0].as_atom().unwrap_or_default();
            if let Some(i) = self.params.iter().position(|p| p == name) {
                match term_value(&kv[1]).map_err(SolverError::Malformed)? {
                    Some(v) => out[i] = v,
                    None => return Ok(None),
                }
            }
        }
        Ok(Some(out))
    }

    pub fn check(&mut self, cs: &ConstraintSystem) -> Result<Emptiness, SolverError> {
        self.stats.queries += 1;
        let body = cs.to_smt(&self.params);
        self.send(&format!("(push 1)\n(assert {body})\n"))?;
        let mut verdict = Sexp::Atom("unknown".into());
        if let Some(t) = self.tactic.clone() {
            self.send(&format!("{t}\n"))?;
            verdict = self.read_response()?;
        }
        if matches!(verdict.as_atom(), Some("unknown") | Some("timeout")) {
            self.send("(check-sat)\n")?;
            verdict = self.read_response()?;
        }
        let result = match verdict.as_atom() {
            Some("unsat") => {
                self.stats.unsat += 1;
                Emptiness::Unsat
            }
            Some("unknown") | Some("timeout") => {
                self.stats.unknown += 1;
                Emptiness::Unknown
            }
            Some("sat") => {
                self.stats.sat += 1;
                self.send("(get-model)\n")?;
                let model = self.read_model()?;
                let exact: Option<Vec<Rational>> = model.into_iter().collect();
                let witness = match exact {
                    Some(w) => Some(w),
                    None if cs.all_strict() && self.is_z3() => self.refine(cs)?,
                    None => None,
                };
                Emptiness::Sat(witness)
            }
            _ => {
                let _ = self.send("(pop 1)\n");
                return Err(SolverError::Malformed(format!("{verdict:?}")));
            }
        };
        self.send("(pop 1)\n")?;
        Ok(result)
    }

    /// An open set around an algebraic model contains nearby decimals;
    /// increases the precision until one of them satisfies every atom.
    fn refine(&mut self, cs: &ConstraintSystem) -> Result<Option<Vec<Rational>>, SolverError> {
        for digits in [10, 20, 40, 80] {
            if let Some(p) = self.read_decimals(digits)? {
                if cs.holds_at(&p) == Some(true) {
                    return Ok(Some(p));
                }
            }
        }
        Ok(None)
    }
}

impl Drop for SmtSolver {
    fn drop(&mut self) {
        let _ = self.send("(exit)\n");
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Path of the external solver: explicit choice, then `ITAVA_SMT_SOLVER`.
pub fn solver_path(explicit: Option<&Path>) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    std::env::var_os("ITAVA_SMT_SOLVER")
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}
