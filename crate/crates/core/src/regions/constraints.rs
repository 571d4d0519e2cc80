use std::fmt;

use num_traits::{Signed, Zero};

use crate::arith::{fmt_rational, Polynomial, Rational};
use crate::model::CmpOp;

/// `poly op 0` over the parameters.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PolyAtom {
    pub poly: Polynomial,
    pub op: CmpOp,
}

impl PolyAtom {
    pub fn new(poly: Polynomial, op: CmpOp) -> Self {
        PolyAtom { poly, op }
    }

    pub fn holds(&self, point: &[Rational]) -> bool {
        self.op.holds(self.poly.eval(point).cmp(&Rational::zero()))
    }

    /// Truth value when the polynomial is constant.
    pub fn constant_truth(&self) -> Option<bool> {
        self.poly
            .constant_value()
            .map(|c| self.op.holds(c.cmp(&Rational::zero())))
    }

    pub fn display<'a>(&'a self, params: &'a [String]) -> impl fmt::Display + 'a {
        AtomDisplay { atom: self, params }
    }

    pub fn to_smt(&self, params: &[String]) -> String {
        let rel = match self.op {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        };
        format!("({rel} {} 0.0)", poly_to_smt(&self.poly, params))
    }
}

struct AtomDisplay<'a> {
    atom: &'a PolyAtom,
    params: &'a [String],
}

impl fmt::Display for AtomDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} 0",
            self.atom.poly.display(self.params),
            self.atom.op
        )
    }
}

/// Quantifier-free formula over parameter atoms. `Smt` carries raw solver
/// text that only an external solver can interpret.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Formula {
    True,
    False,
    Atom(PolyAtom),
    And(Vec<Formula>),
    Or(Vec<Formula>),
    Not(Box<Formula>),
    Smt(String),
}

impl Formula {
    /// `None` when the formula contains raw solver text.
    pub fn eval(&self, point: &[Rational]) -> Option<bool> {
        Some(match self {
            Formula::True => true,
            Formula::False => false,
            Formula::Atom(a) => a.holds(point),
            Formula::And(fs) => {
                let mut all = true;
                for f in fs {
                    all &= f.eval(point)?;
                }
                all
            }
            Formula::Or(fs) => {
                let mut any = false;
                for f in fs {
                    any |= f.eval(point)?;
                }
                any
            }
            Formula::Not(f) => !f.eval(point)?,
            Formula::Smt(_) => return None,
        })
    }

    pub fn is_raw(&self) -> bool {
        match self {
            Formula::Smt(_) => true,
            Formula::And(fs) | Formula::Or(fs) => fs.iter().any(Formula::is_raw),
            Formula::Not(f) => f.is_raw(),
            _ => false,
        }
    }

    /// The atoms of a pure conjunction, if it is one.
    pub fn conjuncts(&self) -> Option<Vec<PolyAtom>> {
        match self {
            Formula::True => Some(Vec::new()),
            Formula::Atom(a) => Some(vec![a.clone()]),
            Formula::And(fs) => {
                let mut out = Vec::new();
                for f in fs {
                    out.extend(f.conjuncts()?);
                }
                Some(out)
            }
            _ => None,
        }
    }

    pub fn to_smt(&self, params: &[String]) -> String {
        match self {
            Formula::True => "true".into(),
            Formula::False => "false".into(),
            Formula::Atom(a) => a.to_smt(params),
            Formula::And(fs) if fs.is_empty() => "true".into(),
            Formula::Or(fs) if fs.is_empty() => "false".into(),
            Formula::And(fs) => format!("(and {})", join_smt(fs, params)),
            Formula::Or(fs) => format!("(or {})", join_smt(fs, params)),
            Formula::Not(f) => format!("(not {})", f.to_smt(params)),
            Formula::Smt(text) => text.clone(),
        }
    }

    pub fn display<'a>(&'a self, params: &'a [String]) -> impl fmt::Display + 'a {
        FormulaDisplay { f: self, params }
    }
}

fn join_smt(fs: &[Formula], params: &[String]) -> String {
    fs.iter()
        .map(|f| f.to_smt(params))
        .collect::<Vec<_>>()
        .join(" ")
}

struct FormulaDisplay<'a> {
    f: &'a Formula,
    params: &'a [String],
}

impl fmt::Display for FormulaDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.params;
        match self.f {
            Formula::True => write!(f, "true"),
            Formula::False => write!(f, "false"),
            Formula::Atom(a) => write!(f, "{}", a.display(p)),
            Formula::And(fs) | Formula::Or(fs) => {
                let sep = if matches!(self.f, Formula::And(_)) {
                    " and "
                } else {
                    " or "
                };
                if fs.is_empty() {
                    return write!(f, "{}", if sep == " and " { "true" } else { "false" });
                }
                write!(f, "(")?;
                for (i, g) in fs.iter().enumerate() {
                    if i > 0 {
                        write!(f, "{sep}")?;
                    }
                    write!(f, "{}", g.display(p))?;
                }
                write!(f, ")")
            }
            Formula::Not(g) => write!(f, "not {}", g.display(p)),
            Formula::Smt(text) => write!(f, "smt {text}"),
        }
    }
}

/// Conjunction of polynomial atoms plus an optional scope formula.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct ConstraintSystem {
    pub atoms: Vec<PolyAtom>,
    pub scope: Option<Formula>,
}

impl ConstraintSystem {
    /// Repeated atoms are dropped.
    pub fn new(mut atoms: Vec<PolyAtom>, scope: Option<Formula>) -> Self {
        let mut seen = std::collections::HashSet::new();
        atoms.retain(|a| seen.insert(a.clone()));
        ConstraintSystem { atoms, scope }
    }

    /// Exact membership test; `None` when the scope has raw solver text.
    pub fn holds_at(&self, point: &[Rational]) -> Option<bool> {
        if !self.atoms.iter().all(|a| a.holds(point)) {
            return Some(false);
        }
        match &self.scope {
            Some(f) => f.eval(point),
            None => Some(true),
        }
    }

    pub fn has_equalities(&self) -> bool {
        self.atoms.iter().any(|a| a.op == CmpOp::Eq)
    }

    /// True when every atom is strict (`<`, `>`) and there is no scope.
    pub fn all_strict(&self) -> bool {
        self.scope.is_none()
            && self
                .atoms
                .iter()
                .all(|a| matches!(a.op, CmpOp::Lt | CmpOp::Gt))
    }

    /// One line per atom, then the scope.
    pub fn lines(&self, params: &[String]) -> Vec<String> {
        let mut out: Vec<String> = self
            .atoms
            .iter()
            .map(|a| a.display(params).to_string())
            .collect();
        if let Some(s) = &self.scope {
            out.push(format!("scope {}", s.display(params)));
        }
        out
    }

    pub fn to_smt(&self, params: &[String]) -> String {
        let mut parts: Vec<String> = self.atoms.iter().map(|a| a.to_smt(params)).collect();
        if let Some(s) = &self.scope {
            parts.push(s.to_smt(params));
        }
        match parts.len() {
            0 => "true".into(),
            1 => parts.pop().unwrap_or_default(),
            _ => format!("(and {})", parts.join(" ")),
        }
    }
}

pub fn smt_name(name: &str) -> String {
    format!("|{name}|")
}

fn rational_to_smt(q: &Rational) -> String {
    let mag = q.abs();
    let body = if mag.is_integer() {
        format!("{}.0", mag.numer())
    } else {
        format!("(/ {}.0 {}.0)", mag.numer(), mag.denom())
    };
    if q.is_negative() {
        format!("(- {body})")
    } else {
        body
    }
}

pub fn poly_to_smt(p: &Polynomial, params: &[String]) -> String {
    if p.is_zero() {
        return "0.0".into();
    }
    let terms: Vec<String> = p
        .terms()
        .map(|(m, c)| {
            let mut factors = Vec::new();
            if m.is_one() || *c != Rational::from_integer(1.into()) {
                factors.push(rational_to_smt(c));
            }
            for (i, &e) in m.exponents().iter().enumerate() {
                for _ in 0..e {
                    factors.push(smt_name(&params[i]));
                }
            }
            if factors.len() == 1 {
                factors.pop().unwrap_or_default()
            } else {
                format!("(* {})", factors.join(" "))
            }
        })
        .collect();
    if terms.len() == 1 {
        terms.into_iter().next().unwrap_or_default()
    } else {
        format!("(+ {})", terms.join(" "))
    }
}

/// Writes a point as `p1 = 5, p2 = -1`.
pub fn fmt_point(point: &[Rational], params: &[String]) -> String {
    params
        .iter()
        .zip(point)
        .map(|(n, v)| format!("{n} = {}", fmt_rational(v)))
        .collect::<Vec<_>>()
        .join(", ")
}
