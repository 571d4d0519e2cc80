use crate::arith::{Rational, Sign, SignAssignment};
use crate::exprsets::ExprSet;
use crate::model::{Automaton, CmpOp};

use super::{
    check_nonempty, compare_functions, region_constants, region_constraints, sign_op, Backend,
    Cleared, ConstraintSystem, Emptiness, Formula, ParamRegion, PolyAtom, RegionError,
};

#[derive(Clone, Debug, Default)]
pub struct EnumOptions {
    pub open_only: bool,
    pub scope: Option<Formula>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EnumStats {
    pub nodes: usize,
    pub witness_hits: usize,
    pub pruned_unsat: usize,
    pub pruned_unknown: usize,
    pub regions: usize,
}

impl EnumStats {
    /// Some branch was dropped without proof that it is empty.
    pub fn incomplete(&self) -> bool {
        self.pruned_unknown > 0
    }
}

#[derive(Clone, Debug)]
struct Node {
    signs: Vec<Sign>,
    blocks: Vec<Vec<usize>>,
    placed: usize,
    atoms: Vec<PolyAtom>,
    /// Inherited from the parent until this node is checked.
    witness: Option<Vec<Rational>>,
    unknown: bool,
    checked: bool,
}

/// Depth-first, lazily checked enumeration of non-empty regions.
pub struct RegionEnumerator<'a> {
    a: &'a Automaton,
    e: &'a ExprSet,
    backend: &'a mut Backend,
    opts: EnumOptions,
    stack: Vec<Node>,
    pub stats: EnumStats,
}

pub fn enumerate_regions<'a>(
    a: &'a Automaton,
    e: &'a ExprSet,
    backend: &'a mut Backend,
    opts: EnumOptions,
) -> RegionEnumerator<'a> {
    let root = Node {
        signs: Vec::new(),
        blocks: Vec::new(),
        placed: 0,
        atoms: Vec::new(),
        witness: None,
        unknown: false,
        checked: false,
    };
    RegionEnumerator {
        a,
        e,
        backend,
        opts,
        stack: vec![root],
        stats: EnumStats::default(),
    }
}

impl RegionEnumerator<'_> {
    fn system(&self, node: &Node) -> ConstraintSystem {
        ConstraintSystem::new(node.atoms.clone(), self.opts.scope.clone())
    }

    /// Updates the node's witness; false when the node is pruned.
    fn check(&mut self, node: &mut Node) -> Result<bool, RegionError> {
        self.stats.nodes += 1;
        let cs = self.system(node);
        if let Some(w) = &node.witness {
            if cs.holds_at(w) == Some(true) {
                self.stats.witness_hits += 1;
                return Ok(true);
            }
        }
        match check_nonempty(&cs, self.backend, self.a.params.len())? {
            Emptiness::Sat(w) => {
                node.witness = w;
                Ok(true)
            }
            Emptiness::Unsat => {
                self.stats.pruned_unsat += 1;
                Ok(false)
            }
            Emptiness::Unknown if self.backend.is_complete() => {
                node.witness = None;
                node.unknown = true;
                Ok(true)
            }
            Emptiness::Unknown => {
                self.stats.pruned_unknown += 1;
                Ok(false)
            }
        }
    }

    /// Checks the children of `parent` together: one query asks for a point
    /// in the union of the pending children, and a model settles every
    /// child it satisfies. Children that remain undecided (no exact model,
    /// or an unknown answer) are checked one by one. Order is preserved.
    fn classify(&mut self, parent: &Node, mut kids: Vec<Node>) -> Result<Vec<Node>, RegionError> {
        let base = parent.atoms.len();
        let mut status: Vec<Option<bool>> = vec![None; kids.len()];
        let scope = self.opts.scope.clone();
        if let Some(w) = &parent.witness {
            self.stats.witness_hits += settle(&mut kids, &mut status, w, scope.as_ref());
        }
        loop {
            let pending: Vec<usize> = (0..kids.len()).filter(|&i| status[i].is_none()).collect();
            if pending.len() < 2 {
                break;
            }
            let union = Formula::Or(
                pending
                    .iter()
                    .map(|&i| {
                        Formula::And(
                            kids[i].atoms[base..]
                                .iter()
                                .cloned()
                                .map(Formula::Atom)
                                .collect(),
                        )
                    })
                    .collect(),
            );
            let query = match &scope {
                Some(s) => Formula::And(vec![s.clone(), union]),
                None => union,
            };
            let cs = ConstraintSystem::new(parent.atoms.clone(), Some(query));
            match check_nonempty(&cs, self.backend, self.a.params.len())? {
                Emptiness::Unsat => {
                    for &i in &pending {
                        status[i] = Some(false);
                    }
                }
                Emptiness::Sat(Some(w)) => {
                    if settle(&mut kids, &mut status, &w, scope.as_ref()) == 0 {
                        break;
                    }
                }
                _ => break,
            }
        }
        let mut out = Vec::new();
        for (mut k, st) in kids.into_iter().zip(status) {
            self.stats.nodes += 1;
            let keep = match st {
                Some(true) => true,
                Some(false) => {
                    self.stats.pruned_unsat += 1;
                    false
                }
                None => {
                    self.stats.nodes -= 1;
                    self.check(&mut k)?
                }
            };
            if keep {
                k.checked = true;
                out.push(k);
            }
        }
        Ok(out)
    }

    fn children(&self, node: &Node) -> Result<Vec<Node>, RegionError> {
        let reg = &self.e.registry;
        let mut out = Vec::new();
        if node.signs.len() < reg.len() {
            let i = node.signs.len();
            let choices: &[Sign] = if self.opts.open_only {
                &[Sign::Negative, Sign::Positive]
            } else {
                &[Sign::Negative, Sign::Zero, Sign::Positive]
            };
            for &s in choices {
                let mut child = node.clone();
                child.signs.push(s);
                child
                    .atoms
                    .push(PolyAtom::new(reg.get(i).clone(), sign_op(s)));
                out.push(child);
            }
            return Ok(out);
        }
        let sigma = SignAssignment::new(node.signs.clone());
        let consts = region_constants(self.a, self.e, &sigma);
        let Some(&c) = consts.get(node.placed) else {
            return Ok(out);
        };
        let value = |i: usize| self.e.get(1, i).constant_term().clone();
        let f = value(c);
        let nb = node.blocks.len();
        // positions in increasing order: new block before block b, then join b
        for pos in 0..=nb {
            let mut atoms = Vec::new();
            let mut ok = true;
            if pos > 0 {
                ok &= add(
                    &mut atoms,
                    compare_functions(
                        &f,
                        &value(node.blocks[pos - 1][0]),
                        CmpOp::Gt,
                        &sigma,
                        self.e,
                    )?,
                );
            }
            if pos < nb {
                ok &= add(
                    &mut atoms,
                    compare_functions(&f, &value(node.blocks[pos][0]), CmpOp::Lt, &sigma, self.e)?,
                );
            }
            if ok {
                let mut child = node.clone();
                child.blocks.insert(pos, vec![c]);
                child.placed += 1;
                child.atoms.extend(atoms);
                out.push(child);
            }
            if pos < nb && !self.opts.open_only {
                let mut atoms = Vec::new();
                if add(
                    &mut atoms,
                    compare_functions(&f, &value(node.blocks[pos][0]), CmpOp::Eq, &sigma, self.e)?,
                ) {
                    let mut child = node.clone();
                    child.blocks[pos].push(c);
                    child.placed += 1;
                    child.atoms.extend(atoms);
                    out.push(child);
                }
            }
        }
        Ok(out)
    }

    fn is_complete(&self, node: &Node) -> bool {
        if node.signs.len() < self.e.registry.len() {
            return false;
        }
        let sigma = SignAssignment::new(node.signs.clone());
        node.placed == region_constants(self.a, self.e, &sigma).len()
    }

    fn next_region(&mut self) -> Result<Option<ParamRegion>, RegionError> {
        while let Some(mut node) = self.stack.pop() {
            if !node.checked && !self.check(&mut node)? {
                continue;
            }
            if self.is_complete(&node) {
                let signs = SignAssignment::new(node.signs.clone());
                let system =
                    region_constraints(&signs, &node.blocks, self.e, self.opts.scope.as_ref())?;
                self.stats.regions += 1;
                return Ok(Some(ParamRegion {
                    signs,
                    order1: node.blocks,
                    open_only: self.opts.open_only,
                    system,
                    witness: node.witness,
                    unknown: node.unknown,
                }));
            }
            let kids = self.children(&node)?;
            let mut kids = self.classify(&node, kids)?;
            kids.reverse();
            self.stack.extend(kids);
        }
        Ok(None)
    }
}

/// Marks the undecided children containing `w` as non-empty.
fn settle(
    kids: &mut [Node],
    status: &mut [Option<bool>],
    w: &[Rational],
    scope: Option<&Formula>,
) -> usize {
    let mut n = 0;
    for (k, st) in kids.iter_mut().zip(status.iter_mut()) {
        if st.is_none()
            && ConstraintSystem::new(k.atoms.clone(), scope.cloned()).holds_at(w) == Some(true)
        {
            *st = Some(true);
            k.witness = Some(w.to_vec());
            k.checked = true;
            n += 1;
        }
    }
    n
}

/// Appends the atom; false when the comparison is decided false.
fn add(atoms: &mut Vec<PolyAtom>, c: Cleared) -> bool {
    match c {
        Cleared::Decided(v) => v,
        Cleared::Atom(a) => {
            atoms.push(a);
            true
        }
    }
}

impl Iterator for RegionEnumerator<'_> {
    type Item = Result<ParamRegion, RegionError>;

    fn next(&mut self) -> Option<Self::Item> {
        match self.next_region() {
            Ok(Some(r)) => Some(Ok(r)),
            Ok(None) => None,
            Err(err) => {
                self.stack.clear();
                Some(Err(err))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arith::{int, Polynomial, RationalFunction};
    use crate::exprsets::saturate;
    use crate::model::{AutomatonBuilder, ClockExpr, GuardAtom};

    #[test]
    fn plain_ita_has_one_region() {
        let mut b = AutomatonBuilder::new(1);
        let x = b.main(1);
        let q0 = b.state("q0", 1);
        let q1 = b.state("q1", 1);
        b.transition(
            q0,
            q1,
            None,
            vec![crate::model::linear_atom(
                &[(x, int(1))],
                int(-3),
                CmpOp::Lt,
            )],
            vec![],
        );
        let a = b.build();
        let e = saturate(&a).unwrap();
        let mut be = Backend::builtin(&a.params);
        let regions: Vec<_> = enumerate_regions(&a, &e, &mut be, EnumOptions::default())
            .collect::<Result<_, _>>()
            .unwrap();
        assert_eq!(regions.len(), 1);
        // {0} < {3}
        assert_eq!(regions[0].order1.len(), 2);
        assert_eq!(be.queries(), 0);
    }

    /// Guard `p1 * x1 - 1 < 0`: PolPar = {p1}; E_1 gains comp -1 and
    /// compnorm 1/p1. Open regions by hand, smallest 1/p1 first:
    /// -1 < p1 < 0, p1 < -1, p1 > 0.
    #[test]
    fn open_regions_of_a_single_lead() {
        let mut b = AutomatonBuilder::new(1).params(&["p1"]);
        let x = b.main(1);
        let q0 = b.state("q0", 1);
        let q1 = b.state("q1", 1);
        let p1 = RationalFunction::from_poly(Polynomial::var(0));
        let expr = ClockExpr::from_parts([(x, p1)], RationalFunction::from_int(-1));
        b.transition(
            q0,
            q1,
            None,
            vec![GuardAtom::Linear {
                expr,
                op: CmpOp::Lt,
            }],
            vec![],
        );
        let a = b.build();
        let e = saturate(&a).unwrap();
        assert_eq!(e.registry.len(), 1);
        let mut be = Backend::builtin(&a.params);
        let opts = EnumOptions {
            open_only: true,
            scope: None,
        };
        let regions: Vec<_> = enumerate_regions(&a, &e, &mut be, opts)
            .collect::<Result<_, _>>()
            .unwrap();
        let signs: Vec<_> = regions.iter().map(|r| r.signs.signs()[0]).collect();
        assert_eq!(signs, vec![Sign::Negative, Sign::Negative, Sign::Positive]);
        for (r, v) in regions.iter().zip([(-1, 2), (-2, 1), (1, 1)]) {
            assert_eq!(
                r.system.holds_at(&[crate::arith::rat(v.0, v.1)]),
                Some(true)
            );
        }
        assert!(regions.iter().all(|r| !r.system.has_equalities()));
        assert!(regions
            .iter()
            .all(|r| r.order1.iter().all(|b| b.len() == 1)));
    }
}
