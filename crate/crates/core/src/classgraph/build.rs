use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};

use indexmap::IndexSet;

use crate::model::{Automaton, StateId, TransitionId};
use crate::semantics::{AbstractPath, PathStep};

use super::{Class, ClassError, Layout};

#[derive(Clone, Debug)]
pub struct BuildOptions {
    pub cap: usize,
    /// When set, successors in other states are not explored.
    pub states: Option<BTreeSet<StateId>>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            cap: 1_000_000,
            states: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeLabel {
    Time,
    Fire(TransitionId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub from: usize,
    pub label: EdgeLabel,
    pub to: usize,
}

/// Classes reachable from the initial class; class 0 is initial.
#[derive(Clone, Debug, Default)]
pub struct ClassAutomaton {
    /// Indexed in construction order.
    pub classes: IndexSet<Class>,
    pub edges: Vec<Edge>,
    parent: Vec<Option<(usize, EdgeLabel)>>,
    /// False when construction stopped at the first class of interest.
    pub complete: bool,
}

impl ClassAutomaton {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    pub fn find(&self, c: &Class) -> Option<usize> {
        self.classes.get_index_of(c)
    }

    fn intern(&mut self, c: Class, parent: Option<(usize, EdgeLabel)>) -> (usize, bool) {
        let (i, new) = self.classes.insert_full(c);
        if new {
            self.parent.push(parent);
        }
        (i, new)
    }

    pub fn out_edges(&self, i: usize) -> impl Iterator<Item = &Edge> {
        self.edges.iter().filter(move |e| e.from == i)
    }

    /// The time successor recorded for a class.
    pub fn time_succ(&self, i: usize) -> Option<usize> {
        self.out_edges(i)
            .find(|e| e.label == EdgeLabel::Time)
            .map(|e| e.to)
    }

    pub fn states(&self) -> BTreeSet<StateId> {
        self.classes.iter().map(|c| c.state).collect()
    }

    pub fn first_in(&self, targets: &[StateId]) -> Option<usize> {
        self.classes.iter().position(|c| targets.contains(&c.state))
    }

    /// Edge labels along the BFS tree from the initial class.
    pub fn labels_to(&self, i: usize) -> Vec<EdgeLabel> {
        let mut out = Vec::new();
        let mut cur = i;
        while let Some((p, l)) = self.parent[cur] {
            out.push(l);
            cur = p;
        }
        out.reverse();
        out
    }

    /// BFS-tree path to a class; consecutive time steps are merged.
    pub fn path_to(&self, i: usize) -> AbstractPath {
        let mut steps = Vec::new();
        for l in self.labels_to(i) {
            match l {
                EdgeLabel::Time => {
                    if steps.last() != Some(&PathStep::Delay) {
                        steps.push(PathStep::Delay);
                    }
                }
                EdgeLabel::Fire(t) => steps.push(PathStep::Fire(t)),
            }
        }
        AbstractPath(steps)
    }

    /// `--dump-classes` listing in construction order.
    pub fn lines(&self, layout: &Layout<'_>) -> Vec<String> {
        let mut out = Vec::new();
        for (i, c) in self.classes.iter().enumerate() {
            let chains = layout.describe(c);
            out.push(format!(
                "R{i} {} | {}",
                layout.a.state(c.state).name,
                chains.join(" | ")
            ));
        }
        for e in &self.edges {
            let label = match e.label {
                EdgeLabel::Time => "time".to_string(),
                EdgeLabel::Fire(t) => layout.a.transition_name(t),
            };
            out.push(format!("R{} -> R{} [{label}]", e.from, e.to));
        }
        out
    }
}

pub fn build(layout: &Layout<'_>) -> Result<ClassAutomaton, ClassError> {
    build_with(layout, BuildOptions::default(), |_| false).map(|(ca, _)| ca)
}

/// Breadth-first construction. Stops early, returning the class id, as soon
/// as a class satisfying `stop` is discovered.
pub fn build_with<F: FnMut(&Class) -> bool>(
    layout: &Layout<'_>,
    opts: BuildOptions,
    mut stop: F,
) -> Result<(ClassAutomaton, Option<usize>), ClassError> {
    let mut ca = ClassAutomaton::default();
    let init = layout.initial_class()?;
    let hit = stop(&init);
    ca.intern(init, None);
    if hit {
        return Ok((ca, Some(0)));
    }
    let mut queue = VecDeque::from([0usize]);
    while let Some(i) = queue.pop_front() {
        let c = ca.classes[i].clone();
        let mut succs: Vec<(EdgeLabel, Class)> = vec![(EdgeLabel::Time, layout.time_successor(&c))];
        for t in layout.a.outgoing(c.state) {
            if layout.firable(&c, t) {
                succs.push((EdgeLabel::Fire(t), layout.discrete_successor(&c, t)?));
            }
        }
        for (label, s) in succs {
            if opts
                .states
                .as_ref()
                .is_some_and(|keep| !keep.contains(&s.state))
            {
                continue;
            }
            let hit = stop(&s);
            let (j, new) = ca.intern(s, Some((i, label)));
            ca.edges.push(Edge {
                from: i,
                label,
                to: j,
            });
            if new {
                if ca.classes.len() > opts.cap {
                    return Err(ClassError::CapExceeded(opts.cap));
                }
                if hit {
                    return Ok((ca, Some(j)));
                }
                queue.push_back(j);
            }
        }
    }
    ca.complete = true;
    Ok((ca, None))
}

/// Untimed words of length at most `max_len` labelling paths from the
/// initial class to a class of an accepting state. Time steps and epsilon
/// transitions read nothing.
pub fn untimed_words(ca: &ClassAutomaton, a: &Automaton, max_len: usize) -> BTreeSet<Vec<String>> {
    let mut out = BTreeSet::new();
    let mut seen: HashSet<(usize, Vec<String>)> = HashSet::new();
    let mut stack = vec![(0usize, Vec::<String>::new())];
    while let Some((i, w)) = stack.pop() {
        if !seen.insert((i, w.clone())) {
            continue;
        }
        if a.state(ca.classes[i].state).accepting {
            out.insert(w.clone());
        }
        for e in ca.out_edges(i) {
            let mut next = w.clone();
            if let EdgeLabel::Fire(t) = e.label {
                if let Some(l) = &a.transition(t).label {
                    if w.len() == max_len {
                        continue;
                    }
                    next.push(l.clone());
                }
            }
            stack.push((e.to, next));
        }
    }
    out
}

/// Whether the abstract path can be followed from the initial class, with
/// `Delay` standing for any number (possibly zero) of time steps.
pub fn abstract_path_exists(ca: &ClassAutomaton, path: &AbstractPath) -> bool {
    let mut succ: HashMap<(usize, EdgeLabel), Vec<usize>> = HashMap::new();
    for e in &ca.edges {
        succ.entry((e.from, e.label)).or_default().push(e.to);
    }
    let mut cur: BTreeSet<usize> = BTreeSet::from([0]);
    for step in &path.0 {
        let mut next = BTreeSet::new();
        match step {
            PathStep::Delay => {
                let mut stack: Vec<usize> = cur.iter().copied().collect();
                next = cur.clone();
                while let Some(i) = stack.pop() {
                    for &j in succ.get(&(i, EdgeLabel::Time)).into_iter().flatten() {
                        if next.insert(j) {
                            stack.push(j);
                        }
                    }
                }
            }
            PathStep::Fire(t) => {
                for &i in &cur {
                    next.extend(succ.get(&(i, EdgeLabel::Fire(*t))).into_iter().flatten());
                }
            }
        }
        if next.is_empty() {
            return false;
        }
        cur = next;
    }
    true
}
