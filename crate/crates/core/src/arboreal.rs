//! Totient trees: upward growth from a candidate scoreboard value by
//! repeatedly taking totient fibers.
//!
//! A node `x` at height `k` stands for a possible value of `A(n, k)`. Its
//! children are the values `y = m - a_{k+1}` for `m` in the fiber of `x`,
//! kept when `0 < y <= b_{k+1}`. A child equal to 0 is a fruit at height
//! `k + 1`: it certifies `A(k + 1) = root`. Empty fibers prune from below and
//! the bound prunes from above.

use std::collections::{BTreeMap, HashSet};
use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::BoundProvider;
use crate::error::{Error, Result};
use crate::fiber::totient_fiber;
use crate::scoreboard::scoreboard_value;
use crate::sequence::IncrementSequence;

pub const DEFAULT_HEIGHT_CAP: u64 = 2000;
pub const DEFAULT_NODE_CAP: u64 = 10_000_000;
pub const DEFAULT_WITNESS_WINDOW: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Caps {
    pub height_cap: u64,
    /// Total nodes materialized in one tree.
    pub node_cap: u64,
    /// When a tree hits the node cap, the indices `n` in
    /// `height_cap + 1 ..= height_cap + witness_window` are evaluated
    /// directly; a trace with `A(n) = root` is a path from the root to the
    /// cap and proves survival. 0 disables the search.
    pub witness_window: u64,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            height_cap: DEFAULT_HEIGHT_CAP,
            node_cap: DEFAULT_NODE_CAP,
            witness_window: DEFAULT_WITNESS_WINDOW,
        }
    }
}

impl Caps {
    pub fn with_height(height_cap: u64) -> Self {
        Caps {
            height_cap,
            ..Caps::default()
        }
    }

    pub fn node_cap(self, node_cap: u64) -> Self {
        Caps { node_cap, ..self }
    }

    pub fn witness_window(self, witness_window: u64) -> Self {
        Caps { witness_window, ..self }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum TreeStatus {
    /// No node survives above `max_height`.
    Died { max_height: u64 },
    /// Nodes remain alive at the height cap.
    Survived { height_cap: u64 },
    /// Growth needed the term `a_{exhausted_at}`, which the sequence lacks.
    Overgrown { exhausted_at: u64 },
    /// The tree exceeded its node budget while at `height`.
    NodeCapExceeded { height: u64, nodes: u64 },
}

impl fmt::Display for TreeStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TreeStatus::Died { max_height } => write!(f, "died at height {max_height}"),
            TreeStatus::Survived { height_cap } => write!(f, "survived to height {height_cap}"),
            TreeStatus::Overgrown { exhausted_at } => write!(f, "overgrown (needs term a_{exhausted_at})"),
            TreeStatus::NodeCapExceeded { height, nodes } => {
                write!(f, "node cap exceeded at height {height} ({nodes} nodes)")
            }
        }
    }
}

/// A grown tree. `levels[k]` holds the distinct live values at height `k`.
///
/// A tree whose survival was certified by a witness trace stops materializing
/// levels where it hit the node cap; its fruit list then covers heights up to
/// `height() + 1` only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TotientTree {
    pub root: u64,
    pub levels: Vec<Vec<u64>>,
    pub fruit_heights: Vec<u64>,
    pub status: TreeStatus,
    /// Children discarded by the upper bound, per height.
    pub pruned_by_bound: Vec<u64>,
    /// The `n` whose partial evaluations certify survival to the cap.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<u64>,
}

impl TotientTree {
    pub fn level_sizes(&self) -> Vec<u64> {
        self.levels.iter().map(|l| l.len() as u64).collect()
    }

    pub fn node_count(&self) -> u64 {
        self.levels.iter().map(|l| l.len() as u64).sum()
    }

    pub fn height(&self) -> u64 {
        self.levels.len() as u64 - 1
    }

    /// Whether levels and fruit cover the tree's whole life.
    pub fn is_complete(&self) -> bool {
        self.witness.is_none() && !matches!(self.status, TreeStatus::NodeCapExceeded { .. })
    }
}

/// Outcome of expanding one node.
#[derive(Debug, Default)]
struct Expansion {
    children: Vec<u64>,
    fruit: bool,
    pruned: u64,
}

/// Where growth from height `k` to `k + 1` stands.
enum Step {
    Grow { increment: u64, next_bound: Option<u64> },
    Stop(TreeStatus),
}

fn next_step(seq: &IncrementSequence, bound: &BoundProvider, k: u64, caps: &Caps) -> Step {
    if k >= caps.height_cap {
        return Step::Stop(TreeStatus::Survived {
            height_cap: caps.height_cap,
        });
    }
    match seq.term(k + 1) {
        Ok(increment) => Step::Grow {
            increment,
            next_bound: bound.at(k + 1),
        },
        Err(_) => Step::Stop(TreeStatus::Overgrown { exhausted_at: k + 1 }),
    }
}

fn expand(x: u64, increment: u64, next_bound: Option<u64>) -> Result<Expansion> {
    let fiber = totient_fiber(x)?;
    let mut out = Expansion::default();
    let start = fiber.members.partition_point(|&m| m < increment);
    for &m in &fiber.members[start..] {
        let y = m - increment;
        if y == 0 {
            out.fruit = true;
        } else if next_bound.is_none_or(|b| y <= b) {
            out.children.push(y);
        } else {
            out.pruned += 1;
        }
    }
    Ok(out)
}

fn root_is_live(root: u64, bound: &BoundProvider) -> bool {
    root > 0 && bound.at(0).is_none_or(|b| root <= b)
}

/// Grows the tree rooted at `root` level by level until it dies, reaches the
/// height cap, runs out of sequence terms or exceeds the node cap. A tree
/// that exceeds the node cap is then checked for a survival witness.
pub fn grow_tree(root: u64, seq: &IncrementSequence, bound: &BoundProvider, caps: &Caps) -> Result<TotientTree> {
    let mut witnesses = WitnessSource::new(seq, caps);
    grow_tree_with(root, seq, bound, caps, &mut witnesses)
}

/// Direct evaluations past the height cap, computed on first use.
struct WitnessSource<'a> {
    seq: &'a IncrementSequence,
    first: u64,
    last: u64,
    values: Vec<u64>,
}

impl<'a> WitnessSource<'a> {
    fn new(seq: &'a IncrementSequence, caps: &Caps) -> Self {
        let first = caps.height_cap + 1;
        let mut last = caps.height_cap.saturating_add(caps.witness_window);
        if let Some(len) = seq.len() {
            last = last.min(len);
        }
        WitnessSource {
            seq,
            first,
            last,
            values: Vec::new(),
        }
    }

    /// Smallest `n` in the window with `A(n) = root`.
    fn find(&mut self, root: u64) -> Result<Option<u64>> {
        let mut n = self.first;
        while n <= self.last {
            let i = (n - self.first) as usize;
            if i == self.values.len() {
                self.values.push(scoreboard_value(self.seq, n)?);
            }
            if self.values[i] == root {
                return Ok(Some(n));
            }
            n += 1;
        }
        Ok(None)
    }
}

/// Checks that the trace of `n` is a live path of the pruned tree up to the cap.
fn check_witness(n: u64, root: u64, seq: &IncrementSequence, bound: &BoundProvider, cap: u64) -> Result<()> {
    let trace = crate::scoreboard::evaluate_trace(seq, n)?;
    if trace.value() != root {
        return Err(Error::Inconsistent(format!(
            "witness {n} evaluates to {} not {root}",
            trace.value()
        )));
    }
    for k in 0..=cap {
        let v = trace.values[k as usize];
        if v == 0 || bound.at(k).is_some_and(|b| v > b) {
            return Err(Error::Inconsistent(format!(
                "witness {n} leaves the pruned tree at height {k} (value {v}, bound {:?})",
                bound.at(k)
            )));
        }
    }
    Ok(())
}

fn grow_tree_with(
    root: u64,
    seq: &IncrementSequence,
    bound: &BoundProvider,
    caps: &Caps,
    witnesses: &mut WitnessSource<'_>,
) -> Result<TotientTree> {
    if root == 0 {
        return Err(Error::Domain("tree roots must be positive".into()));
    }
    let mut levels = vec![vec![root]];
    let mut fruit_heights = Vec::new();
    let mut pruned_by_bound = vec![0];
    let mut nodes = 1u64;
    if !root_is_live(root, bound) {
        return Ok(TotientTree {
            root,
            levels,
            fruit_heights,
            status: TreeStatus::Died { max_height: 0 },
            pruned_by_bound,
            witness: None,
        });
    }
    let mut k = 0u64;
    let mut status = loop {
        let (increment, next_bound) = match next_step(seq, bound, k, caps) {
            Step::Grow { increment, next_bound } => (increment, next_bound),
            Step::Stop(status) => break status,
        };
        let expansions: Vec<Expansion> = levels[k as usize]
            .par_iter()
            .map(|&x| expand(x, increment, next_bound))
            .collect::<Result<_>>()?;
        let mut next = Vec::new();
        let mut pruned = 0;
        let mut fruit = false;
        for e in expansions {
            next.extend(e.children);
            pruned += e.pruned;
            fruit |= e.fruit;
        }
        next.sort_unstable();
        next.dedup();
        if fruit {
            fruit_heights.push(k + 1);
        }
        if next.is_empty() {
            break TreeStatus::Died { max_height: k };
        }
        if nodes + next.len() as u64 > caps.node_cap {
            break TreeStatus::NodeCapExceeded {
                height: k + 1,
                nodes: nodes + next.len() as u64,
            };
        }
        nodes += next.len() as u64;
        levels.push(next);
        pruned_by_bound.push(pruned);
        k += 1;
    };
    let mut witness = None;
    if matches!(status, TreeStatus::NodeCapExceeded { .. }) {
        if let Some(n) = witnesses.find(root)? {
            check_witness(n, root, seq, bound, caps.height_cap)?;
            witness = Some(n);
            status = TreeStatus::Survived {
                height_cap: caps.height_cap,
            };
        }
    }
    Ok(TotientTree {
        root,
        levels,
        fruit_heights,
        status,
        pruned_by_bound,
        witness,
    })
}

/// One event from a depth-first fruit search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FruitEvent {
    Fruit(u64),
    Done(TreeStatus),
}

/// Depth-first search for fruit, yielding each fruit height as it is found
/// and finally the tree's status.
///
/// With `memoize`, a `(value, height)` pair is expanded at most once.
pub struct FruitSearch<'a> {
    seq: &'a IncrementSequence,
    bound: &'a BoundProvider,
    caps: Caps,
    memo: Option<HashSet<(u64, u64)>>,
    stack: Vec<(u64, u64)>,
    pending: Vec<u64>,
    max_height: u64,
    survived: bool,
    overgrown: Option<u64>,
    nodes: u64,
    error: Option<Error>,
    finished: bool,
}

impl<'a> FruitSearch<'a> {
    pub fn new(
        x: u64,
        k: u64,
        seq: &'a IncrementSequence,
        bound: &'a BoundProvider,
        caps: Caps,
        memoize: bool,
    ) -> Self {
        FruitSearch {
            seq,
            bound,
            caps,
            memo: memoize.then(HashSet::new),
            stack: vec![(x, k)],
            pending: Vec::new(),
            max_height: k,
            survived: false,
            overgrown: None,
            nodes: 0,
            error: None,
            finished: false,
        }
    }

    /// The error that stopped the search early, if any.
    pub fn error(&self) -> Option<&Error> {
        self.error.as_ref()
    }

    fn visit(&mut self, x: u64, k: u64) -> Result<()> {
        if x == 0 {
            self.pending.push(k);
            return Ok(());
        }
        if self.bound.at(k).is_some_and(|b| x > b) {
            return Ok(());
        }
        if let Some(memo) = &mut self.memo {
            if !memo.insert((x, k)) {
                return Ok(());
            }
        }
        self.nodes += 1;
        self.max_height = self.max_height.max(k);
        match next_step(self.seq, self.bound, k, &self.caps) {
            Step::Stop(TreeStatus::Survived { .. }) => self.survived = true,
            Step::Stop(TreeStatus::Overgrown { exhausted_at }) => {
                self.overgrown = Some(self.overgrown.map_or(exhausted_at, |o| o.min(exhausted_at)));
            }
            Step::Stop(_) => {}
            Step::Grow { increment, .. } => {
                let fiber = totient_fiber(x)?;
                let start = fiber.members.partition_point(|&m| m < increment);
                // push in reverse so smaller values are explored first
                for &m in fiber.members[start..].iter().rev() {
                    self.stack.push((m - increment, k + 1));
                }
            }
        }
        Ok(())
    }

    fn status(&self) -> TreeStatus {
        if let Some(exhausted_at) = self.overgrown {
            TreeStatus::Overgrown { exhausted_at }
        } else if self.survived {
            TreeStatus::Survived {
                height_cap: self.caps.height_cap,
            }
        } else {
            TreeStatus::Died {
                max_height: self.max_height,
            }
        }
    }
}

impl Iterator for FruitSearch<'_> {
    type Item = FruitEvent;

    fn next(&mut self) -> Option<FruitEvent> {
        loop {
            if let Some(h) = self.pending.pop() {
                return Some(FruitEvent::Fruit(h));
            }
            if self.finished {
                return None;
            }
            if self.nodes > self.caps.node_cap {
                self.finished = true;
                return Some(FruitEvent::Done(TreeStatus::NodeCapExceeded {
                    height: self.max_height,
                    nodes: self.nodes,
                }));
            }
            match self.stack.pop() {
                Some((x, k)) => {
                    if let Err(e) = self.visit(x, k) {
                        self.error = Some(e);
                        self.finished = true;
                        return None;
                    }
                }
                None => {
                    self.finished = true;
                    return Some(FruitEvent::Done(self.status()));
                }
            }
        }
    }
}

/// Collected result of a fruit search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FruitReport {
    pub heights: Vec<u64>,
    pub status: TreeStatus,
}

/// Runs a depth-first fruit search from `x` at height `k` and gathers the
/// fruit heights in ascending order.
pub fn fruit(
    x: u64,
    k: u64,
    seq: &IncrementSequence,
    bound: &BoundProvider,
    caps: &Caps,
    memoize: bool,
) -> Result<FruitReport> {
    let mut search = FruitSearch::new(x, k, seq, bound, *caps, memoize);
    let mut heights = Vec::new();
    let mut status = None;
    for event in search.by_ref() {
        match event {
            FruitEvent::Fruit(h) => heights.push(h),
            FruitEvent::Done(s) => status = Some(s),
        }
    }
    if let Some(e) = search.error() {
        return Err(e.clone());
    }
    heights.sort_unstable();
    Ok(FruitReport {
        heights,
        status: status.expect("search ends with a status"),
    })
}

/// Candidate scoreboard values: 1 and the even numbers up to `b_0`.
pub fn candidate_roots(bound: &BoundProvider, caps: &Caps) -> Result<Vec<u64>> {
    let b0 = match bound.at(0) {
        Some(b) => b,
        None => {
            return Err(Error::Domain(format!(
                "cannot enumerate roots without a height-0 bound (caps {caps:?})"
            )))
        }
    };
    Ok(std::iter::once(1)
        .chain((2..=b0).step_by(2))
        .filter(|&r| r <= b0)
        .collect())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestReport {
    pub sequence: String,
    pub bound: String,
    pub caps: Caps,
    /// Whether the trees cover every candidate root.
    pub complete: bool,
    pub trees: Vec<TotientTree>,
}

impl ForestReport {
    pub fn tree(&self, root: u64) -> Option<&TotientTree> {
        self.trees.iter().find(|t| t.root == root)
    }
}

/// Grows one tree per candidate root.
pub fn grow_forest(seq: &IncrementSequence, bound: &BoundProvider, caps: &Caps) -> Result<ForestReport> {
    let roots = candidate_roots(bound, caps)?;
    let mut forest = grow_forest_with_roots(seq, bound, caps, &roots)?;
    forest.complete = true;
    Ok(forest)
}

pub fn grow_forest_with_roots(
    seq: &IncrementSequence,
    bound: &BoundProvider,
    caps: &Caps,
    roots: &[u64],
) -> Result<ForestReport> {
    // Trees are grown concurrently; the witness window is shared by the
    // trees that need it afterwards.
    let mut trees = roots
        .par_iter()
        .map(|&r| {
            grow_tree_with(
                r,
                seq,
                bound,
                &caps.witness_window(0),
                &mut WitnessSource::new(seq, &caps.witness_window(0)),
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let mut witnesses = WitnessSource::new(seq, caps);
    for tree in &mut trees {
        if matches!(tree.status, TreeStatus::NodeCapExceeded { .. }) {
            if let Some(n) = witnesses.find(tree.root)? {
                check_witness(n, tree.root, seq, bound, caps.height_cap)?;
                tree.witness = Some(n);
                tree.status = TreeStatus::Survived {
                    height_cap: caps.height_cap,
                };
            }
        }
    }
    Ok(ForestReport {
        sequence: seq.to_string(),
        bound: bound.to_string(),
        caps: *caps,
        complete: false,
        trees,
    })
}

/// A piecewise description of a scoreboard function.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum CaseEquation {
    Closed {
        /// Values attained at finitely many `n`, with those `n`.
        cases: BTreeMap<u64, Vec<u64>>,
        /// The value attained at every other `n`.
        otherwise: u64,
    },
    Inconclusive {
        statuses: BTreeMap<u64, TreeStatus>,
    },
}

impl CaseEquation {
    /// The value at `n`, when the equation is closed.
    pub fn value_at(&self, n: u64) -> Option<u64> {
        match self {
            CaseEquation::Closed { cases, otherwise } => Some(
                cases
                    .iter()
                    .find(|(_, ns)| ns.binary_search(&n).is_ok())
                    .map_or(*otherwise, |(&v, _)| v),
            ),
            CaseEquation::Inconclusive { .. } => None,
        }
    }
}

impl fmt::Display for CaseEquation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CaseEquation::Closed { cases, otherwise } => {
                for (value, ns) in cases {
                    let list: Vec<String> = ns.iter().map(|n| n.to_string()).collect();
                    writeln!(f, "{value}\tn = {}", list.join(","))?;
                }
                writeln!(f, "{otherwise}\totherwise")
            }
            CaseEquation::Inconclusive { statuses } => {
                writeln!(f, "inconclusive")?;
                for (root, status) in statuses {
                    writeln!(f, "{root}\t{status}")?;
                }
                Ok(())
            }
        }
    }
}

/// Number of "otherwise" indices spot-checked by direct evaluation.
const OTHERWISE_SAMPLE: u64 = 64;

/// Reads a case equation off a forest in which exactly one tree survives.
///
/// Every listed `n` and a sample of the remaining ones are re-evaluated
/// directly; any disagreement is an [`Error::Inconsistent`].
pub fn synthesize_case_equation(forest: &ForestReport, seq: &IncrementSequence) -> Result<CaseEquation> {
    let survivors: Vec<&TotientTree> = forest
        .trees
        .iter()
        .filter(|t| matches!(t.status, TreeStatus::Survived { .. }))
        .collect();
    let all_others_died = forest
        .trees
        .iter()
        .all(|t| matches!(t.status, TreeStatus::Died { .. } | TreeStatus::Survived { .. }));
    if !forest.complete || survivors.len() != 1 || !all_others_died {
        return Ok(CaseEquation::Inconclusive {
            statuses: forest.trees.iter().map(|t| (t.root, t.status)).collect(),
        });
    }
    let survivor = survivors[0];
    let cap = forest.caps.height_cap;

    // Fruit heights up to the cap must partition 1..=cap.
    let mut owner = vec![None; cap as usize + 1];
    for tree in &forest.trees {
        for &h in &tree.fruit_heights {
            if let Some(prev) = owner[h as usize].replace(tree.root) {
                return Err(Error::Inconsistent(format!(
                    "height {h} bears fruit in both tree {prev} and tree {}",
                    tree.root
                )));
            }
        }
    }
    // A witnessed survivor only knows its fruit up to one level past its
    // materialized height; the dead trees are exhaustive either way.
    let covered = if survivor.is_complete() {
        cap
    } else {
        (survivor.height() + 1).min(cap)
    };
    if let Some(h) = (1..=covered as usize).find(|&h| owner[h].is_none()) {
        return Err(Error::Inconsistent(format!("no tree bears fruit at height {h}")));
    }

    let cases: BTreeMap<u64, Vec<u64>> = forest
        .trees
        .iter()
        .filter(|t| t.root != survivor.root && !t.fruit_heights.is_empty())
        .map(|t| (t.root, t.fruit_heights.clone()))
        .collect();
    let equation = CaseEquation::Closed {
        cases,
        otherwise: survivor.root,
    };

    let listed = forest
        .trees
        .iter()
        .filter(|t| t.root != survivor.root)
        .flat_map(|t| t.fruit_heights.iter().copied());
    let step = (cap / OTHERWISE_SAMPLE).max(1);
    let sampled = survivor.fruit_heights.iter().copied().step_by(step as usize);
    let mut checks: Vec<u64> = listed.chain(sampled).collect();
    // beyond the cap the equation predicts the surviving value
    checks.extend([cap + 1, cap + 7, 2 * cap + 1]);
    for n in checks {
        let direct = scoreboard_value(seq, n)?;
        let predicted = equation.value_at(n).expect("closed equation");
        if direct != predicted {
            return Err(Error::Inconsistent(format!(
                "case equation predicts A({n}) = {predicted} but direct evaluation gives {direct}"
            )));
        }
    }
    Ok(equation)
}
