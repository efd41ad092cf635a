//! Constrained sample spaces and the symmetric random moves that explore
//! them.
//!
//! Move set per constraint:
//!
//! | constraint              | move                                  |
//! |-------------------------|---------------------------------------|
//! | free edges              | toggle a uniformly chosen pair        |
//! | fixed edge count        | hinge: drop a present edge, add an absent pair |
//! | fixed degree sequence   | double edge swap                      |
//! | free attribute          | relabel one node to a different level |
//! | fixed level counts      | two nodes exchange their levels       |
//!
//! Every proposal is symmetric, so Metropolis acceptance only needs the
//! density ratio. A draw that lands on an unusable configuration (a double
//! swap that would create a loop or multi-edge, a label swap between equal
//! levels) is returned as `None` and counts as a rejected step; retrying
//! would break symmetry. The hinge and swap move graphs are assumed to be
//! connected; the oracle tests check this by visiting every enumerable state
//! on small instances.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::state::JointState;
use crate::stats::{accumulate_edge, accumulate_relabel, accumulate_swap, StatsDelta};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EdgeConstraint {
    Free,
    FixedEdgeCount(usize),
    FixedDegrees(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AttrConstraint {
    Free,
    FixedLevelCounts(Vec<usize>),
}

/// The feasible set as a conjunction of one edge constraint and one
/// attribute constraint per variable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConstraintSet {
    n: usize,
    edge: EdgeConstraint,
    attrs: Vec<AttrConstraint>,
}

impl ConstraintSet {
    pub fn new(spec: &ModelSpec, edge: EdgeConstraint, attrs: Vec<AttrConstraint>) -> Result<Self> {
        let n = spec.n();
        if attrs.len() != spec.num_variables() {
            return Err(Error::InvalidConstraint(format!(
                "{} attribute constraints for {} variables",
                attrs.len(),
                spec.num_variables()
            )));
        }
        match &edge {
            EdgeConstraint::Free => {}
            EdgeConstraint::FixedEdgeCount(d) => {
                if *d > spec.pair_count() {
                    return Err(Error::InvalidConstraint(format!(
                        "edge count {d} exceeds {} pairs",
                        spec.pair_count()
                    )));
                }
            }
            EdgeConstraint::FixedDegrees(seq) => {
                if seq.len() != n {
                    return Err(Error::InvalidConstraint(format!(
                        "degree sequence has {} entries for {n} nodes",
                        seq.len()
                    )));
                }
                if !is_graphical(seq) {
                    return Err(Error::InvalidConstraint(format!(
                        "degree sequence {seq:?} is not graphical"
                    )));
                }
            }
        }
        for (k, a) in attrs.iter().enumerate() {
            if let AttrConstraint::FixedLevelCounts(f) = a {
                if f.len() != spec.level_count(k) {
                    return Err(Error::InvalidConstraint(format!(
                        "variable {k}: {} level counts for {} levels",
                        f.len(),
                        spec.level_count(k)
                    )));
                }
                if f.iter().sum::<usize>() != n {
                    return Err(Error::InvalidConstraint(format!(
                        "variable {k}: level counts {f:?} do not sum to {n}"
                    )));
                }
            }
        }
        Ok(ConstraintSet { n, edge, attrs })
    }

    /// No constraints beyond one level per node.
    pub fn free(spec: &ModelSpec) -> Self {
        ConstraintSet {
            n: spec.n(),
            edge: EdgeConstraint::Free,
            attrs: vec![AttrConstraint::Free; spec.num_variables()],
        }
    }

    /// Fixed edge count with free attributes.
    pub fn fixed_edges(spec: &ModelSpec, d: usize) -> Result<Self> {
        Self::new(
            spec,
            EdgeConstraint::FixedEdgeCount(d),
            vec![AttrConstraint::Free; spec.num_variables()],
        )
    }

    pub fn fixed_degrees(spec: &ModelSpec, degrees: Vec<usize>) -> Result<Self> {
        Self::new(
            spec,
            EdgeConstraint::FixedDegrees(degrees),
            vec![AttrConstraint::Free; spec.num_variables()],
        )
    }

    /// Replaces the constraint on variable `k`.
    pub fn with_attr(mut self, spec: &ModelSpec, k: usize, c: AttrConstraint) -> Result<Self> {
        let mut attrs = std::mem::take(&mut self.attrs);
        attrs[k] = c;
        Self::new(spec, self.edge, attrs)
    }

    pub fn edge(&self) -> &EdgeConstraint {
        &self.edge
    }

    pub fn attr(&self, k: usize) -> &AttrConstraint {
        &self.attrs[k]
    }

    pub fn attrs(&self) -> &[AttrConstraint] {
        &self.attrs
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Whether the edge block admits any move at all.
    pub fn edges_mutable(&self) -> bool {
        let pairs = self.n * self.n.saturating_sub(1) / 2;
        match &self.edge {
            EdgeConstraint::Free => pairs > 0,
            EdgeConstraint::FixedEdgeCount(d) => *d > 0 && *d < pairs,
            EdgeConstraint::FixedDegrees(seq) => seq.iter().sum::<usize>() / 2 >= 2,
        }
    }

    /// Variables whose levels can change under their constraint.
    pub fn mutable_variables(&self) -> Vec<usize> {
        self.attrs
            .iter()
            .enumerate()
            .filter(|(_, a)| match a {
                AttrConstraint::Free => true,
                AttrConstraint::FixedLevelCounts(f) => f.iter().filter(|&&c| c > 0).count() >= 2,
            })
            .map(|(k, _)| k)
            .collect()
    }
}

/// Erdős–Gallai test.
pub fn is_graphical(seq: &[usize]) -> bool {
    let n = seq.len();
    if seq.iter().any(|&d| d >= n.max(1)) && n > 0 {
        return false;
    }
    if seq.iter().sum::<usize>() % 2 != 0 {
        return false;
    }
    let mut d = seq.to_vec();
    d.sort_unstable_by(|a, b| b.cmp(a));
    let mut lhs = 0usize;
    for k in 1..=n {
        lhs += d[k - 1];
        let rhs = k * (k - 1) + d[k..].iter().map(|&x| x.min(k)).sum::<usize>();
        if lhs > rhs {
            return false;
        }
    }
    true
}

/// True iff every active linear constraint holds exactly.
pub fn is_feasible(state: &JointState, constraints: &ConstraintSet) -> bool {
    if state.n() != constraints.n || state.num_variables() != constraints.attrs.len() {
        return false;
    }
    let edges_ok = match &constraints.edge {
        EdgeConstraint::Free => true,
        EdgeConstraint::FixedEdgeCount(d) => state.edge_count() == *d,
        EdgeConstraint::FixedDegrees(seq) => (0..state.n()).all(|r| state.degree(r) == seq[r]),
    };
    edges_ok
        && constraints.attrs.iter().enumerate().all(|(k, a)| match a {
            AttrConstraint::Free => true,
            AttrConstraint::FixedLevelCounts(f) => {
                let mut counts = vec![0usize; f.len()];
                for l in state.levels(k) {
                    if l >= counts.len() {
                        return false;
                    }
                    counts[l] += 1;
                }
                counts == *f
            }
        })
}

/// An elementary edit of a [`JointState`]. Pairs are stored as given; the
/// graph is undirected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    EdgeToggle {
        r: usize,
        s: usize,
    },
    EdgeHinge {
        remove: (usize, usize),
        add: (usize, usize),
    },
    /// Removes `(a, b)` and `(c, d)`, adds `(a, c)` and `(b, d)`.
    DoubleSwap {
        remove: [(usize, usize); 2],
        add: [(usize, usize); 2],
    },
    AttrFlip {
        node: usize,
        var: usize,
        from: usize,
        to: usize,
    },
    AttrSwap {
        var: usize,
        r: usize,
        s: usize,
    },
}

impl Move {
    pub fn inverse(&self) -> Move {
        match *self {
            Move::EdgeToggle { r, s } => Move::EdgeToggle { r, s },
            Move::EdgeHinge { remove, add } => Move::EdgeHinge {
                remove: add,
                add: remove,
            },
            Move::DoubleSwap { remove, add } => Move::DoubleSwap {
                remove: add,
                add: remove,
            },
            Move::AttrFlip {
                node,
                var,
                from,
                to,
            } => Move::AttrFlip {
                node,
                var,
                from: to,
                to: from,
            },
            Move::AttrSwap { var, r, s } => Move::AttrSwap { var, r, s },
        }
    }

    /// Writes T(apply(x, m)) − T(x) into `delta` (cleared first).
    ///
    /// The move must be valid for `state`.
    pub fn delta_into(&self, state: &JointState, spec: &ModelSpec, delta: &mut StatsDelta) {
        delta.clear();
        match *self {
            Move::EdgeToggle { r, s } => {
                let sign = if state.has_edge(r, s) { -1 } else { 1 };
                accumulate_edge(state, r, s, sign, delta);
            }
            Move::EdgeHinge { remove, add } => {
                accumulate_edge(state, remove.0, remove.1, -1, delta);
                accumulate_edge(state, add.0, add.1, 1, delta);
            }
            Move::DoubleSwap { remove, add } => {
                for (r, s) in remove {
                    accumulate_edge(state, r, s, -1, delta);
                }
                for (r, s) in add {
                    accumulate_edge(state, r, s, 1, delta);
                }
            }
            Move::AttrFlip { node, var, to, .. } => {
                accumulate_relabel(state, spec, node, var, to, delta);
            }
            Move::AttrSwap { var, r, s } => accumulate_swap(state, var, r, s, delta),
        }
    }

    /// Allocating form of [`Move::delta_into`].
    pub fn delta(&self, state: &JointState, spec: &ModelSpec) -> StatsDelta {
        let mut d = StatsDelta::zeros(spec);
        self.delta_into(state, spec, &mut d);
        d
    }

    fn validate(&self, state: &JointState) -> Result<()> {
        let pair_ok = |r: usize, s: usize| state.check_pair(r, s);
        match *self {
            Move::EdgeToggle { r, s } => pair_ok(r, s),
            Move::EdgeHinge { remove, add } => {
                pair_ok(remove.0, remove.1)?;
                pair_ok(add.0, add.1)?;
                if !state.has_edge(remove.0, remove.1) {
                    return Err(Error::StaleMove(format!("edge {remove:?} is absent")));
                }
                if state.has_edge(add.0, add.1) {
                    return Err(Error::StaleMove(format!("pair {add:?} is present")));
                }
                Ok(())
            }
            Move::DoubleSwap { remove, add } => {
                for &(r, s) in remove.iter().chain(&add) {
                    pair_ok(r, s)?;
                }
                let norm = |(r, s): (usize, usize)| if r < s { (r, s) } else { (s, r) };
                if norm(remove[0]) == norm(remove[1]) || norm(add[0]) == norm(add[1]) {
                    return Err(Error::StaleMove("double swap repeats a pair".into()));
                }
                for &(r, s) in &remove {
                    if !state.has_edge(r, s) {
                        return Err(Error::StaleMove(format!("edge ({r}, {s}) is absent")));
                    }
                }
                for &(r, s) in &add {
                    if state.has_edge(r, s) {
                        return Err(Error::StaleMove(format!("pair ({r}, {s}) is present")));
                    }
                }
                Ok(())
            }
            Move::AttrFlip {
                node, var, from, ..
            } => {
                state.check_node(node)?;
                if var >= state.num_variables() {
                    return Err(Error::StaleMove(format!("no variable {var}")));
                }
                if state.level(var, node) != from {
                    return Err(Error::StaleMove(format!(
                        "node {node} is not at level {from} of variable {var}"
                    )));
                }
                Ok(())
            }
            Move::AttrSwap { var, r, s } => {
                pair_ok(r, s)?;
                if var >= state.num_variables() {
                    return Err(Error::StaleMove(format!("no variable {var}")));
                }
                Ok(())
            }
        }
    }

    /// Applies the move without validation.
    pub(crate) fn apply_unchecked(&self, state: &mut JointState) {
        match *self {
            Move::EdgeToggle { r, s } => {
                if state.has_edge(r, s) {
                    state.delete_edge(r, s);
                } else {
                    state.insert_edge(r, s);
                }
            }
            Move::EdgeHinge { remove, add } => {
                state.delete_edge(remove.0, remove.1);
                state.insert_edge(add.0, add.1);
            }
            Move::DoubleSwap { remove, add } => {
                for (r, s) in remove {
                    state.delete_edge(r, s);
                }
                for (r, s) in add {
                    state.insert_edge(r, s);
                }
            }
            Move::AttrFlip { node, var, to, .. } => state.put_level(var, node, to),
            Move::AttrSwap { var, r, s } => {
                let a = state.level(var, r);
                let b = state.level(var, s);
                state.put_level(var, r, b);
                state.put_level(var, s, a);
            }
        }
    }
}

/// Applies `mv` in place after checking that it is valid for `state`.
pub fn apply_move(state: &mut JointState, mv: &Move) -> Result<()> {
    mv.validate(state)?;
    mv.apply_unchecked(state);
    Ok(())
}

/// Proposal kernel for one constraint set.
///
/// Mutability of each block depends only on the constraints, never on the
/// current state, so the block-selection coin is the same in both
/// directions.
#[derive(Debug, Clone)]
pub struct Proposer {
    n: usize,
    edge: EdgeConstraint,
    edges_mutable: bool,
    attr_kinds: Vec<AttrConstraint>,
    mutable_vars: Vec<usize>,
    level_counts: Vec<usize>,
}

impl Proposer {
    pub fn new(spec: &ModelSpec, constraints: &ConstraintSet) -> Result<Self> {
        if constraints.n != spec.n() || constraints.attrs.len() != spec.num_variables() {
            return Err(Error::DimensionMismatch(
                "constraint set does not match the model spec".into(),
            ));
        }
        let edges_mutable = constraints.edges_mutable();
        let mutable_vars = constraints.mutable_variables();
        if !edges_mutable && mutable_vars.is_empty() {
            return Err(Error::DegenerateSpace(
                "neither the graph nor any attribute can move".into(),
            ));
        }
        Ok(Proposer {
            n: spec.n(),
            edge: constraints.edge.clone(),
            edges_mutable,
            attr_kinds: constraints.attrs.clone(),
            mutable_vars,
            level_counts: (0..spec.num_variables()).map(|k| spec.level_count(k)).collect(),
        })
    }

    /// Draws one move. `Ok(None)` is a null proposal (treated as rejected).
    pub fn propose<R: Rng + ?Sized>(&self, state: &JointState, rng: &mut R) -> Result<Option<Move>> {
        let use_edges = match (self.edges_mutable, self.mutable_vars.is_empty()) {
            (true, false) => rng.random_bool(0.5),
            (true, true) => true,
            (false, _) => false,
        };
        if use_edges {
            self.propose_edge(state, rng)
        } else {
            Ok(self.propose_attr(state, rng))
        }
    }

    fn random_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let r = rng.random_range(0..self.n);
        let mut s = rng.random_range(0..self.n - 1);
        if s >= r {
            s += 1;
        }
        (r.min(s), r.max(s))
    }

    fn propose_edge<R: Rng + ?Sized>(&self, state: &JointState, rng: &mut R) -> Result<Option<Move>> {
        match &self.edge {
            EdgeConstraint::Free => {
                let (r, s) = self.random_pair(rng);
                Ok(Some(Move::EdgeToggle { r, s }))
            }
            EdgeConstraint::FixedEdgeCount(_) => {
                let e = state.edge_count();
                let pairs = self.n * (self.n - 1) / 2;
                if e == 0 || e == pairs {
                    return Err(Error::DegenerateSpace(format!(
                        "hinge move needs 0 < edges < {pairs}, have {e}"
                    )));
                }
                let remove = state.edge_at(rng.random_range(0..e));
                // rejection sampling gives a uniform absent pair
                let add = loop {
                    let p = self.random_pair(rng);
                    if !state.has_edge(p.0, p.1) {
                        break p;
                    }
                };
                Ok(Some(Move::EdgeHinge { remove, add }))
            }
            EdgeConstraint::FixedDegrees(_) => {
                let e = state.edge_count();
                if e < 2 {
                    return Err(Error::DegenerateSpace(
                        "double swap needs at least two edges".into(),
                    ));
                }
                let i = rng.random_range(0..e);
                let mut j = rng.random_range(0..e - 1);
                if j >= i {
                    j += 1;
                }
                let (a, b) = state.edge_at(i);
                let (mut c, mut d) = state.edge_at(j);
                // the coin picks one of the two rewirings of {ab, cd}
                if rng.random_bool(0.5) {
                    std::mem::swap(&mut c, &mut d);
                }
                if a == c || a == d || b == c || b == d {
                    return Ok(None);
                }
                if state.has_edge(a, c) || state.has_edge(b, d) {
                    return Ok(None);
                }
                Ok(Some(Move::DoubleSwap {
                    remove: [(a, b), (c, d)],
                    add: [(a, c), (b, d)],
                }))
            }
        }
    }

    fn propose_attr<R: Rng + ?Sized>(&self, state: &JointState, rng: &mut R) -> Option<Move> {
        let var = self.mutable_vars[rng.random_range(0..self.mutable_vars.len())];
        match &self.attr_kinds[var] {
            AttrConstraint::Free => {
                let node = rng.random_range(0..self.n);
                let m = self.level_counts[var];
                let from = state.level(var, node);
                let mut to = rng.random_range(0..m - 1);
                if to >= from {
                    to += 1;
                }
                Some(Move::AttrFlip {
                    node,
                    var,
                    from,
                    to,
                })
            }
            AttrConstraint::FixedLevelCounts(_) => {
                let (r, s) = self.random_pair(rng);
                if state.level(var, r) == state.level(var, s) {
                    None
                } else {
                    Some(Move::AttrSwap { var, r, s })
                }
            }
        }
    }
}

/// One-shot convenience wrapper around [`Proposer`].
pub fn propose_move<R: Rng + ?Sized>(
    state: &JointState,
    spec: &ModelSpec,
    constraints: &ConstraintSet,
    rng: &mut R,
) -> Result<Option<Move>> {
    Proposer::new(spec, constraints)?.propose(state, rng)
}

/// Stub-matching attempts before giving up on a degree sequence.
pub const STUB_MATCHING_ATTEMPTS: usize = 10_000;

/// A random state satisfying `constraints`, for chain initialisation.
pub fn random_feasible_state<R: Rng + ?Sized>(
    spec: &ModelSpec,
    constraints: &ConstraintSet,
    rng: &mut R,
) -> Result<JointState> {
    let n = spec.n();
    let mut state = JointState::empty(spec);
    match &constraints.edge {
        EdgeConstraint::Free => {
            for r in 0..n {
                for s in (r + 1)..n {
                    if rng.random_bool(0.5) {
                        state.insert_edge(r, s);
                    }
                }
            }
        }
        EdgeConstraint::FixedEdgeCount(d) => {
            let pairs = spec.pair_count();
            for idx in rand::seq::index::sample(rng, pairs, *d) {
                let (r, s) = pair_from_index(n, idx);
                state.insert_edge(r, s);
            }
        }
        EdgeConstraint::FixedDegrees(seq) => {
            let edges = stub_matching(seq, rng)?;
            for (r, s) in edges {
                state.insert_edge(r, s);
            }
        }
    }
    for (k, a) in constraints.attrs.iter().enumerate() {
        match a {
            AttrConstraint::Free => {
                let m = spec.level_count(k);
                for node in 0..n {
                    state.put_level(k, node, rng.random_range(0..m));
                }
            }
            AttrConstraint::FixedLevelCounts(f) => {
                let mut pool: Vec<usize> = f
                    .iter()
                    .enumerate()
                    .flat_map(|(h, &c)| std::iter::repeat_n(h, c))
                    .collect();
                pool.shuffle(rng);
                for (node, h) in pool.into_iter().enumerate() {
                    state.put_level(k, node, h);
                }
            }
        }
    }
    debug_assert!(is_feasible(&state, constraints));
    Ok(state)
}

/// Maps `0..n(n-1)/2` onto pairs `(r, s)`, `r < s`, in row-major order.
pub fn pair_from_index(n: usize, mut idx: usize) -> (usize, usize) {
    let mut r = 0;
    loop {
        let row = n - 1 - r;
        if idx < row {
            return (r, r + 1 + idx);
        }
        idx -= row;
        r += 1;
    }
}

fn stub_matching<R: Rng + ?Sized>(seq: &[usize], rng: &mut R) -> Result<Vec<(usize, usize)>> {
    let mut stubs: Vec<usize> = seq
        .iter()
        .enumerate()
        .flat_map(|(v, &d)| std::iter::repeat_n(v, d))
        .collect();
    let n = seq.len();
    let mut seen = vec![false; n * n];
    'attempt: for _ in 0..STUB_MATCHING_ATTEMPTS {
        stubs.shuffle(rng);
        seen.iter_mut().for_each(|b| *b = false);
        let mut edges = Vec::with_capacity(stubs.len() / 2);
        for pair in stubs.chunks_exact(2) {
            let (r, s) = (pair[0], pair[1]);
            if r == s || seen[r * n + s] {
                continue 'attempt;
            }
            seen[r * n + s] = true;
            seen[s * n + r] = true;
            edges.push((r, s));
        }
        return Ok(edges);
    }
    Err(Error::RetryBudgetExhausted(STUB_MATCHING_ATTEMPTS))
}
