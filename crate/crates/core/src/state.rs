//! One point of the sample space: an undirected simple graph plus one level
//! per node for every categorical variable.

use std::hash::{Hash, Hasher};

use crate::error::{Error, Result};
use crate::model::ModelSpec;

const NONE: u32 = u32::MAX;

/// Joint (graph, attributes) configuration.
///
/// The graph is kept as an edge list plus per-node neighbour lists, with a
/// dense `n × n` position table so that membership tests, insertions and
/// removals are O(1). Attributes are a dense level index per
/// (variable, node).
#[derive(Debug, Clone)]
pub struct JointState {
    n: usize,
    edges: Vec<(u32, u32)>,
    // edge_pos[r * n + s] = index into `edges`, symmetric
    edge_pos: Vec<u32>,
    nbrs: Vec<Vec<u32>>,
    // nbr_pos[r * n + s] = position of s inside nbrs[r]
    nbr_pos: Vec<u32>,
    levels: Vec<Vec<u16>>,
}

impl JointState {
    /// Edgeless graph with every node at level 0 of every variable.
    pub fn empty(spec: &ModelSpec) -> Self {
        Self::empty_with(spec.n(), spec.num_variables())
    }

    pub(crate) fn empty_with(n: usize, num_vars: usize) -> Self {
        JointState {
            n,
            edges: Vec::new(),
            edge_pos: vec![NONE; n * n],
            nbrs: vec![Vec::new(); n],
            nbr_pos: vec![NONE; n * n],
            levels: vec![vec![0; n]; num_vars],
        }
    }

    /// Builds a state from an edge list and per-variable level vectors.
    /// Duplicate edges and self-loops are rejected.
    pub fn from_parts(
        spec: &ModelSpec,
        edges: &[(usize, usize)],
        levels: Vec<Vec<usize>>,
    ) -> Result<Self> {
        if levels.len() != spec.num_variables() {
            return Err(Error::DimensionMismatch(format!(
                "{} level vectors for {} variables",
                levels.len(),
                spec.num_variables()
            )));
        }
        let mut state = Self::empty(spec);
        for (k, lv) in levels.into_iter().enumerate() {
            if lv.len() != spec.n() {
                return Err(Error::DimensionMismatch(format!(
                    "variable {k} has {} levels for {} nodes",
                    lv.len(),
                    spec.n()
                )));
            }
            let m = spec.level_count(k);
            for (node, l) in lv.into_iter().enumerate() {
                if l >= m {
                    return Err(Error::LevelOutOfRange {
                        variable: k,
                        level: l,
                        levels: m,
                    });
                }
                state.levels[k][node] = l as u16;
            }
        }
        for &(r, s) in edges {
            state.check_pair(r, s)?;
            if state.has_edge(r, s) {
                return Err(Error::InvalidSpec(format!("duplicate edge ({r}, {s})")));
            }
            state.insert_edge(r, s);
        }
        Ok(state)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn num_variables(&self) -> usize {
        self.levels.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges as `(r, s)` with `r < s`, in storage order.
    pub fn edges(&self) -> impl ExactSizeIterator<Item = (usize, usize)> + '_ {
        self.edges.iter().map(|&(r, s)| (r as usize, s as usize))
    }

    pub fn edge_at(&self, i: usize) -> (usize, usize) {
        let (r, s) = self.edges[i];
        (r as usize, s as usize)
    }

    /// Edge list sorted lexicographically.
    pub fn sorted_edges(&self) -> Vec<(usize, usize)> {
        let mut e: Vec<_> = self.edges().collect();
        e.sort_unstable();
        e
    }

    #[inline]
    pub fn has_edge(&self, r: usize, s: usize) -> bool {
        self.edge_pos[r * self.n + s] != NONE
    }

    #[inline]
    pub fn degree(&self, node: usize) -> usize {
        self.nbrs[node].len()
    }

    pub fn degrees(&self) -> Vec<usize> {
        self.nbrs.iter().map(Vec::len).collect()
    }

    #[inline]
    pub fn neighbors(&self, node: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.nbrs[node].iter().map(|&u| u as usize)
    }

    #[inline]
    pub fn level(&self, k: usize, node: usize) -> usize {
        self.levels[k][node] as usize
    }

    pub fn levels(&self, k: usize) -> impl ExactSizeIterator<Item = usize> + '_ {
        self.levels[k].iter().map(|&l| l as usize)
    }

    pub fn level_vectors(&self) -> Vec<Vec<usize>> {
        (0..self.num_variables())
            .map(|k| self.levels(k).collect())
            .collect()
    }

    pub(crate) fn check_node(&self, node: usize) -> Result<()> {
        if node >= self.n {
            Err(Error::NodeOutOfRange { node, n: self.n })
        } else {
            Ok(())
        }
    }

    pub(crate) fn check_pair(&self, r: usize, s: usize) -> Result<()> {
        self.check_node(r)?;
        self.check_node(s)?;
        if r == s {
            return Err(Error::SelfPair(r));
        }
        Ok(())
    }

    /// Adds edge `{r, s}`; returns false if it was already present.
    pub fn add_edge(&mut self, r: usize, s: usize) -> Result<bool> {
        self.check_pair(r, s)?;
        if self.has_edge(r, s) {
            return Ok(false);
        }
        self.insert_edge(r, s);
        Ok(true)
    }

    /// Removes edge `{r, s}`; returns false if it was absent.
    pub fn remove_edge(&mut self, r: usize, s: usize) -> Result<bool> {
        self.check_pair(r, s)?;
        if !self.has_edge(r, s) {
            return Ok(false);
        }
        self.delete_edge(r, s);
        Ok(true)
    }

    pub fn set_level(&mut self, k: usize, node: usize, level: usize) -> Result<()> {
        self.check_node(node)?;
        if k >= self.levels.len() {
            return Err(Error::DimensionMismatch(format!("no variable {k}")));
        }
        self.levels[k][node] = level as u16;
        Ok(())
    }

    // Unchecked mutators for the sampler hot path; callers guarantee validity.

    pub(crate) fn insert_edge(&mut self, r: usize, s: usize) {
        debug_assert!(r != s && !self.has_edge(r, s));
        let (a, b) = if r < s { (r, s) } else { (s, r) };
        let idx = self.edges.len() as u32;
        self.edges.push((a as u32, b as u32));
        self.edge_pos[a * self.n + b] = idx;
        self.edge_pos[b * self.n + a] = idx;
        self.nbr_pos[a * self.n + b] = self.nbrs[a].len() as u32;
        self.nbrs[a].push(b as u32);
        self.nbr_pos[b * self.n + a] = self.nbrs[b].len() as u32;
        self.nbrs[b].push(a as u32);
    }

    pub(crate) fn delete_edge(&mut self, r: usize, s: usize) {
        let n = self.n;
        let idx = self.edge_pos[r * n + s];
        debug_assert!(idx != NONE);
        let idx = idx as usize;
        self.edges.swap_remove(idx);
        if idx < self.edges.len() {
            let (a, b) = self.edges[idx];
            let (a, b) = (a as usize, b as usize);
            self.edge_pos[a * n + b] = idx as u32;
            self.edge_pos[b * n + a] = idx as u32;
        }
        self.edge_pos[r * n + s] = NONE;
        self.edge_pos[s * n + r] = NONE;
        self.unlink(r, s);
        self.unlink(s, r);
    }

    fn unlink(&mut self, r: usize, s: usize) {
        let n = self.n;
        let pos = self.nbr_pos[r * n + s] as usize;
        let list = &mut self.nbrs[r];
        list.swap_remove(pos);
        if pos < list.len() {
            let moved = list[pos] as usize;
            self.nbr_pos[r * n + moved] = pos as u32;
        }
        self.nbr_pos[r * n + s] = NONE;
    }

    #[inline]
    pub(crate) fn put_level(&mut self, k: usize, node: usize, level: usize) {
        self.levels[k][node] = level as u16;
    }

    /// Checks the state against the spec's dimensions and level ranges.
    pub fn conforms_to(&self, spec: &ModelSpec) -> Result<()> {
        if self.n != spec.n() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} nodes, spec has {}",
                self.n,
                spec.n()
            )));
        }
        if self.levels.len() != spec.num_variables() {
            return Err(Error::DimensionMismatch(format!(
                "state has {} variables, spec has {}",
                self.levels.len(),
                spec.num_variables()
            )));
        }
        for (k, lv) in self.levels.iter().enumerate() {
            let m = spec.level_count(k);
            if let Some(&l) = lv.iter().find(|&&l| l as usize >= m) {
                return Err(Error::LevelOutOfRange {
                    variable: k,
                    level: l as usize,
                    levels: m,
                });
            }
        }
        Ok(())
    }
}

impl PartialEq for JointState {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n
            && self.levels == other.levels
            && self.edges.len() == other.edges.len()
            && self
                .edges()
                .all(|(r, s)| other.has_edge(r, s))
    }
}

impl Eq for JointState {}

impl Hash for JointState {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.n.hash(state);
        self.levels.hash(state);
        self.sorted_edges().hash(state);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: usize) -> ModelSpec {
        ModelSpec::with_level_counts(n, &[2]).unwrap()
    }

    #[test]
    fn add_remove_keeps_indices_consistent() {
        let sp = spec(5);
        let mut st = JointState::empty(&sp);
        for (r, s) in [(0, 1), (1, 2), (2, 3), (3, 4), (0, 4)] {
            assert!(st.add_edge(r, s).unwrap());
        }
        assert!(!st.add_edge(1, 0).unwrap());
        assert!(st.remove_edge(1, 0).unwrap());
        assert!(!st.has_edge(0, 1));
        assert_eq!(st.edge_count(), 4);
        assert_eq!(st.degrees(), vec![1, 1, 2, 2, 2]);
        for i in 0..st.edge_count() {
            let (r, s) = st.edge_at(i);
            assert!(st.has_edge(r, s) && st.has_edge(s, r));
            assert!(st.neighbors(r).any(|u| u == s));
        }
        assert!(st.remove_edge(2, 3).unwrap());
        let mut n2: Vec<_> = st.neighbors(2).collect();
        n2.sort();
        assert_eq!(n2, vec![1]);
    }

    #[test]
    fn rejects_self_loops_and_bad_levels() {
        let sp = spec(3);
        assert!(matches!(
            JointState::from_parts(&sp, &[(1, 1)], vec![vec![0; 3]]),
            Err(Error::SelfPair(1))
        ));
        assert!(JointState::from_parts(&sp, &[], vec![vec![0, 2, 0]]).is_err());
        assert!(JointState::from_parts(&sp, &[(0, 1), (1, 0)], vec![vec![0; 3]]).is_err());
    }

    #[test]
    fn equality_ignores_edge_order() {
        let sp = spec(4);
        let a = JointState::from_parts(&sp, &[(0, 1), (2, 3)], vec![vec![0, 1, 0, 1]]).unwrap();
        let b = JointState::from_parts(&sp, &[(3, 2), (1, 0)], vec![vec![0, 1, 0, 1]]).unwrap();
        assert_eq!(a, b);
        let c = JointState::from_parts(&sp, &[(0, 1), (2, 3)], vec![vec![1, 1, 0, 1]]).unwrap();
        assert_ne!(a, c);
    }
}
