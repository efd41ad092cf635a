//! Edge-list and attribute-table ingestion, connected components, and
//! extraction of one component as a model state.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{ModelSpec, Variable};
use crate::state::JointState;

/// Nodes index the attribute-file rows in file order. Level labels are
/// indexed in order of first appearance.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub node_ids: Vec<String>,
    /// Canonical `(r, s)` with `r < s`, in first-appearance order.
    pub edges: Vec<(usize, usize)>,
    pub variables: Vec<String>,
    pub levels: Vec<Vec<String>>,
    /// `attributes[k][node]` indexes `levels[k]`.
    pub attributes: Vec<Vec<usize>>,
    /// Edge lines dropped as repeats of an earlier pair.
    pub duplicate_edges: usize,
}

fn parse_err(path: &Path, line: u64, message: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: line as usize,
        message: message.into(),
    }
}

fn reader(path: &Path) -> Result<csv::Reader<File>> {
    Ok(csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Data(format!("{}: {e}", path.display())))?)
}

fn line_of(rec: &csv::StringRecord) -> u64 {
    rec.position().map(|p| p.line()).unwrap_or(0)
}

pub fn load_dataset(edge_file: &Path, attr_file: &Path) -> Result<Dataset> {
    let mut ds = load_attributes(attr_file)?;
    load_edges(edge_file, &mut ds)?;
    Ok(ds)
}

fn load_attributes(path: &Path) -> Result<Dataset> {
    let mut rdr = reader(path)?;
    let mut records = rdr.records();
    let header = match records.next() {
        Some(r) => r?,
        None => return Err(parse_err(path, 1, "empty attribute file")),
    };
    if header.get(0) != Some("node_id") {
        return Err(parse_err(path, 1, "attribute header must start with node_id"));
    }
    let variables: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let mut seen_vars = HashSet::new();
    for v in &variables {
        if v.is_empty() || !seen_vars.insert(v.as_str()) {
            return Err(parse_err(path, 1, format!("bad or repeated variable name {v:?}")));
        }
    }
    let k = variables.len();
    let mut ds = Dataset {
        node_ids: Vec::new(),
        edges: Vec::new(),
        variables,
        levels: vec![Vec::new(); k],
        attributes: vec![Vec::new(); k],
        duplicate_edges: 0,
    };
    let mut index: Vec<HashMap<String, usize>> = vec![HashMap::new(); k];
    let mut ids = HashSet::new();
    let mut missing = Vec::new();
    for rec in records {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != k + 1 {
            return Err(parse_err(path, line, format!("expected {} fields, found {}", k + 1, rec.len())));
        }
        let id = rec.get(0).unwrap_or("");
        if id.is_empty() {
            return Err(parse_err(path, line, "empty node id"));
        }
        if !ids.insert(id.to_string()) {
            return Err(parse_err(path, line, format!("node {id} listed twice")));
        }
        for v in 0..k {
            let cell = rec.get(v + 1).unwrap_or("");
            let level = if cell.is_empty() {
                missing.push(format!("{id}/{}", ds.variables[v]));
                0
            } else {
                let next = index[v].len();
                *index[v].entry(cell.to_string()).or_insert_with(|| {
                    ds.levels[v].push(cell.to_string());
                    next
                })
            };
            ds.attributes[v].push(level);
        }
        ds.node_ids.push(id.to_string());
    }
    if !missing.is_empty() {
        return Err(Error::Data(format!(
            "{}: missing attribute values for {}",
            path.display(),
            missing.join(", ")
        )));
    }
    Ok(ds)
}

fn load_edges(path: &Path, ds: &mut Dataset) -> Result<()> {
    let lookup: HashMap<&str, usize> = ds.node_ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
    let mut rdr = reader(path)?;
    let mut seen = HashSet::new();
    let mut unknown = Vec::new();
    let mut edges = Vec::new();
    let mut duplicates = 0;
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = line_of(&rec);
        if rec.len() == 1 && rec.get(0) == Some("") {
            continue;
        }
        if rec.len() != 2 {
            return Err(parse_err(path, line, format!("expected 2 fields, found {}", rec.len())));
        }
        let (a, b) = (&rec[0], &rec[1]);
        if i == 0 && a == "src" && b == "dst" {
            continue;
        }
        if a.is_empty() || b.is_empty() {
            return Err(parse_err(path, line, "empty node id"));
        }
        if a == b {
            return Err(parse_err(path, line, format!("self-loop on {a}")));
        }
        let (Some(&r), Some(&s)) = (lookup.get(a), lookup.get(b)) else {
            for id in [a, b] {
                if !lookup.contains_key(id) && !unknown.contains(&id.to_string()) {
                    unknown.push(id.to_string());
                }
            }
            continue;
        };
        let pair = (r.min(s), r.max(s));
        if seen.insert(pair) {
            edges.push(pair);
        } else {
            duplicates += 1;
        }
    }
    if !unknown.is_empty() {
        return Err(Error::Data(format!(
            "{}: nodes missing from the attribute file: {}",
            path.display(),
            unknown.join(", ")
        )));
    }
    ds.edges = edges;
    ds.duplicate_edges = duplicates;
    Ok(())
}

impl Dataset {
    pub fn node_count(&self) -> usize {
        self.node_ids.len()
    }

    /// State over all nodes with levels indexed by `spec`'s labels rather
    /// than by first appearance.
    pub fn state_for(&self, spec: &ModelSpec) -> Result<JointState> {
        if spec.n() != self.node_count() {
            return Err(Error::DimensionMismatch(format!(
                "spec has {} nodes, dataset {}",
                spec.n(),
                self.node_count()
            )));
        }
        let mut levels = Vec::with_capacity(spec.num_variables());
        for var in spec.variables() {
            let k = self
                .variables
                .iter()
                .position(|v| v == var.name())
                .ok_or_else(|| Error::Data(format!("dataset lacks variable {}", var.name())))?;
            let map: Vec<usize> = self.levels[k]
                .iter()
                .map(|l| {
                    var.level_index(l)
                        .ok_or_else(|| Error::Data(format!("level {l} not in variable {}", var.name())))
                })
                .collect::<Result<_>>()?;
            levels.push(self.attributes[k].iter().map(|&h| map[h]).collect());
        }
        JointState::from_parts(spec, &self.edges, levels)
    }

    /// Dataset with ids and labels taken from `spec`, node order preserved.
    pub fn from_state(spec: &ModelSpec, state: &JointState, node_ids: Vec<String>) -> Result<Self> {
        state.conforms_to(spec)?;
        if node_ids.len() != spec.n() {
            return Err(Error::DimensionMismatch("node id count".into()));
        }
        Ok(Dataset {
            node_ids,
            edges: state.sorted_edges(),
            variables: spec.variables().iter().map(|v| v.name().to_string()).collect(),
            levels: spec.variables().iter().map(|v| v.levels().to_vec()).collect(),
            attributes: state.level_vectors(),
            duplicate_edges: 0,
        })
    }

    pub fn write_edges(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["src", "dst"])?;
        for &(r, s) in &self.edges {
            w.write_record([&self.node_ids[r], &self.node_ids[s]])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_attributes(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["node_id".to_string()];
        header.extend(self.variables.iter().cloned());
        w.write_record(&header)?;
        for (i, id) in self.node_ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            for k in 0..self.variables.len() {
                row.push(self.levels[k][self.attributes[k][i]].clone());
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: vec![1; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (mut a, mut b) = (self.find(a), self.find(b));
        if a == b {
            return;
        }
        if self.size[a] < self.size[b] {
            std::mem::swap(&mut a, &mut b);
        }
        self.parent[b] = a;
        self.size[a] += self.size[b];
    }
}

/// Node-index lists (ascending within each component), largest component
/// first; equal sizes are ordered by their smallest external node id.
pub fn connected_components(ds: &Dataset) -> Vec<Vec<usize>> {
    let n = ds.node_count();
    let mut uf = UnionFind::new(n);
    for &(r, s) in &ds.edges {
        uf.union(r, s);
    }
    let mut groups: HashMap<usize, Vec<usize>> = HashMap::new();
    for v in 0..n {
        let root = uf.find(v);
        groups.entry(root).or_default().push(v);
    }
    let mut comps: Vec<Vec<usize>> = groups.into_values().collect();
    let min_id = |c: &Vec<usize>| c.iter().map(|&v| ds.node_ids[v].as_str()).min().unwrap_or("");
    comps.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| min_id(a).cmp(min_id(b))));
    comps
}

#[derive(Debug, Clone)]
pub struct Component {
    pub spec: ModelSpec,
    pub state: JointState,
    /// External id of each reindexed node.
    pub node_ids: Vec<String>,
    pub edge_count: usize,
}

/// The `rank`-th largest component (1-based), reindexed to `0..n`, with a
/// spec built from the levels present inside it.
pub fn extract_component(ds: &Dataset, rank: usize) -> Result<Component> {
    let comps = connected_components(ds);
    if rank == 0 || rank > comps.len() {
        return Err(Error::Data(format!(
            "component rank {rank} out of range 1..={}",
            comps.len()
        )));
    }
    let nodes = &comps[rank - 1];
    let mut new_index = vec![usize::MAX; ds.node_count()];
    for (i, &v) in nodes.iter().enumerate() {
        new_index[v] = i;
    }
    let mut variables = Vec::with_capacity(ds.variables.len());
    let mut levels = Vec::with_capacity(ds.variables.len());
    for k in 0..ds.variables.len() {
        let mut map: HashMap<usize, usize> = HashMap::new();
        let mut labels = Vec::new();
        let mut col = Vec::with_capacity(nodes.len());
        for &v in nodes {
            let h = ds.attributes[k][v];
            let next = map.len();
            let idx = *map.entry(h).or_insert_with(|| {
                labels.push(ds.levels[k][h].clone());
                next
            });
            col.push(idx);
        }
        if labels.len() < 2 {
            return Err(Error::Data(format!(
                "variable {} takes a single level ({}) in component {rank}",
                ds.variables[k],
                labels.join("")
            )));
        }
        variables.push(Variable::new(ds.variables[k].clone(), labels)?);
        levels.push(col);
    }
    let spec = ModelSpec::new(nodes.len(), variables)?;
    let edges: Vec<(usize, usize)> = ds
        .edges
        .iter()
        .filter(|&&(r, _)| new_index[r] != usize::MAX)
        .map(|&(r, s)| (new_index[r], new_index[s]))
        .collect();
    let state = JointState::from_parts(&spec, &edges, levels)?;
    Ok(Component {
        edge_count: edges.len(),
        node_ids: nodes.iter().map(|&v| ds.node_ids[v].clone()).collect(),
        spec,
        state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;
    use std::path::PathBuf;

    fn files(edges: &str, attrs: &str) -> (tempfile::TempDir, PathBuf, PathBuf) {
        let dir = tempfile::tempdir().unwrap();
        let e = dir.path().join("edges.csv");
        let a = dir.path().join("attrs.csv");
        fs::write(&e, edges).unwrap();
        fs::write(&a, attrs).unwrap();
        (dir, e, a)
    }

    #[test]
    fn loads_small_files() {
        let (_d, e, a) = files("a,b\nb,c\n", "node_id,g\na,M\nb,F\nc,M\n");
        let ds = load_dataset(&e, &a).unwrap();
        assert_eq!(ds.node_count(), 3);
        assert_eq!(ds.edges, vec![(0, 1), (1, 2)]);
        assert_eq!(ds.levels[0], vec!["M", "F"]);
        assert_eq!(ds.attributes[0], vec![0, 1, 0]);
    }

    #[test]
    fn header_and_duplicates() {
        let (_d, e, a) = files("src,dst\na,b\nb,a\na,b\n", "node_id,g\na,x\nb,y\n");
        let ds = load_dataset(&e, &a).unwrap();
        assert_eq!(ds.edges.len(), 1);
        assert_eq!(ds.duplicate_edges, 2);
    }

    #[test]
    fn rejects_bad_input_with_context() {
        let (_d, e, a) = files("a,b\nb\n", "node_id,g\na,x\nb,y\n");
        match load_dataset(&e, &a) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        let (_d, e, a) = files("a,a\n", "node_id,g\na,x\n");
        assert!(matches!(load_dataset(&e, &a), Err(Error::Parse { .. })));
        let (_d, e, a) = files("a,z\n", "node_id,g\na,x\n");
        match load_dataset(&e, &a) {
            Err(Error::Data(m)) => assert!(m.contains('z')),
            other => panic!("{other:?}"),
        }
        let (_d, e, a) = files("a,b\n", "node_id,g,h\na,x,\nb,,y\n");
        match load_dataset(&e, &a) {
            Err(Error::Data(m)) => assert!(m.contains("a/h") && m.contains("b/g")),
            other => panic!("{other:?}"),
        }
        let (_d, e, a) = files("a,b\n", "id,g\na,x\nb,y\n");
        assert!(load_dataset(&e, &a).is_err());
    }

    #[test]
    fn components_are_ordered() {
        let (_d, e, a) = files("d,e\nb,c\nc,f\n", "node_id,g\na,1\nb,1\nc,2\nd,1\ne,2\nf,2\n");
        let ds = load_dataset(&e, &a).unwrap();
        let comps = connected_components(&ds);
        let ids: Vec<Vec<&str>> = comps
            .iter()
            .map(|c| c.iter().map(|&v| ds.node_ids[v].as_str()).collect())
            .collect();
        assert_eq!(ids, vec![vec!["b", "c", "f"], vec!["d", "e"], vec!["a"]]);
        let edgeless = Dataset {
            edges: vec![],
            ..ds.clone()
        };
        assert_eq!(connected_components(&edgeless).len(), 6);
    }

    #[test]
    fn extraction_reindexes() {
        let (_d, e, a) = files("d,e\nb,c\nc,f\nf,b\n", "node_id,g\na,1\nb,1\nc,2\nd,1\ne,2\nf,3\n");
        let ds = load_dataset(&e, &a).unwrap();
        let c = extract_component(&ds, 1).unwrap();
        assert_eq!(c.node_ids, vec!["b", "c", "f"]);
        assert_eq!(c.edge_count, 3);
        assert_eq!(c.spec.variables()[0].levels(), ["1", "2", "3"]);
        let c2 = extract_component(&ds, 2).unwrap();
        assert_eq!(c2.spec.variables()[0].levels(), ["1", "2"]);
        assert!(extract_component(&ds, 3).is_err());
        assert!(extract_component(&ds, 0).is_err());
        assert!(extract_component(&ds, 4).is_err());
    }

    #[test]
    fn round_trip_through_files() {
        let spec = ModelSpec::new(
            4,
            vec![Variable::new("g", vec!["F".into(), "M".into()]).unwrap()],
        )
        .unwrap();
        let x = JointState::from_parts(&spec, &[(0, 3), (1, 2)], vec![vec![1, 0, 1, 1]]).unwrap();
        let ids: Vec<String> = (0..4).map(|i| format!("n{i}")).collect();
        let ds = Dataset::from_state(&spec, &x, ids).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (e, a) = (dir.path().join("e.csv"), dir.path().join("a.csv"));
        ds.write_edges(&e).unwrap();
        ds.write_attributes(&a).unwrap();
        let back = load_dataset(&e, &a).unwrap();
        assert_eq!(back.levels[0], vec!["M", "F"]);
        assert_eq!(back.state_for(&spec).unwrap(), x);
    }
}
