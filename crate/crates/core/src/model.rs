//! Model dimensions: node count, categorical variables and their levels,
//! and which blocks of the statistic vector are switched on.

use std::collections::HashSet;

use crate::error::{Error, Result};

/// A categorical node attribute with at least two levels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Variable {
    name: String,
    levels: Vec<String>,
}

impl Variable {
    pub fn new(name: impl Into<String>, levels: Vec<String>) -> Result<Self> {
        let name = name.into();
        if levels.len() < 2 {
            return Err(Error::InvalidSpec(format!(
                "variable `{name}` needs at least 2 levels, got {}",
                levels.len()
            )));
        }
        let mut seen = HashSet::new();
        for l in &levels {
            if !seen.insert(l.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "variable `{name}` repeats level `{l}`"
                )));
            }
        }
        Ok(Variable { name, levels })
    }

    /// Levels labelled `1..=m`.
    pub fn with_level_count(name: impl Into<String>, m: usize) -> Result<Self> {
        Self::new(name, (1..=m).map(|h| h.to_string()).collect())
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn levels(&self) -> &[String] {
        &self.levels
    }

    pub fn level_count(&self) -> usize {
        self.levels.len()
    }

    pub fn level_index(&self, label: &str) -> Option<usize> {
        self.levels.iter().position(|l| l == label)
    }
}

/// Which statistic blocks enter the model.
///
/// `structural` is the network-only block; no statistics are shipped for
/// it and switching it on is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ActiveStats {
    pub attribute_counts: bool,
    pub edge_matches: bool,
    pub structural: bool,
}

impl Default for ActiveStats {
    fn default() -> Self {
        ActiveStats {
            attribute_counts: true,
            edge_matches: true,
            structural: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelSpec {
    n: usize,
    variables: Vec<Variable>,
    active: ActiveStats,
    offsets: Vec<usize>,
}

impl ModelSpec {
    pub fn new(n: usize, variables: Vec<Variable>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSpec("node count must be at least 1".into()));
        }
        let mut names = HashSet::new();
        for v in &variables {
            if !names.insert(v.name()) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate variable name `{}`",
                    v.name()
                )));
            }
        }
        let mut offsets = Vec::with_capacity(variables.len() + 1);
        let mut acc = 0;
        for v in &variables {
            offsets.push(acc);
            acc += v.level_count();
        }
        offsets.push(acc);
        Ok(ModelSpec {
            n,
            variables,
            active: ActiveStats::default(),
            offsets,
        })
    }

    /// Shorthand for variables named `v1, v2, ...` with the given level counts.
    pub fn with_level_counts(n: usize, level_counts: &[usize]) -> Result<Self> {
        let vars = level_counts
            .iter()
            .enumerate()
            .map(|(k, &m)| Variable::with_level_count(format!("v{}", k + 1), m))
            .collect::<Result<Vec<_>>>()?;
        Self::new(n, vars)
    }

    pub fn with_active(mut self, active: ActiveStats) -> Result<Self> {
        if active.structural {
            return Err(Error::Unsupported(
                "no network-only statistics are implemented".into(),
            ));
        }
        self.active = active;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn num_variables(&self) -> usize {
        self.variables.len()
    }

    pub fn level_count(&self, k: usize) -> usize {
        self.variables[k].level_count()
    }

    pub fn active(&self) -> ActiveStats {
        self.active
    }

    /// Start of variable `k`'s block inside the flat per-level vectors.
    pub fn alpha_offset(&self, k: usize) -> usize {
        self.offsets[k]
    }

    /// Total number of (variable, level) cells, Σ_k m_k.
    pub fn alpha_len(&self) -> usize {
        self.offsets[self.variables.len()]
    }

    /// Length of the active statistic vector.
    pub fn stat_len(&self) -> usize {
        let a = if self.active.attribute_counts {
            self.alpha_len()
        } else {
            0
        };
        let g = if self.active.edge_matches {
            self.num_variables()
        } else {
            0
        };
        a + g
    }

    /// Number of node pairs, n(n-1)/2.
    pub fn pair_count(&self) -> usize {
        self.n * (self.n - 1) / 2
    }

    /// Parameter names in flat order: every `alpha:<var>:<level>` then every
    /// `gamma:<var>`.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.alpha_len() + self.num_variables());
        for v in &self.variables {
            for l in v.levels() {
                names.push(format!("alpha:{}:{}", v.name(), l));
            }
        }
        for v in &self.variables {
            names.push(format!("gamma:{}", v.name()));
        }
        names
    }

    pub fn variable_index(&self, name: &str) -> Option<usize> {
        self.variables.iter().position(|v| v.name() == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_dimensions() {
        assert!(ModelSpec::new(0, vec![]).is_err());
        assert!(Variable::with_level_count("g", 1).is_err());
        let a = Variable::with_level_count("g", 2).unwrap();
        assert!(ModelSpec::new(3, vec![a.clone(), a]).is_err());
        assert!(Variable::new("g", vec!["m".into(), "m".into()]).is_err());
    }

    #[test]
    fn stat_length_counts_both_blocks() {
        let spec = ModelSpec::with_level_counts(54, &[2, 9]).unwrap();
        assert_eq!(spec.alpha_len(), 11);
        assert_eq!(spec.stat_len(), 13);
        assert_eq!(spec.alpha_offset(1), 2);
        assert_eq!(spec.param_names().len(), 13);
        assert_eq!(spec.param_names()[11], "gamma:v1");

        let only_g = spec
            .clone()
            .with_active(ActiveStats {
                attribute_counts: false,
                ..ActiveStats::default()
            })
            .unwrap();
        assert_eq!(only_g.stat_len(), 2);
    }

    #[test]
    fn structural_block_is_reserved() {
        let spec = ModelSpec::with_level_counts(3, &[2]).unwrap();
        let err = spec.with_active(ActiveStats {
            structural: true,
            ..ActiveStats::default()
        });
        assert!(matches!(err, Err(Error::Unsupported(_))));
    }
}
