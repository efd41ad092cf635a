use crate::error::{Error, Result};
use crate::model::ModelSpec;

/// Natural parameters: one `alpha` per (variable, level) cell, laid out with
/// the same offsets as the attribute-count statistics, and one `gamma` per
/// variable.
#[derive(Debug, Clone, PartialEq)]
pub struct Parameters {
    pub alpha: Vec<f64>,
    pub gamma: Vec<f64>,
}

impl Parameters {
    pub fn zeros(spec: &ModelSpec) -> Self {
        Parameters {
            alpha: vec![0.0; spec.alpha_len()],
            gamma: vec![0.0; spec.num_variables()],
        }
    }

    pub fn new(spec: &ModelSpec, alpha: Vec<f64>, gamma: Vec<f64>) -> Result<Self> {
        let p = Parameters { alpha, gamma };
        p.check(spec)?;
        Ok(p)
    }

    /// Concatenation `alpha ++ gamma`, matching [`ModelSpec::param_names`].
    pub fn from_flat(spec: &ModelSpec, flat: &[f64]) -> Result<Self> {
        let a = spec.alpha_len();
        if flat.len() != a + spec.num_variables() {
            return Err(Error::DimensionMismatch(format!(
                "{} values for {} parameters",
                flat.len(),
                a + spec.num_variables()
            )));
        }
        Self::new(spec, flat[..a].to_vec(), flat[a..].to_vec())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.len());
        v.extend_from_slice(&self.alpha);
        v.extend_from_slice(&self.gamma);
        v
    }

    pub fn len(&self) -> usize {
        self.alpha.len() + self.gamma.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat-index accessor over `alpha ++ gamma`.
    pub fn get(&self, i: usize) -> f64 {
        if i < self.alpha.len() {
            self.alpha[i]
        } else {
            self.gamma[i - self.alpha.len()]
        }
    }

    pub fn set(&mut self, i: usize, value: f64) {
        if i < self.alpha.len() {
            self.alpha[i] = value;
        } else {
            let j = i - self.alpha.len();
            self.gamma[j] = value;
        }
    }

    pub fn alpha_of<'a>(&'a self, spec: &ModelSpec, k: usize) -> &'a [f64] {
        let o = spec.alpha_offset(k);
        &self.alpha[o..o + spec.level_count(k)]
    }

    /// Dimension and finiteness check. Parameters of a switched-off block
    /// must be zero.
    pub fn check(&self, spec: &ModelSpec) -> Result<()> {
        if self.alpha.len() != spec.alpha_len() || self.gamma.len() != spec.num_variables() {
            return Err(Error::DimensionMismatch(format!(
                "parameters have {}+{} entries, spec expects {}+{}",
                self.alpha.len(),
                self.gamma.len(),
                spec.alpha_len(),
                spec.num_variables()
            )));
        }
        let names = spec.param_names();
        for (i, name) in names.iter().enumerate() {
            let v = self.get(i);
            if !v.is_finite() {
                return Err(Error::NonFiniteParameter {
                    name: name.clone(),
                    value: v,
                });
            }
        }
        let active = spec.active();
        if !active.attribute_counts && self.alpha.iter().any(|&a| a != 0.0) {
            return Err(Error::InvalidSpec(
                "attribute-count block is off but alpha is nonzero".into(),
            ));
        }
        if !active.edge_matches && self.gamma.iter().any(|&g| g != 0.0) {
            return Err(Error::InvalidSpec(
                "edge-match block is off but gamma is nonzero".into(),
            ));
        }
        Ok(())
    }

    pub fn add(&self, other: &Parameters) -> Parameters {
        Parameters {
            alpha: self.alpha.iter().zip(&other.alpha).map(|(a, b)| a + b).collect(),
            gamma: self.gamma.iter().zip(&other.gamma).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Parameters) -> Parameters {
        Parameters {
            alpha: self.alpha.iter().zip(&other.alpha).map(|(a, b)| a - b).collect(),
            gamma: self.gamma.iter().zip(&other.gamma).map(|(a, b)| a - b).collect(),
        }
    }
}
