//! Posterior summaries and posterior-predictive goodness of fit.
//!
//! The GOF quantities are folds over a stream of predictive states; each has
//! an accumulator so large predictive samples need not be held in memory.

use std::borrow::Borrow;

use crate::error::{Error, Result};
use crate::exchange::PosteriorSamples;
use crate::state::JointState;

#[derive(Debug, Clone, PartialEq)]
pub struct ParamSummary {
    pub name: String,
    pub mean: f64,
    pub sd: f64,
    pub q025: f64,
    pub q975: f64,
}

/// Counts on a regular grid; `counts[i * y_bins + j]` covers
/// `[x_edges[i], x_edges[i+1]) × [y_edges[j], y_edges[j+1])`, with the last
/// bin closed on the right.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram2d {
    pub x_param: String,
    pub y_param: String,
    pub x_edges: Vec<f64>,
    pub y_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram2d {
    pub fn count(&self, i: usize, j: usize) -> u64 {
        self.counts[i * (self.y_edges.len() - 1) + j]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub draws: usize,
    pub params: Vec<ParamSummary>,
    pub histogram: Option<Histogram2d>,
}

/// Linear-interpolation quantile on sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Per-parameter pooled mean, sd, and central 95% interval, plus an optional
/// 2-D histogram of the flat parameters `pair` over `bins × bins` cells.
pub fn posterior_summary(
    samples: &PosteriorSamples,
    pair: Option<(usize, usize)>,
    bins: usize,
) -> Result<PosteriorSummary> {
    let draws = samples.total_draws();
    if draws == 0 {
        return Err(Error::InsufficientSamples("no posterior draws".into()));
    }
    let mut params = Vec::with_capacity(samples.param_names.len());
    for (i, name) in samples.param_names.iter().enumerate() {
        let mut v = samples.pooled(i);
        let nf = v.len() as f64;
        let mean = v.iter().sum::<f64>() / nf;
        let sd = if v.len() > 1 {
            (v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (nf - 1.0)).sqrt()
        } else {
            0.0
        };
        v.sort_by(f64::total_cmp);
        params.push(ParamSummary {
            name: name.clone(),
            mean,
            sd,
            q025: quantile_sorted(&v, 0.025),
            q975: quantile_sorted(&v, 0.975),
        });
    }
    let histogram = match pair {
        Some((x, y)) => {
            let len = samples.param_names.len();
            if x >= len || y >= len {
                return Err(Error::InvalidConfig(format!(
                    "histogram parameter index out of range ({x}, {y}) for {len}"
                )));
            }
            Some(Histogram2d::from_values(
                samples.param_names[x].clone(),
                samples.param_names[y].clone(),
                &samples.pooled(x),
                &samples.pooled(y),
                bins,
            )?)
        }
        None => None,
    };
    Ok(PosteriorSummary {
        draws,
        params,
        histogram,
    })
}

fn bin_edges(values: &[f64], bins: usize) -> Vec<f64> {
    let lo = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut hi = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if hi <= lo {
        hi = lo + 1.0;
    }
    (0..=bins)
        .map(|i| if i == bins { hi } else { lo + (hi - lo) * i as f64 / bins as f64 })
        .collect()
}

fn bin_of(edges: &[f64], v: f64) -> usize {
    let bins = edges.len() - 1;
    let (lo, hi) = (edges[0], edges[bins]);
    (((v - lo) / (hi - lo) * bins as f64) as usize).min(bins - 1)
}

impl Histogram2d {
    /// Histogram of paired values over `bins × bins` cells spanning their
    /// observed ranges. `xs` and `ys` must have equal, nonzero length.
    pub fn from_values(
        x_param: impl Into<String>,
        y_param: impl Into<String>,
        xs: &[f64],
        ys: &[f64],
        bins: usize,
    ) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidConfig("histogram needs at least one bin".into()));
        }
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::DimensionMismatch(format!(
                "histogram needs equal nonempty columns, got {} and {}",
                xs.len(),
                ys.len()
            )));
        }
        let x_edges = bin_edges(xs, bins);
        let y_edges = bin_edges(ys, bins);
        let mut counts = vec![0u64; bins * bins];
        for (&a, &b) in xs.iter().zip(ys) {
            counts[bin_of(&x_edges, a) * bins + bin_of(&y_edges, b)] += 1;
        }
        Ok(Histogram2d {
            x_param: x_param.into(),
            y_param: y_param.into(),
            x_edges,
            y_edges,
            counts,
        })
    }
}

fn pair_index(n: usize, r: usize, s: usize) -> usize {
    let (r, s) = (r.min(s), r.max(s));
    r * n - r * (r + 1) / 2 + (s - r - 1)
}

fn check_variable(state: &JointState, variable: Option<usize>) -> Result<()> {
    match variable {
        Some(k) if k >= state.num_variables() => Err(Error::InvalidConfig(format!(
            "variable index {k} out of range for {} variables",
            state.num_variables()
        ))),
        _ => Ok(()),
    }
}

/// Expected and observed pair-match values over all unordered node pairs,
/// stored upper-triangle row-major. `variable = None` sums over variables.
#[derive(Debug, Clone, PartialEq)]
pub struct SimilarityMatrix {
    pub variable: Option<usize>,
    pub n: usize,
    pub expected: Vec<f64>,
    pub observed: Vec<f64>,
}

impl SimilarityMatrix {
    pub fn expected_at(&self, r: usize, s: usize) -> f64 {
        self.expected[pair_index(self.n, r, s)]
    }

    pub fn observed_at(&self, r: usize, s: usize) -> f64 {
        self.observed[pair_index(self.n, r, s)]
    }

    /// Mean squared difference between expected and observed entries.
    pub fn mse(&self) -> f64 {
        let sq: f64 = self.expected.iter().zip(&self.observed).map(|(e, o)| (e - o).powi(2)).sum();
        sq / self.expected.len().max(1) as f64
    }

    /// Pairs `(r, s)` with `r < s` in storage order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |r| (r + 1..self.n).map(move |s| (r, s)))
    }
}

fn match_value(state: &JointState, variable: Option<usize>, r: usize, s: usize) -> f64 {
    match variable {
        Some(k) => (state.level(k, r) == state.level(k, s)) as u8 as f64,
        None => (0..state.num_variables())
            .filter(|&k| state.level(k, r) == state.level(k, s))
            .count() as f64,
    }
}

fn match_vector(state: &JointState, variable: Option<usize>, out: &mut [f64], add: bool) {
    let n = state.n();
    let mut i = 0;
    for r in 0..n {
        for s in r + 1..n {
            let v = match_value(state, variable, r, s);
            if add {
                out[i] += v;
            } else {
                out[i] = v;
            }
            i += 1;
        }
    }
}

#[derive(Debug, Clone)]
pub struct SimilarityAccumulator {
    variable: Option<usize>,
    n: usize,
    sums: Vec<f64>,
    states: usize,
}

impl SimilarityAccumulator {
    pub fn new(n: usize, variable: Option<usize>) -> Self {
        SimilarityAccumulator {
            variable,
            n,
            sums: vec![0.0; n * n.saturating_sub(1) / 2],
            states: 0,
        }
    }

    pub fn add(&mut self, state: &JointState) -> Result<()> {
        check_variable(state, self.variable)?;
        if state.n() != self.n {
            return Err(Error::DimensionMismatch("predictive state size".into()));
        }
        match_vector(state, self.variable, &mut self.sums, true);
        self.states += 1;
        Ok(())
    }

    pub fn finish(self, observed: &JointState) -> Result<SimilarityMatrix> {
        if self.states == 0 {
            return Err(Error::InsufficientSamples("no predictive states".into()));
        }
        check_variable(observed, self.variable)?;
        let mut obs = vec![0.0; self.sums.len()];
        match_vector(observed, self.variable, &mut obs, false);
        let c = self.states as f64;
        Ok(SimilarityMatrix {
            variable: self.variable,
            n: self.n,
            expected: self.sums.into_iter().map(|v| v / c).collect(),
            observed: obs,
        })
    }
}

pub fn gof_similarity<I, S>(predictive: I, observed: &JointState, variable: Option<usize>) -> Result<SimilarityMatrix>
where
    I: IntoIterator<Item = S>,
    S: Borrow<JointState>,
{
    check_variable(observed, variable)?;
    let mut acc = SimilarityAccumulator::new(observed.n(), variable);
    for s in predictive {
        acc.add(s.borrow())?;
    }
    acc.finish(observed)
}

/// Proportions of edges joining each unordered level pair `h ≤ h′`, stored
/// upper-triangle row-major including the diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct MixingTable {
    pub variable: usize,
    pub levels: usize,
    pub expected: Vec<f64>,
    pub observed: Vec<f64>,
}

fn cell_index(m: usize, h: usize, g: usize) -> usize {
    let (h, g) = (h.min(g), h.max(g));
    // rows 0..h hold m, m-1, ..., m-h+1 cells
    h * m - h * h.saturating_sub(1) / 2 + (g - h)
}

impl MixingTable {
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.levels).flat_map(move |h| (h..self.levels).map(move |g| (h, g)))
    }

    pub fn expected_at(&self, h: usize, g: usize) -> f64 {
        self.expected[cell_index(self.levels, h, g)]
    }

    pub fn observed_at(&self, h: usize, g: usize) -> f64 {
        self.observed[cell_index(self.levels, h, g)]
    }

    /// Share of edges with at least one endpoint at level h.
    pub fn expected_marginals(&self) -> Vec<f64> {
        marginals(self.levels, &self.expected)
    }

    pub fn observed_marginals(&self) -> Vec<f64> {
        marginals(self.levels, &self.observed)
    }
}

fn marginals(m: usize, cells: &[f64]) -> Vec<f64> {
    (0..m)
        .map(|h| (0..m).map(|g| cells[cell_index(m, h, g)]).sum())
        .collect()
}

fn mixing_proportions(state: &JointState, k: usize, m: usize, out: &mut [f64], add: bool) -> Result<()> {
    let e = state.edge_count();
    if e == 0 {
        return Err(Error::InvalidConfig("mixing table of an edgeless state".into()));
    }
    let mut counts = vec![0usize; out.len()];
    for (r, s) in state.edges() {
        counts[cell_index(m, state.level(k, r), state.level(k, s))] += 1;
    }
    for (o, c) in out.iter_mut().zip(counts) {
        let p = c as f64 / e as f64;
        if add {
            *o += p;
        } else {
            *o = p;
        }
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct MixingAccumulator {
    variable: usize,
    levels: usize,
    sums: Vec<f64>,
    states: usize,
}

impl MixingAccumulator {
    pub fn new(variable: usize, levels: usize) -> Self {
        MixingAccumulator {
            variable,
            levels,
            sums: vec![0.0; levels * (levels + 1) / 2],
            states: 0,
        }
    }

    pub fn add(&mut self, state: &JointState) -> Result<()> {
        check_variable(state, Some(self.variable))?;
        mixing_proportions(state, self.variable, self.levels, &mut self.sums, true)?;
        self.states += 1;
        Ok(())
    }

    pub fn finish(self, observed: &JointState) -> Result<MixingTable> {
        if self.states == 0 {
            return Err(Error::InsufficientSamples("no predictive states".into()));
        }
        let mut obs = vec![0.0; self.sums.len()];
        mixing_proportions(observed, self.variable, self.levels, &mut obs, false)?;
        let c = self.states as f64;
        Ok(MixingTable {
            variable: self.variable,
            levels: self.levels,
            expected: self.sums.into_iter().map(|v| v / c).collect(),
            observed: obs,
        })
    }
}

/// `levels` is the level count of `variable`, needed to size the table.
pub fn gof_edge_mixing<I, S>(predictive: I, observed: &JointState, variable: usize, levels: usize) -> Result<MixingTable>
where
    I: IntoIterator<Item = S>,
    S: Borrow<JointState>,
{
    check_variable(observed, Some(variable))?;
    let mut acc = MixingAccumulator::new(variable, levels);
    for s in predictive {
        acc.add(s.borrow())?;
    }
    acc.finish(observed)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DegreeComparison {
    /// Rank-wise mean of the descending degree sequences.
    pub expected: Vec<f64>,
    pub observed: Vec<usize>,
}

fn sorted_degrees(state: &JointState) -> Vec<usize> {
    let mut d = state.degrees();
    d.sort_unstable_by(|a, b| b.cmp(a));
    d
}

#[derive(Debug, Clone)]
pub struct DegreeAccumulator {
    sums: Vec<u64>,
    states: usize,
}

impl DegreeAccumulator {
    pub fn new(n: usize) -> Self {
        DegreeAccumulator {
            sums: vec![0; n],
            states: 0,
        }
    }

    pub fn add(&mut self, state: &JointState) -> Result<()> {
        if state.n() != self.sums.len() {
            return Err(Error::DimensionMismatch("predictive state size".into()));
        }
        for (s, d) in self.sums.iter_mut().zip(sorted_degrees(state)) {
            *s += d as u64;
        }
        self.states += 1;
        Ok(())
    }

    pub fn finish(self, observed: &JointState) -> Result<DegreeComparison> {
        if self.states == 0 {
            return Err(Error::InsufficientSamples("no predictive states".into()));
        }
        let c = self.states as f64;
        Ok(DegreeComparison {
            expected: self.sums.into_iter().map(|s| s as f64 / c).collect(),
            observed: sorted_degrees(observed),
        })
    }
}

pub fn gof_degree_sequence<I, S>(predictive: I, observed: &JointState) -> Result<DegreeComparison>
where
    I: IntoIterator<Item = S>,
    S: Borrow<JointState>,
{
    let mut acc = DegreeAccumulator::new(observed.n());
    for s in predictive {
        acc.add(s.borrow())?;
    }
    acc.finish(observed)
}
