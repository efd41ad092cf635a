//! Brute-force reference computations on enumerable spaces, and the γ = 0
//! null model.
//!
//! Every routine either visits the whole feasible set or fails with
//! [`Error::EnumerationCap`]; nothing is truncated.

use std::collections::HashMap;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};
use crate::exchange::Prior;
use crate::model::ModelSpec;
use crate::params::Parameters;
use crate::space::{is_feasible, AttrConstraint, ConstraintSet, EdgeConstraint};
use crate::state::JointState;
use crate::stats::{compute_stats, log_kernel, SufficientStats};

pub const DEFAULT_STATE_CAP: u128 = 10_000_000;
pub const MAX_ENUM_NODES: usize = 8;

/// Running log-sum-exp that rescales on each new maximum.
#[derive(Debug, Clone, Copy)]
pub struct LogSumExp {
    max: f64,
    sum: f64,
}

impl Default for LogSumExp {
    fn default() -> Self {
        LogSumExp {
            max: f64::NEG_INFINITY,
            sum: 0.0,
        }
    }
}

impl LogSumExp {
    pub fn push(&mut self, x: f64) {
        if x == f64::NEG_INFINITY {
            return;
        }
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
    }

    pub fn value(&self) -> f64 {
        if self.sum == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.max + self.sum.ln()
        }
    }
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let mut acc = LogSumExp::default();
    values.iter().for_each(|&v| acc.push(v));
    acc.value()
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut r: u128 = 1;
    for i in 0..k {
        r = r.saturating_mul(n - i) / (i + 1);
    }
    r
}

fn ln_binomial(n: usize, k: usize) -> f64 {
    (0..k).map(|i| ((n - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

fn cap_error(count: u128, cap: u128) -> Error {
    Error::EnumerationCap { count, cap }
}

fn all_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut v = Vec::with_capacity(n * n.saturating_sub(1) / 2);
    for r in 0..n {
        for s in r + 1..n {
            v.push((r, s));
        }
    }
    v
}

fn enumerate_graphs(n: usize, edge: &EdgeConstraint, cap: u128) -> Result<Vec<Vec<(usize, usize)>>> {
    let pairs = all_pairs(n);
    let p = pairs.len();
    match edge {
        EdgeConstraint::Free => {
            let count = 1u128 << p;
            if count > cap {
                return Err(cap_error(count, cap));
            }
            Ok((0..count as u64)
                .map(|mask| {
                    (0..p)
                        .filter(|&i| mask >> i & 1 == 1)
                        .map(|i| pairs[i])
                        .collect()
                })
                .collect())
        }
        EdgeConstraint::FixedEdgeCount(d) => {
            let count = binomial(p as u128, *d as u128);
            if count > cap {
                return Err(cap_error(count, cap));
            }
            let mut out = Vec::with_capacity(count as usize);
            let mut cur = Vec::with_capacity(*d);
            combinations(&pairs, 0, *d, &mut cur, &mut out);
            Ok(out)
        }
        EdgeConstraint::FixedDegrees(seq) => {
            let mut out = Vec::new();
            let mut remaining = seq.clone();
            let mut cur = Vec::new();
            degree_graphs(&pairs, 0, &mut remaining, &mut cur, &mut out, cap)?;
            Ok(out)
        }
    }
}

fn combinations(
    pairs: &[(usize, usize)],
    start: usize,
    left: usize,
    cur: &mut Vec<(usize, usize)>,
    out: &mut Vec<Vec<(usize, usize)>>,
) {
    if left == 0 {
        out.push(cur.clone());
        return;
    }
    for i in start..=pairs.len() - left {
        cur.push(pairs[i]);
        combinations(pairs, i + 1, left - 1, cur, out);
        cur.pop();
    }
}

/// Backtracking over pairs in row-major order. Once the scan passes every
/// pair touching node r, its remaining degree must already be zero.
fn degree_graphs(
    pairs: &[(usize, usize)],
    idx: usize,
    remaining: &mut [usize],
    cur: &mut Vec<(usize, usize)>,
    out: &mut Vec<Vec<(usize, usize)>>,
    cap: u128,
) -> Result<()> {
    if idx == pairs.len() {
        if remaining.iter().all(|&r| r == 0) {
            if out.len() as u128 >= cap {
                return Err(cap_error(out.len() as u128 + 1, cap));
            }
            out.push(cur.clone());
        }
        return Ok(());
    }
    let (r, s) = pairs[idx];
    let n = remaining.len();
    // pairs (r, t) with t > s are the only ones left for r
    let left_for_r = n - 1 - s;
    if remaining[r] > left_for_r + 1 {
        return Ok(());
    }
    if remaining[r] > 0 && remaining[s] > 0 {
        remaining[r] -= 1;
        remaining[s] -= 1;
        cur.push((r, s));
        degree_graphs(pairs, idx + 1, remaining, cur, out, cap)?;
        cur.pop();
        remaining[r] += 1;
        remaining[s] += 1;
    }
    if remaining[r] <= left_for_r {
        degree_graphs(pairs, idx + 1, remaining, cur, out, cap)?;
    }
    Ok(())
}

fn labeling_count(n: usize, m: usize, constraint: &AttrConstraint) -> u128 {
    match constraint {
        AttrConstraint::Free => (m as u128).checked_pow(n as u32).unwrap_or(u128::MAX),
        AttrConstraint::FixedLevelCounts(counts) => {
            let mut left = n as u128;
            let mut total: u128 = 1;
            for &c in counts {
                total = total.saturating_mul(binomial(left, c as u128));
                left -= c as u128;
            }
            total
        }
    }
}

fn enumerate_labelings(n: usize, m: usize, constraint: &AttrConstraint) -> Vec<Vec<u16>> {
    let mut out = Vec::new();
    let mut cur = vec![0u16; n];
    match constraint {
        AttrConstraint::Free => free_labelings(0, m, &mut cur, &mut out),
        AttrConstraint::FixedLevelCounts(counts) => {
            let mut left = counts.clone();
            fixed_labelings(0, &mut left, &mut cur, &mut out)
        }
    }
    out
}

fn free_labelings(node: usize, m: usize, cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if node == cur.len() {
        out.push(cur.clone());
        return;
    }
    for h in 0..m {
        cur[node] = h as u16;
        free_labelings(node + 1, m, cur, out);
    }
}

fn fixed_labelings(node: usize, left: &mut [usize], cur: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if node == cur.len() {
        out.push(cur.clone());
        return;
    }
    for h in 0..left.len() {
        if left[h] > 0 {
            left[h] -= 1;
            cur[node] = h as u16;
            fixed_labelings(node + 1, left, cur, out);
            left[h] += 1;
        }
    }
}

fn check_enumerable(spec: &ModelSpec, constraints: &ConstraintSet) -> Result<()> {
    if spec.n() > MAX_ENUM_NODES {
        return Err(Error::InvalidConfig(format!(
            "enumeration supports n ≤ {MAX_ENUM_NODES}, got {}",
            spec.n()
        )));
    }
    if constraints.n() != spec.n() || constraints.attrs().len() != spec.num_variables() {
        return Err(Error::DimensionMismatch("constraints do not match spec".into()));
    }
    Ok(())
}

/// Number of feasible states.
pub fn space_size(spec: &ModelSpec, constraints: &ConstraintSet) -> Result<u128> {
    space_size_with_cap(spec, constraints, DEFAULT_STATE_CAP)
}

pub fn space_size_with_cap(spec: &ModelSpec, constraints: &ConstraintSet, cap: u128) -> Result<u128> {
    check_enumerable(spec, constraints)?;
    let graphs = enumerate_graphs(spec.n(), constraints.edge(), cap)?.len() as u128;
    let mut total = graphs;
    for k in 0..spec.num_variables() {
        total = total.saturating_mul(labeling_count(spec.n(), spec.level_count(k), constraints.attr(k)));
    }
    if total > cap {
        return Err(cap_error(total, cap));
    }
    Ok(total)
}

/// Calls `f` once on every feasible state.
pub fn for_each_state<F>(spec: &ModelSpec, constraints: &ConstraintSet, cap: u128, mut f: F) -> Result<()>
where
    F: FnMut(&JointState) -> Result<()>,
{
    check_enumerable(spec, constraints)?;
    let n = spec.n();
    let kk = spec.num_variables();
    let graphs = enumerate_graphs(n, constraints.edge(), cap)?;
    let mut total = graphs.len() as u128;
    for k in 0..kk {
        total = total.saturating_mul(labeling_count(n, spec.level_count(k), constraints.attr(k)));
    }
    if total > cap {
        return Err(cap_error(total, cap));
    }
    let labelings: Vec<Vec<Vec<u16>>> = (0..kk)
        .map(|k| enumerate_labelings(n, spec.level_count(k), constraints.attr(k)))
        .collect();
    for g in &graphs {
        let mut state = JointState::empty_with(n, kk);
        for &(r, s) in g {
            state.insert_edge(r, s);
        }
        if labelings.iter().any(|l| l.is_empty()) {
            continue;
        }
        // odometer over the per-variable labeling lists
        let mut digit = vec![0usize; kk];
        for k in 0..kk {
            set_labels(&mut state, k, &labelings[k][0]);
        }
        loop {
            f(&state)?;
            let mut k = 0;
            loop {
                if k == kk {
                    break;
                }
                digit[k] += 1;
                if digit[k] < labelings[k].len() {
                    set_labels(&mut state, k, &labelings[k][digit[k]]);
                    break;
                }
                digit[k] = 0;
                set_labels(&mut state, k, &labelings[k][0]);
                k += 1;
            }
            if k == kk {
                break;
            }
        }
    }
    Ok(())
}

fn set_labels(state: &mut JointState, k: usize, labels: &[u16]) {
    for (node, &h) in labels.iter().enumerate() {
        state.put_level(k, node, h as usize);
    }
}

/// Every feasible state, each exactly once.
pub fn enumerate_space(spec: &ModelSpec, constraints: &ConstraintSet) -> Result<Vec<JointState>> {
    let mut out = Vec::new();
    for_each_state(spec, constraints, DEFAULT_STATE_CAP, |s| {
        out.push(s.clone());
        Ok(())
    })?;
    Ok(out)
}

/// log Σ_x exp(T(x)·θ).
pub fn exact_normalizer(spec: &ModelSpec, constraints: &ConstraintSet, params: &Parameters) -> Result<f64> {
    params.check(spec)?;
    let mut acc = LogSumExp::default();
    for_each_state(spec, constraints, DEFAULT_STATE_CAP, |s| {
        acc.push(log_kernel(&compute_stats(s, spec)?, params)?);
        Ok(())
    })?;
    Ok(acc.value())
}

/// Every feasible state with its exact probability, in enumeration order.
pub fn exact_distribution(
    spec: &ModelSpec,
    constraints: &ConstraintSet,
    params: &Parameters,
) -> Result<Vec<(JointState, f64)>> {
    params.check(spec)?;
    let mut states = Vec::new();
    let mut acc = LogSumExp::default();
    for_each_state(spec, constraints, DEFAULT_STATE_CAP, |s| {
        let lk = log_kernel(&compute_stats(s, spec)?, params)?;
        acc.push(lk);
        states.push((s.clone(), lk));
        Ok(())
    })?;
    let log_z = acc.value();
    for (_, w) in states.iter_mut() {
        *w = (*w - log_z).exp();
    }
    Ok(states)
}

/// Σ_x f(x)·p_θ(x).
pub fn exact_expectation<F>(
    spec: &ModelSpec,
    constraints: &ConstraintSet,
    params: &Parameters,
    mut f: F,
) -> Result<f64>
where
    F: FnMut(&JointState) -> f64,
{
    let log_z = exact_normalizer(spec, constraints, params)?;
    let mut total = 0.0;
    for_each_state(spec, constraints, DEFAULT_STATE_CAP, |s| {
        let lk = log_kernel(&compute_stats(s, spec)?, params)?;
        total += f(s) * (lk - log_z).exp();
        Ok(())
    })?;
    Ok(total)
}

/// Distinct values of T(x) over the space with their multiplicities, sorted
/// by statistic.
pub fn stats_histogram(spec: &ModelSpec, constraints: &ConstraintSet) -> Result<Vec<(SufficientStats, u64)>> {
    let mut map: HashMap<SufficientStats, u64> = HashMap::new();
    for_each_state(spec, constraints, DEFAULT_STATE_CAP, |s| {
        *map.entry(compute_stats(s, spec)?).or_default() += 1;
        Ok(())
    })?;
    let mut v: Vec<_> = map.into_iter().collect();
    v.sort_by(|a, b| (&a.0.a_counts, &a.0.g_match).cmp(&(&b.0.a_counts, &b.0.g_match)));
    Ok(v)
}

/// log-normalizer from a precomputed histogram: log Σ c·exp(T·θ).
pub fn normalizer_from_histogram(hist: &[(SufficientStats, u64)], params: &Parameters) -> Result<f64> {
    let mut acc = LogSumExp::default();
    for (t, c) in hist {
        acc.push((*c as f64).ln() + log_kernel(t, params)?);
    }
    Ok(acc.value())
}

/// Log posterior density at each grid point, normalized so that the
/// exponentiated values sum to one over the grid.
pub fn exact_posterior_grid(
    x0: &JointState,
    spec: &ModelSpec,
    constraints: &ConstraintSet,
    prior: &Prior,
    grid: &[Parameters],
) -> Result<Vec<(Parameters, f64)>> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty parameter grid".into()));
    }
    if !is_feasible(x0, constraints) {
        return Err(Error::Infeasible("observed state".into()));
    }
    let hist = stats_histogram(spec, constraints)?;
    let t0 = compute_stats(x0, spec)?;
    let mut out = Vec::with_capacity(grid.len());
    let mut acc = LogSumExp::default();
    for theta in grid {
        theta.check(spec)?;
        let lp = log_kernel(&t0, theta)? - normalizer_from_histogram(&hist, theta)? + prior.log_density(theta);
        acc.push(lp);
        out.push((theta.clone(), lp));
    }
    let norm = acc.value();
    if !norm.is_finite() {
        return Err(Error::NonFinite("grid posterior normalizer".into()));
    }
    for (_, lp) in out.iter_mut() {
        *lp -= norm;
    }
    Ok(out)
}

fn check_null_support(spec: &ModelSpec, constraints: &ConstraintSet, alpha: &[f64]) -> Result<()> {
    if alpha.len() != spec.alpha_len() {
        return Err(Error::DimensionMismatch(format!(
            "alpha has {} entries, spec expects {}",
            alpha.len(),
            spec.alpha_len()
        )));
    }
    if let Some(a) = alpha.iter().find(|a| !a.is_finite()) {
        return Err(Error::NonFinite(format!("alpha entry {a}")));
    }
    if matches!(constraints.edge(), EdgeConstraint::FixedDegrees(_)) {
        return Err(Error::Unsupported(
            "null model has no sampler for fixed degree sequences".into(),
        ));
    }
    Ok(())
}

fn softmax(a: &[f64]) -> Vec<f64> {
    let m = a.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = a.iter().map(|x| (x - m).exp()).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|x| x / s).collect()
}

/// Draw from the model at γ = 0: independent softmax(α_k) labels per node
/// (a uniform arrangement when level counts are fixed) times a uniform graph
/// from the edge constraint.
pub fn null_model_sample<R: Rng + ?Sized>(
    spec: &ModelSpec,
    constraints: &ConstraintSet,
    alpha: &[f64],
    rng: &mut R,
) -> Result<JointState> {
    check_null_support(spec, constraints, alpha)?;
    let n = spec.n();
    let mut state = JointState::empty(spec);
    match constraints.edge() {
        EdgeConstraint::Free => {
            for r in 0..n {
                for s in r + 1..n {
                    if rng.random_bool(0.5) {
                        state.insert_edge(r, s);
                    }
                }
            }
        }
        EdgeConstraint::FixedEdgeCount(d) => {
            let p = n * (n - 1) / 2;
            for idx in rand::seq::index::sample(rng, p, *d) {
                let (r, s) = crate::space::pair_from_index(n, idx);
                state.insert_edge(r, s);
            }
        }
        EdgeConstraint::FixedDegrees(_) => unreachable!("rejected above"),
    }
    for k in 0..spec.num_variables() {
        match constraints.attr(k) {
            AttrConstraint::Free => {
                let o = spec.alpha_offset(k);
                let probs = softmax(&alpha[o..o + spec.level_count(k)]);
                let dist = WeightedIndex::new(&probs)
                    .map_err(|e| Error::NonFinite(format!("level weights: {e}")))?;
                for node in 0..n {
                    state.put_level(k, node, dist.sample(rng));
                }
            }
            AttrConstraint::FixedLevelCounts(counts) => {
                let mut labels: Vec<usize> = counts
                    .iter()
                    .enumerate()
                    .flat_map(|(h, &c)| std::iter::repeat_n(h, c))
                    .collect();
                labels.shuffle(rng);
                for (node, h) in labels.into_iter().enumerate() {
                    state.put_level(k, node, h);
                }
            }
        }
    }
    Ok(state)
}

/// Exact log-probability of `state` under [`null_model_sample`].
pub fn null_model_log_pmf(
    state: &JointState,
    spec: &ModelSpec,
    constraints: &ConstraintSet,
    alpha: &[f64],
) -> Result<f64> {
    check_null_support(spec, constraints, alpha)?;
    state.conforms_to(spec)?;
    if !is_feasible(state, constraints) {
        return Ok(f64::NEG_INFINITY);
    }
    let n = spec.n();
    let p = n * n.saturating_sub(1) / 2;
    let mut lp = match constraints.edge() {
        EdgeConstraint::Free => -(p as f64) * std::f64::consts::LN_2,
        EdgeConstraint::FixedEdgeCount(d) => -ln_binomial(p, *d),
        EdgeConstraint::FixedDegrees(_) => unreachable!("rejected above"),
    };
    for k in 0..spec.num_variables() {
        match constraints.attr(k) {
            AttrConstraint::Free => {
                let o = spec.alpha_offset(k);
                let probs = softmax(&alpha[o..o + spec.level_count(k)]);
                lp += state.levels(k).map(|h| probs[h].ln()).sum::<f64>();
            }
            AttrConstraint::FixedLevelCounts(counts) => {
                let mut left = n;
                for &c in counts {
                    lp -= ln_binomial(left, c);
                    left -= c;
                }
            }
        }
    }
    Ok(lp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exchange::BlockPrior;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::HashSet;

    #[test]
    fn counts_match_closed_forms() {
        let spec = ModelSpec::with_level_counts(3, &[2]).unwrap();
        let c = ConstraintSet::fixed_edges(&spec, 1).unwrap();
        assert_eq!(enumerate_space(&spec, &c).unwrap().len(), 24);

        let spec0 = ModelSpec::with_level_counts(2, &[]).unwrap();
        assert_eq!(enumerate_space(&spec0, &ConstraintSet::free(&spec0)).unwrap().len(), 2);

        let spec4 = ModelSpec::with_level_counts(4, &[2]).unwrap();
        let pm = ConstraintSet::fixed_degrees(&spec4, vec![1, 1, 1, 1]).unwrap();
        assert_eq!(enumerate_space(&spec4, &pm).unwrap().len(), 3 * 16);

        let spec5 = ModelSpec::with_level_counts(5, &[2, 3]).unwrap();
        let c5 = ConstraintSet::fixed_edges(&spec5, 3).unwrap();
        assert_eq!(space_size(&spec5, &c5).unwrap(), 120 * 32 * 243);
    }

    #[test]
    fn states_are_distinct_and_feasible() {
        let spec = ModelSpec::with_level_counts(5, &[2]).unwrap();
        let c = ConstraintSet::fixed_degrees(&spec, vec![2, 2, 2, 1, 1])
            .unwrap()
            .with_attr(&spec, 0, AttrConstraint::FixedLevelCounts(vec![3, 2]))
            .unwrap();
        let all = enumerate_space(&spec, &c).unwrap();
        assert_eq!(all.len(), 7 * 10);
        let set: HashSet<_> = all.iter().cloned().collect();
        assert_eq!(set.len(), all.len());
        assert!(all.iter().all(|s| is_feasible(s, &c)));
    }

    #[test]
    fn degree_enumeration_matches_filtering() {
        // cross-check backtracking against filtering all graphs
        let seq = vec![3, 2, 2, 2, 1, 0];
        let by_degree = enumerate_graphs(6, &EdgeConstraint::FixedDegrees(seq.clone()), u128::MAX).unwrap();
        let filtered = enumerate_graphs(6, &EdgeConstraint::Free, u128::MAX)
            .unwrap()
            .into_iter()
            .filter(|g| {
                let mut deg = vec![0; 6];
                for &(r, s) in g {
                    deg[r] += 1;
                    deg[s] += 1;
                }
                deg == seq
            })
            .count();
        assert_eq!(by_degree.len(), filtered);
    }

    #[test]
    fn caps_are_errors() {
        let spec = ModelSpec::with_level_counts(8, &[4]).unwrap();
        let c = ConstraintSet::free(&spec);
        assert!(matches!(space_size(&spec, &c), Err(Error::EnumerationCap { .. })));
        let big = ModelSpec::with_level_counts(9, &[2]).unwrap();
        let cb = ConstraintSet::fixed_edges(&big, 1).unwrap();
        assert!(enumerate_space(&big, &cb).is_err());
    }

    #[test]
    fn normalizer_examples() {
        let spec = ModelSpec::with_level_counts(3, &[2]).unwrap();
        let c = ConstraintSet::fixed_edges(&spec, 1).unwrap();
        let z0 = exact_normalizer(&spec, &c, &Parameters::zeros(&spec)).unwrap();
        assert!((z0 - 24f64.ln()).abs() < 1e-12);

        // alpha only: log|graphs| + n·log Σ e^α
        let spec2 = ModelSpec::with_level_counts(4, &[3]).unwrap();
        let c2 = ConstraintSet::fixed_edges(&spec2, 2).unwrap();
        let p = Parameters::new(&spec2, vec![0.3, -1.1, 0.7], vec![0.0]).unwrap();
        let closed = 15f64.ln() + 4.0 * [0.3f64, -1.1, 0.7].iter().map(|a| a.exp()).sum::<f64>().ln();
        assert!((exact_normalizer(&spec2, &c2, &p).unwrap() - closed).abs() < 1e-12);

        let mut last = f64::NEG_INFINITY;
        for g in [-1.0, 0.0, 0.5, 2.0] {
            let p = Parameters::new(&spec2, vec![0.0; 3], vec![g]).unwrap();
            let z = exact_normalizer(&spec2, &c2, &p).unwrap();
            assert!(z > last);
            last = z;
        }
        let p = Parameters::new(&spec2, vec![50.0, -50.0, 0.0], vec![50.0]).unwrap();
        assert!(exact_normalizer(&spec2, &c2, &p).unwrap().is_finite());
    }

    #[test]
    fn histogram_route_agrees_with_streaming() {
        let spec = ModelSpec::with_level_counts(4, &[2, 2]).unwrap();
        let c = ConstraintSet::fixed_edges(&spec, 3).unwrap();
        let p = Parameters::new(&spec, vec![0.2, -0.4, 1.0, 0.1], vec![0.8, -0.6]).unwrap();
        let hist = stats_histogram(&spec, &c).unwrap();
        assert_eq!(hist.iter().map(|h| h.1 as u128).sum::<u128>(), space_size(&spec, &c).unwrap());
        let a = normalizer_from_histogram(&hist, &p).unwrap();
        let b = exact_normalizer(&spec, &c, &p).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn expectation_examples() {
        let spec = ModelSpec::with_level_counts(4, &[2]).unwrap();
        let c = ConstraintSet::fixed_edges(&spec, 2).unwrap();
        let zero = Parameters::zeros(&spec);
        let eg = exact_expectation(&spec, &c, &zero, |s| compute_stats(s, &spec).unwrap().g_match[0] as f64).unwrap();
        assert!((eg - 1.0).abs() < 1e-12);

        let p = Parameters::new(&spec, vec![0.5, -0.5], vec![0.0]).unwrap();
        let ea = exact_expectation(&spec, &c, &p, |s| compute_stats(s, &spec).unwrap().a_counts[0] as f64).unwrap();
        let sm = softmax(&[0.5, -0.5]);
        assert!((ea - 4.0 * sm[0]).abs() < 1e-12);
    }

    #[test]
    fn grid_posterior_is_normalized() {
        let spec = ModelSpec::with_level_counts(4, &[2]).unwrap();
        let c = ConstraintSet::fixed_edges(&spec, 2).unwrap();
        let x0 = enumerate_space(&spec, &c).unwrap()[7].clone();
        let one = vec![Parameters::zeros(&spec)];
        let g = exact_posterior_grid(&x0, &spec, &c, &Prior::flat(), &one).unwrap();
        assert!(g[0].1.abs() < 1e-14);
        let grid: Vec<Parameters> = (-20..=20)
            .map(|i| Parameters::new(&spec, vec![0.0, 0.0], vec![i as f64 * 0.1]).unwrap())
            .collect();
        let prior = Prior::uniform_block(BlockPrior::gaussian(0.0, 1.0).unwrap());
        let g = exact_posterior_grid(&x0, &spec, &c, &prior, &grid).unwrap();
        let total: f64 = g.iter().map(|(_, lp)| lp.exp()).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn null_model_matches_gamma_zero_exactly() {
        let spec = ModelSpec::with_level_counts(4, &[2, 3]).unwrap();
        let alpha = vec![0.4, -0.2, 1.0, 0.0, -0.7];
        let p = Parameters::new(&spec, alpha.clone(), vec![0.0, 0.0]).unwrap();
        for c in [
            ConstraintSet::fixed_edges(&spec, 2).unwrap(),
            ConstraintSet::free(&spec),
            ConstraintSet::fixed_edges(&spec, 3)
                .unwrap()
                .with_attr(&spec, 1, AttrConstraint::FixedLevelCounts(vec![1, 1, 2]))
                .unwrap(),
        ] {
            let dist = exact_distribution(&spec, &c, &p).unwrap();
            let mut tv = 0.0;
            let mut mass = 0.0;
            for (s, prob) in &dist {
                let q = null_model_log_pmf(s, &spec, &c, &alpha).unwrap().exp();
                mass += q;
                tv += (prob - q).abs();
            }
            assert!((mass - 1.0).abs() < 1e-12);
            assert!(0.5 * tv < 1e-12, "{tv}");
        }
    }

    #[test]
    fn null_sampler_respects_constraints() {
        let spec = ModelSpec::with_level_counts(6, &[2, 3]).unwrap();
        let c = ConstraintSet::fixed_edges(&spec, 5)
            .unwrap()
            .with_attr(&spec, 1, AttrConstraint::FixedLevelCounts(vec![1, 2, 3]))
            .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let alpha = vec![0.0; 5];
        for _ in 0..100 {
            let s = null_model_sample(&spec, &c, &alpha, &mut rng).unwrap();
            assert!(is_feasible(&s, &c));
        }
        let cd = ConstraintSet::fixed_degrees(&spec, vec![1; 6]).unwrap();
        assert!(matches!(
            null_model_sample(&spec, &cd, &alpha, &mut rng),
            Err(Error::Unsupported(_))
        ));
        assert!(null_model_sample(&spec, &c, &[0.0; 3], &mut rng).is_err());
    }

    #[test]
    fn null_sampler_level_proportions() {
        let spec = ModelSpec::with_level_counts(5, &[2]).unwrap();
        let c = ConstraintSet::fixed_edges(&spec, 3).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let draws = 10_000;
        let mut ones = 0usize;
        for _ in 0..draws {
            let s = null_model_sample(&spec, &c, &[0.0, 0.0], &mut rng).unwrap();
            ones += s.levels(0).filter(|&h| h == 0).count();
        }
        let total = (draws * 5) as f64;
        let sigma = (0.25 / total).sqrt();
        assert!((ones as f64 / total - 0.5).abs() < 3.0 * sigma);
    }

    #[test]
    fn log_sum_exp_is_stable() {
        assert!((log_sum_exp(&[1000.0, 1000.0]) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[-1.0, 3.0, 0.5]) - ((-1f64).exp() + 3f64.exp() + 0.5f64.exp()).ln()).abs() < 1e-12);
    }

}
