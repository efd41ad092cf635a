//! Sufficient statistics, the log kernel, and O(degree) statistic deltas for
//! elementary edits.
//!
//! Statistics are integers so that incremental bookkeeping can be checked
//! against full recomputation with exact equality. Each unordered adjacent
//! pair is counted once in the edge-match block.

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::params::Parameters;
use crate::state::JointState;

/// `a_counts[offset(k) + h]` is the number of nodes at level `h` of variable
/// `k`; `g_match[k]` is the number of edges whose endpoints share their
/// level of variable `k`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SufficientStats {
    pub a_counts: Vec<i64>,
    pub g_match: Vec<i64>,
}

/// Difference between two statistic vectors, same layout as
/// [`SufficientStats`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct StatsDelta {
    pub a_counts: Vec<i64>,
    pub g_match: Vec<i64>,
}

impl SufficientStats {
    pub fn zeros(spec: &ModelSpec) -> Self {
        SufficientStats {
            a_counts: vec![0; spec.alpha_len()],
            g_match: vec![0; spec.num_variables()],
        }
    }

    pub fn apply(&mut self, delta: &StatsDelta) {
        for (a, d) in self.a_counts.iter_mut().zip(&delta.a_counts) {
            *a += d;
        }
        for (g, d) in self.g_match.iter_mut().zip(&delta.g_match) {
            *g += d;
        }
    }

    /// `self - other`.
    pub fn delta_from(&self, other: &SufficientStats) -> StatsDelta {
        StatsDelta {
            a_counts: self
                .a_counts
                .iter()
                .zip(&other.a_counts)
                .map(|(a, b)| a - b)
                .collect(),
            g_match: self
                .g_match
                .iter()
                .zip(&other.g_match)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn a_block<'a>(&'a self, spec: &ModelSpec, k: usize) -> &'a [i64] {
        let o = spec.alpha_offset(k);
        &self.a_counts[o..o + spec.level_count(k)]
    }

    /// Flat `a_counts ++ g_match` as reals.
    pub fn to_flat(&self) -> Vec<f64> {
        self.a_counts
            .iter()
            .chain(&self.g_match)
            .map(|&v| v as f64)
            .collect()
    }
}

impl StatsDelta {
    pub fn zeros(spec: &ModelSpec) -> Self {
        StatsDelta {
            a_counts: vec![0; spec.alpha_len()],
            g_match: vec![0; spec.num_variables()],
        }
    }

    pub fn clear(&mut self) {
        self.a_counts.iter_mut().for_each(|v| *v = 0);
        self.g_match.iter_mut().for_each(|v| *v = 0);
    }

    pub fn is_zero(&self) -> bool {
        self.a_counts.iter().chain(&self.g_match).all(|&v| v == 0)
    }

    /// δT·θ, the log acceptance exponent of a symmetric proposal.
    #[inline]
    pub fn dot(&self, params: &Parameters) -> f64 {
        let mut acc = 0.0;
        for (d, a) in self.a_counts.iter().zip(&params.alpha) {
            if *d != 0 {
                acc += *d as f64 * a;
            }
        }
        for (d, g) in self.g_match.iter().zip(&params.gamma) {
            if *d != 0 {
                acc += *d as f64 * g;
            }
        }
        acc
    }
}

/// Full-scan statistics.
pub fn compute_stats(state: &JointState, spec: &ModelSpec) -> Result<SufficientStats> {
    state.conforms_to(spec)?;
    let mut stats = SufficientStats::zeros(spec);
    for k in 0..spec.num_variables() {
        let o = spec.alpha_offset(k);
        for l in state.levels(k) {
            stats.a_counts[o + l] += 1;
        }
    }
    for (r, s) in state.edges() {
        for k in 0..spec.num_variables() {
            if state.level(k, r) == state.level(k, s) {
                stats.g_match[k] += 1;
            }
        }
    }
    Ok(stats)
}

/// α·A + γ·G, the log of the unnormalized density.
pub fn log_kernel(stats: &SufficientStats, params: &Parameters) -> Result<f64> {
    if stats.a_counts.len() != params.alpha.len() || stats.g_match.len() != params.gamma.len() {
        return Err(Error::DimensionMismatch(format!(
            "stats have {}+{} entries, parameters {}+{}",
            stats.a_counts.len(),
            stats.g_match.len(),
            params.alpha.len(),
            params.gamma.len()
        )));
    }
    if let Some(v) = params.alpha.iter().chain(&params.gamma).find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("parameter value {v}")));
    }
    let a: f64 = stats
        .a_counts
        .iter()
        .zip(&params.alpha)
        .map(|(&c, a)| c as f64 * a)
        .sum();
    let g: f64 = stats
        .g_match
        .iter()
        .zip(&params.gamma)
        .map(|(&c, g)| c as f64 * g)
        .sum();
    Ok(a + g)
}

/// Adds the effect of flipping pair `{r, s}` (present ↔ absent) to `delta`.
#[inline]
pub(crate) fn accumulate_toggle(state: &JointState, r: usize, s: usize, delta: &mut StatsDelta) {
    let sign = if state.has_edge(r, s) { -1 } else { 1 };
    accumulate_edge(state, r, s, sign, delta);
}

/// Adds `sign` times the match contribution of pair `{r, s}`.
#[inline]
pub(crate) fn accumulate_edge(
    state: &JointState,
    r: usize,
    s: usize,
    sign: i64,
    delta: &mut StatsDelta,
) {
    for (k, g) in delta.g_match.iter_mut().enumerate() {
        if state.level(k, r) == state.level(k, s) {
            *g += sign;
        }
    }
}

/// Adds the effect of moving `node` to `new_level` on variable `k`.
#[inline]
pub(crate) fn accumulate_relabel(
    state: &JointState,
    spec: &ModelSpec,
    node: usize,
    k: usize,
    new_level: usize,
    delta: &mut StatsDelta,
) {
    let old = state.level(k, node);
    if old == new_level {
        return;
    }
    let o = spec.alpha_offset(k);
    delta.a_counts[o + old] -= 1;
    delta.a_counts[o + new_level] += 1;
    let mut change = 0i64;
    for u in state.neighbors(node) {
        let lu = state.level(k, u);
        change += (lu == new_level) as i64 - (lu == old) as i64;
    }
    delta.g_match[k] += change;
}

/// Adds the effect of nodes `r` and `s` exchanging their levels of `k`.
#[inline]
pub(crate) fn accumulate_swap(
    state: &JointState,
    k: usize,
    r: usize,
    s: usize,
    delta: &mut StatsDelta,
) {
    let a = state.level(k, r);
    let b = state.level(k, s);
    if a == b {
        return;
    }
    let mut change = 0i64;
    for u in state.neighbors(r) {
        if u != s {
            let lu = state.level(k, u);
            change += (lu == b) as i64 - (lu == a) as i64;
        }
    }
    for u in state.neighbors(s) {
        if u != r {
            let lu = state.level(k, u);
            change += (lu == a) as i64 - (lu == b) as i64;
        }
    }
    delta.g_match[k] += change;
}

/// T(x with pair `{r, s}` flipped) − T(x).
pub fn delta_stats_edge_toggle(
    state: &JointState,
    spec: &ModelSpec,
    r: usize,
    s: usize,
) -> Result<StatsDelta> {
    state.check_pair(r, s)?;
    let mut delta = StatsDelta::zeros(spec);
    accumulate_toggle(state, r, s, &mut delta);
    Ok(delta)
}

/// T(x with `node` relabelled to `new_level` on variable `k`) − T(x).
pub fn delta_stats_attr_change(
    state: &JointState,
    spec: &ModelSpec,
    node: usize,
    k: usize,
    new_level: usize,
) -> Result<StatsDelta> {
    state.check_node(node)?;
    if k >= spec.num_variables() {
        return Err(Error::DimensionMismatch(format!("no variable {k}")));
    }
    let m = spec.level_count(k);
    if new_level >= m {
        return Err(Error::LevelOutOfRange {
            variable: k,
            level: new_level,
            levels: m,
        });
    }
    let mut delta = StatsDelta::zeros(spec);
    accumulate_relabel(state, spec, node, k, new_level, &mut delta);
    Ok(delta)
}

/// Number of variables on which `r` and `s` share a level.
pub fn pair_similarity(state: &JointState, r: usize, s: usize) -> Result<usize> {
    state.check_pair(r, s)?;
    Ok((0..state.num_variables())
        .filter(|&k| state.level(k, r) == state.level(k, s))
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    // Independent O(n²K) oracle over all ordered pairs r < s.
    fn brute_stats(state: &JointState, spec: &ModelSpec) -> (Vec<i64>, Vec<i64>) {
        let n = spec.n();
        let mut a = vec![0i64; spec.alpha_len()];
        let mut g = vec![0i64; spec.num_variables()];
        for k in 0..spec.num_variables() {
            for h in 0..spec.level_count(k) {
                a[spec.alpha_offset(k) + h] =
                    (0..n).filter(|&r| state.level(k, r) == h).count() as i64;
            }
            for r in 0..n {
                for s in (r + 1)..n {
                    let same: i64 = (0..spec.level_count(k))
                        .map(|h| {
                            ((state.level(k, r) == h) as i64) * ((state.level(k, s) == h) as i64)
                        })
                        .sum();
                    g[k] += state.has_edge(r, s) as i64 * same;
                }
            }
        }
        (a, g)
    }

    fn random_state(spec: &ModelSpec, p: f64, rng: &mut impl Rng) -> JointState {
        let n = spec.n();
        let mut edges = Vec::new();
        for r in 0..n {
            for s in (r + 1)..n {
                if rng.random_bool(p) {
                    edges.push((r, s));
                }
            }
        }
        let levels = (0..spec.num_variables())
            .map(|k| (0..n).map(|_| rng.random_range(0..spec.level_count(k))).collect())
            .collect();
        JointState::from_parts(spec, &edges, levels).unwrap()
    }

    #[test]
    fn two_node_examples() {
        let spec = ModelSpec::with_level_counts(2, &[2]).unwrap();
        let same = JointState::from_parts(&spec, &[(0, 1)], vec![vec![0, 0]]).unwrap();
        let st = compute_stats(&same, &spec).unwrap();
        assert_eq!(st.a_counts, vec![2, 0]);
        assert_eq!(st.g_match, vec![1]);

        let diff = JointState::from_parts(&spec, &[(0, 1)], vec![vec![0, 1]]).unwrap();
        let st2 = compute_stats(&diff, &spec).unwrap();
        assert_eq!(st2.a_counts, vec![1, 1]);
        assert_eq!(st2.g_match, vec![0]);

        let p = Parameters::new(&spec, vec![0.5, -0.5], vec![0.45]).unwrap();
        assert!((log_kernel(&st, &p).unwrap() - 1.45).abs() < 1e-15);
        assert_eq!(log_kernel(&st, &Parameters::zeros(&spec)).unwrap(), 0.0);
    }

    #[test]
    fn matches_brute_force_on_random_states() {
        let spec = ModelSpec::with_level_counts(6, &[2, 3]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let st = random_state(&spec, 0.4, &mut rng);
            let stats = compute_stats(&st, &spec).unwrap();
            let (a, g) = brute_stats(&st, &spec);
            assert_eq!(stats.a_counts, a);
            assert_eq!(stats.g_match, g);
            for k in 0..2 {
                assert_eq!(stats.a_block(&spec, k).iter().sum::<i64>(), 6);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let spec = ModelSpec::with_level_counts(3, &[2]).unwrap();
        let other = ModelSpec::with_level_counts(4, &[2]).unwrap();
        let st = JointState::empty(&other);
        assert!(matches!(
            compute_stats(&st, &spec),
            Err(Error::DimensionMismatch(_))
        ));
        let stats = SufficientStats::zeros(&spec);
        let p = Parameters::zeros(&ModelSpec::with_level_counts(3, &[3]).unwrap());
        assert!(log_kernel(&stats, &p).is_err());
        let bad = Parameters {
            alpha: vec![f64::NAN, 0.0],
            gamma: vec![0.0],
        };
        assert!(log_kernel(&stats, &bad).is_err());
    }

    #[test]
    fn toggle_delta_is_antisymmetric() {
        let spec = ModelSpec::with_level_counts(3, &[2, 2]).unwrap();
        let mut st = JointState::from_parts(&spec, &[], vec![vec![0, 0, 1], vec![0, 1, 1]]).unwrap();
        let on = delta_stats_edge_toggle(&st, &spec, 0, 1).unwrap();
        assert_eq!(on.g_match, vec![1, 0]);
        assert!(on.a_counts.iter().all(|&v| v == 0));
        st.add_edge(0, 1).unwrap();
        let off = delta_stats_edge_toggle(&st, &spec, 0, 1).unwrap();
        assert_eq!(off.g_match, vec![-1, 0]);
        assert!(delta_stats_edge_toggle(&st, &spec, 2, 2).is_err());
    }

    #[test]
    fn relabel_edge_cases() {
        let spec = ModelSpec::with_level_counts(3, &[3]).unwrap();
        let st = JointState::from_parts(&spec, &[(0, 1)], vec![vec![0, 0, 2]]).unwrap();
        assert!(delta_stats_attr_change(&st, &spec, 0, 0, 0).unwrap().is_zero());
        let iso = delta_stats_attr_change(&st, &spec, 2, 0, 1).unwrap();
        assert_eq!(iso.g_match, vec![0]);
        assert_eq!(iso.a_counts, vec![0, 1, -1]);
        assert!(matches!(
            delta_stats_attr_change(&st, &spec, 0, 0, 3),
            Err(Error::LevelOutOfRange { .. })
        ));
    }

    #[test]
    fn random_toggles_and_relabels_track_recomputation() {
        let spec = ModelSpec::with_level_counts(20, &[2, 4]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut st = random_state(&spec, 0.2, &mut rng);
        let mut stats = compute_stats(&st, &spec).unwrap();
        for _ in 0..200 {
            let r = rng.random_range(0..20);
            let mut s = rng.random_range(0..19);
            if s >= r {
                s += 1;
            }
            let d = delta_stats_edge_toggle(&st, &spec, r, s).unwrap();
            if st.has_edge(r, s) {
                st.remove_edge(r, s).unwrap();
            } else {
                st.add_edge(r, s).unwrap();
            }
            stats.apply(&d);
            assert_eq!(stats, compute_stats(&st, &spec).unwrap());
        }
        for _ in 0..200 {
            let node = rng.random_range(0..20);
            let k = rng.random_range(0..2);
            let h = rng.random_range(0..spec.level_count(k));
            let d = delta_stats_attr_change(&st, &spec, node, k, h).unwrap();
            st.set_level(k, node, h).unwrap();
            stats.apply(&d);
            assert_eq!(stats, compute_stats(&st, &spec).unwrap());
        }
    }

    #[test]
    fn similarity_counts_shared_levels() {
        let spec = ModelSpec::with_level_counts(3, &[2, 3]).unwrap();
        let st = JointState::from_parts(&spec, &[], vec![vec![0, 0, 1], vec![2, 2, 0]]).unwrap();
        assert_eq!(pair_similarity(&st, 0, 1).unwrap(), 2);
        assert_eq!(pair_similarity(&st, 0, 2).unwrap(), 0);
        assert!(pair_similarity(&st, 1, 1).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let spec6 = ModelSpec::with_level_counts(6, &[2, 3]).unwrap();
        let st6 = random_state(&spec6, 0.5, &mut rng);
        for r in 0..6 {
            for s in 0..6 {
                if r == s {
                    continue;
                }
                let mut brute = 0;
                for k in 0..2 {
                    for h in 0..spec6.level_count(k) {
                        if st6.level(k, r) == h && st6.level(k, s) == h {
                            brute += 1;
                        }
                    }
                }
                assert_eq!(pair_similarity(&st6, r, s).unwrap(), brute);
            }
        }
    }
}
