//! Oracle-equivalence suite on enumerable fixtures.
//!
//! Each check compares a library route against brute-force enumeration:
//! state-sampler frequencies against exact probabilities, the γ = 0 model
//! against the null-model pmf, and the exchange ratio against a ratio built
//! from explicit normalizers.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::exchange::{acceptance_log_ratio, Prior};
use crate::model::ModelSpec;
use crate::oracle::{enumerate_space, exact_distribution, exact_normalizer, null_model_log_pmf};
use crate::params::Parameters;
use crate::sampler::{stream_states, InnerSamplerConfig};
use crate::space::{random_feasible_state, AttrConstraint, ConstraintSet};
use crate::state::JointState;
use crate::stats::{compute_stats, log_kernel};

pub const SAMPLER_TV_TOLERANCE: f64 = 0.05;
pub const SAMPLER_DRAWS: usize = 100_000;
pub const NULL_TV_TOLERANCE: f64 = 1e-10;
pub const RATIO_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct Fixture {
    pub name: String,
    pub spec: ModelSpec,
    pub constraints: ConstraintSet,
}

/// Parameters with alternating-sign α and γ, zero on fixed-count blocks.
pub fn mixed_params(spec: &ModelSpec) -> Parameters {
    let mut p = Parameters::zeros(spec);
    for (i, a) in p.alpha.iter_mut().enumerate() {
        *a = [0.4, -0.3, 0.2][i % 3];
    }
    for (k, g) in p.gamma.iter_mut().enumerate() {
        *g = if k % 2 == 0 { 0.8 } else { -0.5 };
    }
    p
}

/// Sampler fixtures with between 48 and 384 states, small enough that 10⁵
/// draws resolve the distribution well inside the TV tolerance. Free edges
/// use m = 3 because with m = 2 at θ = 0 every move flips one bit and is
/// accepted, making the chain periodic.
pub fn sampler_fixtures(max_n: usize) -> Result<Vec<Fixture>> {
    let mut out = Vec::new();
    let mut push = |name: &str, spec: ModelSpec, c: ConstraintSet| {
        if spec.n() <= max_n {
            out.push(Fixture {
                name: name.to_string(),
                spec,
                constraints: c,
            });
        }
    };
    let s = ModelSpec::with_level_counts(3, &[3])?;
    push("n3-free-m3", s.clone(), ConstraintSet::free(&s));
    let s = ModelSpec::with_level_counts(3, &[2, 2])?;
    push("n3-d1-K2", s.clone(), ConstraintSet::fixed_edges(&s, 1)?);
    let s = ModelSpec::with_level_counts(4, &[2])?;
    push("n4-d2-K1", s.clone(), ConstraintSet::fixed_edges(&s, 2)?);
    let s = ModelSpec::with_level_counts(4, &[2])?;
    push("n4-deg1111-K1", s.clone(), ConstraintSet::fixed_degrees(&s, vec![1; 4])?);
    let s = ModelSpec::with_level_counts(4, &[2, 2])?;
    let c = ConstraintSet::fixed_degrees(&s, vec![1; 4])?.with_attr(&s, 1, AttrConstraint::FixedLevelCounts(vec![2, 2]))?;
    push("n4-deg1111-K2-counts", s, c);
    let s = ModelSpec::with_level_counts(5, &[2])?;
    push("n5-deg22222-K1", s.clone(), ConstraintSet::fixed_degrees(&s, vec![2; 5])?);
    let s = ModelSpec::with_level_counts(5, &[2])?;
    let c = ConstraintSet::fixed_edges(&s, 1)?.with_attr(&s, 0, AttrConstraint::FixedLevelCounts(vec![3, 2]))?;
    push("n5-d1-counts", s, c);
    let s = ModelSpec::with_level_counts(5, &[2])?;
    let c = ConstraintSet::fixed_edges(&s, 9)?.with_attr(&s, 0, AttrConstraint::FixedLevelCounts(vec![3, 2]))?;
    push("n5-d9-counts", s, c);
    Ok(out)
}

/// n = 4 fixtures for the null-model and exchange-ratio checks.
pub fn small_fixtures() -> Result<Vec<Fixture>> {
    let s = ModelSpec::with_level_counts(4, &[2, 3])?;
    let fixed = ConstraintSet::fixed_edges(&s, 2)?;
    let free = ConstraintSet::free(&s);
    let counts = ConstraintSet::fixed_edges(&s, 3)?.with_attr(&s, 1, AttrConstraint::FixedLevelCounts(vec![1, 1, 2]))?;
    let s1 = ModelSpec::with_level_counts(4, &[2])?;
    Ok(vec![
        Fixture {
            name: "n4-d2-K2".into(),
            spec: s.clone(),
            constraints: fixed,
        },
        Fixture {
            name: "n4-free-K2".into(),
            spec: s.clone(),
            constraints: free,
        },
        Fixture {
            name: "n4-d3-K2-counts".into(),
            spec: s,
            constraints: counts,
        },
        Fixture {
            name: "n4-d2-K1".into(),
            spec: s1.clone(),
            constraints: ConstraintSet::fixed_edges(&s1, 2)?,
        },
    ])
}

/// Total-variation distance between the empirical distribution of `draws`
/// thinned sampler states and the exact distribution.
pub fn sampler_tv(fixture: &Fixture, params: &Parameters, draws: usize, seed: u64) -> Result<f64> {
    let exact = exact_distribution(&fixture.spec, &fixture.constraints, params)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init = random_feasible_state(&fixture.spec, &fixture.constraints, &mut rng)?;
    let config = InnerSamplerConfig::new(2_000).with_thinning(25);
    let mut freq: HashMap<JointState, usize> = HashMap::new();
    for item in stream_states(&fixture.spec, params, &fixture.constraints, &config, &init, draws, &mut rng)? {
        *freq.entry(item?.0).or_default() += 1;
    }
    let mut tv = 0.0;
    let n = draws as f64;
    for (s, p) in &exact {
        tv += (freq.remove(s).unwrap_or(0) as f64 / n - p).abs();
    }
    // anything left was sampled outside the enumerated space
    tv += freq.values().map(|&c| c as f64 / n).sum::<f64>();
    Ok(0.5 * tv)
}

/// Exact TV between the γ = 0 model and the null-model pmf.
pub fn null_model_tv(fixture: &Fixture, alpha: &[f64]) -> Result<f64> {
    let mut params = Parameters::zeros(&fixture.spec);
    params.alpha.copy_from_slice(alpha);
    let exact = exact_distribution(&fixture.spec, &fixture.constraints, &params)?;
    let mut tv = 0.0;
    for (s, p) in &exact {
        tv += (p - null_model_log_pmf(s, &fixture.spec, &fixture.constraints, alpha)?.exp()).abs();
    }
    Ok(0.5 * tv)
}

fn random_params<R: Rng>(spec: &ModelSpec, rng: &mut R) -> Parameters {
    let mut p = Parameters::zeros(spec);
    for i in 0..p.len() {
        p.set(i, rng.random_range(-2.0..2.0));
    }
    p
}

/// Largest absolute gap, over `tuples` random (θ, θ′, x⁰, x′), between the
/// exchange log-ratio and the same ratio built from normalized likelihoods.
pub fn ratio_max_error(fixture: &Fixture, prior: &Prior, tuples: usize, seed: u64) -> Result<f64> {
    let spec = &fixture.spec;
    let states = enumerate_space(spec, &fixture.constraints)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..tuples {
        let theta = random_params(spec, &mut rng);
        let theta_p = random_params(spec, &mut rng);
        let x0 = &states[rng.random_range(0..states.len())];
        let xp = &states[rng.random_range(0..states.len())];
        let (t0, tp) = (compute_stats(x0, spec)?, compute_stats(xp, spec)?);
        let z = exact_normalizer(spec, &fixture.constraints, &theta)?;
        let zp = exact_normalizer(spec, &fixture.constraints, &theta_p)?;
        let log_f = |t, th: &Parameters, z: f64| -> Result<f64> { Ok(log_kernel(t, th)? - z) };
        let brute = log_f(&t0, &theta_p, zp)? + prior.log_density(&theta_p) + log_f(&tp, &theta, z)?
            - log_f(&t0, &theta, z)?
            - prior.log_density(&theta)
            - log_f(&tp, &theta_p, zp)?;
        let fast = acceptance_log_ratio(&t0, &tp, &theta, &theta_p, prior)?;
        worst = worst.max((brute - fast).abs());
    }
    Ok(worst)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.value < self.tolerance
    }
}

/// Every oracle check on fixtures with at most `max_n` nodes.
pub fn run_oracle_suite(max_n: usize, seed: u64) -> Result<Vec<CheckResult>> {
    let mut out = Vec::new();
    for (i, f) in sampler_fixtures(max_n)?.iter().enumerate() {
        for (label, params) in [("theta0", Parameters::zeros(&f.spec)), ("mixed", mixed_params(&f.spec))] {
            out.push(CheckResult {
                name: format!("sampler_tv/{}/{label}", f.name),
                value: sampler_tv(f, &params, SAMPLER_DRAWS, seed.wrapping_add(i as u64))?,
                tolerance: SAMPLER_TV_TOLERANCE,
            });
        }
    }
    if max_n >= 4 {
        for f in small_fixtures()? {
            let alpha = mixed_params(&f.spec).alpha;
            out.push(CheckResult {
                name: format!("null_model_tv/{}", f.name),
                value: null_model_tv(&f, &alpha)?,
                tolerance: NULL_TV_TOLERANCE,
            });
            out.push(CheckResult {
                name: format!("exchange_ratio/{}", f.name),
                value: ratio_max_error(&f, &Prior::default(), 250, seed)?,
                tolerance: RATIO_TOLERANCE,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::space_size;

    #[test]
    fn fixtures_are_small_and_filtered() {
        let all = sampler_fixtures(5).unwrap();
        assert_eq!(all.len(), 8);
        for f in &all {
            let size = space_size(&f.spec, &f.constraints).unwrap();
            assert!((48..=384).contains(&size), "{} has {size}", f.name);
        }
        assert_eq!(sampler_fixtures(3).unwrap().len(), 2);
    }

    #[test]
    fn short_suite_runs() {
        let f = &sampler_fixtures(4).unwrap()[2];
        let tv = sampler_tv(f, &mixed_params(&f.spec), 20_000, 1).unwrap();
        assert!(tv < 0.1, "{tv}");
        let small = &small_fixtures().unwrap()[0];
        assert!(ratio_max_error(small, &Prior::default(), 20, 3).unwrap() < RATIO_TOLERANCE);
    }
}
