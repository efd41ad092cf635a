use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jointergm::analysis::{gof_degree_sequence, gof_edge_mixing, gof_similarity, posterior_summary};
use jointergm::exchange::{psrf, run_posterior, BlockPrior, ChainConfig, Prior, ProposalScale};
use jointergm::model::ModelSpec;
use jointergm::oracle::{exact_expectation, exact_posterior_grid, null_model_sample};
use jointergm::params::Parameters;
use jointergm::sampler::{sample_state, stream_states, InnerSamplerConfig};
use jointergm::space::{random_feasible_state, ConstraintSet};
use jointergm::state::JointState;

const PSRF_LIMIT: f64 = 1.1;
const GRID_MEAN_TOLERANCE: f64 = 0.02;

/// n = 4, one binary variable, a two-edge path with c₁ = 2 and g = 1.
fn toy() -> (ModelSpec, ConstraintSet, JointState) {
    let spec = ModelSpec::with_level_counts(4, &[2]).unwrap();
    let c = ConstraintSet::fixed_edges(&spec, 2).unwrap();
    let x0 = JointState::from_parts(&spec, &[(0, 1), (1, 2)], vec![vec![0, 0, 1, 1]]).unwrap();
    (spec, c, x0)
}

fn grid_means(spec: &ModelSpec, c: &ConstraintSet, x0: &JointState, prior: &Prior) -> (f64, f64) {
    let (lim, h) = (8.0f64, 0.02f64);
    let steps = (2.0 * lim / h).round() as usize;
    let axis: Vec<f64> = (0..=steps).map(|i| -lim + h * i as f64).collect();
    let mut grid = Vec::new();
    for &a in &axis {
        for &g in &axis {
            grid.push(Parameters::new(spec, vec![0.0, a], vec![g]).unwrap());
        }
    }
    let post = exact_posterior_grid(x0, spec, c, prior, &grid).unwrap();
    let mut means = (0.0, 0.0);
    for (p, lp) in &post {
        let w = lp.exp();
        means.0 += w * p.alpha[1];
        means.1 += w * p.gamma[0];
    }
    means
}

#[test]
fn tiny_fit_converges_and_matches_grid_mean() {
    let (spec, c, x0) = toy();
    let t = jointergm::stats::compute_stats(&x0, &spec).unwrap();
    assert_eq!((t.a_counts[1], t.g_match[0]), (2, 1));
    let cfg = ChainConfig {
        n_chains: 4,
        iterations: 2_000 + 5 * 40_000,
        burn_in: 2_000,
        thinning: 5,
        proposal_sd: ProposalScale::uniform(1.0),
        seed: 17,
        ..ChainConfig::default()
    };
    let prior = Prior::uniform_block(BlockPrior::gaussian(0.0, 1.0).unwrap());
    let samples = run_posterior(&x0, &spec, &c, &prior, &cfg, &InnerSamplerConfig::new(200)).unwrap();
    let r = psrf(&samples).unwrap();
    for i in 0..r.len() {
        if samples.free.is_free(i) {
            assert!(r[i] < PSRF_LIMIT, "psrf[{i}] = {}", r[i]);
        }
    }
    let s = posterior_summary(&samples, None, 1).unwrap();
    let (ga, gg) = grid_means(&spec, &c, &x0, &prior);
    let (ma, mg) = (s.params[1].mean, s.params[2].mean);
    assert!((ma - ga).abs() < GRID_MEAN_TOLERANCE, "alpha mean {ma} vs grid {ga} (sd {})", s.params[1].sd);
    assert!((mg - gg).abs() < GRID_MEAN_TOLERANCE, "gamma mean {mg} vs grid {gg} (sd {})", s.params[2].sd);
}

#[test]
fn anchored_reference_is_zero_in_every_draw() {
    let spec = ModelSpec::with_level_counts(8, &[2, 3]).unwrap();
    let c = ConstraintSet::fixed_edges(&spec, 9).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let x0 = random_feasible_state(&spec, &c, &mut rng).unwrap();
    let cfg = ChainConfig {
        n_chains: 2,
        iterations: 600,
        burn_in: 100,
        seed: 5,
        ..ChainConfig::default()
    };
    let samples = run_posterior(&x0, &spec, &c, &Prior::default(), &cfg, &InnerSamplerConfig::new(100)).unwrap();
    for k in 0..spec.num_variables() {
        let i = spec.alpha_offset(k);
        assert!(!samples.free.is_free(i));
        assert!(samples.pooled(i).iter().all(|&v| v == 0.0));
        assert!(samples.pooled(i + 1).iter().any(|&v| v != 0.0));
    }
}

#[test]
fn null_mixing_matches_exact_expectation() {
    let spec = ModelSpec::with_level_counts(4, &[3]).unwrap();
    let c = ConstraintSet::fixed_edges(&spec, 3).unwrap();
    let alpha = [0.7, -0.2, 0.0];
    let mut theta = Parameters::zeros(&spec);
    theta.alpha.copy_from_slice(&alpha);
    let draws = 40_000;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let states: Vec<JointState> = (0..draws)
        .map(|_| null_model_sample(&spec, &c, &alpha, &mut rng).unwrap())
        .collect();
    let table = gof_edge_mixing(&states, &states[0], 0, 3).unwrap();
    for (idx, (h, g)) in table.cells().collect::<Vec<_>>().into_iter().enumerate() {
        let exact = exact_expectation(&spec, &c, &theta, |s| {
            let hits = s
                .edges()
                .filter(|&(r, q)| {
                    let (a, b) = (s.level(0, r), s.level(0, q));
                    (a.min(b), a.max(b)) == (h, g)
                })
                .count();
            hits as f64 / s.edge_count() as f64
        })
        .unwrap();
        let se = (exact * (1.0 - exact) / draws as f64).sqrt().max(1e-6);
        let got = table.expected[idx];
        assert!((got - exact).abs() < 4.0 * se, "cell ({h},{g}): {got} vs {exact}");
    }
}

#[test]
fn fixed_degree_space_reproduces_observed_degrees() {
    let spec = ModelSpec::with_level_counts(10, &[2]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x0 = random_feasible_state(&spec, &ConstraintSet::fixed_edges(&spec, 14).unwrap(), &mut rng).unwrap();
    let c = ConstraintSet::fixed_degrees(&spec, x0.degrees()).unwrap();
    let theta = Parameters::new(&spec, vec![0.0, 0.3], vec![0.8]).unwrap();
    let cfg = InnerSamplerConfig::new(50).with_thinning(20);
    let states: Vec<JointState> = stream_states(&spec, &theta, &c, &cfg, &x0, 200, &mut rng)
        .unwrap()
        .map(|r| r.unwrap().0)
        .collect();
    let cmp = gof_degree_sequence(&states, &x0).unwrap();
    let observed: Vec<f64> = cmp.observed.iter().map(|&d| d as f64).collect();
    assert_eq!(cmp.expected, observed);
    assert!(states.iter().any(|s| s != &x0));
}

#[test]
fn fitted_model_raises_similarity_on_connected_pairs() {
    let spec = ModelSpec::with_level_counts(30, &[2, 4]).unwrap();
    let c = ConstraintSet::fixed_edges(&spec, 100).unwrap();
    let truth = Parameters::new(&spec, vec![0.0; 6], vec![0.0, 1.0]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let init = random_feasible_state(&spec, &c, &mut rng).unwrap();
    let (x0, _) = sample_state(&spec, &truth, &c, &InnerSamplerConfig::new(160_000), &init, &mut rng).unwrap();
    let cfg = ChainConfig {
        n_chains: 1,
        iterations: 4_000,
        burn_in: 1_000,
        seed: 1,
        ..ChainConfig::default()
    };
    let inner = InnerSamplerConfig::default_for(&x0, &spec);
    let samples = run_posterior(&x0, &spec, &c, &Prior::default(), &cfg, &inner).unwrap();
    let s = posterior_summary(&samples, None, 1).unwrap();
    let theta = Parameters::from_flat(&spec, &s.params.iter().map(|p| p.mean).collect::<Vec<_>>()).unwrap();

    let draws = 500;
    let fitted: Vec<JointState> = stream_states(&spec, &theta, &c, &inner, &x0, draws, &mut rng)
        .unwrap()
        .map(|r| r.unwrap().0)
        .collect();
    let null: Vec<JointState> = (0..draws)
        .map(|_| null_model_sample(&spec, &c, &theta.alpha, &mut rng).unwrap())
        .collect();
    let (f, n) = (gof_similarity(&fitted, &x0, Some(1)).unwrap(), gof_similarity(&null, &x0, Some(1)).unwrap());
    let connected: Vec<(usize, usize)> = f.pairs().filter(|&(r, q)| x0.has_edge(r, q)).collect();
    let mean = |m: &jointergm::analysis::SimilarityMatrix| {
        connected.iter().map(|&(r, q)| m.expected_at(r, q)).sum::<f64>() / connected.len() as f64
    };
    assert!(mean(&f) > mean(&n), "fitted {} vs null {}", mean(&f), mean(&n));
}
