//! Exchange-algorithm sampling of the posterior over (α, γ).
//!
//! Each iteration proposes θ′ by a Gaussian random walk, draws an auxiliary
//! state x′ at θ′, and accepts with
//!
//! ```text
//! log r = (T(x⁰) − T(x′))·(θ′ − θ) + log π(θ′) − log π(θ)
//! ```
//!
//! in which both normalizing constants cancel. The auxiliary draw is a
//! finite Metropolis run started at the observed state, so the sampler is
//! approximate in the inner-run length.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::params::Parameters;
use crate::sampler::{InnerSamplerConfig, MetropolisSampler};
use crate::space::{is_feasible, AttrConstraint, ConstraintSet};
use crate::state::JointState;
use crate::stats::{compute_stats, SufficientStats};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BlockPrior {
    /// Improper uniform density.
    Flat,
    Gaussian { mean: f64, sd: f64 },
}

impl BlockPrior {
    pub fn gaussian(mean: f64, sd: f64) -> Result<Self> {
        if !(sd > 0.0 && sd.is_finite() && mean.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "gaussian prior needs finite mean and sd > 0, got ({mean}, {sd})"
            )));
        }
        Ok(BlockPrior::Gaussian { mean, sd })
    }

    fn log_density(&self, x: f64) -> f64 {
        match *self {
            BlockPrior::Flat => 0.0,
            BlockPrior::Gaussian { mean, sd } => {
                let z = (x - mean) / sd;
                -0.5 * z * z - sd.ln() - 0.5 * (2.0 * std::f64::consts::PI).ln()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            BlockPrior::Flat => 0.0,
            BlockPrior::Gaussian { mean, .. } => mean,
        }
    }
}

/// Independent priors on every α and every γ component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prior {
    pub alpha: BlockPrior,
    pub gamma: BlockPrior,
}

impl Default for Prior {
    /// N(0, 5²) on every component.
    fn default() -> Self {
        Prior::uniform_block(BlockPrior::Gaussian { mean: 0.0, sd: 5.0 })
    }
}

impl Prior {
    pub fn flat() -> Self {
        Prior::uniform_block(BlockPrior::Flat)
    }

    pub fn uniform_block(block: BlockPrior) -> Self {
        Prior {
            alpha: block,
            gamma: block,
        }
    }

    pub fn is_improper(&self) -> bool {
        matches!(self.alpha, BlockPrior::Flat) || matches!(self.gamma, BlockPrior::Flat)
    }

    pub fn log_density(&self, params: &Parameters) -> f64 {
        params.alpha.iter().map(|&a| self.alpha.log_density(a)).sum::<f64>()
            + params.gamma.iter().map(|&g| self.gamma.log_density(g)).sum::<f64>()
    }

    /// Prior mean, with held components at zero.
    pub fn initial_point(&self, spec: &ModelSpec, free: &FreeMask) -> Parameters {
        let mut p = Parameters::zeros(spec);
        for i in 0..p.len() {
            if free.is_free(i) {
                let m = if i < spec.alpha_len() {
                    self.alpha.mean()
                } else {
                    self.gamma.mean()
                };
                p.set(i, m);
            }
        }
        p
    }
}

/// Which flat parameter components are sampled; the rest are held at 0.
///
/// Held: the whole α block of a variable with fixed level counts
/// (its counts never change), the reference level α_{k,0} when anchoring is
/// on, and any switched-off statistic block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FreeMask(Vec<bool>);

impl FreeMask {
    pub fn new(spec: &ModelSpec, constraints: &ConstraintSet, anchor_reference: bool) -> Self {
        let active = spec.active();
        let mut mask = Vec::with_capacity(spec.alpha_len() + spec.num_variables());
        for k in 0..spec.num_variables() {
            let fixed = matches!(constraints.attr(k), AttrConstraint::FixedLevelCounts(_));
            for h in 0..spec.level_count(k) {
                let held = !active.attribute_counts || fixed || (anchor_reference && h == 0);
                mask.push(!held);
            }
        }
        for _ in 0..spec.num_variables() {
            mask.push(active.edge_matches);
        }
        FreeMask(mask)
    }

    pub fn is_free(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Random-walk standard deviations per parameter block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProposalScale {
    pub alpha: f64,
    pub gamma: f64,
}

impl ProposalScale {
    pub fn uniform(sd: f64) -> Self {
        ProposalScale { alpha: sd, gamma: sd }
    }
}

impl Default for ProposalScale {
    fn default() -> Self {
        ProposalScale::uniform(0.1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub n_chains: usize,
    /// Total iterations per chain, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub proposal_sd: ProposalScale,
    pub seed: u64,
    /// Robbins–Monro scaling of the proposal during burn-in, frozen after.
    pub adapt_burn_in: bool,
    /// Hold α_{k,0} at zero for every variable.
    pub anchor_reference: bool,
    /// Start each chain at the prior mean plus N(0, (2·sd)²) noise.
    pub jitter_start: bool,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            n_chains: 3,
            iterations: 30_000,
            burn_in: 5_000,
            thinning: 1,
            proposal_sd: ProposalScale::default(),
            seed: 0,
            adapt_burn_in: true,
            anchor_reference: true,
            jitter_start: false,
        }
    }
}

impl ChainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_chains == 0 {
            return Err(Error::InvalidConfig("need at least one chain".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::InvalidConfig(format!(
                "burn-in {} must be below iterations {}",
                self.burn_in, self.iterations
            )));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        let ProposalScale { alpha, gamma } = self.proposal_sd;
        if !(alpha > 0.0 && gamma > 0.0 && alpha.is_finite() && gamma.is_finite()) {
            return Err(Error::InvalidConfig("proposal sd must be positive".into()));
        }
        Ok(())
    }

    /// Kept draws per chain, ⌊(iterations − burn_in) / thinning⌋.
    pub fn kept_per_chain(&self) -> usize {
        (self.iterations - self.burn_in) / self.thinning
    }
}

/// Generator of chain `chain`: ChaCha8 keyed by `seed`, on stream `chain`.
pub fn chain_rng(seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chain as u64);
    rng
}

/// Log of the exchange acceptance ratio with normalizers cancelled.
pub fn acceptance_log_ratio(
    stats_obs: &SufficientStats,
    stats_aux: &SufficientStats,
    theta: &Parameters,
    theta_p: &Parameters,
    prior: &Prior,
) -> Result<f64> {
    if stats_obs.a_counts.len() != theta.alpha.len()
        || stats_aux.a_counts.len() != theta.alpha.len()
        || theta_p.alpha.len() != theta.alpha.len()
        || stats_obs.g_match.len() != theta.gamma.len()
        || stats_aux.g_match.len() != theta.gamma.len()
        || theta_p.gamma.len() != theta.gamma.len()
    {
        return Err(Error::DimensionMismatch(
            "statistics and parameters disagree in length".into(),
        ));
    }
    let mut lr = 0.0;
    for i in 0..theta.alpha.len() {
        let dt = (stats_obs.a_counts[i] - stats_aux.a_counts[i]) as f64;
        if dt != 0.0 {
            lr += dt * (theta_p.alpha[i] - theta.alpha[i]);
        }
    }
    for i in 0..theta.gamma.len() {
        let dt = (stats_obs.g_match[i] - stats_aux.g_match[i]) as f64;
        if dt != 0.0 {
            lr += dt * (theta_p.gamma[i] - theta.gamma[i]);
        }
    }
    lr += prior.log_density(theta_p) - prior.log_density(theta);
    if lr.is_nan() || lr == f64::INFINITY {
        return Err(Error::NonFinite(format!("exchange log ratio {lr}")));
    }
    Ok(lr)
}

/// One exchange chain: owns its auxiliary sampler and scratch state.
#[derive(Debug, Clone)]
pub struct ExchangeChain {
    x0: JointState,
    data_stats: SufficientStats,
    inner_steps: usize,
    prior: Prior,
    free: FreeMask,
    base_sd: Vec<f64>,
    log_scale: f64,
    sampler: MetropolisSampler,
    scratch: JointState,
    aux_stats: SufficientStats,
    theta: Parameters,
    proposal: Parameters,
}

impl ExchangeChain {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        spec: &ModelSpec,
        constraints: &ConstraintSet,
        x0: &JointState,
        inner: &InnerSamplerConfig,
        prior: Prior,
        proposal_sd: ProposalScale,
        free: FreeMask,
        theta: Parameters,
    ) -> Result<Self> {
        inner.validate()?;
        x0.conforms_to(spec)?;
        theta.check(spec)?;
        if !is_feasible(x0, constraints) {
            return Err(Error::Infeasible("observed state".into()));
        }
        if free.len() != theta.len() {
            return Err(Error::DimensionMismatch("free mask length".into()));
        }
        let data_stats = compute_stats(x0, spec)?;
        let base_sd = (0..theta.len())
            .map(|i| {
                if i < spec.alpha_len() {
                    proposal_sd.alpha
                } else {
                    proposal_sd.gamma
                }
            })
            .collect();
        Ok(ExchangeChain {
            x0: x0.clone(),
            aux_stats: data_stats.clone(),
            data_stats,
            inner_steps: inner.steps,
            prior,
            free,
            base_sd,
            log_scale: 0.0,
            sampler: MetropolisSampler::new(spec, constraints)?.with_checks(inner.debug_check_stats),
            scratch: x0.clone(),
            proposal: theta.clone(),
            theta,
        })
    }

    pub fn theta(&self) -> &Parameters {
        &self.theta
    }

    /// Current multiplier on the base proposal sd.
    pub fn proposal_scale(&self) -> f64 {
        self.log_scale.exp()
    }

    pub fn set_log_scale(&mut self, log_scale: f64) {
        self.log_scale = log_scale;
    }

    /// One exchange iteration; returns whether θ′ was accepted.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<bool> {
        let scale = self.log_scale.exp();
        for i in 0..self.theta.len() {
            let v = if self.free.is_free(i) {
                let z: f64 = StandardNormal.sample(rng);
                self.theta.get(i) + scale * self.base_sd[i] * z
            } else {
                self.theta.get(i)
            };
            self.proposal.set(i, v);
        }
        self.scratch.clone_from(&self.x0);
        self.aux_stats.clone_from(&self.data_stats);
        self.sampler.run(
            &mut self.scratch,
            &mut self.aux_stats,
            &self.proposal,
            self.inner_steps,
            rng,
        )?;
        let lr = acceptance_log_ratio(
            &self.data_stats,
            &self.aux_stats,
            &self.theta,
            &self.proposal,
            &self.prior,
        )?;
        let accept = lr >= 0.0 || rng.random::<f64>() < lr.exp();
        if accept {
            std::mem::swap(&mut self.theta, &mut self.proposal);
        }
        Ok(accept)
    }
}

/// A single exchange step from `theta`; builds a throwaway chain.
#[allow(clippy::too_many_arguments)]
pub fn exchange_step<R: Rng + ?Sized>(
    theta: &Parameters,
    spec: &ModelSpec,
    x0: &JointState,
    constraints: &ConstraintSet,
    inner: &InnerSamplerConfig,
    prior: &Prior,
    proposal_sd: ProposalScale,
    free: &FreeMask,
    rng: &mut R,
) -> Result<(Parameters, bool)> {
    let mut chain = ExchangeChain::new(
        spec,
        constraints,
        x0,
        inner,
        *prior,
        proposal_sd,
        free.clone(),
        theta.clone(),
    )?;
    let accepted = chain.step(rng)?;
    Ok((chain.theta.clone(), accepted))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    /// ChaCha8 stream index used for this chain.
    pub stream: u64,
    /// Iteration index (0-based, burn-in included) of each kept draw.
    pub iterations: Vec<usize>,
    pub draws: Vec<Parameters>,
    /// Whether the iteration that produced each kept draw accepted.
    pub accepted: Vec<bool>,
    /// Acceptance rate over all post-burn-in iterations.
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: f64,
    /// Proposal multiplier frozen at the end of burn-in.
    pub proposal_scale: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSamples {
    pub param_names: Vec<String>,
    pub free: FreeMask,
    pub config: ChainConfig,
    pub chains: Vec<ChainDraws>,
}

impl PosteriorSamples {
    pub fn total_draws(&self) -> usize {
        self.chains.iter().map(|c| c.draws.len()).sum()
    }

    /// Kept values of flat parameter `i`, chain by chain.
    pub fn traces(&self, i: usize) -> Vec<Vec<f64>> {
        self.chains
            .iter()
            .map(|c| c.draws.iter().map(|p| p.get(i)).collect())
            .collect()
    }

    pub fn pooled(&self, i: usize) -> Vec<f64> {
        self.traces(i).into_iter().flatten().collect()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.param_names.iter().position(|n| n == name)
    }

    pub fn acceptance_rate(&self) -> f64 {
        let n = self.chains.len() as f64;
        self.chains.iter().map(|c| c.acceptance_rate).sum::<f64>() / n
    }
}

const TARGET_ACCEPTANCE: f64 = 0.234;

/// Runs `chain_cfg.n_chains` independent exchange chains from the prior
/// mean (optionally jittered). Deterministic in `chain_cfg.seed`.
pub fn run_posterior(
    x0: &JointState,
    spec: &ModelSpec,
    constraints: &ConstraintSet,
    prior: &Prior,
    chain_cfg: &ChainConfig,
    inner_cfg: &InnerSamplerConfig,
) -> Result<PosteriorSamples> {
    chain_cfg.validate()?;
    inner_cfg.validate()?;
    let free = FreeMask::new(spec, constraints, chain_cfg.anchor_reference);
    if free.count() == 0 {
        return Err(Error::InvalidConfig("no free parameters to sample".into()));
    }
    let chains = (0..chain_cfg.n_chains)
        .into_par_iter()
        .map(|c| run_chain(c, x0, spec, constraints, prior, chain_cfg, inner_cfg, &free))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorSamples {
        param_names: spec.param_names(),
        free,
        config: chain_cfg.clone(),
        chains,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_chain(
    c: usize,
    x0: &JointState,
    spec: &ModelSpec,
    constraints: &ConstraintSet,
    prior: &Prior,
    cfg: &ChainConfig,
    inner: &InnerSamplerConfig,
    free: &FreeMask,
) -> Result<ChainDraws> {
    let mut rng = chain_rng(cfg.seed, c);
    let mut theta = prior.initial_point(spec, free);
    if cfg.jitter_start {
        for i in 0..theta.len() {
            if free.is_free(i) {
                let sd = if i < spec.alpha_len() {
                    cfg.proposal_sd.alpha
                } else {
                    cfg.proposal_sd.gamma
                };
                let z: f64 = StandardNormal.sample(&mut rng);
                theta.set(i, theta.get(i) + 2.0 * sd * z);
            }
        }
    }
    let mut chain = ExchangeChain::new(
        spec,
        constraints,
        x0,
        inner,
        *prior,
        cfg.proposal_sd,
        free.clone(),
        theta,
    )?;
    let kept = cfg.kept_per_chain();
    let mut out = ChainDraws {
        stream: c as u64,
        iterations: Vec::with_capacity(kept),
        draws: Vec::with_capacity(kept),
        accepted: Vec::with_capacity(kept),
        acceptance_rate: 0.0,
        burn_in_acceptance_rate: 0.0,
        proposal_scale: 1.0,
    };
    let mut burn_acc = 0usize;
    let mut post_acc = 0usize;
    for it in 0..cfg.iterations {
        let accepted = chain.step(&mut rng)?;
        if it < cfg.burn_in {
            burn_acc += accepted as usize;
            if cfg.adapt_burn_in {
                let rate = ((it + 1) as f64).powf(-0.6);
                let a = if accepted { 1.0 } else { 0.0 };
                let ls = (chain.log_scale + rate * (a - TARGET_ACCEPTANCE)).clamp(-10.0, 5.0);
                chain.set_log_scale(ls);
            }
            continue;
        }
        post_acc += accepted as usize;
        if (it - cfg.burn_in + 1) % cfg.thinning == 0 {
            out.iterations.push(it);
            out.draws.push(chain.theta.clone());
            out.accepted.push(accepted);
        }
    }
    out.acceptance_rate = post_acc as f64 / (cfg.iterations - cfg.burn_in) as f64;
    out.burn_in_acceptance_rate = if cfg.burn_in > 0 {
        burn_acc as f64 / cfg.burn_in as f64
    } else {
        0.0
    };
    out.proposal_scale = chain.proposal_scale();
    Ok(out)
}

/// Gelman–Rubin potential scale reduction per flat parameter.
///
/// Zero within-chain variance gives 1.0 when the chain means agree (the
/// degenerate limit, e.g. held parameters) and +∞ otherwise.
pub fn psrf(samples: &PosteriorSamples) -> Result<Vec<f64>> {
    let m = samples.chains.len();
    if m < 2 {
        return Err(Error::InsufficientSamples(format!("psrf needs ≥ 2 chains, have {m}")));
    }
    let len = samples.chains.iter().map(|c| c.draws.len()).min().unwrap_or(0);
    if len < 10 {
        return Err(Error::InsufficientSamples(format!(
            "psrf needs ≥ 10 draws per chain, have {len}"
        )));
    }
    let nparams = samples.param_names.len();
    let nf = len as f64;
    let mut out = Vec::with_capacity(nparams);
    for i in 0..nparams {
        let traces: Vec<Vec<f64>> = samples
            .traces(i)
            .into_iter()
            .map(|mut t| {
                t.truncate(len);
                t
            })
            .collect();
        let means: Vec<f64> = traces.iter().map(|t| t.iter().sum::<f64>() / nf).collect();
        let grand = means.iter().sum::<f64>() / m as f64;
        let between = nf / (m as f64 - 1.0) * means.iter().map(|&x| (x - grand).powi(2)).sum::<f64>();
        let within = traces
            .iter()
            .zip(&means)
            .map(|(t, &mu)| t.iter().map(|&x| (x - mu).powi(2)).sum::<f64>() / (nf - 1.0))
            .sum::<f64>()
            / m as f64;
        let r = if within == 0.0 {
            if between == 0.0 {
                1.0
            } else {
                f64::INFINITY
            }
        } else {
            let var_plus = (nf - 1.0) / nf * within + between / nf;
            (var_plus / within).sqrt()
        };
        out.push(r);
    }
    Ok(out)
}
