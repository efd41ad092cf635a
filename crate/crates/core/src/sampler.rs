//! Metropolis sampling of states from P(· | θ) on a constrained space.
//!
//! Statistics are carried incrementally through move deltas; the exchange
//! sampler only ever needs the statistics of its auxiliary draw.

use rand::Rng;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::params::Parameters;
use crate::space::{is_feasible, ConstraintSet, Proposer};
use crate::state::JointState;
use crate::stats::{compute_stats, StatsDelta, SufficientStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct InnerSamplerConfig {
    /// Metropolis updates per auxiliary draw (also the burn-in of a stream).
    pub steps: usize,
    /// Updates between kept snapshots in streaming mode.
    pub thinning: usize,
    /// Recompute statistics and feasibility after every step.
    pub debug_check_stats: bool,
}

impl InnerSamplerConfig {
    pub fn new(steps: usize) -> Self {
        InnerSamplerConfig {
            steps,
            thinning: 1,
            debug_check_stats: false,
        }
    }

    pub fn with_thinning(mut self, thinning: usize) -> Self {
        self.thinning = thinning;
        self
    }

    pub fn with_checks(mut self, on: bool) -> Self {
        self.debug_check_stats = on;
        self
    }

    /// Ten updates per mutable degree of freedom (present edges plus one
    /// degree per node and variable).
    pub fn default_for(state: &JointState, spec: &ModelSpec) -> Self {
        Self::new(10 * degrees_of_freedom(state, spec)).with_thinning(degrees_of_freedom(state, spec))
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidConfig("inner steps must be at least 1".into()));
        }
        if self.thinning == 0 {
            return Err(Error::InvalidConfig("thinning must be at least 1".into()));
        }
        Ok(())
    }
}

/// Present edges plus nodes × variables, floored at 1.
pub fn degrees_of_freedom(state: &JointState, spec: &ModelSpec) -> usize {
    (state.edge_count() + spec.n() * spec.num_variables()).max(1)
}

/// Outcome counters of a Metropolis run.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunInfo {
    pub proposed: usize,
    pub accepted: usize,
    pub null_proposals: usize,
}

/// Reusable Metropolis kernel: one per thread.
#[derive(Debug, Clone)]
pub struct MetropolisSampler {
    spec: ModelSpec,
    constraints: ConstraintSet,
    proposer: Proposer,
    delta: StatsDelta,
    check: bool,
}

impl MetropolisSampler {
    pub fn new(spec: &ModelSpec, constraints: &ConstraintSet) -> Result<Self> {
        Ok(MetropolisSampler {
            spec: spec.clone(),
            constraints: constraints.clone(),
            proposer: Proposer::new(spec, constraints)?,
            delta: StatsDelta::zeros(spec),
            check: false,
        })
    }

    pub fn with_checks(mut self, on: bool) -> Self {
        self.check = on;
        self
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn constraints(&self) -> &ConstraintSet {
        &self.constraints
    }

    /// One Metropolis update; returns whether the state changed.
    ///
    /// `stats` must equal `compute_stats(state)` on entry and is kept in
    /// sync.
    #[inline]
    pub fn step<R: Rng + ?Sized>(
        &mut self,
        state: &mut JointState,
        stats: &mut SufficientStats,
        params: &Parameters,
        rng: &mut R,
        info: &mut RunInfo,
    ) -> Result<bool> {
        info.proposed += 1;
        let mv = match self.proposer.propose(state, rng) {
            Ok(Some(mv)) => mv,
            Ok(None) => {
                info.null_proposals += 1;
                return Ok(false);
            }
            // a boundary state with no available move is a rejected step
            Err(Error::DegenerateSpace(_)) => {
                info.null_proposals += 1;
                return Ok(false);
            }
            Err(e) => return Err(e),
        };
        mv.delta_into(state, &self.spec, &mut self.delta);
        let log_acc = self.delta.dot(params);
        if !log_acc.is_finite() {
            return Err(Error::NonFinite(format!(
                "acceptance exponent {log_acc} for move {mv:?}"
            )));
        }
        let accept = log_acc >= 0.0 || rng.random::<f64>() < log_acc.exp();
        if accept {
            mv.apply_unchecked(state);
            stats.apply(&self.delta);
            info.accepted += 1;
        }
        if self.check {
            if *stats != compute_stats(state, &self.spec)? {
                return Err(Error::StatsDrift {
                    step: info.proposed,
                });
            }
            if !is_feasible(state, &self.constraints) {
                return Err(Error::Infeasible(format!(
                    "after step {} ({mv:?})",
                    info.proposed
                )));
            }
        }
        Ok(accept)
    }

    pub fn run<R: Rng + ?Sized>(
        &mut self,
        state: &mut JointState,
        stats: &mut SufficientStats,
        params: &Parameters,
        steps: usize,
        rng: &mut R,
    ) -> Result<RunInfo> {
        let mut info = RunInfo::default();
        for _ in 0..steps {
            self.step(state, stats, params, rng, &mut info)?;
        }
        Ok(info)
    }
}

fn check_init(
    spec: &ModelSpec,
    params: &Parameters,
    constraints: &ConstraintSet,
    init: &JointState,
) -> Result<()> {
    params.check(spec)?;
    init.conforms_to(spec)?;
    if !is_feasible(init, constraints) {
        return Err(Error::Infeasible("initial state".into()));
    }
    Ok(())
}

/// Runs `config.steps` Metropolis updates from `init` and returns the final
/// state with its statistics.
pub fn sample_state<R: Rng + ?Sized>(
    spec: &ModelSpec,
    params: &Parameters,
    constraints: &ConstraintSet,
    config: &InnerSamplerConfig,
    init: &JointState,
    rng: &mut R,
) -> Result<(JointState, SufficientStats)> {
    config.validate()?;
    check_init(spec, params, constraints, init)?;
    let mut sampler = MetropolisSampler::new(spec, constraints)?.with_checks(config.debug_check_stats);
    let mut state = init.clone();
    let mut stats = compute_stats(&state, spec)?;
    sampler.run(&mut state, &mut stats, params, config.steps, rng)?;
    Ok((state, stats))
}

/// Iterator over thinned state snapshots, created by [`stream_states`].
pub struct StateStream<'r, R: Rng + ?Sized> {
    sampler: MetropolisSampler,
    params: Parameters,
    state: JointState,
    stats: SufficientStats,
    thinning: usize,
    remaining: usize,
    burn_in: Option<usize>,
    check: bool,
    rng: &'r mut R,
}

impl<R: Rng + ?Sized> Iterator for StateStream<'_, R> {
    type Item = Result<(JointState, SufficientStats)>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.remaining == 0 {
            return None;
        }
        let steps = match self.burn_in.take() {
            Some(b) => b,
            None => self.thinning,
        };
        if let Err(e) = self
            .sampler
            .run(&mut self.state, &mut self.stats, &self.params, steps, self.rng)
        {
            self.remaining = 0;
            return Some(Err(e));
        }
        self.remaining -= 1;
        if self.check {
            match compute_stats(&self.state, self.sampler.spec()) {
                Ok(full) if full == self.stats => {}
                Ok(_) => return Some(Err(Error::StatsDrift { step: 0 })),
                Err(e) => return Some(Err(e)),
            }
        }
        Some(Ok((self.state.clone(), self.stats.clone())))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

/// Streams `count` snapshots: the first after `config.steps` burn-in
/// updates, then one every `config.thinning` updates. With `count == 1` this
/// is [`sample_state`].
pub fn stream_states<'r, R: Rng + ?Sized>(
    spec: &ModelSpec,
    params: &Parameters,
    constraints: &ConstraintSet,
    config: &InnerSamplerConfig,
    init: &JointState,
    count: usize,
    rng: &'r mut R,
) -> Result<StateStream<'r, R>> {
    config.validate()?;
    if count == 0 {
        return Err(Error::InvalidConfig("stream count must be at least 1".into()));
    }
    check_init(spec, params, constraints, init)?;
    let sampler = MetropolisSampler::new(spec, constraints)?.with_checks(config.debug_check_stats);
    let stats = compute_stats(init, spec)?;
    Ok(StateStream {
        sampler,
        params: params.clone(),
        state: init.clone(),
        stats,
        thinning: config.thinning,
        remaining: count,
        burn_in: Some(config.steps),
        check: config.debug_check_stats,
        rng,
    })
}
