use std::path::Path;

use jointergm::analysis::posterior_summary;
use jointergm::dataset::{extract_component, load_dataset, Component};
use jointergm::error::{Error, Result};
use jointergm::exchange::{psrf, run_posterior, BlockPrior, ChainConfig, PosteriorSamples, Prior, ProposalScale};
use jointergm::sampler::InnerSamplerConfig;
use jointergm::space::ConstraintSet;

use crate::args::{ComponentArgs, FitArgs, Space};
use crate::output::{csv_at, num, prepare_dir, KeyValues};

pub const SEED_SCHEME: &str = "chacha8(seed_from_u64(seed)), stream = chain index";

/// One component of a dataset together with the space it is modelled in.
pub struct Target {
    pub component: Component,
    pub space: Space,
    pub constraints: ConstraintSet,
    pub inner: InnerSamplerConfig,
}

pub fn load_target(args: &ComponentArgs) -> Result<Target> {
    let dataset = load_dataset(&args.data.edges, &args.data.attrs)?;
    if dataset.duplicate_edges > 0 {
        eprintln!("warning: collapsed {} duplicate edge lines", dataset.duplicate_edges);
    }
    let component = extract_component(&dataset, args.component)?;
    let spec = &component.spec;
    let constraints = match args.space {
        Space::Edges => ConstraintSet::fixed_edges(spec, component.edge_count)?,
        Space::Degrees => ConstraintSet::fixed_degrees(spec, component.state.degrees())?,
        Space::Free => ConstraintSet::free(spec),
    };
    let mut inner = InnerSamplerConfig::default_for(&component.state, spec);
    if let Some(steps) = args.inner_steps {
        inner.steps = steps;
    }
    inner.validate()?;
    Ok(Target {
        component,
        space: args.space,
        constraints,
        inner,
    })
}

pub fn parse_prior(s: &str) -> Result<Prior> {
    if s == "flat" {
        return Ok(Prior::flat());
    }
    let bad = || Error::InvalidConfig(format!("prior must be `flat` or `normal:MEAN:SD`, got `{s}`"));
    let rest = s.strip_prefix("normal:").ok_or_else(bad)?;
    let (mean, sd) = rest.split_once(':').ok_or_else(bad)?;
    let mean: f64 = mean.parse().map_err(|_| bad())?;
    let sd: f64 = sd.parse().map_err(|_| bad())?;
    Ok(Prior::uniform_block(BlockPrior::gaussian(mean, sd)?))
}

pub fn run(args: &FitArgs) -> Result<()> {
    let target = load_target(&args.target)?;
    let prior = parse_prior(&args.prior)?;
    let cfg = ChainConfig {
        n_chains: args.chains,
        iterations: args.iters,
        burn_in: args.burn_in,
        thinning: args.thin,
        proposal_sd: ProposalScale::uniform(args.proposal_sd),
        seed: args.seed,
        adapt_burn_in: !args.no_adapt,
        anchor_reference: !args.no_anchor_reference,
        jitter_start: args.jitter_start,
    };
    let inner = target.inner.with_checks(args.debug_check_stats);
    let comp = &target.component;
    let samples = run_posterior(&comp.state, &comp.spec, &target.constraints, &prior, &cfg, &inner)?;

    prepare_dir(&args.out)?;
    write_posterior(&args.out, &samples)?;
    write_levels(&args.out, comp)?;
    write_nodes(&args.out, comp)?;
    let summary = summary_report(args, &target, &inner, &samples)?;
    summary.write(&args.out.join("summary.txt"))?;

    println!("param,mean,sd,q025,q975");
    for p in posterior_summary(&samples, None, 1)?.params {
        println!("{},{},{},{},{}", p.name, num(p.mean), num(p.sd), num(p.q025), num(p.q975));
    }
    Ok(())
}

fn write_posterior(dir: &Path, samples: &PosteriorSamples) -> Result<()> {
    let (mut w, _) = csv_at(dir, "posterior.csv")?;
    w.write_record(["chain", "iter", "param_name", "value"])?;
    for (c, chain) in samples.chains.iter().enumerate() {
        for (it, theta) in chain.iterations.iter().zip(&chain.draws) {
            for (i, name) in samples.param_names.iter().enumerate() {
                w.write_record([c.to_string(), it.to_string(), name.clone(), num(theta.get(i))])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

fn write_levels(dir: &Path, comp: &Component) -> Result<()> {
    let (mut w, _) = csv_at(dir, "levels.csv")?;
    w.write_record(["variable", "level_index", "label"])?;
    for v in comp.spec.variables() {
        for (h, l) in v.levels().iter().enumerate() {
            w.write_record([v.name(), &h.to_string(), l])?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_nodes(dir: &Path, comp: &Component) -> Result<()> {
    let (mut w, _) = csv_at(dir, "nodes.csv")?;
    let mut header = vec!["index".to_string(), "node_id".to_string()];
    header.extend(comp.spec.variables().iter().map(|v| v.name().to_string()));
    w.write_record(&header)?;
    for (i, id) in comp.node_ids.iter().enumerate() {
        let mut row = vec![i.to_string(), id.clone()];
        for (k, v) in comp.spec.variables().iter().enumerate() {
            row.push(v.levels()[comp.state.level(k, i)].clone());
        }
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

fn summary_report(
    args: &FitArgs,
    target: &Target,
    inner: &InnerSamplerConfig,
    samples: &PosteriorSamples,
) -> Result<KeyValues> {
    let comp = &target.component;
    let cfg = &samples.config;
    let mut kv = KeyValues::default();
    kv.push("component", args.target.component);
    kv.push("nodes", comp.spec.n());
    kv.push("edges", comp.edge_count);
    kv.push("space", target.space.name());
    kv.push(
        "variables",
        comp.spec.variables().iter().map(|v| v.name()).collect::<Vec<_>>().join(","),
    );
    kv.push("prior", &args.prior);
    kv.push("seed", cfg.seed);
    kv.push("seed_scheme", SEED_SCHEME);
    kv.push("chains", cfg.n_chains);
    kv.push("iterations", cfg.iterations);
    kv.push("burn_in", cfg.burn_in);
    kv.push("thinning", cfg.thinning);
    kv.push("inner_steps", inner.steps);
    kv.push_f64("proposal_sd", cfg.proposal_sd.gamma);
    kv.push("adapt_burn_in", cfg.adapt_burn_in);
    kv.push("anchor_reference", cfg.anchor_reference);
    kv.push("jitter_start", cfg.jitter_start);
    kv.push("draws", samples.total_draws());
    kv.push_f64("acceptance_rate", samples.acceptance_rate());
    for (c, ch) in samples.chains.iter().enumerate() {
        kv.push(format!("chain.{c}.stream"), ch.stream);
        kv.push_f64(format!("chain.{c}.acceptance_rate"), ch.acceptance_rate);
        kv.push_f64(format!("chain.{c}.burn_in_acceptance_rate"), ch.burn_in_acceptance_rate);
        kv.push_f64(format!("chain.{c}.proposal_scale"), ch.proposal_scale);
    }
    let psrf = match psrf(samples) {
        Ok(v) => Some(v),
        Err(e) => {
            kv.push("psrf", format!("unavailable ({e})"));
            None
        }
    };
    let summary = posterior_summary(samples, None, 1)?;
    for (i, p) in summary.params.iter().enumerate() {
        kv.push(format!("{}.free", p.name), samples.free.is_free(i));
        kv.push_f64(format!("{}.mean", p.name), p.mean);
        kv.push_f64(format!("{}.sd", p.name), p.sd);
        kv.push_f64(format!("{}.q025", p.name), p.q025);
        kv.push_f64(format!("{}.q975", p.name), p.q975);
        if let Some(r) = &psrf {
            if samples.free.is_free(i) {
                kv.push_f64(format!("{}.psrf", p.name), r[i]);
            }
        }
    }
    Ok(kv)
}
