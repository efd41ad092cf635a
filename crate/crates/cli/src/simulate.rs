use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use jointergm::dataset::Dataset;
use jointergm::error::{Error, Result};
use jointergm::model::{ModelSpec, Variable};
use jointergm::params::Parameters;
use jointergm::sampler::{degrees_of_freedom, stream_states, InnerSamplerConfig};
use jointergm::space::{random_feasible_state, AttrConstraint, ConstraintSet};

use crate::args::SimulateArgs;
use crate::output::{at_path, csv_at, read_key_values};

/// A model file: the model plus any fixed level counts it declares.
pub struct ModelFile {
    pub spec: ModelSpec,
    pub counts: Vec<(usize, Vec<usize>)>,
}

fn parse_error(path: &Path, message: String) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line: 0,
        message,
    }
}

pub fn read_model_file(path: &Path) -> Result<ModelFile> {
    let kv = read_key_values(path)?;
    let mut nodes = None;
    let mut variables = Vec::new();
    let mut raw_counts = Vec::new();
    for (k, v) in kv.iter() {
        match k {
            "nodes" => {
                nodes = Some(
                    v.parse::<usize>()
                        .map_err(|_| parse_error(path, format!("bad node count `{v}`")))?,
                )
            }
            "variable" => {
                let (name, levels) = v
                    .split_once(':')
                    .ok_or_else(|| parse_error(path, format!("expected NAME:L1|L2, got `{v}`")))?;
                let levels = levels.split('|').map(|l| l.trim().to_string()).collect();
                variables.push(Variable::new(name.trim(), levels)?);
            }
            "counts" => {
                let (name, counts) = v
                    .split_once(':')
                    .ok_or_else(|| parse_error(path, format!("expected NAME:C1|C2, got `{v}`")))?;
                let counts = counts
                    .split('|')
                    .map(|c| c.trim().parse::<usize>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| parse_error(path, format!("bad counts `{v}`")))?;
                raw_counts.push((name.trim().to_string(), counts));
            }
            other => return Err(parse_error(path, format!("unknown key `{other}`"))),
        }
    }
    let n = nodes.ok_or_else(|| parse_error(path, "missing `nodes=`".into()))?;
    let spec = ModelSpec::new(n, variables)?;
    let counts = raw_counts
        .into_iter()
        .map(|(name, c)| {
            spec.variable_index(&name)
                .map(|k| (k, c))
                .ok_or_else(|| parse_error(path, format!("counts for unknown variable `{name}`")))
        })
        .collect::<Result<_>>()?;
    Ok(ModelFile { spec, counts })
}

/// Reads `param_name,value` rows (header optional). Unlisted parameters are 0.
pub fn read_params(path: &Path, spec: &ModelSpec) -> Result<Parameters> {
    let names = spec.param_names();
    let mut flat = vec![0.0; names.len()];
    let rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path);
    let mut rdr = at_path(rdr, path)?;
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        let bad = |message: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            message,
        };
        if rec.len() != 2 {
            return Err(bad(format!("expected 2 fields, got {}", rec.len())));
        }
        if line == 1 && &rec[0] == "param_name" {
            continue;
        }
        let i = names
            .iter()
            .position(|n| n == &rec[0])
            .ok_or_else(|| bad(format!("unknown parameter `{}`", &rec[0])))?;
        flat[i] = rec[1].parse().map_err(|_| bad(format!("bad value `{}`", &rec[1])))?;
    }
    Parameters::from_flat(spec, &flat)
}

/// `edges:D`, `degrees:FILE` or `free`, combined with the model file's
/// fixed level counts.
pub fn parse_constraint(s: &str, model: &ModelFile) -> Result<ConstraintSet> {
    let spec = &model.spec;
    let mut c = if s == "free" {
        ConstraintSet::free(spec)
    } else if let Some(d) = s.strip_prefix("edges:") {
        let d = d
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("bad edge count in `{s}`")))?;
        ConstraintSet::fixed_edges(spec, d)?
    } else if let Some(file) = s.strip_prefix("degrees:") {
        let path = Path::new(file);
        let text = at_path(fs::read_to_string(path), path)?;
        let degrees = text
            .split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse::<usize>().map_err(|_| parse_error(path, format!("bad degree `{t}`"))))
            .collect::<Result<Vec<_>>>()?;
        ConstraintSet::fixed_degrees(spec, degrees)?
    } else {
        return Err(Error::InvalidConfig(format!(
            "constraint must be `edges:D`, `degrees:FILE` or `free`, got `{s}`"
        )));
    };
    for (k, counts) in &model.counts {
        c = c.with_attr(spec, *k, AttrConstraint::FixedLevelCounts(counts.clone()))?;
    }
    Ok(c)
}

pub fn node_ids(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("v{i}")).collect()
}

pub fn run(args: &SimulateArgs) -> Result<()> {
    let model = read_model_file(&args.spec)?;
    let spec = &model.spec;
    let params = read_params(&args.params, spec)?;
    let constraints = parse_constraint(&args.constraint, &model)?;
    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let init = random_feasible_state(spec, &constraints, &mut rng)?;
    let dof = degrees_of_freedom(&init, spec);
    let cfg = InnerSamplerConfig::new(args.steps.unwrap_or(10 * dof)).with_thinning(args.thin.unwrap_or(dof));

    crate::output::prepare_dir(&args.out)?;
    let (mut stats_w, _) = csv_at(&args.out, "stats.csv")?;
    let mut header = vec!["draw".to_string()];
    for v in spec.variables() {
        header.extend(v.levels().iter().map(|l| format!("A:{}:{}", v.name(), l)));
    }
    header.extend(spec.variables().iter().map(|v| format!("G:{}", v.name())));
    header.push("edges".to_string());
    stats_w.write_record(&header)?;
    let ids = node_ids(spec.n());
    for (i, item) in stream_states(spec, &params, &constraints, &cfg, &init, args.count, &mut rng)?.enumerate() {
        let (state, stats) = item?;
        let mut row = vec![i.to_string()];
        row.extend(stats.a_counts.iter().map(|c| c.to_string()));
        row.extend(stats.g_match.iter().map(|c| c.to_string()));
        row.push(state.edge_count().to_string());
        stats_w.write_record(&row)?;
        if !args.stats_only {
            let ds = Dataset::from_state(spec, &state, ids.clone())?;
            ds.write_edges(&args.out.join(format!("state_{i}_edges.csv")))?;
            ds.write_attributes(&args.out.join(format!("state_{i}_attrs.csv")))?;
        }
    }
    stats_w.flush()?;
    Ok(())
}
