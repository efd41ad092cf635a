use std::path::Path;

use jointergm::analysis::{
    DegreeAccumulator, DegreeComparison, Histogram2d, MixingAccumulator, MixingTable, SimilarityAccumulator,
    SimilarityMatrix,
};
use jointergm::exchange::chain_rng;
use jointergm::error::{Error, Result};
use jointergm::model::ModelSpec;
use jointergm::oracle::null_model_sample;
use jointergm::params::Parameters;
use jointergm::sampler::{stream_states, InnerSamplerConfig};
use jointergm::state::JointState;

use crate::args::{GofArgs, Space};
use crate::fit::load_target;
use crate::output::{at_path, csv_at, num, prepare_dir, KeyValues};

/// Pooled posterior draws per parameter, in the column order of the file.
pub struct PosteriorTable {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl PosteriorTable {
    pub fn read(path: &Path) -> Result<Self> {
        let mut rdr = at_path(csv::Reader::from_path(path), path)?;
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["chain", "iter", "param_name", "value"] {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                message: "expected header chain,iter,param_name,value".into(),
            });
        }
        let mut names: Vec<String> = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
            let name = &rec[2];
            let v: f64 = rec[3].parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                line,
                message: format!("bad value `{}`", &rec[3]),
            })?;
            let i = match names.iter().position(|n| n == name) {
                Some(i) => i,
                None => {
                    names.push(name.to_string());
                    values.push(Vec::new());
                    names.len() - 1
                }
            };
            values[i].push(v);
        }
        if values.is_empty() || values.iter().any(|v| v.len() != values[0].len()) {
            return Err(Error::Data(format!("{}: ragged or empty posterior table", path.display())));
        }
        Ok(PosteriorTable { names, values })
    }

    /// Posterior mean as model parameters. Names must match `spec` exactly,
    /// which pins the level mapping to the one used by the fit.
    pub fn mean(&self, spec: &ModelSpec) -> Result<Parameters> {
        if self.names != spec.param_names() {
            return Err(Error::Data(format!(
                "posterior parameters [{}] do not match the component's [{}]",
                self.names.join(","),
                spec.param_names().join(",")
            )));
        }
        let means: Vec<f64> = self.values.iter().map(|v| v.iter().sum::<f64>() / v.len() as f64).collect();
        Parameters::from_flat(spec, &means)
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| Error::InvalidConfig(format!("no parameter named `{name}` in the fit")))
    }
}

/// Running GOF folds over one predictive source.
struct Folds {
    similarity: Vec<SimilarityAccumulator>,
    sum: SimilarityAccumulator,
    mixing: Vec<MixingAccumulator>,
    degrees: DegreeAccumulator,
}

struct Report {
    similarity: Vec<SimilarityMatrix>,
    sum: SimilarityMatrix,
    mixing: Vec<MixingTable>,
    degrees: DegreeComparison,
}

impl Folds {
    fn new(spec: &ModelSpec) -> Self {
        let n = spec.n();
        let k = spec.num_variables();
        Folds {
            similarity: (0..k).map(|v| SimilarityAccumulator::new(n, Some(v))).collect(),
            sum: SimilarityAccumulator::new(n, None),
            mixing: (0..k).map(|v| MixingAccumulator::new(v, spec.level_count(v))).collect(),
            degrees: DegreeAccumulator::new(n),
        }
    }

    fn add(&mut self, s: &JointState) -> Result<()> {
        for a in &mut self.similarity {
            a.add(s)?;
        }
        self.sum.add(s)?;
        for a in &mut self.mixing {
            a.add(s)?;
        }
        self.degrees.add(s)
    }

    fn finish(self, observed: &JointState) -> Result<Report> {
        Ok(Report {
            similarity: self.similarity.into_iter().map(|a| a.finish(observed)).collect::<Result<_>>()?,
            sum: self.sum.finish(observed)?,
            mixing: self.mixing.into_iter().map(|a| a.finish(observed)).collect::<Result<_>>()?,
            degrees: self.degrees.finish(observed)?,
        })
    }
}

pub fn run(args: &GofArgs) -> Result<()> {
    if args.draws == 0 {
        return Err(Error::InvalidConfig("need at least one predictive draw".into()));
    }
    let target = load_target(&args.target)?;
    let comp = &target.component;
    let spec = &comp.spec;
    let x0 = &comp.state;
    let table = PosteriorTable::read(&args.fit)?;
    let theta = table.mean(spec)?;

    let thin = args.thin.unwrap_or(InnerSamplerConfig::default_for(x0, spec).thinning);
    let cfg = InnerSamplerConfig::new(target.inner.steps).with_thinning(thin);
    let mut rng = chain_rng(args.seed, 0);
    let mut model = Folds::new(spec);
    for item in stream_states(spec, &theta, &target.constraints, &cfg, x0, args.draws, &mut rng)? {
        model.add(&item?.0)?;
    }
    let model = model.finish(x0)?;

    // the null model has no sampler on fixed-degree spaces
    let null = if target.space == Space::Degrees {
        eprintln!("note: null-model columns left empty on the fixed-degree space");
        None
    } else {
        let mut rng = chain_rng(args.seed, 1);
        let mut folds = Folds::new(spec);
        for _ in 0..args.draws {
            folds.add(&null_model_sample(spec, &target.constraints, &theta.alpha, &mut rng)?)?;
        }
        Some(folds.finish(x0)?)
    };

    let (hx, hy) = hist_pair(args, &table, spec)?;
    let hist = Histogram2d::from_values(
        &table.names[hx],
        &table.names[hy],
        &table.values[hx],
        &table.values[hy],
        args.hist_bins,
    )?;

    prepare_dir(&args.out)?;
    for (k, var) in spec.variables().iter().enumerate() {
        let nm = null.as_ref().map(|r| &r.mixing[k]);
        write_mixing(&args.out, &format!("mixing_{}.csv", var.name()), var.levels(), &model.mixing[k], nm)?;
        let ns = null.as_ref().map(|r| &r.similarity[k]);
        write_similarity(&args.out, &format!("similarity_{}.csv", var.name()), comp, &model.similarity[k], ns)?;
    }
    write_similarity(&args.out, "similarity_sum.csv", comp, &model.sum, null.as_ref().map(|r| &r.sum))?;
    write_degrees(&args.out, &model.degrees, null.as_ref().map(|r| &r.degrees))?;
    write_histogram(&args.out, &hist)?;

    let mut kv = KeyValues::default();
    kv.push("draws", args.draws);
    kv.push("burn_in", cfg.steps);
    kv.push("thinning", cfg.thinning);
    kv.push("seed", args.seed);
    kv.push("space", target.space.name());
    for (i, name) in table.names.iter().enumerate() {
        kv.push_f64(format!("{name}.mean"), theta.get(i));
    }
    let mut mse = |label: &str, m: &SimilarityMatrix, n: Option<&SimilarityMatrix>| {
        kv.push_f64(format!("similarity.{label}.mse.model"), m.mse());
        if let Some(n) = n {
            kv.push_f64(format!("similarity.{label}.mse.null"), n.mse());
        }
    };
    for (k, var) in spec.variables().iter().enumerate() {
        mse(var.name(), &model.similarity[k], null.as_ref().map(|r| &r.similarity[k]));
    }
    mse("sum", &model.sum, null.as_ref().map(|r| &r.sum));
    kv.write(&args.out.join("gof_summary.txt"))?;
    for (k, v) in kv.iter().filter(|(k, _)| k.starts_with("similarity.")) {
        println!("{k}={v}");
    }
    Ok(())
}

fn hist_pair(args: &GofArgs, table: &PosteriorTable, spec: &ModelSpec) -> Result<(usize, usize)> {
    match &args.hist_pair {
        Some(p) => Ok((table.index(&p[0])?, table.index(&p[1])?)),
        None => {
            let g = spec.alpha_len();
            let last = table.names.len() - 1;
            Ok((g.min(last), (g + 1).min(last)))
        }
    }
}

fn opt(x: Option<f64>) -> String {
    x.map(num).unwrap_or_default()
}

fn write_mixing(
    dir: &Path,
    name: &str,
    labels: &[String],
    model: &MixingTable,
    null: Option<&MixingTable>,
) -> Result<()> {
    let (mut w, _) = csv_at(dir, name)?;
    w.write_record(["level_a", "level_b", "model", "null", "observed"])?;
    for (h, g) in model.cells() {
        w.write_record([
            labels[h].clone(),
            labels[g].clone(),
            num(model.expected_at(h, g)),
            opt(null.map(|t| t.expected_at(h, g))),
            num(model.observed_at(h, g)),
        ])?;
    }
    let (me, mo) = (model.expected_marginals(), model.observed_marginals());
    let ne = null.map(|t| t.expected_marginals());
    for h in 0..labels.len() {
        w.write_record([
            labels[h].clone(),
            "total".to_string(),
            num(me[h]),
            opt(ne.as_ref().map(|v| v[h])),
            num(mo[h]),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_similarity(
    dir: &Path,
    name: &str,
    comp: &jointergm::dataset::Component,
    model: &SimilarityMatrix,
    null: Option<&SimilarityMatrix>,
) -> Result<()> {
    let (mut w, _) = csv_at(dir, name)?;
    w.write_record(["node_a", "node_b", "connected", "model", "null", "observed"])?;
    for (r, s) in model.pairs() {
        w.write_record([
            comp.node_ids[r].clone(),
            comp.node_ids[s].clone(),
            (comp.state.has_edge(r, s) as u8).to_string(),
            num(model.expected_at(r, s)),
            opt(null.map(|m| m.expected_at(r, s))),
            num(model.observed_at(r, s)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_degrees(dir: &Path, model: &DegreeComparison, null: Option<&DegreeComparison>) -> Result<()> {
    let (mut w, _) = csv_at(dir, "degree_sequence.csv")?;
    w.write_record(["rank", "model", "null", "observed"])?;
    for (i, (e, o)) in model.expected.iter().zip(&model.observed).enumerate() {
        w.write_record([
            (i + 1).to_string(),
            num(*e),
            opt(null.map(|d| d.expected[i])),
            o.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn write_histogram(dir: &Path, h: &Histogram2d) -> Result<()> {
    let (mut w, _) = csv_at(dir, "posterior_hist2d.csv")?;
    w.write_record(["x_param", "y_param", "x_lo", "x_hi", "y_lo", "y_hi", "count"])?;
    for i in 0..h.x_edges.len() - 1 {
        for j in 0..h.y_edges.len() - 1 {
            w.write_record([
                h.x_param.clone(),
                h.y_param.clone(),
                num(h.x_edges[i]),
                num(h.x_edges[i + 1]),
                num(h.y_edges[j]),
                num(h.y_edges[j + 1]),
                h.count(i, j).to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
