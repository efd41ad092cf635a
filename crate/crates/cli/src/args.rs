use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "jointergm", version, about = "Joint attribute and network ERGM with exchange-algorithm estimation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print the connected components of a dataset, largest first.
    Components(DataArgs),
    /// Sample the posterior of (α, γ) for one component.
    Fit(FitArgs),
    /// Simulate states from the model at given parameters.
    Simulate(SimulateArgs),
    /// Posterior-predictive mixing tables, similarities and degree sequences.
    Gof(GofArgs),
    /// Run the sampler, null-model and exchange-ratio checks against exact enumeration.
    OracleCheck(OracleArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub attrs: PathBuf,
}

/// Sample space the component is fitted in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Space {
    /// Edge count fixed at the observed value, attributes free.
    Edges,
    /// Degree sequence fixed at the observed one, attributes free.
    Degrees,
    /// Edges and attributes free.
    Free,
}

impl Space {
    pub fn name(self) -> &'static str {
        match self {
            Space::Edges => "edges",
            Space::Degrees => "degrees",
            Space::Free => "free",
        }
    }
}

#[derive(Debug, Args)]
pub struct ComponentArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// 1-based rank of the component by size.
    #[arg(long, default_value_t = 1)]
    pub component: usize,
    #[arg(long, value_enum, default_value_t = Space::Edges)]
    pub space: Space,
    /// Metropolis updates per auxiliary draw [default: 10 × (edges + nodes × variables)].
    #[arg(long)]
    pub inner_steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub target: ComponentArgs,
    #[arg(long, default_value_t = 3)]
    pub chains: usize,
    /// Iterations per chain, burn-in included.
    #[arg(long, default_value_t = 30_000)]
    pub iters: usize,
    #[arg(long, default_value_t = 5_000)]
    pub burn_in: usize,
    #[arg(long, default_value_t = 1)]
    pub thin: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.1)]
    pub proposal_sd: f64,
    /// `flat` or `normal:MEAN:SD`.
    #[arg(long, default_value = "normal:0:5")]
    pub prior: String,
    /// Hold the first level's α at 0 for every free variable (the default).
    #[arg(long, overrides_with = "no_anchor_reference")]
    pub anchor_reference: bool,
    #[arg(long)]
    pub no_anchor_reference: bool,
    /// Keep the proposal scale fixed during burn-in.
    #[arg(long)]
    pub no_adapt: bool,
    /// Start chains at the prior mean plus noise of twice the proposal sd.
    #[arg(long)]
    pub jitter_start: bool,
    /// Recompute statistics after every inner step (slow).
    #[arg(long)]
    pub debug_check_stats: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct GofArgs {
    /// Posterior CSV written by `fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[command(flatten)]
    pub target: ComponentArgs,
    #[arg(long, default_value_t = 10_000)]
    pub draws: usize,
    /// Inner updates between predictive draws [default: edges + nodes × variables].
    #[arg(long)]
    pub thin: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Parameter pair for the 2-D posterior histogram [default: the first two γ].
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub hist_pair: Option<Vec<String>>,
    #[arg(long, default_value_t = 40)]
    pub hist_bins: usize,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Model description: `nodes=N`, `variable=NAME:L1|L2|...`, optional `counts=NAME:C1|C2|...`.
    #[arg(long)]
    pub spec: PathBuf,
    /// CSV of `param_name,value`; unlisted parameters are 0.
    #[arg(long)]
    pub params: PathBuf,
    /// `edges:D`, `degrees:FILE` or `free`.
    #[arg(long)]
    pub constraint: String,
    #[arg(long, default_value_t = 1)]
    pub count: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Burn-in updates from a random feasible start [default: 10 × degrees of freedom].
    #[arg(long)]
    pub steps: Option<usize>,
    /// Updates between kept states [default: degrees of freedom].
    #[arg(long)]
    pub thin: Option<usize>,
    /// Write only the statistics table, not the states.
    #[arg(long)]
    pub stats_only: bool,
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[arg(long, default_value_t = 5)]
    pub max_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
