mod args;
mod fit;
mod gof;
mod output;
mod simulate;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use jointergm::dataset::{connected_components, load_dataset};
use jointergm::error::{Error, Result};
use jointergm::verify::run_oracle_suite;

use args::{Cli, Command, DataArgs, OracleArgs};

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    if e.is_data_error() {
        EXIT_DATA
    } else if e.is_numerical() {
        EXIT_NUMERICAL
    } else {
        EXIT_USAGE
    }
}

fn components(args: &DataArgs) -> Result<()> {
    let ds = load_dataset(&args.edges, &args.attrs)?;
    let comps = connected_components(&ds);
    let mut which = vec![0usize; ds.node_count()];
    for (c, nodes) in comps.iter().enumerate() {
        for &v in nodes {
            which[v] = c;
        }
    }
    let mut edges = vec![0usize; comps.len()];
    for &(r, _) in &ds.edges {
        edges[which[r]] += 1;
    }
    println!("rank,nodes,edges,first_node");
    for (c, nodes) in comps.iter().enumerate() {
        let first = nodes.iter().map(|&v| ds.node_ids[v].as_str()).min().unwrap_or("");
        println!("{},{},{},{}", c + 1, nodes.len(), edges[c], first);
    }
    Ok(())
}

/// Returns whether every check passed.
fn oracle_check(args: &OracleArgs) -> Result<bool> {
    let results = run_oracle_suite(args.max_n, args.seed)?;
    println!("check,value,tolerance,result");
    for r in &results {
        let status = if r.passed() { "pass" } else { "fail" };
        println!("{},{},{},{status}", r.name, output::num(r.value), output::num(r.tolerance));
    }
    let passed = results.iter().filter(|r| r.passed()).count();
    println!("total,{passed},{},{}", results.len(), if passed == results.len() { "pass" } else { "fail" });
    Ok(passed == results.len())
}

fn run(cli: &Cli) -> Result<ExitCode> {
    match &cli.command {
        Command::Components(a) => components(a)?,
        Command::Fit(a) => fit::run(a)?,
        Command::Simulate(a) => simulate::run(a)?,
        Command::Gof(a) => gof::run(a)?,
        Command::OracleCheck(a) => {
            if !oracle_check(a)? {
                return Ok(ExitCode::from(EXIT_NUMERICAL));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(EXIT_USAGE),
            };
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
