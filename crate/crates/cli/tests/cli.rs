use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use jointergm::dataset::load_dataset;

fn jointergm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_jointergm")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn write_model(dir: &Path) -> (String, String) {
    let model = dir.join("model.txt");
    fs::write(&model, "nodes=8\nvariable=colour:red|blue|green\nvariable=size:s|l\ncounts=size:5|3\n").unwrap();
    let params = dir.join("params.csv");
    fs::write(
        &params,
        "param_name,value\nalpha:colour:blue,0.4\ngamma:colour,0.8\ngamma:size,-0.3\n",
    )
    .unwrap();
    (model.display().to_string(), params.display().to_string())
}

#[test]
fn simulated_files_reload_with_matching_statistics() {
    let dir = tempfile::tempdir().unwrap();
    let (model, params) = write_model(dir.path());
    let out_dir = dir.path().join("sim");
    let out = jointergm(&[
        "simulate", "--spec", &model, "--params", &params, "--constraint", "edges:9", "--count", "4", "--seed", "3",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let mut rdr = csv::Reader::from_path(out_dir.join("stats.csv")).unwrap();
    let header: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for (i, row) in rows.iter().enumerate() {
        let ds = load_dataset(
            &out_dir.join(format!("state_{i}_edges.csv")),
            &out_dir.join(format!("state_{i}_attrs.csv")),
        )
        .unwrap();
        assert_eq!(ds.node_count(), 8);
        let value = |col: &str| -> usize {
            let j = header.iter().position(|h| h == col).unwrap();
            row[j].parse().unwrap()
        };
        assert_eq!(value("edges"), 9);
        assert_eq!(ds.edges.len(), 9);
        for (k, var) in ds.variables.iter().enumerate() {
            let label = |v: usize| &ds.levels[k][ds.attributes[k][v]];
            for level in &ds.levels[k] {
                let count = (0..8).filter(|&v| label(v) == level).count();
                assert_eq!(value(&format!("A:{var}:{level}")), count);
            }
            let matches = ds.edges.iter().filter(|&&(r, q)| label(r) == label(q)).count();
            assert_eq!(value(&format!("G:{var}")), matches);
        }
        let large = ds.variables.iter().position(|v| v == "size").unwrap();
        let l = ds.levels[large].iter().position(|x| x == "l").unwrap();
        assert_eq!(ds.attributes[large].iter().filter(|&&h| h == l).count(), 3);
    }
}

#[test]
fn simulation_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (model, params) = write_model(dir.path());
    let run = |seed: &str, name: &str| {
        let d = dir.path().join(name);
        let out = jointergm(&[
            "simulate", "--spec", &model, "--params", &params, "--constraint", "free", "--count", "5", "--seed", seed,
            "--stats-only", "--out", d.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0);
        assert!(!d.join("state_0_edges.csv").exists());
        fs::read(d.join("stats.csv")).unwrap()
    };
    assert_eq!(run("11", "a"), run("11", "b"));
    assert_ne!(run("11", "a"), run("12", "c"));
}

#[test]
fn components_are_ranked_and_stable() {
    let dir = tempfile::tempdir().unwrap();
    let edges = dir.path().join("edges.csv");
    let attrs = dir.path().join("attrs.csv");
    fs::write(&edges, "a,b\nb,c\nc,a\nd,e\n").unwrap();
    fs::write(&attrs, "node_id,g\na,x\nb,y\nc,x\nd,x\ne,y\nf,x\n").unwrap();
    let args = ["components", "--edges", edges.to_str().unwrap(), "--attrs", attrs.to_str().unwrap()];
    let first = jointergm(&args);
    assert_eq!(code(&first), 0, "{}", String::from_utf8_lossy(&first.stderr));
    assert_eq!(stdout(&first), "rank,nodes,edges,first_node\n1,3,3,a\n2,2,1,d\n3,1,0,f\n");
    assert_eq!(first.stdout, jointergm(&args).stdout);
}

#[test]
fn exit_codes_follow_error_class() {
    let dir = tempfile::tempdir().unwrap();
    let (model, params) = write_model(dir.path());
    let out_dir = dir.path().join("out");
    let out_dir = out_dir.to_str().unwrap();

    // usage
    assert_eq!(code(&jointergm(&["fit"])), 1);
    assert_eq!(code(&jointergm(&["no-such-command"])), 1);
    let bad_constraint = jointergm(&[
        "simulate", "--spec", &model, "--params", &params, "--constraint", "ring", "--out", out_dir,
    ]);
    assert_eq!(code(&bad_constraint), 1);
    assert_eq!(code(&jointergm(&["--help"])), 0);

    // data
    let missing = dir.path().join("missing.csv");
    let missing = missing.to_str().unwrap();
    let out = jointergm(&["components", "--edges", missing, "--attrs", missing]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));
    let edges = dir.path().join("edges.csv");
    let attrs = dir.path().join("attrs.csv");
    fs::write(&edges, "a,b\nb,zz\n").unwrap();
    fs::write(&attrs, "node_id,g\na,x\nb,y\n").unwrap();
    assert_eq!(
        code(&jointergm(&["components", "--edges", edges.to_str().unwrap(), "--attrs", attrs.to_str().unwrap()])),
        2
    );

    // numerical
    let inf = dir.path().join("inf.csv");
    fs::write(&inf, "gamma:colour,inf\n").unwrap();
    let out = jointergm(&[
        "simulate", "--spec", &model, "--params", inf.to_str().unwrap(), "--constraint", "edges:9", "--out", out_dir,
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn oracle_check_reports_every_row() {
    let out = jointergm(&["oracle-check", "--max-n", "3"]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "check,value,tolerance,result");
    assert!(lines.len() > 2);
    for line in &lines[1..lines.len() - 1] {
        assert!(line.ends_with(",pass"), "{line}");
    }
    assert!(lines.last().unwrap().starts_with("total,") && lines.last().unwrap().ends_with(",pass"));
}
