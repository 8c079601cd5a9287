use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use netalloc::rng::child_seed;
use netalloc_cli::experiment::read_run_csv;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn netalloc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netalloc"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn field(line: &str, key: &str) -> f64 {
    line.split_whitespace()
        .find_map(|kv| kv.strip_prefix(&format!("{key}=")))
        .unwrap_or_else(|| panic!("{key} missing from {line:?}"))
        .parse()
        .unwrap()
}

#[test]
fn validate_exit_codes() {
    let ok = netalloc(&["validate", path_str(&fixture("one_edge.json"))]);
    assert_eq!(ok.status.code(), Some(0));
    assert!(stdout(&ok).contains("k = 1"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    fs::write(&bad, "{ \"nodes\": [").unwrap();
    let o = netalloc(&["validate", path_str(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("EOF"));

    let missing = netalloc(&["validate", path_str(&dir.path().join("nope.json"))]);
    assert_eq!(missing.status.code(), Some(2));

    let text = fs::read_to_string(fixture("one_edge.json")).unwrap().replace("0.9 }", "1.3 }");
    let out_of_range = dir.path().join("r.json");
    fs::write(&out_of_range, text).unwrap();
    let o = netalloc(&["validate", path_str(&out_of_range)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("reliability 1.3 out of [0,1]"));
}

#[test]
fn exact_solve_of_the_one_edge_model() {
    let dir = tempfile::tempdir().unwrap();
    let alloc = dir.path().join("x.json");
    let o = netalloc(&["solve", path_str(&fixture("one_edge.json")), "--method", "exact", "-o", path_str(&alloc)]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o);
    assert!((field(&line, "objective") - 7.5).abs() < 1e-9);
    let x = netalloc::two_stage::Allocation::from_json(&fs::read_to_string(&alloc).unwrap()).unwrap();
    assert!((x.producers["P"] - 10.0).abs() < 1e-9);
    assert!((x.consumers["C"] - 10.0).abs() < 1e-9);
}

#[test]
fn seeded_solves_are_byte_identical() {
    let net = fixture("one_edge.json");
    for args in [
        vec!["solve", path_str(&net), "--method", "saa", "--n", "1", "--seed", "7", "--no-timing"],
        vec!["solve", path_str(&net), "--method", "subselect", "--k", "3", "--n1", "6", "--seed", "2", "--no-timing"],
        vec!["evaluate", path_str(&net), path_str(&fixture("alloc_ten.json")), "--mc", "500", "--seed", "4", "--no-timing"],
    ] {
        let a = netalloc(&args);
        let b = netalloc(&args);
        assert_eq!(a.status.code(), Some(0));
        assert_eq!(a.stdout, b.stdout, "{args:?}");
    }
}

#[test]
fn single_candidate_subselect_matches_saa_at_the_child_seed() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("net.json");
    let o = netalloc(&["generate", "--unreliable", "6", "--edges", "12", "--seed", "3", "-o", path_str(&gen)]);
    assert_eq!(o.status.code(), Some(0));
    let (sub, saa) = (dir.path().join("sub.json"), dir.path().join("saa.json"));
    let seed = 11u64;
    let child = child_seed(seed, 0).to_string();
    let o = netalloc(&[
        "solve", path_str(&gen), "--method", "subselect", "--k", "1", "--n1", "50", "--seed", &seed.to_string(), "-o",
        path_str(&sub),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = netalloc(&["solve", path_str(&gen), "--method", "saa", "--n", "50", "--seed", &child, "-o", path_str(&saa)]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(fs::read(&sub).unwrap(), fs::read(&saa).unwrap());
}

#[test]
fn evaluate_modes() {
    let net = fixture("one_edge.json");
    let dir = tempfile::tempdir().unwrap();
    let zero = dir.path().join("zero.json");
    fs::write(&zero, "{}").unwrap();
    let o = netalloc(&["evaluate", path_str(&net), path_str(&zero), "--exact"]);
    let row: Vec<String> = stdout(&o).lines().nth(1).unwrap().split(',').map(String::from).collect();
    assert_eq!(row[0].parse::<f64>().unwrap(), 0.0);

    let ten = fixture("alloc_ten.json");
    let o = netalloc(&["evaluate", path_str(&net), path_str(&ten), "--exact"]);
    let row: Vec<f64> = stdout(&o).lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((row[0] - 7.5).abs() < 1e-12);
    assert_eq!(row[1], 0.0);

    let o = netalloc(&["evaluate", path_str(&net), path_str(&ten), "--mc", "10000", "--seed", "1"]);
    let row: Vec<f64> = stdout(&o).lines().nth(1).unwrap().split(',').map(|c| c.parse().unwrap()).collect();
    assert!((row[0] - 7.5).abs() <= 3.0 * row[1], "{row:?}");
    assert_eq!(row[2], 10000.0);

    // an allocation outside the capacity box is a domain error
    let over = dir.path().join("over.json");
    fs::write(&over, r#"{"producers":{"P":11}}"#).unwrap();
    let o = netalloc(&["evaluate", path_str(&net), path_str(&over), "--exact"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn exact_on_a_large_space_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let gen = dir.path().join("big.json");
    let o = netalloc(&[
        "generate", "--producers", "5", "--consumers", "5", "--regular", "8", "--edges", "30", "--unreliable", "22",
        "-o", path_str(&gen),
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("2^22 = 4194304"));
    let o = netalloc(&["solve", path_str(&gen), "--method", "exact"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("enumeration cap"));
}

#[test]
fn generate_is_stable_and_validates() {
    let dir = tempfile::tempdir().unwrap();
    for seed in ["0", "1", "99"] {
        let (a, b) = (dir.path().join("a.json"), dir.path().join("b.json"));
        netalloc(&["generate", "--seed", seed, "-o", path_str(&a)]);
        netalloc(&["generate", "--seed", seed, "-o", path_str(&b)]);
        assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
        assert_eq!(netalloc(&["validate", path_str(&a)]).status.code(), Some(0));
    }
    let o = netalloc(&["generate", "--unreliable", "0"]);
    let net = netalloc::network::NetworkSpec::from_json(&stdout(&o)).unwrap();
    assert!(net.edges().iter().all(|e| e.reliability == 1.0));
    let o = netalloc(&["generate", "--edges", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bounds_subcommand() {
    let o = netalloc(&[
        "bounds", "--q-d", "1", "--epsilon", "0.1", "--delta", "0.05", "--x-space", "100", "--n-dim", "2", "--d-box",
        "1", "--lipschitz", "1",
    ]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("theorem1 q_d=1 epsilon=0.1 delta=0.05"));
    assert_eq!(field(lines[0], "N"), 185.0);
    assert_eq!(field(lines[1], "N"), 1659.0);
    assert_eq!(field(lines[2], "N"), 7745.0);
    let o = netalloc(&["bounds", "--q-d", "1", "--epsilon", "0.1", "--delta", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    let o = netalloc(&["bounds", "--network", path_str(&fixture("one_edge.json")), "--epsilon", "1", "--delta", "0.5"]);
    assert!(stdout(&o).starts_with("theorem1 q_d=35 "));
}

#[test]
fn experiment_matches_the_golden_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("runs.csv");
    let o = netalloc(&["experiment", path_str(&fixture("golden_plan.json")), "-o", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        fs::read_to_string(fixture("golden_runs.csv")).unwrap()
    );
    assert_eq!(
        fs::read_to_string(dir.path().join("runs_aggregate.csv")).unwrap(),
        fs::read_to_string(fixture("golden_runs_aggregate.csv")).unwrap()
    );
    let rows = read_run_csv(&out).unwrap();
    let exact = rows.iter().find(|r| r.method == "exact").unwrap();
    assert_eq!(exact.objective, 7.5);
    let mean = rows.iter().find(|r| r.method == "mean").unwrap();
    assert_eq!(mean.true_objective, Some(6.75));
}

#[test]
fn invalid_plans_are_domain_errors() {
    let dir = tempfile::tempdir().unwrap();
    fs::copy(fixture("one_edge.json"), dir.path().join("one_edge.json")).unwrap();
    let plan = dir.path().join("plan.json");
    for body in [
        r#"{"network_path":"one_edge.json","method":"saa","sweep":{"n":[]},"seeds":3,"output_path":"o.csv"}"#,
        r#"{"network_path":"one_edge.json","method":"saa","sweep":{"n":[5]},"seeds":[1,1],"output_path":"o.csv"}"#,
        r#"{"network_path":"one_edge.json","method":"evaluate","sweep":{"n":[5]},"output_path":"o.csv"}"#,
    ] {
        fs::write(&plan, body).unwrap();
        assert_eq!(netalloc(&["experiment", path_str(&plan)]).status.code(), Some(1), "{body}");
    }
    fs::write(&plan, r#"{"network_path":"one_edge.json""#).unwrap();
    assert_eq!(netalloc(&["experiment", path_str(&plan)]).status.code(), Some(2));
}
