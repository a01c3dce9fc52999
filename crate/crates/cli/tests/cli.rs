use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zonegraph"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert_eq!(
        code(&out),
        0,
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn col(rows: &[Vec<String>], name: &str) -> usize {
    rows[0].iter().position(|h| h == name).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

/// Two positive components: a triangle and an edge.
const POSITIVE: &str = r#"{"nodes":[
  {"id":"a","psi":0.5},{"id":"b","psi":0.5},{"id":"c","psi":0.5},{"id":"d","psi":0.5},{"id":"e","psi":0.5}],
 "edges":[
  {"src":"a","dst":"b","type":"supports","sign":1,"weight":1.0},
  {"src":"b","dst":"c","type":"supports","sign":1,"weight":1.0},
  {"src":"c","dst":"a","type":"supports","sign":1,"weight":1.0},
  {"src":"d","dst":"e","type":"supports","sign":1,"weight":1.0},
  {"src":"e","dst":"d","type":"supports","sign":1,"weight":1.0}]}"#;

#[test]
fn generate_is_reproducible_and_writes_truth_for_g2() {
    let t = TempDir::new().unwrap();
    let args = [
        "generate",
        "--family",
        "g2",
        "--n",
        "400",
        "--block-size",
        "40",
        "--seed",
        "7",
        "--out",
        "g.json",
    ];
    ok(t.path(), &args);
    let first = fs::read(t.path().join("g.json")).unwrap();
    let truth: serde_json::Value =
        serde_json::from_slice(&fs::read(t.path().join("g.truth.json")).unwrap()).unwrap();
    let blocks = truth["blocks"].as_array().unwrap();
    assert_eq!(blocks.len(), 3);
    assert!(blocks.iter().all(|b| b.as_array().unwrap().len() == 40));
    ok(t.path(), &args);
    assert_eq!(fs::read(t.path().join("g.json")).unwrap(), first);
}

#[test]
fn generate_rejects_too_many_cycles_without_writing() {
    let t = TempDir::new().unwrap();
    let out = run(
        t.path(),
        &[
            "generate", "--family", "g3", "--n", "10", "--cycles", "100", "--out", "g.json",
        ],
    );
    assert_eq!(code(&out), 2);
    assert!(!t.path().join("g.json").exists());
    // Unknown flags are usage errors too.
    assert_eq!(code(&run(t.path(), &["generate", "--bogus"])), 2);
}

#[test]
fn propagate_empty_graph_gives_header_only() {
    let t = TempDir::new().unwrap();
    write(t.path(), "e.json", r#"{"nodes":[],"edges":[]}"#);
    ok(
        t.path(),
        &["propagate", "--graph", "e.json", "--out", "phi.csv"],
    );
    assert_eq!(
        fs::read_to_string(t.path().join("phi.csv")).unwrap(),
        "node_id,phi,converged,t_star,r\n"
    );
}

#[test]
fn propagate_missing_graph_is_usage_error() {
    let t = TempDir::new().unwrap();
    let out = run(
        t.path(),
        &["propagate", "--graph", "nope.json", "--out", "phi.csv"],
    );
    assert_eq!(code(&out), 2);
    assert!(!t.path().join("phi.csv").exists());
}

#[test]
fn propagate_records_contraction_factor() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "generate", "--family", "g1", "--n", "300", "--seed", "3", "--out", "g.json",
        ],
    );
    ok(
        t.path(),
        &[
            "propagate",
            "--graph",
            "g.json",
            "--alpha",
            "0.2",
            "--eta",
            "0",
            "--out",
            "phi.csv",
        ],
    );
    let rows = csv_rows(&t.path().join("phi.csv"));
    assert_eq!(rows.len(), 301);
    let (r, conv) = (col(&rows, "r"), col(&rows, "converged"));
    let r0: f64 = rows[1][r].parse().unwrap();
    assert!(r0 > 0.0 && r0 < 1.0, "r = {r0}");
    assert!(rows[1..]
        .iter()
        .all(|row| row[r] == rows[1][r] && row[conv] == "true"));
}

#[test]
fn near_critical_run_still_exits_zero() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "generate", "--family", "g3", "--n", "60", "--d", "6", "--cycles", "10", "--seed", "1",
            "--out", "g.json",
        ],
    );
    ok(
        t.path(),
        &[
            "propagate",
            "--graph",
            "g.json",
            "--alpha",
            "0.99",
            "--eta",
            "1",
            "--max-iter",
            "5",
            "--out",
            "phi.csv",
        ],
    );
    let rows = csv_rows(&t.path().join("phi.csv"));
    let conv = col(&rows, "converged");
    assert!(rows[1..]
        .iter()
        .all(|row| row[conv] == "true" || row[conv] == "false"));
    assert_eq!(rows[1][col(&rows, "t_star")], "5");
}

#[test]
fn zones_on_positive_graph_follow_components() {
    let t = TempDir::new().unwrap();
    write(t.path(), "g.json", POSITIVE);
    ok(
        t.path(),
        &[
            "zones", "--graph", "g.json", "--theta", "0", "--out", "z.csv",
        ],
    );
    let rows = csv_rows(&t.path().join("z.csv"));
    let members: Vec<&str> = rows[1..]
        .iter()
        .map(|r| r[col(&rows, "members")].as_str())
        .collect();
    assert_eq!(members, vec!["a b c", "d e"]);
}

#[test]
fn duplicate_zones_leave_one_survivor() {
    let t = TempDir::new().unwrap();
    write(t.path(), "g.json", POSITIVE);
    write(
        t.path(),
        "z.csv",
        "zone_id,size,mean_phi,min_phi,members\n0,3,0,0,a b c\n1,3,0,0,c b a\n",
    );
    ok(
        t.path(),
        &[
            "atlas", "--graph", "g.json", "--zones", "z.csv", "--tau", "0.3", "--out", "a.csv",
        ],
    );
    let rows = csv_rows(&t.path().join("a.csv"));
    assert_eq!(
        rows[0].join(","),
        "zone_id,size,score,scoring_mode,mean_phi,min_phi,cut_minus,loss_plus,nn_jaccard"
    );
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[1][1], "3");
}

#[test]
fn zero_shock_keeps_graph_bytes() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "generate", "--family", "g3", "--n", "200", "--seed", "2", "--out", "g.json",
        ],
    );
    write(
        t.path(),
        "s.json",
        r#"{"targets":{"n0003":0.0,"n0010":0.0},"kappa":0.5,"rho_shock":1.0}"#,
    );
    ok(
        t.path(),
        &[
            "shock",
            "--graph",
            "g.json",
            "--spec",
            "s.json",
            "--alpha",
            "0.3",
            "--out-graph",
            "post.json",
            "--out-phi",
            "post.csv",
            "--log",
            "log.json",
        ],
    );
    assert_eq!(
        fs::read(t.path().join("g.json")).unwrap(),
        fs::read(t.path().join("post.json")).unwrap()
    );
    let log: serde_json::Value =
        serde_json::from_slice(&fs::read(t.path().join("log.json")).unwrap()).unwrap();
    assert_eq!(log["applied"]["n0003"], 0.0);
    assert_eq!(log["halvings"], 0);
}

#[test]
fn shock_applies_and_logs_strengths() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "generate", "--family", "g3", "--n", "200", "--seed", "2", "--out", "g.json",
        ],
    );
    ok(
        t.path(),
        &[
            "propagate",
            "--graph",
            "g.json",
            "--alpha",
            "0.3",
            "--out",
            "phi.csv",
        ],
    );
    write(
        t.path(),
        "s.json",
        r#"{"targets":{"n0003":0.8},"kappa":0.5,"rho_shock":1.0}"#,
    );
    ok(
        t.path(),
        &[
            "shock",
            "--graph",
            "g.json",
            "--spec",
            "s.json",
            "--phi",
            "phi.csv",
            "--alpha",
            "0.3",
            "--out-graph",
            "post.json",
            "--out-phi",
            "post.csv",
            "--log",
            "log.json",
        ],
    );
    assert_ne!(
        fs::read(t.path().join("g.json")).unwrap(),
        fs::read(t.path().join("post.json")).unwrap()
    );
    let log: serde_json::Value =
        serde_json::from_slice(&fs::read(t.path().join("log.json")).unwrap()).unwrap();
    assert_eq!(log["requested"]["n0003"], 0.8);
    let applied = log["applied"]["n0003"].as_f64().unwrap();
    let halvings = log["halvings"].as_u64().unwrap() as i32;
    assert_eq!(applied, 0.8 * 0.5f64.powi(halvings));
    assert!(log["r_post"].as_f64().unwrap() < 1.0);
}

#[test]
fn non_contractive_shock_exits_three_without_outputs() {
    let t = TempDir::new().unwrap();
    ok(
        t.path(),
        &[
            "generate", "--family", "g3", "--n", "200", "--seed", "2", "--out", "g.json",
        ],
    );
    write(
        t.path(),
        "s.json",
        r#"{"targets":{"n0003":0.5},"kappa":0.5,"rho_shock":1.0}"#,
    );
    let out = run(
        t.path(),
        &[
            "shock",
            "--graph",
            "g.json",
            "--spec",
            "s.json",
            "--alpha",
            "0.95",
            "--out-graph",
            "post.json",
            "--out-phi",
            "post.csv",
            "--log",
            "log.json",
        ],
    );
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("not below 1"));
    for f in ["post.json", "post.csv", "log.json"] {
        assert!(!t.path().join(f).exists());
    }
    write(
        t.path(),
        "bad.json",
        r#"{"targets":{"nobody":0.5},"kappa":0.5,"rho_shock":1.0}"#,
    );
    let out = run(
        t.path(),
        &[
            "shock",
            "--graph",
            "g.json",
            "--spec",
            "bad.json",
            "--out-graph",
            "post.json",
            "--out-phi",
            "post.csv",
            "--log",
            "log.json",
        ],
    );
    assert_eq!(code(&out), 2);
}

const SMALL: &str = r#"{
  "p1": {"generator": {"family": "g1", "n": 150}},
  "p2": {"generator": {"family": "g2", "n": 300, "block_size": 40}, "quantiles": [0.3, 0.6]},
  "p4": {"generator": {"family": "g3", "n": 300}, "solver": {"alpha": 0.4}, "targets": 10}
}"#;

#[test]
fn eval_p1_has_twelve_cells_per_seed() {
    let t = TempDir::new().unwrap();
    write(t.path(), "cfg.json", SMALL);
    ok(
        t.path(),
        &[
            "eval",
            "p1",
            "--config",
            "cfg.json",
            "--seeds",
            "5",
            "--out-dir",
            "out",
        ],
    );
    let rows = csv_rows(&t.path().join("out/p1_results.csv"));
    assert_eq!(rows.len(), 1 + 12 * 5);
    let log: serde_json::Value =
        serde_json::from_slice(&fs::read(t.path().join("out/p1_run.json")).unwrap()).unwrap();
    assert_eq!(log["seeds"].as_array().unwrap().len(), 5);
    assert_eq!(log["run_id"].as_str().unwrap().len(), 12);
    let summary = csv_rows(&t.path().join("out/p1_summary.csv"));
    assert_eq!(summary[0][0], "protocol");
}

#[test]
fn eval_p4_zero_mass_is_stable_and_reruns_identically() {
    let t = TempDir::new().unwrap();
    write(t.path(), "cfg.json", SMALL);
    let args = [
        "eval",
        "p4",
        "--config",
        "cfg.json",
        "--seeds",
        "3",
        "--m",
        "0",
        "--out-dir",
        "a",
    ];
    ok(t.path(), &args);
    let rows = csv_rows(&t.path().join("a/p4_results.csv"));
    let s = col(&rows, "stability");
    assert_eq!(rows.len(), 4);
    assert!(rows[1..].iter().all(|r| r[s] == "1.0"));
    let log: serde_json::Value =
        serde_json::from_slice(&fs::read(t.path().join("a/p4_run.json")).unwrap()).unwrap();
    assert_eq!(log["applied_shocks"].as_array().unwrap().len(), 3);

    let mut again = args;
    again[9] = "b";
    ok(t.path(), &again);
    for f in ["p4_results.csv", "p4_summary.csv", "p4_run.json"] {
        assert_eq!(
            fs::read(t.path().join("a").join(f)).unwrap(),
            fs::read(t.path().join("b").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn eval_rejects_mass_override_outside_p4() {
    let t = TempDir::new().unwrap();
    let out = run(t.path(), &["eval", "p1", "--m", "0.1", "--out-dir", "out"]);
    assert_eq!(code(&out), 2);
    assert!(!t.path().join("out").exists());
}

#[test]
fn plot_renders_and_rejects_bad_input() {
    let t = TempDir::new().unwrap();
    write(t.path(), "cfg.json", SMALL);
    ok(
        t.path(),
        &[
            "eval",
            "p2",
            "--config",
            "cfg.json",
            "--seeds",
            "2",
            "--out-dir",
            "out",
        ],
    );
    ok(
        t.path(),
        &[
            "plot",
            "p2-zone",
            "--input",
            "out/p2_selection.csv",
            "--out",
            "p2.svg",
        ],
    );
    let svg = fs::read_to_string(t.path().join("p2.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert!(svg.contains("unsign_cl"));

    // Wrong schema for the figure.
    assert_eq!(
        code(&run(
            t.path(),
            &[
                "plot",
                "p1",
                "--input",
                "out/p2_selection.csv",
                "--out",
                "bad.svg"
            ]
        )),
        2
    );
    assert!(!t.path().join("bad.svg").exists());
    // Header only.
    write(
        t.path(),
        "empty.csv",
        "protocol,method,alpha,eta,quantile,jitter,mass,metric,count,mean,ci95\n",
    );
    assert_eq!(
        code(&run(
            t.path(),
            &["plot", "p4", "--input", "empty.csv", "--out", "e.svg"]
        )),
        2
    );
    assert!(!t.path().join("e.svg").exists());
}
