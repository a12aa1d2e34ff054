use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn scenario(flux: &str, size: f64, solver: &str) -> String {
    format!(
        r#"{{
  "format": 1,
  "nodes": ["A", "B"],
  "arcs": [{{"from": "A", "to": "B", "length": 1.0, "flux": {flux}}}],
  "groups": [{{"size": {size}, "origin": "A", "destination": "B",
              "departure_cost": {{"kind": "affine", "a": 0.0, "b": -1.0}},
              "arrival_cost": {{"kind": "vickrey", "target": 1.0, "early_rate": 0.5, "late_rate": 2.0, "smoothing": 1.0}}}}],
  "solver": {solver}
}}"#
    )
}

const TRIANGULAR: &str = r#"{"kind": "triangular", "v_free": 1.0, "w_back": 1.0, "rho_jam": 1.0}"#;

struct Run {
    dir: TempDir,
}

impl Run {
    fn new(scenario: &str) -> Self {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("scenario.json"), scenario).unwrap();
        Self { dir }
    }

    fn path(&self, name: &str) -> String {
        self.dir.path().join(name).to_str().unwrap().to_owned()
    }

    fn kinwave(&self, command: &str, out: &str, extra: &[&str]) -> Output {
        Command::new(env!("CARGO_BIN_EXE_kinwave"))
            .arg(command)
            .args(["--scenario", &self.path("scenario.json"), "--out", &self.path(out)])
            .args(extra)
            .output()
            .unwrap()
    }

    fn json(&self, out: &str, name: &str) -> Value {
        let text = fs::read_to_string(self.dir.path().join(out).join(name)).unwrap();
        serde_json::from_str(&text).unwrap()
    }
}

fn read_curve(path: &Path) -> Vec<(f64, f64)> {
    let text = fs::read_to_string(path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value"));
    lines
        .map(|l| {
            let (t, v) = l.split_once(',').unwrap();
            (t.parse().unwrap(), v.parse().unwrap())
        })
        .collect()
}

fn max_slope(curve: &[(f64, f64)]) -> f64 {
    curve
        .windows(2)
        .map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0))
        .fold(0.0, f64::max)
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

#[test]
fn validate_accepts_minimal_scenario() {
    let run = Run::new(&scenario(TRIANGULAR, 0.5, "{}"));
    let out = run.kinwave("validate", "v", &[]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(code(&out), 0, "{stdout}");
    assert!(stdout.contains("A -> B"), "{stdout}");
    assert!(stdout.contains("bounds: T_max"), "{stdout}");
    assert!(run.json("v", "validation.json")["bounds"]["horizon"].as_f64().unwrap() > 0.0);
}

#[test]
fn dangling_node_exits_with_input_error() {
    let text = scenario(TRIANGULAR, 0.5, "{}").replace(r#""to": "B""#, r#""to": "Z""#);
    let run = Run::new(&text);
    let out = run.kinwave("validate", "v", &[]);
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("\"Z\""), "{stderr}");
}

#[test]
fn unknown_key_exits_with_input_error() {
    let text = scenario(TRIANGULAR, 0.5, r#"{"bins": 8, "bogus": 1}"#);
    let run = Run::new(&text);
    let out = run.kinwave("nash", "n", &[]);
    assert_eq!(code(&out), 2);
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("solver") && stderr.contains("bogus"), "{stderr}");
}

#[test]
fn both_flux_kinds_discharge_at_capacity() {
    // F_max = v·ρ_jam/4 for Greenshields and v·w·ρ_jam/(v + w) for triangular.
    // Greenshields only approaches capacity through a rarefaction fan; the
    // triangular queue discharges at exactly F_max
    let cases = [
        (r#"{"kind": "greenshields", "v_free": 1.0, "rho_jam": 1.0}"#, 1.0 * 1.0 / 4.0, false),
        (
            r#"{"kind": "triangular", "v_free": 0.5, "w_back": 0.5, "rho_jam": 1.0}"#,
            0.5 * 0.5 * 1.0 / (0.5 + 0.5),
            true,
        ),
    ];
    for (flux, capacity, attained) in cases {
        let run = Run::new(&scenario(flux, 1.0, "{}"));
        // the whole group inside one unit-width bin overloads the arc fourfold
        fs::write(
            run.path("profile.json"),
            r#"{"start": 0.0, "width": 1.0, "bins": 1, "rates": [[1.0]]}"#,
        )
        .unwrap();
        let out = run.kinwave("load", "l", &["--profile", &run.path("profile.json")]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let exit = read_curve(&run.dir.path().join("l/curves/arc0_exit.csv"));
        let slope = max_slope(&exit);
        assert!(slope <= capacity + 1e-9, "{flux}: slope {slope} vs {capacity}");
        if attained {
            assert!((slope - capacity).abs() < 1e-9, "{flux}: slope {slope} vs {capacity}");
        } else {
            assert!(slope > 0.95 * capacity, "{flux}: slope {slope} vs {capacity}");
        }
        let (t0, _) = exit[0];
        let (t1, total) = *exit.last().unwrap();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(t1 - t0 >= 1.0 / capacity - 1e-9, "{flux}: drained in {}", t1 - t0);
    }
}

#[test]
fn nash_converges_on_free_flow_instance() {
    let run = Run::new(&scenario(TRIANGULAR, 1e-3, r#"{"bins": 64, "tol": 1e-3}"#));
    let out = run.kinwave("nash", "n", &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let report = run.json("n", "report.json");
    assert!(report["converged"].as_bool().unwrap());
    assert!(report["gap"].as_f64().unwrap() <= 1e-3);
    assert!(report["diagnostics"]["rate_bound_ok"].as_bool().unwrap());
    let profile = run.json("n", "profile.json");
    let mass: f64 = profile["rates"][0].as_array().unwrap().iter().map(|u| u.as_f64().unwrap()).sum::<f64>()
        * profile["width"].as_f64().unwrap();
    assert!((mass - 1e-3).abs() < 1e-12);
}

#[test]
fn inadmissible_profile_exits_with_input_error() {
    let run = Run::new(&scenario(TRIANGULAR, 0.5, "{}"));
    fs::write(
        run.path("profile.json"),
        r#"{"start": 0.0, "width": 1.0, "bins": 2, "rates": [[0.0, 0.0]]}"#,
    )
    .unwrap();
    let out = run.kinwave("load", "l", &["--profile", &run.path("profile.json")]);
    assert_eq!(code(&out), 2);
}

#[test]
fn opt_without_iterations_reports_not_converged_but_writes_profile() {
    let run = Run::new(&scenario(TRIANGULAR, 0.5, r#"{"bins": 8, "restarts": 1}"#));
    let out = run.kinwave("opt", "o", &["--max-iter", "0"]);
    assert_eq!(code(&out), 1);
    assert!(!run.json("o", "report.json")["converged"].as_bool().unwrap());
    assert_eq!(run.json("o", "profile.json")["bins"], 8);
}

#[test]
fn opt_profile_round_trips_through_load() {
    let run = Run::new(&scenario(TRIANGULAR, 1.0, r#"{"bins": 16, "restarts": 2, "seed": 3}"#));
    let out = run.kinwave("opt", "o", &[]);
    assert!(code(&out) <= 1, "{}", String::from_utf8_lossy(&out.stderr));
    let j_opt = run.json("o", "cost.json")["total_cost"].as_f64().unwrap();
    let out = run.kinwave("load", "l", &["--profile", &run.path("o/profile.json")]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let j_load = run.json("l", "cost.json")["total_cost"].as_f64().unwrap();
    assert!((j_opt - j_load).abs() <= 1e-9 * j_opt.abs().max(1.0), "{j_opt} vs {j_load}");
}

#[test]
fn nash_output_is_deterministic() {
    let run = Run::new(&scenario(TRIANGULAR, 1.0, r#"{"bins": 32}"#));
    let a = run.kinwave("nash", "a", &["--emit-plot-data"]);
    let b = run.kinwave("nash", "b", &["--emit-plot-data"]);
    assert_eq!(code(&a), code(&b));
    for name in ["profile.json", "cost.json", "plot_data.csv", "curves/arc0_exit.csv"] {
        let x = fs::read(run.dir.path().join("a").join(name)).unwrap();
        let y = fs::read(run.dir.path().join("b").join(name)).unwrap();
        assert_eq!(x, y, "{name} differs");
    }
    let plot = fs::read_to_string(run.dir.path().join("a/plot_data.csv")).unwrap();
    assert!(plot.starts_with("series,t,value\n"));
    assert!(plot.contains("route0.cost,"));
}
