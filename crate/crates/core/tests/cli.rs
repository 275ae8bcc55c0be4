use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn cpsf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cpsf")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// (curve, ω, remaining columns) from CSV output.
fn rows(csv: &str) -> Vec<(String, f64, Vec<f64>)> {
    csv.lines()
        .skip(1)
        .map(|line| {
            let mut f = line.split(',');
            let label = f.next().unwrap().to_string();
            let w = f.next().unwrap().parse().unwrap();
            (label, w, f.map(|x| x.parse().unwrap()).collect())
        })
        .collect()
}

#[test]
fn onset_preset_shape() {
    let o = cpsf(&["spectrum", "--preset", "fig2a"]);
    assert!(o.status.success());
    let rows = rows(&stdout(&o));
    let at_zero = |label: &str| {
        rows.iter()
            .find(|(l, w, _)| l == label && *w == 0.0)
            .map(|r| r.2[0])
            .unwrap()
    };
    assert!((at_zero("xi_m=0") - 4.0 / 3.0).abs() < 1e-12);
    assert!(at_zero("xi_m=sqrt(3)").abs() < 1e-9);
    assert!(at_zero("xi_m=2.7") < 0.0);
    // far from resonance all curves approach the bare Lorentzian
    for (_, w, v) in rows.iter().filter(|r| r.1.abs() == 1e-3) {
        assert!(v[0] > 0.0, "{w}");
    }
}

#[test]
fn outputs_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "version = 1\n[sweep]\nomega_min = -1e-4\nomega_max = 1e-4\nn_points = 5\noutputs = [\"cpsf\", \"greens\", \"chi\"]\n\
         [[curve]]\nlabel = \"a\"\nc0 = 2.0\nc1 = 0.25\nxi_m = 1.39\nxi_d = 0.931\nkappa_over_gamma_m = 1e4\ngamma_ratio = 1.0\n",
    )
    .unwrap();
    let out = dir.path().join("out.json");
    let o = cpsf(&["spectrum", "--config", cfg.to_str().unwrap(), "--format", "json", "--output", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    let cols = v["columns"].as_array().unwrap();
    assert_eq!(cols.len(), 2 + 1 + 4 + 12);
    let rows = v["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    assert_eq!(rows[2][1], 0.0);
    assert!((rows[2][2].as_f64().unwrap() + 2.9431).abs() < 1e-3);
}

#[test]
fn flags_override_config() {
    let o = cpsf(&["spectrum", "--preset", "fig2a", "--points", "3", "--omega-min", "-1", "--omega-max", "1"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 9);
    assert_eq!(r[0].1, -1.0);
}

#[test]
fn optimize_reports_and_exit_codes() {
    let o = cpsf(&["optimize", "--c0", "2", "--c1", "0.25", "--target-m", "-3"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["feasible"], true);
    assert!((v["result"]["achieved_m"].as_f64().unwrap() + 3.0).abs() < 1e-6);
    assert_eq!(v["verification"]["stable"], true);

    let o = cpsf(&["optimize", "--c0", "2", "--c1", "0.25", "--target-m", "-1e6"]);
    assert_eq!(o.status.code(), Some(3));
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["result"]["feasible"], false);
    assert!(v["m_max_estimate"]["m_max"].as_f64().unwrap() < 0.0);
}

#[test]
fn invalid_configuration_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "version = 1\n[sweep]\nomega_min = \"oops\"\n").unwrap();
    let o = cpsf(&["spectrum", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bad.toml:3:"));

    let o = cpsf(&["spectrum", "--preset", "nope"]);
    assert_eq!(o.status.code(), Some(2));
    let o = cpsf(&["spectrum", "--preset", "fig2a", "--points", "1"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unstable_noise_request_exits_3() {
    let o = cpsf(&[
        "noise", "--c0", "2", "--c1", "0", "--xi-m", "5", "--xi-d", "0", "--omega-min", "-1", "--omega-max", "1", "--points", "3",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn stability_table_for_reference_points() {
    let o = cpsf(&["stability", "--preset", "fig3b"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let curves = v["curves"].as_array().unwrap();
    assert_eq!(curves.len(), 3);
    for c in curves {
        assert_eq!(c["negativity"]["negative"], true);
        assert_eq!(c["negativity"]["stable"], true);
    }
}

#[test]
fn amplifier_preset_windows() {
    // labels contain commas, so read the JSON form
    let o = cpsf(&["opa", "--preset", "fig5", "--format", "json"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    let rows = v["rows"].as_array().unwrap();
    let by = |label: &str| rows.iter().filter(|r| r[0] == label).collect::<Vec<_>>();
    let no_pump = by("xi_k=0");
    assert!(!no_pump.is_empty() && no_pump.iter().all(|r| r[2].as_f64().unwrap() > 0.0 && r[4].is_null()));
    let pumped = by("xi_k=1.2,delta_k=0.5");
    let (lo, hi) = (pumped[0][4].as_f64().unwrap(), pumped[0][5].as_f64().unwrap());
    assert!((hi - lo - 2.0 * 0.11f64.sqrt()).abs() < 1e-12);
    let mut inside = 0;
    for r in &pumped {
        let w = r[1].as_f64().unwrap();
        if w > lo + 1e-9 && w < hi - 1e-9 {
            inside += 1;
            assert!(r[2].as_f64().unwrap() < 0.0, "{w}");
        }
    }
    assert!(inside > 0);
}

#[test]
fn noise_vacuum_columns() {
    let o = cpsf(&["noise", "--preset", "fig3b", "--points", "5", "--omega-min", "1e-8", "--omega-max", "1e-3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    assert!(header.contains(&"t_eff") && header.contains(&"reflectivity"));
    assert_eq!(rows(&text).len(), 15);
}

#[test]
fn repeated_runs_are_identical() {
    let a = cpsf(&["spectrum", "--preset", "fig4"]);
    let b = cpsf(&["spectrum", "--preset", "fig4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}
