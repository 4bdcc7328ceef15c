use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn mbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mbs")).args(args).output().expect("runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn dynamics_cfg(dir: &Path, mu_c: f64) -> PathBuf {
    write(
        dir,
        &format!("dynamics_{mu_c}.json"),
        &format!(
            r#"{{"left":{{"mu":0,"t":5,"delta":5,"length":5}},
                "center":{{"mu":{mu_c},"t":1,"delta":5,"length":11}},
                "right":{{"mu":0,"t":5,"delta":5,"length":4}},
                "junction":{{"t1":1,"t2":1}}}}"#
        ),
    )
}

fn sweep_cfg(dir: &Path, t1: f64) -> PathBuf {
    write(
        dir,
        &format!("sweep_{t1}.json"),
        &format!(
            r#"{{"left":{{"mu":0,"t":1,"delta":1,"length":4}},
                "center":{{"mu":5,"t":1,"delta":5,"length":11}},
                "right":{{"mu":0,"t":1,"delta":1,"length":4}},
                "junction":{{"t1":{t1},"t2":{t1}}}}}"#
        ),
    )
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Parses `# key,value,...` trailing comments.
fn comment(text: &str, key: &str) -> Option<Vec<String>> {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("# {key},")))
        .map(|rest| rest.split(',').map(str::to_string).collect())
}

#[test]
fn spectrum_rows_and_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_cfg(dir.path(), 1.0);
    let o = mbs(&["spectrum", "--config", s(&cfg)]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows = text.lines().filter(|l| !l.starts_with('#')).count();
    assert_eq!(rows, 1 + 2 * 19);
    assert!(text.starts_with("index,eigenvalue\n"));
    let eps: f64 = comment(&text, "epsilon").unwrap()[0].parse().unwrap();
    assert!(eps > 0.0);

    let ring = mbs(&["spectrum", "--config", s(&cfg), "--boundary", "periodic"]);
    assert!(ring.status.success());
    assert_ne!(stdout(&ring), text);
}

#[test]
fn spectrum_decoupled_reports_zero() {
    let dir = tempfile::tempdir().unwrap();
    let o = mbs(&["spectrum", "--config", s(&sweep_cfg(dir.path(), 0.0))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(comment(&stdout(&o), "epsilon").unwrap()[0], "0.00000000000e0");
}

#[test]
fn spectrum_without_zero_sector_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "trivial.json",
        r#"{"left":{"mu":3,"t":1,"delta":1,"length":4},
            "center":{"mu":5,"t":1,"delta":5,"length":5},
            "right":{"mu":3,"t":1,"delta":1,"length":4},
            "junction":{"t1":1,"t2":1}}"#,
    );
    let o = mbs(&["spectrum", "--config", s(&cfg)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stdout(&o).lines().count() > 1, "spectrum is still printed");
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(dir.path(), "bad.json", r#"{"left":{"mu":0}}"#);
    assert_eq!(mbs(&["spectrum", "--config", s(&bad)]).status.code(), Some(2));
    assert_eq!(mbs(&["spectrum", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(mbs(&["spectrum"]).status.code(), Some(2));
}

#[test]
fn seedless_takes_no_value() {
    assert!(mbs(&["--seedless", "bessel-zero"]).status.success());
    let o = mbs(&["--seedless=yes", "bessel-zero"]);
    assert!(!o.status.success());
    assert!(o.stdout.is_empty());
}

#[test]
fn bessel_zero_value() {
    let o = mbs(&["bessel-zero", "--n", "1"]);
    assert_eq!(stdout(&o), "n,zero\n1,2.40482555770e0\n");
    assert_eq!(mbs(&["bessel-zero", "--n", "0"]).status.code(), Some(2));
}

#[test]
fn sweep_numeric_vs_closed_form_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_cfg(dir.path(), 1.0);
    let o = mbs(&["sweep", "--config", s(&cfg), "--from", "2", "--to", "10", "--steps", "17", "--methods", "numeric,eq12"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("sweep_param,value,method,epsilon,coherence_length,error"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 34);
    for pair in rows.chunks(2) {
        let mu: f64 = pair[0][1].parse().unwrap();
        let ratio = pair[0][3].parse::<f64>().unwrap() / pair[1][3].parse::<f64>().unwrap();
        if mu >= 5.0 {
            assert!((0.75..=1.25).contains(&ratio), "mu = {mu}: ratio {ratio}");
        }
    }
}

#[test]
fn sweep_is_deterministic_and_writes_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_cfg(dir.path(), 1.0);
    let out = dir.path().join("sweep.csv");
    let args = ["sweep", "--config", s(&cfg), "--from", "2", "--to", "10", "--steps", "9", "--methods", "numeric,ksum"];
    let a = mbs(&args);
    let mut with_out = args.to_vec();
    with_out.extend(["--out", s(&out)]);
    let b = mbs(&with_out);
    assert!(b.status.success());
    assert!(b.stdout.is_empty());
    assert_eq!(std::fs::read(&out).unwrap(), a.stdout);
}

#[test]
fn sweep_domain_error_row() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = sweep_cfg(dir.path(), 1.0);
    let o = mbs(&["sweep", "--config", s(&cfg), "--param", "center.delta", "--from", "0.5", "--to", "2", "--steps", "2", "--methods", "eq12"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let first = text.lines().nth(1).unwrap();
    assert!(first.contains(",eq12,nan,nan,"), "{first}");
    assert!(first.len() > "center.delta,5.00000000000e-1,eq12,nan,nan,".len());
}

#[test]
fn sweep_grid_minimum_at_origin() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "longrange.json",
        r#"{"left":{"mu":0,"t":1,"delta":1,"length":4},
            "center":{"mu":2,"t":1,"delta":5,"length":11},
            "right":{"mu":0,"t":1,"delta":1,"length":4},
            "junction":{"t1":1,"t2":1}}"#,
    );
    let o = mbs(&["sweep", "--config", s(&cfg), "--grid", "center.t2,center.delta2", "--from", "0", "--to", "1", "--steps", "5", "--methods", "numeric"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("param_x,x,param_y,y,method,epsilon,coherence_length,error\n"));
    let rows: Vec<(f64, f64, f64)> = text
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[3].parse().unwrap(), f[5].parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 25);
    let min = rows.iter().min_by(|a, b| a.2.total_cmp(&b.2)).unwrap();
    assert_eq!((min.0, min.1), (0.0, 0.0));
}

#[test]
fn evolve_rabi_matches_epsilon() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dynamics_cfg(dir.path(), 2.5);
    let spec = stdout(&mbs(&["spectrum", "--config", s(&cfg)]));
    let eps: f64 = comment(&spec, "epsilon").unwrap()[0].parse().unwrap();
    let o = mbs(&["evolve", "--config", s(&cfg), "--t-max", "800", "--dt", "0.5", "--rabi"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.starts_with("time,overlap,norm\n"));
    let omega: f64 = comment(&text, "omega_rabi").unwrap()[0].parse().unwrap();
    assert!((omega / eps - 2.0).abs() <= 0.1, "{omega} vs {eps}");
}

#[test]
fn evolve_sites_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dynamics_cfg(dir.path(), 2.5);
    let o = mbs(&["evolve", "--config", s(&cfg), "--t-max", "1", "--dt", "0.5", "--observable", "sites"]);
    let header = stdout(&o).lines().next().unwrap().to_string();
    assert!(header.starts_with("time,overlap,norm,site_-5,site_-4"));
    assert!(header.ends_with("site_14"));
}

#[test]
fn evolve_driven_at_first_zero_keeps_right_empty() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "drive.json",
        r#"{"left":{"mu":0,"t":5,"delta":5,"length":5},
            "center":{"mu":2,"t":1,"delta":10,"length":11},
            "right":{"mu":0,"t":5,"delta":5,"length":4},
            "junction":{"t1":1,"t2":1}}"#,
    );
    let mu0 = format!("{}", 2.404825557695773 * 50.0);
    let o = mbs(&[
        "evolve", "--config", s(&cfg), "--t-max", "50", "--dt", "0.001", "--drive-mu0", &mu0, "--drive-omega", "50",
        "--observable", "sites", "--samples-per-period", "4",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let header: Vec<&str> = text.lines().next().unwrap().split(',').collect();
    let right: Vec<usize> =
        (0..header.len()).filter(|&i| header[i].strip_prefix("site_").is_some_and(|n| n.parse::<i32>().unwrap() > 10)).collect();
    assert_eq!(right.len(), 4);
    for line in text.lines().skip(1) {
        let f: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        let pop: f64 = right.iter().map(|&i| f[i]).sum();
        assert!(pop <= 0.05);
    }
}

#[test]
fn floquet_modes_agree_without_drive() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dynamics_cfg(dir.path(), 2.0);
    let run = |mode: &str| {
        let o = mbs(&[
            "floquet", "--config", s(&cfg), "--mode", mode, "--drive-omega", "100", "--drive-mu0", "0", "--t-max", "20",
            "--dt", "1",
        ]);
        assert!(o.status.success());
        stdout(&o)
    };
    let (a, b) = (run("direct"), run("effective"));
    let parse = |t: &str| -> Vec<Vec<f64>> {
        t.lines().skip(1).map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect()
    };
    let (pa, pb) = (parse(&a), parse(&b));
    assert_eq!(a.lines().next(), b.lines().next());
    assert_eq!(pa.len(), pb.len());
    for (x, y) in pa.iter().zip(&pb) {
        assert_eq!(x[0], y[0]);
        assert!((x[1] - y[1]).abs() <= 1e-8);
    }
}

#[test]
fn floquet_j0_target_and_warning() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dynamics_cfg(dir.path(), 2.0);
    let o = mbs(&[
        "floquet", "--config", s(&cfg), "--mode", "effective", "--drive-omega", "10", "--j0-target", "0.8605", "--t-max",
        "2", "--dt", "1",
    ]);
    assert!(o.status.success());
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("high-frequency"), "{err}");
    assert!(stdout(&o).starts_with("time,overlap,norm\n"));
    let bad = mbs(&[
        "floquet", "--config", s(&cfg), "--mode", "effective", "--drive-omega", "100", "--j0-target", "1.5", "--t-max",
        "2", "--dt", "1",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn gates_empty_protocol_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dynamics_cfg(dir.path(), 2.5);
    let p = write(dir.path(), "empty.json", r#"{"steps":[]}"#);
    let o = mbs(&["gates", "--config", s(&cfg), "--protocol", s(&p)]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["fidelity"], 1.0);
    assert_eq!(v["theta_sim"], 0.0);
    assert_eq!(v["predicted"][0][0][0], 1.0);
}

#[test]
fn gates_x_half_pi() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dynamics_cfg(dir.path(), 2.5);
    let eps: f64 = comment(&stdout(&mbs(&["spectrum", "--config", s(&cfg)])), "epsilon").unwrap()[0].parse().unwrap();
    let t = std::f64::consts::FRAC_PI_2 / eps;
    let p = write(dir.path(), "x.json", &format!(r#"{{"steps":[{{"duration":{t},"stage":"couple"}}]}}"#));
    let o = mbs(&["gates", "--config", s(&cfg), "--protocol", s(&p)]);
    // The quench into the μ_c = 10 chain leaves 8% outside the zero sector.
    assert_eq!(o.status.code(), Some(5));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["fidelity"].as_f64().unwrap() >= 0.99);
    assert!(v["leakage"].as_f64().unwrap() > 0.05);
    assert!(v["relative_deviation"].as_f64().unwrap() <= 0.05);
}

#[test]
fn gates_insufficient_decoupling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dynamics_cfg(dir.path(), 2.5);
    let p = write(dir.path(), "p.json", r#"{"steps":[{"duration":1,"stage":"couple"}]}"#);
    let o = mbs(&["gates", "--config", s(&cfg), "--protocol", s(&p), "--mu-high", "2.5"]);
    assert_eq!(o.status.code(), Some(6));
    assert!(String::from_utf8_lossy(&o.stderr).contains("does not decouple"));
}
