use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vanet-aoa")).args(args).output().expect("binary runs")
}

#[test]
fn writes_curve_csv_to_stdout() {
    let out = cli(&["pd", "--trials", "20", "--snr-db", "10,20", "--alpha", "2", "--k", "100"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "scenario,snr_db,alpha_deg,k,n,L,trials,empirical,analytic,std_error");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("pd,10,2,100,4,40,20,"));
}

#[test]
fn negative_snr_values_parse() {
    let out = cli(&["pf-far", "--trials", "10", "--snr-db", "-5", "--alpha", "1", "--k", "10"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8(out.stdout).unwrap().contains("pf-far,-5,1,10,"));
}

#[test]
fn invalid_config_exits_with_one() {
    assert_eq!(cli(&["pd", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(cli(&["pd", "--alpha", "two"]).status.code(), Some(1));
    assert_eq!(cli(&["pd", "--config", "/nonexistent/vanet.cfg"]).status.code(), Some(1));
    assert_eq!(cli(&["ska-demo", "--alpha", "1,2"]).status.code(), Some(1));
}

#[test]
fn self_check_violation_exits_with_three() {
    // At -20 dB the far attacker is accepted far more often than 1% of the time.
    let out = cli(&["pf-far", "--trials", "200", "--snr-db", "-20", "--alpha", "1", "--k", "100", "--self-check"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("violation"));
}

#[test]
fn ska_demo_and_map_outputs() {
    let demo = cli(&["ska-demo", "--self-check"]);
    assert!(demo.status.success(), "{}", String::from_utf8_lossy(&demo.stderr));
    let text = String::from_utf8(demo.stdout).unwrap();
    assert!(text.contains("outcome: Completed"));
    assert!(text.contains("outcome: AbortedAtStep(3)"));

    let dir = std::env::temp_dir().join(format!("vanet-aoa-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("map.cfg");
    std::fs::write(&cfg, "trials = 5\nraster_nx = 4\nraster_ny = 3\n").unwrap();
    let out = dir.join("map.csv");
    let map = cli(&["mitm-map", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(map.status.success());
    let csv = std::fs::read_to_string(&out).unwrap();
    let _ = std::fs::remove_dir_all(&dir);
    assert_eq!(csv.lines().next(), Some("x,y,success_rate,in_region"));
    assert_eq!(csv.lines().count(), 13);
}
