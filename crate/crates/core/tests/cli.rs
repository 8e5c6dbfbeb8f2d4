use std::process::Command;

fn cogroup(args: &[&str]) -> (bool, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_cogroup")).args(args).output().unwrap();
    (
        out.status.success(),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

const REFERENCE: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/configs/reference.toml");

#[test]
fn doppler_curve() {
    let (ok, out, _) = cogroup(&["doppler", "--fo", "0.1", "--dmin", "1000", "--dmax", "10000", "--steps", "10"]);
    assert!(ok);
    let lines: Vec<&str> = out.lines().collect();
    assert_eq!(lines[0], "D_m,S_Hz");
    assert_eq!(lines.len(), 11);
    let s: f64 = lines[1].split(',').nth(1).unwrap().parse().unwrap();
    assert!((s - 1.0 / 2.8e-3).abs() < 1e-9);
}

#[test]
fn rate_curve_to_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rate.csv");
    let (ok, _, err) = cogroup(&["rate", "--n", "10", "--coherence-ms", "100", "--out", path.to_str().unwrap()]);
    assert!(ok, "{err}");
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("D_m,rate_coherent,rate_p2p\n"));
    assert_eq!(text.lines().count(), 101);
    assert!(err.contains("coherent overtakes"), "{err}");
}

#[test]
fn preset_table_markdown() {
    let (ok, out, err) = cogroup(&["table", "--preset", "t1", "--seeds", "2", "--format", "md"]);
    assert!(ok, "{err}");
    let header = out.lines().find(|l| l.starts_with("| (N,M)")).unwrap();
    assert_eq!(header.matches('|').count(), 8);
}

#[test]
fn preset_table_csv_is_seeded() {
    let a = cogroup(&["table", "--preset", "t7", "--seeds", "3", "--seed", "9"]);
    let b = cogroup(&["table", "--preset", "t7", "--seeds", "3", "--seed", "9"]);
    assert!(a.0);
    assert!(a.1.starts_with("scenario,protocol,mean,std,min,max,n_seeds\n"));
    assert_eq!(a.1, b.1);
}

#[test]
fn gain_report_from_config() {
    let (ok, out, err) = cogroup(&["gain", "--config", REFERENCE, "--seed", "3"]);
    assert!(ok, "{err}");
    assert!(out.starts_with("protocol,metric,value\n"));
    assert!(out.lines().any(|l| l.starts_with("ES,gain,")));
    assert!(out.lines().any(|l| l == "IO,upper_bound,90"));
}

#[test]
fn formation_rejects_single_stream_protocols() {
    let (ok, _, err) = cogroup(&["formation", "--config", REFERENCE]);
    assert!(!ok);
    assert!(err.contains("joint"), "{err}");
}

#[test]
fn bad_config_exits_nonzero_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "protocols = [\"RB\"]\n[scenario]\nn_transmitters = 2\nn_receivers = 2\nn_streams = 3\ndistance = 1000.0\ngroup_radius = 10.0\nchannel_model = \"free-space\"\n").unwrap();
    let (ok, _, err) = cogroup(&["table", "--config", path.to_str().unwrap()]);
    assert!(!ok);
    assert!(err.contains("error:") && err.contains("n_streams"), "{err}");
    let (ok, _, _) = cogroup(&["table", "--preset", "t2"]);
    assert!(!ok);
}
