use std::path::{Path, PathBuf};
use std::process::Command;

use qicost::classical::ClassicalProtocol;
use qicost_cli::format::{read_classical, read_protocol, read_reversible, write_json, ProtocolFile};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("qicost-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

/// Runs the binary; returns (exit code, stdout, stderr).
fn qicost(args: &[&str]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_qicost"))
        .args(args)
        .current_dir(fixture(""))
        .output()
        .expect("binary runs");
    (
        out.status.code().unwrap_or(-1),
        String::from_utf8(out.stdout).unwrap(),
        String::from_utf8(out.stderr).unwrap(),
    )
}

fn measure(stdout: &str, name: &str) -> f64 {
    let key = format!("measure={name} value=");
    stdout
        .lines()
        .find_map(|l| l.strip_prefix(&key))
        .unwrap_or_else(|| panic!("no measure {name} in\n{stdout}"))
        .parse()
        .unwrap()
}

fn checks(stdout: &str) -> Vec<(String, bool)> {
    stdout
        .lines()
        .filter_map(|l| l.strip_prefix("check="))
        .map(|l| {
            let (name, pass) = l.split_once(" pass=").unwrap();
            (name.to_string(), pass == "true")
        })
        .collect()
}

#[test]
fn protocol_files_round_trip() {
    for name in [
        "send_input.json",
        "send_copy.json",
        "bounce.json",
        "and_send_x.json",
        "identity.json",
        "random_safe.json",
    ] {
        let p = read_protocol(&fixture(name)).unwrap();
        let file = ProtocolFile::from_protocol(&p).unwrap();
        let path = scratch(name);
        write_json(&path, &file).unwrap();
        let again = read_protocol(&path).unwrap();
        assert_eq!(ProtocolFile::from_protocol(&again).unwrap(), file, "{name}");
    }
}

#[test]
fn classical_and_reversible_files_parse() {
    let pi = read_classical(&fixture("masked_exchange.json")).unwrap();
    let path = scratch("classical.json");
    write_json(&path, &pi).unwrap();
    let again: ClassicalProtocol = read_classical(&path).unwrap();
    assert_eq!(again.rounds.len(), pi.rounds.len());
    for name in ["reversible_bounce.json", "reversible_keeper.json"] {
        let rp = read_reversible(&fixture(name)).unwrap();
        assert!(!rp.circuits.is_empty(), "{name}");
    }
}

#[test]
fn costs_of_sending_the_input() {
    let (code, out, _) = qicost(&["costs", "send_input.json", "correlated.json"]);
    assert_eq!(code, 0);
    assert!((measure(&out, "qic") - 1.0).abs() < 1e-8);
    let (code, out, _) = qicost(&["costs", "send_input.json", "correlated.json", "--safe"]);
    assert_eq!(code, 0);
    assert!(measure(&out, "qic").abs() < 1e-8);
    assert!(checks(&out).iter().all(|(_, ok)| *ok));
}

#[test]
fn identity_protocol_costs_nothing() {
    let (code, out, _) = qicost(&["costs", "identity.json", "skewed.json"]);
    assert_eq!(code, 0);
    for name in ["qic", "cic", "cric", "hic"] {
        assert_eq!(measure(&out, name), 0.0, "{name}");
    }
    assert!(!out.contains("-0.000000000"));
}

#[test]
fn random_safe_protocol_satisfies_the_identities() {
    let (code, out, _) = qicost(&["costs", "random_safe.json", "uniform.json"]);
    assert_eq!(code, 0);
    let names: Vec<String> = checks(&out).into_iter().filter(|(_, ok)| *ok).map(|(n, _)| n).collect();
    for name in ["hic_identity", "qic_identity", "sandwich", "superposed_identity"] {
        assert!(names.iter().any(|n| n == name), "{name} missing or failed");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(qicost(&["ip", "2"]).0, 0);
    let (code, out, _) = qicost(&["--tol=-1", "costs", "random_safe.json"]);
    assert_eq!(code, 1);
    assert!(checks(&out).iter().any(|(_, ok)| !ok));
    let (code, _, err) = qicost(&["costs", "missing.json"]);
    assert_eq!(code, 2);
    assert!(err.starts_with("error:"));
    let (code, _, err) = qicost(&["costs", "send_input.json", "--function", "0,x"]);
    assert_eq!(code, 2);
    assert!(err.contains("truth-table"));
    assert_eq!(qicost(&["reverse", "bounce.json"]).0, 2);
}

#[test]
fn inner_product_line() {
    let (code, out, _) = qicost(&["ip", "3"]);
    assert_eq!(code, 0);
    assert_eq!(out.trim(), "phase_entropy=3.000000000 qic=3.000000000 tight=true");
}

#[test]
fn random_functions_stay_in_range() {
    let (code, out, _) = qicost(&["randomfn", "1", "4", "0"]);
    assert_eq!(code, 0);
    let h2: Vec<f64> = out
        .lines()
        .filter(|l| l.starts_with("sample="))
        .map(|l| {
            l.split_whitespace()
                .nth(1)
                .unwrap()
                .strip_prefix("h2=")
                .unwrap()
                .parse()
                .unwrap()
        })
        .collect();
    assert_eq!(h2.len(), 4);
    assert!(h2.iter().all(|v| (0.0..=1.0 + 1e-9).contains(v)));
    let (_, flagged, _) = qicost(&["randomfn", "1", "--samples", "4", "--seed", "0"]);
    let samples = |s: &str| {
        s.lines()
            .filter(|l| l.starts_with("sample="))
            .map(String::from)
            .collect::<Vec<_>>()
    };
    assert_eq!(samples(&flagged), samples(&out));
}

#[test]
fn flow_identity_holds() {
    let (code, out, _) = qicost(&["flowcheck", "100", "7"]);
    assert_eq!(code, 0);
    assert!(measure(&out, "max_residual") < 1e-8);
}

#[test]
fn quantize_preserves_information_and_communication() {
    let out_path = scratch("quantized.json");
    let (code, out, _) = qicost(&[
        "quantize",
        "masked_exchange.json",
        "skewed.json",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    assert!((measure(&out, "ic") - measure(&out, "qic")).abs() < 1e-8);
    assert_eq!(measure(&out, "cc"), measure(&out, "qcc"));
    let q = read_protocol(&out_path).unwrap();
    assert!(q.is_safe());
}

#[test]
fn transforms_report_their_costs() {
    let (code, out, _) = qicost(&["safe", "bounce.json"]);
    assert_eq!(code, 0);
    assert!(measure(&out, "qic_safe") <= measure(&out, "qic") + 1e-8);

    let (code, out, _) = qicost(&["clean", "and_send_x.json", "skewed.json", "--function", "0,0,0,1"]);
    assert_eq!(code, 0);
    assert!((measure(&out, "clean_qic_a_to_b") - measure(&out, "qic")).abs() < 1e-8);

    let (code, out, _) = qicost(&["phase", "and_send_x.json", "--function", "0,0,0,1"]);
    assert_eq!(code, 0);
    assert!((measure(&out, "phase_qic_a_to_b") - measure(&out, "qic")).abs() < 1e-8);

    assert_eq!(qicost(&["clean", "and_send_x.json", "--function", "0,1,1,0"]).0, 2);

    let (code, out, _) = qicost(&["reverse", "send_copy.json", "skewed.json"]);
    assert_eq!(code, 0);
    assert!((measure(&out, "reverse_qic") - 2.0 * measure(&out, "qic")).abs() < 1e-8);
}

#[test]
fn reversible_simulation() {
    let (code, out, _) = qicost(&["ricsim", "reversible_bounce.json", "--safe"]);
    assert_eq!(code, 0);
    assert!(measure(&out, "ic_simulation") <= measure(&out, "ric") + 1e-8);
    assert!(measure(&out, "ric") <= measure(&out, "ric_original") + 1e-8);
    assert_eq!(qicost(&["ricsim", "reversible_bounce.json"]).0, 2);
    let (code, out, _) = qicost(&["ricsim", "reversible_keeper.json"]);
    assert_eq!(code, 0);
    assert!((measure(&out, "ic_simulation") - measure(&out, "ric")).abs() < 1e-8);
}
