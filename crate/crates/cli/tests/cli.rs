use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn stratmorse(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_stratmorse"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}",
            String::from_utf8_lossy(&out.stdout)
        )
    })
}

fn workspace(files: &[(&str, &str)]) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    for (name, text) in files {
        std::fs::write(dir.path().join(name), text).unwrap();
    }
    dir
}

const P3_JSON: &str = r#"{"circles": ["c1"], "surfaces": [{"genus": 0, "attachments": [{"circle": "c1", "degree": 3}]}]}"#;

#[test]
fn verify_p3_passes() {
    let dir = workspace(&[("p3.json", P3_JSON)]);
    let out = stratmorse(&["verify", "p3.json"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["report"]["m"], serde_json::json!([1, 1, 1]));
    assert_eq!(v["report"]["type"], "Type1");
    assert_eq!(v["report"]["witness_prime"], 3);
    assert_eq!(v["failures"], serde_json::json!([]));
}

#[test]
fn analyze_two_disks() {
    let dir = workspace(&[("two.txt", "g0[c1:2] g0[c1:3]\n")]);
    let out = stratmorse(&["analyze", "two.txt"], dir.path());
    assert!(out.status.success());
    let v = json(&out);
    assert_eq!(v["kind"], "Type2");
    assert_eq!(v["predicted_m"], serde_json::json!([1, 1, 2]));
    assert_eq!(v["euler_characteristic"], 2);
    let q = v["betti"]
        .as_array()
        .unwrap()
        .iter()
        .find(|b| b["coefficients"] == "Q")
        .unwrap();
    assert_eq!(q["b2"], 1);
}

#[test]
fn invalid_spec_exits_one() {
    let dir = workspace(&[("bad.txt", "g0[c1:2]\n")]);
    let out = stratmorse(&["analyze", "bad.txt"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("must be > 2"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn missing_file_and_bad_usage_exit_one() {
    let dir = workspace(&[]);
    assert_eq!(
        stratmorse(&["analyze", "nope.json"], dir.path())
            .status
            .code(),
        Some(1)
    );
    assert_eq!(
        stratmorse(&["frobnicate"], dir.path()).status.code(),
        Some(1)
    );
    assert_eq!(stratmorse(&["--help"], dir.path()).status.code(), Some(0));
}

#[test]
fn triangulate_then_morse_homology_oracle() {
    let dir = workspace(&[("p3.json", P3_JSON)]);
    let d = dir.path();
    let t = stratmorse(&["--circle-length", "c1=4", "triangulate", "p3.json"], d);
    assert!(t.status.success(), "{}", String::from_utf8_lossy(&t.stderr));
    for f in ["p3.mesh", "p3.ann", "p3.spec.json"] {
        assert!(d.join(f).exists(), "{f} missing");
    }

    let m = stratmorse(&["--out", ".", "morse", "p3.mesh"], d);
    assert!(m.status.success(), "{}", String::from_utf8_lossy(&m.stderr));
    assert_eq!(json(&m)["m"], serde_json::json!([1, 1, 1]));
    assert!(d.join("p3.field").exists() && d.join("p3.report.json").exists());

    let h = stratmorse(&["--coeffs", "Z,F3", "homology", "p3.mesh"], d);
    assert!(h.status.success());
    let h = json(&h);
    assert_eq!(h["euler_characteristic"], 1);
    assert_eq!(h["betti"][0]["torsion"], serde_json::json!([3]));
    assert_eq!(h["betti"][1]["b2"], 1);
}

#[test]
fn oracle_on_small_mesh_is_relabel_invariant() {
    // Boundary of a tetrahedron: a 2-sphere.
    let mesh = "v 0\nv 1\nv 2\nv 3\n\
                e 0 1\ne 0 2\ne 0 3\ne 1 2\ne 1 3\ne 2 3\n\
                t 0 1 2\nt 0 1 3\nt 0 2 3\nt 1 2 3\n";
    let dir = workspace(&[("s2.mesh", mesh)]);
    let out = stratmorse(&["--seed", "11", "oracle", "s2.mesh"], dir.path());
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["minimum"], 2);
    assert_eq!(v["relabeled_minimum"], 2);
    assert_eq!(v["exhausted"], true);
}

#[test]
fn output_is_deterministic_across_exec_modes() {
    let dir = workspace(&[("s.txt", "g0[c1:2,c2:3] g1[c1:2] g0[c2:2]\n")]);
    let a = stratmorse(&["verify", "s.txt"], dir.path());
    let b = stratmorse(&["--sequential", "verify", "s.txt"], dir.path());
    let c = stratmorse(&["verify", "s.txt"], dir.path());
    assert!(a.status.success());
    let strip = |o: &Output| {
        let mut v = json(o);
        v["oracle"]["nodes"] = Value::Null;
        v
    };
    assert_eq!(strip(&a), strip(&b));
    assert_eq!(a.stdout, c.stdout);
}
