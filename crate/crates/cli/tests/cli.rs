use std::path::{Path, PathBuf};
use std::process::Command;

use leggett_core::axioms::random_axiom_model;
use leggett_core::behavior::{Behavior, BellFunctional, SettingsSet};
use leggett_core::grid::build_grid;
use leggett_core::polarization::{ImperfectPolarizer, PolarizationVector};
use leggett_core::state::DensityMatrix;
use leggett_core::tomography::simulate;
use rand::SeedableRng;
use serde_json::Value;

struct Dir(tempfile::TempDir);

impl Dir {
    fn new() -> Self {
        Self(tempfile::tempdir().unwrap())
    }

    fn path(&self, name: &str) -> PathBuf {
        self.0.path().join(name)
    }

    fn write(&self, name: &str, value: &impl serde::Serialize) -> PathBuf {
        let p = self.path(name);
        std::fs::write(&p, serde_json::to_string_pretty(value).unwrap()).unwrap();
        p
    }

    fn read(&self, name: &str) -> Value {
        serde_json::from_str(&std::fs::read_to_string(self.path(name)).unwrap()).unwrap()
    }
}

fn leggett(args: &[&dyn AsRef<std::ffi::OsStr>]) -> (i32, String, String) {
    let out = Command::new(env!("CARGO_BIN_EXE_leggett")).args(args.iter().map(|a| a.as_ref())).output().unwrap();
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stdout).into_owned(), String::from_utf8_lossy(&out.stderr).into_owned())
}

fn p(path: &Path) -> &std::ffi::OsStr {
    path.as_os_str()
}

#[test]
fn gen_behavior_reports_tsirelson_value() {
    let d = Dir::new();
    let state = d.write("singlet.json", &DensityMatrix::singlet());
    let settings = d.write("settings.json", &SettingsSet::chsh_optimal());
    let out = d.path("b.json");
    let report = d.path("r.json");
    let (code, stdout, _) = leggett(&[&"gen-behavior", &"--state", &p(&state), &"--settings", &p(&settings), &"--out", &p(&out), &"--report", &p(&report)]);
    assert_eq!(code, 0, "{stdout}");
    let r = d.read("r.json");
    assert!((r["verdicts"]["chsh"].as_f64().unwrap() - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-9);
    assert_eq!(r["verdicts"]["noSignalling"]["ok"], Value::Bool(true));
    assert_eq!(r["inputs"].as_array().unwrap().len(), 2);
    assert_eq!(r["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    let b: Behavior = serde_json::from_value(d.read("b.json")).unwrap();
    assert_eq!(b.n_alice(), 2);
}

#[test]
fn maximally_mixed_state_gives_uniform_table() {
    let d = Dir::new();
    let state = d.write("mixed.json", &DensityMatrix::maximally_mixed(4).unwrap());
    let settings = d.write("settings.json", &SettingsSet::pauli_axes());
    let out = d.path("b.json");
    let (code, ..) = leggett(&[&"gen-behavior", &"--state", &p(&state), &"--settings", &p(&settings), &"--out", &p(&out)]);
    assert_eq!(code, 0);
    let b: Behavior = serde_json::from_value(d.read("b.json")).unwrap();
    assert!(b.table().iter().all(|&x| (x - 0.25).abs() < 1e-15));
}

#[test]
fn malformed_input_exits_two_naming_the_field() {
    let d = Dir::new();
    let state = d.write("s.json", &serde_json::json!({ "dim": 4 }));
    let settings = d.write("settings.json", &SettingsSet::chsh_optimal());
    let (code, _, stderr) = leggett(&[&"gen-behavior", &"--state", &p(&state), &"--settings", &p(&settings), &"--out", &p(&d.path("b.json"))]);
    assert_eq!(code, 2);
    assert!(stderr.contains("entries"), "{stderr}");

    let bad = d.path("broken.json");
    std::fs::write(&bad, "{\"alice\": [").unwrap();
    let (code, _, stderr) = leggett(&[&"chsh", &"--behavior", &p(&bad)]);
    assert_eq!(code, 2);
    assert!(stderr.contains("line"), "{stderr}");

    let (code, ..) = leggett(&[&"ppt", &"--state", &p(&d.path("missing.json"))]);
    assert_eq!(code, 2);
}

#[test]
fn product_state_is_member() {
    let d = Dir::new();
    let g = build_grid(64).unwrap();
    let rho = DensityMatrix::product(&DensityMatrix::from_polarization(&g.points()[9]), &DensityMatrix::from_polarization(&g.points()[40])).unwrap();
    let b = leggett_core::behavior::quantum_behavior(&rho, &SettingsSet::chsh_optimal()).unwrap();
    let behavior = d.write("b.json", &b);
    let settings = d.write("s.json", &SettingsSet::chsh_optimal());
    let (code, stdout, stderr) = leggett(&[
        &"leggett", &"--behavior", &p(&behavior), &"--settings", &p(&settings), &"--grid", &"64", &"--model", &p(&d.path("m.json")), &"--report", &p(&d.path("r.json")),
    ]);
    assert_eq!(code, 0, "{stdout}{stderr}");
    assert_eq!(d.read("r.json")["verdicts"]["verdict"], "member");
    assert!(d.path("m.json").exists());
}

#[test]
fn signalling_behavior_is_refuted_with_certificate() {
    let d = Dir::new();
    let t = vec![0.5, 0.0, 0.0, 0.5, 1.0, 0.0, 0.0, 0.0, 0.5, 0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 1.0];
    let behavior = d.write("b.json", &Behavior::new(2, 2, t).unwrap());
    let settings = d.write("s.json", &SettingsSet::chsh_optimal());
    let cert = d.path("c.json");
    let (code, stdout, stderr) = leggett(&[&"leggett", &"--behavior", &p(&behavior), &"--settings", &p(&settings), &"--grid", &"40", &"--certificate", &p(&cert)]);
    assert_eq!(code, 3, "{stdout}{stderr}");
    assert!(stdout.starts_with("refuted"));
    assert!(d.read("c.json")["lambda"].is_array());
}

#[test]
fn singlet_on_coarse_grid_is_undecided() {
    let d = Dir::new();
    // six settings per side on a meridian great circle
    let circle: Vec<(f64, f64)> = (0..6).map(|k| (k as f64 * std::f64::consts::PI / 6.0 + 0.1, 0.0)).collect();
    let s = SettingsSet::from_bloch(&circle, &circle).unwrap();
    let b = leggett_core::behavior::quantum_behavior(&DensityMatrix::singlet(), &s).unwrap();
    let behavior = d.write("b.json", &b);
    let settings = d.write("s.json", &s);
    let (code, stdout, stderr) = leggett(&[&"leggett", &"--behavior", &p(&behavior), &"--settings", &p(&settings), &"--grid", &"8"]);
    assert_eq!(code, 4, "{stdout}{stderr}");
    assert!(stdout.starts_with("undecided"));
}

#[test]
fn ppt_exit_codes() {
    let d = Dir::new();
    let w = d.write("w.json", &DensityMatrix::werner(0.5).unwrap());
    let (code, stdout, _) = leggett(&[&"ppt", &"--state", &p(&w), &"--report", &p(&d.path("r.json"))]);
    assert_eq!(code, 3);
    assert!(stdout.starts_with("entangled"));
    assert!(d.read("r.json")["verdicts"]["witnessValue"].as_f64().unwrap() < 0.0);

    let sep = d.write("sep.json", &DensityMatrix::werner(0.2).unwrap());
    assert_eq!(leggett(&[&"ppt", &"--state", &p(&sep)]).0, 0);
    let edge = d.write("edge.json", &DensityMatrix::werner(1.0 / 3.0).unwrap());
    let (code, stdout, _) = leggett(&[&"ppt", &"--state", &p(&edge)]);
    assert_eq!(code, 4);
    assert!(stdout.starts_with("boundary"));
}

#[test]
fn weak_model_flags_bob_side_malus_violation() {
    let d = Dir::new();
    let state = d.write("singlet.json", &DensityMatrix::singlet());
    let settings = d.write("s.json", &SettingsSet::pauli_axes());
    let (code, stdout, _) = leggett(&[
        &"weak-model", &"--state", &p(&state), &"--settings", &p(&settings), &"--out", &p(&d.path("w.json")), &"--report", &p(&d.path("r.json")),
    ]);
    assert_eq!(code, 0);
    assert!(stdout.contains("Bob-side Malus violated"), "{stdout}");
    let r = d.read("r.json");
    assert_eq!(r["verdicts"]["bobMalusViolated"], Value::Bool(true));
    assert!(r["verdicts"]["reproductionError"].as_f64().unwrap() < 1e-10);
}

#[test]
fn axiom_check_accepts_compliant_and_rejects_tampered_models() {
    let d = Dir::new();
    let mut r = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let g = build_grid(16).unwrap();
    let m = random_axiom_model(&mut r, &SettingsSet::chsh_optimal(), &g, &g, 4).unwrap();
    let good = d.write("good.json", &m);
    assert_eq!(leggett(&[&"axiom-check", &"--model", &p(&good)]).0, 0);

    let mut bad = m.clone();
    bad.ensembles[0][0][0].mixture = vec![
        leggett_core::axioms::WeightedDirection { weight: 0.5, w: PolarizationVector::horizontal() },
        leggett_core::axioms::WeightedDirection { weight: 0.5, w: PolarizationVector::vertical() },
    ];
    let bad = d.write("bad.json", &bad);
    let (code, stdout, _) = leggett(&[&"axiom-check", &"--model", &p(&bad)]);
    assert_eq!(code, 3);
    assert!(stdout.starts_with("model rejected"));
}

#[test]
fn tomography_round_trips() {
    let d = Dir::new();
    let rho = DensityMatrix::new(
        leggett_core::linalg::CMatrix::from_real(&[&[0.7, 0.1], &[0.1, 0.3]]).unwrap(),
    )
    .unwrap();
    let dirs = [PolarizationVector::from_bloch(0.0, 0.0), PolarizationVector::from_bloch(1.5, 0.2), PolarizationVector::from_bloch(1.6, 1.9), PolarizationVector::from_bloch(2.5, -2.0)];
    let pols: Vec<_> = dirs.iter().map(|&u| ImperfectPolarizer::new(0.1, 0.05, u).unwrap()).collect();
    let stats = d.write("stats.json", &simulate(&rho, &pols).unwrap());
    let (code, ..) = leggett(&[&"tomography", &"--stats", &p(&stats), &"--out", &p(&d.path("rho.json"))]);
    assert_eq!(code, 0);
    let back: DensityMatrix = serde_json::from_value(d.read("rho.json")).unwrap();
    assert!(back.matrix().max_abs_diff(rho.matrix()) < 1e-10);
}

#[test]
fn maximize_and_chsh() {
    let d = Dir::new();
    let f = d.write("f.json", &BellFunctional::chsh());
    let s = d.write("s.json", &SettingsSet::chsh_optimal());
    let (code, stdout, _) = leggett(&[&"maximize", &"--functional", &p(&f), &"--settings", &p(&s), &"--grid", &"16", &"--report", &p(&d.path("r.json"))]);
    assert_eq!(code, 0);
    assert!((d.read("r.json")["verdicts"]["value"].as_f64().unwrap() - 4.0).abs() < 1e-9, "{stdout}");

    let b = d.write("b.json", &Behavior::new(2, 2, [1.0, 0.0, 0.0, 0.0].repeat(4)).unwrap());
    let (code, stdout, _) = leggett(&[&"chsh", &"--behavior", &p(&b)]);
    assert_eq!(code, 0);
    assert!(stdout.starts_with("value 2.000000000"), "{stdout}");
}

#[test]
fn reports_are_byte_identical_and_carry_the_seed() {
    let d = Dir::new();
    let g = build_grid(32).unwrap();
    let rho = DensityMatrix::product(&DensityMatrix::from_polarization(&g.points()[3]), &DensityMatrix::from_polarization(&g.points()[20])).unwrap();
    let behavior = d.write("b.json", &leggett_core::behavior::quantum_behavior(&rho, &SettingsSet::chsh_optimal()).unwrap());
    let settings = d.write("s.json", &SettingsSet::chsh_optimal());
    let mut reports = Vec::new();
    for (i, threads) in ["1", "2"].iter().enumerate() {
        let r = d.path(&format!("r{i}.json"));
        let (code, ..) = leggett(&[
            &"--seed", &"17", &"--threads", threads, &"leggett", &"--behavior", &p(&behavior), &"--settings", &p(&settings), &"--grid", &"32", &"--report", &p(&r),
        ]);
        assert_eq!(code, 0);
        reports.push(std::fs::read(&r).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let v: Value = serde_json::from_slice(&reports[0]).unwrap();
    assert_eq!(v["seed"], 17);
    assert_eq!(v["tolProfile"], "default");
    assert!(v["timings"].as_object().unwrap().is_empty());

    let r = d.path("timed.json");
    leggett(&[&"--timings", &"--tol-profile", &"strict", &"leggett", &"--behavior", &p(&behavior), &"--settings", &p(&settings), &"--grid", &"32", &"--report", &p(&r)]);
    let v: Value = serde_json::from_slice(&std::fs::read(&r).unwrap()).unwrap();
    assert!(v["timings"].get("membership").is_some());
    assert_eq!(v["tolProfile"], "strict");
}

#[test]
fn file_formats_round_trip() {
    let d = Dir::new();
    let s = SettingsSet::chsh_optimal();
    let path = d.write("s.json", &s);
    let back: SettingsSet = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(serde_json::to_string(&back).unwrap(), serde_json::to_string(&s).unwrap());
    let rho = DensityMatrix::werner(0.4).unwrap();
    let back: DensityMatrix = serde_json::from_str(&serde_json::to_string(&rho).unwrap()).unwrap();
    assert_eq!(back.matrix(), rho.matrix());
}
