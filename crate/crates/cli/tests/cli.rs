use std::f64::consts::{PI, SQRT_2};
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn polaron(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_polaron"))
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn cp_defaults() {
    let dir = TempDir::new().unwrap();
    let o = polaron(dir.path(), &["cp"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let c_p = read_json(&dir.path().join("cp.json"))["c_p"].as_f64().unwrap();
    assert!((-0.1090..=-0.1080).contains(&c_p), "{c_p}");

    let manifest = read_json(&dir.path().join("cp.manifest.json"));
    assert_eq!(manifest["command"], "cp");
    assert_eq!(manifest["config"]["spacing-ladder"], "0.04,0.02,0.01");
    assert!(manifest["tolerances"]["energy_tol"].as_f64().is_some());
    assert_eq!(manifest["outputs"].as_array().unwrap().len(), 1);
}

#[test]
fn cp_tsv_has_two_header_lines() {
    let dir = TempDir::new().unwrap();
    let o = polaron(dir.path(), &["--format", "tsv", "cp", "--spacing-ladder", "0.04,0.02"]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("cp.tsv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# c_p="));
    assert_eq!(lines[1], "spacing\tbox_radius\tenergy\titerations\tvirial_defect");
    assert_eq!(lines.len(), 4);
}

#[test]
fn small_box_warns_but_succeeds() {
    let dir = TempDir::new().unwrap();
    let o = polaron(dir.path(), &["cp", "--box", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("warning: box radius 6"), "{}", stderr(&o));
    let json = read_json(&dir.path().join("cp.json"));
    assert!(!json["warnings"].as_array().unwrap().is_empty());
    assert!(json["box_sensitivity"].as_f64().unwrap() > 1e-3);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.conf");
    std::fs::write(&cfg, "# test\n[cp]\nbox = 6\nspacing_ladder = 0.04,0.02\n").unwrap();
    let o = polaron(dir.path(), &["--config", cfg.to_str().unwrap(), "cp", "--box", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let manifest = read_json(&dir.path().join("cp.manifest.json"));
    assert_eq!(manifest["config"]["box"], "16");
    assert_eq!(manifest["config"]["spacing-ladder"], "0.04,0.02");
    assert_eq!(manifest["inputs"][0].as_str().unwrap(), cfg.to_str().unwrap());
}

#[test]
fn convergence_failure_exits_with_two() {
    let dir = TempDir::new().unwrap();
    let o = polaron(dir.path(), &["cp", "--max-iter", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("did not converge"));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = TempDir::new().unwrap();
    let o = polaron(dir.path(), &["cp", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("Usage"));
    assert_eq!(polaron(dir.path(), &["--jobs", "0", "gross"]).status.code(), Some(1));
    assert_eq!(polaron(dir.path(), &["phase", "--restarts", "0"]).status.code(), Some(1));
    assert_eq!(polaron(dir.path(), &["gross", "--alpha", "x"]).status.code(), Some(1));
    assert_eq!(polaron(dir.path(), &["fock", "--P", "1,2"]).status.code(), Some(1));
    assert_eq!(polaron(dir.path(), &["--help"]).status.code(), Some(0));
}

fn quick_phase(out: &Path, grid: &str) -> Output {
    polaron(out, &["--seed", "11", "phase", "--u-grid", grid, "--basis-size", "2", "--restarts", "1"])
}

#[test]
fn phase_below_threshold_leaves_the_bracket_open() {
    let dir = TempDir::new().unwrap();
    let o = quick_phase(dir.path(), "0,1.2");
    assert_eq!(o.status.code(), Some(0));
    assert!(stderr(&o).contains("open bracket"), "{}", stderr(&o));
    let json = read_json(&dir.path().join("phase.json"));
    assert!(json["u_c"]["u_c"].is_null());
    assert!(json["u_c"]["bracket"]["hi"].is_null());
    assert_eq!(json["u_c"]["bracket"]["lo"].as_f64(), Some(1.2));
}

#[test]
fn phase_across_threshold() {
    let dir = TempDir::new().unwrap();
    let o = quick_phase(dir.path(), "0,2.0");
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let json = read_json(&dir.path().join("phase.json"));
    let u_c = json["u_c"]["u_c"].as_f64().unwrap();
    assert!(u_c > SQRT_2 && u_c < 2.0, "{u_c}");
    let pts = json["curve"]["points"].as_array().unwrap();
    assert!(pts[0]["binding"].as_f64().unwrap() > 0.0);

    let two = std::fs::read_to_string(dir.path().join("phase_binding.tsv")).unwrap();
    assert!(two.starts_with("U\tbinding\n"));
    assert_eq!(two.lines().count(), 3);
    assert!(stdout(&o).contains("u_c ~"));
}

#[test]
fn phase_is_reproducible_for_a_seed() {
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    quick_phase(a.path(), "0,1.5");
    quick_phase(b.path(), "0,1.5");
    for name in ["phase.json", "phase.tsv", "phase_binding.tsv"] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert_eq!(x, y, "{name}");
    }
    assert_eq!(read_json(&a.path().join("phase.manifest.json"))["seed"], 11);
}

#[test]
fn phase_svg_is_written_on_request() {
    let dir = TempDir::new().unwrap();
    let o = polaron(dir.path(), &["phase", "--u-grid", "0,1", "--basis-size", "1", "--restarts", "1", "--svg"]);
    assert_eq!(o.status.code(), Some(0));
    let svg = std::fs::read_to_string(dir.path().join("phase_binding.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
}

#[test]
fn gross_row_matches_closed_form() {
    let dir = TempDir::new().unwrap();
    let o = polaron(dir.path(), &["gross", "--alpha", "1", "--K", "10", "--kappa", "inf"]);
    assert_eq!(o.status.code(), Some(0));
    let json = read_json(&dir.path().join("gross.json"));
    let row = &json["rows"][0];
    let exact = -(4.0 / PI) * (PI / 2.0 - (10.0 / SQRT_2).atan());
    let e_cut = row["E_cut"].as_f64().unwrap();
    assert!((e_cut - exact).abs() < 1e-8 * exact.abs());
    assert_eq!(row["admissible"], false);
    let k_star = json["thresholds"][0]["K_star"].as_f64().unwrap();
    assert!((k_star - 41.947647).abs() < 1e-5);
}

#[test]
fn fock_free_case_is_exact() {
    let dir = TempDir::new().unwrap();
    let o = polaron(dir.path(), &["fock", "--alpha", "0", "--P", "0.2,0,0"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let out = stdout(&o);
    let lines: Vec<&str> = out.lines().filter(|l| l.starts_with("free case")).collect();
    assert_eq!(lines.len(), 3);
    for l in lines {
        let dev: f64 = l.rsplit(' ').next().unwrap().parse().unwrap();
        assert!(dev.abs() < 1e-10, "{l}");
    }
    assert!(out.contains("E(0) <= E(P): true"));
    assert!(out.contains("existence at P"));
}

#[test]
fn fock_reports_the_supplied_binding() {
    let dir = TempDir::new().unwrap();
    let o = polaron(
        dir.path(),
        &["--format", "tsv", "fock", "--alpha", "1", "--lattice", "4", "--shells", "1", "--per-shell", "2", "--P", "0.4", "--e-bin", "0.25"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stdout(&o).contains("with E_bin = 0.25: true"));
    let tsv = std::fs::read_to_string(dir.path().join("fock.tsv")).unwrap();
    assert!(tsv.starts_with("Px\tPy\tPz\tE\tresidual\tchecks_passed\n"));
    assert_eq!(tsv.lines().count(), 4);
}

#[test]
fn coherent_quadratic_law() {
    let dir = TempDir::new().unwrap();
    let o = polaron(dir.path(), &["--format", "tsv", "coherent", "--alpha", "1,4,16", "--kappa", "inf"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let tsv = std::fs::read_to_string(dir.path().join("coherent.tsv")).unwrap();
    let ratios: Vec<f64> = tsv.lines().skip(1).map(|l| l.rsplit('\t').next().unwrap().parse().unwrap()).collect();
    assert_eq!(ratios.len(), 3);
    for r in &ratios {
        assert!((r - ratios[0]).abs() < 1e-10 * ratios[0].abs());
    }
    assert!((-0.1090..=-0.1080).contains(&ratios[0]));
}

#[test]
fn pt_round_trips_its_ansatz() {
    let dir = TempDir::new().unwrap();
    let o = polaron(dir.path(), &["pt", "--u", "1.5", "--basis-size", "2", "--restarts", "1"]);
    assert_eq!(o.status.code(), Some(0));
    let first = read_json(&dir.path().join("pt.json"))["breakdown"]["total"].as_f64().unwrap();
    let ansatz = dir.path().join("pt_ansatz.txt");
    let kept = dir.path().join("kept.txt");
    std::fs::copy(&ansatz, &kept).unwrap();
    let o = polaron(dir.path(), &["pt", "--u", "1.5", "--ansatz", kept.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let again = read_json(&dir.path().join("pt.json"))["breakdown"]["total"].as_f64().unwrap();
    assert!((first - again).abs() < 1e-12 * first.abs());
}
