#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;

fn mdpipe(cwd: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdpipe"))
        .current_dir(cwd)
        .args(args)
        .env_remove("MDPIPE_CACHE")
        .env("HOME", cwd)
        .env_remove("XDG_CACHE_HOME")
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const SPEC: &str = "\
label: demo
pdb_file: protein.pdb
case_type: solution
temperature: 300
hmr: true
ion_concentration: 0.15
cell: {a: 60, b: 60, c: 60}
";

/// Strand protein plus water, a trajectory and a NAMD log.
fn fixture(n_frames: usize, jitter: f64) -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    let mut atoms = strands(3, 6);
    atoms.extend(waters(10, mdpipe::Vec3::new(0.0, 18.0, 0.0), 3.1));
    snap(&mut atoms);
    let (pdb, s) = structure_of(&atoms);
    fs::write(dir.path().join("protein.pdb"), pdb).unwrap();
    fs::write(dir.path().join("spec.yml"), SPEC).unwrap();
    let frames = jittered_frames(&s.positions(), n_frames, jitter, 11);
    write_dcd_file(&dir.path().join("traj.dcd"), &timed_header(s.len(), n_frames, 10.0), &frames);
    fs::write(dir.path().join("run.log"), namd_log(20)).unwrap();
    dir
}

fn tree(dir: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push(p.strip_prefix(dir).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

const PIPELINE: &[&str] = &["pipeline", "spec.yml", "--trajectory", "traj.dcd", "--energy-log", "run.log"];

#[test]
fn help_and_bad_flags() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&mdpipe(dir.path(), &["--help"])), 0);
    assert_eq!(code(&mdpipe(dir.path(), &["--version"])), 0);
    assert_eq!(code(&mdpipe(dir.path(), &["analyze", "--bogus"])), 1);
    assert_eq!(code(&mdpipe(dir.path(), &[])), 1);
}

#[test]
fn pipeline_twice_is_byte_identical() {
    let dir = fixture(16, 0.25);
    let mut a = PIPELINE.to_vec();
    a.extend(["--out", "one"]);
    let mut b = PIPELINE.to_vec();
    b.extend(["--out", "two"]);
    let (ra, rb) = (mdpipe(dir.path(), &a), mdpipe(dir.path(), &b));
    assert_eq!(code(&ra), 0, "{}", stderr(&ra));
    assert_eq!(code(&rb), 0, "{}", stderr(&rb));
    let (one, two) = (dir.path().join("one/demo"), dir.path().join("two/demo"));
    let files = tree(&one);
    assert_eq!(files, tree(&two));
    assert!(files.iter().filter(|p| p.extension().is_some_and(|e| e == "svg")).count() >= 8);
    for rel in files.iter().filter(|p| !p.ends_with("manifest.json")) {
        assert_eq!(fs::read(one.join(rel)).unwrap(), fs::read(two.join(rel)).unwrap(), "{}", rel.display());
    }
    let strip = |p: &Path| {
        let mut v: serde_json::Value = serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap();
        v.as_object_mut().unwrap().remove("generated_at");
        v
    };
    assert_eq!(strip(&one.join("manifest.json")), strip(&two.join("manifest.json")));
}

#[test]
fn output_ignores_locale() {
    let dir = fixture(8, 0.2);
    let run = |out: &str, lang: &str| {
        let o = Command::new(env!("CARGO_BIN_EXE_mdpipe"))
            .current_dir(dir.path())
            .args(PIPELINE)
            .args(["--out", out])
            .env("LC_ALL", lang)
            .env("LANG", lang)
            .env("LC_NUMERIC", lang)
            .output()
            .unwrap();
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    };
    run("c", "C");
    run("de", "de_DE.UTF-8");
    let c = fs::read_to_string(dir.path().join("c/demo/analysis/rg.csv")).unwrap();
    let de = fs::read_to_string(dir.path().join("de/demo/analysis/rg.csv")).unwrap();
    assert_eq!(c, de);
    for line in c.lines().skip(1) {
        let (_, v) = line.split_once(',').unwrap();
        assert!(v.contains('.') && !v.contains(' '), "{line}");
    }
    assert_eq!(
        fs::read(dir.path().join("c/demo/plots/rg.svg")).unwrap(),
        fs::read(dir.path().join("de/demo/plots/rg.svg")).unwrap()
    );
}

#[test]
fn analyze_static_rmsd_is_zero() {
    let dir = fixture(4, 0.0);
    let o = mdpipe(
        dir.path(),
        &["analyze", "--label", "static", "--structure", "protein.pdb", "--trajectory", "traj.dcd", "--rmsd"],
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("mdpipe-out/static/analysis/rmsd.csv")).unwrap();
    assert_eq!(csv, "index,RMSD (Å)\n0,0\n1,0\n2,0\n3,0\n");
    let manifest = fs::read_to_string(dir.path().join("mdpipe-out/static/manifest.json")).unwrap();
    assert!(manifest.contains("analysis/rmsd.csv"));

    let r = mdpipe(dir.path(), &["report", "--label", "static"]);
    assert_eq!(code(&r), 0, "{}", stderr(&r));
    assert!(dir.path().join("mdpipe-out/static/plots/rmsd.svg").is_file());
}

#[test]
fn analyze_needs_a_metric() {
    let dir = fixture(2, 0.0);
    let o = mdpipe(dir.path(), &["analyze", "--label", "x", "--structure", "protein.pdb", "--trajectory", "traj.dcd"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--rmsd"));
}

#[test]
fn missing_and_malformed_inputs_name_the_file() {
    let dir = fixture(2, 0.0);
    let o = mdpipe(dir.path(), &["preflight", "nope.pdb"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nope.pdb"));

    fs::write(
        dir.path().join("bad.pdb"),
        "ATOM      1  N   ALA A   1       0.000   x.000   0.000  1.00  0.00           N\n",
    )
    .unwrap();
    let o = mdpipe(dir.path(), &["preflight", "bad.pdb"]);
    assert_eq!(code(&o), 1);
    let err = stderr(&o);
    assert!(err.contains("bad.pdb") && err.contains("line 1"), "{err}");

    fs::write(dir.path().join("short.dcd"), &fs::read(dir.path().join("traj.dcd")).unwrap()[..300]).unwrap();
    let o = mdpipe(
        dir.path(),
        &["analyze", "--label", "x", "--structure", "protein.pdb", "--trajectory", "short.dcd", "--rg"],
    );
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("short.dcd"), "{}", stderr(&o));
}

#[test]
fn narrow_membrane_exits_2_with_report() {
    let dir = tempfile::tempdir().unwrap();
    let (pdb, _) = structure_of(&strands(10, 14));
    fs::write(dir.path().join("wide.pdb"), pdb).unwrap();
    fs::write(
        dir.path().join("wide.yml"),
        "label: wide\npdb_file: wide.pdb\ncase_type: bilayer\ntemperature: 310\nmembrane:\n  upper_lipids: {POPC: 1}\n  lower_lipids: {POPC: 1}\n  xy_dim: 35\n",
    )
    .unwrap();
    let o = mdpipe(dir.path(), &["validate", "wide.yml"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let report = fs::read_to_string(dir.path().join("mdpipe-out/wide/analysis/validation_report.json")).unwrap();
    assert!(report.contains("membrane-too-small"));
    assert!(report.contains("\"verdict\": \"fail\""), "{report}");
    assert!(dir.path().join("mdpipe-out/wide/manifest.json").is_file());

    let o = mdpipe(dir.path(), &["pipeline", "wide.yml", "--out", "p"]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("p/wide/configs/wide_production.conf").exists());
}

#[test]
fn gen_namd_writes_one_ns_production() {
    let dir = fixture(2, 0.0);
    let o = mdpipe(dir.path(), &["gen-namd", "spec.yml", "--param", "par_all36m_prot.prm"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let conf = fs::read_to_string(dir.path().join("mdpipe-out/demo/configs/demo_production.conf")).unwrap();
    let get = |k: &str| {
        conf.lines()
            .find_map(|l| l.strip_prefix(k).filter(|r| r.starts_with(' ')).map(|r| r.trim().to_string()))
            .unwrap()
    };
    let steps: f64 = get("run").parse().unwrap();
    let dt: f64 = get("timestep").parse().unwrap();
    assert_eq!(steps * dt, 1.0e6);
    assert_eq!(get("parameters"), "par_all36m_prot.prm");
    for stage in ["minimization", "equilibration"] {
        assert!(dir.path().join(format!("mdpipe-out/demo/configs/demo_{stage}.conf")).is_file());
    }
}

#[test]
fn gen_namd_without_cell_is_rejected() {
    let dir = fixture(2, 0.0);
    fs::write(dir.path().join("nocell.yml"), SPEC.replace("cell: {a: 60, b: 60, c: 60}\n", "")).unwrap();
    let o = mdpipe(dir.path(), &["gen-namd", "nocell.yml"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains(".xsc"));
    let o = mdpipe(dir.path(), &["gen-namd", "nocell.yml", "--xsc", "eq.xsc"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
}

#[test]
fn cache_directory_from_environment() {
    let dir = fixture(2, 0.0);
    let cache = dir.path().join("pdbcache");
    fs::create_dir_all(&cache).unwrap();
    fs::copy(dir.path().join("protein.pdb"), cache.join("9xyz.pdb")).unwrap();
    fs::write(
        dir.path().join("byid.yml"),
        "label: byid\npdb_id: 9XYZ\ncase_type: solution\ntemperature: 300\n",
    )
    .unwrap();
    // cached: no download is attempted
    let o = Command::new(env!("CARGO_BIN_EXE_mdpipe"))
        .current_dir(dir.path())
        .args(["fetch", "9XYZ"])
        .env("MDPIPE_CACHE", &cache)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(dir.path().join("mdpipe-out/9XYZ/inputs/9xyz.pdb").is_file());

    let o = Command::new(env!("CARGO_BIN_EXE_mdpipe"))
        .current_dir(dir.path())
        .args(["validate", "byid.yml"])
        .env("MDPIPE_CACHE", &cache)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(String::from_utf8_lossy(&o.stdout).contains("hydrogens-present"));

    let o = mdpipe(dir.path(), &["fetch", "not-an-id"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn held_lock_blocks_a_second_run() {
    let dir = fixture(2, 0.0);
    fs::create_dir_all(dir.path().join("mdpipe-out/demo")).unwrap();
    fs::write(dir.path().join("mdpipe-out/demo/.lock"), "").unwrap();
    let o = mdpipe(dir.path(), &["validate", "spec.yml"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains(".lock"));
}
