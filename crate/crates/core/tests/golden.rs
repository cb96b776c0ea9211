//! Bundled scenarios against checked-in outputs at their pinned seeds.
//! Regenerate with `cargo test --test golden -- --ignored`.

use std::fs;
use std::path::{Path, PathBuf};

use gospace::harness::{load_scenario, run_scenario};

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn scenarios() -> Vec<PathBuf> {
    let mut v: Vec<PathBuf> = fs::read_dir(root().join("scenarios"))
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    v.sort();
    v
}

/// Every output except summary.txt, which carries wall-clock time.
fn outputs(path: &Path) -> Vec<(String, String)> {
    let cfg = load_scenario(path).unwrap();
    let report = run_scenario(&cfg, None).unwrap();
    report.files().into_iter().filter(|(name, _)| name != "summary.txt").collect()
}

fn golden_dir(path: &Path) -> PathBuf {
    root().join("tests/golden").join(path.file_stem().unwrap())
}

#[test]
fn bundled_scenarios_match_golden_files() {
    let mut checked = 0;
    for path in scenarios() {
        let dir = golden_dir(&path);
        let produced = outputs(&path);
        let mut expected_names: Vec<String> = fs::read_dir(&dir)
            .unwrap_or_else(|_| panic!("no golden directory for {}", path.display()))
            .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
            .collect();
        expected_names.sort();
        let mut names: Vec<String> = produced.iter().map(|(n, _)| n.clone()).collect();
        names.sort();
        assert_eq!(names, expected_names, "{}", path.display());
        for (name, contents) in produced {
            let want = fs::read_to_string(dir.join(&name)).unwrap();
            assert!(want == contents, "{} differs from {}", name, dir.display());
            checked += 1;
        }
    }
    assert!(checked >= 10);
}

#[test]
#[ignore]
fn regenerate_golden_files() {
    for path in scenarios() {
        let dir = golden_dir(&path);
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        for (name, contents) in outputs(&path) {
            fs::write(dir.join(name), contents).unwrap();
        }
    }
}
