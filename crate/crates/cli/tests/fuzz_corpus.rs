//! Replays the checked-in fuzz seeds through both parsers.

use std::path::PathBuf;

fn seeds(target: &str) -> Vec<(PathBuf, String)> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus").join(target);
    let mut out: Vec<_> = std::fs::read_dir(&dir)
        .unwrap_or_else(|e| panic!("{}: {e}", dir.display()))
        .map(|e| e.unwrap().path())
        .map(|p| {
            let text = std::fs::read_to_string(&p).unwrap();
            (p, text)
        })
        .collect();
    out.sort();
    out
}

#[test]
fn mode_file_seeds() {
    let all = seeds("mode_file");
    assert!(all.len() >= 3);
    let mut accepted = 0;
    for (path, text) in &all {
        if let Ok(modes) = flowbench::kraichnan::parse_modes(text) {
            accepted += 1;
            let again = flowbench::kraichnan::parse_modes(&modes.to_text()).unwrap();
            assert_eq!(again.k1(), modes.k1(), "{}", path.display());
        }
    }
    assert!(accepted >= 2);
}

#[test]
fn run_config_seeds() {
    let all = seeds("run_config");
    let parsed: Vec<_> = all.iter().map(|(_, t)| flowbench_cli::parse_run_config(t)).collect();
    assert!(parsed.iter().all(Result::is_ok));
    assert!(parsed.iter().any(|c| c.as_ref().unwrap().validate().is_err()));
}
