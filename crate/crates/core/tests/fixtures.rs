//! The committed text fixtures are exactly what the generators produce.
//! Run with `SHOWPROG_BLESS=1` to rewrite them.

mod common;

use std::path::Path;

fn check_generated(name: &str, generate: impl Fn(&Path)) {
    let committed = common::fixtures_dir().join(name);
    if common::blessing() {
        let _ = std::fs::remove_dir_all(&committed);
        generate(&committed);
        return;
    }
    let tmp = tempfile::tempdir().unwrap();
    generate(tmp.path());
    let fresh = common::tree_files(tmp.path());
    let stored = common::tree_files(&committed);
    assert_eq!(
        fresh.keys().collect::<Vec<_>>(),
        stored.keys().collect::<Vec<_>>(),
        "{name}: file sets differ; re-bless"
    );
    for (rel, bytes) in &fresh {
        assert!(stored[rel] == *bytes, "{name}/{}: stale fixture; re-bless", rel.display());
    }
}

#[test]
fn degradation_corpus_is_current() {
    check_generated("degradation", common::write_degradation_corpus);
}

#[test]
fn e2e_inputs_are_current() {
    check_generated("e2e/input", common::write_e2e_inputs);
}
