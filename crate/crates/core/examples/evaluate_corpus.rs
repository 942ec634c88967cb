//! Score a hypothesis tree against a reference tree of `<doc>/<page>.md`
//! files. Defaults to the bundled degradation corpus.
//!
//! `cargo run --example evaluate_corpus -- <reference-dir> <hypothesis-dir>`

use std::error::Error;
use std::path::PathBuf;

use showprog::evaluation::{build_report, match_files, BaselineNer, EvalConfig, Gazetteer, Metric};

fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<PathBuf> = std::env::args().skip(1).map(PathBuf::from).collect();
    let (reference, hypothesis) = match args.as_slice() {
        [r, h] => (r.clone(), h.clone()),
        [] => {
            let root = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/degradation");
            (root.join("reference"), root.join("hypothesis"))
        }
        _ => return Err("usage: evaluate_corpus [<reference-dir> <hypothesis-dir>]".into()),
    };

    let files = match_files(&reference, &hypothesis)?;
    let ner = BaselineNer::new(Gazetteer::default());
    let report = build_report(&files.pairs, &ner, &EvalConfig::default())?.with_unmatched(&files);

    println!("{} page pair(s)", report.pairs.len());
    for metric in [Metric::Cer, Metric::Wer, Metric::JaccardWords, Metric::JaccardBigrams, Metric::LineRecall] {
        let a = report.aggregate(metric);
        println!(
            "{metric:?}: weighted mean {:.4}, median {:.4}, std {:.4}, range [{:.4}, {:.4}]",
            a.weighted_mean, a.median, a.std, a.min, a.max
        );
    }
    Ok(())
}
