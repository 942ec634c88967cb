//! Run every pipeline stage over a small generated workspace, the same way
//! the command-line tool does.
//!
//! `cargo run --example run_pipeline -- [workspace-dir]`

use std::error::Error;
use std::fs;
use std::path::PathBuf;

use showprog::imaging::save_page_png;
use showprog::pipeline::{
    cmd_evaluate, cmd_score_steps, cmd_segment, cmd_structure, cmd_transcribe, PipelineConfig, RunOptions,
};
use showprog::synthetic::uniform_spread;
use showprog::triples::{synthetic_trace, Draft, ObjectValue, StepShape};

const CONFIG: &str = r##"
[transcription.endpoint]
poll_interval_secs = 0.0

[transcription.stub]
default_response = "# Programme\n\nMise en scène : Jean Vilar"

[steps]
problems = 4
drafts = 8
"##;

fn main() -> Result<(), Box<dyn Error>> {
    let dir = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("showprog-example"));
    fs::create_dir_all(&dir)?;

    fs::write(dir.join("showprog.toml"), CONFIG)?;
    fs::write(dir.join("documents.csv"), "doc_id,year,born_digital\nprog-1975,1975,false\n")?;
    for i in 0..2 {
        let spread = uniform_spread("prog-1975", i, 2, 715, 480, i as u64);
        save_page_png(&dir.join(format!("images/prog-1975/{i}.png")), &spread.page)?;
        let truth = dir.join("ground_truth/prog-1975");
        fs::create_dir_all(&truth)?;
        for s in 0..2 {
            fs::write(truth.join(format!("{}.md", 2 * i + s)), "# Programme\n\nMise en scène : Jean Vilar\n")?;
        }
    }
    fs::create_dir_all(dir.join("drafts"))?;
    let draft = Draft::new(
        "Le Cid",
        vec![
            ("title", ObjectValue::Lang { text: "Le Cid".into(), language: "fr".into() }),
            ("director", ObjectValue::Text("Jean Vilar".into())),
            ("author", ObjectValue::Text("Pierre Corneille".into())),
            ("date of first performance", ObjectValue::Text("15 juillet 1951".into())),
        ],
    );
    fs::write(dir.join("drafts/le-cid.txt"), draft.render())?;
    synthetic_trace(20, StepShape { problems: 4, drafts: 8 }, 3).save(&dir.join("steps"))?;

    let cfg = PipelineConfig::load(&dir.join("showprog.toml"))?;
    let opts = RunOptions::default();
    for (stage, outcome) in [
        ("segment", cmd_segment(&cfg, &opts)?),
        ("transcribe", cmd_transcribe(&cfg, &opts)?),
        ("evaluate", cmd_evaluate(&cfg, &opts, None, None)?),
        ("structure", cmd_structure(&cfg, &opts)?),
        ("score-steps", cmd_score_steps(&cfg, &opts)?),
    ] {
        println!("{stage}: {}", outcome.notes.join("; "));
        for w in &outcome.warnings {
            println!("  warning: {w}");
        }
    }
    println!("outputs under {}", dir.join("out").display());
    Ok(())
}
