//! Transcribe pages through the offline service, including a page that is
//! refused under the standard prompt and recovered with the fallback prompt.

use std::error::Error;

use showprog::synthetic::uniform_spread;
use showprog::transcription::{
    custom_id, transcribe_page_with_fallback, CostLedger, EndpointConfig, ManualClock, PromptSet, StubBehaviour,
    StubService,
};

fn main() -> Result<(), Box<dyn Error>> {
    let pages: Vec<_> = (0..3).map(|i| uniform_spread("prog-demo", i, 1, 715, 400, i as u64).page).collect();

    let mut behaviour = StubBehaviour::default();
    behaviour.responses.insert(
        custom_id("prog-demo", 0),
        "# Le Cid\n\nTragi-comédie de Pierre Corneille.\n\nMise en scène : Jean Vilar".into(),
    );
    behaviour.responses.insert(custom_id("prog-demo", 1), "# Distribution\n\nRodrigue : Gérard Philipe".into());
    behaviour.refuse_standard.insert(custom_id("prog-demo", 1));
    behaviour.refuse_always.insert(custom_id("prog-demo", 2));
    let service = StubService::new(behaviour);

    let cfg = EndpointConfig {
        poll_interval_secs: 0.0,
        ..Default::default()
    };
    let prompts = PromptSet::builtin();
    let clock = ManualClock::new();
    let mut costs = CostLedger::default();
    for page in &pages {
        let out = transcribe_page_with_fallback(&service, page, &prompts, &cfg, &clock, &mut costs)?;
        println!("--- page {} ({:?}, {} request(s))", page.page_index, out.outcome, out.requests);
        print!("{}", out.doc.render());
    }
    println!("--- {} request(s) in total", costs.requests);
    Ok(())
}
