//! Parse a structured draft, check it against the property catalog and map
//! it onto the production graph.
//!
//! `cargo run --example parse_draft -- [draft.txt]`

use std::error::Error;
use std::path::PathBuf;

use showprog::ontology::{to_ntriples, IriMinter, Vocabularies};
use showprog::triples::{formal_reward, parse_draft, triples_to_entities, MappingOptions, PropertyCatalog};

fn main() -> Result<(), Box<dyn Error>> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures/sample_draft.txt"));
    let draft = parse_draft(&std::fs::read_to_string(&path)?)?;

    println!("subject: {}", draft.subject);
    for t in &draft.triples {
        println!("  {} = {:?}", t.property, t.object);
    }

    let catalog = PropertyCatalog::builtin();
    let score = formal_reward(&draft, &catalog);
    if !score.formal_pass {
        println!("rejected:");
        for v in &score.violations {
            println!("  {v}");
        }
        return Ok(());
    }
    println!("formally valid");

    let fragments = triples_to_entities(&draft, &catalog, &IriMinter::default(), &MappingOptions::default())?;
    for w in &fragments.warnings {
        println!("warning: {w}");
    }
    let graph = fragments.into_graph()?;
    print!("{}", to_ntriples(&graph, &Vocabularies::builtin())?);
    Ok(())
}
