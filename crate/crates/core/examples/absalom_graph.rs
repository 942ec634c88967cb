//! Build the reference production graph, validate it, and print it as
//! N-Triples and as one JSON-LD document per entity.

use std::error::Error;

use showprog::ontology::{absalom, to_jsonld, to_ntriples, validate_graph, IriMinter, Vocabularies};

fn main() -> Result<(), Box<dyn Error>> {
    let vocab = Vocabularies::builtin();
    let graph = absalom(&IriMinter::default());

    let validation = validate_graph(&graph, &vocab);
    println!("{} entities, {} violation(s), {} warning(s)", graph.iter().count(), validation.violations.len(), validation.warnings.len());
    for v in validation.violations.iter().chain(&validation.warnings) {
        println!("  {}: {} ({})", v.entity, v.message, v.rule);
    }

    println!("\n# N-Triples");
    print!("{}", to_ntriples(&graph, &vocab)?);

    println!("\n# JSON-LD");
    for doc in to_jsonld(&graph, &vocab)? {
        println!("## {} ({:?})\n{}", doc.id, doc.tier, doc.text);
    }
    Ok(())
}
