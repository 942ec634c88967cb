//! Split a page into subpages.
//!
//! With no arguments a synthetic three-subpage spread is generated; otherwise
//! `cargo run --example segment_page -- <page.png> <year> <reference-width>`.

use std::error::Error;
use std::path::Path;

use showprog::imaging::load_page;
use showprog::segmentation::{segment_document, DocumentInfo, ReferenceWidthTable, SegmentationParams, DEFAULT_TOLERANCE};
use showprog::synthetic::uniform_spread;

fn main() -> Result<(), Box<dyn Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let (page, year, reference) = match args.as_slice() {
        [path, year, width] => (load_page(Path::new(path), "input", 0)?, year.parse()?, width.parse()?),
        [] => {
            let s = uniform_spread("synthetic", 0, 3, 715, 600, 7);
            println!("synthetic spread, true boundaries at {:?}", s.boundaries);
            (s.page, 1975, 715)
        }
        _ => return Err("usage: segment_page [<page.png> <year> <reference-width>]".into()),
    };

    let mut refs = ReferenceWidthTable::new(DEFAULT_TOLERANCE)?;
    refs.insert("example", year, reference)?;
    let info = DocumentInfo {
        doc_id: page.doc_id.clone(),
        year,
        born_digital: false,
    };
    let (subpages, report) = segment_document(std::slice::from_ref(&page), None, &info, &refs, &SegmentationParams::default())?;

    println!("page {}x{} -> {} subpage(s), separators {:?}", page.width, page.height, subpages.len(), report.separators[0]);
    for (i, sub) in subpages.iter().enumerate() {
        let x = sub.origin.as_ref().map_or(0, |o| o.x_offset);
        println!("  subpage {i}: x = {x}, width = {}", sub.width);
    }
    for w in &report.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
