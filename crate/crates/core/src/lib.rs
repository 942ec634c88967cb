pub mod evaluation;
pub mod fsutil;
pub mod imaging;
pub mod ontology;
pub mod pipeline;
pub mod segmentation;
pub mod synthetic;
pub mod transcription;
pub mod triples;
