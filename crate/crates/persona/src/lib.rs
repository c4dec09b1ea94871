//! File formats, the annotation store, the annotation HTTP service and the
//! `persona` command line around [`persona_core`].

pub mod cli;
pub mod embeddings;
pub mod error;
pub mod ingest;
pub mod jsonl;
pub mod labels;
pub mod model_file;
pub mod service;
pub mod store;

pub use error::{PersonaError, Result};
