//! Building blocks for a dialogue personality-recognition corpus.
//!
//! The crate is `no_std` (it needs `alloc`) and carries only the algorithmic
//! pieces: main-speaker sub-scene extraction from transcripts, annotation
//! aggregation with a median split, inter-annotator agreement, the dialogue
//! text formats fed to classifiers, small classifiers, and a seeded k-fold
//! cross-validation harness. Parsing, file formats and the CLI live in the
//! `persona` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod agreement;
pub mod annotation;
pub mod classify;
pub mod cv;
pub mod formats;
pub mod msf;
pub mod results;
pub mod rng;
pub mod text;
pub mod traits;
pub mod transcript;

pub use crate::traits::{Trait, TraitMap};
pub use crate::transcript::{EssayDocument, Scene, Utterance};
