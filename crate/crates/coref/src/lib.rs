//! File formats, checkpoints, configuration and the training driver around
//! [`coref_core`].

pub mod checkpoint;
pub mod commands;
pub mod conll;
pub mod config;
pub mod corpus_io;
pub mod jsonl;
pub mod stats;
pub mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, CheckpointError};
pub use config::RunConfig;
pub use corpus_io::{read_corpus, Corpus};

#[derive(Debug, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("document starting at line {line}: {source}")]
    Invalid {
        line: usize,
        #[source]
        source: coref_core::Error,
    },
    #[error("cannot serialize: {0}")]
    Serialize(String),
}
