//! A standoff-annotation corpus engine.
//!
//! Corpora are annotation graphs over an immutable primary text: slots
//! (words) anchored to character regions, higher nodes anchored to sets of
//! slots ("monads"), edges between nodes, and string-valued features on
//! nodes and edges. The pipeline is
//!
//! 1. [`ingest`]: read GrAF-subset XML or a tabular directory into a
//!    validated [`LogicalCorpus`];
//! 2. [`compiler`]: write a checksummed binary image once;
//! 3. [`Corpus`]: load the image quickly and walk it;
//! 4. [`mql`]: run topographic queries (sequence and embedding);
//! 5. [`annotations`]: save queries as annotations on the passages holding
//!    their results;
//! 6. [`featuredoc`]: generate feature documentation with value frequencies.

pub mod annotations;
pub mod compiler;
pub mod corpus;
pub mod featuredoc;
pub mod ingest;
pub mod model;
pub mod mql;
pub mod toy;

pub use compiler::{compile, verify, CompileSummary, ImageError};
pub use corpus::Corpus;
pub use ingest::{parse_graf, parse_tabular, validate, LogicalCorpus};
pub use model::{EdgeId, MonadSet, NodeId, Target};

// The guide's chapters run as doctests so their examples stay true.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/data-model.md")]
    mod data_model {}
    #[doc = include_str!("../../../book/src/ingest.md")]
    mod ingest {}
    #[doc = include_str!("../../../book/src/image.md")]
    mod image {}
    #[doc = include_str!("../../../book/src/queries.md")]
    mod queries {}
    #[doc = include_str!("../../../book/src/annotations.md")]
    mod annotations {}
    #[doc = include_str!("../../../book/src/features.md")]
    mod features {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
