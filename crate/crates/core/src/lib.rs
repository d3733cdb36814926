//! Topic discovery across two language sub-corpora of forum text.
//!
//! Posts are split into paragraphs and routed by language
//! ([`ingest`]), embedded ([`embed`]), clustered with HDBSCAN
//! ([`cluster`]), summarized as labels plus LDA keywords ([`topic`]), and
//! compared across languages to find common topics, topics unique to one
//! community, and candidate jargon ([`compare`]). [`eval`] measures
//! clustering stability, [`synth`] builds planted-structure corpora, and
//! [`pipeline`] runs the stages with on-disk artifacts.

pub mod cluster;
pub mod compare;
pub mod embed;
pub mod eval;
pub mod ingest;
pub mod pipeline;
pub mod ratio;
pub mod synth;
pub mod topic;
pub mod translate;
