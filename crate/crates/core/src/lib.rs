//! Parsing for linear indexed grammars (LIGs) through linear derivation
//! grammars (LDGs).
//!
//! For a LIG and an input string the pipeline builds the shared parse forest
//! of the context-free backbone, re-attaches the stack schemas (the "LIGed
//! forest"), computes stack relations over it and generates a context-free
//! grammar whose sentences are exactly the linear derivations of the input,
//! each written in reverse application order. Parse trees are then read off
//! those sentences.

pub mod bench;
pub mod cfg;
pub mod derive;
pub mod forest;
pub mod grammar;
pub mod ldg;
pub mod oracle;
pub mod random;
pub mod relations;
