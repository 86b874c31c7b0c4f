//! Co-generate C programs and assertions, verify the assertions
//! compositionally with bounded model checkers, and embed the verified ones
//! as natural-language facts.

pub mod config;
pub mod enumcheck;
pub mod error;
pub mod facts;
pub mod frontend;
pub mod llm;
pub mod model;
pub mod pipeline;
pub mod portfolio;
pub mod report;
pub mod traversal;
pub mod verifier;
