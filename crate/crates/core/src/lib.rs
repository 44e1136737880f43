//! Retrieval-augmented prompt optimization over stored reasoning assets.
//!
//! Training instances are distilled into reasoning assets (card, diagnosis,
//! edit directives) by three agents. New prompts are optimized by retrieving
//! similar instances with BM25 and running an analyzer and a refiner over
//! their assets.

pub mod agents;
pub mod cost;
pub mod digest;
pub mod evaluation;
pub mod gateway;
pub mod manifest;
pub mod model;
pub mod pipeline;
pub mod retrieval;
pub mod store;
