pub mod bm25_oracle;
pub mod fixtures;
pub mod grounding;
pub mod published_scores;
pub mod records;
pub mod scoring;
