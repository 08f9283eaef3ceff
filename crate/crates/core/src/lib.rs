pub mod backend;
pub mod curation;
pub mod digest;
pub mod jsonl;
pub mod seeding;
pub mod template;
pub mod extraction;
pub mod graph;
pub mod sampling;
pub mod synthesis;
pub mod pipeline;
