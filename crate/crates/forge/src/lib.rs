//! IO companion to `benchforge-core`: document collection over HTTP,
//! LLM transports with caching and retry, the end-to-end build pipeline,
//! file formats, and the CLI.

pub mod cli;
pub mod collector;
pub mod config;
pub mod eval;
pub mod llmio;
pub mod pipeline;
pub mod store;
pub mod transport;
