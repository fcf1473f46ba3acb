//! Prompt strategies, text-generation backends and the refinement loop.

pub mod gateway;
mod hashing;
pub mod oracle;
pub mod prompts;
pub mod session;
pub mod source;

pub use gateway::{FnBackend, GatewayError, GenerationRequest, Message, TextBackend};
pub use hashing::sha256_hex;
pub use oracle::OracleRewriter;
