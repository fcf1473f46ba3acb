//! Document model, style resolution, segmentation, rule checks and metrics
//! for auditing web UI code for accessibility problems.

pub mod color;
pub mod css;
pub mod dom;
pub mod error;
pub mod exemplars;
pub mod html;
pub mod metrics;
pub mod rules;
pub mod segment;
pub mod selector;
pub mod span;
pub mod style;

pub use dom::{Document, Element};
pub use error::{CoreError, Result};
pub use span::SourceSpan;
