//! Data and metadata object model, profile functionals, schema language
//! and the event-driven portal engine over a simulated warehouse.

pub mod dsl;
pub mod engine;
pub mod events;
pub mod frames;
pub mod hash;
pub mod meta;
pub mod model;
pub mod portal;
pub mod predicate;
pub mod profile;
pub mod value;
pub mod warehouse;

pub use dsl::{Diagnostic, Schema};
pub use engine::{Engine, EngineError};
pub use events::{Effect, UpdatePolicy};
pub use frames::{AtomicFrame, FrameLanguage, FramePattern, Term};
pub use meta::{MetaTower, MetadataRecord};
pub use model::{Concept, Individual, Store, Version};
pub use portal::RenderedPage;
pub use predicate::Predicate;
pub use profile::{Dim, Rank, Session, SessionError, UserProfile};
pub use value::{Kind, Value};
pub use warehouse::{Change, Warehouse};
