//! HTTP annotation service.
//!
//! Annotators request credentials with a short quiz, log in, fetch words to
//! tag and submit sense or polarity annotations. Every write goes to an
//! append-only event log ([`store`]); the lexicon state is rebuilt from it on
//! start. Conflicts are adjudicated with the core `resolve` on each write.

pub mod api;
pub mod auth;
pub mod config;
pub mod error;
pub mod quiz;
pub mod service;
pub mod store;

pub use api::{router, serve};
pub use config::ServiceConfig;
pub use error::{ServiceError, StartupError};
pub use service::{Caller, ExportFilter, Service};
