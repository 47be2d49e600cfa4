//! Connects text-completion language models to REST services described by
//! OpenAPI documents: a planner decomposes the instruction, a selector picks
//! endpoints, and an executor calls them and distills the responses.

pub mod agent;
pub mod api;
pub mod catalog;
pub mod config;
pub mod eval;
pub mod executor;
pub mod extract;
pub mod gateway;
pub mod http;

pub use agent::{ControlSignal, Session, SessionEngine, SessionStatus, StepRecord};
pub use catalog::{ApiCatalog, EndpointSpec, Method, ParameterSpec, SchemaNode};
pub use eval::{BenchItem, MetricsReport, RunRecord};
pub use executor::{CallDescriptor, Executor, ParseOutcome, ParseStrategy};
pub use gateway::{Gateway, Role};
pub use http::{Cassette, HttpEngine, HttpExchange, HttpMode};
