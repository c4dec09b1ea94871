//! Annotation desk: task issuance, submissions and progress over a fixed
//! sub-scene corpus, plus its HTTP front end.

mod desk;
mod http;

pub use desk::{Ack, AnnotationTask, Desk, Progress, ServiceError, Submission, TaskUtterance};
pub use http::{router, serve, AppState, ServeOptions};
