use thiserror::Error;

pub use crate::annotation::AnnotationError;
pub use crate::routing::RoutingError;
pub use crate::simnet::SimError;
pub use crate::sumtree::TreeError;

pub type Result<T> = std::result::Result<T, Error>;

/// Top-level error for callers that drive several subsystems at once.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Annotation(#[from] AnnotationError),
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error(transparent)]
    Routing(#[from] RoutingError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}
