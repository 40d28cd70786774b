//! Interactive optimization sessions over HTTP: the service proposes pairs of
//! designs, a person picks the one they prefer, and a computable constraint
//! is evaluated by the service itself.

pub mod app;
pub mod constraint;
pub mod error;
pub mod session;
pub mod space;
pub mod store;

pub use app::{router, AppState, Settings};
pub use constraint::{contrast_ratio, Registry};
pub use error::ApiError;
pub use session::Session;
pub use space::DesignSpace;
pub use store::Store;
