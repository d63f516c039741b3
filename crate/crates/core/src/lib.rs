pub mod canonical;
pub mod cost;
pub mod dualistic;
pub mod error;
pub mod geodesic;
pub mod numeric;
pub mod pseudo;
pub mod transport;
pub mod verify;

pub use error::{GeomError, Result};
