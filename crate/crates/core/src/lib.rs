//! Geodesics, loop-space sweep-outs and critical lengths on warped-product
//! 2-spheres.

pub mod cheb;
pub mod cycles;
pub mod error;
pub mod geodesic;
pub mod io;
pub mod metric;
pub mod minimax;
pub mod pathspace;
pub mod rauch;
pub mod runner;

pub use error::{Error, Result};
pub use metric::{SurfacePoint, Vec3, WarpProfile};
