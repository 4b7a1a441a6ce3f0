//! Exact-rational pipeline for combinatorial Pontrjagin classes of
//! triangulated manifolds carrying oriented-matroid charts.

pub mod error;
pub mod grassmann;
pub mod linalg;
pub mod assoc;
pub mod cellcx;
pub mod charts;
pub mod chern;
pub mod models;
pub mod om;
pub mod pipeline;
pub mod pont;

pub use error::{Error, Result};
pub use num::BigRational as Q;
