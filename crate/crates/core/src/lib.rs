//! Kinematic control landscapes of measurement-assisted transitions in a
//! spin-1 three-level system.

pub mod critana;
pub mod dynamics;
pub mod error;
pub mod jet;
pub mod landscape;
pub mod quantum;
pub mod su2rep;

pub use error::{Error, Result};
