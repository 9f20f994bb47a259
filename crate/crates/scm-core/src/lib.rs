#![no_std]
extern crate alloc;

pub mod error;
pub mod space;
pub mod graph;
pub mod model;
pub mod dist;
pub mod solve;
pub mod intervene;

pub use error::{EngineError, Result};
