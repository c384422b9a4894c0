#![no_std]

extern crate alloc;

pub mod cohomology;
pub mod error;
pub mod fit;
pub mod fourier;
pub mod linalg;
pub mod local_model;
pub mod maps;
pub mod periodic;
pub mod sum;
pub mod suspension;
pub mod torus;

pub use error::{Error, ErrorClass, Result};
