//! Numerical core of the pilotwave lab.
//!
//! Everything here is `no_std` + `alloc`. The `std` feature only switches the
//! float intrinsics over to the platform libm and enables the `parallel`
//! feature's rayon fan-out. File formats, configuration and the command line
//! live in the `pilotwave` crate.

#![no_std]
// With std linked the inherent f64 methods shadow `num_traits::Float`, so the
// trait import that the bare no_std build needs turns into a warning.
#![cfg_attr(any(feature = "std", test), allow(unused_imports))]

extern crate alloc;
#[cfg(any(feature = "std", test))]
extern crate std;

pub mod classical_hj;
pub mod eprb;
pub mod error;
pub mod fft;
pub mod grid;
pub mod par;
pub mod pilot;
pub mod rng;
pub mod semiclassical;
pub mod spin_dynamics;
pub mod stats;
pub mod tropical;
pub mod wavefields;

pub use error::{Error, Result};
pub use grid::{Axis, Boundary, Grid, Position};
pub use num_complex::Complex64;
