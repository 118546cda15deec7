//! Martingale analysis on finite spaces.
//!
//! Filtrations are nested partitions of a finite weighted point set. On top of
//! them this crate computes martingale expansions, the maximal, square and
//! conditional square functions, the three paraproducts of a pointwise
//! product, Hardy/BMO/Lipschitz/Orlicz norms and simple atomic decompositions.
//! The geometric half builds Hytönen–Kairema dyadic systems on finite
//! quasi-metric spaces, adjacent families of them, and the ball-based norms,
//! Musielak–Orlicz weights and multiplier estimates that live on top.
//!
//! Everything is `no_std` with `alloc`; the `paraproduct` crate carries IO,
//! suites and the command line.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod atomic;
pub mod dyadic_geometry;
pub mod error;
pub mod function_norms;
pub mod homogeneous;
pub mod martingale_ops;
pub mod measure_space;
pub mod num;
pub mod verify;

pub use error::{Error, Result};
pub use measure_space::{Filtration, Func, MeasureKind, MeasureSpace, Partition};
