//! Numerical renormalization of multimodal interval maps.
//!
//! The library builds extended maps of type n (cyclic chains of unimodal branches), finds their
//! restrictive-interval cycles and marked combinatorial data, applies the renormalization operator,
//! discretizes it on a Chebyshev coefficient space to study its spectrum, and runs parameter-space
//! experiments on the quadratic-composition and cubic families.
//!
//! Runnable examples live in `examples/`:
//!
//! ```text
//! cargo run --release --example renormalize_superstable
//! cargo run --release --example feigenbaum_cascade
//! cargo run --release --example fixed_point_spectrum
//! cargo run --release --example parameter_cover
//! cargo run --release --example solenoid_certificate
//! cargo run --release --example induced_map
//! cargo run --release --example cubic_family
//! cargo run --release --example enumerate_combinatorics
//! ```

pub mod attractor;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod families;
pub mod numeric;
pub mod renorm;
pub mod search;
pub mod spectrum;

pub use error::{Error, Result};
