//! Steady Poisson–Nernst–Planck flow of two ion species with hard-sphere interactions
//! through a narrow channel carrying a piecewise-constant permanent charge.

pub mod bvp;
pub mod error;
pub mod geometry;
pub mod layers;
pub mod matching;
pub mod model;
pub mod numerics;
pub mod regular;
pub mod zero_current;

pub use error::{Error, Result};
pub use geometry::{AreaProfile, ChannelGeometry};
pub use model::{BoundaryData, FluxExpansion, IonPair, ModelSpec, PermanentCharge};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/layers.md")]
    mod layers {}
    #[doc = include_str!("../../../book/src/matching.md")]
    mod matching {}
    #[doc = include_str!("../../../book/src/zero_current.md")]
    mod zero_current {}
    #[doc = include_str!("../../../book/src/direct_solver.md")]
    mod direct_solver {}
}
