//! Outer (regular-layer) solutions on `[0, a]`, `[a, b]` and `[b, 1]`.

pub mod middle;
pub mod neutral;
pub mod printed;

pub use middle::{outer_middle_first, outer_middle_zeroth, MiddleFirst, MiddleZeroth, SIntegrals};
pub use neutral::{
    integral_identities_left, outer_left, outer_right, EndValues, NeutralRegion, OuterSolutionLeft,
    OuterSolutionRight, ProfilePoint,
};
