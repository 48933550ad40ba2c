//! Numerical building blocks shared by the asymptotic and direct solvers.

pub mod banded;
pub mod ode;
pub mod quad;
pub mod roots;
pub mod special;
