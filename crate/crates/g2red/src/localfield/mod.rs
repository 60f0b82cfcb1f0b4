//! Finite-precision arithmetic in explicit finite extensions of the 2-adic
//! numbers, Newton-polygon/Hensel root finding, and construction of a
//! splitting tower for the branch polynomial.

pub mod dyadic;
pub mod gf2;
pub mod tower;
pub mod roots;

pub use roots::{local_roots, LocalRootsOutput};
pub use tower::{make_unramified, Elem, FieldTower, TowerCtx, Val};
