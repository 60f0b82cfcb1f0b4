//! Classification of the stable marked reduction of genus-2 hyperelliptic
//! curves over the rationals at residue characteristic 2.
//!
//! Given a curve `y^2 + h(x) y = f(x)` the library computes the branch
//! polynomial `F0 = 4f + h^2`, finds its roots in an explicit finite
//! extension of the 2-adic numbers, builds the stable marked tree of the six
//! branch points, normalizes the equation, evaluates the eighth Igusa
//! invariant to obtain `delta' = v(J8)/8 + 2`, and dispatches the invariant
//! tuple `(alpha, beta, gamma, delta', epsilon)` against a table of 54
//! half-open polyhedral regions.  The result is a reduction-type label, the
//! dual graph of the special fiber with exact double-point thicknesses, and
//! the stable type of the unmarked curve.
//!
//! Modules follow the pipeline order:
//!
//! * [`exactq`] — exact rational arithmetic: 2-adic valuations, resultants,
//!   discriminants, Newton polygons, and the pairwise root-difference
//!   valuation oracle.
//! * [`localfield`] — finite-precision arithmetic in towers over the 2-adic
//!   numbers and certified root finding.
//! * [`clustertree`] — the stable marked metric tree of the branch points and
//!   the parameters `(alpha, beta, gamma, epsilon)`.
//! * [`igusa`] — Igusa invariants of binary quintics/sextics.
//! * [`deltaprime`] — normalization of the branch polynomial and `delta'`.
//! * [`classifier`] — the 54-region dispatch, dual graphs, unmarked types.
//! * [`cli`] — curve ingestion, batch execution, reports and statistics.

pub mod exactq;
pub mod igusa;
pub mod localfield;
pub mod clustertree;
pub mod deltaprime;
pub mod classifier;
pub mod cli;

pub use exactq::{val2, ExtRat, RatPoly};
