//! Closed-form algebra over sums of terms `Re[poly(v) z exp(-v^T A v / 2 + b^T v)]`.
//!
//! Every frequency integral and every Gaussian noise average in this crate is
//! carried out here by completing the square.  Products of real parts are
//! expanded with `Re x Re y = (Re[xy] + Re[x conj y]) / 2`, so a [`TermSum`]
//! stays a plain list of complex Gaussian terms.

mod poly;
mod sum;
mod term;

pub use poly::Poly;
pub use sum::{ComplexSum, TermSum, MERGE_TOL};
pub use term::GaussTerm;
