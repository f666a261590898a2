//! Numerical laboratory for narrow operators on `L_p[0,1]`.

// `!(x > 0.0)` is how NaN gets rejected throughout.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod defect;
pub mod dyadic;
pub mod error;
pub mod experiments;
pub mod gentle;
pub mod haar;
mod linalg;
pub mod operators;
pub mod report;
pub mod sign;

pub use error::{Error, Result};

// The guide's listings run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/intro.md")]
    mod intro {}
    #[doc = include_str!("../../../book/src/dyadic.md")]
    mod dyadic {}
    #[doc = include_str!("../../../book/src/haar.md")]
    mod haar {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/stopping.md")]
    mod stopping {}
    #[doc = include_str!("../../../book/src/blocked.md")]
    mod blocked {}
    #[doc = include_str!("../../../book/src/l2_witness.md")]
    mod l2_witness {}
    #[doc = include_str!("../../../book/src/gentle.md")]
    mod gentle {}
    #[doc = include_str!("../../../book/src/defect.md")]
    mod defect {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
