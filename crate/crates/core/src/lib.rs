//! Curvature, Killing equations and invariants of CCNV Kundt spacetimes in an
//! adapted null frame.

// Tensor code indexes by frame position on purpose; NaN must fail the `!(a > b)` tests.
#![allow(
    clippy::needless_range_loop,
    clippy::neg_cmp_op_on_partial_ord,
    clippy::redundant_guards
)]

pub mod catalog;
pub mod curvature;
pub mod expr;
pub mod format;
pub mod frame;
pub mod invariants;
pub mod killing;
pub mod metric;
pub mod oracle;
pub mod report;
pub mod sample;

pub use expr::{parse_expr, Coord, Expr, ParseError};
pub use metric::{KundtMetric, MetricError};
pub use sample::{Point, SamplePlan};
