// Negated comparisons reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod backtest;
pub mod dist;
pub mod elicit;
pub mod error;
pub mod forecast;
pub mod io;
pub mod measures;
pub mod numeric;
pub mod scenario;
