//! Quadrature, root finding and special functions.

mod invert;
mod quadrature;
pub mod special;

pub use invert::{central_difference, expand_bracket, forward_differences, invert_monotone, BISECTION_PRECISION};
pub use quadrature::{
    integrate_halfline, integrate_halfline_with, integrate_interval, integrate_interval_with, integrate_unit,
    HalfLineOptions, QuadResult, TailBound, Tolerance, UnitEndpoint, UnitPoint,
};
