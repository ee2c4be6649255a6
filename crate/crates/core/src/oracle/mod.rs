//! Brute-force references used to certify the library: grid sampling,
//! finite differences, long-division rounding and Monte Carlo tail checks.

mod gradient;
mod grid;
mod montecarlo;
mod rounding;

pub use gradient::{finite_difference_updates, Coordinate, FiniteDifference};
pub use grid::{eval_on_line, grid_piece_count, GridOracleConfig};
pub use montecarlo::{
    lemma1_monte_carlo, prop33_monte_carlo, rescale_to_unit_slope, wilson_interval, Lemma1Report,
    MonteCarloError, Prop33Report, TailPoint,
};
pub use rounding::{reference_round, reference_round_decimal};
