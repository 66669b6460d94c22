//! Recomputes the shipped buck-boost terminal level.
//!
//! ```text
//! cargo run --release --example calibrate_buck_level -- [boundary_points]
//! ```

use sampled_nmpc::models::{calibrate_terminal_level, BuckBoostParams, BUCK_TERMINAL_LEVEL};

fn main() {
    let points = std::env::args().nth(1).map_or(10_000, |s| s.parse().expect("boundary point count"));
    let level = calibrate_terminal_level(&BuckBoostParams::default(), points);
    println!("calibrated level over {points} boundary points: {level:.6}");
    println!("shipped level: {BUCK_TERMINAL_LEVEL}");
}
