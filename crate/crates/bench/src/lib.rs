//! Shared fixtures for the benchmarks.

use anholkit::bundle::PointU;
use anholkit::spaces::Space;

pub const RANDERS: &str = "sqrt((1 + 0.2*x1^2)*y1^2 + y2^2) + 0.3*y1";

/// Euclidean Finsler function `sqrt(y1^2 + ... + yn^2)`.
pub fn euclidean(n: usize) -> String {
    let sum: Vec<String> = (1..=n).map(|a| format!("y{a}^2")).collect();
    format!("sqrt({})", sum.join(" + "))
}

pub fn randers_space() -> Space {
    Space::finsler(2, RANDERS).expect("fixture parses")
}

/// A fixed admissible point with `n` base and `n` fiber coordinates.
pub fn sample_point(n: usize) -> PointU {
    let x = (0..n).map(|i| 0.3 + 0.1 * i as f64).collect();
    let y = (0..n).map(|a| if a % 2 == 0 { 0.8 } else { -0.4 }).collect();
    PointU::new(x, y).expect("fixture point")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_evaluate() {
        assert!(randers_space().evaluate(&sample_point(2)).is_ok());
        assert!(Space::finsler(3, &euclidean(3)).unwrap().evaluate(&sample_point(3)).is_ok());
    }
}
