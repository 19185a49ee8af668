//! Trend checks along an eps-schedule.

use crate::tolerances::{TREND_NOISE_FLOOR, TREND_SLACK};

/// True when no value among the last `window` entries exceeds its
/// predecessor by more than the slack factor. Pairs where both values sit
/// below the noise floor count as converged.
pub fn decreasing_tail(values: &[f64], window: usize) -> bool {
    let start = values.len().saturating_sub(window);
    values[start..].windows(2).all(|w| {
        let (prev, next) = (w[0].abs(), w[1].abs());
        (prev <= TREND_NOISE_FLOOR && next <= TREND_NOISE_FLOOR) || next <= TREND_SLACK * prev
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slack_and_floor() {
        assert!(decreasing_tail(&[1.0, 0.5, 0.7, 0.6], 3));
        assert!(!decreasing_tail(&[1.0, 0.5, 0.8, 0.6], 3));
        assert!(decreasing_tail(&[9.0, 0.1, 0.05, 0.02], 3));
        assert!(decreasing_tail(&[1e-16, 3e-16, 1e-15], 3));
        assert!(decreasing_tail(&[0.3], 3));
    }
}
