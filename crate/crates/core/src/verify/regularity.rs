//! Hoelder-exponent estimation for sampled paths via the scaling of
//! root-mean-square increments.

use crate::error::{Error, Result};
use crate::grid::SamplePath;
use crate::verify::fit_order;
use serde::{Deserialize, Serialize};

/// Estimated path regularity: the log-log slope of mean squared increments
/// over dyadic lags is `2h` for an `h`-Hoelder-rough path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HoelderEstimate {
    pub exponent: f64,
    pub r_squared: f64,
    /// Set when all increments vanish; the exponent is then reported as 1.
    pub degenerate: bool,
    /// Lag widths in time units.
    pub lags: Vec<f64>,
    /// Mean squared increment per lag.
    pub mean_sq: Vec<f64>,
}

/// Estimate the Hoelder exponent of a path on a uniform grid of at least 256
/// steps. Mean squared increments are measured over dyadic lags from four
/// meshes up to a quarter of the horizon; averaging over all start nodes
/// suppresses the noise a max-increment estimator would keep.
pub fn hoelder_exponent_estimate(path: &SamplePath) -> Result<HoelderEstimate> {
    let grid = path.grid();
    if !grid.is_uniform() {
        return Err(Error::NonUniformGrid("hoelder estimation"));
    }
    let n = grid.steps();
    if n < 256 {
        return Err(Error::InvalidParameter(format!(
            "hoelder estimation needs at least 256 steps, got {n}"
        )));
    }
    let dt = grid.horizon() / n as f64;
    let mut lags = Vec::new();
    let mut mean_sq = Vec::new();
    let mut lag = 4usize;
    while lag <= n / 4 {
        let mut acc = 0.0;
        let count = n + 1 - lag;
        for i in 0..count {
            let d = path.increment_norm(i + lag, i);
            acc += d * d;
        }
        lags.push(lag as f64 * dt);
        mean_sq.push(acc / count as f64);
        lag *= 2;
    }

    if mean_sq.iter().all(|&v| v == 0.0) {
        return Ok(HoelderEstimate {
            exponent: 1.0,
            r_squared: 0.0,
            degenerate: true,
            lags,
            mean_sq,
        });
    }

    let (slope, r2) = fit_order(&lags, &mean_sq);
    Ok(HoelderEstimate {
        exponent: slope / 2.0,
        r_squared: r2,
        degenerate: false,
        lags,
        mean_sq,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TimeGrid;
    use crate::noise::{generate_fbm_circulant, Hurst};

    #[test]
    fn linear_path_estimates_exponent_one() {
        let grid = TimeGrid::uniform(1.0, 512).unwrap();
        let path = SamplePath::from_fn(grid, |t| 3.0 * t);
        let est = hoelder_exponent_estimate(&path).unwrap();
        assert!(!est.degenerate);
        assert!((est.exponent - 1.0).abs() < 1e-10, "slope {}", est.exponent);
        assert!(est.r_squared > 0.999999);
    }

    #[test]
    fn constant_path_is_degenerate() {
        let grid = TimeGrid::uniform(1.0, 256).unwrap();
        let path = SamplePath::from_fn(grid, |_| 2.5);
        let est = hoelder_exponent_estimate(&path).unwrap();
        assert!(est.degenerate);
        assert_eq!(est.exponent, 1.0);
    }

    #[test]
    fn fbm_exponent_tracks_hurst() {
        // Mean over a few paths keeps the estimator's sampling noise small;
        // the residual bias of the finite-lag fit is a few hundredths.
        let grid = TimeGrid::uniform(1.0, 4096).unwrap();
        let h = Hurst::new(0.75).unwrap();
        let mut mean = 0.0;
        let paths = 8;
        for i in 0..paths {
            let path = generate_fbm_circulant(&grid, h, 1, 600 + i).unwrap();
            mean += hoelder_exponent_estimate(&path).unwrap().exponent;
        }
        mean /= paths as f64;
        assert!((mean - 0.75).abs() < 0.08, "estimated {mean}");
    }

    #[test]
    fn rejects_short_or_nonuniform_grids() {
        let short = SamplePath::from_fn(TimeGrid::uniform(1.0, 32).unwrap(), |t| t);
        assert!(hoelder_exponent_estimate(&short).is_err());
        let graded = SamplePath::from_fn(TimeGrid::graded(1.0, 128, 2.0).unwrap(), |t| t);
        assert!(matches!(
            hoelder_exponent_estimate(&graded),
            Err(Error::NonUniformGrid(_))
        ));
    }
}
