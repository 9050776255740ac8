//! Diebold–Mariano comparison of loss series with stationary-bootstrap inference.

use rand::Rng;

use crate::error::{Error, Result};

/// Default mean block length of the stationary bootstrap, in days.
pub const DEFAULT_MEAN_BLOCK_LENGTH: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmConfig {
    pub mean_block_length: f64,
    pub n_boot: usize,
}

impl Default for DmConfig {
    fn default() -> Self {
        Self {
            mean_block_length: DEFAULT_MEAN_BLOCK_LENGTH,
            n_boot: 999,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DmResult {
    pub mean_diff: f64,
    pub p_value: f64,
    pub n_boot: usize,
    pub mean_block_length: f64,
    pub n: usize,
}

/// Indices of one stationary-bootstrap resample: blocks start at uniform
/// positions, have geometric lengths with the given mean, and wrap around.
pub fn stationary_bootstrap_indices<R: Rng + ?Sized>(n: usize, mean_block_length: f64, rng: &mut R) -> Vec<usize> {
    let p = 1.0 / mean_block_length;
    let mut out = Vec::with_capacity(n);
    let mut idx = 0;
    for i in 0..n {
        if i == 0 || rng.random::<f64>() < p {
            idx = rng.random_range(0..n);
        } else {
            idx = (idx + 1) % n;
        }
        out.push(idx);
    }
    out
}

/// Two-sided test of a zero mean loss differential. The p-value is
/// `(1 + #{|d̄* − d̄| ≥ |d̄|}) / (1 + B)` over `B` resampled means `d̄*`.
pub fn dm_test<R: Rng + ?Sized>(diff: &[f64], cfg: &DmConfig, rng: &mut R) -> Result<DmResult> {
    let n = diff.len();
    if n < 10 {
        return Err(Error::InsufficientData(format!(
            "the DM test needs at least 10 observations, got {n}"
        )));
    }
    if !(cfg.mean_block_length >= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "mean block length must be at least 1, got {}",
            cfg.mean_block_length
        )));
    }
    if cfg.n_boot == 0 {
        return Err(Error::InvalidArgument("n_boot must be positive".into()));
    }
    let mean = diff.iter().sum::<f64>() / n as f64;
    let base = DmResult {
        mean_diff: mean,
        p_value: 1.0,
        n_boot: cfg.n_boot,
        mean_block_length: cfg.mean_block_length,
        n,
    };
    if diff.iter().all(|&d| d == 0.0) {
        return Ok(base);
    }
    let threshold = mean.abs();
    let mut exceed = 0usize;
    for _ in 0..cfg.n_boot {
        let sum: f64 = stationary_bootstrap_indices(n, cfg.mean_block_length, rng)
            .into_iter()
            .map(|i| diff[i])
            .sum();
        if (sum / n as f64 - mean).abs() >= threshold {
            exceed += 1;
        }
    }
    Ok(DmResult {
        p_value: (1 + exceed) as f64 / (1 + cfg.n_boot) as f64,
        ..base
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    #[test]
    fn identical_losses_have_unit_p_value() {
        let r = dm_test(&[0.0; 50], &DmConfig::default(), &mut stream(1, 0)).unwrap();
        assert_eq!((r.mean_diff, r.p_value), (0.0, 1.0));
    }

    #[test]
    fn short_series_rejected() {
        assert!(dm_test(&[1.0; 9], &DmConfig::default(), &mut stream(1, 0)).is_err());
    }

    #[test]
    fn unit_block_length_never_continues_blocks() {
        // With p = 1 every index is a fresh uniform draw; resamples keep length and support.
        let idx = stationary_bootstrap_indices(200, 1.0, &mut stream(3, 0));
        assert_eq!(idx.len(), 200);
        assert!(idx.iter().all(|&i| i < 200));
        let runs = idx.windows(2).filter(|w| w[1] == (w[0] + 1) % 200).count();
        assert!(runs < 10);
    }

    #[test]
    fn long_blocks_are_mostly_consecutive() {
        let idx = stationary_bootstrap_indices(1000, 50.0, &mut stream(3, 1));
        let runs = idx.windows(2).filter(|w| w[1] == (w[0] + 1) % 1000).count();
        assert!(runs > 950);
    }

    #[test]
    fn large_shift_is_significant() {
        let diff: Vec<f64> = (0..200).map(|i| 1.0 + 0.1 * ((i % 7) as f64 - 3.0)).collect();
        let r = dm_test(&diff, &DmConfig::default(), &mut stream(5, 0)).unwrap();
        assert!(r.p_value < 0.01);
        assert!(r.p_value >= 1.0 / 1000.0);
    }
}
