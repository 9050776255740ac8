use crate::error::{Error, Result};

fn check(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    if estimates.is_empty() {
        return Err(Error::InsufficientData("no estimates".into()));
    }
    if estimates.len() != truths.len() {
        return Err(Error::LengthMismatch {
            expected: truths.len(),
            got: estimates.len(),
        });
    }
    if truths.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::InvalidArgument("truths must be positive".into()));
    }
    Ok(truths.iter().sum())
}

/// `Σ(est − IV) / Σ IV`.
pub fn relative_bias(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    let total = check(estimates, truths)?;
    let err: f64 = estimates.iter().zip(truths).map(|(e, t)| e - t).sum();
    Ok(err / total)
}

/// `sqrt(Σ(est − IV)²) / Σ IV`.
pub fn relative_rmse(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    let total = check(estimates, truths)?;
    let sq: f64 = estimates.iter().zip(truths).map(|(e, t)| (e - t).powi(2)).sum();
    Ok(sq.sqrt() / total)
}

/// Monte Carlo standard error of [`relative_bias`]: `sd(est − IV) · sqrt(n) / Σ IV`.
pub fn relative_bias_se(estimates: &[f64], truths: &[f64]) -> Result<f64> {
    let total = check(estimates, truths)?;
    let n = estimates.len();
    if n < 2 {
        return Ok(f64::NAN);
    }
    let errs: Vec<f64> = estimates.iter().zip(truths).map(|(e, t)| e - t).collect();
    let (_, sd) = mean_sd(&errs);
    Ok(sd * (n as f64).sqrt() / total)
}

/// Sample mean and standard deviation (`n − 1` denominator).
pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_estimates() {
        let t = [1.0, 2.0, 0.5];
        assert_eq!(relative_bias(&t, &t).unwrap(), 0.0);
        assert_eq!(relative_rmse(&t, &t).unwrap(), 0.0);
    }

    #[test]
    fn doubled_single_day() {
        assert_eq!(relative_bias(&[2.0], &[1.0]).unwrap(), 1.0);
        assert_eq!(relative_rmse(&[2.0], &[1.0]).unwrap(), 1.0);
    }

    #[test]
    fn invalid_inputs() {
        assert!(relative_bias(&[], &[]).is_err());
        assert!(relative_rmse(&[1.0], &[1.0, 2.0]).is_err());
        assert!(relative_bias(&[1.0], &[0.0]).is_err());
    }

    #[test]
    fn mean_sd_by_hand() {
        let (m, s) = mean_sd(&[1.0, 2.0, 3.0]);
        assert_eq!((m, s), (2.0, 1.0));
    }
}
