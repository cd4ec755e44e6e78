use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

pub fn mean(samples: &[f64]) -> f64 {
    samples.iter().sum::<f64>() / samples.len() as f64
}

/// Unbiased sample variance (divides by `n - 1`).
pub fn sample_variance(samples: &[f64]) -> f64 {
    let mu = mean(samples);
    samples.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (samples.len() as f64 - 1.0)
}

/// Standard error of the mean.
pub fn standard_error(samples: &[f64]) -> f64 {
    (sample_variance(samples) / samples.len() as f64).sqrt()
}

/// Two-sided Student-t interval: `(mean, t_{(1+level)/2, n-1} · s/√n)`.
pub fn confidence_interval(samples: &[f64], level: f64) -> Result<(f64, f64)> {
    if samples.len() < 2 {
        return Err(Error::DegenerateSample(samples.len()));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::Domain(format!("confidence level {level} outside (0, 1)")));
    }
    let se = standard_error(samples);
    if se == 0.0 {
        return Ok((mean(samples), 0.0));
    }
    let t = StudentsT::new(0.0, 1.0, samples.len() as f64 - 1.0)
        .expect("positive degrees of freedom")
        .inverse_cdf(0.5 + level / 2.0);
    Ok((mean(samples), t * se))
}
