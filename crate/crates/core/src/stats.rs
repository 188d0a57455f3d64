use serde::{Deserialize, Serialize};

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub n: usize,
}

impl Estimate {
    pub fn exact(value: f64) -> Self {
        Estimate {
            mean: value,
            std_error: 0.0,
            n: 0,
        }
    }

    /// Sample mean and standard error, summed in slice order so the result
    /// never depends on how the samples were produced.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len();
        if n == 0 {
            return Estimate {
                mean: f64::NAN,
                std_error: f64::NAN,
                n: 0,
            };
        }
        let mean = samples.iter().sum::<f64>() / n as f64;
        let std_error = if n > 1 {
            let var = samples.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Estimate { mean, std_error, n }
    }

    /// Linear map `a * self + b` (exact constants, scaled error).
    pub fn affine(self, a: f64, b: f64) -> Self {
        Estimate {
            mean: a * self.mean + b,
            std_error: a.abs() * self.std_error,
            n: self.n,
        }
    }
}
