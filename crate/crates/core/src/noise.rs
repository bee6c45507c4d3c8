use std::f64::consts::{PI, SQRT_2};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Innovation distribution. All variants are centred.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian { sigma: f64 },
    /// Uniform on `(-half_width, half_width)`.
    Uniform { half_width: f64 },
    Laplace { scale: f64 },
}

impl Default for NoiseSpec {
    fn default() -> Self {
        NoiseSpec::Gaussian { sigma: 1.0 }
    }
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<()> {
        let (name, v) = match *self {
            NoiseSpec::Gaussian { sigma } => ("sigma", sigma),
            NoiseSpec::Uniform { half_width } => ("half_width", half_width),
            NoiseSpec::Laplace { scale } => ("scale", scale),
        };
        if v.is_finite() && v > 0.0 {
            Ok(())
        } else {
            Err(Error::invalid(format!("noise {name} must be positive and finite, got {v}")))
        }
    }

    pub fn is_gaussian(&self) -> bool {
        matches!(self, NoiseSpec::Gaussian { .. })
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sigma } => sigma * sigma,
            NoiseSpec::Uniform { half_width } => half_width * half_width / 3.0,
            NoiseSpec::Laplace { scale } => 2.0 * scale * scale,
        }
    }

    pub fn std_dev(&self) -> f64 {
        self.variance().sqrt()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sigma } => {
                let z: f64 = StandardNormal.sample(rng);
                sigma * z
            }
            NoiseSpec::Uniform { half_width } => rng.random_range(-half_width..half_width),
            NoiseSpec::Laplace { scale } => {
                // inverse cdf on (-1/2, 1/2)
                let u: f64 = rng.random::<f64>() - 0.5;
                -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
            }
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sigma } => {
                let z = x / sigma;
                (-0.5 * z * z).exp() / ((2.0 * PI).sqrt() * sigma)
            }
            NoiseSpec::Uniform { half_width } => {
                if x.abs() < half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
            NoiseSpec::Laplace { scale } => (-x.abs() / scale).exp() / (2.0 * scale),
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            NoiseSpec::Gaussian { sigma } => 0.5 * erfc(-x / (sigma * SQRT_2)),
            NoiseSpec::Uniform { half_width } => ((x + half_width) / (2.0 * half_width)).clamp(0.0, 1.0),
            NoiseSpec::Laplace { scale } => {
                if x < 0.0 {
                    0.5 * (x / scale).exp()
                } else {
                    1.0 - 0.5 * (-x / scale).exp()
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn moments_match() {
        let specs = [
            NoiseSpec::Gaussian { sigma: 2.0 },
            NoiseSpec::Uniform { half_width: 1.5 },
            NoiseSpec::Laplace { scale: 0.7 },
        ];
        for spec in specs {
            let mut rng = ChaCha8Rng::seed_from_u64(11);
            let n = 200_000;
            let xs: Vec<f64> = (0..n).map(|_| spec.sample(&mut rng)).collect();
            let mean = xs.iter().sum::<f64>() / n as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            let se_mean = (spec.variance() / n as f64).sqrt();
            assert!(mean.abs() < 4.0 * se_mean, "{spec:?} mean {mean}");
            assert!((var / spec.variance() - 1.0).abs() < 0.03, "{spec:?} var {var}");
        }
    }

    #[test]
    fn cdf_and_pdf_consistent() {
        let specs = [
            NoiseSpec::Gaussian { sigma: 1.3 },
            NoiseSpec::Uniform { half_width: 1.0 },
            NoiseSpec::Laplace { scale: 0.5 },
        ];
        for spec in specs {
            assert!((spec.cdf(0.0) - 0.5).abs() < 1e-15);
            for &x in &[-0.6, -0.1, 0.2, 0.45] {
                let h = 1e-6;
                let fd = (spec.cdf(x + h) - spec.cdf(x - h)) / (2.0 * h);
                assert!((fd - spec.pdf(x)).abs() < 1e-6, "{spec:?} at {x}");
            }
        }
    }

    #[test]
    fn validation() {
        assert!(NoiseSpec::Gaussian { sigma: 0.0 }.validate().is_err());
        assert!(NoiseSpec::Laplace { scale: f64::NAN }.validate().is_err());
        assert!(NoiseSpec::default().validate().is_ok());
    }

    #[test]
    fn json_shape() {
        let s: NoiseSpec = serde_json::from_str(r#"{"kind":"gaussian","sigma":2.0}"#).unwrap();
        assert_eq!(s, NoiseSpec::Gaussian { sigma: 2.0 });
        let s: NoiseSpec = serde_json::from_str(r#"{"kind":"uniform","half_width":1.0}"#).unwrap();
        assert_eq!(s, NoiseSpec::Uniform { half_width: 1.0 });
    }
}
