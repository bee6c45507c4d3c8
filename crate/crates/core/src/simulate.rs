//! Trajectory generation. Every path is a deterministic function of an
//! innovation sequence; seeded entry points draw that sequence from a
//! ChaCha8 stream so that runs are reproducible across platforms and thread
//! schedules.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::models::TimeSeriesModel;

/// Generator for replication `index` of an experiment seeded with `seed`.
/// Streams depend only on `seed + index`, never on scheduling.
pub fn replication_rng(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed.wrapping_add(index))
}

/// Runs `model` over `innovations`, producing one value per innovation.
///
/// Pre-sample states are set to `init` and pre-sample innovations to zero.
/// Linear processes ignore `init`; their first `K` outputs use a partial
/// coefficient sum.
pub fn simulate_from_innovations(model: &TimeSeriesModel, init: f64, innovations: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(innovations.len());
    match model {
        TimeSeriesModel::Arma(m) => {
            for (t, &eps) in innovations.iter().enumerate() {
                let mut x = m.intercept + eps;
                for (j, a) in m.ar.iter().enumerate() {
                    let past = if t > j { out[t - 1 - j] } else { init };
                    x += a * past;
                }
                for (j, b) in m.ma.iter().enumerate() {
                    if t > j {
                        x += b * innovations[t - 1 - j];
                    }
                }
                out.push(x);
            }
        }
        TimeSeriesModel::Linear(m) => {
            for t in 0..innovations.len() {
                let x: f64 = m
                    .coeffs
                    .iter()
                    .take(t + 1)
                    .enumerate()
                    .map(|(k, a)| a * innovations[t - k])
                    .sum();
                out.push(m.mean + x);
            }
        }
        TimeSeriesModel::Nlar(m) => {
            let mut prev = init;
            for &eps in innovations {
                prev = m.regression(prev) + eps;
                out.push(prev);
            }
        }
        TimeSeriesModel::Tar(m) => {
            let mut prev = init;
            for &eps in innovations {
                prev = m.regression(prev) + eps;
                out.push(prev);
            }
        }
    }
    out
}

/// Draws the initial state (one noise variate) and `len` innovations.
pub(crate) fn draw_innovations(model: &TimeSeriesModel, rng: &mut ChaCha8Rng, len: usize) -> (f64, Vec<f64>) {
    let noise = *model.noise();
    let init = noise.sample(rng);
    let innovations = (0..len).map(|_| noise.sample(rng)).collect();
    (init, innovations)
}

/// Simulates `n` observations after discarding `burn_in` steps (default
/// [`TimeSeriesModel::default_burn_in`]).
///
/// Fails before drawing anything if the model is not stationary or
/// contractive, or if `burn_in` is shorter than the default.
pub fn simulate(model: &TimeSeriesModel, n: usize, burn_in: Option<usize>, seed: u64) -> Result<Vec<f64>> {
    model.validate()?;
    if n == 0 {
        return Err(Error::invalid("n must be at least 1"));
    }
    let min_burn = model.default_burn_in();
    let burn = burn_in.unwrap_or(min_burn);
    if burn < min_burn {
        return Err(Error::invalid(format!(
            "burn-in {burn} is shorter than the minimum {min_burn} for this model"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (init, innovations) = draw_innovations(model, &mut rng, burn + n);
    let mut path = simulate_from_innovations(model, init, &innovations);
    Ok(path.split_off(burn))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{ArmaModel, LinearProcess, NlarModel, TarModel};
    use crate::noise::NoiseSpec;
    use std::sync::Arc;

    const GAUSS: NoiseSpec = NoiseSpec::Gaussian { sigma: 1.0 };

    fn ar1(a: f64) -> TimeSeriesModel {
        TimeSeriesModel::Arma(ArmaModel::ar(vec![a], GAUSS).unwrap())
    }

    fn mean_var(xs: &[f64]) -> (f64, f64) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        (mean, var)
    }

    #[test]
    fn reproducible() {
        let m = TimeSeriesModel::Tar(TarModel::new(0.6, -0.3, GAUSS).unwrap());
        let a = simulate(&m, 5000, None, 42).unwrap();
        let b = simulate(&m, 5000, None, 42).unwrap();
        let c = simulate(&m, 5000, None, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn degenerate_models_are_noise() {
        let tar = TimeSeriesModel::Tar(TarModel::new(0.0, 0.0, GAUSS).unwrap());
        let nlar = TimeSeriesModel::Nlar(NlarModel::new(Arc::new(|_| 0.0), 0.0, GAUSS).unwrap());
        let innovations: Vec<f64> = (0..100).map(|i| (i as f64).sin()).collect();
        assert_eq!(simulate_from_innovations(&tar, 3.0, &innovations), innovations);
        assert_eq!(simulate_from_innovations(&nlar, 3.0, &innovations), innovations);
    }

    #[test]
    fn rejects_invalid_requests() {
        assert!(matches!(
            simulate(&ar1(1.0), 10, None, 1),
            Err(Error::NonStationary(_))
        ));
        assert!(simulate(&ar1(0.5), 0, None, 1).is_err());
        assert!(simulate(&ar1(0.5), 10, Some(10), 1).is_err());
        assert!(simulate(&ar1(0.5), 10, Some(5000), 1).is_ok());
    }

    #[test]
    fn ar1_matches_truncated_linear_process() {
        let arma = ArmaModel::ar(vec![0.5], GAUSS).unwrap();
        let linear = TimeSeriesModel::Linear(LinearProcess::from_arma(&arma).unwrap());
        let k = match &linear {
            TimeSeriesModel::Linear(l) => l.order(),
            _ => unreachable!(),
        };
        let mut rng = replication_rng(7, 0);
        let model = TimeSeriesModel::Arma(arma);
        let (init, innovations) = draw_innovations(&model, &mut rng, 20_000);
        let x = simulate_from_innovations(&model, init, &innovations);
        let y = simulate_from_innovations(&linear, init, &innovations);
        let burn = model.default_burn_in().max(k);
        for t in burn..x.len() {
            assert!((x[t] - y[t]).abs() < 1e-8, "t = {t}");
        }
    }

    #[test]
    fn arma_recursion_by_hand() {
        let m = TimeSeriesModel::Arma(ArmaModel::new(1.0, vec![0.5], vec![0.2], GAUSS).unwrap());
        let eps = [1.0, -1.0, 0.5];
        let x = simulate_from_innovations(&m, 2.0, &eps);
        // x0 = 1 + 0.5*2 + 1; x1 = 1 + 0.5*x0 - 1 + 0.2*1; x2 = 1 + 0.5*x1 + 0.5 - 0.2
        assert_eq!(x[0], 3.0);
        assert!((x[1] - 1.7).abs() < 1e-15);
        assert!((x[2] - 2.15).abs() < 1e-15);
    }

    #[test]
    fn ar1_moments() {
        let x = simulate(&ar1(0.5), 1_000_000, None, 2024).unwrap();
        let (mean, var) = mean_var(&x);
        // AR(1) with a = 0.5: long-run variance of the mean is σ²/(1-a)² = 4
        let se_mean = (4.0 / x.len() as f64).sqrt();
        assert!(mean.abs() < 4.0 * se_mean, "mean {mean}");
        // Var of the sample variance: 2 γ0² (1 + a²)/(1 - a²) / n for Gaussian AR(1)
        let g0 = 4.0 / 3.0;
        let se_var = (2.0 * g0 * g0 * (1.0 + 0.25) / 0.75 / x.len() as f64).sqrt();
        assert!((var - g0).abs() < 3.0 * se_var, "var {var} se {se_var}");
    }

    #[test]
    fn family_moments() {
        let n = 400_000;
        // MA(1): variance 1 + 0.49
        let ma = TimeSeriesModel::Arma(ArmaModel::new(0.0, vec![], vec![0.7], GAUSS).unwrap());
        let (_, v) = mean_var(&simulate(&ma, n, None, 5).unwrap());
        assert!((v - 1.49).abs() < 4.0 * (2.0 * 1.49f64.powi(2) * 2.0 / n as f64).sqrt() + 1e-3);

        // intercept shifts the mean to a0 / (1 - a)
        let shifted = TimeSeriesModel::Arma(ArmaModel::new(1.0, vec![0.5], vec![], GAUSS).unwrap());
        let (m, _) = mean_var(&simulate(&shifted, n, None, 6).unwrap());
        assert!((m - 2.0).abs() < 4.0 * (4.0 / n as f64).sqrt());

        // uniform noise linear process
        let lp = LinearProcess::new(0.5, vec![1.0, -0.5, 0.25], NoiseSpec::Uniform { half_width: 1.0 }).unwrap();
        let var = lp.variance();
        let (m, v) = mean_var(&simulate(&TimeSeriesModel::Linear(lp), n, None, 8).unwrap());
        assert!((m - 0.5).abs() < 4.0 * (var * 2.0 / n as f64).sqrt());
        assert!((v / var - 1.0).abs() < 0.02);
    }
}
