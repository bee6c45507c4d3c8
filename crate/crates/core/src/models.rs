//! Stable non-anticipative model families `X_n = μ(ξ_{n-1}) + ε_n`:
//! ARMA, truncated linear (MA(∞)) processes, nonlinear autoregressions and
//! threshold autoregressions.

use std::fmt;
use std::sync::Arc;

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::noise::NoiseSpec;

/// Roots with modulus at or above `1 - UNIT_ROOT_MARGIN` fail the check.
pub const UNIT_ROOT_MARGIN: f64 = 1e-9;

/// Relative tail energy `Σ_{j>K} β_j² / Σ β_j²` left by MA(∞) truncation.
pub const MA_TAIL_TOLERANCE: f64 = 1e-12;

const MAX_MA_TERMS: usize = 1 << 22;

fn ensure_finite_coeffs(name: &str, values: &[f64]) -> Result<()> {
    match values.iter().position(|v| !v.is_finite()) {
        Some(i) => Err(Error::invalid(format!("{name}[{i}] is not finite"))),
        None => Ok(()),
    }
}

/// Roots of the monic polynomial `z^d + c_1 z^{d-1} + ... + c_d`, as
/// eigenvalues of its companion matrix.
fn monic_roots(c: &[f64]) -> Vec<Complex<f64>> {
    let d = c.len();
    if d == 0 {
        return Vec::new();
    }
    let companion = DMatrix::from_fn(d, d, |i, j| {
        if i == 0 {
            -c[j]
        } else if j + 1 == i {
            1.0
        } else {
            0.0
        }
    });
    companion.complex_eigenvalues().iter().copied().collect()
}

/// ARMA(p, q):
/// `X_n = a_0 + Σ_{j=1}^p a_j X_{n-j} + ε_n + Σ_{j=1}^q b_j ε_{n-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArmaModel {
    pub intercept: f64,
    pub ar: Vec<f64>,
    pub ma: Vec<f64>,
    pub noise: NoiseSpec,
}

/// Roots of `A(z) = z^p - Σ a_j z^{p-j}` and `B(z) = Σ_{j=0}^q b_j z^{q-j}`.
#[derive(Debug, Clone, PartialEq)]
pub struct StationarityReport {
    pub ar_roots: Vec<Complex<f64>>,
    pub ma_roots: Vec<Complex<f64>>,
    /// `Σ_{j=0}^q b_j`.
    pub ma_sum: f64,
}

impl StationarityReport {
    pub fn ar_moduli(&self) -> Vec<f64> {
        self.ar_roots.iter().map(|z| z.norm()).collect()
    }

    pub fn ma_moduli(&self) -> Vec<f64> {
        self.ma_roots.iter().map(|z| z.norm()).collect()
    }

    /// Largest modulus of the autoregressive roots (0 for p = 0).
    pub fn spectral_radius(&self) -> f64 {
        self.ar_moduli().into_iter().fold(0.0, f64::max)
    }

    pub fn passed(&self) -> bool {
        self.failure().is_none()
    }

    /// Description of the first offending root, if any.
    pub fn failure(&self) -> Option<String> {
        let limit = 1.0 - UNIT_ROOT_MARGIN;
        for (name, roots) in [("A(z)", &self.ar_roots), ("B(z)", &self.ma_roots)] {
            for z in roots {
                if !(z.norm() < limit) {
                    return Some(format!(
                        "root {:.12}{:+.12}i of {name} has modulus {:.12}, not inside the unit circle",
                        z.re,
                        z.im,
                        z.norm()
                    ));
                }
            }
        }
        if self.ma_sum == 0.0 {
            return Some("moving-average coefficients sum to zero".to_string());
        }
        None
    }
}

impl ArmaModel {
    pub fn new(intercept: f64, ar: Vec<f64>, ma: Vec<f64>, noise: NoiseSpec) -> Result<Self> {
        if !intercept.is_finite() {
            return Err(Error::invalid("intercept must be finite"));
        }
        ensure_finite_coeffs("ar", &ar)?;
        ensure_finite_coeffs("ma", &ma)?;
        noise.validate()?;
        Ok(Self {
            intercept,
            ar,
            ma,
            noise,
        })
    }

    /// Pure AR(p) with zero intercept.
    pub fn ar(ar: Vec<f64>, noise: NoiseSpec) -> Result<Self> {
        Self::new(0.0, ar, Vec::new(), noise)
    }

    pub fn check_stationary(&self) -> StationarityReport {
        let ar_c: Vec<f64> = self.ar.iter().map(|a| -a).collect();
        StationarityReport {
            ar_roots: monic_roots(&ar_c),
            ma_roots: monic_roots(&self.ma),
            ma_sum: 1.0 + self.ma.iter().sum::<f64>(),
        }
    }

    fn ensure_stationary(&self) -> Result<StationarityReport> {
        let report = self.check_stationary();
        match report.failure() {
            Some(msg) => Err(Error::NonStationary(msg)),
            None => Ok(report),
        }
    }

    /// `β_0..β_K` of `X_n = μ_X + Σ β_j ε_{n-j}`, from
    /// `β_j = b_j + Σ_{i=1}^{min(j,p)} a_i β_{j-i}`.
    pub fn ma_coeffs(&self, k: usize) -> Result<Vec<f64>> {
        self.ensure_stationary()?;
        let p = self.ar.len();
        let q = self.ma.len();
        if k < p + q {
            return Err(Error::invalid(format!("truncation {k} is below p + q = {}", p + q)));
        }
        Ok(self.psi_weights(k))
    }

    fn psi_weights(&self, k: usize) -> Vec<f64> {
        let mut beta = Vec::with_capacity(k + 1);
        for j in 0..=k {
            let mut v = match j {
                0 => 1.0,
                _ => self.ma.get(j - 1).copied().unwrap_or(0.0),
            };
            for (i, a) in self.ar.iter().enumerate().take(j) {
                v += a * beta[j - 1 - i];
            }
            beta.push(v);
        }
        beta
    }

    /// Truncation point `K` leaving less than [`MA_TAIL_TOLERANCE`] of the
    /// energy `Σ β_j²` in the discarded tail.
    ///
    /// The starting guess assumes geometric decay at the rate `(1 + ρ)/2`,
    /// `ρ` the largest AR root modulus, which also covers the polynomial
    /// factor of repeated roots; it is doubled until the energy measured
    /// between `K` and `2K` is below the tolerance.
    pub fn ma_truncation(&self) -> Result<usize> {
        let report = self.ensure_stationary()?;
        let p = self.ar.len();
        let q = self.ma.len();
        if p == 0 {
            return Ok(q);
        }
        let r = 0.5 * (1.0 + report.spectral_radius());
        let guess = ((MA_TAIL_TOLERANCE * (1.0 - r * r)).ln() / (2.0 * r.ln())).ceil();
        let mut k = (guess as usize).max(p + q).max(1);
        loop {
            let beta = self.psi_weights(2 * k);
            let head: f64 = beta[..=k].iter().map(|b| b * b).sum();
            let tail: f64 = beta[k + 1..].iter().map(|b| b * b).sum();
            if tail < MA_TAIL_TOLERANCE * head {
                return Ok(k);
            }
            k *= 2;
            if k > MAX_MA_TERMS {
                return Err(Error::NonStationary(format!(
                    "MA(∞) weights decay too slowly to truncate (spectral radius {})",
                    report.spectral_radius()
                )));
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.intercept / (1.0 - self.ar.iter().sum::<f64>())
    }

    /// Exact Gaussian marginal `(μ_X, Var X)`. Requires Gaussian noise.
    pub fn marginal(&self) -> Result<(f64, f64)> {
        if !self.noise.is_gaussian() {
            return Err(Error::Unsupported(
                "exact ARMA marginal needs Gaussian noise".to_string(),
            ));
        }
        let k = self.ma_truncation()?;
        let beta = self.psi_weights(k);
        let energy: f64 = beta.iter().map(|b| b * b).sum();
        Ok((self.mean(), self.noise.variance() * energy))
    }
}

/// `arma_check_stationary` as a free function.
pub fn arma_check_stationary(model: &ArmaModel) -> StationarityReport {
    model.check_stationary()
}

/// Linear process `X_n = μ_X + Σ_{k=0}^K a_k ε_{n-k}` with an explicit finite
/// coefficient array.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProcess {
    pub mean: f64,
    pub coeffs: Vec<f64>,
    pub noise: NoiseSpec,
}

impl LinearProcess {
    pub fn new(mean: f64, coeffs: Vec<f64>, noise: NoiseSpec) -> Result<Self> {
        if !mean.is_finite() {
            return Err(Error::invalid("mean must be finite"));
        }
        if coeffs.is_empty() {
            return Err(Error::invalid("linear process needs at least one coefficient"));
        }
        ensure_finite_coeffs("coeffs", &coeffs)?;
        noise.validate()?;
        Ok(Self { mean, coeffs, noise })
    }

    /// The MA(∞) representation of a stationary ARMA model, truncated by
    /// [`ArmaModel::ma_truncation`].
    pub fn from_arma(model: &ArmaModel) -> Result<Self> {
        let k = model.ma_truncation()?;
        Self::new(model.mean(), model.ma_coeffs(k)?, model.noise)
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn variance(&self) -> f64 {
        self.noise.variance() * self.coeffs.iter().map(|a| a * a).sum::<f64>()
    }

    /// Geometric envelope `max_{k≥1} (|a_k| / |a_0|)^{1/k}`; `None` when
    /// `a_0 = 0` or the envelope does not contract.
    pub fn decay_rate(&self) -> Option<f64> {
        let a0 = self.coeffs[0].abs();
        if a0 == 0.0 {
            return None;
        }
        let rate = self
            .coeffs
            .iter()
            .enumerate()
            .skip(1)
            .map(|(k, a)| (a.abs() / a0).powf(1.0 / k as f64))
            .fold(0.0, f64::max);
        (rate < 1.0).then_some(rate)
    }
}

pub type Regression = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Nonlinear autoregression `X_n = r(X_{n-1}) + ε_n` with a caller-supplied
/// Lipschitz bound `ρ < 1` on `r`.
#[derive(Clone)]
pub struct NlarModel {
    r: Regression,
    lipschitz_bound: f64,
    pub noise: NoiseSpec,
}

impl fmt::Debug for NlarModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("NlarModel")
            .field("lipschitz_bound", &self.lipschitz_bound)
            .field("noise", &self.noise)
            .finish_non_exhaustive()
    }
}

/// Slope tolerance of the sampled Lipschitz check.
const LIPSCHITZ_SLACK: f64 = 1e-6;

impl NlarModel {
    /// Validates `ρ ∈ [0, 1)` and checks sampled difference quotients of `r`
    /// on `[-100, 100]` (step 0.01) plus a few far points against `ρ`.
    pub fn new(r: Regression, lipschitz_bound: f64, noise: NoiseSpec) -> Result<Self> {
        if !(0.0..1.0).contains(&lipschitz_bound) {
            return Err(Error::NonStationary(format!(
                "Lipschitz bound {lipschitz_bound} is not in [0, 1)"
            )));
        }
        noise.validate()?;
        let model = Self {
            r,
            lipschitz_bound,
            noise,
        };
        model.check_lipschitz()?;
        Ok(model)
    }

    pub fn lipschitz_bound(&self) -> f64 {
        self.lipschitz_bound
    }

    #[inline]
    pub fn regression(&self, x: f64) -> f64 {
        (self.r)(x)
    }

    fn check_lipschitz(&self) -> Result<()> {
        let mut points: Vec<f64> = (-10_000..=10_000).map(|i| i as f64 * 0.01).collect();
        points.extend([-1e6, -1e4, -1e3, 1e3, 1e4, 1e6]);
        points.sort_by(f64::total_cmp);
        let values: Vec<f64> = points.iter().map(|&x| self.regression(x)).collect();
        for i in 1..points.len() {
            let slope = (values[i] - values[i - 1]).abs() / (points[i] - points[i - 1]);
            if !(slope <= self.lipschitz_bound + LIPSCHITZ_SLACK) {
                return Err(Error::NonStationary(format!(
                    "regression slope {slope} on [{}, {}] exceeds the Lipschitz bound {}",
                    points[i - 1],
                    points[i],
                    self.lipschitz_bound
                )));
            }
        }
        Ok(())
    }
}

/// Threshold autoregression `X_n = a max(X_{n-1}, 0) + b min(X_{n-1}, 0) + ε_n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TarModel {
    pub a: f64,
    pub b: f64,
    pub noise: NoiseSpec,
}

impl TarModel {
    pub fn new(a: f64, b: f64, noise: NoiseSpec) -> Result<Self> {
        if !(a.is_finite() && b.is_finite()) {
            return Err(Error::invalid("TAR coefficients must be finite"));
        }
        noise.validate()?;
        let model = Self { a, b, noise };
        if !(model.contraction() < 1.0) {
            return Err(Error::NonStationary(format!(
                "TAR model is not contractive: max(|a|, |b|) = {}",
                model.contraction()
            )));
        }
        Ok(model)
    }

    /// Lipschitz constant of the regression function, `max(|a|, |b|)`.
    pub fn contraction(&self) -> f64 {
        self.a.abs().max(self.b.abs())
    }

    #[inline]
    pub fn regression(&self, x: f64) -> f64 {
        self.a * x.max(0.0) + self.b * x.min(0.0)
    }

    /// Upper bound on the stationary standard deviation,
    /// `σ_ε / sqrt(1 - ρ²)`, from `E X² ≤ ρ² E X² + σ_ε²`.
    pub fn std_dev_bound(&self) -> f64 {
        let rho = self.contraction();
        self.noise.std_dev() / (1.0 - rho * rho).sqrt()
    }
}

/// Any of the supported families.
#[derive(Debug, Clone)]
pub enum TimeSeriesModel {
    Arma(ArmaModel),
    Linear(LinearProcess),
    Nlar(NlarModel),
    Tar(TarModel),
}

impl TimeSeriesModel {
    pub fn noise(&self) -> &NoiseSpec {
        match self {
            Self::Arma(m) => &m.noise,
            Self::Linear(m) => &m.noise,
            Self::Nlar(m) => &m.noise,
            Self::Tar(m) => &m.noise,
        }
    }

    /// Stationarity (ARMA) or contraction (NLAR, TAR) check. Linear
    /// processes with finitely many coefficients always pass.
    pub fn validate(&self) -> Result<()> {
        self.noise().validate()?;
        match self {
            Self::Arma(m) => m.ensure_stationary().map(|_| ()),
            Self::Linear(_) => Ok(()),
            Self::Nlar(m) => match m.lipschitz_bound < 1.0 {
                true => Ok(()),
                false => Err(Error::NonStationary("Lipschitz bound is not below 1".into())),
            },
            Self::Tar(m) => match m.contraction() < 1.0 {
                true => Ok(()),
                false => Err(Error::NonStationary(format!(
                    "TAR model is not contractive: max(|a|, |b|) = {}",
                    m.contraction()
                ))),
            },
        }
    }

    /// Geometric rate at which the influence of one innovation dies out:
    /// the AR spectral radius, the Lipschitz bound of `r`, or the
    /// coefficient envelope of a linear process.
    pub fn contraction_proxy(&self) -> Option<f64> {
        match self {
            Self::Arma(m) => Some(m.check_stationary().spectral_radius()),
            Self::Linear(m) => m.decay_rate(),
            Self::Nlar(m) => Some(m.lipschitz_bound),
            Self::Tar(m) => Some(m.contraction()),
        }
    }

    /// Burn-in length `max(1000, 50 ceil(1 / (1 - ρ)))`; never shorter than
    /// the coefficient memory of a linear process.
    pub fn default_burn_in(&self) -> usize {
        let rho = match self {
            Self::Linear(_) => 0.0,
            _ => self.contraction_proxy().unwrap_or(0.0).min(1.0 - UNIT_ROOT_MARGIN),
        };
        let by_rate = 50.0 * (1.0 / (1.0 - rho)).ceil();
        let base = (by_rate.min(1e9) as usize).max(1000);
        match self {
            Self::Linear(m) => base.max(m.order()),
            _ => base,
        }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Self::Arma(_) => "arma",
            Self::Linear(_) => "linear",
            Self::Nlar(_) => "nlar",
            Self::Tar(_) => "nlar_tar",
        }
    }

    /// Serializable description; `None` for NLAR models with an arbitrary `r`.
    pub fn to_spec(&self) -> Option<ModelSpec> {
        let family = match self {
            Self::Arma(m) => FamilySpec::Arma {
                intercept: m.intercept,
                ar: m.ar.clone(),
                ma: m.ma.clone(),
                noise: m.noise,
            },
            Self::Linear(m) => FamilySpec::Linear {
                mean: m.mean,
                coeffs: m.coeffs.clone(),
                noise: m.noise,
            },
            Self::Tar(m) => FamilySpec::NlarTar {
                a: m.a,
                b: m.b,
                noise: m.noise,
            },
            Self::Nlar(_) => return None,
        };
        Some(ModelSpec {
            schema: MODEL_SCHEMA_VERSION,
            family,
        })
    }
}

pub const MODEL_SCHEMA_VERSION: u32 = 1;

/// JSON model specification, e.g.
/// `{"schema":1,"family":"arma","intercept":0.0,"ar":[0.5],"ma":[],"noise":{"kind":"gaussian","sigma":1.0}}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub schema: u32,
    #[serde(flatten)]
    pub family: FamilySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FamilySpec {
    Arma {
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        ar: Vec<f64>,
        #[serde(default)]
        ma: Vec<f64>,
        #[serde(default)]
        noise: NoiseSpec,
    },
    Linear {
        #[serde(default)]
        mean: f64,
        coeffs: Vec<f64>,
        #[serde(default)]
        noise: NoiseSpec,
    },
    NlarTar {
        a: f64,
        b: f64,
        #[serde(default)]
        noise: NoiseSpec,
    },
}

/// Failure to load a model specification.
#[derive(Debug, thiserror::Error)]
pub enum SpecError {
    /// Malformed JSON or schema mismatch; carries the parser position.
    #[error("model spec: {0}")]
    Parse(String),
    /// Well-formed spec describing an invalid model.
    #[error(transparent)]
    Model(#[from] Error),
}

impl ModelSpec {
    pub fn from_json(text: &str) -> std::result::Result<Self, SpecError> {
        let spec: ModelSpec = serde_json::from_str(text).map_err(|e| {
            SpecError::Parse(format!("{e} (line {}, column {})", e.line(), e.column()))
        })?;
        if spec.schema != MODEL_SCHEMA_VERSION {
            return Err(SpecError::Parse(format!(
                "unsupported schema version {} (expected {MODEL_SCHEMA_VERSION})",
                spec.schema
            )));
        }
        Ok(spec)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model spec serializes")
    }

    /// Builds and validates the model.
    pub fn build(&self) -> Result<TimeSeriesModel> {
        let model = match &self.family {
            FamilySpec::Arma {
                intercept,
                ar,
                ma,
                noise,
            } => TimeSeriesModel::Arma(ArmaModel::new(*intercept, ar.clone(), ma.clone(), *noise)?),
            FamilySpec::Linear { mean, coeffs, noise } => {
                TimeSeriesModel::Linear(LinearProcess::new(*mean, coeffs.clone(), *noise)?)
            }
            FamilySpec::NlarTar { a, b, noise } => TimeSeriesModel::Tar(TarModel::new(*a, *b, *noise)?),
        };
        model.validate()?;
        Ok(model)
    }
}
