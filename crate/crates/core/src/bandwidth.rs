use crate::error::{Error, Result};

/// Bandwidth `(ln n / n)^{1/3}` attaining the uniform rate `(ln n / n)^{1/3}`
/// for Lipschitz densities.
pub fn stone_bandwidth(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::invalid(format!("stone bandwidth needs n >= 2, got {n}")));
    }
    let n = n as f64;
    Ok((n.ln() / n).cbrt())
}
