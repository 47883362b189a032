use rand::Rng;
use rand_distr::StandardNormal;

use crate::{Error, Result};

/// Location `a` and shape `b` of a lognormal with mean `mu` and standard
/// deviation `theta * mu`: `b² = ln(1 + θ²)`, `a = ln μ − b²/2`.
pub fn lognormal_params(mu: f64, theta: f64) -> Result<(f64, f64)> {
    check(mu, theta)?;
    let b2 = theta.mul_add(theta, 1.0).ln();
    Ok((mu.ln() - b2 / 2.0, b2.sqrt()))
}

fn check(mu: f64, theta: f64) -> Result<()> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "lognormal mean {mu} must be positive"
        )));
    }
    if !(theta >= 0.0 && theta.is_finite()) {
        return Err(Error::InvalidInput(format!(
            "dispersion {theta} must be non-negative"
        )));
    }
    Ok(())
}

/// Maps a standard normal draw `z` to the moment-matched lognormal.
/// With `theta == 0` the result is `mu` exactly.
pub fn lognormal_from_normal(mu: f64, theta: f64, z: f64) -> Result<f64> {
    check(mu, theta)?;
    if theta == 0.0 {
        return Ok(mu);
    }
    let (a, b) = lognormal_params(mu, theta)?;
    Ok(b.mul_add(z, a).exp())
}

pub fn lognormal_sample<R: Rng + ?Sized>(mu: f64, theta: f64, rng: &mut R) -> Result<f64> {
    check(mu, theta)?;
    if theta == 0.0 {
        return Ok(mu);
    }
    let z: f64 = rng.sample(StandardNormal);
    lognormal_from_normal(mu, theta, z)
}
