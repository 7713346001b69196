//! Slow, independent reference computations for cross-checking the exact
//! algorithms: Riemann-sum CRPS, Dykstra's cyclic projections for antitonic
//! least squares, and the closed-form Gaussian CRPS.

use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::dist::{OrderRelationMatrix, Relation, StepDistribution};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleConfig {
    /// Number of points in the CRPS integration grid.
    pub grid_density: usize,
    pub dykstra_max_iter: usize,
    /// Stop once no coordinate moves by more than this in a full sweep.
    pub dykstra_tol: f64,
    pub seed: u64,
}

impl Default for OracleConfig {
    fn default() -> Self {
        Self {
            grid_density: 1_000_000,
            dykstra_max_iter: 100_000,
            dykstra_tol: 1e-13,
            seed: 0x5eed,
        }
    }
}

/// CRPS by a midpoint Riemann sum of `(F(z) - 1{y <= z})^2` over the hull of
/// the support and `y`, padded by one unit on each side.
pub fn crps_numeric(f: &StepDistribution, y: f64, config: &OracleConfig) -> Result<f64> {
    if config.grid_density < 10_000 {
        return Err(Error::Invalid(format!(
            "integration grid of {} points is too coarse",
            config.grid_density
        )));
    }
    let lo = f.min_support().min(y) - 1.0;
    let hi = f.max_support().max(y) + 1.0;
    let h = (hi - lo) / config.grid_density as f64;
    let xs = f.support();
    let cs = f.cum_probs();
    let mut next = 0;
    let mut fz = 0.0;
    let mut total = 0.0;
    for k in 0..config.grid_density {
        let z = lo + (k as f64 + 0.5) * h;
        // forward sweep over the jumps, independent of the binary search in `cdf`
        while next < xs.len() && xs[next] <= z {
            fz = cs[next];
            next += 1;
        }
        let ind = if y <= z { 1.0 } else { 0.0 };
        total += (fz - ind) * (fz - ind);
    }
    Ok(total * h)
}

/// Result of [`dykstra_antitonic`].
#[derive(Clone, Debug, PartialEq)]
pub struct DykstraOutcome {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Least-squares projection of `targets` onto `{theta : theta_i >= theta_j
/// whenever i <= j in the order, theta_i = theta_j when equal}` by Dykstra's
/// cyclic projections onto the pairwise half-spaces.
pub fn dykstra_antitonic(targets: &[f64], relations: &OrderRelationMatrix, config: &OracleConfig) -> Result<DykstraOutcome> {
    let n = targets.len();
    if n != relations.len() {
        return Err(Error::LengthMismatch {
            left: n,
            right: relations.len(),
        });
    }
    // each pair (i, j) encodes the half-space theta_i - theta_j >= 0
    let mut constraints = Vec::new();
    for i in 0..n {
        for j in 0..n {
            match relations.get(i, j) {
                Relation::Leq => constraints.push((i, j)),
                Relation::Equal if i != j => constraints.push((i, j)),
                _ => {}
            }
        }
    }
    let mut x = targets.to_vec();
    let mut corrections = vec![[0.0f64; 2]; constraints.len()];
    for iter in 1..=config.dykstra_max_iter {
        let mut moved = 0.0f64;
        for (c, &(i, j)) in constraints.iter().enumerate() {
            let (yi, yj) = (x[i] + corrections[c][0], x[j] + corrections[c][1]);
            let (pi, pj) = if yi >= yj {
                (yi, yj)
            } else {
                let m = 0.5 * (yi + yj);
                (m, m)
            };
            corrections[c] = [yi - pi, yj - pj];
            moved = moved.max((pi - x[i]).abs()).max((pj - x[j]).abs());
            x[i] = pi;
            x[j] = pj;
        }
        if moved <= config.dykstra_tol {
            return Ok(DykstraOutcome {
                values: x,
                iterations: iter,
                converged: true,
            });
        }
    }
    Ok(DykstraOutcome {
        values: x,
        iterations: config.dykstra_max_iter,
        converged: false,
    })
}

/// Closed-form CRPS of `N(mu, sigma^2)` at `y`.
pub fn gaussian_crps(mu: f64, sigma: f64, y: f64) -> Result<f64> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::Invalid(format!("standard deviation {sigma} must be positive")));
    }
    let std = Normal::standard();
    let z = (y - mu) / sigma;
    Ok(sigma * (z * (2.0 * std.cdf(z) - 1.0) + 2.0 * std.pdf(z) - 1.0 / std::f64::consts::PI.sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_crps_examples() {
        let config = OracleConfig::default();
        let f = StepDistribution::new(&[0.0, 3.0], &[1.0, 1.0]).unwrap();
        assert!((crps_numeric(&f, 0.0, &config).unwrap() - 0.75).abs() < 1e-4);
        let d = StepDistribution::dirac(1.5).unwrap();
        assert!(crps_numeric(&d, 1.5, &config).unwrap().abs() < 1e-4);
        let coarse = OracleConfig {
            grid_density: 10,
            ..config
        };
        assert!(crps_numeric(&d, 1.5, &coarse).is_err());
    }

    #[test]
    fn dykstra_examples() {
        use Relation::*;
        let config = OracleConfig::default();
        let free = OrderRelationMatrix::from_entries(2, &[Equal, Incomparable, Incomparable, Equal]).unwrap();
        assert_eq!(dykstra_antitonic(&[0.0, 1.0], &free, &config).unwrap().values, vec![0.0, 1.0]);
        let ordered = OrderRelationMatrix::from_entries(2, &[Equal, Leq, Geq, Equal]).unwrap();
        let out = dykstra_antitonic(&[0.0, 1.0], &ordered, &config).unwrap();
        assert!(out.converged);
        assert_eq!(out.values, vec![0.5, 0.5]);
    }

    #[test]
    fn gaussian_examples() {
        let at_zero = gaussian_crps(0.0, 1.0, 0.0).unwrap();
        assert!((at_zero - 0.233_695).abs() < 1e-5);
        // far tails approach |y - mu| - sigma / sqrt(pi)
        let far = gaussian_crps(0.0, 1.0, 50.0).unwrap();
        assert!((far - (50.0 - 1.0 / std::f64::consts::PI.sqrt())).abs() < 0.1);
        assert!((far / 50.0 - 1.0).abs() < 0.02);
        assert!(gaussian_crps(0.0, 0.0, 1.0).is_err());
    }
}
