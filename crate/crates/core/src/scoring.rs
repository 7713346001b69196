//! CRPS, Brier score and quantile score.

use crate::dist::{CaseCollection, StepDistribution};
use crate::error::{Error, Result};
use crate::par;

/// CRPS of a step CDF, integrated exactly over the constant pieces delimited
/// by the support points and the outcome.
pub fn crps(f: &StepDistribution, y: f64) -> f64 {
    let xs = f.support();
    let cs = f.cum_probs();
    let m = xs.len();
    let mut terms = Vec::with_capacity(m + 1);
    if y < xs[0] {
        terms.push(xs[0] - y);
    }
    for k in 0..m - 1 {
        let (lo, hi, c) = (xs[k], xs[k + 1], cs[k]);
        let below = c * c;
        let above = (1.0 - c) * (1.0 - c);
        if y <= lo {
            terms.push(above * (hi - lo));
        } else if y >= hi {
            terms.push(below * (hi - lo));
        } else {
            terms.push(below * (y - lo) + above * (hi - y));
        }
    }
    if y > xs[m - 1] {
        terms.push(y - xs[m - 1]);
    }
    par::compensated_sum(terms)
}

/// `(p - o)^2` for a probability forecast `p` of a binary outcome `o`.
pub fn brier_score(p: f64, outcome: bool) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ProbabilityOutOfRange(p));
    }
    let o = if outcome { 1.0 } else { 0.0 };
    Ok((p - o) * (p - o))
}

/// Piecewise linear quantile score `(1{y <= x} - alpha) (x - y)`.
pub fn quantile_score(x: f64, y: f64, alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::LevelOutOfRange(alpha));
    }
    Ok(quantile_score_unchecked(x, y, alpha))
}

#[inline]
pub(crate) fn quantile_score_unchecked(x: f64, y: f64, alpha: f64) -> f64 {
    let ind = if y <= x { 1.0 } else { 0.0 };
    (ind - alpha) * (x - y)
}

/// Per-case CRPS values.
pub fn crps_values(cases: &CaseCollection) -> Vec<f64> {
    par::map_slice(cases.cases(), |c| crps(&c.forecast, c.outcome))
}

/// Mean CRPS over the collection, accumulated with compensated summation.
pub fn mean_crps(cases: &CaseCollection) -> f64 {
    par::compensated_sum(crps_values(cases)) / cases.len() as f64
}

/// Empirical distribution of the outcomes.
pub fn marginal_distribution(cases: &CaseCollection) -> StepDistribution {
    StepDistribution::empirical(&cases.outcomes()).expect("collections are nonempty with finite outcomes")
}

/// Mean CRPS of a single forecast issued for every outcome in `outcomes`.
pub(crate) fn mean_crps_constant(f: &StepDistribution, outcomes: &[f64]) -> f64 {
    let terms = par::map_slice(outcomes, |&y| crps(f, y));
    par::compensated_sum(terms) / outcomes.len() as f64
}
