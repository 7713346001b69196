//! Finite-support predictive distributions and the operations on them that do
//! not involve scoring: stochastic order, tail truncation, threshold search
//! and grid discretization.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::par;
use crate::scoring;

/// Masses below this (relative to the total) are dropped when building a
/// distribution from point masses.
pub const MASS_FLOOR: f64 = 1e-15;

/// Default size of the equidistant grid used to discretize continuous CDFs.
pub const DEFAULT_GRID_SIZE: usize = 5000;

/// Default cap on the number of widenings in [`select_thresholds`].
pub const DEFAULT_MAX_WIDENINGS: usize = 1_000_000;

/// Right-continuous step CDF with finitely many jumps.
///
/// `support` is strictly increasing and `cum_probs[k]` is the CDF value at
/// `support[k]`; the last cumulative probability is exactly one. Both buffers
/// are shared, so cloning is cheap.
#[derive(Clone, PartialEq)]
pub struct StepDistribution {
    support: Arc<[f64]>,
    cum_probs: Arc<[f64]>,
}

impl fmt::Debug for StepDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StepDistribution")
            .field("support", &&self.support[..])
            .field("cum_probs", &&self.cum_probs[..])
            .finish()
    }
}

fn check_finite(context: &'static str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !v.is_finite()) {
        Some(&value) => Err(Error::NonFinite { context, value }),
        None => Ok(()),
    }
}

impl StepDistribution {
    /// Builds a distribution from (possibly unsorted, possibly repeated)
    /// points and positive masses. Masses are normalized to sum to one.
    pub fn new(points: &[f64], masses: &[f64]) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Empty("points"));
        }
        if points.len() != masses.len() {
            return Err(Error::LengthMismatch {
                left: points.len(),
                right: masses.len(),
            });
        }
        check_finite("points", points)?;
        check_finite("masses", masses)?;
        if let Some((index, &mass)) = masses.iter().enumerate().find(|(_, &m)| m <= 0.0) {
            return Err(Error::NonPositiveMass { index, mass });
        }

        let mut pairs: Vec<(f64, f64)> = points
            .iter()
            .map(|&p| p + 0.0)
            .zip(masses.iter().copied())
            .collect();
        pairs.sort_by(|l, r| l.0.total_cmp(&r.0));

        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(pairs.len());
        for (x, m) in pairs {
            match merged.last_mut() {
                Some(last) if last.0 == x => last.1 += m,
                _ => merged.push((x, m)),
            }
        }

        let total = par::compensated_sum(merged.iter().map(|p| p.1));
        merged.retain(|p| p.1 / total >= MASS_FLOOR);
        let total = par::compensated_sum(merged.iter().map(|p| p.1));

        let mut support = Vec::with_capacity(merged.len());
        let mut cum = Vec::with_capacity(merged.len());
        let mut running = 0.0;
        let mut comp = 0.0;
        for (x, m) in merged {
            // Neumaier step, kept inline so the running value is available
            let t = running + m;
            if running.abs() >= m.abs() {
                comp += (running - t) + m;
            } else {
                comp += (m - t) + running;
            }
            running = t;
            let c = ((running + comp) / total).min(1.0);
            if cum.last().is_none_or(|&prev| c > prev) {
                support.push(x);
                cum.push(c);
            } else if let Some(last) = support.last_mut() {
                // rounding swallowed the step; keep the later point
                *last = x;
            }
        }
        if let Some(last) = cum.last_mut() {
            *last = 1.0;
        }
        Ok(Self {
            support: support.into(),
            cum_probs: cum.into(),
        })
    }

    /// Builds a distribution from CDF values at strictly increasing points.
    /// Points whose CDF value does not exceed the previous one are dropped; the
    /// final value must be one (within 1e-9) and is set to exactly one.
    pub fn from_cdf(support: &[f64], cum_probs: &[f64]) -> Result<Self> {
        if support.is_empty() {
            return Err(Error::Empty("support"));
        }
        if support.len() != cum_probs.len() {
            return Err(Error::LengthMismatch {
                left: support.len(),
                right: cum_probs.len(),
            });
        }
        check_finite("support", support)?;
        check_finite("cdf values", cum_probs)?;
        for w in support.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::InvalidCdf(format!(
                    "support not strictly increasing at {} >= {}",
                    w[0], w[1]
                )));
            }
        }
        let last = cum_probs[cum_probs.len() - 1];
        if (last - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidCdf(format!("terminal cdf value {last} is not 1")));
        }
        let mut xs = Vec::with_capacity(support.len());
        let mut cs = Vec::with_capacity(support.len());
        let mut prev = 0.0;
        for (i, (&x, &c)) in support.iter().zip(cum_probs).enumerate() {
            if !(-1e-12..=1.0 + 1e-9).contains(&c) {
                return Err(Error::InvalidCdf(format!("cdf value {c} outside [0, 1]")));
            }
            if c < prev - 1e-12 {
                return Err(Error::DecreasingCdf {
                    left: support[i - 1],
                    right: x,
                    left_value: prev,
                    right_value: c,
                });
            }
            let c = if i + 1 == support.len() { 1.0 } else { c.min(1.0) };
            if c > prev {
                xs.push(x + 0.0);
                cs.push(c);
                prev = c;
            }
        }
        Ok(Self {
            support: xs.into(),
            cum_probs: cs.into(),
        })
    }

    /// Point mass at `x`.
    pub fn dirac(x: f64) -> Result<Self> {
        Self::new(&[x], &[1.0])
    }

    /// Equal-weight empirical distribution of `members`.
    pub fn empirical(members: &[f64]) -> Result<Self> {
        let masses = vec![1.0; members.len()];
        Self::new(members, &masses)
    }

    pub fn support(&self) -> &[f64] {
        &self.support
    }

    pub fn cum_probs(&self) -> &[f64] {
        &self.cum_probs
    }

    /// Number of jump points.
    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn min_support(&self) -> f64 {
        self.support[0]
    }

    pub fn max_support(&self) -> f64 {
        self.support[self.support.len() - 1]
    }

    /// Point masses, in support order.
    pub fn masses(&self) -> impl Iterator<Item = f64> + '_ {
        let mut prev = 0.0;
        self.cum_probs.iter().map(move |&c| {
            let m = c - prev;
            prev = c;
            m
        })
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let k = self.support.partition_point(|&s| s <= x);
        if k == 0 {
            0.0
        } else {
            self.cum_probs[k - 1]
        }
    }

    /// CDF value just left of `x`.
    pub fn cdf_left(&self, x: f64) -> f64 {
        let k = self.support.partition_point(|&s| s < x);
        if k == 0 {
            0.0
        } else {
            self.cum_probs[k - 1]
        }
    }

    /// Lower generalized inverse `inf { z : F(z) >= alpha }`.
    pub fn quantile(&self, alpha: f64) -> Result<f64> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::LevelOutOfRange(alpha));
        }
        Ok(self.quantile_unchecked(alpha))
    }

    pub(crate) fn quantile_unchecked(&self, alpha: f64) -> f64 {
        let k = self.cum_probs.partition_point(|&c| c < alpha);
        self.support[k.min(self.support.len() - 1)]
    }

    /// Mean of the distribution.
    pub fn mean(&self) -> f64 {
        par::compensated_sum(self.support.iter().zip(self.masses()).map(|(x, m)| x * m))
    }

    /// Copy with every support point rounded to the nearest multiple of
    /// `atol` and coinciding points merged. Used to group nearly identical
    /// forecasts deterministically.
    pub fn snapped(&self, atol: f64) -> Result<Self> {
        if !(atol > 0.0 && atol.is_finite()) {
            return Err(Error::Invalid(format!("snap tolerance {atol} must be positive")));
        }
        let points: Vec<f64> = self.support.iter().map(|x| (x / atol).round() * atol).collect();
        let masses: Vec<f64> = self.masses().collect();
        Self::new(&points, &masses)
    }

    /// Bit-level key of the canonical representation, suitable for hashing.
    pub(crate) fn canonical_key(&self) -> Vec<u64> {
        let mut key = Vec::with_capacity(2 * self.len());
        key.extend(self.support.iter().map(|x| x.to_bits()));
        key.extend(self.cum_probs.iter().map(|c| c.to_bits()));
        key
    }
}

/// A forecast distribution together with the realized outcome.
#[derive(Clone, Debug, PartialEq)]
pub struct ForecastCase {
    pub forecast: StepDistribution,
    pub outcome: f64,
}

impl ForecastCase {
    pub fn new(forecast: StepDistribution, outcome: f64) -> Result<Self> {
        if !outcome.is_finite() {
            return Err(Error::NonFinite {
                context: "outcome",
                value: outcome,
            });
        }
        Ok(Self {
            forecast,
            outcome: outcome + 0.0,
        })
    }
}

/// Nonempty, ordered collection of forecast cases.
#[derive(Clone, Debug, PartialEq)]
pub struct CaseCollection {
    cases: Vec<ForecastCase>,
}

impl CaseCollection {
    pub fn new(cases: Vec<ForecastCase>) -> Result<Self> {
        if cases.is_empty() {
            return Err(Error::Empty("case collection"));
        }
        Ok(Self { cases })
    }

    /// Convenience constructor from parallel forecast and outcome vectors.
    pub fn from_pairs(forecasts: Vec<StepDistribution>, outcomes: &[f64]) -> Result<Self> {
        if forecasts.len() != outcomes.len() {
            return Err(Error::LengthMismatch {
                left: forecasts.len(),
                right: outcomes.len(),
            });
        }
        let cases = forecasts
            .into_iter()
            .zip(outcomes)
            .map(|(f, &y)| ForecastCase::new(f, y))
            .collect::<Result<Vec<_>>>()?;
        Self::new(cases)
    }

    pub fn cases(&self) -> &[ForecastCase] {
        &self.cases
    }

    pub fn len(&self) -> usize {
        self.cases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cases.is_empty()
    }

    pub fn outcomes(&self) -> Vec<f64> {
        self.cases.iter().map(|c| c.outcome).collect()
    }

    pub fn forecasts(&self) -> impl Iterator<Item = &StepDistribution> {
        self.cases.iter().map(|c| &c.forecast)
    }

    pub fn min_outcome(&self) -> f64 {
        self.cases.iter().map(|c| c.outcome).fold(f64::INFINITY, f64::min)
    }

    pub fn max_outcome(&self) -> f64 {
        self.cases
            .iter()
            .map(|c| c.outcome)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Collection with every forecast replaced by `f(forecast)`.
    pub fn map_forecasts<F>(&self, f: F) -> Result<Self>
    where
        F: Fn(&StepDistribution) -> Result<StepDistribution>,
    {
        let cases = self
            .cases
            .iter()
            .map(|c| {
                Ok(ForecastCase {
                    forecast: f(&c.forecast)?,
                    outcome: c.outcome,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(cases)
    }

    /// Groups cases with identical forecasts. Returns the class index of
    /// every case and, per class, a representative case index. Classes are
    /// numbered in order of first appearance.
    pub fn forecast_classes(&self) -> (Vec<usize>, Vec<usize>) {
        let mut index: HashMap<Vec<u64>, usize> = HashMap::new();
        let mut class_of = Vec::with_capacity(self.len());
        let mut representatives = Vec::new();
        for (i, case) in self.cases.iter().enumerate() {
            let next = representatives.len();
            let class = *index.entry(case.forecast.canonical_key()).or_insert(next);
            if class == next {
                representatives.push(i);
            }
            class_of.push(class);
        }
        (class_of, representatives)
    }
}

/// Outcome of comparing two distributions in the usual stochastic order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Relation {
    /// Left is stochastically smaller (its CDF is pointwise larger).
    Leq,
    Geq,
    Equal,
    Incomparable,
}

impl Relation {
    pub fn mirror(self) -> Self {
        match self {
            Relation::Leq => Relation::Geq,
            Relation::Geq => Relation::Leq,
            other => other,
        }
    }
}

/// Compares `f` and `g` in the stochastic order by checking the CDFs at the
/// union of both supports.
pub fn stochastic_order(f: &StepDistribution, g: &StepDistribution) -> Relation {
    if f == g {
        return Relation::Equal;
    }
    let (fx, fc) = (f.support(), f.cum_probs());
    let (gx, gc) = (g.support(), g.cum_probs());
    let (mut i, mut j) = (0, 0);
    let (mut fv, mut gv) = (0.0, 0.0);
    let mut f_above = false; // F(x) > G(x) somewhere
    let mut g_above = false;
    while i < fx.len() || j < gx.len() {
        let x = match (fx.get(i), gx.get(j)) {
            (Some(&a), Some(&b)) => a.min(b),
            (Some(&a), None) => a,
            (None, Some(&b)) => b,
            (None, None) => unreachable!(),
        };
        while i < fx.len() && fx[i] <= x {
            fv = fc[i];
            i += 1;
        }
        while j < gx.len() && gx[j] <= x {
            gv = gc[j];
            j += 1;
        }
        if fv > gv {
            f_above = true;
        } else if gv > fv {
            g_above = true;
        }
        if f_above && g_above {
            return Relation::Incomparable;
        }
    }
    match (f_above, g_above) {
        (true, false) => Relation::Leq,
        (false, true) => Relation::Geq,
        (false, false) => Relation::Equal,
        (true, true) => Relation::Incomparable,
    }
}

/// Pairwise stochastic-order relations among `n` items, stored per class of
/// identical items: items in the same class are `Equal`, and the relation of
/// two items in different classes is that of their classes.
#[derive(Clone, Debug, PartialEq)]
pub struct OrderRelationMatrix {
    class_of: Vec<usize>,
    num_classes: usize,
    class_relations: Vec<Relation>,
}

impl OrderRelationMatrix {
    /// Validates and compresses an explicit row-major `n x n` relation table.
    pub fn from_entries(n: usize, entries: &[Relation]) -> Result<Self> {
        if entries.len() != n * n {
            return Err(Error::LengthMismatch {
                left: entries.len(),
                right: n * n,
            });
        }
        let at = |i: usize, j: usize| entries[i * n + j];
        for i in 0..n {
            if at(i, i) != Relation::Equal {
                return Err(Error::InconsistentRelations(format!("diagonal entry {i} is not EQUAL")));
            }
            for j in 0..n {
                if at(i, j) != at(j, i).mirror() {
                    return Err(Error::InconsistentRelations(format!(
                        "entries ({i},{j}) and ({j},{i}) are not mirrored"
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                let ij = at(i, j);
                if ij == Relation::Incomparable {
                    continue;
                }
                for k in 0..n {
                    let jk = at(j, k);
                    let ik = at(i, k);
                    let implied = match (ij, jk) {
                        (Relation::Equal, r) | (r, Relation::Equal) => Some(r),
                        (Relation::Leq, Relation::Leq) => Some(Relation::Leq),
                        (Relation::Geq, Relation::Geq) => Some(Relation::Geq),
                        _ => None,
                    };
                    if let Some(r) = implied {
                        if r != Relation::Incomparable && ik != r {
                            return Err(Error::InconsistentRelations(format!(
                                "transitivity fails on ({i},{j},{k})"
                            )));
                        }
                    }
                }
            }
        }

        let mut class_of = vec![usize::MAX; n];
        let mut reps = Vec::new();
        for i in 0..n {
            if class_of[i] != usize::MAX {
                continue;
            }
            let c = reps.len();
            reps.push(i);
            for (j, slot) in class_of.iter_mut().enumerate().skip(i) {
                if at(i, j) == Relation::Equal {
                    *slot = c;
                }
            }
        }
        let k = reps.len();
        let mut class_relations = Vec::with_capacity(k * k);
        for &a in &reps {
            for &b in &reps {
                class_relations.push(at(a, b));
            }
        }
        Ok(Self {
            class_of,
            num_classes: k,
            class_relations,
        })
    }

    pub(crate) fn from_classes(class_of: Vec<usize>, num_classes: usize, class_relations: Vec<Relation>) -> Self {
        debug_assert_eq!(class_relations.len(), num_classes * num_classes);
        Self {
            class_of,
            num_classes,
            class_relations,
        }
    }

    /// Number of items.
    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> Relation {
        self.class_relation(self.class_of[i], self.class_of[j])
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn class_of(&self) -> &[usize] {
        &self.class_of
    }

    pub fn class_relation(&self, a: usize, b: usize) -> Relation {
        self.class_relations[a * self.num_classes + b]
    }

    /// Full row-major `n x n` table.
    pub fn to_entries(&self) -> Vec<Relation> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.get(i, j));
            }
        }
        out
    }
}

/// Stochastic-order relations among all forecasts of `cases`. Identical
/// forecasts are grouped first, so the pairwise work is quadratic in the
/// number of distinct forecasts.
pub fn order_matrix(cases: &CaseCollection) -> OrderRelationMatrix {
    let (class_of, reps) = cases.forecast_classes();
    let k = reps.len();
    let forecasts: Vec<&StepDistribution> = reps.iter().map(|&i| &cases.cases()[i].forecast).collect();
    let rows: Vec<Vec<Relation>> = par::map_range(k, |a| {
        (0..k)
            .map(|b| {
                if a == b {
                    Relation::Equal
                } else if b > a {
                    stochastic_order(forecasts[a], forecasts[b])
                } else {
                    Relation::Incomparable // filled from the mirror below
                }
            })
            .collect()
    });
    let mut rel = vec![Relation::Equal; k * k];
    for a in 0..k {
        for b in a + 1..k {
            let r = rows[a][b];
            rel[a * k + b] = r;
            rel[b * k + a] = r.mirror();
        }
    }
    OrderRelationMatrix::from_classes(class_of, k, rel)
}

/// Thresholds of a truncation together with how they were obtained.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct TruncationSpec {
    pub a: f64,
    pub b: f64,
    pub epsilon: f64,
    pub grid_size: usize,
}

/// Replaces the tails of `f` outside `[a, b)`: mass below `a` moves to an atom
/// at `a`, mass at or above `b` moves to an atom at `b`.
pub fn truncate(f: &StepDistribution, a: f64, b: f64) -> Result<StepDistribution> {
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::InvalidThresholds { a, b });
    }
    if a == b {
        return StepDistribution::dirac(a);
    }
    let mut xs = Vec::with_capacity(f.len() + 2);
    let mut cs = Vec::with_capacity(f.len() + 2);
    let at_a = f.cdf(a);
    if at_a > 0.0 {
        xs.push(a);
        cs.push(at_a);
    }
    for (&x, &c) in f.support().iter().zip(f.cum_probs()) {
        if x > a && x < b {
            xs.push(x);
            cs.push(c);
        }
    }
    xs.push(b);
    cs.push(1.0);
    StepDistribution::from_cdf(&xs, &cs)
}

/// `∫_{-∞}^a F(x)^2 dx + ∫_b^∞ (1 - F(x))^2 dx` for a single step CDF.
pub(crate) fn tail_error_single(f: &StepDistribution, a: f64, b: f64) -> f64 {
    let xs = f.support();
    let cs = f.cum_probs();
    let m = xs.len();
    let mut lower = 0.0;
    // segments [x_k, x_{k+1}) carry value c_k; the last one is unbounded
    for k in 0..m {
        if xs[k] >= a {
            break;
        }
        let hi = if k + 1 < m { xs[k + 1].min(a) } else { a };
        lower += cs[k] * cs[k] * (hi - xs[k]);
    }
    let mut upper = 0.0;
    if b < xs[0] {
        upper += xs[0] - b;
    }
    for k in 0..m.saturating_sub(1) {
        let (lo, hi) = (xs[k].max(b), xs[k + 1]);
        if hi > lo {
            let r = 1.0 - cs[k];
            upper += r * r * (hi - lo);
        }
    }
    lower + upper
}

/// Mean tail error `I(a, b)`: the amount by which truncation to `[a, b]`
/// lowers the mean CRPS when `a <= min y` and `b >= max y`.
pub fn tail_error(cases: &CaseCollection, a: f64, b: f64) -> Result<f64> {
    if a.is_nan() || b.is_nan() || a > b {
        return Err(Error::InvalidThresholds { a, b });
    }
    let terms = par::map_slice(cases.cases(), |c| tail_error_single(&c.forecast, a, b));
    Ok(par::compensated_sum(terms) / cases.len() as f64)
}

/// Options for [`select_thresholds`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThresholdOptions {
    /// Tolerance; defaults to a thousandth of the mean CRPS.
    pub epsilon: Option<f64>,
    /// Pins the lower threshold to a known bound of the outcome domain.
    pub lower_bound: Option<f64>,
    /// Pins the upper threshold to a known bound of the outcome domain.
    pub upper_bound: Option<f64>,
    pub max_widenings: usize,
    pub grid_size: usize,
}

impl Default for ThresholdOptions {
    fn default() -> Self {
        Self {
            epsilon: None,
            lower_bound: None,
            upper_bound: None,
            max_widenings: DEFAULT_MAX_WIDENINGS,
            grid_size: DEFAULT_GRID_SIZE,
        }
    }
}

/// Widens the outcome hull symmetrically in steps of a hundredth of its width
/// until the tail error drops below the tolerance.
pub fn select_thresholds(cases: &CaseCollection, options: &ThresholdOptions) -> Result<TruncationSpec> {
    let epsilon = match options.epsilon {
        Some(e) if e > 0.0 && e.is_finite() => e,
        Some(e) => return Err(Error::Invalid(format!("tolerance {e} must be positive"))),
        None => scoring::mean_crps(cases) / 1000.0,
    };
    let mut a = options.lower_bound.unwrap_or_else(|| cases.min_outcome());
    let mut b = options.upper_bound.unwrap_or_else(|| cases.max_outcome());
    if a > cases.min_outcome() || b < cases.max_outcome() {
        return Err(Error::Invalid(format!(
            "domain bounds [{a}, {b}] do not contain all outcomes"
        )));
    }
    let spec = |a, b| TruncationSpec {
        a,
        b,
        epsilon,
        grid_size: options.grid_size,
    };
    let done = |err: f64| err < epsilon || err == 0.0;

    if done(tail_error(cases, a, b)?) {
        return Ok(spec(a, b));
    }
    let mut delta = (b - a) / 100.0;
    if delta == 0.0 {
        let lo = cases.forecasts().map(|f| f.min_support()).fold(f64::INFINITY, f64::min);
        let hi = cases.forecasts().map(|f| f.max_support()).fold(f64::NEG_INFINITY, f64::max);
        delta = (hi - lo) / 100.0;
        if delta == 0.0 {
            return Ok(spec(a, b));
        }
    }
    let widen_lower = options.lower_bound.is_none();
    let widen_upper = options.upper_bound.is_none();
    if !widen_lower && !widen_upper {
        return Err(Error::ThresholdSearchExhausted {
            epsilon,
            iterations: 0,
        });
    }
    for _ in 0..options.max_widenings {
        if widen_lower {
            a -= delta;
        }
        if widen_upper {
            b += delta;
        }
        if done(tail_error(cases, a, b)?) {
            return Ok(spec(a, b));
        }
    }
    Err(Error::ThresholdSearchExhausted {
        epsilon,
        iterations: options.max_widenings,
    })
}

/// Step CDF that agrees with grid values `cdf[k]` on `[x[k], x[k+1])`, with
/// the last value forced to one.
pub fn from_grid_values(x: &[f64], cdf: &[f64]) -> Result<StepDistribution> {
    if x.len() != cdf.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: cdf.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::Empty("grid"));
    }
    check_finite("grid", x)?;
    check_finite("grid cdf", cdf)?;
    for w in x.windows(2).zip(cdf.windows(2)) {
        let (xw, cw) = w;
        if xw[0] >= xw[1] {
            return Err(Error::InvalidCdf(format!(
                "grid not strictly increasing at {} >= {}",
                xw[0], xw[1]
            )));
        }
        if cw[1] < cw[0] {
            return Err(Error::DecreasingCdf {
                left: xw[0],
                right: xw[1],
                left_value: cw[0],
                right_value: cw[1],
            });
        }
    }
    if let Some(&bad) = cdf.iter().find(|&&c| !(0.0..=1.0).contains(&c)) {
        return Err(Error::InvalidCdf(format!("grid cdf value {bad} outside [0, 1]")));
    }
    let mut values = cdf.to_vec();
    *values.last_mut().unwrap() = 1.0;
    StepDistribution::from_cdf(x, &values)
}

/// Evaluates `evaluator` on an equidistant grid of `grid_size` points from
/// `a` to `b` and returns the resulting step CDF (see [`from_grid_values`]).
pub fn discretize_cdf<F>(evaluator: F, a: f64, b: f64, grid_size: usize) -> Result<StepDistribution>
where
    F: Fn(f64) -> f64,
{
    if grid_size < 2 {
        return Err(Error::Invalid(format!("grid size {grid_size} must be at least 2")));
    }
    if a.is_nan() || b.is_nan() || a >= b {
        return Err(Error::InvalidThresholds { a, b });
    }
    let x = equidistant_grid(a, b, grid_size);
    let cdf: Vec<f64> = x.iter().map(|&t| evaluator(t)).collect();
    from_grid_values(&x, &cdf)
}

pub fn equidistant_grid(a: f64, b: f64, size: usize) -> Vec<f64> {
    let step = (b - a) / (size - 1) as f64;
    let mut x: Vec<f64> = (0..size).map(|k| a + step * k as f64).collect();
    x[size - 1] = b;
    x
}
