//! Decompositions of the mean CRPS into miscalibration (MCB), discrimination
//! (DSC) and uncertainty (UNC), with `mean_score = mcb - dsc + unc`.

use std::collections::HashMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::dist::{order_matrix, truncate, CaseCollection, StepDistribution, TruncationSpec};
use crate::error::{Error, Result};
use crate::isotonic::{idr_fit, pav_blocks, pav_quantile_sorted};
use crate::par;
use crate::scoring::{self, quantile_score_unchecked};

/// Largest collection size for which [`QsMode::Auto`] integrates exactly.
pub const QS_EXACT_MAX_CASES: usize = 1000;
/// Number of levels used by [`QsMode::Auto`] above [`QS_EXACT_MAX_CASES`].
pub const QS_DEFAULT_LEVELS: usize = 1000;
/// Largest ensemble size considered when recognizing ensembles.
pub const MAX_ENSEMBLE_SIZE: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Method {
    #[serde(rename = "CT")]
    Ct,
    #[serde(rename = "ISO")]
    Iso,
    #[serde(rename = "BS")]
    Bs,
    #[serde(rename = "QS")]
    Qs,
    #[serde(rename = "HB")]
    Hb,
    #[serde(rename = "HB_ORIG")]
    HbOrig,
}

impl Method {
    pub const ALL: [Method; 6] = [Method::Ct, Method::Iso, Method::Bs, Method::Qs, Method::Hb, Method::HbOrig];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Ct => "CT",
            Method::Iso => "ISO",
            Method::Bs => "BS",
            Method::Qs => "QS",
            Method::Hb => "HB",
            Method::HbOrig => "HB_ORIG",
        }
    }

    /// Whether MCB and DSC are guaranteed nonnegative.
    pub fn nonnegative(self) -> bool {
        !matches!(self, Method::Hb | Method::HbOrig)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('_', "-").as_str() {
            "ct" => Ok(Method::Ct),
            "iso" => Ok(Method::Iso),
            "bs" => Ok(Method::Bs),
            "qs" => Ok(Method::Qs),
            "hb" => Ok(Method::Hb),
            "hb-orig" => Ok(Method::HbOrig),
            other => Err(Error::Invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// How the quantile-score decomposition integrates over levels.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QsMode {
    /// Exact integration over all levels where the integrand can change.
    Exact,
    /// Midpoint rule on this many equidistant levels.
    Grid(usize),
    /// Exact up to [`QS_EXACT_MAX_CASES`] cases, otherwise a grid of
    /// [`QS_DEFAULT_LEVELS`] levels.
    #[default]
    Auto,
}

impl QsMode {
    fn resolve(self, n: usize) -> Result<QsMode> {
        match self {
            QsMode::Auto if n <= QS_EXACT_MAX_CASES => Ok(QsMode::Exact),
            QsMode::Auto => Ok(QsMode::Grid(QS_DEFAULT_LEVELS)),
            QsMode::Grid(levels) if levels < 2 => Err(Error::Invalid(format!(
                "quantile grid needs at least 2 levels, got {levels}"
            ))),
            mode => Ok(mode),
        }
    }
}

impl fmt::Display for QsMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QsMode::Exact => f.write_str("exact"),
            QsMode::Grid(levels) => write!(f, "grid:{levels}"),
            QsMode::Auto => f.write_str("auto"),
        }
    }
}

impl std::str::FromStr for QsMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(QsMode::Exact),
            "auto" => Ok(QsMode::Auto),
            _ => s
                .strip_prefix("grid:")
                .and_then(|n| n.parse().ok())
                .map(QsMode::Grid)
                .ok_or_else(|| Error::Invalid(format!("unknown quantile mode '{s}' (expected exact, auto or grid:N)"))),
        }
    }
}

/// Details recorded alongside a decomposition.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSpec>,
    /// Number of threshold or level intervals integrated over.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub intervals: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qs_mode: Option<QsMode>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ensemble_size: Option<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub method: Method,
    pub mean_score: f64,
    pub mcb: f64,
    pub dsc: f64,
    pub unc: f64,
    pub metadata: Metadata,
}

impl DecompositionResult {
    /// `mean_score - (mcb - dsc + unc)`.
    pub fn residual(&self) -> f64 {
        self.mean_score - (self.mcb - self.dsc + self.unc)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HersbachVariant {
    Original,
    Modified,
}

/// Bin-level quantities of a Hersbach decomposition.
///
/// For the modified variant `probabilities` are the pooled cumulative
/// probabilities below one, `widths` the mean lengths of the corresponding
/// flat pieces and `frequencies` the width-weighted share of cases with
/// `F(y) <= p`. For the original variant bins run over `0..=m` with the
/// usual average widths and observed frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HersbachDiagnostics {
    pub variant: HersbachVariant,
    pub probabilities: Vec<f64>,
    pub widths: Vec<f64>,
    pub frequencies: Vec<f64>,
    pub ms: f64,
}

/// Options shared by all methods.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DecomposeOptions {
    /// Truncate every forecast to `[a, b]` first.
    pub truncation: Option<TruncationSpec>,
    pub qs_mode: QsMode,
}

/// Forecasts truncated to the thresholds of `spec`.
pub fn truncate_cases(cases: &CaseCollection, spec: &TruncationSpec) -> Result<CaseCollection> {
    cases.map_forecasts(|f| truncate(f, spec.a, spec.b))
}

/// Mean CRPS of the empirical outcome distribution.
pub fn uncertainty(cases: &CaseCollection) -> f64 {
    scoring::mean_crps_constant(&scoring::marginal_distribution(cases), &cases.outcomes())
}

fn clamp_tolerance(mean_score: f64, unc: f64) -> f64 {
    1e-12 * mean_score.abs().max(unc.abs()).max(1.0)
}

fn finish(
    method: Method,
    mean_score: f64,
    mut mcb: f64,
    mut dsc: f64,
    unc: f64,
    mut metadata: Metadata,
) -> Result<DecompositionResult> {
    if method.nonnegative() {
        let tol = clamp_tolerance(mean_score, unc);
        for (name, value) in [("MCB", &mut mcb), ("DSC", &mut dsc)] {
            if *value < -tol {
                return Err(Error::NegativeComponent {
                    method: method.tag(),
                    component: name,
                    value: *value,
                });
            }
            if *value < 0.0 {
                metadata.notes.push(format!("{name} {value:e} clamped to 0"));
                *value = 0.0;
            }
        }
    }
    Ok(DecompositionResult {
        method,
        mean_score,
        mcb,
        dsc,
        unc,
        metadata,
    })
}

fn base_metadata(cases: &CaseCollection, truncation: Option<TruncationSpec>) -> Metadata {
    Metadata {
        n: cases.len(),
        truncation,
        ..Metadata::default()
    }
}

/// Runs one method. With a truncation spec, all forecasts are truncated
/// first and the spec is recorded in the metadata.
pub fn decompose(cases: &CaseCollection, method: Method, options: &DecomposeOptions) -> Result<DecompositionResult> {
    decompose_with_diagnostics(cases, method, options).map(|(r, _)| r)
}

/// Like [`decompose`], also returning bin diagnostics for the Hersbach
/// methods.
pub fn decompose_with_diagnostics(
    cases: &CaseCollection,
    method: Method,
    options: &DecomposeOptions,
) -> Result<(DecompositionResult, Option<HersbachDiagnostics>)> {
    let truncated;
    let cases = match &options.truncation {
        Some(spec) => {
            truncated = truncate_cases(cases, spec)?;
            &truncated
        }
        None => cases,
    };
    let meta = base_metadata(cases, options.truncation);
    let plain = |r: Result<DecompositionResult>| r.map(|r| (r, None));
    match method {
        Method::Ct => plain(ct(cases, meta)),
        Method::Iso => plain(iso(cases, meta)),
        Method::Bs => plain(bs(cases, meta)),
        Method::Qs => plain(qs(cases, options.qs_mode, meta)),
        Method::Hb => hersbach(cases, HersbachVariant::Modified, meta).map(|(r, d)| (r, Some(d))),
        Method::HbOrig => hersbach(cases, HersbachVariant::Original, meta).map(|(r, d)| (r, Some(d))),
    }
}

/// Candille–Talagrand decomposition: cases with identical forecasts are
/// recalibrated to the empirical distribution of their outcomes.
pub fn decompose_ct(cases: &CaseCollection) -> Result<DecompositionResult> {
    ct(cases, base_metadata(cases, None))
}

fn ct(cases: &CaseCollection, meta: Metadata) -> Result<DecompositionResult> {
    let (class_of, reps) = cases.forecast_classes();
    let mut groups: Vec<Vec<f64>> = vec![Vec::new(); reps.len()];
    for (case, &c) in cases.cases().iter().zip(&class_of) {
        groups[c].push(case.outcome);
    }
    let group_totals = par::map_slice(&groups, |ys| {
        let recal = StepDistribution::empirical(ys).expect("groups are nonempty");
        scoring::mean_crps_constant(&recal, ys) * ys.len() as f64
    });
    let n = cases.len() as f64;
    let s_ac = par::compensated_sum(group_totals) / n;
    let s = scoring::mean_crps(cases);
    let unc = uncertainty(cases);
    finish(Method::Ct, s, s - s_ac, unc - s_ac, unc, meta)
}

/// Isotonicity-based decomposition via isotonic distributional regression.
pub fn decompose_iso(cases: &CaseCollection, truncation: Option<&TruncationSpec>) -> Result<DecompositionResult> {
    decompose(
        cases,
        Method::Iso,
        &DecomposeOptions {
            truncation: truncation.copied(),
            ..DecomposeOptions::default()
        },
    )
}

fn iso(cases: &CaseCollection, meta: Metadata) -> Result<DecompositionResult> {
    let fit = idr_fit(cases, &order_matrix(cases))?;
    let s_iso = fit.mean_crps(cases);
    let s = scoring::mean_crps(cases);
    let unc = uncertainty(cases);
    finish(Method::Iso, s, s - s_iso, unc - s_iso, unc, meta)
}

/// Brier-score based decomposition integrated exactly over thresholds.
pub fn decompose_bs(cases: &CaseCollection) -> Result<DecompositionResult> {
    bs(cases, base_metadata(cases, None))
}

fn sorted_unique(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values.dedup();
    values
}

/// Integrated (MCB, DSC) of the Brier decomposition over thresholds `z`
/// and the number of intervals used.
fn bs_components(cases: &CaseCollection) -> (f64, f64, usize) {
    let mut points: Vec<f64> = cases.forecasts().flat_map(|f| f.support().iter().copied()).collect();
    points.extend(cases.outcomes());
    let breaks = sorted_unique(points);
    let intervals = breaks.len() - 1;
    let n = cases.len();
    let parts = par::map_range(intervals, |k| {
        let z = breaks[k];
        let width = breaks[k + 1] - z;
        let mut pairs: Vec<(f64, bool)> = cases
            .cases()
            .iter()
            .map(|c| (c.forecast.cdf(z), c.outcome <= z))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut sums = Vec::new();
        let mut weights = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            if i == n || pairs[i].0 != pairs[start].0 {
                sums.push(pairs[start..i].iter().filter(|p| p.1).count() as f64);
                weights.push((i - start) as f64);
                start = i;
            }
        }
        let mut bs_cal = 0.0;
        for (range, v) in pav_blocks(&sums, &weights) {
            let ones: f64 = sums[range.clone()].iter().sum();
            let w: f64 = weights[range].iter().sum();
            bs_cal += ones * (1.0 - v) * (1.0 - v) + (w - ones) * v * v;
        }
        let bs_f: f64 = pairs
            .iter()
            .map(|&(p, o)| if o { (1.0 - p) * (1.0 - p) } else { p * p })
            .sum();
        let ones: f64 = sums.iter().sum();
        let freq = ones / n as f64;
        let bs_mg = n as f64 * freq * (1.0 - freq);
        let scale = width / n as f64;
        ((bs_f - bs_cal) * scale, (bs_mg - bs_cal) * scale)
    });
    let mcb = par::compensated_sum(parts.iter().map(|p| p.0));
    let dsc = par::compensated_sum(parts.iter().map(|p| p.1));
    (mcb, dsc, intervals)
}

fn bs(cases: &CaseCollection, mut meta: Metadata) -> Result<DecompositionResult> {
    let (mcb, dsc, intervals) = bs_components(cases);
    meta.intervals = Some(intervals);
    let s = scoring::mean_crps(cases);
    let unc = uncertainty(cases);
    finish(Method::Bs, s, mcb, dsc, unc, meta)
}

/// Quantile-score based decomposition.
pub fn decompose_qs(cases: &CaseCollection, mode: QsMode) -> Result<DecompositionResult> {
    qs(cases, mode, base_metadata(cases, None))
}

/// Fractions `l/k` with `1 <= l < k <= order`, in increasing order.
fn farey_interior(order: usize) -> Vec<f64> {
    let mut out = Vec::new();
    let (mut a, mut b, mut c, mut d) = (0usize, 1usize, 1usize, order.max(1));
    while c < d {
        out.push(c as f64 / d as f64);
        let k = (order + b) / d;
        let (e, f) = (k * c - a, k * d - b);
        (a, b, c, d) = (c, d, e, f);
    }
    out
}

/// Levels and weights over which the quantile integrand is evaluated.
fn qs_levels(cases: &CaseCollection, mode: QsMode) -> (Vec<f64>, Vec<f64>) {
    match mode {
        QsMode::Grid(levels) => {
            let w = 1.0 / levels as f64;
            ((0..levels).map(|j| (j as f64 + 0.5) * w).collect(), vec![w; levels])
        }
        _ => {
            let mut cuts = farey_interior(cases.len());
            cuts.extend(cases.forecasts().flat_map(|f| f.cum_probs().iter().copied()).filter(|&c| c < 1.0));
            cuts.push(0.0);
            cuts.push(1.0);
            let cuts = sorted_unique(cuts);
            cuts.windows(2)
                .filter(|w| w[1] > w[0])
                .map(|w| (0.5 * (w[0] + w[1]), w[1] - w[0]))
                .unzip()
        }
    }
}

fn qs(cases: &CaseCollection, mode: QsMode, mut meta: Metadata) -> Result<DecompositionResult> {
    let mode = mode.resolve(cases.len())?;
    let (levels, weights) = qs_levels(cases, mode);
    let n = cases.len();
    let sorted_outcomes = sorted_unique_keep(cases.outcomes());
    let parts = par::map_range(levels.len(), |j| {
        let alpha = levels[j];
        let mut pairs: Vec<(f64, f64)> = cases
            .cases()
            .iter()
            .map(|c| (c.forecast.quantile_unchecked(alpha), c.outcome))
            .collect();
        let qs_f: f64 = pairs.iter().map(|&(x, y)| quantile_score_unchecked(x, y, alpha)).sum();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut runs = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            if i == n || pairs[i].0 != pairs[start].0 {
                runs.push(start..i);
                start = i;
            }
        }
        let ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let qs_cal: f64 = pav_quantile_sorted(&ys, &runs, alpha)
            .into_iter()
            .map(|(range, v)| ys[range].iter().map(|&y| quantile_score_unchecked(v, y, alpha)).sum::<f64>())
            .sum();
        let rank = ((alpha * n as f64).ceil() as usize).clamp(1, n);
        let q_mg = sorted_outcomes[rank - 1];
        let qs_mg: f64 = ys.iter().map(|&y| quantile_score_unchecked(q_mg, y, alpha)).sum();
        // crps is twice the integrated quantile score
        let scale = 2.0 * weights[j] / n as f64;
        ((qs_f - qs_cal) * scale, (qs_mg - qs_cal) * scale)
    });
    let mut mcb = par::compensated_sum(parts.iter().map(|p| p.0));
    let mut dsc = par::compensated_sum(parts.iter().map(|p| p.1));
    meta.intervals = Some(levels.len());
    meta.qs_mode = Some(mode);
    let s = scoring::mean_crps(cases);
    let unc = uncertainty(cases);
    if matches!(mode, QsMode::Grid(_)) {
        // The midpoint rule misses the exact score and uncertainty by a little;
        // estimate the recalibrated score from both sides and split around it
        // so the components add up exactly and stay nonnegative.
        let recalibrated = (0.5 * ((s - mcb) + (unc - dsc))).clamp(0.0, s.min(unc));
        mcb = s - recalibrated;
        dsc = unc - recalibrated;
    }
    finish(Method::Qs, s, mcb, dsc, unc, meta)
}

fn sorted_unique_keep(mut values: Vec<f64>) -> Vec<f64> {
    values.sort_by(f64::total_cmp);
    values
}

/// Mean misspecified-support term: nonzero only for outcomes outside the
/// support of their forecast.
pub fn ms_term(cases: &CaseCollection) -> f64 {
    let terms = cases.cases().iter().map(|c| {
        let f = &c.forecast;
        let y = c.outcome;
        let k = f.support().partition_point(|&x| x <= y);
        if k == 0 {
            f.min_support() - y
        } else {
            let p = f.cum_probs()[k - 1];
            (2.0 * p - 1.0) * (y - f.support()[k - 1])
        }
    });
    par::compensated_sum(terms) / cases.len() as f64
}

/// Hersbach decomposition. DSC is the remainder `MCB + UNC - mean_score`
/// and can be negative.
pub fn decompose_hersbach(
    cases: &CaseCollection,
    variant: HersbachVariant,
) -> Result<(DecompositionResult, HersbachDiagnostics)> {
    hersbach(cases, variant, base_metadata(cases, None))
}

fn hersbach(
    cases: &CaseCollection,
    variant: HersbachVariant,
    mut meta: Metadata,
) -> Result<(DecompositionResult, HersbachDiagnostics)> {
    let (method, mcb, probabilities, widths, frequencies) = match variant {
        HersbachVariant::Modified => {
            let (p, g, f) = hersbach_step_bins(cases);
            let mcb = par::compensated_sum(p.iter().zip(&g).zip(&f).map(|((p, g), f)| g * (p - f) * (p - f)));
            (Method::Hb, mcb, p, g, f)
        }
        HersbachVariant::Original => {
            let m = ensemble_size(cases).ok_or(Error::NotAnEnsemble)?;
            meta.ensemble_size = Some(m);
            let (g, o) = hersbach_original_bins(cases, m);
            let p: Vec<f64> = (0..=m).map(|l| l as f64 / m as f64).collect();
            let mcb = par::compensated_sum(p.iter().zip(&g).zip(&o).map(|((p, g), o)| g * (p - o) * (p - o)));
            (Method::HbOrig, mcb, p, g, o)
        }
    };
    let s = scoring::mean_crps(cases);
    let unc = uncertainty(cases);
    let result = finish(method, s, mcb, mcb + unc - s, unc, meta)?;
    let diagnostics = HersbachDiagnostics {
        variant,
        probabilities,
        widths,
        frequencies,
        ms: ms_term(cases),
    };
    Ok((result, diagnostics))
}

/// Finite-support bins: pooled cumulative probabilities `p_j < 1`, mean
/// widths `g_j` of the pieces where `F_i = p_j`, and width-weighted
/// frequencies of `F_i(y_i) <= p_j`.
fn hersbach_step_bins(cases: &CaseCollection) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let probs = sorted_unique(
        cases
            .forecasts()
            .flat_map(|f| f.cum_probs().iter().copied())
            .filter(|&c| c < 1.0)
            .collect(),
    );
    let index: HashMap<u64, usize> = probs.iter().enumerate().map(|(j, p)| (p.to_bits(), j)).collect();
    let mut width = vec![Vec::new(); probs.len()];
    let mut hit = vec![Vec::new(); probs.len()];
    for c in cases.cases() {
        let f = &c.forecast;
        let at_y = f.cdf(c.outcome);
        for k in 0..f.len() - 1 {
            let p = f.cum_probs()[k];
            let j = index[&p.to_bits()];
            let w = f.support()[k + 1] - f.support()[k];
            width[j].push(w);
            hit[j].push(if at_y <= p { w } else { 0.0 });
        }
    }
    let n = cases.len() as f64;
    let g: Vec<f64> = width.iter().map(|w| par::compensated_sum(w.iter().copied()) / n).collect();
    let f: Vec<f64> = hit
        .iter()
        .zip(&g)
        .map(|(h, &g)| {
            if g > 0.0 {
                par::compensated_sum(h.iter().copied()) / n / g
            } else {
                0.0
            }
        })
        .collect();
    (probs, g, f)
}

/// Smallest common `m` such that every forecast is an equal-weight ensemble
/// of `m` members (repeated members allowed).
pub fn ensemble_size(cases: &CaseCollection) -> Option<usize> {
    let probs = sorted_unique(cases.forecasts().flat_map(|f| f.cum_probs().iter().copied()).collect());
    (1..=MAX_ENSEMBLE_SIZE).find(|&m| {
        probs.iter().all(|&c| {
            let scaled = c * m as f64;
            (scaled - scaled.round()).abs() <= 1e-9 * m as f64
        })
    })
}

/// Members of `f` viewed as an `m`-member ensemble, in increasing order.
fn ensemble_members(f: &StepDistribution, m: usize) -> Vec<f64> {
    let mut members = Vec::with_capacity(m);
    let mut prev = 0usize;
    for (&x, &c) in f.support().iter().zip(f.cum_probs()) {
        let count = (c * m as f64).round() as usize;
        members.extend(std::iter::repeat_n(x, count.saturating_sub(prev)));
        prev = count;
    }
    members
}

/// Original Hersbach bins `0..=m`: average widths and observed frequencies.
fn hersbach_original_bins(cases: &CaseCollection, m: usize) -> (Vec<f64>, Vec<f64>) {
    let n = cases.len() as f64;
    let mut alpha = vec![0.0; m + 1];
    let mut beta = vec![0.0; m + 1];
    let mut below = 0usize;
    let mut above = 0usize;
    for c in cases.cases() {
        let x = ensemble_members(&c.forecast, m);
        let y = c.outcome;
        if y < x[0] {
            below += 1;
            beta[0] += x[0] - y;
        }
        if y > x[m - 1] {
            above += 1;
            alpha[m] += y - x[m - 1];
        }
        for l in 1..m {
            let (lo, hi) = (x[l - 1], x[l]);
            if y > hi {
                alpha[l] += hi - lo;
            } else if y < lo {
                beta[l] += hi - lo;
            } else if lo < y && y < hi {
                alpha[l] += y - lo;
                beta[l] += hi - y;
            }
        }
    }
    let mut g = vec![0.0; m + 1];
    let mut o = vec![0.0; m + 1];
    for l in 1..m {
        g[l] = (alpha[l] + beta[l]) / n;
        o[l] = if g[l] > 0.0 { beta[l] / n / g[l] } else { 0.0 };
    }
    o[0] = below as f64 / n;
    g[0] = if below > 0 { beta[0] / n / o[0] } else { 0.0 };
    let above_freq = above as f64 / n;
    o[m] = 1.0 - above_freq;
    g[m] = if above > 0 { alpha[m] / n / above_freq } else { 0.0 };
    (g, o)
}

/// One checked inequality `lhs >= rhs` (or `lhs > rhs` when `strict`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    /// `lhs - rhs`; the check passes when this is at least `-slack`.
    pub margin: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub slack: f64,
    pub entries: Vec<AuditEntry>,
}

/// Absolute slack for inequality checks.
pub const AUDIT_SLACK: f64 = 1e-9;
/// Relative tolerance for the exactness identity.
pub const EXACTNESS_TOLERANCE: f64 = 1e-10;

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &AuditEntry> {
        self.entries.iter().filter(|e| !e.passed)
    }

    fn check(&mut self, name: impl Into<String>, lhs: f64, rhs: f64) {
        let margin = lhs - rhs;
        self.entries.push(AuditEntry {
            name: name.into(),
            lhs,
            rhs,
            margin,
            passed: margin >= -self.slack,
        });
    }
}

/// Checks every inequality of the chain
/// `S >= MCB_CT >= MCB_ISO >= max(MCB_BS, MCB_QS)` whose operands are present
/// among `results`, plus exactness and (where guaranteed) nonnegativity of
/// each result.
pub fn audit_results(results: &[DecompositionResult]) -> AuditReport {
    let mut report = AuditReport {
        slack: AUDIT_SLACK,
        entries: Vec::new(),
    };
    let get = |m: Method| results.iter().find(|r| r.method == m && r.metadata.truncation.is_none());
    let mean_score = results.first().map(|r| r.mean_score);
    let ordered = [
        get(Method::Ct).map(|r| ("MCB_CT", r.mcb)),
        get(Method::Iso).map(|r| ("MCB_ISO", r.mcb)),
    ];
    let mut upper: Option<(&str, f64)> = mean_score.map(|s| ("S", s));
    for item in ordered.into_iter().flatten() {
        if let Some((name, value)) = upper {
            report.check(format!("{name} >= {}", item.0), value, item.1);
        }
        upper = Some(item);
    }
    for m in [Method::Bs, Method::Qs] {
        if let (Some((name, value)), Some(r)) = (upper, get(m)) {
            report.check(format!("{name} >= MCB_{}", m.tag()), value, r.mcb);
        }
    }
    for r in results {
        let tol = EXACTNESS_TOLERANCE * r.mean_score.abs().max(r.unc.abs()).max(1e-300);
        let name = format!("exactness {}", r.method);
        let residual = r.residual().abs();
        report.entries.push(AuditEntry {
            name,
            lhs: r.mean_score,
            rhs: r.mcb - r.dsc + r.unc,
            margin: -residual,
            passed: residual <= tol,
        });
        if r.method.nonnegative() {
            report.check(format!("MCB_{} >= 0", r.method), r.mcb, 0.0);
            report.check(format!("DSC_{} >= 0", r.method), r.dsc, 0.0);
        }
    }
    report
}

/// Adds the truncation chain `MCB_ISO >= MCB_ISO^(a,b) >= MCB_BS^(a,b) >
/// MCB_BS - eps` given untruncated and truncated results.
pub fn audit_truncation(
    report: &mut AuditReport,
    full: &[DecompositionResult],
    truncated: &[DecompositionResult],
    epsilon: f64,
) {
    let find = |rs: &[DecompositionResult], m: Method| rs.iter().find(|r| r.method == m).map(|r| r.mcb);
    if let (Some(iso), Some(iso_t), Some(bs_t), Some(bs)) = (
        find(full, Method::Iso),
        find(truncated, Method::Iso),
        find(truncated, Method::Bs),
        find(full, Method::Bs),
    ) {
        report.check("MCB_ISO >= MCB_ISO^(a,b)", iso, iso_t);
        report.check("MCB_ISO^(a,b) >= MCB_BS^(a,b)", iso_t, bs_t);
        report.check("MCB_BS^(a,b) > MCB_BS - eps", bs_t, bs - epsilon);
    }
}

/// Computes CT, ISO, BS and QS and audits the inequality chain; with a
/// truncation spec also ISO and BS on the truncated forecasts.
pub fn audit_inequalities(
    cases: &CaseCollection,
    truncation: Option<&TruncationSpec>,
    qs_mode: QsMode,
) -> Result<AuditReport> {
    let options = DecomposeOptions {
        truncation: None,
        qs_mode,
    };
    let full = [Method::Ct, Method::Iso, Method::Bs, Method::Qs]
        .iter()
        .map(|&m| decompose(cases, m, &options))
        .collect::<Result<Vec<_>>>()?;
    let mut report = audit_results(&full);
    if let Some(spec) = truncation {
        let options = DecomposeOptions {
            truncation: Some(*spec),
            qs_mode,
        };
        let truncated = [Method::Iso, Method::Bs]
            .iter()
            .map(|&m| decompose(cases, m, &options))
            .collect::<Result<Vec<_>>>()?;
        audit_truncation(&mut report, &full, &truncated, spec.epsilon);
    }
    Ok(report)
}
