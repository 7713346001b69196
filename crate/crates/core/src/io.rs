//! Input documents, decomposition reports, the MCB–DSC plot and the
//! validation routine behind the command-line tool.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::decomp::{
    audit_inequalities, audit_results, decompose_with_diagnostics, AuditReport, DecomposeOptions, DecompositionResult,
    HersbachDiagnostics, Method, QsMode,
};
use crate::dist::{
    discretize_cdf, from_grid_values, order_matrix, select_thresholds, tail_error, truncate, CaseCollection,
    ForecastCase, StepDistribution, ThresholdOptions, TruncationSpec, DEFAULT_GRID_SIZE,
};
use crate::error::{Error, Result};
use crate::isotonic::antitonic_binary_fit;
use crate::oracles::{crps_numeric, dykstra_antitonic, OracleConfig};
use crate::scoring;

/// Forecast as written in an input document.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ForecastSpec {
    Discrete { points: Vec<f64>, masses: Vec<f64> },
    Ensemble { members: Vec<f64> },
    /// CDF values on a strictly increasing grid.
    Grid { x: Vec<f64>, cdf: Vec<f64> },
}

impl ForecastSpec {
    pub fn to_distribution(&self) -> Result<StepDistribution> {
        match self {
            ForecastSpec::Discrete { points, masses } => StepDistribution::new(points, masses),
            ForecastSpec::Ensemble { members } => StepDistribution::empirical(members),
            ForecastSpec::Grid { x, cdf } => from_grid_values(x, cdf),
        }
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, ForecastSpec::Grid { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseRecord {
    pub forecast: ForecastSpec,
    pub outcome: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub cases: Vec<CaseRecord>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    /// Ensemble rows `x1,...,xm,outcome`.
    Csv,
}

impl std::str::FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(Error::Invalid(format!("unknown input format '{other}'"))),
        }
    }
}

fn parse_error(location: impl Into<String>, message: impl ToString) -> Error {
    Error::Parse {
        location: location.into(),
        message: message.to_string(),
    }
}

impl InputDocument {
    pub fn parse(bytes: &[u8], format: Format) -> Result<Self> {
        match format {
            Format::Json => serde_json::from_slice(bytes)
                .map_err(|e| parse_error(format!("line {}, column {}", e.line(), e.column()), e)),
            Format::Csv => parse_csv(bytes),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("documents serialize")
    }

    pub fn has_grid(&self) -> bool {
        self.cases.iter().any(|c| c.forecast.is_grid())
    }

    /// Converts every record, naming the offending case on failure.
    pub fn to_cases(&self) -> Result<CaseCollection> {
        if self.cases.is_empty() {
            return Err(parse_error("cases", "document contains no cases"));
        }
        let cases = self
            .cases
            .iter()
            .enumerate()
            .map(|(i, rec)| {
                let forecast = rec
                    .forecast
                    .to_distribution()
                    .map_err(|e| parse_error(format!("cases[{i}].forecast"), e))?;
                ForecastCase::new(forecast, rec.outcome).map_err(|e| parse_error(format!("cases[{i}].outcome"), e))
            })
            .collect::<Result<Vec<_>>>()?;
        CaseCollection::new(cases)
    }
}

fn parse_csv(bytes: &[u8]) -> Result<InputDocument> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(bytes);
    let mut cases = Vec::new();
    let mut width = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(idx + 1, |p| p.line() as usize);
            parse_error(format!("row {row}"), e)
        })?;
        let row = record.position().map_or(idx + 1, |p| p.line() as usize);
        let parsed: Vec<std::result::Result<f64, _>> = record.iter().map(str::parse::<f64>).collect();
        // a first row without any number is a header
        if cases.is_empty() && width.is_none() && parsed.iter().all(|p| p.is_err()) {
            width = Some(record.len());
            continue;
        }
        if record.len() < 2 {
            return Err(parse_error(format!("row {row}"), "need at least one member and an outcome"));
        }
        if let Some(w) = width {
            if record.len() != w {
                return Err(parse_error(
                    format!("row {row}"),
                    format!("expected {w} columns, found {}", record.len()),
                ));
            }
        }
        width = Some(record.len());
        let mut values = Vec::with_capacity(record.len());
        for (col, (field, value)) in record.iter().zip(parsed).enumerate() {
            match value {
                Ok(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(parse_error(
                        format!("row {row}, column {}", col + 1),
                        format!("'{field}' is not a finite number"),
                    ))
                }
            }
        }
        let outcome = values.pop().unwrap();
        cases.push(CaseRecord {
            forecast: ForecastSpec::Ensemble { members: values },
            outcome,
        });
    }
    Ok(InputDocument { label: None, cases })
}

/// Parses a document into cases without any truncation.
pub fn parse_input(bytes: &[u8], format: Format) -> Result<CaseCollection> {
    InputDocument::parse(bytes, format)?.to_cases()
}

/// How thresholds are chosen before decomposing.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TruncationOptions {
    pub epsilon: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub grid_size: Option<usize>,
}

impl TruncationOptions {
    fn requested(&self) -> bool {
        self.epsilon.is_some() || self.a.is_some() || self.b.is_some() || self.grid_size.is_some()
    }
}

/// Cases ready for decomposition together with the truncation applied.
#[derive(Clone, Debug)]
pub struct PreparedInput {
    pub label: Option<String>,
    pub cases: CaseCollection,
    pub truncation: Option<TruncationSpec>,
}

/// Converts a document into cases. Grid forecasts trigger threshold
/// selection and are re-evaluated on an equidistant grid over `[a, b]`;
/// other kinds are truncated only when options ask for it.
pub fn prepare_input(doc: &InputDocument, options: &TruncationOptions) -> Result<PreparedInput> {
    let cases = doc.to_cases()?;
    if !(doc.has_grid() || options.requested()) {
        return Ok(PreparedInput {
            label: doc.label.clone(),
            cases,
            truncation: None,
        });
    }
    let grid_size = options.grid_size.unwrap_or(DEFAULT_GRID_SIZE);
    let spec = match (options.a, options.b) {
        (Some(a), Some(b)) => {
            if a > cases.min_outcome() || b < cases.max_outcome() {
                return Err(Error::Invalid(format!(
                    "thresholds [{a}, {b}] do not contain all outcomes"
                )));
            }
            let epsilon = match options.epsilon {
                Some(e) => e,
                None => scoring::mean_crps(&cases) / 1000.0,
            };
            let err = tail_error(&cases, a, b)?;
            if err >= epsilon {
                return Err(Error::Invalid(format!(
                    "tail error {err} at [{a}, {b}] is not below tolerance {epsilon}"
                )));
            }
            TruncationSpec {
                a,
                b,
                epsilon,
                grid_size,
            }
        }
        (a, b) => select_thresholds(
            &cases,
            &ThresholdOptions {
                epsilon: options.epsilon,
                lower_bound: a,
                upper_bound: b,
                grid_size,
                ..ThresholdOptions::default()
            },
        )?,
    };
    let converted = doc
        .cases
        .iter()
        .zip(cases.cases())
        .enumerate()
        .map(|(i, (rec, case))| {
            let f = &case.forecast;
            let forecast = if rec.forecast.is_grid() && spec.a < spec.b {
                discretize_cdf(|x| f.cdf(x), spec.a, spec.b, grid_size)
            } else {
                truncate(f, spec.a, spec.b)
            }
            .map_err(|e| parse_error(format!("cases[{i}].forecast"), e))?;
            ForecastCase::new(forecast, case.outcome)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PreparedInput {
        label: doc.label.clone(),
        cases: CaseCollection::new(converted)?,
        truncation: Some(spec),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the canonical case data, hex encoded.
    pub input_digest: String,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationSpec>,
    pub qs_mode: QsMode,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub results: Vec<DecompositionResult>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub hersbach: Vec<HersbachDiagnostics>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub audit: Option<AuditReport>,
    pub provenance: Provenance,
}

impl ReportDocument {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        serde_json::from_slice(bytes).map_err(|e| parse_error(format!("line {}, column {}", e.line(), e.column()), e))
    }

    /// One row per method: `method,mean_score,mcb,dsc,unc,n`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("method,mean_score,mcb,dsc,unc,n\n");
        for r in &self.results {
            let _ = writeln!(out, "{},{},{},{},{},{}", r.method, r.mean_score, r.mcb, r.dsc, r.unc, r.metadata.n);
        }
        out
    }

    pub fn to_table(&self) -> String {
        let mut out = String::new();
        if let Some(label) = &self.label {
            let _ = writeln!(out, "{label}");
        }
        let _ = writeln!(out, "{:<8}{:>16}{:>16}{:>16}{:>16}", "method", "mean_score", "mcb", "dsc", "unc");
        for r in &self.results {
            let _ = writeln!(
                out,
                "{:<8}{:>16.10}{:>16.10}{:>16.10}{:>16.10}",
                r.method.tag(),
                r.mean_score,
                r.mcb,
                r.dsc,
                r.unc
            );
        }
        if let Some(audit) = &self.audit {
            let _ = writeln!(out, "\naudit: {}", if audit.passed() { "PASS" } else { "FAIL" });
            for e in &audit.entries {
                let _ = writeln!(
                    out,
                    "  {} {:<32} margin {:.3e}",
                    if e.passed { "PASS" } else { "FAIL" },
                    e.name,
                    e.margin
                );
            }
        }
        out
    }
}

/// Hex SHA-256 over the bit patterns of every support point, cumulative
/// probability and outcome.
pub fn case_digest(cases: &CaseCollection) -> String {
    let mut hasher = Sha256::new();
    for c in cases.cases() {
        let f = &c.forecast;
        hasher.update((f.len() as u64).to_le_bytes());
        for (&x, &p) in f.support().iter().zip(f.cum_probs()) {
            hasher.update(x.to_bits().to_le_bytes());
            hasher.update(p.to_bits().to_le_bytes());
        }
        hasher.update(c.outcome.to_bits().to_le_bytes());
    }
    hasher.finalize().iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Runs the requested methods. An audit is attached when at least two of
/// CT, ISO, BS and QS are requested.
pub fn run_decompose(input: &PreparedInput, methods: &[Method], qs_mode: QsMode) -> Result<ReportDocument> {
    if methods.is_empty() {
        return Err(Error::Invalid("no methods requested".into()));
    }
    let mut methods = methods.to_vec();
    methods.sort();
    methods.dedup();
    let options = DecomposeOptions {
        truncation: input.truncation,
        qs_mode,
    };
    let mut results = Vec::with_capacity(methods.len());
    let mut hersbach = Vec::new();
    for &m in &methods {
        let (r, d) = decompose_with_diagnostics(&input.cases, m, &options)
            .map_err(|e| Error::Invalid(format!("{m}: {e}")))?;
        results.push(r);
        hersbach.extend(d);
    }
    let comparable = methods.iter().filter(|m| m.nonnegative()).count();
    let audit = (comparable >= 2).then(|| audit_results(&results));
    Ok(ReportDocument {
        label: input.label.clone(),
        results,
        hersbach,
        audit,
        provenance: Provenance {
            input_digest: case_digest(&input.cases),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            truncation: input.truncation,
            qs_mode,
        },
    })
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

fn nice_step(span: f64, target: usize) -> f64 {
    let raw = span / target as f64;
    let mag = 10f64.powf(raw.log10().floor());
    let norm = raw / mag;
    let nice = if norm < 1.5 {
        1.0
    } else if norm < 3.5 {
        2.0
    } else if norm < 7.5 {
        5.0
    } else {
        10.0
    };
    nice * mag
}

struct PlotPoint {
    label: String,
    mcb: f64,
    dsc: f64,
    score: f64,
}

/// MCB–DSC scatter with unit-slope isolines of constant mean score.
/// MCB runs along the x-axis unless `swap_axes` is set.
pub fn render_mcb_dsc_svg(reports: &[ReportDocument], swap_axes: bool) -> Result<String> {
    let mut points = Vec::new();
    for (i, report) in reports.iter().enumerate() {
        let name = report.label.clone().unwrap_or_else(|| format!("report {}", i + 1));
        for r in &report.results {
            let label = if reports.len() > 1 {
                format!("{name}: {}", r.method)
            } else {
                r.method.to_string()
            };
            points.push((
                PlotPoint {
                    label,
                    mcb: r.mcb,
                    dsc: r.dsc,
                    score: r.mean_score,
                },
                r.unc,
            ));
        }
    }
    let Some(&(_, unc)) = points.first() else {
        return Err(Error::Empty("reports"));
    };
    if let Some(&(_, other)) = points.iter().find(|(_, u)| (u - unc).abs() > 1e-9) {
        return Err(Error::MixedUncertainty(unc, other));
    }
    let points: Vec<PlotPoint> = points.into_iter().map(|(p, _)| p).collect();

    // (u, v) are the plotted coordinates
    let uv = |p: &PlotPoint| if swap_axes { (p.dsc, p.mcb) } else { (p.mcb, p.dsc) };
    let (x_name, y_name) = if swap_axes { ("DSC", "MCB") } else { ("MCB", "DSC") };
    let mut umin = 0f64;
    let mut vmin = 0f64;
    let mut umax = 0f64;
    let mut vmax = 0f64;
    for p in &points {
        let (u, v) = uv(p);
        umin = umin.min(u);
        umax = umax.max(u);
        vmin = vmin.min(v);
        vmax = vmax.max(v);
    }
    let span = (umax - umin).max(vmax - vmin).max(unc * 0.1).max(1e-12);
    let pad = 0.1 * span;
    let (umin, vmin) = (umin - if umin < 0.0 { pad } else { 0.0 }, vmin - if vmin < 0.0 { pad } else { 0.0 });
    let (umax, vmax) = (umax + pad, vmax + pad);

    let (width, height, margin) = (640.0, 640.0, 70.0);
    let plot_w = width - 2.0 * margin;
    let plot_h = height - 2.0 * margin;
    let sx = |u: f64| margin + (u - umin) / (umax - umin) * plot_w;
    let sy = |v: f64| height - margin - (v - vmin) / (vmax - vmin) * plot_h;

    // score s satisfies dsc = mcb + unc - s, i.e. v = u + c with c = ±(unc - s)
    let offset = |s: f64| if swap_axes { s - unc } else { unc - s };
    let mut levels: Vec<f64> = Vec::new();
    for p in &points {
        if levels.iter().all(|l| (l - p.score).abs() > 1e-9) {
            levels.push(p.score);
        }
    }
    // score range over the visible box
    let corners = [(umin, vmin), (umin, vmax), (umax, vmin), (umax, vmax)];
    let score_at = |(u, v): (f64, f64)| if swap_axes { v - u + unc } else { u - v + unc };
    let smin = corners.iter().map(|&c| score_at(c)).fold(f64::INFINITY, f64::min);
    let smax = corners.iter().map(|&c| score_at(c)).fold(f64::NEG_INFINITY, f64::max);
    let step = nice_step(smax - smin, 6);
    let mut s = (smin / step).ceil() * step;
    let mut extra = Vec::new();
    while s < smax {
        if levels.iter().all(|l| (l - s).abs() > 0.25 * step) {
            extra.push(s);
        }
        s += step;
    }
    levels.extend(extra);
    let mut k = 1;
    while levels.len() < 4 {
        levels.push(smin + (smax - smin) * k as f64 / 5.0);
        k += 1;
    }
    levels.sort_by(f64::total_cmp);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(svg, r#"<rect x="0" y="0" width="{width}" height="{height}" fill="white"/>"#);
    let _ = writeln!(
        svg,
        r#"<rect x="{margin}" y="{margin}" width="{plot_w}" height="{plot_h}" fill="none" stroke="black"/>"#
    );
    let _ = writeln!(svg, r##"<g class="isolines" stroke="#999999" stroke-dasharray="4 3">"##);
    let mut labels = String::new();
    for &level in &levels {
        let c = offset(level);
        let lo = umin.max(vmin - c);
        let hi = umax.min(vmax - c);
        if hi <= lo {
            continue;
        }
        let (x1, y1, x2, y2) = (sx(lo), sy(lo + c), sx(hi), sy(hi + c));
        let _ = writeln!(svg, r#"<line x1="{x1:.2}" y1="{y1:.2}" x2="{x2:.2}" y2="{y2:.2}"/>"#);
        let _ = writeln!(
            labels,
            r##"<text class="isoline-label" x="{:.2}" y="{:.2}" fill="#666666" text-anchor="end">S = {level:.4}</text>"##,
            x2 - 4.0,
            y2 + 14.0
        );
    }
    svg.push_str("</g>\n");
    svg.push_str(&labels);

    // axes ticks
    for (axis, lo, hi) in [("x", umin, umax), ("y", vmin, vmax)] {
        let step = nice_step(hi - lo, 5);
        let mut t = (lo / step).ceil() * step;
        while t <= hi + 1e-12 * step {
            let value = if t.abs() < 1e-12 * step { 0.0 } else { t };
            if axis == "x" {
                let x = sx(value);
                let _ = writeln!(
                    svg,
                    r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle">{}</text>"#,
                    height - margin + 18.0,
                    format_tick(value)
                );
            } else {
                let y = sy(value);
                let _ = writeln!(
                    svg,
                    r#"<text x="{:.2}" y="{:.2}" text-anchor="end">{}</text>"#,
                    margin - 6.0,
                    y + 4.0,
                    format_tick(value)
                );
            }
            t += step;
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.2}" y="{:.2}" text-anchor="middle" font-size="14">{x_name}</text>"#,
        width / 2.0,
        height - 20.0
    );
    let _ = writeln!(
        svg,
        r#"<text x="20" y="{:.2}" text-anchor="middle" font-size="14" transform="rotate(-90 20 {:.2})">{y_name}</text>"#,
        height / 2.0,
        height / 2.0
    );
    let _ = writeln!(
        svg,
        r#"<text class="unc" x="{:.2}" y="{:.2}" font-size="13">UNC = {unc:.4}</text>"#,
        margin + 8.0,
        margin + 18.0
    );

    // coinciding points share one marker and a joined label
    let mut groups: Vec<(f64, f64, Vec<String>)> = Vec::new();
    for p in &points {
        let (x, y) = (sx(uv(p).0), sy(uv(p).1));
        match groups.iter_mut().find(|g| (g.0 - x).abs() < 0.5 && (g.1 - y).abs() < 0.5) {
            Some(g) => g.2.push(p.label.clone()),
            None => groups.push((x, y, vec![p.label.clone()])),
        }
    }
    svg.push_str("<g class=\"points\">\n");
    for (x, y, names) in &groups {
        let _ = writeln!(svg, r#"<circle cx="{x:.2}" cy="{y:.2}" r="4" fill="black"/>"#);
        let _ = writeln!(
            svg,
            r#"<text x="{:.2}" y="{:.2}">{}</text>"#,
            x + 7.0,
            y - 7.0,
            escape(&names.join(", "))
        );
    }
    svg.push_str("</g>\n</svg>\n");
    Ok(svg)
}

fn format_tick(v: f64) -> String {
    let s = format!("{v:.6}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Outcome of [`run_validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub text: String,
    pub ok: bool,
}

/// Audits the inequality chain on `cases` and cross-checks the exact
/// algorithms against the oracles on a seeded subsample.
pub fn run_validate(cases: &CaseCollection, seed: u64) -> Result<ValidationReport> {
    run_validate_with(cases, seed, |_| {})
}

/// [`run_validate`] with a hook that may alter the computed decompositions
/// before they are audited.
pub fn run_validate_with<F>(cases: &CaseCollection, seed: u64, tamper: F) -> Result<ValidationReport>
where
    F: FnOnce(&mut Vec<DecompositionResult>),
{
    let options = DecomposeOptions::default();
    let mut results = [Method::Ct, Method::Iso, Method::Bs, Method::Qs]
        .iter()
        .map(|&m| crate::decomp::decompose(cases, m, &options))
        .collect::<Result<Vec<_>>>()?;
    tamper(&mut results);
    let mut report = audit_results(&results);
    if results.is_empty() {
        report = audit_inequalities(cases, None, QsMode::Auto)?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let config = OracleConfig {
        seed,
        ..OracleConfig::default()
    };
    let picks = sample(&mut rng, cases.len(), cases.len().min(10)).into_vec();
    for i in picks {
        let c = &cases.cases()[i];
        let exact = scoring::crps(&c.forecast, c.outcome);
        let numeric = crps_numeric(&c.forecast, c.outcome, &config)?;
        let span = c.forecast.max_support().max(c.outcome) - c.forecast.min_support().min(c.outcome) + 2.0;
        let tol = 1e-4 * (span / 10.0).max(1.0);
        report.entries.push(crate::decomp::AuditEntry {
            name: format!("crps vs numeric (case {i})"),
            lhs: exact,
            rhs: numeric,
            margin: tol - (exact - numeric).abs(),
            passed: (exact - numeric).abs() <= tol,
        });
    }

    for round in 0..5 {
        let size = cases.len().min(6);
        let idx = sample(&mut rng, cases.len(), size).into_vec();
        let sub = CaseCollection::new(idx.iter().map(|&i| cases.cases()[i].clone()).collect())?;
        let relations = order_matrix(&sub);
        let pivot = sub.cases()[rng.random_range(0..size)].outcome;
        let ind: Vec<bool> = sub.cases().iter().map(|c| c.outcome <= pivot).collect();
        let exact = antitonic_binary_fit(&ind, &relations)?;
        let targets: Vec<f64> = ind.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
        let oracle = dykstra_antitonic(&targets, &relations, &config)?;
        let diff = exact
            .iter()
            .zip(&oracle.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        report.entries.push(crate::decomp::AuditEntry {
            name: format!("antitonic fit vs Dykstra (draw {round})"),
            lhs: diff,
            rhs: 1e-8,
            margin: 1e-8 - diff,
            passed: oracle.converged && diff <= 1e-8,
        });
    }

    let mut text = String::new();
    for e in &report.entries {
        let _ = writeln!(
            text,
            "{} {:<40} margin {:+.3e}",
            if e.passed { "PASS" } else { "FAIL" },
            e.name,
            e.margin
        );
    }
    let ok = report.passed();
    let _ = writeln!(text, "{}", if ok { "all checks passed" } else { "validation FAILED" });
    Ok(ValidationReport { text, ok })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TWO_CASES: &str = r#"{"label":"two cases","cases":[
        {"forecast":{"kind":"discrete","points":[1,2],"masses":[0.5,0.5]},"outcome":3},
        {"forecast":{"kind":"discrete","points":[0,3],"masses":[0.5,0.5]},"outcome":0}]}"#;

    #[test]
    fn parses_json_and_round_trips() {
        let doc = InputDocument::parse(TWO_CASES.as_bytes(), Format::Json).unwrap();
        assert_eq!(doc.to_cases().unwrap().len(), 2);
        let again = InputDocument::parse(doc.to_json().as_bytes(), Format::Json).unwrap();
        assert_eq!(doc, again);
    }

    #[test]
    fn csv_ensembles() {
        let row: Vec<String> = (0..52).map(|k| k.to_string()).collect();
        let text = format!("{},1.5\n{},2.5\n", row.join(","), row.join(","));
        let cases = parse_input(text.as_bytes(), Format::Csv).unwrap();
        assert_eq!(cases.len(), 2);
        assert_eq!(cases.cases()[0].forecast.len(), 52);
    }

    #[test]
    fn csv_errors_name_row_and_column() {
        let err = parse_input(b"1,2,3\n1,x,3\n", Format::Csv).unwrap_err();
        match err {
            Error::Parse { location, .. } => assert_eq!(location, "row 2, column 2"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn json_errors_name_position() {
        let bad = TWO_CASES.replace("[0.5,0.5]}", "[0.5,\"a\"]}");
        assert!(matches!(
            InputDocument::parse(bad.as_bytes(), Format::Json),
            Err(Error::Parse { .. })
        ));
        let negative = TWO_CASES.replace("[0.5,0.5]}", "[0.5,-1]}");
        let err = parse_input(negative.as_bytes(), Format::Json).unwrap_err();
        assert!(matches!(err, Error::Parse { ref location, .. } if location == "cases[0].forecast"));
    }

    #[test]
    fn report_round_trips() {
        let doc = InputDocument::parse(TWO_CASES.as_bytes(), Format::Json).unwrap();
        let input = prepare_input(&doc, &TruncationOptions::default()).unwrap();
        let report = run_decompose(&input, &Method::ALL, QsMode::Exact).unwrap();
        assert!(report.audit.as_ref().unwrap().passed());
        let back = ReportDocument::from_json(report.to_json().as_bytes()).unwrap();
        assert_eq!(report, back);
        assert!(report.to_csv().lines().count() == 7);
    }

    #[test]
    fn svg_is_deterministic() {
        let doc = InputDocument::parse(TWO_CASES.as_bytes(), Format::Json).unwrap();
        let input = prepare_input(&doc, &TruncationOptions::default()).unwrap();
        let report = run_decompose(&input, &Method::ALL, QsMode::Exact).unwrap();
        let a = render_mcb_dsc_svg(std::slice::from_ref(&report), false).unwrap();
        let b = render_mcb_dsc_svg(std::slice::from_ref(&report), false).unwrap();
        assert_eq!(a, b);
        assert!(a.matches("class=\"isoline-label\"").count() >= 4);
        assert!(a.contains("CT, ISO"));
        assert!(a.contains("UNC = 0.7500"));
        assert!(matches!(render_mcb_dsc_svg(&[], false), Err(Error::Empty(_))));
    }

    #[test]
    fn validate_flags_tampering() {
        let cases = parse_input(TWO_CASES.as_bytes(), Format::Json).unwrap();
        assert!(run_validate(&cases, 1).unwrap().ok);
        let bad = run_validate_with(&cases, 1, |rs| rs[1].mcb = 5.0).unwrap();
        assert!(!bad.ok);
        assert!(bad.text.contains("FAIL MCB_CT >= MCB_ISO"));
    }
}
