//! Isotonic regression: pool-adjacent-violators for the mean and for
//! quantiles on totally ordered keys, least squares under a partial order for
//! binary responses, and isotonic distributional regression (IDR).

use std::ops::Range;

use crate::dist::{CaseCollection, OrderRelationMatrix, Relation, StepDistribution};
use crate::error::{Error, Result};
use crate::flow::{FlowNetwork, INF};
use crate::kth::RangeKth;
use crate::par;
use crate::scoring;

/// Result of a pool-adjacent-violators fit.
#[derive(Clone, Debug, PartialEq)]
pub struct PavFit {
    /// Fitted value per input index.
    pub fitted: Vec<f64>,
    /// Input indices sorted by key.
    pub order: Vec<usize>,
    /// Blocks as ranges into `order`, in increasing key order.
    pub blocks: Vec<Range<usize>>,
}

impl PavFit {
    pub fn block_members(&self, block: usize) -> &[usize] {
        &self.order[self.blocks[block].clone()]
    }
}

fn validate_pair(values: &[f64], keys: &[f64]) -> Result<()> {
    if values.len() != keys.len() {
        return Err(Error::LengthMismatch {
            left: values.len(),
            right: keys.len(),
        });
    }
    if values.is_empty() {
        return Err(Error::Empty("values"));
    }
    for (context, xs) in [("values", values), ("keys", keys)] {
        if let Some(&value) = xs.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite { context, value });
        }
    }
    Ok(())
}

/// Sorts indices by key and returns the runs of equal keys.
fn tie_runs(keys: &[f64]) -> (Vec<usize>, Vec<Range<usize>>) {
    let mut order: Vec<usize> = (0..keys.len()).collect();
    order.sort_by(|&i, &j| keys[i].total_cmp(&keys[j]));
    let mut runs = Vec::new();
    let mut start = 0;
    for k in 1..=order.len() {
        if k == order.len() || keys[order[k]] != keys[order[start]] {
            runs.push(start..k);
            start = k;
        }
    }
    (order, runs)
}

/// Weighted PAV on blocks given in increasing key order. `sums[b]` and
/// `weights[b]` describe block `b`; returns merged ranges over the input
/// blocks together with their means.
pub(crate) fn pav_blocks(sums: &[f64], weights: &[f64]) -> Vec<(Range<usize>, f64)> {
    struct Acc {
        start: usize,
        end: usize,
        sum: f64,
        weight: f64,
    }
    let mut stack: Vec<Acc> = Vec::with_capacity(sums.len());
    for b in 0..sums.len() {
        let mut cur = Acc {
            start: b,
            end: b + 1,
            sum: sums[b],
            weight: weights[b],
        };
        while let Some(prev) = stack.last() {
            if prev.sum / prev.weight > cur.sum / cur.weight {
                let prev = stack.pop().unwrap();
                cur = Acc {
                    start: prev.start,
                    end: cur.end,
                    sum: prev.sum + cur.sum,
                    weight: prev.weight + cur.weight,
                };
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    stack
        .into_iter()
        .map(|a| (a.start..a.end, a.sum / a.weight))
        .collect()
}

/// Least-squares fit nondecreasing in `keys`; equal keys share one value.
pub fn pav_mean(values: &[f64], keys: &[f64]) -> Result<PavFit> {
    validate_pair(values, keys)?;
    let (order, runs) = tie_runs(keys);
    let sums: Vec<f64> = runs
        .iter()
        .map(|r| par::compensated_sum(order[r.clone()].iter().map(|&i| values[i])))
        .collect();
    let weights: Vec<f64> = runs.iter().map(|r| r.len() as f64).collect();
    let merged = pav_blocks(&sums, &weights);
    let mut fitted = vec![0.0; values.len()];
    let mut blocks = Vec::with_capacity(merged.len());
    for (range, value) in merged {
        let span = runs[range.start].start..runs[range.end - 1].end;
        for &i in &order[span.clone()] {
            fitted[i] = value;
        }
        blocks.push(span);
    }
    Ok(PavFit { fitted, order, blocks })
}

#[inline]
fn lower_quantile_rank(alpha: f64, size: usize) -> usize {
    ((alpha * size as f64).ceil() as usize).clamp(1, size)
}

/// Fit nondecreasing in `keys` minimizing the total quantile score at level
/// `alpha`. Each block takes the lower empirical `alpha`-quantile of its
/// members, the smallest minimizer.
pub fn pav_quantile(values: &[f64], keys: &[f64], alpha: f64) -> Result<PavFit> {
    validate_pair(values, keys)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::LevelOutOfRange(alpha));
    }
    let (order, runs) = tie_runs(keys);
    let sorted_values: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let blocks = pav_quantile_sorted(&sorted_values, &runs, alpha);
    let mut fitted = vec![0.0; values.len()];
    let mut out_blocks = Vec::with_capacity(blocks.len());
    for (span, value) in blocks {
        for &i in &order[span.clone()] {
            fitted[i] = value;
        }
        out_blocks.push(span);
    }
    Ok(PavFit {
        fitted,
        order,
        blocks: out_blocks,
    })
}

/// Quantile PAV on values already sorted by key, with `runs` the initial
/// (tied-key) blocks. Returns the final blocks and their values.
pub(crate) fn pav_quantile_sorted(values: &[f64], runs: &[Range<usize>], alpha: f64) -> Vec<(Range<usize>, f64)> {
    let kth = RangeKth::new(values);
    let value_of = |r: &Range<usize>| kth.kth(r.start, r.end, lower_quantile_rank(alpha, r.len()));
    let mut stack: Vec<(Range<usize>, f64)> = Vec::with_capacity(runs.len());
    for run in runs {
        let mut cur = (run.clone(), value_of(run));
        while let Some(prev) = stack.last() {
            if prev.1 > cur.1 {
                let prev = stack.pop().unwrap();
                let span = prev.0.start..cur.0.end;
                let v = value_of(&span);
                cur = (span, v);
            } else {
                break;
            }
        }
        stack.push(cur);
    }
    stack
}

/// Exact nonnegative fraction `num / den` with `den > 0`.
#[derive(Clone, Copy, Debug)]
struct Ratio {
    num: u64,
    den: u64,
}

impl Ratio {
    const ZERO: Ratio = Ratio { num: 0, den: 1 };

    fn new(num: u64, den: u64) -> Self {
        Self { num, den }
    }

    fn to_f64(self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl PartialEq for Ratio {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == std::cmp::Ordering::Equal
    }
}

impl Eq for Ratio {}

impl PartialOrd for Ratio {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Ratio {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.num as u128 * other.den as u128).cmp(&(other.num as u128 * self.den as u128))
    }
}

/// Precomputed structure of a partial order on classes: for each class the
/// classes that cover it (immediately above it in the stochastic order), the
/// classes it covers, and the full strict order as a bit matrix.
#[derive(Clone, Debug)]
pub(crate) struct OrderStructure {
    pub(crate) class_size: Vec<u64>,
    /// covers[a] lists b with a < b and nothing strictly between.
    pub(crate) covers: Vec<Vec<usize>>,
    /// covered[b] lists a with b in covers[a].
    covered: Vec<Vec<usize>>,
    words: usize,
    /// Bit b of row a is set iff a < b.
    above: Vec<u64>,
}

/// Scratch buffers reused across solves.
struct Workspace {
    local: Vec<usize>,
    flag: Vec<bool>,
    net: FlowNetwork,
}

impl Workspace {
    fn new(k: usize) -> Self {
        Self {
            local: vec![usize::MAX; k],
            flag: vec![false; k],
            net: FlowNetwork::default(),
        }
    }
}

impl OrderStructure {
    pub(crate) fn new(relations: &OrderRelationMatrix) -> Self {
        let k = relations.num_classes();
        let words = k.div_ceil(64);
        let mut above = vec![0u64; k * words];
        for a in 0..k {
            for b in 0..k {
                if a != b && relations.class_relation(a, b) == Relation::Leq {
                    above[a * words + b / 64] |= 1 << (b % 64);
                }
            }
        }
        let covers = covering_pairs(&above, words, k);
        let mut covered = vec![Vec::new(); k];
        for (a, list) in covers.iter().enumerate() {
            for &b in list {
                covered[b].push(a);
            }
        }
        let mut class_size = vec![0u64; k];
        for &c in relations.class_of() {
            class_size[c] += 1;
        }
        Self {
            class_size,
            covers,
            covered,
            words,
            above,
        }
    }

    fn num_classes(&self) -> usize {
        self.class_size.len()
    }

    fn less(&self, a: usize, b: usize) -> bool {
        self.above[a * self.words + b / 64] >> (b % 64) & 1 == 1
    }

    /// Covering pairs of the order induced on `set`.
    fn induced_covers(&self, set: &[usize]) -> Vec<(usize, usize)> {
        let words = set.len().div_ceil(64);
        let mut rows = vec![0u64; set.len() * words];
        for (i, &a) in set.iter().enumerate() {
            let row = &mut rows[i * words..(i + 1) * words];
            for (j, &b) in set.iter().enumerate() {
                if self.less(a, b) {
                    row[j / 64] |= 1 << (j % 64);
                }
            }
        }
        covering_pairs(&rows, words, set.len())
            .into_iter()
            .enumerate()
            .flat_map(|(i, list)| list.into_iter().map(move |j| (set[i], set[j])))
            .collect()
    }

    fn cover_edges(&self) -> Vec<(usize, usize)> {
        self.covers
            .iter()
            .enumerate()
            .flat_map(|(a, list)| list.iter().map(move |&b| (a, b)))
            .collect()
    }

    /// Weighted least-squares fit per class for class totals `ones` out of
    /// `class_size`, antitone in the order: `a < b` implies value(a) >= value(b).
    pub(crate) fn solve(&self, ones: &[u64]) -> Vec<f64> {
        let k = self.num_classes();
        let mut values = vec![Ratio::ZERO; k];
        let mut ws = Workspace::new(k);
        let mut leaves = Vec::new();
        self.solve_set((0..k).collect(), self.cover_edges(), ones, &mut values, &mut leaves, &mut ws);
        values.into_iter().map(Ratio::to_f64).collect()
    }

    /// Solves the problem on `set` where `edges` (pairs `a < b`) generate the
    /// order induced on it. Fitted values go to `values` and the level blocks
    /// found along the way to `leaves`.
    fn solve_set(
        &self,
        set: Vec<usize>,
        edges: Vec<(usize, usize)>,
        ones: &[u64],
        values: &mut [Ratio],
        leaves: &mut Vec<Vec<usize>>,
        ws: &mut Workspace,
    ) {
        let w = &self.class_size;
        // ratios compared exactly through cross products
        let violates = |a: usize, b: usize| (ones[a] as u128) * (w[b] as u128) < (ones[b] as u128) * (w[a] as u128);
        let mut pending = vec![(set, edges)];
        while let Some((set, edges)) = pending.pop() {
            if edges.iter().all(|&(a, b)| !violates(a, b)) {
                for a in set {
                    values[a] = Ratio::new(ones[a], w[a]);
                    leaves.push(vec![a]);
                }
                continue;
            }
            let total_ones: u64 = set.iter().map(|&a| ones[a]).sum();
            let total_weight: u64 = set.iter().map(|&a| w[a]).sum();

            // maximum-weight closure: if b is kept high, everything below it is too
            let source = set.len();
            let sink = set.len() + 1;
            let net = &mut ws.net;
            net.reset(set.len() + 2);
            for (i, &a) in set.iter().enumerate() {
                ws.local[a] = i;
                let gain = (ones[a] * total_weight) as i64 - (total_ones * w[a]) as i64;
                match gain.cmp(&0) {
                    std::cmp::Ordering::Greater => net.add_edge(source, i, gain),
                    std::cmp::Ordering::Less => net.add_edge(i, sink, -gain),
                    std::cmp::Ordering::Equal => {}
                }
            }
            for &(a, b) in &edges {
                net.add_edge(ws.local[b], ws.local[a], INF);
            }
            net.max_flow(source, sink);
            let side = net.source_side(source);
            set.iter().for_each(|&a| ws.flag[a] = side[ws.local[a]]);
            let (high, low): (Vec<usize>, Vec<usize>) = set.iter().partition(|&&a| ws.flag[a]);
            if high.is_empty() || low.is_empty() {
                let v = Ratio::new(total_ones, total_weight);
                set.iter().for_each(|&a| values[a] = v);
                leaves.push(set);
            } else {
                let (high_edges, rest): (Vec<_>, Vec<_>) = edges.iter().partition(|&&(a, b)| ws.flag[a] && ws.flag[b]);
                let low_edges = rest.into_iter().filter(|&(a, b)| !ws.flag[a] && !ws.flag[b]).collect();
                set.iter().for_each(|&a| ws.flag[a] = false);
                pending.push((high, high_edges));
                pending.push((low, low_edges));
            }
        }
    }
}

/// Antitonic fit that follows a sequence of increases of the class totals.
///
/// The current fit is kept as a partition into blocks, each at its pooled
/// mean and not improvable by splitting, so its restriction to any union of
/// blocks is optimal there. After raising one class, a union of blocks around
/// it is re-solved on its own; values there can only rise, and the patched
/// fit is optimal as soon as no cover from outside is violated. Otherwise the
/// offending blocks join and the solve repeats.
struct IncrementalFit<'a> {
    structure: &'a OrderStructure,
    ones: Vec<u64>,
    values: Vec<Ratio>,
    block_of: Vec<usize>,
    blocks: Vec<Vec<usize>>,
    free: Vec<usize>,
    chosen: Vec<bool>,
    ws: Workspace,
}

impl<'a> IncrementalFit<'a> {
    fn new(structure: &'a OrderStructure, ones: Vec<u64>) -> Self {
        let k = structure.num_classes();
        let mut fit = Self {
            structure,
            ones,
            values: vec![Ratio::ZERO; k],
            block_of: vec![0; k],
            blocks: Vec::new(),
            free: Vec::new(),
            chosen: Vec::new(),
            ws: Workspace::new(k),
        };
        let mut leaves = Vec::new();
        structure.solve_set(
            (0..k).collect(),
            structure.cover_edges(),
            &fit.ones,
            &mut fit.values,
            &mut leaves,
            &mut fit.ws,
        );
        fit.install(leaves);
        fit
    }

    fn install(&mut self, leaves: Vec<Vec<usize>>) {
        for leaf in leaves {
            let id = self.free.pop().unwrap_or_else(|| {
                self.blocks.push(Vec::new());
                self.chosen.push(false);
                self.blocks.len() - 1
            });
            leaf.iter().for_each(|&a| self.block_of[a] = id);
            self.blocks[id] = leaf;
        }
    }

    /// Adds `count` to the total of class `c` and updates the fit; returns the
    /// classes that were re-solved.
    fn increment(&mut self, c: usize, count: u64) -> Vec<usize> {
        let st = self.structure;
        self.ones[c] += count;
        let mut chosen = vec![self.block_of[c]];
        self.chosen[chosen[0]] = true;
        // neighbours that the pooled block would already overtake join up front
        let own = &self.blocks[chosen[0]];
        let pooled = Ratio::new(
            own.iter().map(|&a| self.ones[a]).sum(),
            own.iter().map(|&a| st.class_size[a]).sum(),
        );
        let mut early = Vec::new();
        for &x in own {
            for &a in &st.covered[x] {
                let b = self.block_of[a];
                if !self.chosen[b] && self.values[a] < pooled {
                    self.chosen[b] = true;
                    early.push(b);
                }
            }
        }
        chosen.extend(early);
        loop {
            let set: Vec<usize> = chosen.iter().flat_map(|&b| self.blocks[b].iter().copied()).collect();
            let edges = st.induced_covers(&set);
            let saved: Vec<Ratio> = set.iter().map(|&a| self.values[a]).collect();
            let mut leaves = Vec::new();
            st.solve_set(set.clone(), edges, &self.ones, &mut self.values, &mut leaves, &mut self.ws);

            // values inside only rise, so only covers from outside can break
            let mut grow = Vec::new();
            for &x in &set {
                for &a in &st.covered[x] {
                    let b = self.block_of[a];
                    if !self.chosen[b] && self.values[a] < self.values[x] {
                        self.chosen[b] = true;
                        grow.push(b);
                    }
                }
            }
            if grow.is_empty() {
                for &b in &chosen {
                    self.chosen[b] = false;
                    self.free.push(b);
                }
                self.install(leaves);
                return set;
            }
            for (&a, &old) in set.iter().zip(&saved) {
                self.values[a] = old;
            }
            chosen.extend(grow);
        }
    }
}

/// Covers of a strict order given as bit rows (bit `j` of row `i` set iff
/// `i < j`): successors are visited along a linear extension, and one that is
/// not yet implied by an earlier cover is itself a cover.
fn covering_pairs(rows: &[u64], words: usize, count: usize) -> Vec<Vec<usize>> {
    let row = |i: usize| &rows[i * words..(i + 1) * words];
    let successors = |i: usize| row(i).iter().map(|w| w.count_ones()).sum::<u32>();
    // a < b implies a has strictly more successors
    let mut order: Vec<usize> = (0..count).collect();
    order.sort_by_key(|&i| std::cmp::Reverse(successors(i)));
    let mut position = vec![0; count];
    for (p, &i) in order.iter().enumerate() {
        position[i] = p;
    }
    let mut ranked = vec![0u64; count * words];
    for (p, &i) in order.iter().enumerate() {
        for j in iter_bits(row(i)) {
            let q = position[j];
            ranked[p * words + q / 64] |= 1 << (q % 64);
        }
    }
    let covers_of = |p: usize| {
        let mut reach = vec![0u64; words];
        let mut out = Vec::new();
        for q in iter_bits(&ranked[p * words..(p + 1) * words]) {
            if reach[q / 64] >> (q % 64) & 1 == 0 {
                out.push(order[q]);
                let implied = &ranked[q * words..(q + 1) * words];
                reach.iter_mut().zip(implied).for_each(|(r, o)| *r |= o);
            }
        }
        out
    };
    // small orders are not worth spreading over threads
    let covers: Vec<Vec<usize>> = if count >= 1024 {
        par::map_range(count, covers_of)
    } else {
        (0..count).map(covers_of).collect()
    };
    // back to the original numbering
    let mut by_item = vec![Vec::new(); count];
    for (p, list) in covers.into_iter().enumerate() {
        by_item[order[p]] = list;
    }
    by_item
}

fn iter_bits(words: &[u64]) -> impl Iterator<Item = usize> + '_ {
    words.iter().enumerate().flat_map(|(wi, &word)| {
        let mut w = word;
        std::iter::from_fn(move || {
            if w == 0 {
                None
            } else {
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(wi * 64 + bit)
            }
        })
    })
}

/// Least-squares fit of binary `indicators` subject to `theta_i >= theta_j`
/// whenever item `i` is stochastically smaller than item `j`, and equal
/// values for equal items.
pub fn antitonic_binary_fit(indicators: &[bool], relations: &OrderRelationMatrix) -> Result<Vec<f64>> {
    if indicators.len() != relations.len() {
        return Err(Error::LengthMismatch {
            left: indicators.len(),
            right: relations.len(),
        });
    }
    let structure = OrderStructure::new(relations);
    let mut ones = vec![0u64; relations.num_classes()];
    for (&ind, &c) in indicators.iter().zip(relations.class_of()) {
        ones[c] += ind as u64;
    }
    let class_values = structure.solve(&ones);
    Ok(relations.class_of().iter().map(|&c| class_values[c]).collect())
}

/// Isotonic distributional regression fit.
#[derive(Clone, Debug)]
pub struct IdrFit {
    /// Sorted unique outcomes; every fitted distribution lives on these.
    pub thresholds: Vec<f64>,
    class_of: Vec<usize>,
    class_fits: Vec<StepDistribution>,
    relations: OrderRelationMatrix,
}

impl IdrFit {
    pub fn len(&self) -> usize {
        self.class_of.len()
    }

    pub fn is_empty(&self) -> bool {
        self.class_of.is_empty()
    }

    /// Fitted distribution of case `i`.
    pub fn fitted(&self, i: usize) -> &StepDistribution {
        &self.class_fits[self.class_of[i]]
    }

    pub fn relations(&self) -> &OrderRelationMatrix {
        &self.relations
    }

    /// Mean CRPS of the fitted distributions against the outcomes.
    pub fn mean_crps(&self, cases: &CaseCollection) -> f64 {
        let terms = par::map_range(cases.len(), |i| scoring::crps(self.fitted(i), cases.cases()[i].outcome));
        par::compensated_sum(terms) / cases.len() as f64
    }
}

/// IDR of the outcomes on the forecasts, with `relations` the stochastic
/// order among the forecasts. At every unique outcome the fitted CDF values
/// solve [`antitonic_binary_fit`] for the threshold indicators.
pub fn idr_fit(cases: &CaseCollection, relations: &OrderRelationMatrix) -> Result<IdrFit> {
    if relations.len() != cases.len() {
        return Err(Error::LengthMismatch {
            left: relations.len(),
            right: cases.len(),
        });
    }
    let structure = OrderStructure::new(relations);
    let k = relations.num_classes();
    let mut thresholds = cases.outcomes();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    // class totals of 1{y <= z} grow as z moves up; count per (class, threshold)
    let mut hits: Vec<Vec<(usize, u64)>> = vec![Vec::new(); thresholds.len()];
    for (case, &c) in cases.cases().iter().zip(relations.class_of()) {
        let t = thresholds.partition_point(|&z| z < case.outcome);
        match hits[t].last_mut() {
            Some((cls, n)) if *cls == c => *n += 1,
            _ => hits[t].push((c, 1)),
        }
    }
    // chunks of thresholds are followed incrementally, each from a full solve
    let chunks = par::threads().min(thresholds.len()).max(1);
    let bounds: Vec<usize> = (0..=chunks).map(|i| i * thresholds.len() / chunks).collect();
    let pieces: Vec<Vec<Vec<(usize, f64)>>> = par::map_range(chunks, |i| {
        let (from, to) = (bounds[i], bounds[i + 1]);
        let mut ones = vec![0u64; k];
        for h in &hits[..=from] {
            for &(c, n) in h {
                ones[c] += n;
            }
        }
        let mut fit = IncrementalFit::new(&structure, ones);
        // per class: (threshold index, fitted CDF value) at every change
        let mut steps: Vec<Vec<(usize, f64)>> = fit.values.iter().map(|v| vec![(from, v.to_f64())]).collect();
        for (t, hit) in hits.iter().enumerate().take(to).skip(from + 1) {
            for &(c, n) in hit {
                for a in fit.increment(c, n) {
                    let value = fit.values[a].to_f64();
                    let last = steps[a].last_mut().unwrap();
                    if last.1 != value {
                        if last.0 == t {
                            last.1 = value;
                        } else {
                            steps[a].push((t, value));
                        }
                    }
                }
            }
        }
        steps
    });

    let class_fits = (0..k)
        .map(|c| {
            let mut xs = Vec::new();
            let mut cdf: Vec<f64> = Vec::new();
            for piece in &pieces {
                for &(t, value) in &piece[c] {
                    if cdf.last() != Some(&value) {
                        xs.push(thresholds[t]);
                        cdf.push(value);
                    }
                }
            }
            StepDistribution::from_cdf(&xs, &cdf)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(IdrFit {
        thresholds,
        class_of: relations.class_of().to_vec(),
        class_fits,
        relations: relations.clone(),
    })
}
