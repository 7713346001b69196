//! k-th smallest element of a contiguous range, answered in `O(log n)` from a
//! persistent segment tree over value ranks.

pub(crate) struct RangeKth {
    // sorted distinct values; leaves of the tree index into this
    values: Vec<f64>,
    left: Vec<u32>,
    right: Vec<u32>,
    count: Vec<u32>,
    // roots[i] holds the counts of the first i elements of the sequence
    roots: Vec<u32>,
}

impl RangeKth {
    pub(crate) fn new(sequence: &[f64]) -> Self {
        let mut values: Vec<f64> = sequence.to_vec();
        values.sort_by(f64::total_cmp);
        values.dedup();
        let m = values.len();
        let cap = 1 + 2 * m + sequence.len() * (usize::BITS - m.leading_zeros() + 2) as usize;
        let mut tree = Self {
            values,
            left: Vec::with_capacity(cap),
            right: Vec::with_capacity(cap),
            count: Vec::with_capacity(cap),
            roots: Vec::with_capacity(sequence.len() + 1),
        };
        // node 0 is the shared empty tree
        tree.left.push(0);
        tree.right.push(0);
        tree.count.push(0);
        tree.roots.push(0);
        for &v in sequence {
            let rank = tree.values.partition_point(|&u| u < v);
            let prev = *tree.roots.last().unwrap();
            let root = tree.insert(prev, 0, m, rank);
            tree.roots.push(root);
        }
        tree
    }

    fn insert(&mut self, node: u32, lo: usize, hi: usize, rank: usize) -> u32 {
        let id = self.count.len() as u32;
        self.left.push(self.left[node as usize]);
        self.right.push(self.right[node as usize]);
        self.count.push(self.count[node as usize] + 1);
        if hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if rank < mid {
                let child = self.insert(self.left[node as usize], lo, mid, rank);
                self.left[id as usize] = child;
            } else {
                let child = self.insert(self.right[node as usize], mid, hi, rank);
                self.right[id as usize] = child;
            }
        }
        id
    }

    /// The `k`-th smallest (1-based) of `sequence[start..end]`.
    pub(crate) fn kth(&self, start: usize, end: usize, k: usize) -> f64 {
        debug_assert!(k >= 1 && k <= end - start);
        let (mut a, mut b) = (self.roots[start], self.roots[end]);
        let (mut lo, mut hi) = (0, self.values.len());
        let mut k = k as u32;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            let in_left = self.count[self.left[b as usize] as usize] - self.count[self.left[a as usize] as usize];
            if k <= in_left {
                a = self.left[a as usize];
                b = self.left[b as usize];
                hi = mid;
            } else {
                k -= in_left;
                a = self.right[a as usize];
                b = self.right[b as usize];
                lo = mid;
            }
        }
        self.values[lo]
    }
}
