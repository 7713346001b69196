//! Dinic max-flow with integer capacities, used for minimum cuts in the
//! partial-order isotonic solver.

pub(crate) const INF: i64 = i64::MAX / 4;

/// Residual network in compressed adjacency form. Arcs are collected with
/// [`add_edge`](Self::add_edge) and laid out on the first call to
/// [`max_flow`](Self::max_flow); buffers survive [`reset`](Self::reset) so one
/// instance can serve many small cuts.
#[derive(Default)]
pub(crate) struct FlowNetwork {
    nodes: usize,
    pending: Vec<(u32, u32, i64)>,
    start: Vec<usize>,
    to: Vec<u32>,
    rev: Vec<u32>,
    cap: Vec<i64>,
    level: Vec<i32>,
    iter: Vec<usize>,
    queue: Vec<usize>,
    path: Vec<usize>,
}

impl FlowNetwork {
    #[cfg(test)]
    pub(crate) fn new(nodes: usize) -> Self {
        let mut net = Self::default();
        net.reset(nodes);
        net
    }

    /// Drops all arcs and resizes to `nodes` nodes.
    pub(crate) fn reset(&mut self, nodes: usize) {
        self.nodes = nodes;
        self.pending.clear();
        self.start.clear();
    }

    pub(crate) fn add_edge(&mut self, from: usize, to: usize, cap: i64) {
        self.pending.push((from as u32, to as u32, cap));
    }

    fn layout(&mut self) {
        let n = self.nodes;
        self.start.clear();
        self.start.resize(n + 1, 0);
        for &(a, b, _) in &self.pending {
            self.start[a as usize + 1] += 1;
            self.start[b as usize + 1] += 1;
        }
        for v in 0..n {
            self.start[v + 1] += self.start[v];
        }
        let arcs = self.start[n];
        self.to.clear();
        self.to.resize(arcs, 0);
        self.rev.clear();
        self.rev.resize(arcs, 0);
        self.cap.clear();
        self.cap.resize(arcs, 0);
        self.iter.clear();
        self.iter.extend_from_slice(&self.start[..n]);
        for &(a, b, c) in &self.pending {
            let (a, b) = (a as usize, b as usize);
            let (ea, eb) = (self.iter[a], self.iter[b]);
            self.iter[a] += 1;
            self.iter[b] += 1;
            self.to[ea] = b as u32;
            self.cap[ea] = c;
            self.rev[ea] = eb as u32;
            self.to[eb] = a as u32;
            self.rev[eb] = ea as u32;
        }
        self.level.clear();
        self.level.resize(n, -1);
    }

    fn bfs(&mut self, source: usize, sink: usize) -> bool {
        self.level.iter_mut().for_each(|l| *l = -1);
        self.queue.clear();
        self.level[source] = 0;
        self.queue.push(source);
        let mut at = 0;
        while at < self.queue.len() {
            let v = self.queue[at];
            at += 1;
            for e in self.start[v]..self.start[v + 1] {
                let u = self.to[e] as usize;
                if self.cap[e] > 0 && self.level[u] < 0 {
                    self.level[u] = self.level[v] + 1;
                    self.queue.push(u);
                }
            }
        }
        self.level[sink] >= 0
    }

    /// Blocking flow on the current level graph by iterative search.
    fn blocking_flow(&mut self, source: usize, sink: usize) -> i64 {
        let mut total = 0;
        self.path.clear();
        let mut v = source;
        loop {
            if v == sink {
                let pushed = self.path.iter().map(|&e| self.cap[e]).min().unwrap_or(0);
                for &e in &self.path {
                    self.cap[e] -= pushed;
                    self.cap[self.rev[e] as usize] += pushed;
                }
                total += pushed;
                // back up to the tail of the first saturated arc
                let cut = self.path.iter().position(|&e| self.cap[e] == 0).unwrap_or(0);
                self.path.truncate(cut);
                v = self.path.last().map_or(source, |&e| self.to[e] as usize);
                continue;
            }
            let end = self.start[v + 1];
            while self.iter[v] < end {
                let e = self.iter[v];
                let u = self.to[e] as usize;
                if self.cap[e] > 0 && self.level[u] == self.level[v] + 1 {
                    break;
                }
                self.iter[v] += 1;
            }
            if self.iter[v] < end {
                let e = self.iter[v];
                self.path.push(e);
                v = self.to[e] as usize;
            } else {
                if v == source {
                    return total;
                }
                // dead end: drop it from the level graph and retreat
                self.level[v] = -1;
                let e = self.path.pop().expect("nonempty path away from source");
                v = self.to[self.rev[e] as usize] as usize;
                self.iter[v] += 1;
            }
        }
    }

    pub(crate) fn max_flow(&mut self, source: usize, sink: usize) -> i64 {
        self.layout();
        let mut flow = 0;
        while self.bfs(source, sink) {
            self.iter.clear();
            self.iter.extend_from_slice(&self.start[..self.nodes]);
            flow += self.blocking_flow(source, sink);
        }
        flow
    }

    /// Nodes reachable from `source` in the residual network; call after
    /// [`max_flow`](Self::max_flow) to read off the source side of a minimum cut.
    pub(crate) fn source_side(&mut self, source: usize) -> Vec<bool> {
        let mut seen = vec![false; self.nodes];
        self.queue.clear();
        self.queue.push(source);
        seen[source] = true;
        while let Some(v) = self.queue.pop() {
            for e in self.start[v]..self.start[v + 1] {
                let u = self.to[e] as usize;
                if self.cap[e] > 0 && !seen[u] {
                    seen[u] = true;
                    self.queue.push(u);
                }
            }
        }
        seen
    }
}
