//! Dinic max-flow on real capacities.
//!
//! Residual capacities are stored directly, so the bottleneck arc of every
//! augmenting path is driven to exactly zero.

use std::collections::VecDeque;

#[derive(Debug, Clone)]
struct Arc {
    to: usize,
    residual: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowNetwork {
    arcs: Vec<Arc>,
    adjacency: Vec<Vec<usize>>,
}

impl FlowNetwork {
    pub fn new(nodes: usize) -> Self {
        Self {
            arcs: Vec::new(),
            adjacency: vec![Vec::new(); nodes],
        }
    }

    /// Adds an arc and returns its id.
    pub fn add_arc(&mut self, from: usize, to: usize, cap: f64) -> usize {
        let id = self.arcs.len();
        self.arcs.push(Arc { to, residual: cap });
        self.arcs.push(Arc { to: from, residual: 0.0 });
        self.adjacency[from].push(id);
        self.adjacency[to].push(id + 1);
        id
    }

    /// Flow currently carried by a forward arc.
    pub fn flow(&self, id: usize) -> f64 {
        self.arcs[id ^ 1].residual
    }

    fn levels(&self, source: usize) -> Vec<usize> {
        let mut level = vec![usize::MAX; self.adjacency.len()];
        level[source] = 0;
        let mut queue = VecDeque::from([source]);
        while let Some(u) = queue.pop_front() {
            for &id in &self.adjacency[u] {
                let arc = &self.arcs[id];
                if arc.residual > 0.0 && level[arc.to] == usize::MAX {
                    level[arc.to] = level[u] + 1;
                    queue.push_back(arc.to);
                }
            }
        }
        level
    }

    fn augment(&mut self, u: usize, sink: usize, limit: f64, level: &[usize], next: &mut [usize]) -> f64 {
        if u == sink {
            return limit;
        }
        while next[u] < self.adjacency[u].len() {
            let id = self.adjacency[u][next[u]];
            let Arc { to, residual } = self.arcs[id];
            if residual > 0.0 && level[to] == level[u] + 1 {
                let pushed = self.augment(to, sink, limit.min(residual), level, next);
                if pushed > 0.0 {
                    let arc = &mut self.arcs[id];
                    arc.residual = if pushed >= arc.residual { 0.0 } else { arc.residual - pushed };
                    self.arcs[id ^ 1].residual += pushed;
                    return pushed;
                }
            }
            next[u] += 1;
        }
        0.0
    }

    /// Saturates the network and returns the total flow.
    pub fn max_flow(&mut self, source: usize, sink: usize) -> f64 {
        let mut total = 0.0;
        loop {
            let level = self.levels(source);
            if level[sink] == usize::MAX {
                return total;
            }
            let mut next = vec![0usize; self.adjacency.len()];
            loop {
                let pushed = self.augment(source, sink, f64::INFINITY, &level, &mut next);
                if pushed <= 0.0 {
                    break;
                }
                total += pushed;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_network() {
        // 0 -> {1, 2} -> 3 with a cross arc 1 -> 2
        let mut net = FlowNetwork::new(4);
        let a = net.add_arc(0, 1, 3.0);
        net.add_arc(0, 2, 2.0);
        net.add_arc(1, 2, 1.0);
        net.add_arc(1, 3, 2.0);
        net.add_arc(2, 3, 3.0);
        assert_eq!(net.max_flow(0, 3), 5.0);
        assert!(net.flow(a) <= 3.0);
    }

    #[test]
    fn fractional_capacities_saturate() {
        let mut net = FlowNetwork::new(6);
        let caps = [0.1, 0.2, 0.7];
        for (i, &c) in caps.iter().enumerate() {
            net.add_arc(0, 1 + i, c);
        }
        net.add_arc(1, 4, f64::INFINITY);
        net.add_arc(2, 4, f64::INFINITY);
        net.add_arc(3, 4, f64::INFINITY);
        net.add_arc(4, 5, 1.0);
        let total = net.max_flow(0, 5);
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn disconnected_sink_carries_nothing() {
        let mut net = FlowNetwork::new(3);
        net.add_arc(0, 1, 1.0);
        assert_eq!(net.max_flow(0, 2), 0.0);
    }
}
