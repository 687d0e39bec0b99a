//! Rectangular agent grids with 4-neighbourhoods and distance-proportional
//! link delays.

use alloc::vec::Vec;

pub type AgentId = usize;

/// Index of an action in an agent's action set. Index 0 is local execution;
/// index `k >= 1` forwards to `neighbors(agent)[k - 1]`.
pub type ActionIndex = usize;

pub const LOCAL: ActionIndex = 0;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TopologyError {
    #[error("grid dimensions must be at least 1x1, got {rows}x{cols}")]
    ZeroDimension { rows: usize, cols: usize },
    #[error("adjacent delay must be at least 1 time unit")]
    ZeroDelay,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    rows: usize,
    cols: usize,
    adjacent_delay: u64,
    neighbors: Vec<Vec<AgentId>>,
}

impl Topology {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn adjacent_delay(&self) -> u64 {
        self.adjacent_delay
    }

    pub fn num_agents(&self) -> usize {
        self.rows * self.cols
    }

    /// `(row, col)` of an agent; ids are row-major.
    pub fn position(&self, agent: AgentId) -> (usize, usize) {
        (agent / self.cols, agent % self.cols)
    }

    pub fn agent_at(&self, row: usize, col: usize) -> AgentId {
        row * self.cols + col
    }

    /// Neighbours in ascending id order.
    pub fn neighbors(&self, agent: AgentId) -> &[AgentId] {
        &self.neighbors[agent]
    }

    pub fn num_actions(&self, agent: AgentId) -> usize {
        self.neighbors[agent].len() + 1
    }

    pub fn max_actions(&self) -> usize {
        self.neighbors.iter().map(|n| n.len() + 1).max().unwrap_or(1)
    }

    /// Agent reached by taking `action` at `agent`.
    pub fn target(&self, agent: AgentId, action: ActionIndex) -> AgentId {
        if action == LOCAL {
            agent
        } else {
            self.neighbors[agent][action - 1]
        }
    }

    /// Action at `agent` that forwards to `neighbor`, if adjacent.
    pub fn action_towards(&self, agent: AgentId, neighbor: AgentId) -> Option<ActionIndex> {
        self.neighbors[agent]
            .iter()
            .position(|&n| n == neighbor)
            .map(|k| k + 1)
    }

    pub fn are_adjacent(&self, a: AgentId, b: AgentId) -> bool {
        self.neighbors[a].contains(&b)
    }

    /// Euclidean grid distance in cell units.
    pub fn distance(&self, a: AgentId, b: AgentId) -> f64 {
        let (ra, ca) = self.position(a);
        let (rb, cb) = self.position(b);
        let dr = ra as f64 - rb as f64;
        let dc = ca as f64 - cb as f64;
        libm::sqrt(dr * dr + dc * dc)
    }

    /// Link delay in whole time units: `adjacent_delay` per unit of
    /// distance, rounded up to the next tick.
    pub fn delay(&self, a: AgentId, b: AgentId) -> u64 {
        let (ra, ca) = self.position(a);
        let (rb, cb) = self.position(b);
        if ra.abs_diff(rb) + ca.abs_diff(cb) == 1 {
            return self.adjacent_delay;
        }
        libm::ceil(self.adjacent_delay as f64 * self.distance(a, b)) as u64
    }

    /// Agents of the centred `height x width` sub-grid, ascending. `None`
    /// if the region does not fit or cannot be centred.
    pub fn centered_region(&self, height: usize, width: usize) -> Option<Vec<AgentId>> {
        if height > self.rows || width > self.cols {
            return None;
        }
        if !(self.rows - height).is_multiple_of(2) || !(self.cols - width).is_multiple_of(2) {
            return None;
        }
        let r0 = (self.rows - height) / 2;
        let c0 = (self.cols - width) / 2;
        let mut agents = Vec::with_capacity(height * width);
        for r in r0..r0 + height {
            for c in c0..c0 + width {
                agents.push(self.agent_at(r, c));
            }
        }
        Some(agents)
    }
}

pub fn build_grid(rows: usize, cols: usize, adjacent_delay: u64) -> Result<Topology, TopologyError> {
    if rows == 0 || cols == 0 {
        return Err(TopologyError::ZeroDimension { rows, cols });
    }
    if adjacent_delay == 0 {
        return Err(TopologyError::ZeroDelay);
    }
    let mut neighbors = Vec::with_capacity(rows * cols);
    for r in 0..rows {
        for c in 0..cols {
            let mut list = Vec::with_capacity(4);
            if r > 0 {
                list.push((r - 1) * cols + c);
            }
            if c > 0 {
                list.push(r * cols + c - 1);
            }
            if c + 1 < cols {
                list.push(r * cols + c + 1);
            }
            if r + 1 < rows {
                list.push((r + 1) * cols + c);
            }
            neighbors.push(list);
        }
    }
    Ok(Topology {
        rows,
        cols,
        adjacent_delay,
        neighbors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ten_by_ten() {
        let t = build_grid(10, 10, 2).unwrap();
        assert_eq!(t.num_agents(), 100);
        let degree = |k| (0..100).filter(|&a| t.neighbors(a).len() == k).count();
        assert_eq!(degree(2), 4);
        assert_eq!(degree(3), 32);
        assert_eq!(degree(4), 64);
        assert_eq!(t.max_actions(), 5);
    }

    #[test]
    fn single_agent() {
        let t = build_grid(1, 1, 2).unwrap();
        assert_eq!(t.num_agents(), 1);
        assert_eq!(t.num_actions(0), 1);
    }

    #[test]
    fn two_by_two_exhaustive() {
        let t = build_grid(2, 2, 1).unwrap();
        for a in 0..4 {
            assert_eq!(t.neighbors(a).len(), 2);
            for b in 0..4 {
                let (ra, ca) = t.position(a);
                let (rb, cb) = t.position(b);
                let adjacent = ra.abs_diff(rb) + ca.abs_diff(cb) == 1;
                assert_eq!(t.are_adjacent(a, b), adjacent);
                assert_eq!(t.are_adjacent(a, b), t.are_adjacent(b, a));
                if adjacent {
                    assert_eq!(t.delay(a, b), 1);
                }
            }
        }
    }

    #[test]
    fn errors() {
        assert_eq!(
            build_grid(0, 3, 1),
            Err(TopologyError::ZeroDimension { rows: 0, cols: 3 })
        );
        assert_eq!(build_grid(3, 3, 0), Err(TopologyError::ZeroDelay));
    }

    #[test]
    fn actions_map_to_neighbors() {
        let t = build_grid(3, 3, 2).unwrap();
        assert_eq!(t.target(4, LOCAL), 4);
        for (k, &n) in t.neighbors(4).iter().enumerate() {
            assert_eq!(t.target(4, k + 1), n);
            assert_eq!(t.action_towards(4, n), Some(k + 1));
            assert_eq!(t.delay(4, n), 2);
        }
        assert_eq!(t.action_towards(0, 8), None);
    }

    #[test]
    fn centered_region() {
        let t = build_grid(10, 10, 2).unwrap();
        let region = t.centered_region(4, 4).unwrap();
        assert_eq!(region.len(), 16);
        assert_eq!(region[0], t.agent_at(3, 3));
        assert_eq!(region[15], t.agent_at(6, 6));
        assert!(t.centered_region(11, 11).is_none());
        assert!(t.centered_region(3, 4).is_none());
    }
}
