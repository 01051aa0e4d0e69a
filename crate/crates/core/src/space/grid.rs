use crate::error::{Error, Result};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    Circle,
    Interval,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    /// Zero-flux ends.
    Reflecting,
}

/// Uniform one-dimensional chart. Interval grids are cell-centred, so the first
/// node sits half a cell inside the left end and no node lies on an endpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D<S> {
    topology: Topology,
    boundary: Boundary,
    start: S,
    length: S,
    h: S,
    nodes: Vec<S>,
}

impl<S: Real> Grid1D<S> {
    /// Periodic grid of `n` nodes `x_i = i·L/n` on a circle of chart length `L`.
    pub fn circle(length: S, n: usize) -> Result<Self> {
        Self::new(Topology::Circle, Some(Boundary::Periodic), S::zero(), length, n)
    }

    /// Cell-centred grid of `n` cells on `[a, b]` with reflecting ends.
    pub fn interval(a: S, b: S, n: usize) -> Result<Self> {
        Self::new(Topology::Interval, Some(Boundary::Reflecting), a, b - a, n)
    }

    /// General constructor validating the topology/boundary pairing.
    pub fn new(
        topology: Topology,
        boundary: Option<Boundary>,
        start: S,
        length: S,
        n: usize,
    ) -> Result<Self> {
        let boundary = boundary.ok_or_else(|| {
            Error::Config(format!("{topology:?} grid needs a boundary rule"))
        })?;
        match (topology, boundary) {
            (Topology::Circle, Boundary::Periodic) | (Topology::Interval, Boundary::Reflecting) => {}
            (t, b) => return Err(Error::Config(format!("boundary {b:?} incompatible with {t:?}"))),
        }
        if n < 4 {
            return Err(Error::Geometry(format!("grid needs at least 4 nodes, got {n}")));
        }
        if !(length > S::zero()) || !length.is_finite() || !start.is_finite() {
            return Err(Error::Geometry("grid extent must be positive and finite".into()));
        }
        let h = length / S::of(n);
        let offset = match topology {
            Topology::Circle => S::zero(),
            Topology::Interval => h / S::lit(2.0),
        };
        let nodes = (0..n).map(|i| start + offset + h * S::of(i)).collect();
        Ok(Self { topology, boundary, start, length, h, nodes })
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn is_periodic(&self) -> bool {
        self.boundary == Boundary::Periodic
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn h(&self) -> S {
        self.h
    }

    pub fn start(&self) -> S {
        self.start
    }

    pub fn end(&self) -> S {
        self.start + self.length
    }

    pub fn length(&self) -> S {
        self.length
    }

    pub fn nodes(&self) -> &[S] {
        &self.nodes
    }

    #[inline]
    pub fn x(&self, i: usize) -> S {
        self.nodes[i]
    }

    /// Control cell `[x_i − h/2, x_i + h/2]`.
    pub fn cell(&self, i: usize) -> (S, S) {
        let half = self.h / S::lit(2.0);
        (self.nodes[i] - half, self.nodes[i] + half)
    }

    pub fn num_edges(&self) -> usize {
        match self.topology {
            Topology::Circle => self.len(),
            Topology::Interval => self.len() - 1,
        }
    }

    /// Endpoints of edge `k`: nodes `k` and `k+1` (wrapping on the circle).
    #[inline]
    pub fn edge(&self, k: usize) -> (usize, usize) {
        (k, (k + 1) % self.len())
    }

    /// Chart coordinate of the midpoint of edge `k`.
    pub fn edge_midpoint(&self, k: usize) -> S {
        self.nodes[k] + self.h / S::lit(2.0)
    }

    /// Neighbour indices `(left, right)`; `None` past a reflecting end.
    #[inline]
    pub fn neighbours(&self, i: usize) -> (Option<usize>, Option<usize>) {
        let n = self.len();
        match self.topology {
            Topology::Circle => (Some((i + n - 1) % n), Some((i + 1) % n)),
            Topology::Interval => (i.checked_sub(1), (i + 1 < n).then_some(i + 1)),
        }
    }

    /// Edge indices `(left, right)` incident to node `i`.
    #[inline]
    pub fn incident_edges(&self, i: usize) -> (Option<usize>, Option<usize>) {
        let n = self.len();
        match self.topology {
            Topology::Circle => (Some((i + n - 1) % n), Some(i)),
            Topology::Interval => (i.checked_sub(1), (i + 1 < n).then_some(i)),
        }
    }

    /// Index of the node nearest to chart coordinate `x`.
    pub fn nearest(&self, x: S) -> usize {
        let offset = match self.topology {
            Topology::Circle => S::zero(),
            Topology::Interval => self.h / S::lit(2.0),
        };
        let k = ((x - self.start - offset) / self.h).round();
        let n = self.len();
        match self.topology {
            Topology::Circle => {
                let k = k.to_i64().unwrap_or(0).rem_euclid(n as i64);
                k as usize
            }
            Topology::Interval => k.max(S::zero()).min(S::of(n - 1)).to_usize().unwrap_or(0),
        }
    }

    /// Nodes at least `collar` chart units away from both interval ends
    /// (every node on a circle). Second-difference stencils need one neighbour
    /// on each side, so the end nodes are always excluded.
    pub fn interior_mask(&self, collar: S) -> Vec<bool> {
        match self.topology {
            Topology::Circle => vec![true; self.len()],
            Topology::Interval => {
                let lo = self.start + collar;
                let hi = self.end() - collar;
                let n = self.len();
                self.nodes
                    .iter()
                    .enumerate()
                    .map(|(i, &x)| i > 0 && i + 1 < n && x >= lo && x <= hi)
                    .collect()
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interval_is_cell_centred() {
        let g = Grid1D::interval(0.0, 1.0, 4).unwrap();
        assert_eq!(g.nodes(), &[0.125, 0.375, 0.625, 0.875]);
        assert_eq!(g.num_edges(), 3);
        assert_eq!(g.neighbours(0), (None, Some(1)));
    }

    #[test]
    fn circle_wraps() {
        let g = Grid1D::circle(1.0, 8).unwrap();
        assert_eq!(g.num_edges(), 8);
        assert_eq!(g.edge(7), (7, 0));
        assert_eq!(g.neighbours(0), (Some(7), Some(1)));
        assert_eq!(g.nearest(0.99), 0);
    }

    #[test]
    fn incompatible_rules_rejected() {
        assert!(Grid1D::<f64>::new(Topology::Interval, None, 0.0, 1.0, 8).is_err());
        assert!(Grid1D::new(Topology::Circle, Some(Boundary::Reflecting), 0.0, 1.0, 8).is_err());
        assert!(Grid1D::interval(0.0, -1.0, 8).is_err());
    }

    #[test]
    fn collar_mask() {
        let g = Grid1D::interval(0.0, 1.0, 10).unwrap();
        let m = g.interior_mask(0.3);
        assert_eq!(m.iter().filter(|b| **b).count(), 4);
    }
}
