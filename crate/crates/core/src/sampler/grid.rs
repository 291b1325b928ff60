use crate::error::{domain, Result};
use serde::Serialize;

/// Uniform grid t0 + i·delta/n, i = 0..=n, inside [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimeGrid {
    pub t0: f64,
    pub delta: f64,
    pub n: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, delta: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return domain(format!("grid needs n ≥ 2 steps, got {n}"));
        }
        if !(t0 >= 0.0 && delta > 0.0 && t0 + delta <= 1.0 + 1e-15) {
            return domain(format!("grid [{t0}, {t0}+{delta}] must lie inside [0, 1]"));
        }
        Ok(Self { t0, delta, n })
    }

    /// Grid of [0, 1] with `n` steps.
    pub fn unit(n: usize) -> Result<Self> {
        Self::new(0.0, 1.0, n)
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.delta / self.n as f64
    }

    #[inline]
    pub fn end(&self) -> f64 {
        (self.t0 + self.delta).min(1.0)
    }

    /// i-th point; the last point is the exact right end.
    #[inline]
    pub fn time(&self, i: usize) -> f64 {
        if i == self.n {
            self.end()
        } else {
            self.t0 + i as f64 * self.step()
        }
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n).map(|i| self.time(i)).collect()
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Largest index whose time does not exceed `t` (clamped to the grid).
    pub fn index_floor(&self, t: f64) -> usize {
        if t <= self.t0 {
            return 0;
        }
        let x = (t - self.t0) / self.step();
        // tolerate roundoff just below an exact node
        let r = x.round();
        let i = if (x - r).abs() < 1e-9 { r } else { x.floor() };
        (i as usize).min(self.n)
    }

    /// Index of an exact grid node, if `t` is one.
    pub fn node_index(&self, t: f64) -> Option<usize> {
        let i = self.index_floor(t);
        ((self.time(i) - t).abs() <= 1e-12 * self.delta.max(1.0)).then_some(i)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = TimeGrid::new(0.5, 0.5, 4).unwrap();
        assert_eq!(g.times(), vec![0.5, 0.625, 0.75, 0.875, 1.0]);
        assert_eq!(g.index_floor(0.8), 2);
        assert_eq!(g.index_floor(0.75), 2);
        assert_eq!(g.node_index(0.875), Some(3));
        assert_eq!(g.node_index(0.8), None);
        assert!(TimeGrid::new(0.5, 0.6, 4).is_err());
        assert!(TimeGrid::unit(1).is_err());
    }
}
