use crate::error::{domain, Result};
use crate::sampler::TimeGrid;

/// Function tabulated on a uniform grid, linear between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    /// Claimed Hölder exponent, if any.
    pub holder_hint: Option<f64>,
}

impl GridFunction {
    pub fn new(grid: TimeGrid, values: Vec<f64>, holder_hint: Option<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return domain(format!("expected {} values, got {}", grid.len(), values.len()));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return domain("grid function has non-finite values");
        }
        if let Some(h) = holder_hint {
            if !(h > 0.0 && h <= 1.0) {
                return domain(format!("Hölder hint {h} outside (0, 1]"));
            }
        }
        Ok(Self {
            grid,
            values,
            holder_hint,
        })
    }

    pub fn from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64, holder_hint: Option<f64>) -> Result<Self> {
        Self::new(grid, grid.times().into_iter().map(f).collect(), holder_hint)
    }

    pub fn constant(grid: TimeGrid, c: f64) -> Self {
        Self {
            grid,
            values: vec![c; grid.len()],
            holder_hint: Some(1.0),
        }
    }

    #[inline]
    pub fn step(&self) -> f64 {
        self.grid.step()
    }

    /// Slope on cell i = [t_i, t_{i+1}].
    #[inline]
    pub fn slope(&self, i: usize) -> f64 {
        (self.values[i + 1] - self.values[i]) / self.step()
    }

    pub fn slopes(&self) -> Vec<f64> {
        let h = self.step();
        self.values.windows(2).map(|w| (w[1] - w[0]) / h).collect()
    }

    /// Cell containing x (the last cell for the right end).
    #[inline]
    pub fn cell(&self, x: f64) -> usize {
        let c = ((x - self.grid.t0) / self.step()).floor();
        (c.max(0.0) as usize).min(self.grid.n - 1)
    }

    /// Linear interpolation.
    pub fn eval(&self, x: f64) -> f64 {
        let c = self.cell(x);
        self.values[c] + self.slope(c) * (x - self.grid.time(c))
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            values: self.values.iter().map(|v| c * v).collect(),
            ..self.clone()
        }
    }

    /// c1·self + c2·other on the same grid.
    pub fn combine(&self, c1: f64, other: &Self, c2: f64) -> Result<Self> {
        if self.grid != other.grid {
            return domain("grid functions live on different grids");
        }
        Ok(Self {
            grid: self.grid,
            values: self.values.iter().zip(&other.values).map(|(a, b)| c1 * a + c2 * b).collect(),
            holder_hint: match (self.holder_hint, other.holder_hint) {
                (Some(a), Some(b)) => Some(a.min(b)),
                _ => None,
            },
        })
    }

    /// Smallest C with |f(t_i) − f(t_j)| ≤ C|t_i − t_j|^θ over grid pairs
    /// (all pairs up to 2048 cells, dyadic lags beyond).
    pub fn holder_constant(&self, theta: f64) -> f64 {
        let n = self.grid.n;
        let h = self.step();
        let lags: Vec<usize> = if n <= 2048 {
            (1..=n).collect()
        } else {
            std::iter::successors(Some(1usize), |l| (2 * l <= n).then_some(2 * l)).collect()
        };
        let mut c = 0.0f64;
        for lag in lags {
            let d = (lag as f64 * h).powf(theta);
            for i in 0..=n - lag {
                c = c.max((self.values[i + lag] - self.values[i]).abs() / d);
            }
        }
        c
    }

    /// Grid index of the node at `t`, or a domain error.
    pub fn node(&self, t: f64, what: &str) -> Result<usize> {
        match self.grid.node_index(t) {
            Some(i) => Ok(i),
            None => domain(format!("{what} = {t} is not a grid node")),
        }
    }
}
