use super::factor::{build_covariance_matrix, dot, factor_covariance, CholeskyFactor, Durbin};
use super::grid::TimeGrid;
use super::rng::RngSpec;
use crate::error::{domain, Error, Result};
use crate::models::ProcessModel;
use rayon::prelude::*;
use std::io::{Read, Write};

/// Paths are generated and consumed in fixed chunks of this many; the chunk
/// layout is independent of the thread count.
pub const CHUNK: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SamplingStrategy {
    /// Toeplitz recursion for stationary increments on grids anchored at 0,
    /// dense Cholesky otherwise.
    Auto,
    Dense,
    Levinson,
}

#[derive(Debug, Clone)]
enum Factor {
    Dense(CholeskyFactor),
    /// Increment autocovariance r(0..n).
    Levinson(Vec<f64>),
}

/// Factorised sampler for one (model, grid) pair. The factorisation is done
/// once here and reused for every batch.
#[derive(Debug, Clone)]
pub struct Sampler {
    pub model_id: String,
    pub grid: TimeGrid,
    factor: Factor,
    zero_start: bool,
}

impl Sampler {
    pub fn new(model: &ProcessModel, grid: TimeGrid) -> Result<Self> {
        Self::with_strategy(model, grid, SamplingStrategy::Auto)
    }

    pub fn with_strategy(model: &ProcessModel, grid: TimeGrid, strategy: SamplingStrategy) -> Result<Self> {
        model.validate()?;
        let levinson_ok = model.has_stationary_increments() && grid.t0 == 0.0;
        let use_levinson = match strategy {
            SamplingStrategy::Auto => levinson_ok,
            SamplingStrategy::Dense => false,
            SamplingStrategy::Levinson => {
                if !levinson_ok {
                    return domain("Levinson sampling needs stationary increments and t0 = 0");
                }
                true
            }
        };
        let factor = if use_levinson {
            let dt = grid.step();
            let r = (0..grid.n)
                .map(|k| model.increment_autocovariance(dt, k).expect("stationary model"))
                .collect();
            Factor::Levinson(r)
        } else {
            let m = build_covariance_matrix(model, &grid)?;
            Factor::Dense(factor_covariance(&m)?)
        };
        let zero_start = model.covariance(grid.t0, grid.t0)? == 0.0;
        Ok(Self {
            model_id: model.id(),
            grid,
            factor,
            zero_start,
        })
    }

    pub fn jitter(&self) -> f64 {
        match &self.factor {
            Factor::Dense(f) => f.jitter,
            Factor::Levinson(_) => 0.0,
        }
    }

    pub fn strategy(&self) -> SamplingStrategy {
        match self.factor {
            Factor::Dense(_) => SamplingStrategy::Dense,
            Factor::Levinson(_) => SamplingStrategy::Levinson,
        }
    }

    /// Fills `out` (k × (n+1), row-major) with paths `first..first+k`.
    fn generate(&self, rng: &RngSpec, first: usize, k: usize, out: &mut [f64]) -> Result<()> {
        let len = self.grid.len();
        let mut z = vec![0.0; len];
        match &self.factor {
            Factor::Dense(l) => {
                for p in 0..k {
                    rng.fill_normals((first + p) as u64, &mut z);
                    l.apply(&z, &mut out[p * len..(p + 1) * len]);
                }
            }
            Factor::Levinson(r) => {
                let n = self.grid.n;
                // increments, one row per path
                let mut zs = vec![0.0; k * len];
                for p in 0..k {
                    rng.fill_normals((first + p) as u64, &mut zs[p * len..(p + 1) * len]);
                }
                let mut y = vec![0.0; k * n];
                let mut d = Durbin::new(r);
                for m in 0..n {
                    if m > 0 {
                        d.advance()?;
                    }
                    let sv = d.innovation_variance().sqrt();
                    let coef = d.coefficients();
                    for p in 0..k {
                        let row = &mut y[p * n..(p + 1) * n];
                        let pred = coef.map_or(0.0, |a| dot(a, &row[..m]));
                        // z_0 pairs with the zero row of the dense factor
                        row[m] = pred + sv * zs[p * len + m + 1];
                    }
                }
                for p in 0..k {
                    let dst = &mut out[p * len..(p + 1) * len];
                    let inc = &y[p * n..(p + 1) * n];
                    dst[0] = 0.0;
                    let mut acc = 0.0;
                    for i in 0..n {
                        acc += inc[i];
                        dst[i + 1] = acc;
                    }
                }
            }
        }
        if self.zero_start {
            for p in 0..k {
                out[p * len] = 0.0;
            }
        }
        Ok(())
    }

    /// Streams `m` paths through `f(path_index, values)` in parallel and
    /// returns the results in path order.
    pub fn map_paths<T, F>(&self, m: usize, rng: RngSpec, f: F) -> Result<Vec<T>>
    where
        T: Send,
        F: Fn(usize, &[f64]) -> T + Sync,
    {
        let len = self.grid.len();
        let chunks = m.div_ceil(CHUNK);
        let parts: Vec<Result<Vec<T>>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let first = c * CHUNK;
                let k = CHUNK.min(m - first);
                let mut buf = vec![0.0; k * len];
                self.generate(&rng, first, k, &mut buf)?;
                Ok((0..k).map(|p| f(first + p, &buf[p * len..(p + 1) * len])).collect())
            })
            .collect();
        let mut out = Vec::with_capacity(m);
        for p in parts {
            out.extend(p?);
        }
        Ok(out)
    }

    pub fn sample(&self, m: usize, rng: RngSpec) -> Result<PathBatch> {
        if m == 0 {
            return domain("path count must be ≥ 1");
        }
        let rows = self.map_paths(m, rng, |_, p| p.to_vec())?;
        Ok(PathBatch {
            grid: self.grid,
            values: rows.concat(),
            m,
            model_id: self.model_id.clone(),
            seed: rng.master_seed,
            stream_base: rng.stream_index,
        })
    }
}

/// m sampled paths on a common grid, row-major m × (n+1).
#[derive(Debug, Clone, PartialEq)]
pub struct PathBatch {
    pub grid: TimeGrid,
    pub values: Vec<f64>,
    pub m: usize,
    pub model_id: String,
    pub seed: u64,
    pub stream_base: u64,
}

pub const DUMP_MAGIC: &[u8; 5] = b"QHLX1";

/// Header of a binary path dump.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DumpHeader {
    pub model_id: String,
    pub n: u64,
    pub m: u64,
    pub seed: u64,
}

impl PathBatch {
    #[inline]
    pub fn path(&self, j: usize) -> &[f64] {
        let len = self.grid.len();
        &self.values[j * len..(j + 1) * len]
    }

    pub fn paths(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.grid.len())
    }

    /// Magic, length-prefixed model id, n, m, seed (all little-endian u64),
    /// then the values row-major as little-endian f64.
    pub fn write_dump<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        let id = self.model_id.as_bytes();
        w.write_all(&(id.len() as u64).to_le_bytes())?;
        w.write_all(id)?;
        for v in [self.grid.n as u64, self.m as u64, self.seed] {
            w.write_all(&v.to_le_bytes())?;
        }
        for v in &self.values {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_dump<R: Read>(mut r: R) -> Result<(DumpHeader, Vec<f64>)> {
        let mut magic = [0u8; 5];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Io("not a QHLX1 path dump".into()));
        }
        let mut u = [0u8; 8];
        let mut next = |r: &mut R| -> Result<u64> {
            r.read_exact(&mut u)?;
            Ok(u64::from_le_bytes(u))
        };
        let id_len = next(&mut r)? as usize;
        let mut id = vec![0u8; id_len];
        r.read_exact(&mut id)?;
        let model_id = String::from_utf8(id).map_err(|e| Error::Io(e.to_string()))?;
        let n = next(&mut r)?;
        let m = next(&mut r)?;
        let seed = next(&mut r)?;
        let count = (n as usize + 1) * m as usize;
        let mut values = Vec::with_capacity(count);
        let mut b = [0u8; 8];
        for _ in 0..count {
            r.read_exact(&mut b)?;
            values.push(f64::from_le_bytes(b));
        }
        Ok((DumpHeader { model_id, n, m, seed }, values))
    }
}

pub fn sample_paths(model: &ProcessModel, grid: TimeGrid, m: usize, rng: RngSpec) -> Result<PathBatch> {
    Sampler::new(model, grid)?.sample(m, rng)
}
