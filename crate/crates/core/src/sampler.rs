//! Exact uniform sampling by monotone coupling from the past.
//!
//! The chain lives on the shifted path arrays of [`PathSystem`]: cell
//! `(j, k)` holds the row of the `k`-th horizontal step of path `j`. Rows
//! increase weakly along a path and decrease strictly from one path to the
//! next, so the admissible arrays form a distributive lattice under the
//! componentwise order, with a least and a greatest element. A move picks a
//! cell and tries to shift it by one row; the move is symmetric, which makes
//! the uniform measure stationary, and it is monotone in the state, which
//! lets two chains started from the extremes sandwich every other chain.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::hahn::{AfpQuery, EfpQuery};
use crate::lattice::{FourVertexConfig, LatticeSpec, PathSystem, VertexGrid, VertexType};

/// Environment variable overriding [`DEFAULT_MAX_TIME`].
pub const MAX_TIME_ENV: &str = "ARCTIC4VM_TMAX";

/// Default cutoff on the number of time steps run into the past.
pub const DEFAULT_MAX_TIME: u64 = 1 << 24;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SamplerError {
    /// The chains had not coalesced from `reached_time` steps in the past.
    /// Rerunning with `initial_time = 2 * reached_time` resumes the search
    /// and yields the same sample as an unlimited run.
    #[error("no coalescence from {reached_time} steps in the past (seed {seed})")]
    Timeout { seed: u64, reached_time: u64 },
    #[error("invalid sampler option: {0}")]
    InvalidOption(String),
}

/// Shifted path array with a one-cell border of sentinels, so that the
/// bounds of a cell are read off its four neighbours without branching.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct ChainState {
    spec: LatticeSpec,
    stride: usize,
    cells: Vec<u16>,
}

impl ChainState {
    fn filled(spec: LatticeSpec, value: impl Fn(usize, usize) -> usize) -> Self {
        let (n, steps, k) = (spec.paths(), spec.steps(), spec.nilp_height());
        assert!(k < u16::MAX as usize, "lattice too tall for the chain state");
        let stride = steps + 2;
        let mut cells = vec![0u16; (n + 2) * stride];
        for r in 0..n + 2 {
            for c in 0..stride {
                // Row 0 lies above the top path, row n + 1 below the bottom
                // one; column 0 and column steps + 1 pin the path ends.
                cells[r * stride + c] = if r == 0 {
                    (k + 1) as u16
                } else if r == n + 1 {
                    0
                } else if c == 0 {
                    1
                } else if c == steps + 1 {
                    k as u16
                } else {
                    value(r - 1, c - 1) as u16
                };
            }
        }
        ChainState { spec, stride, cells }
    }

    /// Every path as low as possible.
    pub fn min_state(spec: LatticeSpec) -> Self {
        let n = spec.paths();
        Self::filled(spec, |j, _| n - j)
    }

    /// Every path as high as possible.
    pub fn max_state(spec: LatticeSpec) -> Self {
        let k = spec.nilp_height();
        Self::filled(spec, |j, _| k - j)
    }

    pub fn from_paths(paths: &PathSystem) -> Self {
        let ords = paths.ordinates();
        Self::filled(paths.spec(), |j, k| ords[j][k])
    }

    pub fn to_paths(&self) -> PathSystem {
        PathSystem::new(self.spec, self.ordinates()).expect("chain states are admissible")
    }

    pub fn to_config(&self) -> FourVertexConfig {
        FourVertexConfig::from_nilp(&self.to_paths())
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    /// Row of the `(step + 1)`-th horizontal step of path `path`, both 0-based.
    pub fn get(&self, path: usize, step: usize) -> usize {
        self.cells[(path + 1) * self.stride + step + 1] as usize
    }

    pub fn ordinates(&self) -> Vec<Vec<usize>> {
        (0..self.spec.paths())
            .map(|j| (0..self.spec.steps()).map(|k| self.get(j, k)).collect())
            .collect()
    }

    /// Number of movable cells.
    pub fn sites(&self) -> usize {
        self.spec.paths() * self.spec.steps()
    }

    /// Column crossings of the extended paths, numbered from the bottom:
    /// entry `[j][gap - 1]` for `gap` in `1..L`.
    pub fn crossings(&self) -> Vec<Vec<usize>> {
        let paths = self.to_paths();
        let by_gap: Vec<Vec<usize>> = (1..self.spec.width()).map(|g| paths.column_crossings(g)).collect();
        (0..self.spec.paths())
            .map(|j| by_gap.iter().map(|col| col[j]).collect())
            .collect()
    }

    /// Componentwise order.
    pub fn is_below(&self, other: &ChainState) -> bool {
        self.cells.iter().zip(&other.cells).all(|(a, b)| a <= b)
    }

    /// Applies a move in place and reports whether the cell changed.
    #[inline]
    pub fn apply(&mut self, update: Update) -> bool {
        let i = (update.path + 1) * self.stride + update.step + 1;
        let v = self.cells[i];
        // Branch-free: the direction is a coin flip, so branches on it or on
        // the outcome would mispredict half the time.
        let up = self.cells[i + 1].min(self.cells[i - self.stride].wrapping_sub(1));
        let down = self.cells[i - 1].max(self.cells[i + self.stride].wrapping_add(1));
        let (moved, next) = match update.direction {
            Direction::Up => (v < up, v.wrapping_add(1)),
            Direction::Down => (v > down, v.wrapping_sub(1)),
        };
        self.cells[i] = if moved { next } else { v };
        moved
    }
}

impl fmt::Debug for ChainState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChainState")
            .field("spec", &self.spec)
            .field("ordinates", &self.ordinates())
            .finish()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Direction {
    Up,
    Down,
}

/// A proposed move of one cell of the path array (0-based indices).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Update {
    pub path: usize,
    pub step: usize,
    pub direction: Direction,
}

/// Single-site move: the cell moves by one row in the given direction
/// when the result is still admissible, and stays put otherwise.
pub fn glauber_step(state: &ChainState, update: Update) -> ChainState {
    let mut next = state.clone();
    next.apply(update);
    next
}

/// Replayable stream of moves. Time step `t` (counted backwards from the
/// present, starting at 1) is generated from its own ChaCha stream, so any
/// range of steps can be regenerated without storing the ones before it.
#[derive(Debug, Clone, Copy)]
pub struct RandomTape {
    seed: u64,
    paths: usize,
    steps: usize,
}

impl RandomTape {
    pub fn new(spec: LatticeSpec, seed: u64) -> Self {
        RandomTape {
            seed,
            paths: spec.paths(),
            steps: spec.steps(),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Moves per time step: one per cell of the path array.
    pub fn sweep_len(&self) -> usize {
        self.paths * self.steps
    }

    /// The moves of time step `t`, in the order they are applied.
    pub fn sweep(&self, t: u64) -> impl Iterator<Item = Update> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(t);
        let (sites, steps) = (self.sweep_len(), self.steps);
        (0..sites).map(move |_| {
            let bits: u64 = rng.random();
            // Lemire reduction of the high half onto the sites; the low bit
            // picks the direction.
            let site = (((bits >> 32) * sites as u64) >> 32) as usize;
            let direction = if bits & 1 == 0 { Direction::Up } else { Direction::Down };
            Update {
                path: site / steps,
                step: site % steps,
                direction,
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CftpOptions {
    /// First look-back time; later attempts double it.
    pub initial_time: u64,
    /// Give up once the look-back time would exceed this.
    pub max_time: u64,
}

impl Default for CftpOptions {
    fn default() -> Self {
        CftpOptions {
            initial_time: 1,
            max_time: DEFAULT_MAX_TIME,
        }
    }
}

impl CftpOptions {
    /// Defaults, with the cutoff taken from [`MAX_TIME_ENV`] when set.
    pub fn from_env() -> Result<Self, SamplerError> {
        let mut opts = CftpOptions::default();
        if let Ok(v) = std::env::var(MAX_TIME_ENV) {
            opts.max_time = v
                .trim()
                .parse()
                .map_err(|_| SamplerError::InvalidOption(format!("{MAX_TIME_ENV}={v} is not an integer")))?;
        }
        Ok(opts)
    }

    fn validate(&self) -> Result<(), SamplerError> {
        if self.initial_time == 0 || self.max_time == 0 {
            return Err(SamplerError::InvalidOption("times must be positive".into()));
        }
        Ok(())
    }
}

/// A coalesced chain state and the look-back time that produced it.
#[derive(Debug, Clone)]
pub struct CftpRun {
    pub state: ChainState,
    pub coalescence_time: u64,
}

/// Propp-Wilson: run the two extreme states from `T` steps in the past with
/// a shared tape, doubling `T` until they agree at time 0.
pub fn cftp_run(spec: LatticeSpec, seed: u64, opts: &CftpOptions) -> Result<CftpRun, SamplerError> {
    opts.validate()?;
    let tape = RandomTape::new(spec, seed);
    let (bottom, top) = (ChainState::min_state(spec), ChainState::max_state(spec));
    let mut time = opts.initial_time;
    loop {
        if time > opts.max_time {
            return Err(SamplerError::Timeout {
                seed,
                reached_time: time / 2,
            });
        }
        let (mut lo, mut hi) = (bottom.clone(), top.clone());
        let mut merged = false;
        for t in (1..=time).rev() {
            if merged {
                // Once the extremes agree every chain does; follow one.
                tape.sweep(t).for_each(|u| {
                    lo.apply(u);
                });
            } else {
                for update in tape.sweep(t) {
                    lo.apply(update);
                    hi.apply(update);
                }
                merged = lo == hi;
            }
        }
        if merged {
            return Ok(CftpRun {
                state: lo,
                coalescence_time: time,
            });
        }
        time = time.saturating_mul(2);
    }
}

/// One exact uniform sample with the default options (cutoff from the
/// environment).
pub fn cftp_sample(spec: LatticeSpec, seed: u64) -> Result<FourVertexConfig, SamplerError> {
    let opts = CftpOptions::from_env()?;
    Ok(cftp_run(spec, seed, &opts)?.state.to_config())
}

/// Seed of the `index`-th sample of a batch (splitmix64 of the pair).
pub fn sample_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// `count` independent samples, in index order; they run in parallel.
pub fn cftp_batch(
    spec: LatticeSpec,
    base_seed: u64,
    count: usize,
    opts: &CftpOptions,
) -> Result<Vec<CftpRun>, SamplerError> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| cftp_run(spec, sample_seed(base_seed, i), opts))
        .collect()
}

/// Per-vertex frequencies of the vertex types over a batch of samples.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityFields {
    pub width: usize,
    pub height: usize,
    pub samples: usize,
    /// Counts per vertex, row-major with row 1 first, indexed by
    /// [`VertexType::index`].
    counts: Vec<[u32; 4]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Field {
    A,
    B,
    C,
    /// `rho_c1 - rho_c2`.
    CDifference,
}

impl Field {
    pub const ALL: [Field; 4] = [Field::A, Field::B, Field::C, Field::CDifference];

    pub fn name(self) -> &'static str {
        match self {
            Field::A => "a",
            Field::B => "b",
            Field::C => "c",
            Field::CDifference => "c1-c2",
        }
    }
}

impl DensityFields {
    fn empty(spec: LatticeSpec) -> Self {
        DensityFields {
            width: spec.width(),
            height: spec.height(),
            samples: 0,
            counts: vec![[0; 4]; spec.width() * spec.height()],
        }
    }

    fn add(&mut self, grid: &VertexGrid) {
        for (acc, t) in self.counts.iter_mut().zip(grid.cells()) {
            acc[t.index()] += 1;
        }
        self.samples += 1;
    }

    fn merge(mut self, other: Self) -> Self {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            for t in 0..4 {
                a[t] += b[t];
            }
        }
        self.samples += other.samples;
        self
    }

    pub fn count(&self, column: usize, row: usize, t: VertexType) -> u32 {
        self.counts[(row - 1) * self.width + column - 1][t.index()]
    }

    pub fn get(&self, field: Field, column: usize, row: usize) -> f64 {
        let c = &self.counts[(row - 1) * self.width + column - 1];
        let (c1, c2) = (c[VertexType::C1.index()] as f64, c[VertexType::C2.index()] as f64);
        let v = match field {
            Field::A => c[VertexType::A.index()] as f64,
            Field::B => c[VertexType::B.index()] as f64,
            Field::C => c1 + c2,
            Field::CDifference => c1 - c2,
        };
        v / self.samples as f64
    }

    /// A whole field, row-major with row 1 first.
    pub fn field(&self, field: Field) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.width * self.height);
        for row in 1..=self.height {
            for col in 1..=self.width {
                out.push(self.get(field, col, row));
            }
        }
        out
    }
}

/// Vertex-type densities over `num_samples` exact samples seeded from
/// `base_seed`.
pub fn density_fields(
    spec: LatticeSpec,
    num_samples: usize,
    base_seed: u64,
    opts: &CftpOptions,
) -> Result<DensityFields, SamplerError> {
    if num_samples == 0 {
        return Err(SamplerError::InvalidOption("need at least one sample".into()));
    }
    (0..num_samples as u64)
        .into_par_iter()
        .try_fold(
            || DensityFields::empty(spec),
            |mut acc, i| {
                let run = cftp_run(spec, sample_seed(base_seed, i), opts)?;
                acc.add(&run.state.to_config().vertex_grid());
                Ok(acc)
            },
        )
        .try_reduce(|| DensityFields::empty(spec), |a, b| Ok(a.merge(b)))
}

/// Sample frequency with its binomial standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

impl Estimate {
    fn from_hits(hits: usize, samples: usize) -> Self {
        let mean = hits as f64 / samples as f64;
        let stderr = (mean * (1.0 - mean) / samples as f64).sqrt();
        Estimate { mean, stderr, samples }
    }
}

fn frequency(
    spec: LatticeSpec,
    num_samples: usize,
    seed: u64,
    opts: &CftpOptions,
    event: impl Fn(&VertexGrid) -> bool + Sync,
) -> Result<Estimate, SamplerError> {
    if num_samples == 0 {
        return Err(SamplerError::InvalidOption("need at least one sample".into()));
    }
    let hits = (0..num_samples as u64)
        .into_par_iter()
        .map(|i| {
            let run = cftp_run(spec, sample_seed(seed, i), opts)?;
            Ok(event(&run.state.to_config().vertex_grid()) as usize)
        })
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(Estimate::from_hits(hits, num_samples))
}

/// Monte Carlo estimate of the emptiness formation probability.
pub fn empirical_efp(
    query: &EfpQuery,
    num_samples: usize,
    seed: u64,
    opts: &CftpOptions,
) -> Result<Estimate, SamplerError> {
    frequency(query.spec, num_samples, seed, opts, |g| query.holds(g))
}

/// Monte Carlo estimate of the alternating-phase formation probability.
pub fn empirical_afp(
    query: &AfpQuery,
    num_samples: usize,
    seed: u64,
    opts: &CftpOptions,
) -> Result<Estimate, SamplerError> {
    frequency(query.spec, num_samples, seed, opts, |g| query.holds(g))
}
