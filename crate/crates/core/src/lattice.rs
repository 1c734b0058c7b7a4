//! Lattice geometry, microstates and their path representations.
//!
//! Coordinates are 1-based throughout: vertex `(n, m)` sits on column `n` in
//! `1..=L` (west to east) and row `m` in `1..=M` (south to north).
//!
//! A configuration is stored by the rows of the horizontal steps of its
//! paths. Path `j` (0-based index, numbered from the west) enters through the
//! south stub of column `j + 1` and leaves through the north stub of column
//! `L - N + j + 1`, taking exactly `L - N` horizontal steps on the way.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact;

/// Maximum number of configurations `enumerate_all` agrees to walk.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

pub const CONFIG_FORMAT: &str = "4vm-config/1";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LatticeError {
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("forbidden vertex (west={west}, south={south}, east={east}, north={north})")]
    ForbiddenVertex {
        west: bool,
        south: bool,
        east: bool,
        north: bool,
    },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("enumeration too large: {count} configurations exceed the limit of {limit}")]
    TooLarge { count: String, limit: u64 },
}

/// Domain size `L x M` with `N` paths.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "SpecRecord", into = "SpecRecord")]
pub struct LatticeSpec {
    width: usize,
    height: usize,
    paths: usize,
}

#[derive(Serialize, Deserialize)]
struct SpecRecord {
    #[serde(rename = "L")]
    width: usize,
    #[serde(rename = "M")]
    height: usize,
    #[serde(rename = "N")]
    paths: usize,
}

impl TryFrom<SpecRecord> for LatticeSpec {
    type Error = LatticeError;

    fn try_from(r: SpecRecord) -> Result<Self, Self::Error> {
        LatticeSpec::new(r.width, r.height, r.paths)
    }
}

impl From<LatticeSpec> for SpecRecord {
    fn from(s: LatticeSpec) -> Self {
        SpecRecord {
            width: s.width,
            height: s.height,
            paths: s.paths,
        }
    }
}

impl LatticeSpec {
    /// Validates `M >= L > N >= 1`.
    pub fn new(width: usize, height: usize, paths: usize) -> Result<Self, LatticeError> {
        if paths < 1 {
            return Err(LatticeError::ConstraintViolation(format!(
                "N >= 1 failed (N = {paths})"
            )));
        }
        Self::with_empty(width, height, paths)
    }

    /// Like [`LatticeSpec::new`] but also admits `N = 0`, the empty path
    /// system with exactly one configuration.
    pub fn with_empty(width: usize, height: usize, paths: usize) -> Result<Self, LatticeError> {
        if height < width {
            return Err(LatticeError::ConstraintViolation(format!(
                "M >= L failed (M = {height}, L = {width})"
            )));
        }
        if width <= paths {
            return Err(LatticeError::ConstraintViolation(format!(
                "L > N failed (L = {width}, N = {paths})"
            )));
        }
        Ok(LatticeSpec {
            width,
            height,
            paths,
        })
    }

    /// Number of columns `L`.
    pub fn width(&self) -> usize {
        self.width
    }

    /// Number of rows `M`.
    pub fn height(&self) -> usize {
        self.height
    }

    /// Number of paths `N`.
    pub fn paths(&self) -> usize {
        self.paths
    }

    /// Horizontal steps taken by every path, `L - N`.
    pub fn steps(&self) -> usize {
        self.width - self.paths
    }

    /// Height `K = M - L + N + 1` of the lattice carrying the shifted paths.
    pub fn nilp_height(&self) -> usize {
        self.height - self.width + self.paths + 1
    }

    /// The particle-hole partner `(L, M, L - N)`.
    pub fn dual(&self) -> LatticeSpec {
        LatticeSpec {
            width: self.width,
            height: self.height,
            paths: self.width - self.paths,
        }
    }

    /// Vertex-type counts shared by every configuration.
    pub fn vertex_counts(&self) -> VertexCounts {
        let (l, m, n) = (self.width, self.height, self.paths);
        VertexCounts {
            a: (l - n) * (m - n),
            b: n * (m - l + n),
            c: 2 * n * (l - n),
        }
    }
}

impl fmt::Display for LatticeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.width, self.height, self.paths)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VertexCounts {
    pub a: usize,
    pub b: usize,
    pub c: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum VertexType {
    /// All four edges thin.
    A,
    /// Thick south and north edges.
    B,
    /// Thick south and east edges: the path turns right.
    C1,
    /// Thick west and north edges: the path turns up.
    C2,
}

impl VertexType {
    pub const ALL: [VertexType; 4] = [VertexType::A, VertexType::B, VertexType::C1, VertexType::C2];

    pub fn edges(self) -> VertexEdges {
        let (west, south, east, north) = match self {
            VertexType::A => (false, false, false, false),
            VertexType::B => (false, true, false, true),
            VertexType::C1 => (false, true, true, false),
            VertexType::C2 => (true, false, false, true),
        };
        VertexEdges {
            west,
            south,
            east,
            north,
        }
    }

    pub fn is_c(self) -> bool {
        matches!(self, VertexType::C1 | VertexType::C2)
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Thick (`true`) or thin state of the four edges around a vertex.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct VertexEdges {
    pub west: bool,
    pub south: bool,
    pub east: bool,
    pub north: bool,
}

pub fn classify_vertex(e: VertexEdges) -> Result<VertexType, LatticeError> {
    match (e.west, e.south, e.east, e.north) {
        (false, false, false, false) => Ok(VertexType::A),
        (false, true, false, true) => Ok(VertexType::B),
        (false, true, true, false) => Ok(VertexType::C1),
        (true, false, false, true) => Ok(VertexType::C2),
        (west, south, east, north) => Err(LatticeError::ForbiddenVertex {
            west,
            south,
            east,
            north,
        }),
    }
}

/// A microstate, stored as the rows of the horizontal steps of each path.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FourVertexConfig {
    spec: LatticeSpec,
    step_rows: Vec<Vec<usize>>,
}

impl FourVertexConfig {
    /// `step_rows[j][i]` is the row of the `(i+1)`-th horizontal step of path
    /// `j` (0-based, west to east).
    pub fn from_step_rows(spec: LatticeSpec, step_rows: Vec<Vec<usize>>) -> Result<Self, LatticeError> {
        let (n, steps, height) = (spec.paths(), spec.steps(), spec.height());
        if step_rows.len() != n {
            return Err(LatticeError::InvalidConfig(format!(
                "expected {n} paths, got {}",
                step_rows.len()
            )));
        }
        for (j, path) in step_rows.iter().enumerate() {
            if path.len() != steps {
                return Err(LatticeError::InvalidConfig(format!(
                    "path {} has {} horizontal steps, expected {steps}",
                    j + 1,
                    path.len()
                )));
            }
            if path.iter().any(|&h| h < 1 || h > height) {
                return Err(LatticeError::InvalidConfig(format!(
                    "path {} leaves the rows 1..={height}",
                    j + 1
                )));
            }
            if path.windows(2).any(|w| w[0] >= w[1]) {
                return Err(LatticeError::InvalidConfig(format!(
                    "path {} takes two consecutive horizontal steps",
                    j + 1
                )));
            }
        }
        for j in 1..n {
            for i in 0..steps {
                if step_rows[j][i] >= step_rows[j - 1][i] {
                    return Err(LatticeError::InvalidConfig(format!(
                        "paths {} and {} touch",
                        j,
                        j + 1
                    )));
                }
            }
        }
        Ok(FourVertexConfig { spec, step_rows })
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn step_rows(&self) -> &[Vec<usize>] {
        &self.step_rows
    }

    /// Vertex types of the whole domain.
    pub fn vertex_grid(&self) -> VertexGrid {
        let spec = self.spec;
        let mut grid = VertexGrid::filled(spec.width(), spec.height(), VertexType::A);
        for (j, path) in self.step_rows.iter().enumerate() {
            let mut column = j + 1;
            let mut entry: Option<usize> = None;
            for i in 0..=path.len() {
                let turn = path.get(i).copied();
                let first_b = entry.map_or(1, |r| r + 1);
                let end = turn.unwrap_or(spec.height() + 1);
                for m in first_b..end {
                    grid.set(column, m, VertexType::B);
                }
                if let Some(r) = entry {
                    grid.set(column, r, VertexType::C2);
                }
                if let Some(h) = turn {
                    grid.set(column, h, VertexType::C1);
                    column += 1;
                }
                entry = turn;
            }
        }
        grid
    }

    pub fn edge_grid(&self) -> EdgeGrid {
        let spec = self.spec;
        let mut grid = EdgeGrid::empty(spec.width(), spec.height());
        for (j, path) in self.step_rows.iter().enumerate() {
            let mut column = j + 1;
            // Vertical edge index `e` joins rows e and e+1 (0 and M are stubs).
            let mut from = 0;
            for &h in path {
                for e in from..h {
                    grid.set_vertical(column, e, true);
                }
                grid.set_horizontal(column, h, true);
                column += 1;
                from = h;
            }
            for e in from..=spec.height() {
                grid.set_vertical(column, e, true);
            }
        }
        grid
    }

    /// Image under the point reflection `(n, m) -> (L+1-n, M+1-m)`; turns
    /// exchange C1 and C2.
    pub fn reflect(&self) -> FourVertexConfig {
        let spec = self.spec;
        let (n, steps) = (spec.paths(), spec.steps());
        let step_rows = (0..n)
            .map(|j| {
                let source = &self.step_rows[n - 1 - j];
                (0..steps)
                    .map(|i| spec.height() + 1 - source[steps - 1 - i])
                    .collect()
            })
            .collect();
        FourVertexConfig { spec, step_rows }
    }

    /// Particle-hole image on `(L, M, L - N)`: every vertical edge flips its
    /// state, then columns are mirrored `n -> L+1-n`.
    pub fn particle_hole(&self) -> FourVertexConfig {
        let grid = self.edge_grid();
        let (width, height) = (grid.width, grid.height);
        let mut out = EdgeGrid::empty(width, height);
        for col in 1..=width {
            for e in 0..=height {
                out.set_vertical(col, e, !grid.vertical(width + 1 - col, e));
            }
        }
        for gap in 0..=width {
            for row in 1..=height {
                out.set_horizontal(gap, row, grid.horizontal(width - gap, row));
            }
        }
        out.to_config(self.spec.dual())
            .expect("particle-hole image of a valid configuration is valid")
    }

    pub fn to_nilp(&self) -> PathSystem {
        let ordinates = self
            .step_rows
            .iter()
            .map(|path| path.iter().enumerate().map(|(i, &h)| h - i).collect())
            .collect();
        PathSystem {
            spec: self.spec,
            ordinates,
        }
    }

    pub fn from_nilp(paths: &PathSystem) -> FourVertexConfig {
        let step_rows = paths
            .ordinates
            .iter()
            .map(|path| path.iter().enumerate().map(|(i, &g)| g + i).collect())
            .collect();
        FourVertexConfig {
            spec: paths.spec,
            step_rows,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("configuration serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, LatticeError> {
        serde_json::from_str(text).map_err(|e| LatticeError::InvalidConfig(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct ConfigRecord {
    format: String,
    spec: LatticeSpec,
    /// 1-based rows of the horizontal steps, one list per path.
    paths: Vec<Vec<usize>>,
}

impl Serialize for FourVertexConfig {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        ConfigRecord {
            format: CONFIG_FORMAT.to_string(),
            spec: self.spec,
            paths: self.step_rows.clone(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for FourVertexConfig {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let record = ConfigRecord::deserialize(deserializer)?;
        if record.format != CONFIG_FORMAT {
            return Err(serde::de::Error::custom(format!(
                "unsupported format tag {:?}",
                record.format
            )));
        }
        FourVertexConfig::from_step_rows(record.spec, record.paths).map_err(serde::de::Error::custom)
    }
}

/// Vertex types on the `L x M` grid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VertexGrid {
    width: usize,
    height: usize,
    cells: Vec<VertexType>,
}

impl VertexGrid {
    fn filled(width: usize, height: usize, t: VertexType) -> Self {
        VertexGrid {
            width,
            height,
            cells: vec![t; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn get(&self, column: usize, row: usize) -> VertexType {
        self.cells[(row - 1) * self.width + column - 1]
    }

    fn set(&mut self, column: usize, row: usize, t: VertexType) {
        self.cells[(row - 1) * self.width + column - 1] = t;
    }

    pub fn count(&self, t: VertexType) -> usize {
        self.cells.iter().filter(|&&c| c == t).count()
    }

    /// Cells in row-major order, row 1 first.
    pub fn cells(&self) -> &[VertexType] {
        &self.cells
    }
}

/// Explicit edge states, including the boundary stubs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeGrid {
    width: usize,
    height: usize,
    // vertical[(col-1)*(height+1) + e]: edge between rows e and e+1 of column col.
    vertical: Vec<bool>,
    // horizontal[gap*height + row-1]: edge between columns gap and gap+1 on row.
    horizontal: Vec<bool>,
}

impl EdgeGrid {
    pub fn empty(width: usize, height: usize) -> Self {
        EdgeGrid {
            width,
            height,
            vertical: vec![false; width * (height + 1)],
            horizontal: vec![false; (width + 1) * height],
        }
    }

    /// Vertical edge of `column` between rows `e` and `e + 1`; `e = 0` is the
    /// south stub and `e = M` the north stub.
    pub fn vertical(&self, column: usize, e: usize) -> bool {
        self.vertical[(column - 1) * (self.height + 1) + e]
    }

    pub fn set_vertical(&mut self, column: usize, e: usize, thick: bool) {
        self.vertical[(column - 1) * (self.height + 1) + e] = thick;
    }

    /// Horizontal edge on `row` between columns `gap` and `gap + 1`; `gap = 0`
    /// is the west stub and `gap = L` the east stub.
    pub fn horizontal(&self, gap: usize, row: usize) -> bool {
        self.horizontal[gap * self.height + row - 1]
    }

    pub fn set_horizontal(&mut self, gap: usize, row: usize, thick: bool) {
        self.horizontal[gap * self.height + row - 1] = thick;
    }

    pub fn vertex_edges(&self, column: usize, row: usize) -> VertexEdges {
        VertexEdges {
            west: self.horizontal(column - 1, row),
            south: self.vertical(column, row - 1),
            east: self.horizontal(column, row),
            north: self.vertical(column, row),
        }
    }

    /// Checks the boundary conditions of `spec` and every vertex, then reads
    /// off the paths.
    pub fn to_config(&self, spec: LatticeSpec) -> Result<FourVertexConfig, LatticeError> {
        let (width, height, n) = (spec.width(), spec.height(), spec.paths());
        if width != self.width || height != self.height {
            return Err(LatticeError::InvalidConfig(format!(
                "grid is {}x{}, spec needs {width}x{height}",
                self.width, self.height
            )));
        }
        for col in 1..=width {
            if self.vertical(col, 0) != (col <= n) {
                return Err(LatticeError::InvalidConfig(format!(
                    "south stub of column {col} violates the boundary condition"
                )));
            }
            if self.vertical(col, height) != (col > width - n) {
                return Err(LatticeError::InvalidConfig(format!(
                    "north stub of column {col} violates the boundary condition"
                )));
            }
        }
        for row in 1..=height {
            if self.horizontal(0, row) || self.horizontal(width, row) {
                return Err(LatticeError::InvalidConfig(format!(
                    "side stub on row {row} is thick"
                )));
            }
        }
        let mut types = VertexGrid::filled(width, height, VertexType::A);
        for col in 1..=width {
            for row in 1..=height {
                types.set(col, row, classify_vertex(self.vertex_edges(col, row))?);
            }
        }
        let mut step_rows = Vec::with_capacity(n);
        for start in 1..=n {
            let (mut col, mut row) = (start, 1);
            let mut steps = Vec::new();
            while row <= height {
                match types.get(col, row) {
                    VertexType::B | VertexType::C2 => row += 1,
                    VertexType::C1 => {
                        steps.push(row);
                        col += 1;
                    }
                    VertexType::A => {
                        return Err(LatticeError::InvalidConfig(format!(
                            "path from column {start} breaks at ({col}, {row})"
                        )))
                    }
                }
            }
            step_rows.push(steps);
        }
        FourVertexConfig::from_step_rows(spec, step_rows)
    }
}

/// The shifted (non-intersecting lattice path) picture on the `L x K`
/// lattice: the `i`-th horizontal step of a path moves down by `i - 1` rows.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct PathSystem {
    spec: LatticeSpec,
    ordinates: Vec<Vec<usize>>,
}

impl PathSystem {
    /// `ordinates[j][k]` is the row, in `1..=K`, of the `(k+1)`-th horizontal
    /// step of path `j`. Rows are weakly increasing along a path and strictly
    /// decreasing from one path to the next at equal step index.
    pub fn new(spec: LatticeSpec, ordinates: Vec<Vec<usize>>) -> Result<Self, LatticeError> {
        let (n, steps, k) = (spec.paths(), spec.steps(), spec.nilp_height());
        if ordinates.len() != n || ordinates.iter().any(|p| p.len() != steps) {
            return Err(LatticeError::InvalidConfig(format!(
                "expected {n} paths of {steps} steps"
            )));
        }
        for (j, path) in ordinates.iter().enumerate() {
            if path.iter().any(|&g| g < 1 || g > k) {
                return Err(LatticeError::InvalidConfig(format!(
                    "path {} leaves the rows 1..={k}",
                    j + 1
                )));
            }
            if path.windows(2).any(|w| w[0] > w[1]) {
                return Err(LatticeError::InvalidConfig(format!(
                    "path {} is not up-right",
                    j + 1
                )));
            }
            if j > 0 && (0..steps).any(|i| path[i] >= ordinates[j - 1][i]) {
                return Err(LatticeError::InvalidConfig(format!(
                    "paths {} and {} intersect",
                    j,
                    j + 1
                )));
            }
        }
        Ok(PathSystem { spec, ordinates })
    }

    pub fn spec(&self) -> LatticeSpec {
        self.spec
    }

    pub fn ordinates(&self) -> &[Vec<usize>] {
        &self.ordinates
    }

    /// Rows at which the paths cross the horizontal edges between columns
    /// `gap` and `gap + 1` of the `L x K` lattice, for `gap` in `1..L`.
    ///
    /// Paths are numbered from the bottom here, and extended so that path
    /// `j` (1-based) runs from `(1, j)` to `(L, K - N + j)`; the result is
    /// strictly increasing.
    pub fn column_crossings(&self, gap: usize) -> Vec<usize> {
        let spec = self.spec;
        let (n, steps, k) = (spec.paths(), spec.steps(), spec.nilp_height());
        assert!(gap >= 1 && gap < spec.width(), "gap {gap} out of range");
        (1..=n)
            .map(|from_bottom| {
                let from_top = n - from_bottom + 1;
                if gap < from_top {
                    from_bottom
                } else if gap < steps + from_top {
                    self.ordinates[from_top - 1][gap - from_top]
                } else {
                    k - n + from_bottom
                }
            })
            .collect()
    }
}

/// The four corner triangles whose vertex types are the same in every
/// configuration.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FrozenCorners {
    pub south_west: Vec<(usize, usize)>,
    pub north_east: Vec<(usize, usize)>,
    pub north_west: Vec<(usize, usize)>,
    pub south_east: Vec<(usize, usize)>,
}

impl FrozenCorners {
    /// Every frozen vertex with its forced type.
    pub fn forced(&self) -> impl Iterator<Item = ((usize, usize), VertexType)> + '_ {
        let b = self.south_west.iter().chain(&self.north_east).map(|&v| (v, VertexType::B));
        let a = self.north_west.iter().chain(&self.south_east).map(|&v| (v, VertexType::A));
        b.chain(a)
    }
}

pub fn frozen_region(spec: LatticeSpec) -> FrozenCorners {
    let (l, m, n) = (spec.width() as i64, spec.height() as i64, spec.paths() as i64);
    let mut corners = FrozenCorners {
        south_west: Vec::new(),
        north_east: Vec::new(),
        north_west: Vec::new(),
        south_east: Vec::new(),
    };
    for col in 1..=l {
        for row in 1..=m {
            let v = (col as usize, row as usize);
            if row + col <= n {
                corners.south_west.push(v);
            }
            if row + col >= m + l - n + 2 {
                corners.north_east.push(v);
            }
            if row - col >= m - l + n + 1 {
                corners.north_west.push(v);
            }
            if row - col <= -n - 1 {
                corners.south_east.push(v);
            }
        }
    }
    corners
}

/// Every configuration of `spec`, each exactly once, in a fixed order.
pub fn enumerate_all(spec: LatticeSpec) -> Result<ConfigIter, LatticeError> {
    let count = exact::macmahon(spec.paths(), spec.steps(), spec.height() - spec.width() + 1);
    if count > ENUMERATION_LIMIT.into() {
        return Err(LatticeError::TooLarge {
            count: count.to_string(),
            limit: ENUMERATION_LIMIT,
        });
    }
    Ok(ConfigIter::new(spec))
}

/// Odometer over shifted path arrays. Cells are filled from the bottom path
/// upwards, step index ascending; every partial filling extends, so
/// incrementing the last incrementable cell and resetting the tail to its
/// lower bounds visits each array exactly once.
pub struct ConfigIter {
    spec: LatticeSpec,
    cells: Vec<(usize, usize)>,
    grid: Vec<Vec<usize>>,
    done: bool,
}

impl ConfigIter {
    fn new(spec: LatticeSpec) -> Self {
        let (n, steps) = (spec.paths(), spec.steps());
        let cells: Vec<(usize, usize)> = (0..n)
            .rev()
            .flat_map(|j| (0..steps).map(move |k| (j, k)))
            .collect();
        let mut it = ConfigIter {
            spec,
            cells,
            grid: vec![vec![0; steps]; n],
            done: false,
        };
        it.reset_from(0);
        it
    }

    fn lower(&self, j: usize, k: usize) -> usize {
        let mut lo = 1;
        if k > 0 {
            lo = lo.max(self.grid[j][k - 1]);
        }
        if j + 1 < self.spec.paths() {
            lo = lo.max(self.grid[j + 1][k] + 1);
        }
        lo
    }

    fn reset_from(&mut self, idx: usize) {
        for t in idx..self.cells.len() {
            let (j, k) = self.cells[t];
            self.grid[j][k] = self.lower(j, k);
        }
    }

    fn advance(&mut self) {
        let k = self.spec.nilp_height();
        for t in (0..self.cells.len()).rev() {
            let (j, s) = self.cells[t];
            if self.grid[j][s] < k - j {
                self.grid[j][s] += 1;
                self.reset_from(t + 1);
                return;
            }
        }
        self.done = true;
    }
}

impl Iterator for ConfigIter {
    type Item = FourVertexConfig;

    fn next(&mut self) -> Option<FourVertexConfig> {
        if self.done {
            return None;
        }
        let paths = PathSystem {
            spec: self.spec,
            ordinates: self.grid.clone(),
        };
        self.advance();
        Some(FourVertexConfig::from_nilp(&paths))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_validation() {
        assert_eq!(LatticeSpec::new(15, 25, 6).unwrap().nilp_height(), 17);
        assert_eq!(LatticeSpec::new(2, 2, 1).unwrap().nilp_height(), 2);
        let err = LatticeSpec::new(3, 2, 1).unwrap_err();
        assert!(err.to_string().contains("M >= L"), "{err}");
        assert!(LatticeSpec::new(3, 3, 3).is_err());
        assert!(LatticeSpec::new(3, 3, 0).is_err());
        assert!(LatticeSpec::with_empty(3, 3, 0).is_ok());
    }

    #[test]
    fn counts_match_formulas() {
        let c = LatticeSpec::new(15, 25, 6).unwrap().vertex_counts();
        assert_eq!((c.a, c.b, c.c), (171, 96, 108));
        let c = LatticeSpec::new(2, 2, 1).unwrap().vertex_counts();
        assert_eq!((c.a, c.b, c.c), (1, 1, 2));
    }

    #[test]
    fn classify_rejects_six_vertex_extras() {
        let e = |w, s, ea, n| VertexEdges {
            west: w,
            south: s,
            east: ea,
            north: n,
        };
        assert_eq!(classify_vertex(e(false, false, false, false)), Ok(VertexType::A));
        assert_eq!(classify_vertex(e(false, true, false, true)), Ok(VertexType::B));
        assert!(classify_vertex(e(true, false, true, false)).is_err());
        assert!(classify_vertex(e(true, true, true, true)).is_err());
        assert!(classify_vertex(e(true, true, false, false)).is_err());
        for t in VertexType::ALL {
            assert_eq!(classify_vertex(t.edges()), Ok(t));
        }
    }

    #[test]
    fn smallest_lattice() {
        let spec = LatticeSpec::new(2, 2, 1).unwrap();
        let all: Vec<_> = enumerate_all(spec).unwrap().collect();
        assert_eq!(all.len(), 2);
        let rows: Vec<_> = all.iter().map(|c| c.step_rows()[0][0]).collect();
        assert_eq!(rows, vec![1, 2]);
        // Turning on row 2 leaves vertex (1, 1) as a straight pass.
        assert_eq!(all[1].vertex_grid().get(1, 1), VertexType::B);
        assert_eq!(all[0].vertex_grid().get(1, 2), VertexType::A);
    }

    #[test]
    fn rejects_horizontal_pass_and_touching() {
        let spec = LatticeSpec::new(4, 5, 2).unwrap();
        assert!(FourVertexConfig::from_step_rows(spec, vec![vec![3, 3], vec![1, 2]]).is_err());
        assert!(FourVertexConfig::from_step_rows(spec, vec![vec![3, 4], vec![3, 5]]).is_err());
        assert!(FourVertexConfig::from_step_rows(spec, vec![vec![3, 5], vec![2, 4]]).is_ok());
    }

    #[test]
    fn json_round_trip() {
        let spec = LatticeSpec::new(4, 5, 2).unwrap();
        let c = FourVertexConfig::from_step_rows(spec, vec![vec![3, 5], vec![2, 4]]).unwrap();
        let text = c.to_json();
        assert!(text.contains("\"format\":\"4vm-config/1\""));
        assert!(text.contains("\"L\":4"));
        assert_eq!(FourVertexConfig::from_json(&text).unwrap(), c);
        let bad = text.replace("4vm-config/1", "4vm-config/9");
        assert!(FourVertexConfig::from_json(&bad).is_err());
    }

    #[test]
    fn edge_grid_round_trip() {
        let spec = LatticeSpec::new(5, 7, 2).unwrap();
        for c in enumerate_all(spec).unwrap() {
            let grid = c.edge_grid();
            assert_eq!(grid.to_config(spec).unwrap(), c);
            let types = c.vertex_grid();
            for col in 1..=5 {
                for row in 1..=7 {
                    assert_eq!(classify_vertex(grid.vertex_edges(col, row)).unwrap(), types.get(col, row));
                }
            }
        }
    }

    #[test]
    fn empty_path_system_has_one_config() {
        let spec = LatticeSpec::with_empty(3, 4, 0).unwrap();
        let all: Vec<_> = enumerate_all(spec).unwrap().collect();
        assert_eq!(all.len(), 1);
        assert_eq!(all[0].vertex_grid().count(VertexType::A), 12);
    }

    #[test]
    fn guard_refuses_huge_enumeration() {
        let spec = LatticeSpec::new(15, 25, 6).unwrap();
        assert!(matches!(enumerate_all(spec), Err(LatticeError::TooLarge { .. })));
    }

    #[test]
    fn frozen_triangle_sizes() {
        let f = frozen_region(LatticeSpec::new(15, 25, 6).unwrap());
        assert_eq!(f.north_west.len(), 36);
        assert_eq!(f.south_west.len(), 15);
        let f = frozen_region(LatticeSpec::new(2, 2, 1).unwrap());
        assert!(f.south_west.is_empty());
        assert!(f.north_west.is_empty());
    }

    #[test]
    fn crossings_are_strictly_increasing() {
        let spec = LatticeSpec::new(6, 8, 3).unwrap();
        for c in enumerate_all(spec).unwrap() {
            let p = c.to_nilp();
            for gap in 1..6 {
                let y = p.column_crossings(gap);
                assert!(y.windows(2).all(|w| w[0] < w[1]), "{y:?}");
                assert!(y.iter().all(|&v| v >= 1 && v <= spec.nilp_height()));
            }
        }
    }
}
