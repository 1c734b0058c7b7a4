//! Exact counting: partition functions, refined partition functions,
//! wave functions and the extension counts of the tangent constructions.
//!
//! Everything here is integer arithmetic on `BigInt`; binomials with a
//! negative argument are zero.

use std::cell::RefCell;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::lattice::{LatticeSpec, VertexType};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExactError {
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("invalid occupation: {0}")]
    InvalidOccupation(String),
}

thread_local! {
    static FACTORIALS: RefCell<Vec<BigInt>> = RefCell::new(vec![BigInt::one()]);
}

pub fn factorial(n: usize) -> BigInt {
    FACTORIALS.with(|cell| {
        let mut table = cell.borrow_mut();
        while table.len() <= n {
            let next = table.last().unwrap() * BigInt::from(table.len());
            table.push(next);
        }
        table[n].clone()
    })
}

/// `binom(n, k)`, zero unless `0 <= k <= n`.
pub fn binomial(n: i64, k: i64) -> BigInt {
    if n < 0 || k < 0 || k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k) as usize;
    let n = n as usize;
    let mut acc = BigInt::one();
    for i in 0..k {
        acc *= n - i;
        acc /= i + 1;
    }
    acc
}

/// Determinant by fraction-free (Bareiss) elimination with row pivoting.
pub fn bareiss_determinant(mut a: Vec<Vec<BigInt>>) -> BigInt {
    let n = a.len();
    if n == 0 {
        return BigInt::one();
    }
    assert!(a.iter().all(|row| row.len() == n), "matrix must be square");
    let mut sign = BigInt::one();
    let mut prev = BigInt::one();
    for k in 0..n - 1 {
        if a[k][k].is_zero() {
            match (k + 1..n).find(|&r| !a[r][k].is_zero()) {
                Some(r) => {
                    a.swap(k, r);
                    sign = -sign;
                }
                None => return BigInt::zero(),
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                let v = &a[i][j] * &a[k][k] - &a[i][k] * &a[k][j];
                a[i][j] = v / &prev;
            }
        }
        prev = a[k][k].clone();
    }
    sign * &a[n - 1][n - 1]
}

/// Product of factorials and reciprocal factorials that is known to be an
/// integer. A reciprocal factorial of a negative number is zero.
struct FactorialProduct {
    num: BigInt,
    den: BigInt,
    zero: bool,
}

impl FactorialProduct {
    fn new() -> Self {
        FactorialProduct {
            num: BigInt::one(),
            den: BigInt::one(),
            zero: false,
        }
    }

    fn times(&mut self, n: i64) {
        assert!(n >= 0, "factorial of negative argument {n} in a numerator");
        self.num *= factorial(n as usize);
    }

    fn over(&mut self, n: i64) {
        if n < 0 {
            self.zero = true;
        } else {
            self.den *= factorial(n as usize);
        }
    }

    fn times_int(&mut self, v: impl Into<BigInt>) {
        self.num *= v.into();
    }

    fn value(self) -> BigInt {
        if self.zero {
            return BigInt::zero();
        }
        let (q, r) = self.num.div_rem(&self.den);
        debug_assert!(r.is_zero(), "factorial product is not an integer");
        q
    }
}

/// Product formula for `Z_{L,M,N}` on raw integers; the arguments need not
/// satisfy `M >= L` as long as all factorials are of non-negative numbers.
fn product_formula(l: i64, m: i64, n: i64) -> BigInt {
    let mut p = FactorialProduct::new();
    for j in 1..=n {
        p.times(j - 1);
        p.times(m - n + j);
        p.over(l - n + j - 1);
        p.over(m - l + j);
    }
    p.value()
}

/// Number of configurations, by the product formula. `N = 0` gives 1.
pub fn partition_function(spec: LatticeSpec) -> BigInt {
    product_formula(spec.width() as i64, spec.height() as i64, spec.paths() as i64)
}

/// Number of plane partitions in an `r x s x t` box.
pub fn macmahon(r: usize, s: usize, t: usize) -> BigInt {
    let mut num = BigInt::one();
    let mut den = BigInt::one();
    for i in 1..=r {
        for j in 1..=s {
            num *= i + j + t - 1;
            den *= i + j - 1;
        }
    }
    num / den
}

/// `det binom(M+i-j, L-N+i-j)` over `1 <= i, j <= N`.
pub fn lgv_determinant(spec: LatticeSpec) -> BigInt {
    let (l, m, n) = (spec.width() as i64, spec.height() as i64, spec.paths() as i64);
    let matrix = (1..=n)
        .map(|i| (1..=n).map(|j| binomial(m + i - j, l - n + i - j)).collect())
        .collect();
    bareiss_determinant(matrix)
}

fn check_turn_column(spec: LatticeSpec, column: usize) -> Result<(), ExactError> {
    if column < 1 || column > spec.steps() + 1 {
        return Err(ExactError::OutOfRange(format!(
            "column {column} outside 1..={}",
            spec.steps() + 1
        )));
    }
    Ok(())
}

/// Configurations whose first path leaves the west boundary line at column
/// `column`, i.e. with a b-vertex at `(column, column + M - L + N - 1)`.
pub fn boundary_refined_z1(spec: LatticeSpec, column: usize) -> Result<BigInt, ExactError> {
    check_turn_column(spec, column)?;
    let (l, m, n, c) = (
        spec.width() as i64,
        spec.height() as i64,
        spec.paths() as i64,
        column as i64,
    );
    let mut p = FactorialProduct::new();
    p.times(m - l - 1 + c);
    p.times(l - c);
    p.over(c - 1);
    p.over(l - c - n + 1);
    p.over(m - l + n - 1);
    p.times_int(product_formula(l, m - 1, n - 1));
    Ok(p.value())
}

/// Same count as [`boundary_refined_z1`], as an LGV determinant.
pub fn boundary_refined_z1_lgv(spec: LatticeSpec, column: usize) -> Result<BigInt, ExactError> {
    check_turn_column(spec, column)?;
    let (l, n, k) = (spec.width() as i64, spec.paths() as i64, spec.nilp_height() as i64);
    let ends: Vec<i64> = std::iter::once(column as i64)
        .chain((2..=n).map(|j| l - n + j))
        .collect();
    let matrix = (1..=n)
        .map(|i| ends.iter().map(|&x| binomial(k - n - 2 + x, x - i)).collect())
        .collect();
    Ok(bareiss_determinant(matrix))
}

/// Configurations with an a-vertex at `(L - N + p, M - p)`, `0 <= p <= N`.
pub fn boundary_refined_z2(spec: LatticeSpec, p: usize) -> Result<BigInt, ExactError> {
    if p > spec.paths() {
        return Err(ExactError::OutOfRange(format!("p = {p} outside 0..={}", spec.paths())));
    }
    boundary_refined_z1(spec.dual(), spec.paths() - p + 1)
}

/// Rows at which the paths cross the horizontal edges between columns
/// `column` and `column + 1` of the shifted lattice.
///
/// Paths are numbered from the bottom and run from `(1, j)` to
/// `(L, K - N + j)`; this is the reverse of the west-to-east numbering used
/// by [`crate::lattice::PathSystem`], whose `column_crossings` produces these
/// occupations.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ColumnOccupation {
    column: usize,
    ordinates: Vec<usize>,
}

impl ColumnOccupation {
    pub fn new(spec: LatticeSpec, column: usize, ordinates: Vec<usize>) -> Result<Self, ExactError> {
        if column < 1 || column >= spec.width() {
            return Err(ExactError::InvalidOccupation(format!(
                "column {column} outside 1..{}",
                spec.width()
            )));
        }
        if ordinates.len() != spec.paths() {
            return Err(ExactError::InvalidOccupation(format!(
                "{} ordinates for {} paths",
                ordinates.len(),
                spec.paths()
            )));
        }
        if ordinates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ExactError::InvalidOccupation("ordinates must be strictly increasing".into()));
        }
        if ordinates.iter().any(|&y| y < 1 || y > spec.nilp_height()) {
            return Err(ExactError::InvalidOccupation(format!(
                "ordinates outside 1..={}",
                spec.nilp_height()
            )));
        }
        Ok(ColumnOccupation { column, ordinates })
    }

    pub fn column(&self) -> usize {
        self.column
    }

    pub fn ordinates(&self) -> &[usize] {
        &self.ordinates
    }

    /// Every occupation of `column`, in lexicographic order.
    pub fn all(spec: LatticeSpec, column: usize) -> Vec<ColumnOccupation> {
        let (n, k) = (spec.paths(), spec.nilp_height());
        let mut out = Vec::new();
        let mut current: Vec<usize> = (1..=n).collect();
        loop {
            out.push(ColumnOccupation {
                column,
                ordinates: current.clone(),
            });
            let Some(i) = (0..n).rev().find(|&i| current[i] < k - (n - 1 - i)) else {
                break;
            };
            current[i] += 1;
            for t in i + 1..n {
                current[t] = current[t - 1] + 1;
            }
        }
        out
    }
}

struct ColumnParams {
    n: i64,
    k: i64,
    l: i64,
    column: i64,
    /// Number of bottom paths pinned at `y_j = j`.
    low: i64,
    /// Index of the last path not pinned at `y_j = K - N + j`.
    high: i64,
}

impl ColumnParams {
    fn new(spec: LatticeSpec, column: usize) -> Self {
        let (l, n) = (spec.width() as i64, spec.paths() as i64);
        let column = column as i64;
        ColumnParams {
            n,
            k: spec.nilp_height() as i64,
            l,
            column,
            low: (n - column).max(0),
            high: (l - column).min(n),
        }
    }
}

fn y_at(occ: &ColumnOccupation, j: i64) -> i64 {
    occ.ordinates[(j - 1) as usize] as i64
}

/// West and east partial counts `(Psi1, Psi2)` for paths cut at `occ`.
pub fn wave_functions(spec: LatticeSpec, occ: &ColumnOccupation) -> (BigInt, BigInt) {
    let c = ColumnParams::new(spec, occ.column);
    let y = |j| y_at(occ, j);

    let west = if (1..=c.low).any(|i| y(i) != i) {
        BigInt::zero()
    } else {
        let mut p = FactorialProduct::new();
        for i in c.low + 1..=c.n {
            for j in i + 1..=c.n {
                p.times_int(y(j) - y(i));
            }
            p.times(y(i) - c.n + c.column - 1);
            p.over(y(i) - c.low - 1);
            p.over(i - c.n + c.column - 1);
        }
        p.value()
    };

    let east = if (c.high + 1..=c.n).any(|i| y(i) != c.k - c.n + i) {
        BigInt::zero()
    } else {
        let mut p = FactorialProduct::new();
        for i in 1..=c.high {
            for j in i + 1..=c.high {
                p.times_int(y(j) - y(i));
            }
            let top = c.k + c.l - c.n - c.column - y(i);
            if top < 0 {
                p.zero = true;
            } else {
                p.times(top);
            }
            p.over(c.k - c.n + c.high - y(i));
            p.over(c.l - c.column - i);
        }
        p.value()
    };
    (west, east)
}

/// `(Psi1, Psi2)` as LGV determinants.
pub fn wave_functions_lgv(spec: LatticeSpec, occ: &ColumnOccupation) -> (BigInt, BigInt) {
    let (n, k, l) = (spec.paths() as i64, spec.nilp_height() as i64, spec.width() as i64);
    let col = occ.column as i64;
    let y: Vec<i64> = occ.ordinates.iter().map(|&v| v as i64).collect();
    let west = (0..n as usize)
        .map(|i| (1..=n).map(|j| binomial(y[i] - j + col - 1, y[i] - j)).collect())
        .collect();
    let east = (0..n as usize)
        .map(|i| {
            (1..=n)
                .map(|j| binomial(k - n + l - col - y[i] + j - 1, k - n - y[i] + j))
                .collect()
        })
        .collect();
    (bareiss_determinant(west), bareiss_determinant(east))
}

/// Configurations whose paths cross column `occ.column()` at the given rows,
/// as a squared-Vandermonde measure times a constant.
pub fn column_refined_z(spec: LatticeSpec, occ: &ColumnOccupation) -> BigInt {
    let c = ColumnParams::new(spec, occ.column);
    let y = |j| y_at(occ, j);
    if (1..=c.low).any(|j| y(j) != j) || (c.high + 1..=c.n).any(|j| y(j) != c.k - c.n + j) {
        return BigInt::zero();
    }
    let (n, k, l, col, low, high) = (c.n, c.k, c.l, c.column, c.low, c.high);
    let mut p = FactorialProduct::new();
    for i in 1..=low {
        p.times(i - 1);
        p.times(k + l - n - col - i);
        p.over(k - n + high - i);
        p.over(l - col - i);
    }
    for i in low + 1..=high {
        p.times(2 * low - n + col);
        p.times(l + n - col - 2 * high);
        p.over(i - n + col - 1);
        p.over(l - col - i);
    }
    for i in high + 1..=n {
        p.times(n - i);
        p.times(k - 2 * n + col + i - 1);
        p.over(k - n + i - low - 1);
        p.over(i - n + col - 1);
    }
    // The constant alone need not be an integer; only its product with the
    // measure is.
    for i in low + 1..=high {
        for j in i + 1..=high {
            let d = BigInt::from(y(j) - y(i));
            p.times_int(&d * &d);
        }
        let yi = y(i);
        p.times_int(binomial(yi - n + col + low - 1, yi - low - 1));
        p.times_int(binomial(k + l - col - high - yi, k - n + high - yi));
    }
    p.value()
}

/// The form of [`column_refined_z`] valid for `N <= column <= L - N`, where
/// no path is pinned.
pub fn column_refined_z_simplified(spec: LatticeSpec, occ: &ColumnOccupation) -> Result<BigInt, ExactError> {
    let (n, k, l) = (spec.paths() as i64, spec.nilp_height() as i64, spec.width() as i64);
    let col = occ.column as i64;
    if col < n || col > l - n {
        return Err(ExactError::OutOfRange(format!(
            "column {col} outside {n}..={}",
            l - n
        )));
    }
    let mut p = FactorialProduct::new();
    for i in 1..=n {
        p.times(col - n);
        p.times(l - n - col);
        p.over(col - i);
        p.over(l - col - i);
    }
    let y: Vec<i64> = occ.ordinates.iter().map(|&v| v as i64).collect();
    for i in 0..n as usize {
        for j in i + 1..n as usize {
            let d = BigInt::from(y[j] - y[i]);
            p.times_int(&d * &d);
        }
        p.times_int(binomial(y[i] - n + col - 1, y[i] - 1));
        p.times_int(binomial(k + l - n - col - y[i], k - y[i]));
    }
    Ok(p.value())
}

/// Continuations of the first path in the west tangent construction: from
/// the vertex where it leaves the west boundary at column `p` to the north
/// boundary at column `r`, `1 <= p <= r <= L - N + 1`.
///
/// The path has `L - N - p + 1` rows left and at most one horizontal step
/// per row, giving `binom(L - N - p + 1, r - p)`.
pub fn extension_count_e1(spec: LatticeSpec, p: usize, r: usize) -> Result<BigInt, ExactError> {
    let last = spec.steps() + 1;
    if p < 1 || p > r || r > last {
        return Err(ExactError::OutOfRange(format!(
            "need 1 <= p <= r <= {last}, got p = {p}, r = {r}"
        )));
    }
    Ok(binomial((last - p) as i64, (r - p) as i64))
}

/// Continuations in the north construction, `binom(N - p, r - p)` for
/// `0 <= p <= r <= N`.
pub fn extension_count_e2(spec: LatticeSpec, p: usize, r: usize) -> Result<BigInt, ExactError> {
    let n = spec.paths();
    if p > r || r > n {
        return Err(ExactError::OutOfRange(format!(
            "need 0 <= p <= r <= {n}, got p = {p}, r = {r}"
        )));
    }
    Ok(binomial((n - p) as i64, (r - p) as i64))
}

fn argmax_first(terms: impl Iterator<Item = (usize, BigInt)>) -> usize {
    let mut best: Option<(usize, BigInt)> = None;
    for (p, v) in terms {
        if best.as_ref().is_none_or(|(_, b)| v > *b) {
            best = Some((p, v));
        }
    }
    best.expect("non-empty range").0
}

/// Most likely exit column `p` of the first path for north exit column `r`:
/// `argmax_p Z1(p) E1(p, r)`, ties resolved to the smaller `p`.
pub fn saddle_argmax_west(spec: LatticeSpec, r: usize) -> Result<usize, ExactError> {
    if r < 1 || r > spec.steps() + 1 {
        return Err(ExactError::OutOfRange(format!("r = {r} outside 1..={}", spec.steps() + 1)));
    }
    let terms = (1..=r).map(|p| {
        let z = boundary_refined_z1(spec, p).expect("p in range");
        let e = extension_count_e1(spec, p, r).expect("p <= r");
        (p, z * e)
    });
    Ok(argmax_first(terms))
}

/// `argmax_p Z2(p) E2(p, r)` over `0 <= p <= r`, ties to the smaller `p`.
pub fn saddle_argmax_north(spec: LatticeSpec, r: usize) -> Result<usize, ExactError> {
    if r > spec.paths() {
        return Err(ExactError::OutOfRange(format!("r = {r} outside 0..={}", spec.paths())));
    }
    let terms = (0..=r).map(|p| {
        let z = boundary_refined_z2(spec, p).expect("p in range");
        let e = extension_count_e2(spec, p, r).expect("p <= r");
        (p, z * e)
    });
    Ok(argmax_first(terms))
}

/// Which c-vertex opens the alternating east boundary of the north
/// extension (counting from the top). The source construction names it only
/// by its position in a figure, so both are available.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LeadingTurn {
    #[default]
    C2,
    C1,
}

/// Vertex types imposed on the east boundary of the north extension, listed
/// from row `M + N` downwards, with the a-vertex inserted at row
/// `M + N - 2r` and the c-vertices below it shifted one row south.
pub fn north_extension_east_boundary(
    spec: LatticeSpec,
    r: usize,
    leading: LeadingTurn,
) -> Result<Vec<(usize, VertexType)>, ExactError> {
    let n = spec.paths();
    if r > n {
        return Err(ExactError::OutOfRange(format!("r = {r} outside 0..={n}")));
    }
    let (first, second) = match leading {
        LeadingTurn::C2 => (VertexType::C2, VertexType::C1),
        LeadingTurn::C1 => (VertexType::C1, VertexType::C2),
    };
    let top = spec.height() + n;
    let mut out = Vec::with_capacity(2 * n);
    let mut c_index = 0;
    for offset in 0..2 * n {
        let row = top - offset;
        if offset == 2 * r {
            out.push((row, VertexType::A));
        } else {
            let t = if c_index % 2 == 0 { first } else { second };
            out.push((row, t));
            c_index += 1;
        }
    }
    Ok(out)
}

/// Lossy conversion used for reporting.
pub fn to_f64(v: &BigInt) -> f64 {
    use num_traits::ToPrimitive;
    v.to_f64().unwrap_or(if v.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY })
}
