//! Hahn weights and polynomials, the discrete log-gas on `{0, ..., n}` and
//! its gap probabilities, and the formation probabilities of the vertex
//! model written as gap probabilities.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::exact::{bareiss_determinant, binomial};
use crate::lattice::{LatticeSpec, VertexGrid, VertexType};

/// Largest number of particle placements the direct route will sum over.
pub const DIRECT_SUM_LIMIT: u64 = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HahnError {
    #[error("argument out of range: {0}")]
    OutOfRange(String),
    #[error("direct summation over {0} placements exceeds the limit")]
    TooLarge(String),
    #[error("outside the domain of the formula: {0}")]
    Domain(String),
}

/// `binom(alpha + x, x) * binom(beta + size - x, size - x)`.
pub fn hahn_weight(alpha: i64, beta: i64, size: i64, x: i64) -> Result<BigInt, HahnError> {
    if x < 0 || x > size {
        return Err(HahnError::OutOfRange(format!("x = {x} outside 0..={size}")));
    }
    Ok(weight(alpha, beta, size, x))
}

fn weight(alpha: i64, beta: i64, size: i64, x: i64) -> BigInt {
    binomial(alpha + x, x) * binomial(beta + size - x, size - x)
}

/// Parameters of a gap probability: `particles` points on `{0, ..., size}`
/// with the Hahn weight `(alpha, beta)`, all required to lie in
/// `{0, ..., cutoff}`.
///
/// `cutoff` may fall outside `0..=size`: below zero the event is impossible
/// (for at least one particle), at or above `size` it is certain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HahnParams {
    pub cutoff: i64,
    pub alpha: i64,
    pub beta: i64,
    pub particles: usize,
    pub size: usize,
}

impl HahnParams {
    pub fn new(cutoff: i64, alpha: i64, beta: i64, particles: usize, size: usize) -> Result<Self, HahnError> {
        if alpha < 0 || beta < 0 {
            return Err(HahnError::OutOfRange(format!(
                "integer weight parameters must be > -1 (alpha = {alpha}, beta = {beta})"
            )));
        }
        if particles > size + 1 {
            return Err(HahnError::OutOfRange(format!(
                "{particles} particles do not fit on {} sites",
                size + 1
            )));
        }
        Ok(HahnParams {
            cutoff,
            alpha,
            beta,
            particles,
            size,
        })
    }
}

/// Value of the `k`-th Hahn polynomial split into an exact part and the
/// exact square of its normalization: the orthonormal value is
/// `value * sqrt(norm_squared)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HahnValue {
    pub value: BigRational,
    pub norm_squared: BigRational,
}

impl HahnValue {
    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.value) * ratio_to_f64(&self.norm_squared).sqrt()
    }
}

fn rising(a: i64, k: usize) -> BigInt {
    (0..k as i64).map(|i| BigInt::from(a + i)).product()
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() && (v != 0.0 || r.is_zero()) {
            return v;
        }
    }
    // Scale numerator and denominator down together.
    let (num, den) = (r.numer(), r.denom());
    let shift = num.bits().max(den.bits()).saturating_sub(900);
    let n = (num >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (den >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

/// Orthonormal Hahn polynomial of degree `k` at `x`, exact up to the square
/// root of the normalization. The sign makes the leading coefficient
/// positive.
pub fn hahn_polynomial_exact(alpha: i64, beta: i64, size: usize, k: usize, x: i64) -> Result<HahnValue, HahnError> {
    if k > size {
        return Err(HahnError::OutOfRange(format!("degree {k} exceeds {size}")));
    }
    if alpha < 0 || beta < 0 {
        return Err(HahnError::OutOfRange("weight parameters must be > -1".into()));
    }
    let n = size as i64;
    let ab = alpha + beta;
    // Terminating 3F2(-k, k+a+b+1, -x; a+1, -n; 1).
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    for j in 0..=k as i64 {
        sum += &term;
        let num = BigInt::from(j - k as i64) * BigInt::from(j + k as i64 + ab + 1) * BigInt::from(j - x);
        let den = BigInt::from(j + alpha + 1) * BigInt::from(j - n) * BigInt::from(j + 1);
        if num.is_zero() {
            break;
        }
        term *= BigRational::new(num, den);
    }
    if k % 2 == 1 {
        sum = -sum;
    }
    Ok(HahnValue {
        value: sum,
        norm_squared: inverse_norm(alpha, beta, size, k),
    })
}

/// `1 / sum_x w(x) R_k(x)^2` for the hypergeometric polynomial `R_k`.
fn inverse_norm(alpha: i64, beta: i64, size: usize, k: usize) -> BigRational {
    let (n, kk, ab) = (size as i64, k as i64, alpha + beta);
    let num = binomial(n, kk)
        * (1..=n).map(BigInt::from).product::<BigInt>()
        * BigInt::from(2 * kk + ab + 1)
        * rising(alpha + 1, k)
        * rising(ab + 1, k);
    let den = rising(ab + 1, size + 1) * rising(beta + 1, k) * rising(n + ab + 2, k);
    BigRational::new(num, den)
}

/// Floating-point orthonormal Hahn polynomial.
pub fn hahn_polynomial(alpha: i64, beta: i64, size: usize, k: usize, x: i64) -> Result<f64, HahnError> {
    Ok(hahn_polynomial_exact(alpha, beta, size, k, x)?.to_f64())
}

/// Orthonormal functions `sqrt(w(x)) Q_k(x)` for `k < count` on every site.
///
/// The three-term recurrence is run in exact rational arithmetic on the
/// hypergeometric normalization `Q_k(0) = 1` and rounded once at the end;
/// in floating point the recurrence loses several digits per step as `k`
/// approaches the number of sites.
#[derive(Debug, Clone)]
pub struct HahnBasis {
    size: usize,
    count: usize,
    // values[k * (size + 1) + x]
    values: Vec<f64>,
}

impl HahnBasis {
    pub fn new(alpha: i64, beta: i64, size: usize, count: usize) -> Result<Self, HahnError> {
        if alpha < 0 || beta < 0 {
            return Err(HahnError::OutOfRange("weight parameters must be > -1".into()));
        }
        if count > size + 1 {
            return Err(HahnError::OutOfRange(format!("{count} functions exceed {} sites", size + 1)));
        }
        let n = size as i64;
        let ab = alpha + beta;
        let r = |num: BigInt, den: BigInt| BigRational::new(num, den);
        let int = |v: i64| BigInt::from(v);
        // -x R_k = up_k R_{k+1} - (up_k + down_k) R_k + down_k R_{k-1}
        let up: Vec<BigRational> = (0..count as i64)
            .map(|k| {
                r(
                    int(k + ab + 1) * int(k + alpha + 1) * int(n - k),
                    int(2 * k + ab + 1) * int(2 * k + ab + 2),
                )
            })
            .collect();
        let down: Vec<BigRational> = (0..count as i64)
            .map(|k| {
                if k == 0 {
                    BigRational::zero()
                } else {
                    r(
                        int(k) * int(k + ab + n + 1) * int(k + beta),
                        int(2 * k + ab) * int(2 * k + ab + 1),
                    )
                }
            })
            .collect();
        let norms: Vec<BigRational> = (0..count).map(|k| inverse_norm(alpha, beta, size, k)).collect();
        let sites = size + 1;
        let mut values = vec![0.0; count * sites];
        for x in 0..sites {
            let w = BigRational::from_integer(weight(alpha, beta, n, x as i64));
            let xr = BigRational::from_integer(int(x as i64));
            let mut prev = BigRational::zero();
            let mut cur = BigRational::one();
            for k in 0..count {
                let squared = &cur * &cur * &norms[k] * &w;
                let magnitude = ratio_to_f64(&squared).sqrt();
                let negative = cur.is_negative() != (k % 2 == 1);
                values[k * sites + x] = if negative { -magnitude } else { magnitude };
                if k + 1 < count {
                    let next = ((&up[k] + &down[k] - &xr) * &cur - &down[k] * &prev) / &up[k];
                    prev = std::mem::replace(&mut cur, next);
                }
            }
        }
        Ok(HahnBasis { size, count, values })
    }

    /// `sqrt(w(x)) Q_k(x)`.
    pub fn get(&self, k: usize, x: usize) -> f64 {
        self.values[k * (self.size + 1) + x]
    }

    /// Christoffel-Darboux kernel `sum_{k < count} phi_k(x) phi_k(y)`.
    pub fn kernel(&self, x: usize, y: usize) -> f64 {
        (0..self.count).map(|k| self.get(k, x) * self.get(k, y)).sum()
    }
}

fn hankel_z(alpha: i64, beta: i64, particles: usize, size: usize, top: usize) -> BigInt {
    if particles == 0 {
        return BigInt::one();
    }
    let top = top.min(size);
    let moments: Vec<BigInt> = (0..2 * particles - 1)
        .map(|j| {
            (0..=top as i64)
                .map(|x| BigInt::from(x).pow(j as u32) * weight(alpha, beta, size as i64, x))
                .sum()
        })
        .collect();
    let matrix = (0..particles)
        .map(|i| (0..particles).map(|j| moments[i + j].clone()).collect())
        .collect();
    bareiss_determinant(matrix)
}

fn direct_z(alpha: i64, beta: i64, particles: usize, size: usize, top: usize) -> Result<BigInt, HahnError> {
    let top = top.min(size);
    let placements = binomial(top as i64 + 1, particles as i64);
    if placements > BigInt::from(DIRECT_SUM_LIMIT) {
        return Err(HahnError::TooLarge(placements.to_string()));
    }
    let weights: Vec<BigInt> = (0..=top as i64).map(|x| weight(alpha, beta, size as i64, x)).collect();
    let mut total = BigInt::zero();
    let mut pick: Vec<usize> = (0..particles).collect();
    if particles > top + 1 {
        return Ok(total);
    }
    loop {
        let mut term = BigInt::one();
        for i in 0..particles {
            term *= &weights[pick[i]];
            for j in i + 1..particles {
                let d = (pick[j] - pick[i]) as u64;
                term *= d * d;
            }
        }
        total += term;
        let Some(i) = (0..particles).rev().find(|&i| pick[i] < top - (particles - 1 - i)) else {
            break;
        };
        pick[i] += 1;
        for t in i + 1..particles {
            pick[t] = pick[t - 1] + 1;
        }
    }
    Ok(total)
}

/// Log-gas partition function by summing over all ordered placements.
pub fn loggas_z_direct(alpha: i64, beta: i64, particles: usize, size: usize) -> Result<BigInt, HahnError> {
    HahnParams::new(size as i64, alpha, beta, particles, size)?;
    direct_z(alpha, beta, particles, size, size)
}

/// Log-gas partition function as a Hankel determinant of weight moments.
pub fn loggas_z_hankel(alpha: i64, beta: i64, particles: usize, size: usize) -> Result<BigInt, HahnError> {
    HahnParams::new(size as i64, alpha, beta, particles, size)?;
    Ok(hankel_z(alpha, beta, particles, size, size))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GapRoute {
    Direct,
    HankelRatio,
    Fredholm,
}

impl GapRoute {
    pub fn name(self) -> &'static str {
        match self {
            GapRoute::Direct => "direct",
            GapRoute::HankelRatio => "hankel-ratio",
            GapRoute::Fredholm => "fredholm",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GapValue {
    Exact(BigRational),
    Float(f64),
}

impl GapValue {
    pub fn to_f64(&self) -> f64 {
        match self {
            GapValue::Exact(r) => ratio_to_f64(r),
            GapValue::Float(v) => *v,
        }
    }
}

/// Trivial answers for cutoffs outside `0..size`.
fn gap_boundary(p: &HahnParams) -> Option<bool> {
    if p.particles == 0 || p.cutoff >= p.size as i64 {
        Some(true)
    } else if p.cutoff < 0 {
        Some(false)
    } else {
        None
    }
}

/// Probability that every particle lies in `{0, ..., cutoff}`.
pub fn gap_probability(p: &HahnParams, route: GapRoute) -> Result<GapValue, HahnError> {
    if let Some(certain) = gap_boundary(p) {
        let v = if certain { 1 } else { 0 };
        return Ok(match route {
            GapRoute::Fredholm => GapValue::Float(v as f64),
            _ => GapValue::Exact(BigRational::from_integer(v.into())),
        });
    }
    let top = p.cutoff as usize;
    match route {
        GapRoute::Direct => {
            let num = direct_z(p.alpha, p.beta, p.particles, p.size, top)?;
            let den = direct_z(p.alpha, p.beta, p.particles, p.size, p.size)?;
            Ok(GapValue::Exact(BigRational::new(num, den)))
        }
        GapRoute::HankelRatio => Ok(GapValue::Exact(gap_probability_exact(p))),
        GapRoute::Fredholm => Ok(GapValue::Float(gap_probability_fredholm(p)?)),
    }
}

/// Exact gap probability through the Hankel-determinant ratio.
pub fn gap_probability_exact(p: &HahnParams) -> BigRational {
    if let Some(certain) = gap_boundary(p) {
        return BigRational::from_integer(if certain { 1 } else { 0 }.into());
    }
    let num = hankel_z(p.alpha, p.beta, p.particles, p.size, p.cutoff as usize);
    let den = hankel_z(p.alpha, p.beta, p.particles, p.size, p.size);
    BigRational::new(num, den)
}

/// `det(I - K)` with the Christoffel-Darboux kernel restricted to
/// `{cutoff + 1, ..., size}`.
pub fn gap_probability_fredholm(p: &HahnParams) -> Result<f64, HahnError> {
    if let Some(certain) = gap_boundary(p) {
        return Ok(if certain { 1.0 } else { 0.0 });
    }
    let basis = HahnBasis::new(p.alpha, p.beta, p.size, p.particles)?;
    let sites: Vec<usize> = (p.cutoff as usize + 1..=p.size).collect();
    let m = sites.len();
    let mut a = vec![0.0; m * m];
    for (i, &x) in sites.iter().enumerate() {
        for (j, &y) in sites.iter().enumerate() {
            a[i * m + j] = if i == j { 1.0 } else { 0.0 } - basis.kernel(x, y);
        }
    }
    Ok(lu_determinant(&mut a, m))
}

/// Determinant of a row-major `m x m` matrix by LU with partial pivoting.
pub fn lu_determinant(a: &mut [f64], m: usize) -> f64 {
    let mut det = 1.0;
    for k in 0..m {
        let pivot = (k..m)
            .max_by(|&i, &j| a[i * m + k].abs().total_cmp(&a[j * m + k].abs()))
            .unwrap();
        if a[pivot * m + k] == 0.0 {
            return 0.0;
        }
        if pivot != k {
            for c in 0..m {
                a.swap(k * m + c, pivot * m + c);
            }
            det = -det;
        }
        let d = a[k * m + k];
        det *= d;
        for i in k + 1..m {
            let f = a[i * m + k] / d;
            if f != 0.0 {
                for c in k + 1..m {
                    a[i * m + c] -= f * a[k * m + c];
                }
            }
        }
    }
    det
}

/// What a formation probability reduces to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GapEvent {
    Certain,
    Impossible,
    Gap(HahnParams),
}

impl GapEvent {
    pub fn probability(&self) -> BigRational {
        match self {
            GapEvent::Certain => BigRational::one(),
            GapEvent::Impossible => BigRational::zero(),
            GapEvent::Gap(p) => gap_probability_exact(p),
        }
    }
}

/// The topmost `depth` vertices of column `column` are all of type a.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct EfpQuery {
    pub spec: LatticeSpec,
    pub column: usize,
    pub depth: usize,
}

impl EfpQuery {
    pub fn new(spec: LatticeSpec, column: usize, depth: usize) -> Result<Self, HahnError> {
        if column < 1 || column > spec.width() {
            return Err(HahnError::OutOfRange(format!("column {column} outside 1..={}", spec.width())));
        }
        if depth < 1 || depth > spec.height() {
            return Err(HahnError::OutOfRange(format!("depth {depth} outside 1..={}", spec.height())));
        }
        Ok(EfpQuery { spec, column, depth })
    }

    pub fn event(&self) -> GapEvent {
        let (l, m, n) = (
            self.spec.width() as i64,
            self.spec.height() as i64,
            self.spec.paths() as i64,
        );
        let (p, q) = (self.column as i64, self.depth as i64);
        if p + q <= l - n {
            // Only vertices of the frozen north-west corner are involved.
            return GapEvent::Certain;
        }
        if p > l - n {
            // The top vertex of such a column carries a path out of the domain.
            return GapEvent::Impossible;
        }
        let s = p.min(n);
        let params = HahnParams::new(m - n + s - p - q, (n - p).abs(), l - n - p, s as usize, (m - l + s) as usize)
            .expect("parameters of an admissible query are valid");
        GapEvent::Gap(params)
    }

    pub fn holds(&self, grid: &VertexGrid) -> bool {
        let top = self.spec.height();
        (0..self.depth).all(|j| grid.get(self.column, top - j) == VertexType::A)
    }
}

/// Emptiness formation probability.
pub fn efp(query: &EfpQuery) -> BigRational {
    query.event().probability()
}

/// The vertices of column `column` from row `M - depth + 1` up to the
/// north-west boundary of the hexagon are all of type c. Requires
/// `column <= L - N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AfpQuery {
    pub spec: LatticeSpec,
    pub column: usize,
    pub depth: usize,
}

impl AfpQuery {
    pub fn new(spec: LatticeSpec, column: usize, depth: usize) -> Result<Self, HahnError> {
        if column < 1 || column > spec.steps() {
            return Err(HahnError::OutOfRange(format!("column {column} outside 1..={}", spec.steps())));
        }
        if depth < 1 || depth > spec.height() {
            return Err(HahnError::OutOfRange(format!("depth {depth} outside 1..={}", spec.height())));
        }
        Ok(AfpQuery { spec, column, depth })
    }

    /// Number of constrained vertices, `p + q - L + N` (may be `<= 0`).
    pub fn constrained(&self) -> i64 {
        self.column as i64 + self.depth as i64 - self.spec.steps() as i64
    }

    /// Rows of the constrained vertices.
    pub fn rows(&self) -> std::ops::RangeInclusive<usize> {
        let first = self.spec.height() + 1 - self.depth;
        let count = self.constrained().max(0) as usize;
        first..=first + count - 1
    }

    pub fn holds(&self, grid: &VertexGrid) -> bool {
        self.rows().all(|row| grid.get(self.column, row).is_c())
    }

    fn half(&self) -> Option<(i64, i64)> {
        let qt = self.constrained();
        if qt <= 0 {
            return None;
        }
        let rt = (qt + 1) / 2;
        let pt = self.column as i64 - (qt + 1) % 2;
        Some((rt, pt))
    }

    /// The equivalent emptiness event on `(M - L + N + 1, M, M - L + 1)`.
    pub fn as_efp(&self) -> GapEvent {
        let Some((rt, pt)) = self.half() else {
            return GapEvent::Certain;
        };
        let (l, m, n) = (self.spec.width(), self.spec.height(), self.spec.paths());
        if rt > n as i64 {
            return GapEvent::Impossible;
        }
        let spec = LatticeSpec::new(m - l + n + 1, m, m - l + 1).expect("dual domain is valid");
        EfpQuery::new(spec, rt as usize, l - pt as usize)
            .expect("dual query is in range")
            .event()
    }

    /// The gap event read off directly.
    pub fn event(&self) -> GapEvent {
        let Some((rt, _)) = self.half() else {
            return GapEvent::Certain;
        };
        let (l, m, n) = (
            self.spec.width() as i64,
            self.spec.height() as i64,
            self.spec.paths() as i64,
        );
        if rt > n {
            return GapEvent::Impossible;
        }
        let q = self.depth as i64;
        let s = rt.min(m - l + 1);
        let params = HahnParams::new(l - n + s - 2 - q + rt, (m - l - rt + 1).abs(), n - rt, s as usize, (l - n + s - 1) as usize)
            .expect("parameters of an admissible query are valid");
        GapEvent::Gap(params)
    }
}

/// Anti-ferroelectric formation probability through the emptiness
/// probability of a related domain.
pub fn afp_via_efp(query: &AfpQuery) -> BigRational {
    query.as_efp().probability()
}

/// Anti-ferroelectric formation probability as a gap probability.
pub fn afp_direct(query: &AfpQuery) -> BigRational {
    query.event().probability()
}

/// Right end of the support of the equilibrium measure of the scaled log-gas.
pub fn support_right_endpoint(alpha: f64, beta: f64, particles: f64, size: f64) -> Result<f64, HahnError> {
    if !(alpha >= 0.0 && beta >= 0.0) {
        return Err(HahnError::Domain(format!("need alpha, beta >= 0, got {alpha}, {beta}")));
    }
    if !(particles > 0.0 && particles < size) {
        return Err(HahnError::Domain(format!("need 0 < s < n, got s = {particles}, n = {size}")));
    }
    let (a, b, s, n) = (alpha, beta, particles, size);
    let first = ((s + a + b) * (s + a) * (n - s)).sqrt();
    let second = ((s + a + b + n) * (s + b) * s).sqrt();
    let r = (first + second) / (2.0 * s + a + b);
    Ok(r * r)
}

pub fn to_f64(r: &BigRational) -> f64 {
    ratio_to_f64(r)
}
