//! Limit shape of the disordered region in rescaled coordinates.
//!
//! The lattice is rescaled by `scale`, so that `(x, y)` ranges over
//! `[0, width] x [0, height]` with `x` the column and `y` the row. The curve
//! is made of six arcs, listed clockwise from the contact point on the west
//! side. The first two come in closed form; the others follow from the
//! particle-hole symmetry and the reflection `(x, y) -> (width - x, height - y)`.

use serde::Serialize;
use thiserror::Error;

use crate::hahn::support_right_endpoint;
use crate::lattice::LatticeSpec;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ArcticError {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("outside the domain: {0}")]
    Domain(String),
    #[error("no root in [{lo}, {hi}]")]
    NoRoot { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScaledGeometry {
    width: f64,
    height: f64,
    paths: f64,
    scale: f64,
}

impl ScaledGeometry {
    pub fn new(width: f64, height: f64, paths: f64) -> Result<Self, ArcticError> {
        let ok = [width, height, paths].iter().all(|v| v.is_finite())
            && height >= width
            && width > paths
            && paths > 0.0;
        if !ok {
            return Err(ArcticError::InvalidGeometry(format!(
                "need height >= width > paths > 0, got ({width}, {height}, {paths})"
            )));
        }
        Ok(Self { width, height, paths, scale: 1.0 })
    }

    /// The lattice sizes divided by `scale`.
    pub fn from_spec(spec: LatticeSpec, scale: f64) -> Result<Self, ArcticError> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(ArcticError::InvalidGeometry(format!("scale must be positive, got {scale}")));
        }
        let mut g = Self::new(
            spec.width() as f64 / scale,
            spec.height() as f64 / scale,
            spec.paths() as f64 / scale,
        )?;
        g.scale = scale;
        Ok(g)
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    pub fn paths(&self) -> f64 {
        self.paths
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Particle-hole image: `paths -> width - paths`.
    pub fn dual(&self) -> Self {
        Self { paths: self.width - self.paths, ..*self }
    }

    /// `(x_c, x~_c)`: abscissae where the curve touches the north-west and
    /// north-east sides of the hexagon, the latter measured from the east
    /// side.
    pub fn contact_points(&self) -> (f64, f64) {
        let (l, m, n) = (self.width, self.height, self.paths);
        ((m - l) * (l - n) / (m - l + n), (m - l) * n / (m - n))
    }

    /// Vertical extent of the hexagon left by the four frozen triangles.
    pub fn hexagon_bounds(&self, x: f64) -> Option<(f64, f64)> {
        let (l, m, n) = (self.width, self.height, self.paths);
        if !(0.0..=l).contains(&x) {
            return None;
        }
        let lo = (n - x).max(x - n);
        let hi = (x + m - l + n).min(m + l - n - x);
        Some((lo, hi))
    }

    /// Lattice coordinates `(column, row)` of a rescaled point.
    pub fn to_lattice(&self, x: f64, y: f64) -> (f64, f64) {
        (x * self.scale, y * self.scale)
    }

    fn radicand_constant(&self) -> f64 {
        let (l, m, n) = (self.width, self.height, self.paths);
        m * n * (l - n) * (m - l)
    }

    fn check(&self, x: f64, lo: f64, hi: f64, what: &str) -> Result<(), ArcticError> {
        // Interval ends are computed in floating point, so allow a rounding slack.
        let slack = 1e-12 * self.width.max(1.0);
        if x.is_finite() && x >= lo - slack && x <= hi + slack {
            Ok(())
        } else {
            Err(ArcticError::Domain(format!("{what}: x = {x} outside [{lo}, {hi}]")))
        }
    }
}

fn polynomial_part(g: &ScaledGeometry, x: f64) -> f64 {
    let (l, m, n) = (g.width, g.height, g.paths);
    (m * n * (l - 2.0 * x) + (m + n) * l * x) / (l * l)
}

fn root_part(g: &ScaledGeometry, x: f64) -> f64 {
    let l = g.width;
    let rad = g.radicand_constant() * (l - x) * x;
    2.0 * rad.max(0.0).sqrt() / (l * l)
}

/// North-west arc on `[0, x_c]`. At `x = 0` this is the limit value
/// `height * paths / width`.
pub fn f1(g: &ScaledGeometry, x: f64) -> Result<f64, ArcticError> {
    g.check(x, 0.0, g.contact_points().0, "f1")?;
    Ok(polynomial_part(g, x) + root_part(g, x))
}

/// Slope of the north-west arc; infinite at `x = 0`.
pub fn f1_derivative(g: &ScaledGeometry, x: f64) -> Result<f64, ArcticError> {
    g.check(x, 0.0, g.contact_points().0, "f1'")?;
    Ok(base_slope(g, x))
}

pub fn f1_second_derivative(g: &ScaledGeometry, x: f64) -> Result<f64, ArcticError> {
    g.check(x, 0.0, g.contact_points().0, "f1''")?;
    let c = g.radicand_constant();
    if c == 0.0 {
        return Ok(0.0);
    }
    let s = (g.width - x) * x;
    if s <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    Ok(-c.sqrt() / (2.0 * s.powf(1.5)))
}

fn north_interval(g: &ScaledGeometry) -> (f64, f64) {
    let (xc, xt) = g.contact_points();
    (xc, g.width - xt)
}

/// North arc on `[x_c, width - x~_c]`.
pub fn f2(g: &ScaledGeometry, x: f64) -> Result<f64, ArcticError> {
    let (lo, hi) = north_interval(g);
    g.check(x, lo, hi, "f2")?;
    Ok(g.width - g.height - g.paths - x + 2.0 * (polynomial_part(g, x) + root_part(g, x)))
}

pub fn f2_derivative(g: &ScaledGeometry, x: f64) -> Result<f64, ArcticError> {
    let (lo, hi) = north_interval(g);
    g.check(x, lo, hi, "f2'")?;
    Ok(-1.0 + 2.0 * base_slope(g, x))
}

fn base_slope(g: &ScaledGeometry, x: f64) -> f64 {
    let (l, m, n) = (g.width, g.height, g.paths);
    let lin = ((m + n) * l - 2.0 * m * n) / (l * l);
    let c = g.radicand_constant();
    if c == 0.0 {
        return lin;
    }
    let s = (l - x) * x;
    if s <= 0.0 {
        return if x < l / 2.0 { f64::INFINITY } else { f64::NEG_INFINITY };
    }
    lin + c.sqrt() * (l - 2.0 * x) / (l * l * s.sqrt())
}

pub fn f2_second_derivative(g: &ScaledGeometry, x: f64) -> Result<f64, ArcticError> {
    let (lo, hi) = north_interval(g);
    g.check(x, lo, hi, "f2''")?;
    let c = g.radicand_constant();
    if c == 0.0 {
        return Ok(0.0);
    }
    let s = (g.width - x) * x;
    Ok(-c.sqrt() / s.powf(1.5))
}

/// Left-hand side of the implicit ellipse containing the north-west arc.
pub fn west_ellipse_residual(g: &ScaledGeometry, x: f64, y: f64) -> f64 {
    let (l, m, n) = (g.width, g.height, g.paths);
    let t = l * y - n * m + (m - n) * x;
    t * t + 4.0 * m * (l - n) * x * (n - y)
}

/// Left-hand side of the implicit ellipse containing the north arc, scaled
/// so that it is comparable with [`west_ellipse_residual`].
pub fn north_ellipse_residual(g: &ScaledGeometry, x: f64, y: f64) -> f64 {
    let (l, m, n) = (g.width, g.height, g.paths);
    let t = l * l * (y - l + m + n + x) - 2.0 * (m * n * (l - 2.0 * x) + (m + n) * l * x);
    (t * t - 16.0 * g.radicand_constant() * (l - x) * x) / (4.0 * l * l)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Arc {
    Gamma1,
    Gamma2,
    Gamma3,
    Gamma4,
    Gamma5,
    Gamma6,
}

impl Arc {
    pub const ALL: [Arc; 6] = [Arc::Gamma1, Arc::Gamma2, Arc::Gamma3, Arc::Gamma4, Arc::Gamma5, Arc::Gamma6];

    pub fn name(self) -> &'static str {
        match self {
            Arc::Gamma1 => "G1",
            Arc::Gamma2 => "G2",
            Arc::Gamma3 => "G3",
            Arc::Gamma4 => "G4",
            Arc::Gamma5 => "G5",
            Arc::Gamma6 => "G6",
        }
    }

    /// The arc this one is the reflection of, for the lower three.
    fn mirror_of(self) -> Option<Arc> {
        match self {
            Arc::Gamma4 => Some(Arc::Gamma1),
            Arc::Gamma5 => Some(Arc::Gamma2),
            Arc::Gamma6 => Some(Arc::Gamma3),
            _ => None,
        }
    }
}

/// The x-range of an arc, in clockwise traversal order (so decreasing for
/// the lower three arcs).
pub fn arc_interval(g: &ScaledGeometry, arc: Arc) -> (f64, f64) {
    let (xc, xt) = g.contact_points();
    let l = g.width;
    match arc {
        Arc::Gamma1 => (0.0, xc),
        Arc::Gamma2 => (xc, l - xt),
        Arc::Gamma3 => (l - xt, l),
        _ => {
            let (a, b) = arc_interval(g, arc.mirror_of().unwrap());
            (l - a, l - b)
        }
    }
}

/// Height of `arc` at abscissa `x`.
pub fn arc_at(g: &ScaledGeometry, arc: Arc, x: f64) -> Result<f64, ArcticError> {
    match arc {
        Arc::Gamma1 => f1(g, x),
        Arc::Gamma2 => f2(g, x),
        Arc::Gamma3 => f1(&g.dual(), g.width - x),
        _ => Ok(g.height - arc_at(g, arc.mirror_of().unwrap(), g.width - x)?),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurvePoint {
    pub arc: Arc,
    pub x: f64,
    pub y: f64,
}

fn upper_abscissae(g: &ScaledGeometry, arc: Arc, samples: usize) -> Vec<f64> {
    let (a, b) = arc_interval(g, arc);
    let last = samples - 1;
    (0..samples)
        .map(|i| {
            if i == 0 {
                return a;
            }
            if i == last {
                return b;
            }
            let t = i as f64 / last as f64;
            let x = match arc {
                Arc::Gamma1 => west_envelope(g, t * (g.width - g.paths)).0,
                Arc::Gamma2 => north_envelope(g, t * g.paths).0,
                _ => a + t * (b - a),
            };
            x.clamp(a.min(b), a.max(b))
        })
        .collect()
}

/// The six arcs, each with `samples` points including both ends, listed
/// clockwise from the west contact point. The two arcs found by the tangent
/// constructions are sampled uniformly in the family parameter, the others
/// uniformly in `x` or as mirror images.
pub fn full_curve(g: &ScaledGeometry, samples: usize) -> Result<Vec<CurvePoint>, ArcticError> {
    if samples < 2 {
        return Err(ArcticError::Domain(format!("need at least 2 samples per arc, got {samples}")));
    }
    let mut out = Vec::with_capacity(6 * samples);
    for arc in Arc::ALL {
        let xs = match arc.mirror_of() {
            Some(upper) => upper_abscissae(g, upper, samples).into_iter().map(|x| g.width - x).collect(),
            None => upper_abscissae(g, arc, samples),
        };
        for x in xs {
            out.push(CurvePoint { arc, x, y: arc_at(g, arc, x)? });
        }
    }
    Ok(out)
}

/// Whether `(x, y)` lies on some arc to within `tol` vertically.
pub fn on_curve(g: &ScaledGeometry, x: f64, y: f64, tol: f64) -> bool {
    Arc::ALL.iter().any(|&arc| {
        let (a, b) = arc_interval(g, arc);
        x >= a.min(b) - tol && x <= a.max(b) + tol && {
            let x = x.clamp(a.min(b), a.max(b));
            arc_at(g, arc, x).map(|v| (v - y).abs() <= tol).unwrap_or(false)
        }
    })
}

/// Member of a one-parameter family of straight lines.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentLine {
    pub parameter: f64,
    /// Where the deflected path leaves the hexagon.
    pub exit: (f64, f64),
    /// Where the path ends on the extended boundary.
    pub anchor: (f64, f64),
    pub slope: f64,
}

impl TangentLine {
    fn through(parameter: f64, exit: (f64, f64), anchor: (f64, f64)) -> Self {
        let slope = (anchor.1 - exit.1) / (anchor.0 - exit.0);
        Self { parameter, exit, anchor, slope }
    }

    pub fn y_at(&self, x: f64) -> f64 {
        self.anchor.1 + self.slope * (x - self.anchor.0)
    }
}

fn check_parameter(u: f64, lo: f64, hi: f64, closed_lo: bool, closed_hi: bool) -> Result<(), ArcticError> {
    let above = if closed_lo { u >= lo } else { u > lo };
    let below = if closed_hi { u <= hi } else { u < hi };
    if u.is_finite() && above && below {
        Ok(())
    } else {
        Err(ArcticError::Domain(format!("parameter {u} outside ({lo}, {hi})")))
    }
}

/// Line followed by the first path when it is diverted to leave through the
/// north side at abscissa `u`, for `0 < u <= width - paths`.
pub fn tangent_family_west(g: &ScaledGeometry, u: f64) -> Result<TangentLine, ArcticError> {
    let (l, m, n) = (g.width, g.height, g.paths);
    check_parameter(u, 0.0, l - n, false, true)?;
    let t0 = west_saddle(g, u);
    Ok(TangentLine::through(u, (t0, m - l + n + t0), (u, m)))
}

/// Most likely exit abscissa for the west construction.
pub fn west_saddle(g: &ScaledGeometry, u: f64) -> f64 {
    (g.height - g.width) * u / (g.height - u)
}

/// The implicit west family and its derivative in `u` at `(x, y)`.
pub fn west_family_residual(g: &ScaledGeometry, u: f64, x: f64, y: f64) -> (f64, f64) {
    let (l, m, n) = (g.width, g.height, g.paths);
    let f = u * (u - l) * y + (m * (l - n - u) + n * u) * x + n * (m - u) * u;
    let df = (l - 2.0 * u) * y + (m - n) * x - n * (m - 2.0 * u);
    (f, df)
}

/// Point where the west family touches its envelope.
pub fn west_envelope(g: &ScaledGeometry, u: f64) -> (f64, f64) {
    let (l, m, n) = (g.width, g.height, g.paths);
    let d = (m - n) * u * u - 2.0 * m * (l - n) * u + l * m * (l - n);
    let x = n * (m - l) * u * u / d;
    let y = (n * (m - n) * u * u - 2.0 * m * n * (l - n) * u + m * m * n * (l - n)) / d;
    (x, y)
}

/// Line followed by the last path when it is diverted to leave through the
/// east side at height `height + paths - 2u`, for `0 < u < paths`.
pub fn tangent_family_north(g: &ScaledGeometry, u: f64) -> Result<TangentLine, ArcticError> {
    let (l, m, n) = (g.width, g.height, g.paths);
    check_parameter(u, 0.0, n, false, false)?;
    let t0 = north_saddle(g, u);
    Ok(TangentLine::through(u, (l - n + t0, m - t0), (l, m + n - 2.0 * u)))
}

/// Most likely exit offset for the north construction.
pub fn north_saddle(g: &ScaledGeometry, u: f64) -> f64 {
    u * (g.width - g.paths) / (g.height - u)
}

// The north family written as a(u) x + b(u) y + c(u) = 0, with the
// u-derivatives of the three coefficients.
fn north_coefficients(g: &ScaledGeometry, u: f64) -> ([f64; 3], [f64; 3]) {
    let (l, m, n) = (g.width, g.height, g.paths);
    let a = m * n + l * u + 2.0 * u * (u - m - n);
    let b = l * u - m * n;
    let c = m * n * (m - l + n - 2.0 * u) + l * u * (m - l + n);
    let da = l + 4.0 * u - 2.0 * (m + n);
    let db = l;
    let dc = l * (m - l + n) - 2.0 * m * n;
    ([a, b, c], [da, db, dc])
}

/// The implicit north family and its derivative in `u` at `(x, y)`.
pub fn north_family_residual(g: &ScaledGeometry, u: f64, x: f64, y: f64) -> (f64, f64) {
    let ([a, b, c], [da, db, dc]) = north_coefficients(g, u);
    (a * x + b * y + c, da * x + db * y + dc)
}

/// Point where the north family touches its envelope.
pub fn north_envelope(g: &ScaledGeometry, u: f64) -> (f64, f64) {
    let ([a, b, c], [da, db, dc]) = north_coefficients(g, u);
    let det = a * db - da * b;
    ((-c * db + dc * b) / det, (-a * dc + da * c) / det)
}

fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> Result<f64, ArcticError> {
    let (flo, fhi) = (f(lo), f(hi));
    if flo == 0.0 {
        return Ok(lo);
    }
    if fhi == 0.0 {
        return Ok(hi);
    }
    if flo.is_nan() || fhi.is_nan() || flo.signum() == fhi.signum() {
        // A root sitting on the bracket end can land on either side of it
        // after rounding.
        let slack = 1e-10 * (hi - lo).abs().max(1.0);
        if flo.abs() <= slack || fhi.abs() <= slack {
            return Ok(if flo.abs() < fhi.abs() { lo } else { hi });
        }
        return Err(ArcticError::NoRoot { lo, hi });
    }
    let positive_low = flo > 0.0;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        let v = f(mid);
        if v == 0.0 {
            return Ok(mid);
        }
        if (v > 0.0) == positive_low {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

const ROOT_TOLERANCE: f64 = 1e-12;

/// The north-west arc recovered from the emptiness formation probability:
/// the height where the right end of the log-gas support meets the cutoff.
pub fn curve_from_efp(g: &ScaledGeometry, x: f64) -> Result<f64, ArcticError> {
    let (l, m, n) = (g.width, g.height, g.paths);
    let xc = g.contact_points().0;
    if !(x > 0.0 && x <= xc + 1e-12 * l) {
        return Err(ArcticError::Domain(format!("x = {x} outside (0, {xc}]")));
    }
    let particles = x.min(n);
    let alpha = (n - x).abs();
    let beta = (l - n - x).max(0.0);
    let size = m - l + particles;
    let edge = support_right_endpoint(alpha, beta, particles, size)
        .map_err(|e| ArcticError::Domain(e.to_string()))?;
    let (lo, hi) = g.hexagon_bounds(x).unwrap();
    bisect(|y| edge - (y - n + particles - x), lo, hi, ROOT_TOLERANCE)
}

/// The north arc recovered from the formation probability of the
/// alternating phase.
pub fn curve_from_afp(g: &ScaledGeometry, x: f64) -> Result<f64, ArcticError> {
    let (l, m, n) = (g.width, g.height, g.paths);
    let (a, b) = north_interval(g);
    if !(x >= a - 1e-12 * l && x <= b + 1e-12 * l) {
        return Err(ArcticError::Domain(format!("x = {x} outside [{a}, {b}]")));
    }
    let gap = |y: f64| {
        let depth = m - y;
        let half = ((x + depth - l + n) / 2.0).max(0.0);
        let particles = half.min(m - l);
        let alpha = (m - l - half).abs();
        let beta = (n - half).max(0.0);
        let size = l - n + particles;
        let cutoff = l - n + particles - depth + half;
        if particles <= 0.0 {
            // Limit of the endpoint as the number of particles goes to zero.
            return alpha * size / (alpha + beta) - cutoff;
        }
        match support_right_endpoint(alpha, beta, particles, size) {
            Ok(edge) => edge - cutoff,
            Err(_) => f64::NAN,
        }
    };
    let (lo, hi) = g.hexagon_bounds(x).unwrap();
    // Below this height the constrained rows would exceed the path count.
    let lo = lo.max(x + m - l - n).min(hi);
    bisect(gap, lo, hi, ROOT_TOLERANCE)
}
