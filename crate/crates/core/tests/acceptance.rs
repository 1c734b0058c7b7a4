//! Acceptance suite: one PASS/FAIL line per criterion, with its runtime.
//!
//! Runs without the libtest harness so the lines always reach stdout.

mod common;

use std::collections::HashMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::{configs, grids, small_specs, spec};
use fourvertex::arctic::{self, ScaledGeometry};
use fourvertex::exact::{self, ColumnOccupation};
use fourvertex::hahn::{self, AfpQuery, EfpQuery, GapRoute, GapValue, HahnParams};
use fourvertex::lattice::{frozen_region, FourVertexConfig};
use fourvertex::sampler::{self, CftpOptions, DensityFields, Field};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Zero;
use statrs::distribution::{ChiSquared, ContinuousCDF};

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn oracle_equivalence() -> Outcome {
    let specs = small_specs(6, 8);
    for &s in &specs {
        let z = exact::partition_function(s);
        let count = BigInt::from(configs(s).len());
        ensure(z == exact::macmahon(s.paths(), s.steps(), s.height() - s.width() + 1), || {
            format!("{s}: product formula disagrees with MacMahon")
        })?;
        ensure(z == exact::lgv_determinant(s), || format!("{s}: LGV determinant disagrees"))?;
        ensure(z == count, || format!("{s}: Z = {z} but {count} configurations"))?;
    }
    Ok(format!("{} specs", specs.len()))
}

fn refined_sums() -> Outcome {
    let specs = small_specs(6, 8);
    let mut columns = 0;
    for &s in &specs {
        let z = exact::partition_function(s);
        let mut total = BigInt::zero();
        for col in 1..=s.steps() + 1 {
            total += exact::boundary_refined_z1(s, col).map_err(|e| e.to_string())?;
        }
        ensure(total == z, || format!("{s}: boundary-refined sum {total} != {z}"))?;
        for col in 1..s.width() {
            let sum: BigInt = ColumnOccupation::all(s, col)
                .iter()
                .map(|occ| exact::column_refined_z(s, occ))
                .sum();
            ensure(sum == z, || format!("{s} column {col}: {sum} != {z}"))?;
            columns += 1;
        }
    }
    Ok(format!("{} specs, {columns} columns", specs.len()))
}

fn frequency(hits: usize, total: usize) -> BigRational {
    BigRational::new(BigInt::from(hits), BigInt::from(total))
}

fn formation_probabilities() -> Outcome {
    let mut queries = 0;
    for s in [spec(4, 6, 2), spec(5, 7, 2)] {
        let all = grids(s);
        for p in 1..=s.width() {
            for q in 1..=s.height() {
                let query = EfpQuery::new(s, p, q).unwrap();
                let hits = all.iter().filter(|g| query.holds(g)).count();
                let exact = hahn::efp(&query);
                ensure(exact == frequency(hits, all.len()), || format!("{s} efp({p}, {q}) = {exact}"))?;
                queries += 1;
            }
        }
        for p in 1..=s.steps() {
            for q in 1..=s.height() {
                let query = AfpQuery::new(s, p, q).unwrap();
                let hits = all.iter().filter(|g| query.holds(g)).count();
                let expected = frequency(hits, all.len());
                let via = hahn::afp_via_efp(&query);
                let direct = hahn::afp_direct(&query);
                ensure(via == expected, || format!("{s} afp({p}, {q}) via efp = {via}, expected {expected}"))?;
                ensure(direct == expected, || format!("{s} afp({p}, {q}) direct = {direct}, expected {expected}"))?;
                queries += 1;
            }
        }
    }
    Ok(format!("{queries} queries"))
}

fn gap_routes() -> Outcome {
    let mut cases = 0;
    let mut worst: f64 = 0.0;
    for n in 0..=12usize {
        for s in 1..=5usize.min(n + 1) {
            for alpha in 0..=4 {
                for beta in 0..=4 {
                    for d in -1..=n as i64 {
                        let p = HahnParams::new(d, alpha, beta, s, n).map_err(|e| e.to_string())?;
                        let direct = gap_probability(&p, GapRoute::Direct)?;
                        let hankel = gap_probability(&p, GapRoute::HankelRatio)?;
                        let fredholm = gap_probability(&p, GapRoute::Fredholm)?;
                        let (GapValue::Exact(a), GapValue::Exact(b)) = (&direct, &hankel) else {
                            return Err("rational routes returned floats".into());
                        };
                        ensure(a == b, || format!("{p:?}: direct {a} != hankel {b}"))?;
                        let err = (fredholm.to_f64() - hahn::to_f64(a)).abs();
                        worst = worst.max(err);
                        ensure(err <= 1e-10, || format!("{p:?}: fredholm off by {err:e}"))?;
                        cases += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{cases} cases, worst float error {worst:.1e}"))
}

fn gap_probability(p: &HahnParams, route: GapRoute) -> Result<GapValue, String> {
    hahn::gap_probability(p, route).map_err(|e| format!("{p:?} {}: {e}", route.name()))
}

fn sweep(lo: f64, hi: f64, count: usize) -> impl Iterator<Item = f64> {
    (0..count).map(move |i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
}

fn curve_cross_derivation() -> Outcome {
    let mut worst: f64 = 0.0;
    for (l, m, n) in [(5.0, 8.0, 1.0), (7.0, 11.0, 2.0), (5.0, 8.0, 4.0)] {
        let g = ScaledGeometry::new(l, m, n).unwrap();
        let (xc, xt) = g.contact_points();
        // 50 points in (0, x_c].
        for x in sweep(0.0, xc, 51).skip(1) {
            let y = arctic::curve_from_efp(&g, x).map_err(|e| e.to_string())?;
            let err = (y - arctic::f1(&g, x).unwrap()).abs();
            worst = worst.max(err);
            ensure(err < 1e-8, || format!("({l},{m},{n}) efp route at x = {x}: error {err:e}"))?;
        }
        for x in sweep(xc, l - xt, 50) {
            let y = arctic::curve_from_afp(&g, x).map_err(|e| e.to_string())?;
            let err = (y - arctic::f2(&g, x).unwrap()).abs();
            worst = worst.max(err);
            ensure(err < 1e-8, || format!("({l},{m},{n}) afp route at x = {x}: error {err:e}"))?;
        }
    }
    Ok(format!("worst error {worst:.1e}"))
}

fn theorem_geometry() -> Outcome {
    let g = ScaledGeometry::new(5.0, 8.0, 1.0).unwrap();
    let (xc, xt) = g.contact_points();
    ensure((xc - 3.0).abs() < 1e-12, || format!("x_c = {xc}"))?;
    ensure((xt - 3.0 / 7.0).abs() < 1e-12, || format!("x~_c = {xt}"))?;
    let y0 = arctic::f1(&g, 0.0).unwrap();
    ensure((y0 - 8.0 / 5.0).abs() < 1e-12, || format!("f1(0) = {y0}"))?;
    let (a, b) = (arctic::f1(&g, xc).unwrap(), arctic::f2(&g, xc).unwrap());
    ensure((a - 7.0).abs() < 1e-12 && (b - 7.0).abs() < 1e-12, || format!("f1(x_c) = {a}, f2(x_c) = {b}"))?;
    let (s1, s2) = (arctic::f1_derivative(&g, xc).unwrap(), arctic::f2_derivative(&g, xc).unwrap());
    ensure((s1 - s2).abs() < 1e-8, || format!("slopes {s1} vs {s2}"))?;
    let (c1, c2) = (
        arctic::f1_second_derivative(&g, xc).unwrap(),
        arctic::f2_second_derivative(&g, xc).unwrap(),
    );
    ensure((c1 - c2).abs() > 1e-3, || format!("second derivatives {c1} vs {c2}"))?;
    Ok(format!("slope jump {:.1e}, curvature jump {:.3}", (s1 - s2).abs(), (c1 - c2).abs()))
}

fn tangency() -> Outcome {
    let mut worst: f64 = 0.0;
    for (l, m, n) in [(5.0, 8.0, 1.0), (7.0, 11.0, 2.0), (5.0, 8.0, 4.0), (35.0, 60.0, 15.0)] {
        let g = ScaledGeometry::new(l, m, n).unwrap();
        let (xc, xt) = g.contact_points();
        for u in sweep(0.0, l - n, 101).skip(1) {
            let line = arctic::tangent_family_west(&g, u).map_err(|e| e.to_string())?;
            let (x, y) = arctic::west_envelope(&g, u);
            let x = x.clamp(0.0, xc);
            let point = (arctic::f1(&g, x).unwrap() - y).abs().max((line.y_at(x) - y).abs());
            let slope = (arctic::f1_derivative(&g, x).unwrap() - line.slope).abs();
            worst = worst.max(point).max(slope);
            ensure(point < 1e-9 && slope < 1e-9, || format!("({l},{m},{n}) west u = {u}: {point:e} {slope:e}"))?;
        }
        for u in sweep(0.0, n, 102).skip(1).take(100) {
            let line = arctic::tangent_family_north(&g, u).map_err(|e| e.to_string())?;
            let (x, y) = arctic::north_envelope(&g, u);
            let x = x.clamp(xc, l - xt);
            let point = (arctic::f2(&g, x).unwrap() - y).abs().max((line.y_at(x) - y).abs());
            let slope = (arctic::f2_derivative(&g, x).unwrap() - line.slope).abs();
            worst = worst.max(point).max(slope);
            ensure(point < 1e-9 && slope < 1e-9, || format!("({l},{m},{n}) north u = {u}: {point:e} {slope:e}"))?;
        }
    }
    let s = spec(50, 80, 10);
    let (l, m, n) = (50.0, 80.0, 10.0);
    let mut off: f64 = 0.0;
    for r in 1..=s.steps() {
        let p = exact::saddle_argmax_west(s, r).map_err(|e| e.to_string())?;
        let t0 = (m - l) * r as f64 / (m - r as f64);
        off = off.max((p as f64 - t0).abs());
    }
    for r in 0..=s.paths() {
        let p = exact::saddle_argmax_north(s, r).map_err(|e| e.to_string())?;
        let t0 = r as f64 * (l - n) / (m - r as f64);
        off = off.max((p as f64 - t0).abs());
    }
    ensure(off <= 2.0, || format!("saddle point {off} lattice units from the continuum"))?;
    Ok(format!("worst tangency residual {worst:.1e}, worst saddle offset {off:.2}"))
}

fn exact_sampling() -> Outcome {
    let opts = CftpOptions::default();
    let s = spec(4, 6, 2);
    let all = configs(s);
    let index: HashMap<FourVertexConfig, usize> = all.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let samples = 100_000;
    let mut counts = vec![0u64; all.len()];
    for run in sampler::cftp_batch(s, 8, samples, &opts).map_err(|e| e.to_string())? {
        counts[index[&run.state.to_config()]] += 1;
    }
    let expected = samples as f64 / all.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    let critical = ChiSquared::new((all.len() - 1) as f64).unwrap().inverse_cdf(0.99);
    ensure(stat < critical, || format!("chi-square {stat:.1} >= {critical:.1}"))?;

    let s = spec(5, 7, 2);
    let n = 10_000;
    let mut worst: f64 = 0.0;
    let mut queries = 0;
    for p in 1..=s.width() {
        for q in 1..=s.height() {
            let query = EfpQuery::new(s, p, q).unwrap();
            let exact = hahn::to_f64(&hahn::efp(&query));
            let seed = sampler::sample_seed(81, (p * 64 + q) as u64);
            let e = sampler::empirical_efp(&query, n, seed, &opts).map_err(|e| e.to_string())?;
            let sigma = (exact * (1.0 - exact) / n as f64).sqrt();
            let dev = (e.mean - exact).abs();
            if sigma > 0.0 {
                worst = worst.max(dev / sigma);
            }
            ensure(dev <= 3.0 * sigma, || format!("efp({p}, {q}): {} vs {exact} ({:.2} sigma)", e.mean, dev / sigma))?;
            queries += 1;
        }
    }
    Ok(format!("chi-square {stat:.1} < {critical:.1}; {queries} efp queries, worst {worst:.2} sigma"))
}

/// Interpolated position where `values` first drops below `level`, with
/// `values[i]` sampled at `start + i`.
fn first_crossing(values: &[f64], start: f64, level: f64) -> Option<f64> {
    let i = values.iter().position(|&v| v < level)?;
    if i == 0 {
        return Some(start);
    }
    let (a, b) = (values[i - 1], values[i]);
    Some(start + (i - 1) as f64 + (a - level) / (a - b))
}

fn figure_reproduction() -> Outcome {
    let s = spec(35, 60, 15);
    let samples = 10_000;
    let d: DensityFields =
        sampler::density_fields(s, samples, 2017, &CftpOptions::default()).map_err(|e| e.to_string())?;
    let g = ScaledGeometry::from_spec(s, 1.0).unwrap();
    let (l, m) = (g.width(), g.height());
    let (xc, xt) = g.contact_points();
    // Vertex (col, row) sits at (col - 1/2, row - 1/2) in continuum units.
    let to_x = |col: usize| col as f64 - 0.5;

    // Rows through the north-west arc, kept at least 4 units from both ends.
    let mut worst: f64 = 0.0;
    for row in (30..=48).step_by(2) {
        let y = row as f64 - 0.5;
        let (mut lo, mut hi) = (0.0, xc);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if arctic::f1(&g, mid).unwrap() < y {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let predicted = lo + 0.5;
        let values: Vec<f64> = (1..=s.width()).map(|c| d.get(Field::A, c, row)).collect();
        let found = first_crossing(&values, 1.0, 0.5).ok_or(format!("row {row}: no crossing"))?;
        let off = (found - predicted).abs();
        worst = worst.max(off);
        ensure(off <= 3.0, || format!("row {row}: rho_a crosses 1/2 at column {found:.2}, curve at {predicted:.2}"))?;
    }
    // Columns through the north arc: the zig-zag order parameter
    // |rho_c1 - rho_c2| falls through 1/2 on leaving the frozen phase.
    for col in 15..=24 {
        let x = to_x(col);
        let predicted = arctic::f2(&g, x).unwrap() + 0.5;
        let values: Vec<f64> = (1..=s.height())
            .rev()
            .map(|r| d.get(Field::CDifference, col, r).abs())
            .collect();
        let top = g.hexagon_bounds(x).unwrap().1 + 0.5;
        let skip = s.height() - top.floor() as usize;
        let down = first_crossing(&values[skip..], 0.0, 0.5).ok_or(format!("column {col}: no crossing"))?;
        let found = (s.height() - skip) as f64 - down;
        let off = (found - predicted).abs();
        worst = worst.max(off);
        ensure(off <= 3.0, || format!("column {col}: order parameter crosses 1/2 at row {found:.2}, curve at {predicted:.2}"))?;
    }

    // Frozen zig-zag strip: at least one unit above the north arc, away from
    // the contact points, outside the frozen corners.
    let forced: std::collections::HashSet<(usize, usize)> = frozen_region(s).forced().map(|(v, _)| v).collect();
    let (mut inside, mut count_in) = (0.0, 0);
    let (mut center, mut count_center) = (0.0, 0);
    for col in 1..=s.width() {
        for row in 1..=s.height() {
            if forced.contains(&(col, row)) {
                continue;
            }
            let (x, y) = (to_x(col), row as f64 - 0.5);
            let v = d.get(Field::CDifference, col, row).abs();
            if x >= xc + 2.0 && x <= l - xt - 2.0 && y >= arctic::f2(&g, x).unwrap() + 1.0 {
                inside += v;
                count_in += 1;
            }
            if (x - l / 2.0).abs() <= 4.0 && (y - m / 2.0).abs() <= 4.0 {
                center += v;
                count_center += 1;
            }
        }
    }
    let (inside, center) = (inside / count_in as f64, center / count_center as f64);
    ensure(count_in > 0 && inside > 0.9, || format!("zig-zag strip mean |rho_c1 - rho_c2| = {inside:.3}"))?;
    ensure(center < 0.1, || format!("disordered center mean |rho_c1 - rho_c2| = {center:.3}"))?;
    Ok(format!(
        "worst offset {worst:.2} units; |rho_c1 - rho_c2| = {inside:.3} on {count_in} strip vertices, {center:.3} at the center"
    ))
}

struct Criterion {
    number: usize,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { number: 1, name: "oracle equivalence", budget: Duration::from_secs(60), run: oracle_equivalence },
        Criterion { number: 2, name: "refined sums", budget: Duration::from_secs(120), run: refined_sums },
        Criterion { number: 3, name: "EFP/AFP correctness", budget: Duration::from_secs(300), run: formation_probabilities },
        Criterion { number: 4, name: "gap-probability routes", budget: Duration::from_secs(300), run: gap_routes },
        Criterion { number: 5, name: "curve cross-derivation", budget: Duration::from_secs(60), run: curve_cross_derivation },
        Criterion { number: 6, name: "theorem geometry", budget: Duration::from_secs(1), run: theorem_geometry },
        Criterion { number: 7, name: "tangency and saddle points", budget: Duration::from_secs(60), run: tangency },
        Criterion { number: 8, name: "exact sampling", budget: Duration::from_secs(600), run: exact_sampling },
        Criterion { number: 9, name: "figure reproduction", budget: Duration::from_secs(1800), run: figure_reproduction },
    ];
    let only: Option<usize> = std::env::var("ACCEPTANCE_ONLY").ok().and_then(|v| v.parse().ok());
    let mut failed = 0;
    for c in criteria.iter().filter(|c| only.is_none_or(|n| n == c.number)) {
        let start = Instant::now();
        let outcome = (c.run)();
        let elapsed = start.elapsed();
        let outcome = match outcome {
            Ok(detail) if elapsed > c.budget => Err(format!("{detail}; over the {:?} budget", c.budget)),
            other => other,
        };
        match outcome {
            Ok(detail) => println!("PASS criterion {} ({}): {detail} [{:.1?}]", c.number, c.name, elapsed),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {} ({}): {why} [{:.1?}]", c.number, c.name, elapsed);
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
