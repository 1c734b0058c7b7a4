//! Cross-checks between independent routes, run against the installed
//! library.

use std::collections::HashMap;

use fourvertex::arctic::{self, Arc, ScaledGeometry};
use fourvertex::exact::{self, ColumnOccupation};
use fourvertex::hahn::{self, AfpQuery, EfpQuery, GapRoute, HahnParams};
use fourvertex::lattice::{enumerate_all, FourVertexConfig, LatticeSpec};
use fourvertex::sampler::{self, CftpOptions};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Small,
    Full,
}

#[derive(Debug, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

struct Sizes {
    max_l: usize,
    max_m: usize,
    max_n_gap: usize,
    sampler_draws: usize,
}

fn sizes(level: Level) -> Sizes {
    match level {
        Level::Small => Sizes { max_l: 5, max_m: 7, max_n_gap: 8, sampler_draws: 20_000 },
        Level::Full => Sizes { max_l: 6, max_m: 8, max_n_gap: 12, sampler_draws: 100_000 },
    }
}

fn specs(max_l: usize, max_m: usize) -> Vec<LatticeSpec> {
    let mut out = Vec::new();
    for l in 2..=max_l {
        for m in l..=max_m {
            for n in 1..l {
                out.push(LatticeSpec::new(l, m, n).expect("loop bounds give valid specs"));
            }
        }
    }
    out
}

fn configs(s: LatticeSpec) -> Result<Vec<FourVertexConfig>, String> {
    Ok(enumerate_all(s).map_err(|e| e.to_string())?.collect())
}

fn partition_functions(sz: &Sizes) -> Result<String, String> {
    let all = specs(sz.max_l, sz.max_m);
    for &s in &all {
        let z = exact::partition_function(s);
        let count = BigInt::from(configs(s)?.len());
        if z != count || z != exact::lgv_determinant(s) {
            return Err(format!("{s}: product {z}, enumeration {count}"));
        }
        let total: BigInt = (1..=s.steps() + 1)
            .map(|c| exact::boundary_refined_z1(s, c).map_err(|e| e.to_string()))
            .sum::<Result<BigInt, String>>()?;
        if total != z {
            return Err(format!("{s}: boundary-refined sum {total}"));
        }
        for col in 1..s.width() {
            let sum: BigInt = ColumnOccupation::all(s, col).iter().map(|o| exact::column_refined_z(s, o)).sum();
            if sum != z {
                return Err(format!("{s} column {col}: column-refined sum {sum}"));
            }
        }
    }
    Ok(format!("{} specs", all.len()))
}

fn formation(sz: &Sizes) -> Result<String, String> {
    let mut n = 0;
    for s in specs(sz.max_l, sz.max_m) {
        let grids: Vec<_> = configs(s)?.iter().map(|c| c.vertex_grid()).collect();
        let freq = |hits: usize| BigRational::new(hits.into(), grids.len().into());
        for p in 1..=s.width() {
            for q in 1..=s.height() {
                let e = EfpQuery::new(s, p, q).map_err(|e| e.to_string())?;
                if hahn::efp(&e) != freq(grids.iter().filter(|g| e.holds(g)).count()) {
                    return Err(format!("{s} efp({p}, {q})"));
                }
                n += 1;
                if p <= s.steps() {
                    let a = AfpQuery::new(s, p, q).map_err(|e| e.to_string())?;
                    let expected = freq(grids.iter().filter(|g| a.holds(g)).count());
                    if hahn::afp_direct(&a) != expected || hahn::afp_via_efp(&a) != expected {
                        return Err(format!("{s} afp({p}, {q})"));
                    }
                    n += 1;
                }
            }
        }
    }
    Ok(format!("{n} queries"))
}

fn gap_routes(sz: &Sizes) -> Result<String, String> {
    let mut n = 0;
    for size in 0..=sz.max_n_gap {
        for s in 1..=5usize.min(size + 1) {
            for alpha in 0..=3 {
                for beta in 0..=3 {
                    for d in 0..=size as i64 {
                        let p = HahnParams::new(d, alpha, beta, s, size).map_err(|e| e.to_string())?;
                        let get = |r| hahn::gap_probability(&p, r).map_err(|e| e.to_string());
                        let (a, b, c) = (get(GapRoute::Direct)?, get(GapRoute::HankelRatio)?, get(GapRoute::Fredholm)?);
                        if a != b || (a.to_f64() - c.to_f64()).abs() > 1e-10 {
                            return Err(format!("{p:?}"));
                        }
                        n += 1;
                    }
                }
            }
        }
    }
    Ok(format!("{n} cases"))
}

fn curve() -> Result<String, String> {
    for (l, m, n) in [(5.0, 8.0, 1.0), (7.0, 11.0, 2.0), (5.0, 8.0, 4.0)] {
        let g = ScaledGeometry::new(l, m, n).map_err(|e| e.to_string())?;
        let (a1, b1) = arctic::arc_interval(&g, Arc::Gamma1);
        let (a2, b2) = arctic::arc_interval(&g, Arc::Gamma2);
        for i in 0..=50 {
            let t = i as f64 / 50.0;
            let x = a1 + (b1 - a1) * t;
            if x > 0.0 {
                let y = arctic::curve_from_efp(&g, x).map_err(|e| e.to_string())?;
                if (y - arctic::f1(&g, x).map_err(|e| e.to_string())?).abs() > 1e-8 {
                    return Err(format!("({l},{m},{n}) north-west arc at x = {x}"));
                }
            }
            let x = a2 + (b2 - a2) * t;
            let y = arctic::curve_from_afp(&g, x).map_err(|e| e.to_string())?;
            if (y - arctic::f2(&g, x).map_err(|e| e.to_string())?).abs() > 1e-8 {
                return Err(format!("({l},{m},{n}) north arc at x = {x}"));
            }
        }
        for i in 1..=100 {
            let u = (l - n) * i as f64 / 100.0;
            let line = arctic::tangent_family_west(&g, u).map_err(|e| e.to_string())?;
            let (x, y) = arctic::west_envelope(&g, u);
            if (line.y_at(x) - y).abs() > 1e-9 {
                return Err(format!("({l},{m},{n}) west family at u = {u}"));
            }
            let u = n * i as f64 / 101.0;
            let line = arctic::tangent_family_north(&g, u).map_err(|e| e.to_string())?;
            let (x, y) = arctic::north_envelope(&g, u);
            if (line.y_at(x) - y).abs() > 1e-9 {
                return Err(format!("({l},{m},{n}) north family at u = {u}"));
            }
        }
    }
    Ok("three geometries".into())
}

fn sampling(sz: &Sizes) -> Result<String, String> {
    let s = LatticeSpec::new(4, 6, 2).expect("valid spec");
    let all = configs(s)?;
    let index: HashMap<&FourVertexConfig, usize> = all.iter().enumerate().map(|(i, c)| (c, i)).collect();
    let mut counts = vec![0u64; all.len()];
    let runs = sampler::cftp_batch(s, 1, sz.sampler_draws, &CftpOptions::default()).map_err(|e| e.to_string())?;
    for run in runs {
        counts[index[&run.state.to_config()]] += 1;
    }
    let df = (all.len() - 1) as f64;
    let critical = ChiSquared::new(df).map_err(|e| e.to_string())?.inverse_cdf(0.999);
    let expected = sz.sampler_draws as f64 / all.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    if stat > critical {
        return Err(format!("chi-square {stat:.1} > {critical:.1}"));
    }
    Ok(format!("chi-square {stat:.1} on {df} degrees of freedom"))
}

pub fn run(level: Level) -> Vec<Check> {
    let sz = sizes(level);
    let checks: [(&'static str, Box<dyn Fn() -> Result<String, String>>); 5] = [
        ("partition functions", Box::new(|| partition_functions(&sz))),
        ("formation probabilities", Box::new(|| formation(&sz))),
        ("gap-probability routes", Box::new(|| gap_routes(&sz))),
        ("arctic curve", Box::new(curve)),
        ("exact sampling", Box::new(|| sampling(&sz))),
    ];
    checks
        .iter()
        .map(|(name, f)| match f() {
            Ok(detail) => Check { name, passed: true, detail },
            Err(detail) => Check { name, passed: false, detail },
        })
        .collect()
}
