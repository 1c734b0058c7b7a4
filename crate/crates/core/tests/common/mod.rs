#![allow(dead_code)]

use std::collections::HashSet;

use fourvertex::lattice::{enumerate_all, FourVertexConfig, LatticeSpec, VertexGrid};

pub fn spec(l: usize, m: usize, n: usize) -> LatticeSpec {
    LatticeSpec::new(l, m, n).unwrap()
}

pub fn configs(s: LatticeSpec) -> Vec<FourVertexConfig> {
    enumerate_all(s).unwrap().collect()
}

pub fn grids(s: LatticeSpec) -> Vec<VertexGrid> {
    configs(s).iter().map(|c| c.vertex_grid()).collect()
}

/// All specs with `L <= max_l`, `M <= max_m`.
pub fn small_specs(max_l: usize, max_m: usize) -> Vec<LatticeSpec> {
    let mut out = Vec::new();
    for l in 2..=max_l {
        for m in l..=max_m {
            for n in 1..l {
                out.push(spec(l, m, n));
            }
        }
    }
    out
}

fn combinations(range: std::ops::RangeInclusive<usize>, k: usize) -> Vec<Vec<usize>> {
    let items: Vec<usize> = range.collect();
    let mut out = Vec::new();
    let mut pick = Vec::with_capacity(k);
    fn rec(items: &[usize], k: usize, start: usize, pick: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if pick.len() == k {
            out.push(pick.clone());
            return;
        }
        for i in start..items.len() {
            pick.push(items[i]);
            rec(items, k, i + 1, pick, out);
            pick.pop();
        }
    }
    rec(&items, k, 0, &mut pick, &mut out);
    out
}

/// Counts families of vertex-disjoint up-right paths on `height` rows that
/// never take two consecutive horizontal steps. Path `j` enters column
/// `starts[j]` from the south, leaves column `ends[j]` to the north, and may
/// only visit vertices accepted by `allowed(j, column, row)`.
pub fn count_path_families(
    height: usize,
    starts: &[usize],
    ends: &[usize],
    allowed: &dyn Fn(usize, usize, usize) -> bool,
) -> u64 {
    fn cells(start: usize, rows: &[usize], height: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let (mut col, mut from) = (start, 1);
        for &h in rows {
            out.extend((from..=h).map(|m| (col, m)));
            col += 1;
            from = h;
        }
        out.extend((from..=height).map(|m| (col, m)));
        out
    }
    fn rec(
        j: usize,
        height: usize,
        starts: &[usize],
        ends: &[usize],
        allowed: &dyn Fn(usize, usize, usize) -> bool,
        used: &mut HashSet<(usize, usize)>,
    ) -> u64 {
        if j == starts.len() {
            return 1;
        }
        let mut total = 0;
        for rows in combinations(1..=height, ends[j] - starts[j]) {
            let path = cells(starts[j], &rows, height);
            if path.iter().any(|v| used.contains(v) || !allowed(j, v.0, v.1)) {
                continue;
            }
            used.extend(path.iter().copied());
            total += rec(j + 1, height, starts, ends, allowed, used);
            for v in &path {
                used.remove(v);
            }
        }
        total
    }
    rec(0, height, starts, ends, allowed, &mut HashSet::new())
}
