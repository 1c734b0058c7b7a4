mod common;

use std::collections::{HashMap, HashSet};

use common::{configs, small_specs, spec};
use fourvertex::hahn::{self, AfpQuery, EfpQuery};
use fourvertex::lattice::{frozen_region, FourVertexConfig, LatticeSpec, VertexType};
use fourvertex::sampler::{
    self, cftp_run, density_fields, glauber_step, sample_seed, ChainState, CftpOptions, Direction, Field,
    RandomTape, Update,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn states(s: LatticeSpec) -> Vec<ChainState> {
    configs(s).iter().map(|c| ChainState::from_paths(&c.to_nilp())).collect()
}

fn all_updates(s: LatticeSpec) -> Vec<Update> {
    let mut out = Vec::new();
    for path in 0..s.paths() {
        for step in 0..s.steps() {
            for direction in [Direction::Up, Direction::Down] {
                out.push(Update { path, step, direction });
            }
        }
    }
    out
}

#[test]
fn extreme_states() {
    let s = spec(2, 2, 1);
    assert_eq!(ChainState::min_state(s).crossings(), vec![vec![1]]);
    assert_eq!(ChainState::max_state(s).crossings(), vec![vec![2]]);
    for s in small_specs(5, 7) {
        let all = states(s);
        let (lo, hi) = (ChainState::min_state(s), ChainState::max_state(s));
        assert!(all.contains(&lo) && all.contains(&hi));
        assert!(all.iter().all(|x| lo.is_below(x) && x.is_below(&hi)), "{s}");
    }
    let s = spec(15, 25, 6);
    for state in [ChainState::min_state(s), ChainState::max_state(s)] {
        let crossings = state.crossings();
        let k = s.nilp_height();
        for j in 0..s.paths() {
            for gap in 0..s.width() - 1 {
                let y = crossings[j][gap];
                assert!((1..=k).contains(&y));
                if gap > 0 {
                    assert!(crossings[j][gap - 1] <= y);
                }
                if j > 0 {
                    assert!(crossings[j - 1][gap] < y);
                }
            }
        }
    }
}

#[test]
fn moves_stay_admissible() {
    for s in small_specs(5, 7) {
        let all: HashSet<ChainState> = states(s).into_iter().collect();
        for x in &all {
            for u in all_updates(s) {
                let y = glauber_step(x, u);
                assert!(all.contains(&y), "{s}: {x:?} {u:?}");
                let changed = (0..s.paths()).flat_map(|j| (0..s.steps()).map(move |k| (j, k)))
                    .filter(|&(j, k)| x.get(j, k) != y.get(j, k))
                    .count();
                assert!(changed <= 1);
            }
        }
    }
}

#[test]
fn blocked_move_is_a_no_op() {
    let s = spec(3, 4, 1);
    let lo = ChainState::min_state(s);
    let down = Update { path: 0, step: 0, direction: Direction::Down };
    assert_eq!(glauber_step(&lo, down), lo);
    let hi = ChainState::max_state(s);
    let up = Update { path: 0, step: 1, direction: Direction::Up };
    assert_eq!(glauber_step(&hi, up), hi);
}

#[test]
fn moves_are_monotone() {
    for s in [spec(3, 4, 1), spec(4, 6, 2), spec(5, 6, 3)] {
        let all = states(s);
        let updates = all_updates(s);
        for x in &all {
            for y in all.iter().filter(|y| x.is_below(y)) {
                for &u in &updates {
                    assert!(glauber_step(x, u).is_below(&glauber_step(y, u)), "{s}: {x:?} {y:?} {u:?}");
                }
            }
        }
    }
}

#[test]
fn two_state_chain_is_uniform() {
    let s = spec(2, 2, 1);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut state = ChainState::min_state(s);
    let steps = 1_000_000;
    let mut low = 0u64;
    for _ in 0..steps {
        let direction = if rng.random::<bool>() { Direction::Up } else { Direction::Down };
        state.apply(Update { path: 0, step: 0, direction });
        low += (state.get(0, 0) == 1) as u64;
    }
    // Successive states are independent here: each move lands on either
    // state with probability 1/2.
    let sigma = (steps as f64 * 0.25).sqrt();
    assert!((low as f64 - steps as f64 / 2.0).abs() < 5.0 * sigma, "{low}");
}

#[test]
fn tape_covers_all_moves() {
    let s = spec(5, 8, 2);
    let tape = RandomTape::new(s, 99);
    let mut seen = HashSet::new();
    for t in 1..=200 {
        seen.extend(tape.sweep(t));
    }
    assert_eq!(seen.len(), all_updates(s).len());
}

#[test]
fn cftp_is_deterministic_and_valid() {
    let opts = CftpOptions::default();
    for s in [spec(4, 6, 2), spec(7, 10, 3), spec(12, 20, 5)] {
        for seed in 0..20 {
            let a = cftp_run(s, seed, &opts).unwrap();
            let b = cftp_run(s, seed, &opts).unwrap();
            assert_eq!(a.state, b.state);
            let c = a.state.to_config();
            assert_eq!(FourVertexConfig::from_step_rows(s, c.step_rows().to_vec()).unwrap(), c);
        }
    }
    assert_eq!(
        sampler::cftp_sample(spec(6, 8, 3), 5).unwrap(),
        sampler::cftp_sample(spec(6, 8, 3), 5).unwrap()
    );
}

#[test]
fn timeout_can_be_resumed() {
    let s = spec(10, 15, 4);
    let full = cftp_run(s, 21, &CftpOptions::default()).unwrap();
    let short = CftpOptions { initial_time: 1, max_time: full.coalescence_time / 2 };
    let Err(sampler::SamplerError::Timeout { seed, reached_time }) = cftp_run(s, 21, &short) else {
        panic!("expected a timeout");
    };
    assert_eq!(seed, 21);
    let resumed = CftpOptions { initial_time: 2 * reached_time, max_time: u64::MAX };
    assert_eq!(cftp_run(s, 21, &resumed).unwrap().state, full.state);
}

#[test]
fn two_configuration_frequencies() {
    let s = spec(2, 2, 1);
    let samples = 10_000;
    let batch = sampler::cftp_batch(s, 2024, samples, &CftpOptions::default()).unwrap();
    let low = batch.iter().filter(|r| r.state.get(0, 0) == 1).count();
    let sigma = (samples as f64 * 0.25).sqrt();
    assert!((low as f64 - samples as f64 / 2.0).abs() < 5.0 * sigma, "{low}");
}

/// Chi-square statistic of `samples` draws against the uniform law on the
/// enumerated configurations, with its degrees of freedom.
fn chi_square_uniform(s: LatticeSpec, samples: usize, seed: u64) -> (f64, f64) {
    let all = configs(s);
    let index: HashMap<FourVertexConfig, usize> = all.iter().cloned().enumerate().map(|(i, c)| (c, i)).collect();
    let mut counts = vec![0u64; all.len()];
    for run in sampler::cftp_batch(s, seed, samples, &CftpOptions::default()).unwrap() {
        counts[index[&run.state.to_config()]] += 1;
    }
    let expected = samples as f64 / all.len() as f64;
    let stat: f64 = counts.iter().map(|&c| (c as f64 - expected).powi(2) / expected).sum();
    (stat, (all.len() - 1) as f64)
}

#[test]
fn samples_are_uniform_on_small_lattices() {
    let specs: Vec<LatticeSpec> = small_specs(6, 8)
        .into_iter()
        .filter(|&s| {
            let z = fourvertex::exact::partition_function(s);
            z >= 2u32.into() && z <= 200u32.into()
        })
        .collect();
    assert!(specs.len() >= 10);
    // Family-wise 1% level over all the specs (Bonferroni).
    let level = 0.01 / specs.len() as f64;
    for (i, &s) in specs.iter().enumerate() {
        let (stat, df) = chi_square_uniform(s, 100_000, 1000 + i as u64);
        let critical = ChiSquared::new(df).unwrap().inverse_cdf(1.0 - level);
        assert!(stat < critical, "{s}: chi-square {stat} >= {critical}");
    }
}

#[test]
fn density_fields_respect_frozen_corners() {
    let opts = CftpOptions::default();
    let s = spec(8, 12, 3);
    let d = density_fields(s, 300, 4, &opts).unwrap();
    assert_eq!(d.samples, 300);
    for col in 1..=s.width() {
        for row in 1..=s.height() {
            let total: f64 = [Field::A, Field::B, Field::C].iter().map(|&f| d.get(f, col, row)).sum();
            assert!((total - 1.0).abs() < 1e-12);
            let diff = d.get(Field::CDifference, col, row);
            assert!(diff.abs() <= d.get(Field::C, col, row) + 1e-12);
        }
    }
    for ((col, row), t) in frozen_region(s).forced() {
        let field = match t {
            VertexType::A => Field::A,
            VertexType::B => Field::B,
            _ => unreachable!(),
        };
        assert_eq!(d.get(field, col, row), 1.0);
    }
    assert!(density_fields(s, 0, 4, &opts).is_err());
    // The batch is a function of its seed.
    assert_eq!(density_fields(s, 50, 9, &opts).unwrap(), density_fields(s, 50, 9, &opts).unwrap());
}

#[test]
fn two_by_two_density() {
    let s = spec(2, 2, 1);
    let n = 10_000;
    let d = density_fields(s, n, 77, &CftpOptions::default()).unwrap();
    let sigma = (0.25 / n as f64).sqrt();
    assert!((d.get(Field::A, 1, 2) - 0.5).abs() < 5.0 * sigma);
}

#[test]
fn empirical_formation_probabilities() {
    let opts = CftpOptions::default();
    let q = EfpQuery::new(spec(2, 2, 1), 1, 1).unwrap();
    let e = sampler::empirical_efp(&q, 4000, 3, &opts).unwrap();
    assert!((e.mean - 0.5).abs() < 3.0 * e.stderr, "{e:?}");
    let q = EfpQuery::new(spec(6, 9, 2), 2, 2).unwrap();
    assert_eq!(sampler::empirical_efp(&q, 200, 3, &opts).unwrap().mean, 1.0);

    let s = spec(5, 7, 2);
    let samples = 4000;
    for p in 1..=s.steps() {
        for depth in 1..=s.height() {
            let q = EfpQuery::new(s, p, depth).unwrap();
            let exact = hahn::to_f64(&hahn::efp(&q));
            let e = sampler::empirical_efp(&q, samples, sample_seed(17, (p * 100 + depth) as u64), &opts).unwrap();
            let tol = 3.0 * (exact * (1.0 - exact) / samples as f64).sqrt();
            assert!((e.mean - exact).abs() <= tol.max(1e-12), "efp({p}, {depth}): {e:?} vs {exact}");

            let q = AfpQuery::new(s, p, depth).unwrap();
            let exact = hahn::to_f64(&hahn::afp_direct(&q));
            let e = sampler::empirical_afp(&q, samples, sample_seed(18, (p * 100 + depth) as u64), &opts).unwrap();
            let tol = 3.0 * (exact * (1.0 - exact) / samples as f64).sqrt();
            assert!((e.mean - exact).abs() <= tol.max(1e-12), "afp({p}, {depth}): {e:?} vs {exact}");
        }
    }
}
