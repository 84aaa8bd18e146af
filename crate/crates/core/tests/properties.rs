mod common;

use common::*;
use conlab::conductance::{from_conductance, ConductanceMatrix};
use conlab::generators::lazy_torus;
use conlab::hitting::{hitting_times, kac_check};
use conlab::matrix::blend;
use conlab::perturb::{box_community, homophily};
use conlab::sim::simulate_return_time;
use conlab::stationary::{reversible_stationary, stationary_direct, stationary_power};
use conlab::structure::{extract_ball, is_aperiodic, is_irreducible};
use conlab::{smat, Label, SparseMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn structure_matches_brute_force(n in 1usize..=8, seed in any::<u64>(), density in 0.05f64..0.7) {
        let p = random_stochastic(&mut rng(seed), n, density);
        prop_assert_eq!(is_irreducible(&p), brute_irreducible(&p));
        prop_assert_eq!(is_aperiodic(&p), brute_aperiodic(&p));
    }

    #[test]
    fn blend_is_symmetric_and_stochastic(n in 1usize..=7, seed in any::<u64>(), k in 0u32..=16) {
        let mut r = rng(seed);
        let p = random_stochastic(&mut r, n, 0.5);
        let q = random_stochastic(&mut r, n, 0.5);
        // dyadic weights keep 1 − (1 − w) == w exact
        let w = f64::from(k) / 16.0;
        let a = blend(&p, &q, w).unwrap();
        let b = blend(&q, &p, 1.0 - w).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn balls_grow_with_radius(n in 1usize..=8, seed in any::<u64>(), r in 0usize..4) {
        let p = random_stochastic(&mut rng(seed), n, 0.3);
        let small = extract_ball(&p, 0, r);
        let big = extract_ball(&p, 0, r + 1);
        prop_assert_eq!(small.vertex_map[0], 0);
        prop_assert!(small.distances.iter().all(|&d| d <= r));
        for v in &small.vertex_map {
            prop_assert!(big.vertex_map.contains(v));
        }
    }

    #[test]
    fn reversible_chains_satisfy_detailed_balance(n in 2usize..=9, seed in any::<u64>()) {
        let mut r = rng(seed);
        let values = [0.5, 1.0, 3.0];
        let mut rows = vec![Vec::new(); n];
        let add = |i: usize, j: usize, c: f64, rows: &mut Vec<Vec<(usize, f64)>>| {
            rows[i].push((j, c));
            if i != j {
                rows[j].push((i, c));
            }
        };
        for i in 0..n {
            for j in i..n {
                // keep the edge i, i+1 so the graph is connected
                if j == i + 1 || r.random::<f64>() < 0.3 {
                    add(i, j, values[r.random_range(0..3)], &mut rows);
                }
            }
        }
        let c = ConductanceMatrix::new(SparseMatrix::from_rows(n, rows).unwrap(), values.to_vec()).unwrap();
        let p = from_conductance(&c).unwrap();
        let pi = stationary_direct(&p).unwrap();
        let closed = reversible_stationary(&c).unwrap();
        prop_assert!(max_abs_diff(pi.as_slice(), closed.as_slice()) <= 1e-12);
        for i in 0..n {
            for (j, pij) in p.row_entries(i) {
                prop_assert!((pi[i] * pij - pi[j] * p.get(j, i)).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn stationary_matches_repeated_squaring(n in 1usize..=6, seed in any::<u64>(), extra in 0.0f64..0.6) {
        let p = random_irreducible(&mut rng(seed), n, extra);
        let oracle = stationary_by_squaring(&p);
        let direct = stationary_direct(&p).unwrap();
        prop_assert!(max_abs_diff(direct.as_slice(), &oracle) <= 1e-9);
        let power = stationary_power(&p, 1e-13, 1_000_000).unwrap();
        prop_assert!(max_abs_diff(power.as_slice(), &oracle) <= 1e-9);
    }

    #[test]
    fn hitting_matches_dense_elimination(n in 2usize..=8, seed in any::<u64>(), extra in 0.0f64..0.6) {
        let mut r = rng(seed);
        let p = random_irreducible(&mut r, n, extra);
        let mut targets: Vec<usize> = (0..n).filter(|_| r.random::<f64>() < 0.3).collect();
        if targets.is_empty() {
            targets.push(r.random_range(0..n));
        }
        let ours = hitting_times(&p, &targets).unwrap();
        let oracle = dense_hitting(&p, &targets);
        for (a, b) in ours.iter().zip(&oracle) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b), "{} vs {}", a, b);
        }
    }

    #[test]
    fn growing_the_target_set_never_slows_hitting(n in 2usize..=8, seed in any::<u64>()) {
        let mut r = rng(seed);
        let p = random_irreducible(&mut r, n, 0.3);
        let a = r.random_range(0..n);
        let b = r.random_range(0..n);
        let small = hitting_times(&p, &[a]).unwrap();
        let big = hitting_times(&p, &[a, b]).unwrap();
        for (x, y) in small.iter().zip(&big) {
            prop_assert!(*y <= x * (1.0 + 1e-12));
        }
    }

    #[test]
    fn kac_holds_on_random_chains(n in 1usize..=8, seed in any::<u64>(), extra in 0.0f64..0.6) {
        let p = random_irreducible(&mut rng(seed), n, extra);
        let nodes: Vec<usize> = (0..n).collect();
        let report = kac_check(&p, &nodes, 1e-8).unwrap();
        prop_assert!(report.pass, "{:?}", report);
    }

    #[test]
    fn homophily_touches_only_the_community(n in 1usize..=3, lambda in 1.0f64..200.0, mask in any::<u32>()) {
        let torus = lazy_torus(2, n, 0.1).unwrap();
        let dim = torus.dim();
        let w: Vec<usize> = (0..dim).filter(|i| mask >> (i % 32) & 1 == 1).collect();
        prop_assume!(!w.is_empty());
        let out = homophily(&torus.matrix, &w, lambda).unwrap();
        let before = torus.matrix.to_rows();
        let after = out.matrix.to_rows();
        for i in (0..dim).filter(|i| !w.contains(i)) {
            prop_assert_eq!(&before[i], &after[i]);
        }
        prop_assert!(out.irreducible);
    }

    #[test]
    fn smat_roundtrip_is_byte_identical(n in 1usize..=8, seed in any::<u64>()) {
        let p = random_stochastic(&mut rng(seed), n, 0.5);
        let text = smat::to_string(&p);
        let back = smat::parse(&text).unwrap();
        prop_assert_eq!(back.to_rows(), p.to_rows());
        prop_assert_eq!(smat::to_string(&back), text);
    }

    #[test]
    fn labels_roundtrip(coords in proptest::collection::vec(-1000i64..1000, 1..4)) {
        let l = Label(coords);
        prop_assert_eq!(l.to_string().parse::<Label>().unwrap(), l.clone());
        let json = serde_json::to_string(&l).unwrap();
        prop_assert_eq!(serde_json::from_str::<Label>(&json).unwrap(), l);
    }
}

#[test]
fn homophily_pulls_weight_into_the_community() {
    for n in [2, 3, 5] {
        let torus = lazy_torus(2, n, 0.1).unwrap();
        let w: Vec<usize> = box_community(2, 1).iter().map(|l| torus.index_of(l).unwrap()).collect();
        let mass = |lambda: f64| {
            let p = homophily(&torus.matrix, &w, lambda).unwrap().matrix;
            let pi = stationary_direct(&p).unwrap();
            w.iter().map(|&i| pi[i]).sum::<f64>()
        };
        let (m1, m10, m100) = (mass(1.0), mass(10.0), mass(100.0));
        assert!((m1 - 9.0 / ((2 * n + 1) * (2 * n + 1)) as f64).abs() < 1e-12);
        assert!(m1 < m10 && m10 < m100, "n={n}: {m1} {m10} {m100}");
    }
}

#[test]
fn simulation_is_thread_count_independent() {
    let p = random_irreducible(&mut rng(3), 6, 0.4);
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
    let a = one.install(|| simulate_return_time(&p, 2, 5000, 99).unwrap());
    let b = four.install(|| simulate_return_time(&p, 2, 5000, 99).unwrap());
    assert_eq!(a, b);
    assert_eq!(a.estimate.to_bits(), b.estimate.to_bits());
}

#[test]
fn standard_error_shrinks_like_root_samples() {
    let p = random_irreducible(&mut rng(11), 7, 0.3);
    for node in 0..3 {
        let small = simulate_return_time(&p, node, 20_000, 5).unwrap();
        let big = simulate_return_time(&p, node, 80_000, 6).unwrap();
        let ratio = big.standard_error / small.standard_error;
        assert!((0.25..=1.0).contains(&ratio), "node {node}: ratio {ratio}");
    }
}
