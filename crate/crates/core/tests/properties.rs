use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use pushsum_langevin::graph::{check_b_strong_connectivity, spectral_bounds, DirectedGraph};
#[cfg(feature = "parallel")]
use pushsum_langevin::langevin::{NoiseModel, Sampler, StepSchedule};
use pushsum_langevin::metrics::{roc_auc, w2_gaussian_bures};
#[cfg(feature = "parallel")]
use pushsum_langevin::models::QuadraticPotential;
use pushsum_langevin::models::{partition, GaussianDist, PartitionMode};
use pushsum_langevin::{Execution, GraphSequence, NetworkState};

fn graph_strategy(max_nodes: usize) -> impl Strategy<Value = DirectedGraph> {
    (1..=max_nodes).prop_flat_map(|m| {
        prop::collection::vec((0..m, 0..m), 0..=m * m).prop_map(move |e| DirectedGraph::new(m, e).unwrap())
    })
}

fn spd(d: usize) -> impl Strategy<Value = DMatrix<f64>> {
    prop::collection::vec(-1.0..1.0f64, d * d)
        .prop_map(move |v| {
            let a = DMatrix::from_vec(d, d, v);
            &a * a.transpose() + DMatrix::identity(d, d) * 0.1
        })
}

fn gaussian(d: usize) -> impl Strategy<Value = GaussianDist> {
    (prop::collection::vec(-3.0..3.0f64, d), spd(d))
        .prop_map(|(m, c)| GaussianDist::new(DVector::from_vec(m), c).unwrap())
}

fn positions(m: usize, d: usize) -> impl Strategy<Value = Vec<DVector<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, d).prop_map(DVector::from_vec), m)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn mixing_columns_sum_to_one(g in graph_strategy(12)) {
        let a = g.mixing_matrix();
        for s in a.column_sums() {
            prop_assert!((s - 1.0).abs() < 1e-12);
        }
        for j in 0..a.dim() {
            prop_assert!(a.get(j, j) > 0.0);
        }
    }
}

proptest! {
    #[test]
    fn random_sequences_are_b_strongly_connected(
        m in 1usize..10, b in 1usize..5, seed in any::<u64>(), p in 0.0..0.5f64,
    ) {
        let seq = GraphSequence::random(m, b, seed, p).unwrap();
        prop_assert!(check_b_strong_connectivity(&seq, 20 * b).unwrap());
    }

    #[test]
    fn spectral_bounds_lie_in_the_unit_interval(m in 1usize..30, b in 1usize..30) {
        let s = spectral_bounds(m, b).unwrap();
        // exact in log space; the plain values may round to the endpoints
        prop_assert!(s.ln_delta_lower.is_finite() && s.ln_delta_lower <= 0.0);
        prop_assert!(s.ln_lambda_upper <= 0.0);
        if s.delta_lower > 0.0 {
            prop_assert!(s.ln_lambda_upper < 0.0);
        }
        prop_assert!((0.0..=1.0).contains(&s.delta_lower));
        prop_assert!((0.0..=1.0).contains(&s.lambda_upper));
        if (m * b) as f64 * (m as f64).ln() < 30.0 {
            prop_assert!(s.delta_lower > 0.0 && s.lambda_upper < 1.0);
        }
    }

    #[test]
    fn partition_covers_every_row_once(n in 1usize..500, m in 1usize..20, seed in any::<u64>(), random in any::<bool>()) {
        prop_assume!(m <= n);
        let mode = if random { PartitionMode::Random } else { PartitionMode::Contiguous };
        let shards = partition(n, m, mode, seed).unwrap();
        let mut seen: Vec<usize> = shards.iter().flat_map(|s| s.indices.iter().copied()).collect();
        seen.sort_unstable();
        prop_assert_eq!(seen, (0..n).collect::<Vec<_>>());
        let sizes: Vec<usize> = shards.iter().map(|s| s.indices.len()).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn auc_is_invariant_under_increasing_maps(
        pairs in prop::collection::vec((-5.0..5.0f64, any::<bool>()), 2..200),
    ) {
        let labels: Vec<f64> = pairs.iter().map(|&(_, y)| if y { 1.0 } else { -1.0 }).collect();
        prop_assume!(labels.iter().any(|&y| y > 0.0) && labels.iter().any(|&y| y < 0.0));
        let scores: Vec<f64> = pairs.iter().map(|&(s, _)| s).collect();
        let mapped: Vec<f64> = scores.iter().map(|s| (0.7 * s).exp() + 3.0).collect();
        let a = roc_auc(&scores, &labels).unwrap();
        prop_assert!((0.0..=1.0).contains(&a));
        prop_assert!((a - roc_auc(&mapped, &labels).unwrap()).abs() < 1e-12);
        let flipped: Vec<f64> = scores.iter().map(|s| -s).collect();
        prop_assert!((a + roc_auc(&flipped, &labels).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bures_is_a_metric(g1 in gaussian(3), g2 in gaussian(3), g3 in gaussian(3)) {
        let d12 = w2_gaussian_bures(&g1, &g2).unwrap();
        let d21 = w2_gaussian_bures(&g2, &g1).unwrap();
        let d13 = w2_gaussian_bures(&g1, &g3).unwrap();
        let d23 = w2_gaussian_bures(&g2, &g3).unwrap();
        prop_assert!(d12 >= 0.0);
        prop_assert!((d12 - d21).abs() < 1e-9);
        prop_assert!(d13 <= d12 + d23 + 1e-9);
        prop_assert!(w2_gaussian_bures(&g1, &g1).unwrap() < 1e-6);
    }

    #[test]
    fn mixing_conserves_mass_and_average(xs in positions(6, 2), seed in any::<u64>()) {
        let mut ns = NetworkState::from_positions(xs).unwrap();
        let mean = ns.average();
        let seq = GraphSequence::random(6, 2, seed, 0.3).unwrap();
        for g in seq.iter().take(50) {
            ns.consensus_step(&g, Execution::Sequential).unwrap();
            prop_assert!((ns.total_weight() - 6.0).abs() < 1e-9);
            prop_assert!((ns.average() - &mean).amax() < 1e-9 * (1.0 + mean.amax()));
        }
    }
}

#[cfg(feature = "parallel")]
proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parallel_and_sequential_runs_are_bit_identical(
        centers in (1usize..7).prop_flat_map(|m| positions(m, 3)),
        seed in any::<u64>(),
    ) {
        let m = centers.len();
        let pot = QuadraticPotential::isotropic(centers).unwrap();
        let seq = GraphSequence::random(m, 2, seed, 0.2).unwrap();
        let schedule = StepSchedule::Harmonic { alpha0: 0.2 };
        let run = |exec| {
            let mut s = Sampler::new(&pot, schedule, NoiseModel::new(seed)).unwrap().execution(exec);
            for g in seq.iter().take(100) {
                s.step(&g).unwrap();
            }
            s.into_state()
        };
        let a = run(Execution::Sequential);
        let b = run(Execution::Parallel);
        for (x, y) in a.agents.iter().zip(&b.agents) {
            prop_assert_eq!(x.y.to_bits(), y.y.to_bits());
            for k in 0..3 {
                prop_assert_eq!(x.x[k].to_bits(), y.x[k].to_bits());
                prop_assert_eq!(x.z[k].to_bits(), y.z[k].to_bits());
            }
        }
    }
}
