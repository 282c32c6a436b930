mod common;

use coherelab::coherence::NetworkModel;
use coherelab::concentration::RandomTFModel;
use coherelab::network::LaplacianMatrix;
use coherelab::rational::RationalTF;
use coherelab::timedomain::{self, Input, SimOptions, TimeDomainError};
use common::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn realization_reproduces_the_transfer_function(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = if rng.random_bool(0.5) { random_proper_tf(&mut rng) } else { random_biproper_tf(&mut rng) };
        let ss = timedomain::realize(&g).unwrap();
        for _ in 0..20 {
            let s = c(rng.random_range(-0.1..2.0), rng.random_range(-5.0..5.0));
            let Some(want) = g.eval(s).unwrap().finite() else { continue };
            let Ok(h) = ss.frequency_response(s) else { continue };
            prop_assert!((h[(0, 0)] - want).norm() <= 1e-8 * want.norm().max(1e-12), "{} vs {}", h[(0, 0)], want);
        }
    }
}

#[test]
fn rk4_error_falls_sixteenfold_per_halving() {
    let ss = timedomain::realize(&RationalTF::integrator()).unwrap();
    let input = Input::sinusoid_all(1.0, 1.0);
    let error = |dt: f64| {
        let traj = timedomain::simulate(&ss, &input, &SimOptions::new(10.0).with_dt(dt)).unwrap();
        traj.times
            .iter()
            .zip(traj.outputs.row(0).iter())
            .map(|(t, y)| (y - (1.0 - t.cos())).abs())
            .fold(0.0, f64::max)
    };
    let (coarse, fine) = (error(0.2), error(0.1));
    let ratio = coarse / fine;
    assert!((14.0..=18.0).contains(&ratio), "ratio {ratio} ({coarse:e} / {fine:e})");
}

#[test]
fn step_response_settles_at_the_dc_transfer_matrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(0xdc);
    for _ in 0..10 {
        let n = rng.random_range(2..=5);
        let l = random_graph(&mut rng, n, 0.5, 2.0);
        let nodes: Vec<RationalTF> = (0..n)
            .map(|_| RationalTF::from_real_zpk(&[], &[-rng.random_range(0.5..2.0)], rng.random_range(0.5..3.0)).unwrap())
            .collect();
        let net = NetworkModel::new(l, nodes, RationalTF::constant(1.0)).unwrap();
        let dc = net.transfer_matrix(c(0.0, 0.0)).unwrap().matrix;
        let j = rng.random_range(0..n);
        let ss = timedomain::closed_loop(&net).unwrap();
        let traj = timedomain::simulate(&ss, &Input::step_node(j, 1.0), &SimOptions::new(60.0).with_stride(100)).unwrap();
        let last = traj.final_outputs();
        for i in 0..n {
            assert!((last[i] - dc[(i, j)].re).abs() < 1e-6, "node {i}: {} vs {}", last[i], dc[(i, j)]);
        }
    }
}

#[test]
fn consensus_coherence_improves_with_size() {
    let model = RandomTFModel::consensus(1.0, 5.0, 0).unwrap();
    let mut deviations = Vec::new();
    for n in [20usize, 50, 100, 500] {
        let k = (0.15 * n as f64).ceil() as usize;
        let l = LaplacianMatrix::k_regular_ring(n, k, 1.0).unwrap();
        let net = NetworkModel::new(l, model.sample_nodes(n, 5).unwrap(), RationalTF::constant(1.0)).unwrap();
        let opts = SimOptions::new(10.0).with_stride(10);
        let (full, reference) = timedomain::simulate_with_reference(&net, &Input::impulse_all(), &opts).unwrap();
        let mut worst = 0.0_f64;
        for (col, t) in full.times.iter().enumerate() {
            if *t < 2.0 - 1e-9 {
                continue;
            }
            for i in 0..n {
                worst = worst.max((full.outputs[(i, col)] - reference.outputs[(0, col)]).abs());
            }
        }
        deviations.push(worst);
    }
    assert!(deviations.windows(2).all(|w| w[1] < w[0]), "{deviations:?}");
}

#[test]
fn impulse_reference_is_the_harmonic_constant() {
    let gs = vec![RationalTF::integrator(), RationalTF::integrator().scale(4.0)];
    let net = NetworkModel::new(LaplacianMatrix::complete_graph(2, 1.0).unwrap(), gs, RationalTF::constant(1.0)).unwrap();
    let reference = timedomain::coherent_reference(&net, &Input::impulse_all(), &SimOptions::new(5.0)).unwrap();
    assert!(reference.outputs.row(0).iter().all(|y| (y - 1.6).abs() < 1e-12));
}

#[test]
fn csv_has_reference_column_on_shared_times() {
    let net = NetworkModel::homogeneous(
        LaplacianMatrix::path_graph(3, 1.0).unwrap(),
        RationalTF::from_real_zpk(&[], &[-1.0], 1.0).unwrap(),
        RationalTF::constant(1.0),
    )
    .unwrap();
    let (full, reference) =
        timedomain::simulate_with_reference(&net, &Input::step_node(1, 1.0), &SimOptions::new(1.0).with_dt(0.1)).unwrap();
    assert_eq!(full.times, reference.times);
    let csv = full.to_csv(Some(&reference));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,y_0,y_1,y_2,y_ref"));
    assert_eq!(lines.count(), 11);
}

#[test]
fn oversized_step_is_rejected() {
    let ss = timedomain::realize(&RationalTF::from_real_zpk(&[], &[-100.0], 1.0).unwrap()).unwrap();
    let err = timedomain::simulate(&ss, &Input::impulse_all(), &SimOptions::new(1.0).with_dt(0.1)).unwrap_err();
    assert!(matches!(err, TimeDomainError::StepTooLarge { .. }));
    let improper = RationalTF::from_coeffs(&[0.0, 1.0], &[1.0]).unwrap();
    assert!(matches!(timedomain::realize(&improper), Err(TimeDomainError::ImproperTF)));
}
