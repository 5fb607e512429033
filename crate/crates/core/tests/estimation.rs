use std::f64::consts::PI;

use nrqae::circuit::{Sampling, Simulator};
use nrqae::estimator::{estimate, run, RunOptions};
use nrqae::model::{angle_state, pauli_string, random_state, EstimationProblem, NoiseSpec};
use nrqae::perturb::perturbed_phase;
use nrqae::rng::StreamKey;
use proptest::prelude::*;

fn label(bits: u8, qubits: usize) -> String {
    (0..qubits)
        .map(|q| ['I', 'X', 'Y', 'Z'][((bits >> (2 * q)) & 3) as usize])
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_noiseless_amplitude_is_recovered(q in 1usize..=3, s1 in any::<u64>(), s2 in any::<u64>()) {
        let p = EstimationProblem::amplitude(random_state(q, s1), random_state(q, s2)).unwrap();
        let truth = p.exact_value();
        prop_assume!(truth < 1.0 - 1e-6 && truth > 1e-6);
        let r = estimate(&p, &NoiseSpec::None, Sampling::Exact, 0, &RunOptions::new(5)).unwrap();
        prop_assert!((r.theta_ch - p.ideal_theta_ch()).abs() < 1e-8, "{} vs {}", r.theta_ch, p.ideal_theta_ch());
        // The phase fixes the amplitude only up to a ↔ 1 − a.
        let err = (r.value - truth).abs().min((r.mirror - truth).abs());
        prop_assert!(err < 1e-8);
        prop_assert!(r.value >= 0.5);
        prop_assert!((r.value + r.mirror - 1.0).abs() < 1e-12);
    }

    #[test]
    fn exact_noiseless_observable_is_recovered(q in 1usize..=3, s in any::<u64>(), bits in 1u8..64) {
        let l = label(bits, q);
        prop_assume!(l.chars().any(|c| c != 'I'));
        let p = EstimationProblem::observable(random_state(q, s), pauli_string(&l).unwrap()).unwrap();
        let truth = p.exact_value();
        prop_assume!(truth.abs() < 1.0 - 1e-6);
        let r = estimate(&p, &NoiseSpec::None, Sampling::Exact, 0, &RunOptions::new(5)).unwrap();
        let err = (r.value - truth).abs().min((r.mirror - truth).abs());
        prop_assert!(err < 1e-8, "{l}: {} vs {truth}", r.value);
        prop_assert!((r.mirror + r.value).abs() < 1e-12);
    }

    #[test]
    fn ideal_series_is_a_scaled_cosine(q in 1usize..=2, s1 in any::<u64>(), s2 in any::<u64>()) {
        // t_n = 2(1 − a)·cos(nθ_ch) for the noiseless circuit.
        let p = EstimationProblem::amplitude(random_state(q, s1), random_state(q, s2)).unwrap();
        let a = p.exact_value();
        let th = p.ideal_theta_ch();
        let sim = Simulator::new(p, &NoiseSpec::None).unwrap();
        for n in [0usize, 1, 2, 5, 13] {
            let t = sim.exact_t(n).unwrap();
            prop_assert!((t - 2.0 * (1.0 - a) * (n as f64 * th).cos()).abs() < 1e-10);
        }
    }
}

#[test]
fn noisy_exact_runs_track_the_perturbed_phase() {
    let instances = [
        (1, 0.0, 0.3),
        (1, 0.2, 1.1),
        (2, 0.0, PI / 20.0),
        (2, 0.1, 0.6),
    ];
    let noises = [
        NoiseSpec::Depolarizing { p: 0.01 },
        NoiseSpec::AmplitudeDamping { gamma: 0.01 },
        NoiseSpec::Coherent { delta_t: 0.01 },
    ];
    for &(q, a, b) in &instances {
        let p = EstimationProblem::amplitude(angle_state(q, a), angle_state(q, b)).unwrap();
        for noise in &noises {
            let sim = Simulator::new(p.clone(), noise).unwrap();
            let target = perturbed_phase(&sim).unwrap();
            let r = run(&sim, Sampling::Exact, StreamKey::new(0, 0), &RunOptions::new(6)).unwrap();
            assert!(
                (r.theta_ch - target).abs() < 1e-3,
                "{q} qubit(s), angles ({a}, {b}), {}: {} vs {target}",
                noise.kind(),
                r.theta_ch
            );
        }
    }
}

#[test]
fn decay_fit_reflects_depolarizing_strength() {
    let p = EstimationProblem::amplitude(angle_state(1, 0.0), angle_state(1, 0.5)).unwrap();
    let weak = estimate(&p, &NoiseSpec::Depolarizing { p: 0.01 }, Sampling::Exact, 0, &RunOptions::new(4)).unwrap();
    let strong = estimate(&p, &NoiseSpec::Depolarizing { p: 0.05 }, Sampling::Exact, 0, &RunOptions::new(4)).unwrap();
    let (w, s) = (weak.decay.unwrap(), strong.decay.unwrap());
    assert!(w < 1.0 && s < w, "weak {w}, strong {s}");
}

#[test]
fn sampled_estimates_concentrate_with_shots() {
    let p = EstimationProblem::amplitude(angle_state(1, 0.0), angle_state(1, 0.5)).unwrap();
    let truth = p.exact_value();
    let sim = Simulator::new(p, &NoiseSpec::None).unwrap();
    let err = |shots: u64| {
        let mut e: Vec<f64> = (0..16)
            .map(|t| {
                let r = run(&sim, Sampling::Shots(shots), StreamKey::new(5, t), &RunOptions::new(3)).unwrap();
                (r.value - truth).abs()
            })
            .collect();
        e.sort_by(f64::total_cmp);
        e[8]
    };
    let (coarse, fine) = (err(1_000), err(100_000));
    assert!(fine < coarse, "coarse {coarse}, fine {fine}");
    assert!(fine < 2e-3);
}
