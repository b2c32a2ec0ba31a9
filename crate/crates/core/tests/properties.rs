use proptest::prelude::*;
use rem_core::mitigation::{build_omega, mitigate, mitigate_expansion, mitigate_truncated};
use rem_core::model::{BitFlipModel, OutcomeDistribution, PauliZString, QubitFlip, StateVector};
use rem_core::noise::{channel_exact, noisy_expectation_vector};
use rem_core::rng::stream;
use rem_core::sim::{apply_gate, exact_expectation, outcome_distribution, Gate};
use rem_core::variance::{noisy_variance_components, predicted_noisy_variance};

fn gate(qubits: usize) -> impl Strategy<Value = Gate> {
    let angle = -10.0..10.0f64;
    prop_oneof![
        (0..qubits, angle.clone()).prop_map(|(qubit, theta)| Gate::Rx { qubit, theta }),
        (0..qubits, angle).prop_map(|(qubit, theta)| Gate::Rz { qubit, theta }),
        (0..qubits).prop_map(|qubit| Gate::X { qubit }),
        (0..qubits, 1..qubits).prop_map(move |(control, shift)| Gate::Cnot {
            control,
            target: (control + shift) % qubits
        }),
    ]
}

fn model(qubits: usize) -> impl Strategy<Value = BitFlipModel> {
    prop::collection::vec((0.0..0.3f64, 0.0..0.3f64), qubits)
        .prop_map(|pairs| BitFlipModel::from_pairs(&pairs).unwrap())
}

proptest! {
    #[test]
    fn gates_preserve_norm(seed in any::<u64>(), gates in prop::collection::vec(gate(3), 1..30)) {
        let mut state = StateVector::random(3, &mut stream(seed, 0)).unwrap();
        for g in &gates {
            state = apply_gate(&state, g).unwrap();
            prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-12);
        }
        let id = PauliZString::identity(3).unwrap();
        prop_assert_eq!(exact_expectation(&state, &id).unwrap(), 1.0);
    }

    #[test]
    fn channel_preserves_normalization(seed in any::<u64>(), m in model(3)) {
        let dist = outcome_distribution(&StateVector::random(3, &mut stream(seed, 0)).unwrap());
        let out = channel_exact(&dist, &m).unwrap();
        prop_assert!((out.probabilities().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        prop_assert!(out.probabilities().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn channel_factors_commute(seed in any::<u64>(), pairs in prop::collection::vec((0.0..=1.0f64, 0.0..=1.0f64), 3)) {
        // Applying the single-qubit channels one at a time, in reverse order,
        // gives the same distribution as the full channel.
        let dist = outcome_distribution(&StateVector::random(3, &mut stream(seed, 0)).unwrap());
        let full = BitFlipModel::new_unchecked(pairs.iter().map(|&(a, b)| QubitFlip::new(a, b)).collect());
        let mut stepwise = dist.clone();
        for q in (0..3).rev() {
            let single: Vec<QubitFlip> = (0..3)
                .map(|i| if i == q { QubitFlip::new(pairs[i].0, pairs[i].1) } else { QubitFlip::new(0.0, 0.0) })
                .collect();
            stepwise = channel_exact(&stepwise, &BitFlipModel::new_unchecked(single)).unwrap();
        }
        let direct = channel_exact(&dist, &full).unwrap();
        for (a, b) in direct.probabilities().iter().zip(stepwise.probabilities()) {
            prop_assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn mitigation_inverts_channel(qubits in 1usize..=4, seed in any::<u64>()) {
        let mut rng = stream(seed, 0);
        let m = BitFlipModel::random(qubits, 0.0, 0.25, &mut rng).unwrap();
        let state = StateVector::random(qubits, &mut rng).unwrap();
        let exact = outcome_distribution(&state).expectation_vector();
        let noisy = noisy_expectation_vector(&state, &m).unwrap();
        let recovered = mitigate(&noisy, &m).unwrap();
        for (r, e) in recovered.iter().zip(&exact) {
            prop_assert!((r - e).abs() < 1e-10);
        }
        // ω applied to the exact vector reproduces the noisy one.
        let forward = build_omega(&m).unwrap().apply(&exact).unwrap();
        for (f, n) in forward.iter().zip(&noisy) {
            prop_assert!((f - n).abs() < 1e-12);
        }
    }

    #[test]
    fn expansion_agrees_with_triangular_solve(qubits in 1usize..=4, seed in any::<u64>()) {
        let mut rng = stream(seed, 0);
        let m = BitFlipModel::random(qubits, 0.0, 0.25, &mut rng).unwrap();
        let noisy = noisy_expectation_vector(&StateVector::random(qubits, &mut rng).unwrap(), &m).unwrap();
        let solved = mitigate(&noisy, &m).unwrap();
        for mask in 0..1usize << qubits {
            let op = PauliZString::new(qubits, mask).unwrap();
            prop_assert!((mitigate_expansion(&op, &noisy, &m).unwrap() - solved[mask]).abs() < 1e-12);
            prop_assert_eq!(mitigate_truncated(&op, &noisy, &m, qubits).unwrap(), solved[mask]);
        }
    }

    #[test]
    fn predicted_variance_scales_as_inverse_shots(seed in any::<u64>(), shots in 1u64..100_000) {
        let mut rng = stream(seed, 0);
        let m = BitFlipModel::random(3, 0.0, 0.2, &mut rng).unwrap();
        let noisy = noisy_expectation_vector(&StateVector::random(3, &mut rng).unwrap(), &m).unwrap();
        let mitigated = mitigate(&noisy, &m).unwrap();
        let op = PauliZString::all_z(3).unwrap();
        let per_shot = noisy_variance_components(&op, &noisy, &mitigated, &m).unwrap().per_shot();
        let scaled = predicted_noisy_variance(&op, &noisy, &mitigated, &m, shots).unwrap() * shots as f64;
        prop_assert!((scaled - per_shot).abs() <= 1e-15 * per_shot.max(1.0) * 4.0);
        prop_assert!(per_shot >= 0.0);
    }

    #[test]
    fn histogram_expectations_match_distribution(counts in prop::collection::vec(0u64..50, 8)) {
        let shots: u64 = counts.iter().sum();
        prop_assume!(shots > 0);
        let hist = rem_core::ShotHistogram::from_counts(3, counts.clone(), shots).unwrap();
        let dist = OutcomeDistribution::new(counts.iter().map(|&c| c as f64 / shots as f64).collect());
        prop_assume!(dist.is_ok());
        let dist = dist.unwrap();
        for (a, b) in hist.expectation_vector().iter().zip(dist.expectation_vector()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }
}
