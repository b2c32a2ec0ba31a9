//! Independent oracles for the channel, ω matrix, mitigation and variance
//! formulas: brute-force enumeration and seeded Monte Carlo.

use rand::Rng;
use rem_core::analysis::{fit_power_law, histogram_stats};
use rem_core::calibration::{calibrate, SampledBackend};
use rem_core::mitigation::{build_omega, mitigate, mitigate_truncated};
use rem_core::model::{eigenvalue, BitFlipModel, OutcomeDistribution, PauliZString, QubitFlip, StateVector};
use rem_core::noise::{channel_exact, flip_outcome, noisy_expectation_vector};
use rem_core::rng::stream;
use rem_core::sim::outcome_distribution;
use rem_core::variance::{
    predicted_mitigated_variance, predicted_noisy_variance, single_qubit_bf_variance,
};

/// `P(read | prepared)` for the whole register, built bit by bit.
fn transition(model: &BitFlipModel, read: usize, prepared: usize) -> f64 {
    model
        .flips()
        .iter()
        .enumerate()
        .map(|(q, f)| {
            let (b, r) = (prepared >> q & 1, read >> q & 1);
            match (b, r) {
                (0, 0) => 1.0 - f.p0,
                (0, _) => f.p0,
                (_, 0) => f.p1,
                _ => 1.0 - f.p1,
            }
        })
        .product()
}

#[test]
fn omega_matches_channel_conjugation() {
    // E⟨Õ⟩ on basis state b is f(b) = Σ_r P(r|b) (-1)^{r·Õ}. Expanding f in
    // the Walsh basis gives ω(O|Õ) = 2^-Q Σ_b f(b) (-1)^{b·O}.
    let model = BitFlipModel::from_pairs(&[(0.1, 0.03), (0.05, 0.12), (0.08, 0.01)]).unwrap();
    let omega = build_omega(&model).unwrap();
    let dim = 8;
    for noisy_op in 0..dim {
        let f: Vec<f64> = (0..dim)
            .map(|b| (0..dim).map(|r| transition(&model, r, b) * eigenvalue(r, noisy_op)).sum())
            .collect();
        for op in 0..dim {
            let coeff = (0..dim).map(|b| f[b] * eigenvalue(b, op)).sum::<f64>() / dim as f64;
            assert!(
                (coeff - omega.entry(noisy_op, op)).abs() < 1e-14,
                "ω({op}|{noisy_op}) = {} but brute force gives {coeff}",
                omega.entry(noisy_op, op)
            );
        }
    }
    let sym = build_omega(&BitFlipModel::symmetric(2, 0.1).unwrap()).unwrap();
    assert!((sym.entry(3, 3) - 0.64).abs() < 1e-15);
}

#[test]
fn channel_matches_flip_sampling() {
    let state = StateVector::product(&[(1.1, 0.0), (0.6, 0.0)]).unwrap();
    let dist = outcome_distribution(&state);
    let model = BitFlipModel::symmetric(2, 0.1).unwrap();
    let exact = channel_exact(&dist, &model).unwrap();

    let n = 1_000_000u64;
    let mut counts = [0u64; 4];
    let mut outcomes = stream(17, 0);
    let mut flips = stream(17, 1);
    let sampler = rem_core::sim::OutcomeSampler::new(&dist);
    for _ in 0..n {
        counts[flip_outcome(sampler.sample(&mut outcomes), &model, &mut flips)] += 1;
    }
    for (b, &c) in counts.iter().enumerate() {
        let p = exact.probability(b);
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((c as f64 - n as f64 * p).abs() < 5.0 * sigma, "outcome {b}");
    }
}

#[test]
fn flip_histogram_converges_at_root_n() {
    let dist = OutcomeDistribution::new(vec![0.4, 0.1, 0.2, 0.3]).unwrap();
    let model = BitFlipModel::from_pairs(&[(0.05, 0.1), (0.12, 0.02)]).unwrap();
    let exact = channel_exact(&dist, &model).unwrap();
    let sampler = rem_core::sim::OutcomeSampler::new(&dist);
    let mut points = Vec::new();
    for k in 10..=17 {
        let n = 1u64 << k;
        // Average the distance over repetitions to tame its fluctuation.
        let reps = 40;
        let mut total = 0.0;
        for rep in 0..reps {
            let mut counts = [0u64; 4];
            let (mut o, mut f) = (stream(k as u64 * 1000 + rep, 0), stream(k as u64 * 1000 + rep, 1));
            for _ in 0..n {
                counts[flip_outcome(sampler.sample(&mut o), &model, &mut f)] += 1;
            }
            let empirical =
                OutcomeDistribution::new(counts.iter().map(|&c| c as f64 / n as f64).collect()).unwrap();
            total += empirical.total_variation(&exact);
        }
        points.push((n as f64, total / reps as f64));
    }
    let fit = fit_power_law(&points).unwrap();
    assert!((fit.alpha + 0.5).abs() < 0.1, "alpha = {}", fit.alpha);
}

#[test]
fn round_trip_with_random_models() {
    let mut rng = stream(2024, 0);
    for qubits in 1..=4 {
        for _ in 0..20 {
            let model = BitFlipModel::random(qubits, 0.0, 0.2, &mut rng).unwrap();
            let state = StateVector::random(qubits, &mut rng).unwrap();
            let exact = outcome_distribution(&state).expectation_vector();
            let noisy = noisy_expectation_vector(&state, &model).unwrap();
            let recovered = mitigate(&noisy, &model).unwrap();
            assert_eq!(recovered[0], 1.0);
            for (r, e) in recovered.iter().zip(&exact) {
                assert!((r - e).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn truncation_error_is_second_order() {
    // With k = 1, the dropped terms carry at least two γ(I) factors.
    let mut rng = stream(99, 0);
    let op = PauliZString::all_z(3).unwrap();
    let mut worst_constant: f64 = 0.0;
    for _ in 0..200 {
        let model = BitFlipModel::random(3, 0.0, 0.15, &mut rng).unwrap();
        let state = StateVector::random(3, &mut rng).unwrap();
        let noisy = noisy_expectation_vector(&state, &model).unwrap();
        let full = mitigate(&noisy, &model).unwrap()[7];
        let k1 = mitigate_truncated(&op, &noisy, &model, 1).unwrap();
        let max_gi = model.flips().iter().map(|f| f.gamma_i().abs()).fold(0.0, f64::max);
        if max_gi > 0.0 {
            worst_constant = worst_constant.max((k1 - full).abs() / (max_gi * max_gi));
        }
    }
    // Three pairs of flipped qubits plus one triple, each coefficient at most
    // (1/γ(Z))³ ≈ 2.4 for p < 0.15.
    assert!(worst_constant < 10.0, "C = {worst_constant}");
}

#[test]
fn single_qubit_variance_by_enumeration() {
    // The readout of one qubit realizes Z, -Z, -I or +I.
    for &(p0, p1) in &[(0.0, 0.0), (0.1, 0.1), (0.1, 0.0), (0.03, 0.17), (0.3, 0.05)] {
        for &z in &[-1.0, -0.4, 0.0, 0.25, 1.0] {
            let outcomes = [
                ((1.0 - p0) * (1.0 - p1), z),
                (p0 * p1, -z),
                (p0 * (1.0 - p1), -1.0),
                ((1.0 - p0) * p1, 1.0),
            ];
            let mean: f64 = outcomes.iter().map(|(w, v)| w * v).sum();
            let var: f64 = outcomes.iter().map(|(w, v)| w * (v - mean) * (v - mean)).sum();
            assert!((single_qubit_bf_variance(z, p0, p1) - var).abs() < 1e-15);
        }
    }
}

#[test]
fn single_qubit_variance_monte_carlo() {
    let (p0, p1, z) = (0.1, 0.1, 0.0);
    let n = 1_000_000;
    let mut rng = stream(5, 0);
    let mut values = Vec::with_capacity(n);
    for _ in 0..n {
        let flip0 = rng.random::<f64>() < p0;
        let flip1 = rng.random::<f64>() < p1;
        values.push(match (flip0, flip1) {
            (false, false) => z,
            (true, true) => -z,
            (true, false) => -1.0,
            (false, true) => 1.0,
        });
    }
    let stats = histogram_stats(&values).unwrap();
    let predicted = single_qubit_bf_variance(z, p0, p1);
    assert!((predicted - 0.18).abs() < 1e-15);
    // Var of the sample variance of a variable with fourth central moment m4.
    let m4: f64 = values.iter().map(|v| (v - stats.mean).powi(4)).sum::<f64>() / n as f64;
    let se = ((m4 - predicted * predicted) / n as f64).sqrt();
    assert!((stats.sample_variance() - predicted).abs() < 5.0 * se);
}

/// Sample variance of the noisy and mitigated estimators of `op` over
/// `experiments` runs of `shots` shots.
fn empirical_variances(
    state: &StateVector,
    model: &BitFlipModel,
    op: &PauliZString,
    shots: u64,
    experiments: usize,
    seed: u64,
) -> (f64, f64) {
    let dist = outcome_distribution(state);
    let omega = build_omega(model).unwrap();
    let mut noisy_values = Vec::new();
    let mut mitigated_values = Vec::new();
    for i in 0..experiments as u64 {
        let hist = rem_core::noise::sample_noisy_shots(
            &dist,
            model,
            shots,
            &mut stream(seed ^ i, 0),
            &mut stream(seed ^ i, 1),
        )
        .unwrap();
        let noisy = hist.expectation_vector();
        noisy_values.push(noisy[op.mask()]);
        mitigated_values.push(omega.solve(&noisy).unwrap()[op.mask()]);
    }
    (
        histogram_stats(&noisy_values).unwrap().sample_variance(),
        histogram_stats(&mitigated_values).unwrap().sample_variance(),
    )
}

#[test]
fn two_qubit_variance_prediction_monte_carlo() {
    // Product state with ⟨Z_q⟩ = 0 on each qubit.
    let half = std::f64::consts::FRAC_PI_2;
    let state = StateVector::product(&[(half, 0.0), (half, 0.0)]).unwrap();
    let model = BitFlipModel::symmetric(2, 0.1).unwrap();
    let op = PauliZString::all_z(2).unwrap();
    let shots = 128;
    let experiments = 10_000;
    let noisy = noisy_expectation_vector(&state, &model).unwrap();
    let mitigated = mitigate(&noisy, &model).unwrap();
    let pred_noisy = predicted_noisy_variance(&op, &noisy, &mitigated, &model, shots).unwrap();
    let pred_mitigated = predicted_mitigated_variance(&op, &noisy, &model, shots).unwrap();
    let (v_noisy, v_mitigated) = empirical_variances(&state, &model, &op, shots, experiments, 0xabc);
    let rel = (2.0 / (experiments as f64 - 1.0)).sqrt();
    assert!((v_noisy - pred_noisy).abs() < 5.0 * rel * pred_noisy, "{v_noisy} vs {pred_noisy}");
    assert!((v_mitigated - pred_mitigated).abs() < 5.0 * rel * pred_mitigated, "{v_mitigated} vs {pred_mitigated}");
}

#[test]
fn mitigation_amplifies_variance_under_symmetric_noise() {
    let mut rng = stream(8, 0);
    for _ in 0..200 {
        let qubits = rng.random_range(1..=4);
        let p = rng.random::<f64>() * 0.2;
        let model = BitFlipModel::symmetric(qubits, p).unwrap();
        let state = StateVector::random(qubits, &mut rng).unwrap();
        let noisy = noisy_expectation_vector(&state, &model).unwrap();
        let mitigated = mitigate(&noisy, &model).unwrap();
        for mask in 1..1usize << qubits {
            let op = PauliZString::new(qubits, mask).unwrap();
            let n = predicted_noisy_variance(&op, &noisy, &mitigated, &model, 100).unwrap();
            let m = predicted_mitigated_variance(&op, &noisy, &model, 100).unwrap();
            assert!(m >= n * (1.0 - 1e-12));
            assert!(n >= 0.0);
        }
    }
}

#[test]
fn calibration_error_decays_at_root_shots() {
    let truth = BitFlipModel::new(vec![QubitFlip::new(0.06, 0.09)]).unwrap();
    let backend = SampledBackend { model: truth };
    let mut points = Vec::new();
    for k in 8..=15 {
        let shots = 1u64 << k;
        let reps = 200;
        let mut rng = stream(k, 0);
        let rms = (0..reps)
            .map(|_| {
                let est = calibrate(&backend, 1, shots, &mut rng).unwrap();
                (est.qubit(0).p0 - 0.06).powi(2)
            })
            .sum::<f64>()
            / reps as f64;
        points.push((shots as f64, rms.sqrt()));
    }
    let fit = fit_power_law(&points).unwrap();
    assert!((fit.alpha + 0.5).abs() < 0.1, "alpha = {}", fit.alpha);
}

#[test]
fn calibration_recovers_each_qubit() {
    let truth = BitFlipModel::from_pairs(&[(0.02, 0.07), (0.09, 0.04), (0.05, 0.05)]).unwrap();
    let model = calibrate(&SampledBackend { model: truth.clone() }, 3, 100_000, &mut stream(77, 0)).unwrap();
    for (est, t) in model.flips().iter().zip(truth.flips()) {
        assert!((est.p0 - t.p0).abs() < 5.0 * est.stderr0.unwrap());
        assert!((est.p1 - t.p1).abs() < 5.0 * est.stderr1.unwrap());
    }
}

#[test]
fn gaussian_fit_recovers_parameters() {
    use rand_distr::{Distribution, Normal};
    let normal = Normal::new(0.3, 0.05).unwrap();
    let mut rng = stream(31, 0);
    let n = 10_000;
    let values: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
    let stats = histogram_stats(&values).unwrap();
    let mean_se = 0.05 / (n as f64).sqrt();
    let sigma_se = 0.05 / (2.0 * n as f64).sqrt();
    assert!((stats.fit_mean - 0.3).abs() < 5.0 * mean_se);
    assert!((stats.fit_sigma - 0.05).abs() < 5.0 * sigma_se);
    assert!(stats.sample_std > stats.fit_sigma);
}
