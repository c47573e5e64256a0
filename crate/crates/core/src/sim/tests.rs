use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;

fn random_gate(rng: &mut impl Rng, width: usize) -> Gate {
    let q = rng.random_range(0..width);
    let mut other = rng.random_range(0..width - 1);
    if other >= q {
        other += 1;
    }
    let angle = rng.random_range(-PI..PI);
    match rng.random_range(0..5) {
        0 => Gate::ry(q, angle),
        1 => Gate::rz(q, angle),
        2 => Gate::x(q),
        3 => Gate::cnot(q, other),
        _ => Gate::sqrt_iswap(q, other),
    }
}

fn random_circuit(rng: &mut impl Rng, width: usize, len: usize) -> Circuit {
    let gates = (0..len).map(|_| random_gate(rng, width)).collect();
    Circuit::from_gates(width, gates).unwrap()
}

fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

#[test]
fn pauli_x_flips() {
    let s = apply_gate(&QuantumState::from_bitstring("0").unwrap(), &Gate::x(0)).unwrap();
    assert_eq!(s.probabilities(), vec![0.0, 1.0]);
}

#[test]
fn ry_pi_maps_zero_to_one() {
    let s = apply_gate(&QuantumState::from_bitstring("0").unwrap(), &Gate::ry(0, PI)).unwrap();
    let a = s.amplitudes().unwrap();
    assert!(a[0].norm() < 1e-15);
    assert!((a[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
}

#[test]
fn sqrt_iswap_on_01() {
    // Oracle: explicit 4×4 matrix product against the basis vector e_1.
    let r = FRAC_1_SQRT_2;
    let m = [
        [Complex64::new(1.0, 0.0), Complex64::default(), Complex64::default(), Complex64::default()],
        [Complex64::default(), Complex64::new(r, 0.0), Complex64::new(0.0, r), Complex64::default()],
        [Complex64::default(), Complex64::new(0.0, r), Complex64::new(r, 0.0), Complex64::default()],
        [Complex64::default(), Complex64::default(), Complex64::default(), Complex64::new(1.0, 0.0)],
    ];
    let expected: Vec<Complex64> = (0..4).map(|row| m[row][1]).collect();
    let s = apply_gate(&QuantumState::from_bitstring("01").unwrap(), &Gate::sqrt_iswap(1, 0)).unwrap();
    assert!(max_diff(s.amplitudes().unwrap(), &expected) < 1e-15);
    let swapped = apply_gate(&QuantumState::from_bitstring("01").unwrap(), &Gate::sqrt_iswap(0, 1)).unwrap();
    assert!(max_diff(swapped.amplitudes().unwrap(), &expected) < 1e-15);
}

#[test]
fn cnot_truth_table() {
    for (input, output) in [("00", "00"), ("01", "11"), ("10", "10"), ("11", "01")] {
        let s = run_pure(&Circuit::from_gates(2, vec![Gate::cnot(0, 1)]).unwrap(), input).unwrap();
        let idx = parse_bitstring(output).unwrap();
        assert!((s.probabilities()[idx] - 1.0).abs() < 1e-15, "{input} -> {output}");
    }
}

#[test]
fn index_errors() {
    let mut s = QuantumState::basis(2, 0).unwrap();
    assert!(matches!(s.apply(&Gate::x(2)), Err(SimError::QubitOutOfRange { qubit: 2, width: 2 })));
    assert!(matches!(s.apply(&Gate::cnot(1, 1)), Err(SimError::RepeatedQubit(1))));
    let mut c = Circuit::new(3);
    assert!(c.push(Gate::cnot(0, 3)).is_err());
    assert!(c.is_empty());
}

#[test]
fn empty_circuit_is_identity() {
    let s = run_pure(&Circuit::new(5), "00000").unwrap();
    assert_eq!(s.probabilities()[0], 1.0);
    assert!(run_pure(&Circuit::new(5), "0000").is_err());
}

#[test]
fn single_rotation_amplitudes() {
    for theta in [0.0, 0.3, 1.7, -2.4] {
        let s = run_pure(&Circuit::from_gates(1, vec![Gate::ry(0, theta)]).unwrap(), "0").unwrap();
        let a = s.amplitudes().unwrap();
        assert!((a[0].re - (theta / 2.0).cos()).abs() < 1e-15);
        assert!((a[1].re - (theta / 2.0).sin()).abs() < 1e-15);
    }
}

#[test]
fn gate_then_inverse_restores_state() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let width = rng.random_range(2..5);
        let prep = random_circuit(&mut rng, width, 8);
        let pure = run_pure_zero(&prep).unwrap();
        let density = pure.to_density();
        let g = random_gate(&mut rng, width);
        let mut p2 = apply_gate(&pure, &g).unwrap();
        let mut d2 = apply_gate(&density, &g).unwrap();
        for inv in g.inverse() {
            p2.apply(&inv).unwrap();
            d2.apply(&inv).unwrap();
        }
        assert!(max_diff(p2.amplitudes().unwrap(), pure.amplitudes().unwrap()) < 1e-10);
        assert!(max_diff(d2.density_matrix().unwrap(), density.density_matrix().unwrap()) < 1e-10);
    }
}

fn lossy_qubit() -> QubitNoise {
    QubitNoise { t1_us: 20.0, t2_us: 30.0, prob_meas0_prep1: 0.05, prob_meas1_prep0: 0.02, gate_error_1q: 0.03 }
}

#[test]
fn channels_preserve_trace_and_positivity() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let noise = NoiseModel::uniform(4, lossy_qubit(), 0.08).with_durations(GateDurations {
        single_qubit: 500.0,
        two_qubit: 3000.0,
        measure: 5000.0,
    });
    for _ in 0..20 {
        let c = random_circuit(&mut rng, 3, 12);
        let rho = run_noisy(&c, &noise, &[0, 1, 2]).unwrap();
        assert!((rho.trace() - 1.0).abs() < 1e-10);
        assert!(rho.hermiticity_error() < 1e-10);
        assert!(rho.min_eigenvalue() > -1e-9);
    }
}

#[test]
fn single_channels_preserve_trace() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let c = random_circuit(&mut rng, 3, 10);
    let QuantumState::Density { mut matrix, .. } = run_pure_zero(&c).unwrap().to_density() else { unreachable!() };
    noise::depolarize_1q(&mut matrix, 3, 1, 0.4);
    noise::depolarize_2q(&mut matrix, 3, 0, 2, 0.3);
    noise::thermal_relax(&mut matrix, 3, 2, &lossy_qubit(), 4000.0);
    let s = QuantumState::from_density(3, matrix).unwrap();
    assert!((s.trace() - 1.0).abs() < 1e-12);
    assert!(s.min_eigenvalue() > -1e-9);
}

#[test]
fn zero_noise_matches_pure() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let noise = NoiseModel::noiseless(5);
    for _ in 0..100 {
        let width = rng.random_range(2..6);
        let c = random_circuit(&mut rng, width, 15);
        let pure = run_pure_zero(&c).unwrap();
        let rho = run_noisy(&c, &noise, &[0, 1, 2, 3, 4]).unwrap();
        let expect = pure.to_density();
        assert!(max_diff(rho.density_matrix().unwrap(), expect.density_matrix().unwrap()) < 1e-10);
        let diag = rho.probabilities();
        for (a, b) in diag.iter().zip(pure.probabilities()) {
            assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn depolarized_x_population() {
    for p in [0.0, 0.01, 0.2, 0.75] {
        let q = QubitNoise { gate_error_1q: p, ..QubitNoise::IDEAL };
        let noise = NoiseModel::uniform(1, q, 0.0);
        let rho = run_noisy(&Circuit::from_gates(1, vec![Gate::x(0)]).unwrap(), &noise, &[0]).unwrap();
        // Hand evaluation: X and Y flip |1⟩ back to |0⟩, Z leaves it: p1 = (1−p) + p/3.
        assert!((rho.probabilities()[1] - (1.0 - 2.0 * p / 3.0)).abs() < 1e-14);
    }
}

#[test]
fn amplitude_damping_matches_t1() {
    let q = QubitNoise { t1_us: 50.0, t2_us: 100.0, ..QubitNoise::IDEAL };
    let noise = NoiseModel::uniform(1, q, 0.0).with_durations(GateDurations {
        single_qubit: 10_000.0,
        two_qubit: 0.0,
        measure: 0.0,
    });
    let rho = run_noisy(&Circuit::from_gates(1, vec![Gate::x(0)]).unwrap(), &noise, &[0]).unwrap();
    assert!((rho.probabilities()[1] - (-10.0f64 / 50.0).exp()).abs() < 1e-12);

    // T2 = 2·T1 means no extra dephasing; |+⟩ coherence decays as exp(−t/T2).
    let rho = run_noisy(&Circuit::from_gates(1, vec![Gate::ry(0, PI / 2.0)]).unwrap(), &noise, &[0]).unwrap();
    assert!((rho.element(0, 1).re - 0.5 * (-10.0f64 / 100.0).exp()).abs() < 1e-12);
    let q = QubitNoise { t1_us: 50.0, t2_us: 20.0, ..QubitNoise::IDEAL };
    let noise = NoiseModel::uniform(1, q, 0.0).with_durations(GateDurations {
        single_qubit: 10_000.0,
        two_qubit: 0.0,
        measure: 0.0,
    });
    let rho = run_noisy(&Circuit::from_gates(1, vec![Gate::ry(0, PI / 2.0)]).unwrap(), &noise, &[0]).unwrap();
    assert!((rho.element(0, 1).re - 0.5 * (-10.0f64 / 20.0).exp()).abs() < 1e-12);
}

#[test]
fn layout_and_pair_errors() {
    let noise = NoiseModel::uniform(3, QubitNoise::IDEAL, 0.0).with_default_cx_error(None);
    let c = Circuit::from_gates(2, vec![Gate::cnot(0, 1)]).unwrap();
    assert!(matches!(run_noisy(&c, &noise, &[0, 1]), Err(SimError::MissingPair(0, 1))));
    assert!(matches!(run_noisy(&c, &noise, &[0, 0]), Err(SimError::Layout(_))));
    assert!(matches!(run_noisy(&c, &noise, &[0, 7]), Err(SimError::UnknownQubit(7))));
    assert!(matches!(run_noisy(&c, &noise, &[0]), Err(SimError::Layout(_))));
}

#[test]
fn deterministic_state_sampling() {
    let s = QuantumState::from_bitstring("00001").unwrap();
    for shots in [1, 17, 8192] {
        let h = sample(&s, shots, None, 5).unwrap();
        assert_eq!(h.count_bitstring("00001").unwrap(), shots);
        assert_eq!(h.shots(), shots);
        h.validate().unwrap();
    }
    assert!(matches!(sample(&s, 0, None, 5), Err(SimError::ZeroShots)));
}

#[test]
fn readout_flip_rate() {
    let q = QubitNoise { prob_meas1_prep0: 0.1, ..QubitNoise::IDEAL };
    let noise = NoiseModel::uniform(1, q, 0.0);
    let s = QuantumState::from_bitstring("0").unwrap();
    let h = sample(&s, 1_000_000, Some((&noise, &[0][..])), 9).unwrap();
    let frac = h.count(1) as f64 / 1e6;
    assert!((frac - 0.1).abs() < 0.001, "{frac}");
}

#[test]
fn born_rule_for_equal_superposition() {
    let mut amps = vec![Complex64::default(); 32];
    amps[1] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    amps[2] = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let s = QuantumState::from_amplitudes(5, amps).unwrap();
    let sigma = (8192.0f64 * 0.25).sqrt();
    for seed in 0..20 {
        let h = sample(&s, 8192, None, seed).unwrap();
        assert_eq!(h.count(1) + h.count(2), 8192);
        assert!((h.count_bitstring("00001").unwrap() as f64 - 4096.0).abs() <= 3.0 * sigma + 1.0);
    }
}

#[test]
fn sampling_converges_in_kl() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..5 {
        let c = random_circuit(&mut rng, 3, 10);
        let s = run_pure_zero(&c).unwrap();
        let p = s.probabilities();
        let h = sample(&s, 1_000_000, None, trial).unwrap();
        let q = h.frequencies();
        let kl: f64 = q.iter().zip(&p).filter(|(qi, _)| **qi > 0.0).map(|(qi, pi)| qi * (qi / pi).ln()).sum();
        assert!(kl < 5e-4, "kl {kl}");
    }
}

#[test]
fn sampling_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let c = random_circuit(&mut rng, 4, 12);
    let noise = NoiseModel::uniform(4, lossy_qubit(), 0.05);
    let layout = [0, 1, 2, 3];
    let rho = run_noisy(&c, &noise, &layout).unwrap();
    let a = sample(&rho, 4096, Some((&noise, &layout[..])), 42).unwrap();
    let b = sample(&run_noisy(&c, &noise, &layout).unwrap(), 4096, Some((&noise, &layout[..])), 42).unwrap();
    assert_eq!(a, b);
    let c2 = sample(&rho, 4096, Some((&noise, &layout[..])), 43).unwrap();
    assert_ne!(a, c2);
}

#[test]
fn histogram_from_bitstrings() {
    let h = ShotHistogram::from_bitstrings([("00001", 500), ("00010", 300), ("00011", 200)]).unwrap();
    assert_eq!(h.shots(), 1000);
    assert_eq!(h.count(3), 200);
    assert_eq!(h.to_bitstring_map()["00010"], 300);
    assert!(ShotHistogram::from_bitstrings([("001", 1), ("01", 1)]).is_err());
    assert!(ShotHistogram::from_bitstrings([("0a1", 1)]).is_err());
    assert_eq!(ShotHistogram::from_bitstrings([("01", u64::MAX), ("10", 1)]), Err(SimError::ShotOverflow));
}
