use frenkel_core::ansatz::amplitude_map;
use frenkel_core::ansatz::AnsatzParameters;
use frenkel_core::bundled;
use frenkel_core::exciton::{build_hamiltonian, diagonalize, ExcitonConfig};
use frenkel_core::measurement::{Backend, MeasurementPlan};
use frenkel_core::mitigation::{
    dataset_hash, dataset_to_csv, generate_dataset, read_dataset_csv, remeasure, train, DatasetSpec, Hyperparameters,
    MitigatorModel,
};
use frenkel_core::sim::load_noise_model;
use frenkel_core::vqd::{read_trace_csv, solve, write_trace_csv, VqdSettings};

#[test]
fn dataset_and_model_survive_disk() {
    let h = build_hamiltonian(&ExcitonConfig::from_toml(bundled::ANTHRACENE5).unwrap()).unwrap();
    let pairs: Vec<(usize, usize)> = MeasurementPlan::new(&h).jobs().iter().map(|j| j.pair).collect();
    let noise = load_noise_model(bundled::GUADALUPE_NOISE).unwrap();
    let spec = DatasetSpec { count: 60, shots: 1024, pairs: pairs.clone(), seed: 11 };
    let data = generate_dataset(5, &spec, &noise, &bundled::DEFAULT_LAYOUT).unwrap();
    for s in &data {
        let label = amplitude_map(&AnsatzParameters::new(s.params.clone())).populations();
        assert!(s.label.iter().zip(&label).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    let back = read_dataset_csv(dataset_to_csv(&data).as_bytes()).unwrap();
    assert_eq!(back, data);
    assert_eq!(dataset_hash(&back), dataset_hash(&data));

    let hyper = Hyperparameters { epochs: 3, ..Hyperparameters::default() };
    let model = train(&data, &pairs, &hyper, 4).unwrap();
    let again = train(&data, &pairs, &hyper, 4).unwrap();
    assert_eq!(model.training.train_loss, again.training.train_loss);
    let reloaded = MitigatorModel::from_json(&model.to_json()).unwrap();
    assert_eq!(reloaded.hash(), model.hash());
}

#[test]
fn noisy_dimer_is_pulled_toward_zero_and_post_selection_helps() {
    let h = build_hamiltonian(&ExcitonConfig::from_toml(bundled::DIMER).unwrap()).unwrap();
    let exact = diagonalize(&h).unwrap().eigenvalues;
    let noise = load_noise_model(bundled::GUADALUPE_NOISE).unwrap();
    let backend = Backend::noisy(noise, vec![0, 1]);
    let settings = VqdSettings { seed: 3, ..VqdSettings::default() };
    let result = solve(&h, &settings, backend.clone(), 8192).unwrap();

    let mut csv = Vec::new();
    write_trace_csv(&result.trace, &mut csv).unwrap();
    assert_eq!(read_trace_csv(csv.as_slice()).unwrap(), result.trace);

    let rows = remeasure(&result, None, &h, 8192, &backend, 9).unwrap();
    for (r, x) in rows.iter().zip(&exact) {
        assert!(r.raw.abs() < x.abs(), "raw {} vs exact {x}", r.raw);
        assert!((r.post_selected - x).abs() < (r.raw - x).abs(), "{r:?}");
        assert!(r.post_dl.is_none());
    }
}
