//! Data files shipped with the crate.

/// Five-molecule anthracene layer (couplings, herringbone dipoles).
pub const ANTHRACENE5: &str = include_str!("../data/anthracene5.toml");
/// Symmetric dimer with parallel dipoles.
pub const DIMER: &str = include_str!("../data/dimer.toml");
/// ibmq_guadalupe noise parameters.
pub const GUADALUPE_NOISE: &str = include_str!("../data/guadalupe.toml");
/// Five error-free qubits.
pub const NOISELESS5: &str = include_str!("../data/noiseless5.toml");

/// Logical→physical placement used with [`GUADALUPE_NOISE`]: the chain 0-1-4-7-10, where
/// every neighbouring pair of the ansatz ladder has a native coupler.
pub const DEFAULT_LAYOUT: [usize; 5] = [0, 1, 4, 7, 10];

/// Reference eigenvalues of the anthracene layer in meV.
pub const REFERENCE_EIGENVALUES: [f64; 5] = [-32.562, -24.449, 2.577, 21.872, 32.562];
/// Reference Davydov splitting in cm⁻¹.
pub const REFERENCE_DAVYDOV_CM: f64 = 218.75;
