#![allow(dead_code)]

use covact::scenario::{GainTable, Scenario, ScenarioConfig};
use covact::ComplexMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Small network with unit noise and gains drawn log-uniformly from
/// `[0.1, 10]`, so finite differences stay well conditioned.
pub fn small_scenario(cells: usize, n: usize, l: usize, seed: u64) -> Scenario {
    let cfg = ScenarioConfig {
        cells,
        devices_per_cell: n,
        active_per_cell: 1.min(n),
        signature_len: l,
        antennas: 8,
        seed,
        ..Default::default()
    };
    let mut scn = Scenario::generate(&cfg).unwrap();
    let mut r = rng(seed ^ 0x5eed);
    let gains = (0..cells * cells * n).map(|_| 10f64.powf(r.random_range(-1.0..1.0))).collect();
    scn.gains = GainTable::from_values(cells, n, gains).unwrap();
    scn.noise_var = 1.0;
    scn
}

/// Random Hermitian positive semidefinite `Y Y^H / m`.
pub fn random_psd(l: usize, m: usize, r: &mut impl Rng) -> ComplexMatrix {
    let y: Vec<Complex64> = (0..l * m)
        .map(|_| Complex64::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)))
        .collect();
    let mut out = ComplexMatrix::from_fn(l, l, |i, j| {
        (0..m).map(|k| y[i * m + k] * y[j * m + k].conj()).sum::<Complex64>() / m as f64
    });
    out.re_symmetrize();
    out
}

pub fn random_sample_covs(scn: &Scenario, seed: u64) -> Vec<ComplexMatrix> {
    let mut r = rng(seed);
    (0..scn.cells()).map(|_| random_psd(scn.signature_len(), 2 * scn.signature_len(), &mut r)).collect()
}

pub fn random_interior(len: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..len).map(|_| r.random_range(0.05..0.95)).collect()
}

pub fn to_nalgebra(m: &ComplexMatrix) -> nalgebra::DMatrix<Complex64> {
    nalgebra::DMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}
