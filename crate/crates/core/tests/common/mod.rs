#![allow(dead_code)]

use qzone::QuboModel;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Random model with roughly half of all pairs coupled, coefficients in [-5, 5].
pub fn random_model(n: usize, seed: u64) -> QuboModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let linear: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    let mut quadratic = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.5) {
                quadratic.push((i, j, rng.gen_range(-5.0..5.0)));
            }
        }
    }
    QuboModel::new(linear, &quadratic, rng.gen_range(-3.0..3.0)).unwrap()
}

/// Every assignment of `n` bits, lexicographic with bit 0 most significant.
pub fn all_assignments(n: usize) -> impl Iterator<Item = qzone::Assignment> {
    (0u64..1 << n).map(move |mask| qzone::Assignment::from_bits((0..n).map(|i| mask >> (n - 1 - i) & 1 == 1).collect()))
}

/// Dense reference energy `Σ hᵢxᵢ + Σ_{i<j} J_ij xᵢxⱼ + C`.
pub fn reference_energy(m: &QuboModel, x: &qzone::Assignment) -> f64 {
    let n = m.num_vars();
    let mut e = m.constant();
    for i in 0..n {
        if x[i] {
            e += m.linear()[i];
            for j in i + 1..n {
                if x[j] {
                    e += m.coupling(i, j);
                }
            }
        }
    }
    e
}

pub fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * (1.0 + a.abs().max(b.abs()))
}
