//! Shared instance builders for the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use sjls_core::gaussian_mixture::{Gaussian, GaussianMixture};
use sjls_core::jump_process::{JumpProcess, OccupationVector};
use sjls_core::numerics::{Matrix, SymmetricPsd};
use sjls_core::propagation::Sjls;

/// Random m-mode, n-dimensional system with an i.i.d. jump law.
pub fn random_instance(seed: u64, m: usize, n: usize) -> (Sjls, GaussianMixture) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let modes: Vec<Matrix> = (0..m)
        .map(|_| Matrix::from_fn(n, n, |_, _| rng.random_range(-0.6..0.6)))
        .collect();
    let raw: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let jump = JumpProcess::iid(
        OccupationVector::new(raw.iter().map(|v| v / total).collect()).unwrap(),
    );
    let l = Matrix::from_fn(n, n, |_, _| rng.random_range(-0.5..0.5));
    let rho0 = GaussianMixture::single(
        Gaussian::new(
            nalgebra_vec(&mut rng, n),
            SymmetricPsd::new(&l * l.transpose() + Matrix::identity(n, n) * 0.01).unwrap(),
        )
        .unwrap(),
    );
    (Sjls::new(modes, jump).unwrap(), rho0)
}

fn nalgebra_vec(rng: &mut ChaCha8Rng, n: usize) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0))
}
