//! Seeded generators of random stable VAR models for experiments and tests.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::var::VarModel;

/// Random k-channel VAR(m) whose companion spectral radius equals `radius`
/// (for `m ≥ 1`), with a random full-rank noise covariance.
pub fn random_stable_model<R: Rng + ?Sized>(rng: &mut R, k: usize, m: usize, radius: f64) -> VarModel {
    assert!(k >= 1 && radius > 0.0 && radius < 1.0);
    let mut coeffs: Vec<DMatrix<f64>> = (0..m)
        .map(|_| DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..1.0)))
        .collect();
    let noise_cov = random_noise_cov(rng, k);
    let draft = VarModel::from_parts(coeffs.clone(), noise_cov.clone()).expect("valid draft");
    let rho = draft.spectral_radius();
    if rho > 0.0 {
        // Scaling A_j by c^j scales every companion eigenvalue by c.
        let c = radius / rho;
        for (j, a) in coeffs.iter_mut().enumerate() {
            *a *= c.powi(j as i32 + 1);
        }
    }
    VarModel::from_parts(coeffs, noise_cov).expect("valid model")
}

/// Random symmetric positive-definite matrix with moderate conditioning.
pub fn random_noise_cov<R: Rng + ?Sized>(rng: &mut R, k: usize) -> DMatrix<f64> {
    let l = DMatrix::from_fn(k, k, |_, _| {
        let z: f64 = StandardNormal.sample(rng);
        z / (k as f64).sqrt()
    });
    let scales = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(k, |_, _| rng.random_range(0.5..2.0)));
    let core = &l * l.transpose() + DMatrix::identity(k, k) * 0.2;
    let v = &scales * core * &scales;
    (&v + v.transpose()) * 0.5
}
