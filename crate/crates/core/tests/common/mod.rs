#![allow(dead_code)]

use nalgebra::Matrix4;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use revival::channels::KappaParam;
use revival::qcore::{DensityMatrix4, Mat4};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn gaussian_c(rng: &mut ChaCha8Rng) -> Complex64 {
    Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

/// Hilbert-Schmidt random mixed state `G G† / Tr` with Ginibre `G`.
pub fn random_state(rng: &mut ChaCha8Rng) -> DensityMatrix4 {
    let g: Mat4 = Matrix4::from_fn(|_, _| gaussian_c(rng));
    let m = g * g.adjoint();
    let m = m.unscale(m.trace().re);
    DensityMatrix4::new((m + m.adjoint()).scale(0.5)).expect("Ginibre state is physical")
}

/// Haar-ish random pure state from a normalized Gaussian vector.
pub fn random_pure(rng: &mut ChaCha8Rng) -> DensityMatrix4 {
    DensityMatrix4::from_pure(std::array::from_fn(|_| gaussian_c(rng))).unwrap()
}

/// Uniform point in the closed unit disk.
pub fn random_kappa(rng: &mut ChaCha8Rng) -> KappaParam {
    let r: f64 = rng.random::<f64>().sqrt();
    let phi = rng.random::<f64>() * std::f64::consts::TAU;
    KappaParam::new(Complex64::from_polar(r, phi)).unwrap()
}

pub fn min_eigenvalue(rho: &DensityMatrix4) -> f64 {
    rho.eigenvalues().unwrap()[0]
}
