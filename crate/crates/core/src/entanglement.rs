//! Wootters concurrence, heralded degree of polarization and detection of
//! entanglement sudden death / revival along an evolution parameter.

use rayon::prelude::*;

use crate::error::Result;
use crate::qcore::{condition_on_a_horizontal, eig_magnitudes, spin_flip, DensityMatrix2, DensityMatrix4};

/// Bisection stops once the bracket is narrower than this.
const CROSSING_RESOLUTION: f64 = 1e-4;

/// Eigenvalues `χ₁ ≥ χ₂ ≥ χ₃ ≥ χ₄ ≥ 0` of `ρ (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSpectrum([f64; 4]);

impl ChiSpectrum {
    pub fn of(rho: &DensityMatrix4) -> Result<Self> {
        let yy = spin_flip();
        let m = rho.matrix();
        let product = m * yy * m.conjugate() * yy;
        eig_magnitudes(&product).map(Self)
    }

    pub fn values(&self) -> [f64; 4] {
        self.0
    }

    /// `√χ₁ − √χ₂ − √χ₃ − √χ₄`.
    pub fn gamma(&self) -> f64 {
        let [a, b, c, d] = self.0.map(f64::sqrt);
        a - b - c - d
    }
}

pub fn gamma(rho: &DensityMatrix4) -> Result<f64> {
    Ok(ChiSpectrum::of(rho)?.gamma())
}

pub fn concurrence(rho: &DensityMatrix4) -> Result<f64> {
    Ok(gamma(rho)?.max(0.0))
}

/// `max{0, ½(κ_a + κ_a κ_b + κ_b − 1)}` for real coherences of the partial family.
pub fn concurrence_partial_closed(kappa_a: f64, kappa_b: f64) -> f64 {
    (0.5 * (kappa_a + kappa_a * kappa_b + kappa_b - 1.0)).max(0.0)
}

/// Concurrence of the partial family vanishes at `κ_b = (1 − κ_a)/(1 + κ_a)`.
pub fn esd_threshold(kappa_a: f64) -> f64 {
    (1.0 - kappa_a) / (1.0 + kappa_a)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StokesVector {
    pub s1: f64,
    pub s2: f64,
    pub s3: f64,
}

impl StokesVector {
    pub fn of(rho: &DensityMatrix2) -> Self {
        let hh = rho.entry(0, 0).re;
        let hv = rho.entry(0, 1);
        let vh = rho.entry(1, 0);
        Self {
            s1: 2.0 * hh - 1.0,
            s2: (hv + vh).re,
            // i(⟨H|ρ|V⟩ − ⟨V|ρ|H⟩) is real for Hermitian ρ
            s3: -(hv - vh).im,
        }
    }

    pub fn norm(&self) -> f64 {
        (self.s1 * self.s1 + self.s2 * self.s2 + self.s3 * self.s3).sqrt()
    }
}

/// Degree of polarization of photon b heralded by an `H` detection of photon a.
pub fn degree_of_polarization(rho: &DensityMatrix4) -> Result<f64> {
    let rho_b = condition_on_a_horizontal(rho)?;
    Ok(StokesVector::of(&rho_b).norm().min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CrossingDirection {
    /// Γ goes from positive to non-positive.
    Death,
    Revival,
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Crossing {
    pub x: f64,
    pub direction: CrossingDirection,
}

#[derive(Debug, Clone, Default, PartialEq, serde::Serialize)]
pub struct CrossingReport {
    pub crossings: Vec<Crossing>,
}

impl CrossingReport {
    pub fn is_empty(&self) -> bool {
        self.crossings.is_empty()
    }

    pub fn deaths(&self) -> impl Iterator<Item = f64> + '_ {
        self.of(CrossingDirection::Death)
    }

    pub fn revivals(&self) -> impl Iterator<Item = f64> + '_ {
        self.of(CrossingDirection::Revival)
    }

    fn of(&self, dir: CrossingDirection) -> impl Iterator<Item = f64> + '_ {
        self.crossings.iter().filter(move |c| c.direction == dir).map(|c| c.x)
    }
}

/// Uniform grid from `x_min` to `x_max`; the end point is always included.
pub fn grid(x_min: f64, x_max: f64, step: f64) -> Vec<f64> {
    let span = x_max - x_min;
    if span <= 0.0 {
        return vec![x_min];
    }
    let n = (span / step + 1e-9).floor() as usize;
    let mut xs: Vec<f64> = (0..=n).map(|i| x_min + i as f64 * step).collect();
    if x_max - xs[n] > 1e-9 * step {
        xs.push(x_max);
    }
    xs
}

/// Scans `curve` (Γ as a function of the evolution parameter) for sign changes
/// and refines each by bisection.
pub fn find_crossings<F>(curve: F, x_min: f64, x_max: f64, step: f64) -> Result<CrossingReport>
where
    F: Fn(f64) -> Result<f64> + Sync,
{
    let xs = grid(x_min, x_max, step);
    let values = xs.par_iter().map(|&x| curve(x)).collect::<Result<Vec<f64>>>()?;
    let alive = |g: f64| g > 0.0;

    let mut crossings = Vec::new();
    for i in 1..xs.len() {
        let (was, is) = (alive(values[i - 1]), alive(values[i]));
        if was == is {
            continue;
        }
        let (mut lo, mut hi) = (xs[i - 1], xs[i]);
        while hi - lo >= CROSSING_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            if alive(curve(mid)?) == was {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        crossings.push(Crossing {
            x: 0.5 * (lo + hi),
            direction: if was {
                CrossingDirection::Death
            } else {
                CrossingDirection::Revival
            },
        });
    }
    Ok(CrossingReport { crossings })
}
