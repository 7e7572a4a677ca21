//! Input states and the single-photon phase-damping channel.

use crate::error::{Error, Result};
use crate::qcore::{c, identity2, tensor, DensityMatrix4, Mat2, Mat4, C64, HH, HV, VH, VV};

const KAPPA_TOL: f64 = 1e-12;

/// Coherence factor of a dephasing channel, `|κ| ≤ 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KappaParam(C64);

impl KappaParam {
    pub fn new(value: C64) -> Result<Self> {
        let norm = value.norm();
        if !norm.is_finite() || norm > 1.0 + KAPPA_TOL {
            return Err(Error::NonPhysicalChannel(norm));
        }
        Ok(Self(value))
    }

    pub fn real(value: f64) -> Result<Self> {
        Self::new(C64::new(value, 0.0))
    }

    pub fn value(self) -> C64 {
        self.0
    }
}

impl TryFrom<f64> for KappaParam {
    type Error = Error;

    fn try_from(value: f64) -> Result<Self> {
        Self::real(value)
    }
}

impl TryFrom<C64> for KappaParam {
    type Error = Error;

    fn try_from(value: C64) -> Result<Self> {
        Self::new(value)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    A,
    B,
}

impl Mode {
    /// Polarization bit of this mode inside a two-qubit basis index.
    fn bit(self, index: usize) -> usize {
        match self {
            Mode::A => index >> 1,
            Mode::B => index & 1,
        }
    }
}

/// `|φ⟩ = (|HH⟩ + |VV⟩)/√2`.
pub fn bell_phi_plus() -> DensityMatrix4 {
    let mut m = Mat4::zeros();
    for &(r, col) in &[(HH, HH), (HH, VV), (VV, HH), (VV, VV)] {
        m[(r, col)] = c(0.5, 0.0);
    }
    DensityMatrix4::new_unchecked(m)
}

/// Jones matrix of a half-wave plate with its optic axis at `angle_deg` from horizontal.
pub fn half_wave_plate(angle_deg: f64) -> Mat2 {
    let (s, co) = (2.0 * angle_deg.to_radians()).sin_cos();
    Mat2::new(c(co, 0.0), c(s, 0.0), c(s, 0.0), c(-co, 0.0))
}

/// `(U ⊗ I) ρ (U ⊗ I)†` for a unitary acting on the mode-a photon.
pub(crate) fn apply_on_a(rho: &DensityMatrix4, u: &Mat2) -> DensityMatrix4 {
    let full = tensor(u, &identity2());
    let out = full * rho.matrix() * full.adjoint();
    DensityMatrix4::new_unchecked((out + out.adjoint()).scale(0.5))
}

/// `(σ_x ⊗ I) ρ (σ_x ⊗ I)`.
pub fn pauli_x_on_a(rho: &DensityMatrix4) -> DensityMatrix4 {
    // σ_x permutes H and V on mode a: HH <-> VH, HV <-> VV
    const PERM: [usize; 4] = [VH, VV, HH, HV];
    let m = rho.matrix();
    DensityMatrix4::new_unchecked(Mat4::from_fn(|r, col| m[(PERM[r], PERM[col])]))
}

/// Phase damping of one photon.
///
/// An entry whose selected-mode polarization is `V` in the row and `H` in the
/// column is multiplied by `κ`; the transposed orientation gets `κ*`.
pub fn dephase(rho: &DensityMatrix4, kappa: KappaParam, mode: Mode) -> DensityMatrix4 {
    let k = kappa.value();
    let m = rho.matrix();
    let out = Mat4::from_fn(|r, col| match (mode.bit(r), mode.bit(col)) {
        (1, 0) => m[(r, col)] * k,
        (0, 1) => m[(r, col)] * k.conj(),
        _ => m[(r, col)],
    });
    DensityMatrix4::new_unchecked(out)
}

/// Maximally entangled input after dephasing of the mode-b photon:
/// `½(|HH⟩⟨HH| + |VV⟩⟨VV| + κ_b*|HH⟩⟨VV| + κ_b|VV⟩⟨HH|)`.
pub fn state_maximal(kappa_b: KappaParam) -> DensityMatrix4 {
    let k = kappa_b.value();
    let mut m = Mat4::zeros();
    m[(HH, HH)] = c(0.5, 0.0);
    m[(VV, VV)] = c(0.5, 0.0);
    m[(HH, VV)] = k.conj() * 0.5;
    m[(VV, HH)] = k * 0.5;
    DensityMatrix4::new_unchecked(m)
}

/// Partially entangled family: mode a rotated by a half-wave plate at 22.5°
/// and dephased with `κ_a`, then mode b dephased with `κ_b`.
pub fn state_partial(kappa_a: KappaParam, kappa_b: KappaParam) -> DensityMatrix4 {
    let (a, b) = (kappa_a.value(), kappa_b.value());
    let one = c(1.0, 0.0);
    let (ac, bc) = (a.conj(), b.conj());
    #[rustfmt::skip]
    let m = Mat4::new(
        one,      bc,       ac,       -ac * bc,
        b,        one,      ac * b,   -ac,
        a,        a * bc,   one,      -bc,
        -a * b,   -a,       -b,       one,
    )
    .scale(0.25);
    DensityMatrix4::new_unchecked(m)
}

/// The preparation and channel sequence behind [`state_partial`].
pub fn state_partial_pipeline(kappa_a: KappaParam, kappa_b: KappaParam) -> DensityMatrix4 {
    let rotated = apply_on_a(&bell_phi_plus(), &half_wave_plate(22.5));
    dephase(&dephase(&rotated, kappa_a, Mode::A), kappa_b, Mode::B)
}
