//! Small dense complex linear algebra for one and two polarization qubits.
//!
//! Two-qubit operators use the fixed basis order `{HH, HV, VH, VV}`: index
//! `2 * a + b` where `a` is the polarization of the photon in mode a and `b`
//! the polarization of the photon in mode b (`H = 0`, `V = 1`).

use nalgebra::{SMatrix, SymmetricEigen};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Mat2 = SMatrix<C64, 2, 2>;
pub type Mat4 = SMatrix<C64, 4, 4>;

pub const HH: usize = 0;
pub const HV: usize = 1;
pub const VH: usize = 2;
pub const VV: usize = 3;

pub const BASIS_LABELS: [&str; 4] = ["HH", "HV", "VH", "VV"];

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const PSD_TOL: f64 = 1e-9;
/// Eigenvalue magnitudes below this are treated as numerical zero.
const EIG_CLAMP: f64 = 1e-12;
const CONDITION_MIN_PROB: f64 = 1e-12;

pub(crate) fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn identity2() -> Mat2 {
    Mat2::identity()
}

pub fn pauli_x() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0))
}

pub fn pauli_y() -> Mat2 {
    Mat2::new(c(0.0, 0.0), c(0.0, -1.0), c(0.0, 1.0), c(0.0, 0.0))
}

pub fn pauli_z() -> Mat2 {
    Mat2::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-1.0, 0.0))
}

/// Kronecker product `a ⊗ b` with `a` acting on mode a.
pub fn tensor(a: &Mat2, b: &Mat2) -> Mat4 {
    Mat4::from_fn(|row, col| a[(row / 2, col / 2)] * b[(row % 2, col % 2)])
}

/// `σ_y ⊗ σ_y`, the spin-flip operator.
pub fn spin_flip() -> Mat4 {
    let y = pauli_y();
    tensor(&y, &y)
}

fn max_abs<const N: usize>(m: &SMatrix<C64, N, N>) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

/// Eigen-decomposition of a Hermitian 4x4 matrix. Only the lower triangle is read.
pub(crate) fn hermitian_eigen(m: &Mat4) -> Result<SymmetricEigen<C64, nalgebra::U4>> {
    SymmetricEigen::try_new(*m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenNonConvergence("4x4 Hermitian eigensolver".into()))
}

fn hermitian_eigenvalues<const N: usize>(m: &SMatrix<C64, N, N>) -> Result<Vec<f64>> {
    let dynamic = nalgebra::DMatrix::from_iterator(N, N, m.iter().copied());
    SymmetricEigen::try_new(dynamic, f64::EPSILON, 10_000)
        .map(|e| e.eigenvalues.iter().copied().collect())
        .ok_or_else(|| Error::EigenNonConvergence(format!("{N}x{N} Hermitian eigensolver")))
}

/// Principal square root of a Hermitian PSD matrix; small negative eigenvalues are clamped.
pub(crate) fn psd_sqrt(m: &Mat4) -> Result<Mat4> {
    let eig = hermitian_eigen(m)?;
    let vecs = eig.eigenvectors;
    let mut out = Mat4::zeros();
    for k in 0..4 {
        let root = eig.eigenvalues[k].max(0.0).sqrt();
        if root == 0.0 {
            continue;
        }
        let v = vecs.column(k);
        out += v * v.adjoint() * c(root, 0.0);
    }
    Ok(out)
}

/// Magnitudes of the eigenvalues of a 4x4 matrix, sorted in decreasing order.
///
/// Meant for products like `ρ (σ_y⊗σ_y) ρ* (σ_y⊗σ_y)` whose spectrum is real
/// and nonnegative; magnitudes below `1e-12` are reported as exactly zero.
pub fn eig_magnitudes(m: &Mat4) -> Result<[f64; 4]> {
    let schur = nalgebra::linalg::Schur::try_new(*m, f64::EPSILON, 10_000)
        .ok_or_else(|| Error::EigenNonConvergence("complex Schur iteration on 4x4 matrix".into()))?;
    let (_, t) = schur.unpack();
    let mut out = [0.0; 4];
    for (k, slot) in out.iter_mut().enumerate() {
        let mag = t[(k, k)].norm();
        if !mag.is_finite() {
            return Err(Error::EigenNonConvergence(format!(
                "non-finite eigenvalue {}",
                t[(k, k)]
            )));
        }
        *slot = if mag < EIG_CLAMP { 0.0 } else { mag };
    }
    out.sort_by(|a, b| b.total_cmp(a));
    Ok(out)
}

fn check_state<const N: usize>(m: &SMatrix<C64, N, N>) -> Result<()> {
    if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidState("non-finite entry".into()));
    }
    let herm = max_abs(&(m - m.adjoint()));
    if herm > HERMITIAN_TOL {
        return Err(Error::InvalidState(format!("not Hermitian (deviation {herm:e})")));
    }
    let tr = m.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    let min = hermitian_eigenvalues(m)?.into_iter().fold(f64::INFINITY, f64::min);
    if min < -PSD_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:e}")));
    }
    Ok(())
}

/// Two-qubit polarization state in the `{HH, HV, VH, VV}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix4(Mat4);

impl DensityMatrix4 {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(m: Mat4) -> Result<Self> {
        check_state(&m)?;
        Ok(Self(m))
    }

    /// Wraps a matrix that is a valid state by construction.
    pub(crate) fn new_unchecked(m: Mat4) -> Self {
        debug_assert!(check_state(&m).is_ok(), "invalid state: {m}");
        Self(m)
    }

    /// `|ψ⟩⟨ψ|` for a (not necessarily normalized) state vector.
    pub fn from_pure(psi: [C64; 4]) -> Result<Self> {
        let v = nalgebra::Vector4::from(psi);
        let norm = v.norm();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero state vector".into()));
        }
        let v = v.unscale(norm);
        Ok(Self(v * v.adjoint()))
    }

    pub fn maximally_mixed() -> Self {
        Self(Mat4::identity().scale(0.25))
    }

    pub fn matrix(&self) -> &Mat4 {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }

    /// Eigenvalues in increasing order.
    pub fn eigenvalues(&self) -> Result<[f64; 4]> {
        let eig = hermitian_eigen(&self.0)?;
        let mut vals: [f64; 4] = eig.eigenvalues.into();
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }

    /// Largest entrywise deviation from another state.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        max_abs(&(self.0 - other.0))
    }
}

/// Single-photon polarization state in the `{H, V}` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2(Mat2);

impl DensityMatrix2 {
    pub fn new(m: Mat2) -> Result<Self> {
        check_state(&m)?;
        Ok(Self(m))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn entry(&self, row: usize, col: usize) -> C64 {
        self.0[(row, col)]
    }
}

/// State of the mode-b photon heralded by an `H` outcome on mode a.
pub fn condition_on_a_horizontal(rho: &DensityMatrix4) -> Result<DensityMatrix2> {
    // rows/cols HH and HV are exactly the a = H block
    let m = rho.matrix();
    let prob = m[(HH, HH)].re + m[(HV, HV)].re;
    if prob <= CONDITION_MIN_PROB {
        return Err(Error::DegenerateConditioning(prob));
    }
    let block = Mat2::new(m[(HH, HH)], m[(HH, HV)], m[(HV, HH)], m[(HV, HV)]).unscale(prob);
    // re-symmetrize so the unit-trace/Hermitian checks see exact values
    let block = (block + block.adjoint()).scale(0.5);
    Ok(DensityMatrix2(block))
}

/// Root fidelity `Tr √(√ρ σ √ρ)`.
///
/// For a pure `ρ = |ψ⟩⟨ψ|` this is `√⟨ψ|σ|ψ⟩`.
pub fn fidelity(rho: &DensityMatrix4, sigma: &DensityMatrix4) -> Result<f64> {
    let root = psd_sqrt(rho.matrix())?;
    let inner = root * sigma.matrix() * root;
    let inner = (inner + inner.adjoint()).scale(0.5);
    let eig = hermitian_eigen(&inner)?;
    let f: f64 = eig.eigenvalues.iter().map(|l| l.max(0.0).sqrt()).sum();
    Ok(f.clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn phi_plus() -> DensityMatrix4 {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        DensityMatrix4::from_pure([c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(s, 0.0)]).unwrap()
    }

    #[test]
    fn tensor_of_identities_is_identity() {
        assert_eq!(tensor(&identity2(), &identity2()), Mat4::identity());
    }

    #[test]
    fn spin_flip_is_antidiagonal() {
        let yy = spin_flip();
        let anti = [(0, 3, -1.0), (1, 2, 1.0), (2, 1, 1.0), (3, 0, -1.0)];
        for row in 0..4 {
            for col in 0..4 {
                let expected = anti
                    .iter()
                    .find(|(r, c_, _)| *r == row && *c_ == col)
                    .map_or(0.0, |t| t.2);
                assert_eq!(yy[(row, col)], c(expected, 0.0), "entry ({row},{col})");
            }
        }
    }

    #[test]
    fn sigma_z_tensor_identity_is_diagonal() {
        let m = tensor(&pauli_z(), &identity2());
        let expected = Mat4::from_diagonal(&nalgebra::Vector4::new(
            c(1.0, 0.0),
            c(1.0, 0.0),
            c(-1.0, 0.0),
            c(-1.0, 0.0),
        ));
        assert_eq!(m, expected);
    }

    #[test]
    fn eig_magnitudes_of_scalar_matrix() {
        let m = Mat4::identity().scale(1.0 / 16.0);
        let e = eig_magnitudes(&m).unwrap();
        for v in e {
            assert!((v - 1.0 / 16.0).abs() < 1e-15);
        }
    }

    #[test]
    fn eig_magnitudes_of_bell_product() {
        let rho = phi_plus();
        let yy = spin_flip();
        let m = rho.matrix() * yy * rho.matrix().conjugate() * yy;
        let e = eig_magnitudes(&m).unwrap();
        assert!((e[0] - 1.0).abs() < 1e-12);
        assert_eq!(&e[1..], &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn density_checks_reject_bad_input() {
        let mut m = Mat4::identity().scale(0.25);
        m[(0, 1)] = c(0.1, 0.0);
        assert!(matches!(DensityMatrix4::new(m), Err(Error::InvalidState(_))));
        assert!(DensityMatrix4::new(Mat4::identity()).is_err());
        let neg = Mat4::from_diagonal(&nalgebra::Vector4::new(
            c(1.5, 0.0),
            c(-0.5, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
        ));
        assert!(DensityMatrix4::new(neg).is_err());
    }

    #[test]
    fn conditioning_examples() {
        let b = condition_on_a_horizontal(&phi_plus()).unwrap();
        assert!((b.entry(0, 0).re - 1.0).abs() < 1e-15);
        assert!(b.entry(1, 1).norm() < 1e-15);

        let b = condition_on_a_horizontal(&DensityMatrix4::maximally_mixed()).unwrap();
        assert!((b.entry(0, 0).re - 0.5).abs() < 1e-15);
        assert!((b.entry(1, 1).re - 0.5).abs() < 1e-15);
        assert!(b.entry(0, 1).norm() < 1e-15);
    }

    #[test]
    fn conditioning_on_vertical_only_state_fails() {
        let vv = DensityMatrix4::from_pure([c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0)]).unwrap();
        assert!(matches!(
            condition_on_a_horizontal(&vv),
            Err(Error::DegenerateConditioning(_))
        ));
    }

    #[test]
    fn fidelity_examples() {
        let rho = phi_plus();
        assert!((fidelity(&rho, &rho).unwrap() - 1.0).abs() < 1e-7);

        let s = std::f64::consts::FRAC_1_SQRT_2;
        let phi_minus = DensityMatrix4::from_pure([c(s, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(-s, 0.0)]).unwrap();
        assert!(fidelity(&rho, &phi_minus).unwrap() < 1e-7);

        let f = fidelity(&rho, &DensityMatrix4::maximally_mixed()).unwrap();
        assert!((f - 0.5).abs() < 1e-7, "{f}");
    }

    #[test]
    fn fidelity_is_symmetric_on_mixed_states() {
        let a = DensityMatrix4::new(Mat4::from_diagonal(&nalgebra::Vector4::new(
            c(0.4, 0.0),
            c(0.3, 0.0),
            c(0.2, 0.0),
            c(0.1, 0.0),
        )))
        .unwrap();
        let b = DensityMatrix4::maximally_mixed();
        let ab = fidelity(&a, &b).unwrap();
        let ba = fidelity(&b, &a).unwrap();
        assert!((ab - ba).abs() < 1e-12);
        let expected: f64 = [0.4f64, 0.3, 0.2, 0.1].iter().map(|p| (p * 0.25).sqrt()).sum();
        assert!((ab - expected).abs() < 1e-12);
    }
}
