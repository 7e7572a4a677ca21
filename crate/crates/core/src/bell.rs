//! CHSH correlations for linear polarization analyzers.

use nalgebra::{Matrix2, Matrix3, SymmetricEigen};

use crate::qcore::{c, pauli_x, pauli_y, pauli_z, tensor, DensityMatrix4, Mat2};

/// Grid pitch of the coarse CHSH search, degrees.
const GRID_PITCH_DEG: f64 = 3.75;
const GRID_POINTS: usize = 48; // one 180° period
const REFINE_TOL: f64 = 1e-12;
const MAX_SWEEPS: usize = 100_000;

/// Analyzer angles in degrees; each is meaningful modulo 180°.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct AngleSet {
    pub theta1: f64,
    pub theta1_prime: f64,
    pub theta2: f64,
    pub theta2_prime: f64,
}

impl AngleSet {
    pub fn new(theta1: f64, theta1_prime: f64, theta2: f64, theta2_prime: f64) -> Self {
        Self {
            theta1,
            theta1_prime,
            theta2,
            theta2_prime,
        }
    }

    /// Settings used to test the maximally revived state in the experiment.
    pub fn experimental() -> Self {
        Self::new(-86.25, 60.75, -85.5, 76.5)
    }

    pub fn is_finite(&self) -> bool {
        [self.theta1, self.theta1_prime, self.theta2, self.theta2_prime]
            .iter()
            .all(|a| a.is_finite())
    }

    fn wrapped(self) -> Self {
        let w = |a: f64| {
            let r = a.rem_euclid(180.0);
            if r > 90.0 {
                r - 180.0
            } else {
                r
            }
        };
        Self::new(
            w(self.theta1),
            w(self.theta1_prime),
            w(self.theta2),
            w(self.theta2_prime),
        )
    }
}

/// `A(θ) = |θ⟩⟨θ| − |θ⊥⟩⟨θ⊥| = cos2θ σ_z + sin2θ σ_x`.
pub fn analyzer_observable(theta_deg: f64) -> Mat2 {
    let (s, co) = (2.0 * theta_deg.to_radians()).sin_cos();
    pauli_z() * c(co, 0.0) + pauli_x() * c(s, 0.0)
}

/// `E(θ₁, θ₂) = Tr[ρ A(θ₁) ⊗ A(θ₂)]`.
pub fn correlation(rho: &DensityMatrix4, theta1_deg: f64, theta2_deg: f64) -> f64 {
    let op = tensor(&analyzer_observable(theta1_deg), &analyzer_observable(theta2_deg));
    (rho.matrix() * op).trace().re.clamp(-1.0, 1.0)
}

pub fn chsh_s(rho: &DensityMatrix4, a: &AngleSet) -> f64 {
    correlation(rho, a.theta1, a.theta2)
        + correlation(rho, a.theta1, a.theta2_prime)
        + correlation(rho, a.theta1_prime, a.theta2)
        - correlation(rho, a.theta1_prime, a.theta2_prime)
}

/// `T_ij = Tr[ρ σ_i ⊗ σ_j]` for `i, j ∈ {x, y, z}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationMatrix(pub Matrix3<f64>);

impl CorrelationMatrix {
    pub fn of(rho: &DensityMatrix4) -> Self {
        let p = [pauli_x(), pauli_y(), pauli_z()];
        Self(Matrix3::from_fn(|i, j| {
            (rho.matrix() * tensor(&p[i], &p[j])).trace().re
        }))
    }

    /// Restriction to the σ_z/σ_x plane reachable with linear polarizers,
    /// ordered `(z, x)` so that `E = a(θ₁)ᵀ M a(θ₂)` with `a(θ) = (cos2θ, sin2θ)`.
    fn linear_block(&self) -> Matrix2<f64> {
        let t = &self.0;
        Matrix2::new(t[(2, 2)], t[(2, 0)], t[(0, 2)], t[(0, 0)])
    }
}

fn unit(theta_deg: f64) -> [f64; 2] {
    let (s, co) = (2.0 * theta_deg.to_radians()).sin_cos();
    [co, s]
}

fn bilinear(m: &Matrix2<f64>, a: [f64; 2], b: [f64; 2]) -> f64 {
    a[0] * (m[(0, 0)] * b[0] + m[(0, 1)] * b[1]) + a[1] * (m[(1, 0)] * b[0] + m[(1, 1)] * b[1])
}

fn s_from_block(m: &Matrix2<f64>, a: &AngleSet) -> f64 {
    let (a1, a1p, b2, b2p) = (
        unit(a.theta1),
        unit(a.theta1_prime),
        unit(a.theta2),
        unit(a.theta2_prime),
    );
    bilinear(m, a1, b2) + bilinear(m, a1, b2p) + bilinear(m, a1p, b2) - bilinear(m, a1p, b2p)
}

/// Angle whose doubled direction is aligned with `v`, degrees.
fn aligned(v: [f64; 2], current: f64) -> f64 {
    if v[0] == 0.0 && v[1] == 0.0 {
        return current;
    }
    0.5 * v[1].atan2(v[0]).to_degrees()
}

/// Largest CHSH value over linear-polarizer settings.
///
/// A 3.75° grid over one period of all four angles picks the start (ties go to
/// the lexicographically smallest angle tuple), followed by coordinate ascent
/// where each angle is set to its exact one-dimensional optimum.
pub fn optimize_chsh_linear(rho: &DensityMatrix4) -> (AngleSet, f64) {
    let m = CorrelationMatrix::of(rho).linear_block();
    let angles: [f64; GRID_POINTS] = std::array::from_fn(|i| i as f64 * GRID_PITCH_DEG);
    let e: Vec<[f64; GRID_POINTS]> = angles
        .iter()
        .map(|&t1| std::array::from_fn(|j| bilinear(&m, unit(t1), unit(angles[j]))))
        .collect();

    let mut best = (f64::NEG_INFINITY, [0usize; 4]);
    for (i, ei) in e.iter().enumerate() {
        for (ip, eip) in e.iter().enumerate() {
            for j in 0..GRID_POINTS {
                let partial = ei[j] + eip[j];
                for (jp, (x, y)) in ei.iter().zip(eip).enumerate() {
                    let s = partial + x - y;
                    if s > best.0 {
                        best = (s, [i, ip, j, jp]);
                    }
                }
            }
        }
    }
    let [i, ip, j, jp] = best.1;
    let mut a = AngleSet::new(angles[i], angles[ip], angles[j], angles[jp]);
    let mut s = s_from_block(&m, &a);

    let mt = m.transpose();
    for _ in 0..MAX_SWEEPS {
        let before = s;
        let mv = |mat: &Matrix2<f64>, x: [f64; 2], y: [f64; 2], sign: f64| {
            let v = [x[0] + sign * y[0], x[1] + sign * y[1]];
            [
                mat[(0, 0)] * v[0] + mat[(0, 1)] * v[1],
                mat[(1, 0)] * v[0] + mat[(1, 1)] * v[1],
            ]
        };
        a.theta1 = aligned(mv(&m, unit(a.theta2), unit(a.theta2_prime), 1.0), a.theta1);
        a.theta1_prime = aligned(mv(&m, unit(a.theta2), unit(a.theta2_prime), -1.0), a.theta1_prime);
        a.theta2 = aligned(mv(&mt, unit(a.theta1), unit(a.theta1_prime), 1.0), a.theta2);
        let minus = mv(&mt, unit(a.theta1), unit(a.theta1_prime), -1.0);
        a.theta2_prime = aligned(minus, a.theta2_prime);
        s = s_from_block(&m, &a);
        if (s - before).abs() < REFINE_TOL {
            break;
        }
    }
    let a = a.wrapped();
    (a, chsh_s(rho, &a))
}

/// Maximal CHSH value over all qubit observables, `2√(t₁ + t₂)` with `t₁ ≥ t₂`
/// the two largest eigenvalues of `TᵀT`.
pub fn horodecki_smax(rho: &DensityMatrix4) -> f64 {
    let t = CorrelationMatrix::of(rho).0;
    let mut eig: Vec<f64> = SymmetricEigen::new(t.transpose() * t)
        .eigenvalues
        .iter()
        .copied()
        .collect();
    eig.sort_by(|a, b| b.total_cmp(a));
    2.0 * (eig[0].max(0.0) + eig[1].max(0.0)).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bell_phi_plus, state_maximal, KappaParam};
    use crate::qcore::C64;
    use std::f64::consts::SQRT_2;

    #[test]
    fn correlation_examples() {
        let bell = bell_phi_plus();
        assert!((correlation(&bell, 0.0, 0.0) - 1.0).abs() < 1e-12);
        assert!(correlation(&bell, 0.0, 45.0).abs() < 1e-12);
        let kappa = 0.37;
        let rho = state_maximal(KappaParam::real(kappa).unwrap());
        for &(t1, t2) in &[(10.0, 20.0), (-33.0, 71.5), (60.75, -85.5)] {
            let (r1, r2) = (2.0 * f64::to_radians(t1), 2.0 * f64::to_radians(t2));
            let expected = r1.cos() * r2.cos() + kappa * r1.sin() * r2.sin();
            assert!((correlation(&rho, t1, t2) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn tsirelson_configuration() {
        let bell = bell_phi_plus();
        // the minus sign sits on E(θ₁′, θ₂′), so the optimal settings are θ₂′ = −22.5°
        let s = chsh_s(&bell, &AngleSet::new(0.0, 45.0, 22.5, -22.5));
        assert!((s - 2.0 * SQRT_2).abs() < 1e-12, "{s}");
        // the textbook tuple 0/45/22.5/67.5 saturates the bound with the sign on E(θ₁, θ₂′)
        let textbook = correlation(&bell, 0.0, 22.5) - correlation(&bell, 0.0, 67.5)
            + correlation(&bell, 45.0, 22.5)
            + correlation(&bell, 45.0, 67.5);
        assert!((textbook - 2.0 * SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn product_state_respects_classical_bound() {
        let hh = DensityMatrix4::from_pure([c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]).unwrap();
        for k in 0..50 {
            let t = k as f64 * 7.3;
            let a = AngleSet::new(t, 2.0 * t + 1.0, -t, 0.5 * t);
            assert!(chsh_s(&hh, &a).abs() <= 2.0 + 1e-12);
        }
        assert!((horodecki_smax(&hh) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn optimizer_examples() {
        let (_, s) = optimize_chsh_linear(&bell_phi_plus());
        assert!((s - 2.0 * SQRT_2).abs() < 1e-4);
        let (_, s) = optimize_chsh_linear(&state_maximal(KappaParam::real(0.354).unwrap()));
        assert!((s - 2.0 * (1.0f64 + 0.354 * 0.354).sqrt()).abs() < 1e-3);
        let (a, s) = optimize_chsh_linear(&DensityMatrix4::maximally_mixed());
        assert!(s.abs() < 1e-6);
        assert!(a.is_finite());
    }

    #[test]
    fn horodecki_examples() {
        assert!((horodecki_smax(&bell_phi_plus()) - 2.0 * SQRT_2).abs() < 1e-12);
        let k = C64::new(0.2, -0.45);
        let expected = 2.0 * (1.0 + k.norm_sqr()).sqrt();
        assert!((horodecki_smax(&state_maximal(KappaParam::new(k).unwrap())) - expected).abs() < 1e-12);
    }

    #[test]
    fn angles_are_periodic() {
        let rho = state_maximal(KappaParam::new(C64::new(0.3, 0.3)).unwrap());
        let a = AngleSet::experimental();
        let s = chsh_s(&rho, &a);
        let shifted = AngleSet::new(
            a.theta1 + 180.0,
            a.theta1_prime - 180.0,
            a.theta2 + 360.0,
            a.theta2_prime + 180.0,
        );
        assert!((chsh_s(&rho, &shifted) - s).abs() < 1e-12);
    }
}
