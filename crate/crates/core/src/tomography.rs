//! Simulated two-photon polarization tomography.
//!
//! Each photon is projected onto one of `{H, V, D, R}`, giving 16 coincidence
//! settings enumerated row-major (`id = 4 * a + b`). Counts are reconstructed
//! by linear inversion and by a Poisson maximum-likelihood fit over the
//! physical parameterization `ρ = G†G / Tr(G†G)` with `G` lower triangular.
//!
//! Counts are drawn with `ChaCha8Rng::seed_from_u64(seed)`, one Poisson sample
//! per setting in id order, using `rand_distr::Poisson`.

use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use nalgebra::{SMatrix, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::qcore::{c, hermitian_eigen, identity2, pauli_x, pauli_y, pauli_z, tensor, DensityMatrix4, Mat2, Mat4, C64};

pub const N_SETTINGS: usize = 16;
const N_PARAMS: usize = 16;
const MAX_EVALUATIONS: usize = 100_000;
const LBFGS_HISTORY: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Analyzer {
    H,
    V,
    D,
    R,
}

impl Analyzer {
    pub const ALL: [Analyzer; 4] = [Analyzer::H, Analyzer::V, Analyzer::D, Analyzer::R];

    pub fn ket(self) -> [C64; 2] {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        match self {
            Analyzer::H => [c(1.0, 0.0), c(0.0, 0.0)],
            Analyzer::V => [c(0.0, 0.0), c(1.0, 0.0)],
            Analyzer::D => [c(s, 0.0), c(s, 0.0)],
            Analyzer::R => [c(s, 0.0), c(0.0, s)],
        }
    }

    pub fn projector(self) -> Mat2 {
        let [h, v] = self.ket();
        Mat2::new(h * h.conj(), h * v.conj(), v * h.conj(), v * v.conj())
    }

    pub fn label(self) -> &'static str {
        match self {
            Analyzer::H => "H",
            Analyzer::V => "V",
            Analyzer::D => "D",
            Analyzer::R => "R",
        }
    }
}

impl fmt::Display for Analyzer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Analyzer {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "H" => Ok(Analyzer::H),
            "V" => Ok(Analyzer::V),
            "D" => Ok(Analyzer::D),
            "R" => Ok(Analyzer::R),
            other => Err(Error::Protocol(format!("unknown analyzer `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MeasurementSetting {
    pub id: usize,
    pub analyzer_a: Analyzer,
    pub analyzer_b: Analyzer,
}

impl MeasurementSetting {
    pub fn projector(&self) -> Mat4 {
        tensor(&self.analyzer_a.projector(), &self.analyzer_b.projector())
    }

    /// `⟨proj⟩_ρ`, clamped at zero.
    pub fn probability(&self, rho: &Mat4) -> f64 {
        (self.projector() * rho).trace().re.max(0.0)
    }
}

pub fn settings_16() -> Vec<MeasurementSetting> {
    Analyzer::ALL
        .iter()
        .flat_map(|&a| Analyzer::ALL.iter().map(move |&b| (a, b)))
        .enumerate()
        .map(|(id, (analyzer_a, analyzer_b))| MeasurementSetting {
            id,
            analyzer_a,
            analyzer_b,
        })
        .collect()
}

fn projectors() -> &'static [Mat4; N_SETTINGS] {
    static CELL: OnceLock<[Mat4; N_SETTINGS]> = OnceLock::new();
    CELL.get_or_init(|| {
        let s = settings_16();
        std::array::from_fn(|i| s[i].projector())
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CountRecord {
    pub setting_id: usize,
    pub count: u64,
}

/// Expected counts `n_per_setting · ⟨proj⟩`, rounded (noiseless) or Poisson distributed.
pub fn simulate_counts(
    rho: &DensityMatrix4,
    n_per_setting: u64,
    seed: u64,
    noiseless: bool,
) -> Result<Vec<CountRecord>> {
    if n_per_setting == 0 {
        return Err(Error::Config("n_per_setting must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    settings_16()
        .iter()
        .map(|s| {
            let mean = n_per_setting as f64 * s.probability(rho.matrix());
            let count = if noiseless {
                mean.round() as u64
            } else if mean > 0.0 {
                let dist = Poisson::new(mean).map_err(|e| Error::Config(format!("Poisson mean {mean}: {e}")))?;
                dist.sample(&mut rng) as u64
            } else {
                0
            };
            Ok(CountRecord {
                setting_id: s.id,
                count,
            })
        })
        .collect()
}

/// Counts ordered by setting id; every setting must appear exactly once.
fn ordered_counts(counts: &[CountRecord]) -> Result<[f64; N_SETTINGS]> {
    let mut out = [None; N_SETTINGS];
    for rec in counts {
        let slot = out
            .get_mut(rec.setting_id)
            .ok_or_else(|| Error::Protocol(format!("setting id {} out of range 0..16", rec.setting_id)))?;
        if slot.is_some() {
            return Err(Error::Protocol(format!(
                "setting {} appears more than once",
                rec.setting_id
            )));
        }
        *slot = Some(rec.count as f64);
    }
    let missing: Vec<usize> = (0..N_SETTINGS).filter(|&i| out[i].is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::Protocol(format!("missing settings {missing:?}")));
    }
    let counts = out.map(|c| c.unwrap_or(0.0));
    if counts.iter().sum::<f64>() <= 0.0 {
        return Err(Error::Protocol("total count is zero".into()));
    }
    Ok(counts)
}

/// Two-qubit Pauli products `σ_i ⊗ σ_j`, index `4 i + j` with `σ_0 = I`.
fn pauli_basis() -> [Mat4; 16] {
    let singles = [identity2(), pauli_x(), pauli_y(), pauli_z()];
    std::array::from_fn(|k| tensor(&singles[k / 4], &singles[k % 4]))
}

struct LinearInversion {
    basis: [Mat4; 16],
    lu: nalgebra::LU<f64, nalgebra::Const<16>, nalgebra::Const<16>>,
}

fn linear_inversion() -> &'static LinearInversion {
    static CELL: OnceLock<LinearInversion> = OnceLock::new();
    CELL.get_or_init(|| {
        let basis = pauli_basis();
        let proj = projectors();
        let a = SMatrix::<f64, 16, 16>::from_fn(|s, k| 0.25 * (proj[s] * basis[k]).trace().re);
        LinearInversion { basis, lu: a.lu() }
    })
}

/// Unit-trace Hermitian matrix reproducing the measured frequencies exactly.
/// The result need not be positive semidefinite.
pub fn linear_reconstruct(counts: &[CountRecord]) -> Result<Mat4> {
    let measured = ordered_counts(counts)?;
    let inv = linear_inversion();
    let rhs = SVector::<f64, 16>::from(measured);
    let coeffs = inv
        .lu
        .solve(&rhs)
        .ok_or_else(|| Error::Protocol("measurement settings are not informationally complete".into()))?;
    let trace = coeffs[0];
    if !(trace > 0.0) {
        return Err(Error::Protocol(format!(
            "linear estimate has non-positive trace {trace}"
        )));
    }
    let m = inv
        .basis
        .iter()
        .zip(coeffs.iter())
        .fold(Mat4::zeros(), |acc, (b, &r)| acc + b * c(0.25 * r / trace, 0.0));
    Ok((m + m.adjoint()).scale(0.5))
}

/// Clamps negative eigenvalues to zero and renormalizes.
pub fn project_psd(m: &Mat4) -> Result<DensityMatrix4> {
    let herm = (m + m.adjoint()).scale(0.5);
    let eig = hermitian_eigen(&herm)?;
    let mut out = Mat4::zeros();
    let mut total = 0.0;
    for k in 0..4 {
        let lambda = eig.eigenvalues[k].max(0.0);
        if lambda == 0.0 {
            continue;
        }
        total += lambda;
        let v = eig.eigenvectors.column(k);
        out += v * v.adjoint() * c(lambda, 0.0);
    }
    if !(total > 0.0) {
        return Err(Error::Protocol("estimate has no positive eigenvalue".into()));
    }
    let out = out.unscale(total);
    DensityMatrix4::new((out + out.adjoint()).scale(0.5))
}

/// Poisson negative log-likelihood `Σ_s (μ_s − c_s ln μ_s)` with `μ_s = η ⟨proj_s⟩`
/// and the exposure `η` set to its maximum-likelihood value `Σ c / Σ ⟨proj⟩`.
pub fn negative_log_likelihood(rho: &Mat4, counts: &[CountRecord]) -> Result<f64> {
    let c = ordered_counts(counts)?;
    let probs = projectors().map(|p| (p * rho).trace().re.max(0.0));
    Ok(profile_nll(&probs, &c))
}

fn profile_nll(probs: &[f64; N_SETTINGS], counts: &[f64; N_SETTINGS]) -> f64 {
    let total_counts: f64 = counts.iter().sum();
    let total_prob: f64 = probs.iter().sum();
    let eta = total_counts / total_prob;
    let mut nll = total_counts;
    for (&p, &cnt) in probs.iter().zip(counts) {
        if cnt > 0.0 {
            nll -= cnt * (eta * p).ln();
        }
    }
    nll
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub state: DensityMatrix4,
    pub nll: f64,
    /// NLL of the PSD-projected linear estimate that seeds the fit.
    pub initial_nll: f64,
    pub evaluations: usize,
}

/// Lower-triangular `G` packed as 4 real diagonal entries followed by the
/// real and imaginary parts of the 6 strictly-lower entries.
fn unpack(x: &[f64; N_PARAMS]) -> Mat4 {
    let mut g = Mat4::zeros();
    for i in 0..4 {
        g[(i, i)] = c(x[i], 0.0);
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            g[(i, j)] = c(x[k], x[k + 1]);
            k += 2;
        }
    }
    g
}

fn pack(g: &Mat4) -> [f64; N_PARAMS] {
    let mut x = [0.0; N_PARAMS];
    for i in 0..4 {
        x[i] = g[(i, i)].re;
    }
    let mut k = 4;
    for i in 1..4 {
        for j in 0..i {
            x[k] = g[(i, j)].re;
            x[k + 1] = g[(i, j)].im;
            k += 2;
        }
    }
    x
}

fn gram(g: &Mat4) -> Mat4 {
    let r = g.adjoint() * g;
    r.unscale(r.trace().re)
}

/// Scale-free likelihood objective per count and its gradient in the packed parameters.
struct Objective<'a> {
    counts: &'a [f64; N_SETTINGS],
    total: f64,
    evaluations: usize,
}

impl Objective<'_> {
    fn value_and_grad(&mut self, x: &[f64; N_PARAMS]) -> (f64, [f64; N_PARAMS]) {
        self.evaluations += 1;
        let g = unpack(x);
        let proj = projectors();
        // q_s = Tr(G P_s G†); the objective is invariant under rescaling of G
        let q: [f64; N_SETTINGS] = std::array::from_fn(|s| (g * proj[s] * g.adjoint()).trace().re);
        let q_total: f64 = q.iter().sum();
        if !(q_total > 0.0) {
            return (f64::INFINITY, [0.0; N_PARAMS]);
        }
        let mut value = q_total.ln();
        let mut weight = Mat4::zeros();
        for s in 0..N_SETTINGS {
            let cs = self.counts[s] / self.total;
            let mut w = 1.0 / q_total;
            if cs > 0.0 {
                if q[s] <= 0.0 {
                    return (f64::INFINITY, [0.0; N_PARAMS]);
                }
                value -= cs * q[s].ln();
                w -= cs / q[s];
            }
            weight += proj[s] * c(w, 0.0);
        }
        // ∂q/∂Re G_ab = 2 Re (G P)_ab, ∂q/∂Im G_ab = 2 Im (G P)_ab
        let gw = g * weight;
        let mut grad = [0.0; N_PARAMS];
        for i in 0..4 {
            grad[i] = 2.0 * gw[(i, i)].re;
        }
        let mut k = 4;
        for i in 1..4 {
            for j in 0..i {
                grad[k] = 2.0 * gw[(i, j)].re;
                grad[k + 1] = 2.0 * gw[(i, j)].im;
                k += 2;
            }
        }
        (value, grad)
    }
}

fn dot(a: &[f64; N_PARAMS], b: &[f64; N_PARAMS]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Lower-triangular `G` with `G†G = ρ`.
fn factor(rho: &Mat4) -> Option<Mat4> {
    // reverse the basis so the ordinary Cholesky factor becomes upper triangular
    let rev = Mat4::from_fn(|i, j| rho[(3 - i, 3 - j)]);
    let l = nalgebra::Cholesky::new(rev)?.unpack();
    let u = Mat4::from_fn(|i, j| l[(3 - i, 3 - j)]);
    Some(u.adjoint())
}

/// Physical maximum-likelihood estimate, seeded from the PSD-projected linear inversion.
pub fn mle_reconstruct(counts: &[CountRecord]) -> Result<Reconstruction> {
    let c = ordered_counts(counts)?;
    let projected = project_psd(&linear_reconstruct(counts)?)?;
    let initial_nll = profile_nll(&projectors().map(|p| (p * projected.matrix()).trace().re.max(0.0)), &c);

    // a small admixture of white noise keeps G invertible at the start
    let seed = projected.matrix().scale(1.0 - 1e-6) + Mat4::identity().scale(0.25e-6);
    let g0 = factor(&seed).ok_or_else(|| Error::EigenNonConvergence("Cholesky factor of the seed state".into()))?;

    let mut obj = Objective {
        counts: &c,
        total: c.iter().sum(),
        evaluations: 0,
    };
    let (x, converged) = lbfgs(&mut obj, pack(&g0));
    let fitted = gram(&unpack(&x));
    let fitted = (fitted + fitted.adjoint()).scale(0.5);
    let nll = profile_nll(&projectors().map(|p| (p * fitted).trace().re.max(0.0)), &c);

    let (state, nll) = if nll <= initial_nll {
        (DensityMatrix4::new(fitted)?, nll)
    } else {
        (projected, initial_nll)
    };
    if !converged {
        return Err(Error::NonConvergence {
            evaluations: obj.evaluations,
            best_nll: nll,
            best: Box::new(state),
        });
    }
    Ok(Reconstruction {
        state,
        nll,
        initial_nll,
        evaluations: obj.evaluations,
    })
}

/// Limited-memory BFGS with Armijo backtracking. Returns the final point and
/// whether a stopping criterion was met inside the evaluation budget.
fn lbfgs(obj: &mut Objective<'_>, mut x: [f64; N_PARAMS]) -> ([f64; N_PARAMS], bool) {
    let (mut f, mut g) = obj.value_and_grad(&x);
    let mut history: Vec<([f64; N_PARAMS], [f64; N_PARAMS], f64)> = Vec::with_capacity(LBFGS_HISTORY);
    let mut stalls = 0;

    while obj.evaluations < MAX_EVALUATIONS {
        let gnorm = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gnorm < 1e-13 {
            return (x, true);
        }

        // two-loop recursion
        let mut d = g.map(|v| -v);
        let mut alphas = Vec::with_capacity(history.len());
        for (s, y, rho) in history.iter().rev() {
            let a = rho * dot(s, &d);
            for k in 0..N_PARAMS {
                d[k] -= a * y[k];
            }
            alphas.push(a);
        }
        let gamma = history
            .last()
            .map_or(1.0 / gnorm.max(1.0), |(s, y, _)| dot(s, y) / dot(y, y));
        d.iter_mut().for_each(|v| *v *= gamma);
        for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
            let b = rho * dot(y, &d);
            for k in 0..N_PARAMS {
                d[k] += (a - b) * s[k];
            }
        }
        let mut slope = dot(&g, &d);
        if !(slope < 0.0) {
            history.clear();
            d = g.map(|v| -v / gnorm.max(1.0));
            slope = dot(&g, &d);
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial: [f64; N_PARAMS] = std::array::from_fn(|k| x[k] + step * d[k]);
            let (ft, gt) = obj.value_and_grad(&trial);
            if ft.is_finite() && ft <= f + 1e-4 * step * slope {
                accepted = Some((trial, ft, gt));
                break;
            }
            step *= 0.5;
        }
        let Some((xn, fnew, gn)) = accepted else {
            if history.is_empty() {
                // no descent possible at working precision
                return (x, true);
            }
            history.clear();
            continue;
        };

        let s: [f64; N_PARAMS] = std::array::from_fn(|k| xn[k] - x[k]);
        let y: [f64; N_PARAMS] = std::array::from_fn(|k| gn[k] - g[k]);
        let sy = dot(&s, &y);
        if sy > 1e-300 {
            if history.len() == LBFGS_HISTORY {
                history.remove(0);
            }
            history.push((s, y, 1.0 / sy));
        }

        let decrease = f - fnew;
        x = xn;
        f = fnew;
        g = gn;
        if decrease <= 1e-15 * f.abs().max(1.0) {
            stalls += 1;
            if stalls >= 5 {
                return (x, true);
            }
        } else {
            stalls = 0;
        }
    }
    (x, false)
}

pub const COUNTS_HEADER: [&str; 4] = ["setting_id", "analyzer_a", "analyzer_b", "count"];

#[derive(serde::Serialize, serde::Deserialize)]
struct CountRow {
    setting_id: usize,
    analyzer_a: String,
    analyzer_b: String,
    count: u64,
}

/// CSV with header `setting_id,analyzer_a,analyzer_b,count`.
pub fn counts_to_csv(counts: &[CountRecord]) -> String {
    let settings = settings_16();
    let mut w = csv::Writer::from_writer(Vec::new());
    for rec in counts {
        let (a, b) = settings
            .get(rec.setting_id)
            .map_or(("?", "?"), |s| (s.analyzer_a.label(), s.analyzer_b.label()));
        w.serialize(CountRow {
            setting_id: rec.setting_id,
            analyzer_a: a.to_string(),
            analyzer_b: b.to_string(),
            count: rec.count,
        })
        .expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("csv output is utf-8")
}

/// Parses a counts file and checks analyzer labels against the setting ids.
pub fn parse_counts_csv(text: &str) -> Result<Vec<CountRecord>> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = r
        .headers()
        .map_err(|e| Error::Protocol(format!("counts header: {e}")))?;
    if headers.iter().collect::<Vec<_>>() != COUNTS_HEADER {
        return Err(Error::Protocol(format!(
            "expected header `{}`, found `{}`",
            COUNTS_HEADER.join(","),
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let settings = settings_16();
    let mut out = Vec::new();
    for (i, row) in r.deserialize::<CountRow>().enumerate() {
        let row = row.map_err(|e| Error::Protocol(format!("counts row {}: {e}", i + 2)))?;
        let setting = settings.get(row.setting_id).ok_or_else(|| {
            Error::Protocol(format!(
                "counts row {}: setting id {} out of range",
                i + 2,
                row.setting_id
            ))
        })?;
        let (a, b) = (row.analyzer_a.parse::<Analyzer>()?, row.analyzer_b.parse::<Analyzer>()?);
        if (a, b) != (setting.analyzer_a, setting.analyzer_b) {
            return Err(Error::Protocol(format!(
                "counts row {}: setting {} is ({}, {}), file says ({a}, {b})",
                i + 2,
                row.setting_id,
                setting.analyzer_a,
                setting.analyzer_b
            )));
        }
        out.push(CountRecord {
            setting_id: row.setting_id,
            count: row.count,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::{bell_phi_plus, state_maximal, KappaParam};
    use crate::qcore::VV;

    #[test]
    fn sixteen_settings_in_row_major_order() {
        let s = settings_16();
        assert_eq!(s.len(), 16);
        assert_eq!((s[0].analyzer_a, s[0].analyzer_b), (Analyzer::H, Analyzer::H));
        assert_eq!((s[1].analyzer_a, s[1].analyzer_b), (Analyzer::H, Analyzer::V));
        assert_eq!((s[15].analyzer_a, s[15].analyzer_b), (Analyzer::R, Analyzer::R));
        for (i, st) in s.iter().enumerate() {
            assert_eq!(st.id, i);
        }
    }

    #[test]
    fn projectors_are_informationally_complete() {
        let proj = projectors();
        // Gram matrix under the Hilbert-Schmidt inner product
        let gram = SMatrix::<f64, 16, 16>::from_fn(|i, j| (proj[i] * proj[j]).trace().re);
        let sv = gram.singular_values();
        assert!(sv.min() > 1e-6, "{sv}");
        assert_eq!(gram.rank(1e-9), 16);
    }

    #[test]
    fn noiseless_counts_examples() {
        let counts = simulate_counts(&bell_phi_plus(), 10_000, 0, true).unwrap();
        assert_eq!(
            counts[0],
            CountRecord {
                setting_id: 0,
                count: 5000
            }
        );
        assert_eq!(counts[1].count, 0);
    }

    #[test]
    fn seeded_counts_are_reproducible() {
        let rho = state_maximal(KappaParam::real(0.5).unwrap());
        let a = simulate_counts(&rho, 1000, 7, false).unwrap();
        let b = simulate_counts(&rho, 1000, 7, false).unwrap();
        let c = simulate_counts(&rho, 1000, 8, false).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn linear_inversion_of_exact_data() {
        let mixed = DensityMatrix4::maximally_mixed();
        let m = linear_reconstruct(&simulate_counts(&mixed, 1_000_000, 0, true).unwrap()).unwrap();
        assert!((m - mixed.matrix()).iter().all(|z| z.norm() < 1e-9));

        let bell = bell_phi_plus();
        let m = linear_reconstruct(&simulate_counts(&bell, 1_000_000, 0, true).unwrap()).unwrap();
        assert!((m - bell.matrix()).iter().all(|z| z.norm() < 1e-9));
    }

    #[test]
    fn missing_and_duplicate_settings_are_protocol_errors() {
        let only_one = [CountRecord {
            setting_id: 0,
            count: 100,
        }];
        assert!(matches!(linear_reconstruct(&only_one), Err(Error::Protocol(_))));
        let mut counts = simulate_counts(&bell_phi_plus(), 100, 0, true).unwrap();
        counts.push(counts[3]);
        assert!(matches!(mle_reconstruct(&counts), Err(Error::Protocol(_))));
        let zeros: Vec<CountRecord> = (0..16)
            .map(|i| CountRecord {
                setting_id: i,
                count: 0,
            })
            .collect();
        assert!(matches!(mle_reconstruct(&zeros), Err(Error::Protocol(_))));
        let bad = [CountRecord {
            setting_id: 16,
            count: 1,
        }];
        assert!(matches!(linear_reconstruct(&bad), Err(Error::Protocol(_))));
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let counts = simulate_counts(&state_maximal(KappaParam::real(0.3).unwrap()), 1000, 3, false).unwrap();
        let c = ordered_counts(&counts).unwrap();
        let mut obj = Objective {
            counts: &c,
            total: c.iter().sum(),
            evaluations: 0,
        };
        let x: [f64; N_PARAMS] = std::array::from_fn(|k| 0.3 + 0.05 * k as f64 * if k % 3 == 0 { -1.0 } else { 1.0 });
        let (_, grad) = obj.value_and_grad(&x);
        let h = 1e-6;
        for k in 0..N_PARAMS {
            let mut xp = x;
            let mut xm = x;
            xp[k] += h;
            xm[k] -= h;
            let fd = (obj.value_and_grad(&xp).0 - obj.value_and_grad(&xm).0) / (2.0 * h);
            assert!((fd - grad[k]).abs() < 1e-6, "param {k}: {fd} vs {}", grad[k]);
        }
    }

    #[test]
    fn factorization_round_trip() {
        let rho = state_maximal(KappaParam::new(c(0.3, 0.2)).unwrap());
        let seed = rho.matrix().scale(0.9) + Mat4::identity().scale(0.025);
        let g = factor(&seed).unwrap();
        for i in 0..4 {
            for j in (i + 1)..4 {
                assert_eq!(g[(i, j)], c(0.0, 0.0));
            }
        }
        assert!((g.adjoint() * g - seed).iter().all(|z| z.norm() < 1e-12));
    }

    #[test]
    fn mle_recovers_bell_state_from_noisy_counts() {
        let counts = simulate_counts(&bell_phi_plus(), 10_000, 42, false).unwrap();
        let rec = mle_reconstruct(&counts).unwrap();
        assert!(rec.nll <= rec.initial_nll + 1e-6);
        let eig = rec.state.eigenvalues().unwrap();
        assert!(eig[0] >= -1e-9);
        let coherence = rec.state.entry(VV, 0).norm() * 2.0;
        assert!((coherence - 1.0).abs() < 0.05, "{coherence}");
    }

    #[test]
    fn counts_csv_round_trip() {
        let counts = simulate_counts(&bell_phi_plus(), 500, 1, false).unwrap();
        let text = counts_to_csv(&counts);
        assert!(text.starts_with("setting_id,analyzer_a,analyzer_b,count\n0,H,H,"));
        assert_eq!(parse_counts_csv(&text).unwrap(), counts);
    }

    #[test]
    fn counts_csv_rejects_mislabelled_rows() {
        let text = "setting_id,analyzer_a,analyzer_b,count\n0,V,H,10\n";
        assert!(matches!(parse_counts_csv(text), Err(Error::Protocol(_))));
        assert!(parse_counts_csv("id,a,b,n\n").is_err());
    }
}
