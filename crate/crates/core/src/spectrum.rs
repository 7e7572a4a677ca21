//! Spectral models of the photon in the dephasing arm and the complex
//! decoherence kernel they induce.
//!
//! A spectrum is a normalized sum of Gaussian lines
//! `f(λ) ∝ Σ A_j exp(-4 (λ - λ_j)² / σ_j²)`; note the width `σ_j` is the
//! parameter of that form, not a FWHM. The evolution parameter `x` is a
//! birefringent delay measured in units of the reference wavelength `λ₀`, so a
//! line at `λ_j` acquires phase `2π x λ₀ / λ_j` and its coherence decays as
//! `exp(-(β_j x)² / 16)` with `β_j = 2π λ₀ σ_j / λ_j²`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::qcore::C64;

const NORMALIZATION_TOL: f64 = 1e-9;
/// Wavelength pitch of the grid used to extract filtered lines.
const GRID_PITCH_NM: f64 = 0.001;
/// Half-width of the extraction window, in envelope widths.
const WINDOW_WIDTHS: f64 = 4.0;
/// Peaks below this fraction of the global maximum are ignored.
const PEAK_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralLine {
    pub amplitude: f64,
    pub center_nm: f64,
    pub width_nm: f64,
}

impl SpectralLine {
    pub fn new(amplitude: f64, center_nm: f64, width_nm: f64) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::Config(format!(
                "line amplitude must be positive, got {amplitude}"
            )));
        }
        if !(center_nm > 0.0 && center_nm.is_finite()) {
            return Err(Error::Config(format!(
                "line center must be positive, got {center_nm} nm"
            )));
        }
        if !(width_nm >= 0.0 && width_nm.is_finite()) {
            return Err(Error::Config(format!(
                "line width must be nonnegative, got {width_nm} nm"
            )));
        }
        Ok(Self {
            amplitude,
            center_nm,
            width_nm,
        })
    }

    /// Coherence decay rate per unit delay.
    fn beta(&self, lambda0_nm: f64) -> f64 {
        2.0 * PI * lambda0_nm * self.width_nm / (self.center_nm * self.center_nm)
    }

    /// Unweighted single-line kernel at delay `x` (in units of `λ₀`).
    fn kernel(&self, lambda0_nm: f64, x: f64) -> C64 {
        let decay = (-(self.beta(lambda0_nm) * x).powi(2) / 16.0).exp();
        let phase = 2.0 * PI * x * lambda0_nm / self.center_nm;
        C64::from_polar(decay, phase)
    }
}

/// A normalized discrete spectrum with its reference wavelength `λ₀`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    lines: Vec<SpectralLine>,
    lambda0_nm: f64,
}

impl Spectrum {
    /// Requires `Σ A_j = 1` within `1e-9`.
    pub fn new(lines: Vec<SpectralLine>, lambda0_nm: f64) -> Result<Self> {
        if lines.is_empty() {
            return Err(Error::Config("spectrum has no lines".into()));
        }
        if !(lambda0_nm > 0.0 && lambda0_nm.is_finite()) {
            return Err(Error::Config(format!(
                "reference wavelength must be positive, got {lambda0_nm} nm"
            )));
        }
        let total: f64 = lines.iter().map(|l| l.amplitude).sum();
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::Config(format!("line amplitudes sum to {total}, expected 1")));
        }
        Ok(Self { lines, lambda0_nm })
    }

    /// Rescales the amplitudes to sum to one before validating.
    pub fn normalized(mut lines: Vec<SpectralLine>, lambda0_nm: f64) -> Result<Self> {
        let total: f64 = lines.iter().map(|l| l.amplitude).sum();
        if !(total > 0.0 && total.is_finite()) {
            return Err(Error::Config("spectrum has no positive amplitude".into()));
        }
        for line in &mut lines {
            line.amplitude /= total;
        }
        Self::new(lines, lambda0_nm)
    }

    pub fn lines(&self) -> &[SpectralLine] {
        &self.lines
    }

    pub fn lambda0_nm(&self) -> f64 {
        self.lambda0_nm
    }

    /// Same lines with every width replaced by `width_nm`.
    pub fn with_uniform_width(&self, width_nm: f64) -> Result<Self> {
        let lines = self
            .lines
            .iter()
            .map(|l| SpectralLine::new(l.amplitude, l.center_nm, width_nm))
            .collect::<Result<Vec<_>>>()?;
        Self::new(lines, self.lambda0_nm)
    }

    /// Plain-text table: a `lambda0_nm = ...` line, then `A_j, lambda_nm, sigma_nm` rows.
    pub fn to_table(&self) -> String {
        let mut out = format!("lambda0_nm = {}\nA_j, lambda_nm, sigma_nm\n", self.lambda0_nm);
        for l in &self.lines {
            let _ = writeln!(out, "{}, {}, {}", l.amplitude, l.center_nm, l.width_nm);
        }
        out
    }

    pub fn parse_table(text: &str) -> Result<Self> {
        let mut lambda0 = None;
        let mut header_seen = false;
        let mut lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix("lambda0_nm") {
                let value = rest.trim_start().trim_start_matches(['=', ',', ':']).trim();
                lambda0 = Some(parse_number(value, lineno, "lambda0_nm")?);
                continue;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields == ["A_j", "lambda_nm", "sigma_nm"] {
                header_seen = true;
                continue;
            }
            if !header_seen {
                return Err(Error::Config(format!(
                    "line {lineno}: expected header `A_j, lambda_nm, sigma_nm`"
                )));
            }
            if fields.len() != 3 {
                return Err(Error::Config(format!(
                    "line {lineno}: expected 3 columns, found {}",
                    fields.len()
                )));
            }
            let amplitude = parse_number(fields[0], lineno, "A_j")?;
            let center = parse_number(fields[1], lineno, "lambda_nm")?;
            let width = parse_number(fields[2], lineno, "sigma_nm")?;
            lines.push(
                SpectralLine::new(amplitude, center, width)
                    .map_err(|e| Error::Config(format!("line {lineno}: {e}")))?,
            );
        }
        let lambda0 = lambda0.ok_or_else(|| Error::Config("missing `lambda0_nm` entry".into()))?;
        Spectrum::new(lines, lambda0)
    }
}

fn parse_number(s: &str, lineno: usize, field: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Config(format!("line {lineno}: field `{field}` is not a number: `{s}`")))
}

/// How the evolution parameter maps onto the birefringent phase.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum KernelMode {
    /// `x` is the optical delay in units of `λ₀`.
    #[default]
    Delay,
    /// `x` is the crystal thickness in units of `λ₀`; the delay is `x · Δn`.
    Literal { delta_n: f64 },
}

impl KernelMode {
    fn effective_delay(self, x: f64) -> f64 {
        match self {
            KernelMode::Delay => x,
            KernelMode::Literal { delta_n } => x * delta_n,
        }
    }
}

/// Birefringence of the dephasing crystal. Only used by [`KernelMode::Literal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BirefringenceRecord {
    pub delta_n: f64,
    pub n_o: Option<f64>,
    pub n_e: Option<f64>,
}

impl BirefringenceRecord {
    pub fn new(delta_n: f64, n_o: Option<f64>, n_e: Option<f64>) -> Result<Self> {
        if let (Some(o), Some(e)) = (n_o, n_e) {
            if ((o - e) - delta_n).abs() > 1e-12 {
                return Err(Error::Config(format!("delta_n = {delta_n} but n_o - n_e = {}", o - e)));
            }
        }
        Ok(Self { delta_n, n_o, n_e })
    }

    pub fn literal_mode(&self) -> KernelMode {
        KernelMode::Literal { delta_n: self.delta_n }
    }
}

/// Decoherence kernel `κ(x) = Σ_j A_j exp(-(β_j x)²/16) exp(i 2π x λ₀/λ_j)`.
pub fn kernel(s: &Spectrum, x: f64) -> C64 {
    kernel_with_mode(s, x, KernelMode::Delay)
}

pub fn kernel_with_mode(s: &Spectrum, x: f64, mode: KernelMode) -> C64 {
    let delay = mode.effective_delay(x);
    s.lines
        .iter()
        .map(|line| line.kernel(s.lambda0_nm, delay) * line.amplitude)
        .sum()
}

/// Gaussian spectral envelope `exp(-4 (λ - λ_c)² / σ²)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianEnvelope {
    pub center_nm: f64,
    pub width_nm: f64,
}

impl GaussianEnvelope {
    pub fn new(center_nm: f64, width_nm: f64) -> Result<Self> {
        if !(width_nm > 0.0 && width_nm.is_finite()) {
            return Err(Error::Config(format!(
                "envelope width must be positive, got {width_nm} nm"
            )));
        }
        if !(center_nm > 0.0 && center_nm.is_finite()) {
            return Err(Error::Config(format!(
                "envelope center must be positive, got {center_nm} nm"
            )));
        }
        Ok(Self { center_nm, width_nm })
    }

    /// Unnormalized envelope value (1 at the center).
    pub fn value(&self, lambda_nm: f64) -> f64 {
        let d = lambda_nm - self.center_nm;
        (-4.0 * d * d / (self.width_nm * self.width_nm)).exp()
    }
}

/// Kernel of a single Gaussian line.
pub fn kernel_gaussian(e: &GaussianEnvelope, lambda0_nm: f64, x: f64) -> C64 {
    SpectralLine {
        amplitude: 1.0,
        center_nm: e.center_nm,
        width_nm: e.width_nm,
    }
    .kernel(lambda0_nm, x)
}

/// Fabry-Perot etalon described by its optical thickness and mirror reflectivity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FpCavity {
    pub optical_thickness_nm: f64,
    pub reflectivity: f64,
}

impl FpCavity {
    pub fn new(optical_thickness_nm: f64, reflectivity: f64) -> Result<Self> {
        if !(optical_thickness_nm > 0.0 && optical_thickness_nm.is_finite()) {
            return Err(Error::Config(format!(
                "cavity optical thickness must be positive, got {optical_thickness_nm} nm"
            )));
        }
        if !(0.0..1.0).contains(&reflectivity) {
            return Err(Error::Config(format!(
                "reflectivity must lie in [0, 1), got {reflectivity}"
            )));
        }
        Ok(Self {
            optical_thickness_nm,
            reflectivity,
        })
    }

    /// Free spectral range near `lambda_nm`.
    pub fn free_spectral_range_nm(&self, lambda_nm: f64) -> f64 {
        lambda_nm * lambda_nm / (2.0 * self.optical_thickness_nm)
    }
}

/// Airy transmission `(1-R)² / ((1-R)² + 4R sin²(2π nL / λ))`.
pub fn airy_transmission(c: &FpCavity, lambda_nm: f64) -> f64 {
    let r = c.reflectivity;
    let loss = (1.0 - r) * (1.0 - r);
    let s = (2.0 * PI * c.optical_thickness_nm / lambda_nm).sin();
    loss / (loss + 4.0 * r * s * s)
}

struct Peak {
    area: f64,
    center_nm: f64,
    width_nm: f64,
}

/// Discretizes an envelope filtered by an etalon into at most `max_lines` lines.
///
/// `T(λ)·envelope(λ)` is sampled every 0.001 nm over ±4σ of the envelope
/// center. Each local maximum above 1% of the global maximum becomes a line
/// centered on the parabola-refined maximum, whose amplitude is the area between
/// the neighbouring minima and whose width is `2√2` times the standard
/// deviation of that lobe.
pub fn compose_filtered_spectrum(
    e: &GaussianEnvelope,
    c: &FpCavity,
    max_lines: usize,
    lambda0_nm: f64,
) -> Result<Spectrum> {
    if max_lines == 0 {
        return Err(Error::Config("max_lines must be at least 1".into()));
    }
    let half = WINDOW_WIDTHS * e.width_nm;
    let lo = e.center_nm - half;
    let n = (2.0 * half / GRID_PITCH_NM).round() as usize + 1;
    let grid: Vec<f64> = (0..n).map(|i| lo + i as f64 * GRID_PITCH_NM).collect();
    let f: Vec<f64> = grid.iter().map(|&l| airy_transmission(c, l) * e.value(l)).collect();

    let global = f.iter().copied().fold(0.0, f64::max);
    let floor = PEAK_FLOOR * global;
    let maxima: Vec<usize> = (1..n - 1)
        .filter(|&i| f[i] > f[i - 1] && f[i] >= f[i + 1] && f[i] > floor)
        .collect();
    if maxima.is_empty() {
        return Err(Error::Config(format!(
            "no transmission peak within ±{WINDOW_WIDTHS}σ of {} nm",
            e.center_nm
        )));
    }
    let minima: Vec<usize> = (1..n - 1).filter(|&i| f[i] < f[i - 1] && f[i] <= f[i + 1]).collect();

    let mut peaks: Vec<Peak> = maxima
        .iter()
        .map(|&p| {
            let left = minima.iter().rev().find(|&&m| m < p).copied().unwrap_or(0);
            let right = minima.iter().find(|&&m| m > p).copied().unwrap_or(n - 1);
            let mut peak = lobe_moments(&grid[left..=right], &f[left..=right]);
            peak.center_nm = grid[p] + GRID_PITCH_NM * parabolic_offset(f[p - 1], f[p], f[p + 1]);
            peak
        })
        .collect();

    // stable sort keeps wavelength order among equal areas
    peaks.sort_by(|a, b| b.area.total_cmp(&a.area));
    peaks.truncate(max_lines);
    peaks.sort_by(|a, b| a.center_nm.total_cmp(&b.center_nm));

    let lines = peaks
        .iter()
        .map(|p| SpectralLine::new(p.area, p.center_nm, p.width_nm))
        .collect::<Result<Vec<_>>>()?;
    Spectrum::normalized(lines, lambda0_nm)
}

/// Vertex of the parabola through three equally spaced samples, in units of the spacing.
fn parabolic_offset(left: f64, mid: f64, right: f64) -> f64 {
    let denom = left - 2.0 * mid + right;
    if denom == 0.0 {
        0.0
    } else {
        0.5 * (left - right) / denom
    }
}

fn lobe_moments(x: &[f64], y: &[f64]) -> Peak {
    let trapz =
        |g: &dyn Fn(usize) -> f64| -> f64 { (1..x.len()).map(|i| 0.5 * (g(i) + g(i - 1)) * (x[i] - x[i - 1])).sum() };
    let area = trapz(&|i| y[i]);
    let mean = trapz(&|i| y[i] * x[i]) / area;
    let var = trapz(&|i| y[i] * (x[i] - mean).powi(2)) / area;
    Peak {
        area,
        center_nm: mean,
        width_nm: 2.0 * std::f64::consts::SQRT_2 * var.max(0.0).sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fig2a_spectrum(width: f64) -> Spectrum {
        let lines = [(0.37, 778.853), (0.44, 780.160), (0.19, 781.459)]
            .iter()
            .map(|&(a, l)| SpectralLine::new(a, l, width).unwrap())
            .collect();
        Spectrum::new(lines, 780.0).unwrap()
    }

    #[test]
    fn kernel_is_one_at_zero_delay() {
        let k = kernel(&fig2a_spectrum(0.9), 0.0);
        assert!((k - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn kernel_reproduces_fitted_values() {
        let s = fig2a_spectrum(0.9);
        assert!((kernel(&s, 560.0).norm() - 0.354).abs() <= 0.02);
        assert!(kernel(&s, 243.0).norm() <= 0.12);
        let s = fig2a_spectrum(0.85);
        assert!((kernel(&s, 189.0).norm() - 0.24).abs() <= 0.02);
    }

    #[test]
    fn literal_mode_scales_delay_by_birefringence() {
        let s = fig2a_spectrum(0.9);
        let rec = BirefringenceRecord::new(0.01, None, None).unwrap();
        let lit = kernel_with_mode(&s, 56_000.0, rec.literal_mode());
        assert!((lit - kernel(&s, 560.0)).norm() < 1e-9);
    }

    #[test]
    fn birefringence_record_must_be_consistent() {
        assert!(BirefringenceRecord::new(0.01, Some(1.55), Some(1.54)).is_ok());
        assert!(BirefringenceRecord::new(0.01, Some(1.55), Some(1.50)).is_err());
    }

    #[test]
    fn gaussian_kernel_examples() {
        let e = GaussianEnvelope::new(780.0, 3.0).unwrap();
        assert_eq!(kernel_gaussian(&e, 780.0, 0.0), C64::new(1.0, 0.0));
        assert!((kernel_gaussian(&e, 780.0, 117.0).norm() - 0.607).abs() <= 0.005);
        let mono = SpectralLine::new(1.0, 780.0, 0.0).unwrap();
        let s = Spectrum::new(vec![mono], 780.0).unwrap();
        for x in [1.0, 37.5, 1e4] {
            assert!((kernel(&s, x).norm() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn spectrum_validation() {
        assert!(matches!(Spectrum::new(vec![], 780.0), Err(Error::Config(_))));
        let line = SpectralLine::new(0.5, 780.0, 1.0).unwrap();
        assert!(Spectrum::new(vec![line], 780.0).is_err());
        assert!(SpectralLine::new(0.0, 780.0, 1.0).is_err());
        assert!(SpectralLine::new(1.0, -1.0, 1.0).is_err());
        assert!(SpectralLine::new(1.0, 780.0, -0.1).is_err());
    }

    #[test]
    fn airy_examples() {
        let open = FpCavity::new(1234.5, 0.0).unwrap();
        for l in [700.0, 780.0, 812.3] {
            assert_eq!(airy_transmission(&open, l), 1.0);
        }
        let c = FpCavity::new(234_048.0, 0.9).unwrap();
        for m in [598u32, 600, 601] {
            let l = 2.0 * c.optical_thickness_nm / m as f64;
            assert!((airy_transmission(&c, l) - 1.0).abs() < 1e-9);
        }
        // anti-resonance: 2π nL / λ = (m + 1/2) π
        let l = 2.0 * c.optical_thickness_nm / 600.5;
        assert!((airy_transmission(&c, l) - 0.01 / 3.61).abs() < 1e-9);
        assert!(FpCavity::new(1.0, 1.0).is_err());
        assert!(FpCavity::new(0.0, 0.5).is_err());
    }

    #[test]
    fn wide_free_spectral_range_gives_single_line() {
        let e = GaussianEnvelope::new(780.0, 3.0).unwrap();
        // resonances at 7810 / m nm, the m = 10 one sits at 781 nm
        let c = FpCavity::new(3905.0, 0.99).unwrap();
        let s = compose_filtered_spectrum(&e, &c, 5, 780.0).unwrap();
        assert_eq!(s.lines().len(), 1);
        assert!((s.lines()[0].center_nm - 781.0).abs() < 0.1, "{:?}", s.lines());
        assert!((s.lines()[0].amplitude - 1.0).abs() < 1e-12);
    }

    fn fitted_comb() -> Spectrum {
        let e = GaussianEnvelope::new(780.0, 3.0).unwrap();
        // resonance m = 600 at the fitted center line 780.160 nm
        let c = FpCavity::new(300.0 * 780.160, 0.9).unwrap();
        assert!((c.free_spectral_range_nm(780.0) - 1.30).abs() < 0.01);
        compose_filtered_spectrum(&e, &c, 3, 780.0).unwrap()
    }

    #[test]
    fn comb_matching_fitted_line_spacing() {
        let s = fitted_comb();
        let lines = s.lines();
        assert_eq!(lines.len(), 3);
        for (line, fitted) in lines.iter().zip([778.853, 780.160, 781.459]) {
            assert!((line.center_nm - fitted).abs() <= 0.02, "{lines:?}");
        }
        for pair in lines.windows(2) {
            assert!((pair[1].center_nm - pair[0].center_nm - 1.30).abs() <= 0.05);
        }
        assert!(lines[1].amplitude > lines[0].amplitude && lines[1].amplitude > lines[2].amplitude);
    }

    #[test]
    fn comb_amplitudes_follow_envelope() {
        // equal-area Airy lobes, so amplitudes are the envelope sampled at the resonances
        let s = fitted_comb();
        let e = GaussianEnvelope::new(780.0, 3.0).unwrap();
        let w: Vec<f64> = s
            .lines()
            .iter()
            .map(|l| e.value(l.center_nm) * l.center_nm.powi(2))
            .collect();
        let total: f64 = w.iter().sum();
        for (line, wi) in s.lines().iter().zip(&w) {
            assert!((line.amplitude - wi / total).abs() < 2e-3, "{:?}", s.lines());
        }
    }

    #[test]
    fn comb_amplitudes_match_fitted_ratios() {
        let s = fitted_comb();
        for (line, fitted) in s.lines().iter().zip([0.37, 0.44, 0.19]) {
            assert!(
                (line.amplitude - fitted).abs() <= 0.08,
                "amplitude {} vs fitted {fitted}: {:?}",
                line.amplitude,
                s.lines()
            );
        }
    }

    #[test]
    fn single_retained_line_is_renormalized() {
        let e = GaussianEnvelope::new(780.0, 3.0).unwrap();
        let c = FpCavity::new(300.0 * 780.160, 0.9).unwrap();
        let s = compose_filtered_spectrum(&e, &c, 1, 780.0).unwrap();
        assert_eq!(s.lines().len(), 1);
        assert_eq!(s.lines()[0].amplitude, 1.0);
        assert!(compose_filtered_spectrum(&e, &c, 0, 780.0).is_err());
    }

    #[test]
    fn table_round_trip() {
        let s = fig2a_spectrum(0.85);
        let parsed = Spectrum::parse_table(&s.to_table()).unwrap();
        assert_eq!(parsed, s);
    }

    #[test]
    fn table_errors_name_the_line() {
        let text = "lambda0_nm = 780\nA_j, lambda_nm, sigma_nm\n1.0, abc, 0.9\n";
        let err = Spectrum::parse_table(text).unwrap_err().to_string();
        assert!(err.contains("line 3"), "{err}");
        assert!(Spectrum::parse_table("A_j, lambda_nm, sigma_nm\n1, 780, 1\n").is_err());
    }
}
