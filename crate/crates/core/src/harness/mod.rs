//! Scenario runner behind the command line tool.

mod config;
mod format;

pub use config::{
    preset_text, ChshOptions, KappaASource, Scenario, ScenarioConfig, SweepRange, TomographyOptions, PRESET_NAMES,
};
pub use format::format_sig9;

use rayon::prelude::*;
use serde::Serialize;

use crate::bell::{chsh_s, horodecki_smax, optimize_chsh_linear, AngleSet};
use crate::channels::{bell_phi_plus, state_maximal, state_partial, KappaParam};
use crate::entanglement::{degree_of_polarization, find_crossings, gamma, grid, ChiSpectrum, CrossingReport};
use crate::error::{Error, Result};
use crate::qcore::{fidelity, DensityMatrix4, BASIS_LABELS, C64, HH, VV};
use crate::spectrum::{kernel_gaussian, kernel_with_mode};
use crate::tomography::{mle_reconstruct, simulate_counts, CountRecord};

/// One grid point of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub kappa_b: C64,
    pub gamma: f64,
    pub concurrence: f64,
    /// Heralded degree of polarization; partial scenario only.
    pub polarization: Option<f64>,
    pub s: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub crossings: CrossingReport,
}

pub const SWEEP_HEADER: &str = "x,re_kappa_b,im_kappa_b,abs_kappa_b,gamma,concurrence,polarization,s";

impl SweepResult {
    /// CSV with fixed column order; absent optional values are empty fields.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(SWEEP_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(format_sig9).unwrap_or_default();
        for r in &self.rows {
            let fields = [
                format_sig9(r.x),
                format_sig9(r.kappa_b.re),
                format_sig9(r.kappa_b.im),
                format_sig9(r.kappa_b.norm()),
                format_sig9(r.gamma),
                format_sig9(r.concurrence),
                opt(r.polarization),
                opt(r.s),
            ];
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }

    /// Grid row with the largest concurrence for `x` in `[lo, hi]`.
    pub fn peak_concurrence(&self, lo: f64, hi: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.x >= lo && r.x <= hi)
            .fold(None, |best: Option<&SweepRow>, r| match best {
                Some(b) if b.concurrence >= r.concurrence => Some(b),
                _ => Some(r),
            })
    }
}

impl ScenarioConfig {
    /// `κ_b` at evolution parameter `x`.
    pub fn kappa_b(&self, x: f64) -> C64 {
        match self.scenario {
            Scenario::Bell => C64::new(1.0, 0.0),
            _ => kernel_with_mode(&self.spectrum, x, self.kernel_mode),
        }
    }

    pub fn kappa_a(&self) -> Option<C64> {
        self.kappa_a.map(|src| match src {
            KappaASource::Direct(v) => C64::new(v, 0.0),
            KappaASource::Envelope { envelope, thickness } => kernel_gaussian(&envelope, self.lambda0_nm(), thickness),
        })
    }

    /// Model two-photon state at `x`.
    pub fn model_state(&self, x: f64) -> Result<DensityMatrix4> {
        let kb = KappaParam::new(self.kappa_b(x))?;
        Ok(match self.scenario {
            Scenario::Bell => bell_phi_plus(),
            Scenario::Maximal => state_maximal(kb),
            Scenario::Partial => {
                let ka = self
                    .kappa_a()
                    .ok_or_else(|| Error::Config("partial scenario without kappa_a".into()))?;
                state_partial(KappaParam::new(ka)?, kb)
            }
        })
    }

    fn gamma_at(&self, x: f64) -> Result<f64> {
        gamma(&self.model_state(x)?)
    }
}

/// Evaluates the configured sweep; rows come back ordered by `x`.
pub fn run_sweep(cfg: &ScenarioConfig) -> Result<SweepResult> {
    let SweepRange { x_min, x_max, step } = cfg.sweep;
    let xs = grid(x_min, x_max, step);
    let rows = xs
        .par_iter()
        .map(|&x| {
            let rho = cfg.model_state(x)?;
            let g = ChiSpectrum::of(&rho)?.gamma();
            let polarization = match cfg.scenario {
                Scenario::Partial => Some(degree_of_polarization(&rho)?),
                _ => None,
            };
            let s = cfg.sweep_chsh.then(|| optimize_chsh_linear(&rho).1);
            Ok(SweepRow {
                x,
                kappa_b: cfg.kappa_b(x),
                gamma: g,
                concurrence: g.max(0.0),
                polarization,
                s,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let crossings = if x_max > x_min {
        find_crossings(|x| cfg.gamma_at(x), x_min, x_max, step)?
    } else {
        CrossingReport::default()
    };
    Ok(SweepResult { rows, crossings })
}

#[derive(Debug, Clone, Serialize)]
pub struct MatrixParts {
    pub re: [[f64; 4]; 4],
    pub im: [[f64; 4]; 4],
}

impl MatrixParts {
    pub fn of(rho: &DensityMatrix4) -> Self {
        let m = rho.matrix();
        Self {
            re: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)].re)),
            im: std::array::from_fn(|i| std::array::from_fn(|j| m[(i, j)].im)),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StateDump {
    pub scenario: String,
    pub x: f64,
    pub basis: [&'static str; 4],
    pub kappa_b: [f64; 2],
    pub gamma: f64,
    pub concurrence: f64,
    pub matrix: MatrixParts,
}

impl StateDump {
    /// `|ρ(HH, VV)|`.
    pub fn hh_vv_magnitude(&self) -> f64 {
        self.matrix.re[HH][VV].hypot(self.matrix.im[HH][VV])
    }
}

pub fn dump_state(cfg: &ScenarioConfig, x: f64) -> Result<StateDump> {
    let rho = cfg.model_state(x)?;
    let g = gamma(&rho)?;
    let kb = cfg.kappa_b(x);
    Ok(StateDump {
        scenario: cfg.name.clone(),
        x,
        basis: BASIS_LABELS,
        kappa_b: [kb.re, kb.im],
        gamma: g,
        concurrence: g.max(0.0),
        matrix: MatrixParts::of(&rho),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CountEntry {
    pub setting_id: usize,
    pub count: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct TomographyReport {
    pub scenario: String,
    pub x: f64,
    pub n_per_setting: u64,
    pub seed: u64,
    pub noiseless: bool,
    pub fidelity: f64,
    pub model_concurrence: f64,
    pub reconstructed_concurrence: f64,
    pub reconstructed_gamma: f64,
    /// `2 |ρ̂(VV, HH)|`.
    pub reconstructed_abs_kappa_b: f64,
    pub nll: f64,
    pub initial_nll: f64,
    pub evaluations: usize,
    pub counts: Vec<CountEntry>,
    pub reconstructed: MatrixParts,
}

/// Simulates (or takes) coincidence counts for the model state at `x` and
/// reconstructs it by maximum likelihood.
pub fn run_tomography(cfg: &ScenarioConfig, x: f64, counts: Option<Vec<CountRecord>>) -> Result<TomographyReport> {
    let model = cfg.model_state(x)?;
    let opts = cfg.tomography;
    let counts = match counts {
        Some(c) => c,
        None => simulate_counts(&model, opts.n_per_setting, opts.seed, opts.noiseless)?,
    };
    let rec = mle_reconstruct(&counts)?;
    let g_hat = gamma(&rec.state)?;
    Ok(TomographyReport {
        scenario: cfg.name.clone(),
        x,
        n_per_setting: opts.n_per_setting,
        seed: opts.seed,
        noiseless: opts.noiseless,
        fidelity: fidelity(&model, &rec.state)?,
        model_concurrence: gamma(&model)?.max(0.0),
        reconstructed_concurrence: g_hat.max(0.0),
        reconstructed_gamma: g_hat,
        reconstructed_abs_kappa_b: 2.0 * rec.state.entry(VV, HH).norm(),
        nll: rec.nll,
        initial_nll: rec.initial_nll,
        evaluations: rec.evaluations,
        counts: counts
            .iter()
            .map(|c| CountEntry {
                setting_id: c.setting_id,
                count: c.count,
            })
            .collect(),
        reconstructed: MatrixParts::of(&rec.state),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ChshReport {
    pub scenario: String,
    pub x: f64,
    /// Settings evaluated directly; `None` when the config asks for optimization only.
    pub angles: Option<AngleSet>,
    pub s_at_angles: Option<f64>,
    pub optimized_angles: AngleSet,
    pub optimized_s: f64,
    pub horodecki_smax: f64,
    /// Whether the linear optimum exceeds the local-realistic bound 2.
    pub violates_local_bound: bool,
}

pub fn run_chsh(cfg: &ScenarioConfig, x: f64) -> Result<ChshReport> {
    let rho = cfg.model_state(x)?;
    let (angles, s_at_angles) = match cfg.chsh {
        ChshOptions::Fixed(a) => (Some(a), Some(chsh_s(&rho, &a))),
        ChshOptions::Optimize => (None, None),
    };
    let (optimized_angles, optimized_s) = optimize_chsh_linear(&rho);
    Ok(ChshReport {
        scenario: cfg.name.clone(),
        x,
        angles,
        s_at_angles,
        optimized_angles,
        optimized_s,
        horodecki_smax: horodecki_smax(&rho),
        violates_local_bound: optimized_s > 2.0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn degenerate_sweep_gives_single_row() {
        let mut cfg = ScenarioConfig::preset("fig2a").unwrap();
        cfg.sweep = SweepRange {
            x_min: 0.0,
            x_max: 0.0,
            step: 1.0,
        };
        let res = run_sweep(&cfg).unwrap();
        assert_eq!(res.rows.len(), 1);
        let row = res.rows[0];
        assert!((row.kappa_b - C64::new(1.0, 0.0)).norm() < 1e-12);
        assert!((row.concurrence - 1.0).abs() < 1e-9);
        assert!(res.crossings.is_empty());
    }

    #[test]
    fn csv_layout() {
        let mut cfg = ScenarioConfig::preset("fig2b").unwrap();
        cfg.sweep = SweepRange {
            x_min: 0.0,
            x_max: 2.0,
            step: 1.0,
        };
        let csv = run_sweep(&cfg).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], SWEEP_HEADER);
        assert_eq!(lines.len(), 4);
        assert!(lines[1].starts_with("0,1,0,1,"), "{}", lines[1]);
        assert!(lines[1].ends_with(','), "s column empty: {}", lines[1]);
    }

    #[test]
    fn rows_satisfy_clamp_invariant() {
        let mut cfg = ScenarioConfig::preset("fig2b").unwrap();
        cfg.sweep.step = 7.0;
        for r in run_sweep(&cfg).unwrap().rows {
            assert!((r.concurrence - r.gamma.max(0.0)).abs() <= 1e-12);
            assert!(r.kappa_b.norm() <= 1.0 + 1e-12);
            assert!((r.polarization.unwrap() - r.kappa_b.norm()).abs() < 1e-10);
        }
    }

    #[test]
    fn state_dump_at_origin() {
        let cfg = ScenarioConfig::preset("fig2a").unwrap();
        let d = dump_state(&cfg, 0.0).unwrap();
        assert!((d.hh_vv_magnitude() - 0.5).abs() < 1e-12);
        assert_eq!(d.basis, ["HH", "HV", "VH", "VV"]);
    }

    #[test]
    fn bell_preset_chsh() {
        let cfg = ScenarioConfig::preset("bell").unwrap();
        let r = run_chsh(&cfg, 0.0).unwrap();
        assert!((r.optimized_s - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-4);
        assert!(r.violates_local_bound);
        assert!(r.s_at_angles.is_none());
    }
}
