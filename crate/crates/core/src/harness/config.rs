//! Scenario configuration: flat TOML with dotted section keys.
//!
//! ```toml
//! name = "fig2b"
//! scenario = "partial"            # maximal | partial | bell
//! lambda0_nm = 780.0
//! spectrum.lines = [[0.37, 778.853, 0.85], [0.44, 780.160, 0.85], [0.19, 781.459, 0.85]]
//! kappa_a.value = 0.607
//! sweep.x_min = 0.0
//! sweep.x_max = 800.0
//! sweep.step = 1.0
//! chsh.angles = [-86.25, 60.75, -85.5, 76.5]
//! ```
//!
//! See `presets/*.toml` and the README for the full key list.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::bell::AngleSet;
use crate::error::{Error, Result};
use crate::spectrum::{
    compose_filtered_spectrum, BirefringenceRecord, FpCavity, GaussianEnvelope, KernelMode, SpectralLine, Spectrum,
};

const FIG2A: &str = include_str!("../../presets/fig2a.toml");
const FIG2B: &str = include_str!("../../presets/fig2b.toml");
const BELL: &str = include_str!("../../presets/bell.toml");

pub const PRESET_NAMES: [&str; 3] = ["fig2a", "fig2b", "bell"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    /// `|φ⟩` with mode b dephased.
    Maximal,
    /// Rotated and dephased mode a, then mode b dephased.
    Partial,
    /// `|φ⟩` without any channel.
    Bell,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KappaASource {
    Direct(f64),
    Envelope { envelope: GaussianEnvelope, thickness: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRange {
    pub x_min: f64,
    pub x_max: f64,
    pub step: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TomographyOptions {
    pub n_per_setting: u64,
    pub seed: u64,
    pub noiseless: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ChshOptions {
    Fixed(AngleSet),
    Optimize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub name: String,
    pub scenario: Scenario,
    pub spectrum: Spectrum,
    pub kernel_mode: KernelMode,
    pub birefringence: Option<BirefringenceRecord>,
    pub kappa_a: Option<KappaASource>,
    pub sweep: SweepRange,
    /// Adds the optimized linear CHSH value to every sweep row.
    pub sweep_chsh: bool,
    pub tomography: TomographyOptions,
    pub chsh: ChshOptions,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    name: Option<String>,
    scenario: String,
    lambda0_nm: f64,
    spectrum: RawSpectrum,
    #[serde(default)]
    kernel: RawKernel,
    birefringence: Option<RawBirefringence>,
    kappa_a: Option<RawKappaA>,
    sweep: RawSweep,
    #[serde(default)]
    tomography: RawTomography,
    #[serde(default)]
    chsh: RawChsh,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpectrum {
    lines: Option<Vec<[f64; 3]>>,
    file: Option<PathBuf>,
    envelope: Option<RawEnvelope>,
    cavity: Option<RawCavity>,
    max_lines: Option<usize>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEnvelope {
    center_nm: f64,
    width_nm: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCavity {
    optical_thickness_nm: f64,
    reflectivity: f64,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKernel {
    mode: Option<String>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBirefringence {
    delta_n: f64,
    n_o: Option<f64>,
    n_e: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawKappaA {
    value: Option<f64>,
    envelope_center_nm: Option<f64>,
    envelope_width_nm: Option<f64>,
    thickness: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    x_min: f64,
    x_max: f64,
    step: f64,
    #[serde(default)]
    chsh: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct RawTomography {
    n_per_setting: u64,
    seed: u64,
    noiseless: bool,
}

impl Default for RawTomography {
    fn default() -> Self {
        Self {
            n_per_setting: 100_000,
            seed: 0,
            noiseless: false,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawChsh {
    angles: Option<[f64; 4]>,
    #[serde(default)]
    optimize: bool,
}

fn field_err(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::Config(format!("`{field}`: {msg}"))
}

impl ScenarioConfig {
    /// Parses configuration text; relative `spectrum.file` paths resolve against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        raw.resolve(base_dir)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path.parent()).map_err(|e| match e {
            Error::Config(msg) => Error::Parse {
                path: path.to_path_buf(),
                message: msg,
            },
            other => other,
        })
    }

    pub fn preset(name: &str) -> Result<Self> {
        Self::parse(preset_text(name)?, None)
    }

    pub fn lambda0_nm(&self) -> f64 {
        self.spectrum.lambda0_nm()
    }
}

/// Source text of a built-in preset.
pub fn preset_text(name: &str) -> Result<&'static str> {
    match name {
        "fig2a" => Ok(FIG2A),
        "fig2b" => Ok(FIG2B),
        "bell" => Ok(BELL),
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (available: {})",
            PRESET_NAMES.join(", ")
        ))),
    }
}

impl RawConfig {
    fn resolve(self, base_dir: Option<&Path>) -> Result<ScenarioConfig> {
        let scenario = match self.scenario.as_str() {
            "maximal" => Scenario::Maximal,
            "partial" => Scenario::Partial,
            "bell" => Scenario::Bell,
            other => {
                return Err(field_err(
                    "scenario",
                    format!("expected maximal, partial or bell, got `{other}`"),
                ))
            }
        };
        let lambda0 = self.lambda0_nm;
        if !(lambda0 > 0.0 && lambda0.is_finite()) {
            return Err(field_err("lambda0_nm", "must be positive"));
        }

        let spectrum = self.spectrum.resolve(lambda0, base_dir)?;

        let birefringence = self
            .birefringence
            .map(|b| BirefringenceRecord::new(b.delta_n, b.n_o, b.n_e).map_err(|e| field_err("birefringence", e)))
            .transpose()?;
        let kernel_mode = match self.kernel.mode.as_deref().unwrap_or("delay") {
            "delay" => KernelMode::Delay,
            "literal" => birefringence
                .ok_or_else(|| field_err("kernel.mode", "`literal` needs `birefringence.delta_n`"))?
                .literal_mode(),
            other => {
                return Err(field_err(
                    "kernel.mode",
                    format!("expected delay or literal, got `{other}`"),
                ))
            }
        };

        let kappa_a = self.kappa_a.map(|k| k.resolve(lambda0)).transpose()?;
        match (scenario, &kappa_a) {
            (Scenario::Partial, None) => return Err(field_err("kappa_a", "required for the partial scenario")),
            (Scenario::Maximal | Scenario::Bell, Some(_)) => {
                return Err(field_err("kappa_a", "only used by the partial scenario"))
            }
            _ => {}
        }

        let s = self.sweep;
        if !(s.step > 0.0 && s.step.is_finite()) {
            return Err(field_err("sweep.step", "must be positive"));
        }
        if !(s.x_min.is_finite() && s.x_max.is_finite()) || s.x_min > s.x_max {
            return Err(field_err("sweep.x_max", "must not be smaller than sweep.x_min"));
        }

        let t = self.tomography;
        if t.n_per_setting == 0 {
            return Err(field_err("tomography.n_per_setting", "must be at least 1"));
        }

        let chsh = match (self.chsh.angles, self.chsh.optimize) {
            (Some(_), true) => return Err(field_err("chsh", "set either `angles` or `optimize`, not both")),
            (Some([a, b, c, d]), false) => {
                let set = AngleSet::new(a, b, c, d);
                if !set.is_finite() {
                    return Err(field_err("chsh.angles", "must be finite"));
                }
                ChshOptions::Fixed(set)
            }
            (None, true) => ChshOptions::Optimize,
            (None, false) => ChshOptions::Fixed(AngleSet::experimental()),
        };

        Ok(ScenarioConfig {
            name: self.name.unwrap_or_else(|| "custom".into()),
            scenario,
            spectrum,
            kernel_mode,
            birefringence,
            kappa_a,
            sweep: SweepRange {
                x_min: s.x_min,
                x_max: s.x_max,
                step: s.step,
            },
            sweep_chsh: s.chsh,
            tomography: TomographyOptions {
                n_per_setting: t.n_per_setting,
                seed: t.seed,
                noiseless: t.noiseless,
            },
            chsh,
        })
    }
}

impl RawSpectrum {
    fn resolve(self, lambda0: f64, base_dir: Option<&Path>) -> Result<Spectrum> {
        let composed = self.envelope.is_some() || self.cavity.is_some();
        let sources = [self.lines.is_some(), self.file.is_some(), composed];
        if sources.iter().filter(|&&s| s).count() != 1 {
            return Err(field_err(
                "spectrum",
                "give exactly one of `lines`, `file` or `envelope` + `cavity`",
            ));
        }
        if let Some(lines) = self.lines {
            let lines = lines
                .iter()
                .enumerate()
                .map(|(i, &[a, l, w])| {
                    SpectralLine::new(a, l, w).map_err(|e| field_err(&format!("spectrum.lines[{i}]"), e))
                })
                .collect::<Result<Vec<_>>>()?;
            return Spectrum::new(lines, lambda0).map_err(|e| field_err("spectrum.lines", e));
        }
        if let Some(file) = self.file {
            let path = match base_dir {
                Some(dir) if file.is_relative() => dir.join(file),
                _ => file,
            };
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let s = Spectrum::parse_table(&text)
                .map_err(|e| field_err("spectrum.file", format!("{}: {e}", path.display())))?;
            if (s.lambda0_nm() - lambda0).abs() > 1e-9 {
                return Err(field_err(
                    "spectrum.file",
                    format!("lambda0_nm {} differs from configured {lambda0}", s.lambda0_nm()),
                ));
            }
            return Ok(s);
        }
        let env = self.envelope.ok_or_else(|| field_err("spectrum.envelope", "missing"))?;
        let cav = self.cavity.ok_or_else(|| field_err("spectrum.cavity", "missing"))?;
        let envelope =
            GaussianEnvelope::new(env.center_nm, env.width_nm).map_err(|e| field_err("spectrum.envelope", e))?;
        let cavity =
            FpCavity::new(cav.optical_thickness_nm, cav.reflectivity).map_err(|e| field_err("spectrum.cavity", e))?;
        compose_filtered_spectrum(&envelope, &cavity, self.max_lines.unwrap_or(3), lambda0)
            .map_err(|e| field_err("spectrum", e))
    }
}

impl RawKappaA {
    fn resolve(self, _lambda0: f64) -> Result<KappaASource> {
        let envelope_keys = [
            self.envelope_center_nm.is_some(),
            self.envelope_width_nm.is_some(),
            self.thickness.is_some(),
        ];
        match (self.value, envelope_keys) {
            (Some(v), [false, false, false]) => {
                if !(0.0..=1.0).contains(&v.abs()) {
                    return Err(field_err("kappa_a.value", "|kappa_a| must not exceed 1"));
                }
                Ok(KappaASource::Direct(v))
            }
            (None, [true, true, true]) => {
                let envelope = GaussianEnvelope::new(
                    self.envelope_center_nm.unwrap_or_default(),
                    self.envelope_width_nm.unwrap_or_default(),
                )
                .map_err(|e| field_err("kappa_a", e))?;
                Ok(KappaASource::Envelope {
                    envelope,
                    thickness: self.thickness.unwrap_or_default(),
                })
            }
            _ => Err(field_err(
                "kappa_a",
                "give either `value` or all of `envelope_center_nm`, `envelope_width_nm`, `thickness`",
            )),
        }
    }
}
