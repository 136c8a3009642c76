//! Ground-truth scenes: a Gaussian-derivative pulse, optional echoes,
//! injected vapor lines, and seeded white noise.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::catalog::{AtmosphereConditions, LineCatalog, DEFAULT_REFERENCE_FWHM_GHZ};
use crate::error::{Error, Result};
use crate::lineshape::{line_hwhms, water_response, LineStrengthVector};
use crate::signal::{forward_transform, inverse_transform, TimeSignal};

pub const DEFAULT_RECORD_SAMPLES: usize = 2048;
pub const DEFAULT_SAMPLE_SPACING_PS: f64 = 0.0667;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PulseKind {
    #[serde(rename = "gaussian_derivative_1")]
    GaussianDerivative1,
    #[serde(rename = "gaussian_derivative_2")]
    GaussianDerivative2,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PulseSpec {
    pub kind: PulseKind,
    /// Picoseconds.
    pub center: f64,
    /// Picoseconds.
    pub width_sigma: f64,
    pub amplitude: f64,
}

impl PulseSpec {
    /// Peak-normalized so `max |value| == amplitude`.
    pub fn value(&self, t: f64) -> f64 {
        let x = (t - self.center) / self.width_sigma;
        let shape = match self.kind {
            // −x·exp(−x²/2) peaks at x = −1 with value exp(−1/2)
            PulseKind::GaussianDerivative1 => -x * (0.5 * (1.0 - x * x)).exp(),
            PulseKind::GaussianDerivative2 => (1.0 - x * x) * (-0.5 * x * x).exp(),
        };
        self.amplitude * shape
    }
}

pub fn generate_pulse(spec: &PulseSpec, samples: usize, dt_ps: f64) -> Result<TimeSignal> {
    if !(spec.width_sigma.is_finite() && spec.width_sigma > 0.0) {
        return Err(Error::invalid("pulse width_sigma must be > 0"));
    }
    if !(0.0..=samples as f64 * dt_ps).contains(&spec.center) {
        return Err(Error::invalid("pulse center lies outside the record"));
    }
    let values = (0..samples).map(|i| spec.value(i as f64 * dt_ps)).collect();
    TimeSignal::new(values, dt_ps, 0.0)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Echo {
    pub delay_ps: f64,
    pub relative_amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectedLine {
    pub freq_ghz: f64,
    /// Peak optical depth at reference conditions.
    pub strength: f64,
    #[serde(default = "default_fwhm")]
    pub fwhm_ghz: f64,
    #[serde(default = "default_intensity")]
    pub intensity: f64,
}

fn default_fwhm() -> f64 {
    DEFAULT_REFERENCE_FWHM_GHZ
}

fn default_intensity() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Record {
    pub samples: usize,
    pub dt_ps: f64,
}

impl Default for Record {
    fn default() -> Self {
        Self {
            samples: DEFAULT_RECORD_SAMPLES,
            dt_ps: DEFAULT_SAMPLE_SPACING_PS,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticScene {
    pub pulse: PulseSpec,
    #[serde(default)]
    pub echoes: Vec<Echo>,
    #[serde(default)]
    pub lines: Vec<InjectedLine>,
    #[serde(default)]
    pub conditions: AtmosphereConditions,
    #[serde(default)]
    pub noise_rms: f64,
    #[serde(default)]
    pub record: Record,
    #[serde(default)]
    pub seed: u64,
}

impl SyntheticScene {
    pub fn from_json(text: &str) -> Result<Self> {
        let scene: Self = serde_json::from_str(text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        if self.record.samples < crate::signal::MIN_SAMPLES {
            return Err(Error::invalid("record needs at least 8 samples"));
        }
        if !(self.record.dt_ps.is_finite() && self.record.dt_ps > 0.0) {
            return Err(Error::invalid("record dt_ps must be > 0"));
        }
        if !(self.pulse.width_sigma.is_finite() && self.pulse.width_sigma > 0.0) {
            return Err(Error::invalid("pulse width_sigma must be > 0"));
        }
        for echo in &self.echoes {
            if echo.delay_ps.is_nan() || echo.delay_ps <= 0.0 {
                return Err(Error::invalid("echo delays must be > 0"));
            }
            if !(echo.relative_amplitude > -1.0 && echo.relative_amplitude < 1.0) {
                return Err(Error::invalid("echo amplitudes must lie in (-1, 1)"));
            }
        }
        if !(self.noise_rms.is_finite() && self.noise_rms >= 0.0) {
            return Err(Error::invalid("noise_rms must be >= 0"));
        }
        for line in &self.lines {
            if !(line.strength.is_finite() && line.strength >= 0.0) {
                return Err(Error::invalid("injected strengths must be >= 0"));
            }
        }
        self.conditions.validate()?;
        self.injected_catalog().map(|_| ())
    }

    /// Injected lines as a catalog with the true strengths aligned to it.
    pub fn injected_catalog(&self) -> Result<(LineCatalog, LineStrengthVector)> {
        if self.lines.is_empty() {
            return Ok((LineCatalog::empty("scene"), LineStrengthVector::zeros(0)));
        }
        let catalog = LineCatalog::from_raw(
            self.lines.iter().map(|l| (l.freq_ghz, l.intensity, l.fwhm_ghz)),
            "scene",
        )?;
        if catalog.len() != self.lines.len() {
            return Err(Error::invalid("injected lines must have distinct frequencies"));
        }
        let strengths = catalog
            .iter()
            .map(|cl| {
                self.lines
                    .iter()
                    .find(|l| l.freq_ghz == cl.center_frequency)
                    .map(|l| l.strength)
                    .unwrap_or(0.0)
            })
            .collect();
        Ok((catalog, LineStrengthVector(strengths)))
    }

    fn axis(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.record.samples).map(move |i| i as f64 * self.record.dt_ps)
    }

    /// Pulse plus echoes, no vapor, no noise.
    pub fn render_dry(&self) -> Result<TimeSignal> {
        let samples = self
            .axis()
            .map(|t| {
                self.pulse.value(t)
                    + self
                        .echoes
                        .iter()
                        .map(|e| e.relative_amplitude * self.pulse.value(t - e.delay_ps))
                        .sum::<f64>()
            })
            .collect();
        TimeSignal::new(samples, self.record.dt_ps, 0.0)
    }

    /// The additive noise realization for this scene's seed.
    pub fn noise(&self) -> Vec<f64> {
        if self.noise_rms == 0.0 {
            return vec![0.0; self.record.samples];
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let normal = Normal::new(0.0, self.noise_rms).expect("noise_rms is finite and >= 0");
        (0..self.record.samples).map(|_| normal.sample(&mut rng)).collect()
    }
}

/// Returns `(wet, dry)`.
pub fn render_scene(scene: &SyntheticScene) -> Result<(TimeSignal, TimeSignal)> {
    scene.validate()?;
    let dry = scene.render_dry()?;
    let (catalog, strengths) = scene.injected_catalog()?;

    let mut wet = if strengths.0.iter().all(|&s| s == 0.0) {
        dry.clone()
    } else {
        let mut spectrum = forward_transform(&dry);
        let hwhms = line_hwhms(&catalog, &scene.conditions);
        let response = water_response(&spectrum.grid, &catalog, &strengths, &hwhms)?;
        for (v, w) in spectrum.values.iter_mut().zip(&response.values) {
            *v *= w;
        }
        inverse_transform(&spectrum)?
    };

    if scene.noise_rms > 0.0 {
        let noisy = wet
            .samples()
            .iter()
            .zip(scene.noise())
            .map(|(s, n)| s + n)
            .collect();
        wet = wet.with_samples(noisy)?;
    }
    Ok((wet, dry))
}
