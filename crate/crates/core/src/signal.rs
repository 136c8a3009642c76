//! Sampled time traces, their one-sided spectra, and the metrics computed
//! on them.
//!
//! Transform normalization: the forward DFT is unnormalized,
//! `Y_k = Σ_n y_n·exp(−j2πkn/N)`, and the inverse divides by `N`.
//! [`band_energy`] weights interior bins twice (they stand for a
//! conjugate pair) and divides by `N`, so the full-band energy equals
//! `Σ y_n²`.

use std::cell::RefCell;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lineshape::FrequencyGrid;

pub const MIN_SAMPLES: usize = 8;

/// `2·sqrt(2·ln 2)`, the FWHM of a unit-sigma Gaussian.
pub const FWHM_PER_SIGMA: f64 = 2.354_820_045_030_949_3;

/// Noise-floor magnitudes below this are replaced by it in [`dynamic_range`].
pub const DYNAMIC_RANGE_EPSILON: f64 = 1e-300;

/// Relative tolerance on a non-real DC bin before a spectrum is rejected.
pub const DC_IMAGINARY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSignal {
    samples: Vec<f64>,
    sample_spacing: f64,
    start_time: f64,
}

impl TimeSignal {
    pub fn new(samples: Vec<f64>, sample_spacing: f64, start_time: f64) -> Result<Self> {
        if samples.len() < MIN_SAMPLES {
            return Err(Error::invalid(format!(
                "signal needs at least {MIN_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        if !(sample_spacing.is_finite() && sample_spacing > 0.0) {
            return Err(Error::invalid("sample spacing must be > 0"));
        }
        if !start_time.is_finite() {
            return Err(Error::invalid("start time must be finite"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_spacing,
            start_time,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<f64> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Picoseconds.
    pub fn sample_spacing(&self) -> f64 {
        self.sample_spacing
    }

    /// Picoseconds.
    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn time(&self, index: usize) -> f64 {
        self.start_time + index as f64 * self.sample_spacing
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.samples.len()).map(move |i| self.time(i))
    }

    /// Same time axis, new samples.
    pub fn with_samples(&self, samples: Vec<f64>) -> Result<Self> {
        if samples.len() != self.samples.len() {
            return Err(Error::LengthMismatch {
                expected: self.samples.len(),
                actual: samples.len(),
            });
        }
        Self::new(samples, self.sample_spacing, self.start_time)
    }

    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|s| s * s).sum()
    }

    pub fn mean_square(&self) -> f64 {
        self.energy() / self.samples.len() as f64
    }

    pub fn same_axis(&self, other: &TimeSignal) -> bool {
        self.samples.len() == other.samples.len()
            && (self.sample_spacing - other.sample_spacing).abs() <= 1e-9 * self.sample_spacing
    }
}

/// One-sided spectrum of a real signal (bins `0..=N/2`).
#[derive(Clone, Debug, PartialEq)]
pub struct Spectrum {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
    pub source_length: usize,
    pub source_spacing: f64,
    pub source_start: f64,
}

impl Spectrum {
    pub fn same_grid(&self, other_grid: &FrequencyGrid) -> bool {
        self.grid.bin_count == other_grid.bin_count
            && (self.grid.bin_spacing - other_grid.bin_spacing).abs() <= 1e-9 * self.grid.bin_spacing
    }

    /// `freq_ghz,real,imag` per bin.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("freq_ghz,real,imag\n");
        for (k, v) in self.values.iter().enumerate() {
            out.push_str(&format!("{},{:e},{:e}\n", self.grid.frequency(k), v.re, v.im));
        }
        out
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

/// Unpadded one-sided DFT.
pub fn forward_transform(signal: &TimeSignal) -> Spectrum {
    let n = signal.len();
    let mut buffer: Vec<Complex64> = signal
        .samples
        .iter()
        .map(|&s| Complex64::new(s, 0.0))
        .collect();
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n).process(&mut buffer));
    buffer.truncate(n / 2 + 1);
    // Exact zeros where symmetry demands a real value.
    buffer[0].im = 0.0;
    if n.is_multiple_of(2) {
        buffer[n / 2].im = 0.0;
    }
    Spectrum {
        grid: FrequencyGrid::for_signal(n, signal.sample_spacing),
        values: buffer,
        source_length: n,
        source_spacing: signal.sample_spacing,
        source_start: signal.start_time,
    }
}

/// Inverse of [`forward_transform`] by conjugate-symmetric extension. The
/// imaginary part of an even-length Nyquist bin is discarded.
pub fn inverse_transform(spectrum: &Spectrum) -> Result<TimeSignal> {
    let samples = inverse_samples(spectrum)?;
    TimeSignal::new(samples, spectrum.source_spacing, spectrum.source_start)
}

pub(crate) fn inverse_samples(spectrum: &Spectrum) -> Result<Vec<f64>> {
    let n = spectrum.source_length;
    let half = n / 2 + 1;
    if spectrum.values.len() != half {
        return Err(Error::CorruptSpectrum(format!(
            "expected {half} bins for {n} samples, got {}",
            spectrum.values.len()
        )));
    }
    let scale = spectrum.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if spectrum.values[0].im.abs() > DC_IMAGINARY_TOLERANCE * scale {
        return Err(Error::CorruptSpectrum("DC bin is not real".into()));
    }
    let mut full = vec![Complex64::new(0.0, 0.0); n];
    full[0] = Complex64::new(spectrum.values[0].re, 0.0);
    for k in 1..half {
        full[k] = spectrum.values[k];
        full[n - k] = spectrum.values[k].conj();
    }
    if n.is_multiple_of(2) {
        full[n / 2] = Complex64::new(spectrum.values[n / 2].re, 0.0);
    }
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n).process(&mut full));
    let inv_n = 1.0 / n as f64;
    Ok(full.into_iter().map(|c| c.re * inv_n).collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WindowSpec {
    /// Picoseconds.
    pub center: f64,
    /// Picoseconds.
    pub fwhm: f64,
}

impl WindowSpec {
    pub fn new(center: f64, fwhm: f64) -> Result<Self> {
        if !(fwhm.is_finite() && fwhm > 0.0) {
            return Err(Error::invalid("window fwhm must be > 0"));
        }
        if !center.is_finite() {
            return Err(Error::invalid("window center must be finite"));
        }
        Ok(Self { center, fwhm })
    }

    pub fn sigma(&self) -> f64 {
        self.fwhm / FWHM_PER_SIGMA
    }

    pub fn weight(&self, t: f64) -> f64 {
        let s = self.sigma();
        let x = t - self.center;
        (-(x * x) / (2.0 * s * s)).exp()
    }
}

pub fn gaussian_window(signal: &TimeSignal, spec: &WindowSpec) -> Vec<f64> {
    signal.times().map(|t| spec.weight(t)).collect()
}

/// Time of the largest |sample|; the earliest wins a tie.
pub fn find_main_peak(signal: &TimeSignal) -> Result<f64> {
    let mut best = 0usize;
    let mut best_abs = 0.0;
    for (i, s) in signal.samples.iter().enumerate() {
        if s.abs() > best_abs {
            best = i;
            best_abs = s.abs();
        }
    }
    if best_abs == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(signal.time(best))
}

/// Window weights precomputed on a fixed time axis, for repeated
/// evaluation of the fluctuation ratio.
#[derive(Clone, Debug)]
pub struct FluctuationWindow {
    weights: Vec<f64>,
}

impl FluctuationWindow {
    pub fn new(signal: &TimeSignal, spec: &WindowSpec) -> Self {
        Self {
            weights: gaussian_window(signal, spec),
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Returns `(tail energy, windowed energy)`.
    pub fn energies(&self, samples: &[f64]) -> (f64, f64) {
        samples
            .iter()
            .zip(&self.weights)
            .fold((0.0, 0.0), |(tail, main), (y, g)| {
                let outside = y * (1.0 - g);
                let inside = y * g;
                (tail + outside * outside, main + inside * inside)
            })
    }

    pub fn ratio(&self, samples: &[f64]) -> Result<f64> {
        if samples.len() != self.weights.len() {
            return Err(Error::LengthMismatch {
                expected: self.weights.len(),
                actual: samples.len(),
            });
        }
        let (tail, main) = self.energies(samples);
        if main == 0.0 {
            return Err(Error::ZeroWindowEnergy);
        }
        Ok(tail / main)
    }
}

/// Energy outside the Gaussian window over energy inside it (rectangular
/// rule; the sample spacing cancels).
pub fn fluctuation_ratio(signal: &TimeSignal, spec: &WindowSpec) -> Result<f64> {
    FluctuationWindow::new(signal, spec).ratio(&signal.samples)
}

/// Main-pulse energy over tail energy; `+inf` when the tail is empty.
pub fn pulse_tail_energy_ratio(signal: &TimeSignal, spec: &WindowSpec) -> Result<f64> {
    let ratio = fluctuation_ratio(signal, spec)?;
    Ok(if ratio == 0.0 { f64::INFINITY } else { 1.0 / ratio })
}

pub fn mse(reference: &TimeSignal, candidate: &TimeSignal) -> Result<f64> {
    if reference.len() != candidate.len() {
        return Err(Error::LengthMismatch {
            expected: reference.len(),
            actual: candidate.len(),
        });
    }
    if !reference.same_axis(candidate) {
        return Err(Error::invalid("signals have different sample spacing"));
    }
    let sum: f64 = reference
        .samples
        .iter()
        .zip(&candidate.samples)
        .map(|(r, c)| (c - r) * (c - r))
        .sum();
    Ok(sum / reference.len() as f64)
}

/// `100 · mse / mean-square(reference)`.
pub fn mse_percent(reference: &TimeSignal, candidate: &TimeSignal) -> Result<f64> {
    let ms = reference.mean_square();
    if ms == 0.0 {
        return Err(Error::ZeroSignal);
    }
    Ok(100.0 * mse(reference, candidate)? / ms)
}

/// Parseval-weighted energy of bins with `f_min ≤ f ≤ f_max`.
pub fn band_energy(spectrum: &Spectrum, f_min: f64, f_max: f64) -> f64 {
    let n = spectrum.source_length;
    let last = spectrum.values.len() - 1;
    let sum: f64 = spectrum
        .values
        .iter()
        .enumerate()
        .filter(|(k, _)| {
            let f = spectrum.grid.frequency(*k);
            f >= f_min && f <= f_max
        })
        .map(|(k, v)| {
            let single = k == 0 || (n.is_multiple_of(2) && k == last);
            let weight = if single { 1.0 } else { 2.0 };
            weight * v.norm_sqr()
        })
        .sum();
    sum / n as f64
}

/// Per-bin `|reference| / |noise floor|`, never below 1.
pub fn dynamic_range(reference: &Spectrum, noise_floor: &Spectrum) -> Result<Vec<f64>> {
    if !reference.same_grid(&noise_floor.grid) || reference.values.len() != noise_floor.values.len() {
        return Err(Error::GridMismatch);
    }
    Ok(reference
        .values
        .iter()
        .zip(&noise_floor.values)
        .map(|(r, n)| (r.norm() / n.norm().max(DYNAMIC_RANGE_EPSILON)).max(1.0))
        .collect())
}
