//! Line-by-line strength tuning.
//!
//! Every catalog line inside the interrogated band is visited from low to
//! high frequency. For each candidate strength the line's response is
//! divided out of the current spectrum, the trial is brought back to the
//! time domain and scored with the fluctuation ratio. The best candidate is
//! applied permanently, and the pass is repeated until the ratio stops
//! decreasing or the iteration cap is hit.
//!
//! Zero is always the first candidate and a larger strength has to beat
//! the incumbent by more than [`TIE_TOLERANCE`], so the ratio never
//! increases.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{filter_lines, AtmosphereConditions, LineCatalog, SpectralLine};
use crate::error::{Error, Result};
use crate::lineshape::{line_hwhms, ComplexResponse, LineModel};
use crate::signal::{
    band_energy, find_main_peak, forward_transform, inverse_samples, inverse_transform, mse_percent,
    FluctuationWindow, Spectrum, TimeSignal, WindowSpec,
};

pub const REPORT_SCHEMA_VERSION: u32 = 1;

/// Two ratios closer than this (relative) count as a tie.
pub const TIE_TOLERANCE: f64 = 1e-12;

/// Candidate strengths for each line.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum StrengthGrid {
    /// Zero followed by `points` log-spaced values between
    /// `min_factor · s` and `max_factor · s`, where `s` is the line's nominal
    /// strength scaled so the strongest in-band line has peak optical depth
    /// `peak_depth`.
    Relative {
        points: usize,
        min_factor: f64,
        max_factor: f64,
        peak_depth: f64,
    },
    /// The same list for every line. Must start at 0 and ascend strictly.
    Absolute { values: Vec<f64> },
}

impl Default for StrengthGrid {
    fn default() -> Self {
        StrengthGrid::Relative {
            points: 60,
            min_factor: 0.01,
            max_factor: 3.0,
            peak_depth: 3.0,
        }
    }
}

impl StrengthGrid {
    pub fn validate(&self) -> Result<()> {
        match self {
            StrengthGrid::Relative {
                points,
                min_factor,
                max_factor,
                peak_depth,
            } => {
                if *points == 0 {
                    return Err(Error::invalid("strength grid needs at least one point"));
                }
                if !(*min_factor > 0.0 && max_factor > min_factor && max_factor.is_finite()) {
                    return Err(Error::invalid("strength grid needs 0 < min_factor < max_factor"));
                }
                if !(peak_depth.is_finite() && *peak_depth > 0.0) {
                    return Err(Error::invalid("peak_depth must be > 0"));
                }
            }
            StrengthGrid::Absolute { values } => {
                if values.first() != Some(&0.0) {
                    return Err(Error::invalid("strength grid must start at 0"));
                }
                if values.windows(2).any(|w| w[1].is_nan() || w[1] <= w[0] || !w[1].is_finite()) {
                    return Err(Error::invalid("strength grid must be strictly ascending"));
                }
            }
        }
        Ok(())
    }

    /// Candidates for a line whose nominal strength is `nominal`, with
    /// `band_max` the largest nominal strength in the working catalog.
    pub fn candidates(&self, nominal: f64, band_max: f64) -> Vec<f64> {
        match self {
            StrengthGrid::Relative {
                points,
                min_factor,
                max_factor,
                peak_depth,
            } => {
                let mut out = vec![0.0];
                if band_max <= 0.0 || nominal <= 0.0 {
                    return out;
                }
                let scale = nominal / band_max * peak_depth;
                let lo = min_factor * scale;
                let hi = max_factor * scale;
                if *points == 1 {
                    out.push(lo);
                    return out;
                }
                let step = (hi / lo).ln() / (*points - 1) as f64;
                out.extend((0..*points).map(|i| lo * (step * i as f64).exp()));
                out
            }
            StrengthGrid::Absolute { values } => values.clone(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RemovalConfig {
    pub band_min_ghz: f64,
    pub band_max_ghz: f64,
    /// Lines weaker than this fraction of the strongest in-band line are skipped.
    pub relative_threshold: f64,
    pub strength_grid: StrengthGrid,
    pub window_fwhm_ps: f64,
    pub max_iterations: usize,
    /// A pass that lowers the ratio by less than this fraction ends the run.
    pub min_ratio_decrease: f64,
    pub conditions: AtmosphereConditions,
    /// Re-locate the window center on the current signal at the start of
    /// every pass instead of freezing it at the input's main peak.
    pub reestimate_window_center: bool,
}

impl Default for RemovalConfig {
    fn default() -> Self {
        Self {
            band_min_ghz: 0.0,
            band_max_ghz: 4000.0,
            relative_threshold: 0.01,
            strength_grid: StrengthGrid::default(),
            window_fwhm_ps: 3.0,
            max_iterations: 5,
            min_ratio_decrease: 1e-4,
            conditions: AtmosphereConditions::default(),
            reestimate_window_center: false,
        }
    }
}

impl RemovalConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.band_min_ghz >= 0.0 && self.band_max_ghz > self.band_min_ghz) {
            return Err(Error::invalid("band must satisfy 0 <= band_min < band_max"));
        }
        if !(0.0..=1.0).contains(&self.relative_threshold) {
            return Err(Error::invalid("relative_threshold must lie in [0, 1]"));
        }
        if !(self.window_fwhm_ps.is_finite() && self.window_fwhm_ps > 0.0) {
            return Err(Error::invalid("window_fwhm_ps must be > 0"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be >= 1"));
        }
        if !(self.min_ratio_decrease > 0.0 && self.min_ratio_decrease < 1.0) {
            return Err(Error::invalid("min_ratio_decrease must lie in (0, 1)"));
        }
        self.strength_grid.validate()?;
        self.conditions.validate()
    }

    /// The lines a run will visit, in visiting order.
    pub fn working_catalog(&self, catalog: &LineCatalog) -> LineCatalog {
        filter_lines(catalog, self.band_min_ghz, self.band_max_ghz, self.relative_threshold)
    }

    /// Candidate strengths for every line of the working catalog.
    pub fn candidate_table(&self, working: &LineCatalog) -> Vec<Vec<f64>> {
        let band_max = working.max_nominal_strength();
        working
            .iter()
            .map(|l| self.strength_grid.candidates(l.nominal_strength, band_max))
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SkipReason {
    BelowThreshold,
    NoImprovingCandidate,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineTuningRecord {
    pub line_index: usize,
    pub freq_ghz: f64,
    pub chosen_strength: f64,
    pub ratio_before: f64,
    pub ratio_after: f64,
    pub skipped: Option<SkipReason>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub lines: Vec<LineTuningRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalMetrics {
    pub fluctuation_ratio_before: f64,
    pub fluctuation_ratio_after: f64,
    pub band_energy_before: f64,
    pub band_energy_after: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mse_percent: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RemovalReport {
    pub schema: u32,
    pub iterations: Vec<IterationRecord>,
    /// Ratio before the first pass, then after every pass.
    pub ratio_trace: Vec<f64>,
    pub line_frequencies_ghz: Vec<f64>,
    /// Total strength removed per working-catalog line.
    pub cumulative_strengths: Vec<f64>,
    pub metrics: RemovalMetrics,
    pub window: WindowSpec,
    pub config: RemovalConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl RemovalReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn is_ratio_trace_non_increasing(&self) -> bool {
        self.ratio_trace.windows(2).all(|w| w[1] <= w[0])
    }
}

/// Divides `spectrum` by `line_response` bin by bin.
pub fn deconvolve_line(spectrum: &Spectrum, line_response: &ComplexResponse) -> Result<Spectrum> {
    if !spectrum.same_grid(&line_response.grid) || line_response.values.len() != spectrum.values.len() {
        return Err(Error::GridMismatch);
    }
    let mut out = spectrum.clone();
    for (v, w) in out.values.iter_mut().zip(&line_response.values) {
        *v /= w;
    }
    Ok(out)
}

/// Scores every candidate for one line against `current` and returns the
/// best. The window is fixed for the whole call.
pub fn tune_line(
    current: &Spectrum,
    line: &SpectralLine,
    hwhm: f64,
    candidates: &[f64],
    window: &WindowSpec,
) -> Result<LineTuningRecord> {
    let model = LineModel::new(current.grid, line, hwhm);
    let axis = TimeSignal::new(
        vec![0.0; current.source_length],
        current.source_spacing,
        current.source_start,
    )?;
    let scorer = FluctuationWindow::new(&axis, window);
    tune_with_model(current, &model, candidates, &scorer, 0)
}

fn tune_with_model(
    current: &Spectrum,
    model: &LineModel,
    candidates: &[f64],
    scorer: &FluctuationWindow,
    line_index: usize,
) -> Result<LineTuningRecord> {
    let ratios: Vec<Result<f64>> = candidates
        .par_iter()
        .map(|&m| {
            let mut trial = current.clone();
            if m != 0.0 {
                model.divide_into(&mut trial.values, m);
            }
            scorer.ratio(&inverse_samples(&trial)?)
        })
        .collect();
    let ratios: Vec<f64> = ratios.into_iter().collect::<Result<_>>()?;

    let zero_ratio = if candidates.first() == Some(&0.0) {
        ratios[0]
    } else {
        scorer.ratio(&inverse_samples(current)?)?
    };
    let (mut best_m, mut best_ratio) = (0.0, zero_ratio);
    for (&m, &r) in candidates.iter().zip(&ratios) {
        if m > 0.0 && r < best_ratio * (1.0 - TIE_TOLERANCE) {
            best_m = m;
            best_ratio = r;
        }
    }
    Ok(LineTuningRecord {
        line_index,
        freq_ghz: model.center_frequency,
        chosen_strength: best_m,
        ratio_before: zero_ratio,
        ratio_after: best_ratio,
        skipped: if candidates.len() <= 1 {
            Some(SkipReason::BelowThreshold)
        } else if best_m == 0.0 {
            Some(SkipReason::NoImprovingCandidate)
        } else {
            None
        },
    })
}

pub fn remove_water_vapor(
    signal: &TimeSignal,
    catalog: &LineCatalog,
    config: &RemovalConfig,
) -> Result<(TimeSignal, RemovalReport)> {
    remove_water_vapor_with_reference(signal, catalog, config, None)
}

/// As [`remove_water_vapor`], additionally scoring the output against a
/// clean reference trace.
pub fn remove_water_vapor_with_reference(
    signal: &TimeSignal,
    catalog: &LineCatalog,
    config: &RemovalConfig,
    reference: Option<&TimeSignal>,
) -> Result<(TimeSignal, RemovalReport)> {
    config.validate()?;
    let input_window = WindowSpec::new(find_main_peak(signal)?, config.window_fwhm_ps)?;
    let working = config.working_catalog(catalog);
    let hwhms = line_hwhms(&working, &config.conditions);
    let candidates = config.candidate_table(&working);

    let input_scorer = FluctuationWindow::new(signal, &input_window);
    let ratio_in = input_scorer.ratio(signal.samples())?;
    let input_spectrum = forward_transform(signal);

    let mut report = RemovalReport {
        schema: REPORT_SCHEMA_VERSION,
        iterations: Vec::new(),
        ratio_trace: Vec::new(),
        line_frequencies_ghz: working.iter().map(|l| l.center_frequency).collect(),
        cumulative_strengths: vec![0.0; working.len()],
        metrics: RemovalMetrics {
            fluctuation_ratio_before: ratio_in,
            fluctuation_ratio_after: ratio_in,
            band_energy_before: band_energy(&input_spectrum, config.band_min_ghz, config.band_max_ghz),
            band_energy_after: 0.0,
            mse_percent: None,
        },
        window: input_window,
        config: config.clone(),
        note: None,
    };

    if working.is_empty() {
        report.note = Some("no catalog lines in the interrogated band; signal returned unchanged".into());
        report.ratio_trace.push(ratio_in);
        return finish(signal.clone(), &input_spectrum, report, config, reference);
    }

    let models: Vec<LineModel> = working
        .iter()
        .zip(&hwhms)
        .map(|(line, &hwhm)| LineModel::new(input_spectrum.grid, line, hwhm))
        .collect();

    let mut spectrum = input_spectrum.clone();
    let mut window = input_window;
    let mut scorer = input_scorer;
    let mut changed = false;
    let mut current_ratio = scorer.ratio(&inverse_samples(&spectrum)?)?;
    report.ratio_trace.push(current_ratio);

    for _ in 0..config.max_iterations {
        if config.reestimate_window_center && changed {
            let current = inverse_transform(&spectrum)?;
            window = WindowSpec::new(find_main_peak(&current)?, config.window_fwhm_ps)?;
            scorer = FluctuationWindow::new(&current, &window);
            current_ratio = scorer.ratio(current.samples())?;
        }
        let ratio_at_start = current_ratio;
        let mut records = Vec::with_capacity(models.len());
        for (index, model) in models.iter().enumerate() {
            let record = tune_with_model(&spectrum, model, &candidates[index], &scorer, index)?;
            if record.chosen_strength > 0.0 {
                model.divide_into(&mut spectrum.values, record.chosen_strength);
                report.cumulative_strengths[index] += record.chosen_strength;
                current_ratio = record.ratio_after;
                changed = true;
            }
            records.push(record);
        }
        report.iterations.push(IterationRecord { lines: records });
        report.ratio_trace.push(current_ratio);

        let improvement = if ratio_at_start > 0.0 {
            (ratio_at_start - current_ratio) / ratio_at_start
        } else {
            0.0
        };
        if improvement < config.min_ratio_decrease {
            break;
        }
    }
    report.window = window;

    let output = if changed {
        inverse_transform(&spectrum)?
    } else {
        signal.clone()
    };
    finish(output, &spectrum, report, config, reference)
}

fn finish(
    output: TimeSignal,
    spectrum: &Spectrum,
    mut report: RemovalReport,
    config: &RemovalConfig,
    reference: Option<&TimeSignal>,
) -> Result<(TimeSignal, RemovalReport)> {
    let scorer = FluctuationWindow::new(&output, &report.window);
    report.metrics.fluctuation_ratio_after = scorer.ratio(output.samples())?;
    report.metrics.band_energy_after = band_energy(spectrum, config.band_min_ghz, config.band_max_ghz);
    if let Some(reference) = reference {
        report.metrics.mse_percent = Some(mse_percent(reference, &output)?);
    }
    Ok((output, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lineshape::{single_line_response, FrequencyGrid};

    fn test_spectrum() -> Spectrum {
        let samples: Vec<f64> = (0..256)
            .map(|i| {
                let t = i as f64 * 0.0667 - 3.0;
                -t / 0.15 * (-(t * t) / (2.0 * 0.0225)).exp()
            })
            .collect();
        forward_transform(&TimeSignal::new(samples, 0.0667, 0.0).unwrap())
    }

    fn line(f: f64) -> SpectralLine {
        SpectralLine {
            center_frequency: f,
            integrated_intensity: 1.0,
            nominal_strength: 1.0,
            reference_fwhm: 6.0,
        }
    }

    #[test]
    fn default_grid_shape() {
        let grid = StrengthGrid::default();
        let c = grid.candidates(0.5, 1.0);
        assert_eq!(c.len(), 61);
        assert_eq!(c[0], 0.0);
        assert!((c[1] - 0.01 * 1.5).abs() < 1e-15);
        assert!((c[60] - 3.0 * 1.5).abs() < 1e-12);
        assert!(c.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(grid.candidates(0.0, 1.0), vec![0.0]);
    }

    #[test]
    fn grid_validation() {
        assert!(StrengthGrid::Absolute { values: vec![0.0, 1.0, 2.0] }.validate().is_ok());
        assert!(StrengthGrid::Absolute { values: vec![0.1, 1.0] }.validate().is_err());
        assert!(StrengthGrid::Absolute { values: vec![0.0, 1.0, 1.0] }.validate().is_err());
        assert!(StrengthGrid::Relative { points: 0, min_factor: 0.1, max_factor: 1.0, peak_depth: 1.0 }
            .validate()
            .is_err());
        let bad = RemovalConfig { max_iterations: 0, ..Default::default() };
        assert!(bad.validate().is_err());
        let bad = RemovalConfig { min_ratio_decrease: 1.0, ..Default::default() };
        assert!(bad.validate().is_err());
        assert!(RemovalConfig::default().validate().is_ok());
    }

    #[test]
    fn deconvolve_identity_and_inverse() {
        let spec = test_spectrum();
        let ones = ComplexResponse::ones(spec.grid);
        assert_eq!(deconvolve_line(&spec, &ones).unwrap(), spec);

        let w = single_line_response(&spec.grid, &line(557.0), 1.2, 3.0);
        let d = deconvolve_line(&spec, &w).unwrap();
        for ((a, b), c) in d.values.iter().zip(&w.values).zip(&spec.values) {
            assert!((a * b - c).norm() <= 1e-10 * c.norm().max(1e-300));
        }
        let inv = LineModel::new(spec.grid, &line(557.0), 3.0).response(-1.2);
        for ((a, b), c) in d.values.iter().zip(&inv.values).zip(&spec.values) {
            assert!((a - c * b).norm() <= 1e-12 * a.norm().max(1e-300));
        }
        let other = ComplexResponse::ones(FrequencyGrid::new(1.0, 10).unwrap());
        assert!(matches!(deconvolve_line(&spec, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn tune_line_prefers_zero_without_resonance() {
        let spec = test_spectrum();
        let signal = inverse_transform(&spec).unwrap();
        let window = WindowSpec::new(find_main_peak(&signal).unwrap(), 3.0).unwrap();
        let candidates = StrengthGrid::default().candidates(1.0, 1.0);
        let rec = tune_line(&spec, &line(1097.0), 3.0, &candidates, &window).unwrap();
        assert_eq!(rec.chosen_strength, 0.0);
        assert_eq!(rec.skipped, Some(SkipReason::NoImprovingCandidate));
        assert_eq!(rec.ratio_before, rec.ratio_after);
    }

    #[test]
    fn tune_line_finds_injected_strength() {
        let clean = test_spectrum();
        let l = line(752.0);
        let candidates = StrengthGrid::default().candidates(1.0, 1.0);
        let injected = candidates[40];
        let w = single_line_response(&clean.grid, &l, injected, 3.0);
        let mut wet = clean.clone();
        for (v, r) in wet.values.iter_mut().zip(&w.values) {
            *v *= r;
        }
        let clean_signal = inverse_transform(&clean).unwrap();
        let window = WindowSpec::new(find_main_peak(&clean_signal).unwrap(), 3.0).unwrap();
        let rec = tune_line(&wet, &l, 3.0, &candidates, &window).unwrap();
        assert_eq!(rec.chosen_strength, injected);
        assert!(rec.skipped.is_none());
        let clean_ratio = FluctuationWindow::new(&clean_signal, &window).ratio(clean_signal.samples()).unwrap();
        assert!((rec.ratio_after - clean_ratio).abs() <= 1e-6 * clean_ratio);
        assert!(rec.ratio_after < rec.ratio_before);
    }

    #[test]
    fn report_json_keys() {
        let spec = test_spectrum();
        let signal = inverse_transform(&spec).unwrap();
        let catalog = LineCatalog { lines: vec![line(752.0)], source_label: "t".into() };
        let (_, report) = remove_water_vapor(&signal, &catalog, &RemovalConfig::default()).unwrap();
        let json: serde_json::Value = serde_json::from_str(&report.to_json().unwrap()).unwrap();
        assert_eq!(json["schema"], 1);
        let first = &json["iterations"][0]["lines"][0];
        for key in ["freq_ghz", "chosen_strength", "ratio_before", "ratio_after", "skipped"] {
            assert!(first.get(key).is_some(), "{key}");
        }
        for key in [
            "fluctuation_ratio_before",
            "fluctuation_ratio_after",
            "band_energy_before",
            "band_energy_after",
        ] {
            assert!(json["metrics"].get(key).is_some(), "{key}");
        }
        assert!(json["ratio_trace"].is_array());
        assert!(json["cumulative_strengths"].is_array());
        let back = RemovalReport::from_json(&report.to_json().unwrap()).unwrap();
        assert_eq!(back.iterations, report.iterations);
    }

    #[test]
    fn empty_working_catalog_is_identity() {
        let signal = inverse_transform(&test_spectrum()).unwrap();
        let catalog = LineCatalog { lines: vec![line(9000.0)], source_label: "t".into() };
        let (out, report) = remove_water_vapor(&signal, &catalog, &RemovalConfig::default()).unwrap();
        assert_eq!(out, signal);
        assert!(report.iterations.is_empty());
        assert!(report.note.is_some());
    }
}
