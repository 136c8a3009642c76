//! Spectral-line catalogs: parsing, conditioning, band filtering and
//! pressure/temperature linewidth scaling.
//!
//! CSV is the canonical on-disk format (`freq_ghz,intensity[,fwhm_ghz]`).
//! The fixed-width reader accepts JPL-style records and keeps only the
//! frequency (columns 1-13, MHz) and log10 intensity (columns 22-29).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Collision-broadened FWHM of an average water line at 1 atm, 296 K.
pub const DEFAULT_REFERENCE_FWHM_GHZ: f64 = 6.0;
pub const DEFAULT_TEMPERATURE_INDEX: f64 = 0.68;
pub const STANDARD_PRESSURE_HPA: f64 = 1013.25;
pub const DEFAULT_REFERENCE_TEMPERATURE_K: f64 = 296.0;

/// Lines closer than this are merged into one.
pub const MERGE_TOLERANCE_GHZ: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralLine {
    pub center_frequency: f64,
    pub integrated_intensity: f64,
    /// Proportional to intensity / frequency, normalized so the catalog
    /// maximum is 1.
    pub nominal_strength: f64,
    pub reference_fwhm: f64,
}

impl SpectralLine {
    pub fn reference_hwhm(&self) -> f64 {
        0.5 * self.reference_fwhm
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineCatalog {
    pub lines: Vec<SpectralLine>,
    pub source_label: String,
}

impl LineCatalog {
    pub fn empty(source_label: impl Into<String>) -> Self {
        Self {
            lines: Vec::new(),
            source_label: source_label.into(),
        }
    }

    pub fn len(&self) -> usize {
        self.lines.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lines.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &SpectralLine> {
        self.lines.iter()
    }

    pub fn max_nominal_strength(&self) -> f64 {
        self.lines
            .iter()
            .map(|l| l.nominal_strength)
            .fold(0.0, f64::max)
    }

    /// Builds a conditioned catalog from `(freq_ghz, intensity, fwhm_ghz)`
    /// triples: sorted, duplicates merged, nominal strengths normalized.
    pub fn from_raw(
        raw: impl IntoIterator<Item = (f64, f64, f64)>,
        source_label: impl Into<String>,
    ) -> Result<Self> {
        let mut raw: Vec<(f64, f64, f64)> = raw.into_iter().collect();
        if raw.is_empty() {
            return Err(Error::EmptyCatalog);
        }
        for (i, &(f, intensity, fwhm)) in raw.iter().enumerate() {
            if !(f.is_finite() && f > 0.0) {
                return Err(Error::invalid(format!("line {i}: frequency must be > 0")));
            }
            if !(intensity.is_finite() && intensity >= 0.0) {
                return Err(Error::invalid(format!("line {i}: intensity must be >= 0")));
            }
            if !(fwhm.is_finite() && fwhm > 0.0) {
                return Err(Error::invalid(format!("line {i}: fwhm must be > 0")));
            }
        }
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));

        let mut merged: Vec<(f64, f64, f64)> = Vec::with_capacity(raw.len());
        for entry in raw {
            match merged.last_mut() {
                Some(last) if (entry.0 - last.0).abs() <= MERGE_TOLERANCE_GHZ => {
                    last.1 += entry.1;
                }
                _ => merged.push(entry),
            }
        }

        let max_ratio = merged.iter().map(|&(f, i, _)| i / f).fold(0.0, f64::max);
        let lines = merged
            .into_iter()
            .map(|(f, intensity, fwhm)| SpectralLine {
                center_frequency: f,
                integrated_intensity: intensity,
                nominal_strength: if max_ratio > 0.0 {
                    (intensity / f) / max_ratio
                } else {
                    0.0
                },
                reference_fwhm: fwhm,
            })
            .collect();
        Ok(Self {
            lines,
            source_label: source_label.into(),
        })
    }
}

/// Measurement conditions used for linewidth scaling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AtmosphereConditions {
    pub pressure: f64,
    pub temperature: f64,
    pub reference_pressure: f64,
    pub reference_temperature: f64,
    pub temperature_index: f64,
    pub relative_humidity: f64,
    pub path_length: f64,
}

impl Default for AtmosphereConditions {
    fn default() -> Self {
        Self {
            pressure: STANDARD_PRESSURE_HPA,
            temperature: DEFAULT_REFERENCE_TEMPERATURE_K,
            reference_pressure: STANDARD_PRESSURE_HPA,
            reference_temperature: DEFAULT_REFERENCE_TEMPERATURE_K,
            temperature_index: DEFAULT_TEMPERATURE_INDEX,
            relative_humidity: 0.5,
            path_length: 1.0,
        }
    }
}

impl AtmosphereConditions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("pressure", self.pressure),
            ("temperature", self.temperature),
            ("reference_pressure", self.reference_pressure),
            ("reference_temperature", self.reference_temperature),
            ("path_length", self.path_length),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::invalid(format!("{name} must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.relative_humidity) {
            return Err(Error::invalid("relative_humidity must lie in [0, 1]"));
        }
        if !(0.5..=1.0).contains(&self.temperature_index) {
            return Err(Error::invalid("temperature_index must lie in [0.5, 1.0]"));
        }
        Ok(())
    }
}

/// Benedict-Kaplan scaling of a collision-broadened width:
/// `w0 * (p / p0) * (T0 / T)^m`.
pub fn scale_linewidth(reference_fwhm: f64, conditions: &AtmosphereConditions) -> f64 {
    let pressure_factor = conditions.pressure / conditions.reference_pressure;
    if conditions.temperature == conditions.reference_temperature {
        return reference_fwhm * pressure_factor;
    }
    let temperature_factor = (conditions.reference_temperature / conditions.temperature)
        .powf(conditions.temperature_index);
    reference_fwhm * pressure_factor * temperature_factor
}

/// Keeps lines inside `[f_min, f_max]` whose nominal strength is at least
/// `relative_threshold` times the strongest in-band line.
pub fn filter_lines(
    catalog: &LineCatalog,
    f_min: f64,
    f_max: f64,
    relative_threshold: f64,
) -> LineCatalog {
    let in_band: Vec<&SpectralLine> = catalog
        .lines
        .iter()
        .filter(|l| l.center_frequency >= f_min && l.center_frequency <= f_max)
        .collect();
    let band_max = in_band
        .iter()
        .map(|l| l.nominal_strength)
        .fold(0.0, f64::max);
    let floor = relative_threshold * band_max;
    LineCatalog {
        lines: in_band
            .into_iter()
            .filter(|l| l.nominal_strength >= floor)
            .cloned()
            .collect(),
        source_label: catalog.source_label.clone(),
    }
}

pub fn parse_catalog_csv(text: &str) -> Result<LineCatalog> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers()?.clone();
    let names: Vec<&str> = headers.iter().collect();
    let has_fwhm = match names.as_slice() {
        ["freq_ghz", "intensity"] => false,
        ["freq_ghz", "intensity", "fwhm_ghz"] => true,
        _ => {
            return Err(Error::parse(
                1,
                format!("expected header `freq_ghz,intensity[,fwhm_ghz]`, got `{}`", names.join(",")),
            ))
        }
    };

    let mut raw = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let field = |i: usize, name: &str| -> Result<f64> {
            let text = record
                .get(i)
                .ok_or_else(|| Error::parse(row, format!("missing {name}")))?;
            text.parse::<f64>()
                .map_err(|_| Error::parse(row, format!("{name} `{text}` is not a number")))
        };
        if record.len() < 2 || record.len() > 3 || (record.len() == 3 && !has_fwhm) {
            return Err(Error::parse(row, format!("expected 2 or 3 fields, got {}", record.len())));
        }
        let freq = field(0, "freq_ghz")?;
        let intensity = field(1, "intensity")?;
        let fwhm = if record.len() == 3 {
            field(2, "fwhm_ghz")?
        } else {
            DEFAULT_REFERENCE_FWHM_GHZ
        };
        if !(freq.is_finite() && freq > 0.0) {
            return Err(Error::parse(row, format!("frequency must be positive, got {freq}")));
        }
        if !(intensity.is_finite() && intensity >= 0.0) {
            return Err(Error::parse(row, format!("intensity must be non-negative, got {intensity}")));
        }
        if !(fwhm.is_finite() && fwhm > 0.0) {
            return Err(Error::parse(row, format!("fwhm must be positive, got {fwhm}")));
        }
        raw.push((freq, intensity, fwhm));
    }
    LineCatalog::from_raw(raw, "csv")
}

/// Fixed-width reader. Only frequency (MHz, columns 1-13) and log10
/// integrated intensity (columns 22-29) are read; every other column is
/// ignored. Blank lines are skipped.
pub fn parse_catalog_jpl(text: &str) -> Result<LineCatalog> {
    let mut raw = Vec::new();
    for (index, line) in text.lines().enumerate() {
        let record = index + 1;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        if line.len() < 29 || !line.is_char_boundary(13) || !line.is_char_boundary(21) || !line.is_char_boundary(29) {
            return Err(Error::parse(record, format!("record has {} characters, need at least 29", line.len())));
        }
        let freq_field = line[0..13].trim();
        let lgint_field = line[21..29].trim();
        let freq_mhz: f64 = freq_field
            .parse()
            .map_err(|_| Error::parse(record, format!("frequency `{freq_field}` is not a number")))?;
        let log_intensity: f64 = lgint_field
            .parse()
            .map_err(|_| Error::parse(record, format!("log intensity `{lgint_field}` is not a number")))?;
        if !(freq_mhz.is_finite() && freq_mhz > 0.0) {
            return Err(Error::parse(record, "frequency must be positive"));
        }
        raw.push((freq_mhz / 1000.0, 10f64.powf(log_intensity), DEFAULT_REFERENCE_FWHM_GHZ));
    }
    LineCatalog::from_raw(raw, "jpl")
}

/// Writes the canonical CSV form; `parse_catalog_csv` reads it back exactly.
pub fn write_catalog_csv(catalog: &LineCatalog) -> String {
    let mut out = String::from("freq_ghz,intensity,fwhm_ghz\n");
    for line in &catalog.lines {
        out.push_str(&format!(
            "{},{},{}\n",
            line.center_frequency, line.integrated_intensity, line.reference_fwhm
        ));
    }
    out
}

/// Twenty water lines between 0.5 and 2.7 THz with approximate relative
/// intensities. Intended for tests and demos only.
pub const BUNDLED_TEST_CATALOG_CSV: &str = include_str!("../data/water_test_20.csv");

pub fn bundled_test_catalog() -> LineCatalog {
    let mut catalog =
        parse_catalog_csv(BUNDLED_TEST_CATALOG_CSV).expect("bundled catalog is well formed");
    catalog.source_label = "bundled-test-20".into();
    catalog
}
