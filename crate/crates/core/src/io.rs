//! Plain-text file formats.
//!
//! Signal CSV is `time_ps,amplitude`. Times are written with nine decimals
//! and amplitudes in shortest round-trip exponent form, so a signal read
//! back and written again is byte-identical.

use crate::error::{Error, Result};
use crate::signal::{Spectrum, TimeSignal};

/// Maximum tolerated deviation from a uniform time axis, relative to the
/// sample spacing.
pub const UNIFORM_SPACING_TOLERANCE: f64 = 1e-6;

pub fn read_signal_csv(text: &str) -> Result<TimeSignal> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let headers = reader.headers()?.clone();
    if headers.iter().collect::<Vec<_>>() != ["time_ps", "amplitude"] {
        return Err(Error::parse(1, "expected header `time_ps,amplitude`"));
    }
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for record in reader.records() {
        let record = record?;
        let row = record.position().map(|p| p.line() as usize).unwrap_or(0);
        let value = |i: usize| -> Result<f64> {
            let text = record.get(i).unwrap_or("");
            text.parse::<f64>()
                .map_err(|_| Error::parse(row, format!("`{text}` is not a number")))
        };
        times.push(value(0)?);
        samples.push(value(1)?);
    }
    if times.len() < 2 {
        return Err(Error::invalid("signal file needs at least two samples"));
    }
    let n = times.len();
    let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
    if dt.is_nan() || dt <= 0.0 {
        return Err(Error::invalid("time axis must be increasing"));
    }
    for (i, t) in times.iter().enumerate() {
        let expected = times[0] + i as f64 * dt;
        if (t - expected).abs() > UNIFORM_SPACING_TOLERANCE * dt {
            return Err(Error::parse(i + 2, format!("non-uniform sample spacing at t = {t} ps")));
        }
    }
    TimeSignal::new(samples, dt, times[0])
}

pub fn write_signal_csv(signal: &TimeSignal) -> String {
    let mut out = String::with_capacity(32 * signal.len() + 20);
    out.push_str("time_ps,amplitude\n");
    for (t, y) in signal.times().zip(signal.samples()) {
        out.push_str(&format!("{t:.9},{y:e}\n"));
    }
    out
}

/// `freq_ghz,magnitude,phase_rad`, one row per one-sided bin.
pub fn write_magnitude_phase_csv(spectrum: &Spectrum) -> String {
    let mut out = String::from("freq_ghz,magnitude,phase_rad\n");
    for (k, v) in spectrum.values.iter().enumerate() {
        out.push_str(&format!("{},{:e},{:e}\n", spectrum.grid.frequency(k), v.norm(), v.arg()));
    }
    out
}
