//! Lorentzian line profiles and the complex transfer functions built from them.
//!
//! Profiles follow a unit-peak convention: with `C` the line's reference
//! half width, absorption is `C·Δ / ((f_a − f)² + Δ²)`, which peaks at 1
//! when the line sits at reference conditions (`Δ = C`). Absolute scale
//! lives entirely in the tuned strength `m`, so `m` is the peak optical
//! depth of the line at reference conditions.
//!
//! A single line contributes `W_a(f) = exp[−m · (L(f; f_a) + L(f; −f_a))]`
//! where `L = κ + j·(n − 1)` is the complex Lorentzian. The mirror term at
//! `−f_a` makes the exponent Hermitian and analytic in the upper half plane,
//! so the response is exactly causal with a real DC bin. It changes the
//! depth at `f_a` by a relative `Δ² / (4·f_a²)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog::{scale_linewidth, AtmosphereConditions, LineCatalog, SpectralLine};
use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT_M_PER_S: f64 = 2.997_924_58e8;

/// One-sided DFT grid; bin `k` sits at `k · bin_spacing` GHz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub bin_spacing: f64,
    pub bin_count: usize,
}

impl FrequencyGrid {
    pub fn new(bin_spacing: f64, bin_count: usize) -> Result<Self> {
        if !(bin_spacing.is_finite() && bin_spacing > 0.0) {
            return Err(Error::invalid("bin spacing must be > 0"));
        }
        if bin_count < 2 {
            return Err(Error::invalid("grid needs at least 2 bins"));
        }
        Ok(Self {
            bin_spacing,
            bin_count,
        })
    }

    /// Grid of the DFT of `n` samples spaced `dt_ps` picoseconds apart.
    pub fn for_signal(n: usize, dt_ps: f64) -> Self {
        Self {
            bin_spacing: 1000.0 / (n as f64 * dt_ps),
            bin_count: n / 2 + 1,
        }
    }

    pub fn frequency(&self, bin: usize) -> f64 {
        bin as f64 * self.bin_spacing
    }

    pub fn frequencies(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.bin_count).map(move |k| self.frequency(k))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ComplexResponse {
    pub grid: FrequencyGrid,
    pub values: Vec<Complex64>,
}

impl ComplexResponse {
    pub fn ones(grid: FrequencyGrid) -> Self {
        Self {
            grid,
            values: vec![Complex64::new(1.0, 0.0); grid.bin_count],
        }
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

/// Tuned per-line strengths, aligned with a catalog.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct LineStrengthVector(pub Vec<f64>);

impl LineStrengthVector {
    pub fn zeros(len: usize) -> Self {
        Self(vec![0.0; len])
    }

    pub fn aligned_with(&self, catalog: &LineCatalog) -> Result<()> {
        if self.0.len() != catalog.len() {
            return Err(Error::LengthMismatch {
                expected: catalog.len(),
                actual: self.0.len(),
            });
        }
        if let Some(bad) = self.0.iter().find(|s| !(s.is_finite() && **s >= 0.0)) {
            return Err(Error::invalid(format!("line strength must be >= 0, got {bad}")));
        }
        Ok(())
    }
}

/// Lorentz profile pair sharing one normalization constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Lorentzian {
    pub center: f64,
    pub hwhm: f64,
    pub scale: f64,
}

impl Lorentzian {
    /// Profile that peaks at exactly 1 regardless of width.
    pub fn unit_peak(center: f64, hwhm: f64) -> Self {
        Self {
            center,
            hwhm,
            scale: hwhm,
        }
    }

    /// Profile normalized at `reference_hwhm`; broader lines have lower peaks
    /// and the same area.
    pub fn for_line(line: &SpectralLine, hwhm: f64) -> Self {
        Self {
            center: line.center_frequency,
            hwhm,
            scale: line.reference_hwhm(),
        }
    }

    pub fn absorption(&self, f: f64) -> f64 {
        let detuning = self.center - f;
        self.scale * self.hwhm / (detuning * detuning + self.hwhm * self.hwhm)
    }

    pub fn dispersion(&self, f: f64) -> f64 {
        let detuning = self.center - f;
        self.scale * detuning / (detuning * detuning + self.hwhm * self.hwhm)
    }

    /// The same profile centered at `−center`.
    pub fn mirrored(&self) -> Self {
        Self {
            center: -self.center,
            ..*self
        }
    }

    /// `κ + j·(n − 1)`, evaluated with a single shared denominator.
    fn complex_profile(&self, f: f64) -> Complex64 {
        let detuning = self.center - f;
        let denom = detuning * detuning + self.hwhm * self.hwhm;
        Complex64::new(self.scale * self.hwhm / denom, self.scale * detuning / denom)
    }
}

/// Unit-peak absorption profile.
pub fn lorentz_absorption(f: f64, f_a: f64, hwhm: f64) -> f64 {
    Lorentzian::unit_peak(f_a, hwhm).absorption(f)
}

/// Unit-peak dispersion profile, odd in the detuning.
pub fn lorentz_dispersion(f: f64, f_a: f64, hwhm: f64) -> f64 {
    Lorentzian::unit_peak(f_a, hwhm).dispersion(f)
}

/// Per-line half widths at the given conditions.
pub fn line_hwhms(catalog: &LineCatalog, conditions: &AtmosphereConditions) -> Vec<f64> {
    catalog
        .iter()
        .map(|l| 0.5 * scale_linewidth(l.reference_fwhm, conditions))
        .collect()
}

/// Complex index `(n − 1) − j·κ` of a line ensemble on `grid`, offsets zero.
pub fn ensemble_index(
    grid: &FrequencyGrid,
    catalog: &LineCatalog,
    strengths: &LineStrengthVector,
    conditions: &AtmosphereConditions,
) -> Result<Vec<Complex64>> {
    strengths.aligned_with(catalog)?;
    let profiles: Vec<(Lorentzian, f64)> = catalog
        .iter()
        .zip(line_hwhms(catalog, conditions))
        .zip(&strengths.0)
        .map(|((line, hwhm), &m)| (Lorentzian::for_line(line, hwhm), m))
        .collect();
    Ok(grid
        .frequencies()
        .map(|f| {
            let (dispersion, absorption) = profiles.iter().fold((0.0, 0.0), |(n, k), (p, m)| {
                (n + m * p.dispersion(f), k + m * p.absorption(f))
            });
            Complex64::new(dispersion, -absorption)
        })
        .collect())
}

/// One line evaluated on a grid, ready to produce its response at any strength.
///
/// Holds the per-bin exponent for unit strength so `response(m)` is a single
/// complex exponential per bin.
#[derive(Clone, Debug)]
pub struct LineModel {
    pub grid: FrequencyGrid,
    pub center_frequency: f64,
    unit_exponent: Vec<Complex64>,
}

impl LineModel {
    pub fn new(grid: FrequencyGrid, line: &SpectralLine, hwhm: f64) -> Self {
        let profile = Lorentzian::for_line(line, hwhm);
        let mirror = profile.mirrored();
        let unit_exponent = grid
            .frequencies()
            .map(|f| -(profile.complex_profile(f) + mirror.complex_profile(f)))
            .collect();
        Self {
            grid,
            center_frequency: line.center_frequency,
            unit_exponent,
        }
    }

    /// `W_a` at `strength`. Negative strengths give the formal inverse.
    pub fn response(&self, strength: f64) -> ComplexResponse {
        ComplexResponse {
            grid: self.grid,
            values: self
                .unit_exponent
                .iter()
                .map(|e| (e * strength).exp())
                .collect(),
        }
    }

    /// Multiplies `values` in place by `W_a(strength)^-1`.
    pub(crate) fn divide_into(&self, values: &mut [Complex64], strength: f64) {
        for (v, e) in values.iter_mut().zip(&self.unit_exponent) {
            *v *= (-e * strength).exp();
        }
    }
}

pub fn single_line_response(
    grid: &FrequencyGrid,
    line: &SpectralLine,
    strength: f64,
    hwhm: f64,
) -> ComplexResponse {
    LineModel::new(*grid, line, hwhm).response(strength)
}

/// Bin-wise product of every line's response. The vacuum propagation
/// factor is not included.
pub fn water_response(
    grid: &FrequencyGrid,
    catalog: &LineCatalog,
    strengths: &LineStrengthVector,
    hwhms: &[f64],
) -> Result<ComplexResponse> {
    strengths.aligned_with(catalog)?;
    if hwhms.len() != catalog.len() {
        return Err(Error::LengthMismatch {
            expected: catalog.len(),
            actual: hwhms.len(),
        });
    }
    let mut total = ComplexResponse::ones(*grid);
    for ((line, &m), &hwhm) in catalog.iter().zip(&strengths.0).zip(hwhms) {
        if m == 0.0 {
            continue;
        }
        let single = single_line_response(grid, line, m, hwhm);
        for (t, s) in total.values.iter_mut().zip(single.values) {
            *t *= s;
        }
    }
    Ok(total)
}

/// Free-space propagation `exp(−j·2πf·L/c)` over `path_length` meters.
pub fn vacuum_response(grid: &FrequencyGrid, path_length: f64) -> ComplexResponse {
    ComplexResponse {
        grid: *grid,
        values: grid
            .frequencies()
            .map(|f| {
                let phase = -2.0 * std::f64::consts::PI * f * 1e9 * path_length / SPEED_OF_LIGHT_M_PER_S;
                Complex64::from_polar(1.0, phase)
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::LineCatalog;

    fn line(f: f64) -> SpectralLine {
        SpectralLine {
            center_frequency: f,
            integrated_intensity: 1.0,
            nominal_strength: 1.0,
            reference_fwhm: 6.0,
        }
    }

    fn grid() -> FrequencyGrid {
        FrequencyGrid::for_signal(2048, 0.0667)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn absorption_half_maximum() {
        let (fa, d) = (557.0, 3.0);
        let peak = lorentz_absorption(fa, fa, d);
        assert_eq!(peak, 1.0);
        assert!(rel(lorentz_absorption(fa + d, fa, d), 0.5 * peak) < 1e-12);
        assert!(rel(lorentz_absorption(fa - d, fa, d), 0.5 * peak) < 1e-12);
        assert!(lorentz_absorption(1e12, fa, d) < 1e-20);
    }

    #[test]
    fn dispersion_zero_extremum_and_odd() {
        let (fa, d) = (557.0, 3.0);
        assert_eq!(lorentz_dispersion(fa, fa, d), 0.0);
        // C = Δ for the unit-peak profile, so the extremum is 1/2
        assert!(rel(lorentz_dispersion(fa - d, fa, d), 0.5) < 1e-12);
        for delta in [0.1, 1.0, 7.5, 40.0] {
            assert_eq!(
                lorentz_dispersion(fa + delta, fa, d),
                -lorentz_dispersion(fa - delta, fa, d)
            );
        }
    }

    #[test]
    fn reference_normalized_profile_scales_peak() {
        let p = Lorentzian::for_line(&line(557.0), 6.0);
        assert!(rel(p.absorption(557.0), 0.5) < 1e-15);
    }

    #[test]
    fn ensemble_trivial_cases() {
        let g = grid();
        let cond = AtmosphereConditions::default();
        let empty = LineCatalog::empty("x");
        let idx = ensemble_index(&g, &empty, &LineStrengthVector::zeros(0), &cond).unwrap();
        assert!(idx.iter().all(|v| *v == Complex64::new(0.0, 0.0)));

        let one = LineCatalog { lines: vec![line(557.0)], source_label: "x".into() };
        let idx = ensemble_index(&g, &one, &LineStrengthVector(vec![0.0]), &cond).unwrap();
        assert!(idx.iter().all(|v| v.norm() == 0.0));

        let two = LineCatalog { lines: vec![line(557.0), line(557.0)], source_label: "x".into() };
        let single = ensemble_index(&g, &one, &LineStrengthVector(vec![0.7]), &cond).unwrap();
        let double = ensemble_index(&g, &two, &LineStrengthVector(vec![0.7, 0.7]), &cond).unwrap();
        for (s, d) in single.iter().zip(&double) {
            assert!((d - s * 2.0).norm() <= 1e-15 * s.norm().max(1e-300));
        }

        assert!(matches!(
            ensemble_index(&g, &one, &LineStrengthVector(vec![0.1, 0.2]), &cond),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn single_line_response_properties() {
        let g = FrequencyGrid::new(0.5, 4000).unwrap();
        let l = line(557.0);
        let zero = single_line_response(&g, &l, 0.0, 3.0);
        assert!(zero.values.iter().all(|v| *v == Complex64::new(1.0, 0.0)));

        let w = single_line_response(&g, &l, 1.3, 3.0);
        let at_center = w.values[1114];
        assert_eq!(g.frequency(1114), 557.0);
        assert!(rel(at_center.norm(), (-1.3f64).exp()) < 1e-4);
        assert!(at_center.arg().abs() < 1.3 * 3.0 / 557.0);
        assert!(w.values.iter().all(|v| v.norm() <= 1.0));
        assert_eq!(w.values[0].im, 0.0);

        let a = single_line_response(&g, &l, 0.4, 3.0);
        let b = single_line_response(&g, &l, 0.9, 3.0);
        for ((x, y), z) in a.values.iter().zip(&b.values).zip(&w.values) {
            assert!((x * y - z).norm() <= 1e-12 * z.norm());
        }
    }

    #[test]
    fn negative_strength_is_formal_inverse() {
        let m = LineModel::new(grid(), &line(752.0), 3.0);
        let fwd = m.response(0.8);
        let inv = m.response(-0.8);
        for (a, b) in fwd.values.iter().zip(&inv.values) {
            assert!((a * b - 1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn water_response_matches_direct_exponent() {
        let g = grid();
        let cat = LineCatalog {
            lines: vec![line(557.0), line(752.0), line(1097.4), line(1113.3)],
            source_label: "x".into(),
        };
        let strengths = LineStrengthVector(vec![0.3, 1.1, 2.0, 0.05]);
        let hwhms = vec![3.0, 2.5, 3.5, 3.0];
        let w = water_response(&g, &cat, &strengths, &hwhms).unwrap();
        // Oracle: sum the closed-form per-line exponents, then exponentiate once.
        for (k, v) in w.values.iter().enumerate() {
            let f = g.frequency(k);
            let mut exponent = Complex64::new(0.0, 0.0);
            for ((l, m), d) in cat.lines.iter().zip(&strengths.0).zip(&hwhms) {
                for center in [l.center_frequency, -l.center_frequency] {
                    let x = center - f;
                    let den = x * x + d * d;
                    let n_minus_1 = 3.0 * x / den;
                    let kappa = 3.0 * d / den;
                    exponent += Complex64::new(0.0, -1.0) * m * Complex64::new(n_minus_1, -kappa);
                }
            }
            let expected = exponent.exp();
            assert!((v - expected).norm() <= 1e-10 * expected.norm(), "bin {k}");
        }
    }

    #[test]
    fn water_response_single_line_and_zero() {
        let g = grid();
        let cat = LineCatalog { lines: vec![line(987.9)], source_label: "x".into() };
        let w = water_response(&g, &cat, &LineStrengthVector(vec![0.6]), &[3.0]).unwrap();
        assert_eq!(w, single_line_response(&g, &cat.lines[0], 0.6, 3.0));
        let w0 = water_response(&g, &cat, &LineStrengthVector(vec![0.0]), &[3.0]).unwrap();
        assert!(w0.values.iter().all(|v| *v == Complex64::new(1.0, 0.0)));
        assert!(water_response(&g, &cat, &LineStrengthVector(vec![0.6]), &[]).is_err());
    }

    #[test]
    fn ensemble_index_exponentiates_to_single_line_response() {
        let g = grid();
        let cond = AtmosphereConditions::default();
        let cat = LineCatalog { lines: vec![line(1162.9)], source_label: "x".into() };
        let mirror = LineCatalog { lines: vec![line(-1162.9)], source_label: "x".into() };
        let s = LineStrengthVector(vec![0.9]);
        let idx = ensemble_index(&g, &cat, &s, &cond).unwrap();
        let mirror_idx = ensemble_index(&g, &mirror, &s, &cond).unwrap();
        let w = water_response(&g, &cat, &s, &line_hwhms(&cat, &cond)).unwrap();
        for ((i, j), v) in idx.iter().zip(&mirror_idx).zip(&w.values) {
            let expected = (Complex64::new(0.0, -1.0) * (i + j)).exp();
            assert!((v - expected).norm() <= 1e-12);
        }
    }

    #[test]
    fn vacuum_response_is_pure_phase() {
        let g = grid();
        let v0 = vacuum_response(&g, 0.0);
        assert!(v0.values.iter().all(|v| (v - 1.0).norm() == 0.0));
        let v = vacuum_response(&g, 0.3);
        for (k, val) in v.values.iter().enumerate() {
            assert!((val.norm() - 1.0).abs() < 1e-14);
            let expected = -2.0 * std::f64::consts::PI * g.frequency(k) * 1e9 * 0.3 / SPEED_OF_LIGHT_M_PER_S;
            let diff = (val.arg() - expected).rem_euclid(2.0 * std::f64::consts::PI);
            assert!(diff < 1e-9 || 2.0 * std::f64::consts::PI - diff < 1e-9);
        }
    }

    #[test]
    fn response_csv_has_one_row_per_bin() {
        let g = FrequencyGrid::new(1.0, 5).unwrap();
        let csv = ComplexResponse::ones(g).to_csv();
        assert_eq!(csv.lines().count(), 6);
        assert!(csv.starts_with("freq_ghz,real,imag\n"));
    }
}
