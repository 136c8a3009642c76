//! Numerical removal of water-vapor resonances from terahertz time-domain
//! spectroscopy traces.
//!
//! Each catalog line is modeled as a Lorentzian complex resonance, divided
//! out of the measured spectrum at a range of trial strengths, and kept at
//! the strength that minimizes the fluctuation ratio (tail energy over
//! main-pulse energy under a Gaussian window).

pub mod catalog;
pub mod cli;
pub mod error;
pub mod io;
pub mod lineshape;
pub mod removal;
pub mod signal;
pub mod synth;

pub use catalog::{
    filter_lines, parse_catalog_csv, parse_catalog_jpl, scale_linewidth, write_catalog_csv,
    AtmosphereConditions, LineCatalog, SpectralLine,
};
pub use error::{Error, Result};
pub use lineshape::{
    ensemble_index, lorentz_absorption, lorentz_dispersion, single_line_response, vacuum_response,
    water_response, ComplexResponse, FrequencyGrid, LineModel, LineStrengthVector, Lorentzian,
};
pub use removal::{
    deconvolve_line, remove_water_vapor, remove_water_vapor_with_reference, tune_line,
    LineTuningRecord, RemovalConfig, RemovalReport, SkipReason, StrengthGrid,
};
pub use signal::{
    band_energy, dynamic_range, find_main_peak, fluctuation_ratio, forward_transform,
    gaussian_window, inverse_transform, mse, mse_percent, pulse_tail_energy_ratio, Spectrum,
    TimeSignal, WindowSpec,
};
pub use synth::{generate_pulse, render_scene, PulseKind, PulseSpec, SyntheticScene};
