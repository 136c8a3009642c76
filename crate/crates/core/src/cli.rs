//! Batch command-line front end.
//!
//! Exit codes: 0 success, 2 usage error, 3 input format error, 4 numerical
//! failure.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::catalog::{parse_catalog_csv, parse_catalog_jpl, LineCatalog};
use crate::error::Error;
use crate::io::{read_signal_csv, write_magnitude_phase_csv, write_signal_csv};
use crate::removal::{remove_water_vapor_with_reference, RemovalConfig, StrengthGrid};
use crate::signal::{
    band_energy, find_main_peak, fluctuation_ratio, forward_transform, mse_percent, WindowSpec,
};
use crate::synth::{render_scene, SyntheticScene};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_FORMAT: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Parser, Debug)]
#[command(name = "thz-vapor", version, about = "Remove water-vapor resonances from THz-TDS traces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render a synthetic scene to wet and dry signal CSVs.
    Synth {
        scene: PathBuf,
        #[arg(long)]
        out_wet: PathBuf,
        #[arg(long)]
        out_dry: PathBuf,
        /// Override the scene's noise seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tune and remove catalog lines from a signal.
    Remove {
        signal: PathBuf,
        catalog: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out_signal: PathBuf,
        #[arg(long)]
        out_report: PathBuf,
        /// Clean reference trace; adds mse_percent to the report.
        #[arg(long)]
        reference: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = CatalogFormat::Auto)]
        catalog_format: CatalogFormat,
        #[command(flatten)]
        overrides: ConfigOverrides,
    },
    /// Print `mse_percent fluctuation_ratio_ref fluctuation_ratio_cand energy_ratio`.
    Compare {
        reference: PathBuf,
        candidate: PathBuf,
        #[arg(long, default_value_t = 3.0)]
        window_fwhm_ps: f64,
    },
    /// Write `freq_ghz,magnitude,phase_rad` for a signal.
    Spectrum {
        signal: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(clap::Args, Debug, Default)]
struct ConfigOverrides {
    #[arg(long)]
    band_min: Option<f64>,
    #[arg(long)]
    band_max: Option<f64>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    window_fwhm_ps: Option<f64>,
    #[arg(long)]
    iterations: Option<usize>,
    #[arg(long)]
    grid_points: Option<usize>,
    #[arg(long)]
    grid_max_depth: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CatalogFormat {
    Auto,
    Csv,
    Jpl,
}

struct Failure {
    code: i32,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: if e.is_format_error() { EXIT_FORMAT } else { EXIT_NUMERIC },
            message: e.to_string(),
        }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure {
        code: EXIT_FORMAT,
        message: format!("{}: {e}", path.display()),
    })
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    fs::write(path, contents).map_err(|e| Failure {
        code: EXIT_FORMAT,
        message: format!("{}: {e}", path.display()),
    })
}

fn load_catalog(text: &str, format: CatalogFormat) -> Result<LineCatalog, Error> {
    match format {
        CatalogFormat::Csv => parse_catalog_csv(text),
        CatalogFormat::Jpl => parse_catalog_jpl(text),
        CatalogFormat::Auto => {
            let first = text
                .lines()
                .map(str::trim)
                .find(|l| !l.is_empty() && !l.starts_with('#'))
                .unwrap_or("");
            if first.starts_with("freq_ghz") {
                parse_catalog_csv(text)
            } else {
                parse_catalog_jpl(text)
            }
        }
    }
}

fn apply_overrides(mut config: RemovalConfig, o: &ConfigOverrides) -> RemovalConfig {
    if let Some(v) = o.band_min {
        config.band_min_ghz = v;
    }
    if let Some(v) = o.band_max {
        config.band_max_ghz = v;
    }
    if let Some(v) = o.threshold {
        config.relative_threshold = v;
    }
    if let Some(v) = o.window_fwhm_ps {
        config.window_fwhm_ps = v;
    }
    if let Some(v) = o.iterations {
        config.max_iterations = v;
    }
    if o.grid_points.is_some() || o.grid_max_depth.is_some() {
        let (mut points, mut min_factor, mut max_factor, mut peak_depth) = match StrengthGrid::default() {
            StrengthGrid::Relative { points, min_factor, max_factor, peak_depth } => {
                (points, min_factor, max_factor, peak_depth)
            }
            StrengthGrid::Absolute { .. } => unreachable!(),
        };
        if let StrengthGrid::Relative { points: p, min_factor: lo, max_factor: hi, peak_depth: d } =
            &config.strength_grid
        {
            (points, min_factor, max_factor, peak_depth) = (*p, *lo, *hi, *d);
        }
        config.strength_grid = StrengthGrid::Relative {
            points: o.grid_points.unwrap_or(points),
            min_factor,
            max_factor,
            peak_depth: o.grid_max_depth.unwrap_or(peak_depth),
        };
    }
    config
}

fn execute(command: Command, out: &mut dyn Write) -> Result<(), Failure> {
    match command {
        Command::Synth { scene, out_wet, out_dry, seed } => {
            let mut scene = SyntheticScene::from_json(&read(&scene)?)?;
            if let Some(seed) = seed {
                scene.seed = seed;
            }
            let (wet, dry) = render_scene(&scene)?;
            write(&out_wet, &write_signal_csv(&wet))?;
            write(&out_dry, &write_signal_csv(&dry))?;
        }
        Command::Remove {
            signal,
            catalog,
            config,
            out_signal,
            out_report,
            reference,
            catalog_format,
            overrides,
        } => {
            let signal = read_signal_csv(&read(&signal)?)?;
            let catalog = load_catalog(&read(&catalog)?, catalog_format)?;
            let base = match config {
                Some(path) => serde_json::from_str(&read(&path)?).map_err(Error::from)?,
                None => RemovalConfig::default(),
            };
            let config = apply_overrides(base, &overrides);
            config.validate()?;
            let reference = match reference {
                Some(path) => Some(read_signal_csv(&read(&path)?)?),
                None => None,
            };
            let (processed, report) =
                remove_water_vapor_with_reference(&signal, &catalog, &config, reference.as_ref())?;
            write(&out_signal, &write_signal_csv(&processed))?;
            write(&out_report, &report.to_json()?)?;
            let m = &report.metrics;
            let _ = writeln!(
                out,
                "{:e} {:e} {:e} {:e}",
                m.fluctuation_ratio_before, m.fluctuation_ratio_after, m.band_energy_before, m.band_energy_after
            );
        }
        Command::Compare { reference, candidate, window_fwhm_ps } => {
            let reference = read_signal_csv(&read(&reference)?)?;
            let candidate = read_signal_csv(&read(&candidate)?)?;
            if !reference.same_axis(&candidate) {
                return Err(Error::GridMismatch.into());
            }
            let window = WindowSpec::new(find_main_peak(&reference)?, window_fwhm_ps)?;
            let mse = mse_percent(&reference, &candidate)?;
            let ratio_ref = fluctuation_ratio(&reference, &window)?;
            let ratio_cand = fluctuation_ratio(&candidate, &window)?;
            let energy_ref = band_energy(&forward_transform(&reference), 0.0, f64::INFINITY);
            let energy_cand = band_energy(&forward_transform(&candidate), 0.0, f64::INFINITY);
            let _ = writeln!(out, "{mse:e} {ratio_ref:e} {ratio_cand:e} {:e}", energy_cand / energy_ref);
        }
        Command::Spectrum { signal, out: path } => {
            let signal = read_signal_csv(&read(&signal)?)?;
            write(&path, &write_magnitude_phase_csv(&forward_transform(&signal)))?;
        }
    }
    Ok(())
}

/// Parses `args` (including the program name) and runs the command,
/// returning the process exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            if code == EXIT_OK {
                let _ = write!(out, "{text}");
            } else {
                let _ = write!(err, "{text}");
            }
            return code;
        }
    };
    match execute(cli.command, out) {
        Ok(()) => EXIT_OK,
        Err(failure) => {
            let _ = writeln!(err, "error: {}", failure.message);
            failure.code
        }
    }
}
