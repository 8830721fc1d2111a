//! Command-line front end. The `gpswf` binary forwards its arguments to [`run`].

use std::ffi::OsString;
use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::Deserialize;

use crate::approx::{
    error_budget, expand, gaussian_oracles, reconstruct, sampled_outside_energy, ErrorBudget, Gaussian,
    VolumeSamples,
};
use crate::basis::{count_grid_points_in_ball, grid_points_in_ball, truncation_set, GridSpec};
use crate::diagnostics::{
    gaussian_sweep, gram_deviation, logspace, table1, xi_fit, xi_scan, SweepOptions, DEFAULT_GRAM_CAP,
    DEFAULT_LATTICE_RADIUS,
};
use crate::error::{Error, Result};
use crate::io;
use crate::radial::{solve_band, BandSpec, RadialCache, RadialSpectrum, SpectrumOptions};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NUMERICAL: u8 = 1;
pub const EXIT_CONSTRAINT: u8 = 2;
pub const EXIT_MALFORMED: u8 = 3;
pub const EXIT_IO: u8 = 4;
pub const EXIT_USAGE: u8 = 64;

/// Exit status reported for an error.
pub fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Resolution(_) | Error::Coverage(_) | Error::Fit(_) => EXIT_NUMERICAL,
        Error::Domain(_) | Error::Constraint(_) | Error::Size(_) => EXIT_CONSTRAINT,
        Error::Input(_) | Error::Format(_) | Error::Json(_) => EXIT_MALFORMED,
        Error::Csv(e) if !e.is_io_error() => EXIT_MALFORMED,
        Error::Csv(_) | Error::Io(_) => EXIT_IO,
    }
}

#[derive(Debug, Parser)]
#[command(name = "gpswf", version, about = "Expand sampled volumes in ball-bandlimited prolate wavefunctions")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Solve the radial problems for c and write the manifest of the truncation set.
    Basis,
    /// Compute expansion coefficients of a sampled volume.
    Expand,
    /// Evaluate a coefficient file on the grid points inside the unit ball.
    Reconstruct,
    /// Write the error budget for a volume or a Gaussian.
    Bound,
    /// Lattice sums of shifted besincs for a list of sampling rates.
    Xi,
    /// Eigenvalue deviation of the sampled Gram matrix for a list of thresholds.
    Gram,
    /// Basis size relative to the number of samples in the ball.
    Table1,
    /// Measured error and error budget for Gaussians of several widths.
    DemoGaussian,
}

#[derive(Debug, Clone, Default, clap::Args)]
pub struct Flags {
    /// Bandlimit c.
    #[arg(long, global = true, allow_hyphen_values = true)]
    pub c: Option<f64>,
    /// Sampling rate; a comma-separated list for xi and table1.
    #[arg(long = "L", global = true, value_delimiter = ',')]
    pub l: Vec<u32>,
    /// Truncation threshold; a comma-separated list for gram.
    #[arg(long = "T", global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub t: Vec<f64>,
    /// Threshold given as log10 T; overrides --T.
    #[arg(long = "logT", global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub log_t: Vec<f64>,
    #[arg(long, global = true)]
    pub input: Option<PathBuf>,
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Directory holding cached radial eigensystems.
    #[arg(long = "cache-dir", global = true)]
    pub cache_dir: Option<PathBuf>,
    /// Radius of the ball on which xi is integrated.
    #[arg(long, global = true)]
    pub r1: Option<f64>,
    /// Lattice points beyond this radius enter only through the tail bound.
    #[arg(long = "lattice-radius", global = true)]
    pub lattice_radius: Option<f64>,
    /// Gaussian variances.
    #[arg(long = "sigma-list", global = true, value_delimiter = ',')]
    pub sigma_list: Vec<f64>,
    /// Gaussian center as x,y,z.
    #[arg(long, global = true, value_delimiter = ',', allow_hyphen_values = true)]
    pub mu: Vec<f64>,
    /// Out-of-ball energy epsilon for the bound command.
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    /// Out-of-band energy delta_c for the bound command.
    #[arg(long = "delta-c", global = true)]
    pub delta_c: Option<f64>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub parallelism: Option<usize>,
    /// Print a short summary on stdout.
    #[arg(long = "print-summary", global = true)]
    pub print_summary: bool,
    /// JSON file with default values for any of the flags above.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
}

/// Values loaded from `--config`; keys mirror the long flag names.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    pub c: Option<f64>,
    #[serde(rename = "L", default, deserialize_with = "one_or_many")]
    pub l: Vec<u32>,
    #[serde(rename = "T", default, deserialize_with = "one_or_many")]
    pub t: Vec<f64>,
    #[serde(rename = "logT", default, deserialize_with = "one_or_many")]
    pub log_t: Vec<f64>,
    pub input: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub r1: Option<f64>,
    pub lattice_radius: Option<f64>,
    #[serde(default)]
    pub sigma_list: Vec<f64>,
    #[serde(default)]
    pub mu: Vec<f64>,
    pub epsilon: Option<f64>,
    pub delta_c: Option<f64>,
    pub parallelism: Option<usize>,
    #[serde(default)]
    pub print_summary: bool,
}

fn one_or_many<'de, D, T>(d: D) -> std::result::Result<Vec<T>, D::Error>
where
    D: serde::Deserializer<'de>,
    T: Deserialize<'de>,
{
    #[derive(Deserialize)]
    #[serde(untagged)]
    enum OneOrMany<T> {
        One(T),
        Many(Vec<T>),
    }
    Ok(match OneOrMany::deserialize(d)? {
        OneOrMany::One(v) => vec![v],
        OneOrMany::Many(v) => v,
    })
}

impl Flags {
    /// Fills every flag left unset from `config`.
    pub fn merge(mut self, config: JobConfig) -> Self {
        fn list<T>(flag: &mut Vec<T>, cfg: Vec<T>) {
            if flag.is_empty() {
                *flag = cfg;
            }
        }
        self.c = self.c.or(config.c);
        // a threshold given on the command line in either form wins over both config forms
        if self.t.is_empty() && self.log_t.is_empty() {
            self.t = config.t;
            self.log_t = config.log_t;
        }
        list(&mut self.l, config.l);
        list(&mut self.sigma_list, config.sigma_list);
        list(&mut self.mu, config.mu);
        self.input = self.input.or(config.input);
        self.output = self.output.or(config.output);
        self.cache_dir = self.cache_dir.or(config.cache_dir);
        self.r1 = self.r1.or(config.r1);
        self.lattice_radius = self.lattice_radius.or(config.lattice_radius);
        self.epsilon = self.epsilon.or(config.epsilon);
        self.delta_c = self.delta_c.or(config.delta_c);
        self.parallelism = self.parallelism.or(config.parallelism);
        self.print_summary |= config.print_summary;
        self
    }

    fn thresholds(&self) -> Vec<f64> {
        if self.log_t.is_empty() {
            self.t.clone()
        } else {
            self.log_t.iter().map(|lt| 10f64.powf(*lt)).collect()
        }
    }

    fn threshold(&self) -> Result<f64> {
        match self.thresholds().as_slice() {
            [] => Ok(1.0),
            [t] => Ok(*t),
            many => Err(Error::Domain(format!("this command takes a single threshold, got {}", many.len()))),
        }
    }

    fn single_l(&self) -> Result<Option<u32>> {
        match self.l.as_slice() {
            [] => Ok(None),
            [l] => Ok(Some(*l)),
            many => Err(Error::Domain(format!("this command takes a single L, got {}", many.len()))),
        }
    }

    fn require_l(&self) -> Result<u32> {
        self.single_l()?.ok_or_else(|| Error::Domain("--L is required".into()))
    }

    fn require_c(&self) -> Result<f64> {
        self.c.ok_or_else(|| Error::Domain("--c is required".into()))
    }

    fn require_input(&self) -> Result<&Path> {
        self.input.as_deref().ok_or_else(|| Error::Domain("--input is required".into()))
    }

    fn output_or(&self, default: &str) -> PathBuf {
        self.output.clone().unwrap_or_else(|| PathBuf::from(default))
    }

    fn mu(&self) -> Result<[f64; 3]> {
        match self.mu.as_slice() {
            [] => Ok([0.1; 3]),
            [x, y, z] => Ok([*x, *y, *z]),
            other => Err(Error::Domain(format!("--mu takes 3 values, got {}", other.len()))),
        }
    }

    fn spectrum(&self, band: BandSpec) -> Result<RadialSpectrum> {
        match &self.cache_dir {
            Some(dir) => RadialCache::new(dir)?.solve_band(band, SpectrumOptions::default()),
            None => solve_band(band, SpectrumOptions::default()),
        }
    }
}

pub const DEFAULT_CACHE_DIR: &str = "gpswf-cache";
pub const DEFAULT_SIGMA_COUNT: usize = 9;

/// Lines printed with `--print-summary`.
struct Summary(Vec<String>);

impl Summary {
    fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        self.0.push(format!("{key}: {value}"));
    }
}

/// Parses `args` (program name first), runs the command and returns the exit status.
pub fn run<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(lines) => {
            for line in lines {
                println!("{line}");
            }
            EXIT_OK
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Runs a parsed command and returns the summary lines to print.
pub fn execute(cli: Cli) -> Result<Vec<String>> {
    let mut flags = cli.flags;
    if let Some(path) = flags.config.clone() {
        let text = fs::read(&path)?;
        let config: JobConfig = serde_json::from_slice(&text)
            .map_err(|e| Error::Format(format!("{}: bad config: {e}", path.display())))?;
        flags = flags.merge(config);
    }
    let threads = flags.parallelism.unwrap_or(0);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Domain(format!("cannot start {threads} worker threads: {e}")))?;
    let print = flags.print_summary;
    let mut summary = Summary(Vec::new());
    pool.install(|| dispatch(cli.command, &flags, &mut summary))?;
    Ok(if print { summary.0 } else { Vec::new() })
}

fn dispatch(command: Command, flags: &Flags, summary: &mut Summary) -> Result<()> {
    match command {
        Command::Basis => cmd_basis(flags, summary),
        Command::Expand => cmd_expand(flags, summary),
        Command::Reconstruct => cmd_reconstruct(flags, summary),
        Command::Bound => cmd_bound(flags, summary),
        Command::Xi => cmd_xi(flags, summary),
        Command::Gram => cmd_gram(flags, summary),
        Command::Table1 => cmd_table1(flags, summary),
        Command::DemoGaussian => cmd_demo_gaussian(flags, summary),
    }
}

fn cmd_basis(flags: &Flags, summary: &mut Summary) -> Result<()> {
    let band = BandSpec::new(flags.require_c()?)?;
    let t = flags.threshold()?;
    let l = flags.single_l()?;
    let cache = RadialCache::new(flags.cache_dir.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_CACHE_DIR)))?;
    let spectrum = cache.solve_band(band, SpectrumOptions::default())?;
    let set = truncation_set(&spectrum, t)?;
    if set.is_empty() {
        log::warn!("no wavefunction passes T = {t} at c = {}; the manifest is empty", band.c());
    }
    let output = flags.output_or("manifest.json");
    io::write_manifest(&output, &io::Manifest::new(&set, l))?;
    summary.push("count", set.len());
    if let Some(l) = l {
        let samples = count_grid_points_in_ball(GridSpec::new(l)?);
        summary.push("samples", samples);
        summary.push("ratio", format!("{:.4}", set.len() as f64 / samples as f64));
    }
    summary.push("manifest", output.display());
    Ok(())
}

/// Reads `--input` and resolves `c` and `L` against its sidecar.
fn load_volume(flags: &Flags) -> Result<(VolumeSamples, BandSpec)> {
    let (volume, header) = io::read_volume(flags.require_input()?)?;
    if let Some(l) = flags.single_l()? {
        if l != header.l {
            return Err(Error::Input(format!("--L {l} disagrees with the volume header L = {}", header.l)));
        }
    }
    let c = flags
        .c
        .or(header.c)
        .ok_or_else(|| Error::Domain("--c is required when the volume header has no c".into()))?;
    Ok((volume, BandSpec::new(c)?))
}

fn cmd_expand(flags: &Flags, summary: &mut Summary) -> Result<()> {
    let (volume, band) = load_volume(flags)?;
    let l = volume.grid().l();
    if band.c() > PI * l as f64 {
        return Err(Error::Constraint(format!("c <= pi L is required, got c = {} with L = {l}", band.c())));
    }
    let t = flags.threshold()?;
    let spectrum = flags.spectrum(band)?;
    let set = truncation_set(&spectrum, t)?;
    let coeffs = expand(&volume, &set, &spectrum)?;
    let output = flags.output_or("coefficients.csv");
    io::write_coefficients(&output, &coeffs)?;
    summary.push("count", coeffs.len());
    summary.push("energy", coeffs.energy());
    summary.push("coefficients", output.display());
    Ok(())
}

fn cmd_reconstruct(flags: &Flags, summary: &mut Summary) -> Result<()> {
    let band = BandSpec::new(flags.require_c()?)?;
    let grid = GridSpec::new(flags.require_l()?)?;
    let t = flags.threshold()?;
    let rows = io::read_coefficient_rows(flags.require_input()?)?;
    let spectrum = flags.spectrum(band)?;
    let coeffs = io::coefficients_from_rows(&rows, &spectrum, grid.l(), t, false)?;
    let inside = grid_points_in_ball(grid);
    let points: Vec<[f64; 3]> = inside.iter().map(|&k| grid.position(k)).collect();
    let rec = reconstruct(&coeffs, &spectrum, &points)?;
    let scale = rec.values.iter().fold(1.0f64, |acc, v| acc.max(v.norm()));
    let real = rec.imaginary_residue() <= 1e-12 * scale;
    let mut values = vec![Complex64::new(0.0, 0.0); grid.len()];
    for (k, v) in inside.iter().zip(&rec.values) {
        values[grid.linear_index(*k)] = if real { Complex64::new(v.re, 0.0) } else { *v };
    }
    let volume = VolumeSamples::new(grid, values, real)?;
    let output = flags.output_or("reconstruction.bin");
    io::write_volume(&output, &volume, Some(band.c()))?;
    summary.push("points", points.len());
    summary.push("dtype", if real { "float64" } else { "complex128" });
    summary.push("volume", output.display());
    Ok(())
}

/// Outside-ball samples of the Gaussian demo are summed over `[-2, 2]^3`.
const GAUSSIAN_OUTSIDE_EXTENT: f64 = 2.0;

fn cmd_bound(flags: &Flags, summary: &mut Summary) -> Result<()> {
    let t = flags.threshold()?;
    let budget = if flags.sigma_list.is_empty() {
        let (volume, band) = load_volume(flags)?;
        error_budget(&volume, band, t, flags.epsilon.unwrap_or(0.0), flags.delta_c.unwrap_or(0.0))?
    } else {
        let [sigma] = flags.sigma_list[..] else {
            return Err(Error::Domain(format!("bound takes a single sigma, got {}", flags.sigma_list.len())));
        };
        if flags.input.is_some() {
            log::warn!("--input is ignored when a Gaussian is given with --sigma-list");
        }
        let grid = GridSpec::new(flags.require_l()?)?;
        let band = BandSpec::new(flags.c.unwrap_or(PI * grid.l() as f64))?;
        let g = Gaussian::new(sigma, flags.mu()?)?;
        let oracles = gaussian_oracles(&g, band)?;
        let outside = sampled_outside_energy(grid, GAUSSIAN_OUTSIDE_EXTENT, |x| Complex64::new(g.value(x), 0.0))?;
        ErrorBudget::assemble(band, grid, t, outside, oracles.epsilon, oracles.delta_c)?
    };
    let output = flags.output_or("budget.json");
    io::write_budget(&output, &budget)?;
    summary.push("total", budget.total);
    summary.push("regime", format!("{:?}", budget.regime()));
    summary.push("budget", output.display());
    Ok(())
}

fn cmd_xi(flags: &Flags, summary: &mut Summary) -> Result<()> {
    let l_list = if flags.l.is_empty() { (8..=48).step_by(4).collect() } else { flags.l.clone() };
    let r1 = flags.r1.unwrap_or(0.95);
    let radius = flags.lattice_radius.unwrap_or(DEFAULT_LATTICE_RADIUS);
    let rows = xi_scan(&l_list, flags.c, r1, radius)?;
    let output = flags.output_or("xi_scan.csv");
    io::write_xi_scan(&output, &rows)?;
    if rows.len() >= 3 {
        let fit = xi_fit(rows)?;
        summary.push("slope", format!("{:.5}", fit.slope));
        summary.push("intercept", format!("{:.5}", fit.intercept));
    }
    summary.push("table", output.display());
    Ok(())
}

fn cmd_gram(flags: &Flags, summary: &mut Summary) -> Result<()> {
    let band = BandSpec::new(flags.c.unwrap_or(8.0 * PI))?;
    let grid = GridSpec::new(flags.single_l()?.unwrap_or(8))?;
    let mut thresholds = flags.thresholds();
    if thresholds.is_empty() {
        thresholds = vec![1.0, 10.0, 100.0, 1000.0];
    }
    let spectrum = flags.spectrum(band)?;
    let reports = thresholds
        .iter()
        .map(|&t| gram_deviation(&spectrum, grid, t, DEFAULT_GRAM_CAP))
        .collect::<Result<Vec<_>>>()?;
    let output = flags.output_or("gram.csv");
    io::write_gram(&output, &reports)?;
    for r in &reports {
        summary.push(&format!("T={}", r.t), format!("size {} max_deviation {:e}", r.size, r.max_deviation));
    }
    summary.push("table", output.display());
    Ok(())
}

fn cmd_table1(flags: &Flags, summary: &mut Summary) -> Result<()> {
    let l_list = if flags.l.is_empty() { vec![16, 20, 24] } else { flags.l.clone() };
    let log_t: Vec<i32> = if flags.log_t.is_empty() && flags.t.is_empty() {
        (-6..=6).collect()
    } else {
        let raw = if flags.log_t.is_empty() {
            flags.t.iter().map(|t| t.log10()).collect()
        } else {
            flags.log_t.clone()
        };
        raw.iter()
            .map(|&v| {
                let r = v.round();
                if (v - r).abs() > 1e-9 {
                    Err(Error::Domain(format!("table1 takes integer log10 T, got {v}")))
                } else {
                    Ok(r as i32)
                }
            })
            .collect::<Result<_>>()?
    };
    let table = table1(&l_list, &log_t, SpectrumOptions::default())?;
    let output = flags.output_or("table1.csv");
    io::write_table1(&output, &table)?;
    summary.push("table", output.display());
    Ok(())
}

fn cmd_demo_gaussian(flags: &Flags, summary: &mut Summary) -> Result<()> {
    let grid = GridSpec::new(flags.single_l()?.unwrap_or(16))?;
    let l = grid.l();
    let band = BandSpec::new(flags.c.unwrap_or(PI * l as f64))?;
    if band.c() > PI * l as f64 {
        return Err(Error::Constraint(format!("c <= pi L is required, got c = {} with L = {l}", band.c())));
    }
    let t = flags.threshold()?;
    let sigmas = if flags.sigma_list.is_empty() {
        logspace(1e-3, 1e-1, DEFAULT_SIGMA_COUNT)
    } else {
        flags.sigma_list.clone()
    };
    let spectrum = flags.spectrum(band)?;
    let options = SweepOptions { outside_extent: GAUSSIAN_OUTSIDE_EXTENT, ..SweepOptions::default() };
    let rows = gaussian_sweep(&sigmas, flags.mu()?, grid, t, &spectrum, options)?;
    let output = flags.output_or("gaussian_sweep.csv");
    io::write_gaussian_sweep(&output, &rows)?;
    let best = rows.iter().min_by(|a, b| a.measured_error.total_cmp(&b.measured_error));
    if let Some(best) = best {
        summary.push("best_sigma", best.sigma);
        summary.push("best_error", best.measured_error);
    }
    summary.push("table", output.display());
    Ok(())
}
