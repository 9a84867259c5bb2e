//! Experiment drivers behind the `vortex-uca` binary.
//!
//! Each experiment turns a [`RunConfig`] into a [`CsvTable`]. Tables are
//! rendered with a header line first, then `#` comment lines recording the
//! tool version and the fully resolved configuration, then data rows. Numbers
//! use `{:.15e}` formatting, which is locale-independent and carries 16
//! significant digits.

pub mod config;

use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, TAU};
use std::fmt::Write as _;

use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{
    max_approximation_error, ChannelMatrix, ChannelVariant, ModeChannelMatrix, ModeGainFactors,
};
use crate::geometry::GeometryParams;
use crate::metrics::{se_sweep, LinkBudget, SweepVariable};
use crate::transceiver::{
    crosstalk_matrix_for, demultiplex_mode, max_leakage, propagate, propagate_modes,
    synthesize_transmit, ModeSymbolVector, NoiseModel,
};

pub use config::{
    load_config, parse_config, BudgetConfig, ConfigError, LoadedConfig, RunConfig, SweepSpec,
};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

/// Modes reported by the approximation-error sweep.
pub const ERROR_SWEEP_MODES: std::ops::RangeInclusive<i32> = 0..=8;

/// Receive elements plotted by the gain sweeps (1-based, as printed).
pub const GAIN_SWEEP_ELEMENTS: usize = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] crate::Error),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// The five experiment subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    ErrorSweep,
    GainVsPhi,
    GainVsTheta,
    SeVsPhi,
    DemuxDemo,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::ErrorSweep,
        Experiment::GainVsPhi,
        Experiment::GainVsTheta,
        Experiment::SeVsPhi,
        Experiment::DemuxDemo,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::ErrorSweep => "error-sweep",
            Experiment::GainVsPhi => "gain-vs-phi",
            Experiment::GainVsTheta => "gain-vs-theta",
            Experiment::SeVsPhi => "se-vs-phi",
            Experiment::DemuxDemo => "demux-demo",
        }
    }

    /// Geometry defaults for a bare invocation. The bearing sweep is run at
    /// `φ = π/3`; everything else uses the reference link.
    pub fn geometry_defaults(self) -> GeometryParams {
        match self {
            Experiment::GainVsTheta => GeometryParams {
                tilt_phi: FRAC_PI_3,
                ..GeometryParams::default()
            },
            _ => GeometryParams::default(),
        }
    }

    /// `(variable, start, stop, steps)` of the default grid.
    pub fn default_grid(self) -> Option<(&'static str, f64, f64, usize)> {
        match self {
            Experiment::ErrorSweep => Some(("n_elements", 4.0, 32.0, 15)),
            Experiment::GainVsPhi => Some(("phi", 0.0, FRAC_PI_2, 91)),
            Experiment::GainVsTheta => Some(("theta", 0.0, TAU * 359.0 / 360.0, 360)),
            Experiment::SeVsPhi => Some(("phi", 0.0, FRAC_PI_2, 181)),
            Experiment::DemuxDemo => None,
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Parse a `START:STOP:STEPS` grid override.
pub fn parse_grid(text: &str) -> Result<SweepSpec, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::Usage(format!(
            "grid `{text}` must be START:STOP:STEPS"
        )));
    }
    let num = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|e| CliError::Usage(format!("grid `{text}`: bad number `{s}`: {e}")))
    };
    let start = num(parts[0])?;
    let stop = num(parts[1])?;
    let steps = parts[2]
        .trim()
        .parse::<usize>()
        .map_err(|e| CliError::Usage(format!("grid `{text}`: bad step count: {e}")))?;
    if steps == 0 || !start.is_finite() || !stop.is_finite() || start > stop {
        return Err(CliError::Usage(format!(
            "grid `{text}` needs STEPS >= 1 and START <= STOP"
        )));
    }
    Ok(SweepSpec {
        variable: None,
        start: Some(start),
        stop: Some(stop),
        steps: Some(steps),
    })
}

/// `steps` evenly spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let step = (stop - start) / (steps - 1) as f64;
            (0..steps)
                .map(|i| {
                    if i + 1 == steps {
                        stop
                    } else {
                        start + step * i as f64
                    }
                })
                .collect()
        }
    }
}

/// Resolve the sweep grid of an experiment from the config's `[sweep]` table.
pub fn resolve_grid(experiment: Experiment, config: &RunConfig) -> Result<Vec<f64>, CliError> {
    let (variable, start, stop, steps) = experiment
        .default_grid()
        .ok_or_else(|| CliError::Usage(format!("{} takes no sweep", experiment.name())))?;
    let spec = config.sweep.clone().unwrap_or_default();
    if let Some(v) = &spec.variable {
        if v != variable {
            return Err(CliError::Usage(format!(
                "{} sweeps `{variable}`, but the config asks for `{v}`",
                experiment.name()
            )));
        }
    }
    let start = spec.start.unwrap_or(start);
    let stop = spec.stop.unwrap_or(stop);
    let steps = spec.steps.unwrap_or(steps);
    if start > stop {
        return Err(CliError::Usage(format!(
            "sweep start {start} exceeds stop {stop}"
        )));
    }
    let grid = linspace(start, stop, steps);
    let (lo, hi) = match variable {
        "phi" => (0.0, FRAC_PI_2),
        "theta" => (0.0, TAU),
        "n_elements" => (1.0, f64::INFINITY),
        _ => (0.0, f64::INFINITY),
    };
    if let Some(bad) = grid.iter().find(|v| **v < lo - 1e-12 || **v > hi + 1e-12) {
        return Err(CliError::Usage(format!(
            "{variable} grid value {bad} outside [{lo}, {hi}]"
        )));
    }
    Ok(grid)
}

/// In-memory CSV with header, comment block and rows.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub comments: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl CsvTable {
    fn new(header: &[&str]) -> Self {
        Self {
            header: header.iter().map(|s| s.to_string()).collect(),
            comments: Vec::new(),
            rows: Vec::new(),
        }
    }

    fn comment(&mut self, line: impl Into<String>) {
        self.comments.push(line.into());
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for c in &self.comments {
            for line in c.lines() {
                out.push_str("# ");
                out.push_str(line);
                out.push('\n');
            }
        }
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Column `name` of every row parsed as `f64`; empty cells become `None`.
    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i].parse().ok()).collect())
    }
}

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.15e}")
}

fn preamble(table: &mut CsvTable, experiment: Experiment, loaded: &LoadedConfig) {
    table.comment(TOOL_VERSION);
    table.comment(format!("experiment: {}", experiment.name()));
    table.comment("resolved configuration:");
    table.comment(loaded.config.to_toml());
    let defaulted = if loaded.defaulted.is_empty() {
        "none".to_string()
    } else {
        loaded.defaulted.join(", ")
    };
    table.comment(format!("defaults used: {defaulted}"));
    if loaded.config.geometry.far_field_warning() {
        table.comment(
            "warning: distance_m < 5 * max(radius); far-field closed forms are unreliable",
        );
    }
}

/// `max_m log10 |closed - direct|` against the number of transmit elements.
pub fn run_error_sweep(loaded: &LoadedConfig) -> Result<CsvTable, CliError> {
    let config = &loaded.config;
    let grid = resolve_grid(Experiment::ErrorSweep, config)?;
    let mut sizes: Vec<usize> = Vec::new();
    for v in &grid {
        let n = v.round();
        if (v - n).abs() > 1e-9 {
            return Err(CliError::Usage(format!(
                "n_elements grid value {v} is not an integer"
            )));
        }
        let n = n as usize;
        if !sizes.contains(&n) {
            sizes.push(n);
        }
    }

    let mut table = CsvTable::new(&["n_elements", "mode", "log10_error"]);
    preamble(&mut table, Experiment::ErrorSweep, loaded);
    table.comment(
        "log10_error is the maximum over receive elements of log10 |closed form - direct sum|",
    );

    let results = sizes
        .par_iter()
        .map(|&n| -> Result<Vec<(i32, Option<f64>)>, CliError> {
            let g = config.geometry.with_n_tx(n)?;
            let modes = g.mode_index_set();
            ERROR_SWEEP_MODES
                .map(|l| {
                    if modes.contains(l) {
                        Ok((l, Some(max_approximation_error(&g, l)?)))
                    } else {
                        Ok((l, None))
                    }
                })
                .collect()
        })
        .collect::<Result<Vec<_>, _>>()?;

    for (&n, per_mode) in sizes.iter().zip(results) {
        if n % 2 == 1 {
            table.comment(format!(
                "note: n_elements={n} is odd; its mode set has {} modes",
                n - 1
            ));
        }
        for (l, err) in per_mode {
            match err {
                Some(e) => table
                    .rows
                    .push(vec![n.to_string(), l.to_string(), fmt_f64(e)]),
                None => table.comment(format!(
                    "excluded: n_elements={n} mode={l} is outside the mode set"
                )),
            }
        }
    }
    Ok(table)
}

/// `|h̃_ml|` (closed form) against `φ` or `θ`, for the first receive elements.
pub fn run_gain_sweep(
    loaded: &LoadedConfig,
    variable: SweepVariable,
) -> Result<CsvTable, CliError> {
    let experiment = match variable {
        SweepVariable::Phi => Experiment::GainVsPhi,
        SweepVariable::Theta => Experiment::GainVsTheta,
        SweepVariable::Distance => {
            return Err(CliError::Usage("gain sweeps run over phi or theta".into()));
        }
    };
    let config = &loaded.config;
    let grid = resolve_grid(experiment, config)?;
    let elements = GAIN_SWEEP_ELEMENTS.min(config.geometry.n_rx());
    let modes = config.geometry.mode_index_set();

    let mut table = CsvTable::new(&[variable.name(), "m", "mode", "gain_magnitude"]);
    preamble(&mut table, experiment, loaded);
    table.comment(
        "m is the 1-based receive element index; gain_magnitude is |closed-form mode gain|",
    );

    let points: Vec<Result<Vec<f64>, crate::Error>> = grid
        .par_iter()
        .map(|&value| {
            let g = variable.apply(&config.geometry, value)?;
            let f = ModeGainFactors::new(&g)?;
            let mut out = Vec::with_capacity(elements * modes.len());
            for m in 0..elements {
                for l in modes.iter() {
                    out.push(f.mode_gain(m, l)?.norm());
                }
            }
            Ok(out)
        })
        .collect();

    for (&value, point) in grid.iter().zip(points) {
        match point {
            Ok(gains) => {
                let mut it = gains.into_iter();
                for m in 0..elements {
                    for l in modes.iter() {
                        let gain = it.next().expect("one gain per (m, l)");
                        table.rows.push(vec![
                            fmt_f64(value),
                            (m + 1).to_string(),
                            l.to_string(),
                            fmt_f64(gain),
                        ]);
                    }
                }
            }
            Err(e) => {
                table.comment(format!("gap: {}={} ({e})", variable.name(), fmt_f64(value)));
                for m in 0..elements {
                    for l in modes.iter() {
                        table.rows.push(vec![
                            fmt_f64(value),
                            (m + 1).to_string(),
                            l.to_string(),
                            String::new(),
                        ]);
                    }
                }
            }
        }
    }
    Ok(table)
}

/// Spectrum efficiency against the tilt `φ`.
pub fn run_se_sweep(loaded: &LoadedConfig) -> Result<CsvTable, CliError> {
    let config = &loaded.config;
    let grid = resolve_grid(Experiment::SeVsPhi, config)?;
    let g = &config.geometry;
    let b = &config.budget;
    let budget = LinkBudget::uniform(g, b.mode_power, b.noise_variance, b.seed)?;
    let points = se_sweep(g, SweepVariable::Phi, &grid, &budget);

    let mut table = CsvTable::new(&["phi", "spectrum_efficiency"]);
    preamble(&mut table, Experiment::SeVsPhi, loaded);
    table.comment(format!(
        "budget: mode_power={} on all {} modes, noise_variance={} on all {} receive elements",
        fmt_f64(b.mode_power),
        g.mode_index_set().len(),
        fmt_f64(b.noise_variance),
        g.n_rx()
    ));
    table.comment("absolute values and the argmax location depend on the chosen budget");

    let mut best: Option<(f64, f64)> = None;
    for p in &points {
        match &p.spectrum_efficiency {
            Ok(se) => {
                if best.is_none_or(|(_, b)| *se > b) {
                    best = Some((p.value, *se));
                }
                table.rows.push(vec![fmt_f64(p.value), fmt_f64(*se)]);
            }
            Err(e) => {
                table.comment(format!("gap: phi={} ({e})", fmt_f64(p.value)));
                table.rows.push(vec![fmt_f64(p.value), String::new()]);
            }
        }
    }
    if let Some((phi, se)) = best {
        table.comment(format!(
            "argmax: phi={} spectrum_efficiency={}",
            fmt_f64(phi),
            fmt_f64(se)
        ));
    }
    Ok(table)
}

/// Output of the demodulation demo.
#[derive(Debug, Clone, PartialEq)]
pub struct DemuxDemo {
    pub report: String,
    pub table: CsvTable,
}

/// Channel used to produce the received samples in the demo.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DemoChannel {
    /// Closed-form mode gains applied directly to the symbols.
    Model,
    /// Element-level gains applied to the synthesized transmit samples.
    Element(ChannelVariant),
}

impl DemoChannel {
    pub const ALL: [DemoChannel; 3] = [
        DemoChannel::Model,
        DemoChannel::Element(ChannelVariant::FarField),
        DemoChannel::Element(ChannelVariant::Exact),
    ];

    pub fn name(self) -> &'static str {
        match self {
            DemoChannel::Model => "model",
            DemoChannel::Element(v) => v.name(),
        }
    }
}

/// Synthesize, propagate, demultiplex and compare symbols for every channel
/// variant, with and without noise.
pub fn run_demux_demo(loaded: &LoadedConfig) -> Result<DemuxDemo, CliError> {
    let config = &loaded.config;
    let g = &config.geometry;
    let b = &config.budget;
    let modes = g.mode_index_set();
    let symbols = ModeSymbolVector::random_unit_power(modes, b.seed);
    let noise = NoiseModel::uniform(g.n_rx(), b.noise_variance, b.seed)?;
    let factors = ModeGainFactors::new(g)?;
    let model = ModeChannelMatrix::closed_form(g)?;

    let mut table = CsvTable::new(&["channel_variant", "noise", "mode", "abs_error"]);
    preamble(&mut table, Experiment::DemuxDemo, loaded);
    table.comment(
        "abs_error is |estimated symbol - transmitted symbol| per mode; symbols have unit modulus",
    );

    let mut report = String::new();
    writeln!(report, "{TOOL_VERSION} demux-demo").ok();
    writeln!(
        report,
        "N={} M={} phi={:.6} theta={:.6} d={} noise_variance={} seed={}",
        g.n_tx(),
        g.n_rx(),
        g.tilt_phi(),
        g.bearing_theta(),
        g.center_distance(),
        b.noise_variance,
        b.seed
    )
    .ok();

    for (trial, channel) in DemoChannel::ALL.into_iter().enumerate() {
        let mode_channel = match channel {
            DemoChannel::Model => model.clone(),
            DemoChannel::Element(v) => {
                ModeChannelMatrix::from_elements(&ChannelMatrix::build(g, v)?, g)?
            }
        };
        match crosstalk_matrix_for(&factors, &mode_channel) {
            Ok(xt) => {
                writeln!(
                    report,
                    "[{}] crosstalk max off-diagonal: {:.6e}",
                    channel.name(),
                    max_leakage(&xt)
                )
                .ok();
            }
            Err(e) => {
                writeln!(report, "[{}] crosstalk unavailable: {e}", channel.name()).ok();
            }
        }

        for noisy in [false, true] {
            let draw = noisy.then_some((&noise, trial as u64));
            let rx = match channel {
                DemoChannel::Model => propagate_modes(&symbols, &model, draw)?,
                DemoChannel::Element(v) => {
                    let tx = synthesize_transmit(&symbols, g)?;
                    propagate(&tx, &ChannelMatrix::build(g, v)?, draw)?
                }
            };
            let label = if noisy { "awgn" } else { "none" };
            let mut worst: f64 = 0.0;
            for (i, l) in modes.iter().enumerate() {
                match demultiplex_mode(&rx, &factors, l) {
                    Ok((_, _, estimate)) => {
                        let err = (estimate - symbols.symbols()[i]).norm();
                        worst = worst.max(err);
                        table.rows.push(vec![
                            channel.name().into(),
                            label.into(),
                            l.to_string(),
                            fmt_f64(err),
                        ]);
                    }
                    Err(e) => {
                        writeln!(report, "[{}/{label}] mode {l}: {e}", channel.name()).ok();
                        table.comment(format!(
                            "unobservable: channel={} noise={label} mode={l} ({e})",
                            channel.name()
                        ));
                        table.rows.push(vec![
                            channel.name().into(),
                            label.into(),
                            l.to_string(),
                            String::new(),
                        ]);
                    }
                }
            }
            writeln!(
                report,
                "[{}/{label}] max |s_hat - s| = {worst:.6e}",
                channel.name()
            )
            .ok();
        }
    }
    Ok(DemuxDemo { report, table })
}

/// Load a config for `experiment` and apply a seed override.
pub fn load_for(
    experiment: Experiment,
    text: &str,
    seed: Option<u64>,
    grid: Option<SweepSpec>,
) -> Result<LoadedConfig, CliError> {
    let mut loaded = load_config(text, &experiment.geometry_defaults())?;
    if let Some(seed) = seed {
        if seed > i64::MAX as u64 {
            return Err(CliError::Usage(format!(
                "seed {seed} exceeds the TOML integer range"
            )));
        }
        loaded.config.budget.seed = seed;
        loaded.defaulted.retain(|k| *k != "seed");
    }
    if let Some(grid) = grid {
        let mut spec = loaded.config.sweep.take().unwrap_or_default();
        spec.start = grid.start;
        spec.stop = grid.stop;
        spec.steps = grid.steps;
        loaded.config.sweep = Some(spec);
    }
    Ok(loaded)
}

/// Run one experiment, returning the CSV text and an optional text report.
pub fn run(
    experiment: Experiment,
    loaded: &LoadedConfig,
) -> Result<(String, Option<String>), CliError> {
    Ok(match experiment {
        Experiment::ErrorSweep => (run_error_sweep(loaded)?.render(), None),
        Experiment::GainVsPhi => (run_gain_sweep(loaded, SweepVariable::Phi)?.render(), None),
        Experiment::GainVsTheta => (run_gain_sweep(loaded, SweepVariable::Theta)?.render(), None),
        Experiment::SeVsPhi => (run_se_sweep(loaded)?.render(), None),
        Experiment::DemuxDemo => {
            let demo = run_demux_demo(loaded)?;
            (demo.table.render(), Some(demo.report))
        }
    })
}
