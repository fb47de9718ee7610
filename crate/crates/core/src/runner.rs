//! Run orchestration: single runs, variant pairs and mode scans.

use std::fmt::Write as _;
use std::path::Path;
use std::time::{Duration, Instant};

use crate::config::{build_initial_condition, RunConfig};
use crate::diagnostics::{dispersion, total_mass, DiagnosticsRecord, GrowthRate};
use crate::error::{Error, Result};
use crate::integrator::{ImexStepper, Integrator, RunStatus};
use crate::model::Variant;
use crate::output::{self, SeriesWriter, Snapshot};
use crate::par;
use crate::rhs::State;
use crate::spatial::Grid;

pub const COMPARE_SERIES_FILE: &str = "compare_series.csv";
pub const COMPARE_GROWTH_FILE: &str = "compare_growth.csv";

pub const COMPARE_SERIES_COLUMNS: [&str; 13] = [
    "t",
    "m_total_legacy",
    "m_total_corrected",
    "rel_drift_legacy",
    "rel_drift_corrected",
    "gamma_min_legacy",
    "gamma_max_legacy",
    "gamma_min_corrected",
    "gamma_max_corrected",
    "h_min_legacy",
    "h_max_legacy",
    "h_min_corrected",
    "h_max_corrected",
];

pub const COMPARE_GROWTH_COLUMNS: [&str; 5] = ["mode", "k", "growth_legacy", "growth_corrected", "abs_diff"];

/// Something a simulation reports as it advances.
#[derive(Debug)]
pub enum Event<'a> {
    Record(&'a DiagnosticsRecord),
    Snapshot(f64, &'a State),
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub variant: Variant,
    pub status: RunStatus,
    pub t_final: f64,
    pub accepted: u64,
    pub rejected: u64,
    pub wall_time: Duration,
    /// Largest `|rel_drift|` over the recorded rows.
    pub max_abs_rel_drift: f64,
    pub last_record: DiagnosticsRecord,
    pub state: State,
}

/// Output times: series stride multiples, snapshot times and `t_end`, merged.
fn stop_times(config: &RunConfig) -> Vec<(f64, bool, bool)> {
    let t_end = config.t_end;
    let mut stops: Vec<(f64, bool, bool)> = Vec::new();
    if config.series_interval > 0.0 {
        let mut k = 1u64;
        loop {
            let t = k as f64 * config.series_interval;
            if t >= t_end * (1.0 - 1e-12) {
                break;
            }
            stops.push((t, true, false));
            k += 1;
        }
    }
    stops.push((t_end, true, false));
    for &t in &config.snapshot_times {
        if t > 0.0 {
            stops.push((t, false, true));
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut merged: Vec<(f64, bool, bool)> = Vec::with_capacity(stops.len());
    for (t, record, snap) in stops {
        match merged.last_mut() {
            Some(last) if (t - last.0).abs() <= 1e-12 * t.abs().max(1.0) => {
                // Snapshot times are kept exact.
                if snap {
                    last.0 = t;
                }
                last.1 |= record;
                last.2 |= snap;
            }
            _ => merged.push((t, record, snap)),
        }
    }
    merged
}

/// Integrates `config` under `variant`, feeding rows and snapshots to `sink`
/// in time order. The `variant` field of `config` is ignored.
pub fn simulate<F>(config: &RunConfig, variant: Variant, mut sink: F) -> Result<RunSummary>
where
    F: FnMut(Event<'_>) -> Result<()>,
{
    config.validate()?;
    let started = Instant::now();
    let p = config.params;
    let grid = Grid::new(config.n, p.domain_length)?;
    let mut state = build_initial_condition(config, &grid)?;
    state.check(&grid)?;
    let m0 = total_mass(0.0, &state, &grid).m_total;

    let capture = |t: f64, s: &State, dt: f64| DiagnosticsRecord::capture(t, s, &p, variant, &grid, m0, dt);
    let mut max_drift = 0.0f64;
    let mut last = capture(0.0, &state, 0.0)?;
    sink(Event::Record(&last))?;
    if config.snapshot_times.first() == Some(&0.0) {
        sink(Event::Snapshot(0.0, &state))?;
    }

    let stepper = ImexStepper::new(p, variant, grid.clone())?;
    let mut integrator = Integrator::new(stepper, config.control)?;
    let every_step = config.series_interval == 0.0;
    let mut t = 0.0;
    let mut status = RunStatus::Completed;

    for (stop, record, snapshot) in stop_times(config) {
        if stop <= t {
            continue;
        }
        let mut failure: Option<Error> = None;
        status = integrator.advance(&mut state, &mut t, stop, |ts, s, dt| {
            if !every_step || failure.is_some() {
                return;
            }
            let res = capture(ts, s, dt).and_then(|row| {
                max_drift = max_drift.max(row.mass.relative_drift.abs());
                last = row;
                sink(Event::Record(&row))
            });
            if let Err(e) = res {
                failure = Some(e);
            }
        });
        if let Some(e) = failure {
            return Err(e);
        }
        let reached = status == RunStatus::Completed;
        if (record || !reached) && !every_step {
            let row = capture(t, &state, integrator.last_dt())?;
            max_drift = max_drift.max(row.mass.relative_drift.abs());
            last = row;
            sink(Event::Record(&row))?;
        }
        if !reached {
            break;
        }
        if snapshot {
            sink(Event::Snapshot(t, &state))?;
        }
    }

    Ok(RunSummary {
        variant,
        status,
        t_final: t,
        accepted: integrator.accepted(),
        rejected: integrator.rejected(),
        wall_time: started.elapsed(),
        max_abs_rel_drift: max_drift,
        last_record: last,
        state,
    })
}

/// Text of `run_meta.txt`.
pub fn render_meta(config: &RunConfig, summary: &RunSummary) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# filmsolve {}", crate::VERSION);
    let _ = writeln!(out, "# resolved configuration");
    out.push_str(&config.render());
    let _ = writeln!(out, "# outcome");
    let _ = writeln!(out, "# status = {}", summary.status.as_str());
    let _ = writeln!(out, "# exit_code = {}", summary.status.exit_code());
    let _ = writeln!(out, "# t_final = {}", summary.t_final);
    let _ = writeln!(out, "# accepted_steps = {}", summary.accepted);
    let _ = writeln!(out, "# rejected_steps = {}", summary.rejected);
    let _ = writeln!(out, "# wall_time_s = {:.3}", summary.wall_time.as_secs_f64());
    let _ = writeln!(out, "# max_abs_rel_drift = {}", output::fmt_f64(summary.max_abs_rel_drift));
    let _ = writeln!(out, "# parallel = {}", par::is_parallel());
    out
}

/// Runs `config` as-is and writes `series.csv`, snapshots and
/// `run_meta.txt` into `config.output_dir`.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    let dir = config.output_dir.as_path();
    output::ensure_dir(dir)?;
    let mut series = SeriesWriter::create(dir.join(output::SERIES_FILE))?;
    let params = config.params;
    let grid = Grid::new(config.n, params.domain_length)?;
    let summary = simulate(config, config.variant, |event| match event {
        Event::Record(row) => series.write(row),
        Event::Snapshot(t, state) => {
            let snap = Snapshot::capture(state, &params, &grid)?;
            output::write_snapshot(&dir.join(output::snapshot_file_name(t)), &snap)
        }
    })?;
    series.finish()?;
    output::write_text(&dir.join(output::META_FILE), &render_meta(config, &summary))?;
    Ok(summary)
}

/// Growth rates of both variants for modes `1..=max_mode`.
pub fn growth_pairs(config: &RunConfig, max_mode: usize) -> Result<Vec<(GrowthRate, GrowthRate)>> {
    let grid = Grid::new(config.n, config.params.domain_length)?;
    if max_mode == 0 || max_mode >= config.n / 2 {
        return Err(Error::Config(format!(
            "modes = {max_mode} outside [1, {}]",
            config.n / 2 - 1
        )));
    }
    let (legacy, corrected) = par::join(
        || dispersion(&config.params, Variant::Legacy, &grid, max_mode),
        || dispersion(&config.params, Variant::Corrected, &grid, max_mode),
    );
    Ok(legacy?.into_iter().zip(corrected?).collect())
}

#[derive(Debug, Clone)]
pub struct CompareSummary {
    pub legacy: RunSummary,
    pub corrected: RunSummary,
    pub max_growth_diff: f64,
}

impl CompareSummary {
    /// The more severe of the two run outcomes.
    pub fn status(&self) -> RunStatus {
        [self.legacy.status, self.corrected.status]
            .into_iter()
            .max_by_key(|s| match s {
                RunStatus::Completed => 0,
                RunStatus::MaxSteps => 1,
                RunStatus::BlowUp => 2,
            })
            .unwrap_or(RunStatus::Completed)
    }
}

/// Runs both variants from the same initial state, each into its own
/// subdirectory of `out`, then writes the joined comparison files.
pub fn compare_variants(config: &RunConfig, out: &Path) -> Result<CompareSummary> {
    if config.series_interval <= 0.0 {
        return Err(Error::Config(
            "compare needs series_interval > 0 so both series share their time stamps".into(),
        ));
    }
    output::ensure_dir(out)?;
    let per_variant = |variant: Variant| {
        let mut c = config.clone();
        c.variant = variant;
        c.output_dir = out.join(variant.as_str());
        run(&c)
    };
    let (legacy, corrected) = par::join(|| per_variant(Variant::Legacy), || per_variant(Variant::Corrected));
    let (legacy, corrected) = (legacy?, corrected?);

    let read = |v: Variant| output::read_series(&out.join(v.as_str()).join(output::SERIES_FILE));
    let (rows_l, rows_c) = (read(Variant::Legacy)?, read(Variant::Corrected)?);
    let joined = rows_l.iter().filter_map(|a| {
        let b = rows_c.iter().find(|b| b.t() == a.t())?;
        Some(vec![
            a.t(),
            a.mass.m_total,
            b.mass.m_total,
            a.mass.relative_drift,
            b.mass.relative_drift,
            a.extrema.gamma_min,
            a.extrema.gamma_max,
            b.extrema.gamma_min,
            b.extrema.gamma_max,
            a.extrema.h_min,
            a.extrema.h_max,
            b.extrema.h_min,
            b.extrema.h_max,
        ])
    });
    output::write_table(&out.join(COMPARE_SERIES_FILE), &COMPARE_SERIES_COLUMNS, joined)?;

    let pairs = growth_pairs(config, config.n / 2 - 1)?;
    let max_growth_diff = pairs
        .iter()
        .map(|(a, b)| (a.growth() - b.growth()).abs())
        .fold(0.0, f64::max);
    let rows = pairs.iter().map(|(a, b)| {
        vec![
            a.mode as f64,
            a.k,
            a.growth(),
            b.growth(),
            (a.growth() - b.growth()).abs(),
        ]
    });
    output::write_table(&out.join(COMPARE_GROWTH_FILE), &COMPARE_GROWTH_COLUMNS, rows)?;

    Ok(CompareSummary {
        legacy,
        corrected,
        max_growth_diff,
    })
}
