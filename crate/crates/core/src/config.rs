//! Flat `key = value` run configuration.
//!
//! One assignment per line, `#` starts a comment, blank lines are ignored.
//! Keys are the field names listed in [`KEYS`]; every key except
//! `cot_theta` and `t_end` has a default. Lists (`snapshot_times`) are
//! comma-separated.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::integrator::StepControl;
use crate::model::{equilibrium_state, BulkDiffusion, ModelParams, Variant};
use crate::output;
use crate::rhs::State;
use crate::spatial::Grid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InitialKind {
    Equilibrium,
    CosineH,
    CustomFile,
}

impl InitialKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InitialKind::Equilibrium => "equilibrium",
            InitialKind::CosineH => "cosine_h",
            InitialKind::CustomFile => "custom_file",
        }
    }
}

impl FromStr for InitialKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "equilibrium" => Ok(InitialKind::Equilibrium),
            "cosine_h" => Ok(InitialKind::CosineH),
            "custom_file" => Ok(InitialKind::CustomFile),
            other => Err(Error::Config(format!(
                "unknown ic_kind `{other}` (expected equilibrium, cosine_h or custom_file)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InitialCondition {
    pub kind: InitialKind,
    /// Relative thickness amplitude `A` of `h = 1 + A·cos(2π·m·x/L)`.
    pub amplitude: f64,
    pub mode: usize,
    /// Snapshot CSV read by `custom_file`.
    pub file: Option<PathBuf>,
}

impl Default for InitialCondition {
    fn default() -> Self {
        InitialCondition {
            kind: InitialKind::CosineH,
            amplitude: 0.1,
            mode: 1,
            file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub params: ModelParams,
    pub variant: Variant,
    pub n: usize,
    pub initial: InitialCondition,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub output_dir: PathBuf,
    /// Spacing of `series.csv` rows in time; `0` records every accepted step.
    pub series_interval: f64,
    pub control: StepControl,
}

/// Every recognised key, in rendering order.
pub const KEYS: [&str; 31] = [
    "re",
    "fr",
    "cot_theta",
    "pe_b",
    "pe_s",
    "eps",
    "mr",
    "k_s",
    "kappa",
    "gamma_e",
    "ka",
    "domain_length",
    "legacy_source_mismatch",
    "bulk_diffusion",
    "variant",
    "n",
    "ic_kind",
    "ic_amplitude",
    "ic_mode",
    "ic_file",
    "t_end",
    "snapshot_times",
    "output_dir",
    "series_interval",
    "dt_init",
    "dt_min",
    "dt_max",
    "rel_tol",
    "abs_tol",
    "safety_factor",
    "max_steps",
];

/// Keys without a default.
pub const REQUIRED_KEYS: [&str; 2] = ["cot_theta", "t_end"];

impl RunConfig {
    /// Reference parameter set with the defaults of every optional key.
    pub fn reference(cot_theta: f64, t_end: f64) -> Self {
        RunConfig {
            params: ModelParams::reference(cot_theta),
            variant: Variant::Corrected,
            n: 256,
            initial: InitialCondition::default(),
            t_end,
            snapshot_times: Vec::new(),
            output_dir: PathBuf::from("out"),
            series_interval: 1.0,
            control: StepControl::default(),
        }
    }

    /// Checks every cross-field invariant.
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.control.validate()?;
        Grid::new(self.n, self.params.domain_length)?;
        if !(self.t_end >= 0.0 && self.t_end.is_finite()) {
            return Err(Error::Config(format!("t_end = {} must be finite and >= 0", self.t_end)));
        }
        if !(self.series_interval >= 0.0 && self.series_interval.is_finite()) {
            return Err(Error::Config("series_interval must be finite and >= 0".into()));
        }
        if let Some(t) = self.snapshot_times.iter().find(|t| !(**t >= 0.0 && **t <= self.t_end)) {
            return Err(Error::Config(format!("snapshot time {t} outside [0, t_end = {}]", self.t_end)));
        }
        if self.snapshot_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("snapshot_times must be strictly ascending".into()));
        }
        let ic = &self.initial;
        match ic.kind {
            InitialKind::CosineH => {
                if !(ic.amplitude.abs() < 1.0) {
                    return Err(Error::Config(format!(
                        "amplitude must keep h positive (|ic_amplitude| = {} >= 1)",
                        ic.amplitude.abs()
                    )));
                }
                if ic.mode == 0 || ic.mode >= self.n / 2 {
                    return Err(Error::Config(format!(
                        "ic_mode = {} outside [1, {}]",
                        ic.mode,
                        self.n / 2 - 1
                    )));
                }
            }
            InitialKind::CustomFile if ic.file.is_none() => {
                return Err(Error::Config("ic_kind = custom_file needs ic_file".into()));
            }
            _ => {}
        }
        Ok(())
    }

    /// Renders the configuration in the format read by [`parse_config`].
    pub fn render(&self) -> String {
        let p = &self.params;
        let c = &self.control;
        let mut out = String::new();
        let mut put = |k: &str, v: String| {
            let _ = writeln!(out, "{k} = {v}");
        };
        put("re", p.re.to_string());
        put("fr", p.fr.to_string());
        put("cot_theta", p.cot_theta.to_string());
        put("pe_b", p.pe_b.to_string());
        put("pe_s", p.pe_s.to_string());
        put("eps", p.eps.to_string());
        put("mr", p.mr.to_string());
        put("k_s", p.k_s.to_string());
        put("kappa", p.kappa.to_string());
        put("gamma_e", p.gamma_e.to_string());
        put("ka", p.ka.to_string());
        put("domain_length", p.domain_length.to_string());
        put("legacy_source_mismatch", p.legacy_source_mismatch.to_string());
        put("bulk_diffusion", p.bulk_diffusion.as_str().into());
        put("variant", self.variant.as_str().into());
        put("n", self.n.to_string());
        put("ic_kind", self.initial.kind.as_str().into());
        put("ic_amplitude", self.initial.amplitude.to_string());
        put("ic_mode", self.initial.mode.to_string());
        if let Some(f) = &self.initial.file {
            put("ic_file", f.display().to_string());
        }
        put("t_end", self.t_end.to_string());
        put(
            "snapshot_times",
            self.snapshot_times.iter().map(f64::to_string).collect::<Vec<_>>().join(", "),
        );
        put("output_dir", self.output_dir.display().to_string());
        put("series_interval", self.series_interval.to_string());
        put("dt_init", c.dt_init.to_string());
        put("dt_min", c.dt_min.to_string());
        put("dt_max", c.dt_max.to_string());
        put("rel_tol", c.rel_tol.to_string());
        put("abs_tol", c.abs_tol.to_string());
        put("safety_factor", c.safety_factor.to_string());
        put("max_steps", c.max_steps.to_string());
        out
    }
}

fn value<T: FromStr>(line: usize, key: &str, raw: &str) -> Result<T> {
    raw.parse().map_err(|_| Error::ConfigSyntax {
        line,
        message: format!("cannot parse `{raw}` as a value for `{key}`"),
    })
}

fn relabel(line: usize, err: Error) -> Error {
    match err {
        Error::Config(message) => Error::ConfigSyntax { line, message },
        other => other,
    }
}

/// Parses and validates a configuration text.
pub fn parse_config(text: &str) -> Result<RunConfig> {
    let mut cfg = RunConfig::reference(f64::NAN, f64::NAN);
    let mut seen: Vec<&str> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw_line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, raw)) = content.split_once('=') else {
            return Err(Error::ConfigSyntax {
                line,
                message: format!("expected `key = value`, found `{content}`"),
            });
        };
        let (key, raw) = (key.trim(), raw.trim());
        let Some(&known) = KEYS.iter().find(|k| **k == key) else {
            return Err(Error::ConfigSyntax {
                line,
                message: format!("unknown key `{key}`"),
            });
        };
        if seen.contains(&known) {
            return Err(Error::ConfigSyntax {
                line,
                message: format!("duplicate key `{key}`"),
            });
        }
        seen.push(known);

        let p = &mut cfg.params;
        let c = &mut cfg.control;
        match known {
            "re" => p.re = value(line, key, raw)?,
            "fr" => p.fr = value(line, key, raw)?,
            "cot_theta" => p.cot_theta = value(line, key, raw)?,
            "pe_b" => p.pe_b = value(line, key, raw)?,
            "pe_s" => p.pe_s = value(line, key, raw)?,
            "eps" => p.eps = value(line, key, raw)?,
            "mr" => p.mr = value(line, key, raw)?,
            "k_s" => p.k_s = value(line, key, raw)?,
            "kappa" => p.kappa = value(line, key, raw)?,
            "gamma_e" => p.gamma_e = value(line, key, raw)?,
            "ka" => p.ka = value(line, key, raw)?,
            "domain_length" => p.domain_length = value(line, key, raw)?,
            "legacy_source_mismatch" => p.legacy_source_mismatch = value(line, key, raw)?,
            "bulk_diffusion" => p.bulk_diffusion = raw.parse::<BulkDiffusion>().map_err(|e| relabel(line, e))?,
            "variant" => cfg.variant = raw.parse::<Variant>().map_err(|e| relabel(line, e))?,
            "n" => cfg.n = value(line, key, raw)?,
            "ic_kind" => cfg.initial.kind = raw.parse::<InitialKind>().map_err(|e| relabel(line, e))?,
            "ic_amplitude" => cfg.initial.amplitude = value(line, key, raw)?,
            "ic_mode" => cfg.initial.mode = value(line, key, raw)?,
            "ic_file" => cfg.initial.file = Some(PathBuf::from(raw)),
            "t_end" => cfg.t_end = value(line, key, raw)?,
            "snapshot_times" => {
                cfg.snapshot_times = raw
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| value(line, key, s))
                    .collect::<Result<_>>()?
            }
            "output_dir" => cfg.output_dir = PathBuf::from(raw),
            "series_interval" => cfg.series_interval = value(line, key, raw)?,
            "dt_init" => c.dt_init = value(line, key, raw)?,
            "dt_min" => c.dt_min = value(line, key, raw)?,
            "dt_max" => c.dt_max = value(line, key, raw)?,
            "rel_tol" => c.rel_tol = value(line, key, raw)?,
            "abs_tol" => c.abs_tol = value(line, key, raw)?,
            "safety_factor" => c.safety_factor = value(line, key, raw)?,
            "max_steps" => c.max_steps = value(line, key, raw)?,
            _ => unreachable!("every key in KEYS is handled"),
        }
    }

    let missing: Vec<String> = REQUIRED_KEYS
        .iter()
        .filter(|k| !seen.contains(k))
        .map(|k| k.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(Error::MissingKeys(missing));
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Reads and parses a configuration file; a relative `ic_file` is resolved
/// against the file's directory.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut cfg = parse_config(&text)?;
    if let (Some(file), Some(dir)) = (&cfg.initial.file, path.parent()) {
        if file.is_relative() {
            cfg.initial.file = Some(dir.join(file));
        }
    }
    Ok(cfg)
}

/// Initial state on `grid` described by `config.initial`.
pub fn build_initial_condition(config: &RunConfig, grid: &Grid) -> Result<State> {
    let eq = equilibrium_state(&config.params)?;
    let n = grid.n();
    let ic = &config.initial;
    match ic.kind {
        InitialKind::Equilibrium => Ok(State::uniform(n, &eq)),
        InitialKind::CosineH => {
            let k = 2.0 * std::f64::consts::PI * ic.mode as f64 / grid.length();
            let h = grid.sample(|x| eq.h_e + ic.amplitude * (k * x).cos());
            // χ = 0: the bulk starts at its interfacial concentration.
            let s = h.iter().map(|v| eq.phi_e * v).collect();
            Ok(State {
                h,
                q: vec![eq.q_e; n],
                s,
                gamma: vec![eq.gamma_eq; n],
            })
        }
        InitialKind::CustomFile => {
            let path = ic
                .file
                .as_deref()
                .ok_or_else(|| Error::Config("ic_kind = custom_file needs ic_file".into()))?;
            let snap = output::read_snapshot(path)?;
            if snap.x.len() != n {
                return Err(Error::Snapshot {
                    path: path.to_path_buf(),
                    message: format!("{} rows but the grid has {n} points", snap.x.len()),
                });
            }
            let state = snap.state();
            state.check(grid)?;
            Ok(state)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const REFERENCE: &str = "\
# reference parameters
re = 1.5
fr = 0.7071
cot_theta = 0
pe_b = 700
pe_s = 700
eps = 0.1
mr = 1
k_s = 1
kappa = 10
gamma_e = 0.1
ka = 0.75
domain_length = 20
t_end = 500   # horizon
";

    #[test]
    fn reference_config_echoes_parameters() {
        let cfg = parse_config(REFERENCE).unwrap();
        assert_eq!(cfg.params, ModelParams::reference(0.0));
        assert_eq!(cfg.n, 256);
        assert_eq!(cfg.variant, Variant::Corrected);
        assert_eq!(cfg.initial, InitialCondition::default());
        assert_eq!(cfg.t_end, 500.0);
    }

    #[test]
    fn empty_text_lists_required_keys() {
        match parse_config("") {
            Err(Error::MissingKeys(keys)) => assert_eq!(keys, REQUIRED_KEYS.map(String::from).to_vec()),
            other => panic!("{other:?}"),
        }
        match parse_config("t_end = 1") {
            Err(e @ Error::MissingKeys(_)) => assert!(e.to_string().contains("cot_theta")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn amplitude_must_keep_h_positive() {
        let err = parse_config(&format!("{REFERENCE}ic_amplitude = 1.5\n")).unwrap_err();
        assert!(err.to_string().contains("amplitude must keep h positive"), "{err}");
        assert!(parse_config(&format!("{REFERENCE}ic_amplitude = 1.5\nic_kind = equilibrium\n")).is_ok());
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let err = parse_config("cot_theta = 0\nnot an assignment\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 2, .. }), "{err}");
        let err = parse_config("cot_theta = 0\n\nwave_speed = 3\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 3, .. }), "{err}");
        assert!(err.to_string().contains("wave_speed"));
        let err = parse_config("cot_theta = x\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 1, .. }), "{err}");
        let err = parse_config("cot_theta = 0\ncot_theta = 1\nt_end=1").unwrap_err();
        assert!(err.to_string().contains("duplicate"));
        let err = parse_config("cot_theta = 0\nt_end = 1\nvariant = sideways\n").unwrap_err();
        assert!(matches!(err, Error::ConfigSyntax { line: 3, .. }), "{err}");
    }

    #[test]
    fn invariants_are_enforced() {
        for extra in [
            "snapshot_times = 10, 5",
            "snapshot_times = 600",
            "n = 255",
            "gamma_e = 1.2",
            "ic_kind = custom_file",
            "dt_min = 1",
            "series_interval = -1",
        ] {
            assert!(parse_config(&format!("{REFERENCE}{extra}\n")).is_err(), "{extra}");
        }
    }

    #[test]
    fn render_round_trips() {
        let mut cfg = parse_config(REFERENCE).unwrap();
        assert_eq!(parse_config(&cfg.render()).unwrap(), cfg);
        cfg.snapshot_times = vec![0.0, 0.1, 250.5, 500.0];
        cfg.params.fr = 0.1 + 0.2;
        cfg.params.bulk_diffusion = BulkDiffusion::Expanded;
        cfg.variant = Variant::Legacy;
        cfg.control.rel_tol = 3.3e-9;
        cfg.initial = InitialCondition {
            kind: InitialKind::CustomFile,
            amplitude: 0.25,
            mode: 3,
            file: Some("snapshots/start.csv".into()),
        };
        assert_eq!(parse_config(&cfg.render()).unwrap(), cfg);
    }

    #[test]
    fn cosine_initial_condition() {
        let cfg = parse_config(&format!("{REFERENCE}n = 64\n")).unwrap();
        let g = Grid::new(64, 20.0).unwrap();
        let s = build_initial_condition(&cfg, &g).unwrap();
        assert!((s.h[0] - 1.1).abs() < 1e-15);
        assert!((s.h[32] - 0.9).abs() < 1e-14);
        assert!((g.mean(&s.h) - 1.0).abs() < 1e-14);
        let (_, chi) = s.phi_chi(&cfg.params).unwrap();
        assert!(chi.iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn equilibrium_initial_condition_is_a_fixed_point() {
        let cfg = parse_config(&format!("{REFERENCE}ic_kind = equilibrium\nn = 32\n")).unwrap();
        let g = Grid::new(32, 20.0).unwrap();
        let s = build_initial_condition(&cfg, &g).unwrap();
        assert!(crate::rhs::validate_state(&s, &cfg.params).is_empty());
        let (t, _) = crate::rhs::eval_rhs(&s, &cfg.params, cfg.variant, &g).unwrap();
        assert!(t.max_abs() <= 1e-12);
    }
}
