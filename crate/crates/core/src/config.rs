//! Declarative experiment files (TOML) and their validation.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::multiuav::MultiUavConfig;
use crate::optimize::{GdConfig, PsoConfig};
use crate::propagation::{Band, HighShfConstants, LinkBudget, LowShfConstants, RadioParams};
use crate::scenario::{Building, UserHeight, UserZone};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    PenetrationCurve,
    WorstCasePowerCurve,
    AnglePowerCurve,
    GdSweep,
    PsoSweep,
    Table2,
    MultiUavCompare,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::PenetrationCurve => "penetration_curve",
            ExperimentKind::WorstCasePowerCurve => "worst_case_power_curve",
            ExperimentKind::AnglePowerCurve => "angle_power_curve",
            ExperimentKind::GdSweep => "gd_sweep",
            ExperimentKind::PsoSweep => "pso_sweep",
            ExperimentKind::Table2 => "table2",
            ExperimentKind::MultiUavCompare => "multi_uav_compare",
        }
    }

    pub fn needs_sweep(self) -> bool {
        self != ExperimentKind::PenetrationCurve
    }

    fn needs_roster(self) -> bool {
        matches!(
            self,
            ExperimentKind::GdSweep
                | ExperimentKind::PsoSweep
                | ExperimentKind::Table2
                | ExperimentKind::MultiUavCompare
        )
    }
}

/// Evenly spaced samples `start, start + step, ...` up to `stop` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Samples {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Samples {
    pub fn validate(&self, name: &'static str) -> Result<()> {
        if !(self.step > 0.0) || !(self.start <= self.stop) || !self.stop.is_finite() {
            return Err(Error::invalid(
                name,
                format!(
                    "need start <= stop and step > 0, got {} to {} by {}",
                    self.start, self.stop, self.step
                ),
            ));
        }
        if (self.stop - self.start) / self.step > 1e7 {
            return Err(Error::invalid(name, "more than 10 million samples"));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        let n = ((self.stop - self.start) / self.step + 1e-9).floor() as usize;
        (0..=n).map(|i| self.start + i as f64 * self.step).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub kind: ExperimentKind,
    #[serde(default)]
    pub name: Option<String>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    /// Base scenario file whose sections this file extends.
    #[serde(default)]
    pub scenario: Option<PathBuf>,
    #[serde(default)]
    pub theta_deg: Option<Samples>,
    /// Standoff samples (m from the facing wall) for power curves.
    #[serde(default)]
    pub standoff_m: Option<Samples>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuildingSection {
    pub x_b: f64,
    pub y_b: f64,
    pub z_b: f64,
    #[serde(default = "default_floor_height")]
    pub floor_height: f64,
}

fn default_floor_height() -> f64 {
    5.0
}

impl Default for BuildingSection {
    fn default() -> Self {
        Self {
            x_b: 20.0,
            y_b: 50.0,
            z_b: 200.0,
            floor_height: 5.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Distribution {
    #[default]
    Symmetric,
    Uniform,
    Zoned,
    File,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct UsersSection {
    pub distribution: Distribution,
    pub users_per_floor: usize,
    pub height: UserHeight,
    pub seed: u64,
    pub zones: Vec<UserZone>,
    pub path: Option<PathBuf>,
}

impl Default for UsersSection {
    fn default() -> Self {
        Self {
            distribution: Distribution::Symmetric,
            users_per_floor: 20,
            height: UserHeight::FloorLevels,
            seed: 1,
            zones: Vec::new(),
            path: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadioSection {
    pub band: Band,
    pub frequency_ghz: f64,
    pub low_shf: LowShfConstants,
    pub high_shf: HighShfConstants,
}

impl Default for RadioSection {
    fn default() -> Self {
        Self {
            band: Band::LowShf,
            frequency_ghz: 2.0,
            low_shf: LowShfConstants::default(),
            high_shf: HighShfConstants::default(),
        }
    }
}

impl RadioSection {
    pub fn params(&self) -> RadioParams {
        RadioParams {
            carrier_frequency_ghz: self.frequency_ghz,
            band: self.band,
            low_shf: self.low_shf,
            high_shf: self.high_shf,
        }
    }
}

/// Per-case overrides of the base scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepCase {
    pub label: Option<String>,
    pub x_b: Option<f64>,
    pub y_b: Option<f64>,
    pub z_b: Option<f64>,
    pub floor_height: Option<f64>,
    pub band: Option<Band>,
    pub frequency_ghz: Option<f64>,
    pub distribution: Option<Distribution>,
    pub users_per_floor: Option<usize>,
    pub seed: Option<u64>,
    pub pso_seed: Option<u64>,
    pub kmeans_seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub building: BuildingSection,
    #[serde(default)]
    pub users: UsersSection,
    #[serde(default)]
    pub radio: RadioSection,
    #[serde(default)]
    pub budget: LinkBudget,
    #[serde(default)]
    pub gd: GdConfig,
    #[serde(default)]
    pub pso: PsoConfig,
    #[serde(default)]
    pub multi_uav: MultiUavConfig,
    #[serde(default)]
    pub sweep: Vec<SweepCase>,
}

/// Fully resolved scenario for one sweep case.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedCase {
    pub label: String,
    pub building: Building,
    pub radio: RadioParams,
    pub users: UsersSection,
    pub pso: PsoConfig,
    pub multi_uav: MultiUavConfig,
}

impl ExperimentConfig {
    pub fn name(&self) -> &str {
        self.experiment
            .name
            .as_deref()
            .unwrap_or(self.experiment.kind.name())
    }

    /// Replace every base seed (roster, PSO, k-means) with `seed`.
    pub fn override_seed(&mut self, seed: u64) {
        self.users.seed = seed;
        self.pso.seed = seed;
        self.multi_uav.kmeans_seed = seed;
        self.multi_uav.pso_seed = seed;
    }

    pub fn resolve(&self, index: usize) -> ResolvedCase {
        let case = &self.sweep[index];
        let building = Building {
            x_b: case.x_b.unwrap_or(self.building.x_b),
            y_b: case.y_b.unwrap_or(self.building.y_b),
            z_b: case.z_b.unwrap_or(self.building.z_b),
            floor_height: case.floor_height.unwrap_or(self.building.floor_height),
        };
        let mut radio = self.radio.params();
        radio.band = case.band.unwrap_or(radio.band);
        radio.carrier_frequency_ghz = case.frequency_ghz.unwrap_or(radio.carrier_frequency_ghz);
        let users = UsersSection {
            distribution: case.distribution.unwrap_or(self.users.distribution),
            users_per_floor: case.users_per_floor.unwrap_or(self.users.users_per_floor),
            seed: case.seed.unwrap_or(self.users.seed),
            ..self.users.clone()
        };
        let pso = PsoConfig {
            seed: case.pso_seed.unwrap_or(self.pso.seed),
            ..self.pso
        };
        let multi_uav = MultiUavConfig {
            kmeans_seed: case.kmeans_seed.unwrap_or(self.multi_uav.kmeans_seed),
            pso_seed: case.pso_seed.unwrap_or(self.multi_uav.pso_seed),
            ..self.multi_uav
        };
        let label = case.label.clone().unwrap_or_else(|| format!("case{}", index + 1));
        ResolvedCase {
            label,
            building,
            radio,
            users,
            pso,
            multi_uav,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: Option<usize>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "line {l}: {}", self.message),
            None => f.write_str(&self.message),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub errors: Vec<Diagnostic>,
    pub warnings: Vec<Diagnostic>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

/// Line of `key = ...` inside `[section]` (or the n-th `[[sweep]]` table).
fn locate(source: &str, section: &str, sweep_index: Option<usize>, key: &str) -> Option<usize> {
    let mut current = String::new();
    let mut sweeps_seen = 0usize;
    let mut header_line = None;
    for (i, raw) in source.lines().enumerate() {
        let line = raw.trim();
        if let Some(h) = line.strip_prefix("[[").and_then(|l| l.split("]]").next()) {
            current = h.trim().to_string();
            if current == "sweep" {
                sweeps_seen += 1;
            }
        } else if let Some(h) = line.strip_prefix('[').and_then(|l| l.split(']').next()) {
            current = h.trim().to_string();
        } else {
            let in_section = current == section
                && sweep_index.is_none_or(|n| current == "sweep" && sweeps_seen == n + 1);
            if !in_section {
                continue;
            }
            let name = line.split('=').next().unwrap_or("").trim();
            if line.contains('=') && name == key {
                return Some(i + 1);
            }
            continue;
        }
        let matches_header = current == section
            && sweep_index.is_none_or(|n| sweeps_seen == n + 1);
        if matches_header && header_line.is_none() {
            header_line = Some(i + 1);
        }
    }
    header_line
}

struct Checker<'a> {
    source: &'a str,
    report: ValidationReport,
}

impl Checker<'_> {
    fn push(&mut self, warn: bool, section: &str, sweep: Option<usize>, key: &str, message: String) {
        let d = Diagnostic {
            line: locate(self.source, section, sweep, key),
            message,
        };
        if warn {
            self.report.warnings.push(d);
        } else {
            self.report.errors.push(d);
        }
    }

    fn check(&mut self, section: &str, sweep: Option<usize>, key: &str, r: Result<()>) {
        if let Err(e) = r {
            let key = match &e {
                Error::InvalidParameter { name, .. } if !name.contains(' ') => *name,
                _ => key,
            };
            self.push(false, section, sweep, key, e.to_string());
        }
    }
}

fn parse_error(source: &str, e: &toml::de::Error) -> Diagnostic {
    let line = e
        .span()
        .map(|s| source[..s.start.min(source.len())].matches('\n').count() + 1);
    Diagnostic {
        line,
        message: e.message().to_string(),
    }
}

/// Parse without semantic checks. Relative paths stay relative to the file.
pub fn parse_config(source: &str) -> std::result::Result<ExperimentConfig, Diagnostic> {
    toml::from_str(source).map_err(|e| parse_error(source, &e))
}

/// Semantic checks of a parsed config. `base_dir` resolves roster paths.
pub fn check_config(config: &ExperimentConfig, source: &str, base_dir: &Path) -> ValidationReport {
    let mut c = Checker {
        source,
        report: ValidationReport::default(),
    };
    let kind = config.experiment.kind;
    let section_sweeps: Vec<Option<usize>> = if config.sweep.is_empty() {
        vec![None]
    } else {
        (0..config.sweep.len()).map(Some).collect()
    };
    if kind.needs_sweep() && config.sweep.is_empty() {
        c.push(
            false,
            "experiment",
            None,
            "kind",
            format!("`{}` needs at least one [[sweep]] case", kind.name()),
        );
    }
    if kind == ExperimentKind::PenetrationCurve || kind == ExperimentKind::AnglePowerCurve {
        match &config.experiment.theta_deg {
            Some(s) => {
                c.check("experiment", None, "theta_deg", s.validate("theta_deg"));
                if s.start < 0.0 || s.stop > 90.0 {
                    c.push(false, "experiment", None, "theta_deg", "angles must lie in [0, 90] deg".into());
                }
                if kind == ExperimentKind::AnglePowerCurve && s.start <= 0.0 {
                    c.push(false, "experiment", None, "theta_deg", "angle samples must be positive".into());
                }
            }
            None => c.push(
                false,
                "experiment",
                None,
                "kind",
                format!("`{}` needs experiment.theta_deg samples", kind.name()),
            ),
        }
    }
    if kind == ExperimentKind::WorstCasePowerCurve {
        match &config.experiment.standoff_m {
            Some(s) => {
                c.check("experiment", None, "standoff_m", s.validate("standoff_m"));
                if s.start < 0.0 {
                    c.push(false, "experiment", None, "standoff_m", "standoff must be non-negative".into());
                }
            }
            None => c.push(
                false,
                "experiment",
                None,
                "kind",
                "`worst_case_power_curve` needs experiment.standoff_m samples".into(),
            ),
        }
    }
    c.check("budget", None, "noise_dbm", config.budget.validate());
    c.check("gd", None, "step_size", config.gd.validate());
    c.check("pso", None, "kappa", config.pso.validate());
    if kind == ExperimentKind::MultiUavCompare {
        c.check("multi_uav", None, "max_power_w", config.multi_uav.validate());
    }
    for idx in section_sweeps {
        let case = match idx {
            Some(i) => config.resolve(i),
            None => ResolvedCase {
                label: "base".into(),
                building: Building {
                    x_b: config.building.x_b,
                    y_b: config.building.y_b,
                    z_b: config.building.z_b,
                    floor_height: config.building.floor_height,
                },
                radio: config.radio.params(),
                users: config.users.clone(),
                pso: config.pso,
                multi_uav: config.multi_uav,
            },
        };
        let (bsec, rsec, usec) = if idx.is_some() {
            ("sweep", "sweep", "sweep")
        } else {
            ("building", "radio", "users")
        };
        let key_or = |own: bool, key: &'static str, base: &'static str| if own { key } else { base };
        let b = &case.building;
        let sweep = idx.map(|i| &config.sweep[i]);
        for (name, value, own) in [
            ("x_b", b.x_b, sweep.is_some_and(|s| s.x_b.is_some())),
            ("y_b", b.y_b, sweep.is_some_and(|s| s.y_b.is_some())),
            ("z_b", b.z_b, sweep.is_some_and(|s| s.z_b.is_some())),
            ("floor_height", b.floor_height, sweep.is_some_and(|s| s.floor_height.is_some())),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                let (section, at) = if own { (bsec, idx) } else { ("building", None) };
                c.push(
                    false,
                    section,
                    at,
                    name,
                    format!("{}: {name} must be positive, got {value}", case.label),
                );
            }
        }
        if b.validate().is_ok() {
            for w in b.warnings() {
                c.push(true, "building", None, "z_b", format!("{}: {w}", case.label));
            }
        }
        let freq_own = sweep.is_some_and(|s| s.frequency_ghz.is_some());
        match case.radio.validate() {
            Err(e) => c.push(
                false,
                if freq_own { rsec } else { "radio" },
                if freq_own { idx } else { None },
                "frequency_ghz",
                format!("{}: {e}", case.label),
            ),
            Ok(()) => {
                for w in case.radio.warnings() {
                    c.push(
                        true,
                        if freq_own { rsec } else { "radio" },
                        if freq_own { idx } else { None },
                        key_or(freq_own, "frequency_ghz", "band"),
                        format!("{}: {w}", case.label),
                    );
                }
            }
        }
        if kind.needs_roster() {
            let u = &case.users;
            let upf_own = sweep.is_some_and(|s| s.users_per_floor.is_some());
            let (usec, uidx) = if upf_own { (usec, idx) } else { ("users", None) };
            match u.distribution {
                Distribution::Symmetric if u.users_per_floor == 0 || u.users_per_floor % 4 != 0 => {
                    c.push(
                        false,
                        usec,
                        uidx,
                        "users_per_floor",
                        format!(
                            "{}: symmetric rosters need a positive multiple of 4 users per floor, got {}",
                            case.label, u.users_per_floor
                        ),
                    )
                }
                Distribution::Uniform if u.users_per_floor == 0 => c.push(
                    false,
                    usec,
                    uidx,
                    "users_per_floor",
                    format!("{}: users_per_floor must be at least 1", case.label),
                ),
                Distribution::Zoned => {
                    if u.zones.is_empty() {
                        c.push(false, "users", None, "zones", "zoned distribution needs [[users.zones]]".into());
                    }
                    for z in &u.zones {
                        if !(z.z_min >= 0.0 && z.z_min < z.z_max && z.z_max <= b.z_b) {
                            c.push(
                                false,
                                "users",
                                None,
                                "zones",
                                format!("{}: zone [{}, {}] is not a slab of the building", case.label, z.z_min, z.z_max),
                            );
                        }
                    }
                }
                Distribution::File => match &u.path {
                    None => c.push(false, "users", None, "distribution", "file distribution needs users.path".into()),
                    Some(p) if !base_dir.join(p).is_file() => c.push(
                        false,
                        "users",
                        None,
                        "path",
                        format!("roster file {} not found", base_dir.join(p).display()),
                    ),
                    Some(_) => {}
                },
                _ => {}
            }
        }
        if kind == ExperimentKind::WorstCasePowerCurve && case.radio.band == Band::LowShf {
            if let Err(e) = crate::placement::worst_case_angle_low_shf(&case.radio.low_shf) {
                c.push(false, "radio", None, "low_shf", format!("{}: {e}", case.label));
            }
        }
    }
    c.report
}

/// A config file together with where it came from.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub path: PathBuf,
    pub source: String,
    pub config: ExperimentConfig,
}

impl LoadedConfig {
    pub fn base_dir(&self) -> PathBuf {
        self.path.parent().map(Path::to_path_buf).unwrap_or_default()
    }
}

fn merge(base: toml::Table, over: toml::Table) -> toml::Table {
    let mut out = base;
    for (k, v) in over {
        match (out.remove(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => {
                out.insert(k, toml::Value::Table(merge(b, o)));
            }
            (_, v) => {
                out.insert(k, v);
            }
        }
    }
    out
}

/// Read a config file. When `experiment.scenario` names another file, that
/// file's tables are used as defaults underneath this one.
pub fn load_config(path: &Path) -> Result<std::result::Result<LoadedConfig, Diagnostic>> {
    let source = std::fs::read_to_string(path).map_err(|e| Error::Config {
        path: path.to_path_buf(),
        message: format!("cannot read: {e}"),
    })?;
    let table: toml::Table = match toml::from_str(&source) {
        Ok(t) => t,
        Err(e) => return Ok(Err(parse_error(&source, &e))),
    };
    let scenario = table
        .get("experiment")
        .and_then(|e| e.get("scenario"))
        .and_then(|s| s.as_str())
        .map(PathBuf::from);
    let merged = match scenario {
        Some(rel) => {
            let base_path = path.parent().unwrap_or(Path::new(".")).join(&rel);
            let base_source = std::fs::read_to_string(&base_path).map_err(|e| Error::Config {
                path: base_path.clone(),
                message: format!("cannot read scenario: {e}"),
            })?;
            let base: toml::Table = match toml::from_str(&base_source) {
                Ok(t) => t,
                Err(e) => {
                    let mut d = parse_error(&base_source, &e);
                    d.message = format!("in scenario {}: {}", base_path.display(), d.message);
                    return Ok(Err(d));
                }
            };
            merge(base, table)
        }
        None => table,
    };
    let config: ExperimentConfig = match merged.try_into() {
        Ok(c) => c,
        Err(e) => {
            let e: toml::de::Error = e;
            // The merged table has no spans; re-parse the file for a line.
            let line = match toml::from_str::<ExperimentConfig>(&source) {
                Err(direct) => parse_error(&source, &direct).line,
                Ok(_) => None,
            };
            return Ok(Err(Diagnostic {
                line,
                message: e.message().to_string(),
            }));
        }
    };
    Ok(Ok(LoadedConfig {
        path: path.to_path_buf(),
        source,
        config,
    }))
}

/// Full schema and range check of a config file. Never runs a computation.
pub fn validate_config(path: &Path) -> Result<ValidationReport> {
    Ok(match load_config(path)? {
        Ok(loaded) => check_config(&loaded.config, &loaded.source, &loaded.base_dir()),
        Err(d) => ValidationReport {
            errors: vec![d],
            warnings: Vec::new(),
        },
    })
}
