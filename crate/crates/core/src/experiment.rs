//! Experiment runner: turns a config into CSV tables.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::config::{
    check_config, load_config, Distribution, ExperimentConfig, ExperimentKind, LoadedConfig,
    ResolvedCase,
};
use crate::error::{Error, Result};
use crate::multiuav::{audit, plan_clustered, plan_uniform_split, ClusterPlan};
use crate::placement::{
    angle_power_curve, default_high_shf_bracket, place_center_line, place_pso, place_symmetric,
    solve_worst_case_low_shf, worst_case_angle_high_shf, worst_case_power_curve,
    worst_case_standoff,
};
use crate::propagation::{min_transmit_power_dbm, path_loss, Band};
use crate::scenario::{
    generate_symmetric_users, generate_uniform_users, generate_zoned_users, load_users, IndoorUser,
};

/// One CSV file: header with units, then rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: &'static str,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u64> for Cell {
    fn from(v: u64) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

macro_rules! row {
    ($($v:expr),* $(,)?) => { vec![$(Cell::from($v)),*] };
}

impl Table {
    fn new(name: &'static str, header: &'static [&'static str]) -> Self {
        Self {
            name,
            header,
            rows: Vec::new(),
        }
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(self.header)?;
        for row in &self.rows {
            if row.len() != self.header.len() {
                return Err(Error::invalid("row", format!("{} cells for {}", row.len(), self.name)));
            }
            let mut fields = Vec::with_capacity(row.len());
            for cell in row {
                fields.push(match cell {
                    Cell::Num(v) if !v.is_finite() => {
                        return Err(Error::non_finite(format!("column of {}", self.name)))
                    }
                    Cell::Num(v) => format!("{v}"),
                    Cell::Int(v) => v.to_string(),
                    Cell::Text(s) => s.clone(),
                });
            }
            w.write_record(&fields)?;
        }
        w.into_inner()
            .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))
    }
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub tables: Vec<Table>,
}

/// Load, validate and run an experiment file, writing its CSV outputs.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunSummary> {
    let loaded = match load_config(path)? {
        Ok(l) => l,
        Err(d) => {
            return Err(Error::Config {
                path: path.to_path_buf(),
                message: d.to_string(),
            })
        }
    };
    let report = check_config(&loaded.config, &loaded.source, &loaded.base_dir());
    for w in &report.warnings {
        log::warn!("{}: {w}", path.display());
    }
    if !report.is_valid() {
        let message = report
            .errors
            .iter()
            .map(ToString::to_string)
            .collect::<Vec<_>>()
            .join("; ");
        return Err(Error::Config {
            path: path.to_path_buf(),
            message,
        });
    }
    run_loaded(&loaded, opts)
}

pub fn run_loaded(loaded: &LoadedConfig, opts: &RunOptions) -> Result<RunSummary> {
    let mut config = loaded.config.clone();
    if let Some(seed) = opts.seed {
        config.override_seed(seed);
    }
    let name = config.name().to_string();
    let output_dir = opts
        .output_dir
        .clone()
        .or_else(|| config.experiment.output_dir.clone())
        .unwrap_or_else(|| PathBuf::from("out").join(&name));
    let tables = compute(&config, &loaded.base_dir())?;
    let files = write_tables(&tables, &output_dir)?;
    Ok(RunSummary {
        output_dir,
        files,
        tables,
    })
}

/// Write every table to `dir`, each through a temporary file and a rename.
pub fn write_tables(tables: &[Table], dir: &Path) -> Result<Vec<PathBuf>> {
    let encoded: Vec<(String, Vec<u8>)> = tables
        .iter()
        .map(|t| Ok((t.file_name(), t.to_csv()?)))
        .collect::<Result<_>>()?;
    std::fs::create_dir_all(dir)?;
    let mut files = Vec::new();
    for (name, bytes) in encoded {
        let path = dir.join(&name);
        let tmp = dir.join(format!(".{name}.tmp"));
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, &path)?;
        files.push(path);
    }
    Ok(files)
}

/// Run the experiment in memory.
pub fn compute(config: &ExperimentConfig, base_dir: &Path) -> Result<Vec<Table>> {
    let kind = config.experiment.kind;
    if kind.needs_sweep() && config.sweep.is_empty() {
        return Err(Error::invalid("sweep", format!("`{}` needs at least one case", kind.name())));
    }
    let cases: Vec<ResolvedCase> = (0..config.sweep.len()).map(|i| config.resolve(i)).collect();
    match kind {
        ExperimentKind::PenetrationCurve => penetration(config),
        ExperimentKind::WorstCasePowerCurve => gather(config.name(), &cases, 2, |c| power_curve(config, c)),
        ExperimentKind::AnglePowerCurve => gather(config.name(), &cases, 2, |c| angle_curve(config, c)),
        ExperimentKind::GdSweep => gather(config.name(), &cases, 2, |c| gd_case(config, c, base_dir)),
        ExperimentKind::PsoSweep => gather(config.name(), &cases, 2, |c| pso_case(config, c, base_dir)),
        ExperimentKind::Table2 => gather(config.name(), &cases, 1, |c| table2_case(config, c, base_dir)),
        ExperimentKind::MultiUavCompare => gather(config.name(), &cases, 3, |c| multi_case(c, base_dir)),
    }
    .map(|rows| assemble(kind, rows))?
}

type Rows = Vec<Vec<Cell>>;

/// Evaluate cases in parallel, concatenating per-table rows in case order.
fn gather(
    name: &str,
    cases: &[ResolvedCase],
    n_tables: usize,
    f: impl Fn(&ResolvedCase) -> Result<Vec<Rows>> + Sync,
) -> Result<Vec<Rows>> {
    let per_case: Vec<Result<Vec<Rows>>> = cases.par_iter().map(&f).collect();
    let mut out = vec![Rows::new(); n_tables];
    for (case, r) in cases.iter().zip(per_case) {
        let tables = r.map_err(|e| Error::Experiment {
            experiment: format!("{name}/{}", case.label),
            source: Box::new(e),
        })?;
        for (acc, rows) in out.iter_mut().zip(tables) {
            acc.extend(rows);
        }
    }
    Ok(out)
}

fn assemble(kind: ExperimentKind, rows: Vec<Rows>) -> Result<Vec<Table>> {
    let mut tables = match kind {
        ExperimentKind::PenetrationCurve => vec![Table::new(
            "penetration_curve",
            &["theta_deg", "penetration_loss_db"],
        )],
        ExperimentKind::WorstCasePowerCurve => vec![
            Table::new(
                "worst_case_power_curve",
                &["case", "band", "frequency_ghz", "z_b_m", "standoff_m", "x_m", "power_dbm"],
            ),
            Table::new(
                "worst_case_optimum",
                &[
                    "case",
                    "band",
                    "frequency_ghz",
                    "z_b_m",
                    "optimal_angle_deg",
                    "standoff_m",
                    "x_m",
                    "power_dbm",
                    "sampled_argmin_standoff_m",
                ],
            ),
        ],
        ExperimentKind::AnglePowerCurve => vec![
            Table::new(
                "angle_power_curve",
                &["case", "band", "frequency_ghz", "z_b_m", "theta_deg", "power_dbm"],
            ),
            Table::new(
                "angle_optimum",
                &[
                    "case",
                    "band",
                    "frequency_ghz",
                    "z_b_m",
                    "optimal_angle_deg",
                    "power_dbm",
                    "sampled_argmin_deg",
                ],
            ),
        ],
        ExperimentKind::GdSweep => vec![
            Table::new(
                "gd_trace",
                &["case", "iteration", "x_m", "standoff_m", "total_path_loss_db"],
            ),
            Table::new("gd_placements", PLACEMENT_HEADER),
        ],
        ExperimentKind::PsoSweep => vec![
            Table::new(
                "pso_trace",
                &["case", "iteration", "x_m", "y_m", "z_m", "standoff_m", "best_total_path_loss_db"],
            ),
            Table::new("pso_placements", PLACEMENT_HEADER),
        ],
        ExperimentKind::Table2 => vec![Table::new(
            "table2",
            &[
                "case",
                "distribution",
                "x_b_m",
                "y_b_m",
                "z_b_m",
                "method",
                "x_m",
                "standoff_m",
                "y_m",
                "z_m",
                "total_path_loss_db",
            ],
        )],
        ExperimentKind::MultiUavCompare => vec![
            Table::new(
                "multi_uav_summary",
                &[
                    "case",
                    "roster_seed",
                    "method",
                    "k",
                    "max_power_w",
                    "total_power_w",
                    "audit_violations",
                ],
            ),
            Table::new(
                "multi_uav_uavs",
                &["case", "method", "uav", "x_m", "y_m", "z_m", "power_w", "member_count"],
            ),
            Table::new("multi_uav_assignment", &["case", "method", "user_id", "uav"]),
        ],
    };
    for (t, r) in tables.iter_mut().zip(rows) {
        t.rows = r;
    }
    Ok(tables)
}

const PLACEMENT_HEADER: &[&str] = &[
    "case",
    "distribution",
    "x_b_m",
    "y_b_m",
    "z_b_m",
    "x_m",
    "y_m",
    "z_m",
    "standoff_m",
    "total_path_loss_db",
    "iterations",
    "converged",
];

fn distribution_name(d: Distribution) -> &'static str {
    match d {
        Distribution::Symmetric => "symmetric",
        Distribution::Uniform => "uniform",
        Distribution::Zoned => "zoned",
        Distribution::File => "file",
    }
}

fn band_name(b: Band) -> &'static str {
    match b {
        Band::LowShf => "low_shf",
        Band::HighShf => "high_shf",
    }
}

/// Roster for a resolved case.
pub fn build_roster(case: &ResolvedCase, base_dir: &Path) -> Result<Vec<IndoorUser>> {
    let u = &case.users;
    let b = &case.building;
    match u.distribution {
        Distribution::Symmetric => generate_symmetric_users(b, u.users_per_floor, u.height, u.seed),
        Distribution::Uniform => generate_uniform_users(b, u.users_per_floor, u.height, u.seed),
        Distribution::Zoned => generate_zoned_users(b, &u.zones, u.seed),
        Distribution::File => {
            let path = u
                .path
                .as_ref()
                .ok_or_else(|| Error::invalid("path", "file distribution needs users.path"))?;
            load_users(&base_dir.join(path), b)
        }
    }
}

fn penetration(config: &ExperimentConfig) -> Result<Vec<Rows>> {
    let samples = config
        .experiment
        .theta_deg
        .ok_or_else(|| Error::invalid("theta_deg", "missing"))?;
    let c = config.radio.high_shf;
    let rows = samples
        .values()
        .into_iter()
        .map(|t| Ok(row![t, crate::propagation::penetration_loss_high_shf(t, &c)?]))
        .collect::<Result<Rows>>()?;
    Ok(vec![rows])
}

fn power_curve(config: &ExperimentConfig, c: &ResolvedCase) -> Result<Vec<Rows>> {
    let standoffs = config
        .experiment
        .standoff_m
        .ok_or_else(|| Error::invalid("standoff_m", "missing"))?
        .values();
    let b = &c.building;
    let xs: Vec<f64> = standoffs.iter().map(|s| b.x_b + s).collect();
    let curve = worst_case_power_curve(b, &c.radio, &config.budget, &xs)?;
    let f = c.radio.carrier_frequency_ghz;
    let band = band_name(c.radio.band);
    let mut samples = Rows::new();
    for (s, (x, p)) in standoffs.iter().zip(&curve) {
        samples.push(row![c.label.as_str(), band, f, b.z_b, *s, *x, *p]);
    }
    let argmin = curve
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(x, _)| x - b.x_b)
        .unwrap_or(0.0);
    let angle = match c.radio.band {
        Band::LowShf => solve_worst_case_low_shf(b, &c.radio, &config.budget).map(|r| r.optimal_angle_deg),
        Band::HighShf => worst_case_angle_high_shf(b, &c.radio, &default_high_shf_bracket()),
    }?;
    let mut optimum = Rows::new();
    match worst_case_standoff(b, angle) {
        Ok(standoff) => {
            let x = b.x_b + standoff;
            let p = worst_case_power_curve(b, &c.radio, &config.budget, &[x])?[0].1;
            optimum.push(row![c.label.as_str(), band, f, b.z_b, angle, standoff, x, p, argmin]);
        }
        Err(e) => log::warn!("{}: no closed-form standoff: {e}", c.label),
    }
    Ok(vec![samples, optimum])
}

fn angle_curve(config: &ExperimentConfig, c: &ResolvedCase) -> Result<Vec<Rows>> {
    let thetas = config
        .experiment
        .theta_deg
        .ok_or_else(|| Error::invalid("theta_deg", "missing"))?
        .values();
    let b = &c.building;
    let curve = angle_power_curve(b, &c.radio, &config.budget, &thetas)?;
    let f = c.radio.carrier_frequency_ghz;
    let band = band_name(c.radio.band);
    let samples: Rows = curve
        .iter()
        .map(|(t, p)| row![c.label.as_str(), band, f, b.z_b, *t, *p])
        .collect();
    let sampled = curve
        .iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(t, _)| *t)
        .unwrap_or(0.0);
    let angle = match c.radio.band {
        Band::LowShf => crate::placement::worst_case_angle_low_shf(&c.radio.low_shf)?,
        Band::HighShf => worst_case_angle_high_shf(b, &c.radio, &default_high_shf_bracket())?,
    };
    let geom = crate::placement::worst_case_link_at_angle(b, angle)?;
    let p = min_transmit_power_dbm(path_loss(&geom, &c.radio)?.total, &config.budget);
    Ok(vec![
        samples,
        vec![row![c.label.as_str(), band, f, b.z_b, angle, p, sampled]],
    ])
}

fn placement_row(
    c: &ResolvedCase,
    p: &crate::scenario::UavPlacement,
    iterations: usize,
    converged: bool,
) -> Vec<Cell> {
    let b = &c.building;
    row![
        c.label.as_str(),
        distribution_name(c.users.distribution),
        b.x_b,
        b.y_b,
        b.z_b,
        p.position.x,
        p.position.y,
        p.position.z,
        p.standoff(b),
        p.total_path_loss,
        iterations,
        converged,
    ]
}

fn run_gd(
    config: &ExperimentConfig,
    c: &ResolvedCase,
    users: &[IndoorUser],
) -> Result<(crate::scenario::UavPlacement, crate::optimize::GdResult)> {
    if c.users.distribution == Distribution::Symmetric {
        place_symmetric(&c.building, users, &c.radio, &config.gd)
    } else {
        place_center_line(&c.building, users, &c.radio, &config.gd)
    }
}

fn gd_case(config: &ExperimentConfig, c: &ResolvedCase, base_dir: &Path) -> Result<Vec<Rows>> {
    let users = build_roster(c, base_dir)?;
    let (p, gd) = run_gd(config, c, &users)?;
    let trace = gd
        .trace
        .records
        .iter()
        .map(|r| {
            row![
                c.label.as_str(),
                r.iteration,
                r.candidate[0],
                r.candidate[0] - c.building.x_b,
                r.objective,
            ]
        })
        .collect();
    Ok(vec![trace, vec![placement_row(c, &p, gd.iterations, gd.converged)]])
}

fn pso_case(_config: &ExperimentConfig, c: &ResolvedCase, base_dir: &Path) -> Result<Vec<Rows>> {
    let users = build_roster(c, base_dir)?;
    let (p, trace) = place_pso(&c.building, &users, &c.radio, &c.pso)?;
    let rows = trace
        .records
        .iter()
        .map(|r| {
            row![
                c.label.as_str(),
                r.iteration,
                r.candidate[0],
                r.candidate[1],
                r.candidate[2],
                r.candidate[0] - c.building.x_b,
                r.objective,
            ]
        })
        .collect();
    let iterations = trace.len().saturating_sub(1);
    Ok(vec![rows, vec![placement_row(c, &p, iterations, true)]])
}

fn table2_case(config: &ExperimentConfig, c: &ResolvedCase, base_dir: &Path) -> Result<Vec<Rows>> {
    let users = build_roster(c, base_dir)?;
    let (gd, _) = run_gd(config, c, &users)?;
    let (ps, _) = place_pso(&c.building, &users, &c.radio, &c.pso)?;
    let b = &c.building;
    let rows = [("gd", gd), ("pso", ps)]
        .into_iter()
        .map(|(m, p)| {
            row![
                c.label.as_str(),
                distribution_name(c.users.distribution),
                b.x_b,
                b.y_b,
                b.z_b,
                m,
                p.position.x,
                p.standoff(b),
                p.position.y,
                p.position.z,
                p.total_path_loss,
            ]
        })
        .collect();
    Ok(vec![rows])
}

fn plan_rows(c: &ResolvedCase, plan: &ClusterPlan, users: &[IndoorUser], out: &mut [Rows]) {
    let method = plan.method.name();
    let violations = audit(plan, users, &c.building, &c.multi_uav);
    for v in &violations {
        log::error!("{} {method}: {v}", c.label);
    }
    let total: f64 = plan.powers_w.iter().sum();
    out[0].push(row![
        c.label.as_str(),
        c.users.seed,
        method,
        plan.k,
        plan.max_power_w(),
        total,
        violations.len(),
    ]);
    for (j, p) in plan.placements.iter().enumerate() {
        if let Some(p) = p {
            out[1].push(row![
                c.label.as_str(),
                method,
                j,
                p.position.x,
                p.position.y,
                p.position.z,
                plan.powers_w[j],
                plan.member_counts[j],
            ]);
        }
    }
    for (id, j) in &plan.assignment {
        out[2].push(row![c.label.as_str(), method, *id, *j]);
    }
}

fn multi_case(c: &ResolvedCase, base_dir: &Path) -> Result<Vec<Rows>> {
    let users = build_roster(c, base_dir)?;
    let clustered = plan_clustered(&users, &c.building, &c.multi_uav)?;
    let split = plan_uniform_split(&users, &c.building, &c.multi_uav)?;
    let mut out = vec![Rows::new(); 3];
    plan_rows(c, &clustered, &users, &mut out);
    plan_rows(c, &split, &users, &mut out);
    Ok(out)
}
