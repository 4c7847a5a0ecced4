//! Command dispatch: resolve sweep points, run the model or simulators,
//! assemble one table per command and write it.

use std::path::{Path, PathBuf};

use efd_core::validation::{run_all, Check, ValidationPlan};
use efd_core::{
    bridge_model, cluster_expectations, one_directional_segment_delay, run_city_experiment,
    run_trials, segment_delay, CityConfig, CityRun, SimConfig, SimMode,
};
use rayon::prelude::*;

use crate::config::{Command, ExperimentConfig, ModeChoice, PlanChoice};
use crate::output::{write_outputs, Cell, Table};
use crate::CliError;

pub const OUTPUT_DIR_ENV: &str = "EFD_OUTPUT_DIR";

pub const ANALYTICS_COLUMNS: &[&str] = &[
    "lambda",
    "range_r",
    "p_connect",
    "e_gap",
    "e_vehicles",
    "e_length",
    "e_hops",
    "e_cluster_delay",
    "e_carry",
    "segment_delay",
];

pub const SEGMENT_COLUMNS: &[&str] = &[
    "lambda",
    "range_r",
    "segment_length",
    "v_min",
    "v_max",
    "hop_delay",
    "mode",
    "seed",
    "trials",
    "mean",
    "variance",
    "p10",
    "p50",
    "p90",
    "mean_carry_time",
    "mean_multihop_time",
    "mean_hops",
    "case1",
    "case2",
    "case3",
    "none",
    "bridges_used",
    "model_delay",
];

pub const CITY_COLUMNS: &[&str] = &[
    "n_vehicles",
    "metric",
    "seed",
    "packets",
    "delivered",
    "delivery_ratio",
    "mean_delay",
    "q10",
    "q20",
    "q30",
    "q40",
    "q50",
    "q60",
    "q70",
    "q80",
    "q90",
];

pub const PACKET_COLUMNS: &[&str] = &[
    "n_vehicles",
    "metric",
    "seed",
    "id",
    "source",
    "destination",
    "generated_at",
    "delivered_at",
    "delay",
    "segments",
    "path",
];

pub const VALIDATE_COLUMNS: &[&str] = &[
    "criterion",
    "name",
    "observed",
    "expected",
    "rule",
    "passed",
];

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub data_files: Vec<PathBuf>,
    pub meta_file: PathBuf,
    pub rows: usize,
    /// Failed checks; nonzero only for `validate`.
    pub failed: usize,
    pub checks: Vec<Check>,
}

/// Data file path: the configured output, else `<command>.<ext>` in the
/// directory named by `EFD_OUTPUT_DIR`, else in the working directory.
pub fn output_path(config: &ExperimentConfig, env_dir: Option<&Path>) -> PathBuf {
    match &config.output {
        Some(p) => p.clone(),
        None => {
            let name = format!("{}.{}", config.command.name(), config.format.extension());
            match env_dir {
                Some(d) => d.join(name),
                None => PathBuf::from(name),
            }
        }
    }
}

fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{stem}.{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}.{tag}"),
    };
    path.with_file_name(name)
}

pub fn analytics_table(config: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = Table::new(ANALYTICS_COLUMNS);
    for (_, cfg) in config.expand()? {
        let p = cfg.traffic();
        let ce = cluster_expectations(&p)?;
        let bm = bridge_model(&p)?;
        t.push(vec![
            p.lambda.into(),
            p.range_r.into(),
            ce.p_connect.into(),
            ce.e_gap.into(),
            ce.e_vehicles.into(),
            ce.e_length.into(),
            ce.e_hops.into(),
            ce.e_cluster_delay.into(),
            bm.e_carry.into(),
            segment_delay(&p)?.into(),
        ]);
    }
    Ok(t)
}

fn modes(choice: ModeChoice) -> &'static [SimMode] {
    match choice {
        ModeChoice::Bidirectional => &[SimMode::Bidirectional],
        ModeChoice::OneDirectional => &[SimMode::OneDirectional],
        ModeChoice::Both => &[SimMode::Bidirectional, SimMode::OneDirectional],
    }
}

pub fn segment_table(config: &ExperimentConfig) -> Result<Table, CliError> {
    let mut t = Table::new(SEGMENT_COLUMNS);
    for (_, cfg) in config.expand()? {
        let p = cfg.traffic();
        for &seed in &cfg.seeds {
            for &mode in modes(cfg.mode) {
                let sim = SimConfig {
                    params: p,
                    mode,
                    trials: cfg.trials,
                    base_seed: seed,
                    kinematics: cfg.kinematics,
                    backward_lambda: cfg.backward_lambda,
                };
                let s = run_trials(&sim)?;
                let (label, model) = match mode {
                    SimMode::Bidirectional => ("bidirectional", segment_delay(&p)?),
                    SimMode::OneDirectional => {
                        ("one-directional", one_directional_segment_delay(&p)?)
                    }
                };
                t.push(vec![
                    p.lambda.into(),
                    p.range_r.into(),
                    p.segment_length.into(),
                    p.v_min.into(),
                    p.v_max.into(),
                    p.hop_delay.into(),
                    label.into(),
                    seed.into(),
                    s.trials.into(),
                    s.mean.into(),
                    s.variance.into(),
                    s.p10.into(),
                    s.p50.into(),
                    s.p90.into(),
                    s.mean_carry_time.into(),
                    s.mean_multihop_time.into(),
                    s.mean_hops.into(),
                    s.case_tallies[0].into(),
                    s.case_tallies[1].into(),
                    s.case_tallies[2].into(),
                    s.case_tallies[3].into(),
                    s.bridges_used.into(),
                    model.into(),
                ]);
            }
        }
    }
    Ok(t)
}

fn city_configs(config: &ExperimentConfig) -> Result<Vec<CityConfig>, CliError> {
    let mut jobs = Vec::new();
    for (_, cfg) in config.expand()? {
        let c = &cfg.city;
        for &seed in &cfg.seeds {
            for &metric in &c.metrics {
                jobs.push(CityConfig {
                    rows: c.rows,
                    cols: c.cols,
                    width: c.width,
                    height: c.height,
                    n_vehicles: c.n_vehicles,
                    sources: c.sources,
                    packets: c.packets,
                    mean_interarrival: c.mean_interarrival,
                    ttl: c.ttl,
                    seed,
                    metric,
                    params: cfg.traffic(),
                    dt: c.dt,
                    density_refresh: c.density_refresh,
                    lambda_floor: c.lambda_floor,
                    max_time: c.max_time,
                });
            }
        }
    }
    Ok(jobs)
}

/// Summary table and per-packet log, rows in (sweep point, seed, metric)
/// order whatever order the runs finish in.
pub fn city_tables(config: &ExperimentConfig) -> Result<(Table, Table), CliError> {
    let jobs = city_configs(config)?;
    let runs: Vec<CityRun> = jobs
        .par_iter()
        .map(run_city_experiment)
        .collect::<Result<_, _>>()?;
    let mut summary = Table::new(CITY_COLUMNS);
    let mut packets = Table::new(PACKET_COLUMNS);
    for run in &runs {
        let s = &run.summary;
        let mut row: Vec<Cell> = vec![
            s.n_vehicles.into(),
            s.metric.label().into(),
            s.seed.into(),
            s.packets.into(),
            s.delivered.into(),
            s.delivery_ratio.into(),
            s.mean_delay.into(),
        ];
        row.extend(s.deciles.iter().map(|&d| Cell::from(d)));
        summary.push(row);
        if config.city.packet_log {
            for p in &run.packets {
                let path: Vec<String> = p.path.iter().map(|s| s.to_string()).collect();
                packets.push(vec![
                    s.n_vehicles.into(),
                    s.metric.label().into(),
                    s.seed.into(),
                    p.id.into(),
                    p.source.0.into(),
                    p.destination.0.into(),
                    p.generated_at.into(),
                    p.delivered_at.unwrap_or(f64::NAN).into(),
                    p.delay.unwrap_or(f64::NAN).into(),
                    p.path.len().into(),
                    path.join(";").into(),
                ]);
            }
        }
    }
    Ok((summary, packets))
}

pub fn validate_table(config: &ExperimentConfig) -> Result<(Table, Vec<Check>), CliError> {
    let plan = match config.plan {
        PlanChoice::Full => ValidationPlan::full(),
        PlanChoice::Quick => ValidationPlan::quick(),
    };
    let checks = run_all(&plan)?;
    let mut t = Table::new(VALIDATE_COLUMNS);
    for c in &checks {
        t.push(vec![
            u32::from(c.criterion).into(),
            c.name.as_str().into(),
            c.observed.into(),
            c.expected.into(),
            c.rule.to_string().into(),
            c.passed.into(),
        ]);
    }
    Ok((t, checks))
}

/// Runs the configured command and writes its artifacts.
pub fn run_experiment(
    config: &ExperimentConfig,
    env_dir: Option<&Path>,
) -> Result<Outcome, CliError> {
    config.validate()?;
    let path = output_path(config, env_dir);
    let mut checks = Vec::new();
    let mut files = Vec::new();
    let rows = match config.command {
        Command::Analytics => {
            let t = analytics_table(config)?;
            files.push((path, t.encode(config.format)?));
            t.rows.len()
        }
        Command::Segment => {
            let t = segment_table(config)?;
            files.push((path, t.encode(config.format)?));
            t.rows.len()
        }
        Command::City => {
            let (summary, packets) = city_tables(config)?;
            let log = sibling(&path, "packets");
            files.push((path, summary.encode(config.format)?));
            if config.city.packet_log {
                files.push((log, packets.encode(config.format)?));
            }
            summary.rows.len()
        }
        Command::Validate => {
            let (t, c) = validate_table(config)?;
            checks = c;
            files.push((path, t.encode(config.format)?));
            t.rows.len()
        }
    };
    let meta_file = write_outputs(config, &files)?;
    Ok(Outcome {
        data_files: files.into_iter().map(|(p, _)| p).collect(),
        meta_file,
        rows,
        failed: checks.iter().filter(|c| !c.passed).count(),
        checks,
    })
}
