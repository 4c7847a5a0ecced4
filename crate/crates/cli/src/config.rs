//! Flat `key = value` configuration with unit-aware values and parameter
//! sweeps. Later assignments win, so flags applied after a file override it.

use std::fmt;
use std::path::PathBuf;

use efd_core::city::{DEFAULT_HEIGHT, DEFAULT_WIDTH};
use efd_core::{Kinematics, MetricKind, TrafficParams, METERS_PER_MILE, MPS_PER_MPH};
use serde::Serialize;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Analytics,
    Segment,
    City,
    Validate,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Analytics => "analytics",
            Command::Segment => "segment",
            Command::City => "city",
            Command::Validate => "validate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

/// Which forwarding modes the segment command runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Bidirectional,
    OneDirectional,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PlanChoice {
    Full,
    Quick,
}

/// How the forward density was given; resolved once speeds and range are
/// final.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Density {
    /// Vehicles per meter.
    Lambda(f64),
    /// Dimensionless `lambda * R`.
    LambdaR(f64),
    /// Vehicles per second past a point.
    ArrivalRate(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CitySettings {
    pub rows: usize,
    pub cols: usize,
    pub width: f64,
    pub height: f64,
    pub n_vehicles: usize,
    pub sources: usize,
    pub packets: usize,
    pub mean_interarrival: f64,
    pub ttl: Option<f64>,
    pub dt: f64,
    pub density_refresh: f64,
    pub lambda_floor: f64,
    pub max_time: f64,
    pub metrics: Vec<MetricKind>,
    pub packet_log: bool,
}

impl Default for CitySettings {
    fn default() -> Self {
        let c = efd_core::CityConfig::default();
        Self {
            rows: c.rows,
            cols: c.cols,
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            n_vehicles: c.n_vehicles,
            sources: c.sources,
            packets: c.packets,
            mean_interarrival: c.mean_interarrival,
            ttl: c.ttl,
            dt: c.dt,
            density_refresh: c.density_refresh,
            lambda_floor: c.lambda_floor,
            max_time: c.max_time,
            metrics: vec![MetricKind::Efd, MetricKind::VaddDensity],
            packet_log: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Sweep {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub command: Command,
    /// `lambda` here is a placeholder; see [`ExperimentConfig::traffic`].
    pub params: TrafficParams,
    pub density: Density,
    pub sweep: Vec<Sweep>,
    pub trials: usize,
    pub seeds: Vec<u64>,
    pub mode: ModeChoice,
    pub kinematics: Kinematics,
    pub backward_lambda: Option<f64>,
    pub city: CitySettings,
    pub plan: PlanChoice,
    #[serde(skip)]
    pub output: Option<PathBuf>,
    pub format: Format,
}

impl ExperimentConfig {
    pub fn new(command: Command) -> Self {
        let params = TrafficParams::default();
        Self {
            command,
            params,
            density: Density::Lambda(params.lambda),
            sweep: Vec::new(),
            trials: 1000,
            seeds: vec![1],
            mode: ModeChoice::Both,
            kinematics: Kinematics::Frozen,
            backward_lambda: None,
            city: CitySettings::default(),
            plan: PlanChoice::Full,
            output: None,
            format: Format::Csv,
        }
    }

    /// Traffic parameters with the density resolved to vehicles per meter.
    pub fn traffic(&self) -> TrafficParams {
        let p = self.params;
        let lambda = match self.density {
            Density::Lambda(l) => l,
            Density::LambdaR(x) => x / p.range_r,
            Density::ArrivalRate(q) => TrafficParams::lambda_from_arrival_rate(q, p.v_min, p.v_max),
        };
        p.with_lambda(lambda)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.traffic().validate()?;
        if self.seeds.is_empty() {
            return Err(CliError::Config("seeds must not be empty".into()));
        }
        if self.trials == 0 {
            return Err(CliError::Config("trials must be at least 1".into()));
        }
        if self.city.metrics.is_empty() {
            return Err(CliError::Config("metric list must not be empty".into()));
        }
        if let Some(b) = self.backward_lambda {
            if !(b.is_finite() && b > 0.0) {
                return Err(CliError::Config(format!(
                    "backward_lambda must be > 0, got {b}"
                )));
            }
        }
        Ok(())
    }

    /// One fully resolved configuration per sweep grid point, with the
    /// swept values in declaration order. No sweep gives one point.
    pub fn expand(&self) -> Result<Vec<(Vec<(String, f64)>, ExperimentConfig)>, CliError> {
        let mut points: Vec<Vec<(String, f64)>> = vec![Vec::new()];
        for s in &self.sweep {
            let mut next = Vec::with_capacity(points.len() * s.values.len());
            for p in &points {
                for &v in &s.values {
                    let mut q = p.clone();
                    q.push((s.name.clone(), v));
                    next.push(q);
                }
            }
            points = next;
        }
        points
            .into_iter()
            .map(|point| {
                let mut cfg = self.clone();
                cfg.sweep.clear();
                for (name, value) in &point {
                    cfg.set_numeric(name, *value)
                        .map_err(|e| CliError::Config(format!("sweep {name}: {e}")))?;
                }
                cfg.validate()?;
                Ok((point, cfg))
            })
            .collect()
    }

    // Keys a sweep may vary, all in SI units.
    fn set_numeric(&mut self, key: &str, v: f64) -> Result<(), String> {
        let count = |v: f64| -> Result<usize, String> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(format!("expected a whole number, got {v}"))
            }
        };
        match key {
            "lambda" => self.density = Density::Lambda(v),
            "lambda_r" => self.density = Density::LambdaR(v),
            "arrival_rate" => self.density = Density::ArrivalRate(v),
            "range_r" => self.params.range_r = v,
            "v_min" => self.params.v_min = v,
            "v_max" => self.params.v_max = v,
            "hop_delay" => self.params.hop_delay = v,
            "segment_length" => self.params.segment_length = v,
            "backward_lambda" => self.backward_lambda = Some(v),
            "trials" => self.trials = count(v)?,
            "n_vehicles" => self.city.n_vehicles = count(v)?,
            "packets" => self.city.packets = count(v)?,
            "ttl" => self.city.ttl = Some(v),
            "mean_interarrival" => self.city.mean_interarrival = v,
            _ => return Err(format!("`{key}` cannot be swept")),
        }
        Ok(())
    }
}

/// Where an assignment came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    Line(usize),
    Flag(String),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Line(n) => write!(f, "line {n}"),
            Origin::Flag(name) => write!(f, "flag --{name}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Dim {
    Length,
    Speed,
    Density,
    Rate,
    Time,
    Plain,
}

const SWEEP_DIMS: &[(&str, Dim)] = &[
    ("lambda", Dim::Density),
    ("lambda_r", Dim::Plain),
    ("arrival_rate", Dim::Rate),
    ("range_r", Dim::Length),
    ("v_min", Dim::Speed),
    ("v_max", Dim::Speed),
    ("hop_delay", Dim::Time),
    ("segment_length", Dim::Length),
    ("backward_lambda", Dim::Density),
    ("trials", Dim::Plain),
    ("n_vehicles", Dim::Plain),
    ("packets", Dim::Plain),
    ("ttl", Dim::Time),
    ("mean_interarrival", Dim::Time),
];

/// Number with an optional unit suffix, converted to SI.
fn quantity(raw: &str, dim: Dim) -> Result<f64, String> {
    let s = raw.trim();
    let split = s
        .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .unwrap_or(s.len());
    // "1e3" keeps its exponent; "5 mi" splits at the space
    let (num, unit) = s.split_at(split);
    let value: f64 = num
        .trim()
        .parse()
        .map_err(|_| format!("`{raw}` is not a number"))?;
    let unit = unit.trim();
    let factor = match (dim, unit) {
        (_, "") => 1.0,
        (Dim::Length, "m") => 1.0,
        (Dim::Length, "km") => 1000.0,
        (Dim::Length, "mi") => METERS_PER_MILE,
        (Dim::Length, "ft") => 0.3048,
        (Dim::Speed, "m/s") => 1.0,
        (Dim::Speed, "mph") => MPS_PER_MPH,
        (Dim::Speed, "km/h") => 1.0 / 3.6,
        (Dim::Density, "/m") => 1.0,
        (Dim::Density, "/km") => 1e-3,
        (Dim::Density, "/mi") => 1.0 / METERS_PER_MILE,
        (Dim::Rate, "/s") => 1.0,
        (Dim::Rate, "/min") => 1.0 / 60.0,
        (Dim::Rate, "/h") => 1.0 / 3600.0,
        (Dim::Time, "s") => 1.0,
        (Dim::Time, "ms") => 1e-3,
        (Dim::Time, "min") => 60.0,
        (Dim::Time, "h") => 3600.0,
        _ => return Err(format!("unit `{unit}` does not fit this key")),
    };
    Ok(value * factor)
}

fn whole<T: std::str::FromStr>(raw: &str) -> Result<T, String> {
    raw.trim()
        .parse()
        .map_err(|_| format!("`{}` is not a whole number", raw.trim()))
}

fn boolean(raw: &str) -> Result<bool, String> {
    match raw.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(format!("`{other}` is not a boolean")),
    }
}

/// `a,b,c` or inclusive `a..b:step` (step 1 when omitted).
fn value_list(raw: &str, dim: Dim) -> Result<Vec<f64>, String> {
    let raw = raw.trim();
    if let Some((a, rest)) = raw.split_once("..") {
        let (b, step) = match rest.split_once(':') {
            Some((b, s)) => (b, quantity(s, dim)?),
            None => (rest, 1.0),
        };
        let (a, b) = (quantity(a, dim)?, quantity(b, dim)?);
        if !(step > 0.0) {
            return Err(format!("range step must be positive in `{raw}`"));
        }
        if b < a {
            return Err(format!("range end below start in `{raw}`"));
        }
        let n = ((b - a) / step + 1e-9).floor() as usize + 1;
        return Ok((0..n).map(|i| a + i as f64 * step).collect());
    }
    let values: Vec<f64> = raw
        .split(',')
        .map(|v| quantity(v, dim))
        .collect::<Result<_, _>>()?;
    if values.is_empty() {
        return Err("empty value list".into());
    }
    Ok(values)
}

fn seeds(raw: &str) -> Result<Vec<u64>, String> {
    let raw = raw.trim();
    if let Some((a, b)) = raw.split_once("..") {
        let (a, b): (u64, u64) = (whole(a)?, whole(b)?);
        if b < a {
            return Err(format!("seed range end below start in `{raw}`"));
        }
        return Ok((a..=b).collect());
    }
    raw.split(',').map(whole).collect()
}

fn metrics(raw: &str) -> Result<Vec<MetricKind>, String> {
    match raw.trim() {
        "efd" => Ok(vec![MetricKind::Efd]),
        "vadd" => Ok(vec![MetricKind::VaddDensity]),
        "both" => Ok(vec![MetricKind::Efd, MetricKind::VaddDensity]),
        other => Err(format!("metric must be efd, vadd or both, got `{other}`")),
    }
}

impl ExperimentConfig {
    /// Applies one assignment.
    pub fn assign(&mut self, key: &str, raw: &str, origin: &Origin) -> Result<(), CliError> {
        self.assign_inner(key, raw)
            .map_err(|e| CliError::Config(format!("{origin}: {key}: {e}")))
    }

    fn assign_inner(&mut self, key: &str, raw: &str) -> Result<(), String> {
        let v = raw.trim();
        match key {
            "lambda" => self.density = Density::Lambda(quantity(v, Dim::Density)?),
            "lambda_r" => self.density = Density::LambdaR(quantity(v, Dim::Plain)?),
            "arrival_rate" => self.density = Density::ArrivalRate(quantity(v, Dim::Rate)?),
            "range_r" => self.params.range_r = quantity(v, Dim::Length)?,
            "v_min" => self.params.v_min = quantity(v, Dim::Speed)?,
            "v_max" => self.params.v_max = quantity(v, Dim::Speed)?,
            "speed" => {
                let s = quantity(v, Dim::Speed)?;
                self.params.v_min = s;
                self.params.v_max = s;
            }
            "hop_delay" => self.params.hop_delay = quantity(v, Dim::Time)?,
            "segment_length" => self.params.segment_length = quantity(v, Dim::Length)?,
            "backward_lambda" => self.backward_lambda = Some(quantity(v, Dim::Density)?),
            "trials" => self.trials = whole(v)?,
            "seeds" => self.seeds = seeds(v)?,
            "mode" => {
                self.mode = match v {
                    "bidirectional" => ModeChoice::Bidirectional,
                    "one-directional" => ModeChoice::OneDirectional,
                    "both" => ModeChoice::Both,
                    other => {
                        return Err(format!(
                            "mode must be bidirectional, one-directional or both, got `{other}`"
                        ))
                    }
                }
            }
            "kinematics" => {
                self.kinematics = match v {
                    "frozen" => Kinematics::Frozen,
                    "moving" => Kinematics::Moving,
                    other => {
                        return Err(format!(
                            "kinematics must be frozen or moving, got `{other}`"
                        ))
                    }
                }
            }
            "rows" => self.city.rows = whole(v)?,
            "cols" => self.city.cols = whole(v)?,
            "width" => self.city.width = quantity(v, Dim::Length)?,
            "height" => self.city.height = quantity(v, Dim::Length)?,
            "n_vehicles" => self.city.n_vehicles = whole(v)?,
            "sources" => self.city.sources = whole(v)?,
            "packets" => self.city.packets = whole(v)?,
            "mean_interarrival" => self.city.mean_interarrival = quantity(v, Dim::Time)?,
            "ttl" => {
                self.city.ttl = match v {
                    "inf" | "none" => None,
                    _ => Some(quantity(v, Dim::Time)?),
                }
            }
            "dt" => self.city.dt = quantity(v, Dim::Time)?,
            "density_refresh" => self.city.density_refresh = quantity(v, Dim::Time)?,
            "lambda_floor" => self.city.lambda_floor = quantity(v, Dim::Density)?,
            "max_time" => self.city.max_time = quantity(v, Dim::Time)?,
            "metric" => self.city.metrics = metrics(v)?,
            "packet_log" => self.city.packet_log = boolean(v)?,
            "plan" => {
                self.plan = match v {
                    "full" => PlanChoice::Full,
                    "quick" => PlanChoice::Quick,
                    other => return Err(format!("plan must be full or quick, got `{other}`")),
                }
            }
            "output" => self.output = Some(PathBuf::from(v)),
            "format" => {
                self.format = match v {
                    "csv" => Format::Csv,
                    "json" => Format::Json,
                    other => return Err(format!("format must be csv or json, got `{other}`")),
                }
            }
            "sweep" => {
                let (name, values) = v
                    .split_once('=')
                    .ok_or_else(|| format!("expected name=values, got `{v}`"))?;
                let name = name.trim();
                let dim = SWEEP_DIMS
                    .iter()
                    .find(|(k, _)| *k == name)
                    .map(|&(_, d)| d)
                    .ok_or_else(|| format!("`{name}` cannot be swept"))?;
                let values = value_list(values, dim)?;
                self.sweep.retain(|s| s.name != name);
                self.sweep.push(Sweep {
                    name: name.to_string(),
                    values,
                });
            }
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Applies a `key = value` document. Blank lines and `#` comments are
    /// ignored.
    pub fn apply_text(&mut self, text: &str) -> Result<(), CliError> {
        for (i, line) in text.lines().enumerate() {
            let origin = Origin::Line(i + 1);
            let line = match line.find('#') {
                Some(k) => &line[..k],
                None => line,
            }
            .trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::Config(format!("{origin}: expected key = value, got `{line}`"))
            })?;
            self.assign(key.trim(), value, &origin)?;
        }
        Ok(())
    }
}

/// Resolves a configuration from an optional file body and ordered flag
/// assignments `(flag name, key, value)`.
pub fn parse_config(
    command: Command,
    text: Option<&str>,
    flags: &[(String, String, String)],
) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::new(command);
    if let Some(text) = text {
        cfg.apply_text(text)?;
    }
    for (flag, key, value) in flags {
        cfg.assign(key, value, &Origin::Flag(flag.clone()))?;
    }
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig, CliError> {
        parse_config(Command::Analytics, Some(text), &[])
    }

    #[test]
    fn empty_input_gives_defaults() {
        let c = parse("").unwrap();
        assert_eq!(c.traffic(), TrafficParams::default());
        assert_eq!(c.traffic().range_r, 250.0);
        assert_eq!(c.city.n_vehicles, 100);
        assert_eq!(c.city.ttl, None);
        assert_eq!(c.seeds, vec![1]);
    }

    #[test]
    fn negative_range_names_the_field() {
        let err = parse("range_r = -5").unwrap_err().to_string();
        assert!(err.contains("range_r"), "{err}");
    }

    #[test]
    fn unknown_key_names_the_line() {
        let err = parse("# header\n\nlambda = 0.01\nrange = 3\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("line 4") && err.contains("range"), "{err}");
    }

    #[test]
    fn bad_value_names_the_flag() {
        let flags = vec![("set".to_string(), "trials".to_string(), "many".to_string())];
        let err = parse_config(Command::Segment, None, &flags)
            .unwrap_err()
            .to_string();
        assert!(
            err.contains("flag --set") && err.contains("trials"),
            "{err}"
        );
    }

    #[test]
    fn flags_override_file() {
        let flags = vec![("trials".to_string(), "trials".to_string(), "7".to_string())];
        let c = parse_config(Command::Segment, Some("trials = 3\n"), &flags).unwrap();
        assert_eq!(c.trials, 7);
    }

    #[test]
    fn units_convert_exactly() {
        let c = parse("segment_length = 1 mi\nspeed = 40 mph\nhop_delay = 2 ms\n").unwrap();
        let p = c.traffic();
        assert_eq!(p.segment_length, 1609.344);
        assert_eq!(p.v_min, 40.0 * MPS_PER_MPH);
        assert_eq!(p.v_max, p.v_min);
        assert_eq!(p.hop_delay, 0.002);
        assert_eq!(
            parse("range_r = 820 ft").unwrap().traffic().range_r,
            820.0 * 0.3048
        );
        assert!(parse("range_r = 3 mph").is_err());
    }

    #[test]
    fn density_forms_resolve_against_final_values() {
        let c = parse("lambda_r = 1\nrange_r = 500\n").unwrap();
        assert_eq!(c.traffic().lambda, 0.002);
        let c = parse("arrival_rate = 0.5\nspeed = 10\n").unwrap();
        assert_eq!(c.traffic().lambda, 0.05);
        let c = parse("lambda_r = 1\nlambda = 3 /km\n").unwrap();
        assert_eq!(c.traffic().lambda, 0.003);
    }

    #[test]
    fn range_sweep_expands() {
        let c = parse("sweep = n_vehicles=10..100:10").unwrap();
        let points = c.expand().unwrap();
        assert_eq!(points.len(), 10);
        assert_eq!(points[0].1.city.n_vehicles, 10);
        assert_eq!(points[9].1.city.n_vehicles, 100);
        assert_eq!(points[3].0, vec![("n_vehicles".to_string(), 40.0)]);
    }

    #[test]
    fn grid_sweep_is_a_product() {
        let c = parse("sweep = lambda_r=0.5,1,2\nsweep = range_r=200,250\n").unwrap();
        let points = c.expand().unwrap();
        assert_eq!(points.len(), 6);
        assert_eq!(points[1].1.traffic().range_r, 250.0);
        assert_eq!(points[1].1.traffic().lambda, 0.5 / 250.0);
    }

    #[test]
    fn bad_sweeps_are_rejected() {
        assert!(parse("sweep = colour=1,2").is_err());
        assert!(parse("sweep = lambda=3..1").is_err());
        assert!(parse("sweep = lambda=1..3:0").is_err());
        let c = parse("sweep = n_vehicles=1.5").unwrap();
        assert!(c.expand().is_err());
        let c = parse("sweep = range_r=-1,2").unwrap();
        assert!(c.expand().is_err());
    }

    #[test]
    fn seed_forms() {
        assert_eq!(parse("seeds = 1..4").unwrap().seeds, vec![1, 2, 3, 4]);
        assert_eq!(parse("seeds = 9, 3").unwrap().seeds, vec![9, 3]);
        assert!(parse("seeds = ").is_err());
    }

    #[test]
    fn ttl_accepts_infinity() {
        assert_eq!(parse("ttl = 2 min").unwrap().city.ttl, Some(120.0));
        assert_eq!(parse("ttl = inf").unwrap().city.ttl, None);
    }
}
