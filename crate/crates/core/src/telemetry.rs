//! Telemetry data model and the CSV log format.
//!
//! A log is UTF-8 CSV with the fixed header
//! `t_ms,voltage_v,current_a,power_w,temp_c,pressure_pa,altitude_m`.
//! Power is always recomputed as `voltage * current` on parse, never trusted
//! from the file, so the V*I invariant stays checkable end to end. Optional
//! columns (pressure, altitude) serialize as empty strings.
//!
//! Scenario metadata travels in a flat `key = value` sidecar whose keys match
//! the [`ScenarioMeta`] field names.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

pub const LOG_HEADER: &str = "t_ms,voltage_v,current_a,power_w,temp_c,pressure_pa,altitude_m";

/// Default sampling rate of the acquisition stack, in samples per second.
pub const DEFAULT_RATE_HZ: f64 = 8.25;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TelemetryError {
    #[error("log is not valid UTF-8")]
    NotUtf8,
    #[error("malformed header (expected `{LOG_HEADER}`)")]
    MalformedHeader,
    #[error("malformed row at line {0}")]
    MalformedRow(usize),
    #[error("non-monotonic timestamp at line {0}")]
    NonMonotonicTime(usize),
    #[error("series is empty")]
    EmptySeries,
    #[error("malformed sidecar line {0}")]
    MalformedSidecar(usize),
    #[error("sidecar missing field `{0}`")]
    MissingField(&'static str),
    #[error("invalid value for `{field}`: {value}")]
    InvalidValue { field: &'static str, value: String },
    #[error("invalid scenario: {0}")]
    InvalidScenario(&'static str),
}

/// One timestamped sample from the acquisition stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TelemetryRecord {
    /// Milliseconds since scenario start, strictly increasing within a series.
    pub t_ms: u64,
    pub voltage: f64,
    pub current: f64,
    /// Derived as `voltage * current`.
    pub power: f64,
    pub temperature: f64,
    pub pressure: Option<f64>,
    pub altitude: Option<f64>,
}

impl TelemetryRecord {
    pub fn new(t_ms: u64, voltage: f64, current: f64, temperature: f64) -> Self {
        Self {
            t_ms,
            voltage,
            current,
            power: voltage * current,
            temperature,
            pressure: None,
            altitude: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PowerConfig {
    BatteryOnly,
    Hybrid,
}

impl PowerConfig {
    pub fn as_str(&self) -> &'static str {
        match self {
            PowerConfig::BatteryOnly => "battery_only",
            PowerConfig::Hybrid => "hybrid",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match normalized(s).as_str() {
            "batteryonly" | "battery" => Some(PowerConfig::BatteryOnly),
            "hybrid" => Some(PowerConfig::Hybrid),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Throttle {
    P25,
    P50,
    P75,
    P100,
    Dynamic,
}

impl Throttle {
    /// Class index 0..=3 for the static levels; `None` for dynamic runs.
    pub fn class_index(&self) -> Option<usize> {
        match self {
            Throttle::P25 => Some(0),
            Throttle::P50 => Some(1),
            Throttle::P75 => Some(2),
            Throttle::P100 => Some(3),
            Throttle::Dynamic => None,
        }
    }

    pub fn is_static(&self) -> bool {
        self.class_index().is_some()
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Throttle::P25 => "p25",
            Throttle::P50 => "p50",
            Throttle::P75 => "p75",
            Throttle::P100 => "p100",
            Throttle::Dynamic => "dynamic",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match normalized(s).as_str() {
            "p25" | "25" => Some(Throttle::P25),
            "p50" | "50" => Some(Throttle::P50),
            "p75" | "75" => Some(Throttle::P75),
            "p100" | "100" => Some(Throttle::P100),
            "dynamic" => Some(Throttle::Dynamic),
            _ => None,
        }
    }

    pub fn from_class_index(i: usize) -> Option<Self> {
        match i {
            0 => Some(Throttle::P25),
            1 => Some(Throttle::P50),
            2 => Some(Throttle::P75),
            3 => Some(Throttle::P100),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Environment {
    IndoorLab,
    OutdoorAsphalt,
}

impl Environment {
    pub fn as_str(&self) -> &'static str {
        match self {
            Environment::IndoorLab => "indoor_lab",
            Environment::OutdoorAsphalt => "outdoor_asphalt",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match normalized(s).as_str() {
            "indoorlab" | "indoor" => Some(Environment::IndoorLab),
            "outdoorasphalt" | "outdoor" => Some(Environment::OutdoorAsphalt),
            _ => None,
        }
    }
}

fn normalized(s: &str) -> String {
    s.trim()
        .chars()
        .filter(|c| *c != '_' && *c != '-')
        .map(|c| c.to_ascii_lowercase())
        .collect()
}

/// Scenario description attached to every log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioMeta {
    pub id: String,
    pub power_config: PowerConfig,
    pub throttle: Throttle,
    pub load_kg: f64,
    pub towing_kg: f64,
    pub environment: Environment,
    pub duration_s: f64,
    pub nominal_rate_hz: f64,
}

impl ScenarioMeta {
    pub fn validate(&self) -> Result<(), TelemetryError> {
        if !(self.duration_s > 0.0) {
            return Err(TelemetryError::InvalidScenario("duration_s must be > 0"));
        }
        if !(self.nominal_rate_hz > 0.0) {
            return Err(TelemetryError::InvalidScenario(
                "nominal_rate_hz must be > 0",
            ));
        }
        if self.load_kg < 0.0 || self.towing_kg < 0.0 {
            return Err(TelemetryError::InvalidScenario(
                "load_kg and towing_kg must be >= 0",
            ));
        }
        Ok(())
    }

    /// Nominal inter-sample spacing, in milliseconds.
    pub fn nominal_period_ms(&self) -> f64 {
        1000.0 / self.nominal_rate_hz
    }
}

/// A spacing violation: `index` is the sample that follows the gap.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gap {
    pub index: usize,
    pub gap_ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub n_samples: usize,
    /// `(n - 1) / span` in Hz; `None` for a single-sample series.
    pub observed_rate_hz: Option<f64>,
    pub gaps: Vec<Gap>,
    pub monotonic: bool,
}

/// Parse a CSV log. Power is recomputed from voltage and current regardless
/// of the file contents. Line numbers in errors are 1-based file lines.
pub fn parse_log(bytes: &[u8]) -> Result<Vec<TelemetryRecord>, TelemetryError> {
    let text = core::str::from_utf8(bytes).map_err(|_| TelemetryError::NotUtf8)?;
    let mut lines = text.lines().enumerate();
    let header = loop {
        match lines.next() {
            Some((_, line)) if line.trim().is_empty() => continue,
            Some((_, line)) => break line,
            None => return Err(TelemetryError::MalformedHeader),
        }
    };
    if header.trim() != LOG_HEADER {
        return Err(TelemetryError::MalformedHeader);
    }

    let mut records = Vec::new();
    let mut last_t: Option<u64> = None;
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(TelemetryError::MalformedRow(line_no));
        }
        let t_ms: u64 = fields[0]
            .trim()
            .parse()
            .map_err(|_| TelemetryError::MalformedRow(line_no))?;
        let voltage = parse_f64(fields[1], line_no)?;
        let current = parse_f64(fields[2], line_no)?;
        // fields[3] (power) is intentionally ignored; it is derived below.
        let temperature = parse_f64(fields[4], line_no)?;
        let pressure = parse_opt_f64(fields[5], line_no)?;
        let altitude = parse_opt_f64(fields[6], line_no)?;
        if !(voltage >= 0.0) {
            return Err(TelemetryError::MalformedRow(line_no));
        }
        if let Some(prev) = last_t {
            if t_ms <= prev {
                return Err(TelemetryError::NonMonotonicTime(line_no));
            }
        }
        last_t = Some(t_ms);
        records.push(TelemetryRecord {
            t_ms,
            voltage,
            current,
            power: voltage * current,
            temperature,
            pressure,
            altitude,
        });
    }
    Ok(records)
}

fn parse_f64(field: &str, line_no: usize) -> Result<f64, TelemetryError> {
    let value: f64 = field
        .trim()
        .parse()
        .map_err(|_| TelemetryError::MalformedRow(line_no))?;
    if value.is_finite() {
        Ok(value)
    } else {
        Err(TelemetryError::MalformedRow(line_no))
    }
}

fn parse_opt_f64(field: &str, line_no: usize) -> Result<Option<f64>, TelemetryError> {
    let trimmed = field.trim();
    if trimmed.is_empty() {
        Ok(None)
    } else {
        parse_f64(trimmed, line_no).map(Some)
    }
}

/// Render records back to the canonical CSV form. Floats use the shortest
/// representation that round-trips exactly, so `parse_log(write_log(r)) == r`.
pub fn write_log(records: &[TelemetryRecord]) -> String {
    let mut out = String::with_capacity(64 * (records.len() + 1));
    out.push_str(LOG_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.t_ms,
            r.voltage,
            r.current,
            r.voltage * r.current,
            r.temperature,
            opt_str(r.pressure),
            opt_str(r.altitude),
        ));
    }
    out
}

fn opt_str(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

/// Check sampling integrity against the scenario's nominal rate. A gap is
/// flagged wherever the spacing exceeds twice the nominal period.
pub fn validate_series(
    records: &[TelemetryRecord],
    meta: &ScenarioMeta,
) -> Result<ValidationReport, TelemetryError> {
    if records.is_empty() {
        return Err(TelemetryError::EmptySeries);
    }
    let n = records.len();
    let mut monotonic = true;
    let mut gaps = Vec::new();
    let gap_threshold_ms = 2.0 * meta.nominal_period_ms();
    for i in 1..n {
        let prev = records[i - 1].t_ms;
        let cur = records[i].t_ms;
        if cur <= prev {
            monotonic = false;
            continue;
        }
        let spacing = cur - prev;
        if spacing as f64 > gap_threshold_ms {
            gaps.push(Gap {
                index: i,
                gap_ms: spacing,
            });
        }
    }
    let observed_rate_hz = if n >= 2 && monotonic {
        let span_s = (records[n - 1].t_ms - records[0].t_ms) as f64 / 1000.0;
        if span_s > 0.0 {
            Some((n - 1) as f64 / span_s)
        } else {
            None
        }
    } else {
        None
    };
    Ok(ValidationReport {
        n_samples: n,
        observed_rate_hz,
        gaps,
        monotonic,
    })
}

/// Render scenario metadata as the flat `key = value` sidecar.
pub fn write_sidecar(meta: &ScenarioMeta) -> String {
    format!(
        "id = {}\npower_config = {}\nthrottle = {}\nload_kg = {}\ntowing_kg = {}\nenvironment = {}\nduration_s = {}\nnominal_rate_hz = {}\n",
        meta.id,
        meta.power_config.as_str(),
        meta.throttle.as_str(),
        meta.load_kg,
        meta.towing_kg,
        meta.environment.as_str(),
        meta.duration_s,
        meta.nominal_rate_hz,
    )
}

/// Parse the metadata sidecar written by [`write_sidecar`].
pub fn parse_sidecar(text: &str) -> Result<ScenarioMeta, TelemetryError> {
    let mut id = None;
    let mut power_config = None;
    let mut throttle = None;
    let mut load_kg = None;
    let mut towing_kg = None;
    let mut environment = None;
    let mut duration_s = None;
    let mut nominal_rate_hz = None;

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (key, value) = trimmed
            .split_once('=')
            .ok_or(TelemetryError::MalformedSidecar(line_no))?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "id" => id = Some(value.to_string()),
            "power_config" => {
                power_config = Some(PowerConfig::parse(value).ok_or_else(|| {
                    TelemetryError::InvalidValue {
                        field: "power_config",
                        value: value.to_string(),
                    }
                })?)
            }
            "throttle" => {
                throttle =
                    Some(
                        Throttle::parse(value).ok_or_else(|| TelemetryError::InvalidValue {
                            field: "throttle",
                            value: value.to_string(),
                        })?,
                    )
            }
            "load_kg" => load_kg = Some(parse_meta_f64("load_kg", value)?),
            "towing_kg" => towing_kg = Some(parse_meta_f64("towing_kg", value)?),
            "environment" => {
                environment = Some(Environment::parse(value).ok_or_else(|| {
                    TelemetryError::InvalidValue {
                        field: "environment",
                        value: value.to_string(),
                    }
                })?)
            }
            "duration_s" => duration_s = Some(parse_meta_f64("duration_s", value)?),
            "nominal_rate_hz" => nominal_rate_hz = Some(parse_meta_f64("nominal_rate_hz", value)?),
            _ => return Err(TelemetryError::MalformedSidecar(line_no)),
        }
    }

    let meta = ScenarioMeta {
        id: id.ok_or(TelemetryError::MissingField("id"))?,
        power_config: power_config.ok_or(TelemetryError::MissingField("power_config"))?,
        throttle: throttle.ok_or(TelemetryError::MissingField("throttle"))?,
        load_kg: load_kg.ok_or(TelemetryError::MissingField("load_kg"))?,
        towing_kg: towing_kg.ok_or(TelemetryError::MissingField("towing_kg"))?,
        environment: environment.ok_or(TelemetryError::MissingField("environment"))?,
        duration_s: duration_s.ok_or(TelemetryError::MissingField("duration_s"))?,
        nominal_rate_hz: nominal_rate_hz.ok_or(TelemetryError::MissingField("nominal_rate_hz"))?,
    };
    meta.validate()?;
    Ok(meta)
}

fn parse_meta_f64(field: &'static str, value: &str) -> Result<f64, TelemetryError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite())
        .ok_or_else(|| TelemetryError::InvalidValue {
            field,
            value: value.to_string(),
        })
}
