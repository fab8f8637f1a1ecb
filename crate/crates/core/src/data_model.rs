//! Sample ingestion, support pooling, evaluation grids and run configuration.
//!
//! Input files are UTF-8 CSV with a header row. Two schemas are accepted:
//! `treatment,x,z` carries (change, level) pairs directly, while
//! `treatment,pre_income,post_income` carries raw incomes from which log
//! changes and log levels are derived via [`derive_changes`]. Extra columns
//! are ignored.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::criteria::Criterion;
use crate::error::{Error, Result};

/// One household: income change `x` and income level `z`, both in log units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub x: f64,
    pub z: f64,
}

impl Observation {
    pub fn new(x: f64, z: f64) -> Option<Self> {
        if x.is_finite() && z.is_finite() {
            Some(Self { x, z })
        } else {
            None
        }
    }
}

/// A labeled sample of observations for one treatment arm.
#[derive(Debug, Clone, PartialEq)]
pub struct PolicySample {
    label: String,
    observations: Vec<Observation>,
}

impl PolicySample {
    /// Builds a sample, rejecting fewer than two observations or non-finite
    /// values.
    pub fn new(label: impl Into<String>, observations: Vec<Observation>) -> Result<Self> {
        let label = label.into();
        if observations.len() < 2 {
            return Err(Error::TooFewRows {
                label,
                n: observations.len(),
            });
        }
        if let Some(bad) = observations
            .iter()
            .position(|o| !o.x.is_finite() || !o.z.is_finite())
        {
            return Err(Error::Data {
                line: bad as u64 + 1,
                msg: format!("non-finite observation in sample '{label}'"),
            });
        }
        Ok(Self {
            label,
            observations,
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn n(&self) -> usize {
        self.observations.len()
    }
}

/// Pooled componentwise bounds of two samples.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupportBox {
    pub x_min: f64,
    pub x_max: f64,
    pub z_min: f64,
    pub z_max: f64,
}

impl SupportBox {
    pub fn contains(&self, o: &Observation) -> bool {
        o.x >= self.x_min && o.x <= self.x_max && o.z >= self.z_min && o.z <= self.z_max
    }
}

/// Componentwise min/max over the union of both samples.
pub fn pooled_support(a: &PolicySample, b: &PolicySample) -> SupportBox {
    let mut x_min = f64::INFINITY;
    let mut x_max = f64::NEG_INFINITY;
    let mut z_min = f64::INFINITY;
    let mut z_max = f64::NEG_INFINITY;
    for o in a.observations().iter().chain(b.observations()) {
        x_min = x_min.min(o.x);
        x_max = x_max.max(o.x);
        z_min = z_min.min(o.z);
        z_max = z_max.max(o.z);
    }
    SupportBox {
        x_min,
        x_max,
        z_min,
        z_max,
    }
}

/// Derives (x, z) = (log post − log pre, log post) from a raw income pair.
pub fn derive_changes(pre: f64, post: f64) -> Result<Observation> {
    if !(pre > 0.0) || !(post > 0.0) || !pre.is_finite() || !post.is_finite() {
        return Err(Error::NonPositiveIncome { pre, post });
    }
    let z = post.ln();
    Ok(Observation { x: z - pre.ln(), z })
}

/// The (x, z) lattice on which test functions are evaluated.
///
/// `x_pos_points` is the nonnegative magnitude grid: criteria evaluate their
/// gain/loss coordinates at `+m` and `−m` for each magnitude `m`. It spans
/// `[0, max(|x_min|, x_max)]` so both signed points stay inside (or clamp at)
/// the pooled support, where all CDF transforms are constant.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationGrid {
    pub x_points: Vec<f64>,
    pub z_points: Vec<f64>,
    pub x_pos_points: Vec<f64>,
    /// Per-axis cell spacings used as integration weights.
    pub x_spacing: f64,
    pub z_spacing: f64,
    pub x_pos_spacing: f64,
}

impl EvaluationGrid {
    pub fn g_x(&self) -> usize {
        self.x_points.len()
    }

    pub fn g_z(&self) -> usize {
        self.z_points.len()
    }
}

fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    debug_assert!(count >= 2 && hi > lo);
    let step = (hi - lo) / (count - 1) as f64;
    (0..count)
        .map(|i| if i + 1 == count { hi } else { lo + i as f64 * step })
        .collect()
}

/// Builds evenly spaced grids spanning the support box.
pub fn build_grid(support: &SupportBox, g_x: usize, g_z: usize) -> Result<EvaluationGrid> {
    if g_x < 2 || g_z < 2 {
        return Err(Error::InvalidConfig(format!(
            "grid sizes must be at least 2, got {g_x} x {g_z}"
        )));
    }
    if !(support.x_max > support.x_min) {
        return Err(Error::DegenerateBox(format!(
            "x_min = x_max = {}",
            support.x_min
        )));
    }
    if !(support.z_max > support.z_min) {
        return Err(Error::DegenerateBox(format!(
            "z_min = z_max = {}",
            support.z_min
        )));
    }
    let m_max = support.x_min.abs().max(support.x_max);
    let x_points = linspace(support.x_min, support.x_max, g_x);
    let z_points = linspace(support.z_min, support.z_max, g_z);
    let x_pos_points = linspace(0.0, m_max, g_x);
    Ok(EvaluationGrid {
        x_spacing: (support.x_max - support.x_min) / (g_x - 1) as f64,
        z_spacing: (support.z_max - support.z_min) / (g_z - 1) as f64,
        x_pos_spacing: m_max / (g_x - 1) as f64,
        x_points,
        z_points,
        x_pos_points,
    })
}

/// Hypothesis direction: which arm is hypothesized to dominate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    AOverB,
    BOverA,
}

impl Direction {
    /// Stable tag used to derive direction-specific bootstrap streams.
    pub(crate) fn stream_tag(self) -> u64 {
        match self {
            Direction::AOverB => 0,
            Direction::BOverA => 1,
        }
    }
}

impl std::fmt::Display for Direction {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Direction::AOverB => write!(f, "A_over_B"),
            Direction::BOverA => write!(f, "B_over_A"),
        }
    }
}

/// Which direction(s) a run should test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DirectionChoice {
    AOverB,
    BOverA,
    Both,
}

impl DirectionChoice {
    pub fn directions(self) -> Vec<Direction> {
        match self {
            DirectionChoice::AOverB => vec![Direction::AOverB],
            DirectionChoice::BOverA => vec![Direction::BOverA],
            DirectionChoice::Both => vec![Direction::AOverB, Direction::BOverA],
        }
    }
}

/// Bandwidth rule for the contact-set threshold `c_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "rule")]
pub enum ContactRule {
    /// `factor · log(log n) / sqrt(n)`, natural logarithms.
    LogLog { factor: f64 },
    /// A fixed threshold, mostly useful for experiments.
    Fixed { value: f64 },
}

impl ContactRule {
    pub fn threshold(&self, n: usize) -> Result<f64> {
        match *self {
            ContactRule::LogLog { factor } => {
                // log log n must be defined and positive.
                if n < 4 {
                    return Err(Error::SampleTooSmall { n, min: 4 });
                }
                Ok(factor * (n as f64).ln().ln() / (n as f64).sqrt())
            }
            ContactRule::Fixed { value } => Ok(value),
        }
    }
}

impl Default for ContactRule {
    fn default() -> Self {
        ContactRule::LogLog { factor: 4.0 }
    }
}

/// Full configuration of a test run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub criteria: Vec<Criterion>,
    pub direction: DirectionChoice,
    pub replicates: usize,
    pub seed: u64,
    pub eta: f64,
    pub contact_rule: ContactRule,
    pub grid_x: usize,
    pub grid_z: usize,
    pub alpha: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            criteria: Criterion::SIX.to_vec(),
            direction: DirectionChoice::Both,
            replicates: 999,
            seed: 0,
            eta: 1e-6,
            contact_rule: ContactRule::default(),
            grid_x: 100,
            grid_z: 50,
            alpha: 0.05,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.criteria.is_empty() {
            return Err(Error::InvalidConfig("no criteria selected".into()));
        }
        if self.replicates < 1 {
            return Err(Error::InvalidConfig("replicates must be >= 1".into()));
        }
        if !(self.eta > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "eta must be positive, got {}",
                self.eta
            )));
        }
        if self.grid_x < 2 || self.grid_z < 2 {
            return Err(Error::InvalidConfig(format!(
                "grid sizes must be at least 2, got {} x {}",
                self.grid_x, self.grid_z
            )));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "alpha must lie in (0, 1), got {}",
                self.alpha
            )));
        }
        Ok(())
    }
}

/// Accepted CSV layouts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CsvSchema {
    /// Pick `xz` if the header has `x` and `z`, else `prepost`.
    Auto,
    /// Columns `treatment,x,z`.
    Xz,
    /// Columns `treatment,pre_income,post_income`.
    PrePost,
}

struct ColumnMap {
    treatment: Option<usize>,
    a: usize,
    b: usize,
    prepost: bool,
}

fn find_column(headers: &csv::StringRecord, name: &str) -> Option<usize> {
    headers
        .iter()
        .position(|h| h.trim().eq_ignore_ascii_case(name))
}

fn resolve_columns(
    headers: &csv::StringRecord,
    schema: CsvSchema,
    require_treatment: bool,
) -> Result<ColumnMap> {
    let treatment = find_column(headers, "treatment");
    if require_treatment && treatment.is_none() {
        return Err(Error::Schema("missing required column 'treatment'".into()));
    }
    let xz = (find_column(headers, "x"), find_column(headers, "z"));
    let prepost = (
        find_column(headers, "pre_income"),
        find_column(headers, "post_income"),
    );
    let (a, b, is_prepost) = match schema {
        CsvSchema::Xz => match xz {
            (Some(a), Some(b)) => (a, b, false),
            _ => return Err(Error::Schema("schema 'xz' needs columns x and z".into())),
        },
        CsvSchema::PrePost => match prepost {
            (Some(a), Some(b)) => (a, b, true),
            _ => {
                return Err(Error::Schema(
                    "schema 'prepost' needs columns pre_income and post_income".into(),
                ))
            }
        },
        CsvSchema::Auto => match (xz, prepost) {
            ((Some(a), Some(b)), _) => (a, b, false),
            (_, (Some(a), Some(b))) => (a, b, true),
            _ => {
                return Err(Error::Schema(
                    "header must contain either (x, z) or (pre_income, post_income)".into(),
                ))
            }
        },
    };
    Ok(ColumnMap {
        treatment,
        a,
        b,
        prepost: is_prepost,
    })
}

fn parse_cell(record: &csv::StringRecord, idx: usize, line: u64, name: &str) -> Result<f64> {
    let raw = record.get(idx).ok_or_else(|| Error::Data {
        line,
        msg: format!("missing value in column '{name}'"),
    })?;
    let v: f64 = raw.trim().parse().map_err(|_| Error::Data {
        line,
        msg: format!("column '{name}': cannot parse '{raw}' as a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Data {
            line,
            msg: format!("column '{name}': non-finite value '{raw}'"),
        });
    }
    Ok(v)
}

fn record_line(record: &csv::StringRecord, fallback: u64) -> u64 {
    record.position().map(|p| p.line()).unwrap_or(fallback)
}

fn read_observation(record: &csv::StringRecord, cols: &ColumnMap, line: u64) -> Result<Observation> {
    if cols.prepost {
        let pre = parse_cell(record, cols.a, line, "pre_income")?;
        let post = parse_cell(record, cols.b, line, "post_income")?;
        derive_changes(pre, post).map_err(|e| Error::Data {
            line,
            msg: e.to_string(),
        })
    } else {
        let x = parse_cell(record, cols.a, line, "x")?;
        let z = parse_cell(record, cols.b, line, "z")?;
        Ok(Observation { x, z })
    }
}

fn open_reader(path: &Path) -> Result<csv::Reader<std::fs::File>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

/// Loads a two-arm dataset from one CSV file with a `treatment` column.
///
/// The first treatment label encountered becomes sample A unless `label_a`
/// selects the other one. Row order is preserved within each arm.
pub fn load_samples(
    path: impl AsRef<Path>,
    schema: CsvSchema,
    label_a: Option<&str>,
) -> Result<(PolicySample, PolicySample)> {
    let path = path.as_ref();
    let mut reader = open_reader(path)?;
    let headers = reader.headers()?.clone();
    let cols = resolve_columns(&headers, schema, true)?;
    let t_col = cols.treatment.expect("treatment required above");

    let mut arms: Vec<(String, Vec<Observation>)> = Vec::new();
    let mut line = 1u64;
    for record in reader.records() {
        let record = record?;
        line = record_line(&record, line + 1);
        let label = record
            .get(t_col)
            .ok_or_else(|| Error::Data {
                line,
                msg: "missing treatment label".into(),
            })?
            .trim()
            .to_string();
        let obs = read_observation(&record, &cols, line)?;
        match arms.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(obs),
            None => {
                arms.push((label, vec![obs]));
                if arms.len() > 2 {
                    let labels: BTreeSet<String> =
                        arms.iter().map(|(l, _)| l.clone()).collect();
                    return Err(Error::TreatmentCount {
                        labels: labels.into_iter().collect(),
                    });
                }
            }
        }
    }
    if arms.len() != 2 {
        return Err(Error::TreatmentCount {
            labels: arms.into_iter().map(|(l, _)| l).collect(),
        });
    }
    if let Some(want) = label_a {
        if arms[1].0 == want {
            arms.swap(0, 1);
        } else if arms[0].0 != want {
            return Err(Error::Schema(format!(
                "label '{want}' not present; found '{}' and '{}'",
                arms[0].0, arms[1].0
            )));
        }
    }
    let (label_b, obs_b) = arms.pop().expect("two arms");
    let (label_a, obs_a) = arms.pop().expect("two arms");
    Ok((
        PolicySample::new(label_a, obs_a)?,
        PolicySample::new(label_b, obs_b)?,
    ))
}

/// Loads a two-arm dataset from one file per arm.
///
/// The `treatment` column is optional here; when present it must hold a single
/// label, which becomes the sample label unless a default overrides it.
pub fn load_sample_pair(
    path_a: impl AsRef<Path>,
    path_b: impl AsRef<Path>,
    schema: CsvSchema,
    label_a: Option<&str>,
    label_b: Option<&str>,
) -> Result<(PolicySample, PolicySample)> {
    let a = load_single_arm(path_a.as_ref(), schema, label_a.unwrap_or("A"))?;
    let b = load_single_arm(path_b.as_ref(), schema, label_b.unwrap_or("B"))?;
    Ok((a, b))
}

fn load_single_arm(path: &Path, schema: CsvSchema, default_label: &str) -> Result<PolicySample> {
    let mut reader = open_reader(path)?;
    let headers = reader.headers()?.clone();
    let cols = resolve_columns(&headers, schema, false)?;
    let mut label: Option<String> = None;
    let mut observations = Vec::new();
    let mut line = 1u64;
    for record in reader.records() {
        let record = record?;
        line = record_line(&record, line + 1);
        if let Some(t) = cols.treatment {
            let this = record
                .get(t)
                .ok_or_else(|| Error::Data {
                    line,
                    msg: "missing treatment label".into(),
                })?
                .trim()
                .to_string();
            match &label {
                None => label = Some(this),
                Some(l) if *l != this => {
                    return Err(Error::TreatmentCount {
                        labels: vec![l.clone(), this],
                    })
                }
                _ => {}
            }
        }
        observations.push(read_observation(&record, &cols, line)?);
    }
    PolicySample::new(label.unwrap_or_else(|| default_label.to_string()), observations)
}

/// Writes both samples as `treatment,x,z` CSV. Values round-trip exactly.
pub fn write_samples_csv(
    a: &PolicySample,
    b: &PolicySample,
    writer: impl Write,
) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["treatment", "x", "z"])?;
    for (sample, label) in [(a, a.label()), (b, b.label())] {
        for o in sample.observations() {
            w.write_record([label, &o.x.to_string(), &o.z.to_string()])?;
        }
    }
    w.flush().map_err(|source| Error::Io {
        path: PathBuf::from("<writer>"),
        source,
    })?;
    Ok(())
}
