//! Instances, windows, stream sources and the label oracle.
//!
//! Ground truth never travels on an [`Instance`] by default. Sources hand
//! each label to the [`LabelOracle`] when the instance arrives. The instance
//! only carries a label when the source marks it as arriving labeled. This
//! lets one mechanism simulate both partially labeled and fully unlabeled
//! streams under a label budget.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs::File;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::knowledge::LabelBudget;

/// Class identifier. Values are dense, starting at zero.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct ClassId(pub u32);

impl ClassId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ClassId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Instance {
    pub index: u64,
    pub features: Vec<f64>,
    pub label: Option<ClassId>,
}

impl Instance {
    /// Builds an unlabeled instance, rejecting NaN and infinite features.
    pub fn new(index: u64, features: Vec<f64>) -> Result<Self> {
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { index });
        }
        Ok(Self {
            index,
            features,
            label: None,
        })
    }

    pub fn with_label(mut self, label: ClassId) -> Self {
        self.label = Some(label);
        self
    }

    pub fn dim(&self) -> usize {
        self.features.len()
    }
}

/// A contiguous batch of instances.
#[derive(Clone, Debug, PartialEq)]
pub struct Window {
    instances: Vec<Instance>,
    start_index: u64,
    end_index: u64,
}

impl Window {
    /// Wraps `instances`, which must be non-empty with contiguous increasing
    /// indices.
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        let (first, last) = match (instances.first(), instances.last()) {
            (Some(f), Some(l)) => (f.index, l.index),
            _ => return Err(Error::Precondition("window must not be empty".into())),
        };
        if instances
            .windows(2)
            .any(|pair| pair[1].index != pair[0].index + 1)
        {
            return Err(Error::Precondition(
                "window indices must be contiguous and increasing".into(),
            ));
        }
        Ok(Self {
            instances,
            start_index: first,
            end_index: last,
        })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn start_index(&self) -> u64 {
        self.start_index
    }

    /// Index of the last instance (inclusive).
    pub fn end_index(&self) -> u64 {
        self.end_index
    }

    pub fn dim(&self) -> usize {
        self.instances[0].dim()
    }

    pub fn labeled(&self) -> impl Iterator<Item = (&Instance, ClassId)> {
        self.instances
            .iter()
            .filter_map(|inst| inst.label.map(|l| (inst, l)))
    }

    pub fn labeled_count(&self) -> usize {
        self.instances.iter().filter(|i| i.label.is_some()).count()
    }
}

/// Fraction of instances in `w` that carry a label.
pub fn labeled_fraction(w: &Window) -> f64 {
    if w.is_empty() {
        return 0.0;
    }
    w.labeled_count() as f64 / w.len() as f64
}

/// Number of labels allowed for `n` instances at fraction `alpha`,
/// i.e. `ceil(alpha * n)`, computed so that products landing a rounding
/// error above an integer do not round up.
pub fn label_allowance(alpha: f64, n: usize) -> usize {
    let raw = alpha * n as f64;
    let nearest = raw.round();
    if (raw - nearest).abs() < 1e-9 {
        nearest.max(0.0) as usize
    } else {
        raw.ceil().max(0.0) as usize
    }
}

/// One item produced by a [`StreamSource`].
#[derive(Clone, Debug, PartialEq)]
pub struct Record {
    pub index: u64,
    pub features: Vec<f64>,
    pub truth: ClassId,
    /// Whether the label arrives with the instance.
    pub exposed: bool,
}

/// Single-consumer sequential source of labeled records.
pub trait StreamSource {
    fn dim(&self) -> usize;

    fn num_classes(&self) -> usize;

    /// `None` at end of stream.
    fn next_record(&mut self) -> Option<Result<Record>>;

    fn name(&self) -> String {
        "stream".to_string()
    }
}

impl<S: StreamSource + ?Sized> StreamSource for Box<S> {
    fn dim(&self) -> usize {
        (**self).dim()
    }

    fn num_classes(&self) -> usize {
        (**self).num_classes()
    }

    fn next_record(&mut self) -> Option<Result<Record>> {
        (**self).next_record()
    }

    fn name(&self) -> String {
        (**self).name()
    }
}

/// Reads the next `n` records into a window, handing truths to `oracle`.
///
/// Returns `Ok(None)` once the source is exhausted. The final window of a
/// finite stream may be shorter than `n`.
pub fn next_window<S: StreamSource + ?Sized>(
    source: &mut S,
    n: usize,
    oracle: &mut LabelOracle,
) -> Result<Option<Window>> {
    if n == 0 {
        return Err(Error::config("window size must be at least 1"));
    }
    let mut instances = Vec::with_capacity(n);
    while instances.len() < n {
        let Some(record) = source.next_record() else {
            break;
        };
        let record = record?;
        oracle.register(record.index, record.truth);
        let mut inst = Instance::new(record.index, record.features)?;
        if record.exposed {
            inst.label = oracle.reveal(record.index);
        }
        instances.push(inst);
    }
    if instances.is_empty() {
        return Ok(None);
    }
    Window::new(instances).map(Some)
}

/// An in-memory source, mostly useful for tests and small fixtures.
#[derive(Clone, Debug)]
pub struct VecSource {
    records: std::vec::IntoIter<Record>,
    dim: usize,
    num_classes: usize,
    name: String,
}

impl VecSource {
    /// Rows are `(features, truth)`, indexed from zero, none exposed.
    pub fn new(rows: Vec<(Vec<f64>, ClassId)>) -> Self {
        let dim = rows.first().map_or(0, |(f, _)| f.len());
        let num_classes = rows
            .iter()
            .map(|(_, c)| c.index() + 1)
            .max()
            .unwrap_or(0);
        let records: Vec<Record> = rows
            .into_iter()
            .enumerate()
            .map(|(i, (features, truth))| Record {
                index: i as u64,
                features,
                truth,
                exposed: false,
            })
            .collect();
        Self {
            records: records.into_iter(),
            dim,
            num_classes,
            name: "memory".into(),
        }
    }

    pub fn from_records(records: Vec<Record>, dim: usize, num_classes: usize) -> Self {
        Self {
            records: records.into_iter(),
            dim,
            num_classes,
            name: "memory".into(),
        }
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl StreamSource for VecSource {
    fn dim(&self) -> usize {
        self.dim
    }

    fn num_classes(&self) -> usize {
        self.num_classes
    }

    fn next_record(&mut self) -> Option<Result<Record>> {
        self.records.next().map(Ok)
    }

    fn name(&self) -> String {
        self.name.clone()
    }
}

/// Policy deciding which instances arrive labeled.
#[derive(Clone, Debug, PartialEq)]
pub enum Exposure {
    /// Each instance arrives labeled with probability `fraction`.
    Random { fraction: f64 },
    /// Only instances of `positive` arrive labeled, each with probability
    /// `fraction` (the PU-learning regime).
    Positives { positive: ClassId, fraction: f64 },
}

/// Wraps a source and marks records as arriving labeled per an [`Exposure`].
pub struct ExposeLabels<S> {
    inner: S,
    policy: Exposure,
    rng: ChaCha8Rng,
}

impl<S: StreamSource> ExposeLabels<S> {
    pub fn new(inner: S, policy: Exposure, rng: ChaCha8Rng) -> Self {
        Self { inner, policy, rng }
    }
}

impl<S: StreamSource> StreamSource for ExposeLabels<S> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn next_record(&mut self) -> Option<Result<Record>> {
        let mut record = match self.inner.next_record()? {
            Ok(r) => r,
            Err(e) => return Some(Err(e)),
        };
        // one draw per record keeps the exposure stream aligned with indices
        let u: f64 = self.rng.gen();
        record.exposed |= match self.policy {
            Exposure::Random { fraction } => u < fraction,
            Exposure::Positives { positive, fraction } => record.truth == positive && u < fraction,
        };
        Some(Ok(record))
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

/// Raised when a budget-checked query would exceed the allowance.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct OracleRefusal {
    pub allowance: usize,
    pub query_count: usize,
}

/// Holds hidden ground truth and accounts for revealed labels.
#[derive(Clone, Debug, Default)]
pub struct LabelOracle {
    truth: HashMap<u64, ClassId>,
    charged: HashSet<u64>,
    revealed: HashSet<u64>,
    seen: usize,
    query_count: usize,
}

impl LabelOracle {
    pub fn new() -> Self {
        Self::default()
    }

    /// Records the ground truth of a newly arrived instance.
    pub fn register(&mut self, index: u64, truth: ClassId) {
        if self.truth.insert(index, truth).is_none() {
            self.seen += 1;
        }
    }

    /// Distinct instances registered so far, including forgotten ones.
    pub fn instances_seen(&self) -> usize {
        self.seen
    }

    /// Number of labels obtained through [`query`](Self::query).
    pub fn query_count(&self) -> usize {
        self.query_count
    }

    /// Ground truth for evaluation. Never charged.
    pub fn truth(&self, index: u64) -> Option<ClassId> {
        self.truth.get(&index).copied()
    }

    /// Reveals the label of an instance that arrives labeled. Never charged.
    pub fn reveal(&mut self, index: u64) -> Option<ClassId> {
        let label = self.truth(index)?;
        self.revealed.insert(index);
        Some(label)
    }

    pub fn is_revealed(&self, index: u64) -> bool {
        self.revealed.contains(&index) || self.charged.contains(&index)
    }

    /// `ceil(alpha * instances_seen)`.
    pub fn allowance(&self, budget: LabelBudget) -> usize {
        label_allowance(budget.fraction(), self.instances_seen())
    }

    /// Budget-checked label request. An index is charged at most once and
    /// labels that arrived with their instance are free. Unknown indices
    /// yield `Ok(None)`.
    pub fn query(
        &mut self,
        index: u64,
        budget: LabelBudget,
    ) -> std::result::Result<Option<ClassId>, OracleRefusal> {
        let Some(label) = self.truth(index) else {
            return Ok(None);
        };
        if self.is_revealed(index) {
            return Ok(Some(label));
        }
        let allowance = self.allowance(budget);
        if self.query_count + 1 > allowance {
            return Err(OracleRefusal {
                allowance,
                query_count: self.query_count,
            });
        }
        self.charged.insert(index);
        self.query_count += 1;
        Ok(Some(label))
    }

    /// Drops ground truth for indices below `index` to bound memory on long
    /// streams. Accounting is unaffected.
    pub fn forget_before(&mut self, index: u64) {
        self.truth.retain(|&i, _| i >= index);
        self.revealed.retain(|&i| i >= index);
        self.charged.retain(|&i| i >= index);
    }
}

/// Column layout expected in a dataset CSV.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvSchema {
    /// Expected number of feature columns; inferred from the header if unset.
    pub num_features: Option<usize>,
    /// Declared class count; labels at or above it are rejected. Inferred
    /// from the data if unset.
    pub num_classes: Option<usize>,
}

/// A dataset CSV parsed into memory, served as a stream in file order.
#[derive(Debug)]
pub struct CsvStream {
    inner: VecSource,
    path: PathBuf,
}

impl CsvStream {
    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl StreamSource for CsvStream {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn num_classes(&self) -> usize {
        self.inner.num_classes()
    }

    fn next_record(&mut self) -> Option<Result<Record>> {
        self.inner.next_record()
    }

    fn name(&self) -> String {
        self.inner.name()
    }
}

/// Opens a dataset CSV: header row, numeric feature columns, then an integer
/// `label` column. Errors name the offending file line.
pub fn read_csv_stream(path: impl AsRef<Path>, schema: &CsvSchema) -> Result<CsvStream> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let ingest = |row: u64, message: String| Error::Ingest {
        path: path.to_path_buf(),
        row,
        message,
    };

    let headers = reader.headers()?.clone();
    let width = headers.len();
    if width < 2 || &headers[width - 1] != "label" {
        return Err(ingest(
            1,
            "header must list feature columns followed by `label`".into(),
        ));
    }
    let dim = width - 1;
    if let Some(expected) = schema.num_features {
        if expected != dim {
            return Err(ingest(
                1,
                format!("expected {expected} feature columns, header has {dim}"),
            ));
        }
    }

    let mut records = Vec::new();
    let mut max_class = 0usize;
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = row.position().map_or(i as u64 + 2, |p| p.line());
        if row.len() != width {
            return Err(ingest(
                line,
                format!("expected {width} columns, found {}", row.len()),
            ));
        }
        let mut features = Vec::with_capacity(dim);
        for (col, cell) in row.iter().take(dim).enumerate() {
            let value: f64 = cell.parse().map_err(|_| {
                ingest(
                    line,
                    format!("non-numeric value `{cell}` in column `{}`", &headers[col]),
                )
            })?;
            if !value.is_finite() {
                return Err(ingest(
                    line,
                    format!("non-finite value in column `{}`", &headers[col]),
                ));
            }
            features.push(value);
        }
        let cell = &row[dim];
        let label: u32 = cell
            .parse()
            .map_err(|_| ingest(line, format!("unknown label value `{cell}`")))?;
        if let Some(classes) = schema.num_classes {
            if label as usize >= classes {
                return Err(ingest(
                    line,
                    format!("unknown label value `{cell}` (declared {classes} classes)"),
                ));
            }
        }
        max_class = max_class.max(label as usize);
        records.push(Record {
            index: i as u64,
            features,
            truth: ClassId(label),
            exposed: false,
        });
    }
    let num_classes = schema
        .num_classes
        .unwrap_or(if records.is_empty() { 0 } else { max_class + 1 });
    let name = path
        .file_stem()
        .map_or_else(|| "csv".to_string(), |s| s.to_string_lossy().into_owned());
    Ok(CsvStream {
        inner: VecSource::from_records(records, dim, num_classes).named(name),
        path: path.to_path_buf(),
    })
}
