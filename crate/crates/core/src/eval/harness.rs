use std::collections::VecDeque;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use crate::baselines::{BaselineKind, BaselineParams, BinaryErrorDetector};
use crate::density::{DensityDriftDetector, DetectorConfig, DriftVerdict, VerdictKind};
use crate::error::{Error, Result};
use crate::generators::{
    DriftSchedule, HyperplaneStream, InvertLabels, SeaStream, HYPERPLANE_DEFAULT_DIM,
    HYPERPLANE_DEFAULT_NOISE, SEA_DEFAULT_NOISE, SEA_THRESHOLDS,
};
use crate::hoeffding::{HoeffdingTree, TreeParams};
use crate::knowledge::{active_learn, pu_learn, LabelBudget, PuConfig, ReliableLabeledSet, Shortfall};
use crate::learner::Classifier;
use crate::seeds;
use crate::state::DriftState;
use crate::stream::{
    next_window, read_csv_stream, ClassId, CsvSchema, ExposeLabels, Exposure, LabelOracle,
    StreamSource, Window,
};

use super::metrics::{detected_within, detection_delay, false_alarms};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Density,
    Baseline(BaselineKind),
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Density => "density",
            Method::Baseline(k) => k.as_str(),
        }
    }

    /// Row label in the summary table.
    pub fn table_label(self) -> &'static str {
        match self {
            Method::Density => "DensityEst",
            Method::Baseline(BaselineKind::PageHinkley) => "PH",
            Method::Baseline(BaselineKind::Adwin) => "ADW",
            Method::Baseline(BaselineKind::Eddm) => "EDDM",
            Method::Baseline(BaselineKind::Ddm) => "DDM",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "density" | "densityest" => Ok(Method::Density),
            other => other.parse().map(Method::Baseline).map_err(|_| {
                Error::config(format!(
                    "unknown method `{s}` (expected density, ddm, eddm, adwin or ph)"
                ))
            }),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum KdMethod {
    #[default]
    Active,
    Pu,
}

impl KdMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            KdMethod::Active => "active",
            KdMethod::Pu => "pu",
        }
    }
}

impl FromStr for KdMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "active" => Ok(KdMethod::Active),
            "pu" => Ok(KdMethod::Pu),
            _ => Err(Error::config(format!("unknown kd method `{s}` (expected active or pu)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum DatasetSpec {
    Sea {
        length: u64,
        drift_points: Vec<u64>,
        noise: f64,
        thresholds: Vec<f64>,
        /// Binary label inversion from this index on.
        invert_at: Option<u64>,
    },
    Hyperplane {
        length: u64,
        dim: usize,
        drift_points: Vec<u64>,
        noise: f64,
        invert_at: Option<u64>,
    },
    Csv {
        path: PathBuf,
        schema: CsvSchema,
    },
}

impl DatasetSpec {
    pub fn sea(length: u64, drift_points: Vec<u64>) -> Self {
        DatasetSpec::Sea {
            length,
            drift_points,
            noise: SEA_DEFAULT_NOISE,
            thresholds: SEA_THRESHOLDS.to_vec(),
            invert_at: None,
        }
    }

    pub fn hyperplane(length: u64, drift_points: Vec<u64>) -> Self {
        DatasetSpec::Hyperplane {
            length,
            dim: HYPERPLANE_DEFAULT_DIM,
            drift_points,
            noise: HYPERPLANE_DEFAULT_NOISE,
            invert_at: None,
        }
    }

    pub fn name(&self) -> String {
        match self {
            DatasetSpec::Sea { invert_at: None, .. } => "sea".into(),
            DatasetSpec::Sea { .. } => "sea-inverted".into(),
            DatasetSpec::Hyperplane { invert_at: None, .. } => "hyperplane".into(),
            DatasetSpec::Hyperplane { .. } => "hyperplane-inverted".into(),
            DatasetSpec::Csv { path, .. } => path
                .file_stem()
                .map_or_else(|| "csv".into(), |s| s.to_string_lossy().into_owned()),
        }
    }

    /// Injected drift points (including a label inversion), if known.
    pub fn true_drift_points(&self) -> Vec<u64> {
        let (points, invert) = match self {
            DatasetSpec::Sea {
                drift_points,
                invert_at,
                ..
            }
            | DatasetSpec::Hyperplane {
                drift_points,
                invert_at,
                ..
            } => (drift_points.clone(), *invert_at),
            DatasetSpec::Csv { .. } => return Vec::new(),
        };
        let mut points = points;
        points.extend(invert);
        points.sort_unstable();
        points.dedup();
        points
    }

    pub fn validate(&self) -> Result<()> {
        self.open(0).map(|_| ())
    }

    /// Opens the stream; generators draw from the named generator sub-seed.
    pub fn open(&self, seed: u64) -> Result<Box<dyn StreamSource + Send>> {
        let gen_seed = seeds::derive(seed, seeds::GENERATOR);
        let with_inversion = |s: Box<dyn StreamSource + Send>, at: Option<u64>| match at {
            Some(at) => Box::new(InvertLabels::new(s, at)) as Box<dyn StreamSource + Send>,
            None => s,
        };
        match self {
            DatasetSpec::Sea {
                length,
                drift_points,
                noise,
                thresholds,
                invert_at,
            } => {
                let schedule = DriftSchedule::new(drift_points.clone(), *noise);
                let s = SeaStream::with_thresholds(gen_seed, *length, schedule, thresholds.clone())?;
                Ok(with_inversion(Box::new(s), *invert_at))
            }
            DatasetSpec::Hyperplane {
                length,
                dim,
                drift_points,
                noise,
                invert_at,
            } => {
                let schedule = DriftSchedule::new(drift_points.clone(), *noise);
                let s = HyperplaneStream::new(gen_seed, *length, *dim, schedule)?;
                Ok(with_inversion(Box::new(s), *invert_at))
            }
            DatasetSpec::Csv { path, schema } => Ok(Box::new(read_csv_stream(path, schema)?)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub run_id: String,
    pub dataset: DatasetSpec,
    pub method: Method,
    pub kd: KdMethod,
    /// Label budget.
    pub alpha: f64,
    pub window: usize,
    /// Thresholds and numeric settings of the density detector; its
    /// `alpha` and `window` are taken from this config.
    pub detector: DetectorConfig,
    pub baselines: BaselineParams,
    pub tree: TreeParams,
    pub seed: u64,
    /// Overrides the dataset's injected drift points for the metrics.
    pub true_drift_points: Option<Vec<u64>>,
    /// Events within this many instances after a true point count as hits.
    pub tolerance: u64,
    /// Fraction of instances arriving labeled, before knowledge discovery.
    /// With PU learning this is the labeling rate of positives and defaults
    /// to `alpha`.
    pub exposed_fraction: Option<f64>,
    /// Recent labeled instances a replacement is trained on when a
    /// detector without a warning level signals drift.
    pub pre_drift_margin: usize,
    /// Windows a background learner may run without a drift before it is
    /// discarded.
    pub background_patience: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            run_id: String::new(),
            dataset: DatasetSpec::sea(100_000, vec![25_000, 50_000, 75_000]),
            method: Method::Density,
            kd: KdMethod::Active,
            alpha: 1.0,
            window: 1000,
            detector: DetectorConfig::default(),
            baselines: BaselineParams::default(),
            tree: TreeParams::default(),
            seed: 1,
            true_drift_points: None,
            tolerance: 3000,
            exposed_fraction: None,
            pre_drift_margin: 200,
            background_patience: 10,
        }
    }
}

impl ExperimentConfig {
    pub fn detector_config(&self) -> DetectorConfig {
        DetectorConfig {
            alpha: self.alpha,
            window: self.window,
            ..self.detector.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.window == 0 {
            return Err(Error::config("window size must be at least 1"));
        }
        LabelBudget::new(self.alpha)?;
        self.detector_config().validate()?;
        self.tree.validate()?;
        if let Some(f) = self.exposed_fraction {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::config(format!(
                    "exposed fraction must lie in [0, 1], got {f}"
                )));
            }
        }
        Ok(())
    }

    /// `run_id` if set, else one derived from the settings that vary in a grid.
    pub fn resolved_run_id(&self) -> String {
        if !self.run_id.is_empty() {
            return self.run_id.clone();
        }
        format!(
            "{}-{}-a{}-s{}",
            self.method,
            self.dataset.name(),
            self.alpha,
            self.seed
        )
    }

    pub fn true_points(&self) -> Vec<u64> {
        self.true_drift_points
            .clone()
            .unwrap_or_else(|| self.dataset.true_drift_points())
    }

    fn exposure(&self) -> Option<Exposure> {
        match (self.kd, self.exposed_fraction) {
            (KdMethod::Pu, f) => Some(Exposure::Positives {
                positive: PuConfig::default().positive,
                fraction: f.unwrap_or(self.alpha),
            }),
            (KdMethod::Active, Some(f)) if f > 0.0 => Some(Exposure::Random { fraction: f }),
            (KdMethod::Active, _) => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct WindowRecord {
    pub window_end_index: u64,
    pub accuracy: f64,
    pub epsilon: Option<f64>,
    pub mean_density: Option<f64>,
    pub state: DriftState,
    pub drift_flag: bool,
    pub rl_size: usize,
    /// Cumulative oracle queries at the end of the window.
    pub query_count: usize,
    /// Anomalies such as skipped detection or a KD shortfall.
    pub note: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunResult {
    pub run_id: String,
    pub method: Method,
    pub dataset: String,
    pub alpha: f64,
    pub windows: Vec<WindowRecord>,
    pub drift_events: Vec<u64>,
    pub query_count: usize,
    pub instances: u64,
    pub correct: u64,
    pub true_drift_points: Vec<u64>,
    pub tolerance: u64,
}

impl RunResult {
    /// Prequential accuracy over every instance.
    pub fn average_accuracy(&self) -> f64 {
        if self.instances == 0 {
            0.0
        } else {
            self.correct as f64 / self.instances as f64
        }
    }

    pub fn drift_count(&self) -> usize {
        self.drift_events.len()
    }

    pub fn delays(&self) -> Vec<Option<u64>> {
        detection_delay(&self.drift_events, &self.true_drift_points)
    }

    pub fn false_alarms(&self) -> usize {
        false_alarms(&self.drift_events, &self.true_drift_points, self.tolerance)
    }

    pub fn detected(&self) -> usize {
        detected_within(&self.drift_events, &self.true_drift_points, self.tolerance)
    }

    /// Mean delay over detected points, if any were detected.
    pub fn mean_delay(&self) -> Option<f64> {
        let hits: Vec<u64> = self
            .delays()
            .into_iter()
            .flatten()
            .filter(|&d| d <= self.tolerance)
            .collect();
        (!hits.is_empty()).then(|| hits.iter().sum::<u64>() as f64 / hits.len() as f64)
    }
}

/// Runs `cfg` with Hoeffding trees configured by `cfg.tree`.
pub fn prequential_run(cfg: &ExperimentConfig) -> Result<RunResult> {
    run_with(cfg, HoeffdingTree::new(cfg.tree))
}

/// Runs `cfg` with clones of `template` as the learners.
pub fn run_with<C: Classifier>(cfg: &ExperimentConfig, template: C) -> Result<RunResult> {
    cfg.validate()?;
    let source = cfg.dataset.open(cfg.seed)?;
    run_on_source(cfg, source, template)
}

/// Runs `cfg` on an already opened source; `cfg.dataset` only names it.
pub fn run_on_source<C, S>(cfg: &ExperimentConfig, source: S, template: C) -> Result<RunResult>
where
    C: Classifier,
    S: StreamSource,
{
    cfg.validate()?;
    let mut source: Box<dyn StreamSource> = match cfg.exposure() {
        Some(policy) => Box::new(ExposeLabels::new(
            source,
            policy,
            seeds::rng(cfg.seed, seeds::EXPOSURE),
        )),
        None => Box::new(source),
    };
    let mut run = Run {
        cfg,
        oracle: LabelOracle::new(),
        budget: LabelBudget::new(cfg.alpha)?,
        pu: PuConfig {
            tree: cfg.tree,
            ..PuConfig::default()
        },
        kd_rng: seeds::rng(cfg.seed, seeds::KD_SAMPLING),
        result: RunResult {
            run_id: cfg.resolved_run_id(),
            method: cfg.method,
            dataset: cfg.dataset.name(),
            alpha: cfg.alpha,
            windows: Vec::new(),
            drift_events: Vec::new(),
            query_count: 0,
            instances: 0,
            correct: 0,
            true_drift_points: cfg.true_points(),
            tolerance: cfg.tolerance,
        },
    };
    match cfg.method {
        Method::Density => run.density(&mut source, template)?,
        Method::Baseline(kind) => run.baseline(&mut source, template, kind)?,
    }
    run.result.query_count = run.oracle.query_count();
    Ok(run.result)
}

struct Run<'a> {
    cfg: &'a ExperimentConfig,
    oracle: LabelOracle,
    budget: LabelBudget,
    pu: PuConfig,
    kd_rng: rand_chacha::ChaCha8Rng,
    result: RunResult,
}

impl Run<'_> {
    fn next(&mut self, source: &mut dyn StreamSource) -> Result<Option<Window>> {
        let w = next_window(source, self.cfg.window, &mut self.oracle)?;
        if let Some(w) = &w {
            self.oracle.forget_before(w.start_index());
        }
        Ok(w)
    }

    fn discover(&mut self, w: &Window) -> Result<ReliableLabeledSet> {
        match self.cfg.kd {
            KdMethod::Active => Ok(active_learn(w, &mut self.oracle, self.budget, &mut self.kd_rng)),
            KdMethod::Pu => pu_learn(w, &self.pu, &mut self.kd_rng),
        }
    }

    fn truth(&self, index: u64) -> Result<ClassId> {
        self.oracle
            .truth(index)
            .ok_or_else(|| Error::Precondition(format!("no ground truth for instance {index}")))
    }

    fn score<C: Classifier>(&mut self, model: &C, w: &Window) -> Result<u64> {
        let mut correct = 0;
        for inst in w.instances() {
            if model.predict(&inst.features) == self.truth(inst.index)? {
                correct += 1;
            }
        }
        self.result.instances += w.len() as u64;
        self.result.correct += correct;
        Ok(correct)
    }

    fn density<C: Classifier>(&mut self, source: &mut dyn StreamSource, template: C) -> Result<()> {
        let mut det = DensityDriftDetector::new(self.cfg.detector_config(), template)?;
        while let Some(w) = self.next(source)? {
            // test before any training on this window
            let correct = self.score(det.incremental(), &w)?;
            let rl = self.discover(&w)?;
            let (verdict, _) = det.detect(&w, &rl)?;
            let drift = verdict.state == DriftState::Drift;
            if drift {
                self.result.drift_events.push(w.end_index());
            }
            self.result.windows.push(WindowRecord {
                window_end_index: w.end_index(),
                accuracy: correct as f64 / w.len() as f64,
                epsilon: verdict.epsilon,
                mean_density: verdict.mean_density,
                state: verdict.state,
                drift_flag: drift,
                rl_size: rl.len(),
                query_count: self.oracle.query_count(),
                note: note(Some(&verdict), &rl),
            });
        }
        Ok(())
    }

    fn baseline<C: Classifier>(
        &mut self,
        source: &mut dyn StreamSource,
        template: C,
        kind: BaselineKind,
    ) -> Result<()> {
        let mut detector: Box<dyn BinaryErrorDetector> = self.cfg.baselines.build(kind);
        let mut model = template.fresh();
        let mut background: Option<(C, usize)> = None;
        let mut recent: VecDeque<(Vec<f64>, ClassId)> = VecDeque::new();
        let margin = self.cfg.pre_drift_margin;

        while let Some(w) = self.next(source)? {
            let rl = self.discover(&w)?;
            let mut correct = 0u64;
            let mut worst = DriftState::Stable;
            let mut drift_flag = false;
            for inst in w.instances() {
                let x = inst.features.as_slice();
                let predicted = model.predict(x);
                if predicted == self.truth(inst.index)? {
                    correct += 1;
                }
                let Some(label) = rl.label_of(inst.index) else {
                    continue;
                };
                let state = detector.update(f64::from(u8::from(predicted != label)));
                match state {
                    DriftState::Warning => {
                        if background.is_none() {
                            background = Some((model.fresh(), 0));
                        }
                        if worst == DriftState::Stable {
                            worst = DriftState::Warning;
                        }
                    }
                    DriftState::Drift => {
                        self.result.drift_events.push(inst.index);
                        drift_flag = true;
                        worst = DriftState::Drift;
                        model = match background.take() {
                            Some((bg, _)) if bg.is_trained() => bg,
                            _ if detector.has_warning() => model.fresh(),
                            _ => {
                                let mut m = model.fresh();
                                m.train_batch(recent.iter().map(|(f, y)| (f.as_slice(), *y)))?;
                                m
                            }
                        };
                        detector.reset();
                        recent.clear();
                    }
                    DriftState::Stable => {}
                }
                model.train_one(x, label)?;
                if let Some((bg, _)) = background.as_mut() {
                    bg.train_one(x, label)?;
                }
                if margin > 0 {
                    if recent.len() == margin {
                        recent.pop_front();
                    }
                    recent.push_back((x.to_vec(), label));
                }
            }
            if let Some((_, age)) = background.as_mut() {
                *age += 1;
                if *age > self.cfg.background_patience {
                    background = None;
                }
            }
            self.result.instances += w.len() as u64;
            self.result.correct += correct;
            self.result.windows.push(WindowRecord {
                window_end_index: w.end_index(),
                accuracy: correct as f64 / w.len() as f64,
                epsilon: None,
                mean_density: None,
                state: worst,
                drift_flag,
                rl_size: rl.len(),
                query_count: self.oracle.query_count(),
                note: note(None, &rl),
            });
        }
        Ok(())
    }
}

fn note(verdict: Option<&DriftVerdict>, rl: &ReliableLabeledSet) -> String {
    let mut parts = Vec::new();
    if let Some(v) = verdict {
        match v.kind {
            VerdictKind::Evaluated => {}
            VerdictKind::Bootstrap => parts.push("bootstrap".to_string()),
            VerdictKind::Skipped(crate::density::SkipReason::SingleClass) => {
                parts.push("skipped:single-class".to_string())
            }
            VerdictKind::Skipped(crate::density::SkipReason::TooFewLabels { have, need }) => {
                parts.push(format!("skipped:labels-{have}-of-{need}"))
            }
        }
    }
    match rl.shortfall() {
        None => {}
        Some(Shortfall::BudgetExhausted { missing }) => parts.push(format!("budget-short-{missing}")),
        Some(Shortfall::NoPositives) => parts.push("no-positives".to_string()),
        Some(Shortfall::NegativePoolShort { missing }) => {
            parts.push(format!("negatives-short-{missing}"))
        }
    }
    parts.join(";")
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Predicts the ground truth of a fixed concept.
    #[derive(Clone, Debug)]
    struct Perfect(fn(&[f64]) -> ClassId, bool);

    impl Classifier for Perfect {
        fn train_one(&mut self, _: &[f64], _: ClassId) -> Result<()> {
            self.1 = true;
            Ok(())
        }

        fn predict(&self, x: &[f64]) -> ClassId {
            (self.0)(x)
        }

        fn is_trained(&self) -> bool {
            self.1
        }

        fn fresh(&self) -> Self {
            Perfect(self.0, false)
        }
    }

    fn sea8(x: &[f64]) -> ClassId {
        ClassId(u32::from(x[0] + x[1] <= 8.0))
    }

    fn noiseless_sea(length: u64) -> DatasetSpec {
        DatasetSpec::Sea {
            length,
            drift_points: vec![],
            noise: 0.0,
            thresholds: vec![8.0],
            invert_at: None,
        }
    }

    #[test]
    fn perfect_predictor_never_drifts() {
        for method in ["density", "ddm", "eddm", "adwin", "ph"] {
            let cfg = ExperimentConfig {
                dataset: noiseless_sea(10_000),
                method: method.parse().unwrap(),
                ..ExperimentConfig::default()
            };
            let r = run_with(&cfg, Perfect(sea8, false)).unwrap();
            assert_eq!(r.average_accuracy(), 1.0, "{method}");
            assert_eq!(r.drift_count(), 0, "{method}");
            assert_eq!(r.windows.len(), 10);
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in ["density", "ddm", "eddm", "adwin", "ph"] {
            assert_eq!(m.parse::<Method>().unwrap().as_str(), m);
        }
        assert!("ks".parse::<Method>().is_err());
    }

    #[test]
    fn budget_is_respected() {
        for alpha in [0.2, 0.55, 1.0] {
            let cfg = ExperimentConfig {
                dataset: DatasetSpec::sea(5_500, vec![2_000]),
                alpha,
                ..ExperimentConfig::default()
            };
            let r = prequential_run(&cfg).unwrap();
            let cap = (alpha * 5_500.0).ceil() as usize + cfg.window;
            assert!(r.query_count <= cap);
            assert_eq!(r.windows.len(), 6);
            assert_eq!(r.windows.last().unwrap().window_end_index, 5_499);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let cfg = ExperimentConfig {
            dataset: DatasetSpec::sea(6_000, vec![3_000]),
            alpha: 0.4,
            ..ExperimentConfig::default()
        };
        assert_eq!(prequential_run(&cfg).unwrap(), prequential_run(&cfg).unwrap());
        let ddm = ExperimentConfig {
            method: Method::Baseline(BaselineKind::Ddm),
            ..cfg
        };
        assert_eq!(prequential_run(&ddm).unwrap(), prequential_run(&ddm).unwrap());
    }

    #[test]
    fn first_window_is_bootstrap() {
        let cfg = ExperimentConfig {
            dataset: DatasetSpec::sea(3_000, vec![]),
            ..ExperimentConfig::default()
        };
        let r = prequential_run(&cfg).unwrap();
        assert_eq!(r.windows[0].note, "bootstrap");
        assert_eq!(r.windows[0].epsilon, None);
        assert!(r.windows[1].epsilon.is_some());
    }

    #[test]
    fn pu_run_records_shortfalls_and_queries_nothing() {
        let cfg = ExperimentConfig {
            dataset: DatasetSpec::sea(3_000, vec![]),
            kd: KdMethod::Pu,
            alpha: 0.6,
            ..ExperimentConfig::default()
        };
        let r = prequential_run(&cfg).unwrap();
        assert_eq!(r.query_count, 0);
        assert!(r.windows.iter().all(|w| w.rl_size > 0));
    }

    #[test]
    fn invalid_thresholds_fail_before_running() {
        let cfg = ExperimentConfig {
            detector: DetectorConfig {
                tau: 0.2,
                phi: 0.1,
                ..DetectorConfig::default()
            },
            ..ExperimentConfig::default()
        };
        assert!(matches!(prequential_run(&cfg), Err(Error::Config(_))));
    }
}
