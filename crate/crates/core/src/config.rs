//! Line-oriented experiment configuration.
//!
//! ```text
//! # comment
//! [run]
//! method = density
//! label_budget = 0.6
//!
//! [dataset]
//! gen = sea
//! drift_at = 25000, 50000, 75000
//! ```
//!
//! Every key belongs to a section; unknown sections or keys are rejected.
//! Values are kept as strings until [`Settings::experiment`] resolves them,
//! so command-line flags can override file entries by setting the same key.
//! [`render`] writes a resolved configuration back in this format.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::eval::{DatasetSpec, ExperimentConfig, KdMethod, Method};
use crate::generators::{
    HYPERPLANE_DEFAULT_DIM, HYPERPLANE_DEFAULT_NOISE, SEA_DEFAULT_NOISE, SEA_THRESHOLDS,
};
use crate::stream::CsvSchema;

const KEYS: &[(&str, &[&str])] = &[
    (
        "run",
        &[
            "run_id",
            "method",
            "kd",
            "label_budget",
            "window",
            "seed",
            "tolerance",
            "true_drift_points",
            "exposed_fraction",
            "pre_drift_margin",
            "background_patience",
        ],
    ),
    (
        "dataset",
        &[
            "gen",
            "path",
            "length",
            "drift_at",
            "noise",
            "thresholds",
            "dim",
            "invert_at",
            "num_features",
            "num_classes",
        ],
    ),
    (
        "detector",
        &["tau", "phi", "delta", "min_rl", "variance_floor", "gamma"],
    ),
    (
        "tree",
        &["grace_period", "split_confidence", "tie_threshold", "max_depth"],
    ),
    ("ddm", &["min_instances", "warning_level", "drift_level"]),
    (
        "eddm",
        &["warning_ratio", "drift_ratio", "min_errors", "min_instances"],
    ),
    ("adwin", &["delta", "max_buckets", "min_sub_window"]),
    ("ph", &["lambda", "delta", "min_instances"]),
    (
        "bench",
        &["methods", "budgets", "datasets", "seeds", "baseline_budget"],
    ),
];

/// Drift points used when a generator is selected without `drift_at`.
pub const SEA_DEFAULT_DRIFTS: [u64; 3] = [25_000, 50_000, 75_000];
pub const HYPERPLANE_DEFAULT_DRIFTS: [u64; 1] = [75_000];
pub const DEFAULT_LENGTH: u64 = 100_000;

fn is_known(key: &str) -> bool {
    key.split_once('.').is_some_and(|(section, name)| {
        KEYS.iter()
            .any(|(s, names)| *s == section && names.contains(&name))
    })
}

/// `section.key -> value` pairs.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    pub fn new() -> Self {
        Self::default()
    }

    /// Sets `section.key`, rejecting keys outside the documented set.
    pub fn set(&mut self, key: &str, value: impl Into<String>) -> Result<()> {
        if !is_known(key) {
            return Err(Error::config(format!("unknown configuration key `{key}`")));
        }
        self.values.insert(key.to_string(), value.into());
        Ok(())
    }

    pub fn remove(&mut self, key: &str) -> Option<String> {
        self.values.remove(key)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    /// Parses the file format; `origin` only labels error messages.
    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let mut settings = Self::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            let err = |msg: String| Error::config(format!("{origin}:{}: {msg}", i + 1));
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                let name = name.trim();
                if !KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(err(format!("unknown section `[{name}]`")));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(err(format!("expected `key = value`, got `{line}`")));
            };
            let Some(sec) = &section else {
                return Err(err(format!("`{}` appears before any [section]", key.trim())));
            };
            let full = format!("{sec}.{}", key.trim());
            if !is_known(&full) {
                return Err(err(format!("unknown key `{}` in [{sec}]", key.trim())));
            }
            settings.values.insert(full, value.trim().to_string());
        }
        Ok(settings)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Applies `other` on top of `self`.
    pub fn merge(&mut self, other: &Settings) {
        for (k, v) in &other.values {
            self.values.insert(k.clone(), v.clone());
        }
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(v) => v.parse().map(Some).map_err(|_| {
                Error::config(format!("invalid value `{v}` for `{key}`"))
            }),
        }
    }

    fn or<T: FromStr>(&self, key: &str, default: T) -> Result<T> {
        Ok(self.parsed(key)?.unwrap_or(default))
    }

    fn list<T: FromStr>(&self, key: &str) -> Result<Option<Vec<T>>> {
        self.get(key).map(|v| parse_list(v, key)).transpose()
    }

    /// The dataset named by `[dataset]`: a generator, or a CSV file.
    pub fn dataset(&self) -> Result<DatasetSpec> {
        let gen = self.get("dataset.gen");
        match (gen, self.get("dataset.path")) {
            (Some(g), Some(_)) if g != "csv" => Err(Error::config(
                "set either `dataset.gen` or `dataset.path`, not both",
            )),
            (Some("csv"), None) => Err(Error::config("`gen = csv` needs `dataset.path`")),
            (_, Some(path)) => self.dataset_named(path),
            (Some(g), None) => self.dataset_named(g),
            (None, None) => self.dataset_named("sea"),
        }
    }

    /// `name` is `sea`, `hyperplane`, or a CSV path; the other `[dataset]`
    /// keys fill in its parameters.
    pub fn dataset_named(&self, name: &str) -> Result<DatasetSpec> {
        let length = self.or("dataset.length", DEFAULT_LENGTH)?;
        let drifts = |defaults: &[u64]| -> Result<Vec<u64>> {
            Ok(self
                .list("dataset.drift_at")?
                .unwrap_or_else(|| defaults.iter().copied().filter(|&p| p < length).collect()))
        };
        let invert_at = self.parsed("dataset.invert_at")?;
        match name {
            "sea" => Ok(DatasetSpec::Sea {
                length,
                drift_points: drifts(&SEA_DEFAULT_DRIFTS)?,
                noise: self.or("dataset.noise", SEA_DEFAULT_NOISE)?,
                thresholds: self
                    .list("dataset.thresholds")?
                    .unwrap_or_else(|| SEA_THRESHOLDS.to_vec()),
                invert_at,
            }),
            "hyperplane" => Ok(DatasetSpec::Hyperplane {
                length,
                dim: self.or("dataset.dim", HYPERPLANE_DEFAULT_DIM)?,
                drift_points: drifts(&HYPERPLANE_DEFAULT_DRIFTS)?,
                noise: self.or("dataset.noise", HYPERPLANE_DEFAULT_NOISE)?,
                invert_at,
            }),
            path => Ok(DatasetSpec::Csv {
                path: PathBuf::from(path),
                schema: CsvSchema {
                    num_features: self.parsed("dataset.num_features")?,
                    num_classes: self.parsed("dataset.num_classes")?,
                },
            }),
        }
    }

    /// Resolves every experiment key, with defaults for the unset ones.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let d = ExperimentConfig::default();
        let mut cfg = ExperimentConfig {
            run_id: self.get("run.run_id").unwrap_or_default().to_string(),
            dataset: self.dataset()?,
            method: self.or("run.method", d.method)?,
            kd: self.get("run.kd").map_or(Ok(d.kd), KdMethod::from_str)?,
            alpha: self.or("run.label_budget", d.alpha)?,
            window: self.or("run.window", d.window)?,
            seed: self.or("run.seed", d.seed)?,
            tolerance: self.or("run.tolerance", d.tolerance)?,
            true_drift_points: self.list("run.true_drift_points")?,
            exposed_fraction: self.parsed("run.exposed_fraction")?,
            pre_drift_margin: self.or("run.pre_drift_margin", d.pre_drift_margin)?,
            background_patience: self.or("run.background_patience", d.background_patience)?,
            ..d
        };
        let det = &mut cfg.detector;
        det.tau = self.or("detector.tau", det.tau)?;
        det.phi = self.or("detector.phi", det.phi)?;
        det.delta = self.or("detector.delta", det.delta)?;
        det.min_rl = self.or("detector.min_rl", det.min_rl)?;
        det.variance_floor = self.or("detector.variance_floor", det.variance_floor)?;
        det.gamma_override = self.parsed("detector.gamma")?;

        let tree = &mut cfg.tree;
        tree.grace_period = self.or("tree.grace_period", tree.grace_period)?;
        tree.split_confidence = self.or("tree.split_confidence", tree.split_confidence)?;
        tree.tie_threshold = self.or("tree.tie_threshold", tree.tie_threshold)?;
        if let Some(v) = self.get("tree.max_depth") {
            tree.max_depth = if v == "none" {
                None
            } else {
                Some(self.parsed("tree.max_depth")?.expect("key present"))
            };
        }

        let b = &mut cfg.baselines;
        b.ddm.min_instances = self.or("ddm.min_instances", b.ddm.min_instances)?;
        b.ddm.warning_level = self.or("ddm.warning_level", b.ddm.warning_level)?;
        b.ddm.drift_level = self.or("ddm.drift_level", b.ddm.drift_level)?;
        b.eddm.warning_ratio = self.or("eddm.warning_ratio", b.eddm.warning_ratio)?;
        b.eddm.drift_ratio = self.or("eddm.drift_ratio", b.eddm.drift_ratio)?;
        b.eddm.min_errors = self.or("eddm.min_errors", b.eddm.min_errors)?;
        b.eddm.min_instances = self.or("eddm.min_instances", b.eddm.min_instances)?;
        b.adwin.delta = self.or("adwin.delta", b.adwin.delta)?;
        b.adwin.max_buckets = self.or("adwin.max_buckets", b.adwin.max_buckets)?;
        b.adwin.min_sub_window = self.or("adwin.min_sub_window", b.adwin.min_sub_window)?;
        b.ph.lambda = self.or("ph.lambda", b.ph.lambda)?;
        b.ph.delta = self.or("ph.delta", b.ph.delta)?;
        b.ph.min_instances = self.or("ph.min_instances", b.ph.min_instances)?;

        cfg.validate()?;
        Ok(cfg)
    }

    pub fn bench_methods(&self) -> Result<Vec<Method>> {
        self.list("bench.methods")
            .map(|m| m.unwrap_or_else(|| vec![Method::Density]))
    }

    /// `bench.budgets`, either a list or `start:end:step`.
    pub fn bench_budgets(&self) -> Result<Vec<f64>> {
        match self.get("bench.budgets") {
            None => Ok(vec![1.0]),
            Some(v) if v.contains(':') => parse_range(v),
            Some(_) => Ok(self.list("bench.budgets")?.unwrap_or_default()),
        }
    }

    pub fn bench_seeds(&self) -> Result<Vec<u64>> {
        self.list("bench.seeds")
            .map(|s| s.unwrap_or_else(|| vec![self.or("run.seed", 1).unwrap_or(1)]))
    }

    pub fn bench_datasets(&self) -> Result<Vec<DatasetSpec>> {
        match self.get("bench.datasets") {
            None => Ok(vec![self.dataset()?]),
            Some(v) => split(v).map(|name| self.dataset_named(name)).collect(),
        }
    }

    /// `None` means baselines run at every grid budget.
    pub fn bench_baseline_budget(&self) -> Result<Option<f64>> {
        match self.get("bench.baseline_budget") {
            None => Ok(Some(1.0)),
            Some("grid") => Ok(None),
            Some(_) => self.parsed("bench.baseline_budget"),
        }
    }
}

fn split(v: &str) -> impl Iterator<Item = &str> {
    v.split(',').map(str::trim).filter(|s| !s.is_empty())
}

fn parse_list<T: FromStr>(v: &str, key: &str) -> Result<Vec<T>> {
    if v.trim() == "none" {
        return Ok(Vec::new());
    }
    split(v)
        .map(|item| {
            item.parse()
                .map_err(|_| Error::config(format!("invalid list item `{item}` for `{key}`")))
        })
        .collect()
}

/// `start:end:step`, inclusive of `end` up to rounding.
pub fn parse_range(v: &str) -> Result<Vec<f64>> {
    let parts: Vec<f64> = v
        .split(':')
        .map(|p| p.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::config(format!("invalid range `{v}`, expected start:end:step")))?;
    let [start, end, step] = parts[..] else {
        return Err(Error::config(format!("invalid range `{v}`, expected start:end:step")));
    };
    if !(step > 0.0) || end < start {
        return Err(Error::config(format!("invalid range `{v}`")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        // round to suppress float noise such as 0.30000000000000004
        .map(|k| ((start + k as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn join<T: ToString>(items: &[T]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.iter().map(T::to_string).collect::<Vec<_>>().join(",")
    }
}

/// The resolved configuration in file format, one line per key.
pub fn render(cfg: &ExperimentConfig) -> Vec<String> {
    let mut out = Vec::new();
    let mut section = |name: &str, pairs: Vec<(&str, String)>| {
        out.push(format!("[{name}]"));
        for (k, v) in pairs {
            out.push(format!("{k} = {v}"));
        }
    };
    let mut run = vec![
        ("run_id", cfg.resolved_run_id()),
        ("method", cfg.method.to_string()),
        ("kd", cfg.kd.as_str().to_string()),
        ("label_budget", cfg.alpha.to_string()),
        ("window", cfg.window.to_string()),
        ("seed", cfg.seed.to_string()),
        ("tolerance", cfg.tolerance.to_string()),
        ("true_drift_points", join(&cfg.true_points())),
        ("pre_drift_margin", cfg.pre_drift_margin.to_string()),
        ("background_patience", cfg.background_patience.to_string()),
    ];
    if let Some(f) = cfg.exposed_fraction {
        run.push(("exposed_fraction", f.to_string()));
    }
    section("run", run);

    let dataset = match &cfg.dataset {
        DatasetSpec::Sea {
            length,
            drift_points,
            noise,
            thresholds,
            invert_at,
        } => {
            let mut v = vec![
                ("gen", "sea".to_string()),
                ("length", length.to_string()),
                ("drift_at", join(drift_points)),
                ("noise", noise.to_string()),
                ("thresholds", join(thresholds)),
            ];
            if let Some(at) = invert_at {
                v.push(("invert_at", at.to_string()));
            }
            v
        }
        DatasetSpec::Hyperplane {
            length,
            dim,
            drift_points,
            noise,
            invert_at,
        } => {
            let mut v = vec![
                ("gen", "hyperplane".to_string()),
                ("length", length.to_string()),
                ("dim", dim.to_string()),
                ("drift_at", join(drift_points)),
                ("noise", noise.to_string()),
            ];
            if let Some(at) = invert_at {
                v.push(("invert_at", at.to_string()));
            }
            v
        }
        DatasetSpec::Csv { path, schema } => {
            let mut v = vec![("path", path.display().to_string())];
            if let Some(n) = schema.num_features {
                v.push(("num_features", n.to_string()));
            }
            if let Some(n) = schema.num_classes {
                v.push(("num_classes", n.to_string()));
            }
            v
        }
    };
    section("dataset", dataset);

    let det = &cfg.detector;
    let mut detector = vec![
        ("tau", det.tau.to_string()),
        ("phi", det.phi.to_string()),
        ("delta", det.delta.to_string()),
        ("min_rl", det.min_rl.to_string()),
        ("variance_floor", det.variance_floor.to_string()),
    ];
    if let Some(g) = det.gamma_override {
        detector.push(("gamma", g.to_string()));
    }
    section("detector", detector);

    let t = &cfg.tree;
    section(
        "tree",
        vec![
            ("grace_period", t.grace_period.to_string()),
            ("split_confidence", t.split_confidence.to_string()),
            ("tie_threshold", t.tie_threshold.to_string()),
            (
                "max_depth",
                t.max_depth.map_or_else(|| "none".into(), |d| d.to_string()),
            ),
        ],
    );

    let b = &cfg.baselines;
    section(
        "ddm",
        vec![
            ("min_instances", b.ddm.min_instances.to_string()),
            ("warning_level", b.ddm.warning_level.to_string()),
            ("drift_level", b.ddm.drift_level.to_string()),
        ],
    );
    section(
        "eddm",
        vec![
            ("warning_ratio", b.eddm.warning_ratio.to_string()),
            ("drift_ratio", b.eddm.drift_ratio.to_string()),
            ("min_errors", b.eddm.min_errors.to_string()),
            ("min_instances", b.eddm.min_instances.to_string()),
        ],
    );
    section(
        "adwin",
        vec![
            ("delta", b.adwin.delta.to_string()),
            ("max_buckets", b.adwin.max_buckets.to_string()),
            ("min_sub_window", b.adwin.min_sub_window.to_string()),
        ],
    );
    section(
        "ph",
        vec![
            ("lambda", b.ph.lambda.to_string()),
            ("delta", b.ph.delta.to_string()),
            ("min_instances", b.ph.min_instances.to_string()),
        ],
    );
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::BaselineKind;

    #[test]
    fn parses_sections_and_comments() {
        let s = Settings::parse(
            "# experiment\n[run]\nmethod = ddm\nlabel_budget=0.4\n\n[detector]\n tau = 0.01 \n",
            "t",
        )
        .unwrap();
        let cfg = s.experiment().unwrap();
        assert_eq!(cfg.method, Method::Baseline(BaselineKind::Ddm));
        assert_eq!(cfg.alpha, 0.4);
        assert_eq!(cfg.detector.tau, 0.01);
    }

    #[test]
    fn unknown_keys_are_fatal() {
        let e = Settings::parse("[run]\nmethd = ddm\n", "cfg.ini").unwrap_err();
        assert!(e.to_string().contains("cfg.ini:2"), "{e}");
        assert!(Settings::parse("[nope]\n", "t").is_err());
        assert!(Settings::parse("method = ddm\n", "t").is_err());
        assert!(Settings::new().set("run.colour", "red").is_err());
    }

    #[test]
    fn bad_values_are_config_errors() {
        let mut s = Settings::new();
        s.set("run.window", "ten").unwrap();
        assert!(matches!(s.experiment(), Err(Error::Config(_))));
        let mut s = Settings::new();
        s.set("detector.tau", "0.2").unwrap();
        s.set("detector.phi", "0.1").unwrap();
        assert!(matches!(s.experiment(), Err(Error::Config(_))));
    }

    #[test]
    fn flags_override_file() {
        let mut s = Settings::parse("[run]\nseed = 3\nwindow = 500\n", "t").unwrap();
        let mut flags = Settings::new();
        flags.set("run.seed", "9").unwrap();
        s.merge(&flags);
        let cfg = s.experiment().unwrap();
        assert_eq!((cfg.seed, cfg.window), (9, 500));
    }

    #[test]
    fn generator_defaults() {
        let mut s = Settings::new();
        s.set("dataset.gen", "hyperplane").unwrap();
        assert_eq!(s.dataset().unwrap().true_drift_points(), vec![75_000]);
        s.set("dataset.length", "30000").unwrap();
        assert!(s.dataset().unwrap().true_drift_points().is_empty());
        s.set("dataset.drift_at", "none").unwrap();
        s.set("dataset.length", "100000").unwrap();
        assert!(s.dataset().unwrap().true_drift_points().is_empty());
    }

    #[test]
    fn budget_range() {
        let b = parse_range("0.2:1.0:0.1").unwrap();
        assert_eq!(b, vec![0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]);
        assert!(parse_range("1:0:0.1").is_err());
        assert!(parse_range("0.2:1.0").is_err());
    }

    #[test]
    fn render_round_trips() {
        let mut s = Settings::new();
        s.set("run.method", "adwin").unwrap();
        s.set("run.label_budget", "0.3").unwrap();
        s.set("dataset.gen", "sea").unwrap();
        s.set("dataset.invert_at", "5000").unwrap();
        s.set("detector.gamma", "2.5").unwrap();
        s.set("tree.max_depth", "6").unwrap();
        s.set("ph.lambda", "25").unwrap();
        let cfg = s.experiment().unwrap();
        let text = render(&cfg).join("\n");
        let back = Settings::parse(&text, "rendered").unwrap().experiment().unwrap();
        assert_eq!(back, ExperimentConfig {
            run_id: cfg.resolved_run_id(),
            true_drift_points: Some(cfg.true_points()),
            ..cfg
        });
    }
}
