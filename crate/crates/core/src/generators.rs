//! Seeded synthetic streams with abrupt concept drift.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::stream::{ClassId, Record, StreamSource};

/// The conventional SEA threshold cycle.
pub const SEA_THRESHOLDS: [f64; 4] = [8.0, 9.0, 7.0, 9.5];
pub const SEA_DEFAULT_NOISE: f64 = 0.10;
pub const HYPERPLANE_DEFAULT_NOISE: f64 = 0.05;
pub const HYPERPLANE_DEFAULT_DIM: usize = 10;

/// Label 1 iff `x1 + x2 <= threshold`; the third attribute is irrelevant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SeaConcept {
    pub threshold: f64,
}

impl SeaConcept {
    pub fn label(&self, x: &[f64]) -> ClassId {
        ClassId(u32::from(x[0] + x[1] <= self.threshold))
    }
}

/// Label 1 iff `sum(w_i x_i) >= w_0` with `w_0 = sum(w_i) / 2`.
#[derive(Clone, Debug, PartialEq)]
pub struct HyperplaneConcept {
    pub weights: Vec<f64>,
}

impl HyperplaneConcept {
    pub fn bias(&self) -> f64 {
        0.5 * self.weights.iter().sum::<f64>()
    }

    pub fn label(&self, x: &[f64]) -> ClassId {
        let dot: f64 = self.weights.iter().zip(x).map(|(w, v)| w * v).sum();
        ClassId(u32::from(dot >= self.bias()))
    }
}

/// Instance indices at which the active concept is replaced, plus the
/// label-flip probability.
#[derive(Clone, Debug, PartialEq)]
pub struct DriftSchedule {
    pub drift_points: Vec<u64>,
    pub noise: f64,
}

impl DriftSchedule {
    pub fn new(drift_points: Vec<u64>, noise: f64) -> Self {
        Self {
            drift_points,
            noise,
        }
    }

    pub fn validate(&self, length: u64) -> Result<()> {
        if !(0.0..0.5).contains(&self.noise) {
            return Err(Error::config(format!(
                "noise must lie in [0, 0.5), got {}",
                self.noise
            )));
        }
        if self.drift_points.windows(2).any(|p| p[1] <= p[0]) {
            return Err(Error::config("drift points must be strictly increasing"));
        }
        if let Some(&last) = self.drift_points.last() {
            if last >= length {
                return Err(Error::config(format!(
                    "drift point {last} lies beyond stream length {length}"
                )));
            }
        }
        Ok(())
    }

    /// Number of drift points at or before `index`.
    pub fn concept_at(&self, index: u64) -> usize {
        self.drift_points.partition_point(|&p| p <= index)
    }
}

/// SEA stream: three uniform features on [0, 10], threshold concept cycling
/// through a configured sequence at each drift point.
#[derive(Clone, Debug)]
pub struct SeaStream {
    rng: ChaCha8Rng,
    length: u64,
    pos: u64,
    schedule: DriftSchedule,
    thresholds: Vec<f64>,
}

impl SeaStream {
    pub fn new(seed: u64, length: u64, schedule: DriftSchedule) -> Result<Self> {
        Self::with_thresholds(seed, length, schedule, SEA_THRESHOLDS.to_vec())
    }

    pub fn with_thresholds(
        seed: u64,
        length: u64,
        schedule: DriftSchedule,
        thresholds: Vec<f64>,
    ) -> Result<Self> {
        if length == 0 {
            return Err(Error::config("stream length must be at least 1"));
        }
        if thresholds.is_empty() {
            return Err(Error::config("SEA needs at least one threshold"));
        }
        schedule.validate(length)?;
        Ok(Self {
            rng: ChaCha8Rng::seed_from_u64(seed),
            length,
            pos: 0,
            schedule,
            thresholds,
        })
    }

    pub fn concept_at(&self, index: u64) -> SeaConcept {
        let k = self.schedule.concept_at(index);
        SeaConcept {
            threshold: self.thresholds[k % self.thresholds.len()],
        }
    }
}

impl StreamSource for SeaStream {
    fn dim(&self) -> usize {
        3
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn next_record(&mut self) -> Option<Result<Record>> {
        if self.pos >= self.length {
            return None;
        }
        let index = self.pos;
        self.pos += 1;
        let features: Vec<f64> = (0..3).map(|_| self.rng.gen_range(0.0..10.0)).collect();
        let mut truth = self.concept_at(index).label(&features);
        if self.rng.gen::<f64>() < self.schedule.noise {
            truth = flip(truth);
        }
        Some(Ok(Record {
            index,
            features,
            truth,
            exposed: false,
        }))
    }

    fn name(&self) -> String {
        "sea".into()
    }
}

/// HyperPlane stream: `d` uniform features on [0, 1]; a fresh weight vector
/// is drawn at every drift point.
#[derive(Clone, Debug)]
pub struct HyperplaneStream {
    rng: ChaCha8Rng,
    length: u64,
    pos: u64,
    schedule: DriftSchedule,
    concept: HyperplaneConcept,
    concept_id: usize,
    redraws: usize,
}

impl HyperplaneStream {
    pub fn new(seed: u64, length: u64, dim: usize, schedule: DriftSchedule) -> Result<Self> {
        if dim < 2 {
            return Err(Error::config("hyperplane dimension must be at least 2"));
        }
        if length == 0 {
            return Err(Error::config("stream length must be at least 1"));
        }
        schedule.validate(length)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let concept = draw_hyperplane(&mut rng, dim);
        Ok(Self {
            rng,
            length,
            pos: 0,
            schedule,
            concept,
            concept_id: 0,
            redraws: 0,
        })
    }

    pub fn concept(&self) -> &HyperplaneConcept {
        &self.concept
    }

    /// Weight vectors drawn after the initial one.
    pub fn redraws(&self) -> usize {
        self.redraws
    }
}

fn draw_hyperplane(rng: &mut ChaCha8Rng, dim: usize) -> HyperplaneConcept {
    HyperplaneConcept {
        weights: (0..dim).map(|_| rng.gen_range(0.0..1.0)).collect(),
    }
}

impl StreamSource for HyperplaneStream {
    fn dim(&self) -> usize {
        self.concept.weights.len()
    }

    fn num_classes(&self) -> usize {
        2
    }

    fn next_record(&mut self) -> Option<Result<Record>> {
        if self.pos >= self.length {
            return None;
        }
        let index = self.pos;
        self.pos += 1;
        let target = self.schedule.concept_at(index);
        let dim = self.dim();
        while self.concept_id < target {
            self.concept = draw_hyperplane(&mut self.rng, dim);
            self.concept_id += 1;
            self.redraws += 1;
        }
        let dim = self.dim();
        let features: Vec<f64> = (0..dim).map(|_| self.rng.gen_range(0.0..1.0)).collect();
        let mut truth = self.concept.label(&features);
        if self.rng.gen::<f64>() < self.schedule.noise {
            truth = flip(truth);
        }
        Some(Ok(Record {
            index,
            features,
            truth,
            exposed: false,
        }))
    }

    fn name(&self) -> String {
        "hyperplane".into()
    }
}

/// Binary label inversion from `from_index` on: a maximal real drift that
/// leaves the feature distribution untouched.
pub struct InvertLabels<S> {
    inner: S,
    from_index: u64,
}

impl<S: StreamSource> InvertLabels<S> {
    pub fn new(inner: S, from_index: u64) -> Self {
        Self { inner, from_index }
    }
}

impl<S: StreamSource> StreamSource for InvertLabels<S> {
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
        if record.index >= self.from_index {
            record.truth = flip(record.truth);
        }
        Some(Ok(record))
    }

    fn name(&self) -> String {
        format!("{}-inverted", self.inner.name())
    }
}

fn flip(c: ClassId) -> ClassId {
    ClassId(1 - c.0.min(1))
}

/// Writes every remaining record of `source` as a dataset CSV with ground
/// truth labels. Returns the number of rows written.
pub fn write_dataset<S: StreamSource + ?Sized>(source: &mut S, path: impl AsRef<Path>) -> Result<u64> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    let header: Vec<String> = (1..=source.dim()).map(|i| format!("x{i}")).collect();
    writeln!(out, "{},label", header.join(",")).map_err(io)?;
    let mut rows = 0u64;
    let mut line = String::new();
    while let Some(record) = source.next_record() {
        let record = record?;
        line.clear();
        for v in &record.features {
            // Display for f64 is the shortest representation that round-trips
            line.push_str(&v.to_string());
            line.push(',');
        }
        line.push_str(&record.truth.to_string());
        writeln!(out, "{line}").map_err(io)?;
        rows += 1;
    }
    out.flush().map_err(io)?;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn collect<S: StreamSource>(mut s: S) -> Vec<Record> {
        std::iter::from_fn(|| s.next_record()).map(|r| r.unwrap()).collect()
    }

    #[test]
    fn sea_concept_examples() {
        let c = SeaConcept { threshold: 8.0 };
        assert_eq!(c.label(&[3.0, 4.0, 9.9]), ClassId(1));
        assert_eq!(c.label(&[6.0, 5.0, 0.1]), ClassId(0));
    }

    #[test]
    fn hyperplane_concept_examples() {
        let c = HyperplaneConcept {
            weights: vec![1.0, 1.0],
        };
        assert_eq!(c.bias(), 1.0);
        assert_eq!(c.label(&[0.6, 0.6]), ClassId(1));
        assert_eq!(c.label(&[0.2, 0.2]), ClassId(0));
    }

    #[test]
    fn sea_switches_concept_exactly_at_drift_points() {
        let sched = DriftSchedule::new(vec![25_000, 50_000, 75_000], 0.1);
        let s = SeaStream::new(1, 100_000, sched).unwrap();
        let thetas: Vec<f64> = [0, 24_999, 25_000, 49_999, 50_000, 75_000, 99_999]
            .iter()
            .map(|&i| s.concept_at(i).threshold)
            .collect();
        assert_eq!(thetas, vec![8.0, 8.0, 9.0, 9.0, 7.0, 9.5, 9.5]);
        let changes = (1..100_000u64)
            .filter(|&i| s.concept_at(i) != s.concept_at(i - 1))
            .count();
        assert_eq!(changes, 3);
    }

    #[test]
    fn sea_labels_match_prior_concept_before_drift() {
        let sched = DriftSchedule::new(vec![500], 0.0);
        let s = SeaStream::new(3, 1000, sched).unwrap();
        for r in collect(s) {
            let theta = if r.index < 500 { 8.0 } else { 9.0 };
            assert_eq!(r.truth, SeaConcept { threshold: theta }.label(&r.features));
        }
    }

    #[test]
    fn hyperplane_redraws_once() {
        let sched = DriftSchedule::new(vec![75_000], 0.05);
        let mut s = HyperplaneStream::new(9, 100_000, 10, sched).unwrap();
        let before = s.concept().clone();
        while let Some(r) = s.next_record() {
            r.unwrap();
        }
        assert_eq!(s.redraws(), 1);
        assert_ne!(&before, s.concept());
    }

    #[test]
    fn schedule_errors() {
        let beyond = DriftSchedule::new(vec![10], 0.1);
        assert!(SeaStream::new(1, 10, beyond).is_err());
        let unsorted = DriftSchedule::new(vec![5, 3], 0.1);
        assert!(SeaStream::new(1, 10, unsorted).is_err());
        let noisy = DriftSchedule::new(vec![], 0.5);
        assert!(SeaStream::new(1, 10, noisy).is_err());
        assert!(HyperplaneStream::new(1, 10, 1, DriftSchedule::new(vec![], 0.0)).is_err());
    }

    #[test]
    fn inversion_flips_from_index() {
        let base = SeaStream::new(4, 20, DriftSchedule::new(vec![], 0.0)).unwrap();
        let plain = collect(base.clone());
        let inverted = collect(InvertLabels::new(base, 10));
        for (a, b) in plain.iter().zip(&inverted) {
            assert_eq!(a.index < 10, a.truth == b.truth);
        }
    }
}
