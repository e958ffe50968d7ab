use super::BinaryErrorDetector;
use crate::state::DriftState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EddmParams {
    pub warning_ratio: f64,
    pub drift_ratio: f64,
    /// Errors that must be observed before the detector may signal.
    pub min_errors: u64,
    /// Instances before the reference maximum starts tracking.
    pub min_instances: u64,
}

impl Default for EddmParams {
    fn default() -> Self {
        Self {
            warning_ratio: 0.95,
            drift_ratio: 0.90,
            min_errors: 30,
            min_instances: 30,
        }
    }
}

/// Early Drift Detection Method: monitors the distance between consecutive
/// errors. Its mean plus two deviations shrinking relative to the best
/// value seen signals a rising error frequency.
#[derive(Clone, Debug)]
pub struct Eddm {
    params: EddmParams,
    n: u64,
    errors: u64,
    last_error: u64,
    mean: f64,
    m2: f64,
    max_score: f64,
    state: DriftState,
}

impl Eddm {
    pub fn new(params: EddmParams) -> Self {
        Self {
            params,
            n: 0,
            errors: 0,
            last_error: 0,
            mean: 0.0,
            m2: 0.0,
            max_score: 0.0,
            state: DriftState::Stable,
        }
    }

    pub fn errors(&self) -> u64 {
        self.errors
    }

    /// Mean distance between errors.
    pub fn mean_gap(&self) -> f64 {
        self.mean
    }

    /// Population standard deviation of the distances.
    pub fn gap_std(&self) -> f64 {
        if self.errors == 0 {
            0.0
        } else {
            (self.m2 / self.errors as f64).sqrt()
        }
    }

    pub fn score(&self) -> f64 {
        self.mean + 2.0 * self.gap_std()
    }

    pub fn max_score(&self) -> f64 {
        self.max_score
    }
}

impl BinaryErrorDetector for Eddm {
    fn update(&mut self, value: f64) -> DriftState {
        self.n += 1;
        if value < 0.5 {
            // states only move on errors
            return self.state;
        }
        self.errors += 1;
        let gap = (self.n - self.last_error) as f64;
        self.last_error = self.n;
        let old_mean = self.mean;
        self.mean += (gap - self.mean) / self.errors as f64;
        self.m2 += (gap - self.mean) * (gap - old_mean);

        let score = self.score();
        if self.n <= self.params.min_instances {
            self.state = DriftState::Stable;
            return self.state;
        }
        if score > self.max_score {
            self.max_score = score;
            self.state = DriftState::Stable;
            return self.state;
        }
        let ratio = score / self.max_score;
        self.state = if self.errors < self.params.min_errors {
            DriftState::Stable
        } else if ratio < self.params.drift_ratio {
            DriftState::Drift
        } else if ratio < self.params.warning_ratio {
            DriftState::Warning
        } else {
            DriftState::Stable
        };
        if self.state == DriftState::Drift {
            self.reset();
            self.state = DriftState::Drift;
        }
        self.state
    }

    fn state(&self) -> DriftState {
        self.state
    }

    fn reset(&mut self) {
        *self = Self::new(self.params);
    }

    fn name(&self) -> &'static str {
        "eddm"
    }

    fn has_warning(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn periodic(period: usize, len: usize) -> impl Iterator<Item = f64> {
        (1..=len).map(move |i| if i % period == 0 { 1.0 } else { 0.0 })
    }

    #[test]
    fn periodic_errors_are_stable() {
        let mut d = Eddm::new(EddmParams::default());
        for b in periodic(10, 5000) {
            assert_eq!(d.update(b), DriftState::Stable);
        }
        assert_eq!(d.mean_gap(), 10.0);
        assert_eq!(d.gap_std(), 0.0);
        assert_eq!(d.score() / d.max_score(), 1.0);
    }

    #[test]
    fn shrinking_gaps_drift() {
        let mut d = Eddm::new(EddmParams::default());
        for b in periodic(10, 3000) {
            d.update(b);
        }
        // the deviation term first inflates the score, so the ratio needs a
        // few hundred short gaps to fall
        let fired = periodic(2, 2000).any(|b| d.update(b) == DriftState::Drift);
        assert!(fired);
    }

    #[test]
    fn silent_below_min_errors() {
        let mut d = Eddm::new(EddmParams::default());
        // 29 errors: long gaps, then very short ones
        for b in periodic(50, 50 * 20).chain(periodic(2, 18)) {
            assert_eq!(d.update(b), DriftState::Stable);
        }
        assert!(d.errors() < 30);
    }

    #[test]
    fn gap_stats_match_batch() {
        let bits: Vec<f64> = (1..=600)
            .map(|i: u64| if (i * i) % 7 == 1 || i.is_multiple_of(11) { 1.0 } else { 0.0 })
            .collect();
        let mut d = Eddm::new(EddmParams::default());
        let mut gaps = Vec::new();
        let mut last = 0;
        for (i, &b) in bits.iter().enumerate() {
            d.update(b);
            if b == 1.0 {
                gaps.push((i + 1 - last) as f64);
                last = i + 1;
                if d.state() == DriftState::Drift {
                    gaps.clear();
                    last = i + 1;
                    continue;
                }
                let n = gaps.len() as f64;
                let mean = gaps.iter().sum::<f64>() / n;
                let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / n;
                assert!((d.mean_gap() - mean).abs() < 1e-9);
                assert!((d.gap_std() - var.sqrt()).abs() < 1e-9);
            }
        }
    }
}
