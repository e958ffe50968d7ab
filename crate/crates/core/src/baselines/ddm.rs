use super::BinaryErrorDetector;
use crate::state::DriftState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DdmParams {
    pub min_instances: u64,
    /// Standard deviations above the minimum for a warning.
    pub warning_level: f64,
    pub drift_level: f64,
}

impl Default for DdmParams {
    fn default() -> Self {
        Self {
            min_instances: 30,
            warning_level: 2.0,
            drift_level: 3.0,
        }
    }
}

/// Drift Detection Method: tracks the binomial error rate `p` and its
/// standard deviation `s`, remembering where `p + s` was smallest.
#[derive(Clone, Debug)]
pub struct Ddm {
    params: DdmParams,
    n: u64,
    errors: u64,
    p_min: f64,
    s_min: f64,
    state: DriftState,
}

impl Ddm {
    pub fn new(params: DdmParams) -> Self {
        Self {
            params,
            n: 0,
            errors: 0,
            p_min: f64::INFINITY,
            s_min: f64::INFINITY,
            state: DriftState::Stable,
        }
    }

    pub fn error_rate(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.errors as f64 / self.n as f64
        }
    }

    pub fn std_dev(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        let p = self.error_rate();
        (p * (1.0 - p) / self.n as f64).sqrt()
    }

    pub fn instances(&self) -> u64 {
        self.n
    }

    pub fn minimum(&self) -> (f64, f64) {
        (self.p_min, self.s_min)
    }
}

impl BinaryErrorDetector for Ddm {
    fn update(&mut self, value: f64) -> DriftState {
        self.n += 1;
        if value >= 0.5 {
            self.errors += 1;
        }
        if self.n < self.params.min_instances {
            self.state = DriftState::Stable;
            return self.state;
        }
        let p = self.error_rate();
        let s = self.std_dev();
        if p + s < self.p_min + self.s_min {
            self.p_min = p;
            self.s_min = s;
        }
        self.state = if p + s > self.p_min + self.params.drift_level * self.s_min {
            DriftState::Drift
        } else if p + s > self.p_min + self.params.warning_level * self.s_min {
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
        "ddm"
    }

    fn has_warning(&self) -> bool {
        true
    }
}

#[cfg(test)]
mod tests {
    use super::super::testing::step_stream;
    use super::*;

    #[test]
    fn all_zeros_stay_stable() {
        let mut d = Ddm::new(DdmParams::default());
        for _ in 0..1000 {
            assert_eq!(d.update(0.0), DriftState::Stable);
        }
    }

    #[test]
    fn rate_and_deviation_formula() {
        let mut d = Ddm::new(DdmParams::default());
        for i in 0..100 {
            d.update(if i % 10 == 0 { 1.0 } else { 0.0 });
        }
        assert_eq!(d.instances(), 100);
        assert!((d.error_rate() - 0.1).abs() < 1e-15);
        assert!((d.std_dev() - 0.03).abs() < 1e-12);
    }

    #[test]
    fn running_stats_match_prefix_recomputation() {
        let bits = step_stream(2, 400, 200, 0.2, 0.5);
        let mut d = Ddm::new(DdmParams {
            min_instances: u64::MAX,
            ..DdmParams::default()
        });
        for (i, &b) in bits.iter().enumerate() {
            d.update(b);
            let prefix = &bits[..=i];
            let p = prefix.iter().sum::<f64>() / prefix.len() as f64;
            assert!((d.error_rate() - p).abs() < 1e-9);
            let s = (p * (1.0 - p) / prefix.len() as f64).sqrt();
            assert!((d.std_dev() - s).abs() < 1e-9);
        }
    }

    #[test]
    fn fires_after_rate_step() {
        let bits = step_stream(3, 8000, 5000, 0.1, 0.4);
        let mut d = Ddm::new(DdmParams::default());
        let events: Vec<usize> = bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| d.update(b) == DriftState::Drift)
            .map(|(i, _)| i)
            .collect();
        assert!(events.iter().all(|&i| i >= 5000), "{events:?}");
        assert!(events[0] - 5000 <= 500, "{events:?}");
    }

    #[test]
    fn early_minimum_can_trigger_false_alarm() {
        // a lucky error-free start pins p_min + s_min low; ordinary noise
        // at the true rate then crosses the drift line
        let bits = step_stream(0, 5000, 5000, 0.1, 0.1);
        let mut d = Ddm::new(DdmParams::default());
        assert!(bits.iter().any(|&b| d.update(b) == DriftState::Drift));
    }

    #[test]
    fn reset_clears_statistics() {
        let mut d = Ddm::new(DdmParams::default());
        for _ in 0..50 {
            d.update(1.0);
        }
        d.reset();
        assert_eq!(d.instances(), 0);
        assert_eq!(d.minimum(), (f64::INFINITY, f64::INFINITY));
        assert_eq!(d.state(), DriftState::Stable);
    }
}
