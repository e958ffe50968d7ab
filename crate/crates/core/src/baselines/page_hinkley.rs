use super::BinaryErrorDetector;
use crate::state::DriftState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PageHinkleyParams {
    pub lambda: f64,
    /// Magnitude of change tolerated without accumulating evidence.
    pub delta: f64,
    pub min_instances: u64,
}

impl Default for PageHinkleyParams {
    fn default() -> Self {
        Self {
            lambda: 50.0,
            delta: 0.005,
            min_instances: 30,
        }
    }
}

/// Page-Hinkley test for an increase in the mean.
#[derive(Clone, Debug)]
pub struct PageHinkley {
    params: PageHinkleyParams,
    n: u64,
    mean: f64,
    cumulative: f64,
    minimum: f64,
    state: DriftState,
}

impl PageHinkley {
    pub fn new(params: PageHinkleyParams) -> Self {
        Self {
            params,
            n: 0,
            mean: 0.0,
            cumulative: 0.0,
            minimum: 0.0,
            state: DriftState::Stable,
        }
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// `m_T`
    pub fn cumulative(&self) -> f64 {
        self.cumulative
    }

    /// `M_T`
    pub fn minimum(&self) -> f64 {
        self.minimum
    }

    /// `m_T - M_T`
    pub fn statistic(&self) -> f64 {
        self.cumulative - self.minimum
    }
}

impl BinaryErrorDetector for PageHinkley {
    fn update(&mut self, value: f64) -> DriftState {
        self.n += 1;
        self.mean += (value - self.mean) / self.n as f64;
        self.cumulative += value - self.mean - self.params.delta;
        self.minimum = self.minimum.min(self.cumulative);
        self.state = if self.n >= self.params.min_instances && self.statistic() > self.params.lambda {
            DriftState::Drift
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
        "ph"
    }

    fn has_warning(&self) -> bool {
        false
    }
}
