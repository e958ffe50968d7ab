use std::collections::VecDeque;

use super::BinaryErrorDetector;
use crate::state::DriftState;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdwinParams {
    pub delta: f64,
    /// Buckets kept per size class before the two oldest merge.
    pub max_buckets: usize,
    /// Smallest sub-window either side of a cut.
    pub min_sub_window: u64,
}

impl Default for AdwinParams {
    fn default() -> Self {
        Self {
            delta: 0.002,
            max_buckets: 5,
            min_sub_window: 5,
        }
    }
}

/// `sqrt(ln(4 W / delta) / (2 m))` with `W = n0 + n1` and
/// `m = 1 / (1/n0 + 1/n1)`.
pub fn cut_bound(n0: u64, n1: u64, delta: f64) -> f64 {
    let (a, b) = (n0 as f64, n1 as f64);
    let m = 1.0 / (1.0 / a + 1.0 / b);
    ((4.0 * (a + b) / delta).ln() / (2.0 * m)).sqrt()
}

#[derive(Clone, Copy, Debug)]
struct Bucket {
    total: f64,
}

/// Adaptive windowing over an exponential histogram: row `k` holds buckets
/// summarizing `2^k` observations each, newest at the front.
///
/// The window shrinks on any significant change of mean, but only a change
/// that raised the mean (a higher error rate) is reported as drift.
#[derive(Clone, Debug)]
pub struct Adwin {
    params: AdwinParams,
    rows: Vec<VecDeque<Bucket>>,
    width: u64,
    total: f64,
    state: DriftState,
}

impl Adwin {
    pub fn new(params: AdwinParams) -> Self {
        Self {
            params,
            rows: Vec::new(),
            width: 0,
            total: 0.0,
            state: DriftState::Stable,
        }
    }

    pub fn width(&self) -> u64 {
        self.width
    }

    pub fn mean(&self) -> f64 {
        if self.width == 0 {
            0.0
        } else {
            self.total / self.width as f64
        }
    }

    pub fn bucket_count(&self) -> usize {
        self.rows.iter().map(VecDeque::len).sum()
    }

    fn insert(&mut self, value: f64) {
        if self.rows.is_empty() {
            self.rows.push(VecDeque::new());
        }
        self.rows[0].push_front(Bucket { total: value });
        self.width += 1;
        self.total += value;
        let mut k = 0;
        while k < self.rows.len() && self.rows[k].len() > self.params.max_buckets {
            let a = self.rows[k].pop_back().expect("row over capacity");
            let b = self.rows[k].pop_back().expect("row over capacity");
            if k + 1 == self.rows.len() {
                self.rows.push(VecDeque::new());
            }
            self.rows[k + 1].push_front(Bucket {
                total: a.total + b.total,
            });
            k += 1;
        }
    }

    fn drop_oldest(&mut self) {
        let Some(k) = self.rows.len().checked_sub(1) else {
            return;
        };
        if let Some(b) = self.rows[k].pop_back() {
            self.width -= 1u64 << k;
            self.total -= b.total;
        }
        while self.rows.last().is_some_and(VecDeque::is_empty) {
            self.rows.pop();
        }
    }

    /// Whether some split of the window into old and recent parts has means
    /// further apart than the cut bound.
    fn has_cut(&self) -> bool {
        let (mut n0, mut s0) = (0u64, 0.0);
        for (k, row) in self.rows.iter().enumerate().rev() {
            let size = 1u64 << k;
            for b in row.iter().rev() {
                n0 += size;
                s0 += b.total;
                let n1 = self.width - n0;
                if n1 < self.params.min_sub_window {
                    return false;
                }
                if n0 < self.params.min_sub_window {
                    continue;
                }
                let diff = (s0 / n0 as f64 - (self.total - s0) / n1 as f64).abs();
                if diff > cut_bound(n0, n1, self.params.delta) {
                    return true;
                }
            }
        }
        false
    }
}

impl BinaryErrorDetector for Adwin {
    fn update(&mut self, value: f64) -> DriftState {
        let before = self.mean();
        self.insert(value);
        let mut cut = false;
        while self.width > 2 * self.params.min_sub_window && self.has_cut() {
            self.drop_oldest();
            cut = true;
        }
        self.state = if cut && self.mean() > before {
            DriftState::Drift
        } else {
            DriftState::Stable
        };
        self.state
    }

    fn state(&self) -> DriftState {
        self.state
    }

    fn reset(&mut self) {
        *self = Self::new(self.params);
    }

    fn name(&self) -> &'static str {
        "adwin"
    }

    fn has_warning(&self) -> bool {
        false
    }
}
