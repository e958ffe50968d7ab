use statrs::function::erf::erf;

use super::kde::KernelDensity;
use super::posterior::{PosteriorModel, PosteriorSample, SkipReason};
use crate::error::{Error, Result};
use crate::hoeffding::HoeffdingTree;
use crate::knowledge::ReliableLabeledSet;
use crate::learner::Classifier;
use crate::state::DriftState;
use crate::stream::{ClassId, Window};

/// `gamma = 50 e^(-4 alpha) + delta`.
pub fn scaling_factor(alpha: f64, delta: f64) -> f64 {
    50.0 * (-4.0 * alpha).exp() + delta
}

/// `(2 / sqrt(pi)) * integral_0^x e^(-t^2) dt`, clamped to zero below zero.
///
/// Mathematically below one for every finite `x`; in double precision it
/// rounds to exactly 1.0 once `x` exceeds about 5.9.
pub fn error_rate(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        erf(x)
    }
}

/// Maps an error-rate value onto a verdict state.
pub fn classify(epsilon: f64, tau: f64, phi: f64) -> DriftState {
    if epsilon < tau {
        DriftState::Drift
    } else if epsilon < phi {
        DriftState::Warning
    } else {
        DriftState::Stable
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DetectorConfig {
    /// Drift threshold.
    pub tau: f64,
    /// Warning threshold.
    pub phi: f64,
    /// Sensitivity offset added to the scaling factor.
    pub delta: f64,
    /// Label fraction the scaling factor is computed for.
    pub alpha: f64,
    pub window: usize,
    /// Reliable labels needed before detection runs.
    pub min_rl: usize,
    pub variance_floor: f64,
    /// Replaces `scaling_factor(alpha, delta)` when set.
    pub gamma_override: Option<f64>,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            tau: 0.05,
            phi: 0.1,
            delta: 0.0,
            alpha: 1.0,
            window: 1000,
            min_rl: 10,
            variance_floor: 1e-9,
            gamma_override: None,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.tau && self.tau < self.phi && self.phi < 1.0) {
            return Err(Error::config(format!(
                "thresholds must satisfy 0 < tau < phi < 1, got tau={} phi={}",
                self.tau, self.phi
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::config(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.delta >= 0.0 && self.delta.is_finite()) {
            return Err(Error::config(format!("delta must be >= 0, got {}", self.delta)));
        }
        if self.window == 0 {
            return Err(Error::config("window size must be at least 1"));
        }
        if !(self.variance_floor > 0.0) {
            return Err(Error::config("variance floor must be positive"));
        }
        if let Some(g) = self.gamma_override {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::config(format!("gamma must be positive, got {g}")));
            }
        }
        Ok(())
    }

    pub fn gamma(&self) -> f64 {
        self.gamma_override
            .unwrap_or_else(|| scaling_factor(self.alpha, self.delta))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VerdictKind {
    Evaluated,
    /// First trained window: the incremental estimator was just initialized.
    Bootstrap,
    Skipped(SkipReason),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftVerdict {
    pub state: DriftState,
    pub epsilon: Option<f64>,
    pub mean_density: Option<f64>,
    pub window_end_index: u64,
    pub kind: VerdictKind,
}

/// Semi-supervised real-drift detector.
///
/// Each window, a static estimator trained on that window's reliable labels
/// stands for the current concept, the incremental estimator for the past
/// one. Both are turned into posterior samples under a Gaussian model
/// fitted to the reliable labels; a KDE of the static sample scores the
/// incremental sample. Low mean density means the two concepts disagree.
#[derive(Clone, Debug)]
pub struct DensityDriftDetector<C: Classifier = HoeffdingTree> {
    config: DetectorConfig,
    incremental: C,
    history: Vec<DriftVerdict>,
}

impl<C: Classifier> DensityDriftDetector<C> {
    /// `template` is cloned fresh for every estimator the detector builds.
    pub fn new(config: DetectorConfig, template: C) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            incremental: template.fresh(),
            history: Vec::new(),
        })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }

    pub fn incremental(&self) -> &C {
        &self.incremental
    }

    pub fn history(&self) -> &[DriftVerdict] {
        &self.history
    }

    /// Runs one window through the detector and returns the verdict with
    /// the static estimator built for it.
    pub fn detect(&mut self, w: &Window, rl: &ReliableLabeledSet) -> Result<(DriftVerdict, C)> {
        let mut static_est = self.incremental.fresh();
        static_est.train_batch(rl.pairs())?;

        let mut verdict = DriftVerdict {
            state: DriftState::Stable,
            epsilon: None,
            mean_density: None,
            window_end_index: w.end_index(),
            kind: VerdictKind::Bootstrap,
        };

        if !self.incremental.is_trained() {
            self.incremental.train_batch(rl.pairs())?;
            self.history.push(verdict.clone());
            return Ok((verdict, static_est));
        }

        let model = match PosteriorModel::fit(rl.pairs(), self.config.min_rl, self.config.variance_floor)
        {
            Ok(m) => m,
            Err(reason) => {
                self.incremental.train_batch(rl.pairs())?;
                verdict.kind = VerdictKind::Skipped(reason);
                self.history.push(verdict.clone());
                return Ok((verdict, static_est));
            }
        };

        let static_sample = PosteriorSample::compute(&model, rl.pairs());
        let kde = KernelDensity::fit(static_sample.standardized())?;

        let predicted: Vec<ClassId> = w
            .instances()
            .iter()
            .map(|i| self.incremental.predict(&i.features))
            .collect();
        let incremental_sample = PosteriorSample::compute(
            &model,
            w.instances()
                .iter()
                .zip(&predicted)
                .map(|(i, &y)| (i.features.as_slice(), y)),
        );
        let rho = kde.mean_density(incremental_sample.standardized());
        let epsilon = error_rate(self.config.gamma() * rho);
        let state = classify(epsilon, self.config.tau, self.config.phi);

        match state {
            DriftState::Drift => self.incremental = static_est.clone(),
            DriftState::Warning => {}
            DriftState::Stable => self.incremental.train_batch(rl.pairs())?,
        }
        verdict.state = state;
        verdict.epsilon = Some(epsilon);
        verdict.mean_density = Some(rho);
        verdict.kind = VerdictKind::Evaluated;
        self.history.push(verdict.clone());
        Ok((verdict, static_est))
    }
}
