use crate::stream::ClassId;

/// Why a window's detection step was skipped.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SkipReason {
    TooFewLabels { have: usize, need: usize },
    SingleClass,
}

/// Per-(class, attribute) Gaussian class-conditionals with empirical class
/// priors. Posteriors for one attribute follow from Bayes' rule, with the
/// evidence term obtained by total probability over the known classes.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorModel {
    classes: Vec<ClassId>,
    priors: Vec<f64>,
    /// `means[class][attribute]`
    means: Vec<Vec<f64>>,
    variances: Vec<Vec<f64>>,
}

impl PosteriorModel {
    /// Fits the model by per-class sample mean and (population) variance,
    /// flooring variances at `variance_floor`.
    pub fn fit<'a, I>(rows: I, min_rows: usize, variance_floor: f64) -> Result<Self, SkipReason>
    where
        I: IntoIterator<Item = (&'a [f64], ClassId)>,
    {
        let rows: Vec<(&[f64], ClassId)> = rows.into_iter().collect();
        if rows.len() < min_rows.max(1) {
            return Err(SkipReason::TooFewLabels {
                have: rows.len(),
                need: min_rows.max(1),
            });
        }
        let mut classes: Vec<ClassId> = rows.iter().map(|r| r.1).collect();
        classes.sort_unstable();
        classes.dedup();
        if classes.len() < 2 {
            return Err(SkipReason::SingleClass);
        }
        let dim = rows[0].0.len();
        let k = classes.len();
        let slot = |c: ClassId| classes.binary_search(&c).expect("class collected above");

        let mut counts = vec![0usize; k];
        let mut sums = vec![vec![0.0; dim]; k];
        for (x, y) in &rows {
            let s = slot(*y);
            counts[s] += 1;
            for (acc, v) in sums[s].iter_mut().zip(x.iter()) {
                *acc += v;
            }
        }
        let means: Vec<Vec<f64>> = sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| s.iter().map(|v| v / n as f64).collect())
            .collect();
        let mut sq = vec![vec![0.0; dim]; k];
        for (x, y) in &rows {
            let s = slot(*y);
            for ((acc, v), m) in sq[s].iter_mut().zip(x.iter()).zip(&means[s]) {
                *acc += (v - m) * (v - m);
            }
        }
        let variances = sq
            .iter()
            .zip(&counts)
            .map(|(s, &n)| s.iter().map(|v| (v / n as f64).max(variance_floor)).collect())
            .collect();
        let total = rows.len() as f64;
        let priors = counts.iter().map(|&n| n as f64 / total).collect();
        Ok(Self {
            classes,
            priors,
            means,
            variances,
        })
    }

    /// Builds a model from explicit parameters; `priors`, `means` and
    /// `variances` are indexed like `classes`.
    pub fn from_parts(
        classes: Vec<ClassId>,
        priors: Vec<f64>,
        means: Vec<Vec<f64>>,
        variances: Vec<Vec<f64>>,
    ) -> Self {
        assert_eq!(classes.len(), priors.len());
        assert_eq!(classes.len(), means.len());
        assert_eq!(classes.len(), variances.len());
        Self {
            classes,
            priors,
            means,
            variances,
        }
    }

    pub fn classes(&self) -> &[ClassId] {
        &self.classes
    }

    fn slot(&self, class: ClassId) -> Option<usize> {
        self.classes.binary_search(&class).ok()
    }

    pub fn prior(&self, class: ClassId) -> f64 {
        self.slot(class).map_or(0.0, |s| self.priors[s])
    }

    pub fn mean(&self, class: ClassId, attribute: usize) -> Option<f64> {
        self.slot(class).map(|s| self.means[s][attribute])
    }

    pub fn variance(&self, class: ClassId, attribute: usize) -> Option<f64> {
        self.slot(class).map(|s| self.variances[s][attribute])
    }

    /// `p(class | x_attribute)`; zero for classes the model never saw.
    pub fn posterior(&self, attribute: usize, x: f64, class: ClassId) -> f64 {
        let Some(target) = self.slot(class) else {
            return 0.0;
        };
        // log p(x|c) + log p(c), normalized by log-sum-exp for stability
        let logs: Vec<f64> = (0..self.classes.len())
            .map(|s| {
                let var = self.variances[s][attribute];
                let d = x - self.means[s][attribute];
                self.priors[s].ln()
                    - 0.5 * (2.0 * std::f64::consts::PI * var).ln()
                    - d * d / (2.0 * var)
            })
            .collect();
        let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if !max.is_finite() {
            return 0.0;
        }
        let norm: f64 = logs.iter().map(|l| (l - max).exp()).sum();
        ((logs[target] - max).exp() / norm).clamp(0.0, 1.0)
    }
}

/// Flattened per-(instance, attribute) posteriors plus their z-scores.
#[derive(Clone, Debug, PartialEq)]
pub struct PosteriorSample {
    raw: Vec<f64>,
    standardized: Vec<f64>,
    mean: f64,
    std: f64,
}

impl PosteriorSample {
    /// For every row and attribute, the posterior of the row's label under
    /// `model`, flattened row-major, then standardized with this sample's
    /// own mean and standard deviation.
    pub fn compute<'a, I>(model: &PosteriorModel, rows: I) -> Self
    where
        I: IntoIterator<Item = (&'a [f64], ClassId)>,
    {
        let mut raw = Vec::new();
        for (x, y) in rows {
            raw.extend(
                x.iter()
                    .enumerate()
                    .map(|(attr, &v)| model.posterior(attr, v, y)),
            );
        }
        Self::from_raw(raw)
    }

    pub fn from_raw(raw: Vec<f64>) -> Self {
        let n = raw.len() as f64;
        let (mean, std) = if raw.is_empty() {
            (0.0, 0.0)
        } else {
            let mean = raw.iter().sum::<f64>() / n;
            let var = raw.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
            (mean, var.sqrt())
        };
        let standardized = if std > 0.0 {
            raw.iter().map(|v| (v - mean) / std).collect()
        } else {
            vec![0.0; raw.len()]
        };
        Self {
            raw,
            standardized,
            mean,
            std,
        }
    }

    pub fn raw(&self) -> &[f64] {
        &self.raw
    }

    pub fn standardized(&self) -> &[f64] {
        &self.standardized
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// True when every posterior was identical and all z-scores are zero.
    pub fn is_degenerate(&self) -> bool {
        self.std == 0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn two_gaussians(mu0: f64, mu1: f64) -> PosteriorModel {
        PosteriorModel::from_parts(
            vec![ClassId(0), ClassId(1)],
            vec![0.5, 0.5],
            vec![vec![mu0], vec![mu1]],
            vec![vec![1.0], vec![1.0]],
        )
    }

    #[test]
    fn fit_two_point_classes() {
        let rows = [
            (vec![0.0], ClassId(0)),
            (vec![0.0], ClassId(0)),
            (vec![2.0], ClassId(1)),
            (vec![2.0], ClassId(1)),
        ];
        let m = PosteriorModel::fit(rows.iter().map(|(x, y)| (x.as_slice(), *y)), 1, 1e-9)
            .unwrap();
        assert_eq!(m.mean(ClassId(0), 0), Some(0.0));
        assert_eq!(m.mean(ClassId(1), 0), Some(2.0));
        assert_eq!(m.variance(ClassId(0), 0), Some(1e-9));
        assert_eq!(m.variance(ClassId(1), 0), Some(1e-9));
        assert_eq!(m.prior(ClassId(0)), 0.5);
        assert_eq!(m.prior(ClassId(1)), 0.5);
    }

    #[test]
    fn fit_skips() {
        let one = vec![(vec![0.0], ClassId(1)); 20];
        assert_eq!(
            PosteriorModel::fit(one.iter().map(|(x, y)| (x.as_slice(), *y)), 10, 1e-9),
            Err(SkipReason::SingleClass)
        );
        let few = [(vec![0.0], ClassId(0)), (vec![1.0], ClassId(1))];
        assert_eq!(
            PosteriorModel::fit(few.iter().map(|(x, y)| (x.as_slice(), *y)), 10, 1e-9),
            Err(SkipReason::TooFewLabels { have: 2, need: 10 })
        );
    }

    #[test]
    fn midpoint_is_one_half() {
        let m = two_gaussians(0.0, 2.0);
        assert!((m.posterior(0, 1.0, ClassId(0)) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn posterior_at_class_center() {
        // N(0,1) vs N(2,1) at x = 0: ratio of densities is e^{-2}
        let m = two_gaussians(0.0, 2.0);
        let expected = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((m.posterior(0, 0.0, ClassId(0)) - expected).abs() < 1e-12);
        assert!((expected - 0.8808).abs() < 1e-4);
    }

    #[test]
    fn certain_prior_gives_certain_posterior() {
        let m = PosteriorModel::from_parts(
            vec![ClassId(0), ClassId(1)],
            vec![1.0, 0.0],
            vec![vec![0.0], vec![5.0]],
            vec![vec![1.0], vec![1.0]],
        );
        for x in [-3.0, 0.0, 5.0, 40.0] {
            assert_eq!(m.posterior(0, x, ClassId(0)), 1.0);
        }
    }

    #[test]
    fn unknown_class_has_zero_posterior() {
        let m = two_gaussians(0.0, 2.0);
        assert_eq!(m.posterior(0, 1.0, ClassId(4)), 0.0);
    }

    #[test]
    fn sample_has_one_value_per_instance_attribute() {
        let m = PosteriorModel::from_parts(
            vec![ClassId(0), ClassId(1)],
            vec![0.5, 0.5],
            vec![vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]],
            vec![vec![1.0; 3], vec![1.0; 3]],
        );
        let rows = [
            (vec![0.1, 0.2, 0.3], ClassId(0)),
            (vec![0.9, 0.8, 0.7], ClassId(1)),
        ];
        let s = PosteriorSample::compute(&m, rows.iter().map(|(x, y)| (x.as_slice(), *y)));
        assert_eq!(s.len(), 6);
        assert!(s.raw().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn constant_sample_is_degenerate() {
        let s = PosteriorSample::from_raw(vec![0.3; 5]);
        assert!(s.is_degenerate());
        assert!(s.standardized().iter().all(|&z| z == 0.0));
    }

    proptest! {
        #[test]
        fn z_scores_are_standard(raw in prop::collection::vec(0.0f64..1.0, 2..300)) {
            let s = PosteriorSample::from_raw(raw);
            prop_assume!(s.std() > 1e-6);
            let n = s.len() as f64;
            let mean = s.standardized().iter().sum::<f64>() / n;
            let var = s.standardized().iter().map(|z| (z - mean).powi(2)).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            prop_assert!((var.sqrt() - 1.0).abs() < 1e-9);
        }

        #[test]
        fn posteriors_sum_to_one(x in -10.0f64..10.0, mu in -3.0f64..3.0) {
            let m = two_gaussians(mu, -mu + 1.0);
            let total = m.posterior(0, x, ClassId(0)) + m.posterior(0, x, ClassId(1));
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }
}
