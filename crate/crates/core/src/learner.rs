use crate::error::Result;
use crate::stream::ClassId;

/// Incremental classifier interface used by the detectors and the harness.
pub trait Classifier: Clone {
    fn train_one(&mut self, features: &[f64], label: ClassId) -> Result<()>;

    fn predict(&self, features: &[f64]) -> ClassId;

    fn is_trained(&self) -> bool;

    /// An untrained learner with the same hyperparameters.
    fn fresh(&self) -> Self;

    fn train_batch<'a, I>(&mut self, batch: I) -> Result<()>
    where
        I: IntoIterator<Item = (&'a [f64], ClassId)>,
    {
        for (x, y) in batch {
            self.train_one(x, y)?;
        }
        Ok(())
    }
}
