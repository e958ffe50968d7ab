//! Knowledge discovery: assembling a reliable labeled set per window from
//! labels that arrived with instances plus labels acquired under a budget.

use std::collections::HashSet;

use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hoeffding::{HoeffdingTree, TreeParams};
use crate::learner::Classifier;
use crate::stream::{labeled_fraction, label_allowance, ClassId, Instance, LabelOracle, Window};

/// Fraction of instances whose labels may be requested, in (0, 1].
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LabelBudget(f64);

impl LabelBudget {
    pub fn new(fraction: f64) -> Result<Self> {
        if fraction > 0.0 && fraction <= 1.0 {
            Ok(Self(fraction))
        } else {
            Err(Error::config(format!(
                "label budget must lie in (0, 1], got {fraction}"
            )))
        }
    }

    pub fn fraction(self) -> f64 {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Provenance {
    /// Arrived labeled with the instance.
    Given,
    /// Bought from the oracle.
    Queried,
    /// Produced by a learner (PU reliable negatives).
    Inferred,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RlEntry {
    pub instance: Instance,
    pub label: ClassId,
    pub provenance: Provenance,
}

/// Why a reliable labeled set came out smaller than requested.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Shortfall {
    /// The oracle refused further queries; `missing` labels were not obtained.
    BudgetExhausted { missing: usize },
    /// PU learning found no labeled positives.
    NoPositives,
    /// Fewer predicted negatives than positives were available.
    NegativePoolShort { missing: usize },
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ReliableLabeledSet {
    entries: Vec<RlEntry>,
    shortfall: Option<Shortfall>,
}

impl ReliableLabeledSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an entry unless its instance index is already present.
    pub fn push(&mut self, instance: Instance, label: ClassId, provenance: Provenance) -> bool {
        if self.contains(instance.index) {
            return false;
        }
        self.entries.push(RlEntry {
            instance,
            label,
            provenance,
        });
        true
    }

    pub fn contains(&self, index: u64) -> bool {
        self.entries.iter().any(|e| e.instance.index == index)
    }

    pub fn entries(&self) -> &[RlEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn shortfall(&self) -> Option<Shortfall> {
        self.shortfall
    }

    pub fn count(&self, provenance: Provenance) -> usize {
        self.entries
            .iter()
            .filter(|e| e.provenance == provenance)
            .count()
    }

    pub fn distinct_classes(&self) -> usize {
        self.entries
            .iter()
            .map(|e| e.label)
            .collect::<HashSet<_>>()
            .len()
    }

    /// `(features, label)` pairs in stream order.
    pub fn pairs(&self) -> impl Iterator<Item = (&[f64], ClassId)> {
        self.entries
            .iter()
            .map(|e| (e.instance.features.as_slice(), e.label))
    }

    pub fn label_of(&self, index: u64) -> Option<ClassId> {
        self.entries
            .iter()
            .find(|e| e.instance.index == index)
            .map(|e| e.label)
    }

    fn sort_by_index(&mut self) {
        self.entries.sort_by_key(|e| e.instance.index);
    }
}

/// Random selective labeling.
///
/// Keeps every label that arrived with the window. If their fraction is
/// below the budget, uniformly samples unlabeled instances without
/// replacement and queries the oracle until `ceil(alpha * n)` labels are
/// held. A refusal by the oracle truncates the set and is recorded as a
/// [`Shortfall`].
pub fn active_learn<R: Rng + ?Sized>(
    w: &Window,
    oracle: &mut LabelOracle,
    budget: LabelBudget,
    rng: &mut R,
) -> ReliableLabeledSet {
    let mut rl = ReliableLabeledSet::new();
    for (inst, label) in w.labeled() {
        rl.push(inst.clone(), label, Provenance::Given);
    }
    if labeled_fraction(w) >= budget.fraction() {
        return rl;
    }
    let target = label_allowance(budget.fraction(), w.len());
    let need = target.saturating_sub(rl.len());
    let unlabeled: Vec<&Instance> = w.instances().iter().filter(|i| i.label.is_none()).collect();
    let need = need.min(unlabeled.len());

    let mut picked: Vec<usize> = index::sample(rng, unlabeled.len(), need).into_vec();
    picked.sort_unstable();
    for (k, &pos) in picked.iter().enumerate() {
        let inst = unlabeled[pos];
        match oracle.query(inst.index, budget) {
            Ok(Some(label)) => {
                rl.push(inst.clone(), label, Provenance::Queried);
            }
            Ok(None) => {}
            Err(_) => {
                rl.shortfall = Some(Shortfall::BudgetExhausted {
                    missing: need - k,
                });
                break;
            }
        }
    }
    rl.sort_by_index();
    rl
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PuConfig {
    pub positive: ClassId,
    pub negative: ClassId,
    /// Hyperparameters of the biased classifier.
    pub tree: TreeParams,
}

impl Default for PuConfig {
    fn default() -> Self {
        Self {
            positive: ClassId(1),
            negative: ClassId(0),
            tree: TreeParams::default(),
        }
    }
}

/// Biased PU learning.
///
/// Trains a Hoeffding tree for one pass over the window with every
/// unlabeled instance taken as negative. Among unlabeled instances the tree
/// still calls negative, it samples uniformly as many reliable negatives as
/// there are labeled positives. Returns the positives plus those inferred
/// negatives.
pub fn pu_learn<R: Rng + ?Sized>(
    w: &Window,
    cfg: &PuConfig,
    rng: &mut R,
) -> Result<ReliableLabeledSet> {
    if let Some((inst, label)) = w.labeled().find(|(_, l)| *l != cfg.positive) {
        return Err(Error::Precondition(format!(
            "PU learning expects only positive labels, instance {} has {label}",
            inst.index
        )));
    }
    let mut rl = ReliableLabeledSet::new();
    for (inst, label) in w.labeled() {
        rl.push(inst.clone(), label, Provenance::Given);
    }
    if rl.is_empty() {
        rl.shortfall = Some(Shortfall::NoPositives);
        return Ok(rl);
    }

    let mut biased = HoeffdingTree::new(cfg.tree);
    for inst in w.instances() {
        let y = inst.label.unwrap_or(cfg.negative);
        biased.train(&inst.features, y)?;
    }
    let pool: Vec<&Instance> = w
        .instances()
        .iter()
        .filter(|i| i.label.is_none() && biased.predict(&i.features) == cfg.negative)
        .collect();
    let wanted = rl.len();
    let take = wanted.min(pool.len());
    if take < wanted {
        rl.shortfall = Some(Shortfall::NegativePoolShort {
            missing: wanted - take,
        });
    }
    for pos in index::sample(rng, pool.len(), take) {
        rl.push(pool[pos].clone(), cfg.negative, Provenance::Inferred);
    }
    rl.sort_by_index();
    Ok(rl)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn window(n: usize, labeled: usize) -> (Window, LabelOracle) {
        let mut oracle = LabelOracle::new();
        let inst = (0..n)
            .map(|i| {
                let truth = ClassId((i % 2) as u32);
                oracle.register(i as u64, truth);
                let x = Instance::new(i as u64, vec![i as f64]).unwrap();
                if i < labeled {
                    oracle.reveal(i as u64);
                    x.with_label(truth)
                } else {
                    x
                }
            })
            .collect();
        (Window::new(inst).unwrap(), oracle)
    }

    #[test]
    fn budget_bounds() {
        assert!(LabelBudget::new(0.0).is_err());
        assert!(LabelBudget::new(1.5).is_err());
        assert!(LabelBudget::new(1.0).is_ok());
    }

    #[test]
    fn queries_up_to_budget_from_nothing() {
        let (w, mut oracle) = window(1000, 0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rl = active_learn(&w, &mut oracle, LabelBudget::new(0.2).unwrap(), &mut rng);
        assert_eq!(rl.count(Provenance::Queried), 200);
        assert_eq!(rl.len(), 200);
        assert_eq!(oracle.query_count(), 200);
        assert!(rl.shortfall().is_none());
    }

    #[test]
    fn enough_given_labels_means_no_queries() {
        let (w, mut oracle) = window(1000, 300);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rl = active_learn(&w, &mut oracle, LabelBudget::new(0.2).unwrap(), &mut rng);
        assert_eq!(rl.count(Provenance::Queried), 0);
        assert_eq!(rl.count(Provenance::Given), 300);
        assert_eq!(oracle.query_count(), 0);
    }

    #[test]
    fn tops_up_partial_labels() {
        let (w, mut oracle) = window(1000, 50);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rl = active_learn(&w, &mut oracle, LabelBudget::new(0.2).unwrap(), &mut rng);
        assert_eq!(rl.count(Provenance::Queried), 150);
        assert_eq!(rl.len(), 200);
    }

    #[test]
    fn same_seed_same_selection() {
        let pick = |seed| {
            let (w, mut oracle) = window(500, 0);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let rl = active_learn(&w, &mut oracle, LabelBudget::new(0.3).unwrap(), &mut rng);
            rl.entries()
                .iter()
                .map(|e| e.instance.index)
                .collect::<Vec<_>>()
        };
        assert_eq!(pick(42), pick(42));
        assert_ne!(pick(42), pick(43));
    }

    #[test]
    fn refusal_is_reported_not_fatal() {
        let (w, mut oracle) = window(100, 0);
        let budget = LabelBudget::new(0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        // spend the allowance elsewhere first
        for i in 0..50 {
            oracle.query(i, budget).unwrap();
        }
        let fresh = Window::new(
            w.instances()[50..].to_vec(),
        )
        .unwrap();
        let rl = active_learn(&fresh, &mut oracle, budget, &mut rng);
        assert!(matches!(
            rl.shortfall(),
            Some(Shortfall::BudgetExhausted { missing: 25 })
        ));
        assert!(rl.is_empty());
    }

    fn pu_window(seed: u64, n: usize, frac: f64) -> (Window, Vec<ClassId>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut truths = Vec::new();
        let inst = (0..n)
            .map(|i| {
                let x: f64 = rng.gen_range(0.0..10.0);
                let truth = ClassId(u32::from(x > 6.0));
                truths.push(truth);
                let inst = Instance::new(i as u64, vec![x, rng.gen_range(0.0..1.0)]).unwrap();
                if truth == ClassId(1) && rng.gen::<f64>() < frac {
                    inst.with_label(truth)
                } else {
                    inst
                }
            })
            .collect();
        (Window::new(inst).unwrap(), truths)
    }

    #[test]
    fn pu_requests_as_many_negatives_as_positives() {
        // majority-vote leaves only separate the classes when most positives carry labels
        let (w, truths) = pu_window(8, 1000, 0.7);
        let positives = w.labeled_count();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rl = pu_learn(&w, &PuConfig::default(), &mut rng).unwrap();
        assert_eq!(rl.count(Provenance::Given), positives);
        assert_eq!(rl.count(Provenance::Inferred), positives);
        let inferred: Vec<&RlEntry> = rl
            .entries()
            .iter()
            .filter(|e| e.provenance == Provenance::Inferred)
            .collect();
        assert!(inferred.iter().all(|e| e.label == ClassId(0)));
        let truly_negative = inferred
            .iter()
            .filter(|e| truths[e.instance.index as usize] == ClassId(0))
            .count();
        assert!(truly_negative as f64 >= 0.9 * inferred.len() as f64);
    }

    #[test]
    fn pu_without_positives_flags() {
        let (w, _) = pu_window(2, 100, 0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rl = pu_learn(&w, &PuConfig::default(), &mut rng).unwrap();
        assert!(rl.is_empty());
        assert_eq!(rl.shortfall(), Some(Shortfall::NoPositives));
    }

    #[test]
    fn pu_rejects_negative_labels() {
        let (w, _) = window(10, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(pu_learn(&w, &PuConfig::default(), &mut rng).is_err());
    }

    #[test]
    fn pu_short_pool_returns_all_and_flags() {
        // 90 labeled positives, 10 unlabeled: the pool cannot supply 90
        let inst = (0..100u64)
            .map(|i| {
                let x = Instance::new(i, vec![i as f64]).unwrap();
                if i < 90 {
                    x.with_label(ClassId(1))
                } else {
                    x
                }
            })
            .collect();
        let w = Window::new(inst).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let rl = pu_learn(&w, &PuConfig::default(), &mut rng).unwrap();
        let inferred = rl.count(Provenance::Inferred);
        assert!(inferred <= 10);
        assert_eq!(
            rl.shortfall(),
            Some(Shortfall::NegativePoolShort {
                missing: 90 - inferred
            })
        );
    }
}
