//! Supervised drift detectors driven by a per-instance error stream.

mod adwin;
mod ddm;
mod eddm;
mod page_hinkley;

pub use adwin::{cut_bound, Adwin, AdwinParams};
pub use ddm::{Ddm, DdmParams};
pub use eddm::{Eddm, EddmParams};
pub use page_hinkley::{PageHinkley, PageHinkleyParams};

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::state::DriftState;

/// A detector fed one observation per labeled instance.
///
/// DDM and EDDM read the value as an error bit (`>= 0.5` is an error);
/// ADWIN and Page-Hinkley use it as a real value.
pub trait BinaryErrorDetector: Send {
    fn update(&mut self, value: f64) -> DriftState;

    fn state(&self) -> DriftState;

    /// Forgets all statistics, as after a confirmed drift.
    fn reset(&mut self);

    fn name(&self) -> &'static str;

    /// Whether the method has a native warning level.
    fn has_warning(&self) -> bool;
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BaselineKind {
    Ddm,
    Eddm,
    Adwin,
    PageHinkley,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 4] = [
        BaselineKind::PageHinkley,
        BaselineKind::Adwin,
        BaselineKind::Eddm,
        BaselineKind::Ddm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::Ddm => "ddm",
            BaselineKind::Eddm => "eddm",
            BaselineKind::Adwin => "adwin",
            BaselineKind::PageHinkley => "ph",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s.to_ascii_lowercase().as_str() {
            "ddm" => Ok(BaselineKind::Ddm),
            "eddm" => Ok(BaselineKind::Eddm),
            "adwin" | "adw" => Ok(BaselineKind::Adwin),
            "ph" | "page-hinkley" => Ok(BaselineKind::PageHinkley),
            other => Err(Error::config(format!("unknown baseline detector `{other}`"))),
        }
    }
}

/// Hyperparameters for every baseline, so one value can configure a grid.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct BaselineParams {
    pub ddm: DdmParams,
    pub eddm: EddmParams,
    pub adwin: AdwinParams,
    pub ph: PageHinkleyParams,
}

impl BaselineParams {
    pub fn build(&self, kind: BaselineKind) -> Box<dyn BinaryErrorDetector> {
        match kind {
            BaselineKind::Ddm => Box::new(Ddm::new(self.ddm)),
            BaselineKind::Eddm => Box::new(Eddm::new(self.eddm)),
            BaselineKind::Adwin => Box::new(Adwin::new(self.adwin)),
            BaselineKind::PageHinkley => Box::new(PageHinkley::new(self.ph)),
        }
    }
}

#[cfg(test)]
pub(crate) mod testing {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Bernoulli bits with rate `before` up to `change`, then `after`.
    pub fn step_stream(seed: u64, len: usize, change: usize, before: f64, after: f64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..len)
            .map(|i| {
                let p = if i < change { before } else { after };
                f64::from(u8::from(rng.gen::<f64>() < p))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kinds_round_trip() {
        for k in BaselineKind::ALL {
            assert_eq!(k.as_str().parse::<BaselineKind>().unwrap(), k);
        }
        assert!("kswin".parse::<BaselineKind>().is_err());
    }

    #[test]
    fn built_detectors_report_their_names() {
        let p = BaselineParams::default();
        for k in BaselineKind::ALL {
            let d = p.build(k);
            assert_eq!(d.name(), k.as_str());
            assert_eq!(d.state(), DriftState::Stable);
            assert_eq!(
                d.has_warning(),
                matches!(k, BaselineKind::Ddm | BaselineKind::Eddm)
            );
        }
    }
}
