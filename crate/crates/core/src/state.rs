use std::fmt;
use std::str::FromStr;

/// Three-level detector output shared by every detector in the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub enum DriftState {
    #[default]
    Stable,
    Warning,
    Drift,
}

impl DriftState {
    pub fn as_str(self) -> &'static str {
        match self {
            DriftState::Stable => "stable",
            DriftState::Warning => "warning",
            DriftState::Drift => "drift",
        }
    }
}

impl fmt::Display for DriftState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DriftState {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stable" => Ok(DriftState::Stable),
            "warning" => Ok(DriftState::Warning),
            "drift" => Ok(DriftState::Drift),
            other => Err(format!("unknown drift state `{other}`")),
        }
    }
}
