use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ConditionId {
    H1,
    H2,
    H3,
    H3b,
    H4,
    H4b,
    H4c,
    #[serde(rename = "SYG")]
    Syg,
    Martingale,
    Innovation,
}

impl ConditionId {
    pub fn parse(s: &str) -> Option<Self> {
        Some(match s.to_ascii_lowercase().as_str() {
            "h1" => Self::H1,
            "h2" => Self::H2,
            "h3" => Self::H3,
            "h3b" => Self::H3b,
            "h4" => Self::H4,
            "h4b" => Self::H4b,
            "h4c" => Self::H4c,
            "syg" => Self::Syg,
            "martingale" => Self::Martingale,
            "innovation" => Self::Innovation,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Fails,
    HoldsWithinMcError,
}

impl Verdict {
    pub fn is_failure(self) -> bool {
        self == Verdict::Fails
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvidenceMode {
    Exact,
    MonteCarlo,
}

/// Where a failing condition was observed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Witness {
    Unit(usize),
    Pair(usize, usize),
    Step(usize),
    /// Index of a population in a sequence.
    Point(usize),
    /// The variable of interest as a whole.
    Variable,
    /// Replicate index of a failing run.
    Replicate(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub condition: ConditionId,
    pub verdict: Verdict,
    pub mode: EvidenceMode,
    pub witness: Option<Witness>,
    pub statistics: BTreeMap<String, f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl ConditionReport {
    pub(crate) fn new(condition: ConditionId, mode: EvidenceMode) -> Self {
        Self {
            condition,
            verdict: Verdict::Holds,
            mode,
            witness: None,
            statistics: BTreeMap::new(),
            note: None,
        }
    }

    pub(crate) fn stat(mut self, name: &str, value: f64) -> Self {
        self.statistics.insert(name.to_string(), value);
        self
    }

    pub(crate) fn verdict(mut self, verdict: Verdict, witness: Option<Witness>) -> Self {
        self.verdict = verdict;
        self.witness = if verdict.is_failure() { witness } else { None };
        self
    }

    pub(crate) fn note(mut self, note: &str) -> Self {
        self.note = Some(note.to_string());
        self
    }

    pub fn statistic(&self, name: &str) -> Option<f64> {
        self.statistics.get(name).copied()
    }
}
