//! Shared pieces of campaign reports.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CellStatus {
    Certified,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Summary {
    pub total: usize,
    pub certified: usize,
    pub inconclusive: usize,
}

impl Summary {
    pub fn tally(statuses: impl IntoIterator<Item = CellStatus>) -> Summary {
        statuses.into_iter().fold(Summary::default(), |mut s, st| {
            s.total += 1;
            match st {
                CellStatus::Certified => s.certified += 1,
                CellStatus::Inconclusive => s.inconclusive += 1,
            }
            s
        })
    }

    pub fn all_certified(&self) -> bool {
        self.inconclusive == 0
    }
}
