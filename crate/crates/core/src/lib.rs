//! Constructions and verification tools around the oblivious branching
//! program lower bound for the median, plus small-space selection baselines.

pub mod bp;
pub mod median;
pub mod hard;
pub mod info;
pub mod partition;
pub mod reduction;
pub mod select;
pub mod experiment;
pub mod verify;
pub mod cli;

use serde::Serialize;

/// A player in a two-party protocol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Party {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }

    pub fn tag(self) -> char {
        match self {
            Party::Alice => 'A',
            Party::Bob => 'B',
        }
    }
}
