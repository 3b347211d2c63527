use std::fmt;

use serde::{Deserialize, Serialize};

/// Credit-market condition in force during a period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MarketState {
    #[serde(rename = "B")]
    Bad,
    #[serde(rename = "G")]
    Good,
}

impl MarketState {
    pub const ALL: [MarketState; 2] = [MarketState::Bad, MarketState::Good];

    /// Row/column position in transition matrices and per-state arrays.
    pub fn index(self) -> usize {
        match self {
            MarketState::Bad => 0,
            MarketState::Good => 1,
        }
    }

    pub fn other(self) -> MarketState {
        match self {
            MarketState::Bad => MarketState::Good,
            MarketState::Good => MarketState::Bad,
        }
    }

    pub fn letter(self) -> char {
        match self {
            MarketState::Bad => 'B',
            MarketState::Good => 'G',
        }
    }
}

impl fmt::Display for MarketState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.letter())
    }
}

/// A pair of values indexed by market state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PerState<T> {
    pub bad: T,
    pub good: T,
}

impl<T> PerState<T> {
    pub fn new(bad: T, good: T) -> Self {
        PerState { bad, good }
    }

    pub fn from_fn(mut f: impl FnMut(MarketState) -> T) -> Self {
        let bad = f(MarketState::Bad);
        let good = f(MarketState::Good);
        PerState { bad, good }
    }

    pub fn try_from_fn<E>(mut f: impl FnMut(MarketState) -> Result<T, E>) -> Result<Self, E> {
        Ok(PerState::new(f(MarketState::Bad)?, f(MarketState::Good)?))
    }

    pub fn get(&self, state: MarketState) -> &T {
        match state {
            MarketState::Bad => &self.bad,
            MarketState::Good => &self.good,
        }
    }

    pub fn get_mut(&mut self, state: MarketState) -> &mut T {
        match state {
            MarketState::Bad => &mut self.bad,
            MarketState::Good => &mut self.good,
        }
    }

    pub fn map<U>(&self, mut f: impl FnMut(MarketState, &T) -> U) -> PerState<U> {
        PerState {
            bad: f(MarketState::Bad, &self.bad),
            good: f(MarketState::Good, &self.good),
        }
    }

    pub fn try_map<U, E>(
        &self,
        mut f: impl FnMut(MarketState, &T) -> Result<U, E>,
    ) -> Result<PerState<U>, E> {
        Ok(PerState {
            bad: f(MarketState::Bad, &self.bad)?,
            good: f(MarketState::Good, &self.good)?,
        })
    }
}

impl<T> std::ops::Index<MarketState> for PerState<T> {
    type Output = T;
    fn index(&self, state: MarketState) -> &T {
        self.get(state)
    }
}

impl<T> std::ops::IndexMut<MarketState> for PerState<T> {
    fn index_mut(&mut self, state: MarketState) -> &mut T {
        self.get_mut(state)
    }
}
