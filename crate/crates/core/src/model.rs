use crate::behavior::{HazardModel, RecoveryModel};
use crate::error::{Error, Result};
use crate::market::MarketModel;
use crate::schedule::LoanSpec;
use crate::state::MarketState;

/// A loan together with the market, hazard and recovery models that drive
/// its cash-flow. All components are checked to cover the loan term.
#[derive(Debug, Clone, PartialEq)]
pub struct RiskModel {
    pub loan: LoanSpec,
    pub market: MarketModel,
    pub hazards: HazardModel,
    pub recovery: RecoveryModel,
}

impl RiskModel {
    pub fn new(loan: LoanSpec, market: MarketModel, hazards: HazardModel, recovery: RecoveryModel) -> Result<Self> {
        let n = loan.term();
        if market.horizon() < n {
            return Err(Error::Horizon(format!(
                "market persistence covers {} months, loan term is {n}",
                market.horizon()
            )));
        }
        if hazards.term() != n {
            return Err(Error::Horizon(format!("hazards cover {} months, loan term is {n}", hazards.term())));
        }
        if recovery.term() != n {
            return Err(Error::Horizon(format!("recovery covers {} months, loan term is {n}", recovery.term())));
        }
        Ok(RiskModel {
            loan,
            market,
            hazards,
            recovery,
        })
    }

    pub fn term(&self) -> usize {
        self.loan.term()
    }

    pub fn initial_state(&self) -> MarketState {
        self.market.initial_state()
    }

    /// Same model started from `state`.
    pub fn with_initial_state(&self, state: MarketState) -> Self {
        RiskModel {
            market: self.market.with_initial_state(state),
            ..self.clone()
        }
    }
}
