//! Per-asset order book with unit orders, matching at the ask price, and the
//! cross-asset price update.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::agents::{Asset, Trader};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Bid,
    Ask,
}

/// A unit order.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Order {
    pub agent: usize,
    pub side: Side,
    pub price: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trade {
    pub buyer: usize,
    pub seller: usize,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MatchOutcome {
    pub n_b: usize,
    pub n_a: usize,
    pub n_t: usize,
    /// Ask price of the last executed trade.
    pub p_last: Option<f64>,
    pub trades: Vec<Trade>,
}

/// Bids best-first (descending), asks best-first (ascending).
#[derive(Debug, Clone, Default)]
pub struct OrderBook {
    bids: Vec<Order>,
    asks: Vec<Order>,
}

impl OrderBook {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn clear(&mut self) {
        self.bids.clear();
        self.asks.clear();
    }

    /// Appends an order; call [`OrderBook::rank`] once the batch is complete.
    pub fn push(&mut self, order: Order) {
        debug_assert!(order.price > 0.0);
        match order.side {
            Side::Bid => self.bids.push(order),
            Side::Ask => self.asks.push(order),
        }
    }

    /// Sorts both sides by price priority. Equal prices end up in random
    /// order: the batch is shuffled before a stable sort.
    pub fn rank<R: Rng + ?Sized>(&mut self, rng: &mut R) {
        self.bids.shuffle(rng);
        self.asks.shuffle(rng);
        self.bids.sort_by(|a, b| b.price.total_cmp(&a.price));
        self.asks.sort_by(|a, b| a.price.total_cmp(&b.price));
    }

    pub fn bids(&self) -> &[Order] {
        &self.bids
    }

    pub fn asks(&self) -> &[Order] {
        &self.asks
    }

    pub fn best_bid(&self) -> Option<f64> {
        self.bids.first().map(|o| o.price)
    }

    pub fn best_ask(&self) -> Option<f64> {
        self.asks.first().map(|o| o.price)
    }

    pub fn is_ranked(&self) -> bool {
        self.bids.windows(2).all(|w| w[0].price >= w[1].price)
            && self.asks.windows(2).all(|w| w[0].price <= w[1].price)
    }

    /// Walks both sides in priority order, executing one unit per pair while
    /// the bid strictly exceeds the ask.
    pub fn match_orders(&self) -> MatchOutcome {
        debug_assert!(self.is_ranked());
        let trades: Vec<Trade> = self
            .bids
            .iter()
            .zip(&self.asks)
            .take_while(|(bid, ask)| bid.price > ask.price)
            .map(|(bid, ask)| Trade {
                buyer: bid.agent,
                seller: ask.agent,
                price: ask.price,
            })
            .collect();
        MatchOutcome {
            n_b: self.bids.len(),
            n_a: self.asks.len(),
            n_t: trades.len(),
            p_last: trades.last().map(|t| t.price),
            trades,
        }
    }
}

/// Moves cash and one unit of `asset` for every trade.
pub fn settle(trades: &[Trade], traders: &mut [Trader], asset: Asset) -> Result<()> {
    let a = asset.index();
    for trade in trades {
        if trade.buyer == trade.seller {
            return Err(Error::Settlement(format!("agent {} trades with itself", trade.buyer)));
        }
        let buyer = &traders[trade.buyer];
        if buyer.money < trade.price {
            return Err(Error::Settlement(format!(
                "buyer {} has {} but owes {}",
                trade.buyer, buyer.money, trade.price
            )));
        }
        if traders[trade.seller].holdings[a] == 0 {
            return Err(Error::Settlement(format!(
                "seller {} holds no units of asset {}",
                trade.seller,
                a + 1
            )));
        }
        traders[trade.buyer].money -= trade.price;
        traders[trade.buyer].holdings[a] += 1;
        traders[trade.seller].money += trade.price;
        traders[trade.seller].holdings[a] -= 1;
    }
    Ok(())
}

/// Signed count of unsatisfied orders on the larger side of the book.
pub fn imbalance(outcome: &MatchOutcome) -> i64 {
    let (n_b, n_a, n_t) = (outcome.n_b as i64, outcome.n_a as i64, outcome.n_t as i64);
    if n_b >= n_a {
        n_b - n_t
    } else {
        -(n_a - n_t)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriceUpdate {
    pub prices: [f64; 2],
    /// Which assets were clamped to the floor.
    pub floored: [bool; 2],
}

/// Next global prices: each asset starts from its last trade price (or the
/// current price if nothing traded) and is shifted by `delta` times the other
/// asset's imbalance.
pub fn update_global_prices(
    p_now: [f64; 2],
    outcomes: [&MatchOutcome; 2],
    delta: f64,
    floor: f64,
) -> PriceUpdate {
    let omega = [imbalance(outcomes[0]), imbalance(outcomes[1])];
    let mut prices = [0.0; 2];
    let mut floored = [false; 2];
    for a in 0..2 {
        let base = outcomes[a].p_last.unwrap_or(p_now[a]);
        let raw = base + delta * omega[1 - a] as f64;
        if raw < floor {
            floored[a] = true;
            prices[a] = floor;
        } else {
            prices[a] = raw;
        }
    }
    PriceUpdate { prices, floored }
}
