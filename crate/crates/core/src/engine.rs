//! One simulation instance: the informative layer and the two order books
//! stepped together over a shared population of traders.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::agents::{
    decide_status, expectation, noise, set_order_price, update_fundamental_values, Asset,
    Character, FundamentalState, PriceHistory, Quote, Status, Trader, TraderDecision,
};
use crate::book::{imbalance, settle, update_global_prices, MatchOutcome, Order, OrderBook, Side};
use crate::config::{SimConfig, INFO_THRESHOLD};
use crate::error::Result;
use crate::herding::{AvalancheResult, InformativeState};
use crate::rng::{substream, SimRng, Stream};
use crate::topology::{build_small_world, AdjacencyList};

#[derive(Debug, Clone, PartialEq)]
pub struct MarketState {
    pub prices: [f64; 2],
    pub history: [PriceHistory; 2],
    pub fundamental: FundamentalState,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BookSummary {
    pub n_b: usize,
    pub n_a: usize,
    pub n_t: usize,
    pub p_last: Option<f64>,
    pub omega: i64,
}

impl From<&MatchOutcome> for BookSummary {
    fn from(m: &MatchOutcome) -> Self {
        BookSummary {
            n_b: m.n_b,
            n_a: m.n_a,
            n_t: m.n_t,
            p_last: m.p_last,
            omega: imbalance(m),
        }
    }
}

/// Market after step `t`: `p1`, `p2` are the prices set for `t + 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRow {
    pub t: u64,
    pub p1: f64,
    pub p2: f64,
    pub p_avg: f64,
    pub avalanche_size: usize,
    pub books: [BookSummary; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSnapshot {
    pub id: usize,
    pub character: Character,
    pub money: f64,
    pub q1: u64,
    pub q2: u64,
    pub wealth: f64,
}

/// Posted-order counts of one trader group, over trader-asset-step slots.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GroupTally {
    pub buy: u64,
    pub sell: u64,
    pub slots: u64,
}

impl GroupTally {
    pub fn buy_fraction(&self) -> f64 {
        ratio(self.buy, self.slots)
    }

    pub fn sell_fraction(&self) -> f64 {
        ratio(self.sell, self.slots)
    }
}

fn ratio(a: u64, b: u64) -> f64 {
    if b == 0 {
        0.0
    } else {
        a as f64 / b as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Tallies {
    pub fundamentalists: GroupTally,
    pub chartists: GroupTally,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub rows: Vec<StepRow>,
    pub agents: Vec<AgentSnapshot>,
    pub tallies: Tallies,
    /// Steps on which some price was clamped to the floor.
    pub floor_hits: usize,
    pub initial_money: f64,
    pub initial_holdings: [u64; 2],
}

/// Everything produced by one step, for inspection and audits.
#[derive(Debug, Clone)]
pub struct StepReport {
    pub row: StepRow,
    pub avalanche: AvalancheResult,
    /// Final per-trader quotes after imitation and feasibility.
    pub decisions: Vec<TraderDecision>,
    pub outcomes: [MatchOutcome; 2],
}

struct Streams {
    fundamentals: SimRng,
    decisions: SimRng,
    drive: SimRng,
    tie_break: SimRng,
}

pub struct Market {
    cfg: SimConfig,
    traders: Vec<Trader>,
    graph: AdjacencyList,
    info: InformativeState,
    state: MarketState,
    best_ask_prev: [Option<f64>; 2],
    books: [OrderBook; 2],
    streams: Streams,
    t: u64,
    floor_hits: usize,
}

/// Population with identical endowments; exactly `n_fundamentalists` of them
/// picked by a seeded shuffle.
pub fn initial_traders<R: Rng + ?Sized>(cfg: &SimConfig, rng: &mut R) -> Vec<Trader> {
    let n = cfg.n_agents();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut is_fundamentalist = vec![false; n];
    for &i in &order[..cfg.n_fundamentalists()] {
        is_fundamentalist[i] = true;
    }
    is_fundamentalist
        .into_iter()
        .enumerate()
        .map(|(id, fundamentalist)| {
            let (character, theta_offset, window) = if fundamentalist {
                (Character::Fundamentalist, noise(cfg.theta, rng), 0)
            } else {
                (Character::Chartist, 0.0, rng.random_range(2..=cfg.t_max))
            };
            Trader {
                id,
                character,
                money: cfg.m0,
                holdings: [cfg.q1_0, cfg.q2_0],
                theta_offset,
                window,
            }
        })
        .collect()
}

/// Copies the trigger's quotes onto a participant where its budget and
/// holdings allow it; anything infeasible becomes a hold.
pub fn imitate(trigger: &TraderDecision, participant: &Trader) -> TraderDecision {
    let mut budget = participant.money;
    let mut out = *trigger;
    for asset in Asset::BOTH {
        let quote = &mut out[asset.index()];
        let feasible = match (quote.status, quote.price) {
            (Status::Bidder, Some(p)) => p <= budget,
            (Status::Asker, Some(_)) => participant.holding(asset) >= 1,
            _ => false,
        };
        if feasible {
            if quote.status == Status::Bidder {
                budget -= quote.price.unwrap_or(0.0);
            }
        } else {
            *quote = Quote::hold(quote.expected);
        }
    }
    out
}

impl Market {
    pub fn new(cfg: SimConfig) -> Result<Self> {
        cfg.validate()?;
        let mut topo_rng = substream(cfg.seed, Stream::Topology);
        let graph = build_small_world(cfg.side, cfg.rewiring_prob, &mut topo_rng)?;
        let mut init_rng = substream(cfg.seed, Stream::Init);
        let traders = initial_traders(&cfg, &mut init_rng);
        let info = InformativeState::random(cfg.n_agents(), INFO_THRESHOLD, cfg.alpha, &mut init_rng);
        let state = MarketState {
            prices: [cfg.p1_0, cfg.p2_0],
            history: [PriceHistory::new(cfg.p1_0), PriceHistory::new(cfg.p2_0)],
            fundamental: FundamentalState::default(),
        };
        let streams = Streams {
            fundamentals: substream(cfg.seed, Stream::Fundamentals),
            decisions: substream(cfg.seed, Stream::Decisions),
            drive: substream(cfg.seed, Stream::Drive),
            tie_break: substream(cfg.seed, Stream::TieBreak),
        };
        Ok(Market {
            cfg,
            traders,
            graph,
            info,
            state,
            best_ask_prev: [None, None],
            books: [OrderBook::new(), OrderBook::new()],
            streams,
            t: 0,
            floor_hits: 0,
        })
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn traders(&self) -> &[Trader] {
        &self.traders
    }

    pub fn graph(&self) -> &AdjacencyList {
        &self.graph
    }

    pub fn info(&self) -> &InformativeState {
        &self.info
    }

    pub fn state(&self) -> &MarketState {
        &self.state
    }

    pub fn time(&self) -> u64 {
        self.t
    }

    pub fn floor_hits(&self) -> usize {
        self.floor_hits
    }

    pub fn average_price(&self, p1: f64, p2: f64) -> f64 {
        let (w1, w2) = (self.cfg.q1_0 as f64, self.cfg.q2_0 as f64);
        let total = w1 + w2;
        if total == 0.0 {
            0.5 * (p1 + p2)
        } else {
            p1 * w1 / total + p2 * w2 / total
        }
    }

    /// Independent per-asset quotes of one trader, before any herding.
    fn own_decision(&mut self, i: usize) -> TraderDecision {
        let trader = &self.traders[i];
        let mut budget = trader.money;
        let mut out = [Quote::hold(0.0); 2];
        for asset in Asset::BOTH {
            let a = asset.index();
            let history = &self.state.history[a];
            let p_now = history.last();
            let rng = &mut self.streams.decisions;
            let expected = expectation(trader, asset, history, &self.state.fundamental, &self.cfg, rng);
            let status = decide_status(expected, p_now, self.cfg.tau);
            let price = match status {
                Status::Holder => None,
                Status::Asker if trader.holdings[a] == 0 => None,
                _ => set_order_price(
                    status,
                    expected,
                    p_now,
                    self.best_ask_prev[a],
                    budget,
                    self.cfg.beta_ask,
                    rng,
                ),
            };
            out[a] = match price {
                Some(p) => {
                    if status == Status::Bidder {
                        budget -= p;
                    }
                    Quote { status, expected, price: Some(p) }
                }
                None => Quote::hold(expected),
            };
        }
        out
    }

    /// Advances one step and returns everything it produced.
    pub fn step(&mut self) -> Result<StepReport> {
        let t = self.t;
        self.state.fundamental =
            update_fundamental_values(self.state.fundamental, t, &self.cfg, &mut self.streams.fundamentals);

        let mut decisions: Vec<TraderDecision> =
            (0..self.traders.len()).map(|i| self.own_decision(i)).collect();

        let trigger = self.info.drive(&mut self.streams.drive);
        let avalanche = self.info.relax(&self.graph, trigger, self.cfg.avalanche_cap)?;
        let lead = decisions[trigger];
        for &i in avalanche.participants.iter().filter(|&&i| i != trigger) {
            decisions[i] = imitate(&lead, &self.traders[i]);
        }

        let mut outcomes: [MatchOutcome; 2] = Default::default();
        for asset in Asset::BOTH {
            let a = asset.index();
            let book = &mut self.books[a];
            book.clear();
            for (agent, decision) in decisions.iter().enumerate() {
                let quote = decision[a];
                let side = match quote.status {
                    Status::Bidder => Side::Bid,
                    Status::Asker => Side::Ask,
                    Status::Holder => continue,
                };
                let price = quote.price.expect("non-holders carry a price");
                book.push(Order { agent, side, price });
            }
            book.rank(&mut self.streams.tie_break);
            self.best_ask_prev[a] = book.best_ask();
            outcomes[a] = book.match_orders();
            settle(&outcomes[a].trades, &mut self.traders, asset)?;
        }

        let update = update_global_prices(
            self.state.prices,
            [&outcomes[0], &outcomes[1]],
            self.cfg.delta,
            self.cfg.price_floor,
        );
        if update.floored.iter().any(|&f| f) {
            if self.floor_hits == 0 {
                log::warn!("step {t}: price clamped to floor {}", self.cfg.price_floor);
            }
            self.floor_hits += 1;
        }
        self.state.prices = update.prices;
        for a in 0..2 {
            self.state.history[a].push(update.prices[a]);
        }
        self.t += 1;

        let [p1, p2] = update.prices;
        let row = StepRow {
            t,
            p1,
            p2,
            p_avg: self.average_price(p1, p2),
            avalanche_size: avalanche.size(),
            books: [BookSummary::from(&outcomes[0]), BookSummary::from(&outcomes[1])],
        };
        Ok(StepReport {
            row,
            avalanche,
            decisions,
            outcomes,
        })
    }

    pub fn snapshot(&self) -> Vec<AgentSnapshot> {
        let [p1, p2] = self.state.prices;
        self.traders
            .iter()
            .map(|tr| AgentSnapshot {
                id: tr.id,
                character: tr.character,
                money: tr.money,
                q1: tr.holdings[0],
                q2: tr.holdings[1],
                wealth: tr.wealth(p1, p2),
            })
            .collect()
    }

    pub fn total_money(&self) -> f64 {
        self.traders.iter().map(|t| t.money).sum()
    }

    pub fn total_holdings(&self) -> [u64; 2] {
        let mut out = [0, 0];
        for t in &self.traders {
            out[0] += t.holdings[0];
            out[1] += t.holdings[1];
        }
        out
    }
}

fn tally(tallies: &mut Tallies, traders: &[Trader], decisions: &[TraderDecision]) {
    for (trader, decision) in traders.iter().zip(decisions) {
        let group = match trader.character {
            Character::Fundamentalist => &mut tallies.fundamentalists,
            Character::Chartist => &mut tallies.chartists,
        };
        for quote in decision {
            group.slots += 1;
            match quote.status {
                Status::Bidder => group.buy += 1,
                Status::Asker => group.sell += 1,
                Status::Holder => {}
            }
        }
    }
}

/// Runs the transient, then records `record_steps` steps.
pub fn run(cfg: &SimConfig) -> Result<RunRecord> {
    let mut market = Market::new(cfg.clone())?;
    let initial_money = market.total_money();
    let initial_holdings = market.total_holdings();
    for _ in 0..cfg.transient_steps {
        market.step()?;
    }
    let mut rows = Vec::with_capacity(cfg.record_steps);
    let mut tallies = Tallies::default();
    for _ in 0..cfg.record_steps {
        let report = market.step()?;
        tally(&mut tallies, &market.traders, &report.decisions);
        rows.push(report.row);
    }
    Ok(RunRecord {
        rows,
        agents: market.snapshot(),
        tallies,
        floor_hits: market.floor_hits(),
        initial_money,
        initial_holdings,
    })
}
