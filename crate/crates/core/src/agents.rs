//! Traders, expectation formation and order-price setting.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::config::SimConfig;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Character {
    Fundamentalist,
    Chartist,
}

impl Character {
    pub fn as_str(self) -> &'static str {
        match self {
            Character::Fundamentalist => "fundamentalist",
            Character::Chartist => "chartist",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Asset {
    One,
    Two,
}

impl Asset {
    pub const BOTH: [Asset; 2] = [Asset::One, Asset::Two];

    pub fn index(self) -> usize {
        match self {
            Asset::One => 0,
            Asset::Two => 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Status {
    Bidder,
    Asker,
    Holder,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trader {
    pub id: usize,
    pub character: Character,
    pub money: f64,
    /// Holdings of asset one and two.
    pub holdings: [u64; 2],
    /// Fundamentalist price offset, fixed for the whole run. Zero for chartists.
    pub theta_offset: f64,
    /// Chartist averaging window. Zero for fundamentalists.
    pub window: u32,
}

impl Trader {
    pub fn holding(&self, asset: Asset) -> u64 {
        self.holdings[asset.index()]
    }

    pub fn wealth(&self, p1: f64, p2: f64) -> f64 {
        wealth(self.money, self.holdings, p1, p2)
    }
}

pub fn wealth(money: f64, holdings: [u64; 2], p1: f64, p2: f64) -> f64 {
    money + holdings[0] as f64 * p1 + holdings[1] as f64 * p2
}

/// One trader's intent on one asset for the current step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quote {
    pub status: Status,
    pub expected: f64,
    /// Personal bid or ask price; `None` for holders.
    pub price: Option<f64>,
}

impl Quote {
    pub fn hold(expected: f64) -> Self {
        Quote { status: Status::Holder, expected, price: None }
    }
}

/// Per-asset quotes of one trader.
pub type TraderDecision = [Quote; 2];

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FundamentalState {
    pub fv: [f64; 2],
}

/// Applies the fundamental-value random walk on steps that are positive
/// multiples of `t_f`.
pub fn update_fundamental_values<R: Rng + ?Sized>(
    fs: FundamentalState,
    t: u64,
    cfg: &SimConfig,
    rng: &mut R,
) -> FundamentalState {
    if t == 0 || !t.is_multiple_of(cfg.t_f) {
        return fs;
    }
    let mut out = fs;
    for (fv, sd) in out.fv.iter_mut().zip([cfg.sigma_1f, cfg.sigma_2f]) {
        if sd > 0.0 {
            *fv += Normal::new(0.0, sd).expect("validated sd").sample(rng);
        }
    }
    out
}

/// Uniform noise on `(-half_width, half_width)`.
pub fn noise<R: Rng + ?Sized>(half_width: f64, rng: &mut R) -> f64 {
    if half_width > 0.0 {
        rng.random_range(-half_width..half_width)
    } else {
        0.0
    }
}

pub fn fundamentalist_expectation(p_now: f64, p_fundamental: f64, phi: f64, eps: f64) -> f64 {
    p_now + phi * (p_fundamental - p_now) + eps
}

/// Mean of the last `window + 1` prices (fewer if the history is shorter).
pub fn reference_value(history: &[f64], window: u32) -> f64 {
    let take = (window as usize + 1).min(history.len());
    let tail = &history[history.len() - take..];
    tail.iter().sum::<f64>() / take as f64
}

pub fn chartist_projection(p_now: f64, reference: f64, window: u32, kappa: f64, eps: f64) -> f64 {
    p_now + kappa / window as f64 * (p_now - reference) + eps
}

pub fn chartist_expectation(history: &[f64], window: u32, kappa: f64, eps: f64) -> f64 {
    let p_now = *history.last().expect("non-empty price history");
    chartist_projection(p_now, reference_value(history, window), window, kappa, eps)
}

/// Price series with running sums so trailing means are O(1).
#[derive(Debug, Clone, PartialEq)]
pub struct PriceHistory {
    prices: Vec<f64>,
    prefix: Vec<f64>,
}

impl PriceHistory {
    pub fn new(p0: f64) -> Self {
        PriceHistory { prices: vec![p0], prefix: vec![0.0, p0] }
    }

    pub fn push(&mut self, p: f64) {
        let total = self.prefix.last().copied().unwrap_or(0.0) + p;
        self.prices.push(p);
        self.prefix.push(total);
    }

    pub fn last(&self) -> f64 {
        *self.prices.last().expect("history starts non-empty")
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.prices
    }

    /// Same quantity as [`reference_value`].
    pub fn reference_value(&self, window: u32) -> f64 {
        let n = self.prices.len();
        let take = (window as usize + 1).min(n);
        (self.prefix[n] - self.prefix[n - take]) / take as f64
    }
}

/// Expectation of `trader` for `asset`, noise included.
pub fn expectation<R: Rng + ?Sized>(
    trader: &Trader,
    asset: Asset,
    history: &PriceHistory,
    fs: &FundamentalState,
    cfg: &SimConfig,
    rng: &mut R,
) -> f64 {
    let eps = noise(cfg.sigma, rng);
    let p_now = history.last();
    match trader.character {
        Character::Fundamentalist => {
            let p0 = match asset {
                Asset::One => cfg.p1_0,
                Asset::Two => cfg.p2_0,
            };
            let p_fundamental = p0 + fs.fv[asset.index()] + trader.theta_offset;
            fundamentalist_expectation(p_now, p_fundamental, cfg.phi, eps)
        }
        Character::Chartist => {
            let reference = history.reference_value(trader.window);
            chartist_projection(p_now, reference, trader.window, cfg.kappa, eps)
        }
    }
}

/// Bidder above `p_now + tau`, asker below `p_now - tau`, holder otherwise
/// (boundaries included).
pub fn decide_status(expected: f64, p_now: f64, tau: f64) -> Status {
    if expected > p_now + tau {
        Status::Bidder
    } else if expected < p_now - tau {
        Status::Asker
    } else {
        Status::Holder
    }
}

/// Closed interval a price is drawn from, or `None` when the trader must hold.
pub fn order_price_range(
    status: Status,
    expected: f64,
    p_now: f64,
    best_ask_prev: Option<f64>,
    money: f64,
    beta_ask: f64,
) -> Option<(f64, f64)> {
    match status {
        Status::Holder => None,
        Status::Bidder => {
            let lower = best_ask_prev.unwrap_or(p_now);
            if money < lower || money <= 0.0 {
                return None;
            }
            let upper = expected.min(money);
            if upper < lower {
                // Expected price below the market's best ask: bid the
                // expectation itself.
                (expected > 0.0).then_some((expected, expected))
            } else {
                Some((lower, upper))
            }
        }
        Status::Asker => {
            let upper = expected + beta_ask * (p_now - expected);
            Some((expected.min(upper), expected.max(upper)))
        }
    }
}

/// Draws the personal bid/ask price. `None` means the trader holds.
pub fn set_order_price<R: Rng + ?Sized>(
    status: Status,
    expected: f64,
    p_now: f64,
    best_ask_prev: Option<f64>,
    money: f64,
    beta_ask: f64,
    rng: &mut R,
) -> Option<f64> {
    let (lo, hi) = order_price_range(status, expected, p_now, best_ask_prev, money, beta_ask)?;
    let price = if hi > lo { rng.random_range(lo..=hi) } else { lo };
    if price > 0.0 {
        Some(price)
    } else {
        log::debug!("non-positive {status:?} price {price:.4}, holding");
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{substream, Stream};
    use proptest::prelude::*;

    fn trader(character: Character) -> Trader {
        Trader {
            id: 0,
            character,
            money: 40_000.0,
            holdings: [200, 200],
            theta_offset: 0.0,
            window: 4,
        }
    }

    #[test]
    fn fundamentals_off_cadence_unchanged() {
        let cfg = SimConfig::default();
        let fs = FundamentalState { fv: [3.0, -2.0] };
        let mut rng = substream(1, Stream::Fundamentals);
        assert_eq!(update_fundamental_values(fs, 7, &cfg, &mut rng), fs);
        assert_eq!(update_fundamental_values(fs, 0, &cfg, &mut rng), fs);
        assert_ne!(update_fundamental_values(fs, 10, &cfg, &mut rng), fs);
    }

    #[test]
    fn fundamentals_start_at_zero() {
        assert_eq!(FundamentalState::default().fv, [0.0, 0.0]);
    }

    #[test]
    fn zero_variance_fundamentals_frozen() {
        let cfg = SimConfig { sigma_1f: 0.0, sigma_2f: 0.0, ..SimConfig::default() };
        let mut fs = FundamentalState::default();
        let mut rng = substream(1, Stream::Fundamentals);
        for t in 0..1000 {
            fs = update_fundamental_values(fs, t, &cfg, &mut rng);
        }
        assert_eq!(fs.fv, [0.0, 0.0]);
    }

    #[test]
    fn fundamentalist_cases() {
        assert_eq!(fundamentalist_expectation(505.0, 520.0, 0.0, 0.0), 505.0);
        assert_eq!(fundamentalist_expectation(500.0, 520.0, 0.5, 0.0), 510.0);
        assert_eq!(fundamentalist_expectation(500.0, 500.0, 0.5, 0.0), 500.0);
    }

    #[test]
    fn fundamentalist_fixed_point_through_trader() {
        let cfg = SimConfig { sigma: 0.0, ..SimConfig::default() };
        let t = trader(Character::Fundamentalist);
        let e = expectation(&t, Asset::One, &PriceHistory::new(500.0), &FundamentalState::default(), &cfg, &mut substream(1, Stream::Decisions));
        assert_eq!(e, 500.0);
    }

    #[test]
    fn chartist_cases() {
        assert_eq!(chartist_expectation(&[500.0; 20], 4, 2.0, 0.0), 500.0);
        let ramp: Vec<f64> = (6..=10).map(f64::from).collect();
        assert_eq!(reference_value(&ramp, 4), 8.0);
        assert_eq!(chartist_expectation(&ramp, 4, 2.0, 0.0), 11.0);
        // Short history averages what exists.
        assert_eq!(reference_value(&[1.0, 3.0], 50), 2.0);
        assert_eq!(chartist_expectation(&[1.0, 3.0], 50, 2.0, 0.0), 3.0 + 2.0 / 50.0);
    }

    #[test]
    fn running_history_matches_slice_mean() {
        let mut h = PriceHistory::new(500.0);
        for i in 0..300 {
            h.push(500.0 + (i as f64 * 0.7).sin() * 20.0);
        }
        for w in [2, 3, 17, 100, 400] {
            let direct = reference_value(h.as_slice(), w);
            assert!((h.reference_value(w) - direct).abs() < 1e-9);
        }
    }

    #[test]
    fn status_cases() {
        assert_eq!(decide_status(500.0, 500.0, 15.0), Status::Holder);
        assert_eq!(decide_status(520.0, 500.0, 15.0), Status::Bidder);
        assert_eq!(decide_status(480.0, 500.0, 15.0), Status::Asker);
        assert_eq!(decide_status(515.0, 500.0, 15.0), Status::Holder);
        assert_eq!(decide_status(485.0, 500.0, 15.0), Status::Holder);
    }

    #[test]
    fn price_ranges() {
        assert_eq!(
            order_price_range(Status::Asker, 480.0, 500.0, None, 0.0, 1.0),
            Some((480.0, 500.0))
        );
        assert_eq!(
            order_price_range(Status::Bidder, 520.0, 500.0, Some(505.0), 40_000.0, 1.0),
            Some((505.0, 520.0))
        );
        assert_eq!(order_price_range(Status::Bidder, 520.0, 500.0, Some(505.0), 0.0, 1.0), None);
        // Money caps the bid.
        assert_eq!(
            order_price_range(Status::Bidder, 520.0, 500.0, Some(505.0), 510.0, 1.0),
            Some((505.0, 510.0))
        );
        // No ask last step: lower bound is the current price.
        assert_eq!(
            order_price_range(Status::Bidder, 520.0, 500.0, None, 1e6, 1.0),
            Some((500.0, 520.0))
        );
        // Expectation under the best ask collapses to the expectation.
        assert_eq!(
            order_price_range(Status::Bidder, 516.0, 500.0, Some(530.0), 1e6, 1.0),
            Some((516.0, 516.0))
        );
        assert_eq!(order_price_range(Status::Holder, 500.0, 500.0, None, 1e6, 1.0), None);
    }

    #[test]
    fn non_positive_ask_holds() {
        let mut rng = substream(1, Stream::Decisions);
        assert_eq!(set_order_price(Status::Asker, -5.0, 0.5, None, 0.0, 0.0, &mut rng), None);
    }

    #[test]
    fn wealth_cases() {
        let t = trader(Character::Chartist);
        assert_eq!(t.wealth(500.0, 500.0), 240_000.0);
        assert_eq!(wealth(123.0, [0, 0], 500.0, 700.0), 123.0);
        let base = t.wealth(400.0, 300.0) - t.money;
        assert_eq!(t.wealth(800.0, 600.0) - t.money, 2.0 * base);
    }

    proptest! {
        #[test]
        fn status_is_a_partition(e in 0.0f64..1000.0, p in 1.0f64..1000.0, tau in 0.0f64..50.0) {
            let s = decide_status(e, p, tau);
            let hits = [e > p + tau, e < p - tau, e >= p - tau && e <= p + tau];
            prop_assert_eq!(hits.iter().filter(|&&h| h).count(), 1);
            prop_assert_eq!(s == Status::Bidder, hits[0]);
            prop_assert_eq!(s == Status::Asker, hits[1]);
        }

        #[test]
        fn fundamentalist_between_price_and_target(p in 100.0f64..900.0, target in 100.0f64..900.0, phi in 0.01f64..=1.0) {
            let e = fundamentalist_expectation(p, target, phi, 0.0);
            let (lo, hi) = (p.min(target), p.max(target));
            prop_assert!(e >= lo - 1e-9 && e <= hi + 1e-9);
        }

        #[test]
        fn chartist_follows_trend(start in 100.0f64..900.0, step in 0.01f64..10.0, len in 2usize..40, window in 2u32..30) {
            let up: Vec<f64> = (0..len).map(|i| start + step * i as f64).collect();
            let down: Vec<f64> = (0..len).map(|i| start - step * i as f64).collect();
            prop_assert!(chartist_expectation(&up, window, 2.0, 0.0) > *up.last().unwrap());
            prop_assert!(chartist_expectation(&down, window, 2.0, 0.0) < *down.last().unwrap());
        }

        #[test]
        fn drawn_price_inside_range(
            seed in any::<u64>(),
            bid in any::<bool>(),
            expected in 1.0f64..1000.0,
            p_now in 1.0f64..1000.0,
            best_ask in proptest::option::of(1.0f64..1000.0),
            money in 0.0f64..2000.0,
            beta in 0.0f64..3.0,
        ) {
            let status = if bid { Status::Bidder } else { Status::Asker };
            let mut rng = substream(seed, Stream::Decisions);
            let drawn = set_order_price(status, expected, p_now, best_ask, money, beta, &mut rng);
            let range = order_price_range(status, expected, p_now, best_ask, money, beta);
            match (drawn, range) {
                (Some(x), Some((lo, hi))) => {
                    prop_assert!(x >= lo && x <= hi && x > 0.0);
                    if bid {
                        prop_assert!(x <= money);
                    }
                }
                (Some(_), None) => prop_assert!(false, "price without a range"),
                _ => {}
            }
        }
    }
}
