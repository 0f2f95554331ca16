//! Scores parameter sets from their closed trades.
//!
//! The score uses per-trade excess returns built from a linear per-tick
//! penalty: a trade held T ticks contributes penalty * T(T+1)/2. The raw
//! per-tick PnL terms cancel between the return and its reference by
//! construction, so the score depends on the ledger only through the trade
//! count and the multiset of holding times.

use crate::error::{Error, Result};

/// Closed-trade view an evaluator consumes: one entry per closed trade,
/// carrying the number of accepted per-tick results over its lifetime.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ClosedTradeLedgerView {
    accepted_ticks: Vec<usize>,
}

impl ClosedTradeLedgerView {
    /// Builds the view from per-trade sequences of per-tick PnL increments.
    /// Only the sequence lengths survive; the increment values cancel out of
    /// every score computed from the view.
    pub fn from_increment_series(series: &[Vec<f64>]) -> Result<Self> {
        let mut accepted_ticks = Vec::with_capacity(series.len());
        for (i, trade) in series.iter().enumerate() {
            if trade.is_empty() {
                return Err(Error::InvalidParams(format!("trade {i} has no tick results")));
            }
            accepted_ticks.push(trade.len());
        }
        Ok(Self { accepted_ticks })
    }

    /// Builds the view directly from holding times in ticks.
    pub fn from_durations(durations: impl IntoIterator<Item = usize>) -> Result<Self> {
        let accepted_ticks: Vec<usize> = durations.into_iter().collect();
        if accepted_ticks.iter().any(|&t| t == 0) {
            return Err(Error::InvalidParams("trade durations must be positive".into()));
        }
        Ok(Self { accepted_ticks })
    }

    pub fn n_trades(&self) -> usize {
        self.accepted_ticks.len()
    }

    pub fn durations(&self) -> &[usize] {
        &self.accepted_ticks
    }
}

/// Score of one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharpeScore {
    pub set_id: usize,
    /// Mean excess return over the penalty reference.
    pub excess_mean: f64,
    /// Root mean square of the excess returns (or the substituted return
    /// volatility).
    pub sigma: f64,
    /// `excess_mean / sigma`; `None` when sigma is zero.
    pub ratio: Option<f64>,
    pub penalty: f64,
}

fn excess_returns(ledger: &ClosedTradeLedgerView, penalty: f64) -> Result<Vec<f64>> {
    if !(penalty >= 0.0) || !penalty.is_finite() {
        return Err(Error::InvalidPenalty(penalty));
    }
    Ok(ledger
        .durations()
        .iter()
        .map(|&t| {
            let t = t as f64;
            penalty * t * (t + 1.0) * 0.5
        })
        .collect())
}

/// Sharpe-style score of a ledger: mean excess over RMS excess, with the
/// per-trade excess penalty * T(T+1)/2. An empty ledger (or zero penalty)
/// has zero sigma and an undefined ratio.
pub fn sharpe_ratio(ledger: &ClosedTradeLedgerView, set_id: usize, penalty: f64) -> Result<SharpeScore> {
    let excess = excess_returns(ledger, penalty)?;
    let n = excess.len() as f64;
    let (excess_mean, sigma) = if excess.is_empty() {
        (0.0, 0.0)
    } else {
        let mean = excess.iter().sum::<f64>() / n;
        let ms = excess.iter().map(|e| e * e).sum::<f64>() / n;
        (mean, ms.sqrt())
    };
    let ratio = if sigma > 0.0 { Some(excess_mean / sigma) } else { None };
    Ok(SharpeScore {
        set_id,
        excess_mean,
        sigma,
        ratio,
        penalty,
    })
}

/// Same numerator as [`sharpe_ratio`] with the denominator replaced by an
/// externally computed return volatility.
pub fn volatility_sharpe(
    ledger: &ClosedTradeLedgerView,
    set_id: usize,
    penalty: f64,
    sigma_r: f64,
) -> Result<SharpeScore> {
    if !(sigma_r >= 0.0) || !sigma_r.is_finite() {
        return Err(Error::InvalidVolatility(sigma_r));
    }
    let excess = excess_returns(ledger, penalty)?;
    let excess_mean = if excess.is_empty() {
        0.0
    } else {
        excess.iter().sum::<f64>() / excess.len() as f64
    };
    let ratio = if sigma_r > 0.0 { Some(excess_mean / sigma_r) } else { None };
    Ok(SharpeScore {
        set_id,
        excess_mean,
        sigma: sigma_r,
        ratio,
        penalty,
    })
}

/// Population skewness (third standardized central moment).
pub fn skewness(values: &[f64]) -> Result<f64> {
    if values.len() < 3 {
        return Err(Error::InsufficientData {
            needed: 3,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut m2 = 0.0;
    let mut m3 = 0.0;
    for &v in values {
        let d = v - mean;
        m2 += d * d;
        m3 += d * d * d;
    }
    m2 /= n;
    m3 /= n;
    if m2 <= 0.0 {
        return Err(Error::ZeroVariance);
    }
    Ok(m3 / m2.powf(1.5))
}

/// Index of the best defined ratio; ties go to the lower set id.
pub fn select_optimal(scores: &[SharpeScore]) -> Result<usize> {
    let mut best: Option<(f64, usize)> = None;
    for s in scores {
        if let Some(r) = s.ratio {
            let better = match best {
                None => true,
                Some((br, bid)) => r > br || (r == br && s.set_id < bid),
            };
            if better {
                best = Some((r, s.set_id));
            }
        }
    }
    best.map(|(_, id)| id).ok_or(Error::NoDefinedScore)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Literal two-sum route: per-trade return minus reference computed from
    /// actual per-tick values. Used to confirm the closed form the library
    /// relies on.
    fn literal_score(trades: &[Vec<f64>], penalty: f64) -> (f64, f64, f64) {
        let n = trades.len() as f64;
        let excess: Vec<f64> = trades
            .iter()
            .map(|p| {
                let ret: f64 = p.iter().sum();
                let reference: f64 = p
                    .iter()
                    .enumerate()
                    .map(|(j, v)| v - (j as f64 + 1.0) * penalty)
                    .sum();
                ret - reference
            })
            .collect();
        let mean = excess.iter().sum::<f64>() / n;
        let sigma = (excess.iter().map(|e| e * e).sum::<f64>() / n).sqrt();
        (mean, sigma, mean / sigma)
    }

    #[test]
    fn single_trade_score_is_unity() {
        let ledger = ClosedTradeLedgerView::from_durations([2]).unwrap();
        let score = sharpe_ratio(&ledger, 0, 0.1).unwrap();
        assert!((score.excess_mean - 0.3).abs() < 1e-12);
        assert!((score.sigma - 0.3).abs() < 1e-12);
        assert!((score.ratio.unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn two_trade_score_matches_hand_value() {
        let ledger = ClosedTradeLedgerView::from_durations([2, 3]).unwrap();
        let score = sharpe_ratio(&ledger, 0, 0.1).unwrap();
        assert!((score.excess_mean - 0.45).abs() < 1e-12);
        assert!((score.ratio.unwrap() - 0.9486832980505138).abs() < 1e-9);
    }

    #[test]
    fn score_agrees_with_literal_two_sum_route() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let n = rng.gen_range(1..20);
            let trades: Vec<Vec<f64>> = (0..n)
                .map(|_| {
                    let t = rng.gen_range(1..30);
                    (0..t).map(|_| rng.gen_range(-0.01..0.01)).collect()
                })
                .collect();
            let penalty = rng.gen_range(1e-6..1e-2);
            let ledger = ClosedTradeLedgerView::from_increment_series(&trades).unwrap();
            let score = sharpe_ratio(&ledger, 0, penalty).unwrap();
            let (mean, sigma, ratio) = literal_score(&trades, penalty);
            assert!((score.excess_mean - mean).abs() < 1e-9);
            assert!((score.sigma - sigma).abs() < 1e-9);
            assert!((score.ratio.unwrap() - ratio).abs() < 1e-9);
        }
    }

    #[test]
    fn score_ignores_increment_values() {
        let a = ClosedTradeLedgerView::from_increment_series(&[vec![0.5, -0.2], vec![1.0, 2.0, 3.0]])
            .unwrap();
        let b = ClosedTradeLedgerView::from_increment_series(&[vec![-9.0, 9.0], vec![0.0, 0.0, 0.0]])
            .unwrap();
        assert_eq!(sharpe_ratio(&a, 1, 0.01).unwrap(), sharpe_ratio(&b, 1, 0.01).unwrap());
    }

    #[test]
    fn ratio_is_invariant_under_penalty_rescaling() {
        let ledger = ClosedTradeLedgerView::from_durations([2, 5, 9, 3, 7]).unwrap();
        let r1 = sharpe_ratio(&ledger, 0, 1e-5).unwrap().ratio.unwrap();
        let r2 = sharpe_ratio(&ledger, 0, 1e-2).unwrap().ratio.unwrap();
        let r3 = sharpe_ratio(&ledger, 0, 3.7).unwrap().ratio.unwrap();
        assert!((r1 - r2).abs() < 1e-12);
        assert!((r1 - r3).abs() < 1e-12);
    }

    #[test]
    fn zero_penalty_or_empty_ledger_is_undefined() {
        let ledger = ClosedTradeLedgerView::from_durations([2, 3]).unwrap();
        let score = sharpe_ratio(&ledger, 0, 0.0).unwrap();
        assert_eq!(score.excess_mean, 0.0);
        assert_eq!(score.sigma, 0.0);
        assert_eq!(score.ratio, None);

        let empty = ClosedTradeLedgerView::default();
        let score = sharpe_ratio(&empty, 0, 0.1).unwrap();
        assert_eq!(score.ratio, None);

        assert!(matches!(
            sharpe_ratio(&ledger, 0, -0.1),
            Err(Error::InvalidPenalty(_))
        ));
    }

    #[test]
    fn ledger_view_rejects_empty_trades() {
        assert!(ClosedTradeLedgerView::from_increment_series(&[vec![]]).is_err());
        assert!(ClosedTradeLedgerView::from_durations([0]).is_err());
    }

    #[test]
    fn volatility_denominator_replaces_sigma() {
        let ledger = ClosedTradeLedgerView::from_durations([2, 3]).unwrap();
        let score = volatility_sharpe(&ledger, 0, 0.1, 0.9).unwrap();
        assert!((score.excess_mean - 0.45).abs() < 1e-12);
        assert!((score.ratio.unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(volatility_sharpe(&ledger, 0, 0.1, 0.0).unwrap().ratio, None);
        assert!(matches!(
            volatility_sharpe(&ledger, 0, 0.1, -1.0),
            Err(Error::InvalidVolatility(_))
        ));
        // Consistency with the standard denominator when sigma_r equals it.
        let standard = sharpe_ratio(&ledger, 0, 0.1).unwrap();
        let matched = volatility_sharpe(&ledger, 0, 0.1, standard.sigma).unwrap();
        assert!((matched.ratio.unwrap() - standard.ratio.unwrap()).abs() < 1e-12);
    }

    #[test]
    fn skewness_matches_hand_values() {
        assert!(skewness(&[0.3, 0.4, 0.5]).unwrap().abs() < 1e-12);
        let g = skewness(&[0.0, 0.0, 1.0]).unwrap();
        assert!((g - 0.7071067811865476).abs() < 1e-12);
    }

    #[test]
    fn skewness_rejects_degenerate_input() {
        assert!(matches!(
            skewness(&[1.0, 2.0]),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
        assert!(matches!(skewness(&[2.0; 5]), Err(Error::ZeroVariance)));
    }

    fn score_with(set_id: usize, ratio: Option<f64>) -> SharpeScore {
        SharpeScore {
            set_id,
            excess_mean: 0.0,
            sigma: 1.0,
            ratio,
            penalty: 0.1,
        }
    }

    #[test]
    fn selection_takes_best_defined_ratio() {
        let scores = vec![
            score_with(0, Some(0.2)),
            score_with(1, Some(0.9)),
            score_with(2, Some(0.5)),
        ];
        assert_eq!(select_optimal(&scores).unwrap(), 1);
    }

    #[test]
    fn selection_breaks_ties_toward_lower_id() {
        let scores = vec![score_with(0, Some(0.7)), score_with(1, Some(0.7))];
        assert_eq!(select_optimal(&scores).unwrap(), 0);
        let scores = vec![score_with(1, Some(0.7)), score_with(0, Some(0.7))];
        assert_eq!(select_optimal(&scores).unwrap(), 0);
    }

    #[test]
    fn selection_skips_undefined_ratios() {
        let scores = vec![
            score_with(0, None),
            score_with(1, Some(0.1)),
            score_with(2, None),
        ];
        assert_eq!(select_optimal(&scores).unwrap(), 1);
        assert!(matches!(
            select_optimal(&[score_with(0, None)]),
            Err(Error::NoDefinedScore)
        ));
        assert!(matches!(select_optimal(&[]), Err(Error::NoDefinedScore)));
    }

    #[test]
    fn selection_is_stable_under_monotone_ratio_transforms() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let scores: Vec<SharpeScore> = (0..10)
                .map(|i| score_with(i, Some(rng.gen_range(-1.0..1.0))))
                .collect();
            let base = select_optimal(&scores).unwrap();
            let shifted: Vec<SharpeScore> = scores
                .iter()
                .map(|s| score_with(s.set_id, s.ratio.map(|r| 2.0 * r + 5.0)))
                .collect();
            assert_eq!(select_optimal(&shifted).unwrap(), base);
        }
    }
}
