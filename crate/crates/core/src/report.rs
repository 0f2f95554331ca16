//! Plot-ready CSV emitters for every run artifact. All emitters are pure
//! string builders; callers decide where the bytes go.

use std::collections::BTreeMap;
use std::fmt::Write;

use chrono::{DateTime, NaiveDate, Utc};

use crate::backtester::{ExecutionReport, NavPoint, NAV_REFERENCE};
use crate::evaluator::SharpeScore;
use crate::market_data::{SpreadHistogram, TickStream};
use crate::predictor::MassHistogram;
use crate::string::StringParams;

/// Millisecond-resolution ISO-8601, the same shape the tick loader reads.
pub fn timestamp_str(t: &DateTime<Utc>) -> String {
    t.format("%Y-%m-%dT%H:%M:%S%.3fZ").to_string()
}

/// `tau,timestamp,nav`
pub fn nav_csv(points: &[NavPoint]) -> String {
    let mut out = String::from("tau,timestamp,nav\n");
    for p in points {
        writeln!(out, "{},{},{}", p.tau, timestamp_str(&p.timestamp), p.nav).unwrap();
    }
    out
}

/// `tau,timestamp,event,side,units,price,pnl,set_id`; pnl and set_id are
/// empty when absent.
pub fn executions_csv(reports: &[ExecutionReport]) -> String {
    let mut out = String::from("tau,timestamp,event,side,units,price,pnl,set_id\n");
    for r in reports {
        let pnl = r.pnl.map(|v| v.to_string()).unwrap_or_default();
        let set_id = r.set_id.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.tau,
            timestamp_str(&r.timestamp),
            r.event.as_str(),
            r.side,
            r.units,
            r.price,
            pnl,
            set_id
        )
        .unwrap();
    }
    out
}

/// `set_id,l_s,m,Q,func,phase,excess_mean,sigma,ratio`; an undefined ratio
/// leaves the field empty. `sets` may be empty (benchmark runs score no
/// parameter sets) or parallel to `scores`.
pub fn scores_csv(scores: &[SharpeScore], sets: &[StringParams]) -> String {
    let mut out = String::from("set_id,l_s,m,Q,func,phase,excess_mean,sigma,ratio\n");
    for score in scores {
        let params = sets.get(score.set_id);
        let (l_s, m, q, func, phase) = match params {
            Some(p) => (
                p.window_len.to_string(),
                p.frequency.to_string(),
                p.exponent.to_string(),
                p.func.to_string(),
                p.phase.to_string(),
            ),
            None => Default::default(),
        };
        let ratio = score.ratio.map(|r| r.to_string()).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            score.set_id, l_s, m, q, func, phase, score.excess_mean, score.sigma, ratio
        )
        .unwrap();
    }
    out
}

/// `bin_lower,mass` over [0, 1].
pub fn momentum_histogram_csv(histogram: &MassHistogram) -> String {
    let mut out = String::from("bin_lower,mass\n");
    for (lower, mass) in histogram.bins() {
        writeln!(out, "{lower},{mass}").unwrap();
    }
    out
}

/// `bin_lower,count`
pub fn spread_histogram_csv(histogram: &SpreadHistogram) -> String {
    let mut out = String::from("bin_lower,count\n");
    for (lower, count) in histogram.bins() {
        writeln!(out, "{lower},{count}").unwrap();
    }
    out
}

/// `date,count`
pub fn trades_per_day_csv(days: &BTreeMap<NaiveDate, u64>) -> String {
    let mut out = String::from("date,count\n");
    for (date, count) in days {
        writeln!(out, "{date},{count}").unwrap();
    }
    out
}

/// `interval_bin,h_S_plus,h_S_minus` over the union of both classes' bins;
/// a class without trades at an interval reports 0.
pub fn spin_histogram_csv(plus: &BTreeMap<u64, f64>, minus: &BTreeMap<u64, f64>) -> String {
    let mut out = String::from("interval_bin,h_S_plus,h_S_minus\n");
    let intervals: std::collections::BTreeSet<u64> =
        plus.keys().chain(minus.keys()).copied().collect();
    for interval in intervals {
        let p = plus.get(&interval).copied().unwrap_or(0.0);
        let m = minus.get(&interval).copied().unwrap_or(0.0);
        writeln!(out, "{interval},{p},{m}").unwrap();
    }
    out
}

/// `timestamp,bid,ask` with six fractional price digits; the loader reads
/// this format back, header included.
pub fn ticks_csv(stream: &TickStream) -> String {
    let mut out = String::from("timestamp,bid,ask\n");
    for q in stream.quotes() {
        writeln!(
            out,
            "{},{:.6},{:.6}",
            timestamp_str(&q.timestamp),
            q.bid,
            q.ask
        )
        .unwrap();
    }
    out
}

/// One sweep result row.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: String,
    pub final_nav: f64,
    pub nav_pct: f64,
    /// Mean NAV deviation from the reference over the series.
    pub mean: f64,
    /// Population standard deviation of the NAV series.
    pub sigma: f64,
}

/// `axis_value,final_nav,nav_pct,mean,sigma`
pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("axis_value,final_nav,nav_pct,mean,sigma\n");
    for r in rows {
        writeln!(
            out,
            "{},{},{},{},{}",
            r.axis_value, r.final_nav, r.nav_pct, r.mean, r.sigma
        )
        .unwrap();
    }
    out
}

/// Mean deviation from the reference and population standard deviation of a
/// NAV series; the comparison-table summary statistics.
pub fn nav_moments(points: &[NavPoint]) -> (f64, f64) {
    if points.is_empty() {
        return (0.0, 0.0);
    }
    let n = points.len() as f64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for p in points {
        let d = p.nav - NAV_REFERENCE;
        sum += d;
        sum_sq += d * d;
    }
    let mean = sum / n;
    let var = (sum_sq / n - mean * mean).max(0.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backtester::{ExecutionEvent, Side};
    use crate::market_data::{generate_synthetic, load_ticks, SyntheticModel, SyntheticParams};
    use chrono::TimeZone;

    fn t0() -> DateTime<Utc> {
        Utc.with_ymd_and_hms(2020, 1, 1, 0, 0, 0).unwrap()
    }

    #[test]
    fn nav_rows_carry_tau_timestamp_value() {
        let points = vec![NavPoint {
            tau: 3,
            timestamp: t0(),
            nav: 99999.8,
        }];
        let csv = nav_csv(&points);
        assert_eq!(
            csv,
            "tau,timestamp,nav\n3,2020-01-01T00:00:00.000Z,99999.8\n"
        );
    }

    #[test]
    fn execution_rows_blank_missing_fields() {
        let reports = vec![
            ExecutionReport {
                tau: 1,
                timestamp: t0(),
                event: ExecutionEvent::Open,
                side: Side::Long,
                units: 1000.0,
                price: 1.3001,
                pnl: None,
                set_id: Some(4),
                position_id: Some(0),
            },
            ExecutionReport {
                tau: 2,
                timestamp: t0(),
                event: ExecutionEvent::Close,
                side: Side::Long,
                units: 1000.0,
                price: 1.2999,
                pnl: Some(-0.2),
                set_id: None,
                position_id: Some(0),
            },
        ];
        let csv = executions_csv(&reports);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "1,2020-01-01T00:00:00.000Z,open,long,1000,1.3001,,4");
        assert_eq!(lines[2], "2,2020-01-01T00:00:00.000Z,close,long,1000,1.2999,-0.2,");
    }

    #[test]
    fn score_rows_leave_undefined_ratios_empty() {
        use crate::string::RegularFunction;
        let sets = vec![StringParams {
            window_len: 900,
            frequency: 2,
            exponent: 8.0,
            func: RegularFunction::Cos,
            phase: 3.14,
        }];
        let scores = vec![
            SharpeScore {
                set_id: 0,
                excess_mean: 0.45,
                sigma: 0.0,
                ratio: None,
                penalty: 0.1,
            },
        ];
        let csv = scores_csv(&scores, &sets);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "0,900,2,8,cos,3.14,0.45,0,"
        );
    }

    #[test]
    fn spin_rows_union_the_interval_bins() {
        let plus: BTreeMap<u64, f64> = [(10, 1.0)].into();
        let minus: BTreeMap<u64, f64> = [(12, 1.0), (10, 0.5)].into();
        let csv = spin_histogram_csv(&plus, &minus);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "10,1,0.5");
        assert_eq!(lines[2], "12,0,1");
    }

    #[test]
    fn generated_ticks_round_trip_through_the_loader() {
        let stream = generate_synthetic(
            5,
            20,
            SyntheticModel::RandomWalk,
            &SyntheticParams::default(),
        )
        .unwrap();
        let csv = ticks_csv(&stream);
        let path = std::env::temp_dir().join("strmom_roundtrip_test.csv");
        std::fs::write(&path, &csv).unwrap();
        let loaded = load_ticks(&path).unwrap();
        std::fs::remove_file(&path).ok();
        assert_eq!(loaded.len(), stream.len());
        for (a, b) in loaded.quotes().iter().zip(stream.quotes()) {
            assert_eq!(a.timestamp, b.timestamp);
            // Prices were rounded to six digits on the way out.
            assert!((a.bid - b.bid).abs() < 5e-7);
            assert!((a.ask - b.ask).abs() < 5e-7);
        }
    }

    #[test]
    fn nav_moments_match_hand_values() {
        let points: Vec<NavPoint> = [100100.0, 100300.0]
            .iter()
            .enumerate()
            .map(|(i, &nav)| NavPoint {
                tau: i as u64,
                timestamp: t0(),
                nav,
            })
            .collect();
        let (mean, sigma) = nav_moments(&points);
        assert!((mean - 200.0).abs() < 1e-9);
        assert!((sigma - 100.0).abs() < 1e-9);
        assert_eq!(nav_moments(&[]), (0.0, 0.0));
    }

    #[test]
    fn sweep_rows_print_in_order() {
        let rows = vec![SweepRow {
            axis_value: "0.0002".into(),
            final_nav: 99999.8,
            nav_pct: -0.0002,
            mean: -0.1,
            sigma: 0.1,
        }];
        let csv = sweep_csv(&rows);
        assert_eq!(
            csv.lines().nth(1).unwrap(),
            "0.0002,99999.8,-0.0002,-0.1,0.1"
        );
    }
}
