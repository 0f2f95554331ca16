//! String-momentum mathematics over sliding price windows.
//!
//! A window of `window_len + 1` prices is standardized into [0, 1] and
//! compared against a reference curve (the "regular function"); the momentum
//! is the power mean of the pointwise deviations. Small momentum means the
//! window resembles the reference shape at that frequency.

use std::collections::VecDeque;
use std::fmt;

use crate::error::{Error, Result};

/// Radicands slightly below zero are treated as zero; anything further
/// negative is a hard numeric error rather than silent clamping.
pub const RADICAND_TOLERANCE: f64 = 1e-12;

/// Reference curve families. The hyperbolic variants are normalized by their
/// largest argument magnitude over the window so values stay in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularFunction {
    Cos,
    Sin,
    SinhNorm,
    CoshNorm,
}

impl fmt::Display for RegularFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            RegularFunction::Cos => "cos",
            RegularFunction::Sin => "sin",
            RegularFunction::SinhNorm => "sinh_norm",
            RegularFunction::CoshNorm => "cosh_norm",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for RegularFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cos" => Ok(RegularFunction::Cos),
            "sin" => Ok(RegularFunction::Sin),
            "sinh_norm" => Ok(RegularFunction::SinhNorm),
            "cosh_norm" => Ok(RegularFunction::CoshNorm),
            other => Err(Error::InvalidParams(format!("unknown function {other:?}"))),
        }
    }
}

/// One momentum parameter combination.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct StringParams {
    /// Window length l_s; the window holds `window_len + 1` prices.
    pub window_len: usize,
    /// Angular frequency multiplier of the reference curve.
    pub frequency: u32,
    /// Power-mean exponent; any positive real, integer grids get a fast path.
    pub exponent: f64,
    pub func: RegularFunction,
    /// Phase offset in radians.
    pub phase: f64,
}

impl StringParams {
    pub fn validate(&self) -> Result<()> {
        if self.window_len == 0 {
            return Err(Error::InvalidParams("window_len must be >= 1".into()));
        }
        if !(self.exponent > 0.0) || !self.exponent.is_finite() {
            return Err(Error::InvalidParams(format!(
                "exponent {} must be a positive real",
                self.exponent
            )));
        }
        if !self.phase.is_finite() {
            return Err(Error::InvalidParams(format!("phase {} must be finite", self.phase)));
        }
        Ok(())
    }

    fn integer_exponent(&self) -> Option<i32> {
        if self.exponent.fract() == 0.0 && self.exponent >= 1.0 && self.exponent <= 512.0 {
            Some(self.exponent as i32)
        } else {
            None
        }
    }
}

/// A price window mapped into [0, 1] by its own range.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardizedWindow {
    pub values: Vec<f64>,
    pub min: f64,
    pub max: f64,
    /// True when the window had zero range; values are then all 0.5 and any
    /// momentum derived from them is unusable for prediction.
    pub degenerate: bool,
}

/// Maps each price to (p - min) / (max - min). A zero-range window maps to
/// all 0.5 and is flagged rather than dividing by zero.
pub fn standardize_window(prices: &[f64]) -> Result<StandardizedWindow> {
    if prices.is_empty() {
        return Err(Error::WindowLength { expected: 1, got: 0 });
    }
    for (h, &p) in prices.iter().enumerate() {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::NonPositivePrice { h, value: p });
        }
    }
    let mut min = prices[0];
    let mut max = prices[0];
    for &p in &prices[1..] {
        if p < min {
            min = p;
        }
        if p > max {
            max = p;
        }
    }
    if max == min {
        return Ok(StandardizedWindow {
            values: vec![0.5; prices.len()],
            min,
            max,
            degenerate: true,
        });
    }
    let inv = 1.0 / (max - min);
    let values = prices.iter().map(|&p| (p - min) * inv).collect();
    Ok(StandardizedWindow {
        values,
        min,
        max,
        degenerate: false,
    })
}

fn phase_arg(params: &StringParams, h: usize) -> f64 {
    2.0 * std::f64::consts::PI * params.frequency as f64 * h as f64
        / (params.window_len as f64 + 1.0)
        + params.phase
}

/// Largest |argument| over the window; the argument is linear in h, so the
/// extreme sits at one of the two ends.
fn max_abs_phase_arg(params: &StringParams) -> f64 {
    phase_arg(params, 0).abs().max(phase_arg(params, params.window_len).abs())
}

/// Reference curve value at offset `h` of the window.
pub fn regular_function(params: &StringParams, h: usize) -> Result<f64> {
    params.validate()?;
    if h > params.window_len {
        return Err(Error::OffsetOutOfRange {
            h,
            window_len: params.window_len,
        });
    }
    let arg = phase_arg(params, h);
    let v = match params.func {
        RegularFunction::Cos => 0.5 * (1.0 + arg.cos()),
        RegularFunction::Sin => 0.5 * (1.0 + arg.sin()),
        RegularFunction::SinhNorm => {
            let denom = max_abs_phase_arg(params).sinh();
            if denom == 0.0 {
                // Argument is identically zero across the window.
                0.5
            } else {
                0.5 * (1.0 + arg.sinh() / denom)
            }
        }
        RegularFunction::CoshNorm => 0.5 * (1.0 + arg.cosh() / max_abs_phase_arg(params).cosh()),
    };
    Ok(v)
}

/// Precomputed reference curve over a full window, h = 0..=window_len.
pub fn regular_function_table(params: &StringParams) -> Result<Vec<f64>> {
    params.validate()?;
    (0..=params.window_len).map(|h| regular_function(params, h)).collect()
}

/// Momentum of one parameter set over one window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentumRecord {
    /// Tick index of the window start.
    pub tau: u64,
    pub params: StringParams,
    /// Power-mean deviation from the reference curve, in [0, 1].
    pub value: f64,
    /// Propagated from the standardized window; degenerate momenta carry no
    /// usable information.
    pub degenerate: bool,
}

/// Sums `|a|^exponent` over the buffer with eight independent accumulator
/// lanes. The lanes break the floating-point add dependency chain (and let
/// the compiler vectorize); every caller uses this helper so momenta computed
/// through different code paths agree bit for bit.
fn powered_sum(devs: &[f64], exponent: f64, int_exp: Option<i32>) -> f64 {
    const LANES: usize = 8;
    let mut acc = [0.0f64; LANES];
    let chunks = devs.chunks_exact(LANES);
    let remainder = chunks.remainder();
    macro_rules! accumulate {
        ($pow:expr) => {{
            for c in chunks {
                for l in 0..LANES {
                    acc[l] += $pow(c[l]);
                }
            }
            let mut tail = 0.0;
            for &a in remainder {
                tail += $pow(a);
            }
            tail
        }};
    }
    let tail = match int_exp {
        Some(1) => accumulate!(|a: f64| a),
        Some(2) => accumulate!(|a: f64| a * a),
        Some(4) => accumulate!(|a: f64| {
            let a2 = a * a;
            a2 * a2
        }),
        Some(8) => accumulate!(|a: f64| {
            let a2 = a * a;
            let a4 = a2 * a2;
            a4 * a4
        }),
        Some(16) => accumulate!(|a: f64| {
            let a2 = a * a;
            let a4 = a2 * a2;
            let a8 = a4 * a4;
            a8 * a8
        }),
        Some(24) => accumulate!(|a: f64| {
            let a2 = a * a;
            let a4 = a2 * a2;
            let a8 = a4 * a4;
            a8 * a8 * a8
        }),
        Some(32) => accumulate!(|a: f64| {
            let a2 = a * a;
            let a4 = a2 * a2;
            let a8 = a4 * a4;
            let a16 = a8 * a8;
            a16 * a16
        }),
        Some(e) => accumulate!(|a: f64| a.powi(e)),
        None => accumulate!(|a: f64| a.powf(exponent)),
    };
    let mut folded = 0.0;
    for lane in acc {
        folded += lane;
    }
    folded + tail
}

#[inline]
fn power_mean_root(mean: f64, exponent: f64, int_exp: Option<i32>) -> f64 {
    match int_exp {
        Some(1) => mean,
        Some(2) => mean.sqrt(),
        _ => mean.powf(1.0 / exponent),
    }
}

/// Computes the momentum of `prices` (length `window_len + 1`) against the
/// reference curve described by `params`. `tau` labels the window start.
pub fn string_momentum(prices: &[f64], params: &StringParams, tau: u64) -> Result<MomentumRecord> {
    params.validate()?;
    if prices.len() != params.window_len + 1 {
        return Err(Error::WindowLength {
            expected: params.window_len + 1,
            got: prices.len(),
        });
    }
    let window = standardize_window(prices)?;
    let table = regular_function_table(params)?;
    let int_exp = params.integer_exponent();
    let devs: Vec<f64> = window
        .values
        .iter()
        .zip(&table)
        .map(|(v, f)| (v - f).abs())
        .collect();
    let sum = powered_sum(&devs, params.exponent, int_exp);
    let mean = sum / (params.window_len as f64 + 1.0);
    Ok(MomentumRecord {
        tau,
        params: *params,
        value: power_mean_root(mean, params.exponent, int_exp),
        degenerate: window.degenerate,
    })
}

/// Volatility proxy over the first half of a window: sqrt of the difference
/// between the sum of squared relative price changes and the squared sum.
/// The sums run over h = 1..=window_len/2 without normalization, so trending
/// windows can push the radicand negative; beyond [`RADICAND_TOLERANCE`]
/// that is reported as an error.
pub fn return_volatility(prices: &[f64], window_len: usize) -> Result<f64> {
    if window_len == 0 || window_len % 2 != 0 {
        return Err(Error::InvalidParams(format!(
            "window_len {} must be even and positive",
            window_len
        )));
    }
    let half = window_len / 2;
    if prices.len() < half + 1 {
        return Err(Error::InsufficientData {
            needed: half + 1,
            got: prices.len(),
        });
    }
    let mut r1 = 0.0;
    let mut r2 = 0.0;
    for h in 1..=half {
        if prices[h] == 0.0 {
            return Err(Error::NonPositivePrice { h, value: 0.0 });
        }
        let x = (prices[h] - prices[h - 1]) / prices[h];
        r1 += x;
        r2 += x * x;
    }
    let radicand = r2 - r1 * r1;
    if radicand < -RADICAND_TOLERANCE {
        return Err(Error::NegativeRadicand { radicand });
    }
    Ok(radicand.max(0.0).sqrt())
}

#[inline]
fn signed_pow(u: f64, q: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.signum() * u.abs().powf(q)
    }
}

/// Two-endpoint coordinate maps over a window. `P(h)` is the sign-preserving
/// q-th power of the product of relative displacements from the two window
/// endpoints (zero at both ends by construction); `X(h)` is the running mean
/// of `P` up to `h`.
pub fn two_endpoint_maps(prices: &[f64], q: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if prices.len() < 2 {
        return Err(Error::WindowLength {
            expected: 2,
            got: prices.len(),
        });
    }
    if !(q > 0.0) || !q.is_finite() {
        return Err(Error::InvalidParams(format!("map exponent {} must be positive", q)));
    }
    for (h, &p) in prices.iter().enumerate() {
        if !(p > 0.0) || !p.is_finite() {
            return Err(Error::NonPositivePrice { h, value: p });
        }
    }
    let first = prices[0];
    let last = prices[prices.len() - 1];
    let mut p_map = Vec::with_capacity(prices.len());
    let mut x_map = Vec::with_capacity(prices.len());
    let mut cum = 0.0;
    for (h, &p) in prices.iter().enumerate() {
        let u = (p / first - 1.0) * (p / last - 1.0);
        let v = signed_pow(u, q);
        p_map.push(v);
        cum += v;
        x_map.push(cum / (h as f64 + 1.0));
    }
    Ok((p_map, x_map))
}

// ---------------------------------------------------------------------------
// Streaming evaluation of many parameter sets over one price series.
// ---------------------------------------------------------------------------

/// Sliding window min/max tracker (monotonic deques, amortized O(1) per push).
struct WindowExtrema {
    window: usize,
    min_q: VecDeque<(usize, f64)>,
    max_q: VecDeque<(usize, f64)>,
}

impl WindowExtrema {
    fn new(window: usize) -> Self {
        Self {
            window,
            min_q: VecDeque::new(),
            max_q: VecDeque::new(),
        }
    }

    fn push(&mut self, i: usize, v: f64) {
        while self.min_q.back().is_some_and(|&(_, b)| b >= v) {
            self.min_q.pop_back();
        }
        self.min_q.push_back((i, v));
        while self.max_q.back().is_some_and(|&(_, b)| b <= v) {
            self.max_q.pop_back();
        }
        self.max_q.push_back((i, v));
        let cutoff = i.saturating_sub(self.window - 1);
        while self.min_q.front().is_some_and(|&(j, _)| j < cutoff) {
            self.min_q.pop_front();
        }
        while self.max_q.front().is_some_and(|&(j, _)| j < cutoff) {
            self.max_q.pop_front();
        }
    }

    fn current(&self) -> (f64, f64) {
        (self.min_q.front().unwrap().1, self.max_q.front().unwrap().1)
    }
}

struct BankMember {
    set_index: usize,
    params: StringParams,
    int_exp: Option<i32>,
}

/// Sets sharing (window_len, func, frequency, phase) differ only in exponent,
/// so they share the standardized deviations; each member applies its own
/// power to the shared magnitudes.
struct BankGroup {
    window_len: usize,
    table: Vec<f64>,
    members: Vec<BankMember>,
}

/// Evaluates a family of parameter sets over a full price series, reusing
/// window scans across sets that share shape parameters. Records are emitted
/// per window in tick order, members within a group in set order.
pub struct MomentumBank {
    groups: Vec<BankGroup>,
    n_sets: usize,
}

impl MomentumBank {
    pub fn new(sets: &[StringParams]) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidParams("at least one parameter set required".into()));
        }
        let mut groups: Vec<BankGroup> = Vec::new();
        for (set_index, params) in sets.iter().enumerate() {
            params.validate()?;
            let key = (params.window_len, params.func, params.frequency, params.phase);
            let group = groups.iter_mut().find(|g| {
                let m = &g.members[0].params;
                (m.window_len, m.func, m.frequency, m.phase) == key
            });
            let member = BankMember {
                set_index,
                params: *params,
                int_exp: params.integer_exponent(),
            };
            match group {
                Some(g) => g.members.push(member),
                None => groups.push(BankGroup {
                    window_len: params.window_len,
                    table: regular_function_table(params)?,
                    members: vec![member],
                }),
            }
        }
        Ok(Self {
            groups,
            n_sets: sets.len(),
        })
    }

    pub fn n_sets(&self) -> usize {
        self.n_sets
    }

    /// Runs every set over `prices`, invoking `on_record(set_index, record)`
    /// for each complete window. Within one set, records arrive in ascending
    /// tau order. A callback error aborts the run.
    pub fn run(
        &self,
        prices: &[f64],
        mut on_record: impl FnMut(usize, MomentumRecord) -> Result<()>,
    ) -> Result<()> {
        for (h, &p) in prices.iter().enumerate() {
            if !(p > 0.0) || !p.is_finite() {
                return Err(Error::NonPositivePrice { h, value: p });
            }
        }
        let mut deviations: Vec<f64> = Vec::new();
        for group in &self.groups {
            let span = group.window_len + 1;
            if prices.len() < span {
                continue;
            }
            deviations.clear();
            deviations.resize(span, 0.0);
            let mut extrema = WindowExtrema::new(span);
            for (i, &p) in prices.iter().enumerate().take(span - 1) {
                extrema.push(i, p);
            }
            for t in (span - 1)..prices.len() {
                extrema.push(t, prices[t]);
                let (mn, mx) = extrema.current();
                let tau = (t + 1 - span) as u64;
                let window = &prices[t + 1 - span..=t];
                let degenerate = mx == mn;
                if degenerate {
                    for (d, &f) in deviations.iter_mut().zip(&group.table) {
                        *d = (0.5 - f).abs();
                    }
                } else {
                    let inv = 1.0 / (mx - mn);
                    for ((d, &p), &f) in deviations.iter_mut().zip(window).zip(&group.table) {
                        *d = ((p - mn) * inv - f).abs();
                    }
                }
                for member in &group.members {
                    let sum = powered_sum(&deviations, member.params.exponent, member.int_exp);
                    let mean = sum / span as f64;
                    on_record(
                        member.set_index,
                        MomentumRecord {
                            tau,
                            params: member.params,
                            value: power_mean_root(mean, member.params.exponent, member.int_exp),
                            degenerate,
                        },
                    )?;
                }
            }
        }
        Ok(())
    }
}
