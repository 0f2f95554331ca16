//! Replica store with spin labels: distance-weighted voting over past string
//! states.
//!
//! Each replica holds the coordinate history of one closed long trade plus a
//! spin recording whether it paid. A contemplated trade is compared against
//! the stored coordinates; replicas vote with Boltzmann weights in their
//! rescaled distance, and the weighted spin sum is the fuzzy outcome
//! prediction. Only replicas old enough for their outcome to be knowable take
//! part: the newest `h_cl - h_op` slots are excluded.

use std::collections::{BTreeMap, VecDeque};

use crate::error::{Error, Result};

/// One stored string state: `d_X + 1` coordinate components, each sampled at
/// `h_op + 1` offsets, plus the outcome spin.
#[derive(Debug, Clone, PartialEq)]
pub struct Replica {
    pub coords: Vec<Vec<f64>>,
    /// +1 when the recorded trade paid, -1 otherwise.
    pub spin: i8,
}

impl Replica {
    pub fn new(coords: Vec<Vec<f64>>, spin: i8) -> Result<Self> {
        if spin != 1 && spin != -1 {
            return Err(Error::InvalidReplica(format!("spin must be +1 or -1, got {spin}")));
        }
        if coords.is_empty() || coords[0].is_empty() {
            return Err(Error::ReplicaShape("coordinates must be non-empty".into()));
        }
        let len = coords[0].len();
        if coords.iter().any(|c| c.len() != len) {
            return Err(Error::ReplicaShape(
                "all coordinate components must share one length".into(),
            ));
        }
        Ok(Self { coords, spin })
    }
}

/// Outcome spin of a closed long trade: the sign of what the close paid
/// against what the open cost. An exact tie refunded the cost but earned
/// nothing, so it counts as -1.
pub fn spin_from_trade(bid_at_close: f64, ask_at_open: f64) -> i8 {
    if bid_at_close > ask_at_open {
        1
    } else {
        -1
    }
}

fn check_shapes(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<(usize, usize)> {
    if a.len() != b.len() {
        return Err(Error::ReplicaShape(format!(
            "component counts differ: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.is_empty() {
        return Err(Error::ReplicaShape("no coordinate components".into()));
    }
    let len = a[0].len();
    for (j, (ca, cb)) in a.iter().zip(b).enumerate() {
        if ca.len() != len || cb.len() != len {
            return Err(Error::ReplicaShape(format!(
                "component {j} length mismatch ({} vs {} vs {len})",
                ca.len(),
                cb.len()
            )));
        }
    }
    if len < 2 || a.len() < 2 {
        return Err(Error::ReplicaShape(format!(
            "need at least 2 offsets and 2 components, got {len} x {}",
            a.len()
        )));
    }
    Ok((a.len() - 1, len - 1))
}

/// String-to-string distance:
/// `[(1/(d_X h_op)) sum_h sum_j |a_j(h) - b_j(h)|^p]^(1/p)`.
/// The prefactor divides by `d_X * h_op` while the double sum runs over
/// `(d_X + 1)(h_op + 1)` terms; that asymmetry is part of the definition, so
/// the value for six unit differences with d_X = 1, h_op = 2, p = 1 is 3.
pub fn hilbert_distance(a: &[Vec<f64>], b: &[Vec<f64>], p: f64) -> Result<f64> {
    if !(p >= 1.0) || !p.is_finite() {
        return Err(Error::InvalidExponent(p));
    }
    let (d_x, h_op) = check_shapes(a, b)?;
    let mut sum = 0.0;
    for (ca, cb) in a.iter().zip(b) {
        for (&x, &y) in ca.iter().zip(cb) {
            sum += (x - y).abs().powf(p);
        }
    }
    Ok((sum / (d_x * h_op) as f64).powf(1.0 / p))
}

/// `D` rescaled by its own mean and pushed through a softmax:
/// `w_n = exp(-c_d D_n / mean D) / sum`. A zero mean (every distance zero)
/// or a zero constant gives uniform weights.
pub fn boltzmann_weights(distances: &[f64], c_d: f64) -> Result<Vec<f64>> {
    if distances.is_empty() {
        return Err(Error::InvalidParams("no distances to weight".into()));
    }
    if !(c_d >= 0.0) || !c_d.is_finite() {
        return Err(Error::InvalidParams(format!(
            "weighting constant must be non-negative, got {c_d}"
        )));
    }
    if distances.iter().any(|d| !d.is_finite() || *d < 0.0) {
        return Err(Error::InvalidParams("distances must be non-negative and finite".into()));
    }
    let n = distances.len() as f64;
    let mean = distances.iter().sum::<f64>() / n;
    if mean == 0.0 || c_d == 0.0 {
        return Ok(vec![1.0 / n; distances.len()]);
    }
    // Softmax with the smallest argument subtracted for stability.
    let scaled: Vec<f64> = distances.iter().map(|d| c_d * d / mean).collect();
    let min = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
    let exps: Vec<f64> = scaled.iter().map(|s| (-(s - min)).exp()).collect();
    let total: f64 = exps.iter().sum();
    Ok(exps.into_iter().map(|e| e / total).collect())
}

/// Weighted spin sum over `spins` and `weights`; a convex combination of
/// values in {-1, +1}, so the result lies in [-1, +1].
pub fn mean_spin(spins: &[i8], weights: &[f64]) -> Result<f64> {
    if spins.len() != weights.len() {
        return Err(Error::ArityMismatch {
            expected: spins.len(),
            got: weights.len(),
        });
    }
    Ok(spins
        .iter()
        .zip(weights)
        .map(|(&s, &w)| s as f64 * w)
        .sum())
}

/// Shape and weighting parameters of a replica store.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReplicaSystemConfig {
    /// Store capacity; one slot per remembered trade.
    pub capacity: usize,
    /// Offsets (in ticks) of the open and close quotes that frame a stored
    /// trade; `h_cl - h_op` newest slots sit out of every vote.
    pub h_op: usize,
    pub h_cl: usize,
    /// Coordinate components per replica, excluding component 0.
    pub d_x: usize,
    /// Distance exponent, >= 1.
    pub exponent: f64,
    /// Boltzmann weighting constant, >= 0.
    pub weighting: f64,
}

impl Default for ReplicaSystemConfig {
    fn default() -> Self {
        Self {
            capacity: 256,
            h_op: 16,
            h_cl: 32,
            d_x: 1,
            exponent: 2.0,
            weighting: 1.0,
        }
    }
}

impl ReplicaSystemConfig {
    pub fn validate(&self) -> Result<()> {
        if self.capacity == 0 {
            return Err(Error::InvalidReplica("capacity must be at least 1".into()));
        }
        if self.h_op == 0 {
            return Err(Error::InvalidReplica("h_op must be at least 1".into()));
        }
        if self.h_cl <= self.h_op {
            return Err(Error::InvalidReplica(format!(
                "h_cl ({}) must exceed h_op ({})",
                self.h_cl, self.h_op
            )));
        }
        if self.d_x == 0 {
            return Err(Error::InvalidReplica("d_x must be at least 1".into()));
        }
        if !(self.exponent >= 1.0) || !self.exponent.is_finite() {
            return Err(Error::InvalidExponent(self.exponent));
        }
        if !(self.weighting >= 0.0) || !self.weighting.is_finite() {
            return Err(Error::InvalidReplica(format!(
                "weighting constant must be non-negative, got {}",
                self.weighting
            )));
        }
        Ok(())
    }

    /// Slots excluded from voting: trades younger than this cannot have
    /// closed yet.
    pub fn exclusion_span(&self) -> usize {
        self.h_cl - self.h_op
    }
}

/// The ordered store. Slot 0 is the oldest replica; fresh entries arrive at
/// the top and, once the store is full, push the slot-0 entry out.
#[derive(Debug, Clone)]
pub struct ReplicaSystem {
    config: ReplicaSystemConfig,
    store: VecDeque<Replica>,
}

impl ReplicaSystem {
    pub fn new(config: ReplicaSystemConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            store: VecDeque::with_capacity(config.capacity),
        })
    }

    pub fn config(&self) -> &ReplicaSystemConfig {
        &self.config
    }

    pub fn len(&self) -> usize {
        self.store.len()
    }

    pub fn is_empty(&self) -> bool {
        self.store.is_empty()
    }

    /// Replica at slot `n` (0 = oldest).
    pub fn get(&self, n: usize) -> Option<&Replica> {
        self.store.get(n)
    }

    fn check_member_shape(&self, coords: &[Vec<f64>]) -> Result<()> {
        if coords.len() != self.config.d_x + 1 {
            return Err(Error::ReplicaShape(format!(
                "expected {} coordinate components, got {}",
                self.config.d_x + 1,
                coords.len()
            )));
        }
        let want = self.config.h_op + 1;
        if coords.iter().any(|c| c.len() != want) {
            return Err(Error::ReplicaShape(format!(
                "every component must hold {want} offsets"
            )));
        }
        Ok(())
    }

    /// Records a fresh replica. While the store is filling it simply grows;
    /// at capacity the store shifts: every slot moves down one and the
    /// oldest state is forgotten.
    pub fn push(&mut self, fresh: Replica) -> Result<()> {
        self.check_member_shape(&fresh.coords)?;
        if fresh.spin != 1 && fresh.spin != -1 {
            return Err(Error::InvalidReplica(format!(
                "spin must be +1 or -1, got {}",
                fresh.spin
            )));
        }
        if self.store.len() == self.config.capacity {
            self.store.pop_front();
        }
        self.store.push_back(fresh);
        Ok(())
    }

    /// Number of replicas eligible to vote right now.
    pub fn voting_len(&self) -> usize {
        (self.store.len()).saturating_sub(self.config.exclusion_span())
    }

    /// Distance-weighted spin vote of the eligible replicas against a probe
    /// coordinate state. The probe must be shaped like a stored replica.
    pub fn fuzzy_spin(&self, probe: &[Vec<f64>]) -> Result<f64> {
        self.check_member_shape(probe)?;
        if self.store.is_empty() {
            return Err(Error::EmptyReplicaStore);
        }
        let top = self.store.len() - 1;
        let span = self.config.exclusion_span();
        if top < span {
            return Err(Error::ReplicaStoreTooShort { span, top });
        }
        let voters = top - span;
        let mut distances = Vec::with_capacity(voters + 1);
        let mut spins = Vec::with_capacity(voters + 1);
        for n in 0..=voters {
            let replica = &self.store[n];
            distances.push(hilbert_distance(&replica.coords, probe, self.config.exponent)?);
            spins.push(replica.spin);
        }
        let weights = boltzmann_weights(&distances, self.config.weighting)?;
        mean_spin(&spins, &weights)
    }
}

/// Holding-interval distributions of winning and losing spins. Counts are
/// binned by interval and each spin class is scaled by its own peak, so
/// every nonempty class tops out at exactly 1.
pub fn spin_histograms(trades: &[(u64, i8)]) -> (BTreeMap<u64, f64>, BTreeMap<u64, f64>) {
    let mut plus: BTreeMap<u64, u64> = BTreeMap::new();
    let mut minus: BTreeMap<u64, u64> = BTreeMap::new();
    for &(interval, spin) in trades {
        let target = if spin >= 0 { &mut plus } else { &mut minus };
        *target.entry(interval).or_insert(0) += 1;
    }
    let normalize = |counts: BTreeMap<u64, u64>| -> BTreeMap<u64, f64> {
        let peak = counts.values().copied().max().unwrap_or(0) as f64;
        counts
            .into_iter()
            .map(|(k, v)| (k, v as f64 / peak))
            .collect()
    };
    (normalize(plus), normalize(minus))
}
