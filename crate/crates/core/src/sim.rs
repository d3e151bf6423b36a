//! Seeded Monte Carlo simulation of the closed loop.
//!
//! One episode walks the plant slot by slot: at each packet start the
//! controller reads the state, picks a length from the policy at the current
//! AoI, and sends the predictive command `K A^{l-1} x`. The packet resolves
//! at its final slot; on delivery the actuator applies the command in that
//! slot and the AoI resets to the packet length, otherwise the input stays
//! zero and the AoI keeps counting. Costs `x^T Q x` accumulate per slot after
//! the warmup.
//!
//! Reproducibility contract: every episode draws from a ChaCha8 stream seeded
//! with its own seed, consuming exactly one uniform per packet (the delivery
//! check, drawn at the packet start) followed by one standard normal per
//! state coordinate per simulated slot. Identical configuration and seed give
//! bit-identical records on every platform.

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::lti::{Matrix, SystemModel};
use crate::num::Real;
use crate::smdp::Policy;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, StandardUniform};
use std::collections::BTreeMap;

/// State-magnitude guard; beyond this the episode reports divergence.
const DIVERGENCE_GUARD: f64 = 1e15;

/// Closed-loop experiment description.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig<T> {
    pub system: SystemModel<T>,
    pub channel: ChannelModel<T>,
    pub policy: Policy<T>,
    /// Total slots per episode.
    pub horizon: usize,
    /// Slots excluded from the cost average at the start of each episode.
    pub warmup: usize,
    pub seeds: Vec<u64>,
    /// Starting state; zero when absent.
    pub initial_state: Option<Vec<T>>,
    /// Collect second moments of packet-boundary states for AoI `d` up to
    /// this bound (0 disables collection).
    pub moment_aoi_limit: usize,
}

/// Second-moment accumulator for states observed at one AoI value.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentAccum<T> {
    pub count: u64,
    pub sum_outer: Matrix<T>,
}

impl<T: Real> MomentAccum<T> {
    fn new(n: usize) -> Self {
        MomentAccum {
            count: 0,
            sum_outer: Matrix::zeros(n, n),
        }
    }

    fn add(&mut self, x: &[T]) {
        self.count += 1;
        for i in 0..x.len() {
            for j in 0..x.len() {
                let v = self.sum_outer.get(i, j) + x[i] * x[j];
                self.sum_outer.set(i, j, v);
            }
        }
    }

    fn merge(&mut self, other: &Self) {
        self.count += other.count;
        self.sum_outer = self
            .sum_outer
            .add(&other.sum_outer)
            .expect("moment shapes match");
    }

    /// Sample second moment, when any samples were collected.
    pub fn mean(&self) -> Option<Matrix<T>> {
        if self.count == 0 {
            None
        } else {
            Some(self.sum_outer.scale(T::one() / T::of_usize(self.count as usize)))
        }
    }
}

/// Everything one seeded episode produced.
#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeRecord<T> {
    pub seed: u64,
    /// Sample mean of `x^T Q x` over the counted slots.
    pub mean_cost: T,
    pub slots_counted: usize,
    pub packets_sent: u64,
    /// AoI at packet starts after warmup.
    pub aoi_histogram: BTreeMap<usize, u64>,
    /// Per packet length: (attempts, deliveries).
    pub success_by_length: BTreeMap<usize, (u64, u64)>,
    /// Indexed by AoI `d = 1..=moment_aoi_limit`.
    pub boundary_moments: Vec<MomentAccum<T>>,
    /// Slot at which the state guard tripped, when it did.
    pub diverged_at: Option<usize>,
}

/// Aggregate over all seeds.
#[derive(Debug, Clone, PartialEq)]
pub struct SimReport<T> {
    pub per_seed: Vec<EpisodeRecord<T>>,
    /// Mean of the per-seed means, over episodes that completed.
    pub pooled_mean: T,
    /// Standard error of the pooled mean across completed episodes.
    pub pooled_std_err: T,
    pub aoi_histogram: BTreeMap<usize, u64>,
    pub success_by_length: BTreeMap<usize, (u64, u64)>,
    pub boundary_moments: Vec<MomentAccum<T>>,
    pub any_diverged: bool,
}

/// One plant step `A x + B u + w`.
pub fn step_plant<T: Real>(
    x: &[T],
    u: &[T],
    w: &[T],
    system: &SystemModel<T>,
) -> Result<Vec<T>> {
    if w.len() != system.state_dim() {
        return Err(Error::Dimension(format!(
            "disturbance has length {}, state dimension is {}",
            w.len(),
            system.state_dim()
        )));
    }
    let ax = system.a().mul_vec(x)?;
    let bu = system.b().mul_vec(u)?;
    Ok(ax
        .iter()
        .zip(&bu)
        .zip(w)
        .map(|((&a, &b), &c)| a + b + c)
        .collect())
}

/// Predictive command `K A^{l-1} x`, generated at the packet start for
/// application at the delivery slot.
pub fn control_command<T: Real>(x: &[T], l: usize, system: &SystemModel<T>) -> Result<Vec<T>> {
    if l == 0 {
        return Err(Error::Domain("packet length must be >= 1".into()));
    }
    let mut y = x.to_vec();
    for _ in 1..l {
        y = system.a().mul_vec(&y)?;
    }
    system.k().mul_vec(&y)
}

impl<T: Real> SimConfig<T> {
    pub fn new(
        system: SystemModel<T>,
        channel: ChannelModel<T>,
        policy: Policy<T>,
        horizon: usize,
        warmup: usize,
        seeds: Vec<u64>,
    ) -> Result<Self> {
        let cfg = SimConfig {
            system,
            channel,
            policy,
            horizon,
            warmup,
            seeds,
            initial_state: None,
            moment_aoi_limit: 0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_initial_state(mut self, x0: Vec<T>) -> Result<Self> {
        if x0.len() != self.system.state_dim() {
            return Err(Error::Dimension(format!(
                "initial state has length {}, state dimension is {}",
                x0.len(),
                self.system.state_dim()
            )));
        }
        self.initial_state = Some(x0);
        Ok(self)
    }

    pub fn with_moment_aoi_limit(mut self, limit: usize) -> Self {
        self.moment_aoi_limit = limit;
        self
    }

    fn validate(&self) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::Domain("horizon must be >= 1".into()));
        }
        if self.warmup >= self.horizon {
            return Err(Error::Domain(format!(
                "warmup {} must be below the horizon {}",
                self.warmup, self.horizon
            )));
        }
        self.channel.require_valid()?;
        let longest = *self.policy.lengths().iter().max().expect("non-empty policy");
        if let Some(l_max) = self.channel.max_length() {
            if longest > l_max {
                return Err(Error::Domain(format!(
                    "policy uses length {longest}, channel table stops at {l_max}"
                )));
            }
        }
        if let Some(x0) = &self.initial_state {
            if x0.len() != self.system.state_dim() {
                return Err(Error::Dimension("initial state has the wrong length".into()));
            }
        }
        Ok(())
    }
}

/// Runs one seeded episode.
pub fn run_episode<T: Real>(cfg: &SimConfig<T>, seed: u64) -> Result<EpisodeRecord<T>>
where
    StandardNormal: Distribution<T>,
    StandardUniform: Distribution<T>,
{
    cfg.validate()?;
    let n = cfg.system.state_dim();
    let m = cfg.system.input_dim();
    let guard = T::of(DIVERGENCE_GUARD);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut x: Vec<T> = cfg
        .initial_state
        .clone()
        .unwrap_or_else(|| vec![T::zero(); n]);
    let mut aoi = 1usize;
    let mut t = 1usize;
    let mut total = T::zero();
    let mut counted = 0usize;
    let mut packets = 0u64;
    let mut hist: BTreeMap<usize, u64> = BTreeMap::new();
    let mut success_by_length: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    let mut moments: Vec<MomentAccum<T>> = (0..cfg.moment_aoi_limit)
        .map(|_| MomentAccum::new(n))
        .collect();
    let mut delivered_once = false;
    let mut diverged_at = None;

    let zero_input = vec![T::zero(); m];
    let mut z = vec![T::zero(); n];

    'packets: while t <= cfg.horizon {
        let l = cfg.policy.action(aoi);
        let g = cfg.channel.error_prob(l)?;
        if t > cfg.warmup {
            *hist.entry(aoi).or_insert(0) += 1;
        }
        if delivered_once && aoi >= 1 && aoi <= cfg.moment_aoi_limit {
            moments[aoi - 1].add(&x);
        }
        let command = control_command(&x, l, &cfg.system)?;
        let roll: T = StandardUniform.sample(&mut rng);
        let success = roll < T::one() - g;
        packets += 1;
        let entry = success_by_length.entry(l).or_insert((0, 0));
        entry.0 += 1;
        if success {
            entry.1 += 1;
        }

        for s in 0..l {
            let slot = t + s;
            if slot > cfg.horizon {
                break 'packets;
            }
            if slot > cfg.warmup {
                let qx = cfg.system.q().mul_vec(&x)?;
                let cost = x
                    .iter()
                    .zip(&qx)
                    .map(|(&a, &b)| a * b)
                    .fold(T::zero(), |a, b| a + b);
                total = total + cost;
                counted += 1;
            }
            let input = if s + 1 == l && success {
                &command
            } else {
                &zero_input
            };
            for zi in z.iter_mut() {
                *zi = StandardNormal.sample(&mut rng);
            }
            let w = cfg.system.sqrt_r().mul_vec(&z)?;
            x = step_plant(&x, input, &w, &cfg.system)?;
            if x.iter().any(|v| v.abs() > guard) {
                diverged_at = Some(slot);
                break 'packets;
            }
        }
        if diverged_at.is_some() {
            break;
        }
        if success {
            aoi = l;
            delivered_once = true;
        } else {
            aoi += l;
        }
        t += l;
    }

    let mean_cost = if counted > 0 {
        total / T::of_usize(counted)
    } else {
        T::zero()
    };
    Ok(EpisodeRecord {
        seed,
        mean_cost,
        slots_counted: counted,
        packets_sent: packets,
        aoi_histogram: hist,
        success_by_length,
        boundary_moments: moments,
        diverged_at,
    })
}

/// Runs every seed and aggregates. Diverged episodes stay in `per_seed` and
/// flag the report but are excluded from the pooled statistics.
pub fn estimate_cost<T: Real>(cfg: &SimConfig<T>) -> Result<SimReport<T>>
where
    StandardNormal: Distribution<T>,
    StandardUniform: Distribution<T>,
{
    if cfg.seeds.is_empty() {
        return Err(Error::Domain("at least one seed is required".into()));
    }
    let n = cfg.system.state_dim();
    let mut per_seed = Vec::with_capacity(cfg.seeds.len());
    for &seed in &cfg.seeds {
        per_seed.push(run_episode(cfg, seed)?);
    }
    let completed: Vec<&EpisodeRecord<T>> =
        per_seed.iter().filter(|r| r.diverged_at.is_none()).collect();
    let (pooled_mean, pooled_std_err) = if completed.is_empty() {
        (T::infinity(), T::zero())
    } else {
        let k = T::of_usize(completed.len());
        let mean = completed
            .iter()
            .map(|r| r.mean_cost)
            .fold(T::zero(), |a, b| a + b)
            / k;
        let se = if completed.len() < 2 {
            T::zero()
        } else {
            let var = completed
                .iter()
                .map(|r| (r.mean_cost - mean) * (r.mean_cost - mean))
                .fold(T::zero(), |a, b| a + b)
                / (k - T::one());
            (var / k).sqrt()
        };
        (mean, se)
    };
    let mut aoi_histogram: BTreeMap<usize, u64> = BTreeMap::new();
    let mut success_by_length: BTreeMap<usize, (u64, u64)> = BTreeMap::new();
    let mut boundary_moments: Vec<MomentAccum<T>> = (0..cfg.moment_aoi_limit)
        .map(|_| MomentAccum::new(n))
        .collect();
    for rec in &per_seed {
        for (&d, &c) in &rec.aoi_histogram {
            *aoi_histogram.entry(d).or_insert(0) += c;
        }
        for (&l, &(a, s)) in &rec.success_by_length {
            let e = success_by_length.entry(l).or_insert((0, 0));
            e.0 += a;
            e.1 += s;
        }
        for (acc, other) in boundary_moments.iter_mut().zip(&rec.boundary_moments) {
            acc.merge(other);
        }
    }
    Ok(SimReport {
        any_diverged: per_seed.iter().any(|r| r.diverged_at.is_some()),
        per_seed,
        pooled_mean,
        pooled_std_err,
        aoi_histogram,
        success_by_length,
        boundary_moments,
    })
}
