//! The AoI-indexed semi-Markov decision process and its average-cost solver.
//!
//! States are the age of information `d in 1..=N` at the start of a packet,
//! actions are packet lengths `l in 1..=M`. A packet of length `l` sent at
//! AoI `d` costs the `l` slot costs at ages `d..d+l-1`, takes `l` slots, and
//! moves the chain to `l` on delivery or to `d+l` (clamped at `N`) on error.
//! The unit-step transformation turns this into an ordinary MDP with the same
//! average cost per slot, which relative value iteration then solves.

mod stationary;

pub use stationary::stationary_distribution;

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::lti::SystemModel;
use crate::num::Real;

/// Tie tolerance for the greedy step: among actions within this absolute
/// distance of the minimum, the shortest packet wins.
const TIE_TOL: f64 = 1e-12;

/// Default span tolerance for relative value iteration.
pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Default iteration budget for relative value iteration.
pub const DEFAULT_MAX_ITERS: usize = 1_000_000;

/// Truncated decision-process description.
#[derive(Debug, Clone)]
pub struct SmdpSpec<T> {
    system: SystemModel<T>,
    channel: ChannelModel<T>,
    n_states: usize,
    m_actions: usize,
}

/// Stationary deterministic policy: a packet length for every AoI state.
#[derive(Debug, Clone, PartialEq)]
pub struct Policy<T> {
    lengths: Vec<usize>,
    /// Long-run average cost per slot, filled in once evaluated.
    pub gain: Option<T>,
}

impl<T: Real> Policy<T> {
    /// Policy from explicit per-state lengths (state `d` maps to entry `d-1`).
    pub fn from_lengths(lengths: Vec<usize>) -> Result<Self> {
        if lengths.is_empty() {
            return Err(Error::Domain("policy needs at least one state".into()));
        }
        if let Some(d) = lengths.iter().position(|&l| l == 0) {
            return Err(Error::Domain(format!("policy maps state {} to l=0", d + 1)));
        }
        Ok(Policy {
            lengths,
            gain: None,
        })
    }

    /// Fixed-length policy on `n` states.
    pub fn fixed(l0: usize, n: usize) -> Result<Self> {
        if l0 == 0 {
            return Err(Error::Domain("packet length must be >= 1".into()));
        }
        Self::from_lengths(vec![l0; n])
    }

    pub fn n_states(&self) -> usize {
        self.lengths.len()
    }

    /// Action at state `d` (1-based); states beyond the table reuse the last
    /// entry, matching the solver's clamped boundary.
    pub fn action(&self, d: usize) -> usize {
        let idx = d.clamp(1, self.lengths.len());
        self.lengths[idx - 1]
    }

    pub fn lengths(&self) -> &[usize] {
        &self.lengths
    }

    /// CSV with header `d,l`, one row per state.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("d,l\n");
        for (i, l) in self.lengths.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, l));
        }
        out
    }

    /// Parses the CSV format written by [`Policy::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lengths = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.eq_ignore_ascii_case("d,l")) {
                continue;
            }
            let mut parts = line.split(',');
            let (d, l) = match (parts.next(), parts.next(), parts.next()) {
                (Some(d), Some(l), None) => (d.trim(), l.trim()),
                _ => {
                    return Err(Error::Domain(format!(
                        "policy CSV line {} is not `d,l`: {line:?}",
                        lineno + 1
                    )))
                }
            };
            let d: usize = d.parse().map_err(|_| {
                Error::Domain(format!("policy CSV line {}: bad state {d:?}", lineno + 1))
            })?;
            let l: usize = l.parse().map_err(|_| {
                Error::Domain(format!("policy CSV line {}: bad length {l:?}", lineno + 1))
            })?;
            if d != lengths.len() + 1 {
                return Err(Error::Domain(format!(
                    "policy CSV line {}: expected state {}, got {d}",
                    lineno + 1,
                    lengths.len() + 1
                )));
            }
            lengths.push(l);
        }
        Self::from_lengths(lengths)
    }
}

/// Unit-step MDP produced by the data transformation.
#[derive(Debug, Clone)]
pub struct TransformedMdp<T> {
    n_states: usize,
    m_actions: usize,
    tau: T,
    /// Per-step costs, indexed `[ (d-1) * m + (l-1) ]`.
    costs: Vec<T>,
    /// Transition rows with 0-based targets, same indexing.
    rows: Vec<stationary::Row<T>>,
}

impl<T: Real> TransformedMdp<T> {
    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn m_actions(&self) -> usize {
        self.m_actions
    }

    /// Transformation step; fixed at the minimum duration of one slot.
    pub fn tau(&self) -> T {
        self.tau
    }

    #[inline]
    fn idx(&self, d: usize, l: usize) -> usize {
        (d - 1) * self.m_actions + (l - 1)
    }

    /// Transformed cost for state `d`, action `l` (1-based).
    pub fn cost(&self, d: usize, l: usize) -> T {
        self.costs[self.idx(d, l)]
    }

    /// Transformed transition row for state `d`, action `l`; 1-based targets.
    pub fn transitions(&self, d: usize, l: usize) -> Vec<(usize, T)> {
        self.rows[self.idx(d, l)]
            .iter()
            .map(|&(j, p)| (j + 1, p))
            .collect()
    }

    /// Row-sum defect, for invariant checks.
    pub fn max_row_sum_error(&self) -> T {
        self.rows
            .iter()
            .map(|row| {
                let s: T = row.iter().map(|&(_, p)| p).sum();
                (s - T::one()).abs()
            })
            .fold(T::zero(), |a, b| if b > a { b } else { a })
    }
}

impl<T: Real> SmdpSpec<T> {
    /// Validates the truncation bounds and the channel, and keeps the models.
    pub fn new(
        system: SystemModel<T>,
        channel: ChannelModel<T>,
        n_states: usize,
        m_actions: usize,
    ) -> Result<Self> {
        if m_actions < 1 {
            return Err(Error::Domain("action truncation M must be >= 1".into()));
        }
        if n_states < m_actions {
            return Err(Error::Domain(format!(
                "state truncation N={n_states} must be >= action truncation M={m_actions}"
            )));
        }
        channel.require_valid()?;
        if let Some(l_max) = channel.max_length() {
            if m_actions > l_max {
                return Err(Error::Domain(format!(
                    "action truncation M={m_actions} exceeds channel table length {l_max}"
                )));
            }
        }
        Ok(SmdpSpec {
            system,
            channel,
            n_states,
            m_actions,
        })
    }

    pub fn system(&self) -> &SystemModel<T> {
        &self.system
    }

    pub fn channel(&self) -> &ChannelModel<T> {
        &self.channel
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn m_actions(&self) -> usize {
        self.m_actions
    }

    fn check_state_action(&self, d: usize, l: usize) -> Result<()> {
        if d < 1 || d > self.n_states {
            return Err(Error::Domain(format!(
                "state d={d} outside 1..={}",
                self.n_states
            )));
        }
        if l < 1 || l > self.m_actions {
            return Err(Error::Domain(format!(
                "action l={l} outside 1..={}",
                self.m_actions
            )));
        }
        Ok(())
    }

    /// Stage cost `c(d,l) = sum_{i=d}^{d+l-1} Tr(Q H(i))`.
    pub fn one_stage_cost(&self, d: usize, l: usize) -> Result<T> {
        self.check_state_action(d, l)?;
        let mut c = T::zero();
        for i in d..d + l {
            c = c + self.system.slot_cost(i)?;
        }
        Ok(c)
    }

    /// Two-point successor distribution; the error successor `d+l` is clamped
    /// to `N`, so the worst state self-loops on error. 1-based states.
    pub fn transition(&self, d: usize, l: usize) -> Result<Vec<(usize, T)>> {
        self.check_state_action(d, l)?;
        let g = self.channel.error_prob(l)?;
        let fail = (d + l).min(self.n_states);
        let succ = l;
        let mut out: Vec<(usize, T)> = Vec::with_capacity(2);
        for (state, p) in [(fail, g), (succ, T::one() - g)] {
            match out.iter_mut().find(|(s, _)| *s == state) {
                Some((_, q)) => *q = *q + p,
                None => out.push((state, p)),
            }
        }
        out.sort_by_key(|&(s, _)| s);
        Ok(out)
    }

    /// Slots until the next decision; the packet length itself.
    pub fn duration(&self, d: usize, l: usize) -> Result<usize> {
        self.check_state_action(d, l)?;
        Ok(l)
    }

    /// Data transformation with step `tau = 1` (the minimum duration):
    /// costs become per-slot rates `c/delta` and rows are smoothed through a
    /// self-loop of weight `1 - tau/delta`. Average cost per slot of every
    /// stationary policy is preserved.
    pub fn transform(&self) -> Result<TransformedMdp<T>> {
        let tau = T::one();
        let n = self.n_states;
        let m = self.m_actions;
        let mut costs = Vec::with_capacity(n * m);
        let mut rows = Vec::with_capacity(n * m);
        for d in 1..=n {
            for l in 1..=m {
                let delta = T::of_usize(self.duration(d, l)?);
                costs.push(self.one_stage_cost(d, l)? / delta);
                let w = tau / delta;
                let mut row: stationary::Row<T> = Vec::with_capacity(3);
                let push = |row: &mut stationary::Row<T>, j: usize, p: T| {
                    if p == T::zero() {
                        return;
                    }
                    match row.iter_mut().find(|(s, _)| *s == j) {
                        Some((_, q)) => *q = *q + p,
                        None => row.push((j, p)),
                    }
                };
                for (j, p) in self.transition(d, l)? {
                    push(&mut row, j - 1, w * p);
                }
                push(&mut row, d - 1, T::one() - w);
                row.sort_by_key(|&(j, _)| j);
                rows.push(row);
            }
        }
        Ok(TransformedMdp {
            n_states: n,
            m_actions: m,
            tau,
            costs,
            rows,
        })
    }

    /// Average cost per slot of a stationary policy, from the stationary
    /// distribution of the embedded chain:
    /// `J = sum_d c(d,pi(d)) phi(d) / sum_d delta(d,pi(d)) phi(d)`.
    pub fn evaluate_policy(&self, policy: &Policy<T>) -> Result<T> {
        if policy.n_states() != self.n_states {
            return Err(Error::Domain(format!(
                "policy covers {} states, spec has {}",
                policy.n_states(),
                self.n_states
            )));
        }
        for d in 1..=self.n_states {
            self.check_state_action(d, policy.action(d))?;
        }
        let rows: Vec<stationary::Row<T>> = (1..=self.n_states)
            .map(|d| {
                Ok(self
                    .transition(d, policy.action(d))?
                    .into_iter()
                    .map(|(j, p)| (j - 1, p))
                    .collect())
            })
            .collect::<Result<_>>()?;
        let phi = stationary_distribution(&rows)?;
        let mut num = T::zero();
        let mut den = T::zero();
        for d in 1..=self.n_states {
            let p = phi[d - 1];
            if p == T::zero() {
                continue;
            }
            num = num + p * self.one_stage_cost(d, policy.action(d))?;
            den = den + p * T::of_usize(self.duration(d, policy.action(d))?);
        }
        Ok(num / den)
    }
}

/// Outcome of relative value iteration.
#[derive(Debug, Clone)]
pub struct RviSolution<T> {
    /// Greedy policy at convergence, with its gain filled in.
    pub policy: Policy<T>,
    /// Optimal average cost per slot (midpoint of the final gain bounds).
    pub gain: T,
    /// Sweeps performed.
    pub iterations: usize,
    /// Final span of successive value differences.
    pub final_span: T,
    /// Bias (relative value) vector at convergence, zero at the reference state.
    pub bias: Vec<T>,
}

/// Relative value iteration on the transformed MDP.
///
/// Each sweep applies the Bellman operator, subtracts the value of the
/// reference state `d = 1`, and stops once the span of successive normalized
/// iterates drops below `epsilon`. The gain bounds are the reference offset
/// plus the extreme value differences; their midpoint is the gain estimate.
pub fn solve_rvi<T: Real>(
    mdp: &TransformedMdp<T>,
    epsilon: T,
    max_iters: usize,
) -> Result<RviSolution<T>> {
    if epsilon <= T::zero() || epsilon.is_nan() {
        return Err(Error::Domain("epsilon must be positive".into()));
    }
    let n = mdp.n_states;
    let m = mdp.m_actions;
    let tie = T::of(TIE_TOL);
    let mut h = vec![T::zero(); n];
    let mut new_h = vec![T::zero(); n];
    let mut vals = vec![T::zero(); m];
    let mut policy = vec![1usize; n];
    let mut span = T::infinity();

    for sweep in 1..=max_iters {
        let mut offset = T::zero();
        for d in 1..=n {
            for l in 1..=m {
                let idx = (d - 1) * m + (l - 1);
                let mut v = mdp.costs[idx];
                for &(j, p) in &mdp.rows[idx] {
                    v = v + p * h[j];
                }
                vals[l - 1] = v;
            }
            let min = vals.iter().copied().fold(T::infinity(), T::min);
            let best_l = 1 + vals
                .iter()
                .position(|&v| v <= min + tie)
                .expect("minimum exists");
            policy[d - 1] = best_l;
            new_h[d - 1] = min;
            if d == 1 {
                offset = min;
            }
        }
        let mut lo = T::infinity();
        let mut hi = T::neg_infinity();
        for d in 0..n {
            new_h[d] = new_h[d] - offset;
            let diff = new_h[d] - h[d];
            if diff < lo {
                lo = diff;
            }
            if diff > hi {
                hi = diff;
            }
        }
        span = hi - lo;
        std::mem::swap(&mut h, &mut new_h);
        if span < epsilon {
            let gain = offset + (lo + hi) * T::of(0.5);
            let mut pol = Policy::from_lengths(policy)?;
            pol.gain = Some(gain);
            return Ok(RviSolution {
                policy: pol,
                gain,
                iterations: sweep,
                final_span: span,
                bias: h,
            });
        }
    }
    Err(Error::NonConvergence {
        iterations: max_iters,
        span: span.to_f64().unwrap_or(f64::NAN),
    })
}
