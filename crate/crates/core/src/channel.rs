//! Packet-error-probability model `g(l)`.
//!
//! Longer packets survive the channel more often, so `g` must be strictly
//! decreasing in the length `l` (in slots) and stay inside the open interval
//! `(0, 1)`: a zero would make the AoI renewal distribution degenerate and a
//! one would make delivery impossible.

use crate::error::{Error, Result};
use crate::num::Real;
use std::fmt;

/// Error-probability model, either the geometric family `p0 * r^(l-1)` or an
/// explicit table over `l = 1..=len`.
#[derive(Debug, Clone, PartialEq)]
pub enum ChannelModel<T> {
    Exponential { base: T, ratio: T },
    Table { probs: Vec<T> },
}

/// One invariant violation found by [`ChannelModel::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    /// `g(l)` outside the open interval `(0, 1)`.
    OutOfRange { l: usize, value: f64 },
    /// `g(l) >= g(l-1)`, i.e. not strictly decreasing at `l`.
    NotDecreasing { l: usize },
    /// Table with no entries.
    Empty,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::OutOfRange { l, value } => {
                write!(f, "violation at l={l}: g={value} outside (0,1)")
            }
            Violation::NotDecreasing { l } => {
                write!(f, "violation at l={l}: not strictly decreasing")
            }
            Violation::Empty => write!(f, "violation: empty table"),
        }
    }
}

impl<T: Real> ChannelModel<T> {
    /// Geometric model `g(l) = base * ratio^(l-1)`; both parameters must lie
    /// in `(0, 1)`, which makes every invariant hold automatically.
    pub fn exponential(base: T, ratio: T) -> Result<Self> {
        if !(base > T::zero() && base < T::one()) {
            return Err(Error::Domain(format!(
                "base error probability {base} must be in (0,1)"
            )));
        }
        if !(ratio > T::zero() && ratio < T::one()) {
            return Err(Error::Domain(format!("ratio {ratio} must be in (0,1)")));
        }
        Ok(ChannelModel::Exponential { base, ratio })
    }

    /// Table model; invariants are reported by [`ChannelModel::validate`]
    /// rather than enforced here, so a test can probe broken tables.
    pub fn table(probs: Vec<T>) -> Self {
        ChannelModel::Table { probs }
    }

    /// Largest supported length, `None` when unbounded.
    pub fn max_length(&self) -> Option<usize> {
        match self {
            ChannelModel::Exponential { .. } => None,
            ChannelModel::Table { probs } => Some(probs.len()),
        }
    }

    /// `g(l)` for `l >= 1`.
    pub fn error_prob(&self, l: usize) -> Result<T> {
        if l == 0 {
            return Err(Error::Domain("packet length l must be >= 1".into()));
        }
        match self {
            ChannelModel::Exponential { base, ratio } => {
                Ok(*base * ratio.powi(l as i32 - 1))
            }
            ChannelModel::Table { probs } => probs.get(l - 1).copied().ok_or_else(|| {
                Error::Domain(format!(
                    "packet length l={l} beyond table range 1..={}",
                    probs.len()
                ))
            }),
        }
    }

    /// Checks every invariant and returns the full violation list.
    pub fn validate(&self) -> Vec<Violation> {
        match self {
            ChannelModel::Exponential { base, ratio } => {
                let mut v = Vec::new();
                if !(*base > T::zero() && *base < T::one()) {
                    v.push(Violation::OutOfRange {
                        l: 1,
                        value: base.to_f64().unwrap_or(f64::NAN),
                    });
                }
                if !(*ratio > T::zero() && *ratio < T::one()) {
                    v.push(Violation::NotDecreasing { l: 2 });
                }
                v
            }
            ChannelModel::Table { probs } => {
                let mut v = Vec::new();
                if probs.is_empty() {
                    v.push(Violation::Empty);
                }
                for (i, &p) in probs.iter().enumerate() {
                    let l = i + 1;
                    if !(p > T::zero() && p < T::one()) {
                        v.push(Violation::OutOfRange {
                            l,
                            value: p.to_f64().unwrap_or(f64::NAN),
                        });
                    }
                    if i > 0 && p >= probs[i - 1] {
                        v.push(Violation::NotDecreasing { l });
                    }
                }
                v
            }
        }
    }

    /// Convenience: `Ok` when [`validate`](Self::validate) finds nothing.
    pub fn require_valid(&self) -> Result<()> {
        let violations = self.validate();
        if violations.is_empty() {
            Ok(())
        } else {
            let list: Vec<String> = violations.iter().map(|v| v.to_string()).collect();
            Err(Error::Domain(format!(
                "invalid channel model: {}",
                list.join("; ")
            )))
        }
    }
}
