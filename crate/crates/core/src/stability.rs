//! Closed-form stabilizability verdicts.
//!
//! A fixed packet length `l` keeps the long-run quadratic cost bounded iff
//! `g(l) rho^{2l}(A) < 1`; some stationary deterministic variable-length
//! policy stabilizes the loop iff `min_l g(l) rho^{2l}(A) < 1`. Both verdicts
//! require `(A, sqrt R)` controllable and `(A, sqrt Q)` observable, and both
//! are strict: a product exactly at one counts as unstable.

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::lti::{check_controllable_observable, SystemModel};
use crate::num::Real;

/// Width of the warning band around the product value 1, where floating
/// point cannot back the strict verdict.
const BOUNDARY_BAND: f64 = 1e-15;

/// Verdict for one packet length.
#[derive(Debug, Clone, PartialEq)]
pub struct LengthStability<T> {
    pub l: usize,
    /// `g(l)`.
    pub g: T,
    /// `rho^{2l}(A)`.
    pub rho_2l: T,
    /// `g(l) * rho^{2l}(A)`.
    pub product: T,
    /// Strict verdict `product < 1`.
    pub stable: bool,
    /// Set when the product sits within one ulp-scale band of 1.
    pub boundary_warning: bool,
}

/// Verdict for the variable-length policy class.
#[derive(Debug, Clone, PartialEq)]
pub struct VariableStability<T> {
    pub stable: bool,
    /// Argmin of the product over the searched lengths.
    pub best_l: usize,
    /// Minimum product over the searched lengths.
    pub min_product: T,
    /// Largest length included in the finite search.
    pub searched_l_max: usize,
    /// Whether the verdict is exact over all of `l in N` (geometric channel)
    /// or only certifies the searched range (table channel).
    pub exact_over_all_lengths: bool,
}

/// Per-length table plus the variable-length verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport<T> {
    pub per_length: Vec<LengthStability<T>>,
    pub variable: VariableStability<T>,
}

fn require_hypotheses<T: Real>(system: &SystemModel<T>) -> Result<()> {
    let co = check_controllable_observable(system)?;
    if !co.controllable || !co.observable {
        return Err(Error::Precondition(format!(
            "stability verdicts need (A, sqrt R) controllable and (A, sqrt Q) observable; \
             got controllable={}, observable={}",
            co.controllable, co.observable
        )));
    }
    Ok(())
}

fn product_at<T: Real>(
    system: &SystemModel<T>,
    channel: &ChannelModel<T>,
    l: usize,
) -> Result<LengthStability<T>> {
    let g = channel.error_prob(l)?;
    let rho_2l = system.rho().powi(2 * l as i32);
    let product = g * rho_2l;
    Ok(LengthStability {
        l,
        g,
        rho_2l,
        product,
        stable: product < T::one(),
        boundary_warning: (product - T::one()).abs() <= T::of(BOUNDARY_BAND),
    })
}

/// Fixed-length verdict for one packet length.
pub fn fixed_length_stable<T: Real>(
    system: &SystemModel<T>,
    channel: &ChannelModel<T>,
    l: usize,
) -> Result<LengthStability<T>> {
    if l == 0 {
        return Err(Error::Domain("packet length must be >= 1".into()));
    }
    require_hypotheses(system)?;
    product_at(system, channel, l)
}

/// Variable-length verdict.
///
/// The search runs over `l in 1..=l_max`. For the geometric channel the
/// product sequence is itself geometric with ratio `r rho^2`, which decides
/// the infimum over all of `l in N` exactly: falling products (`r rho^2 < 1`)
/// approach zero, so some length always stabilizes; otherwise the minimum
/// sits at `l = 1`. For table channels lengths beyond the table do not exist,
/// so the capped search is already exact over the real action space.
pub fn variable_length_stable<T: Real>(
    system: &SystemModel<T>,
    channel: &ChannelModel<T>,
    l_max: usize,
) -> Result<VariableStability<T>> {
    if l_max == 0 {
        return Err(Error::Domain("search bound l_max must be >= 1".into()));
    }
    require_hypotheses(system)?;
    let searched_l_max = match channel.max_length() {
        Some(table_len) => l_max.min(table_len),
        None => l_max,
    };
    let mut best: Option<LengthStability<T>> = None;
    for l in 1..=searched_l_max {
        let rec = product_at(system, channel, l)?;
        if best.as_ref().is_none_or(|b| rec.product < b.product) {
            best = Some(rec);
        }
    }
    let best = best.expect("searched at least one length");
    let (stable, exact) = match channel {
        ChannelModel::Exponential { ratio, .. } => {
            let step = *ratio * system.rho() * system.rho();
            if step < T::one() {
                // the products fall geometrically toward zero
                (true, true)
            } else {
                // nondecreasing products: the infimum over all lengths is at l=1
                (channel.error_prob(1)? * system.rho() * system.rho() < T::one(), true)
            }
        }
        ChannelModel::Table { .. } => (best.product < T::one(), true),
    };
    Ok(VariableStability {
        stable,
        best_l: best.l,
        min_product: best.product,
        searched_l_max,
        exact_over_all_lengths: exact,
    })
}

/// Per-length verdicts for `l in 1..=m` plus the variable-length verdict.
pub fn stability_report<T: Real>(
    system: &SystemModel<T>,
    channel: &ChannelModel<T>,
    m: usize,
) -> Result<StabilityReport<T>> {
    require_hypotheses(system)?;
    let mut per_length = Vec::with_capacity(m);
    for l in 1..=m {
        per_length.push(product_at(system, channel, l)?);
    }
    let variable = variable_length_stable(system, channel, m)?;
    Ok(StabilityReport {
        per_length,
        variable,
    })
}
