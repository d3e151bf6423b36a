//! Analytic average cost of fixed-length policies.
//!
//! Under a fixed packet length `l0` the AoI at packet starts renews
//! geometrically: `phi(i l0) = (1 - g(l0)) g(l0)^{i-1}`. On a scalar plant
//! every slot cost has a closed form, so the average cost per slot
//!
//! `J = (1/l0) sum_{i>=1} phi(i l0) c(i l0, l0)`
//!
//! can be summed term by term with a geometric tail bound. This route shares
//! nothing with the chain-based policy evaluation in [`crate::smdp`], which
//! is exactly why the two are used to cross-check each other.

use crate::channel::ChannelModel;
use crate::error::{Error, Result};
use crate::lti::SystemModel;
use crate::num::Real;
use crate::smdp::{Policy, SmdpSpec};

/// Hard cap on the series length; hit only for products within a hair of 1.
const MAX_TERMS: usize = 1_000_000;

/// Average cost of a fixed-length policy together with how it was obtained.
#[derive(Debug, Clone, PartialEq)]
pub struct FixedLengthCost<T> {
    pub l0: usize,
    /// Average cost per slot.
    pub j: T,
    /// Series terms summed (analytic) or states used (semi-analytic).
    pub terms_used: usize,
    /// Bound on the truncation error of `j`.
    pub truncation_error_bound: T,
    /// Set when the value comes from large-`N` policy evaluation instead of
    /// the scalar closed form.
    pub semi_analytic: bool,
}

/// Geometric AoI distribution at packet starts under a fixed length:
/// `phi(i l0) = (1-g) g^{i-1}` for `i = 1..=i_max`, plus the tail mass
/// `g^{i_max}` beyond.
pub fn aoi_stationary_pmf<T: Real>(
    channel: &ChannelModel<T>,
    l0: usize,
    i_max: usize,
) -> Result<(Vec<T>, T)> {
    if l0 == 0 {
        return Err(Error::Domain("packet length must be >= 1".into()));
    }
    let g = channel.error_prob(l0)?;
    let mut pmf = Vec::with_capacity(i_max);
    let mut weight = T::one() - g;
    for _ in 0..i_max {
        pmf.push(weight);
        weight = weight * g;
    }
    Ok((pmf, g.powi(i_max as i32)))
}

/// Closed-form `J` for scalar plants.
///
/// Sums the renewal series until the geometric tail bound (ratio
/// `g(l0) rho^{2 l0}`) drops below `tol`. Fails with a divergence error when
/// `g(l0) rho^{2 l0} >= 1` (the series has no finite sum) and with a domain
/// error for non-scalar plants.
pub fn analytic_fixed_cost<T: Real>(
    system: &SystemModel<T>,
    channel: &ChannelModel<T>,
    l0: usize,
    tol: T,
) -> Result<FixedLengthCost<T>> {
    if system.state_dim() != 1 {
        return Err(Error::Domain(format!(
            "closed form needs a scalar plant, state dimension is {}",
            system.state_dim()
        )));
    }
    if l0 == 0 {
        return Err(Error::Domain("packet length must be >= 1".into()));
    }
    if tol <= T::zero() || tol.is_nan() {
        return Err(Error::Domain("tolerance must be positive".into()));
    }
    let g = channel.error_prob(l0)?;
    let rho2 = system.rho() * system.rho();
    let beta = g * rho2.powi(l0 as i32);
    if beta >= T::one() {
        return Err(Error::Divergence(format!(
            "fixed length {l0} cannot stabilize: g(l0) rho^(2 l0) = {beta} >= 1"
        )));
    }
    let r = system.r().get(0, 0);
    let q = system.q().get(0, 0);
    let l0_t = T::of_usize(l0);

    // stage cost c(d, l0) in closed form
    let stage = |d: usize| -> T {
        let d_t = T::of_usize(d);
        if (rho2 - T::one()).abs() <= T::epsilon() * T::of(4.0) {
            // rho = 1: H(j) = j R, so the stage cost is an arithmetic sum
            q * r * l0_t * (d_t + (l0_t - T::one()) * T::of(0.5))
        } else {
            let geom = rho2.powi(d as i32) * (rho2.powi(l0 as i32) - T::one()) / (rho2 - T::one());
            q * r * (geom - l0_t) / (rho2 - T::one())
        }
    };

    let one_minus_g = T::one() - g;
    let mut sum = T::zero();
    let mut weight = one_minus_g; // (1-g) g^{i-1}
    let mut term = weight * stage(l0);
    let mut bound = T::infinity();
    let mut terms_used = 0;
    for i in 1..=MAX_TERMS {
        sum = sum + term;
        terms_used = i;
        let next = weight * g * stage((i + 1) * l0);
        // the term ratio approaches beta from below when rho > 1 and falls
        // toward g when rho <= 1, so max(beta, observed) bounds all later ones
        let ratio = if term > T::zero() { next / term } else { T::zero() };
        let cap = if beta > ratio { beta } else { ratio };
        if cap < T::one() {
            bound = next / (T::one() - cap) / l0_t;
            if bound <= tol || next == T::zero() {
                break;
            }
        }
        weight = weight * g;
        term = next;
        if i == MAX_TERMS {
            return Err(Error::Numeric(format!(
                "series did not meet tol={tol:e} within {MAX_TERMS} terms (product {beta} too close to 1)"
            )));
        }
    }
    Ok(FixedLengthCost {
        l0,
        j: sum / l0_t,
        terms_used,
        truncation_error_bound: bound,
        semi_analytic: false,
    })
}

/// Fixed-length cost for any plant: the scalar closed form where it exists,
/// otherwise policy evaluation on a deep truncation, reported as
/// semi-analytic with the `N` vs `2N` difference as the error estimate.
pub fn fixed_length_cost<T: Real>(
    system: &SystemModel<T>,
    channel: &ChannelModel<T>,
    l0: usize,
    tol: T,
) -> Result<FixedLengthCost<T>> {
    if system.state_dim() == 1 {
        return analytic_fixed_cost(system, channel, l0, tol);
    }
    if l0 == 0 {
        return Err(Error::Domain("packet length must be >= 1".into()));
    }
    let g = channel.error_prob(l0)?;
    let beta = g * system.rho().powi(2 * l0 as i32);
    if beta >= T::one() {
        return Err(Error::Divergence(format!(
            "fixed length {l0} cannot stabilize: g(l0) rho^(2 l0) = {beta} >= 1"
        )));
    }
    let n = (40 * l0).max(200);
    let eval = |n: usize| -> Result<T> {
        let spec = SmdpSpec::new(system.clone(), channel.clone(), n, l0)?;
        spec.evaluate_policy(&Policy::fixed(l0, n)?)
    };
    let coarse = eval(n)?;
    let fine = eval(2 * n)?;
    Ok(FixedLengthCost {
        l0,
        j: fine,
        terms_used: 2 * n,
        truncation_error_bound: (fine - coarse).abs(),
        semi_analytic: true,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::Matrix;

    fn paper_system() -> SystemModel<f64> {
        SystemModel::scalar(1.2, 1.0, 1.0, 1.0, 80).unwrap()
    }

    fn paper_channel() -> ChannelModel<f64> {
        ChannelModel::exponential(0.8, 0.5).unwrap()
    }

    #[test]
    fn near_perfect_channel_pins_aoi() {
        // g -> 0 with l0 = 1 keeps the AoI at 1, so J -> Tr(Q H(1)) = 1
        let ch = ChannelModel::table(vec![1e-12]);
        let out = analytic_fixed_cost(&paper_system(), &ch, 1, 1e-12).unwrap();
        assert!((out.j - 1.0).abs() < 1e-9, "J = {}", out.j);
    }

    #[test]
    fn paper_fixed_costs() {
        // frozen from exact rational evaluation of the renewal series
        let expected = [
            (2usize, 17.953095684803003),
            (3, 18.005672884425945),
            (4, 26.655923734929047),
            (5, 43.4218087051202),
        ];
        for (l0, j) in expected {
            let out = analytic_fixed_cost(&paper_system(), &paper_channel(), l0, 1e-12).unwrap();
            assert!(
                (out.j - j).abs() < 1e-8,
                "l0={l0}: {} vs {j}",
                out.j
            );
            assert!(out.truncation_error_bound <= 1e-12);
            assert!(!out.semi_analytic);
        }
    }

    #[test]
    fn unstable_length_diverges() {
        let err = analytic_fixed_cost(&paper_system(), &paper_channel(), 1, 1e-10).unwrap_err();
        assert!(matches!(err, Error::Divergence(_)));
    }

    #[test]
    fn oracle_agrees_with_policy_evaluation() {
        // two fully independent routes to the same stationary ratio
        let system = SystemModel::scalar(1.2, 1.0, 1.0, 1.0, 410).unwrap();
        for l0 in 2..=5 {
            let analytic = analytic_fixed_cost(&system, &paper_channel(), l0, 1e-12)
                .unwrap()
                .j;
            let spec =
                SmdpSpec::new(system.clone(), paper_channel(), 400, l0).unwrap();
            let eval = spec.evaluate_policy(&Policy::fixed(l0, 400).unwrap()).unwrap();
            assert!(
                ((analytic - eval) / analytic).abs() < 1e-6,
                "l0={l0}: {analytic} vs {eval}"
            );
        }
    }

    #[test]
    fn pmf_examples_and_normalization() {
        let (pmf, tail) = aoi_stationary_pmf(&paper_channel(), 3, 40).unwrap();
        assert!((pmf[0] - 0.8).abs() < 1e-15);
        assert!((pmf[1] - 0.16).abs() < 1e-15);
        let total: f64 = pmf.iter().sum::<f64>() + tail;
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sandwich_bounds_hold() {
        // Tr(Q H(d)) <= c(d,l) <= l Tr(Q H(d+l)) applied term by term to the
        // stationary series brackets the oracle value
        let sys = paper_system();
        let ch = paper_channel();
        for l0 in 2..=5usize {
            let j = analytic_fixed_cost(&sys, &ch, l0, 1e-12).unwrap().j;
            let g: f64 = ch.error_prob(l0).unwrap();
            let mut lower = 0.0;
            let mut upper = 0.0;
            let mut weight = 1.0 - g;
            for i in 1..400 {
                let d = i * l0;
                lower += weight * sys.slot_cost(d).unwrap();
                upper += weight * l0 as f64 * sys.slot_cost(d + l0).unwrap();
                weight *= g;
                if weight * sys.slot_cost(d + 2 * l0).unwrap() < 1e-12 {
                    break;
                }
            }
            lower /= l0 as f64;
            upper /= l0 as f64;
            assert!(lower <= j && j <= upper, "l0={l0}: {lower} <= {j} <= {upper}");
        }
    }

    #[test]
    fn marginal_plant_uses_arithmetic_form() {
        // rho = 1: H(j) = j, stage costs are arithmetic sums
        let sys = SystemModel::scalar(1.0, 1.0, 1.0, 1.0, 410).unwrap();
        let ch = paper_channel();
        let out = analytic_fixed_cost(&sys, &ch, 3, 1e-12).unwrap();
        let spec = SmdpSpec::new(sys.clone(), ch, 400, 3).unwrap();
        let eval = spec.evaluate_policy(&Policy::fixed(3, 400).unwrap()).unwrap();
        assert!(((out.j - eval) / eval).abs() < 1e-9, "{} vs {eval}", out.j);
    }

    #[test]
    fn deadbeat_plant_costs_one_slot() {
        // A = 0 keeps H(d) = R at every age
        let sys = SystemModel::scalar(0.0, 1.0, 2.5, 3.0, 20).unwrap();
        let out = analytic_fixed_cost(&sys, &paper_channel(), 2, 1e-12).unwrap();
        assert!((out.j - 7.5).abs() < 1e-9);
    }

    #[test]
    fn matrix_plants_fall_back_to_semi_analytic() {
        let a = Matrix::from_rows(&[vec![0.9, 0.3], vec![0.0, 0.8]]).unwrap();
        let sys = SystemModel::new(
            a.clone(),
            Matrix::<f64>::identity(2),
            a.scale(-1.0),
            Matrix::<f64>::identity(2),
            Matrix::<f64>::identity(2),
            210,
        )
        .unwrap();
        let ch = paper_channel();
        let out = fixed_length_cost(&sys, &ch, 2, 1e-9).unwrap();
        assert!(out.semi_analytic);
        assert!(out.j.is_finite());
        assert!(out.truncation_error_bound < 1e-6 * out.j);
        // strict route refuses the matrix plant
        assert!(matches!(
            analytic_fixed_cost(&sys, &ch, 2, 1e-9),
            Err(Error::Domain(_))
        ));
        // dispatcher and strict route agree on scalars
        let s = paper_system();
        let a = fixed_length_cost(&s, &ch, 3, 1e-12).unwrap();
        let b = analytic_fixed_cost(&s, &ch, 3, 1e-12).unwrap();
        assert_eq!(a.j, b.j);
    }
}
