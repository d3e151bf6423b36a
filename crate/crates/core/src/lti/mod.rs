//! LTI plant model and the control-cost kernel.
//!
//! The per-slot cost of running open loop for `d` slots is `Tr(Q H(d))` with
//! `H(d) = sum_{i=0}^{d-1} A^i R (A^i)^T`. A [`SystemModel`] validates the
//! plant matrices once and caches `H(d)` and `Tr(Q H(d))` up to a chosen
//! depth so the decision-process sweeps can hammer them.

mod eigen;
mod matrix;

pub use eigen::{eigenvalues, pd_sqrt, psd_sqrt, spectral_radius, symmetric_eigen};
pub use matrix::Matrix;

use crate::error::{Error, Result};
use crate::num::Real;

/// Absolute per-entry tolerance for the one-step controllability identity
/// `A + B K = 0`.
const GAIN_IDENTITY_TOL: f64 = 1e-9;

/// Relative threshold for the rank tests.
const RANK_TOL: f64 = 1e-10;

/// Validated plant `(A, B, K, R, Q)` with derived quantities.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemModel<T> {
    a: Matrix<T>,
    b: Matrix<T>,
    k: Matrix<T>,
    r: Matrix<T>,
    q: Matrix<T>,
    rho: T,
    sqrt_r: Matrix<T>,
    h_cache: Vec<Matrix<T>>,
    slot_cost_cache: Vec<T>,
}

/// Verdicts of the rank tests behind the stability verdicts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ControlObservability {
    pub controllable: bool,
    pub observable: bool,
}

impl<T: Real> SystemModel<T> {
    /// Validates the plant and eagerly builds the `H(d)` cache up to `d_max`.
    pub fn new(
        a: Matrix<T>,
        b: Matrix<T>,
        k: Matrix<T>,
        r: Matrix<T>,
        q: Matrix<T>,
        d_max: usize,
    ) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Dimension("A must be square".into()));
        }
        let n = a.rows();
        let m = b.cols();
        if b.rows() != n {
            return Err(Error::Dimension(format!(
                "B must have {n} rows, got {}",
                b.rows()
            )));
        }
        if k.rows() != m || k.cols() != n {
            return Err(Error::Dimension(format!(
                "K must be {m}x{n}, got {}x{}",
                k.rows(),
                k.cols()
            )));
        }
        for (name, mat) in [("R", &r), ("Q", &q)] {
            if mat.rows() != n || mat.cols() != n {
                return Err(Error::Dimension(format!(
                    "{name} must be {n}x{n}, got {}x{}",
                    mat.rows(),
                    mat.cols()
                )));
            }
            if !mat.is_symmetric(T::of(1e-9)) {
                return Err(Error::Definiteness(format!("{name} is not symmetric")));
            }
        }
        // one-step controllability identity
        let a_plus_bk = a.add(&b.mul(&k)?)?;
        let dev = a_plus_bk.max_abs();
        if dev > T::of(GAIN_IDENTITY_TOL) {
            return Err(Error::Domain(format!(
                "A + B K must vanish entrywise (max |entry| = {dev}, tolerance {GAIN_IDENTITY_TOL})"
            )));
        }
        let sqrt_r = pd_sqrt(&r, "R")?;
        psd_sqrt(&q, "Q")?;
        let rho = spectral_radius(&a)?;

        let mut model = SystemModel {
            a,
            b,
            k,
            r,
            q,
            rho,
            sqrt_r,
            h_cache: Vec::new(),
            slot_cost_cache: Vec::new(),
        };
        model.extend_cache(d_max.max(1))?;
        Ok(model)
    }

    /// Scalar plant with the gain derived from `A + B K = 0`.
    pub fn scalar(a: T, b: T, r: T, q: T, d_max: usize) -> Result<Self> {
        if b == T::zero() {
            return Err(Error::Domain("scalar B must be nonzero".into()));
        }
        Self::new(
            Matrix::scalar(a)?,
            Matrix::scalar(b)?,
            Matrix::scalar(-a / b)?,
            Matrix::scalar(r)?,
            Matrix::scalar(q)?,
            d_max,
        )
    }

    pub fn state_dim(&self) -> usize {
        self.a.rows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.cols()
    }

    pub fn a(&self) -> &Matrix<T> {
        &self.a
    }

    pub fn b(&self) -> &Matrix<T> {
        &self.b
    }

    pub fn k(&self) -> &Matrix<T> {
        &self.k
    }

    pub fn r(&self) -> &Matrix<T> {
        &self.r
    }

    pub fn q(&self) -> &Matrix<T> {
        &self.q
    }

    /// Spectral radius of `A`.
    pub fn rho(&self) -> T {
        self.rho
    }

    /// Symmetric square root of the disturbance covariance.
    pub fn sqrt_r(&self) -> &Matrix<T> {
        &self.sqrt_r
    }

    /// Largest `d` covered by the eager cache.
    pub fn cached_d_max(&self) -> usize {
        self.h_cache.len()
    }

    fn extend_cache(&mut self, d_max: usize) -> Result<()> {
        if self.h_cache.is_empty() {
            self.h_cache.push(self.r.clone());
            self.slot_cost_cache
                .push(self.q.mul(&self.r)?.trace());
        }
        while self.h_cache.len() < d_max {
            let prev = self.h_cache.last().unwrap();
            let next = self
                .a
                .mul(prev)?
                .mul(&self.a.transpose())?
                .add(&self.r)?;
            let cost = self.q.mul(&next)?.trace();
            if !cost.is_finite() {
                return Err(Error::Numeric(format!(
                    "Tr(Q H({})) overflowed while building the cost cache",
                    self.h_cache.len() + 1
                )));
            }
            self.h_cache.push(next);
            self.slot_cost_cache.push(cost);
        }
        Ok(())
    }

    /// `H(d)`; cached for `d <= cached_d_max`, recomputed on the fly beyond.
    pub fn h_matrix(&self, d: usize) -> Result<Matrix<T>> {
        if d == 0 {
            return Err(Error::Domain("H(d) needs d >= 1".into()));
        }
        if d <= self.h_cache.len() {
            return Ok(self.h_cache[d - 1].clone());
        }
        let mut h = self.h_cache.last().unwrap().clone();
        for _ in self.h_cache.len()..d {
            h = self.a.mul(&h)?.mul(&self.a.transpose())?.add(&self.r)?;
        }
        Ok(h)
    }

    /// `Tr(Q H(d))`, the cost of one slot spent at AoI `d`.
    pub fn slot_cost(&self, d: usize) -> Result<T> {
        if d == 0 {
            return Err(Error::Domain("slot cost needs d >= 1".into()));
        }
        if d <= self.slot_cost_cache.len() {
            return Ok(self.slot_cost_cache[d - 1]);
        }
        let h = self.h_matrix(d)?;
        let cost = self.q.mul(&h)?.trace();
        if !cost.is_finite() {
            return Err(Error::Numeric(format!("Tr(Q H({d})) overflowed")));
        }
        Ok(cost)
    }
}

/// Rank tests behind the stability verdicts: `(A, sqrt R)` controllable and
/// `(A, sqrt Q)` observable, both via the stacked matrices
/// `[sqrt(M), A sqrt(M), ..., A^n sqrt(M)]`.
pub fn check_controllable_observable<T: Real>(
    model: &SystemModel<T>,
) -> Result<ControlObservability> {
    let n = model.state_dim();
    let sqrt_q = psd_sqrt(model.q(), "Q")?;

    let controllable = stacked_rank(model.a(), model.sqrt_r())? == n;
    let observable = stacked_rank(&model.a().transpose(), &sqrt_q.transpose())? == n;
    Ok(ControlObservability {
        controllable,
        observable,
    })
}

fn stacked_rank<T: Real>(a: &Matrix<T>, block: &Matrix<T>) -> Result<usize> {
    let n = a.rows();
    let mut stack = block.clone();
    let mut term = block.clone();
    for _ in 0..n {
        term = a.mul(&term)?;
        stack = stack.hcat(&term)?;
    }
    Ok(stack.rank(T::of(RANK_TOL)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn paper_system() -> SystemModel<f64> {
        SystemModel::scalar(1.2, 1.0, 1.0, 1.0, 80).unwrap()
    }

    #[test]
    fn paper_scalar_system_derives() {
        let m = paper_system();
        assert_eq!(m.rho(), 1.2);
        assert_eq!(m.k().get(0, 0), -1.2);
    }

    #[test]
    fn h_matrix_examples() {
        let m = paper_system();
        assert!((m.h_matrix(1).unwrap().get(0, 0) - 1.0).abs() < 1e-15);
        assert!((m.h_matrix(2).unwrap().get(0, 0) - 2.44).abs() < 1e-12);
        assert!((m.h_matrix(3).unwrap().get(0, 0) - 4.5136).abs() < 1e-12);
        assert!(matches!(m.h_matrix(0), Err(Error::Domain(_))));
    }

    #[test]
    fn slot_cost_examples() {
        let m = paper_system();
        assert!((m.slot_cost(1).unwrap() - 1.0).abs() < 1e-15);
        assert!((m.slot_cost(2).unwrap() - 2.44).abs() < 1e-12);
        // zero cost weight
        let z = SystemModel::new(
            Matrix::from_rows(&[vec![0.5, 1.0], vec![0.0, 0.5]]).unwrap(),
            Matrix::<f64>::identity(2),
            Matrix::from_rows(&[vec![-0.5, -1.0], vec![0.0, -0.5]]).unwrap(),
            Matrix::<f64>::identity(2),
            Matrix::<f64>::zeros(2, 2),
            10,
        )
        .unwrap();
        for d in 1..=8 {
            assert_eq!(z.slot_cost(d).unwrap(), 0.0);
        }
    }

    #[test]
    fn recursion_consistency_and_symmetry() {
        let a = Matrix::from_rows(&[vec![1.1, 0.3], vec![-0.2, 0.9]]).unwrap();
        let b = Matrix::<f64>::identity(2);
        let k = a.scale(-1.0);
        let r = Matrix::from_rows(&[vec![1.0, 0.2], vec![0.2, 2.0]]).unwrap();
        let q = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 3.0]]).unwrap();
        let m = SystemModel::new(a.clone(), b, k, r.clone(), q, 210).unwrap();
        for d in 1..=200 {
            let h = m.h_matrix(d).unwrap();
            assert!(h.is_symmetric(1e-12 * h.max_abs().max(1.0)));
            let next = m.h_matrix(d + 1).unwrap();
            let rec = a.mul(&h).unwrap().mul(&a.transpose()).unwrap().add(&r).unwrap();
            let scale = next.max_abs().max(1.0);
            assert!(
                next.max_abs_diff(&rec).unwrap() <= 1e-9 * scale,
                "recursion breaks at d={d}"
            );
        }
    }

    #[test]
    fn slot_cost_strictly_increasing() {
        let m = paper_system();
        for d in 1..=150 {
            assert!(m.slot_cost(d + 1).unwrap() > m.slot_cost(d).unwrap());
        }
    }

    #[test]
    fn scalar_growth_rate_limit() {
        // slot_cost(d) * (rho^2 - 1) / rho^(2d) -> 1 for scalar unstable plants
        let m = paper_system();
        let rho2 = 1.44f64;
        let d = 50;
        let val = m.slot_cost(d).unwrap() * (rho2 - 1.0) / rho2.powi(d as i32);
        assert!((val - 1.0).abs() < 1e-6, "got {val}");
    }

    #[test]
    fn beyond_cache_is_consistent() {
        let small = SystemModel::<f64>::scalar(1.2, 1.0, 1.0, 1.0, 5).unwrap();
        let large = SystemModel::scalar(1.2, 1.0, 1.0, 1.0, 40).unwrap();
        for d in 1..=30 {
            let a = small.slot_cost(d).unwrap();
            let b = large.slot_cost(d).unwrap();
            assert!((a - b).abs() <= 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn gain_identity_is_enforced() {
        let bad = SystemModel::new(
            Matrix::scalar(1.2).unwrap(),
            Matrix::scalar(1.0).unwrap(),
            Matrix::scalar(-1.1).unwrap(),
            Matrix::scalar(1.0).unwrap(),
            Matrix::scalar(1.0).unwrap(),
            10,
        );
        assert!(matches!(bad, Err(Error::Domain(_))));
    }

    #[test]
    fn controllability_examples() {
        let m = paper_system();
        let co = check_controllable_observable(&m).unwrap();
        assert!(co.controllable && co.observable);

        // R must be positive definite
        let bad = SystemModel::new(
            Matrix::<f64>::identity(2),
            Matrix::<f64>::identity(2),
            Matrix::<f64>::identity(2).scale(-1.0),
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap(),
            Matrix::<f64>::identity(2),
            5,
        );
        assert!(matches!(bad, Err(Error::Definiteness(_))));

        // explicit 2x2 rank computation
        let a = Matrix::from_rows(&[vec![1.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let sys = SystemModel::new(
            a.clone(),
            Matrix::<f64>::identity(2),
            a.scale(-1.0),
            Matrix::<f64>::identity(2),
            Matrix::<f64>::identity(2),
            5,
        )
        .unwrap();
        let co = check_controllable_observable(&sys).unwrap();
        assert!(co.controllable && co.observable);
    }

    #[test]
    fn unobservable_weight_detected() {
        // Q projects onto a coordinate the uncoupled dynamics never rotate into
        let a = Matrix::from_rows(&[vec![0.5, 0.0], vec![0.0, 0.7]]).unwrap();
        let sys = SystemModel::new(
            a.clone(),
            Matrix::<f64>::identity(2),
            a.scale(-1.0),
            Matrix::<f64>::identity(2),
            Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap(),
            5,
        )
        .unwrap();
        let co = check_controllable_observable(&sys).unwrap();
        assert!(co.controllable);
        assert!(!co.observable);
    }
}
