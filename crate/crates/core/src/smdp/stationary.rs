//! Stationary distributions of finite Markov chains.
//!
//! The semi-MDP evaluation needs stationary probabilities that are accurate
//! in a componentwise-relative sense: the chain mixes fast but its costs grow
//! geometrically, so a probability of 1e-60 still carries weight. Plain LU on
//! `(P^T - I)` destroys those components; the Grassmann-Taksar-Heyman state
//! reduction involves no subtraction and keeps every component accurate.

use crate::error::{Error, Result};
use crate::num::Real;

/// Sparse row representation: `(target, probability)` with 0-based targets.
pub type Row<T> = Vec<(usize, T)>;

/// Stationary distribution over all states of a unichain transition matrix.
///
/// Transient states get probability zero. Fails with a structure error when
/// the chain has no unique stationary distribution (more than one closed
/// communicating class) or a row is not a probability distribution.
pub fn stationary_distribution<T: Real>(rows: &[Row<T>]) -> Result<Vec<T>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Structure("empty chain".into()));
    }
    for (i, row) in rows.iter().enumerate() {
        let sum: T = row.iter().map(|&(_, p)| p).sum();
        if (sum - T::one()).abs() > T::of(1e-9) {
            return Err(Error::Structure(format!(
                "row {i} sums to {sum}, not a probability distribution"
            )));
        }
        if let Some(&(j, _)) = row.iter().find(|&&(j, _)| j >= n) {
            return Err(Error::Structure(format!(
                "row {i} targets out-of-range state {j}"
            )));
        }
    }

    let classes = closed_classes(rows);
    let class = match classes.len() {
        1 => &classes[0],
        k => {
            return Err(Error::Structure(format!(
                "chain has {k} closed communicating classes; stationary distribution is not unique"
            )))
        }
    };

    let phi_class = gth(rows, class)?;
    let mut phi = vec![T::zero(); n];
    for (&s, &p) in class.iter().zip(&phi_class) {
        phi[s] = p;
    }
    Ok(phi)
}

/// Strongly connected components with no outgoing edges (recurrent classes).
fn closed_classes<T: Real>(rows: &[Row<T>]) -> Vec<Vec<usize>> {
    let n = rows.len();
    // Kosaraju: forward DFS finish order, then reverse-graph DFS.
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    for start in 0..n {
        if seen[start] {
            continue;
        }
        // iterative DFS with an explicit edge cursor
        let mut stack = vec![(start, 0usize)];
        seen[start] = true;
        while let Some(&mut (v, ref mut cursor)) = stack.last_mut() {
            let mut advanced = false;
            while *cursor < rows[v].len() {
                let (w, p) = rows[v][*cursor];
                *cursor += 1;
                if p > T::zero() && !seen[w] {
                    seen[w] = true;
                    stack.push((w, 0));
                    advanced = true;
                    break;
                }
            }
            if !advanced {
                order.push(v);
                stack.pop();
            }
        }
    }
    let mut reverse: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, row) in rows.iter().enumerate() {
        for &(w, p) in row {
            if p > T::zero() {
                reverse[w].push(v);
            }
        }
    }
    let mut comp = vec![usize::MAX; n];
    let mut n_comp = 0;
    for &start in order.iter().rev() {
        if comp[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        comp[start] = n_comp;
        while let Some(v) = stack.pop() {
            for &w in &reverse[v] {
                if comp[w] == usize::MAX {
                    comp[w] = n_comp;
                    stack.push(w);
                }
            }
        }
        n_comp += 1;
    }
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for (v, &c) in comp.iter().enumerate() {
        members[c].push(v);
    }
    let mut closed = Vec::new();
    for (c, m) in members.iter().enumerate() {
        let leaks = m.iter().any(|&v| {
            rows[v]
                .iter()
                .any(|&(w, p)| p > T::zero() && comp[w] != c)
        });
        if !leaks {
            closed.push(m.clone());
        }
    }
    closed
}

/// GTH state reduction on the chain restricted to `class` (which must be
/// closed and irreducible). Subtraction-free, so every component of the
/// result has small relative error.
fn gth<T: Real>(rows: &[Row<T>], class: &[usize]) -> Result<Vec<T>> {
    let m = class.len();
    let index: std::collections::HashMap<usize, usize> =
        class.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let mut p = vec![T::zero(); m * m];
    for (i, &s) in class.iter().enumerate() {
        for &(w, prob) in &rows[s] {
            if let Some(&j) = index.get(&w) {
                p[i * m + j] = p[i * m + j] + prob;
            }
        }
    }
    for k in (1..m).rev() {
        let s: T = (0..k).map(|j| p[k * m + j]).sum();
        if s <= T::zero() {
            return Err(Error::Structure(
                "state reduction hit a zero pivot; recurrent class is not irreducible".into(),
            ));
        }
        for i in 0..k {
            p[i * m + k] = p[i * m + k] / s;
        }
        for i in 0..k {
            let f = p[i * m + k];
            if f != T::zero() {
                for j in 0..k {
                    p[i * m + j] = p[i * m + j] + f * p[k * m + j];
                }
            }
        }
    }
    let mut phi = vec![T::zero(); m];
    phi[0] = T::one();
    for k in 1..m {
        let mut s = T::zero();
        for i in 0..k {
            s = s + phi[i] * p[i * m + k];
        }
        phi[k] = s;
    }
    let total: T = phi.iter().copied().sum();
    Ok(phi.into_iter().map(|v| v / total).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_state_chain() {
        let rows: Vec<Row<f64>> = vec![vec![(0, 0.9), (1, 0.1)], vec![(0, 0.4), (1, 0.6)]];
        let phi = stationary_distribution(&rows).unwrap();
        assert!((phi[0] - 0.8).abs() < 1e-15);
        assert!((phi[1] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn periodic_cycle() {
        let rows: Vec<Row<f64>> = vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![(0, 1.0)]];
        let phi = stationary_distribution(&rows).unwrap();
        for p in phi {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn transient_states_get_zero() {
        // 0 leaks into the closed class {1, 2}
        let rows: Vec<Row<f64>> = vec![
            vec![(0, 0.5), (1, 0.5)],
            vec![(1, 0.2), (2, 0.8)],
            vec![(1, 0.7), (2, 0.3)],
        ];
        let phi = stationary_distribution(&rows).unwrap();
        assert_eq!(phi[0], 0.0);
        assert!((phi.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        // balance check: phi restricted to {1,2} is stationary
        assert!((phi[1] - (phi[1] * 0.2 + phi[2] * 0.7)).abs() < 1e-14);
    }

    #[test]
    fn two_closed_classes_is_an_error() {
        let rows: Vec<Row<f64>> = vec![vec![(0, 1.0)], vec![(1, 1.0)]];
        assert!(matches!(
            stationary_distribution(&rows),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn bad_row_sum_is_an_error() {
        let rows: Vec<Row<f64>> = vec![vec![(0, 0.5)]];
        assert!(matches!(
            stationary_distribution(&rows),
            Err(Error::Structure(_))
        ));
    }

    #[test]
    fn geometric_renewal_chain_componentwise_accuracy() {
        // success resets to 0, failure climbs: phi(i) = (1-g) g^i, clamped tail
        let g = 0.2f64;
        let n = 200;
        let mut rows: Vec<Row<f64>> = Vec::new();
        for i in 0..n {
            let up = (i + 1).min(n - 1);
            rows.push(vec![(0, 1.0 - g), (up, g)]);
        }
        let phi = stationary_distribution(&rows).unwrap();
        for (i, &p) in phi.iter().enumerate().take(150) {
            let expect = (1.0 - g) * g.powi(i as i32);
            let rel = (p - expect).abs() / expect;
            assert!(rel < 1e-12, "i={i} rel={rel}");
        }
    }
}
