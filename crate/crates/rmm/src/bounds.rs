//! Closed-form bound calculators for connection probabilities and moments
//! of the merge process. Each function validates its domain and returns the
//! bound value; the verification suite compares them against exact values
//! from the enumeration oracle or against Monte Carlo estimates.

use crate::engine::MassVector;
use crate::Error;

/// Explicit constant in the triple/quadruple connectivity bounds (5!).
pub const MULTI_CONNECTIVITY_CONST: f64 = 120.0;

/// Assembled constant for the fourth-power moment sum bound. The chain
/// behind it bounds `sum_k E X_k^4` by five terms whose coefficients are
/// 1, 12, 6, 12 * 120 and 120; pulling everything over the common
/// denominator `(1 - t ||x||^2)^5` and using `t ||x||^2 < 1` gives
/// `1 + 12 + 6 + 1440 + 120 = 1579`.
pub const FOURTH_NORM_CONST: f64 = 1579.0;

fn check_subcritical(x: &MassVector, t: f64) -> Result<f64, Error> {
    let n2 = x.norm_sq();
    if t <= 0.0 || t * n2 >= 1.0 {
        return Err(Error::Domain(format!(
            "need 0 < t < 1/||x||^2, got t = {t}, ||x||^2 = {n2}"
        )));
    }
    Ok(n2)
}

/// Upper bound on `P{i ~ j}`: `x_i x_j t / (1 - t ||x||^2)`.
pub fn pair_connectivity_bound(
    x: &MassVector,
    t: f64,
    i: usize,
    j: usize,
) -> Result<f64, Error> {
    let n2 = check_subcritical(x, t)?;
    Ok(x.mass(i) * x.mass(j) * t / (1.0 - t * n2))
}

/// Upper bound on `P{i ~ j}` when only edges straddling the cut at `m` are
/// admissible. The numerator factor depends on which side of the cut the
/// endpoints sit: `t^2 * tail` for both below, `t^2 * head` for both above,
/// plain `t` for a mixed pair.
pub fn cross_connectivity_bound(
    x: &MassVector,
    t: f64,
    m: usize,
    i: usize,
    j: usize,
) -> Result<f64, Error> {
    let head_sq = x.head_truncate(m).norm_sq();
    let tail_sq = x.tail_shift(m).norm_sq();
    let prod = (head_sq * tail_sq).sqrt();
    if t <= 0.0 || t * prod >= 1.0 {
        return Err(Error::Domain(format!(
            "need 0 < t < 1/(||head|| ||tail||), got t = {t}, product = {prod}"
        )));
    }
    let kappa = if i <= m && j <= m {
        t * t * tail_sq
    } else if i > m && j > m {
        t * t * head_sq
    } else {
        t
    };
    Ok(x.mass(i) * x.mass(j) * kappa / (1.0 - t * t * head_sq * tail_sq))
}

/// `P_t(s) = 2 + (4t + 2t^2) s + 2 t^2 s^2`, the polynomial controlling the
/// excess squared norm created by cut-straddling edges.
pub fn tail_polynomial(t: f64, s: f64) -> f64 {
    assert!(t >= 0.0 && s >= 0.0);
    2.0 + (4.0 * t + 2.0 * t * t) * s + 2.0 * t * t * s * s
}

/// Upper bound on the probability that 3 (or 4) distinct vertices all lie
/// in one component: `120 * prod x_i * t^{3/2} / (1 - t ||x||^2)^3` for a
/// triple, `120 * prod x_i * t^2 / (1 - t ||x||^2)^5` for a quadruple.
pub fn multi_connectivity_bound(
    x: &MassVector,
    t: f64,
    indices: &[usize],
) -> Result<f64, Error> {
    let n2 = check_subcritical(x, t)?;
    let mut sorted = indices.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != indices.len() {
        return Err(Error::Domain("indices must be distinct".into()));
    }
    let mass_product: f64 = indices.iter().map(|&i| x.mass(i)).product();
    let denom = 1.0 - t * n2;
    match indices.len() {
        3 => Ok(MULTI_CONNECTIVITY_CONST * mass_product * t.powf(1.5) / denom.powi(3)),
        4 => Ok(MULTI_CONNECTIVITY_CONST * mass_product * t * t / denom.powi(5)),
        k => Err(Error::Domain(format!(
            "bound defined for 3 or 4 indices, got {k}"
        ))),
    }
}

/// Upper bound on `sum_k E X_k^4(t)`:
/// `1579 * ||x||^4 / (1 - t ||x||^2)^5`.
pub fn fourth_norm_bound(x: &MassVector, t: f64) -> Result<f64, Error> {
    let n2 = check_subcritical(x, t)?;
    Ok(FOURTH_NORM_CONST * n2 * n2 / (1.0 - t * n2).powi(5))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_bound_values() {
        let x = MassVector::new(vec![0.5, 0.5, 0.5]);
        let b = pair_connectivity_bound(&x, 1.0, 1, 2).unwrap();
        assert!((b - 1.0).abs() < 1e-14); // 0.25 / (1 - 0.75)
        let tiny = pair_connectivity_bound(&x, 1e-9, 1, 2).unwrap();
        assert!(tiny < 1e-8);
        let with_zero = MassVector::new(vec![0.0, 0.5]);
        assert_eq!(pair_connectivity_bound(&with_zero, 1.0, 1, 2).unwrap(), 0.0);
        assert!(pair_connectivity_bound(&x, 2.0, 1, 2).is_err());
    }

    #[test]
    fn cross_bound_case_table() {
        let x = MassVector::new(vec![0.6, 0.5, 0.4, 0.3]);
        let m = 2;
        let t = 0.5;
        let head = x.head_truncate(m).norm_sq();
        let tail = x.tail_shift(m).norm_sq();
        let denom = 1.0 - t * t * head * tail;
        let below = cross_connectivity_bound(&x, t, m, 1, 2).unwrap();
        assert!((below - 0.6 * 0.5 * t * t * tail / denom).abs() < 1e-15);
        let above = cross_connectivity_bound(&x, t, m, 3, 4).unwrap();
        assert!((above - 0.4 * 0.3 * t * t * head / denom).abs() < 1e-15);
        let mixed = cross_connectivity_bound(&x, t, m, 1, 3).unwrap();
        assert!((mixed - 0.6 * 0.4 * t / denom).abs() < 1e-15);
        let zero = MassVector::new(vec![0.0, 0.5, 0.4]);
        assert_eq!(cross_connectivity_bound(&zero, t, 1, 1, 3).unwrap(), 0.0);
    }

    #[test]
    fn tail_polynomial_values() {
        assert_eq!(tail_polynomial(0.0, 3.0), 2.0);
        assert_eq!(tail_polynomial(5.0, 0.0), 2.0);
        assert_eq!(tail_polynomial(1.0, 1.0), 10.0);
    }

    #[test]
    fn multi_bound_shapes() {
        let x = MassVector::new(vec![0.5, 0.5, 0.5, 0.5]);
        let t = 0.4;
        let denom = 1.0 - t * x.norm_sq();
        let triple = multi_connectivity_bound(&x, t, &[1, 2, 3]).unwrap();
        assert!((triple - 120.0 * 0.125 * t.powf(1.5) / denom.powi(3)).abs() < 1e-12);
        let quad = multi_connectivity_bound(&x, t, &[1, 2, 3, 4]).unwrap();
        assert!((quad - 120.0 * 0.0625 * t * t / denom.powi(5)).abs() < 1e-12);
        let zero = MassVector::new(vec![0.0, 0.5, 0.5, 0.5]);
        assert_eq!(multi_connectivity_bound(&zero, t, &[1, 2, 3]).unwrap(), 0.0);
        assert!(multi_connectivity_bound(&x, t, &[1, 2]).is_err());
        assert!(multi_connectivity_bound(&x, t, &[1, 1, 2]).is_err());
    }

    #[test]
    fn fourth_norm_bound_scaling() {
        let x = MassVector::new(vec![1.0]);
        let b = fourth_norm_bound(&x, 0.1).unwrap();
        assert!((b - FOURTH_NORM_CONST / 0.9f64.powi(5)).abs() < 1e-9);
        // Pole as t approaches 1/||x||^2.
        assert!(fourth_norm_bound(&x, 0.999).unwrap() > fourth_norm_bound(&x, 0.99).unwrap());
        assert!(fourth_norm_bound(&x, 1.0).is_err());
    }
}
