//! Unconstrained reparameterization of stationary AR (and invertible MA)
//! coefficients through partial autocorrelations: unbounded reals map through
//! tanh to partial autocorrelations in (-1, 1), and the Levinson recursion
//! maps those to coefficients of a polynomial with all roots outside the
//! unit circle.

use crate::error::{Error, Result};

/// Levinson step: partial autocorrelations -> AR coefficients of
/// `1 - phi_1 z - ... - phi_p z^p` (stationary by construction).
pub(crate) fn pacf_to_coeffs(r: &[f64]) -> Vec<f64> {
    let p = r.len();
    let mut a = vec![0.0; p];
    for k in 0..p {
        let rk = r[k];
        let prev = a[..k].to_vec();
        for j in 0..k {
            a[j] = prev[j] - rk * prev[k - 1 - j];
        }
        a[k] = rk;
    }
    a
}

/// Inverse Levinson step; errors when the input is not strictly stationary.
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn coeffs_to_pacf(phi: &[f64]) -> Result<Vec<f64>> {
    let p = phi.len();
    let mut a = phi.to_vec();
    let mut r = vec![0.0; p];
    for k in (0..p).rev() {
        let rk = a[k];
        if rk.abs() >= 1.0 || rk.is_nan() {
            return Err(Error::InvalidParameter {
                detail: format!("coefficients are not stationary (partial correlation {rk})"),
            });
        }
        r[k] = rk;
        if k > 0 {
            let denom = 1.0 - rk * rk;
            let prev = a[..k].to_vec();
            for j in 0..k {
                a[j] = (prev[j] + rk * prev[k - 1 - j]) / denom;
            }
        }
    }
    Ok(r)
}

pub(crate) fn unconstrained_to_stationary(z: &[f64]) -> Vec<f64> {
    let r: Vec<f64> = z.iter().map(|v| v.tanh()).collect();
    pacf_to_coeffs(&r)
}

#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn stationary_to_unconstrained(phi: &[f64]) -> Result<Vec<f64>> {
    Ok(coeffs_to_pacf(phi)?
        .iter()
        .map(|&r| 0.5 * ((1.0 + r) / (1.0 - r)).ln())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_recovers_stationary_vectors() {
        let cases: Vec<Vec<f64>> = vec![
            vec![0.5],
            vec![0.5, -0.3],
            vec![1.2, -0.5, 0.1],
            vec![0.2, 0.2, 0.2, 0.2],
        ];
        for phi in cases {
            let z = stationary_to_unconstrained(&phi).unwrap();
            let back = unconstrained_to_stationary(&z);
            for (a, b) in phi.iter().zip(&back) {
                assert!((a - b).abs() < 1e-10, "{phi:?} -> {back:?}");
            }
        }
    }

    #[test]
    fn forward_map_is_always_stationary() {
        // companion-matrix spectral radius below one for assorted inputs
        let cases: Vec<Vec<f64>> = vec![
            vec![3.0],
            vec![-5.0, 4.0],
            vec![2.0, 2.0, 2.0],
            vec![0.0, 0.0, 0.0, 10.0],
        ];
        for z in cases {
            let phi = unconstrained_to_stationary(&z);
            assert!(max_root_modulus_inverse(&phi) < 1.0, "{z:?} -> {phi:?}");
        }
    }

    #[test]
    fn rejects_nonstationary_input() {
        assert!(stationary_to_unconstrained(&[1.0]).is_err());
        assert!(stationary_to_unconstrained(&[0.8, 0.5]).is_err());
    }

    /// Largest modulus among the eigenvalue magnitudes of the companion
    /// matrix of `1 - phi_1 z - ...` (power iteration on the companion form);
    /// below 1 means all polynomial roots lie outside the unit circle.
    fn max_root_modulus_inverse(phi: &[f64]) -> f64 {
        let p = phi.len();
        let mut v = vec![1.0; p];
        let mut lambda = 0.0;
        for _ in 0..500 {
            let mut w = vec![0.0; p];
            w[0] = phi.iter().zip(&v).map(|(p, v)| p * v).sum();
            w[1..p].copy_from_slice(&v[..p - 1]);
            lambda = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if lambda == 0.0 {
                return 0.0;
            }
            for x in &mut w {
                *x /= lambda;
            }
            v = w;
        }
        lambda
    }
}
