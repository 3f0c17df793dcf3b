use num_traits::{One, Zero};

use super::SmtError;
use crate::Rational;

/// Whether `Σ_i w_i^n u_i = 0` for `n = 0, …, ℓ-1`.
///
/// With pairwise distinct `w_i` the system matrix is an invertible
/// Vandermonde matrix, so a `true` answer forces every `u_i` to be zero;
/// this is asserted on the way out.
pub fn vandermonde_zero_check(ws: &[Rational], us: &[Rational]) -> Result<bool, SmtError> {
    assert_eq!(ws.len(), us.len(), "one coefficient per root");
    for i in 0..ws.len() {
        for j in i + 1..ws.len() {
            if ws[i] == ws[j] {
                return Err(SmtError::DuplicateRoot(ws[i].to_string()));
            }
        }
    }
    let mut powers: Vec<Rational> = vec![Rational::one(); ws.len()];
    for _ in 0..ws.len() {
        let sum: Rational = powers.iter().zip(us).map(|(p, u)| p * u).sum();
        if !sum.is_zero() {
            return Ok(false);
        }
        for (p, w) in powers.iter_mut().zip(ws) {
            *p *= w;
        }
    }
    assert!(us.iter().all(Zero::is_zero), "distinct roots admit only the zero solution");
    Ok(true)
}

/// `Π_{i<j} (w_j - w_i)`, the Vandermonde determinant.
pub fn vandermonde_det(ws: &[Rational]) -> Rational {
    let mut d = Rational::one();
    for i in 0..ws.len() {
        for j in i + 1..ws.len() {
            d *= &ws[j] - &ws[i];
        }
    }
    d
}
