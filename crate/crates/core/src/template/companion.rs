use crate::algebra::{Polynomial, SymMatrix};
use crate::scalar::Scalar;

use super::TemplateError;

/// First-order embedding of `c_r x(n+r) + c_{r-1} x(n+r-1) + … + c_0 x(n) = 0`.
///
/// `coeffs` lists `c_0, …, c_r` with `c_r = 1`. The state vector is
/// `(x(n), …, x(n+r-1))`; the matrix shifts it by one step.
pub fn companion_embedding<C: Scalar>(coeffs: &[C]) -> Result<SymMatrix<C>, TemplateError> {
    if coeffs.len() < 2 {
        return Err(TemplateError::Companion("order must be at least 1".into()));
    }
    let r = coeffs.len() - 1;
    if !(coeffs[r].clone() - C::one()).is_negligible() {
        return Err(TemplateError::Companion("leading coefficient must be 1".into()));
    }
    if coeffs[0].is_negligible() {
        return Err(TemplateError::Companion(
            "trailing coefficient is zero; the embedding would be singular".into(),
        ));
    }
    Ok(SymMatrix::from_fn(r, r, |i, j| {
        if i + 1 < r {
            if j == i + 1 {
                Polynomial::one()
            } else {
                Polynomial::zero()
            }
        } else {
            Polynomial::constant(-coeffs[j].clone())
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::Rational;

    fn q(v: i64) -> Rational {
        Rational::from_integer(v.into())
    }

    #[test]
    fn order_one() {
        let m = companion_embedding(&[q(-5), q(1)]).unwrap();
        assert_eq!(m.to_string(), "[[5]]");
    }

    #[test]
    fn rejects_bad_input() {
        assert!(companion_embedding::<Rational>(&[]).is_err());
        assert!(companion_embedding(&[q(1)]).is_err());
        assert!(companion_embedding(&[q(0), q(1)]).is_err());
        assert!(companion_embedding(&[q(1), q(2)]).is_err());
    }

    #[test]
    fn works_over_floats() {
        let m = companion_embedding(&[-1.0f64, -1.0, 1.0]).unwrap();
        assert_eq!(m.to_string(), "[[0, 1], [1, 1]]");
    }
}
