use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Solves `lower[i] x[i-1] + diag[i] x[i] + upper[i] x[i+1] = rhs[i]` in place
/// (Thomas algorithm); `lower[0]` and `upper[last]` are ignored.
pub fn solve_tridiagonal<T: Scalar>(lower: &[T], diag: &[T], upper: &[T], rhs: &mut [T]) -> Result<()> {
    let n = diag.len();
    if lower.len() != n || upper.len() != n || rhs.len() != n {
        return Err(Error::Config("tridiagonal system with mismatched lengths".into()));
    }
    if n == 0 {
        return Ok(());
    }
    let mut c = vec![T::zero(); n];
    let mut beta = diag[0];
    if beta == T::zero() || !beta.is_finite() {
        return Err(Error::Tridiagonal { row: 0 });
    }
    rhs[0] = rhs[0] / beta;
    for i in 1..n {
        c[i - 1] = upper[i - 1] / beta;
        beta = diag[i] - lower[i] * c[i - 1];
        if beta == T::zero() || !beta.is_finite() {
            return Err(Error::Tridiagonal { row: i });
        }
        rhs[i] = (rhs[i] - lower[i] * rhs[i - 1]) / beta;
    }
    for i in (0..n - 1).rev() {
        rhs[i] = rhs[i] - c[i] * rhs[i + 1];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_small_system() {
        let lower = [0.0, -1.0, -1.0];
        let diag = [2.0, 2.0, 2.0];
        let upper = [-1.0, -1.0, 0.0];
        let mut rhs = [1.0f64, 0.0, 1.0];
        solve_tridiagonal(&lower, &diag, &upper, &mut rhs).unwrap();
        for x in rhs {
            assert!((x - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn zero_pivot_reported() {
        let mut rhs = [1.0, 1.0];
        let err = solve_tridiagonal(&[0.0, 1.0], &[0.0, 1.0], &[1.0, 0.0], &mut rhs).unwrap_err();
        assert!(matches!(err, Error::Tridiagonal { row: 0 }));
    }
}
