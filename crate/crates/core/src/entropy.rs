//! Entropies in bits.

use crate::error::{arg, QicError, Result};
use crate::linalg::{hermitian_eigenvalues, ComplexMatrix, Spectrum};

/// Eigenvalues in `[-POSITIVITY_TOL, 0)` are treated as round-off and clipped to zero.
pub const POSITIVITY_TOL: f64 = 1e-8;
const TRACE_TOL: f64 = 1e-6;

/// `-x lg x` with the convention `0 lg 0 = 0`.
pub fn xlogx(x: f64) -> f64 {
    if x <= 0.0 {
        0.0
    } else {
        -x * x.log2()
    }
}

/// Validated spectrum of a density operator, clipped to `[0, 1]`.
pub fn density_spectrum(rho: &ComplexMatrix) -> Result<Spectrum> {
    let tr = rho.trace();
    if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
        return Err(QicError::Normalization { trace: tr.re });
    }
    let mut s = hermitian_eigenvalues(rho)?;
    for v in s.eigenvalues.iter_mut() {
        if *v < -POSITIVITY_TOL {
            return Err(QicError::Positivity { value: *v });
        }
        *v = v.clamp(0.0, 1.0);
    }
    Ok(s)
}

/// Shannon entropy of an eigenvalue or probability list.
pub fn entropy_of(values: &[f64]) -> f64 {
    values.iter().map(|&v| xlogx(v)).sum()
}

pub fn von_neumann_entropy(rho: &ComplexMatrix) -> Result<f64> {
    Ok(entropy_of(&density_spectrum(rho)?.eigenvalues))
}

/// Collision entropy `-lg Tr ρ²`.
pub fn renyi2_entropy(rho: &ComplexMatrix) -> Result<f64> {
    let s = density_spectrum(rho)?;
    let purity: f64 = s.eigenvalues.iter().map(|v| v * v).sum();
    Ok(-purity.log2())
}

pub fn binary_entropy(p: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&p) {
        return arg(format!("{p} is not a probability"));
    }
    Ok(xlogx(p) + xlogx(1.0 - p))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::C64;

    #[test]
    fn maximally_mixed() {
        let h = von_neumann_entropy(&ComplexMatrix::diagonal(&[0.25; 4])).unwrap();
        assert!((h - 2.0).abs() < 1e-14);
        let h = von_neumann_entropy(&ComplexMatrix::diagonal(&[0.5; 2])).unwrap();
        assert!((h - 1.0).abs() < 1e-14);
    }

    #[test]
    fn pure_state_is_zero() {
        let s = 0.5f64.sqrt();
        let psi = [C64::new(s, 0.0), C64::new(0.0, s)];
        let rho = ComplexMatrix::projector(&psi);
        assert!(von_neumann_entropy(&rho).unwrap().abs() < 1e-12);
        assert!(renyi2_entropy(&rho).unwrap().abs() < 1e-12);
    }

    #[test]
    fn renyi2_of_uneven_diagonal() {
        let h2 = renyi2_entropy(&ComplexMatrix::diagonal(&[0.5, 0.25, 0.25])).unwrap();
        let oracle = -(0.5f64 * 0.5 + 0.25 * 0.25 + 0.25 * 0.25).log2();
        assert!((h2 - oracle).abs() < 1e-12);
        assert!((h2 - 1.415_037_499_278_844).abs() < 1e-12);
        let h2 = renyi2_entropy(&ComplexMatrix::diagonal(&[1.0 / 3.0; 3])).unwrap();
        assert!((h2 - 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn binary_entropy_values() {
        assert_eq!(binary_entropy(0.0).unwrap(), 0.0);
        assert_eq!(binary_entropy(1.0).unwrap(), 0.0);
        assert!((binary_entropy(0.5).unwrap() - 1.0).abs() < 1e-15);
        let oracle = -0.25 * 0.25f64.log2() - 0.75 * 0.75f64.log2();
        assert!((binary_entropy(0.25).unwrap() - oracle).abs() < 1e-15);
        assert!((binary_entropy(0.25).unwrap() - 0.811_278_124_459_132_8).abs() < 1e-12);
        assert!(binary_entropy(1.5).is_err());
    }

    #[test]
    fn validation_errors() {
        assert!(matches!(
            von_neumann_entropy(&ComplexMatrix::diagonal(&[0.5, 0.4])),
            Err(QicError::Normalization { .. })
        ));
        assert!(matches!(
            von_neumann_entropy(&ComplexMatrix::diagonal(&[1.1, -0.1])),
            Err(QicError::Positivity { .. })
        ));
        let h = von_neumann_entropy(&ComplexMatrix::diagonal(&[1.0 + 1e-9, -1e-9])).unwrap();
        assert!(h.abs() < 1e-6);
    }
}
