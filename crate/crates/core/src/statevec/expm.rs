use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use super::operator::Operator;
use crate::error::{Error, Result};

const ANTIHERMITIAN_TOL: f64 = 1e-10;

/// `exp(g)` for an anti-hermitian generator `g` (`g† = −g`).
///
/// Dense generators go through the hermitian eigendecomposition of `i·g`,
/// so the result is unitary up to eigensolver precision. Diagonal
/// generators exponentiate entrywise and stay diagonal.
pub fn exp_antihermitian(g: &Operator) -> Result<Operator> {
    if g.antihermiticity_defect() > ANTIHERMITIAN_TOL {
        return Err(Error::OperatorProperty("anti-hermitian"));
    }
    let out = match g.diagonal_entries() {
        Some(d) => Operator::diagonal(d.iter().map(|x| Complex64::new(0.0, x.im).exp()).collect())?,
        None => {
            let n = g.dim();
            let gm = g.to_dense();
            let i = Complex64::new(0.0, 1.0);
            // h = i·g, symmetrised so the eigensolver sees an exactly hermitian input
            let h = DMatrix::from_fn(n, n, |r, c| (i * gm[(r, c)] + (i * gm[(c, r)]).conj()) * 0.5);
            let eig = SymmetricEigen::new(h);
            let v = eig.eigenvectors;
            let phases: Vec<Complex64> =
                eig.eigenvalues.iter().map(|&lam| Complex64::new(0.0, -lam).exp()).collect();
            let mut scaled = v.clone();
            for (col, ph) in phases.iter().enumerate() {
                scaled.column_mut(col).iter_mut().for_each(|x| *x *= ph);
            }
            Operator::dense(scaled * v.adjoint())?
        }
    };
    Ok(out.with_flags(true, false))
}

/// A random dense hermitian matrix (GUE-like, entries of standard deviation
/// `scale`), flagged hermitian.
pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, scale: f64, rng: &mut R) -> Result<Operator> {
    let mut m = DMatrix::<Complex64>::zeros(dim, dim);
    for r in 0..dim {
        let d: f64 = rng.sample(StandardNormal);
        m[(r, r)] = Complex64::new(d * scale, 0.0);
        for c in (r + 1)..dim {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let z = Complex64::new(re, im) * (scale / std::f64::consts::SQRT_2);
            m[(r, c)] = z;
            m[(c, r)] = z.conj();
        }
    }
    Ok(Operator::dense(m)?.with_flags(false, true))
}
