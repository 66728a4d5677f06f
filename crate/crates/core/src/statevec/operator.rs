use nalgebra::DMatrix;
use num_complex::Complex64;

use super::state::StateVector;
use crate::error::{Error, Result};

const UNITARY_TOL: f64 = 1e-9;
const HERMITIAN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    Dense,
    Diagonal,
}

#[derive(Debug, Clone, PartialEq)]
enum Entries {
    Dense(DMatrix<Complex64>),
    Diagonal(Vec<Complex64>),
}

/// A linear operator on a `dim`-dimensional state space.
///
/// The `unitary` and `hermitian` flags are only ever set after the property
/// has been checked numerically (see [`Operator::into_unitary`] and
/// [`Operator::into_hermitian`]).
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    entries: Entries,
    unitary: bool,
    hermitian: bool,
}

impl Operator {
    pub fn identity(dim: usize) -> Self {
        Self {
            entries: Entries::Diagonal(vec![Complex64::new(1.0, 0.0); dim]),
            unitary: true,
            hermitian: true,
        }
    }

    pub fn dense(matrix: DMatrix<Complex64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() || matrix.nrows() == 0 {
            return Err(Error::InvalidArgument(format!(
                "operator matrix must be square and non-empty, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { entries: Entries::Dense(matrix), unitary: false, hermitian: false })
    }

    /// Dense operator from row-major entries.
    pub fn from_rows(dim: usize, rows: &[Complex64]) -> Result<Self> {
        if rows.len() != dim * dim {
            return Err(Error::DimensionMismatch { expected: dim * dim, actual: rows.len() });
        }
        Self::dense(DMatrix::from_row_slice(dim, dim, rows))
    }

    pub fn diagonal(diag: Vec<Complex64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(Error::InvalidArgument("operator dimension must be positive".into()));
        }
        Ok(Self { entries: Entries::Diagonal(diag), unitary: false, hermitian: false })
    }

    pub fn real_diagonal(diag: &[f64]) -> Result<Self> {
        Self::diagonal(diag.iter().map(|&d| Complex64::new(d, 0.0)).collect())
    }

    pub fn dim(&self) -> usize {
        match &self.entries {
            Entries::Dense(m) => m.nrows(),
            Entries::Diagonal(d) => d.len(),
        }
    }

    pub fn kind(&self) -> OperatorKind {
        match self.entries {
            Entries::Dense(_) => OperatorKind::Dense,
            Entries::Diagonal(_) => OperatorKind::Diagonal,
        }
    }

    pub fn is_unitary(&self) -> bool {
        self.unitary
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermitian
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        match &self.entries {
            Entries::Dense(m) => m[(row, col)],
            Entries::Diagonal(d) if row == col => d[row],
            Entries::Diagonal(_) => Complex64::new(0.0, 0.0),
        }
    }

    /// Diagonal entries, for diagonal-kind operators.
    pub fn diagonal_entries(&self) -> Option<&[Complex64]> {
        match &self.entries {
            Entries::Diagonal(d) => Some(d),
            Entries::Dense(_) => None,
        }
    }

    pub fn to_dense(&self) -> DMatrix<Complex64> {
        match &self.entries {
            Entries::Dense(m) => m.clone(),
            Entries::Diagonal(d) => DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(d)),
        }
    }

    pub fn adjoint(&self) -> Operator {
        let entries = match &self.entries {
            Entries::Dense(m) => Entries::Dense(m.adjoint()),
            Entries::Diagonal(d) => Entries::Diagonal(d.iter().map(|x| x.conj()).collect()),
        };
        Operator { entries, unitary: self.unitary, hermitian: self.hermitian }
    }

    pub fn scale(&self, factor: Complex64) -> Operator {
        let entries = match &self.entries {
            Entries::Dense(m) => Entries::Dense(m * factor),
            Entries::Diagonal(d) => Entries::Diagonal(d.iter().map(|x| x * factor).collect()),
        };
        Operator { entries, unitary: false, hermitian: false }
    }

    /// `self · other`.
    pub fn compose(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        let entries = match (&self.entries, &other.entries) {
            (Entries::Diagonal(a), Entries::Diagonal(b)) => {
                Entries::Diagonal(a.iter().zip(b).map(|(x, y)| x * y).collect())
            }
            _ => Entries::Dense(self.to_dense() * other.to_dense()),
        };
        Ok(Operator { entries, unitary: self.unitary && other.unitary, hermitian: false })
    }

    pub fn add(&self, other: &Operator) -> Result<Operator> {
        self.check_dim(other.dim())?;
        let entries = match (&self.entries, &other.entries) {
            (Entries::Diagonal(a), Entries::Diagonal(b)) => {
                Entries::Diagonal(a.iter().zip(b).map(|(x, y)| x + y).collect())
            }
            _ => Entries::Dense(self.to_dense() + other.to_dense()),
        };
        Ok(Operator { entries, unitary: false, hermitian: self.hermitian && other.hermitian })
    }

    /// Kronecker product `self ⊗ other`; `self` acts on the most significant factor.
    pub fn kron(&self, other: &Operator) -> Operator {
        let entries = match (&self.entries, &other.entries) {
            (Entries::Diagonal(a), Entries::Diagonal(b)) => {
                Entries::Diagonal(a.iter().flat_map(|x| b.iter().map(move |y| x * y)).collect())
            }
            _ => Entries::Dense(self.to_dense().kronecker(&other.to_dense())),
        };
        Operator {
            entries,
            unitary: self.unitary && other.unitary,
            hermitian: self.hermitian && other.hermitian,
        }
    }

    /// Max-entry deviation of `U†U` from the identity.
    pub fn unitarity_defect(&self) -> f64 {
        match &self.entries {
            Entries::Diagonal(d) => d.iter().map(|x| (x.norm_sqr() - 1.0).abs()).fold(0.0, f64::max),
            Entries::Dense(m) => {
                let p = m.adjoint() * m;
                max_abs_minus_identity(&p)
            }
        }
    }

    /// Max-entry deviation of `H` from `H†`.
    pub fn hermiticity_defect(&self) -> f64 {
        match &self.entries {
            Entries::Diagonal(d) => d.iter().map(|x| x.im.abs() * 2.0).fold(0.0, f64::max),
            Entries::Dense(m) => {
                let mut worst = 0.0f64;
                for i in 0..m.nrows() {
                    for j in i..m.ncols() {
                        worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    /// Max-entry magnitude of `G + G†`.
    pub fn antihermiticity_defect(&self) -> f64 {
        match &self.entries {
            Entries::Diagonal(d) => d.iter().map(|x| x.re.abs() * 2.0).fold(0.0, f64::max),
            Entries::Dense(m) => {
                let mut worst = 0.0f64;
                for i in 0..m.nrows() {
                    for j in i..m.ncols() {
                        worst = worst.max((m[(i, j)] + m[(j, i)].conj()).norm());
                    }
                }
                worst
            }
        }
    }

    /// Verifies unitarity (max-entry `|U†U − I| ≤ 1e−9`) and sets the flag.
    pub fn into_unitary(mut self) -> Result<Self> {
        if self.unitarity_defect() > UNITARY_TOL {
            return Err(Error::OperatorProperty("unitary"));
        }
        self.unitary = true;
        Ok(self)
    }

    /// Verifies hermiticity (max-entry `|H − H†| ≤ 1e−12`) and sets the flag.
    pub fn into_hermitian(mut self) -> Result<Self> {
        if self.hermiticity_defect() > HERMITIAN_TOL {
            return Err(Error::OperatorProperty("hermitian"));
        }
        self.hermitian = true;
        Ok(self)
    }

    pub(crate) fn with_flags(mut self, unitary: bool, hermitian: bool) -> Self {
        self.unitary = unitary;
        self.hermitian = hermitian;
        self
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if self.dim() != dim {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: dim });
        }
        Ok(())
    }

    fn apply_to(&self, amps: &[Complex64], out: &mut [Complex64]) {
        match &self.entries {
            Entries::Diagonal(d) => {
                for ((o, x), a) in out.iter_mut().zip(d).zip(amps) {
                    *o = x * a;
                }
            }
            Entries::Dense(m) => {
                let n = m.nrows();
                for (row, o) in out.iter_mut().enumerate() {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for col in 0..n {
                        acc += m[(row, col)] * amps[col];
                    }
                    *o = acc;
                }
            }
        }
    }
}

fn max_abs_minus_identity(m: &DMatrix<Complex64>) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((m[(i, j)] - Complex64::new(target, 0.0)).norm());
        }
    }
    worst
}

/// `op · psi`.
pub fn apply(op: &Operator, psi: &StateVector) -> Result<StateVector> {
    op.check_dim(psi.dim())?;
    let mut out = vec![Complex64::new(0.0, 0.0); psi.dim()];
    op.apply_to(psi.amplitudes(), &mut out);
    StateVector::from_amplitudes(out)
}

/// Applies `I_left ⊗ op ⊗ I_right` to `psi` without forming the full operator.
pub fn apply_factor(op: &Operator, psi: &StateVector, left: usize, right: usize) -> Result<StateVector> {
    let d = op.dim();
    let expected = left * d * right;
    if psi.dim() != expected {
        return Err(Error::DimensionMismatch { expected, actual: psi.dim() });
    }
    let amps = psi.amplitudes();
    let mut out = vec![Complex64::new(0.0, 0.0); expected];
    let mut slice_in = vec![Complex64::new(0.0, 0.0); d];
    let mut slice_out = vec![Complex64::new(0.0, 0.0); d];
    for l in 0..left {
        for r in 0..right {
            for k in 0..d {
                slice_in[k] = amps[(l * d + k) * right + r];
            }
            op.apply_to(&slice_in, &mut slice_out);
            for k in 0..d {
                out[(l * d + k) * right + r] = slice_out[k];
            }
        }
    }
    StateVector::from_amplitudes(out)
}

/// `⟨psi|h|psi⟩ / ⟨psi|psi⟩` for a hermitian-flagged `h`.
pub fn expectation(h: &Operator, psi: &StateVector) -> Result<f64> {
    if !h.is_hermitian() {
        return Err(Error::OperatorProperty("hermitian"));
    }
    let hpsi = apply(h, psi)?;
    let norm = psi.norm_sqr();
    if norm == 0.0 {
        return Err(Error::ZeroVector);
    }
    // the imaginary residue of a hermitian form is rounding noise
    Ok(psi.inner(&hpsi)?.re / norm)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevec::{basis_state, superpose, tensor};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn identity_and_swap() {
        let psi = superpose(3, &[(0, c(1., 2.)), (2, c(-0.5, 0.))]).unwrap();
        assert_eq!(apply(&Operator::identity(3), &psi).unwrap(), psi);

        let swap = Operator::from_rows(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)])
            .unwrap()
            .into_unitary()
            .unwrap();
        let out = apply(&swap, &basis_state(2, 0).unwrap()).unwrap();
        assert_eq!(out, basis_state(2, 1).unwrap());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let err = apply(&Operator::identity(3), &basis_state(2, 0).unwrap()).unwrap_err();
        assert_eq!(err, Error::DimensionMismatch { expected: 3, actual: 2 });
    }

    #[test]
    fn flags_are_verified() {
        let not_unitary = Operator::real_diagonal(&[1.0, 2.0]).unwrap();
        assert!(not_unitary.clone().into_unitary().is_err());
        assert!(not_unitary.into_hermitian().is_ok());
        let skew = Operator::from_rows(2, &[c(0., 0.), c(1., 0.), c(0., 0.), c(0., 0.)]).unwrap();
        assert!(skew.into_hermitian().is_err());
    }

    #[test]
    fn expectation_examples() {
        let psi = superpose(2, &[(0, c(1., 0.)), (1, c(0., 1.))]).unwrap();
        let id = Operator::identity(2);
        assert!((expectation(&id, &psi).unwrap() - 1.0).abs() < 1e-15);

        let h = Operator::real_diagonal(&[5.0, 7.0]).unwrap().into_hermitian().unwrap();
        assert_eq!(expectation(&h, &basis_state(2, 1).unwrap()).unwrap(), 7.0);

        let not_h = Operator::real_diagonal(&[5.0, 7.0]).unwrap();
        assert_eq!(expectation(&not_h, &psi), Err(Error::OperatorProperty("hermitian")));
        assert!(matches!(expectation(&h, &basis_state(3, 0).unwrap()), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn apply_factor_matches_kron() {
        let a = Operator::from_rows(2, &[c(0., 0.), c(1., 0.), c(1., 0.), c(0., 0.)]).unwrap();
        let b = Operator::from_rows(
            3,
            &[c(1., 0.), c(2., 0.), c(0., 1.), c(0., 0.), c(1., 1.), c(0., 0.), c(3., 0.), c(0., 0.), c(1., 0.)],
        )
        .unwrap();
        let psi = tensor(
            &superpose(2, &[(0, c(1., 0.)), (1, c(0.3, 0.2))]).unwrap(),
            &superpose(3, &[(0, c(1., 0.)), (1, c(0., 0.5)), (2, c(-1., 0.))]).unwrap(),
        );
        let full = Operator::identity(2).kron(&b);
        assert_eq!(apply(&full, &psi).unwrap(), apply_factor(&b, &psi, 2, 1).unwrap());
        let full = a.kron(&Operator::identity(3));
        assert_eq!(apply(&full, &psi).unwrap(), apply_factor(&a, &psi, 1, 3).unwrap());
    }
}
