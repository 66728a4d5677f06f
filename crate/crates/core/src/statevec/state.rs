use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::NORM_TOL;
use crate::error::{Error, Result};

/// Complex amplitudes over a finite computational basis.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amps: Vec<Complex64>,
}

impl StateVector {
    /// Wraps raw amplitudes. The result is not necessarily normalized.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        if amps.is_empty() {
            return Err(Error::InvalidArgument("state dimension must be positive".into()));
        }
        Ok(Self { amps })
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn amp(&self, index: usize) -> Complex64 {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        self.is_normalized_within(NORM_TOL)
    }

    pub fn is_normalized_within(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// Rescales to unit norm.
    pub fn normalized(mut self) -> Result<Self> {
        let n = self.norm();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::ZeroVector);
        }
        let inv = 1.0 / n;
        self.amps.iter_mut().for_each(|a| *a *= inv);
        Ok(self)
    }

    /// Born probabilities `|amp_i|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), actual: other.dim() });
        }
        Ok(self.amps.iter().zip(&other.amps).map(|(a, b)| a.conj() * b).sum())
    }
}

impl Serialize for StateVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let pairs: Vec<[f64; 2]> = self.amps.iter().map(|a| [a.re, a.im]).collect();
        pairs.serialize(s)
    }
}

impl<'de> Deserialize<'de> for StateVector {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        let amps = pairs.into_iter().map(|[re, im]| Complex64::new(re, im)).collect();
        StateVector::from_amplitudes(amps).map_err(serde::de::Error::custom)
    }
}

pub fn basis_state(dim: usize, index: usize) -> Result<StateVector> {
    if dim == 0 {
        return Err(Error::InvalidArgument("state dimension must be positive".into()));
    }
    if index >= dim {
        return Err(Error::IndexOutOfRange { index, dim });
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    amps[index] = Complex64::new(1.0, 0.0);
    Ok(StateVector { amps })
}

/// Normalized state with amplitudes proportional to the summed weights per index.
pub fn superpose(dim: usize, terms: &[(usize, Complex64)]) -> Result<StateVector> {
    if dim == 0 {
        return Err(Error::InvalidArgument("state dimension must be positive".into()));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); dim];
    for &(index, w) in terms {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
        amps[index] += w;
    }
    StateVector { amps }.normalized()
}

/// Kronecker product; `a` is the most significant factor.
pub fn tensor(a: &StateVector, b: &StateVector) -> StateVector {
    let mut amps = Vec::with_capacity(a.dim() * b.dim());
    for x in &a.amps {
        amps.extend(b.amps.iter().map(|y| x * y));
    }
    StateVector { amps }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn basis_state_examples() {
        let s = basis_state(4, 2).unwrap();
        assert_eq!(s.amplitudes(), &[c(0., 0.), c(0., 0.), c(1., 0.), c(0., 0.)]);
        assert_eq!(basis_state(1, 0).unwrap().amplitudes(), &[c(1., 0.)]);
        assert_eq!(basis_state(4, 7), Err(Error::IndexOutOfRange { index: 7, dim: 4 }));
    }

    #[test]
    fn superpose_examples() {
        let s = superpose(2, &[(0, c(1., 0.)), (1, c(1., 0.))]).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((s.amp(0) - c(h, 0.)).norm() < 1e-15);
        assert!((s.amp(1) - c(h, 0.)).norm() < 1e-15);

        let s = superpose(2, &[(0, c(3., 0.)), (1, c(0., 4.))]).unwrap();
        assert!((s.amp(0) - c(0.6, 0.)).norm() < 1e-15);
        assert!((s.amp(1) - c(0., 0.8)).norm() < 1e-15);

        assert_eq!(superpose(2, &[(0, c(0., 0.))]), Err(Error::ZeroVector));
        assert!(matches!(superpose(2, &[(5, c(1., 0.))]), Err(Error::IndexOutOfRange { .. })));
    }

    #[test]
    fn superpose_sums_repeated_indices() {
        let s = superpose(3, &[(1, c(1., 0.)), (1, c(1., 0.)), (2, c(0., 0.))]).unwrap();
        assert_eq!(s, basis_state(3, 1).unwrap());
    }

    #[test]
    fn tensor_examples() {
        let t = tensor(&basis_state(2, 1).unwrap(), &basis_state(2, 0).unwrap());
        assert_eq!(t, basis_state(4, 2).unwrap());

        let plus = superpose(2, &[(0, c(1., 0.)), (1, c(1., 0.))]).unwrap();
        let t = tensor(&basis_state(2, 0).unwrap(), &plus);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(t.dim(), 4);
        assert!((t.amp(0).re - h).abs() < 1e-15 && (t.amp(1).re - h).abs() < 1e-15);
        assert_eq!(t.amp(2), c(0., 0.));
        assert_eq!(t.amp(3), c(0., 0.));

        let a = StateVector::from_amplitudes(vec![c(2., 0.), c(0., 1.)]).unwrap();
        let b = StateVector::from_amplitudes(vec![c(1., 1.), c(3., 0.), c(0., -2.)]).unwrap();
        assert!((tensor(&a, &b).norm() - a.norm() * b.norm()).abs() < 1e-12);
    }

    #[test]
    fn json_is_array_of_pairs() {
        let s = StateVector::from_amplitudes(vec![c(0.6, 0.), c(0., 0.8)]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        assert_eq!(json, "[[0.6,0.0],[0.0,0.8]]");
        let back: StateVector = serde_json::from_str(&json).unwrap();
        assert_eq!(back, s);
    }
}
