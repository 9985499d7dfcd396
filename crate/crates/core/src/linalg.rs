//! Dense complex linear algebra over small tensor-product spaces.
//!
//! Basis states are indexed in mixed radix with the first factor most
//! significant, so for a space with dimensions `(d0, d1, .., dn)` the digit
//! tuple `(i0, i1, .., in)` sits at `i0*d1*..*dn + .. + in`.

use num_complex::Complex;
use thiserror::Error;

use crate::scalar::Real;

pub type Amplitude<T> = Complex<T>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LinalgError {
    #[error("space mismatch: {left:?} vs {right:?}")]
    SpaceMismatch { left: Vec<usize>, right: Vec<usize> },
    #[error("expected {expected} amplitudes, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },
    #[error("amplitude {index} is not finite")]
    NonFinite { index: usize },
    #[error("spanning vectors are not orthonormal (gram entry ({i},{j}) off by {deviation:e})")]
    NotOrthonormal { i: usize, j: usize, deviation: f64 },
    #[error("invalid factor selection {factors:?} for space {dims:?}")]
    InvalidFactors {
        factors: Vec<usize>,
        dims: Vec<usize>,
    },
    #[error("invalid basis digits {digits:?} for space {dims:?}")]
    InvalidDigits {
        digits: Vec<usize>,
        dims: Vec<usize>,
    },
    #[error("cannot normalise the zero vector")]
    ZeroVector,
    #[error("subsystem dimensions must be positive")]
    EmptyFactor,
}

/// Ordered list of subsystem dimensions.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Space {
    dims: Vec<usize>,
}

impl Space {
    pub fn new(dims: Vec<usize>) -> Result<Self, LinalgError> {
        if dims.iter().any(|&d| d == 0) {
            return Err(LinalgError::EmptyFactor);
        }
        Ok(Self { dims })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn factor_count(&self) -> usize {
        self.dims.len()
    }

    /// Total Hilbert dimension (1 for the empty product).
    pub fn dim(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.dims.len()];
        for k in (0..self.dims.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.dims[k + 1];
        }
        strides
    }

    pub fn index(&self, digits: &[usize]) -> Result<usize, LinalgError> {
        if digits.len() != self.dims.len() || digits.iter().zip(&self.dims).any(|(d, n)| d >= n) {
            return Err(LinalgError::InvalidDigits {
                digits: digits.to_vec(),
                dims: self.dims.clone(),
            });
        }
        Ok(digits.iter().zip(self.strides()).map(|(d, s)| d * s).sum())
    }

    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut digits = vec![0; self.dims.len()];
        for k in (0..self.dims.len()).rev() {
            digits[k] = index % self.dims[k];
            index /= self.dims[k];
        }
        digits
    }

    pub fn concat(&self, other: &Space) -> Space {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        Space { dims }
    }

    fn check_factors(&self, factors: &[usize]) -> Result<(), LinalgError> {
        let increasing = factors.windows(2).all(|w| w[0] < w[1]);
        if !increasing || factors.iter().any(|&f| f >= self.dims.len()) {
            return Err(LinalgError::InvalidFactors {
                factors: factors.to_vec(),
                dims: self.dims.clone(),
            });
        }
        Ok(())
    }

    /// The space spanned by a strictly increasing selection of factors.
    pub fn subspace(&self, factors: &[usize]) -> Result<Space, LinalgError> {
        self.check_factors(factors)?;
        Ok(Space {
            dims: factors.iter().map(|&f| self.dims[f]).collect(),
        })
    }
}

/// Index bookkeeping for acting on a subset of factors.
///
/// Every global index is `base + offsets[l]`, where `base` has all selected
/// digits zero and `l` is the local index over the selected factors.
#[derive(Clone, Debug)]
struct Embedding {
    bases: Vec<usize>,
    offsets: Vec<usize>,
}

impl Embedding {
    fn new(space: &Space, factors: &[usize]) -> Result<Self, LinalgError> {
        let local = space.subspace(factors)?;
        let strides = space.strides();
        let offsets = (0..local.dim())
            .map(|l| {
                local
                    .digits(l)
                    .iter()
                    .zip(factors)
                    .map(|(d, &f)| d * strides[f])
                    .sum()
            })
            .collect();
        let bases = (0..space.dim())
            .filter(|&g| {
                let digits = space.digits(g);
                factors.iter().all(|&f| digits[f] == 0)
            })
            .collect();
        Ok(Self { bases, offsets })
    }
}

/// Dense amplitude vector over a [`Space`].
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector<T> {
    space: Space,
    amps: Vec<Amplitude<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn zeros(space: Space) -> Self {
        let amps = vec![Complex::new(T::zero(), T::zero()); space.dim()];
        Self { space, amps }
    }

    pub fn basis(space: Space, digits: &[usize]) -> Result<Self, LinalgError> {
        let index = space.index(digits)?;
        let mut v = Self::zeros(space);
        v.amps[index] = Complex::new(T::one(), T::zero());
        Ok(v)
    }

    pub fn from_amplitudes(space: Space, amps: Vec<Amplitude<T>>) -> Result<Self, LinalgError> {
        if amps.len() != space.dim() {
            return Err(LinalgError::LengthMismatch {
                expected: space.dim(),
                actual: amps.len(),
            });
        }
        if let Some(index) = amps
            .iter()
            .position(|a| !a.re.is_finite() || !a.im.is_finite())
        {
            return Err(LinalgError::NonFinite { index });
        }
        Ok(Self { space, amps })
    }

    pub fn from_real(space: Space, values: &[T]) -> Result<Self, LinalgError> {
        Self::from_amplitudes(
            space,
            values.iter().map(|&x| Complex::new(x, T::zero())).collect(),
        )
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn amplitudes(&self) -> &[Amplitude<T>] {
        &self.amps
    }

    pub fn amplitude(&self, digits: &[usize]) -> Result<Amplitude<T>, LinalgError> {
        Ok(self.amps[self.space.index(digits)?])
    }

    /// Basis indices with an amplitude above `threshold` in modulus.
    pub fn support(&self, threshold: T) -> Vec<usize> {
        (0..self.amps.len())
            .filter(|&i| self.amps[i].norm() > threshold)
            .collect()
    }

    fn check_same_space(&self, other: &Self) -> Result<(), LinalgError> {
        if self.space != other.space {
            return Err(LinalgError::SpaceMismatch {
                left: self.space.dims.clone(),
                right: other.space.dims.clone(),
            });
        }
        Ok(())
    }

    pub fn tensor(&self, other: &Self) -> Self {
        let mut amps = Vec::with_capacity(self.amps.len() * other.amps.len());
        for a in &self.amps {
            for b in &other.amps {
                amps.push(a * b);
            }
        }
        Self {
            space: self.space.concat(&other.space),
            amps,
        }
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner(&self, other: &Self) -> Result<Amplitude<T>, LinalgError> {
        self.check_same_space(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(Complex::new(T::zero(), T::zero()), |acc, (a, b)| {
                acc + a.conj() * b
            }))
    }

    pub fn norm_sqr(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    pub fn norm(&self) -> T {
        self.norm_sqr().sqrt()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr() - T::one()).abs() <= T::exact_tol()
    }

    pub fn scaled(&self, factor: Amplitude<T>) -> Self {
        Self {
            space: self.space.clone(),
            amps: self.amps.iter().map(|a| a * factor).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self, LinalgError> {
        self.check_same_space(other)?;
        Ok(Self {
            space: self.space.clone(),
            amps: self
                .amps
                .iter()
                .zip(&other.amps)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self, LinalgError> {
        self.add(&other.scaled(Complex::new(-T::one(), T::zero())))
    }

    pub fn normalized(&self) -> Result<Self, LinalgError> {
        let norm = self.norm();
        if norm <= T::negligible() {
            return Err(LinalgError::ZeroVector);
        }
        Ok(self.scaled(Complex::new(T::one() / norm, T::zero())))
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_deviation(&self, other: &Self) -> Result<T, LinalgError> {
        self.check_same_space(other)?;
        Ok(self
            .amps
            .iter()
            .zip(&other.amps)
            .fold(T::zero(), |m, (a, b)| m.max((a - b).norm())))
    }

    /// Largest entrywise deviation from `other` after removing the best global phase.
    pub fn max_deviation_up_to_phase(&self, other: &Self) -> Result<T, LinalgError> {
        let overlap = other.inner(self)?;
        let phase = if overlap.norm() > T::negligible() {
            overlap.conj() / overlap.norm()
        } else {
            Complex::new(T::one(), T::zero())
        };
        self.scaled(phase).max_deviation(other)
    }
}

/// Orthogonal projector given by an orthonormal spanning set.
#[derive(Clone, Debug, PartialEq)]
pub struct Projector<T> {
    space: Space,
    vectors: Vec<StateVector<T>>,
}

impl<T: Real> Projector<T> {
    pub fn new(space: Space, vectors: Vec<StateVector<T>>) -> Result<Self, LinalgError> {
        for v in &vectors {
            if v.space != space {
                return Err(LinalgError::SpaceMismatch {
                    left: space.dims.clone(),
                    right: v.space.dims.clone(),
                });
            }
        }
        for i in 0..vectors.len() {
            for j in i..vectors.len() {
                let g = vectors[i].inner(&vectors[j])?;
                let target = if i == j { T::one() } else { T::zero() };
                let deviation = (g - Complex::new(target, T::zero())).norm();
                if deviation > T::exact_tol() {
                    return Err(LinalgError::NotOrthonormal {
                        i,
                        j,
                        deviation: deviation.to_f64_lossy(),
                    });
                }
            }
        }
        Ok(Self { space, vectors })
    }

    pub fn zero(space: Space) -> Self {
        Self {
            space,
            vectors: Vec::new(),
        }
    }

    pub fn identity(space: Space) -> Self {
        let vectors = (0..space.dim())
            .map(|i| StateVector::basis(space.clone(), &space.digits(i)).expect("digits in range"))
            .collect();
        Self { space, vectors }
    }

    /// Lifts a projector on `factors` to `space`, acting as identity elsewhere.
    pub fn embed(
        space: &Space,
        factors: &[usize],
        local: &Projector<T>,
    ) -> Result<Self, LinalgError> {
        let expected = space.subspace(factors)?;
        if local.space != expected {
            return Err(LinalgError::SpaceMismatch {
                left: expected.dims.clone(),
                right: local.space.dims.clone(),
            });
        }
        let embedding = Embedding::new(space, factors)?;
        let mut vectors = Vec::with_capacity(embedding.bases.len() * local.rank());
        for &base in &embedding.bases {
            for u in &local.vectors {
                let mut v = StateVector::zeros(space.clone());
                for (l, &offset) in embedding.offsets.iter().enumerate() {
                    v.amps[base + offset] = u.amps[l];
                }
                vectors.push(v);
            }
        }
        Ok(Self {
            space: space.clone(),
            vectors,
        })
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn spanning_vectors(&self) -> &[StateVector<T>] {
        &self.vectors
    }

    pub fn rank(&self) -> usize {
        self.vectors.len()
    }

    pub fn project(&self, v: &StateVector<T>) -> Result<StateVector<T>, LinalgError> {
        if v.space != self.space {
            return Err(LinalgError::SpaceMismatch {
                left: self.space.dims.clone(),
                right: v.space.dims.clone(),
            });
        }
        let mut out = StateVector::zeros(self.space.clone());
        for e in &self.vectors {
            let c = e.inner(v)?;
            for (o, a) in out.amps.iter_mut().zip(&e.amps) {
                *o += a * c;
            }
        }
        Ok(out)
    }

    /// `‖P v‖²`.
    pub fn weight(&self, v: &StateVector<T>) -> Result<T, LinalgError> {
        let mut total = T::zero();
        for e in &self.vectors {
            total += e.inner(v)?.norm_sqr();
        }
        Ok(total)
    }

    pub fn is_orthogonal_to(&self, other: &Projector<T>) -> Result<bool, LinalgError> {
        for a in &self.vectors {
            for b in &other.vectors {
                if a.inner(b)?.norm() > T::exact_tol() {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Orthonormal completion: the projector onto the orthogonal complement.
    pub fn complement(&self) -> Self {
        let mut basis = self.vectors.clone();
        let start = basis.len();
        for i in 0..self.space.dim() {
            let mut candidate = StateVector::basis(self.space.clone(), &self.space.digits(i))
                .expect("digits in range");
            // two Gram-Schmidt passes keep the completion orthonormal to machine precision
            for _ in 0..2 {
                for e in &basis {
                    let c = e.inner(&candidate).expect("same space");
                    candidate = candidate.sub(&e.scaled(c)).expect("same space");
                }
            }
            if candidate.norm() > T::lit(1e-6) {
                basis.push(candidate.normalized().expect("nonzero"));
            }
            if basis.len() == self.space.dim() {
                break;
            }
        }
        Self {
            space: self.space.clone(),
            vectors: basis.split_off(start),
        }
    }
}

/// Linear map acting on a subset of factors, identity on the rest.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalOperator<T> {
    space: Space,
    factors: Vec<usize>,
    local_dim: usize,
    matrix: Vec<Amplitude<T>>,
}

impl<T: Real> LocalOperator<T> {
    /// `matrix` is row-major over the local space of `factors`.
    pub fn new(
        space: Space,
        factors: Vec<usize>,
        matrix: Vec<Amplitude<T>>,
    ) -> Result<Self, LinalgError> {
        let local_dim = space.subspace(&factors)?.dim();
        if matrix.len() != local_dim * local_dim {
            return Err(LinalgError::LengthMismatch {
                expected: local_dim * local_dim,
                actual: matrix.len(),
            });
        }
        Ok(Self {
            space,
            factors,
            local_dim,
            matrix,
        })
    }

    pub fn identity(space: Space) -> Self {
        Self {
            space,
            factors: Vec::new(),
            local_dim: 1,
            matrix: vec![Complex::new(T::one(), T::zero())],
        }
    }

    pub fn space(&self) -> &Space {
        &self.space
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn entry(&self, row: usize, col: usize) -> Amplitude<T> {
        self.matrix[row * self.local_dim + col]
    }

    pub fn apply(&self, v: &StateVector<T>) -> Result<StateVector<T>, LinalgError> {
        if v.space != self.space {
            return Err(LinalgError::SpaceMismatch {
                left: self.space.dims.clone(),
                right: v.space.dims.clone(),
            });
        }
        let embedding = Embedding::new(&self.space, &self.factors)?;
        let mut out = StateVector::zeros(self.space.clone());
        let d = self.local_dim;
        for &base in &embedding.bases {
            for row in 0..d {
                let mut acc = Complex::new(T::zero(), T::zero());
                for col in 0..d {
                    acc += self.matrix[row * d + col] * v.amps[base + embedding.offsets[col]];
                }
                out.amps[base + embedding.offsets[row]] = acc;
            }
        }
        Ok(out)
    }

    /// Largest deviation of `M†M` from the identity.
    pub fn unitarity_defect(&self) -> T {
        let d = self.local_dim;
        let mut worst = T::zero();
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex::new(T::zero(), T::zero());
                for k in 0..d {
                    acc += self.matrix[k * d + i].conj() * self.matrix[k * d + j];
                }
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((acc - Complex::new(target, T::zero())).norm());
            }
        }
        worst
    }
}
