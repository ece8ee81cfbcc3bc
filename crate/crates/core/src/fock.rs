//! Truncated Fock-basis operators, including the counting-field deformed
//! ladder operators `a(q)|n> = sqrt(n - q)|n-1>`.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::kummer_1f1_neg;

pub type C64 = Complex64;

/// Number basis `|0>, ..., |M-1>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FockSpace {
    dim: usize,
}

impl FockSpace {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidParameter(format!(
                "Fock space dimension must be at least 2, got {dim}"
            )));
        }
        Ok(Self { dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

/// Dense operator on a [`FockSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    space: FockSpace,
    matrix: DMatrix<C64>,
}

impl Operator {
    pub fn new(space: FockSpace, matrix: DMatrix<C64>) -> Result<Self> {
        if matrix.nrows() != space.dim() || matrix.ncols() != space.dim() {
            return Err(Error::DimensionMismatch {
                expected: space.dim(),
                found: matrix.nrows().max(matrix.ncols()),
            });
        }
        Ok(Self { space, matrix })
    }

    pub fn identity(space: FockSpace) -> Self {
        Self {
            space,
            matrix: DMatrix::identity(space.dim(), space.dim()),
        }
    }

    pub fn zeros(space: FockSpace) -> Self {
        Self {
            space,
            matrix: DMatrix::zeros(space.dim(), space.dim()),
        }
    }

    pub fn space(&self) -> FockSpace {
        self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn matrix(&self) -> &DMatrix<C64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<C64> {
        self.matrix
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.matrix[(row, col)]
    }

    pub fn adjoint(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.adjoint(),
        }
    }

    /// Plain transpose. For the real ladder algebra this is the deformed
    /// partner of an operator (e.g. `a(q)` ↦ `a†(q)`), not its adjoint.
    pub fn transpose(&self) -> Self {
        Self {
            space: self.space,
            matrix: self.matrix.transpose(),
        }
    }

    pub fn compose(&self, other: &Operator) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix * &other.matrix,
        })
    }

    pub fn add(&self, other: &Operator) -> Result<Self> {
        self.check(other)?;
        Ok(Self {
            space: self.space,
            matrix: &self.matrix + &other.matrix,
        })
    }

    pub fn scale(&self, factor: C64) -> Self {
        Self {
            space: self.space,
            matrix: &self.matrix * factor,
        }
    }

    pub fn apply(&self, state: &DVector<C64>) -> Result<DVector<C64>> {
        if state.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: state.len(),
            });
        }
        Ok(&self.matrix * state)
    }

    /// Nonzero entries as `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, C64)> {
        let m = self.dim();
        let mut out = Vec::new();
        for c in 0..m {
            for r in 0..m {
                let v = self.matrix[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    out.push((r, c, v));
                }
            }
        }
        out
    }

    fn check(&self, other: &Operator) -> Result<()> {
        if self.space != other.space {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(())
    }
}

/// Basis vector `|n>`.
pub fn basis(space: FockSpace, n: usize) -> Result<DVector<C64>> {
    if n >= space.dim() {
        return Err(Error::DimensionMismatch {
            expected: space.dim(),
            found: n + 1,
        });
    }
    let mut v = DVector::zeros(space.dim());
    v[n] = C64::new(1.0, 0.0);
    Ok(v)
}

fn check_shift(q: f64, limit: f64) -> Result<()> {
    if !q.is_finite() || q.abs() > limit {
        return Err(Error::Domain(format!("counting field |q| must be <= {limit}, got {q}")));
    }
    Ok(())
}

/// Deformed annihilation operator, `<n-1|a(q)|n> = sqrt(n - q)`.
pub fn destroy(space: FockSpace, q: f64) -> Result<Operator> {
    check_shift(q, 1.0)?;
    let m = space.dim();
    let mut mat = DMatrix::zeros(m, m);
    for n in 1..m {
        mat[(n - 1, n)] = C64::new((n as f64 - q).sqrt(), 0.0);
    }
    Ok(Operator { space, matrix: mat })
}

/// Deformed creation operator, `<n+1|a†(q)|n> = sqrt(n + 1 - q)`.
pub fn create(space: FockSpace, q: f64) -> Result<Operator> {
    Ok(destroy(space, q)?.transpose())
}

/// Diagonal operator with entries `f(n - q)`.
pub fn diag_fn<F>(space: FockSpace, f: F, q: f64) -> Result<Operator>
where
    F: Fn(f64) -> Result<f64>,
{
    let m = space.dim();
    let mut mat = DMatrix::zeros(m, m);
    for n in 0..m {
        mat[(n, n)] = C64::new(f(n as f64 - q)?, 0.0);
    }
    Ok(Operator { space, matrix: mat })
}

/// Shifted number operator `n - q`.
pub fn number(space: FockSpace, q: f64) -> Result<Operator> {
    diag_fn(space, Ok, q)
}

/// Gain profile `1F1(-(n - q); 2; alpha)` on the diagonal.
pub fn gain_profile(space: FockSpace, alpha: f64, q: f64) -> Result<Operator> {
    check_shift(q, 0.5)?;
    diag_fn(space, |x| kummer_1f1_neg(x, alpha), q)
}

/// Deformed gain jump operator `a†(q) 1F1(-(n - q); 2; alpha)`.
pub fn gain_jump(space: FockSpace, alpha: f64, q: f64) -> Result<Operator> {
    if !(alpha > 0.0) {
        return Err(Error::Domain(format!("alpha must be positive, got {alpha}")));
    }
    check_shift(q, 0.5)?;
    create(space, q)?.compose(&gain_profile(space, alpha, q)?)
}
