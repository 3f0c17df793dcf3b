use std::collections::BTreeMap;
use std::fmt;

use super::{Polynomial, Var};
use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatrixError {
    #[error("matrix is {rows}x{cols}, expected a square matrix")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("index ({row}, {col}) out of bounds for a {rows}x{cols} matrix")]
    OutOfBounds {
        row: usize,
        col: usize,
        rows: usize,
        cols: usize,
    },
}

/// Dense matrix with polynomial entries, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct SymMatrix<C> {
    rows: usize,
    cols: usize,
    data: Vec<Polynomial<C>>,
}

impl<C: Scalar> SymMatrix<C> {
    pub fn new(rows: usize, cols: usize, data: Vec<Polynomial<C>>) -> Result<Self, MatrixError> {
        if rows == 0 || cols == 0 {
            return Err(MatrixError::Dimension(format!("empty {rows}x{cols} matrix")));
        }
        if data.len() != rows * cols {
            return Err(MatrixError::Dimension(format!(
                "{} entries for a {rows}x{cols} matrix",
                data.len()
            )));
        }
        Ok(SymMatrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Polynomial<C>) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        SymMatrix { rows, cols, data }
    }

    pub fn from_scalars(rows: usize, cols: usize, vals: &[C]) -> Result<Self, MatrixError> {
        Self::new(rows, cols, vals.iter().cloned().map(Polynomial::constant).collect())
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| Polynomial::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { Polynomial::one() } else { Polynomial::zero() })
    }

    pub fn column(entries: Vec<Polynomial<C>>) -> Self {
        let n = entries.len();
        Self::new(n, 1, entries).expect("nonempty column")
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> Result<&Polynomial<C>, MatrixError> {
        if row >= self.rows || col >= self.cols {
            return Err(MatrixError::OutOfBounds {
                row,
                col,
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(&self.data[row * self.cols + col])
    }

    pub fn set(&mut self, row: usize, col: usize, p: Polynomial<C>) -> Result<(), MatrixError> {
        self.get(row, col)?;
        self.data[row * self.cols + col] = p;
        Ok(())
    }

    pub fn entries(&self) -> &[Polynomial<C>] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[Polynomial<C>] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<Polynomial<C>> {
        (0..self.rows).map(|i| self[(i, j)].clone()).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn map(&self, f: impl Fn(&Polynomial<C>) -> Polynomial<C>) -> Self {
        SymMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn substitute(&self, bindings: &BTreeMap<Var, Polynomial<C>>) -> Self {
        self.map(|p| p.substitute(bindings))
    }

    pub fn add(&self, other: &Self) -> Result<Self, MatrixError> {
        self.same_shape(other)?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] + &other[(i, j)]))
    }

    pub fn sub(&self, other: &Self) -> Result<Self, MatrixError> {
        self.same_shape(other)?;
        Ok(Self::from_fn(self.rows, self.cols, |i, j| &self[(i, j)] - &other[(i, j)]))
    }

    pub fn scale(&self, p: &Polynomial<C>) -> Self {
        self.map(|e| e * p)
    }

    pub fn mul(&self, other: &Self) -> Result<Self, MatrixError> {
        if self.cols != other.rows {
            return Err(MatrixError::Dimension(format!(
                "cannot multiply {}x{} by {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        Ok(Self::from_fn(self.rows, other.cols, |i, j| {
            let mut acc = Polynomial::zero();
            for k in 0..self.cols {
                let (a, b) = (&self[(i, k)], &other[(k, j)]);
                if !a.is_zero() && !b.is_zero() {
                    acc += a * b;
                }
            }
            acc
        }))
    }

    pub fn pow(&self, e: u32) -> Result<Self, MatrixError> {
        self.require_square()?;
        let mut acc = Self::identity(self.rows);
        for _ in 0..e {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    pub fn is_upper_triangular(&self) -> bool {
        (0..self.rows).all(|i| (0..i.min(self.cols)).all(|j| self[(i, j)].is_zero()))
    }

    pub fn is_lower_triangular(&self) -> bool {
        (0..self.rows).all(|i| (i + 1..self.cols).all(|j| self[(i, j)].is_zero()))
    }

    /// Determinant by fraction-free (Bareiss) elimination.
    pub fn det(&self) -> Result<Polynomial<C>, MatrixError> {
        self.require_square()?;
        let n = self.rows;
        let mut m: Vec<Vec<Polynomial<C>>> = (0..n).map(|i| self.row(i).to_vec()).collect();
        let mut negate = false;
        let mut prev = Polynomial::one();
        for k in 0..n {
            if m[k][k].is_zero() {
                match (k + 1..n).find(|&r| !m[r][k].is_zero()) {
                    Some(r) => {
                        m.swap(k, r);
                        negate = !negate;
                    }
                    None => return Ok(Polynomial::zero()),
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let num = &(&m[k][k] * &m[i][j]) - &(&m[i][k] * &m[k][j]);
                    m[i][j] = num
                        .div_exact(&prev)
                        .expect("Bareiss step divides exactly");
                }
            }
            prev = m[k][k].clone();
        }
        let d = m[n - 1][n - 1].clone();
        Ok(if negate { -d } else { d })
    }

    /// `det(z*I - self)` as a polynomial in `z`.
    pub fn char_poly(&self, z: &Var) -> Result<Polynomial<C>, MatrixError> {
        self.require_square()?;
        let zp = Polynomial::var(z);
        let shifted = Self::from_fn(self.rows, self.cols, |i, j| {
            if i == j {
                &zp - &self[(i, j)]
            } else {
                -&self[(i, j)]
            }
        });
        shifted.det()
    }

    fn require_square(&self) -> Result<(), MatrixError> {
        if self.is_square() {
            Ok(())
        } else {
            Err(MatrixError::NotSquare {
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    fn same_shape(&self, other: &Self) -> Result<(), MatrixError> {
        if (self.rows, self.cols) == (other.rows, other.cols) {
            Ok(())
        } else {
            Err(MatrixError::Dimension(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )))
        }
    }
}

/// Panics on out-of-range indices; see [`SymMatrix::get`] for the checked form.
impl<C> std::ops::Index<(usize, usize)> for SymMatrix<C> {
    type Output = Polynomial<C>;
    fn index(&self, (i, j): (usize, usize)) -> &Polynomial<C> {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i}, {j}) out of bounds for a {}x{} matrix",
            self.rows,
            self.cols
        );
        &self.data[i * self.cols + j]
    }
}

impl<C: Scalar> fmt::Display for SymMatrix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for i in 0..self.rows {
            if i > 0 {
                f.write_str(", ")?;
            }
            f.write_str("[")?;
            for (j, e) in self.row(i).iter().enumerate() {
                if j > 0 {
                    f.write_str(", ")?;
                }
                write!(f, "{e}")?;
            }
            f.write_str("]")?;
        }
        f.write_str("]")
    }
}

impl<C: Scalar> fmt::Debug for SymMatrix<C> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}
