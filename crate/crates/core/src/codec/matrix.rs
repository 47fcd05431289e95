//! Coefficient matrices and Gauss-Jordan inversion over a binary field.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::field::GaloisField;
use crate::error::{Error, Result};

/// How the `(n + m) x n` coefficient matrix is built.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Reed-Solomon style generator: identity on top, every `n x n`
    /// submatrix invertible.
    SystematicVandermonde,
    /// Independent uniform coefficients; MDS with high probability only.
    RandomLinear,
    /// Rows supplied by the caller.
    Custom,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::SystematicVandermonde => "systematic-vandermonde",
            Scheme::RandomLinear => "random-linear",
            Scheme::Custom => "custom",
        })
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "systematic-vandermonde" | "vandermonde" => Ok(Scheme::SystematicVandermonde),
            "random-linear" | "random" => Ok(Scheme::RandomLinear),
            other => Err(Error::Codec(format!("unknown coding scheme `{other}`"))),
        }
    }
}

/// The coefficients `A[j][i]` combining `n` source jobs into `n + m` coded jobs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodingMatrix<F> {
    rows: Vec<Vec<F>>,
    n: usize,
    scheme: Scheme,
}

impl<F: GaloisField> CodingMatrix<F> {
    /// Builds a matrix for `n` sources and `m` redundant outputs. The seed
    /// only matters for [`Scheme::RandomLinear`].
    pub fn new(n: usize, m: usize, scheme: Scheme, seed: u64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Codec("need at least one source job".into()));
        }
        if n + m > F::ORDER {
            return Err(Error::Codec(format!(
                "n + m = {} exceeds the field order {}",
                n + m,
                F::ORDER
            )));
        }
        let rows = match scheme {
            Scheme::SystematicVandermonde => systematic_vandermonde(n, m),
            Scheme::RandomLinear => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..n + m)
                    .map(|_| (0..n).map(|_| F::from_index(rng.random_range(0..F::ORDER))).collect())
                    .collect()
            }
            Scheme::Custom => {
                return Err(Error::Codec("custom matrices are built with from_rows".into()))
            }
        };
        Ok(Self { rows, n, scheme })
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        if n == 0 {
            return Err(Error::Codec("matrix needs at least one non-empty row".into()));
        }
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Codec("rows differ in length".into()));
        }
        Ok(Self {
            rows,
            n,
            scheme: Scheme::Custom,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.rows.len() - self.n
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn rows(&self) -> &[Vec<F>] {
        &self.rows
    }

    pub fn row(&self, j: usize) -> &[F] {
        &self.rows[j]
    }

    /// Checks every `n`-row subset for invertibility. Exponential in `n + m`.
    pub fn is_mds(&self) -> bool {
        let mut chosen = Vec::with_capacity(self.n);
        all_subsets_invertible(&self.rows, self.n, 0, &mut chosen)
    }
}

fn all_subsets_invertible<F: GaloisField>(
    rows: &[Vec<F>],
    n: usize,
    start: usize,
    chosen: &mut Vec<usize>,
) -> bool {
    if chosen.len() == n {
        let sub: Vec<Vec<F>> = chosen.iter().map(|&i| rows[i].clone()).collect();
        return invert(&sub).is_some();
    }
    for i in start..rows.len() {
        chosen.push(i);
        let ok = all_subsets_invertible(rows, n, i + 1, chosen);
        chosen.pop();
        if !ok {
            return false;
        }
    }
    true
}

/// `V * inv(V_top)` for the Vandermonde matrix `V[j][c] = x_j^c` at the
/// distinct points `x_j = j`.
fn systematic_vandermonde<F: GaloisField>(n: usize, m: usize) -> Vec<Vec<F>> {
    let vandermonde: Vec<Vec<F>> = (0..n + m)
        .map(|j| {
            let x = F::from_index(j);
            let mut power = F::ONE;
            (0..n)
                .map(|_| {
                    let current = power;
                    power = power * x;
                    current
                })
                .collect()
        })
        .collect();
    let top_inverse = invert(&vandermonde[..n]).expect("Vandermonde rows at distinct points are independent");
    multiply(&vandermonde, &top_inverse)
}

pub(crate) fn multiply<F: GaloisField>(a: &[Vec<F>], b: &[Vec<F>]) -> Vec<Vec<F>> {
    let cols = b[0].len();
    a.iter()
        .map(|row| {
            (0..cols)
                .map(|c| row.iter().zip(b).fold(F::ZERO, |acc, (&x, brow)| acc + x * brow[c]))
                .collect()
        })
        .collect()
}

/// Gauss-Jordan inverse of a square matrix, `None` if singular.
pub fn invert<F: GaloisField>(matrix: &[Vec<F>]) -> Option<Vec<Vec<F>>> {
    let size = matrix.len();
    let mut work: Vec<Vec<F>> = matrix.to_vec();
    let mut inverse: Vec<Vec<F>> = (0..size)
        .map(|i| (0..size).map(|j| if i == j { F::ONE } else { F::ZERO }).collect())
        .collect();

    for col in 0..size {
        let pivot = (col..size).find(|&r| work[r][col] != F::ZERO)?;
        work.swap(col, pivot);
        inverse.swap(col, pivot);

        let scale = work[col][col].inv()?;
        for c in 0..size {
            work[col][c] = work[col][c] * scale;
            inverse[col][c] = inverse[col][c] * scale;
        }
        for r in 0..size {
            let factor = work[r][col];
            if r == col || factor == F::ZERO {
                continue;
            }
            for c in 0..size {
                // Subtraction is addition in characteristic two.
                work[r][c] = work[r][c] + factor * work[col][c];
                inverse[r][c] = inverse[r][c] + factor * inverse[col][c];
            }
        }
    }
    Some(inverse)
}
