//! Linear erasure coding of job batches.
//!
//! A batch of `n` equal-size payloads `J_1..J_n` becomes `n + m` coded
//! payloads `K_j = A[j][1] J_1 + ... + A[j][n] J_n`, computed symbol by
//! symbol over GF(2^8) or GF(2^16). Any `n` coded payloads whose coefficient
//! rows are independent recover the batch by Gaussian elimination.
//!
//! ```
//! use redundancy_core::codec::{decode, encode, Gf256, Scheme};
//!
//! let jobs = [b"alpha".to_vec(), b"bravo".to_vec(), b"gamma".to_vec()];
//! let coded = encode::<Gf256>(&jobs, 2, Scheme::SystematicVandermonde, 0)?;
//! assert_eq!(coded.len(), 5);
//!
//! // Lose the first two coded jobs; the other three are enough.
//! let recovered = decode(&coded[2..])?;
//! assert_eq!(recovered, jobs);
//! # Ok::<(), redundancy_core::Error>(())
//! ```

mod field;
mod matrix;

pub use field::{GaloisField, Gf256, Gf65536};
pub use matrix::{invert, CodingMatrix, Scheme};

use crate::error::{Error, Result};

/// One coded job: its position in the batch, the coefficient row that
/// produced it, and the coded payload.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CodedJob<F> {
    pub batch_id: u64,
    /// Zero-based row of the coding matrix.
    pub index: usize,
    pub coefficients: Vec<F>,
    pub payload: Vec<u8>,
}

fn to_symbols<F: GaloisField>(payload: &[u8]) -> Vec<F> {
    payload.chunks_exact(F::SYMBOL_BYTES).map(F::read_symbol).collect()
}

fn from_symbols<F: GaloisField>(symbols: &[F]) -> Vec<u8> {
    let mut out = vec![0u8; symbols.len() * F::SYMBOL_BYTES];
    for (sym, chunk) in symbols.iter().zip(out.chunks_exact_mut(F::SYMBOL_BYTES)) {
        sym.write_symbol(chunk);
    }
    out
}

/// `sum_i coefficients[i] * sources[i]`, symbol-wise.
fn combine<F: GaloisField>(coefficients: &[F], sources: &[Vec<F>]) -> Vec<F> {
    let len = sources[0].len();
    let mut acc = vec![F::ZERO; len];
    for (&c, source) in coefficients.iter().zip(sources) {
        if c == F::ZERO {
            continue;
        }
        for (a, &s) in acc.iter_mut().zip(source) {
            *a = *a + c * s;
        }
    }
    acc
}

impl<F: GaloisField> CodingMatrix<F> {
    /// Encodes exactly `n` equal-length payloads into `n + m` coded jobs.
    pub fn encode<P: AsRef<[u8]>>(&self, batch_id: u64, jobs: &[P]) -> Result<Vec<CodedJob<F>>> {
        if jobs.len() != self.n() {
            return Err(Error::Codec(format!(
                "matrix expects {} source jobs, got {}",
                self.n(),
                jobs.len()
            )));
        }
        let len = jobs[0].as_ref().len();
        if jobs.iter().any(|j| j.as_ref().len() != len) {
            return Err(Error::Codec("source payloads differ in length".into()));
        }
        if len % F::SYMBOL_BYTES != 0 {
            return Err(Error::Codec(format!(
                "payload length {len} is not a multiple of the {}-byte symbol size",
                F::SYMBOL_BYTES
            )));
        }
        let sources: Vec<Vec<F>> = jobs.iter().map(|j| to_symbols(j.as_ref())).collect();
        Ok(self
            .rows()
            .iter()
            .enumerate()
            .map(|(index, row)| CodedJob {
                batch_id,
                index,
                coefficients: row.clone(),
                payload: from_symbols(&combine(row, &sources)),
            })
            .collect())
    }
}

/// Builds a coding matrix for `jobs.len()` sources plus `m` redundant rows
/// and encodes the batch with id 0.
pub fn encode<F: GaloisField>(
    jobs: &[impl AsRef<[u8]>],
    m: usize,
    scheme: Scheme,
    seed: u64,
) -> Result<Vec<CodedJob<F>>> {
    CodingMatrix::<F>::new(jobs.len(), m, scheme, seed)?.encode(0, jobs)
}

/// Recovers the `n` source payloads from coded jobs of one batch.
///
/// Rows are taken in the given order, skipping any that are linearly
/// dependent on those already chosen, until `n` independent rows are found.
pub fn decode<F: GaloisField>(coded: &[CodedJob<F>]) -> Result<Vec<Vec<u8>>> {
    let first = coded
        .first()
        .ok_or_else(|| Error::Codec("no coded jobs to decode".into()))?;
    let n = first.coefficients.len();
    let len = first.payload.len();
    if n == 0 {
        return Err(Error::Codec("empty coefficient row".into()));
    }
    for job in coded {
        if job.batch_id != first.batch_id {
            return Err(Error::Codec(format!(
                "coded jobs from batches {} and {} mixed",
                first.batch_id, job.batch_id
            )));
        }
        if job.coefficients.len() != n {
            return Err(Error::Codec("coefficient rows differ in length".into()));
        }
        if job.payload.len() != len {
            return Err(Error::Codec("coded payloads differ in length".into()));
        }
    }
    if len % F::SYMBOL_BYTES != 0 {
        return Err(Error::Codec(format!("payload length {len} is not a whole number of symbols")));
    }
    if coded.len() < n {
        return Err(Error::Codec(format!("need at least {n} coded jobs, got {}", coded.len())));
    }

    let chosen = independent_rows(coded, n);
    if chosen.len() < n {
        return Err(Error::Unrecoverable {
            rank: chosen.len(),
            needed: n,
        });
    }
    let square: Vec<Vec<F>> = chosen.iter().map(|&i| coded[i].coefficients.clone()).collect();
    let inverse = invert(&square).expect("independent rows form an invertible matrix");
    let symbols: Vec<Vec<F>> = chosen.iter().map(|&i| to_symbols(&coded[i].payload)).collect();
    Ok(inverse
        .iter()
        .map(|row| from_symbols(&combine(row, &symbols)))
        .collect())
}

/// Indices of the first `n` rows (in order) that are linearly independent.
fn independent_rows<F: GaloisField>(coded: &[CodedJob<F>], n: usize) -> Vec<usize> {
    // Echelon basis: (pivot column, row normalised so the pivot is one).
    let mut basis: Vec<(usize, Vec<F>)> = Vec::with_capacity(n);
    let mut chosen = Vec::with_capacity(n);
    for (i, job) in coded.iter().enumerate() {
        let mut row = job.coefficients.clone();
        for (pivot, base) in &basis {
            let factor = row[*pivot];
            if factor != F::ZERO {
                for (r, &b) in row.iter_mut().zip(base) {
                    *r = *r + factor * b;
                }
            }
        }
        if let Some(pivot) = row.iter().position(|&x| x != F::ZERO) {
            let scale = row[pivot].inv().expect("non-zero pivot");
            row.iter_mut().for_each(|x| *x = *x * scale);
            basis.push((pivot, row));
            chosen.push(i);
            if chosen.len() == n {
                break;
            }
        }
    }
    chosen
}
