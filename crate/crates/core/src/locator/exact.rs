//! Exact rational-arithmetic recovery, used to check the floating-point
//! locator against the algebra it approximates. Not used on the serving path.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Horner evaluation over the rationals; coefficients ascending.
pub fn eval_poly(coeffs: &[BigRational], x: &BigRational) -> BigRational {
    coeffs
        .iter()
        .rev()
        .fold(BigRational::zero(), |acc, c| acc * x + c)
}

/// `P`, `Q` solving the homogeneous system exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactRecovery {
    pub p: Vec<BigRational>,
    pub q: Vec<BigRational>,
    /// Dimension of the solution space of the homogeneous system.
    pub nullity: usize,
}

impl ExactRecovery {
    /// `P(x) / Q(x)`, or `None` where `Q` vanishes.
    pub fn eval(&self, x: &BigRational) -> Option<BigRational> {
        let q = eval_poly(&self.q, x);
        if q.is_zero() {
            None
        } else {
            Some(eval_poly(&self.p, x) / q)
        }
    }

    pub fn q_is_zero(&self) -> bool {
        self.q.iter().all(Zero::is_zero)
    }

    /// Positions of the `e` smallest `|Q(x_i)|`, ties by position.
    pub fn locate(&self, points: &[BigRational], e: usize) -> Vec<usize> {
        let mut ranked: Vec<(BigRational, usize)> = points
            .iter()
            .enumerate()
            .map(|(i, x)| (eval_poly(&self.q, x).abs(), i))
            .collect();
        ranked.sort();
        ranked.into_iter().take(e).map(|(_, i)| i).collect()
    }

    /// Whether `P/Q` equals `p/q` identically, tested as `P·q = Q·p`.
    pub fn equals(&self, p: &[BigRational], q: &[BigRational]) -> bool {
        let lhs = poly_mul(&self.p, q);
        let rhs = poly_mul(&self.q, p);
        let len = lhs.len().max(rhs.len());
        (0..len).all(|i| {
            let a = lhs.get(i).cloned().unwrap_or_else(BigRational::zero);
            let b = rhs.get(i).cloned().unwrap_or_else(BigRational::zero);
            a == b
        })
    }
}

fn poly_mul(a: &[BigRational], b: &[BigRational]) -> Vec<BigRational> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![BigRational::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Exact counterpart of [`super::bw_recover_rational`]: builds the homogeneous
/// system with `K + E` terms per polynomial and returns a non-trivial
/// solution from its reduced row echelon form.
pub fn bw_recover_exact(
    points: &[BigRational],
    values: &[BigRational],
    k: usize,
    e: usize,
) -> Result<ExactRecovery> {
    if points.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: values.len(),
        });
    }
    let terms = k + e;
    let unknowns = 2 * terms;
    if k == 0 || points.len() < unknowns {
        return Err(Error::Underdetermined {
            rows: points.len(),
            unknowns,
        });
    }
    let rows: Vec<Vec<BigRational>> = points
        .iter()
        .zip(values)
        .map(|(x, y)| {
            let mut row = vec![BigRational::zero(); unknowns];
            let mut power = BigRational::one();
            for d in 0..terms {
                row[d] = power.clone();
                row[terms + d] = -(y * &power);
                power *= x;
            }
            row
        })
        .collect();
    let (mut v, nullity) = nullspace_vector(rows, unknowns).ok_or(Error::DegenerateQ)?;
    let q = v.split_off(terms);
    let recovery = ExactRecovery { p: v, q, nullity };
    if recovery.q_is_zero() {
        return Err(Error::DegenerateQ);
    }
    Ok(recovery)
}

/// A nullspace vector (first free column set to 1) and the nullity, or
/// `None` when the matrix has full column rank.
fn nullspace_vector(mut m: Vec<Vec<BigRational>>, cols: usize) -> Option<(Vec<BigRational>, usize)> {
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..cols {
        let Some(found) = (row..m.len()).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        m.swap(row, found);
        let inv = m[row][col].recip();
        for v in &mut m[row][col..cols] {
            *v = &*v * &inv;
        }
        let pivot_row = m[row].clone();
        for (r, other) in m.iter_mut().enumerate() {
            if r != row && !other[col].is_zero() {
                let factor = other[col].clone();
                for (v, p) in other[col..cols].iter_mut().zip(&pivot_row[col..cols]) {
                    *v -= &factor * p;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    let &first_free = free.first()?;
    let mut v = vec![BigRational::zero(); cols];
    v[first_free] = BigRational::one();
    for (r, &pc) in pivots.iter().enumerate() {
        v[pc] = -m[r][first_free].clone();
    }
    Some((v, free.len()))
}

/// `numerator / denominator` as a [`BigRational`].
pub fn ratio(numerator: i64, denominator: i64) -> BigRational {
    BigRational::new(BigInt::from(numerator), BigInt::from(denominator))
}
