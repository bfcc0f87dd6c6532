//! Fraction-free Gauss–Jordan elimination over the integers.
//!
//! After elimination every pivot equals the determinant of the leading pivot
//! minor, so a full-rank system's solution is `x_j = b'_j / det` without ever
//! leaving integer arithmetic. All intermediate entries are minors of the
//! input, which is why each division by the previous pivot is exact.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Solution {
    /// `x_j = numerators[j] / denominator`, `denominator > 0`.
    Unique { numerators: Vec<BigInt>, denominator: BigInt },
    /// Columns without a pivot.
    RankDeficient { rank: usize, free_columns: Vec<usize> },
    /// Some equation reduces to `0 = c` with `c != 0`.
    Inconsistent,
}

/// Solves `A x = b` exactly, `A` given row-wise with `cols` columns.
pub fn solve(a: &[Vec<i64>], b: &[i64], cols: usize) -> Solution {
    assert_eq!(a.len(), b.len());
    let m = a.len();
    let mut rows: Vec<Vec<BigInt>> = a
        .iter()
        .zip(b)
        .map(|(row, &rhs)| {
            assert_eq!(row.len(), cols);
            row.iter().map(|&x| BigInt::from(x)).chain([BigInt::from(rhs)]).collect()
        })
        .collect();

    let mut prev = BigInt::from(1);
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..cols {
        let Some(p) = (r..m).find(|&i| !rows[i][col].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let pivot_row = rows[r].clone();
        let piv = pivot_row[col].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[col].clone();
            for j in 0..=cols {
                let num = &piv * &row[j] - &factor * &pivot_row[j];
                debug_assert!((&num % &prev).is_zero(), "non-exact Bareiss division");
                row[j] = num / &prev;
            }
        }
        prev = piv;
        pivots.push(col);
        r += 1;
        if r == m {
            break;
        }
    }

    if rows[r..].iter().any(|row| !row[cols].is_zero()) {
        return Solution::Inconsistent;
    }
    if r < cols {
        let free_columns = (0..cols).filter(|c| !pivots.contains(c)).collect();
        return Solution::RankDeficient { rank: r, free_columns };
    }
    let sign = if prev.is_negative() { -1 } else { 1 };
    let numerators = (0..cols).map(|k| &rows[k][cols] * sign).collect();
    Solution::Unique { numerators, denominator: prev.abs() }
}
