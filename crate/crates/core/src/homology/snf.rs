//! Smith normal form over the integers with arbitrary-precision entries.
//!
//! Boundary matrices are sparse and full of unit entries, so unit pivots are
//! eliminated first on a sparse representation; whatever is left is reduced
//! densely.

use std::collections::{BTreeMap, BTreeSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, Zero};

use super::matrix::SparseIntMatrix;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmithForm {
    pub rank: usize,
    /// Nonzero diagonal entries `d₁ | d₂ | …`, all positive.
    pub divisors: Vec<BigInt>,
}

impl SmithForm {
    /// Divisors greater than one.
    pub fn torsion(&self) -> Vec<BigInt> {
        self.divisors
            .iter()
            .filter(|d| !d.is_one())
            .cloned()
            .collect()
    }
}

pub fn smith_normal_form(m: &SparseIntMatrix) -> SmithForm {
    let mut rows: Vec<BTreeMap<u32, BigInt>> = vec![BTreeMap::new(); m.rows()];
    let mut col_rows: Vec<BTreeSet<u32>> = vec![BTreeSet::new(); m.cols()];
    for (c, col) in m.columns().iter().enumerate() {
        for &(r, x) in col {
            rows[r as usize].insert(c as u32, BigInt::from(x));
            col_rows[c].insert(r);
        }
    }
    let mut divisors: Vec<BigInt> = Vec::new();

    loop {
        let mut pivoted = false;
        for c in 0..col_rows.len() {
            let pivot = col_rows[c]
                .iter()
                .filter(|&&r| rows[r as usize][&(c as u32)].abs().is_one())
                .min_by_key(|&&r| (rows[r as usize].len(), r))
                .copied();
            let Some(pr) = pivot else { continue };
            eliminate_unit_pivot(&mut rows, &mut col_rows, pr, c as u32);
            divisors.push(BigInt::one());
            pivoted = true;
        }
        if !pivoted {
            break;
        }
    }

    let live_rows: Vec<usize> = (0..rows.len()).filter(|&r| !rows[r].is_empty()).collect();
    let live_cols: Vec<u32> = (0..col_rows.len() as u32)
        .filter(|&c| !col_rows[c as usize].is_empty())
        .collect();
    let mut dense: Vec<Vec<BigInt>> = live_rows
        .iter()
        .map(|&r| {
            live_cols
                .iter()
                .map(|c| rows[r].get(c).cloned().unwrap_or_default())
                .collect()
        })
        .collect();
    divisors.extend(dense_snf(&mut dense));
    SmithForm {
        rank: divisors.len(),
        divisors,
    }
}

/// Clears column `c` with the ±1 entry in row `pr`, then drops row `pr` and
/// column `c` (the remaining entries of row `pr` vanish under column moves
/// that touch no other row).
fn eliminate_unit_pivot(
    rows: &mut [BTreeMap<u32, BigInt>],
    col_rows: &mut [BTreeSet<u32>],
    pr: u32,
    c: u32,
) {
    let pivot_row = std::mem::take(&mut rows[pr as usize]);
    let unit = pivot_row[&c].clone();
    for &cc in pivot_row.keys() {
        col_rows[cc as usize].remove(&pr);
    }
    let targets: Vec<u32> = col_rows[c as usize].iter().copied().collect();
    for r in targets {
        let row = &mut rows[r as usize];
        let factor = &row[&c] * &unit;
        for (cc, x) in &pivot_row {
            let entry = row.entry(*cc).or_default();
            *entry -= &factor * x;
            if entry.is_zero() {
                row.remove(cc);
                col_rows[*cc as usize].remove(&r);
            } else {
                col_rows[*cc as usize].insert(r);
            }
        }
        debug_assert!(!row.contains_key(&c));
    }
    debug_assert!(col_rows[c as usize].is_empty());
}

/// Classical Smith reduction in place; returns the positive divisor chain.
fn dense_snf(a: &mut [Vec<BigInt>]) -> Vec<BigInt> {
    let rows = a.len();
    let cols = a.first().map_or(0, Vec::len);
    let mut divisors = Vec::new();
    let mut t = 0;
    while t < rows.min(cols) {
        // Smallest nonzero entry of the trailing block becomes the pivot.
        let mut best: Option<(usize, usize)> = None;
        for i in t..rows {
            for j in t..cols {
                if !a[i][j].is_zero() && best.is_none_or(|(bi, bj)| a[i][j].abs() < a[bi][bj].abs())
                {
                    best = Some((i, j));
                }
            }
        }
        let Some((pi, pj)) = best else { break };
        a.swap(t, pi);
        for row in a.iter_mut() {
            row.swap(t, pj);
        }
        loop {
            let mut dirty = false;
            for i in t + 1..rows {
                if a[i][t].is_zero() {
                    continue;
                }
                let q = a[i][t].div_floor(&a[t][t]);
                for j in t..cols {
                    let sub = &q * &a[t][j];
                    a[i][j] -= sub;
                }
                if !a[i][t].is_zero() {
                    a.swap(t, i);
                    dirty = true;
                }
            }
            for j in t + 1..cols {
                if a[t][j].is_zero() {
                    continue;
                }
                let q = a[t][j].div_floor(&a[t][t]);
                for row in a.iter_mut().skip(t) {
                    let sub = &q * &row[t];
                    row[j] -= sub;
                }
                if !a[t][j].is_zero() {
                    for row in a.iter_mut() {
                        row.swap(t, j);
                    }
                    dirty = true;
                }
            }
            if dirty {
                continue;
            }
            // Pivot must divide the whole trailing block.
            let offender = (t + 1..rows)
                .flat_map(|i| (t + 1..cols).map(move |j| (i, j)))
                .find(|&(i, j)| !(&a[i][j] % &a[t][t]).is_zero());
            match offender {
                Some((i, _)) => {
                    for j in t..cols {
                        let add = a[i][j].clone();
                        a[t][j] += add;
                    }
                }
                None => break,
            }
        }
        divisors.push(a[t][t].abs());
        t += 1;
    }
    divisors
}
