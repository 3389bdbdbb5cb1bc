use super::matrix::SparseIntMatrix;

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn prime_factors(mut n: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            out.push(d);
            while n.is_multiple_of(d) {
                n /= d;
            }
        }
        d += 1;
    }
    if n > 1 {
        out.push(n);
    }
    out
}

fn inverse(a: u64, p: u64) -> u64 {
    let (mut e, mut base, mut acc) = (p - 2, a % p, 1u64);
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * base as u128 % p as u128) as u64;
        }
        base = (base as u128 * base as u128 % p as u128) as u64;
        e >>= 1;
    }
    acc
}

/// Rank over `𝔽_p` by column reduction on the lowest nonzero row.
pub fn rank_mod_p(m: &SparseIntMatrix, p: u64) -> usize {
    debug_assert!(is_prime(p));
    let reduce = |x: i64| -> u64 { x.rem_euclid(p as i64) as u64 };
    let mut pivots: std::collections::HashMap<u32, Vec<(u32, u64)>> = Default::default();
    for col in m.columns() {
        let mut v: Vec<(u32, u64)> = col
            .iter()
            .map(|&(r, x)| (r, reduce(x)))
            .filter(|&(_, x)| x != 0)
            .collect();
        while let Some(&(low, lv)) = v.last() {
            let Some(piv) = pivots.get(&low) else {
                // Normalize the pivot to 1 at its lowest row.
                let inv = inverse(lv, p);
                for e in v.iter_mut() {
                    e.1 = (e.1 as u128 * inv as u128 % p as u128) as u64;
                }
                pivots.insert(low, v);
                break;
            };
            v = axpy(&v, piv, p - lv, p);
        }
    }
    pivots.len()
}

/// `a + s·b` over `𝔽_p` for sorted sparse vectors.
fn axpy(a: &[(u32, u64)], b: &[(u32, u64)], s: u64, p: u64) -> Vec<(u32, u64)> {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    let mul = |x: u64| (x as u128 * s as u128 % p as u128) as u64;
    while i < a.len() || j < b.len() {
        let (row, val) = match (a.get(i), b.get(j)) {
            (Some(&(ra, xa)), Some(&(rb, xb))) if ra == rb => {
                i += 1;
                j += 1;
                (ra, (xa + mul(xb)) % p)
            }
            (Some(&(ra, xa)), Some(&(rb, _))) if ra < rb => {
                i += 1;
                (ra, xa)
            }
            (Some(&(ra, xa)), None) => {
                i += 1;
                (ra, xa)
            }
            (_, Some(&(rb, xb))) => {
                j += 1;
                (rb, mul(xb))
            }
            (None, None) => unreachable!(),
        };
        if val != 0 {
            out.push((row, val));
        }
    }
    out
}
