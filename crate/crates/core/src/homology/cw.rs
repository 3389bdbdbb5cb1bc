//! The cellular chain complex of a stratifold: one 2-cell per surface, the
//! surface's word letters, a bridge 1-cell from its base point to each circle
//! it wraps, and one vertex plus one loop per circle.
//!
//! 1-cells are ordered circles first, then per surface its letters followed
//! by its bridges. 0-cells are circle base points first, then surface base
//! points.

use super::{
    betti_from_matrices, BettiVector, BoundaryMatrices, Coefficients, HomologyError,
    SparseIntMatrix,
};
use crate::stratifold::{validate_spec, StratifoldSpec};

pub fn cw_chain_matrices(spec: &StratifoldSpec) -> Result<BoundaryMatrices, HomologyError> {
    let errs = validate_spec(spec);
    if !errs.is_empty() {
        return Err(HomologyError::InvalidSpec(errs));
    }
    let nc = spec.circles.len();
    let n = spec.n();
    let c1 = nc
        + spec
            .surfaces
            .iter()
            .map(|s| s.schema_len() + s.attachments.len())
            .sum::<usize>();
    let mut d1 = SparseIntMatrix::zeros(nc + n, c1);
    let mut d2 = SparseIntMatrix::zeros(c1, n);

    let mut next = nc;
    for (i, s) in spec.surfaces.iter().enumerate() {
        if !s.is_orientable() {
            for k in 0..s.schema_len() {
                d2.add(next + k, i, 2);
            }
        }
        next += s.schema_len();
        for a in &s.attachments {
            let j = spec.circle_index(&a.circle).expect("validated");
            d2.add(j, i, a.degree);
            d1.add(j, next, 1);
            d1.add(nc + i, next, -1);
            next += 1;
        }
    }
    debug_assert_eq!(next, c1);
    Ok(BoundaryMatrices { d1, d2 })
}

pub fn cw_betti(
    spec: &StratifoldSpec,
    coefficients: Coefficients,
) -> Result<BettiVector, HomologyError> {
    betti_from_matrices(&cw_chain_matrices(spec)?, coefficients)
}
