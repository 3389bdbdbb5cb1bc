//! Discrete Morse functions on simplicial complexes and on 2-dimensional
//! stratifolds built from surfaces glued along circles.

pub mod complex;
pub mod corpus;
pub mod exec;
pub mod homology;
pub mod morse;
pub mod optimizer;
pub mod oracle;
pub mod pipeline;
pub mod stratifold;
pub mod triangulate;
