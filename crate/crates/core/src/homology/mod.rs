//! Exact homology over ℤ, ℚ and 𝔽_p from integer boundary matrices.

mod cw;
mod matrix;
mod modp;
mod snf;

use std::fmt;
use std::str::FromStr;

use num_traits::ToPrimitive;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::complex::SimplicialComplex2;

pub use cw::{cw_betti, cw_chain_matrices};
pub use matrix::{boundary_matrices, BoundaryMatrices, SparseIntMatrix};
pub use modp::{is_prime, prime_factors, rank_mod_p};
pub use snf::{smith_normal_form, SmithForm};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum HomologyError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("unrecognized coefficients {0:?} (expected Z, Q or F<p>)")]
    BadCoefficients(String),
    #[error("invalid stratifold spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error("torsion coefficient {0} does not fit in 64 bits")]
    Overflow(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Coefficients {
    Integer,
    Rational,
    Prime(u64),
}

impl Coefficients {
    pub fn prime(p: u64) -> Result<Self, HomologyError> {
        if is_prime(p) {
            Ok(Coefficients::Prime(p))
        } else {
            Err(HomologyError::NotPrime(p))
        }
    }

    pub fn is_field(self) -> bool {
        !matches!(self, Coefficients::Integer)
    }
}

impl fmt::Display for Coefficients {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Coefficients::Integer => f.write_str("Z"),
            Coefficients::Rational => f.write_str("Q"),
            Coefficients::Prime(p) => write!(f, "F{p}"),
        }
    }
}

impl FromStr for Coefficients {
    type Err = HomologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        match t {
            "Z" | "z" => return Ok(Coefficients::Integer),
            "Q" | "q" => return Ok(Coefficients::Rational),
            _ => {}
        }
        let digits = t.strip_prefix(['F', 'f']).unwrap_or("");
        match digits.parse::<u64>() {
            Ok(p) => Coefficients::prime(p),
            Err(_) => Err(HomologyError::BadCoefficients(s.to_string())),
        }
    }
}

impl TryFrom<String> for Coefficients {
    type Error = HomologyError;
    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Coefficients> for String {
    fn from(c: Coefficients) -> String {
        c.to_string()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BettiVector {
    pub b0: usize,
    pub b1: usize,
    pub b2: usize,
    pub coefficients: Coefficients,
    /// Elementary divisors > 1 of H₁; only populated over ℤ.
    pub torsion: Vec<u64>,
}

impl BettiVector {
    pub fn new(b: [usize; 3], coefficients: Coefficients) -> Self {
        BettiVector {
            b0: b[0],
            b1: b[1],
            b2: b[2],
            coefficients,
            torsion: Vec::new(),
        }
    }

    pub fn as_array(&self) -> [usize; 3] {
        [self.b0, self.b1, self.b2]
    }

    pub fn euler(&self) -> i64 {
        self.b0 as i64 - self.b1 as i64 + self.b2 as i64
    }

    pub fn total(&self) -> usize {
        self.b0 + self.b1 + self.b2
    }
}

impl fmt::Display for BettiVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "({}, {}, {}) over {}",
            self.b0, self.b1, self.b2, self.coefficients
        )?;
        if !self.torsion.is_empty() {
            let t: Vec<String> = self.torsion.iter().map(u64::to_string).collect();
            write!(f, ", torsion [{}]", t.join(", "))?;
        }
        Ok(())
    }
}

pub fn betti(
    k: &SimplicialComplex2,
    coefficients: Coefficients,
) -> Result<BettiVector, HomologyError> {
    betti_from_matrices(&boundary_matrices(k), coefficients)
}

pub fn betti_from_matrices(
    bm: &BoundaryMatrices,
    coefficients: Coefficients,
) -> Result<BettiVector, HomologyError> {
    let [c0, c1, c2] = bm.chain_ranks();
    let (r1, r2, torsion) = match coefficients {
        Coefficients::Prime(p) => {
            if !is_prime(p) {
                return Err(HomologyError::NotPrime(p));
            }
            (rank_mod_p(&bm.d1, p), rank_mod_p(&bm.d2, p), Vec::new())
        }
        Coefficients::Rational => (
            smith_normal_form(&bm.d1).rank,
            smith_normal_form(&bm.d2).rank,
            Vec::new(),
        ),
        Coefficients::Integer => {
            let s2 = smith_normal_form(&bm.d2);
            let torsion = s2
                .torsion()
                .iter()
                .map(|d| {
                    d.to_u64()
                        .ok_or_else(|| HomologyError::Overflow(d.to_string()))
                })
                .collect::<Result<Vec<_>, _>>()?;
            (smith_normal_form(&bm.d1).rank, s2.rank, torsion)
        }
    };
    Ok(BettiVector {
        b0: c0 - r1,
        b1: c1 - r1 - r2,
        b2: c2 - r2,
        coefficients,
        torsion,
    })
}
