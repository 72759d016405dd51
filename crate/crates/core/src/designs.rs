//! Standard test designs.

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::DesignMatrix;

/// `[I_p; 0]`, an `n x p` design with orthonormal columns.
pub fn orthonormal(n: usize, p: usize) -> Result<DesignMatrix> {
    if n < p {
        return Err(Error::InvalidArgument(format!(
            "orthonormal design needs n >= p, got n = {n}, p = {p}"
        )));
    }
    DesignMatrix::new(DMatrix::from_fn(n, p, |i, j| if i == j { 1.0 } else { 0.0 }))
}

/// Unit-norm columns with pairwise inner product `rho`:
/// `[sqrt(1-rho) I_p; sqrt(rho) 1'; 0]`. Needs `n >= p + 1`.
pub fn equicorrelated(n: usize, p: usize, rho: f64) -> Result<DesignMatrix> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::InvalidArgument(format!("rho must lie in [0, 1), got {rho}")));
    }
    if n < p + 1 {
        return Err(Error::InvalidArgument(format!(
            "equicorrelated design needs n >= p + 1, got n = {n}, p = {p}"
        )));
    }
    let (a, b) = ((1.0 - rho).sqrt(), rho.sqrt());
    DesignMatrix::new(DMatrix::from_fn(n, p, |i, j| {
        if i == j {
            a
        } else if i == p {
            b
        } else {
            0.0
        }
    }))
}

/// Independent standard normal entries.
pub fn iid_gaussian(n: usize, p: usize, seed: u64) -> Result<DesignMatrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // filled column by column so a wider design extends a narrower one
    let mut m = DMatrix::zeros(n, p);
    for j in 0..p {
        for i in 0..n {
            m[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    DesignMatrix::new(m)
}
