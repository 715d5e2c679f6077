//! Seeded random matrices and states.
//!
//! Every sampler takes the generator explicitly; nothing draws from ambient
//! thread-local state.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c, BipartiteOperator, CMatrix, CVector, PureState, SubsystemLayout, C64};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian(rng: &mut Rng) -> f64 {
    StandardNormal.sample(rng)
}

/// Standard complex Gaussian with `E|z|² = 1`.
pub fn complex_gaussian(rng: &mut Rng) -> C64 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    c(gaussian(rng) * s, gaussian(rng) * s)
}

/// Ginibre matrix with i.i.d. standard complex Gaussian entries.
pub fn random_matrix(n: usize, rng: &mut Rng) -> CMatrix {
    CMatrix::from_fn(n, n, |_, _| complex_gaussian(rng))
}

pub fn random_vector(n: usize, rng: &mut Rng) -> CVector {
    CVector::from_fn(n, |_, _| complex_gaussian(rng))
}

/// Uniformly distributed pure state.
pub fn random_state(layout: &SubsystemLayout, rng: &mut Rng) -> PureState {
    PureState::new(random_vector(layout.total_dim(), rng), layout.clone())
        .expect("gaussian vector is nonzero")
}

/// Hermitian matrix `(G + G†)/2` for Ginibre `G`.
pub fn random_hermitian(layout: &SubsystemLayout, rng: &mut Rng) -> BipartiteOperator {
    let g = random_matrix(layout.total_dim(), rng);
    let h = (&g + g.adjoint()) * c(0.5, 0.0);
    BipartiteOperator::new(h, layout.clone()).expect("layout matches")
}

/// Full-rank density matrix `GG†/tr(GG†)` (Hilbert–Schmidt measure).
pub fn random_density(layout: &SubsystemLayout, rng: &mut Rng) -> BipartiteOperator {
    let g = random_matrix(layout.total_dim(), rng);
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    BipartiteOperator::new(rho / tr, layout.clone()).expect("layout matches")
}

/// Density matrix of rank `rank` built from `rank` Gaussian columns.
pub fn random_density_of_rank(
    layout: &SubsystemLayout,
    rank: usize,
    rng: &mut Rng,
) -> BipartiteOperator {
    let n = layout.total_dim();
    let g = CMatrix::from_fn(n, rank, |_, _| complex_gaussian(rng));
    let rho = &g * g.adjoint();
    let tr = rho.trace();
    BipartiteOperator::new(rho / tr, layout.clone()).expect("layout matches")
}

/// Columns of an `n × n` Haar unitary.
pub fn haar_matrix(n: usize, rng: &mut Rng) -> CMatrix {
    let qr = random_matrix(n, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    // rescale column k by phase(r_kk) so the distribution is exactly Haar
    let mut u = q;
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            c(1.0, 0.0)
        };
        for i in 0..n {
            u[(i, k)] *= phase;
        }
    }
    u
}

/// Channel with `rank` Kraus operators cut from the first `n` columns of a
/// `rank·n`-dimensional Haar unitary.
pub fn random_channel(
    layout: &SubsystemLayout,
    rank: usize,
    rng: &mut Rng,
) -> crate::error::Result<crate::channels::KrausChannel> {
    let n = layout.total_dim();
    let v = haar_matrix(rank * n, rng);
    let ops = (0..rank)
        .map(|k| BipartiteOperator::new(v.view((k * n, 0), (n, n)).into_owned(), layout.clone()))
        .collect::<crate::error::Result<Vec<_>>>()?;
    crate::channels::KrausChannel::new(ops, "random")
}
