//! Random test objects drawn from a caller-supplied generator.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linop::{ModeWindow, PolarizedOperator};
use crate::{c64, CMat, CVec, Complex64};

pub fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    c64(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix of i.i.d. standard complex Gaussians.
pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CVec {
    CVec::from_fn(dim, |_, _| gaussian(rng))
}

/// Haar-distributed unitary of size `dim`.
pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let qr = random_matrix(dim, dim, rng).qr();
    let (q, r) = (qr.q(), qr.r());
    let mut u = q;
    for j in 0..dim {
        let d = r[(j, j)];
        let ph = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for i in 0..dim {
            u[(i, j)] *= ph;
        }
    }
    u
}

pub fn random_operator<R: Rng + ?Sized>(window: ModeWindow, rng: &mut R) -> PolarizedOperator {
    PolarizedOperator::new(window, random_matrix(window.dim(), window.dim(), rng)).expect("shape matches window")
}

pub fn random_unitary<R: Rng + ?Sized>(window: ModeWindow, rng: &mut R) -> PolarizedOperator {
    PolarizedOperator::new(window, haar_unitary(window.dim(), rng)).expect("shape matches window")
}

/// `X = (G − G*)/2` for a Gaussian `G`.
pub fn random_antihermitian<R: Rng + ?Sized>(window: ModeWindow, rng: &mut R) -> PolarizedOperator {
    let g = random_matrix(window.dim(), window.dim(), rng);
    PolarizedOperator::new(window, (&g - g.adjoint()) * c64(0.5, 0.0)).expect("shape matches window")
}

pub fn random_hermitian<R: Rng + ?Sized>(window: ModeWindow, rng: &mut R) -> PolarizedOperator {
    let g = random_matrix(window.dim(), window.dim(), rng);
    PolarizedOperator::new(window, (&g + g.adjoint()) * c64(0.5, 0.0)).expect("shape matches window")
}

/// Unitary that preserves `H₊` and `H₋`.
pub fn random_block_diagonal_unitary<R: Rng + ?Sized>(window: ModeWindow, rng: &mut R) -> PolarizedOperator {
    let (n, p) = (window.neg(), window.pos());
    let mut m = CMat::zeros(n + p, n + p);
    m.view_mut((0, 0), (n, n)).copy_from(&haar_unitary(n, rng));
    m.view_mut((n, n), (p, p)).copy_from(&haar_unitary(p, rng));
    PolarizedOperator::new(window, m).expect("shape matches window")
}

/// Near-identity invertible operator `Id + scale·G`.
pub fn random_near_identity<R: Rng + ?Sized>(window: ModeWindow, scale: f64, rng: &mut R) -> PolarizedOperator {
    let g = random_matrix(window.dim(), window.dim(), rng) * c64(scale, 0.0);
    PolarizedOperator::new(window, CMat::identity(window.dim(), window.dim()) + g).expect("shape matches window")
}
