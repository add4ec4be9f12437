//! The central extension as `(A, q)` pair arithmetic, its sections, the group
//! cocycle χ and the Schwinger cocycle.

use crate::linop::{fredholm_det, numerical_rank, op_norm, singular_values, PolarizedOperator, RANK_RTOL};
use crate::{c64, CMat, Complex64, Error, Result};

/// Tolerance used to accept an input as unitary.
const UNITARY_TOL: f64 = 1e-10;

/// A representative `(A, q)` of a class in the extension; `q` acts on `H₊`.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtElement {
    pub a: PolarizedOperator,
    pub q: CMat,
}

impl ExtElement {
    pub fn new(a: PolarizedOperator, q: CMat) -> Result<Self> {
        let p = a.window().pos();
        if q.shape() != (p, p) {
            return Err(Error::Input(format!("q has shape {:?}, expected ({p}, {p})", q.shape())));
        }
        Ok(Self { a, q })
    }

    pub fn identity(window: crate::linop::ModeWindow) -> Self {
        let p = window.pos();
        Self { a: PolarizedOperator::identity(window), q: CMat::identity(p, p) }
    }

    /// `‖A₊₊ − q‖₁`, the trace-class gap between the two components.
    pub fn trace_norm_gap(&self) -> f64 {
        singular_values(&(self.a.pp() - &self.q)).iter().sum()
    }

    pub fn inverse(&self) -> Result<Self> {
        let q = self.q.clone().try_inverse().ok_or_else(|| Error::Singular("q is not invertible".into()))?;
        Ok(Self { a: self.a.inverse()?, q })
    }

    fn check_invertible(&self) -> Result<()> {
        let w = self.a.window();
        if numerical_rank(self.a.matrix()) != w.dim() {
            return Err(Error::Singular("A is not invertible".into()));
        }
        if numerical_rank(&self.q) != w.pos() {
            return Err(Error::Singular("q is not invertible".into()));
        }
        Ok(())
    }
}

/// `(A_x A_y, q_x q_y)`.
pub fn ext_mul(x: &ExtElement, y: &ExtElement) -> Result<ExtElement> {
    x.check_invertible()?;
    y.check_invertible()?;
    Ok(ExtElement { a: x.a.mul(&y.a)?, q: &x.q * &y.q })
}

/// Same `A` (in operator norm) and `det(q_y⁻¹ q_x) = 1`, both to `tol`.
pub fn ext_equiv(x: &ExtElement, y: &ExtElement, tol: f64) -> bool {
    if x.a.window() != y.a.window() {
        return false;
    }
    if op_norm(&(x.a.matrix() - y.a.matrix())) > tol {
        return false;
    }
    match y.q.clone().try_inverse() {
        Some(inv) => (fredholm_det(&(inv * &x.q)) - c64(1.0, 0.0)).norm() <= tol,
        None => false,
    }
}

fn invertible_pp(a: &PolarizedOperator, what: &str) -> Result<CMat> {
    let pp = a.pp();
    // Singularity is judged relative to the whole operator, not the block alone.
    let smin = singular_values(&pp).last().copied().unwrap_or(0.0);
    if !(smin > RANK_RTOL * op_norm(a.matrix())) {
        return Err(Error::OutsideDomain(format!("{what} has a singular ++ block")));
    }
    Ok(pp)
}

/// `τ(A) = (A, A₊₊)`.
pub fn section_tau(a: &PolarizedOperator) -> Result<ExtElement> {
    let pp = invertible_pp(a, "A")?;
    Ok(ExtElement { a: a.clone(), q: pp })
}

/// Unitary part `V` of the polar decomposition `U₊₊ = V |U₊₊|`.
pub fn polar_unitary(u: &PolarizedOperator) -> Result<CMat> {
    let pp = invertible_pp(u, "U")?;
    let svd = crate::linop::svd(&pp);
    Ok(svd.u * svd.v_t)
}

/// `σ(U) = (U, U₊₊ |U₊₊|⁻¹)` for unitary `U`.
pub fn section_sigma_unitary(u: &PolarizedOperator) -> Result<ExtElement> {
    let dev = u.unitarity_defect();
    if dev > UNITARY_TOL {
        return Err(Error::Input(format!("operator is not unitary (deviation {dev:.3e})")));
    }
    Ok(ExtElement { a: u.clone(), q: polar_unitary(u)? })
}

/// `χ(A, B) = det[A₊₊ B₊₊ ((AB)₊₊)⁻¹]`.
pub fn group_cocycle_chi(a: &PolarizedOperator, b: &PolarizedOperator) -> Result<Complex64> {
    let ab = a.mul(b)?;
    let (pa, pb) = (invertible_pp(a, "A")?, invertible_pp(b, "B")?);
    let pab = invertible_pp(&ab, "AB")?;
    let inv = pab.try_inverse().ok_or_else(|| Error::OutsideDomain("(AB)₊₊ is singular".into()))?;
    Ok(fredholm_det(&(pa * pb * inv)))
}

/// `χ/|χ|`.
pub fn group_cocycle_chi_normalized(a: &PolarizedOperator, b: &PolarizedOperator) -> Result<Complex64> {
    let chi = group_cocycle_chi(a, b)?;
    Ok(chi / chi.norm())
}

/// The cocycle of the unitary section: `σ(U)σ(V) = χ_σ(U,V)·σ(UV)` in the
/// sense of the equivalence, i.e. `χ_σ = det(V_{UV}⁻¹ V_U V_V)`.
pub fn sigma_cocycle(u: &PolarizedOperator, v: &PolarizedOperator) -> Result<Complex64> {
    let su = section_sigma_unitary(u)?;
    let sv = section_sigma_unitary(v)?;
    let suv = section_sigma_unitary(&u.mul(v)?)?;
    Ok(fredholm_det(&(suv.q.adjoint() * su.q * sv.q)))
}

/// `c(X,Y) = tr(X₋₊Y₊₋ − Y₋₊X₊₋)`, cross-checked against `¼ tr(ε[ε,X][ε,Y])`.
pub fn schwinger_cocycle(x: &PolarizedOperator, y: &PolarizedOperator) -> Result<Complex64> {
    if x.window() != y.window() {
        return Err(Error::WindowMismatch("cocycle arguments".into()));
    }
    let c = (x.mp() * y.pm()).trace() - (y.mp() * x.pm()).trace();
    let eps = PolarizedOperator::epsilon(x.window());
    let alt = (eps.matrix() * x.eps_commutator() * y.eps_commutator()).trace() * 0.25;
    let scale = x.pm().norm().max(x.mp().norm()) * y.pm().norm().max(y.mp().norm());
    if (c - alt).norm() > 1e-12 * scale.max(1.0) {
        return Err(Error::Invariant(format!("trace formulas disagree: {c} vs {alt}")));
    }
    Ok(c)
}

fn mixed_difference(x: &PolarizedOperator, y: &PolarizedOperator, h: f64) -> Result<Complex64> {
    let f = |s: f64, t: f64| -> Result<Complex64> {
        let es = x.scale(c64(s, 0.0)).exp();
        let et = y.scale(c64(t, 0.0)).exp();
        let forward = group_cocycle_chi(&es, &et);
        let backward = group_cocycle_chi(&et, &es);
        match (forward, backward) {
            (Ok(a), Ok(b)) => Ok(a - b),
            (Err(e), _) | (_, Err(e)) => Err(Error::OutsideDomain(format!("exponential left the τ-domain at s={s}, t={t}: {e}"))),
        }
    };
    let v = f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?;
    Ok(v / (4.0 * h * h))
}

/// Mixed second derivative of `χ(e^{sX}, e^{tY}) − χ(e^{tY}, e^{sX})` at the
/// origin: central differences at steps `h` and `h/2` with one Richardson level.
pub fn cocycle_from_chi(x: &PolarizedOperator, y: &PolarizedOperator, h: f64) -> Result<Complex64> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::Input(format!("step must be positive, got {h}")));
    }
    if x.window() != y.window() {
        return Err(Error::WindowMismatch("cocycle arguments".into()));
    }
    let coarse = mixed_difference(x, y, h)?;
    let fine = mixed_difference(x, y, h / 2.0)?;
    Ok((fine * 4.0 - coarse) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::ModeWindow;
    use crate::sampling;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(n: usize, p: usize) -> ModeWindow {
        ModeWindow::new(n, p).unwrap()
    }

    fn unit(window: ModeWindow, row: i64, col: i64) -> PolarizedOperator {
        let mut m = CMat::zeros(window.dim(), window.dim());
        m[(window.index_of(row).unwrap(), window.index_of(col).unwrap())] = c64(1.0, 0.0);
        PolarizedOperator::new(window, m).unwrap()
    }

    fn rotation(theta: f64) -> PolarizedOperator {
        let (c, s) = (theta.cos(), theta.sin());
        let m = CMat::from_row_slice(2, 2, &[c64(c, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(c, 0.0)]);
        PolarizedOperator::new(w(1, 1), m).unwrap()
    }

    #[test]
    fn multiplication_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let win = w(2, 3);
        let x = section_tau(&sampling::random_near_identity(win, 0.3, &mut rng)).unwrap();
        let y = ExtElement::new(sampling::random_operator(win, &mut rng), sampling::random_matrix(3, 3, &mut rng)).unwrap();
        let id = ExtElement::identity(win);
        assert_eq!(ext_mul(&id, &x).unwrap(), x);
        let xy = ext_mul(&x, &y).unwrap();
        assert_eq!(xy.a.matrix(), &(x.a.matrix() * y.a.matrix()));
        assert_eq!(xy.q, &x.q * &y.q);
        assert!(ext_equiv(&ext_mul(&x, &x.inverse().unwrap()).unwrap(), &id, 1e-10));
        let sing = ExtElement::new(PolarizedOperator::zeros(win), CMat::identity(3, 3)).unwrap();
        assert!(matches!(ext_mul(&x, &sing), Err(Error::Singular(_))));
    }

    #[test]
    fn equivalence_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let win = w(2, 2);
        let x = section_tau(&sampling::random_near_identity(win, 0.3, &mut rng)).unwrap();
        assert!(ext_equiv(&x, &x, 1e-12));
        let g = sampling::random_matrix(2, 2, &mut rng);
        let det = fredholm_det(&g);
        let special = g * c64(1.0, 0.0) / det.sqrt();
        let y = ExtElement::new(x.a.clone(), &x.q * special).unwrap();
        assert!(ext_equiv(&x, &y, 1e-10));
        let one = w(1, 1);
        let id = ExtElement::identity(one);
        let doubled = ExtElement::new(id.a.clone(), CMat::identity(1, 1) * c64(2.0, 0.0)).unwrap();
        assert!(!ext_equiv(&doubled, &id, 1e-6));
    }

    #[test]
    fn sections() {
        let win = w(2, 2);
        let t = section_tau(&PolarizedOperator::identity(win)).unwrap();
        assert_eq!(t, ExtElement::identity(win));
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let bd = sampling::random_block_diagonal_unitary(win, &mut rng);
        assert_eq!(section_tau(&bd).unwrap().q, bd.pp());
        let s = section_sigma_unitary(&bd).unwrap();
        assert_abs_diff_eq!((s.q - bd.pp()).norm(), 0.0, epsilon = 1e-12);
        let swap = rotation(std::f64::consts::FRAC_PI_2);
        assert!(matches!(section_tau(&swap), Err(Error::OutsideDomain(_))));
        assert!(matches!(section_sigma_unitary(&swap), Err(Error::OutsideDomain(_))));
        for th in [-1.2, -0.3, 0.4, 1.5] {
            let q = section_sigma_unitary(&rotation(th)).unwrap().q;
            assert_abs_diff_eq!((q[(0, 0)] - c64(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        }
        let u = sampling::random_unitary(w(3, 3), &mut rng);
        let v = section_sigma_unitary(&u).unwrap().q;
        assert_abs_diff_eq!((v.adjoint() * &v - CMat::identity(3, 3)).norm(), 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(fredholm_det(&v).norm(), 1.0, epsilon = 1e-12);
        assert!(section_sigma_unitary(&sampling::random_operator(win, &mut rng)).is_err());
    }

    #[test]
    fn chi_examples() {
        let win = w(2, 2);
        let id = PolarizedOperator::identity(win);
        assert_eq!(group_cocycle_chi(&id, &id).unwrap(), c64(1.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let a = sampling::random_block_diagonal_unitary(win, &mut rng);
        let b = sampling::random_block_diagonal_unitary(win, &mut rng);
        assert_abs_diff_eq!((group_cocycle_chi(&a, &b).unwrap() - c64(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
        let swap = rotation(std::f64::consts::FRAC_PI_2);
        assert!(group_cocycle_chi(&swap, &rotation(0.0)).is_err());
    }

    #[test]
    fn chi_cocycle_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let win = w(3, 3);
        for _ in 0..20 {
            let x = sampling::random_near_identity(win, 0.3, &mut rng);
            let y = sampling::random_near_identity(win, 0.3, &mut rng);
            let z = sampling::random_near_identity(win, 0.3, &mut rng);
            let lhs = group_cocycle_chi(&x, &y).unwrap() * group_cocycle_chi(&x.mul(&y).unwrap(), &z).unwrap();
            let rhs = group_cocycle_chi(&x, &y.mul(&z).unwrap()).unwrap() * group_cocycle_chi(&y, &z).unwrap();
            assert!((lhs - rhs).norm() <= 1e-10 * lhs.norm());
        }
    }

    #[test]
    fn tau_and_sigma_cocycles_differ_by_modulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let win = w(3, 3);
        for _ in 0..10 {
            let h1 = sampling::random_hermitian(win, &mut rng).scale(c64(0.0, 0.4)).exp();
            let h2 = sampling::random_hermitian(win, &mut rng).scale(c64(0.0, 0.4)).exp();
            let tau = group_cocycle_chi_normalized(&h1, &h2).unwrap();
            let sig = sigma_cocycle(&h1, &h2).unwrap();
            assert_abs_diff_eq!(sig.norm(), 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!((tau - sig).norm(), 0.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn schwinger_examples() {
        let win = w(2, 2);
        let x = unit(win, 0, -1);
        let y = unit(win, -1, 0);
        assert_abs_diff_eq!((schwinger_cocycle(&x, &y).unwrap() - c64(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-15);
        assert_eq!(schwinger_cocycle(&x, &x).unwrap(), c64(0.0, 0.0));
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let a = sampling::random_block_diagonal_unitary(win, &mut rng);
        let b = sampling::random_block_diagonal_unitary(win, &mut rng);
        assert_eq!(schwinger_cocycle(&a, &b).unwrap(), c64(0.0, 0.0));
        let p = sampling::random_antihermitian(w(3, 3), &mut rng);
        let q = sampling::random_antihermitian(w(3, 3), &mut rng);
        assert!(schwinger_cocycle(&p, &q).unwrap().re.abs() <= 1e-12);
    }

    #[test]
    fn finite_difference_cocycle() {
        let win = w(2, 2);
        let x = unit(win, 0, -1);
        let y = unit(win, -1, 0);
        assert_eq!(cocycle_from_chi(&x, &x, 1e-3).unwrap(), c64(0.0, 0.0));
        let c = cocycle_from_chi(&x, &y, 1e-3).unwrap();
        assert_abs_diff_eq!((c - c64(-1.0, 0.0)).norm(), 0.0, epsilon = 1e-6);
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for _ in 0..5 {
            let p = sampling::random_antihermitian(w(3, 3), &mut rng);
            let q = sampling::random_antihermitian(w(3, 3), &mut rng);
            let fd = cocycle_from_chi(&p, &q, 1e-3).unwrap();
            assert_abs_diff_eq!((fd - schwinger_cocycle(&p, &q).unwrap()).norm(), 0.0, epsilon = 1e-6);
        }
        assert!(cocycle_from_chi(&x, &y, 0.0).is_err());
    }
}
