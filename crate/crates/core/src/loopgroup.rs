//! Multiplication operators by trigonometric polynomials on `L²(S¹)`.
//!
//! The Fourier mode `e_l(t) = e^{2πilt}` is identified with window mode `l`,
//! so nonnegative frequencies span `H₊`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::central_ext::schwinger_cocycle;
use crate::linop::{ModeWindow, PolarizedOperator};
use crate::{c64, CMat, Complex64, Error, Result};

/// Nodes of the periodic trapezoid rule for the integral cocycle formula.
pub const QUADRATURE_NODES: usize = 4096;

const REAL_TOL: f64 = 1e-12;

/// `g(t) = Σ_{|l|≤L} g_l e^{2πilt}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FourierFunction {
    band: usize,
    coeffs: Vec<Complex64>,
    real_valued: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierFile {
    #[serde(rename = "L")]
    pub band: usize,
    pub re: Vec<f64>,
    #[serde(default)]
    pub im: Vec<f64>,
}

impl FourierFunction {
    /// Coefficients ordered `g_{−L}, …, g_L`. With `real_valued` the symmetry
    /// `g_{−l} = conj(g_l)` is verified.
    pub fn new(coeffs: Vec<Complex64>, real_valued: bool) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::Input(format!("expected 2L+1 coefficients, got {}", coeffs.len())));
        }
        if coeffs.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("non-finite Fourier coefficient".into()));
        }
        let band = coeffs.len() / 2;
        let f = Self { band, coeffs, real_valued };
        if real_valued {
            let scale = f.coeffs.iter().map(|z| z.norm()).fold(1.0, f64::max);
            for l in 0..=band as i64 {
                if (f.coeff(-l) - f.coeff(l).conj()).norm() > REAL_TOL * scale {
                    return Err(Error::Input(format!("coefficients at ±{l} are not conjugate")));
                }
            }
        }
        Ok(f)
    }

    /// Real-valued flag is inferred from the coefficients.
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        let band = coeffs.len() / 2;
        let real = coeffs.len() % 2 == 1
            && (0..=band).all(|l| (coeffs[band - l] - coeffs[band + l].conj()).norm() <= REAL_TOL);
        Self::new(coeffs, real)
    }

    pub fn constant(c: Complex64) -> Self {
        Self { band: 0, coeffs: vec![c], real_valued: c.im == 0.0 }
    }

    /// `e^{2πikt}`.
    pub fn mode(k: i64) -> Self {
        let band = k.unsigned_abs() as usize;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * band + 1];
        coeffs[(band as i64 + k) as usize] = c64(1.0, 0.0);
        Self { band, coeffs, real_valued: k == 0 }
    }

    /// `cos(2πkt)`.
    pub fn cos(k: usize) -> Self {
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * k + 1];
        coeffs[0] += c64(0.5, 0.0);
        coeffs[2 * k] += c64(0.5, 0.0);
        Self { band: k, coeffs, real_valued: true }
    }

    /// `sin(2πkt)`.
    pub fn sin(k: usize) -> Self {
        assert!(k > 0, "sin(0) is the zero function; use constant");
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * k + 1];
        coeffs[0] = c64(0.0, 0.5);
        coeffs[2 * k] = c64(0.0, -0.5);
        Self { band: k, coeffs, real_valued: true }
    }

    pub fn band(&self) -> usize {
        self.band
    }

    pub fn is_real_valued(&self) -> bool {
        self.real_valued
    }

    /// `g_l`, zero outside the band.
    pub fn coeff(&self, l: i64) -> Complex64 {
        if l.unsigned_abs() as usize > self.band {
            Complex64::new(0.0, 0.0)
        } else {
            self.coeffs[(self.band as i64 + l) as usize]
        }
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        (-(self.band as i64)..=self.band as i64)
            .map(|l| self.coeff(l) * Complex64::from_polar(1.0, 2.0 * PI * l as f64 * t))
            .sum()
    }

    /// `ġ(t)`.
    pub fn eval_derivative(&self, t: f64) -> Complex64 {
        (-(self.band as i64)..=self.band as i64)
            .map(|l| self.coeff(l) * c64(0.0, 2.0 * PI * l as f64) * Complex64::from_polar(1.0, 2.0 * PI * l as f64 * t))
            .sum()
    }

    /// Pointwise product, i.e. convolution of coefficients.
    pub fn mul(&self, other: &Self) -> Self {
        let band = self.band + other.band;
        let mut coeffs = vec![Complex64::new(0.0, 0.0); 2 * band + 1];
        for a in -(self.band as i64)..=self.band as i64 {
            for b in -(other.band as i64)..=other.band as i64 {
                coeffs[(band as i64 + a + b) as usize] += self.coeff(a) * other.coeff(b);
            }
        }
        Self { band, coeffs, real_valued: self.real_valued && other.real_valued }
    }

    pub fn to_file(&self) -> FourierFile {
        FourierFile {
            band: self.band,
            re: self.coeffs.iter().map(|z| z.re).collect(),
            im: self.coeffs.iter().map(|z| z.im).collect(),
        }
    }

    pub fn from_file(file: &FourierFile) -> Result<Self> {
        let n = 2 * file.band + 1;
        if file.re.len() != n || (!file.im.is_empty() && file.im.len() != n) {
            return Err(Error::Input(format!("L = {} needs {n} coefficients", file.band)));
        }
        let coeffs = (0..n).map(|i| c64(file.re[i], file.im.get(i).copied().unwrap_or(0.0))).collect();
        Self::from_coeffs(coeffs)
    }
}

/// `M_g e_l = Σ_k g_{k−l} e_k`, truncated to the window.
pub fn mult_operator(g: &FourierFunction, window: ModeWindow) -> PolarizedOperator {
    let d = window.dim();
    let m = CMat::from_fn(d, d, |r, c| g.coeff(window.mode_of(r) - window.mode_of(c)));
    PolarizedOperator::new(window, m).expect("dimensions match the window")
}

/// `‖[ε, M_g]‖₂ = 2·(Σ|l||g_l|²)^{1/2}`.
pub fn hs_offdiag_norm(g: &FourierFunction) -> f64 {
    let s: f64 = (-(g.band as i64)..=g.band as i64).map(|l| l.unsigned_abs() as f64 * g.coeff(l).norm_sqr()).sum();
    2.0 * s.sqrt()
}

/// `−Σ_l l·h_l·g_{−l}`.
pub fn loop_cocycle_fourier(h: &FourierFunction, g: &FourierFunction) -> Complex64 {
    let band = h.band.min(g.band) as i64;
    -(-band..=band).map(|l| h.coeff(l) * g.coeff(-l) * l as f64).sum::<Complex64>()
}

/// `(1/2πi)∫₀¹ h(t)ġ(t) dt` by the periodic trapezoid rule.
pub fn loop_cocycle_quadrature(h: &FourierFunction, g: &FourierFunction, nodes: usize) -> Complex64 {
    let sum: Complex64 = (0..nodes)
        .map(|j| {
            let t = j as f64 / nodes as f64;
            h.eval(t) * g.eval_derivative(t)
        })
        .sum();
    sum / nodes as f64 / c64(0.0, 2.0 * PI)
}

/// The loop-group cocycle, with the Fourier sum checked against quadrature.
pub fn loop_cocycle(h: &FourierFunction, g: &FourierFunction) -> Result<Complex64> {
    let fourier = loop_cocycle_fourier(h, g);
    let quad = loop_cocycle_quadrature(h, g, QUADRATURE_NODES);
    let scale = hs_offdiag_norm(h) * hs_offdiag_norm(g);
    if (fourier - quad).norm() > 1e-10 * scale.max(1.0) {
        return Err(Error::Invariant(format!("Fourier sum {fourier} and quadrature {quad} disagree")));
    }
    Ok(fourier)
}

/// Schwinger cocycle of the truncated multiplication operators.
pub fn window_cocycle(h: &FourierFunction, g: &FourierFunction, window: ModeWindow) -> Result<Complex64> {
    schwinger_cocycle(&mult_operator(h, window), &mult_operator(g, window))
}

/// Rows of the window unaffected by truncation of a band of width `band`.
pub fn interior_rows(window: ModeWindow, band: usize) -> std::ops::Range<usize> {
    let lo = band.min(window.dim());
    let hi = window.dim().saturating_sub(band).max(lo);
    lo..hi
}

/// Largest entry of `[M_h, M_g]` over interior rows.
pub fn interior_commutator(h: &FourierFunction, g: &FourierFunction, window: ModeWindow) -> Result<f64> {
    let c = mult_operator(h, window).commutator(&mult_operator(g, window))?;
    let m = c.matrix();
    let rows = interior_rows(window, h.band + g.band);
    Ok(rows.flat_map(|r| (0..m.ncols()).map(move |c| (r, c))).map(|(r, c)| m[(r, c)].norm()).fold(0.0, f64::max))
}

/// The non-triviality witness: commuting multiplication operators with
/// nonzero cocycle.
#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub cocycle: Complex64,
    pub window_cocycle: Complex64,
    pub interior_commutator: f64,
}

pub fn commuting_witness(h: &FourierFunction, g: &FourierFunction, window: ModeWindow) -> Result<Witness> {
    Ok(Witness {
        cocycle: loop_cocycle(h, g)?,
        window_cocycle: window_cocycle(h, g, window)?,
        interior_commutator: interior_commutator(h, g, window)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linop::ss_defect;
    use approx::assert_abs_diff_eq;

    fn win(n: usize) -> ModeWindow {
        ModeWindow::new(n, n).unwrap()
    }

    #[test]
    fn constant_is_scalar() {
        let c = c64(0.3, -1.2);
        let m = mult_operator(&FourierFunction::constant(c), win(4));
        assert_eq!(m.matrix(), &(CMat::identity(8, 8) * c));
        assert_eq!(hs_offdiag_norm(&FourierFunction::constant(c)), 0.0);
    }

    #[test]
    fn single_mode_is_shift() {
        let w = win(3);
        let m = mult_operator(&FourierFunction::mode(1), w);
        for c in 0..6 {
            for r in 0..6 {
                let expect = if r == c + 1 { 1.0 } else { 0.0 };
                assert_eq!(m.matrix()[(r, c)], c64(expect, 0.0));
            }
        }
        assert_abs_diff_eq!(hs_offdiag_norm(&FourierFunction::mode(1)), 2.0, epsilon = 1e-15);
        assert_abs_diff_eq!(hs_offdiag_norm(&FourierFunction::cos(1)), 2f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn closed_form_matches_window_norm() {
        let g = FourierFunction::from_coeffs(vec![c64(0.1, 0.2), c64(-0.4, 0.0), c64(1.0, 0.5), c64(0.0, 0.3), c64(0.7, -0.1)])
            .unwrap();
        let d = ss_defect(&mult_operator(&g, win(6)));
        assert_abs_diff_eq!(d.hs_comm, hs_offdiag_norm(&g), epsilon = 1e-10);
    }

    #[test]
    fn sin_cos_cocycle() {
        let (h, g) = (FourierFunction::sin(1), FourierFunction::cos(1));
        let c = loop_cocycle(&h, &g).unwrap();
        assert!((c - c64(0.0, 0.5)).norm() <= 1e-15);
        assert!((loop_cocycle_quadrature(&h, &g, QUADRATURE_NODES) - c64(0.0, 0.5)).norm() <= 1e-12);
        let wit = commuting_witness(&h, &g, win(8)).unwrap();
        assert_eq!(wit.interior_commutator, 0.0);
        assert!((wit.window_cocycle - c).norm() <= 1e-12);
        assert_eq!(loop_cocycle(&h, &h).unwrap(), c64(0.0, 0.0));
    }

    #[test]
    fn product_rule_in_interior() {
        let g = FourierFunction::from_coeffs(vec![c64(0.5, 0.1), c64(1.0, 0.0), c64(-0.2, 0.3)]).unwrap();
        let h = FourierFunction::cos(2);
        let w = win(8);
        let prod = mult_operator(&g, w).mul(&mult_operator(&h, w)).unwrap();
        let direct = mult_operator(&g.mul(&h), w);
        for r in interior_rows(w, 3) {
            for c in 0..w.dim() {
                assert!((prod.matrix()[(r, c)] - direct.matrix()[(r, c)]).norm() <= 1e-15);
            }
        }
    }

    #[test]
    fn real_flag_is_verified() {
        assert!(FourierFunction::new(vec![c64(1.0, 0.0), c64(0.0, 0.0), c64(2.0, 0.0)], true).is_err());
        assert!(FourierFunction::new(vec![c64(0.0, 0.0); 2], false).is_err());
        let f = FourierFunction::from_file(&FourierFunction::sin(2).to_file()).unwrap();
        assert!(f.is_real_valued());
    }
}
