//! Polarizations as subspaces of a mode window: distances, relative charge,
//! commensurability and admissible bases.

use serde::{Deserialize, Serialize};

use crate::linop::{
    fredholm_det, fredholm_index, numerical_rank, numerical_rank_rel, range_space, singular_values, Block, ModeWindow,
    PolarizedOperator, WindowedOperator, RANK_RTOL,
};
use crate::{c64, io, CMat, Complex64, Error, Result};

const ORTHO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Polarization {
    window: ModeWindow,
    basis: CMat,
}

impl Polarization {
    /// Wrap an orthonormal column basis.
    pub fn new(window: ModeWindow, basis: CMat) -> Result<Self> {
        if basis.nrows() != window.dim() {
            return Err(Error::Input(format!("basis has {} rows, window dimension is {}", basis.nrows(), window.dim())));
        }
        let k = basis.ncols();
        if k == 0 || k >= window.dim() {
            return Err(Error::Input(format!("subspace dimension {k} must lie in 1..{}", window.dim())));
        }
        let gram = basis.adjoint() * &basis - CMat::identity(k, k);
        let dev = gram.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if !(dev <= ORTHO_TOL) {
            return Err(Error::Input(format!("basis columns not orthonormal (deviation {dev:.3e})")));
        }
        Ok(Self { window, basis })
    }

    /// The subspace spanned by arbitrary columns.
    pub fn from_span(window: ModeWindow, vectors: &CMat) -> Result<Self> {
        if vectors.nrows() != window.dim() {
            return Err(Error::Input("spanning vectors do not match the window".into()));
        }
        Self::new(window, range_space(vectors))
    }

    pub fn h_plus(window: ModeWindow) -> Self {
        Self::coordinate(window, window.plus_range().collect())
    }

    pub fn h_minus(window: ModeWindow) -> Self {
        Self::coordinate(window, window.minus_range().collect())
    }

    fn coordinate(window: ModeWindow, idx: Vec<usize>) -> Self {
        let basis = CMat::from_fn(window.dim(), idx.len(), |r, c| c64(if r == idx[c] { 1.0 } else { 0.0 }, 0.0));
        Self { window, basis }
    }

    pub fn window(&self) -> ModeWindow {
        self.window
    }

    pub fn basis(&self) -> &CMat {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn projector(&self) -> CMat {
        &self.basis * self.basis.adjoint()
    }

    /// The image `UV` under an invertible operator.
    pub fn transformed(&self, u: &PolarizedOperator) -> Result<Self> {
        if u.window() != self.window {
            return Err(Error::WindowMismatch("operator and polarization".into()));
        }
        let img = u.matrix() * &self.basis;
        if numerical_rank(&img) != self.dim() {
            return Err(Error::Singular("operator is not injective on the subspace".into()));
        }
        Self::from_span(self.window, &img)
    }

    pub fn to_file(&self) -> PolarizationFile {
        let (re, im) = io::matrix_to_reim(&self.basis);
        PolarizationFile { neg: self.window.neg(), pos: self.window.pos(), re, im }
    }

    pub fn from_file(f: &PolarizationFile) -> Result<Self> {
        let window = ModeWindow::new(f.neg, f.pos)?;
        let cols = f.re.first().map_or(0, Vec::len);
        let basis = io::matrix_from_reim(window.dim(), cols, &f.re, &f.im)?;
        Self::new(window, basis)
    }
}

/// Polarization file: window plus a `dim × k` column basis, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarizationFile {
    pub neg: usize,
    pub pos: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

fn same_window(v: &Polarization, w: &Polarization) -> Result<()> {
    if v.window != w.window {
        return Err(Error::WindowMismatch("polarizations live on different windows".into()));
    }
    Ok(())
}

/// `‖P_V − P_W‖₂`.
pub fn hs_distance(v: &Polarization, w: &Polarization) -> Result<f64> {
    same_window(v, w)?;
    Ok((v.projector() - w.projector()).norm())
}

/// Fredholm index of `P_W|_{V→W}`, computed from its rank.
pub fn relative_charge(v: &Polarization, w: &Polarization) -> Result<i64> {
    same_window(v, w)?;
    let compressed = w.basis.adjoint() * &v.basis;
    let rank = numerical_rank_rel(&compressed, Some(1.0));
    let ker = v.dim() - rank;
    let coker = w.dim() - rank;
    Ok(ker as i64 - coker as i64)
}

/// `charge(AV, H₊) − charge(V, H₊)` for an operator that may shift modes
/// across the window edge.
///
/// The subspace is completed to the infinite-dimensional picture by all modes
/// above the window (which belong to `H₊`) and none below; the image is then
/// counted on a window enlarged far enough to contain every mode the shift moves.
pub fn charge_transform(a: &WindowedOperator, v: &Polarization) -> Result<i64> {
    let win = a.window();
    if win != v.window() {
        return Err(Error::WindowMismatch("operator and polarization".into()));
    }
    let s = a.charge_offset();
    let t = s.unsigned_abs() as usize;
    if numerical_rank(a.core().matrix()) != win.dim() - t {
        return Err(Error::Singular("operator is not invertible on the window".into()));
    }
    let big = a.enlarged(t)?;
    let bw = big.window();
    let k = v.dim();
    // V ⊕ span(new top modes), embedded in the enlarged window.
    let mut ext = CMat::zeros(bw.dim(), k + t);
    ext.view_mut((t, 0), (win.dim(), k)).copy_from(v.basis());
    for j in 0..t {
        ext[(bw.dim() - t + j, k + j)] = c64(1.0, 0.0);
    }
    let mut image_cols: Vec<CMat> = vec![big.core().matrix() * &ext];
    // Modes above the enlarged window that the shift brings inside.
    let mut landed = Vec::new();
    for mode in bw.mode_of(bw.dim() - 1) + 1..=bw.mode_of(bw.dim() - 1) + t as i64 {
        if let Some(i) = bw.index_of(mode + s) {
            landed.push(i);
        }
    }
    if !landed.is_empty() {
        image_cols.push(CMat::from_fn(bw.dim(), landed.len(), |r, c| {
            c64(if r == landed[c] { 1.0 } else { 0.0 }, 0.0)
        }));
    }
    let total: usize = image_cols.iter().map(|m| m.ncols()).sum();
    let mut stacked = CMat::zeros(bw.dim(), total);
    let mut off = 0;
    for m in &image_cols {
        stacked.view_mut((0, off), (bw.dim(), m.ncols())).copy_from(m);
        off += m.ncols();
    }
    let image_dim = numerical_rank(&stacked) as i64;
    let before = k as i64 - win.pos() as i64;
    let after = image_dim - bw.pos() as i64;
    let delta = after - before;
    let index = fredholm_index(a, Block::PlusPlus)?.index;
    if delta != index {
        return Err(Error::Invariant(format!("charge change {delta} differs from ind(A₊₊) = {index}")));
    }
    Ok(delta)
}

/// `dim V/(V∩W)` and `dim W/(V∩W)` from the rank of the stacked bases.
pub fn commensurability(v: &Polarization, w: &Polarization) -> Result<(usize, usize)> {
    same_window(v, w)?;
    let mut stacked = CMat::zeros(v.window.dim(), v.dim() + w.dim());
    stacked.view_mut((0, 0), (v.window.dim(), v.dim())).copy_from(&v.basis);
    stacked.view_mut((0, v.dim()), (v.window.dim(), w.dim())).copy_from(&w.basis);
    let inter = v.dim() + w.dim() - numerical_rank(&stacked);
    Ok((v.dim() - inter, w.dim() - inter))
}

/// A bounded isomorphism from the reference subspace onto `target`.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissibleBasis {
    pub target: Polarization,
    pub reference: Polarization,
    /// `dim × k` matrix taking reference coordinates into the window.
    pub map: CMat,
    /// Number of directions where `P_W` restricted to the reference degenerates
    /// and the map was completed by hand.
    pub completed: usize,
    /// `det(P_ref ∘ map)` in reference coordinates.
    pub projected_det: Complex64,
    /// `‖P_ref ∘ map − Id‖₁`.
    pub defect_trace_norm: f64,
}

/// Build an admissible basis for `w` over `reference`.
///
/// Where `P_W|_ref` is invertible the map is `W (ref*W)⁻¹`, so that
/// `P_ref ∘ map = Id`. Degenerate directions are completed with unit weight.
/// With `isometric` the map is replaced by its polar (isometric) part.
pub fn admissible_basis(w: &Polarization, reference: &Polarization, isometric: bool) -> Result<AdmissibleBasis> {
    same_window(w, reference)?;
    let k = w.dim();
    if reference.dim() != k {
        return Err(Error::Input(format!("dimension mismatch: target {k}, reference {}", reference.dim())));
    }
    // m = ref* W, in W and reference coordinates.
    let m = reference.basis.adjoint() * &w.basis;
    let svd = crate::linop::svd(&m);
    let (u, vt) = (&svd.u, &svd.v_t);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let mut completed = 0;
    // m = U Σ V*; completed inverse K = V Σ'⁻¹ U*.
    let mut inv_sigma = CMat::zeros(k, k);
    for j in 0..k {
        let sj = svd.singular_values[j];
        inv_sigma[(j, j)] = if smax > 0.0 && sj > RANK_RTOL * smax {
            c64(if isometric { 1.0 } else { 1.0 / sj }, 0.0)
        } else {
            completed += 1;
            c64(1.0, 0.0)
        };
    }
    let coord = vt.adjoint() * inv_sigma * u.adjoint();
    if numerical_rank(&coord) != k {
        return Err(Error::Singular("no invertible completion found".into()));
    }
    let map = &w.basis * coord;
    let projected = reference.basis.adjoint() * &map;
    let defect = &projected - CMat::identity(k, k);
    Ok(AdmissibleBasis {
        target: w.clone(),
        reference: reference.clone(),
        projected_det: fredholm_det(&projected),
        defect_trace_norm: singular_values(&defect).iter().sum(),
        map,
        completed,
    })
}
