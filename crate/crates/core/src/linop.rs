//! Polarized complex linear algebra on a signed mode window.
//!
//! Matrices are indexed in the canonical order `e_{-n}, …, e_{-1}, e_0, …, e_{m-1}`,
//! so `ε = diag(-1, …, -1, +1, …, +1)` and the blocks of an operator are
//! `a = T₊₊`, `b = T₊₋`, `c = T₋₊`, `d = T₋₋`.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::{c64, io, CMat, Complex64, Error, Result};

/// Relative singular-value threshold for every rank decision in the crate.
pub const RANK_RTOL: f64 = 1e-9;

/// Absolute tolerance for the fill-consistency check of windowed operators.
const FILL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ModeWindow {
    neg: usize,
    pos: usize,
}

impl ModeWindow {
    pub fn new(neg: usize, pos: usize) -> Result<Self> {
        if neg == 0 || pos == 0 {
            return Err(Error::Input(format!("mode window needs neg, pos >= 1, got ({neg}, {pos})")));
        }
        Ok(Self { neg, pos })
    }

    /// Number of negative modes `e_{-n} … e_{-1}`.
    pub fn neg(&self) -> usize {
        self.neg
    }

    /// Number of non-negative modes `e_0 … e_{m-1}`.
    pub fn pos(&self) -> usize {
        self.pos
    }

    pub fn dim(&self) -> usize {
        self.neg + self.pos
    }

    pub fn minus_range(&self) -> Range<usize> {
        0..self.neg
    }

    pub fn plus_range(&self) -> Range<usize> {
        self.neg..self.dim()
    }

    /// Matrix index of the signed mode `k`, if it lies in the window.
    pub fn index_of(&self, mode: i64) -> Option<usize> {
        let i = mode + self.neg as i64;
        (i >= 0 && (i as usize) < self.dim()).then_some(i as usize)
    }

    pub fn mode_of(&self, index: usize) -> i64 {
        index as i64 - self.neg as i64
    }

    pub fn is_plus(&self, index: usize) -> bool {
        index >= self.neg
    }

    /// The window grown by `below` negative and `above` positive modes.
    pub fn enlarged(&self, below: usize, above: usize) -> Self {
        Self { neg: self.neg + below, pos: self.pos + above }
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if self != other {
            return Err(Error::WindowMismatch(format!(
                "({}, {}) vs ({}, {})",
                self.neg, self.pos, other.neg, other.pos
            )));
        }
        Ok(())
    }
}

/// The four blocks of an operator with respect to `H₊ ⊕ H₋`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    /// `H₊ → H₊`, pos × pos.
    pub a: CMat,
    /// `H₋ → H₊`, pos × neg.
    pub b: CMat,
    /// `H₊ → H₋`, neg × pos.
    pub c: CMat,
    /// `H₋ → H₋`, neg × neg.
    pub d: CMat,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PolarizedOperator {
    window: ModeWindow,
    m: CMat,
}

impl PolarizedOperator {
    pub fn new(window: ModeWindow, m: CMat) -> Result<Self> {
        if m.nrows() != window.dim() || m.ncols() != window.dim() {
            return Err(Error::Input(format!(
                "operator is {}x{} but window dimension is {}",
                m.nrows(),
                m.ncols(),
                window.dim()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Input("operator has non-finite entries".into()));
        }
        Ok(Self { window, m })
    }

    pub fn identity(window: ModeWindow) -> Self {
        Self { window, m: CMat::identity(window.dim(), window.dim()) }
    }

    pub fn zeros(window: ModeWindow) -> Self {
        Self { window, m: CMat::zeros(window.dim(), window.dim()) }
    }

    /// `ε = P₊ − P₋`.
    pub fn epsilon(window: ModeWindow) -> Self {
        let mut m = CMat::zeros(window.dim(), window.dim());
        for i in 0..window.dim() {
            m[(i, i)] = c64(if window.is_plus(i) { 1.0 } else { -1.0 }, 0.0);
        }
        Self { window, m }
    }

    pub fn from_blocks(window: ModeWindow, blocks: &Blocks) -> Result<Self> {
        let (n, p) = (window.neg(), window.pos());
        let shapes = [
            ("a", &blocks.a, p, p),
            ("b", &blocks.b, p, n),
            ("c", &blocks.c, n, p),
            ("d", &blocks.d, n, n),
        ];
        for (name, blk, r, c) in shapes {
            if blk.shape() != (r, c) {
                return Err(Error::Input(format!("block {name} has shape {:?}, expected ({r}, {c})", blk.shape())));
            }
        }
        let mut m = CMat::zeros(n + p, n + p);
        m.view_mut((n, n), (p, p)).copy_from(&blocks.a);
        m.view_mut((n, 0), (p, n)).copy_from(&blocks.b);
        m.view_mut((0, n), (n, p)).copy_from(&blocks.c);
        m.view_mut((0, 0), (n, n)).copy_from(&blocks.d);
        Self::new(window, m)
    }

    pub fn window(&self) -> ModeWindow {
        self.window
    }

    pub fn matrix(&self) -> &CMat {
        &self.m
    }

    pub fn into_matrix(self) -> CMat {
        self.m
    }

    pub fn blocks(&self) -> Blocks {
        block_split(self)
    }

    pub fn pp(&self) -> CMat {
        let (n, p) = (self.window.neg(), self.window.pos());
        self.m.view((n, n), (p, p)).into_owned()
    }

    pub fn pm(&self) -> CMat {
        let (n, p) = (self.window.neg(), self.window.pos());
        self.m.view((n, 0), (p, n)).into_owned()
    }

    pub fn mp(&self) -> CMat {
        let (n, p) = (self.window.neg(), self.window.pos());
        self.m.view((0, n), (n, p)).into_owned()
    }

    pub fn mm(&self) -> CMat {
        let n = self.window.neg();
        self.m.view((0, 0), (n, n)).into_owned()
    }

    pub fn adjoint(&self) -> Self {
        Self { window: self.window, m: self.m.adjoint() }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.window.check_same(&other.window)?;
        Ok(Self { window: self.window, m: &self.m * &other.m })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.window.check_same(&other.window)?;
        Ok(Self { window: self.window, m: &self.m + &other.m })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.window.check_same(&other.window)?;
        Ok(Self { window: self.window, m: &self.m - &other.m })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { window: self.window, m: &self.m * s }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.window.check_same(&other.window)?;
        Ok(Self { window: self.window, m: &self.m * &other.m - &other.m * &self.m })
    }

    /// `[ε, T]`, computed by sign flips rather than a product.
    pub fn eps_commutator(&self) -> CMat {
        let w = self.window;
        CMat::from_fn(w.dim(), w.dim(), |i, j| {
            let si = if w.is_plus(i) { 1.0 } else { -1.0 };
            let sj = if w.is_plus(j) { 1.0 } else { -1.0 };
            self.m[(i, j)] * (si - sj)
        })
    }

    pub fn inverse(&self) -> Result<Self> {
        let m = self
            .m
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Singular("operator is not invertible".into()))?;
        Ok(Self { window: self.window, m })
    }

    /// Matrix exponential (scaling and squaring with a Padé approximant).
    pub fn exp(&self) -> Self {
        Self { window: self.window, m: self.m.clone().exp() }
    }

    /// `‖T*T − Id‖_F`.
    pub fn unitarity_defect(&self) -> f64 {
        let d = self.m.adjoint() * &self.m - CMat::identity(self.window.dim(), self.window.dim());
        d.norm()
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_defect() <= tol
    }

    pub fn to_file(&self) -> OperatorFile {
        let (re, im) = io::matrix_to_reim(&self.m);
        OperatorFile { neg: self.window.neg(), pos: self.window.pos(), re, im }
    }

    pub fn from_file(f: &OperatorFile) -> Result<Self> {
        let window = ModeWindow::new(f.neg, f.pos)?;
        let dim = window.dim();
        if f.re.len() != dim || f.re.iter().any(|r| r.len() != dim) {
            return Err(Error::Input(format!("operator payload is not {dim}x{dim}")));
        }
        let m = io::matrix_from_reim(dim, dim, &f.re, &f.im)?;
        Self::new(window, m)
    }

    pub fn read_json(path: impl AsRef<std::path::Path>) -> Result<Self> {
        Self::from_file(&io::read_json::<OperatorFile>(path)?)
    }
}

/// Operator file: `{"neg": n, "pos": m, "re": [[...]], "im": [[...]]}`, row-major.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OperatorFile {
    pub neg: usize,
    pub pos: usize,
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Vec<Vec<f64>>,
}

pub fn block_split(t: &PolarizedOperator) -> Blocks {
    Blocks { a: t.pp(), b: t.pm(), c: t.mp(), d: t.mm() }
}

/// Thin singular value decomposition `m = u · diag(s) · v_t`, values decreasing.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `rows × k` with orthonormal columns, `k = min(rows, cols)`.
    pub u: CMat,
    pub singular_values: Vec<f64>,
    /// `k × cols` with orthonormal rows.
    pub v_t: CMat,
}

/// One-sided Jacobi SVD. nalgebra's complex SVD returns inaccurate vectors
/// when singular values repeat (a unitary block with `σ = 1, 1, s` is enough),
/// so every routine that needs singular vectors goes through this one.
pub fn svd(m: &CMat) -> Svd {
    if m.nrows() < m.ncols() {
        let t = svd(&m.adjoint());
        return Svd { u: t.v_t.adjoint(), singular_values: t.singular_values, v_t: t.u.adjoint() };
    }
    let (rows, cols) = (m.nrows(), m.ncols());
    let mut a = m.clone();
    let mut v = CMat::identity(cols, cols);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let alpha = a.column(p).norm_squared();
                let beta = a.column(q).norm_squared();
                let gamma = a.column(p).dotc(&a.column(q));
                let g = gamma.norm();
                if g == 0.0 || g <= 1e-16 * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let phase = gamma / g;
                let zeta = (beta - alpha) / (2.0 * g);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let sn = c * t;
                let rotate = |x: &mut CMat| {
                    for r in 0..x.nrows() {
                        let (xp, xq) = (x[(r, p)], x[(r, q)]);
                        x[(r, p)] = xp * c - xq * phase.conj() * sn;
                        x[(r, q)] = xp * phase * sn + xq * c;
                    }
                };
                rotate(&mut a);
                rotate(&mut v);
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| norms[y].total_cmp(&norms[x]));
    let smax = norms[order[0]];
    let mut u = CMat::zeros(rows, cols);
    let mut pending = Vec::new();
    for (k, &j) in order.iter().enumerate() {
        if norms[j] > smax * 1e-14 * rows as f64 && norms[j] > f64::MIN_POSITIVE {
            u.set_column(k, &(a.column(j) / c64(norms[j], 0.0)));
        } else {
            pending.push(k);
        }
    }
    // Columns for (numerically) zero singular values: complete to an orthonormal set.
    let mut probe = 0;
    for k in pending {
        loop {
            let mut x = crate::CVec::zeros(rows);
            x[probe % rows] = c64(1.0, 0.0);
            probe += 1;
            for _ in 0..2 {
                for j in 0..cols {
                    if j != k {
                        let uj = u.column(j).clone_owned();
                        let proj = uj.dotc(&x);
                        x -= uj * proj;
                    }
                }
            }
            let nx = x.norm();
            if nx > 0.5 {
                u.set_column(k, &(x / c64(nx, 0.0)));
                break;
            }
        }
    }
    let vs = CMat::from_fn(cols, cols, |r, k| v[(r, order[k])]);
    Svd { u, singular_values: order.iter().map(|&j| norms[j]).collect(), v_t: vs.adjoint() }
}

/// Singular values in decreasing order; empty for an empty matrix.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.clone().singular_values().iter().copied().collect();
    s.sort_by(|x, y| y.total_cmp(x));
    s
}

/// Largest singular value.
pub fn op_norm(m: &CMat) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

/// Schatten norm for `p ∈ {1, 2}`.
pub fn schatten_norm(m: &CMat, p: u32) -> Result<f64> {
    match p {
        1 => Ok(singular_values(m).iter().sum()),
        2 => Ok(m.norm()),
        _ => Err(Error::Input(format!("Schatten norm only for p = 1, 2 (got {p})"))),
    }
}

/// Determinant by LU with partial pivoting.
pub fn fredholm_det(m: &CMat) -> Complex64 {
    assert!(m.is_square(), "determinant of a non-square matrix");
    if m.nrows() == 0 {
        return c64(1.0, 0.0);
    }
    m.clone().lu().determinant()
}

/// Determinant together with `‖T − Id‖₁`, the size of the trace-class perturbation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetReport {
    pub det: Complex64,
    pub perturbation_trace_norm: f64,
}

pub fn fredholm_det_report(m: &CMat) -> DetReport {
    let id = CMat::identity(m.nrows(), m.ncols());
    DetReport {
        det: fredholm_det(m),
        perturbation_trace_norm: singular_values(&(m - id)).iter().sum(),
    }
}

/// `‖T‖_ε = ‖T‖ + ‖T₊₋‖₂ + ‖T₋₊‖₂`.
pub fn eps_norm(t: &PolarizedOperator) -> f64 {
    op_norm(t.matrix()) + t.pm().norm() + t.mp().norm()
}

/// Hilbert-Schmidt norms of the odd blocks and of `[ε, U]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SsDefect {
    pub hs_pm: f64,
    pub hs_mp: f64,
    pub hs_comm: f64,
}

impl SsDefect {
    /// Relative residual of `¼‖[ε,U]‖₂² = ‖U₊₋‖₂² + ‖U₋₊‖₂²`.
    pub fn identity_residual(&self) -> f64 {
        let lhs = 0.25 * self.hs_comm * self.hs_comm;
        let rhs = self.hs_pm * self.hs_pm + self.hs_mp * self.hs_mp;
        let scale = lhs.abs().max(rhs.abs());
        if scale == 0.0 {
            0.0
        } else {
            (lhs - rhs).abs() / scale
        }
    }
}

pub fn ss_defect(u: &PolarizedOperator) -> SsDefect {
    SsDefect {
        hs_pm: u.pm().norm(),
        hs_mp: u.mp().norm(),
        hs_comm: u.eps_commutator().norm(),
    }
}

/// Numerical rank with threshold `RANK_RTOL × σ_max`.
pub fn numerical_rank(m: &CMat) -> usize {
    numerical_rank_rel(m, None)
}

/// Rank with the cut taken relative to `scale` (default `‖m‖`).
pub fn numerical_rank_rel(m: &CMat, scale: Option<f64>) -> usize {
    let s = singular_values(m);
    let smax = scale.unwrap_or_else(|| s.first().copied().unwrap_or(0.0));
    if smax > 0.0 {
        s.iter().filter(|&&x| x > RANK_RTOL * smax).count()
    } else {
        0
    }
}

/// Orthonormal basis (as columns) of the kernel of `m`.
pub fn null_space(m: &CMat) -> CMat {
    null_space_rel(m, None)
}

/// Kernel with the rank cut taken relative to `scale` instead of `‖m‖`.
///
/// Blocks of a larger operator should be judged against the norm of the whole
/// operator, otherwise a block of size `1e-17` counts as invertible.
pub fn null_space_rel(m: &CMat, scale: Option<f64>) -> CMat {
    let cols = m.ncols();
    if cols == 0 {
        return CMat::zeros(0, 0);
    }
    // Pad to at least square so the SVD returns a full right basis.
    let rows = m.nrows().max(cols);
    let mut padded = CMat::zeros(rows, cols);
    padded.view_mut((0, 0), (m.nrows(), cols)).copy_from(m);
    let svd = svd(&padded);
    let vt = svd.v_t;
    let smax = scale.unwrap_or_else(|| svd.singular_values.iter().copied().fold(0.0, f64::max));
    let cut = if smax > 0.0 { RANK_RTOL * smax } else { f64::INFINITY };
    let idx: Vec<usize> = (0..cols).filter(|&k| !(svd.singular_values[k] > cut)).collect();
    let mut basis = CMat::zeros(cols, idx.len());
    for (c, &k) in idx.iter().enumerate() {
        for r in 0..cols {
            basis[(r, c)] = vt[(k, r)].conj();
        }
    }
    basis
}

/// Orthonormal basis of the column space of `m`.
pub fn range_space(m: &CMat) -> CMat {
    if m.ncols() == 0 || m.nrows() == 0 {
        return CMat::zeros(m.nrows(), 0);
    }
    let svd = svd(m);
    let u = svd.u;
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let idx: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&k| smax > 0.0 && svd.singular_values[k] > RANK_RTOL * smax)
        .collect();
    CMat::from_fn(m.nrows(), idx.len(), |r, c| u[(r, idx[c])])
}

/// Which diagonal block a Fredholm index refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Block {
    PlusPlus,
    MinusMinus,
}

/// Action of a windowed operator outside its window.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Fill {
    Identity,
}

/// An operator acting on the window through `core` and as the shift
/// `e_k ↦ e_{k+s}` (`s = charge_offset`) on every mode outside it.
///
/// Modes whose image leaves the window must have zero columns in `core`, and
/// rows fed from outside the window must be zero rows.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedOperator {
    core: PolarizedOperator,
    fill: Fill,
    charge_offset: i64,
}

impl WindowedOperator {
    pub fn new(core: PolarizedOperator, fill: Fill, charge_offset: i64) -> Result<Self> {
        let w = core.window();
        let s = charge_offset.unsigned_abs() as usize;
        if s > w.neg().min(w.pos()) {
            return Err(Error::Input(format!(
                "charge offset {charge_offset} too large for window ({}, {})",
                w.neg(),
                w.pos()
            )));
        }
        let out = Self { core, fill, charge_offset };
        let (cols, rows) = out.dropped();
        let m = out.core.matrix();
        for &j in &cols {
            if (0..w.dim()).any(|i| m[(i, j)].norm() > FILL_TOL) {
                return Err(Error::Input(format!(
                    "inconsistent fill: column of mode {} must vanish for charge offset {charge_offset}",
                    w.mode_of(j)
                )));
            }
        }
        for &i in &rows {
            if (0..w.dim()).any(|j| m[(i, j)].norm() > FILL_TOL) {
                return Err(Error::Input(format!(
                    "inconsistent fill: row of mode {} must vanish for charge offset {charge_offset}",
                    w.mode_of(i)
                )));
            }
        }
        Ok(out)
    }

    /// An ordinary operator, trivially extended by the identity.
    pub fn from_operator(core: PolarizedOperator) -> Self {
        Self { core, fill: Fill::Identity, charge_offset: 0 }
    }

    /// The shift `σᵏ: e_j ↦ e_{j+k}` on the given window.
    pub fn shift(window: ModeWindow, k: i64) -> Result<Self> {
        let mut m = CMat::zeros(window.dim(), window.dim());
        for j in 0..window.dim() {
            if let Some(i) = window.index_of(window.mode_of(j) + k) {
                m[(i, j)] = c64(1.0, 0.0);
            }
        }
        Self::new(PolarizedOperator::new(window, m)?, Fill::Identity, k)
    }

    pub fn core(&self) -> &PolarizedOperator {
        &self.core
    }

    pub fn fill(&self) -> Fill {
        self.fill
    }

    pub fn charge_offset(&self) -> i64 {
        self.charge_offset
    }

    pub fn window(&self) -> ModeWindow {
        self.core.window()
    }

    /// Indices of columns mapped out of the window and of rows fed from outside.
    fn dropped(&self) -> (Vec<usize>, Vec<usize>) {
        let w = self.window();
        let s = self.charge_offset.unsigned_abs() as usize;
        let bottom: Vec<usize> = (0..s).collect();
        let top: Vec<usize> = (w.dim() - s..w.dim()).collect();
        if self.charge_offset >= 0 {
            (top, bottom)
        } else {
            (bottom, top)
        }
    }

    /// The same operator on a window grown by `pad` modes on each side, with
    /// the fill written out explicitly wherever it stays inside.
    pub fn enlarged(&self, pad: usize) -> Result<Self> {
        let w = self.window();
        let big = w.enlarged(pad, pad);
        let mut m = CMat::zeros(big.dim(), big.dim());
        m.view_mut((pad, pad), (w.dim(), w.dim())).copy_from(self.core.matrix());
        let (cols, _) = self.dropped();
        for j in 0..big.dim() {
            let inner = j >= pad && j < pad + w.dim();
            if inner && !cols.contains(&(j - pad)) {
                continue;
            }
            if let Some(i) = big.index_of(big.mode_of(j) + self.charge_offset) {
                m[(i, j)] = c64(1.0, 0.0);
            }
        }
        Self::new(PolarizedOperator::new(big, m)?, self.fill, self.charge_offset)
    }

    /// Compression of a larger windowed operator onto a sub-window centered the same way.
    fn compressed(&self, window: ModeWindow) -> Result<Self> {
        let big = self.window();
        let off = big.neg() - window.neg();
        let m = self.core.matrix().view((off, off), (window.dim(), window.dim())).into_owned();
        Self::new(PolarizedOperator::new(window, m)?, self.fill, self.charge_offset)
    }

    /// `self ∘ other`, exact including modes that leave and re-enter the window.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.window().check_same(&other.window())?;
        let pad = (self.charge_offset.unsigned_abs() + other.charge_offset.unsigned_abs()) as usize;
        let x = self.enlarged(pad)?;
        let y = other.enlarged(pad)?;
        let prod = Self {
            core: x.core.mul(&y.core)?,
            fill: Fill::Identity,
            charge_offset: self.charge_offset + other.charge_offset,
        };
        prod.compressed(self.window())
    }

    /// The rectangular compression of a diagonal block onto the modes that
    /// stay inside the window.
    pub fn block_rect(&self, block: Block) -> CMat {
        let w = self.window();
        let (cols_out, rows_out) = self.dropped();
        let half = match block {
            Block::PlusPlus => w.plus_range(),
            Block::MinusMinus => w.minus_range(),
        };
        let cols: Vec<usize> = half.clone().filter(|j| !cols_out.contains(j)).collect();
        let rows: Vec<usize> = half.filter(|i| !rows_out.contains(i)).collect();
        let m = self.core.matrix();
        CMat::from_fn(rows.len(), cols.len(), |r, c| m[(rows[r], cols[c])])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IndexReport {
    pub index: i64,
    pub kernel_dim: usize,
    pub cokernel_dim: usize,
}

/// Fredholm index `dim ker − dim coker` of a diagonal block.
pub fn fredholm_index(w: &WindowedOperator, block: Block) -> Result<IndexReport> {
    if w.fill() != Fill::Identity {
        return Err(Error::Input("only identity fill is supported".into()));
    }
    let rect = w.block_rect(block);
    let rank = numerical_rank_rel(&rect, Some(op_norm(w.core().matrix())));
    let kernel_dim = rect.ncols() - rank;
    let cokernel_dim = rect.nrows() - rank;
    Ok(IndexReport { index: kernel_dim as i64 - cokernel_dim as i64, kernel_dim, cokernel_dim })
}
