//! Truncated fermionic Fock space over a mode window.
//!
//! Occupation states are bitsets in the canonical mode order (bit `i` is the
//! window index `i`). A single Jordan-Wigner ordering is used for every
//! operator: `c†_k` acting on a state picks up `(−1)^r`, where `r` counts the
//! occupied modes before `k` in canonical order. The particle/antiparticle
//! operators are then
//!
//! * `a*(f) = Σ_{k≥0} f_k c†_k`, `a(f) = Σ_{k≥0} f̄_k c_k`,
//! * `b*(g) = Σ_{k<0} ḡ_k c_k`, `b(g) = Σ_{k<0} g_k c†_k`,
//!
//! so charge conjugation is complex conjugation of coefficients and any extra
//! hole-ordering sign is absorbed into the global ordering. The vacuum `Ω`
//! has every negative mode occupied and every positive mode empty.

use std::collections::BTreeMap;

use nalgebra_sparse::{CooMatrix, CsrMatrix};
use serde::{Deserialize, Serialize};

use crate::linop::{
    null_space_rel, numerical_rank, op_norm, singular_values, Block, ModeWindow, PolarizedOperator, WindowedOperator, RANK_RTOL,
};
use crate::polarization::AdmissibleBasis;
use crate::{c64, CMat, CVec, Complex64, Error, Result};

/// Largest window dimension for which the full Fock space is assembled.
pub const MAX_MODES: usize = 14;

/// Tolerance for support checks of one-particle vectors.
const SUPPORT_TOL: f64 = 1e-14;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };
const ONE: Complex64 = Complex64 { re: 1.0, im: 0.0 };

fn check_window(window: ModeWindow) -> Result<()> {
    if window.dim() > MAX_MODES {
        return Err(Error::Input(format!(
            "Fock space over {} modes exceeds the limit of {MAX_MODES}",
            window.dim()
        )));
    }
    Ok(())
}

/// `(−1)^(number of occupied modes below k)`.
#[inline]
fn jw_sign(bits: u64, k: usize) -> f64 {
    if (bits & ((1u64 << k) - 1)).count_ones() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct OccupationState {
    window: ModeWindow,
    bits: u64,
}

impl OccupationState {
    pub fn new(window: ModeWindow, bits: u64) -> Result<Self> {
        check_window(window)?;
        if bits >> window.dim() != 0 {
            return Err(Error::Input("occupation bits outside the window".into()));
        }
        Ok(Self { window, bits })
    }

    pub fn vacuum(window: ModeWindow) -> Self {
        Self { window, bits: (1u64 << window.neg()) - 1 }
    }

    /// State with exactly the given signed modes occupied.
    pub fn from_modes(window: ModeWindow, modes: &[i64]) -> Result<Self> {
        let mut bits = 0u64;
        for &k in modes {
            let i = window.index_of(k).ok_or_else(|| Error::Input(format!("mode {k} outside the window")))?;
            if bits & (1 << i) != 0 {
                return Err(Error::Input(format!("mode {k} listed twice")));
            }
            bits |= 1 << i;
        }
        Self::new(window, bits)
    }

    pub fn window(&self) -> ModeWindow {
        self.window
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn is_occupied(&self, index: usize) -> bool {
        self.bits & (1 << index) != 0
    }

    /// Occupied signed modes in ascending order.
    pub fn occupied_modes(&self) -> Vec<i64> {
        (0..self.window.dim()).filter(|&i| self.is_occupied(i)).map(|i| self.window.mode_of(i)).collect()
    }

    /// `#occupied positive modes − #empty negative modes`.
    pub fn charge(&self) -> i64 {
        let n = self.window.neg();
        let particles = (self.bits >> n).count_ones() as i64;
        let filled = (self.bits & ((1u64 << n) - 1)).count_ones() as i64;
        particles - (n as i64 - filled)
    }
}

/// Sparse vector in the occupation basis.
#[derive(Debug, Clone, PartialEq)]
pub struct FockVector {
    window: ModeWindow,
    amps: BTreeMap<u64, Complex64>,
}

impl FockVector {
    pub fn zero(window: ModeWindow) -> Self {
        Self { window, amps: BTreeMap::new() }
    }

    pub fn basis(state: OccupationState) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(state.bits, ONE);
        Self { window: state.window, amps }
    }

    pub fn vacuum(window: ModeWindow) -> Self {
        Self::basis(OccupationState::vacuum(window))
    }

    pub fn window(&self) -> ModeWindow {
        self.window
    }

    pub fn amplitude(&self, state: &OccupationState) -> Complex64 {
        self.amps.get(&state.bits).copied().unwrap_or(ZERO)
    }

    /// Nonzero amplitudes in ascending bit order.
    pub fn entries(&self) -> impl Iterator<Item = (OccupationState, Complex64)> + '_ {
        self.amps.iter().map(|(&bits, &a)| (OccupationState { window: self.window, bits }, a))
    }

    pub fn norm(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `⟨self, other⟩`, antilinear in `self`.
    pub fn inner(&self, other: &Self) -> Complex64 {
        self.amps.iter().map(|(b, a)| a.conj() * other.amps.get(b).copied().unwrap_or(ZERO)).sum()
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { window: self.window, amps: self.amps.iter().map(|(&b, &a)| (b, a * s)).collect() }
    }

    pub fn to_dense(&self) -> Result<CVec> {
        check_window(self.window)?;
        let mut v = CVec::zeros(1 << self.window.dim());
        for (&b, &a) in &self.amps {
            v[b as usize] = a;
        }
        Ok(v)
    }

    pub fn from_dense(window: ModeWindow, v: &CVec) -> Self {
        let amps = v.iter().enumerate().filter(|(_, a)| **a != ZERO).map(|(b, &a)| (b as u64, a)).collect();
        Self { window, amps }
    }

    pub fn to_dump(&self) -> Vec<FockEntry> {
        self.entries()
            .map(|(s, a)| FockEntry { occupied: s.occupied_modes(), re: a.re, im: a.im })
            .collect()
    }

    pub fn from_dump(window: ModeWindow, entries: &[FockEntry]) -> Result<Self> {
        let mut v = Self::zero(window);
        for e in entries {
            let s = OccupationState::from_modes(window, &e.occupied)?;
            *v.amps.entry(s.bits).or_insert(ZERO) += c64(e.re, e.im);
        }
        Ok(v)
    }
}

/// One amplitude of a dumped Fock vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockEntry {
    pub occupied: Vec<i64>,
    pub re: f64,
    pub im: f64,
}

/// Sparse operator on the full occupation basis of a window.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator {
    window: ModeWindow,
    mat: CsrMatrix<Complex64>,
}

impl FockOperator {
    fn from_coo(window: ModeWindow, coo: &CooMatrix<Complex64>) -> Self {
        Self { window, mat: CsrMatrix::from(coo) }
    }

    pub fn from_csr(window: ModeWindow, mat: CsrMatrix<Complex64>) -> Result<Self> {
        check_window(window)?;
        let n = 1usize << window.dim();
        if mat.nrows() != n || mat.ncols() != n {
            return Err(Error::Input("operator does not match the Fock dimension".into()));
        }
        Ok(Self { window, mat })
    }

    pub fn identity(window: ModeWindow) -> Result<Self> {
        check_window(window)?;
        Ok(Self { window, mat: CsrMatrix::identity(1 << window.dim()) })
    }

    pub fn window(&self) -> ModeWindow {
        self.window
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CsrMatrix<Complex64> {
        &self.mat
    }

    pub fn adjoint(&self) -> Self {
        let mut t = self.mat.transpose();
        for v in t.values_mut() {
            *v = v.conj();
        }
        Self { window: self.window, mat: t }
    }

    fn same(&self, other: &Self) -> Result<()> {
        if self.window != other.window {
            return Err(Error::WindowMismatch("Fock operators on different windows".into()));
        }
        Ok(())
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.same(other)?;
        Ok(Self { window: self.window, mat: &self.mat * &other.mat })
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.same(other)?;
        Ok(Self { window: self.window, mat: &self.mat + &other.mat })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.same(other)?;
        Ok(Self { window: self.window, mat: &self.mat - &other.mat })
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let mut mat = self.mat.clone();
        for v in mat.values_mut() {
            *v *= s;
        }
        Self { window: self.window, mat }
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.sub(&other.mul(self)?)
    }

    pub fn anticommutator(&self, other: &Self) -> Result<Self> {
        self.mul(other)?.add(&other.mul(self)?)
    }

    pub fn apply(&self, v: &FockVector) -> Result<FockVector> {
        if v.window != self.window {
            return Err(Error::WindowMismatch("operator and vector".into()));
        }
        let mut out: BTreeMap<u64, Complex64> = BTreeMap::new();
        for (row, lane) in self.mat.row_iter().enumerate() {
            let mut acc = ZERO;
            for (&col, &val) in lane.col_indices().iter().zip(lane.values()) {
                if let Some(a) = v.amps.get(&(col as u64)) {
                    acc += val * a;
                }
            }
            if acc != ZERO {
                out.insert(row as u64, acc);
            }
        }
        Ok(FockVector { window: self.window, amps: out })
    }

    pub fn to_dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim(), self.dim());
        for (i, j, v) in self.mat.triplet_iter() {
            m[(i, j)] += *v;
        }
        m
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.mat.values().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Best scalar `c` with `self ≈ c·Id` and the largest entry of `self − c·Id`.
    pub fn scalar_part(&self) -> (Complex64, f64) {
        let n = self.dim();
        let mut diag = vec![ZERO; n];
        for (i, j, v) in self.mat.triplet_iter() {
            if i == j {
                diag[i] += *v;
            }
        }
        let c = diag.iter().sum::<Complex64>() / n as f64;
        let mut resid = diag.iter().map(|d| (d - c).norm()).fold(0.0, f64::max);
        for (i, j, v) in self.mat.triplet_iter() {
            if i != j {
                resid = resid.max(v.norm());
            }
        }
        (c, resid)
    }
}

/// The four kinds of particle/antiparticle operators.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Kind {
    /// `a(f)`, `f ∈ H₊`.
    A,
    /// `a*(f)`, `f ∈ H₊`.
    AStar,
    /// `b(g)`, `g ∈ H₋`.
    B,
    /// `b*(g)`, `g ∈ H₋`.
    BStar,
}

/// Build `Σ_k coeff_k c†_k` (`create`) or `Σ_k coeff_k c_k`.
fn ladder_sum(window: ModeWindow, coeffs: &[(usize, Complex64)], create: bool) -> Result<FockOperator> {
    check_window(window)?;
    let n = 1u64 << window.dim();
    let mut coo = CooMatrix::new(n as usize, n as usize);
    for bits in 0..n {
        for &(k, c) in coeffs {
            if c == ZERO {
                continue;
            }
            let occ = bits & (1 << k) != 0;
            if occ != create {
                let target = bits ^ (1 << k);
                coo.push(target as usize, bits as usize, c * jw_sign(bits, k));
            }
        }
    }
    Ok(FockOperator::from_coo(window, &coo))
}

fn check_vector(window: ModeWindow, f: &CVec) -> Result<()> {
    if f.len() != window.dim() {
        return Err(Error::Input(format!("vector has {} entries, window has {}", f.len(), window.dim())));
    }
    Ok(())
}

fn check_support(window: ModeWindow, f: &CVec, plus: bool) -> Result<()> {
    check_vector(window, f)?;
    let scale = f.norm().max(1.0);
    let leak: f64 = (0..window.dim())
        .filter(|&i| window.is_plus(i) != plus)
        .map(|i| f[i].norm_sqr())
        .sum::<f64>()
        .sqrt();
    if leak > SUPPORT_TOL * scale {
        let half = if plus { "H₊" } else { "H₋" };
        return Err(Error::Input(format!("vector is not supported in {half} (leak {leak:.3e})")));
    }
    Ok(())
}

/// `a(f)`, `a*(f)`, `b(g)` or `b*(g)`.
pub fn ladder(window: ModeWindow, kind: Kind, f: &CVec) -> Result<FockOperator> {
    let plus = matches!(kind, Kind::A | Kind::AStar);
    check_support(window, f, plus)?;
    let range = if plus { window.plus_range() } else { window.minus_range() };
    let (conj, create) = match kind {
        Kind::A => (true, false),
        Kind::AStar => (false, true),
        Kind::B => (false, true),
        Kind::BStar => (true, false),
    };
    let coeffs: Vec<(usize, Complex64)> = range.map(|k| (k, if conj { f[k].conj() } else { f[k] })).collect();
    ladder_sum(window, &coeffs, create)
}

/// `Ψ(f) = a(P₊f) + b*(P₋f)`, antilinear in `f`.
pub fn field_op(window: ModeWindow, f: &CVec) -> Result<FockOperator> {
    check_vector(window, f)?;
    let coeffs: Vec<(usize, Complex64)> = (0..window.dim()).map(|k| (k, f[k].conj())).collect();
    ladder_sum(window, &coeffs, false)
}

/// `Ψ*(f) = a*(P₊f) + b(P₋f)`.
pub fn field_op_adj(window: ModeWindow, f: &CVec) -> Result<FockOperator> {
    check_vector(window, f)?;
    let coeffs: Vec<(usize, Complex64)> = (0..window.dim()).map(|k| (k, f[k])).collect();
    ladder_sum(window, &coeffs, true)
}

/// Normal-ordered second quantization `dΓ(A) = Σ A_ij c†_i c_j − tr(A₋₋)`.
pub fn dgamma(a: &PolarizedOperator) -> Result<FockOperator> {
    let window = a.window();
    check_window(window)?;
    let d = window.dim();
    let n = 1u64 << d;
    let m = a.matrix();
    let shift = a.mm().trace();
    let entries: Vec<(usize, usize, Complex64)> =
        (0..d).flat_map(|i| (0..d).map(move |j| (i, j))).filter(|&(i, j)| m[(i, j)] != ZERO).map(|(i, j)| (i, j, m[(i, j)])).collect();
    let mut coo = CooMatrix::new(n as usize, n as usize);
    for bits in 0..n {
        if shift != ZERO {
            coo.push(bits as usize, bits as usize, -shift);
        }
        for &(i, j, v) in &entries {
            if bits & (1 << j) == 0 {
                continue;
            }
            let mid = bits ^ (1 << j);
            if mid & (1 << i) != 0 {
                continue;
            }
            let s = jw_sign(bits, j) * jw_sign(mid, i);
            coo.push((mid | (1 << i)) as usize, bits as usize, v * s);
        }
    }
    Ok(FockOperator::from_coo(window, &coo))
}

/// `dΓ(Id)`, with eigenvalue `charge` on every occupation state.
pub fn charge_operator(window: ModeWindow) -> Result<FockOperator> {
    dgamma(&PolarizedOperator::identity(window))
}

/// `[dΓ(A), dΓ(B)] − dΓ([A,B])`, checked to be scalar; returns the scalar.
pub fn anomaly_check(a: &PolarizedOperator, b: &PolarizedOperator) -> Result<Complex64> {
    let (ga, gb) = (dgamma(a)?, dgamma(b)?);
    let r = ga.commutator(&gb)?.sub(&dgamma(&a.commutator(b)?)?)?;
    let (c, resid) = r.scalar_part();
    let scale = a.matrix().norm() * b.matrix().norm();
    if resid > 1e-10 * scale.max(1.0) {
        return Err(Error::Invariant(format!("anomaly is not a multiple of the identity (residue {resid:.3e})")));
    }
    Ok(c)
}

/// Kernel dimensions `(ker U₊₊, ker U₋₋*, ker U₋₋, ker U₊₊*)` of a unitary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct KernelDims {
    pub ker_pp: usize,
    pub ker_mm_adj: usize,
    pub ker_mm: usize,
    pub ker_pp_adj: usize,
}

pub fn kernel_dims(u: &PolarizedOperator) -> Result<KernelDims> {
    let dev = u.unitarity_defect();
    if dev > 1e-10 {
        return Err(Error::Input(format!("operator is not unitary (deviation {dev:.3e})")));
    }
    let (pp, mm) = (u.pp(), u.mm());
    let ker = |m: &CMat| null_space_rel(m, Some(1.0)).ncols();
    let k = KernelDims {
        ker_pp: ker(&pp),
        ker_mm_adj: ker(&mm.adjoint()),
        ker_mm: ker(&mm),
        ker_pp_adj: ker(&pp.adjoint()),
    };
    if k.ker_pp != k.ker_mm_adj || k.ker_mm != k.ker_pp_adj {
        return Err(Error::Invariant(format!("kernel dimensions are unpaired: {k:?}")));
    }
    Ok(k)
}

/// Dense state vector on the full occupation basis, with in-place ladder action.
struct Dense {
    amps: Vec<Complex64>,
}

impl Dense {
    fn basis(window: ModeWindow, bits: u64) -> Self {
        let mut amps = vec![ZERO; 1 << window.dim()];
        amps[bits as usize] = ONE;
        Self { amps }
    }

    /// `Σ_k coeff_k c†_k` or `Σ_k coeff_k c_k` applied to the vector.
    fn ladder(&self, coeffs: &[(usize, Complex64)], create: bool) -> Self {
        let mut out = vec![ZERO; self.amps.len()];
        for (bits, &amp) in self.amps.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            let bits = bits as u64;
            for &(k, c) in coeffs {
                if c == ZERO || (bits & (1 << k) != 0) == create {
                    continue;
                }
                out[(bits ^ (1 << k)) as usize] += c * amp * jw_sign(bits, k);
            }
        }
        Self { amps: out }
    }

    fn field(&self, f: &[Complex64]) -> Self {
        let coeffs: Vec<(usize, Complex64)> = f.iter().enumerate().map(|(k, v)| (k, v.conj())).collect();
        self.ladder(&coeffs, false)
    }

    fn field_adj(&self, f: &[Complex64]) -> Self {
        let coeffs: Vec<(usize, Complex64)> = f.iter().copied().enumerate().collect();
        self.ladder(&coeffs, true)
    }

    /// `Σ_{k,j} A_kj c†_k c_j` for the given row and column index maps.
    fn pair(&self, a: &CMat, rows: &[usize], cols: &[usize]) -> Self {
        let mut out = vec![ZERO; self.amps.len()];
        for (bits, &amp) in self.amps.iter().enumerate() {
            if amp == ZERO {
                continue;
            }
            let bits = bits as u64;
            for (c, &j) in cols.iter().enumerate() {
                if bits & (1 << j) == 0 {
                    continue;
                }
                let mid = bits ^ (1 << j);
                let sj = jw_sign(bits, j);
                for (r, &k) in rows.iter().enumerate() {
                    let v = a[(r, c)];
                    if v == ZERO || mid & (1 << k) != 0 {
                        continue;
                    }
                    out[(mid | (1 << k)) as usize] += v * amp * sj * jw_sign(mid, k);
                }
            }
        }
        Self { amps: out }
    }

    fn axpy(&mut self, s: Complex64, other: &Self) {
        for (x, y) in self.amps.iter_mut().zip(&other.amps) {
            *x += s * y;
        }
    }

    fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    fn is_zero(&self) -> bool {
        self.amps.iter().all(|a| *a == ZERO)
    }
}

/// The data of the transformed vacuum `Γ(U)Ω`.
#[derive(Debug, Clone)]
pub struct TransformedVacuum {
    pub vector: FockVector,
    /// Normalization: product of the nonzero singular values of `U₋₋`.
    pub n: f64,
    /// `√det(1 − U₊₋U₊₋*)`, which vanishes as soon as `U₋₋` has a kernel.
    pub overlap_norm: f64,
    /// `A = U₊₋ (U₋₋)⁺`.
    pub pair_amplitude: CMat,
    /// Number of created particles, `dim ker U₊₊*`.
    pub l: usize,
    /// Number of created holes, `dim ker U₋₋*`.
    pub m: usize,
}

impl TransformedVacuum {
    pub fn net_charge(&self) -> i64 {
        self.l as i64 - self.m as i64
    }
}

/// Pseudo-inverse with the crate rank threshold; also returns the product of
/// the retained singular values.
fn pseudo_inverse(m: &CMat, scale: f64) -> (CMat, f64) {
    if m.nrows() == 0 || m.ncols() == 0 {
        return (CMat::zeros(m.ncols(), m.nrows()), 1.0);
    }
    let svd = crate::linop::svd(m);
    let (u, vt) = (&svd.u, &svd.v_t);
    let smax = scale;
    let mut inv = CMat::zeros(m.ncols(), m.nrows());
    let mut pdet = 1.0;
    for k in 0..svd.singular_values.len() {
        let s = svd.singular_values[k];
        if smax > 0.0 && s > RANK_RTOL * smax {
            pdet *= s;
            inv += vt.row(k).adjoint() * u.column(k).adjoint() * c64(1.0 / s, 0.0);
        }
    }
    (inv, pdet)
}

fn embed(window: ModeWindow, coords: &CMat, idx: &[usize]) -> Vec<Vec<Complex64>> {
    (0..coords.ncols())
        .map(|c| {
            let mut v = vec![ZERO; window.dim()];
            for (r, &i) in idx.iter().enumerate() {
                v[i] = coords[(r, c)];
            }
            v
        })
        .collect()
}

/// `Γ(U)Ω = N·phase·∏a*(f_l) ∏b*(g_m) exp(A a*b*) Ω` for a windowed operator.
///
/// The blocks are the rectangular compressions onto modes that stay inside
/// the window, so shift-type operators are handled alongside unitaries.
pub fn transformed_vacuum(w: &WindowedOperator, phase: Complex64) -> Result<TransformedVacuum> {
    let window = w.window();
    check_window(window)?;
    if (phase.norm() - 1.0).abs() > 1e-12 {
        return Err(Error::Input("phase must have unit modulus".into()));
    }
    let s = w.charge_offset();
    let t = s.unsigned_abs() as usize;
    let (n, d) = (window.neg(), window.dim());
    // Rows/cols kept in each block, matching WindowedOperator::block_rect.
    let (rows_p, cols_m): (Vec<usize>, Vec<usize>) = if s >= 0 {
        ((n..d).collect(), (0..n).collect())
    } else {
        ((n..d - t).collect(), (t..n).collect())
    };
    let rows_m: Vec<usize> = if s >= 0 { (t..n).collect() } else { (0..n).collect() };
    let core = w.core().matrix();
    let u_pp = w.block_rect(Block::PlusPlus);
    let u_mm = w.block_rect(Block::MinusMinus);
    let u_pm = CMat::from_fn(rows_p.len(), cols_m.len(), |r, c| core[(rows_p[r], cols_m[c])]);

    let scale = op_norm(core);
    let f = null_space_rel(&u_pp.adjoint(), Some(scale));
    let g = null_space_rel(&u_mm.adjoint(), Some(scale));
    let (pinv, n_factor) = pseudo_inverse(&u_mm, scale);
    let a = &u_pm * pinv;

    let mut term = Dense::basis(window, OccupationState::vacuum(window).bits);
    let mut acc = Dense { amps: term.amps.clone() };
    for k in 1..=d {
        term = term.pair(&a, &rows_p, &rows_m);
        if term.is_zero() {
            break;
        }
        term.amps.iter_mut().for_each(|x| *x /= k as f64);
        acc.axpy(ONE, &term);
    }
    for col in embed(window, &g, &rows_m).iter().rev() {
        // b*(g) = Σ ḡ_k c_k
        let coeffs: Vec<(usize, Complex64)> = col.iter().enumerate().map(|(k, v)| (k, v.conj())).collect();
        acc = acc.ladder(&coeffs, false);
    }
    for col in embed(window, &f, &rows_p).iter().rev() {
        acc = acc.field_adj(col);
    }
    let scale = phase * n_factor;
    acc.amps.iter_mut().for_each(|x| *x *= scale);
    let norm = acc.norm();
    if (norm - 1.0).abs() > 1e-9 {
        return Err(Error::Invariant(format!("transformed vacuum has norm {norm:.12}")));
    }
    let overlap = singular_values(&u_pm).iter().map(|s| (1.0 - s * s).max(0.0)).product::<f64>().sqrt();
    Ok(TransformedVacuum {
        vector: FockVector::from_dense(window, &CVec::from_vec(acc.amps)),
        n: n_factor,
        overlap_norm: overlap,
        pair_amplitude: a,
        l: f.ncols(),
        m: g.ncols(),
    })
}

/// Full Bogoliubov implementer together with its vacuum data.
#[derive(Debug, Clone)]
pub struct Implementer {
    pub op: FockOperator,
    pub vacuum: TransformedVacuum,
}

/// Implement a unitary on the truncated Fock space.
///
/// Each basis state is written as `±∏Ψ*(e_p) ∏Ψ(e_h) Ω` (particles `p`,
/// holes `h`) and mapped to `±∏Ψ*(Ue_p) ∏Ψ(Ue_h) Γ(U)Ω`.
pub fn bogoliubov_implement(u: &PolarizedOperator, phase: Complex64) -> Result<Implementer> {
    let window = u.window();
    check_window(window)?;
    let dev = u.unitarity_defect();
    if dev > 1e-10 {
        return Err(Error::Input(format!("operator is not unitary (deviation {dev:.3e})")));
    }
    let vac = transformed_vacuum(&WindowedOperator::from_operator(u.clone()), phase)?;
    let omega = Dense { amps: vac.vector.to_dense()?.iter().copied().collect() };
    let d = window.dim();
    let n = window.neg();
    let unit = |k: usize| -> Vec<Complex64> { (0..d).map(|i| if i == k { ONE } else { ZERO }).collect() };
    let image = |k: usize| -> Vec<Complex64> { u.matrix().column(k).iter().copied().collect() };
    let vac_bits = OccupationState::vacuum(window).bits;
    let size = 1usize << d;
    let mut coo = CooMatrix::new(size, size);
    for bits in 0..size as u64 {
        let particles: Vec<usize> = (n..d).filter(|&i| bits & (1 << i) != 0).collect();
        let holes: Vec<usize> = (0..n).filter(|&i| bits & (1 << i) == 0).collect();
        let mut reference = Dense::basis(window, vac_bits);
        let mut mapped = Dense { amps: omega.amps.clone() };
        for &h in holes.iter().rev() {
            reference = reference.field(&unit(h));
            mapped = mapped.field(&image(h));
        }
        for &p in particles.iter().rev() {
            reference = reference.field_adj(&unit(p));
            mapped = mapped.field_adj(&image(p));
        }
        let sign = reference.amps[bits as usize];
        debug_assert!((sign.norm() - 1.0).abs() < 1e-14);
        for (row, v) in mapped.amps.iter().enumerate() {
            if *v != ZERO {
                coo.push(row, bits as usize, v * sign.conj());
            }
        }
    }
    let op = FockOperator::from_coo(window, &coo);
    let g = op.adjoint().mul(&op)?.sub(&FockOperator::identity(window)?)?;
    if g.norm() > 1e-10 {
        return Err(Error::Invariant(format!("implementer is not unitary (deviation {:.3e})", g.norm())));
    }
    Ok(Implementer { op, vacuum: vac })
}

/// `max_k ‖G Ψ(e_k) G* − Ψ(U e_k)‖₂`, an upper bound for the operator-norm deviation.
pub fn verify_intertwining(g: &FockOperator, u: &PolarizedOperator) -> Result<f64> {
    let window = u.window();
    if g.window() != window {
        return Err(Error::WindowMismatch("implementer and one-particle operator".into()));
    }
    let gs = g.adjoint();
    let mut worst: f64 = 0.0;
    for k in 0..window.dim() {
        let e = CVec::from_fn(window.dim(), |i, _| if i == k { ONE } else { ZERO });
        let lhs = g.mul(&field_op(window, &e)?)?.mul(&gs)?;
        let rhs = field_op(window, &(u.matrix() * &e))?;
        worst = worst.max(lhs.sub(&rhs)?.norm());
    }
    Ok(worst)
}

/// `Γ(UV)* Γ(U) Γ(V) = λ·Id`: returns `λ` and the off-scalar residue.
pub fn projective_factor(gu: &FockOperator, gv: &FockOperator, guv: &FockOperator) -> Result<(Complex64, f64)> {
    Ok(guv.adjoint().mul(&gu.mul(gv)?)?.scalar_part())
}

/// Columns `e_s`, `s ∈ S` ascending: the frame of an occupation state.
pub fn occupation_frame(state: &OccupationState) -> CMat {
    let w = state.window();
    let occ: Vec<usize> = (0..w.dim()).filter(|&i| state.is_occupied(i)).collect();
    CMat::from_fn(w.dim(), occ.len(), |r, c| if r == occ[c] { ONE } else { ZERO })
}

/// Plücker coordinates of a frame: the amplitude on `|T⟩` is `det(frame[T, :])`.
pub fn wedge_state(window: ModeWindow, frame: &CMat) -> Result<FockVector> {
    check_window(window)?;
    if frame.nrows() != window.dim() {
        return Err(Error::Input("frame does not match the window".into()));
    }
    let k = frame.ncols();
    let mut amps = BTreeMap::new();
    for bits in 0..(1u64 << window.dim()) {
        if bits.count_ones() as usize != k {
            continue;
        }
        let rows: Vec<usize> = (0..window.dim()).filter(|&i| bits & (1 << i) != 0).collect();
        let minor = CMat::from_fn(k, k, |r, c| frame[(rows[r], c)]);
        let det = crate::linop::fredholm_det(&minor);
        if det != ZERO {
            amps.insert(bits, det);
        }
    }
    Ok(FockVector { window, amps })
}

/// `det(z* w)` of two frames with the same number of columns.
pub fn pflucker_inner(z: &CMat, w: &CMat) -> Result<Complex64> {
    if z.shape() != w.shape() {
        return Err(Error::Input(format!("frames have shapes {:?} and {:?}", z.shape(), w.shape())));
    }
    Ok(crate::linop::fredholm_det(&(z.adjoint() * w)))
}

pub fn pflucker_inner_bases(z: &AdmissibleBasis, w: &AdmissibleBasis) -> Result<Complex64> {
    pflucker_inner(&z.map, &w.map)
}

/// Rank of a frame, used to reject degenerate Plücker inputs.
pub fn frame_rank(frame: &CMat) -> usize {
    numerical_rank(frame)
}
