//! Dirac fermions on a 1+1D momentum lattice in an external potential.
//!
//! Momenta are `p_k = 2πk/L`, `k = −N..N`. Everything is written in the
//! eigenbasis of the free Hamiltonian `D₀ = αp + βm` (`α = σ₁`, `β = σ₃`):
//! window index `k + N` is the negative-energy mode at `p_k`, index
//! `2N + 1 + k + N` the positive-energy mode. The potential
//! `V = e(A₀ + αA₁)` acts by truncated convolution in momentum space.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::fock::bogoliubov_implement;
use crate::linop::{op_norm, singular_values, ss_defect, ModeWindow, PolarizedOperator};
use crate::loopgroup::{FourierFile, FourierFunction};
use crate::polarization::{hs_distance, Polarization};
use crate::transport::{holonomy_loop, holonomy_path, parallel_transport, SampledPath, TransportOptions};
use crate::{c64, CMat, Complex64, Error, Result};

/// Sign in `i∫U⁰V_oddU⁰ = κ(Q(t₁)U⁰ − U⁰Q(t₀) − ∫U⁰Q̇U⁰)`, fixed by quadrature on a coarse model.
pub const Q_IDENTITY_SIGN: f64 = -1.0;

/// Dyson summation stops once the a-priori bound of the next term drops below this.
pub const DYSON_CUTOFF: f64 = 1e-12;

/// Eigenvalues of `H` closer to zero than this are flagged.
pub const ZERO_EIGENVALUE_TOL: f64 = 1e-9;

const PANEL_NODES: usize = 10;
const MIN_PANELS: usize = 32;
const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);
const MINUS_I: Complex64 = Complex64::new(0.0, -1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LatticeModel {
    pub mass: f64,
    pub box_len: f64,
    pub cutoff: usize,
    pub charge: f64,
}

impl LatticeModel {
    pub fn new(mass: f64, box_len: f64, cutoff: usize, charge: f64) -> Result<Self> {
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::Input(format!("mass must be positive, got {mass}")));
        }
        if !(box_len > 0.0 && box_len.is_finite()) {
            return Err(Error::Input(format!("box length must be positive, got {box_len}")));
        }
        if cutoff > 2048 {
            return Err(Error::Input(format!("cutoff {cutoff} too large")));
        }
        if !charge.is_finite() {
            return Err(Error::Input("charge must be finite".into()));
        }
        Ok(Self { mass, box_len, cutoff, charge })
    }

    pub fn with_cutoff(&self, cutoff: usize) -> Result<Self> {
        Self::new(self.mass, self.box_len, cutoff, self.charge)
    }

    /// Number of momenta, `2N + 1`.
    pub fn momenta(&self) -> usize {
        2 * self.cutoff + 1
    }

    pub fn window(&self) -> ModeWindow {
        ModeWindow::new(self.momenta(), self.momenta()).expect("nonempty")
    }

    pub fn dim(&self) -> usize {
        2 * self.momenta()
    }

    pub fn momentum(&self, k: i64) -> f64 {
        2.0 * PI * k as f64 / self.box_len
    }

    pub fn dispersion(&self, p: f64) -> f64 {
        (p * p + self.mass * self.mass).sqrt()
    }

    /// `(k, positive energy)` of a window index.
    pub fn mode(&self, index: usize) -> (i64, bool) {
        let n = self.momenta();
        let positive = index >= n;
        let j = if positive { index - n } else { index };
        (j as i64 - self.cutoff as i64, positive)
    }

    pub fn index(&self, k: i64, positive: bool) -> Option<usize> {
        if k.unsigned_abs() as usize > self.cutoff {
            return None;
        }
        let j = (k + self.cutoff as i64) as usize;
        Some(if positive { self.momenta() + j } else { j })
    }

    /// Signed free energies `ε_j = ±E(p_k)` in window order.
    pub fn energies(&self) -> Vec<f64> {
        (0..self.dim())
            .map(|i| {
                let (k, pos) = self.mode(i);
                let e = self.dispersion(self.momentum(k));
                if pos {
                    e
                } else {
                    -e
                }
            })
            .collect()
    }

    /// Real eigenspinor of `[[m, p], [p, −m]]` with eigenvalue `±E(p)`.
    pub fn spinor(&self, k: i64, positive: bool) -> [f64; 2] {
        let p = self.momentum(k);
        let e = self.dispersion(p);
        let norm = (2.0 * e * (e + self.mass)).sqrt();
        if positive {
            [(e + self.mass) / norm, p / norm]
        } else {
            [-p / norm, (e + self.mass) / norm]
        }
    }

    /// Columns are the energy modes expressed in the spinor basis `2(k+N) + s`.
    pub fn basis_change(&self) -> CMat {
        let d = self.dim();
        let mut b = CMat::zeros(d, d);
        for i in 0..d {
            let (k, pos) = self.mode(i);
            let u = self.spinor(k, pos);
            let row = 2 * (k + self.cutoff as i64) as usize;
            b[(row, i)] = c64(u[0], 0.0);
            b[(row + 1, i)] = c64(u[1], 0.0);
        }
        b
    }

    /// Indices of modes with `|k| ≤ kmax`, negative energies first.
    pub fn indices_within(&self, kmax: usize) -> Vec<usize> {
        let kmax = kmax.min(self.cutoff) as i64;
        let mut out: Vec<usize> = (-kmax..=kmax).map(|k| self.index(k, false).expect("in range")).collect();
        out.extend((-kmax..=kmax).map(|k| self.index(k, true).expect("in range")));
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EnvelopeKind {
    /// Squared, shifted Gaussian that vanishes with its derivative at the ends.
    Gaussian,
    /// `exp(1 − 1/(1 − s²))`.
    Bump,
    Const,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope {
    pub kind: EnvelopeKind,
    pub t_on: f64,
    pub t_off: f64,
}

impl Envelope {
    pub fn new(kind: EnvelopeKind, t_on: f64, t_off: f64) -> Result<Self> {
        let e = Self { kind, t_on, t_off };
        e.validate()?;
        Ok(e)
    }

    fn validate(&self) -> Result<()> {
        if !(self.t_on.is_finite() && self.t_off.is_finite() && self.t_on < self.t_off) {
            return Err(Error::Input(format!("envelope support [{}, {}] is empty", self.t_on, self.t_off)));
        }
        Ok(())
    }

    fn centre(&self) -> (f64, f64) {
        (0.5 * (self.t_on + self.t_off), 0.5 * (self.t_off - self.t_on))
    }

    pub fn value(&self, t: f64) -> f64 {
        let (c, h) = self.centre();
        let s = t - c;
        if s.abs() >= h {
            return if self.kind == EnvelopeKind::Const && s.abs() == h { 1.0 } else { 0.0 };
        }
        match self.kind {
            EnvelopeKind::Gaussian => {
                let (g, gh, _) = gauss_parts(s, h);
                let f = (g - gh) / (1.0 - gh);
                f * f
            }
            EnvelopeKind::Bump => {
                let r = s / h;
                (1.0 - 1.0 / (1.0 - r * r)).exp()
            }
            EnvelopeKind::Const => 1.0,
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let (c, h) = self.centre();
        let s = t - c;
        if s.abs() >= h {
            return 0.0;
        }
        match self.kind {
            EnvelopeKind::Gaussian => {
                let (g, gh, sigma) = gauss_parts(s, h);
                let f = (g - gh) / (1.0 - gh);
                let df = -s / (sigma * sigma) * g / (1.0 - gh);
                2.0 * f * df
            }
            EnvelopeKind::Bump => {
                let r = s / h;
                let q = 1.0 - r * r;
                self.value(t) * (-2.0 * r / (h * q * q))
            }
            EnvelopeKind::Const => 0.0,
        }
    }
}

fn gauss_parts(s: f64, h: f64) -> (f64, f64, f64) {
    let sigma = h / 3.0;
    let g = (-s * s / (2.0 * sigma * sigma)).exp();
    let gh = (-h * h / (2.0 * sigma * sigma)).exp();
    (g, gh, sigma)
}

/// Temporal profile of one field term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", content = "envelope", rename_all = "lowercase")]
pub enum Profile {
    Level(Envelope),
    /// Time derivative of the envelope.
    Rate(Envelope),
}

impl Profile {
    pub fn envelope(&self) -> Envelope {
        match self {
            Profile::Level(e) | Profile::Rate(e) => *e,
        }
    }

    pub fn value(&self, t: f64) -> f64 {
        match self {
            Profile::Level(e) => e.value(t),
            Profile::Rate(e) => e.derivative(t),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Profile::Level(e) => e.derivative(t),
            Profile::Rate(e) => {
                let h = 1e-5 * (e.t_off - e.t_on);
                (e.derivative(t + h) - e.derivative(t - h)) / (2.0 * h)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Component {
    A0,
    A1,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldTerm {
    pub component: Component,
    /// Spatial profile, `x ↦ Σ_j c_j e^{2πijx/L}`.
    pub spatial: FourierFunction,
    pub profile: Profile,
}

/// `A_μ(x, t) = Σ profile(t)·spatial(x)` over the terms with component `μ`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FieldConfig {
    terms: Vec<FieldTerm>,
}

impl FieldConfig {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn pulse(component: Component, spatial: FourierFunction, envelope: Envelope) -> Result<Self> {
        Self::zero().with_term(FieldTerm { component, spatial, profile: Profile::Level(envelope) })
    }

    pub fn with_term(mut self, term: FieldTerm) -> Result<Self> {
        if !term.spatial.is_real_valued() {
            return Err(Error::Input("field profiles must be real-valued".into()));
        }
        term.profile.envelope().validate()?;
        self.terms.push(term);
        Ok(self)
    }

    pub fn plus(&self, other: &Self) -> Self {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self { terms }
    }

    pub fn terms(&self) -> &[FieldTerm] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.iter().all(|t| t.spatial.coeffs().iter().all(|z| *z == ZERO))
    }

    pub fn band(&self) -> usize {
        self.terms.iter().map(|t| t.spatial.band()).max().unwrap_or(0)
    }

    /// Hull of the temporal supports.
    pub fn support(&self) -> Option<(f64, f64)> {
        self.terms.iter().map(|t| t.profile.envelope()).fold(None, |acc, e| match acc {
            None => Some((e.t_on, e.t_off)),
            Some((a, b)) => Some((a.min(e.t_on), b.max(e.t_off))),
        })
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut v: Vec<f64> =
            self.terms.iter().flat_map(|t| [t.profile.envelope().t_on, t.profile.envelope().t_off]).collect();
        v.sort_by(f64::total_cmp);
        v.dedup();
        v
    }

    /// The field with every term frozen at its value at `t`.
    fn spatial_at(&self, t: f64, component: Component) -> Vec<(f64, &FourierFunction)> {
        self.terms
            .iter()
            .filter(|term| term.component == component)
            .map(|term| (term.profile.value(t), &term.spatial))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentFile {
    pub fourier: FourierFile,
    pub envelope: Envelope,
}

/// Model plus field as read from a TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub mass: f64,
    #[serde(rename = "box")]
    pub box_len: f64,
    pub cutoff: usize,
    #[serde(default = "unit_charge")]
    pub e: f64,
    #[serde(rename = "A0", default, skip_serializing_if = "Option::is_none")]
    pub a0: Option<ComponentFile>,
    #[serde(rename = "A1", default, skip_serializing_if = "Option::is_none")]
    pub a1: Option<ComponentFile>,
}

fn unit_charge() -> f64 {
    1.0
}

impl ConfigFile {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::Input(format!("config: {e}")))
    }

    pub fn read(path: impl AsRef<std::path::Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn build(&self) -> Result<(LatticeModel, FieldConfig)> {
        let model = LatticeModel::new(self.mass, self.box_len, self.cutoff, self.e)?;
        let mut field = FieldConfig::zero();
        for (component, part) in [(Component::A0, &self.a0), (Component::A1, &self.a1)] {
            if let Some(part) = part {
                let spatial = FourierFunction::from_file(&part.fourier)?;
                let spatial = FourierFunction::new(spatial.coeffs().to_vec(), true)?;
                part.envelope.validate()?;
                field = field.with_term(FieldTerm { component, spatial, profile: Profile::Level(part.envelope) })?;
            }
        }
        check_band(&model, &field)?;
        Ok((model, field))
    }
}

fn check_band(model: &LatticeModel, field: &FieldConfig) -> Result<()> {
    if field.band() > 2 * model.cutoff {
        return Err(Error::Input(format!("field band {} exceeds 2N = {}", field.band(), 2 * model.cutoff)));
    }
    Ok(())
}

/// `g_{k−l}` with exact conjugate symmetry for real profiles.
fn conv_coeff(g: &FourierFunction, k: i64, l: i64) -> Complex64 {
    if k >= l || !g.is_real_valued() {
        g.coeff(k - l)
    } else {
        g.coeff(l - k).conj()
    }
}

fn spin_factor(model: &LatticeModel, component: Component, k: i64, pk: bool, l: i64, pl: bool) -> f64 {
    let u = model.spinor(k, pk);
    let v = model.spinor(l, pl);
    match component {
        Component::A0 => u[0] * v[0] + u[1] * v[1],
        Component::A1 => u[0] * v[1] + u[1] * v[0],
    }
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    row: usize,
    col: usize,
    v: Complex64,
}

/// Energy-basis entries of `spatial ⊗ 1` (A₀) or `spatial ⊗ α` (A₁), times `scale`.
fn lift_entries(model: &LatticeModel, component: Component, spatial: &FourierFunction, scale: f64) -> Vec<Entry> {
    let n = model.cutoff as i64;
    let band = spatial.band() as i64;
    let mut out = Vec::new();
    for k in -n..=n {
        for l in (k - band).max(-n)..=(k + band).min(n) {
            let g = conv_coeff(spatial, k, l);
            if g == ZERO {
                continue;
            }
            for pk in [false, true] {
                for pl in [false, true] {
                    let s = spin_factor(model, component, k, pk, l, pl);
                    if s == 0.0 {
                        continue;
                    }
                    out.push(Entry {
                        row: model.index(k, pk).expect("in range"),
                        col: model.index(l, pl).expect("in range"),
                        v: g * (scale * s),
                    });
                }
            }
        }
    }
    out
}

/// Precomputed sparse potential, one entry list per field term.
struct Interaction {
    dim: usize,
    energies: Vec<f64>,
    terms: Vec<(Profile, Vec<Entry>)>,
    breakpoints: Vec<f64>,
    omega_max: f64,
}

impl Interaction {
    fn new(model: &LatticeModel, field: &FieldConfig) -> Result<Self> {
        check_band(model, field)?;
        let energies = model.energies();
        let terms: Vec<(Profile, Vec<Entry>)> = field
            .terms
            .iter()
            .map(|t| (t.profile, lift_entries(model, t.component, &t.spatial, model.charge)))
            .filter(|(_, e)| !e.is_empty())
            .collect();
        let omega_max = terms
            .iter()
            .flat_map(|(_, es)| es.iter())
            .map(|e| (energies[e.row] - energies[e.col]).abs())
            .fold(0.0, f64::max);
        Ok(Self { dim: model.dim(), energies, terms, breakpoints: field.breakpoints(), omega_max })
    }

    /// Maximal subintervals of `[t0, t1]` on which some term is switched on.
    fn active_segments(&self, t0: f64, t1: f64) -> Vec<(f64, f64)> {
        let mut cuts = vec![t0];
        cuts.extend(self.breakpoints.iter().copied().filter(|&b| b > t0 && b < t1));
        cuts.push(t1);
        cuts.windows(2)
            .filter(|w| w[1] > w[0])
            .filter(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                self.terms.iter().any(|(p, _)| {
                    let e = p.envelope();
                    mid > e.t_on && mid < e.t_off
                })
            })
            .map(|w| (w[0], w[1]))
            .collect()
    }

    fn phases(&self, t: f64) -> Vec<Complex64> {
        self.energies.iter().map(|&e| Complex64::from_polar(1.0, e * t)).collect()
    }

    /// `out += scale · H_I(t) x`, `x` row-major with `ncols` columns.
    fn apply(&self, t: f64, scale: Complex64, x: &[Complex64], ncols: usize, out: &mut [Complex64]) {
        let ph = self.phases(t);
        for (profile, entries) in &self.terms {
            let f = profile.value(t);
            if f == 0.0 {
                continue;
            }
            for e in entries {
                let w = scale * e.v * f * ph[e.row] * ph[e.col].conj();
                let src = &x[e.col * ncols..(e.col + 1) * ncols];
                let dst = &mut out[e.row * ncols..(e.row + 1) * ncols];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += w * s;
                }
            }
        }
    }

    /// Schrödinger-picture `V(t)` as a dense matrix.
    fn dense(&self, t: f64) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for (profile, entries) in &self.terms {
            let f = profile.value(t);
            if f != 0.0 {
                for e in entries {
                    m[(e.row, e.col)] += e.v * f;
                }
            }
        }
        m
    }

    fn odd_hs(&self, t: f64) -> f64 {
        let v = self.dense(t);
        let mut s = 0.0;
        for r in 0..self.dim {
            for c in 0..self.dim {
                if (self.energies[r] > 0.0) != (self.energies[c] > 0.0) {
                    s += v[(r, c)].norm_sqr();
                }
            }
        }
        2.0 * s.sqrt()
    }

    /// Sparse `Q(t)` (interaction picture when `interaction` is set).
    fn q(&self, t: f64, interaction: bool, derivative: bool) -> SparseQ {
        let ph = self.phases(t);
        let mut entries = Vec::new();
        for (profile, es) in &self.terms {
            let f = if derivative { profile.derivative(t) } else { profile.value(t) };
            if f == 0.0 {
                continue;
            }
            for e in es {
                let (er, ec) = (self.energies[e.row], self.energies[e.col]);
                if (er > 0.0) == (ec > 0.0) {
                    continue;
                }
                let mut v = e.v * (f * -er.signum() / (er.abs() + ec.abs()));
                if interaction {
                    v *= ph[e.row] * ph[e.col].conj();
                }
                entries.push(Entry { row: e.row, col: e.col, v });
            }
        }
        SparseQ { dim: self.dim, entries }
    }
}

/// Skew-adjoint sparse generator.
struct SparseQ {
    dim: usize,
    entries: Vec<Entry>,
}

impl SparseQ {
    fn dense(&self) -> CMat {
        let mut m = CMat::zeros(self.dim, self.dim);
        for e in &self.entries {
            m[(e.row, e.col)] += e.v;
        }
        m
    }

    fn mul(&self, m: &CMat, scale: f64) -> CMat {
        let d = self.dim;
        let mut out = CMat::zeros(d, m.ncols());
        for j in 0..m.ncols() {
            let src = m.column(j);
            let mut dst = out.column_mut(j);
            for e in &self.entries {
                dst[e.row] += e.v * scale * src[e.col];
            }
        }
        out
    }

    /// `exp(sQ)·M` by Taylor series.
    fn exp_left(&self, m: &CMat, s: f64) -> CMat {
        let mut sum = m.clone();
        let mut term = m.clone();
        for k in 1..400 {
            term = self.mul(&term, s / k as f64);
            sum += &term;
            if term.norm() <= 1e-17 * sum.norm().max(1e-300) {
                break;
            }
        }
        sum
    }

    /// `M·exp(sQ) = (exp(−sQ)M*)*` using `Q* = −Q`.
    fn exp_right(&self, m: &CMat, s: f64) -> CMat {
        self.exp_left(&m.adjoint(), -s).adjoint()
    }
}

/// `H(t) = D₀ + V(t)` in the free energy basis.
pub fn build_hamiltonian(model: &LatticeModel, field: &FieldConfig, t: f64) -> Result<PolarizedOperator> {
    let inter = Interaction::new(model, field)?;
    let mut h = inter.dense(t);
    for (i, e) in inter.energies.iter().enumerate() {
        h[(i, i)] += c64(*e, 0.0);
    }
    PolarizedOperator::new(model.window(), h)
}

/// The same Hamiltonian assembled densely in the spinor basis and rotated, as an independent check.
pub fn build_hamiltonian_spinor(model: &LatticeModel, field: &FieldConfig, t: f64) -> Result<CMat> {
    check_band(model, field)?;
    let n = model.cutoff as i64;
    let d = model.dim();
    let mut h = CMat::zeros(d, d);
    for k in -n..=n {
        let r = 2 * (k + n) as usize;
        let p = model.momentum(k);
        h[(r, r)] += c64(model.mass, 0.0);
        h[(r + 1, r + 1)] += c64(-model.mass, 0.0);
        h[(r, r + 1)] += c64(p, 0.0);
        h[(r + 1, r)] += c64(p, 0.0);
    }
    for component in [Component::A0, Component::A1] {
        for (f, g) in field.spatial_at(t, component) {
            for k in -n..=n {
                for l in -n..=n {
                    let a = g.coeff(k - l) * (model.charge * f);
                    let (r, c) = (2 * (k + n) as usize, 2 * (l + n) as usize);
                    match component {
                        Component::A0 => {
                            h[(r, c)] += a;
                            h[(r + 1, c + 1)] += a;
                        }
                        Component::A1 => {
                            h[(r, c + 1)] += a;
                            h[(r + 1, c)] += a;
                        }
                    }
                }
            }
        }
    }
    let b = model.basis_change();
    Ok(b.adjoint() * h * b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Dyson,
    Ode,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvolveOptions {
    /// Absolute and relative tolerance of the adaptive integrator.
    pub tol: f64,
    pub max_steps: usize,
    pub max_terms: usize,
}

impl Default for EvolveOptions {
    fn default() -> Self {
        Self { tol: 1e-10, max_steps: 2_000_000, max_terms: 400 }
    }
}

/// Norms of the `n`-th Dyson term at the final time against the a-priori bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DysonTerm {
    pub n: usize,
    pub norm: f64,
    /// `(∫‖V‖)ⁿ/n!`.
    pub bound: f64,
    /// `‖[ε, U_n]‖₂`.
    pub hs_comm: f64,
    pub hs_bound: f64,
}

impl DysonTerm {
    pub fn holds(&self, slack: f64) -> bool {
        self.norm <= self.bound * (1.0 + slack) && self.hs_comm <= self.hs_bound * (1.0 + slack) + 1e-300
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct EvolutionReport {
    pub method: Method,
    pub t0: f64,
    pub t1: f64,
    #[serde(skip)]
    pub operator: PolarizedOperator,
    pub dyson_terms: Vec<DysonTerm>,
    /// `∫‖V‖`.
    pub v_integral: f64,
    /// `∫‖[ε, V]‖₂`.
    pub eps_v_integral: f64,
    pub steps: usize,
    pub rejected: usize,
    pub unitarity_defect: f64,
    /// Largest deviation of a column norm from one.
    pub norm_drift: f64,
    pub hs_pm: f64,
    pub hs_mp: f64,
}

impl EvolutionReport {
    fn finish(
        method: Method,
        t0: f64,
        t1: f64,
        operator: PolarizedOperator,
        dyson_terms: Vec<DysonTerm>,
        integrals: (f64, f64),
        steps: (usize, usize),
    ) -> Self {
        let m = operator.matrix();
        let norm_drift = (0..m.ncols()).map(|j| (m.column(j).norm() - 1.0).abs()).fold(0.0, f64::max);
        let ss = ss_defect(&operator);
        Self {
            method,
            t0,
            t1,
            unitarity_defect: operator.unitarity_defect(),
            operator,
            dyson_terms,
            v_integral: integrals.0,
            eps_v_integral: integrals.1,
            steps: steps.0,
            rejected: steps.1,
            norm_drift,
            hs_pm: ss.hs_pm,
            hs_mp: ss.hs_mp,
        }
    }

    pub fn bounds_hold(&self, slack: f64) -> bool {
        self.dyson_terms.iter().all(|t| t.holds(slack))
    }
}

/// Interaction-picture evolution `U_I(t₁, t₀)`.
pub fn evolve(
    model: &LatticeModel,
    field: &FieldConfig,
    t0: f64,
    t1: f64,
    method: Method,
    opts: &EvolveOptions,
) -> Result<EvolutionReport> {
    if !(t0.is_finite() && t1.is_finite() && t0 <= t1) {
        return Err(Error::Input(format!("need t0 <= t1, got {t0}, {t1}")));
    }
    let inter = Interaction::new(model, field)?;
    let d = model.dim();
    match method {
        Method::Ode => {
            let mut state = identity_state(d);
            let mut h = 0.0;
            let (steps, rejected) = integrate(&inter, t0, t1, &mut state, d, opts, &mut h)?;
            let op = PolarizedOperator::new(model.window(), state_to_mat(&state, d))?;
            Ok(EvolutionReport::finish(method, t0, t1, op, Vec::new(), (0.0, 0.0), (steps, rejected)))
        }
        Method::Dyson => dyson(model, &inter, t0, t1, opts),
    }
}

fn identity_state(d: usize) -> Vec<Complex64> {
    let mut s = vec![ZERO; d * d];
    for i in 0..d {
        s[i * d + i] = ONE;
    }
    s
}

fn state_to_mat(s: &[Complex64], d: usize) -> CMat {
    CMat::from_row_slice(d, d, s)
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrate `i∂ₜU = H_I U` over `[t0, t1]`, skipping field-free stretches.
/// `h` carries the step size between calls.
fn integrate(
    inter: &Interaction,
    t0: f64,
    t1: f64,
    state: &mut Vec<Complex64>,
    ncols: usize,
    opts: &EvolveOptions,
    h: &mut f64,
) -> Result<(usize, usize)> {
    let mut steps = 0;
    let mut rejected = 0;
    let len = state.len();
    let rhs = |t: f64, x: &[Complex64], out: &mut Vec<Complex64>| {
        out.iter_mut().for_each(|z| *z = ZERO);
        inter.apply(t, MINUS_I, x, ncols, out);
    };
    for (a, b) in inter.active_segments(t0, t1) {
        let mut t = a;
        if *h <= 0.0 || *h > b - a {
            *h = ((b - a) / 64.0).min(0.5 / inter.omega_max.max(1e-12));
        }
        let mut k: Vec<Vec<Complex64>> = vec![vec![ZERO; len]; 7];
        let mut tmp = vec![ZERO; len];
        rhs(t, state, &mut k[0]);
        while t < b {
            if steps + rejected >= opts.max_steps {
                return Err(Error::Convergence(format!("ode: step budget {} exhausted at t = {t}", opts.max_steps)));
            }
            let last = t + *h >= b - 1e-14 * (b - a);
            let step = if last { b - t } else { *h };
            for s in 1..7 {
                tmp.copy_from_slice(state);
                for (j, &a_sj) in DP_A[s][..s].iter().enumerate() {
                    if a_sj != 0.0 {
                        let f = step * a_sj;
                        for (x, y) in tmp.iter_mut().zip(&k[j]) {
                            *x += y * f;
                        }
                    }
                }
                let (head, tail) = k.split_at_mut(s);
                let _ = head;
                rhs(t + DP_C[s] * step, &tmp, &mut tail[0]);
            }
            // tmp now holds the fifth-order solution (stage 7 is evaluated there).
            let mut err = 0.0f64;
            for i in 0..len {
                let mut e = ZERO;
                for (s, &es) in DP_E.iter().enumerate() {
                    if es != 0.0 {
                        e += k[s][i] * es;
                    }
                }
                let sc = opts.tol * (1.0 + state[i].norm().max(tmp[i].norm()));
                err = err.max((e * step).norm() / sc);
            }
            if err <= 1.0 {
                t = if last { b } else { t + step };
                state.copy_from_slice(&tmp);
                k.swap(0, 6);
                steps += 1;
            } else {
                rejected += 1;
            }
            let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
            if !(last && err <= 1.0) {
                *h = step * factor;
            }
            if *h < 1e-14 * (b - a).max(1.0) {
                return Err(Error::Convergence(format!("ode: step size underflow at t = {t}")));
            }
        }
    }
    Ok((steps, rejected))
}

/// Chebyshev–Lobatto nodes on `[−1, 1]` and `S_ik = ∫_{−1}^{x_i} ℓ_k`.
fn lobatto_panel(p: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    let x: Vec<f64> = (0..p).map(|i| -(PI * i as f64 / (p - 1) as f64).cos()).collect();
    let v = DMatrix::<f64>::from_fn(p, p, |i, m| x[i].powi(m as i32));
    let b = DMatrix::<f64>::from_fn(p, p, |i, m| {
        let e = (m + 1) as i32;
        (x[i].powi(e) - (-1.0f64).powi(e)) / e as f64
    });
    let c = v.try_inverse().expect("Vandermonde on distinct nodes");
    let s = b * c;
    (x, (0..p).map(|i| (0..p).map(|k| s[(i, k)]).collect()).collect())
}

struct Panel {
    t: Vec<f64>,
    half: f64,
}

fn dyson(model: &LatticeModel, inter: &Interaction, t0: f64, t1: f64, opts: &EvolveOptions) -> Result<EvolutionReport> {
    let d = model.dim();
    let window = model.window();
    let (x, s) = lobatto_panel(PANEL_NODES);
    let mut panels = Vec::new();
    for (a, b) in inter.active_segments(t0, t1) {
        let count = ((b - a) * inter.omega_max).ceil().max(MIN_PANELS as f64) as usize;
        let w = (b - a) / count as f64;
        for j in 0..count {
            let lo = a + j as f64 * w;
            panels.push(Panel { t: x.iter().map(|xi| lo + 0.5 * w * (xi + 1.0)).collect(), half: 0.5 * w });
        }
    }
    // ∫‖V‖ and ∫‖[ε,V]‖₂ with the panel quadrature.
    let weights = &s[PANEL_NODES - 1];
    let mut iv = 0.0;
    let mut iev = 0.0;
    for p in &panels {
        for (k, &t) in p.t.iter().enumerate() {
            let v = inter.dense(t);
            iv += p.half * weights[k] * op_norm(&v);
            iev += p.half * weights[k] * inter.odd_hs(t);
        }
    }
    let eps = crate::linop::PolarizedOperator::epsilon(window);
    let mut total = CMat::identity(d, d);
    let mut terms = Vec::new();
    let mut prev: Vec<Vec<Vec<Complex64>>> =
        panels.iter().map(|p| vec![identity_state(d); p.t.len()]).collect();
    let mut fact = 1.0;
    let mut converged = iv == 0.0;
    for n in 1..=opts.max_terms {
        if converged {
            break;
        }
        fact *= n as f64;
        let mut acc = vec![ZERO; d * d];
        let mut next = Vec::with_capacity(panels.len());
        for (p, un) in panels.iter().zip(&prev) {
            let f: Vec<Vec<Complex64>> = p
                .t
                .iter()
                .zip(un)
                .map(|(&t, u)| {
                    let mut out = vec![ZERO; d * d];
                    inter.apply(t, MINUS_I, u, d, &mut out);
                    out
                })
                .collect();
            let mut vals = Vec::with_capacity(PANEL_NODES);
            for row in &s {
                let mut v = acc.clone();
                for (w, fk) in row.iter().zip(&f) {
                    let w = w * p.half;
                    if w != 0.0 {
                        for (a, b) in v.iter_mut().zip(fk) {
                            *a += b * w;
                        }
                    }
                }
                vals.push(v);
            }
            acc = vals[PANEL_NODES - 1].clone();
            next.push(vals);
        }
        let un = state_to_mat(&acc, d);
        let comm = eps.matrix() * &un - &un * eps.matrix();
        let bound = iv.powi(n as i32) / fact;
        let hs_bound = if n == 1 { iev } else { iev * iv.powi(n as i32 - 1) / factorial(n - 2) };
        terms.push(DysonTerm { n, norm: op_norm(&un), bound, hs_comm: comm.norm(), hs_bound });
        total += un;
        prev = next;
        converged = iv.powi(n as i32 + 1) / (fact * (n + 1) as f64) < DYSON_CUTOFF;
    }
    if !converged {
        return Err(Error::Convergence(format!(
            "dyson: bound still above {DYSON_CUTOFF:e} after {} terms (∫‖V‖ = {iv:.3})",
            opts.max_terms
        )));
    }
    let op = PolarizedOperator::new(window, total)?;
    let nodes = panels.len() * PANEL_NODES;
    Ok(EvolutionReport::finish(Method::Dyson, t0, t1, op, terms, (iv, iev), (nodes, 0)))
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

/// `U_I(t_j, times[0])` at every time, by continuing one ODE integration.
pub fn evolve_path(model: &LatticeModel, field: &FieldConfig, times: &[f64], opts: &EvolveOptions) -> Result<Vec<CMat>> {
    if times.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::Input("times must be nondecreasing".into()));
    }
    let inter = Interaction::new(model, field)?;
    let d = model.dim();
    let mut state = identity_state(d);
    let mut h = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for (i, &t) in times.iter().enumerate() {
        if i > 0 {
            integrate(&inter, times[i - 1], t, &mut state, d, opts, &mut h)?;
        }
        out.push(state_to_mat(&state, d));
    }
    Ok(out)
}

/// `Q` of the field frozen at time `t`: `Q₋₊ = V₋₊/(E+E')`, `Q₊₋ = −V₊₋/(E+E')`.
pub fn q_operator(model: &LatticeModel, field: &FieldConfig, t: f64) -> Result<PolarizedOperator> {
    let inter = Interaction::new(model, field)?;
    PolarizedOperator::new(model.window(), inter.q(t, false, false).dense())
}

/// `Q` conjugated into the interaction picture, `e^{iD₀t} Q(t) e^{−iD₀t}`.
pub fn q_operator_interaction(model: &LatticeModel, field: &FieldConfig, t: f64) -> Result<PolarizedOperator> {
    let inter = Interaction::new(model, field)?;
    PolarizedOperator::new(model.window(), inter.q(t, true, false).dense())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FirstOrderCheck {
    pub lhs_norm: f64,
    /// Relative residual with [`Q_IDENTITY_SIGN`].
    pub residual: f64,
    /// Relative residual with the opposite sign.
    pub residual_flipped: f64,
}

/// Both sides of the first-order identity for `Q`, by composite Lobatto quadrature.
pub fn first_order_identity(
    model: &LatticeModel,
    field: &FieldConfig,
    t0: f64,
    t1: f64,
    panels: usize,
) -> Result<FirstOrderCheck> {
    if !(t0 < t1) || panels == 0 {
        return Err(Error::Input("need t0 < t1 and at least one panel".into()));
    }
    let inter = Interaction::new(model, field)?;
    let d = model.dim();
    let eps = &inter.energies;
    let u0 = |a: f64, b: f64| CMat::from_diagonal(&nalgebra::DVector::from_iterator(d, eps.iter().map(|e| Complex64::from_polar(1.0, -e * (a - b)))));
    let (x, s) = lobatto_panel(PANEL_NODES);
    let w = &s[PANEL_NODES - 1];
    let width = (t1 - t0) / panels as f64;
    let mut lhs = CMat::zeros(d, d);
    let mut qdot_int = CMat::zeros(d, d);
    for j in 0..panels {
        let lo = t0 + j as f64 * width;
        for (xi, wi) in x.iter().zip(w) {
            let t = lo + 0.5 * width * (xi + 1.0);
            let weight = Complex64::from(0.5 * width * wi);
            let mut v = inter.dense(t);
            for r in 0..d {
                for c in 0..d {
                    if (eps[r] > 0.0) == (eps[c] > 0.0) {
                        v[(r, c)] = ZERO;
                    }
                }
            }
            let left = u0(t1, t);
            let right = u0(t, t0);
            lhs += (&left * v * &right) * weight;
            qdot_int += (&left * inter.q(t, false, true).dense() * &right) * weight;
        }
    }
    lhs *= c64(0.0, 1.0);
    let full = u0(t1, t0);
    let bracket = inter.q(t1, false, false).dense() * &full - &full * inter.q(t0, false, false).dense() - qdot_int;
    let scale = lhs.norm().max(1e-300);
    Ok(FirstOrderCheck {
        lhs_norm: lhs.norm(),
        residual: (&lhs - &bracket * Complex64::from(Q_IDENTITY_SIGN)).norm() / scale,
        residual_flipped: (&lhs + &bracket * Complex64::from(Q_IDENTITY_SIGN)).norm() / scale,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RenormalizedReport {
    pub raw: EvolutionReport,
    #[serde(skip)]
    pub renormalized: PolarizedOperator,
    pub raw_hs: f64,
    pub renormalized_hs: f64,
    pub unitarity_defect: f64,
}

/// `e^{−Q_I(t₁)} U_I(t₁,t₀) e^{Q_I(t₀)}`, the interaction-picture form of
/// `e^{−Q(t₁)} U(t₁,t₀) e^{Q(t₀)}`. Defects are `‖[ε, ·]‖₂`.
pub fn renormalized_evolution(
    model: &LatticeModel,
    field: &FieldConfig,
    t0: f64,
    t1: f64,
    opts: &EvolveOptions,
) -> Result<RenormalizedReport> {
    let raw = evolve(model, field, t0, t1, Method::Ode, opts)?;
    let inter = Interaction::new(model, field)?;
    let left = inter.q(t1, true, false).exp_left(raw.operator.matrix(), -1.0);
    let ren = inter.q(t0, true, false).exp_right(&left, 1.0);
    let renormalized = PolarizedOperator::new(model.window(), ren)?;
    Ok(RenormalizedReport {
        raw_hs: ss_defect(&raw.operator).hs_comm,
        renormalized_hs: ss_defect(&renormalized).hs_comm,
        unitarity_defect: renormalized.unitarity_defect(),
        raw,
        renormalized,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScanRow {
    pub cutoff: usize,
    pub raw_hs: f64,
    pub renormalized_hs: f64,
    /// `‖Q(t₁)‖₂`.
    pub q_hs: f64,
    pub unitarity_defect: f64,
}

/// HS defects of raw and renormalized evolutions across a cutoff ladder.
pub fn cutoff_scan(
    model: &LatticeModel,
    field: &FieldConfig,
    t0: f64,
    t1: f64,
    cutoffs: &[usize],
    opts: &EvolveOptions,
) -> Result<Vec<ScanRow>> {
    cutoffs.iter().map(|&n| scan_row(model, field, t0, t1, n, opts)).collect()
}

pub fn scan_row(
    model: &LatticeModel,
    field: &FieldConfig,
    t0: f64,
    t1: f64,
    cutoff: usize,
    opts: &EvolveOptions,
) -> Result<ScanRow> {
    let m = model.with_cutoff(cutoff)?;
    let r = renormalized_evolution(&m, field, t0, t1, opts)?;
    Ok(ScanRow {
        cutoff,
        raw_hs: r.raw_hs,
        renormalized_hs: r.renormalized_hs,
        q_hs: q_operator(&m, field, t1)?.matrix().norm(),
        unitarity_defect: r.raw.unitarity_defect,
    })
}

/// Relative spread `(max − min)/max` of the renormalized defects.
pub fn scan_variation(rows: &[ScanRow]) -> f64 {
    let vals: Vec<f64> = rows.iter().map(|r| r.renormalized_hs).collect();
    let hi = vals.iter().copied().fold(f64::MIN, f64::max);
    let lo = vals.iter().copied().fold(f64::MAX, f64::min);
    if hi <= 0.0 {
        0.0
    } else {
        (hi - lo) / hi
    }
}

/// Spatial convolution matrix of a profile on the `2N + 1` momenta.
fn convolution(model: &LatticeModel, g: &FourierFunction) -> CMat {
    let n = model.cutoff as i64;
    CMat::from_fn(model.momenta(), model.momenta(), |r, c| conv_coeff(g, r as i64 - n, c as i64 - n))
}

/// Gauge function `Λ(x, t) = envelope(t)·λ(x)` and the transformed field `A − ∂Λ`.
#[derive(Debug, Clone)]
pub struct GaugeTransform {
    model: LatticeModel,
    envelope: Envelope,
    field: FieldConfig,
    eig: SymmetricEigen<Complex64, nalgebra::Dyn>,
}

pub fn gauge_transform(
    model: &LatticeModel,
    field: &FieldConfig,
    lambda: &FourierFunction,
    envelope: Envelope,
) -> Result<GaugeTransform> {
    check_band(model, field)?;
    if !lambda.is_real_valued() {
        return Err(Error::Input("gauge function must be real-valued".into()));
    }
    if lambda.band() > 2 * model.cutoff {
        return Err(Error::Input(format!("gauge band {} exceeds 2N = {}", lambda.band(), 2 * model.cutoff)));
    }
    if envelope.kind == EnvelopeKind::Const {
        return Err(Error::Input("gauge envelope must be differentiable".into()));
    }
    let minus = |g: &FourierFunction| FourierFunction::new(g.coeffs().iter().map(|z| -z).collect(), true);
    let kx = 2.0 * PI / model.box_len;
    let band = lambda.band() as i64;
    let dx: Vec<Complex64> = (-band..=band).map(|j| -lambda.coeff(j) * c64(0.0, kx * j as f64)).collect();
    let transformed = field
        .clone()
        .with_term(FieldTerm { component: Component::A0, spatial: minus(lambda)?, profile: Profile::Rate(envelope) })?
        .with_term(FieldTerm { component: Component::A1, spatial: FourierFunction::new(dx, true)?, profile: Profile::Level(envelope) })?;
    let eig = SymmetricEigen::new(convolution(model, lambda));
    Ok(GaugeTransform { model: *model, envelope, field: transformed, eig })
}

impl GaugeTransform {
    pub fn field(&self) -> &FieldConfig {
        &self.field
    }

    /// `e^{ieΛ(t)}` in the free energy basis.
    pub fn operator(&self, t: f64) -> CMat {
        let theta = self.model.charge * self.envelope.value(t);
        let ph = nalgebra::DVector::from_iterator(
            self.eig.eigenvalues.len(),
            self.eig.eigenvalues.iter().map(|&l| Complex64::from_polar(1.0, theta * l)),
        );
        let w = &self.eig.eigenvectors;
        let g = w * CMat::from_diagonal(&ph) * w.adjoint();
        let d = self.model.dim();
        CMat::from_fn(d, d, |r, c| {
            let (k, pk) = self.model.mode(r);
            let (l, pl) = self.model.mode(c);
            let n = self.model.cutoff as i64;
            g[((k + n) as usize, (l + n) as usize)] * spin_factor(&self.model, Component::A0, k, pk, l, pl)
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeReport {
    /// `‖U^{A−∂Λ} − e^{iΛ(t₁)} U^A e^{−iΛ(t₀)}‖₂` on the interior modes.
    pub covariance_dev: f64,
    /// Same for the renormalized evolutions with `T̃(A−∂Λ) = e^{iΛ} T̃(A)`.
    pub renormalized_dev: f64,
    /// Full-window deviation, dominated by modes at the cutoff.
    pub full_window_dev: f64,
    pub interior_momentum: usize,
}

/// Compare the evolutions of `A` and `A − ∂Λ` on momenta `|k| ≤ N − margin`.
pub fn gauge_covariance(
    model: &LatticeModel,
    field: &FieldConfig,
    gauge: &GaugeTransform,
    t0: f64,
    t1: f64,
    margin: usize,
    opts: &EvolveOptions,
) -> Result<GaugeReport> {
    if margin > model.cutoff {
        return Err(Error::Input(format!("margin {margin} exceeds cutoff {}", model.cutoff)));
    }
    let d = model.dim();
    let schrodinger = |u: &CMat| -> CMat {
        let e = model.energies();
        CMat::from_fn(d, d, |r, c| u[(r, c)] * Complex64::from_polar(1.0, -e[r] * t1 + e[c] * t0))
    };
    let ua = schrodinger(evolve(model, field, t0, t1, Method::Ode, opts)?.operator.matrix());
    let ub = schrodinger(evolve(model, gauge.field(), t0, t1, Method::Ode, opts)?.operator.matrix());
    let (g1, g0) = (gauge.operator(t1), gauge.operator(t0));
    let predicted = &g1 * &ua * g0.adjoint();
    let inter = Interaction::new(model, field)?;
    let (q1, q0) = (inter.q(t1, false, false), inter.q(t0, false, false));
    let ren_a = q0.exp_right(&q1.exp_left(&ua, -1.0), 1.0);
    let ren_b = q0.exp_right(&q1.exp_left(&(g1.adjoint() * &ub * &g0), -1.0), 1.0);
    let keep = model.indices_within(model.cutoff - margin);
    let interior = |m: &CMat| -> f64 {
        keep.iter().flat_map(|&r| keep.iter().map(move |&c| (r, c))).map(|(r, c)| m[(r, c)].norm_sqr()).sum::<f64>().sqrt()
    };
    let diff = &ub - &predicted;
    Ok(GaugeReport {
        covariance_dev: interior(&diff),
        renormalized_dev: interior(&(ren_b - ren_a)),
        full_window_dev: diff.norm(),
        interior_momentum: model.cutoff - margin,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct FurryReport {
    #[serde(skip)]
    pub polarization: Polarization,
    pub negative_count: usize,
    pub min_abs_eigenvalue: f64,
    pub near_zero: bool,
    pub min_positive: f64,
    pub max_negative: f64,
    /// `‖P − P₋‖₂` against the free negative-energy space.
    pub hs_to_free: f64,
    /// `‖P − P_{e^Q H₋}‖₂`.
    pub hs_to_rotated: f64,
}

/// Negative spectral subspace of `H(t)`; eigenvalues within [`ZERO_EIGENVALUE_TOL`]
/// of zero go to the negative side and are flagged.
pub fn furry_projector(model: &LatticeModel, field: &FieldConfig, t: f64) -> Result<FurryReport> {
    let h = build_hamiltonian(model, field, t)?;
    let eig = SymmetricEigen::new(h.matrix().clone());
    let window = model.window();
    let vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let neg: Vec<usize> = (0..vals.len()).filter(|&i| vals[i] < ZERO_EIGENVALUE_TOL).collect();
    if neg.is_empty() || neg.len() == vals.len() {
        return Err(Error::Invariant("Hamiltonian spectrum is one-signed".into()));
    }
    let basis = CMat::from_fn(window.dim(), neg.len(), |r, c| eig.eigenvectors[(r, neg[c])]);
    let polarization = Polarization::new(window, basis)?;
    let min_abs = vals.iter().map(|v| v.abs()).fold(f64::MAX, f64::min);
    let inter = Interaction::new(model, field)?;
    let n = window.neg();
    let free = CMat::from_fn(window.dim(), n, |r, c| if r == c { ONE } else { ZERO });
    let rotated = Polarization::from_span(window, &inter.q(t, false, false).exp_left(&free, 1.0))?;
    Ok(FurryReport {
        negative_count: neg.len(),
        min_abs_eigenvalue: min_abs,
        near_zero: min_abs < ZERO_EIGENVALUE_TOL,
        min_positive: vals.iter().copied().filter(|&v| v >= ZERO_EIGENVALUE_TOL).fold(f64::MAX, f64::min),
        max_negative: vals.iter().copied().filter(|&v| v < ZERO_EIGENVALUE_TOL).fold(f64::MIN, f64::max),
        hs_to_free: hs_distance(&polarization, &Polarization::h_minus(window))?,
        hs_to_rotated: hs_distance(&polarization, &rotated)?,
        polarization,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PipelineOptions {
    /// Path samples per unit time.
    pub nodes_per_unit: usize,
    /// Time added before and after the support.
    pub pad: f64,
    /// Momenta `|k| ≤ fock_momenta` kept for the Fock implementation.
    pub fock_momenta: usize,
    pub evolve: EvolveOptions,
    pub transport: TransportOptions,
}

impl Default for PipelineOptions {
    fn default() -> Self {
        Self {
            nodes_per_unit: 256,
            pad: 0.25,
            fock_momenta: 1,
            evolve: EvolveOptions::default(),
            transport: TransportOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FockSummary {
    pub neg: usize,
    pub pos: usize,
    /// `‖C − polar(C)‖` for the compression `C` of `S`.
    pub compression_defect: f64,
    pub vacuum_persistence: f64,
    pub particles: usize,
    pub holes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct PipelineReport {
    pub t0: f64,
    pub t1: f64,
    #[serde(skip)]
    pub s: PolarizedOperator,
    pub s_unitarity: f64,
    pub s_hs_comm: f64,
    pub phase: Complex64,
    pub lift: Complex64,
    pub path_nodes: usize,
    pub fock: FockSummary,
}

fn even_intervals(len: f64, per_unit: usize) -> usize {
    let n = (len * per_unit as f64).ceil().max(8.0) as usize;
    n + n % 2
}

/// Renormalized path `t ↦ e^{−Q_I(t)} U_I(t, t₀) e^{Q_I(t₀)}` sampled at `times`.
pub fn renormalized_path(
    model: &LatticeModel,
    field: &FieldConfig,
    times: &[f64],
    opts: &EvolveOptions,
) -> Result<SampledPath> {
    let inter = Interaction::new(model, field)?;
    let us = evolve_path(model, field, times, opts)?;
    let q0 = inter.q(times[0], true, false);
    let ops = times
        .iter()
        .zip(us)
        .map(|(&t, u)| {
            let m = q0.exp_right(&inter.q(t, true, false).exp_left(&u, -1.0), 1.0);
            PolarizedOperator::new(model.window(), m)
        })
        .collect::<Result<Vec<_>>>()?;
    SampledPath::new(times.to_vec(), ops)
}

fn uniform_times(t0: f64, t1: f64, intervals: usize) -> Vec<f64> {
    (0..=intervals).map(|i| t0 + (t1 - t0) * i as f64 / intervals as f64).collect()
}

fn nearest_unitary(m: &CMat) -> CMat {
    let svd = crate::linop::svd(m);
    svd.u * svd.v_t
}

/// `S = U_I(T₁, T₀)` beyond the support, its Fock implementation on the
/// modes `|k| ≤ K`, and its phase transported along the renormalized path.
pub fn scattering_pipeline(model: &LatticeModel, field: &FieldConfig, opts: &PipelineOptions) -> Result<PipelineReport> {
    check_band(model, field)?;
    let (t0, t1) = match field.support() {
        Some((a, b)) => (a - opts.pad, b + opts.pad),
        None => (0.0, 1.0),
    };
    let times = uniform_times(t0, t1, even_intervals(t1 - t0, opts.nodes_per_unit));
    let path = renormalized_path(model, field, &times, &opts.evolve)?;
    let tr = parallel_transport(&path, &opts.transport)?;
    let s = path.ops().last().expect("nonempty").clone();

    let keep = model.indices_within(opts.fock_momenta);
    let half = keep.len() / 2;
    let window = ModeWindow::new(half, half)?;
    let c = CMat::from_fn(keep.len(), keep.len(), |r, col| s.matrix()[(keep[r], keep[col])]);
    let u = nearest_unitary(&c);
    let compression_defect = op_norm(&(&c - &u));
    let imp = bogoliubov_implement(&PolarizedOperator::new(window, u)?, ONE)?;
    let vac = crate::fock::FockVector::vacuum(window);
    let fock = FockSummary {
        neg: half,
        pos: half,
        compression_defect,
        vacuum_persistence: vac.inner(&imp.vacuum.vector).norm(),
        particles: imp.vacuum.l,
        holes: imp.vacuum.m,
    };
    Ok(PipelineReport {
        t0,
        t1,
        s_unitarity: s.unitarity_defect(),
        s_hs_comm: ss_defect(&s).hs_comm,
        s,
        phase: tr.phase,
        lift: tr.lift,
        path_nodes: times.len(),
        fock,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CausalReport {
    pub phase_total: Complex64,
    pub phase_first: Complex64,
    pub phase_second: Complex64,
    pub deviation: f64,
    pub junction: f64,
}

/// `phase(S[A₁ + A₂])` against `phase(S[A₂])·phase(S[A₁])` for `A₁` entirely before `A₂`.
pub fn causal_split(
    model: &LatticeModel,
    first: &FieldConfig,
    second: &FieldConfig,
    opts: &PipelineOptions,
) -> Result<CausalReport> {
    let (a0, a1) = first.support().ok_or_else(|| Error::Input("first field is zero".into()))?;
    let (b0, b1) = second.support().ok_or_else(|| Error::Input("second field is zero".into()))?;
    if a1 >= b0 {
        return Err(Error::Input(format!("supports overlap: first ends at {a1}, second starts at {b0}")));
    }
    let junction = 0.5 * (a1 + b0);
    let h = 1.0 / opts.nodes_per_unit as f64;
    let n1 = even_intervals(junction - a0 + opts.pad, opts.nodes_per_unit);
    let n2 = even_intervals(b1 + opts.pad - junction, opts.nodes_per_unit);
    let t0 = junction - n1 as f64 * h;
    let t1 = junction + n2 as f64 * h;
    let grid1 = uniform_times(t0, junction, n1);
    let grid2 = uniform_times(junction, t1, n2);
    let mut grid = grid1.clone();
    grid.extend_from_slice(&grid2[1..]);
    let total = renormalized_path(model, &first.plus(second), &grid, &opts.evolve)?;
    let p1 = renormalized_path(model, first, &grid1, &opts.evolve)?;
    let p2 = renormalized_path(model, second, &grid2, &opts.evolve)?;
    let phase_total = parallel_transport(&total, &opts.transport)?.phase;
    let phase_first = parallel_transport(&p1, &opts.transport)?.phase;
    let phase_second = parallel_transport(&p2, &opts.transport)?.phase;
    Ok(CausalReport {
        phase_total,
        phase_first,
        phase_second,
        deviation: (phase_total - phase_second * phase_first).norm(),
        junction,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DetourReport {
    pub plain: Complex64,
    pub detoured: Complex64,
    /// `detoured / plain`.
    pub ratio: Complex64,
    /// Transported phase of the detour loop alone.
    pub predicted: Complex64,
    pub err: f64,
}

/// Renormalize with `e^{Q}` composed with the holonomy loop of parameter `delta`
/// (run on the modes `e₋₁, e₀` of the window before the pulse) and compare.
pub fn detour_check(
    model: &LatticeModel,
    field: &FieldConfig,
    delta: f64,
    loop_nodes: usize,
    opts: &PipelineOptions,
) -> Result<DetourReport> {
    let (a, b) = field.support().ok_or_else(|| Error::Input("field is zero".into()))?;
    let (t0, t1) = (a - opts.pad, b + opts.pad);
    let times = uniform_times(t0, t1, even_intervals(t1 - t0, opts.nodes_per_unit));
    let plain_path = renormalized_path(model, field, &times, &opts.evolve)?;
    let plain = parallel_transport(&plain_path, &opts.transport)?.phase;

    let detour = holonomy_path(delta, loop_nodes)?;
    let d = model.dim();
    let n = model.window().neg();
    let mut all_times = Vec::new();
    let mut ops = Vec::new();
    for (s, g) in detour.times().iter().zip(detour.ops()) {
        let mut m = CMat::identity(d, d);
        for r in 0..2 {
            for c in 0..2 {
                m[(n - 1 + r, n - 1 + c)] = g.matrix()[(r, c)];
            }
        }
        all_times.push(t0 - 1.0 + s);
        ops.push(PolarizedOperator::new(model.window(), m)?);
    }
    all_times.pop();
    ops.pop();
    all_times.extend_from_slice(plain_path.times());
    ops.extend(plain_path.ops().iter().cloned());
    let detoured = parallel_transport(&SampledPath::new(all_times, ops)?, &opts.transport)?.phase;
    let predicted = holonomy_loop(delta, loop_nodes)?.phase;
    let ratio = detoured / plain;
    Ok(DetourReport { plain, detoured, ratio, predicted, err: (ratio - predicted).norm() })
}

/// Random real field: an `A₀` and an `A₁` term of band `band` with
/// coefficients of size up to `amplitude` and envelopes inside `[0, 2]`.
pub fn random_field<R: rand::Rng + ?Sized>(band: usize, amplitude: f64, rng: &mut R) -> Result<FieldConfig> {
    let mut field = FieldConfig::zero();
    for component in [Component::A0, Component::A1] {
        let mut coeffs = vec![ZERO; 2 * band + 1];
        for j in 0..=band {
            let z = if j == 0 {
                c64(rng.random_range(-1.0..1.0), 0.0)
            } else {
                c64(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)) * 0.5
            };
            coeffs[band + j] = z * amplitude;
            coeffs[band - j] = z.conj() * amplitude;
        }
        let kind = if rng.random_bool(0.5) { EnvelopeKind::Gaussian } else { EnvelopeKind::Bump };
        let t_on = rng.random_range(0.0..0.6);
        let t_off = rng.random_range(1.2..2.0);
        field = field.with_term(FieldTerm {
            component,
            spatial: FourierFunction::new(coeffs, true)?,
            profile: Profile::Level(Envelope::new(kind, t_on, t_off)?),
        })?;
    }
    Ok(field)
}

/// `‖V(t)‖`.
pub fn potential_norm(model: &LatticeModel, field: &FieldConfig, t: f64) -> Result<f64> {
    let inter = Interaction::new(model, field)?;
    Ok(singular_values(&inter.dense(t)).first().copied().unwrap_or(0.0))
}
