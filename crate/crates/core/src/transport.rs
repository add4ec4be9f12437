//! Parallel transport of implementer phases along operator paths.
//!
//! Transport is computed in the τ-trivialization, where the horizontal lift
//! of `g(t)` starting at the identity is `[(g(t), q(t))]` with
//! `d log det q = tr[ȧα + ḃγ] dt`. The reported phase is `det q(T)`; the
//! factor `det[a⁻¹(T)q(T)]` is kept alongside as `lift`.

use serde::{Deserialize, Serialize};

use crate::linop::{op_norm, singular_values, ModeWindow, OperatorFile, PolarizedOperator, RANK_RTOL};
use crate::{CMat, Complex64, Error, Result};

/// Which invariant form of the connection is used.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    #[default]
    Right,
    Left,
}

/// `Θ(ġ, q̇) = −tr[ȧα + ḃγ − q̇q⁻¹]` (right) or `−tr[αȧ + βċ − q⁻¹q̇]` (left),
/// with `α, β, γ` the blocks of `g⁻¹`.
pub fn connection_eval(
    g: &PolarizedOperator,
    gdot: &PolarizedOperator,
    q: &CMat,
    qdot: &CMat,
    variant: Variant,
) -> Result<Complex64> {
    let w = g.window();
    if gdot.window() != w {
        return Err(Error::WindowMismatch("g and its derivative".into()));
    }
    let p = w.pos();
    if q.shape() != (p, p) || qdot.shape() != (p, p) {
        return Err(Error::Input(format!("q must be {p}x{p}")));
    }
    check_tau_domain(g).map_err(|e| match e {
        Error::OutsideDomain(m) => Error::Singular(m),
        other => other,
    })?;
    let ginv = g.inverse()?;
    let qinv = q.clone().try_inverse().ok_or_else(|| Error::Singular("q is not invertible".into()))?;
    let val = match variant {
        Variant::Right => (gdot.pp() * ginv.pp() + gdot.pm() * ginv.mp()).trace() - (qdot * &qinv).trace(),
        Variant::Left => (ginv.pp() * gdot.pp() + ginv.pm() * gdot.mp()).trace() - (&qinv * qdot).trace(),
    };
    Ok(-val)
}

fn check_tau_domain(g: &PolarizedOperator) -> Result<()> {
    let s = singular_values(&g.pp());
    let smin = s.last().copied().unwrap_or(0.0);
    if smin <= RANK_RTOL * op_norm(g.matrix()).max(1.0) {
        return Err(Error::OutsideDomain(format!("a is singular (σ_min = {smin:.3e})")));
    }
    Ok(())
}

/// Largest operator-norm jump allowed between consecutive samples.
pub const DEFAULT_MAX_STEP: f64 = 0.25;

/// Operator samples `g(t_i)` on a strictly increasing grid.
#[derive(Debug, Clone)]
pub struct SampledPath {
    times: Vec<f64>,
    ops: Vec<PolarizedOperator>,
}

impl SampledPath {
    pub fn new(times: Vec<f64>, ops: Vec<PolarizedOperator>) -> Result<Self> {
        if times.len() != ops.len() {
            return Err(Error::Input(format!("{} times but {} operators", times.len(), ops.len())));
        }
        if times.len() < 2 {
            return Err(Error::Input("a path needs at least two samples".into()));
        }
        if times.iter().any(|t| !t.is_finite()) || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Input("times must be finite and strictly increasing".into()));
        }
        let window = ops[0].window();
        if ops.iter().any(|o| o.window() != window) {
            return Err(Error::WindowMismatch("path samples live on different windows".into()));
        }
        Ok(Self { times, ops })
    }

    /// Samples `f(t_i)` on the given grid.
    pub fn from_fn(times: Vec<f64>, mut f: impl FnMut(f64) -> PolarizedOperator) -> Result<Self> {
        let ops = times.iter().map(|&t| f(t)).collect();
        Self::new(times, ops)
    }

    pub fn uniform(t0: f64, t1: f64, intervals: usize, f: impl FnMut(f64) -> PolarizedOperator) -> Result<Self> {
        if intervals == 0 {
            return Err(Error::Input("need at least one interval".into()));
        }
        let times = (0..=intervals).map(|i| t0 + (t1 - t0) * i as f64 / intervals as f64).collect();
        Self::from_fn(times, f)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn ops(&self) -> &[PolarizedOperator] {
        &self.ops
    }

    pub fn window(&self) -> ModeWindow {
        self.ops[0].window()
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Largest `‖g_{i+1} − g_i‖` over the grid.
    pub fn max_step_norm(&self) -> f64 {
        self.ops
            .windows(2)
            .map(|w| op_norm(&(w[1].matrix() - w[0].matrix())))
            .fold(0.0, f64::max)
    }

    /// Nodes `i..=j`, right-translated so the first one is the identity.
    pub fn right_translated(&self, i: usize, j: usize) -> Result<Self> {
        if i >= j || j >= self.len() {
            return Err(Error::Input(format!("invalid node range {i}..={j}")));
        }
        let base = self.ops[i].inverse()?;
        let ops = self.ops[i..=j].iter().map(|g| g.mul(&base)).collect::<Result<Vec<_>>>()?;
        Self::new(self.times[i..=j].to_vec(), ops)
    }

    /// Same operators on a new time grid.
    pub fn retimed(&self, times: Vec<f64>) -> Result<Self> {
        Self::new(times, self.ops.clone())
    }

    pub fn to_file(&self) -> Vec<PathNode> {
        self.times.iter().zip(&self.ops).map(|(&t, g)| PathNode { t, operator: g.to_file() }).collect()
    }

    pub fn from_file(nodes: &[PathNode]) -> Result<Self> {
        let times = nodes.iter().map(|n| n.t).collect();
        let ops = nodes.iter().map(|n| PolarizedOperator::from_file(&n.operator)).collect::<Result<Vec<_>>>()?;
        Self::new(times, ops)
    }
}

/// One sample of a path file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathNode {
    pub t: f64,
    pub operator: OperatorFile,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransportOptions {
    pub variant: Variant,
    pub richardson: bool,
    pub max_step: f64,
}

impl Default for TransportOptions {
    fn default() -> Self {
        Self { variant: Variant::Right, richardson: true, max_step: DEFAULT_MAX_STEP }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TransportResult {
    /// `det q(T)`.
    pub phase: Complex64,
    /// `det[a⁻¹(T) q(T)]`.
    pub lift: Complex64,
    /// `exp` of the trapezoid pieces of the log-integrand on the fine grid.
    pub contributions: Vec<Complex64>,
    pub order: usize,
    pub steps: usize,
}

/// Derivative by Lagrange stencils of up to five nodes on a possibly
/// nonuniform grid: centred inside, shifted at the ends.
fn derivatives(times: &[f64], mats: &[CMat]) -> Vec<CMat> {
    let n = times.len();
    let m = n.min(5);
    (0..n)
        .map(|i| {
            let lo = i.saturating_sub(m / 2).min(n - m);
            let nodes: Vec<usize> = (lo..lo + m).collect();
            let t = times[i];
            let mut acc = CMat::zeros(mats[0].nrows(), mats[0].ncols());
            for &j in &nodes {
                let denom: f64 = nodes.iter().filter(|&&l| l != j).map(|&l| times[j] - times[l]).product();
                let numer: f64 = nodes
                    .iter()
                    .filter(|&&k| k != j)
                    .map(|&k| nodes.iter().filter(|&&l| l != j && l != k).map(|&l| t - times[l]).product::<f64>())
                    .sum();
                acc += &mats[j] * Complex64::from(numer / denom);
            }
            acc
        })
        .collect()
}

/// Log-integrand `tr[ȧ(α − a⁻¹) + ḃγ]` (right) or `tr[(α − a⁻¹)ȧ + βċ]` (left) at every node.
fn integrand(times: &[f64], ops: &[PolarizedOperator], variant: Variant) -> Result<Vec<Complex64>> {
    let mats: Vec<CMat> = ops.iter().map(|g| g.matrix().clone()).collect();
    let dots = derivatives(times, &mats);
    let w = ops[0].window();
    let mut out = Vec::with_capacity(ops.len());
    for (i, (g, gdot)) in ops.iter().zip(dots).enumerate() {
        check_tau_domain(g).map_err(|e| match e {
            Error::OutsideDomain(m) => Error::OutsideDomain(format!("{m} at t = {}", times[i])),
            other => other,
        })?;
        let gdot = PolarizedOperator::new(w, gdot)?;
        let ginv = g.inverse()?;
        let ainv = g
            .pp()
            .try_inverse()
            .ok_or_else(|| Error::OutsideDomain(format!("a is singular at t = {}", times[i])))?;
        let shifted = ginv.pp() - ainv;
        let v = match variant {
            Variant::Right => (gdot.pp() * shifted).trace() + (gdot.pm() * ginv.mp()).trace(),
            Variant::Left => (shifted * gdot.pp()).trace() + (ginv.pm() * gdot.mp()).trace(),
        };
        out.push(v);
    }
    Ok(out)
}

fn trapezoid(times: &[f64], f: &[Complex64]) -> (Complex64, Vec<Complex64>) {
    let pieces: Vec<Complex64> =
        (0..times.len() - 1).map(|i| (f[i] + f[i + 1]) * (0.5 * (times[i + 1] - times[i]))).collect();
    (pieces.iter().sum(), pieces)
}

/// Transport along a path that starts at the identity.
pub fn parallel_transport(path: &SampledPath, opts: &TransportOptions) -> Result<TransportResult> {
    let id_gap = op_norm(&(path.ops[0].matrix() - CMat::identity(path.window().dim(), path.window().dim())));
    if id_gap > 1e-12 {
        return Err(Error::Input(format!("path must start at the identity (gap {id_gap:.3e})")));
    }
    let jump = path.max_step_norm();
    if jump > opts.max_step {
        return Err(Error::Input(format!(
            "insufficient sampling: consecutive samples differ by {jump:.3e} > {}",
            opts.max_step
        )));
    }
    let f = integrand(&path.times, &path.ops, opts.variant)?;
    let (fine, pieces) = trapezoid(&path.times, &f);
    let intervals = path.len() - 1;
    let (log, order) = if opts.richardson && intervals >= 4 && intervals % 2 == 0 {
        let times: Vec<f64> = path.times.iter().step_by(2).copied().collect();
        let ops: Vec<PolarizedOperator> = path.ops.iter().step_by(2).cloned().collect();
        let (coarse, _) = trapezoid(&times, &integrand(&times, &ops, opts.variant)?);
        ((fine * 4.0 - coarse) / 3.0, 4)
    } else {
        (fine, 2)
    };
    let lift = log.exp();
    let end = path.ops.last().expect("nonempty path");
    let phase = crate::linop::fredholm_det(&end.pp()) * lift;
    Ok(TransportResult { phase, lift, contributions: pieces.iter().map(|p| p.exp()).collect(), order, steps: intervals })
}

/// `|phase(t₂,t₀) − phase(t₂,t₁)·phase(t₁,t₀)|` for right-translated subpaths.
pub fn check_semigroup(path: &SampledPath, i0: usize, i1: usize, i2: usize, opts: &TransportOptions) -> Result<f64> {
    if !(i0 <= i1 && i1 <= i2 && i2 < path.len()) {
        return Err(Error::Input(format!("need i0 ≤ i1 ≤ i2 < {}", path.len())));
    }
    let phase = |i: usize, j: usize| -> Result<Complex64> {
        if i == j {
            Ok(Complex64::new(1.0, 0.0))
        } else {
            Ok(parallel_transport(&path.right_translated(i, j)?, opts)?.phase)
        }
    };
    Ok((phase(i0, i2)? - phase(i1, i2)? * phase(i0, i1)?).norm())
}

/// Concatenate two identity-based paths: the second is right-translated by
/// the end point of the first and shifted in time to follow it.
pub fn concatenate(first: &SampledPath, second: &SampledPath) -> Result<SampledPath> {
    let end = first.ops.last().expect("nonempty path");
    let t_end = *first.times.last().expect("nonempty path");
    let t_start = second.times[0];
    let mut times = first.times.clone();
    let mut ops = first.ops.clone();
    for (t, g) in second.times.iter().zip(&second.ops).skip(1) {
        times.push(t_end + (t - t_start));
        ops.push(g.mul(end)?);
    }
    SampledPath::new(times, ops)
}

#[derive(Debug, Clone, Serialize)]
pub struct Factorization {
    pub composite: Complex64,
    pub first: Complex64,
    pub second: Complex64,
    pub deviation: f64,
}

/// `|phase(composite) − phase(second)·phase(first)|`.
pub fn causal_factorization(first: &SampledPath, second: &SampledPath, opts: &TransportOptions) -> Result<Factorization> {
    let composite = parallel_transport(&concatenate(first, second)?, opts)?.phase;
    let a = parallel_transport(first, opts)?.phase;
    let b = parallel_transport(second, opts)?.phase;
    Ok(Factorization { composite, first: a, second: b, deviation: (composite - b * a).norm() })
}

/// `s²(3 − 2s)` ramps on `[0, ¼]` and `[¾, 1]`, one in between. Integral ¾.
fn bump(t: f64) -> f64 {
    let ramp = |s: f64| s * s * (3.0 - 2.0 * s);
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else if t < 0.25 {
        ramp(t / 0.25)
    } else if t > 0.75 {
        ramp((1.0 - t) / 0.25)
    } else {
        1.0
    }
}

/// Winding number of the holonomy loop: keeps the bump height at most ¾.
pub fn holonomy_winding(delta: f64) -> u32 {
    ((16.0 * delta / 9.0).ceil() as u32).max(1)
}

/// The loop `[[a, b], [−b, ā]]` on `span(e₀, e₋₁)`, with
/// `a = r e^{iφ}`, `b = √(1 − r²)`, `r² = 1 − ρ`, `φ(t) = −2πkt` and
/// `∫ρ = δ/k`. Its transport phase is `e^{2πiδ}`.
pub fn holonomy_path(delta: f64, nodes: usize) -> Result<SampledPath> {
    if !(0.0..1.0).contains(&delta) {
        return Err(Error::Input(format!("delta must lie in [0, 1), got {delta}")));
    }
    if nodes < 64 {
        return Err(Error::Input(format!("need at least 64 nodes, got {nodes}")));
    }
    let k = holonomy_winding(delta) as f64;
    let height = delta / k / 0.75;
    let window = ModeWindow::new(1, 1)?;
    SampledPath::uniform(0.0, 1.0, nodes, |t| {
        let rho = height * bump(t);
        let a = Complex64::from_polar((1.0 - rho).sqrt(), -2.0 * std::f64::consts::PI * k * t);
        let b = Complex64::from(rho.sqrt());
        // Index 0 is e₋₁, index 1 is e₀.
        let m = CMat::from_row_slice(2, 2, &[a.conj(), -b, b, a]);
        PolarizedOperator::new(window, m).expect("2x2 on a (1,1) window")
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct HolonomyResult {
    pub phase: Complex64,
    pub target: Complex64,
    pub err: f64,
    pub winding: u32,
}

pub fn holonomy_loop(delta: f64, nodes: usize) -> Result<HolonomyResult> {
    let path = holonomy_path(delta, nodes)?;
    let phase = parallel_transport(&path, &TransportOptions::default())?.phase;
    let target = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * delta);
    Ok(HolonomyResult { phase, target, err: (phase - target).norm(), winding: holonomy_winding(delta) })
}

/// Holonomy of the square `t: 0→h`, `s: 0→h`, `t: h→0`, `s: h→0` in the
/// coordinates `exp(sX + tY)`, each side transported separately. For small
/// `h` this approaches `exp(h²·c(X,Y))`.
pub fn square_holonomy(x: &PolarizedOperator, y: &PolarizedOperator, h: f64, nodes: usize) -> Result<Complex64> {
    let corners = [(0.0, 0.0), (0.0, h), (h, h), (h, 0.0), (0.0, 0.0)];
    let mut total = Complex64::new(1.0, 0.0);
    for side in corners.windows(2) {
        let ((s0, t0), (s1, t1)) = (side[0], side[1]);
        let at = |u: f64| x.scale(Complex64::from(s0 + (s1 - s0) * u)).add(&y.scale(Complex64::from(t0 + (t1 - t0) * u)));
        let start = at(0.0)?.exp().inverse()?;
        let path = SampledPath::uniform(0.0, 1.0, nodes, |u| at(u).expect("same window").exp().mul(&start).expect("same window"))?;
        total *= parallel_transport(&path, &TransportOptions::default())?.phase;
    }
    Ok(total)
}
