use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use resfock::central_ext::{cocycle_from_chi, schwinger_cocycle};
use resfock::dirac1d::{self, EvolveOptions, LatticeModel, Method, PipelineOptions};
use resfock::linop::{self, ModeWindow};
use resfock::loopgroup::{self, FourierFunction};
use resfock::transport::{self, SampledPath, TransportOptions};
use resfock::{c64, fock, sampling, Complex64};
use serde::Serialize;
use serde_json::json;

use crate::{Command, Common, Report, RunError};

#[derive(Debug, Serialize)]
struct Check {
    name: &'static str,
    worst: f64,
    tol: f64,
    pass: bool,
}

#[derive(Default)]
struct Suite {
    checks: Vec<Check>,
}

impl Suite {
    fn check(&mut self, name: &'static str, values: impl IntoIterator<Item = f64>, tol: f64) {
        let mut worst: f64 = 0.0;
        let mut finite = true;
        for v in values {
            finite &= v.is_finite();
            worst = worst.max(v);
        }
        self.checks.push(Check { name, worst, tol, pass: finite && worst <= tol });
    }

    fn flag(&mut self, name: &'static str, ok: bool) {
        self.checks.push(Check { name, worst: if ok { 0.0 } else { 1.0 }, tol: 0.0, pass: ok });
    }
}

fn window(rng: &mut ChaCha8Rng, max: usize) -> ModeWindow {
    ModeWindow::new(rng.random_range(1..=max), rng.random_range(1..=max)).expect("nonempty window")
}

fn real_poly(rng: &mut ChaCha8Rng, band: usize) -> FourierFunction {
    let mut c = vec![c64(0.0, 0.0); 2 * band + 1];
    for j in 0..=band {
        let z = sampling::gaussian(rng);
        let z = if j == 0 { c64(z.re, 0.0) } else { z };
        c[band + j] = z;
        c[band - j] = z.conj();
    }
    FourierFunction::new(c, true).expect("symmetric coefficients")
}

pub fn run(cmd: &Command, common: &Common) -> Result<Report, RunError> {
    let mut rng = ChaCha8Rng::seed_from_u64(common.seed);
    let cases = common.cases.max(1);
    let tol = |d: f64| common.tol.unwrap_or(d);
    let mut s = Suite::default();
    match cmd {
        Command::SsCheck { .. } => {
            let mut resid = Vec::new();
            let mut unit = Vec::new();
            for _ in 0..cases {
                let w = window(&mut rng, 6);
                let u = sampling::random_unitary(w, &mut rng);
                resid.push(linop::ss_defect(&u).identity_residual());
                unit.push(u.unitarity_defect());
            }
            s.check("identity_resid", resid, tol(1e-12));
            s.check("unitarity", unit, 1e-12);
        }
        Command::Cocycle { step, .. } => {
            let (mut anti, mut fd, mut anomaly) = (Vec::new(), Vec::new(), Vec::new());
            for _ in 0..cases {
                let w = window(&mut rng, 3);
                let x = sampling::random_antihermitian(w, &mut rng);
                let y = sampling::random_antihermitian(w, &mut rng);
                let c = schwinger_cocycle(&x, &y)?;
                anti.push((c + schwinger_cocycle(&y, &x)?).norm());
                fd.push((cocycle_from_chi(&x, &y, *step)? - c).norm());
                let a = sampling::random_operator(w, &mut rng);
                let b = sampling::random_operator(w, &mut rng);
                let trace = (a.mp() * b.pm()).trace() - (b.mp() * a.pm()).trace();
                anomaly.push((fock::anomaly_check(&a, &b)? - trace).norm());
            }
            s.check("antisymmetry", anti, 1e-12);
            s.check("finite_difference", fd, tol(1e-6));
            s.check("anomaly_vs_trace", anomaly, 1e-10);
        }
        Command::Implement { .. } => {
            let (mut inter, mut proj) = (Vec::new(), Vec::new());
            let mut kernels = true;
            let one = Complex64::new(1.0, 0.0);
            for _ in 0..cases {
                let w = window(&mut rng, 3);
                let u = sampling::random_unitary(w, &mut rng);
                let v = sampling::random_unitary(w, &mut rng);
                let gu = fock::bogoliubov_implement(&u, one)?;
                let gv = fock::bogoliubov_implement(&v, one)?;
                let guv = fock::bogoliubov_implement(&u.mul(&v)?, one)?;
                inter.push(fock::verify_intertwining(&gu.op, &u)?);
                let (lambda, resid) = fock::projective_factor(&gu.op, &gv.op, &guv.op)?;
                proj.push(resid.max((lambda.norm() - 1.0).abs()));
                let k = fock::kernel_dims(&u)?;
                kernels &= k.ker_pp == k.ker_mm_adj && k.ker_mm == k.ker_pp_adj;
            }
            s.check("intertwining", inter, tol(1e-10));
            s.check("projective_factor", proj, 1e-9);
            s.flag("kernel_pairs", kernels);
        }
        Command::Transport { .. } => {
            let (mut semi, mut causal) = (Vec::new(), Vec::new());
            let opts = TransportOptions::default();
            for _ in 0..cases {
                let w = window(&mut rng, 3);
                let x = sampling::random_antihermitian(w, &mut rng).scale(c64(0.3, 0.0));
                let path = SampledPath::uniform(0.0, 1.0, 200, |t| x.scale(c64(t, 0.0)).exp())?;
                semi.push(transport::check_semigroup(&path, 0, 80, 200, &opts)?);
                let first = SampledPath::uniform(0.0, 0.5, 100, |t| x.scale(c64(t, 0.0)).exp())?;
                let y = sampling::random_antihermitian(w, &mut rng).scale(c64(0.3, 0.0));
                let second = SampledPath::uniform(0.0, 0.5, 100, |t| y.scale(c64(t, 0.0)).exp())?;
                causal.push(transport::causal_factorization(&first, &second, &opts)?.deviation);
            }
            s.check("semigroup", semi, tol(1e-7));
            s.check("causal_factorization", causal, tol(1e-7));
        }
        Command::Holonomy { nodes, .. } => {
            let mut err = Vec::new();
            for _ in 0..cases {
                let delta = rng.random_range(0.0..1.0);
                err.push(transport::holonomy_loop(delta, *nodes)?.err);
            }
            s.check("holonomy_err", err, tol(1e-6));
        }
        Command::Loopgroup { .. } => {
            let (mut agree, mut anti, mut window_gap) = (Vec::new(), Vec::new(), Vec::new());
            for _ in 0..cases {
                let (b1, b2) = (rng.random_range(0..4), rng.random_range(0..4));
                let h = real_poly(&mut rng, b1);
                let g = real_poly(&mut rng, b2);
                let c = loopgroup::loop_cocycle_fourier(&h, &g);
                let q = loopgroup::loop_cocycle_quadrature(&h, &g, loopgroup::QUADRATURE_NODES);
                agree.push((c - q).norm() / (1.0 + c.norm()));
                anti.push((c + loopgroup::loop_cocycle_fourier(&g, &h)).norm());
                let w = ModeWindow::new(8, 8)?;
                window_gap.push((loopgroup::window_cocycle(&h, &g, w)? - c).norm() / (1.0 + c.norm()));
            }
            s.check("fourier_vs_quadrature", agree, 1e-10);
            s.check("antisymmetry", anti, 1e-12);
            s.check("window_cocycle", window_gap, tol(1e-10));
        }
        Command::Dirac1d { .. } => {
            let (mut herm, mut skew, mut unit, mut gap) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
            let mut bounds = true;
            let model = LatticeModel::new(1.0, 6.0, 2, 1.0)?;
            let opts = EvolveOptions::default();
            for _ in 0..cases {
                let field = dirac1d::random_field(1, 0.5, &mut rng)?;
                let t = rng.random_range(0.0..2.0);
                let h = dirac1d::build_hamiltonian(&model, &field, t)?;
                herm.push((h.matrix() - h.matrix().adjoint()).norm());
                herm.push((h.matrix() - dirac1d::build_hamiltonian_spinor(&model, &field, t)?).norm());
                let q = dirac1d::q_operator(&model, &field, t)?;
                skew.push((q.matrix() + q.matrix().adjoint()).norm());
                let d = dirac1d::evolve(&model, &field, 0.0, 2.0, Method::Dyson, &opts)?;
                let o = dirac1d::evolve(&model, &field, 0.0, 2.0, Method::Ode, &opts)?;
                unit.push(d.unitarity_defect.max(o.unitarity_defect));
                gap.push(linop::op_norm(&(d.operator.matrix() - o.operator.matrix())));
                bounds &= d.bounds_hold(1e-9);
            }
            s.check("hamiltonian_hermitian", herm, 1e-12);
            s.check("q_skew", skew, 1e-12);
            s.check("unitarity", unit, tol(1e-8));
            s.check("dyson_vs_ode", gap, tol(1e-8));
            s.flag("dyson_bounds", bounds);
        }
        Command::Pipeline { .. } => {
            let (mut unit, mut persistence) = (Vec::new(), Vec::new());
            let mut balanced = true;
            let model = LatticeModel::new(1.0, 6.0, 2, 1.0)?;
            let opts = PipelineOptions { nodes_per_unit: 128, ..PipelineOptions::default() };
            for _ in 0..cases.min(4) {
                let field = dirac1d::random_field(1, 0.3, &mut rng)?;
                let r = dirac1d::scattering_pipeline(&model, &field, &opts)?;
                unit.push(r.s_unitarity);
                persistence.push(r.fock.vacuum_persistence - 1.0);
                balanced &= r.fock.particles == r.fock.holes;
            }
            s.check("s_unitarity", unit, tol(1e-8));
            s.check("vacuum_persistence_le_1", persistence, 1e-12);
            s.flag("charge_balance", balanced);
        }
    }
    let mut r = Report::from_value(json!({ "suite": cmd.name(), "cases": cases }));
    for c in &s.checks {
        if !c.pass {
            r.violations.push(format!("{} worst {:.3e} vs tol {:.1e}", c.name, c.worst, c.tol));
        }
    }
    r.set("pass", s.checks.iter().all(|c| c.pass));
    r.table = Some(s.checks.iter().map(|c| serde_json::to_value(c).expect("serializable")).collect());
    Ok(r)
}
