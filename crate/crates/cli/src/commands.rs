use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use resfock::central_ext::{cocycle_from_chi, schwinger_cocycle};
use resfock::dirac1d::{self, ConfigFile, EvolveOptions, FieldConfig, LatticeModel, Method, PipelineOptions, ScanRow};
use resfock::fock::{self, MAX_MODES};
use resfock::linop::{self, ModeWindow, PolarizedOperator};
use resfock::loopgroup::{self, FourierFile, FourierFunction};
use resfock::transport::{self, PathNode, SampledPath, TransportOptions};
use resfock::{c64, io};
use serde_json::{json, Value};

use crate::{Command, Common, Report, RunError};

pub fn run(cmd: &Command, common: &Common) -> Result<Report, RunError> {
    match cmd {
        Command::SsCheck { op } => ss_check(required(op, "--op")?, common),
        Command::Cocycle { op, step } => cocycle(op, *step, common),
        Command::Implement { op } => implement(required(op, "--op")?, common),
        Command::Transport { path } => transport_cmd(required(path, "--path")?, common),
        Command::Holonomy { delta, nodes } => holonomy(*delta, *nodes, common),
        Command::Loopgroup { fourier, modes } => loopgroup_cmd(fourier, *modes, common),
        Command::Dirac1d { config, cutoffs, t0, t1 } => dirac(required(config, "--config")?, cutoffs, (*t0, *t1), common),
        Command::Pipeline { config, nodes, fock_momenta } => {
            pipeline(required(config, "--config")?, *nodes, *fock_momenta, common)
        }
    }
}

fn required<'a>(p: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path, RunError> {
    p.as_deref().ok_or_else(|| RunError::input(format!("{flag} is required unless --selftest is given")))
}

fn read_operator(path: &Path) -> Result<PolarizedOperator, RunError> {
    PolarizedOperator::read_json(path).map_err(|e| RunError::input(format!("{}: {e}", path.display())))
}

fn read_config(path: &Path) -> Result<(LatticeModel, FieldConfig), RunError> {
    let file = ConfigFile::read(path).map_err(|e| RunError::input(format!("{}: {e}", path.display())))?;
    Ok(file.build()?)
}

fn ss_check(path: &Path, common: &Common) -> Result<Report, RunError> {
    let u = read_operator(path)?;
    let d = linop::ss_defect(&u);
    let mut r = Report::from_value(json!({
        "neg": u.window().neg(),
        "pos": u.window().pos(),
        "hs_pm": d.hs_pm,
        "hs_mp": d.hs_mp,
        "hs_comm": d.hs_comm,
        "identity_resid": d.identity_residual(),
        "unitarity_defect": u.unitarity_defect(),
    }));
    r.require("identity_resid", d.identity_residual(), common.tol.unwrap_or(1e-12));
    Ok(r)
}

fn cocycle(ops: &[PathBuf], step: f64, common: &Common) -> Result<Report, RunError> {
    if ops.len() != 2 {
        return Err(RunError::input(format!("cocycle needs --op twice, got {}", ops.len())));
    }
    let x = read_operator(&ops[0])?;
    let y = read_operator(&ops[1])?;
    let c = schwinger_cocycle(&x, &y)?;
    let swapped = schwinger_cocycle(&y, &x)?;
    let fd = cocycle_from_chi(&x, &y, step)?;
    let tol = common.tol.unwrap_or(1e-6);
    let mut r = Report::from_value(json!({
        "cocycle": c,
        "antisymmetry": (c + swapped).norm(),
        "finite_difference": fd,
        "fd_error": (fd - c).norm(),
    }));
    r.require("antisymmetry", (c + swapped).norm(), 1e-12 * (1.0 + c.norm()));
    r.require("fd_error", (fd - c).norm(), tol * (1.0 + c.norm()));
    if x.window().dim() <= MAX_MODES {
        let anomaly = fock::anomaly_check(&x, &y)?;
        let trace = (x.mp() * y.pm()).trace() - (y.mp() * x.pm()).trace();
        r.set("anomaly", anomaly);
        r.set("anomaly_vs_trace", (anomaly - trace).norm());
        r.require("anomaly_vs_trace", (anomaly - trace).norm(), 1e-10 * (1.0 + trace.norm()));
    } else {
        r.set("anomaly", Value::Null);
    }
    Ok(r)
}

fn implement(path: &Path, common: &Common) -> Result<Report, RunError> {
    let u = read_operator(path)?;
    let imp = fock::bogoliubov_implement(&u, c64(1.0, 0.0))?;
    let inter = fock::verify_intertwining(&imp.op, &u)?;
    let k = fock::kernel_dims(&u)?;
    let v = &imp.vacuum;
    let mut r = Report::from_value(json!({
        "neg": u.window().neg(),
        "pos": u.window().pos(),
        "particles": v.l,
        "holes": v.m,
        "net_charge": v.net_charge(),
        "n": v.n,
        "overlap_norm": v.overlap_norm,
        "kernel_dims": k,
        "intertwining": inter,
        "vacuum": v.vector.to_dump(),
    }));
    r.require("intertwining", inter, common.tol.unwrap_or(1e-10));
    Ok(r)
}

fn transport_cmd(path: &Path, common: &Common) -> Result<Report, RunError> {
    let nodes: Vec<PathNode> = io::read_json(path).map_err(|e| RunError::input(format!("{}: {e}", path.display())))?;
    let p = SampledPath::from_file(&nodes)?;
    let opts = TransportOptions::default();
    let res = transport::parallel_transport(&p, &opts)?;
    let plain = transport::parallel_transport(&p, &TransportOptions { richardson: false, ..opts })?;
    let gap = (res.phase - plain.phase).norm();
    let mut r = Report::from_value(json!({
        "nodes": p.len(),
        "phase": res.phase,
        "lift": res.lift,
        "order": res.order,
        "steps": res.steps,
        "richardson_gap": gap,
    }));
    r.require("richardson_gap", gap, common.tol.unwrap_or(1e-4));
    Ok(r)
}

fn holonomy(delta: f64, nodes: usize, common: &Common) -> Result<Report, RunError> {
    let h = transport::holonomy_loop(delta, nodes)?;
    let mut r = Report::from_value(serde_json::to_value(&h).expect("serializable"));
    r.set("delta", delta);
    r.set("nodes", nodes);
    r.require("err", h.err, common.tol.unwrap_or(1e-6));
    Ok(r)
}

fn read_fourier(path: &Path) -> Result<FourierFunction, RunError> {
    let file: FourierFile = io::read_json(path).map_err(|e| RunError::input(format!("{}: {e}", path.display())))?;
    FourierFunction::from_file(&file).map_err(|e| RunError::input(format!("{}: {e}", path.display())))
}

fn loopgroup_cmd(files: &[PathBuf], modes: Option<usize>, common: &Common) -> Result<Report, RunError> {
    if files.len() != 2 {
        return Err(RunError::input(format!("loopgroup needs --fourier twice, got {}", files.len())));
    }
    let h = read_fourier(&files[0])?;
    let g = read_fourier(&files[1])?;
    let n = modes.unwrap_or_else(|| (h.band() + g.band()).max(8));
    let window = ModeWindow::new(n, n)?;
    let c = loopgroup::loop_cocycle(&h, &g)?;
    let wc = loopgroup::window_cocycle(&h, &g, window)?;
    let gap = (c - wc).norm();
    let mut r = Report::from_value(json!({
        "cocycle": c,
        "quadrature": loopgroup::loop_cocycle_quadrature(&h, &g, loopgroup::QUADRATURE_NODES),
        "window": [n, n],
        "window_cocycle": wc,
        "window_gap": gap,
        "interior_commutator": loopgroup::interior_commutator(&h, &g, window)?,
        "hs_offdiag": [loopgroup::hs_offdiag_norm(&h), loopgroup::hs_offdiag_norm(&g)],
    }));
    if n >= h.band().max(g.band()) {
        r.require("window_gap", gap, common.tol.unwrap_or(1e-10) * (1.0 + c.norm()));
    }
    Ok(r)
}

fn time_span(field: &FieldConfig, t: (Option<f64>, Option<f64>)) -> (f64, f64) {
    let (a, b) = field.support().map(|(a, b)| (a - 0.25, b + 0.25)).unwrap_or((0.0, 1.0));
    (t.0.unwrap_or(a), t.1.unwrap_or(b))
}

/// Scan rows computed on up to `jobs` threads and keyed by cutoff.
pub fn parallel_scan(
    model: &LatticeModel,
    field: &FieldConfig,
    span: (f64, f64),
    cutoffs: &[usize],
    jobs: usize,
    opts: &EvolveOptions,
) -> Result<Vec<ScanRow>, RunError> {
    let mut keys: Vec<usize> = cutoffs.to_vec();
    keys.sort_unstable();
    keys.dedup();
    let jobs = jobs.clamp(1, keys.len().max(1));
    let mut merged: BTreeMap<usize, resfock::Result<ScanRow>> = BTreeMap::new();
    std::thread::scope(|s| {
        let handles: Vec<_> = (0..jobs)
            .map(|j| {
                let mine: Vec<usize> = keys.iter().copied().skip(j).step_by(jobs).collect();
                s.spawn(move || {
                    mine.into_iter()
                        .map(|n| (n, dirac1d::scan_row(model, field, span.0, span.1, n, opts)))
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        for h in handles {
            merged.extend(h.join().expect("scan worker panicked"));
        }
    });
    merged.into_values().map(|r| r.map_err(RunError::from)).collect()
}

fn dirac(path: &Path, cutoffs: &[usize], t: (Option<f64>, Option<f64>), common: &Common) -> Result<Report, RunError> {
    let (model, field) = read_config(path)?;
    let (t0, t1) = time_span(&field, t);
    let opts = EvolveOptions::default();
    let tol = common.tol.unwrap_or(1e-8);
    let dyson = dirac1d::evolve(&model, &field, t0, t1, Method::Dyson, &opts)?;
    let ode = dirac1d::evolve(&model, &field, t0, t1, Method::Ode, &opts)?;
    let gap = linop::op_norm(&(dyson.operator.matrix() - ode.operator.matrix()));
    let ren = dirac1d::renormalized_evolution(&model, &field, t0, t1, &opts)?;
    let mut r = Report::from_value(json!({
        "mass": model.mass,
        "box": model.box_len,
        "cutoff": model.cutoff,
        "dim": model.dim(),
        "t0": t0,
        "t1": t1,
        "dyson": dyson,
        "ode": ode,
        "dyson_vs_ode": gap,
        "raw_hs": ren.raw_hs,
        "renormalized_hs": ren.renormalized_hs,
        "renormalized_unitarity": ren.unitarity_defect,
    }));
    r.require("dyson_vs_ode", gap, tol);
    r.require("unitarity_defect", dyson.unitarity_defect.max(ode.unitarity_defect), tol);
    if !dyson.bounds_hold(1e-9) {
        r.violations.push("a Dyson term exceeds its a-priori bound".into());
    }
    if !cutoffs.is_empty() {
        let rows = parallel_scan(&model, &field, (t0, t1), cutoffs, common.jobs, &opts)?;
        r.set("scan_variation", dirac1d::scan_variation(&rows));
        r.table = Some(rows.iter().map(|row| serde_json::to_value(row).expect("serializable")).collect());
    }
    Ok(r)
}

fn pipeline(path: &Path, nodes: usize, fock_momenta: usize, common: &Common) -> Result<Report, RunError> {
    let (model, field) = read_config(path)?;
    if nodes == 0 {
        return Err(RunError::input("--nodes must be positive"));
    }
    let opts = PipelineOptions { nodes_per_unit: nodes, fock_momenta, ..PipelineOptions::default() };
    let rep = dirac1d::scattering_pipeline(&model, &field, &opts)?;
    let mut r = Report::from_value(serde_json::to_value(&rep).expect("serializable"));
    r.require("s_unitarity", rep.s_unitarity, common.tol.unwrap_or(1e-8));
    Ok(r)
}
