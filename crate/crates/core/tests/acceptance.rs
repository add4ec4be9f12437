//! One line per acceptance criterion; exits nonzero if any fails.

use std::f64::consts::PI;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use resfock::central_ext::{cocycle_from_chi, group_cocycle_chi, schwinger_cocycle};
use resfock::dirac1d::{self, *};
use resfock::fock::{self, FockOperator, FockVector, Kind};
use resfock::linop::{self, op_norm, ModeWindow, PolarizedOperator, WindowedOperator};
use resfock::loopgroup::{self, FourierFunction};
use resfock::polarization::{admissible_basis, Polarization};
use resfock::transport::{self, SampledPath, TransportOptions};
use resfock::{c64, sampling, CMat, CVec, Complex64};

type Outcome = Result<String, String>;

fn win(n: usize, p: usize) -> ModeWindow {
    ModeWindow::new(n, p).unwrap()
}

fn ensure(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn id_dist(op: &FockOperator, c: Complex64) -> f64 {
    op.sub(&FockOperator::identity(op.window()).unwrap().scale(c)).unwrap().norm()
}

fn supported(v: &CVec, w: ModeWindow, plus: bool) -> CVec {
    CVec::from_fn(v.len(), |i, _| if w.is_plus(i) == plus { v[i] } else { c64(0.0, 0.0) })
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let u = sampling::random_unitary(win(8, 8), &mut rng);
        worst = worst.max(linop::ss_defect(&u).identity_residual());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-12 && secs < 1.0, format!("residual {worst:.2e}, {secs:.2}s"))?;
    Ok(format!("max relative residual {worst:.2e} over 100 unitaries, {secs:.2}s"))
}

fn criterion_2() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst: f64 = 0.0;
    for n in [3, 4] {
        let w = win(n, n);
        let d = w.dim();
        let f = sampling::random_vector(d, &mut rng);
        let g = sampling::random_vector(d, &mut rng);
        let (fp, gp) = (supported(&f, w, true), supported(&g, w, true));
        let (fm, gm) = (supported(&f, w, false), supported(&g, w, false));
        let a = |v: &CVec| fock::ladder(w, Kind::A, v).unwrap();
        let a_s = |v: &CVec| fock::ladder(w, Kind::AStar, v).unwrap();
        let b = |v: &CVec| fock::ladder(w, Kind::B, v).unwrap();
        let b_s = |v: &CVec| fock::ladder(w, Kind::BStar, v).unwrap();
        let zero = c64(0.0, 0.0);
        let checks = [
            id_dist(&a(&fp).anticommutator(&a_s(&gp)).unwrap(), fp.dotc(&gp)),
            id_dist(&b(&fm).anticommutator(&b_s(&gm)).unwrap(), gm.dotc(&fm)),
            id_dist(&a(&fp).anticommutator(&a(&gp)).unwrap(), zero)
                + id_dist(&a_s(&fp).anticommutator(&a_s(&gp)).unwrap(), zero),
            id_dist(&b(&fm).anticommutator(&b(&gm)).unwrap(), zero)
                + id_dist(&b_s(&fm).anticommutator(&b_s(&gm)).unwrap(), zero),
            [a(&fp), a_s(&fp)]
                .iter()
                .flat_map(|x| [b(&gm), b_s(&gm)].into_iter().map(move |y| id_dist(&x.anticommutator(&y).unwrap(), zero)))
                .sum(),
            id_dist(&fock::field_op(w, &f).unwrap().anticommutator(&fock::field_op_adj(w, &g).unwrap()).unwrap(), f.dotc(&g)),
        ];
        worst = checks.iter().copied().fold(worst, f64::max);
        let omega = FockVector::vacuum(w);
        worst = worst.max(fock::field_op(w, &fp).unwrap().apply(&omega).unwrap().norm());
    }
    let secs = start.elapsed().as_secs_f64();
    ensure(worst <= 1e-12 && secs < 5.0, format!("deviation {worst:.2e}, {secs:.2}s"))?;
    Ok(format!("six anticommutator families and Ψ(f)Ω = 0 on (3,3), (4,4): max deviation {worst:.2e}, {secs:.2}s"))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut worst: f64 = 0.0;
    for _ in 0..25 {
        let a = sampling::random_operator(win(3, 3), &mut rng);
        let b = sampling::random_operator(win(3, 3), &mut rng);
        let c = fock::anomaly_check(&a, &b).map_err(|e| e.to_string())?;
        let trace = (a.mp() * b.pm()).trace() - (b.mp() * a.pm()).trace();
        worst = worst.max((c - trace).norm());
    }
    ensure(worst <= 1e-10, format!("anomaly vs trace formula {worst:.2e}"))?;
    Ok(format!("25 pairs scalar; |anomaly − tr(A₋₊B₊₋ − B₋₊A₊₋)| ≤ {worst:.2e}"))
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let x = sampling::random_near_identity(win(3, 3), 0.3, &mut rng);
        let y = sampling::random_near_identity(win(3, 3), 0.3, &mut rng);
        let z = sampling::random_near_identity(win(3, 3), 0.3, &mut rng);
        let chi = |p: &PolarizedOperator, q: &PolarizedOperator| group_cocycle_chi(p, q).map_err(|e| e.to_string());
        let lhs = chi(&x, &y)? * chi(&x.mul(&y).unwrap(), &z)?;
        let rhs = chi(&x, &y.mul(&z).unwrap())? * chi(&y, &z)?;
        worst = worst.max((lhs - rhs).norm() / lhs.norm());
    }
    let mut fd_worst: f64 = 0.0;
    for _ in 0..10 {
        let p = sampling::random_antihermitian(win(3, 3), &mut rng);
        let q = sampling::random_antihermitian(win(3, 3), &mut rng);
        let fd = cocycle_from_chi(&p, &q, 1e-3).map_err(|e| e.to_string())?;
        fd_worst = fd_worst.max((fd - schwinger_cocycle(&p, &q).unwrap()).norm());
    }
    ensure(worst <= 1e-10 && fd_worst <= 1e-6, format!("cocycle {worst:.2e}, finite difference {fd_worst:.2e}"))?;
    Ok(format!("cocycle identity {worst:.2e} on 50 triples; finite-difference vs trace formula {fd_worst:.2e}"))
}

fn criterion_5() -> Outcome {
    let (h, g) = (FourierFunction::sin(1), FourierFunction::cos(1));
    let fourier = loopgroup::loop_cocycle_fourier(&h, &g);
    let quad = loopgroup::loop_cocycle_quadrature(&h, &g, loopgroup::QUADRATURE_NODES);
    let target = c64(0.0, 0.5);
    let w = loopgroup::commuting_witness(&h, &g, win(8, 8)).map_err(|e| e.to_string())?;
    let ok = (fourier - target).norm() <= 1e-10
        && (quad - target).norm() <= 1e-10
        && (fourier - quad).norm() <= 1e-10
        && w.interior_commutator == 0.0
        && w.cocycle.norm() > 0.1;
    ensure(ok, format!("fourier {fourier}, quadrature {quad}, interior commutator {:.2e}", w.interior_commutator))?;
    Ok(format!(
        "c = {:.12}i (Fourier), {:.12}i (quadrature); interior [M_h, M_g] = {}",
        fourier.im, quad.im, w.interior_commutator
    ))
}

fn criterion_6() -> Outcome {
    let mut parts = Vec::new();
    for delta in [0.0, 0.25, 0.5, 0.9] {
        let start = Instant::now();
        let fine = transport::holonomy_loop(delta, 512).map_err(|e| e.to_string())?;
        let secs = start.elapsed().as_secs_f64();
        let coarse = transport::holonomy_loop(delta, 256).map_err(|e| e.to_string())?;
        let ratio = coarse.err / fine.err.max(1e-300);
        let converged = fine.err <= 1e-13 || ratio >= 3.5;
        ensure(fine.err <= 1e-6 && converged && secs < 1.0, format!("δ = {delta}: err {:.2e}, ratio {ratio:.2}, {secs:.2}s", fine.err))?;
        parts.push(format!("δ={delta}: {:.1e} (×{:.1})", fine.err, if fine.err <= 1e-13 { f64::INFINITY } else { ratio }));
    }
    Ok(parts.join(", "))
}

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let w = win(2, 2);
    let x = sampling::random_antihermitian(w, &mut rng).scale(c64(0.4, 0.0));
    let y = sampling::random_antihermitian(w, &mut rng).scale(c64(0.3, 0.0));
    let path = SampledPath::uniform(0.0, 1.0, 200, |t| x.scale(c64(t, 0.0)).exp().mul(&y.scale(c64(t * t, 0.0)).exp()).unwrap())
        .map_err(|e| e.to_string())?;
    let semi = transport::check_semigroup(&path, 0, 80, 200, &TransportOptions::default()).map_err(|e| e.to_string())?;

    let model = LatticeModel::new(1.0, 2.0 * PI, 3, 1.0).unwrap();
    let g = FourierFunction::new(vec![c64(0.4, 0.2), c64(0.3, 0.0), c64(0.4, -0.2)], true).unwrap();
    let first = FieldConfig::pulse(Component::A1, g.clone(), Envelope::new(EnvelopeKind::Bump, 0.0, 1.0).unwrap()).unwrap();
    let second = FieldConfig::pulse(Component::A0, g, Envelope::new(EnvelopeKind::Gaussian, 1.5, 2.5).unwrap()).unwrap();
    let causal = causal_split(&model, &first, &second, &PipelineOptions::default()).map_err(|e| e.to_string())?;
    ensure(semi <= 1e-8 && causal.deviation <= 1e-8, format!("semigroup {semi:.2e}, causal {:.2e}", causal.deviation))?;
    Ok(format!("semigroup {semi:.2e}; pulse factorization via lattice pipeline {:.2e}", causal.deviation))
}

fn criterion_8() -> Outcome {
    let w1 = win(1, 1);
    let mut rot_worst: f64 = 0.0;
    for th in [-1.1, 0.3, 1.2] {
        let (c, s) = (f64::cos(th), f64::sin(th));
        let u = PolarizedOperator::new(w1, CMat::from_row_slice(2, 2, &[c64(c, 0.0), c64(-s, 0.0), c64(s, 0.0), c64(c, 0.0)])).unwrap();
        let imp = fock::bogoliubov_implement(&u, c64(1.0, 0.0)).map_err(|e| e.to_string())?;
        let omega = FockVector::vacuum(w1);
        let e0 = CVec::from_vec(vec![c64(0.0, 0.0), c64(1.0, 0.0)]);
        let em = CVec::from_vec(vec![c64(1.0, 0.0), c64(0.0, 0.0)]);
        let pair = fock::ladder(w1, Kind::AStar, &e0).unwrap().mul(&fock::ladder(w1, Kind::BStar, &em).unwrap()).unwrap();
        let target = omega.to_dense().unwrap() * c64(c, 0.0) + pair.apply(&omega).unwrap().to_dense().unwrap() * c64(s, 0.0);
        rot_worst = rot_worst.max((imp.vacuum.vector.to_dense().unwrap() - target).norm());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut inter: f64 = 0.0;
    for _ in 0..20 {
        let u = sampling::random_unitary(win(3, 3), &mut rng);
        let imp = fock::bogoliubov_implement(&u, c64(1.0, 0.0)).map_err(|e| e.to_string())?;
        inter = inter.max(fock::verify_intertwining(&imp.op, &u).map_err(|e| e.to_string())?);
        let k = fock::kernel_dims(&u).map_err(|e| e.to_string())?;
        ensure(k.ker_pp == k.ker_mm_adj && k.ker_mm == k.ker_pp_adj, format!("kernel dims {k:?}"))?;
    }
    let swap = PolarizedOperator::new(w1, CMat::from_row_slice(2, 2, &[c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0)])).unwrap();
    let k = fock::kernel_dims(&swap).map_err(|e| e.to_string())?;
    ensure(k.ker_pp == 1 && k.ker_mm_adj == 1 && k.ker_mm == 1 && k.ker_pp_adj == 1, format!("swap kernel dims {k:?}"))?;
    let mut charges = Vec::new();
    for shift in [-2i64, -1, 1, 2] {
        let s = WindowedOperator::shift(win(3, 3), shift).map_err(|e| e.to_string())?;
        let v = fock::transformed_vacuum(&s, c64(1.0, 0.0)).map_err(|e| e.to_string())?;
        let ind = linop::fredholm_index(&s, linop::Block::MinusMinus).map_err(|e| e.to_string())?.index;
        ensure(v.net_charge() == ind, format!("shift {shift}: L − M = {} but ind = {ind}", v.net_charge()))?;
        charges.push(v.net_charge());
    }
    ensure(rot_worst <= 1e-12 && inter <= 1e-10, format!("rotation {rot_worst:.2e}, intertwining {inter:.2e}"))?;
    Ok(format!("rotation vacuum {rot_worst:.1e}; intertwining {inter:.2e}; kernel pairs equal; L − M = {charges:?} for shifts −2,−1,1,2"))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let model = LatticeModel::new(1.0, 2.0 * PI, 3, 1.0).unwrap();
    let opts = EvolveOptions::default();
    let (mut gap, mut unit, mut slack): (f64, f64, f64) = (0.0, 0.0, f64::MAX);
    for i in 0..20 {
        let field = dirac1d::random_field(2, 0.4, &mut rng).map_err(|e| e.to_string())?;
        let a = evolve(&model, &field, -0.1, 2.1, Method::Dyson, &opts).map_err(|e| e.to_string())?;
        let b = evolve(&model, &field, -0.1, 2.1, Method::Ode, &opts).map_err(|e| e.to_string())?;
        ensure(a.bounds_hold(0.0), format!("field {i}: Dyson bound violated"))?;
        for t in &a.dyson_terms {
            slack = slack.min(t.bound / t.norm.max(1e-300)).min(t.hs_bound / t.hs_comm.max(1e-300));
        }
        gap = gap.max(op_norm(&(a.operator.matrix() - b.operator.matrix())));
        unit = unit.max(a.unitarity_defect).max(b.unitarity_defect);
    }
    ensure(gap <= 1e-8 && unit <= 1e-9, format!("dyson/ode {gap:.2e}, unitarity {unit:.2e}"))?;
    Ok(format!("20 fields: bounds hold (min bound/value {slack:.3}); dyson vs ode {gap:.2e}; unitarity {unit:.2e}"))
}

fn criterion_10() -> Outcome {
    let model = LatticeModel::new(1.0, 2.0 * PI, 4, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut skew: f64 = 0.0;
    for _ in 0..10 {
        let f = dirac1d::random_field(2, 0.5, &mut rng).map_err(|e| e.to_string())?;
        let q = q_operator(&model, &f, 1.0).map_err(|e| e.to_string())?;
        skew = skew.max((q.matrix() + q.matrix().adjoint()).norm());
    }
    let g = FourierFunction::new(vec![c64(0.3, 0.1), c64(0.2, 0.0), c64(0.3, -0.1)], true).unwrap();
    let pulse = FieldConfig::pulse(Component::A1, g, Envelope::new(EnvelopeKind::Gaussian, 0.0, 2.0).unwrap()).unwrap();
    let coarse = model.with_cutoff(2).unwrap();
    let ident = first_order_identity(&coarse, &pulse, 0.3, 1.6, 64).map_err(|e| e.to_string())?;
    let ren = renormalized_evolution(&model, &pulse, -0.2, 2.3, &EvolveOptions::default()).map_err(|e| e.to_string())?;
    let s_gap = (ren.renormalized.matrix() - ren.raw.operator.matrix()).norm();

    let scan_model = LatticeModel::new(1.0, 4.0 * PI, 32, 1.0).unwrap();
    let a1 = FourierFunction::new(vec![c64(0.3, 0.0), c64(0.0, 0.0), c64(0.3, 0.0)], true).unwrap();
    let a1_pulse = FieldConfig::pulse(Component::A1, a1, Envelope::new(EnvelopeKind::Bump, 0.0, 1.0).unwrap()).unwrap();
    let rows = cutoff_scan(&scan_model, &a1_pulse, -0.1, 0.5, &[32, 64, 128], &EvolveOptions::default()).map_err(|e| e.to_string())?;
    let var = scan_variation(&rows);
    ensure(
        skew <= 1e-12 && ident.residual <= 1e-4 && s_gap <= 1e-10 && var < 0.1,
        format!("skew {skew:.2e}, identity {:.2e}, S gap {s_gap:.2e}, variation {var:.2e}", ident.residual),
    )?;
    let table: Vec<String> = rows.iter().map(|r| format!("N={}:{:.6}", r.cutoff, r.renormalized_hs)).collect();
    Ok(format!(
        "skew {skew:.1e}; identity residual {:.1e} (sign {Q_IDENTITY_SIGN}, flipped {:.2}); S gap {s_gap:.1e}; ren. defect {} (spread {var:.1e})",
        ident.residual,
        ident.residual_flipped,
        table.join(" ")
    ))
}

fn criterion_11() -> Outcome {
    let model = LatticeModel::new(1.0, 2.0 * PI, 12, 1.0).unwrap();
    let g = FourierFunction::new(vec![c64(0.4, 0.2), c64(0.3, 0.0), c64(0.4, -0.2)], true).unwrap();
    let field = FieldConfig::pulse(Component::A1, g, Envelope::new(EnvelopeKind::Gaussian, 0.0, 2.0).unwrap()).unwrap();
    let lambda = FourierFunction::new(vec![c64(0.15, 0.1), c64(0.0, 0.0), c64(0.15, -0.1)], true).unwrap();
    let gauge = gauge_transform(&model, &field, &lambda, Envelope::new(EnvelopeKind::Bump, 0.3, 1.8).unwrap()).map_err(|e| e.to_string())?;
    let r = gauge_covariance(&model, &field, &gauge, -0.2, 2.2, 6, &EvolveOptions::default()).map_err(|e| e.to_string())?;
    ensure(r.covariance_dev <= 1e-8 && r.renormalized_dev <= 1e-8, format!("{r:?}"))?;
    Ok(format!(
        "|k| ≤ {}: covariance {:.2e}, renormalized {:.2e} (full window incl. cutoff edge {:.2e})",
        r.interior_momentum, r.covariance_dev, r.renormalized_dev, r.full_window_dev
    ))
}

fn criterion_12() -> Outcome {
    // Finite Plücker/Fock equivalence.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w = win(3, 3);
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let z = sampling::random_matrix(6, 3, &mut rng);
        let x = sampling::random_matrix(6, 3, &mut rng);
        let p = fock::pflucker_inner(&z, &x).unwrap();
        let f = fock::wedge_state(w, &z).unwrap().inner(&fock::wedge_state(w, &x).unwrap());
        worst = worst.max((p - f).norm() / p.norm().max(1.0));
    }
    let reference = Polarization::h_minus(w);
    let u = sampling::random_unitary(w, &mut rng);
    let moved = reference.transformed(&u).map_err(|e| e.to_string())?;
    admissible_basis(&moved, &reference, true).map_err(|e| e.to_string())?;
    // Cutoff-scan trends: the Furry vacuum approaches the Q-rotated one, stably in N.
    let model = LatticeModel::new(1.0, 2.0 * PI, 8, 1.0).unwrap();
    let a1 = FourierFunction::new(vec![c64(0.15, 0.0), c64(0.0, 0.0), c64(0.15, 0.0)], true).unwrap();
    let field = FieldConfig::pulse(Component::A1, a1, Envelope::new(EnvelopeKind::Const, -1.0, 1.0).unwrap()).unwrap();
    let mut rows = Vec::new();
    for n in [8, 16, 32] {
        let r = furry_projector(&model.with_cutoff(n).unwrap(), &field, 0.0).map_err(|e| e.to_string())?;
        rows.push((r.hs_to_free, r.hs_to_rotated));
    }
    let stable = rows.windows(2).all(|p| (p[1].0 - p[0].0).abs() <= 0.1 * p[0].0) && rows.iter().all(|r| r.1 < 0.5 * r.0);
    ensure(worst <= 1e-12 && stable, format!("plücker {worst:.2e}, furry {rows:?}"))?;
    Ok(format!(
        "infinite-dimensional non-implementability not reproducible at finite cutoff; substitutes: Plücker = Fock inner product ({worst:.1e}), Furry distances (free, rotated) over N=8,16,32: {}",
        rows.iter().map(|r| format!("({:.4},{:.4})", r.0, r.1)).collect::<Vec<_>>().join(" ")
    ))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("Shale-Stinespring identity", criterion_1),
        ("CAR suite", criterion_2),
        ("anomaly", criterion_3),
        ("group cocycle", criterion_4),
        ("loop-group witness", criterion_5),
        ("holonomy", criterion_6),
        ("semigroup and causality", criterion_7),
        ("Bogoliubov implementer", criterion_8),
        ("Dyson certificates", criterion_9),
        ("Q operator", criterion_10),
        ("gauge", criterion_11),
        ("finite substitutes", criterion_12),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.2}s]", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.2}s]", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
