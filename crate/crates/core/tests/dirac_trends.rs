use std::f64::consts::PI;

use resfock::c64;
use resfock::dirac1d::*;
use resfock::loopgroup::FourierFunction;

fn model(n: usize) -> LatticeModel {
    LatticeModel::new(1.0, 2.0 * PI, n, 1.0).unwrap()
}

fn real(c: &[(f64, f64)]) -> FourierFunction {
    FourierFunction::new(c.iter().map(|&(a, b)| c64(a, b)).collect(), true).unwrap()
}

fn static_field(component: Component, g: FourierFunction) -> FieldConfig {
    FieldConfig::pulse(component, g, Envelope::new(EnvelopeKind::Const, -1.0, 1.0).unwrap()).unwrap()
}

#[test]
fn furry_distance_is_linear_in_weak_a0() {
    let m = model(6);
    let d = |s: f64| {
        let f = static_field(Component::A0, real(&[(0.5 * s, 0.3 * s), (0.0, 0.0), (0.5 * s, -0.3 * s)]));
        furry_projector(&m, &f, 0.0).unwrap().hs_to_free
    };
    let (d1, d2) = (d(0.01), d(0.02));
    let slope = (d2 / d1).log2();
    assert!((slope - 1.0).abs() < 0.01, "slope {slope}");
}

#[test]
fn mass_gap_with_spatial_field_only() {
    for n in [4, 8] {
        let f = static_field(Component::A1, real(&[(0.4, 0.8), (1.1, 0.0), (0.4, -0.8)]));
        let r = furry_projector(&model(n), &f, 0.0).unwrap();
        assert!(r.min_abs_eigenvalue >= 1.0 - 1e-12, "{}", r.min_abs_eigenvalue);
        assert!(!r.near_zero);
    }
}

#[test]
fn renormalization_depends_on_field_at_that_time() {
    let m = model(3);
    let g = real(&[(0.3, 0.1), (0.2, 0.0), (0.3, -0.1)]);
    let base = FieldConfig::pulse(Component::A1, g.clone(), Envelope::new(EnvelopeKind::Gaussian, 0.0, 2.0).unwrap()).unwrap();
    let altered = base.plus(&FieldConfig::pulse(Component::A0, g, Envelope::new(EnvelopeKind::Bump, 1.5, 2.5).unwrap()).unwrap());
    let a = q_operator(&m, &base, 0.7).unwrap();
    let b = q_operator(&m, &altered, 0.7).unwrap();
    assert_eq!(a.matrix(), b.matrix());
    assert_ne!(q_operator(&m, &altered, 1.8).unwrap().matrix(), q_operator(&m, &base, 1.8).unwrap().matrix());
}

#[test]
fn constant_a0_has_no_odd_part_at_any_cutoff() {
    let f = FieldConfig::pulse(Component::A0, FourierFunction::constant(c64(0.9, 0.0)), Envelope::new(EnvelopeKind::Bump, 0.0, 1.0).unwrap())
        .unwrap();
    let rows = cutoff_scan(&model(4), &f, -0.1, 0.5, &[4, 8, 16], &EvolveOptions::default()).unwrap();
    for r in rows {
        assert!(r.raw_hs < 1e-14 && r.renormalized_hs < 1e-14, "{r:?}");
    }
}

#[test]
fn a1_pulse_defects_settle_with_cutoff() {
    let m = LatticeModel::new(1.0, 4.0 * PI, 8, 1.0).unwrap();
    let f = FieldConfig::pulse(Component::A1, real(&[(0.3, 0.0), (0.0, 0.0), (0.3, 0.0)]), Envelope::new(EnvelopeKind::Bump, 0.0, 1.0).unwrap())
        .unwrap();
    let rows = cutoff_scan(&m, &f, -0.1, 0.5, &[8, 16, 32], &EvolveOptions::default()).unwrap();
    let steps: Vec<f64> = rows.windows(2).map(|w| (w[1].renormalized_hs - w[0].renormalized_hs).abs()).collect();
    assert!(steps[1] <= steps[0], "{rows:?}");
    assert!(scan_variation(&rows) < 0.1);
}

#[test]
fn detour_changes_phase_by_loop_holonomy() {
    let m = model(2);
    let f = FieldConfig::pulse(Component::A1, real(&[(0.4, 0.2), (0.3, 0.0), (0.4, -0.2)]), Envelope::new(EnvelopeKind::Bump, 0.0, 1.0).unwrap())
        .unwrap();
    for delta in [0.25, 0.6] {
        let r = detour_check(&m, &f, delta, 512, &PipelineOptions::default()).unwrap();
        assert!(r.err < 1e-6, "{r:?}");
        let target = c64(0.0, 2.0 * PI * delta).exp();
        assert!((r.ratio - target).norm() < 1e-6);
    }
}

#[test]
fn pipeline_reports_fock_data() {
    let m = model(3);
    let f = FieldConfig::pulse(Component::A0, real(&[(0.2, 0.1), (0.1, 0.0), (0.2, -0.1)]), Envelope::new(EnvelopeKind::Gaussian, 0.0, 1.0).unwrap())
        .unwrap();
    let r = scattering_pipeline(&m, &f, &PipelineOptions::default()).unwrap();
    assert!(r.s_unitarity < 1e-9);
    assert!((r.phase.norm() - r.fock.vacuum_persistence).abs() < 0.2);
    assert!(r.fock.vacuum_persistence > 0.5 && r.fock.vacuum_persistence <= 1.0 + 1e-12);
    assert_eq!(r.fock.particles, r.fock.holes);
}
