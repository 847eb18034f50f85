//! End-to-end runs through the public API: config to mesh, solve, and the
//! inequality checks on a solution family.

use std::sync::Arc;

use uc_lab::config::LabConfig;
use uc_lab::estimator::{fit_family, BallRadii, ThreeBallProbe};
use uc_lab::experiments::{solution_family, FamilyConfig, HarmonicBasis};
use uc_lab::geometry::vitali_cover;
use uc_lab::rng::stream;
use uc_lab::solver::{build_mesh, io, verify_transmission, DirichletSolver, ExactFlatSolution};
use uc_lab::Point2;

#[test]
fn config_to_transmission_report() {
    let cfg = LabConfig::from_json(r#"{"mesh_size": 0.05, "coefficients": {"a_plus": 10, "a_minus": 1}}"#).unwrap();
    let spec = cfg.domain().unwrap();
    let coeffs = cfg.coefficients().unwrap();
    let mesh = Arc::new(build_mesh(&spec, cfg.mesh_size).unwrap());

    let mut text = Vec::new();
    io::write_mesh(&mesh, &mut text).unwrap();
    let back = io::read_mesh(&text[..]).unwrap();
    assert_eq!(back.nodes, mesh.nodes);
    assert_eq!(back.triangles, mesh.triangles);
    assert_eq!(back.sides, mesh.sides);

    let exact = ExactFlatSolution::new(10.0, 1.0, 2.0, 0.5).unwrap();
    let solver = DirichletSolver::new(mesh, &coeffs).unwrap();
    let u = solver.solve_trace(|p| exact.value(p), None).unwrap();
    let report = verify_transmission(&u, &coeffs);
    assert_eq!(report.jump_u, 0.0);
    assert!(u.l2_error(|p| exact.value(p)) < 1e-2);
}

#[test]
fn parabolic_family_satisfies_fitted_three_ball_envelope() {
    let cfg = LabConfig::from_json(
        r#"{"interface": {"kind": "parabola", "params": {"y0": 0.4, "c": 0.5, "xc": 0.5}}, "mesh_size": 0.05}"#,
    )
    .unwrap();
    let spec = cfg.domain().unwrap();
    let coeffs = cfg.coefficients().unwrap();
    let mesh = Arc::new(build_mesh(&spec, cfg.mesh_size).unwrap());
    let basis = HarmonicBasis::full(mesh.clone(), &coeffs).unwrap();
    let fam_cfg = FamilyConfig { random_fields: 12, ..FamilyConfig::default() };
    let family = solution_family(&basis, &spec.interface, 2.0, 1.0, &fam_cfg, &mut stream(3, 0)).unwrap();
    assert_eq!(family.len(), 12);

    let radii = BallRadii::new(0.05, 0.15, 0.35).unwrap();
    let probe = ThreeBallProbe::new(&mesh, &spec.omega, Point2::new(0.5, 0.45), radii).unwrap();
    let samples: Vec<_> = family.iter().map(|f| probe.sample(f, 0.0)).collect();
    let (fit, reports) = fit_family(&samples, 0.01, None).unwrap();
    assert!(fit.delta > 0.0 && fit.delta < 1.0);
    assert!(reports.iter().all(|r| r.slack >= -1e-12));
}

#[test]
fn vitali_cover_on_curved_interface() {
    let cfg = LabConfig::from_json(
        r#"{"interface": {"kind": "spline", "params": {"xs": [0, 0.5, 1], "ys": [0.4, 0.55, 0.45]}}}"#,
    )
    .unwrap();
    let spec = cfg.domain().unwrap();
    let cover = vitali_cover(&spec, 0.2, 0.05).unwrap();
    assert!(!cover.is_empty());
    assert!(cover.min_separation() >= 2.0 * cover.radius);
    assert!((cover.len() as f64) <= cover.count_bound());
}
