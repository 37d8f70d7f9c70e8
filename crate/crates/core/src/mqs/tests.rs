use super::*;
use crate::design::VShapeLayout;
use crate::linalg::norm;
use crate::materials::MaterialId;

fn model(h: f64, materials: MaterialSet) -> MqsModel {
    MqsModel::new(&MachineGeometry::default(), h, materials).unwrap()
}

#[test]
fn rotor_interior_dofs_do_not_depend_on_the_step() {
    let m = model(2.0e-3, MaterialSet::default());
    for v in 0..m.mesh.n_nodes() {
        if m.mesh.node_part[v] == Part::Rotor && !m.mesh.rotor_interface.contains(&v) {
            for n in 1..m.n_steps() {
                assert_eq!(m.maps[0].expand(v), m.maps[n].expand(v));
            }
        }
    }
    for e in m.mesh.edges_with(BoundaryLabel::OuterStator) {
        assert!(m.maps[0].expand(e.nodes[0]).is_empty());
    }
}

#[test]
fn no_sources_give_zero_field() {
    let m = model(2.0e-3, MaterialSet::default());
    let d = DesignState::uniform(&m.mesh, MaterialId::Iron);
    let grid = m.time_grid(300.0).unwrap();
    let f = m.solve(&d, &CurrentExcitation::new(0.0, 0.0), &grid, SolveRequest::default()).unwrap();
    assert!(f.snapshots.iter().all(|a| a.iter().all(|&v| v == 0.0)));
    assert_eq!(m.average_torque(&f), 0.0);
}

#[test]
fn linear_problem_converges_in_one_newton_step() {
    let m = model(2.0e-3, MaterialSet::default().linearized(1000.0));
    let d = VShapeLayout::default().design(&m.mesh);
    let grid = m.time_grid(0.0).unwrap();
    let f = m.solve(&d, &CurrentExcitation::new(10.0, 0.3), &grid, SolveRequest::default()).unwrap();
    assert!(f.report.iterations <= 1, "{:?}", f.report);
}

#[test]
fn nonlinear_newton_reaches_tolerance_quadratically() {
    let m = model(2.0e-3, MaterialSet::default());
    let d = VShapeLayout::default().design(&m.mesh);
    let grid = m.time_grid(0.0).unwrap();
    let f = m.solve(&d, &CurrentExcitation::new(20.0, 0.5), &grid, SolveRequest::default()).unwrap();
    let r = m.residual(&f, None);
    let rn: f64 = r.iter().map(|x| norm(x).powi(2)).sum::<f64>().sqrt();
    assert!(rn <= 1e-8 * f.report.reference * 1.0001, "{rn} vs {}", f.report.reference);
    assert!(f.report.iterations <= 30, "{:?}", f.report);
    let r = &f.report.residuals;
    let k = r.len() - 1;
    // superlinear tail
    assert!(r[k] / r[k - 1] < 1e-2 && r[k - 1] / r[k - 2] < 0.5, "{r:?}");
}

#[test]
fn mortar_and_maxwell_torque_agree_on_a_coarse_mesh() {
    let m = model(2.0e-3, MaterialSet::default());
    let d = VShapeLayout::default().design(&m.mesh);
    let grid = m.time_grid(0.0).unwrap();
    let f = m.solve(&d, &CurrentExcitation::new(15.0, 0.6), &grid, SolveRequest::default()).unwrap();
    let g = &m.geometry;
    let r = 0.5 * (g.interface_radius + g.stator_inner_radius);
    let mortar = m.average_torque(&f);
    let maxwell: f64 = f.snapshots.iter().map(|a| m.maxwell_stress_torque(a, r).unwrap()).sum::<f64>()
        / f.snapshots.len() as f64;
    assert!(mortar.abs() > 1.0, "{mortar}");
    assert!((mortar - maxwell).abs() < 0.05 * mortar.abs(), "{mortar} vs {maxwell}");
    let averaged: f64 = f.snapshots.iter().map(|a| m.airgap_maxwell_torque(a)).sum::<f64>() / f.snapshots.len() as f64;
    assert!((mortar - averaged).abs() < 0.02 * mortar.abs(), "{mortar} vs {averaged}");
    assert!(m.maxwell_stress_torque(&f.snapshots[0], 0.06).is_err());
}

#[test]
fn torque_gradient_matches_finite_differences() {
    let m = model(2.2e-3, MaterialSet::default().linearized(500.0));
    let d = VShapeLayout::default().design(&m.mesh);
    let grid = m.time_grid(0.0).unwrap();
    let f = m.solve(&d, &CurrentExcitation::new(10.0, 0.4), &grid, SolveRequest::default()).unwrap();
    let a = &f.snapshots[2];
    let g = m.step_torque_gradient(a);
    let dir: Vec<f64> = (0..a.len()).map(|k| ((k * 7919) % 13) as f64 / 13.0 - 0.5).collect();
    let eps = 1e-4 * norm(a) / norm(&dir);
    let ap: Vec<f64> = a.iter().zip(&dir).map(|(x, y)| x + eps * y).collect();
    let am: Vec<f64> = a.iter().zip(&dir).map(|(x, y)| x - eps * y).collect();
    let fd = (m.step_torque(&ap) - m.step_torque(&am)) / (2.0 * eps);
    let an: f64 = g.iter().zip(&dir).map(|(x, y)| x * y).sum();
    assert!((fd - an).abs() < 1e-6 * an.abs().max(1e-12), "{fd} vs {an}");
}

#[test]
fn monolithic_and_fixed_point_periodic_solutions_agree() {
    let m = model(2.2e-3, MaterialSet::default().linearized(1000.0));
    let d = VShapeLayout::default().design(&m.mesh);
    let grid = m.time_grid(600.0).unwrap();
    let exc = CurrentExcitation::new(10.0, 0.4);
    let req = SolveRequest {
        with_eddies: true,
        ..Default::default()
    };
    let mono = m.solve(&d, &exc, &grid, req).unwrap();
    let fp = m
        .solve(&d, &exc, &grid, SolveRequest { fixed_point: true, ..req })
        .unwrap();
    let diff: f64 = mono.free.concat().iter().zip(fp.free.concat()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    assert!(diff < 1e-5 * norm(&mono.free.concat()), "{diff}");
    let p = m.ec_losses(&m.ec_loss_density(&mono));
    assert!(p > 0.0);
}

#[test]
fn ec_density_of_opposite_increments() {
    let p = ec_density(&[1.0, 1.0], &[vec![1.0, -1.0]], 2.0, 1.0);
    assert_eq!(p, vec![2.0, 2.0]);
    let uniform = ec_density(&[1.0, 3.0], &[vec![0.7, 0.7], vec![-2.0, -2.0]], 5.0, 0.1);
    assert!(uniform.iter().all(|&x| x == 0.0));
    assert!(ec_density(&[1.0], &[vec![1.0]], 1.0, f64::INFINITY)[0] == 0.0);
}

#[test]
fn ec_density_gradient_matches_finite_differences() {
    let areas = [1.0, 2.0, 0.5];
    let inc = vec![vec![0.3, -0.1, 0.7], vec![-0.2, 0.4, 0.1]];
    let w = [0.2, -1.0, 0.6];
    let g = ec_density_gradient(&areas, &inc, 3.0, 0.2, &w);
    let f = |inc: &[Vec<f64>]| -> f64 {
        ec_density(&areas, inc, 3.0, 0.2).iter().zip(&w).map(|(p, w)| p * w).sum()
    };
    for n in 0..2 {
        for k in 0..3 {
            let mut ip = inc.clone();
            let mut im = inc.clone();
            ip[n][k] += 1e-6;
            im[n][k] -= 1e-6;
            let fd = (f(&ip) - f(&im)) / 2e-6;
            assert!((fd - g[n][k]).abs() < 1e-7, "{fd} {}", g[n][k]);
        }
    }
}

#[test]
fn energy_balance_closes_with_eddy_currents() {
    let m = model(2.2e-3, MaterialSet::default());
    let d = VShapeLayout::default().design(&m.mesh);
    let grid = m.time_grid(2.0 * std::f64::consts::PI * 6000.0 / 60.0).unwrap();
    let req = SolveRequest {
        with_eddies: true,
        ..Default::default()
    };
    let f = m.solve(&d, &CurrentExcitation::new(15.0, 0.7), &grid, req).unwrap();
    let e = m.energy_balance(&f);
    assert!(e.relative_error() < 0.05, "{e:?}");
}

#[test]
fn slot_current_density_follows_the_phase_pattern() {
    let m = model(2.0e-3, MaterialSet::default());
    let grid = m.time_grid(100.0).unwrap();
    let exc = CurrentExcitation::new(10.0, 0.0);
    let j = m.current_density(&exc, 0, &grid);
    let a = m.mesh.triangles_in(Region::WindingAPlus)[0];
    let c = m.mesh.triangles_in(Region::WindingCMinus)[0];
    assert_eq!(j[a], 0.0);
    let jhat = 60.0 * 10.0 / m.slot_area();
    assert!((j[c] - jhat * (2.0 * std::f64::consts::PI / 3.0).sin()).abs() < 1e-9 * jhat);
    assert!((m.slot_area() - m.mesh.region_measure(Region::WindingAPlus) / 2.0).abs() < 1e-15);
}

