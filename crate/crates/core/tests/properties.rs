use curlgrid::diffops::{self, StencilConvention};
use curlgrid::monitor::{self, MonitorPair};
use curlgrid::optimizer::{self, OptimizerConfig};
use curlgrid::poisson::{self, SolverConfig};
use curlgrid::uniqueness::random_zero_boundary;
use curlgrid::{GridSpec, ScalarField, Transformation, VectorField};
use proptest::prelude::*;

fn grid_strategy() -> impl Strategy<Value = GridSpec> {
    prop_oneof![
        (3usize..20).prop_map(|n| GridSpec::new(2, n).unwrap()),
        (3usize..9).prop_map(|n| GridSpec::new(3, n).unwrap()),
    ]
}

fn field_pair() -> impl Strategy<Value = (GridSpec, Vec<f64>, Vec<f64>)> {
    grid_strategy().prop_flat_map(|g| {
        let v = proptest::collection::vec(-1e3f64..1e3, g.len());
        (Just(g), v.clone(), v)
    })
}

fn smooth_displacement(g: GridSpec, coeffs: &[f64]) -> VectorField {
    use std::f64::consts::PI;
    let dim = g.dim();
    VectorField::from_fn(g, dim, |x| {
        (0..dim)
            .map(|c| {
                let bump: f64 = (0..dim).map(|k| (PI * x[k]).sin()).product();
                bump * (coeffs[2 * c] + coeffs[2 * c + 1] * (2.0 * PI * x[(c + 1) % dim]).cos())
            })
            .collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn l2_norm_is_homogeneous((g, a, _) in field_pair(), alpha in -1e3f64..1e3) {
        let f = ScalarField::new(g, a).unwrap();
        let lhs = f.scale(alpha).l2_norm().unwrap();
        let rhs = alpha.abs() * f.l2_norm().unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.max(f64::MIN_POSITIVE));
    }

    #[test]
    fn l2_triangle_inequality((g, a, b) in field_pair()) {
        let f = ScalarField::new(g, a).unwrap();
        let h = ScalarField::new(g, b).unwrap();
        let sum = f.add(&h).unwrap().l2_norm().unwrap();
        let bound = f.l2_norm().unwrap() + h.l2_norm().unwrap();
        prop_assert!(sum <= bound * (1.0 + 1e-12));
    }

    #[test]
    fn expansion_identity_is_algebraic(g in grid_strategy(), seed in any::<u64>(), amp in 1e-3f64..1.0) {
        let u = random_zero_boundary(g, g.dim(), seed).scale(amp);
        let phi = Transformation::from_displacement(&u).unwrap();
        let jac = diffops::jacobian_det(&phi);
        let div = diffops::divergence(&u, StencilConvention::CENTRAL).unwrap();
        let f = diffops::expansion_f(&u).unwrap();
        let rebuilt = div.sub(&f).unwrap().map(|v| 1.0 + v);
        prop_assert!(jac.sub(&rebuilt).unwrap().max_norm() < 1e-12);
    }

    #[test]
    fn linear_fields_differentiate_exactly(g in grid_strategy(), a in proptest::collection::vec(-5f64..5.0, 4)) {
        let s = ScalarField::from_fn(g, |x| a[0] + a[1] * x[0] + a[2] * x[1] + a[3] * x[2]);
        let interior: Vec<usize> = g.interior_nodes().collect();
        for conv in [StencilConvention::CENTRAL, StencilConvention::SUMMATION_BY_PARTS] {
            let grad = diffops::gradient(&s, conv);
            for k in 0..g.dim() {
                for &i in &interior {
                    prop_assert!((grad.component(k).values()[i] - a[k + 1]).abs() < 1e-12);
                }
            }
        }
        let lap = diffops::laplacian(&s);
        prop_assert!(interior.iter().all(|&i| lap.values()[i].abs() < 1e-9));
    }

    #[test]
    fn laplacian_is_self_adjoint(g in grid_strategy(), s1 in any::<u64>(), s2 in any::<u64>()) {
        let a = random_zero_boundary(g, 1, s1).into_components().remove(0);
        let b = random_zero_boundary(g, 1, s2).into_components().remove(0);
        let lhs = a.dot(&diffops::laplacian(&b)).unwrap();
        let rhs = diffops::laplacian(&a).dot(&b).unwrap();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(rhs.abs()).max(1e-300));
    }

    #[test]
    fn spectral_solve_residual(g in grid_strategy(), seed in any::<u64>()) {
        let rhs = random_zero_boundary(g, 1, seed).into_components().remove(0);
        let s = poisson::solve_dirichlet(&rhs, &SolverConfig::default()).unwrap();
        let lap = diffops::laplacian(&s);
        let worst = g.interior_nodes().map(|i| (lap.values()[i] - rhs.values()[i]).abs()).fold(0.0, f64::max);
        prop_assert!(worst < 1e-11 * rhs.max_norm());
        prop_assert!(g.boundary_nodes().all(|i| s.values()[i] == 0.0));
    }

    #[test]
    fn projection_is_idempotent(n in 5usize..10, seed in any::<u64>()) {
        let g = GridSpec::new(3, n).unwrap();
        let cfg = SolverConfig::default();
        let raw = random_zero_boundary(g, 3, seed);
        let once = monitor::project_divergence_free(&raw, &cfg).unwrap();
        let twice = monitor::project_divergence_free(&once, &cfg).unwrap();
        prop_assert!(twice.sub(&once).unwrap().l2_norm().unwrap() < 1e-8);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn optimizer_traces_are_monotone_and_fix_the_boundary(
        coeffs in proptest::collection::vec(-0.03f64..0.03, 6),
        use_curl in any::<bool>(),
    ) {
        let g = GridSpec::new(2, 13).unwrap();
        let t0 = Transformation::from_displacement(&smooth_displacement(g, &coeffs)).unwrap();
        let cfg = OptimizerConfig { max_outer: 40, ..OptimizerConfig::default() };
        let (phi, trace) = optimizer::reconstruct(&t0, use_curl, &cfg).unwrap();
        for w in trace.records.windows(2) {
            prop_assert!(w[1].ssd < w[0].ssd);
        }
        let id = Transformation::identity(g);
        for (c, ic) in phi.positions().components().iter().zip(id.positions().components()) {
            for node in g.boundary_nodes() {
                prop_assert_eq!(c.values()[node], ic.values()[node]);
            }
        }
    }

    #[test]
    fn monitors_from_maps_are_valid(coeffs in proptest::collection::vec(-0.03f64..0.03, 6), use_curl in any::<bool>()) {
        let g = GridSpec::new(3, 7).unwrap();
        let t = Transformation::from_displacement(&smooth_displacement(g, &coeffs)).unwrap();
        let m: MonitorPair = monitor::monitor_from_transformation(&t, use_curl).unwrap();
        prop_assert!(m.f0().min_value() > 0.0);
        prop_assert!((m.f0().integral() - 1.0).abs() < 1e-10);
    }
}

#[test]
fn zero_residual_fixed_point() {
    let cfg = OptimizerConfig::default();
    for g in [GridSpec::new(2, 17).unwrap(), GridSpec::new(3, 9).unwrap()] {
        let id = Transformation::identity(g);
        let (next, value) = optimizer::optimizer_step(&id, &MonitorPair::uniform(g, true), 0.1, &cfg).unwrap();
        assert_eq!(value, 0.0);
        assert!(next.distance(&id).unwrap() <= cfg.solver.residual_tol);
    }
}
