use chebball::ccb::{self, SQP_GAP_TOL};
use chebball::gen::{generate, GenConfig};
use chebball::hardness::reduce_to_p0;
use chebball::io::{instance_to_json, parse_instance, Instance};
use chebball::lp::{uq_dlp, uq_lp, LpStatus};
use chebball::oracle::{sample_boundary, OracleConfig};
use chebball::planar::solve_planar;
use chebball::problem::{feasible, inner_uq, validate, CcbInstance, UqInstance};
use chebball::uq::{approx_round, solve_exact};
use nalgebra::DVector;
use proptest::prelude::*;

fn instance(dim: usize, max_balls: usize) -> impl Strategy<Value = CcbInstance> {
    (1..=max_balls, any::<u64>()).prop_map(move |(p, seed)| generate(&GenConfig::new(dim, p, seed)).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn planar_ball_covers_boundary_samples(inst in instance(2, 8)) {
        let sol = solve_planar(&inst).unwrap();
        let cfg = OracleConfig { samples: 10_000, ..OracleConfig::default() };
        for x in sample_boundary(&inst, &cfg) {
            prop_assert!((&x - &sol.center).norm_squared() <= sol.squared_radius + 1e-8);
        }
    }

    #[test]
    fn planar_center_beats_perturbations(inst in instance(2, 6), dx in -0.1..0.1f64, dy in -0.1..0.1f64) {
        let sol = solve_planar(&inst).unwrap();
        let moved = &sol.center + DVector::from_vec(vec![dx, dy]);
        prop_assert!(ccb::evaluate_center(&inst, &moved).unwrap() >= sol.squared_radius - 1e-9);
    }

    #[test]
    fn sqp_sandwich(inst in instance(3, 6)) {
        let sqp = ccb::solve_sqp(&inst, SQP_GAP_TOL).unwrap();
        let cert = ccb::sqp_certificate(&inst, &sqp).unwrap();
        prop_assert!(cert.sandwich_holds);
        let ell = ccb::solve_ccb_ellipsoid(&inst, 1e-6, usize::MAX).unwrap();
        prop_assert!(ell.squared_radius <= cert.achieved + 1e-6);
        prop_assert!(ell.squared_radius >= cert.ratio * sqp.value - 1e-6);
    }

    #[test]
    fn lp_and_dual_agree(inst in instance(3, 6), a0 in prop::collection::vec(-1.0..1.0f64, 3)) {
        let uq = inner_uq(&inst, &DVector::from_vec(a0)).unwrap();
        let primal = uq_lp(&uq).unwrap();
        let dual = uq_dlp(&uq).unwrap();
        // An unbounded relaxation corresponds to an infeasible dual.
        prop_assert_eq!(primal.is_finite(), dual.is_finite());
        prop_assert_eq!(primal.status == LpStatus::Unbounded, dual.status == LpStatus::Infeasible);
        if primal.is_finite() {
            prop_assert!((primal.value - dual.value).abs() <= 1e-7 * primal.value.abs().max(1.0));
            let exact = solve_exact(&uq).unwrap();
            prop_assert!(exact.value <= primal.value + 1e-7 * primal.value.abs().max(1.0));
        }
    }

    #[test]
    fn exact_solution_is_feasible(inst in instance(3, 5), a0 in prop::collection::vec(-2.0..2.0f64, 3)) {
        let uq = inner_uq(&inst, &DVector::from_vec(a0)).unwrap();
        let sol = solve_exact(&uq).unwrap();
        prop_assert!(feasible(&uq, &sol.x, 1e-7));
        prop_assert!((uq.objective(&sol.x) - sol.value).abs() <= 1e-9 * sol.value.abs().max(1.0));
    }

    #[test]
    fn rounding_is_feasible_and_bounded(inst in instance(2, 5), a0 in prop::collection::vec(-1.0..1.0f64, 2)) {
        let x0 = validate(&inst).unwrap().point;
        let uq = inner_uq(&inst, &DVector::from_vec(a0)).unwrap();
        let rc = chebball::recenter(&uq, &x0, 1e-9).unwrap().instance;
        let sol = approx_round(&rc).unwrap();
        let exact = solve_exact(&rc).unwrap();
        prop_assert!(feasible(&rc, &sol.x, 1e-9));
        prop_assert!(sol.value <= exact.value + 1e-7 * exact.value.abs().max(1.0));
    }

    #[test]
    fn reduction_is_sign_symmetric(a in prop::collection::vec(-4i64..=4, 1..=4)) {
        let flipped: Vec<i64> = a.iter().map(|v| -v).collect();
        let (uq, _) = reduce_to_p0(&a).unwrap();
        let (uq_f, _) = reduce_to_p0(&flipped).unwrap();
        let v = solve_exact(&uq).unwrap().value;
        let v_f = solve_exact(&uq_f).unwrap().value;
        prop_assert!((v - v_f).abs() <= 1e-9);
        prop_assert!(v <= a.len() as f64 + 1e-9);
    }

    #[test]
    fn instance_files_round_trip(inst in instance(3, 4)) {
        let text = instance_to_json(&Instance::Ccb(inst.clone()));
        let back = parse_instance(&text).unwrap();
        prop_assert_eq!(instance_to_json(&back), text);
        prop_assert_eq!(back, Instance::Ccb(inst));
    }
}

#[test]
fn uq_files_round_trip() {
    let uq = UqInstance::from_parts(&[0.25, -1.0], &[(&[0.1, 0.2], -3.0), (&[-1.5, 0.0], 0.5)]).unwrap();
    let text = instance_to_json(&Instance::Uq(uq.clone()));
    assert_eq!(parse_instance(&text).unwrap(), Instance::Uq(uq));
}
