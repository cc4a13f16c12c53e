use std::f64::consts::TAU;
use std::sync::Arc;

use approx::assert_relative_eq;
use logschro::calculus::{FieldCoefficients, Mass};
use logschro::forward::{ForwardOperator, PotentialField};
use logschro::gelfand::{extract_exponents, PencilOptions};
use logschro::manifold::{build_model, ModelKind, SpectralModel};
use proptest::prelude::*;

fn circle(k: usize) -> Arc<SpectralModel> {
    Arc::new(build_model(ModelKind::Circle { radius: 1.0 }, k, None).unwrap())
}

fn torus() -> Arc<SpectralModel> {
    Arc::new(build_model(ModelKind::FlatTorus { edges: vec![TAU, 4.0] }, 6, None).unwrap())
}

fn field(model: &Arc<SpectralModel>, raw: &[f64]) -> FieldCoefficients {
    let c: Vec<f64> = (0..model.basis_len()).map(|i| raw[i % raw.len()] / (1.0 + i as f64)).collect();
    FieldCoefficients::new(model.clone(), c).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn l_multiplier_is_positive_and_increasing(m in 1.0001f64..20.0, a in 0.0f64..500.0, d in 1e-3f64..50.0) {
        let mass = Mass::new(m).unwrap();
        prop_assert!(mass.l_multiplier(a) > 0.0);
        prop_assert!(mass.l_multiplier(a + d) > mass.l_multiplier(a));
    }

    #[test]
    fn heat_flow_is_a_semigroup(raw in prop::collection::vec(-1.0f64..1.0, 5), s in 0.0f64..2.0, t in 0.0f64..2.0) {
        let m = torus();
        let mass = Mass::new(1.5).unwrap();
        let u = field(&m, &raw);
        let two_steps = u.heat_apply(mass, s).unwrap().heat_apply(mass, t).unwrap();
        let one_step = u.heat_apply(mass, s + t).unwrap();
        for (a, b) in two_steps.coeffs().iter().zip(one_step.coeffs()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-14, max_relative = 1e-12);
        }
    }

    #[test]
    fn solve_inverts_apply(raw in prop::collection::vec(-1.0f64..1.0, 7), amp in -0.4f64..0.4) {
        let m = circle(8);
        let v = PotentialField::global("cos", move |p| amp * p.coords[0].cos());
        let op = ForwardOperator::new(m.clone(), Mass::new(2.0).unwrap(), &v).unwrap();
        let u = field(&m, &raw);
        let f = FieldCoefficients::new(m.clone(), op.apply(u.coeffs())).unwrap();
        let back = op.solve(&f).unwrap();
        for (a, b) in back.field.coeffs().iter().zip(u.coeffs()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn operator_is_symmetric(a in prop::collection::vec(-1.0f64..1.0, 4), b in prop::collection::vec(-1.0f64..1.0, 6), amp in 0.0f64..0.5) {
        let m = circle(6);
        let v = PotentialField::global("shifted", move |p| amp * (p.coords[0] - 1.0).sin().powi(2));
        let op = ForwardOperator::new(m.clone(), Mass::new(3.0).unwrap(), &v).unwrap();
        let (u, w) = (field(&m, &a), field(&m, &b));
        let hu = FieldCoefficients::new(m.clone(), op.apply(u.coeffs())).unwrap();
        let hw = FieldCoefficients::new(m.clone(), op.apply(w.coeffs())).unwrap();
        assert_relative_eq!(hu.dot(&w), u.dot(&hw), epsilon = 1e-12);
    }

    #[test]
    fn pencil_recovers_two_rates(r1 in 0.5f64..2.0, gap in 0.5f64..3.0, a1 in 0.5f64..2.0, a2 in -2.0f64..-0.5) {
        let r2 = r1 + gap;
        let times: Vec<f64> = (0..40).map(|j| 0.05 * j as f64).collect();
        let y: Vec<f64> = times.iter().map(|&t| a1 * (-r1 * t).exp() + a2 * (-r2 * t).exp()).collect();
        let fit = extract_exponents(&times, &[y], 4, PencilOptions::default()).unwrap();
        prop_assert_eq!(fit.order(), 2);
        assert_relative_eq!(fit.exponents[0], r1, max_relative = 1e-7);
        assert_relative_eq!(fit.exponents[1], r2, max_relative = 1e-7);
        assert_relative_eq!(fit.amplitudes[0][0], a1, max_relative = 1e-6);
    }
}
