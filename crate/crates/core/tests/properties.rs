use compensator_bounds::chain::{doob_decompose, sample_intro_path, IntroKernel};
use compensator_bounds::recursion::{g, g_prime, g_prime_parts, sup_g, SolverConfig};
use compensator_bounds::shift::{
    expect_f, random_instance, shift_gap, shift_gap_inverse_form, DiscreteRV, ScanConfig,
};
use compensator_bounds::FunctionSpec;
use proptest::prelude::*;

fn any_spec() -> impl Strategy<Value = FunctionSpec> {
    prop_oneof![
        (0.05f64..3.0).prop_map(|lambda| FunctionSpec::Exponential { lambda }),
        (1.0f64..4.0).prop_map(|m| FunctionSpec::Power { m }),
        Just(FunctionSpec::QuadConcaveDeriv),
        Just(FunctionSpec::Remark2Piecewise),
    ]
}

fn class_s_spec() -> impl Strategy<Value = FunctionSpec> {
    prop_oneof![
        (0.05f64..3.0).prop_map(|lambda| FunctionSpec::Exponential { lambda }),
        (1.0f64..4.0).prop_map(|m| FunctionSpec::Power { m }),
        Just(FunctionSpec::QuadConcaveDeriv),
    ]
}

fn rv() -> impl Strategy<Value = DiscreteRV> {
    prop::collection::vec((0.0f64..3.0, 0.01f64..1.0), 1..=6).prop_map(|pairs| {
        let (values, weights): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        DiscreteRV::from_weights(&values, &weights).unwrap()
    })
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(512))]

    #[test]
    fn eval_is_strictly_increasing(spec in any_spec(), x in 0.0f64..20.0, dx in 1e-6f64..5.0) {
        prop_assert!(spec.eval(x + dx).unwrap() > spec.eval(x).unwrap());
    }

    #[test]
    fn inverse_undoes_eval(spec in any_spec(), x in 0.0f64..20.0) {
        let y = spec.eval(x).unwrap();
        let back = spec.inverse(y).unwrap();
        prop_assert!(rel_close(spec.eval(back).unwrap(), y, 1e-10));
        prop_assert!((back - x).abs() <= 1e-10 * x.max(1.0));
    }

    #[test]
    fn spec_display_round_trips(spec in any_spec()) {
        let text = spec.to_string();
        prop_assert_eq!(text.parse::<FunctionSpec>().unwrap(), spec);
    }

    #[test]
    fn zero_shift_has_zero_gap(spec in any_spec(), y in rv()) {
        prop_assert!(shift_gap(&spec, 0.0, &y).unwrap().abs() <= 1e-12 * spec.eval(3.0).unwrap().max(1.0));
    }

    #[test]
    fn exponentials_are_the_equality_case(lambda in 0.05f64..3.0, a in 0.0f64..2.0, y in rv()) {
        let spec = FunctionSpec::Exponential { lambda };
        let gap = shift_gap(&spec, a, &y).unwrap();
        let scale = spec.eval(a + 3.0).unwrap();
        prop_assert!(gap.abs() <= 1e-9 * scale, "gap {}", gap);
    }

    #[test]
    fn class_s_gap_is_nonnegative(spec in class_s_spec(), a in 0.0f64..2.0, y in rv()) {
        let gap = shift_gap(&spec, a, &y).unwrap();
        let scale = spec.eval(a + 3.0).unwrap().max(1.0);
        prop_assert!(gap >= -1e-9 * scale, "{} gap {}", spec, gap);
    }

    #[test]
    fn inverse_form_has_the_same_sign(spec in any_spec(), a in 0.0f64..2.0, y in rv()) {
        let gap = shift_gap(&spec, a, &y).unwrap();
        let inv = shift_gap_inverse_form(&spec, a, &y).unwrap();
        if gap.abs() > 1e-9 {
            prop_assert_eq!(gap > 0.0, inv > 0.0, "gap {} inverse form {}", gap, inv);
        }
    }

    #[test]
    fn g_prime_matches_finite_differences(spec in any_spec(), a in 0.01f64..0.99, u in 0.0f64..3.0) {
        prop_assume!(spec != FunctionSpec::Remark2Piecewise || (a + u - 1.0).abs() > 1e-4);
        let b = spec.eval(u).unwrap();
        let h = 1e-6;
        let fd = (g(&spec, a + h, b).unwrap() - g(&spec, a - h, b).unwrap()) / (2.0 * h);
        let exact = g_prime(&spec, a, b).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1.0), "fd {} exact {}", fd, exact);
    }

    #[test]
    fn g_prime_parts_reassemble(spec in any_spec(), a in 0.0f64..1.0, u in 0.0f64..3.0) {
        let b = spec.eval(u).unwrap();
        let (fa, h1, h2) = g_prime_parts(&spec, a, b).unwrap();
        let exact = g_prime(&spec, a, b).unwrap();
        prop_assert!(rel_close(fa + a * h1 + h2, exact, 1e-12));
    }

    #[test]
    fn sup_g_dominates_its_argument(spec in any_spec(), u in 0.0f64..5.0) {
        let b = spec.eval(u).unwrap();
        let s = sup_g(&spec, b, &SolverConfig::default()).unwrap();
        prop_assert!(s.value >= b - 1e-12 * b.max(1.0));
        prop_assert!((0.0..=1.0).contains(&s.a_star));
    }

    #[test]
    fn intro_paths_decompose(n in 1usize..40, seed in any::<u64>(), path in 0u64..1000) {
        let x = sample_intro_path(n, seed, path);
        let s = doob_decompose(&x, 0.0, &IntroKernel).unwrap();
        prop_assert!(s.doob_residual() <= 1e-15);
        prop_assert!(s.x.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(s.y.windows(2).all(|w| w[1] >= w[0]));
    }
}

#[test]
fn inverse_form_on_scan_instances() {
    let cfg = ScanConfig::default();
    for spec in [
        FunctionSpec::Exponential { lambda: 0.5 },
        FunctionSpec::Exponential { lambda: 2.0 },
        FunctionSpec::Power { m: 1.0 },
        FunctionSpec::Power { m: 2.0 },
        FunctionSpec::Power { m: 3.0 },
        FunctionSpec::QuadConcaveDeriv,
    ] {
        for index in 1..=100 {
            let (a, y) = random_instance(&cfg, index);
            let lhs = spec.inverse(expect_f(&spec, &y, a).unwrap()).unwrap();
            let rhs = a + spec.inverse(expect_f(&spec, &y, 0.0).unwrap()).unwrap();
            assert!(lhs <= rhs + 1e-9, "{spec} instance {index}: {lhs} > {rhs}");
        }
    }
}
