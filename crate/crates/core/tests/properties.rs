use approx::assert_abs_diff_eq;
use nilreturn::oracle::{numeric_return, DEFAULT_TOL};
use nilreturn::retmap::{classify, closed_form_leading, return_map, Classification};
use nilreturn::sysnorm::{normalize, SystemSpec, DEFAULT_WORKING_ORDER};
use proptest::prelude::*;

fn pair() -> impl Strategy<Value = (u32, u32)> {
    (1u32..=3, 0u32..=4).prop_filter("k < l + 1", |(k, l)| *k < *l + 1)
}

fn coeffs() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0f64..1.0, 1..4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn low_order_coefficients_vanish((k, l) in pair(), g in coeffs(), f1 in -0.5f64..0.5) {
        let s = SystemSpec::new(vec![1.0, f1], g, k, l);
        let p = s.p() as usize;
        let res = return_map(&s, p + 2).unwrap();
        prop_assert_eq!(res.coeffs()[0], 0.0);
        prop_assert_eq!(res.coeffs()[1], 1.0);
        for n in 2..=p {
            prop_assert!(res.coeffs()[n].abs() <= 1e-12, "Z_{} = {}", n, res.coeffs()[n]);
        }
    }

    #[test]
    fn common_rescaling_of_f_and_g((k, l) in pair(), g in coeffs(), f1 in -0.5f64..0.5, lambda in 0.2f64..5.0) {
        let a = return_map(&SystemSpec::new(vec![1.0, f1], g.clone(), k, l), 8).unwrap();
        let scaled_g: Vec<f64> = g.iter().map(|c| lambda * c).collect();
        let b = return_map(&SystemSpec::new(vec![lambda, lambda * f1], scaled_g, k, l), 8).unwrap();
        for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
            prop_assert!((x - y).abs() <= 1e-10 * (1.0 + x.abs()));
        }
    }

    #[test]
    fn leading_term_matches_closed_form((k, l) in pair(), g in coeffs()) {
        let s = SystemSpec::new(vec![1.0], g, k, l);
        let p = s.p() as usize;
        let res = return_map(&s, p + 2).unwrap();
        let (c1, c2) = closed_form_leading(&normalize(&s, DEFAULT_WORKING_ORDER).unwrap());
        prop_assert!((res.coeffs()[p + 1] - c1).abs() <= 1e-8);
        prop_assert!((res.coeffs()[p + 2] - c2).abs() <= 1e-8);
    }

    #[test]
    fn even_parity_focus_sign_follows_f0((k, l) in pair(), g0 in prop_oneof![-2.0f64..-0.1, 0.1f64..2.0]) {
        // p + k - 1 = l
        prop_assume!(l % 2 == 0);
        let s = SystemSpec::new(vec![1.0], vec![g0], k, l);
        let p = s.p() as usize;
        match classify(&return_map(&s, p + 2).unwrap(), 1e-7) {
            Classification::Focus { order, sign } => {
                prop_assert_eq!(order, p + 1);
                let positive = matches!(sign, nilreturn::retmap::Sign::Positive);
                prop_assert_eq!(positive, g0 > 0.0);
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn oracle_completes_one_loop((k, l) in pair(), g in coeffs(), eps in 0.02f64..0.08) {
        let s = SystemSpec::new(vec![1.0], g, k, l);
        let c = numeric_return(&s, eps, 1e-11).unwrap();
        prop_assert_eq!(c.half_turns, 2);
        prop_assert!(c.z_return > 0.0);
    }
}

#[test]
fn even_degree_center_returns_identically() {
    // k = 2, l = 3, F = 1: every coefficient vanishes, and the orbit closes.
    let s = SystemSpec::new(vec![1.0], vec![1.0], 2, 3);
    let res = return_map(&s, DEFAULT_WORKING_ORDER).unwrap();
    assert!(res.coeffs()[2..].iter().all(|z| z.abs() <= 1e-12), "{:?}", res.coeffs());
    for eps in [0.04, 0.08] {
        let c = numeric_return(&s, eps, DEFAULT_TOL).unwrap();
        assert_abs_diff_eq!(c.z_return, eps, epsilon = 1e-13);
    }
}

#[test]
fn negative_f_reverses_time_but_not_the_map() {
    let a = return_map(&SystemSpec::new(vec![1.0, 0.3], vec![0.5, -1.0], 1, 2), 8).unwrap();
    let b = return_map(&SystemSpec::new(vec![-1.0, -0.3], vec![-0.5, 1.0], 1, 2), 8).unwrap();
    for (x, y) in a.coeffs().iter().zip(b.coeffs()) {
        assert_abs_diff_eq!(x, y, epsilon = 1e-12);
    }
}
