use proptest::prelude::*;
use widthslab::weights::{
    compactness_test, estimate_indices, eval_weight, sandwich_check, Certification, IndexGrid, QuadConfig, WeightKind,
};
use widthslab::{EmbeddingParams, Error, Exponent, WeightSpec};

fn e(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

#[test]
fn eval_weight_examples() {
    let w = WeightSpec::polynomial(2.0, 1).unwrap();
    assert_eq!(eval_weight(&w, 0.0).unwrap(), 1.0);
    assert!((eval_weight(&w, 3.0).unwrap() - 10.0).abs() < 1e-12);

    let l = WeightSpec::log_perturbed(0.0, 1.0, 1).unwrap();
    let x = std::f64::consts::E - 1.0;
    let expected = 1.0 + x.ln();
    assert!((eval_weight(&l, x).unwrap() - expected).abs() < 1e-12);
    assert!((expected - 1.541).abs() < 1e-3);
}

#[test]
fn index_examples() {
    let p = WeightSpec::polynomial(1.5, 1).unwrap().indices().unwrap();
    assert_eq!((p.alpha_phi, p.beta_phi, p.certified), (1.5, 1.5, Certification::Analytic));
    let l = WeightSpec::log_perturbed(2.0, -3.0, 1).unwrap().indices().unwrap();
    assert_eq!((l.alpha_phi, l.beta_phi), (2.0, 2.0));
}

#[test]
fn sampled_power_indices() {
    let w = WeightSpec::sampled(|t| t.powf(0.7), 2f64.powi(24), 2049, 1).unwrap();
    let idx = estimate_indices(&w, IndexGrid::default()).unwrap();
    assert_eq!(idx.certified, Certification::Numeric);
    assert!((idx.alpha_phi - 0.7).abs() < 0.05, "{idx:?}");
    assert!((idx.beta_phi - 0.7).abs() < 0.05, "{idx:?}");
    assert!(idx.beta_phi <= idx.alpha_phi);
}

#[test]
fn sampled_bounded_oscillation_keeps_indices() {
    // the factor 2 + sin ln t is bounded above and below, so both indices are 1
    let w = WeightSpec::sampled(|t| t * (2.0 + t.ln().sin()), 2f64.powi(24), 4097, 1).unwrap();
    let idx = w.indices().unwrap();
    assert!((idx.alpha_phi - 1.0).abs() < 0.05 && (idx.beta_phi - 1.0).abs() < 0.05, "{idx:?}");
}

#[test]
fn index_grid_limits() {
    let w = WeightSpec::sampled(|t| t, 100.0, 64, 1).unwrap();
    let bad = IndexGrid { t_count: 8, s_count: 512, t_max: 100.0 };
    assert!(matches!(estimate_indices(&w, bad), Err(Error::InvalidParams(_))));
}

#[test]
fn sandwich_examples() {
    let s_max = 2f64.powi(20);
    assert!(sandwich_check(&WeightSpec::polynomial(1.0, 1).unwrap(), 0.1, s_max));
    assert!(sandwich_check(&WeightSpec::log_perturbed(1.0, 2.0, 1).unwrap(), 0.1, s_max));
    let osc = WeightSpec::sampled(|t| t * (2.0 + t.ln().sin()), 2f64.powi(24), 4097, 1).unwrap();
    assert!(sandwich_check(&osc, 0.2, s_max));
}

#[test]
fn compactness_examples() {
    let q = QuadConfig::default();
    let params = EmbeddingParams::from_delta(1, 2.0, e(2.0), e(1.0)).unwrap();
    assert!((params.p_star_recip() - 0.5).abs() < 1e-15);

    let c = compactness_test(&params, &WeightSpec::polynomial(1.0, 1).unwrap(), q).unwrap();
    assert!(c.compact);
    let c = compactness_test(&params, &WeightSpec::polynomial(0.5, 1).unwrap(), q).unwrap();
    assert!(!c.compact);
    let c = compactness_test(&params, &WeightSpec::log_perturbed(0.5, 1.0, 1).unwrap(), q).unwrap();
    assert!(c.compact);
}

#[test]
fn compactness_limiting_case() {
    let params = EmbeddingParams::from_delta(1, 2.0, e(2.0), e(1.0)).unwrap();
    let r = compactness_test(&params, &WeightSpec::polynomial(2.0, 1).unwrap(), QuadConfig::default());
    assert!(matches!(r, Err(Error::LimitingCase(_))));
}

#[test]
fn compactness_custom_matches_polynomial() {
    let q = QuadConfig::default();
    let params = EmbeddingParams::from_delta(1, 3.0, e(2.0), e(1.0)).unwrap();
    for (alpha, expected) in [(1.0, true), (0.3, false)] {
        let w = WeightSpec::sampled(|t| t.powf(alpha), 2f64.powi(24), 1025, 1).unwrap();
        assert_eq!(compactness_test(&params, &w, q).unwrap().compact, expected, "alpha = {alpha}");
    }
}

#[test]
fn weight_json_roundtrip() {
    let w: WeightSpec = serde_json::from_str(r#"{"kind":"polynomial","alpha":2.0,"dim":1}"#).unwrap();
    assert_eq!(w.kind, WeightKind::Polynomial { alpha: 2.0 });
    let c = WeightSpec::new(WeightKind::CustomRadial { t: vec![1.0, 2.0], phi: vec![1.0, 3.0] }, 2).unwrap();
    let back: WeightSpec = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
    assert_eq!(back, c);
}

fn any_weight() -> impl Strategy<Value = WeightSpec> {
    prop_oneof![
        (0.05f64..5.0).prop_map(|a| WeightSpec::polynomial(a, 1).unwrap()),
        (0.0f64..5.0, -3.0f64..3.0).prop_map(|(a, b)| WeightSpec::log_perturbed(a, b, 1).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn envelopes_sandwich_products(w in any_weight(), lt in 0.0f64..30.0, ls in 0.0f64..30.0) {
        let (t, s) = (lt.exp(), ls.exp());
        let (lo, hi) = w.envelopes(t).unwrap();
        let lhs = w.phi(t * s).unwrap();
        let mid = w.phi(s).unwrap();
        prop_assert!(lo * mid <= lhs * (1.0 + 1e-9));
        prop_assert!(lhs <= hi * mid * (1.0 + 1e-9));
    }

    #[test]
    fn indices_ignore_scaling(alpha in 0.2f64..2.0, c in 0.01f64..100.0) {
        let t_max = 2f64.powi(16);
        let grid = IndexGrid { t_count: 64, s_count: 64, t_max };
        let f = |t: f64| t.powf(alpha) * (1.0 + t.ln()).sqrt();
        let a = estimate_indices(&WeightSpec::sampled(f, t_max, 257, 1).unwrap(), grid).unwrap();
        let b = estimate_indices(&WeightSpec::sampled(|t| c * f(t), t_max, 257, 1).unwrap(), grid).unwrap();
        prop_assert!((a.alpha_phi - b.alpha_phi).abs() < 1e-9);
        prop_assert!((a.beta_phi - b.beta_phi).abs() < 1e-9);
    }

    #[test]
    fn polynomial_compactness_rule(
        d in 1u32..=3,
        p1 in prop::sample::select(vec![0.5, 1.0, 2.0, 4.0, f64::INFINITY]),
        p2 in prop::sample::select(vec![0.5, 1.0, 2.0, 4.0, f64::INFINITY]),
        delta in 0.05f64..5.0,
        alpha in 0.05f64..5.0,
    ) {
        prop_assume!((alpha - delta).abs() > 1e-6);
        let params = EmbeddingParams::from_delta(d, delta, e(p1), e(p2)).unwrap();
        let w = WeightSpec::polynomial(alpha, d).unwrap();
        let got = compactness_test(&params, &w, QuadConfig::default()).unwrap();
        prop_assert_eq!(got.compact, alpha.min(delta) > d as f64 * params.p_star_recip());
    }

    #[test]
    fn weights_non_decreasing(alpha in 0.05f64..5.0, beta in 0.0f64..3.0, x in 0.0f64..1e6, dx in 0.0f64..1e3) {
        for w in [WeightSpec::polynomial(alpha, 1).unwrap(), WeightSpec::log_perturbed(alpha, beta, 1).unwrap()] {
            prop_assert!(eval_weight(&w, x).unwrap() <= eval_weight(&w, x + dx).unwrap());
        }
    }
}
