use proptest::prelude::*;
use widthslab::allocator::{
    block_bound, block_scale, lower_bound, linf_target_bound, sum_lemma_check, three_part_bound, two_part_bound,
    witness_mode, AllocConfig, IdealBudget, LemmaMode, WitnessMode,
};
use widthslab::lattice::{idealized_card, GridMode};
use widthslab::numeric::linear_fit;
use widthslab::rates::{diag_model_auto, dyadic_range, DiagModelConfig};
use widthslab::swidths::{DiagonalOperator, SigmaProfile, WidthKind};
use widthslab::{EmbeddingParams, Error, Exponent, WeightSpec};

fn e(p: f64) -> Exponent {
    Exponent::new(p).unwrap()
}

fn slope(ks: &[f64], vs: &[f64]) -> f64 {
    let xs: Vec<f64> = ks.iter().map(|k| k.ln()).collect();
    let ys: Vec<f64> = vs.iter().map(|v| v.ln()).collect();
    linear_fit(&xs, &ys).0
}

fn two_part_curve(params: &EmbeddingParams, w: &WeightSpec, ms: std::ops::RangeInclusive<u32>) -> (Vec<f64>, Vec<f64>) {
    let cfg = AllocConfig::default();
    let budget = IdealBudget::for_two_part(params, w, &cfg).unwrap();
    ms.map(|m| {
        let b = two_part_bound(params, w, m, &budget, &cfg).unwrap();
        (b.k as f64, b.upper)
    })
    .unzip()
}

#[test]
fn block_bound_examples() {
    let params = EmbeddingParams::from_delta(1, 2.0, Exponent::INF, e(1.0)).unwrap();
    let w = WeightSpec::polynomial(1.0, 1).unwrap();
    let m23 = idealized_card(1, 2, 3) as u64;
    assert_eq!(block_bound(&params, &w, 2, 3, m23 + 1).unwrap(), 0.0);

    let m00 = idealized_card(1, 0, 0);
    let root = block_bound(&params, &w, 0, 0, 1).unwrap();
    assert!((root - m00 / w.phi(1.0).unwrap()).abs() < 1e-12);

    // the block as a diagonal operator with constant entries 2^{-j delta} phi(2^i)^{-1}
    let v = block_bound(&params, &w, 2, 3, 1).unwrap();
    assert!((v - 2f64.powi(-4) * 2f64.powi(-3) * m23 as f64).abs() < 1e-12 * v);
    let scale = block_scale(&params, &w, 2, 3).unwrap();
    let op = DiagonalOperator::new(SigmaProfile::Blocks { levels: vec![scale], mults: vec![m23] }, params.p1, params.p2)
        .unwrap();
    for k in [1, 2, 7, m23] {
        let b = block_bound(&params, &w, 2, 3, k).unwrap();
        assert!((b - op.h(k)).abs() <= 1e-12 * b);
    }
}

#[test]
fn two_part_slope_example() {
    // p1 = 2, p2 = 4: t = 2, d/t = 1/2 < alpha = 1 < delta = 3
    let params = EmbeddingParams::from_delta(1, 3.0, e(2.0), e(4.0)).unwrap();
    let w = WeightSpec::polynomial(1.0, 1).unwrap();
    let (ks, up) = two_part_curve(&params, &w, 6..=14);
    let s = slope(&ks, &up);
    assert!((s + 1.0).abs() <= 0.1, "slope {s}");
    assert!(up.windows(2).all(|p| p[1] <= p[0]));
}

#[test]
fn two_part_degenerate_level() {
    let params = EmbeddingParams::from_delta(1, 3.0, e(2.0), e(4.0)).unwrap();
    let w = WeightSpec::polynomial(1.0, 1).unwrap();
    let cfg = AllocConfig::default();
    let budget = IdealBudget::for_two_part(&params, &w, &cfg).unwrap();
    let b = two_part_bound(&params, &w, 0, &budget, &cfg).unwrap();
    assert_eq!(b.k, 2);
    assert!(b.upper.is_finite() && b.upper > 0.0);
}

#[test]
fn two_part_rejects_three_part_regime() {
    // d/t = 1/3 and mu = 0.2
    let params = EmbeddingParams::from_delta(1, 0.2, e(1.5), Exponent::INF).unwrap();
    let w = WeightSpec::polynomial(1.0, 1).unwrap();
    let cfg = AllocConfig::default();
    let budget = IdealBudget { r_recip: 1.0, rho: 1.0 };
    assert!(matches!(two_part_bound(&params, &w, 4, &budget, &cfg), Err(Error::WrongRegime(_))));
}

#[test]
fn three_part_rank_accounting() {
    // p1 = 4/3, p2 = inf: t = 4, d/t = 1/4
    let params = EmbeddingParams::from_delta(1, 1.0, e(4.0 / 3.0), Exponent::INF).unwrap();
    let w = WeightSpec::polynomial(0.2, 1).unwrap();
    let b = three_part_bound(&params, &w, 1 << 12, &AllocConfig::default()).unwrap();
    b.plan.verify(1).unwrap();
    let spent: u64 = b.plan.blocks.iter().map(|blk| blk.k_ji - 1).sum();
    assert_eq!(spent + 1, b.plan.k_total);
    assert!(spent < b.plan.k_total);
    for blk in &b.plan.blocks {
        if blk.j + blk.i <= b.plan.m1 {
            assert_eq!(blk.k_ji, idealized_card(1, blk.j, blk.i) as u64 + 1);
        }
    }
    let json = serde_json::to_value(&b.plan).unwrap();
    for key in ["k_total", "M1", "M2", "epsilon", "tau1", "tau2", "blocks"] {
        assert!(json.get(key).is_some(), "missing {key}");
    }
}

#[test]
fn three_part_tail_dominance() {
    let params = EmbeddingParams::from_delta(1, 1.0, e(4.0 / 3.0), Exponent::INF).unwrap();
    let alpha = 0.2;
    let w = WeightSpec::polynomial(alpha, 1).unwrap();
    for x in [10u32, 14, 18] {
        let k = 1u64 << x;
        let b = three_part_bound(&params, &w, k, &AllocConfig::default()).unwrap();
        let theory = (k as f64).powf(-4.0 * alpha / 2.0);
        let r = b.delta3 / theory;
        assert!((0.25..=4.0).contains(&r), "k = 2^{x}: delta3 / theory = {r}");
    }
}

#[test]
fn three_part_tail_closed_form() {
    // rho = 1 and block norms 2^{-j delta - i alpha}: level m sums to 2^{-m alpha} (1 - r^{m+1}) / (1 - r)
    let (delta, alpha) = (1.0f64, 0.2f64);
    let params = EmbeddingParams::from_delta(1, delta, e(4.0 / 3.0), Exponent::INF).unwrap();
    let w = WeightSpec::polynomial(alpha, 1).unwrap();
    let r = 2f64.powf(alpha - delta);
    let a = 2f64.powf(-alpha);
    for x in [10u32, 14, 18] {
        let b = three_part_bound(&params, &w, 1 << x, &AllocConfig::default()).unwrap();
        let m0 = (b.plan.m2 + 1) as i32;
        let closed = (a.powi(m0) / (1.0 - a) - r * (a * r).powi(m0) / (1.0 - a * r)) / (1.0 - r);
        assert!((b.delta3 - closed).abs() <= 1e-6 * closed, "k = 2^{x}: {} vs {closed}", b.delta3);
    }
}

#[test]
fn three_part_slope_example() {
    let params = EmbeddingParams::from_delta(1, 0.2, e(1.5), Exponent::INF).unwrap();
    let w = WeightSpec::polynomial(1.0, 1).unwrap();
    let (ks, up): (Vec<f64>, Vec<f64>) = (8..=18)
        .map(|x| {
            let b = three_part_bound(&params, &w, 1 << x, &AllocConfig::default()).unwrap();
            (b.plan.k_total as f64, b.upper)
        })
        .unzip();
    let s = slope(&ks, &up);
    assert!((s + 0.3).abs() <= 0.1, "slope {s}");
}

#[test]
fn three_part_preconditions() {
    let params = EmbeddingParams::from_delta(1, 0.2, e(1.5), Exponent::INF).unwrap();
    let w = WeightSpec::polynomial(1.0, 1).unwrap();
    assert!(three_part_bound(&params, &w, 8, &AllocConfig::default()).is_err());
    // alpha at the threshold d/t = 1/3
    let params = EmbeddingParams::from_delta(1, 1.0, e(1.5), Exponent::INF).unwrap();
    let w = WeightSpec::polynomial(1.0 / 3.0, 1).unwrap();
    assert!(matches!(three_part_bound(&params, &w, 1 << 10, &AllocConfig::default()), Err(Error::LimitingCase(_))));
    let cfg = AllocConfig::default();
    let budget = IdealBudget { r_recip: 1.0, rho: 1.0 };
    assert!(matches!(two_part_bound(&params, &w, 4, &budget, &cfg), Err(Error::LimitingCase(_))));
}

#[test]
fn lower_witness_examples() {
    let d = 1.0;
    // delta-dominated: exponent -(delta/d + 1/2 - 1/t) with t = 3
    let params = EmbeddingParams::from_delta(1, 0.5, e(1.5), Exponent::INF).unwrap();
    let w = WeightSpec::polynomial(1.0, 1).unwrap();
    let mode = witness_mode(&params, &w.indices().unwrap()).unwrap();
    assert_eq!(mode, WitnessMode::Delta);
    let ks: Vec<f64> = (8..=18).map(|x| 2f64.powi(x)).collect();
    let lo: Vec<f64> = ks.iter().map(|&k| lower_bound(&params, &w, mode, k as u64).unwrap()).collect();
    assert!((slope(&ks, &lo) + (0.5 / d + 0.5 - 1.0 / 3.0)).abs() < 0.1);

    // weight-dominated with small alpha: phi(k^{t/(2d)})^{-1}
    let params = EmbeddingParams::from_delta(1, 1.0, e(1.5), Exponent::INF).unwrap();
    let w = WeightSpec::polynomial(0.2, 1).unwrap();
    let mode = witness_mode(&params, &w.indices().unwrap()).unwrap();
    assert_eq!(mode, WitnessMode::Phi);
    let lo: Vec<f64> = ks.iter().map(|&k| lower_bound(&params, &w, mode, k as u64).unwrap()).collect();
    assert!((slope(&ks, &lo) + 3.0 * 0.2 / 2.0).abs() < 0.1);

    let first = lower_bound(&params, &w, mode, 1).unwrap();
    assert!(first > 0.0 && first <= 1.0 / w.phi(1.0).unwrap());
}

#[test]
fn sum_lemma_examples() {
    let p1 = WeightSpec::polynomial(1.0, 1).unwrap();
    let r = sum_lemma_check(&p1, 2.0, 0.0, 1.0, 30, LemmaMode::Strict).unwrap();
    assert_eq!(r.finite_ar, Some(true));
    assert!(r.sup_ar.unwrap().is_finite());

    let p3 = WeightSpec::polynomial(3.0, 1).unwrap();
    let r = sum_lemma_check(&p3, 2.0, 0.0, 0.5, 30, LemmaMode::Strict).unwrap();
    assert_eq!((r.finite_rb1, r.finite_rbm), (Some(true), Some(true)));
    assert!(r.all_finite);

    assert!(matches!(sum_lemma_check(&p1, 1.0, 0.0, 1.0, 30, LemmaMode::Strict), Err(Error::Precondition(_))));
}

#[test]
fn sum_lemma_geometric_closed_form() {
    // polynomial alpha, eta = 0: the (ar) term is sum_m 2^{-m (gamma - alpha) rho}, increasing to 1/(1 - 2^{-(gamma-alpha) rho})
    let w = WeightSpec::polynomial(1.0, 1).unwrap();
    let (gamma, rho) = (2.0, 1.0);
    let r = sum_lemma_check(&w, gamma, 0.0, rho, 60, LemmaMode::Strict).unwrap();
    let limit = 1.0 / (1.0 - 2f64.powf(-(gamma - 1.0) * rho));
    assert!((r.sup_ar.unwrap() - limit).abs() < 1e-9 * limit, "{:?} vs {limit}", r.sup_ar);
}

#[test]
fn linf_target_examples() {
    let w = WeightSpec::polynomial(1.0, 1).unwrap();
    for (delta, theory) in [(2.0, -1.5), (0.4, -0.9)] {
        let params = EmbeddingParams::from_delta(1, delta, e(1.0), Exponent::INF).unwrap();
        let (ks, up): (Vec<f64>, Vec<f64>) = (8..=16)
            .map(|x| {
                let b = linf_target_bound(&params, &w, 1 << x, 0.3).unwrap();
                (b.k_total as f64, b.upper)
            })
            .unzip();
        let s = slope(&ks, &up);
        assert!((s - theory).abs() <= 0.1, "delta = {delta}: slope {s} vs {theory}");
    }
    // lambda / (2 (1 - lambda)) must stay below mu / d = 0.4
    let params = EmbeddingParams::from_delta(1, 0.4, e(1.0), Exponent::INF).unwrap();
    assert!(matches!(linf_target_bound(&params, &w, 1 << 10, 0.45), Err(Error::InvalidParams(_))));
}

fn three_part_params() -> impl Strategy<Value = (EmbeddingParams, WeightSpec)> {
    // p1 in (1, 2), p2 = inf: t = p1' in (2, inf); mu below d/t
    (1.2f64..1.8, 0.05f64..0.9, 0.05f64..0.9, any::<bool>()).prop_filter_map("regime", |(p1, x, y, delta_small)| {
        let thr = 1.0 - 1.0 / p1;
        let small = thr * x.min(0.95);
        let other = small + thr * y + 0.05;
        let (delta, alpha) = if delta_small { (small, other) } else { (other, small) };
        if (delta - alpha).abs() < 0.02 || (small - thr).abs() < 0.02 {
            return None;
        }
        Some((EmbeddingParams::from_delta(1, delta, e(p1), Exponent::INF).ok()?, WeightSpec::polynomial(alpha, 1).ok()?))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn plans_account_for_every_rank((params, w) in three_part_params(), x in 4u32..20) {
        let b = three_part_bound(&params, &w, 1 << x, &AllocConfig::default()).unwrap();
        prop_assert!(b.plan.verify(1).is_ok());
        let spent: u64 = b.plan.blocks.iter().map(|blk| blk.k_ji - 1).sum();
        prop_assert!(spent < b.plan.k_total);
        prop_assert!(b.plan.blocks.iter().all(|blk| blk.k_ji >= 1));
    }

    #[test]
    fn three_part_non_increasing((params, w) in three_part_params()) {
        let ups: Vec<(u64, f64)> = (6..=16)
            .map(|x| {
                let b = three_part_bound(&params, &w, 1 << x, &AllocConfig::default()).unwrap();
                (b.plan.k_total, b.upper)
            })
            .collect();
        for p in ups.windows(2) {
            prop_assert!(p[1].0 >= p[0].0);
            prop_assert!(p[1].1 <= p[0].1 * (1.0 + 1e-12));
        }
    }

    #[test]
    fn two_part_non_increasing(p1 in 1.2f64..1.8, alpha in 0.5f64..3.0, delta in 0.5f64..3.0) {
        prop_assume!((alpha - delta).abs() > 0.05);
        let params = EmbeddingParams::from_delta(1, delta, e(p1), Exponent::INF).unwrap();
        prop_assume!(alpha.min(delta) > 1.0 - 1.0 / p1 + 0.05);
        let w = WeightSpec::polynomial(alpha, 1).unwrap();
        let (_, up) = two_part_curve(&params, &w, 0..=14);
        prop_assert!(up.windows(2).all(|p| p[1] <= p[0] * (1.0 + 1e-12)));
    }

    #[test]
    fn normalized_lower_below_upper(p1 in 1.2f64..1.8, alpha in 0.5f64..3.0, delta in 0.5f64..3.0) {
        prop_assume!((alpha - delta).abs() > 0.05);
        let params = EmbeddingParams::from_delta(1, delta, e(p1), Exponent::INF).unwrap();
        prop_assume!(alpha.min(delta) > 1.0 - 1.0 / p1 + 0.05);
        let w = WeightSpec::polynomial(alpha, 1).unwrap();
        let (ks, up) = two_part_curve(&params, &w, 0..=14);
        let mode = witness_mode(&params, &w.indices().unwrap()).unwrap();
        // the two-part bound starts at k = 2, its M = 0 value stands in for k = 1
        let lo1 = lower_bound(&params, &w, mode, 1).unwrap();
        for (&k, u) in ks.iter().zip(&up) {
            let l = lower_bound(&params, &w, mode, k as u64).unwrap();
            prop_assert!(l / lo1 <= u / up[0] * (1.0 + 1e-12), "k = {k}");
        }
    }

    #[test]
    fn two_part_dominates_the_diagonal_oracle(alpha in 1.2f64..3.0, delta in 1.2f64..3.0) {
        prop_assume!((alpha - delta).abs() > 0.05);
        let params = EmbeddingParams::from_delta(1, delta, Exponent::INF, e(1.0)).unwrap();
        let w = WeightSpec::polynomial(alpha, 1).unwrap();
        let (ks, up) = two_part_curve(&params, &w, 0..=12);
        let ks: Vec<u64> = ks.iter().map(|&k| k as u64).collect();
        let (exact, _) = diag_model_auto(&params, &w, &ks, WidthKind::Approximation, 10, DiagModelConfig::default()).unwrap();
        for ((k, u), h) in ks.iter().zip(&up).zip(&exact.values) {
            prop_assert!(*u >= *h * (1.0 - 1e-12), "k = {k}: upper {u} < exact {h}");
        }
    }
}

#[test]
fn allocator_is_thread_count_independent() {
    let params = EmbeddingParams::from_delta(1, 0.2, e(1.5), Exponent::INF).unwrap();
    let w = WeightSpec::polynomial(1.0, 1).unwrap();
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| {
            let ups: Vec<u64> = dyadic_range(8, 16)
                .iter()
                .map(|&k| three_part_bound(&params, &w, k, &AllocConfig::default()).unwrap().upper.to_bits())
                .collect();
            let two = EmbeddingParams::from_delta(1, 3.0, e(2.0), e(4.0)).unwrap();
            let (_, tp) = two_part_curve(&two, &w, 0..=12);
            (ups, tp.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        })
    };
    assert_eq!(run(1), run(8));
}

#[test]
fn grid_mode_is_idealized_for_bounds() {
    // allocator cardinalities are the idealized ones
    let params = EmbeddingParams::from_delta(2, 3.0, Exponent::INF, e(1.0)).unwrap();
    let w = WeightSpec::polynomial(2.0, 2).unwrap();
    let m = idealized_card(2, 1, 1);
    let b = block_bound(&params, &w, 1, 1, 1).unwrap();
    let expected = 2f64.powi(-3) / w.phi(2.0).unwrap() * m;
    assert!((b - expected).abs() < 1e-12 * expected);
    let _ = GridMode::Idealized;
}
