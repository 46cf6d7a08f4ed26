//! Randomized checks of invariants that span several modules.

use crate::datagen::{gen_euclidean_line, gen_measure_dataset};
use crate::metric::discrete_length;
use crate::ot::exact::{transport_exact, w2_exact, GroundCost, DEFAULT_EXACT_CAP};
use crate::ot::nested::{nested_w1, BaseMetric};
use crate::ot::sinkhorn::w2_sinkhorn;
use crate::ppc::lloyd::{fit, tsp_order};
use crate::seriation::kendall::{kendall_tau_error, kendall_tau_error_up_to_reversal};
use crate::{
    CurveModel, DiscreteMeasure, Euclidean, EuclideanPoint, GenOptions, KnotCurve, NestedDataset, PpcConfig,
    SinkhornConfig, Wasserstein,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn measure() -> impl Strategy<Value = DiscreteMeasure> {
    (1usize..7)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(prop::collection::vec(-2.0f64..2.0, 2), n),
                prop::collection::vec(0.05f64..1.0, n),
            )
        })
        .prop_map(|(pts, w)| {
            let s: f64 = w.iter().sum();
            DiscreteMeasure::new(&pts, w.iter().map(|x| x / s).collect()).unwrap()
        })
}

fn cloud() -> impl Strategy<Value = Vec<EuclideanPoint>> {
    prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 2), 3..25)
        .prop_map(|v| v.into_iter().map(|p| EuclideanPoint::new(p).unwrap()).collect())
}

fn uniform_cloud(rng: &mut ChaCha8Rng, n: usize) -> DiscreteMeasure {
    let pts: Vec<Vec<f64>> = (0..n).map(|_| vec![rng.random::<f64>(), rng.random::<f64>()]).collect();
    DiscreteMeasure::uniform(&pts).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_plan_has_the_input_marginals(a in measure(), b in measure()) {
        let plan = transport_exact(&a, &b, GroundCost::SquaredEuclidean, DEFAULT_EXACT_CAP).unwrap();
        prop_assert!(plan.marginal_error(a.weights(), b.weights()) <= 1e-7);
        prop_assert!(plan.coupling.as_slice().iter().all(|&x| x >= -1e-12));
    }

    #[test]
    fn w2_is_a_metric_on_samples(a in measure(), b in measure(), c in measure()) {
        let ab = w2_exact(&a, &b).unwrap().0;
        let ba = w2_exact(&b, &a).unwrap().0;
        let ac = w2_exact(&a, &c).unwrap().0;
        let cb = w2_exact(&c, &b).unwrap().0;
        prop_assert!((ab - ba).abs() <= 1e-9);
        prop_assert!(ab <= ac + cb + 1e-7);
        prop_assert!(w2_exact(&a, &a).unwrap().0 <= 1e-7);
    }

    #[test]
    fn nested_w1_triangle_inequality(
        x in prop::collection::vec(measure(), 1..4),
        y in prop::collection::vec(measure(), 1..4),
        z in prop::collection::vec(measure(), 1..4),
    ) {
        let (x, y, z) = (NestedDataset::new(x).unwrap(), NestedDataset::new(y).unwrap(), NestedDataset::new(z).unwrap());
        for base in [BaseMetric::W1, BaseMetric::W2, BaseMetric::Mmd { bandwidth: 0.5 }] {
            let xy = nested_w1(&x, &y, base).unwrap();
            let xz = nested_w1(&x, &z, base).unwrap();
            let zy = nested_w1(&z, &y, base).unwrap();
            prop_assert!(xy <= xz + zy + 1e-7, "{:?}: {} > {} + {}", base, xy, xz, zy);
        }
    }

    #[test]
    fn tsp_order_never_lengthens_the_curve(knots in cloud(), fixed in any::<bool>()) {
        let curve = KnotCurve::new(knots).unwrap();
        let before = discrete_length(&Euclidean, &curve).unwrap();
        let after = discrete_length(&Euclidean, &tsp_order(&Euclidean, &curve, fixed).unwrap()).unwrap();
        prop_assert!(after <= before + 1e-9 * (1.0 + before));
    }

    #[test]
    fn fit_objective_never_increases(data in cloud(), k in 1usize..8, beta in 0.0f64..1.0, nonlocal in any::<bool>(), seed in 0u64..1000) {
        let k = k.min(data.len());
        let mut cfg = PpcConfig::new(beta, k);
        cfg.seed = seed;
        if nonlocal {
            cfg = cfg.nonlocal(0.2);
        }
        let r = fit(&Euclidean, &data, &cfg).unwrap();
        prop_assert!(r.trace.is_monotone(1e-9));
    }

    #[test]
    fn kendall_error_is_reversal_symmetric(t in prop::collection::vec(-10.0f64..10.0, 2..30), p in prop::collection::vec(-10.0f64..10.0, 30)) {
        let mut truth = t.clone();
        truth.sort_by(f64::total_cmp);
        truth.dedup();
        prop_assume!(truth.len() >= 2);
        let pseudo = &p[..truth.len()];
        let e = kendall_tau_error(pseudo, &truth).unwrap();
        let neg: Vec<f64> = pseudo.iter().map(|x| -x).collect();
        let r = kendall_tau_error(&neg, &truth).unwrap();
        prop_assert!((0.0..=1.0).contains(&e));
        prop_assert!((e + r - 1.0).abs() <= 1e-12);
        prop_assert!(kendall_tau_error_up_to_reversal(pseudo, &truth).unwrap() <= 0.5);
    }
}

#[test]
fn sinkhorn_gap_is_nonnegative_and_shrinks_with_reg() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        let (a, b) = (uniform_cloud(&mut rng, 10), uniform_cloud(&mut rng, 10));
        let exact = w2_exact(&a, &b).unwrap().0;
        let gaps: Vec<f64> = [1e-1, 1e-2, 1e-3]
            .iter()
            .map(|&reg| w2_sinkhorn(&a, &b, &SinkhornConfig::with_reg(reg)).unwrap().value - exact)
            .collect();
        assert!(gaps.iter().all(|&g| g >= -1e-9), "{gaps:?}");
        assert!(gaps.windows(2).all(|w| w[1] <= w[0] + 1e-6), "{gaps:?}");
    }
}

#[test]
fn generation_is_reproducible() {
    for model in [CurveModel::Dataset1, CurveModel::Dataset2] {
        let opts = GenOptions::new(30, 600, 0.1, 9);
        assert_eq!(
            gen_measure_dataset(model, &opts).unwrap(),
            gen_measure_dataset(model, &opts).unwrap()
        );
    }
    assert_eq!(
        gen_euclidean_line(40, 0.1, 2).unwrap(),
        gen_euclidean_line(40, 0.1, 2).unwrap()
    );
}

#[test]
fn wasserstein_fit_on_measures_is_monotone() {
    let data = gen_measure_dataset(CurveModel::Dataset1, &GenOptions::new(30, 300, 0.1, 4)).unwrap();
    for nonlocal in [false, true] {
        let mut cfg = PpcConfig::new(0.17, 8);
        cfg.max_outer_iters = 15;
        if nonlocal {
            cfg = cfg.nonlocal(0.037);
        }
        let r = fit(&Wasserstein::exact(), data.batches(), &cfg).unwrap();
        assert!(r.trace.is_monotone(1e-9));
        assert!(!r.trace.records.is_empty());
    }
}
