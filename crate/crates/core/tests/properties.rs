//! Property tests for the transform identities and metric invariants.

use hpiconv_core::arma::{css_objective, ArmaSpec};
use hpiconv_core::eval::rmsfe;
use hpiconv_core::forecast::{ForecastPanel, PanelEntry};
use hpiconv_core::series::{
    demean, describe, diff, hpa, log_ratio, AlignedPair, QuarterDate, QuarterlySeries, SeriesKind,
};
use proptest::prelude::*;

fn qd(y: i32, q: u8) -> QuarterDate {
    QuarterDate::new(y, q).unwrap()
}

fn level_values() -> impl Strategy<Value = Vec<f64>> {
    proptest::collection::vec(1.0f64..500.0, 2..80)
}

fn level_series(vals: Vec<f64>, label: &str) -> QuarterlySeries {
    QuarterlySeries::new(qd(1990, 1), vals, label, SeriesKind::IndexLevel).unwrap()
}

proptest! {
    #[test]
    fn hpa_round_trip_reconstructs_levels(vals in level_values()) {
        let s = level_series(vals.clone(), "s");
        let g = hpa(&s).unwrap();
        let mut level = vals[0];
        for (i, r) in g.values().iter().enumerate() {
            level *= r.exp();
            let expect = vals[i + 1];
            prop_assert!(((level - expect) / expect).abs() < 1e-9);
        }
    }

    #[test]
    fn ratio_difference_identity(
        reg in level_values(),
        nat in level_values(),
    ) {
        let n = reg.len().min(nat.len());
        let reg = level_series(reg[..n].to_vec(), "reg");
        let nat = level_series(nat[..n].to_vec(), "nat");
        let pair = AlignedPair::new(reg.clone(), nat.clone()).unwrap();
        let lhs = diff(&log_ratio(&pair).unwrap()).unwrap();
        let gr = hpa(&reg).unwrap();
        let gn = hpa(&nat).unwrap();
        prop_assert_eq!(lhs.len(), gr.len());
        for ((l, r), u) in lhs.values().iter().zip(gr.values()).zip(gn.values()) {
            prop_assert!((l - (r - u)).abs() < 1e-12);
        }
    }

    #[test]
    fn demean_leaves_zero_mean_over_window(vals in proptest::collection::vec(-1.0f64..1.0, 2..80)) {
        let s = QuarterlySeries::new(qd(1990, 1), vals, "y", SeriesKind::LogRatio).unwrap();
        let d = demean(&s, None).unwrap();
        let mean: f64 = d.values().iter().sum::<f64>() / d.values().len() as f64;
        prop_assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn log_ratio_is_antisymmetric(
        a in level_values(),
        b in level_values(),
    ) {
        let n = a.len().min(b.len());
        let sa = level_series(a[..n].to_vec(), "a");
        let sb = level_series(b[..n].to_vec(), "b");
        let ab = log_ratio(&AlignedPair::new(sa.clone(), sb.clone()).unwrap()).unwrap();
        let ba = log_ratio(&AlignedPair::new(sb, sa).unwrap()).unwrap();
        for (x, y) in ab.values().iter().zip(ba.values()) {
            prop_assert!((x + y).abs() < 1e-12);
        }
    }

    #[test]
    fn rmsfe_decomposition_and_order_invariance(
        pairs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2..40),
        rot in 0usize..40,
    ) {
        let entries: Vec<PanelEntry> = pairs
            .iter()
            .enumerate()
            .map(|(i, &(p, r))| PanelEntry {
                origin: qd(2000, 1).add_quarters(i as i64),
                target: qd(2000, 2).add_quarters(i as i64),
                predicted: p,
                realized: r,
                band_halfwidth: 0.0,
            })
            .collect();
        let panel = ForecastPanel { model_name: "m".into(), horizon: 1, entries: entries.clone() };
        let res = rmsfe(&panel).unwrap();
        prop_assert!((res.value * res.value - (res.bias * res.bias + res.error_variance)).abs() < 1e-12);

        let mut rotated = entries;
        let k = rot % rotated.len();
        rotated.rotate_left(k);
        let res2 = rmsfe(&ForecastPanel { model_name: "m".into(), horizon: 1, entries: rotated }).unwrap();
        prop_assert!((res.value - res2.value).abs() < 1e-12);
        prop_assert!((res.bias - res2.bias).abs() < 1e-12);
    }

    #[test]
    fn css_objective_is_location_equivariant_in_intercept(
        vals in proptest::collection::vec(-0.5f64..0.5, 12..60),
        shift in -2.0f64..2.0,
    ) {
        // shifting the data and the intercept together leaves the
        // innovations unchanged for a pure-intercept model
        let spec = ArmaSpec::new(0, 0, true, false).unwrap();
        prop_assert_eq!(spec.n_params(), 1);
        let c = 0.1;
        let (f0, e0) = css_objective(c, &[], &[], None, &vals, None);
        let shifted: Vec<f64> = vals.iter().map(|v| v + shift).collect();
        let (f1, e1) = css_objective(c + shift, &[], &[], None, &shifted, None);
        prop_assert!((f0 - f1).abs() < 1e-8);
        for (a, b) in e0.iter().zip(&e1) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }
}

#[test]
fn describe_normal_sample_moments() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(101);
    let vals: Vec<f64> = (0..10_000)
        .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
        .collect();
    let s = QuarterlySeries::new(qd(1000, 1), vals, "z", SeriesKind::GrowthRate).unwrap();
    let d = describe(&s);
    assert!(d.mean.abs() < 0.05, "mean {}", d.mean);
    assert!((d.std_dev - 1.0).abs() < 0.05, "std {}", d.std_dev);
    assert!(d.skewness.abs() < 0.1, "skew {}", d.skewness);
    assert!(d.excess_kurtosis.abs() < 0.2, "kurt {}", d.excess_kurtosis);
    assert!(!d.degenerate);
}

#[test]
fn core_types_are_send_sync() {
    fn check<T: Send + Sync>() {}
    check::<QuarterlySeries>();
    check::<hpiconv_core::series::DemeanedRatio>();
    check::<hpiconv_core::linreg::OlsFit>();
    check::<hpiconv_core::unitroot::CriticalValueTable>();
    check::<hpiconv_core::arma::ArmaFit>();
    check::<ForecastPanel>();
}
