//! Fields against closed-form derivatives and the conservativity property.

use masla_core::{ChainSeed, FieldValue, SelectionRule, TargetDistribution};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn target(id: &str) -> TargetDistribution {
    TargetDistribution::by_name(id).unwrap()
}

fn analytic_gradient(id: &str, x: &[f64]) -> Vec<f64> {
    match id {
        "quartic" => vec![x[0].powi(3)],
        "abs_quad" => vec![if x[0].abs() > 1.0 { 2.0 * x[0] } else { -2.0 * x[0] }],
        "piecewise" => {
            let s = if x[0].abs() > 1.0 { 1.0 } else { -1.0 };
            vec![s * x[0].signum()]
        }
        "tv_l2" => {
            let s = (x[1] - x[0]).signum();
            vec![x[0] + 1.0 - 5.0 * s, x[1] - 1.0 + 5.0 * s]
        }
        "gaussian" => x.to_vec(),
        _ => unreachable!(),
    }
}

#[test]
fn field_is_the_gradient_almost_everywhere() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for id in ["quartic", "abs_quad", "piecewise", "tv_l2", "gaussian"] {
        let t = target(id);
        for _ in 0..10_000 {
            let x: Vec<f64> = (0..t.dim()).map(|_| 3.0 * rng.sample::<f64, _>(StandardNormal)).collect();
            let set = t.field_set(&x).unwrap();
            let got = set.as_singleton().unwrap_or_else(|| panic!("{id}: set-valued at {x:?}"));
            let want = analytic_gradient(id, &x);
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() <= 1e-12 * w.abs().max(1e-300), "{id} at {x:?}: {got:?} vs {want:?}");
            }
        }
    }
}

#[test]
fn field_matches_finite_differences_off_kinks() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for id in ["quartic", "abs_quad", "piecewise", "tv_l2"] {
        let t = target(id);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..t.dim()).map(|_| rng.random_range(-2.5..2.5)).collect();
            let g = t.field_set(&x).unwrap().as_singleton().unwrap();
            let h = 1e-6;
            for i in 0..t.dim() {
                let (mut up, mut dn) = (x.clone(), x.clone());
                up[i] += h;
                dn[i] -= h;
                let fd = (t.potential_value(&up).unwrap() - t.potential_value(&dn).unwrap()) / (2.0 * h);
                // Skip points within h of a kink, where the difference quotient straddles it.
                let near_kink = match id {
                    "abs_quad" => (x[0].abs() - 1.0).abs() < 2.0 * h,
                    "piecewise" => [-1.0, 0.0, 1.0].iter().any(|k| (x[0] - k).abs() < 2.0 * h),
                    "tv_l2" => (x[1] - x[0]).abs() < 4.0 * h,
                    _ => false,
                };
                if !near_kink {
                    assert!((fd - g[i]).abs() < 1e-5 * g[i].abs().max(1.0), "{id} at {x:?}: {fd} vs {}", g[i]);
                }
            }
        }
    }
}

#[test]
fn clarke_sets_at_the_kinks() {
    let interval = |lo, hi| FieldValue::Interval { lo, hi };
    let aq = target("abs_quad");
    assert_eq!(aq.field_set(&[-1.0]).unwrap(), interval(-2.0, 2.0));
    assert_eq!(aq.field_set(&[1.0]).unwrap(), interval(-2.0, 2.0));
    assert_eq!(aq.field_set(&[0.5]).unwrap(), FieldValue::Singleton(vec![-1.0]));
    assert_eq!(aq.field_set(&[-0.5]).unwrap(), FieldValue::Singleton(vec![1.0]));
    assert_eq!(aq.field_set(&[2.0]).unwrap(), FieldValue::Singleton(vec![4.0]));
    assert_eq!(aq.field_set(&[-3.0]).unwrap(), FieldValue::Singleton(vec![-6.0]));
    assert_eq!(aq.field_set(&[0.0]).unwrap(), FieldValue::Singleton(vec![0.0]));

    let pw = target("piecewise");
    for k in [-1.0, 0.0, 1.0] {
        assert_eq!(pw.field_set(&[k]).unwrap(), interval(-1.0, 1.0));
    }

    // On the diagonal of tv_l2 the field is the segment grad F + [-5, 5] (-1, 1).
    let tv = target("tv_l2");
    match tv.field_set(&[0.5, 0.5]).unwrap() {
        FieldValue::Hull(g) => assert_eq!(g, vec![vec![1.5 + 5.0, -0.5 - 5.0], vec![1.5 - 5.0, -0.5 + 5.0]]),
        other => panic!("{other:?}"),
    }
    let mut rng = ChainSeed::from(0).rng();
    let m = tv.field_select(&[0.5, 0.5], SelectionRule::MinNorm, &mut rng).unwrap();
    // The segment passes through (1.5 - s, -0.5 + s); its closest point to 0 is s = 1.
    assert!((m[0] - 0.5).abs() < 1e-12 && (m[1] - 0.5).abs() < 1e-12, "{m:?}");
}

#[test]
fn piecewise_loop_integrals_vanish() {
    let t = target("piecewise");
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let mut draws = ChainSeed::from(1).rng();
    for _ in 0..200 {
        let n = rng.random_range(2..8);
        let mut pts: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        // Pass through the kinks themselves now and then.
        if rng.random_bool(0.5) {
            pts.push([-1.0, 0.0, 1.0][rng.random_range(0..3)]);
        }
        pts.push(pts[0]);
        let mut integral = 0.0;
        let mut length = 0.0;
        for w in pts.windows(2) {
            let (a, b) = (w[0], w[1]);
            length += (b - a).abs();
            // Split the segment at the kinks and integrate each smooth piece
            // with Gauss-Legendre nodes.
            let mut cuts = vec![a, b];
            cuts.extend([-1.0, 0.0, 1.0].iter().filter(|&&k| (k - a) * (k - b) < 0.0));
            cuts.sort_by(f64::total_cmp);
            for c in cuts.windows(2) {
                let (lo, hi) = (c[0], c[1]);
                let half = (hi - lo) / 2.0;
                let mid = (hi + lo) / 2.0;
                let nodes = [-(3.0f64 / 5.0).sqrt(), 0.0, (3.0f64 / 5.0).sqrt()];
                let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
                let piece: f64 = nodes
                    .iter()
                    .zip(weights)
                    .map(|(s, wt)| {
                        let beta = t.field_select(&[mid + half * s], SelectionRule::MinNorm, &mut draws).unwrap();
                        wt * beta[0] * half
                    })
                    .sum();
                integral += if b >= a { piece } else { -piece };
            }
        }
        assert!(integral.abs() <= 1e-8 * length.max(1e-300), "loop {pts:?}: {integral}");
    }
}

fn point_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    let kinked = prop::sample::select(vec![-1.0, 0.0, 1.0, 0.5]);
    (0usize..5, kinked, -3.0f64..3.0, -3.0f64..3.0, any::<bool>()).prop_map(|(t, k, a, b, snap)| match t {
        3 => (t, if snap { vec![a, a] } else { vec![a, b] }),
        _ => (t, vec![if snap { k } else { a }]),
    })
}

proptest! {
    #[test]
    fn selections_are_members((which, x) in point_strategy(), seed in any::<u64>()) {
        let ids = ["quartic", "abs_quad", "piecewise", "tv_l2", "gaussian"];
        let t = target(ids[which]);
        let set = t.field_set(&x).unwrap();
        let mut rng = ChainSeed::from(seed).rng();
        for rule in SelectionRule::ALL {
            let v = t.field_select(&x, rule, &mut rng).unwrap();
            prop_assert!(set.contains(&v, 1e-12), "{:?} {} at {:?}: {:?}", rule, ids[which], x, v);
        }
    }
}
