//! Transition kernels: reversibility, randomness consumption and caching.

use masla_core::{
    run_chain, ChainSeed, CountingDraws, Draws, Kernel, KernelConfig, SelectionRule, TargetDistribution, TargetId,
    TargetParams, Variant,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn target(id: &str) -> TargetDistribution {
    TargetDistribution::by_name(id).unwrap()
}

fn kernel(variant: Variant, step: f64, id: &str) -> Kernel {
    Kernel::new(KernelConfig::new(variant, step), target(id)).unwrap()
}

/// Replays fixed draws.
struct Scripted {
    normals: Vec<f64>,
    uniforms: Vec<f64>,
}

impl Draws for Scripted {
    fn standard_normal(&mut self) -> f64 {
        self.normals.remove(0)
    }

    fn uniform(&mut self) -> f64 {
        self.uniforms.remove(0)
    }
}

#[test]
fn detailed_balance_holds_pointwise() {
    let cases = [
        (Variant::Masla, "quartic", 0.1),
        (Variant::Masla, "abs_quad", 0.1),
        (Variant::Masla, "piecewise", 0.5),
        (Variant::Masla, "tv_l2", 0.01),
        (Variant::Mala, "quartic", 0.1),
        (Variant::Mala, "gaussian", 0.5),
        (Variant::Rwm, "quartic", 0.1),
        (Variant::Rwm, "tv_l2", 0.1),
        (Variant::Pmala, "tv_l2", 0.01),
        (Variant::Pmala, "quartic", 0.1),
        (Variant::Pmala, "gaussian", 0.3),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for (variant, id, step) in cases {
        let k = kernel(variant, step, id);
        let t = k.target().clone();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..t.dim()).map(|_| 1.5 * rng.sample::<f64, _>(StandardNormal)).collect();
            let s = k.init_state_deterministic(&x).unwrap();
            let z: Vec<f64> = (0..t.dim()).map(|_| rng.sample(StandardNormal)).collect();
            let y = k.propose(&s, &z).unwrap();
            // pi(a) q(a, b) alpha(a, b), kept as a logarithm so that far pairs do
            // not underflow; the relative error is |exp(l_fwd - l_rev) - 1|.
            let log_flux = |a: &[f64], b: &[f64]| {
                -t.potential_value(a).unwrap() + k.log_proposal_density(a, b).unwrap() + k.log_acceptance(a, b).unwrap()
            };
            let (fwd, rev) = (log_flux(&x, &y), log_flux(&y, &x));
            assert!(fwd.is_finite() && rev.is_finite(), "{variant} on {id}: {x:?} -> {y:?}");
            let rel = (fwd - rev).exp_m1().abs();
            assert!(rel <= 1e-10, "{variant} on {id}: relative error {rel} for {x:?} -> {y:?}");
        }
    }
}

#[test]
fn mala_acceptance_on_the_standard_normal() {
    // Direct evaluation, no logarithms: pi(x) = exp(-x^2/2) and q(a, b) the
    // normal density of b with mean a - gamma a and variance 2 gamma.
    let (gamma, x, y) = (0.5f64, 0.0f64, 1.0f64);
    let pi = |v: f64| (-v * v / 2.0).exp();
    let q = |a: f64, b: f64| {
        let m = a - gamma * a;
        (-(b - m) * (b - m) / (4.0 * gamma)).exp() / (4.0 * std::f64::consts::PI * gamma).sqrt()
    };
    let alpha = (pi(y) * q(y, x) / (pi(x) * q(x, y))).min(1.0);
    assert!((alpha - (-0.125f64).exp()).abs() < 1e-15);

    let k = kernel(Variant::Mala, gamma, "gaussian");
    let got = k.log_acceptance(&[x], &[y]).unwrap();
    assert!((got - alpha.ln()).abs() < 1e-14, "{got}");
    assert!((got + 0.125).abs() < 1e-14);
}

#[test]
fn masla_and_mala_agree_bit_for_bit_on_smooth_targets() {
    for (id, step, x0) in [("quartic", 0.1, vec![0.0]), ("quartic", 0.001, vec![1.5]), ("gaussian", 0.3, vec![2.0])] {
        for seed in 0..5u64 {
            let a = run_chain(KernelConfig::new(Variant::Masla, step), &target(id), &x0, 10_000, seed).unwrap();
            let b = run_chain(KernelConfig::new(Variant::Mala, step), &target(id), &x0, 10_000, seed).unwrap();
            assert_eq!(a.positions, b.positions);
            assert_eq!(a.accepts, b.accepts);
        }
    }
}

#[test]
fn draws_per_step() {
    let tv = target("tv_l2");
    let cases = [
        (Variant::Ula, "quartic", 1, 0),
        (Variant::Usla, "abs_quad", 1, 0),
        (Variant::GradSub, "tv_l2", 2, 0),
        (Variant::ProxSub, "tv_l2", 2, 0),
        (Variant::Myula, "tv_l2", 2, 0),
        (Variant::Masla, "abs_quad", 1, 1),
        (Variant::Mala, "quartic", 1, 1),
        (Variant::Rwm, "tv_l2", 2, 1),
        (Variant::Pmala, "tv_l2", 2, 1),
    ];
    for (variant, id, normals, uniforms) in cases {
        let k = Kernel::new(KernelConfig::new(variant, 0.001), target(id)).unwrap();
        let x0 = if k.target().dim() == 2 { vec![-1.0, 1.0] } else { vec![0.3] };
        let mut d = CountingDraws::new(ChainSeed::from(7).rng());
        let mut s = k.init_state(&x0, &mut d).unwrap();
        assert_eq!(d.total(), 0);
        for n in 1..=100u64 {
            k.step(&mut s, &mut d).unwrap();
            assert_eq!((d.normals, d.uniforms), (n * normals, n * uniforms), "{variant} on {id}");
        }
    }

    // Random selection at a kink adds draws after the noise.
    let k = Kernel::new(KernelConfig::new(Variant::GradSub, 0.001).with_selection(SelectionRule::UniformRandom), tv)
        .unwrap();
    let mut d = CountingDraws::new(ChainSeed::from(8).rng());
    let mut s = k.init_state(&[0.2, 0.2], &mut d).unwrap();
    assert_eq!((d.normals, d.uniforms), (0, 1));
    k.step(&mut s, &mut d).unwrap();
    assert_eq!((d.normals, d.uniforms), (2, 1));
}

#[test]
fn draw_order_is_noise_then_uniform() {
    let k = kernel(Variant::Rwm, 0.1, "quartic");
    let mut s = k.init_state_deterministic(&[0.0]).unwrap();
    // Proposal 0 -> 1 has acceptance exp(-1/4) ~ 0.78.
    let mut d = Scripted { normals: vec![1.0], uniforms: vec![0.9] };
    assert!(!k.step(&mut s, &mut d).unwrap());
    assert_eq!(s.position, vec![0.0]);
    let mut d = Scripted { normals: vec![1.0], uniforms: vec![0.7] };
    assert!(k.step(&mut s, &mut d).unwrap());
    assert_eq!(s.position, vec![1.0]);
    assert_eq!((s.iteration, s.accepts), (2, 1));
}

#[test]
fn ula_step_from_five() {
    let k = kernel(Variant::Ula, 0.1, "quartic");
    let mut s = k.init_state_deterministic(&[5.0]).unwrap();
    k.step(&mut s, &mut Scripted { normals: vec![0.0], uniforms: vec![] }).unwrap();
    assert_eq!(s.position, vec![-7.5]);
    assert_eq!(s.cached_drift, vec![-421.875]);
}

#[test]
fn rejection_keeps_the_cache() {
    let k = Kernel::new(KernelConfig::new(Variant::Rwm, 0.1).with_rwm_scale(5.0), target("tv_l2")).unwrap();
    let mut rng = ChainSeed::from(9).rng();
    let mut s = k.init_state_deterministic(&[-0.3, 0.2]).unwrap();
    let mut rejections = 0;
    for _ in 0..200 {
        let before = s.clone();
        if !k.step(&mut s, &mut rng).unwrap() {
            rejections += 1;
            assert_eq!(s.position, before.position);
            assert_eq!(s.cached_potential, before.cached_potential);
            assert_eq!(s.cached_drift, before.cached_drift);
            assert_eq!(s.mean(), before.mean());
            assert_eq!(s.accepts, before.accepts);
            assert_eq!(s.iteration, before.iteration + 1);
        } else {
            assert_eq!(s.cached_potential, k.target().potential_value(&s.position).unwrap());
        }
    }
    assert!(rejections > 50);
}

#[test]
fn proxsub_and_gradsub_follow_their_maps() {
    let t = target("tv_l2");
    let c = t.composite().unwrap().clone();
    let tau = 0.01;
    let x = [0.4, -0.2];
    // Kx = -0.6 < 0, so y = -5 and K^T y = (5, -5).
    let half = [x[0] - tau * 5.0, x[1] + tau * 5.0];
    let prox = Kernel::new(KernelConfig::new(Variant::ProxSub, tau), t.clone()).unwrap();
    let s = prox.init_state_deterministic(&x).unwrap();
    assert_eq!(s.mean(), c.prox_smooth(&half, tau).as_slice());
    let grad = Kernel::new(KernelConfig::new(Variant::GradSub, tau), t).unwrap();
    let s = grad.init_state_deterministic(&x).unwrap();
    let g = c.f_grad(&x);
    assert_eq!(s.mean(), &[half[0] - tau * g[0], half[1] - tau * g[1]]);
}

#[test]
fn pmala_is_centred_at_the_prox() {
    let k = kernel(Variant::Pmala, 0.02, "tv_l2");
    let s = k.init_state_deterministic(&[0.5, 0.1]).unwrap();
    let p = k.target().prox(masla_core::ProxPart::Full, &[0.5, 0.1], 0.02).unwrap();
    assert_eq!(s.mean(), p.as_slice());
}

#[test]
fn overridden_targets_work_with_composite_kernels() {
    let p = TargetParams { sigma: Some(0.5), lambda: Some(2.0), y_data: Some(vec![0.0, 3.0]), dim: None };
    let t = TargetDistribution::from_id(TargetId::TvL2, &p).unwrap();
    let traj = run_chain(KernelConfig::new(Variant::ProxSub, 1e-3), &t, &[0.0, 3.0], 2000, 1).unwrap();
    assert!(traj.positions.iter().all(|x| x.iter().all(|v| v.is_finite())));
}

proptest! {
    #[test]
    fn log_acceptance_is_never_positive(
        x in -4.0f64..4.0, y in -4.0f64..4.0, which in 0usize..4, step in 0.001f64..1.0,
    ) {
        let (variant, id) = [
            (Variant::Masla, "abs_quad"),
            (Variant::Mala, "quartic"),
            (Variant::Rwm, "piecewise"),
            (Variant::Pmala, "quartic"),
        ][which];
        let k = kernel(variant, step, id);
        let a = k.log_acceptance(&[x], &[y]).unwrap();
        prop_assert!(a <= 0.0);
        prop_assert!(a.exp() > 0.0 || a == f64::NEG_INFINITY || a < -700.0);
    }
}
