use proptest::prelude::*;
use qhlab_core::models::{ProcessModel, Sign};
use qhlab_core::sampler::{RngSpec, StatKind};
use qhlab_core::smallball::*;
use qhlab_core::Error;
use statrs::distribution::{ContinuousCDF, Normal};
use std::f64::consts::PI;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn constants_example_same_regularity() {
    let input = HelixInput::new(1.0, 1.0, 0.6, 0.6, Sign::Positive).unwrap();
    let (c, e) = derive_constants(&input).unwrap();
    assert!(rel(e.lambda, 4.0 / 3.0) < 1e-14);
    assert!(rel(e.mu, 0.8) < 1e-14);
    assert!(rel(e.mu / e.lambda, 0.6) < 1e-14);
    assert_eq!(c.c0, 64.0);
    // 64^{8/3} = 2^16
    assert!(rel(c.c4.unwrap(), 1.0 / (16.0 * 65536.0)) < 1e-12);
    assert!((c.c4.unwrap() - 9.5367e-7).abs() < 1e-10);
    assert!(c.c5.is_none());
    assert!(rel(e.k1, (e.k2 * c.c3.powf(-e.lambda)).exp()) < 1e-15);
}

#[test]
fn vacuous_bound_rejected() {
    let input = HelixInput::new(1.0, 1.0, 0.8, 0.5, Sign::Positive).unwrap();
    match derive_constants(&input) {
        Err(Error::VacuousBound(msg)) => assert!(msg.contains("2H1 − 1")),
        other => panic!("expected vacuous bound, got {other:?}"),
    }
}

#[test]
fn input_invariants() {
    assert!(HelixInput::new(1.0, 1.0, 0.4, 0.4, Sign::Positive).is_err());
    assert!(HelixInput::new(1.0, 1.0, 0.7, 0.6, Sign::Negative).is_err());
    assert!(HelixInput::new(1.0, 1.0, 0.5, 0.6, Sign::Positive).is_err());
    assert!(HelixInput::new(0.0, 1.0, 0.6, 0.6, Sign::Positive).is_err());
}

/// Substitution oracle: the bound exponent is ε⁴/(16 C2² a^{2H2+2})
/// (positive) or ε⁴/(32 C2² a^{4H2+1}) (negative) with a = a(ε).
#[test]
fn constants_match_direct_substitution() {
    let cases = [
        (2.0, 0.7, 0.9, 0.85, Sign::Positive),
        (0.5, 1.3, 0.6, 0.55, Sign::Positive),
        (1.0, 1.0, 0.3, 0.25, Sign::Negative),
        (3.0, 0.4, 0.45, 0.4, Sign::Negative),
    ];
    for (c1, c2, h1, h2, sign) in cases {
        let input = HelixInput::new(c1, c2, h1, h2, sign).unwrap();
        let (c, e) = derive_constants(&input).unwrap();
        // C3 is the largest ε with a(ε) ≤ 1/4
        assert!(rel(c.a_of_eps(c.c3), 0.25) < 1e-12);
        for eps in [1e-3, 0.5 * c.c3, c.c3] {
            let a = (64.0 / c1).powf(1.0 / (2.0 * h1)) * eps.powf(1.0 / h1);
            let direct = match sign {
                Sign::Positive => eps.powi(4) / (16.0 * c2 * c2 * a.powf(2.0 * h2 + 2.0)),
                Sign::Negative => eps.powi(4) / (32.0 * c2 * c2 * a.powf(4.0 * h2 + 1.0)),
            };
            let ours = e.k2 * eps.powf(-e.lambda);
            assert!(rel(ours, direct) < 1e-11, "{ours} vs {direct}");
            assert!(rel(theoretical_bound(&c, &e, eps, 1.0), (-direct).exp()) < 1e-9);
        }
    }
}

#[test]
fn exponent_algebra_sweep() {
    for i in 0..=8 {
        let h = 0.55 + 0.05 * i as f64;
        let (_, e) = derive_constants(&HelixInput::new(1.0, 1.0, h, h, Sign::Positive).unwrap()).unwrap();
        assert!((e.mu / e.lambda - h).abs() < 1e-12);
        assert!((-e.lambda - (-2.0 * (1.0 - h) / h)).abs() < 1e-12);
    }
    for i in 0..=8 {
        let h = 0.1 + 0.05 * i as f64;
        let (_, e) = derive_constants(&HelixInput::new(1.0, 1.0, h, h, Sign::Negative).unwrap()).unwrap();
        assert!((e.mu / e.lambda - h).abs() < 1e-12);
    }
}

#[test]
fn rejection_exactly_at_threshold() {
    for i in 0..=20 {
        let h1 = 0.5 + 0.025 * i as f64;
        for j in 1..=40 {
            let h2 = 0.025 * j as f64;
            let Ok(input) = HelixInput::new(1.0, 1.0, h1, h2, Sign::Positive) else { continue };
            let rejected = matches!(derive_constants(&input), Err(Error::VacuousBound(_)));
            assert_eq!(rejected, h2 <= 2.0 * h1 - 1.0, "H1={h1}, H2={h2}");
        }
    }
}

#[test]
fn bound_examples() {
    let input = HelixInput::fbm(0.75).unwrap();
    let (c, e) = derive_constants(&input).unwrap();
    assert!(theoretical_bound(&c, &e, 1e-30, 1.0) < 1e-300);
    assert_eq!(theoretical_bound(&c, &e, 0.0, 1.0), 0.0);
    let b = theoretical_bound(&c, &e, c.c3, 1.0);
    assert!(rel(b, (-e.k2 * c.c3.powf(-e.lambda)).exp()) < 1e-14);
    assert!(rel(b, 1.0 / e.k1) < 1e-12);
    let d: f64 = 0.3;
    let eps = c.c3 * d.powf(c.h1);
    let expect = (-e.k2 * c.c3.powf(-e.lambda) * d.powf(e.mu - e.lambda * c.h1)).exp();
    assert!(rel(theoretical_bound(&c, &e, eps, d), expect) < 1e-12);
    assert_eq!(theoretical_bound(&c, &e, 1.01 * c.c3, 1.0), 1.0);
    // anchored form: K2' = 2^{−λ} K2
    let ea = anchored_exponents(&e, &c);
    let eps = 0.25 * c.c3;
    assert!(rel(anchored_bound(&c, &e, eps, 1.0), (-ea.k2 * eps.powf(-e.lambda)).exp()) < 1e-12);
}

/// Independent form: P = Σ_k (−1)^k [Φ((2k+1)ε) − Φ((2k−1)ε)].
#[test]
fn reflection_series_oracle() {
    let n = Normal::new(0.0, 1.0).unwrap();
    for eps in [0.3, 0.6, 1.0, 2.0] {
        let mut s = 0.0;
        for k in -40i32..=40 {
            let t = n.cdf((2 * k + 1) as f64 * eps) - n.cdf((2 * k - 1) as f64 * eps);
            s += if k.rem_euclid(2) == 0 { t } else { -t };
        }
        let p = wiener_sup_abs_probability(eps);
        assert!((p - s).abs() < 1e-10, "{eps}: {p} vs {s}");
    }
    assert!((wiener_sup_abs_probability(0.6) - 0.0414).abs() < 1e-4);
}

/// Eigenfunction expansion of the killed density divided by the free one.
#[test]
fn bridge_survival_oracle() {
    let cases = [(0.1, -0.2, -0.6, 0.6, 0.05), (0.5, 0.55, -0.6, 0.6, 0.01), (0.0, 0.0, -0.3, 0.3, 0.2), (0.2, -0.25, -0.3, 0.3, 0.5)];
    for (x, y, lo, hi, h) in cases {
        let w: f64 = hi - lo;
        let mut q = 0.0;
        for n in 1..2000 {
            let k = n as f64 * PI / w;
            q += (k * (x - lo)).sin() * (k * (y - lo)).sin() * (-k * k * h / 2.0).exp();
        }
        q *= 2.0 / w;
        let free = (-(y - x) * (y - x) / (2.0 * h)).exp() / (2.0 * PI * h).sqrt();
        let s = bridge_survival(x, y, lo, hi, h);
        assert!((s - q / free).abs() < 1e-10, "{s} vs {}", q / free);
    }
    assert_eq!(bridge_survival(0.7, 0.0, -0.6, 0.6, 0.1), 0.0);
}

fn settings(n: usize, m: usize, seed: u64, monitoring: Monitoring) -> McSettings {
    McSettings { n_grid: n, m_paths: m, seed, monitoring }
}

#[test]
fn mc_trivial_examples() {
    let fbm = ProcessModel::fbm(0.7).unwrap();
    let e = mc_estimate(&fbm, 10.0, (0.0, 1.0), StatKind::Range, 128, 1000, RngSpec::new(1)).unwrap();
    assert_eq!((e.estimate, e.halfwidth), (1.0, 0.0));
    let e = mc_estimate(&fbm, 0.0, (0.0, 1.0), StatKind::Anchored, 128, 1000, RngSpec::new(1)).unwrap();
    assert_eq!(e.estimate, 0.0);
    assert!(mc_estimate(&fbm, 0.5, (0.0, 1.0), StatKind::Range, 64, 1000, RngSpec::new(1)).is_err());
    assert!(mc_estimate(&fbm, 0.5, (0.0, 1.0), StatKind::Range, 128, 999, RngSpec::new(1)).is_err());
}

#[test]
fn bridge_monitoring_matches_series_and_lies_below_grid() {
    let eps = [0.6, 0.9];
    let s = settings(256, 20_000, 7, Monitoring::BrownianBridge);
    let b = mc_curve(&ProcessModel::Wiener, &eps, (0.0, 1.0), StatKind::Anchored, &s).unwrap();
    let g = mc_curve(&ProcessModel::Wiener, &eps, (0.0, 1.0), StatKind::Anchored, &McSettings { monitoring: Monitoring::Grid, ..s }).unwrap();
    for (bb, gg) in b.iter().zip(&g) {
        let exact = wiener_sup_abs_probability(bb.eps);
        assert!((bb.estimate - exact).abs() < 4.0 * bb.std_error(), "{bb:?} vs {exact}");
        assert!(gg.estimate >= bb.estimate);
    }
    assert!(mc_curve(&ProcessModel::fbm(0.7).unwrap(), &eps, (0.0, 1.0), StatKind::Anchored, &s).is_err());
}

#[test]
fn mc_is_deterministic_and_halfwidth_shrinks() {
    let m = ProcessModel::fbm(0.6).unwrap();
    let a = mc_curve(&m, &[0.5, 0.7], (0.0, 1.0), StatKind::Range, &settings(128, 2000, 3, Monitoring::Grid)).unwrap();
    let b = mc_curve(&m, &[0.5, 0.7], (0.0, 1.0), StatKind::Range, &settings(128, 2000, 3, Monitoring::Grid)).unwrap();
    assert_eq!(a, b);
    let c = mc_curve(&m, &[0.7], (0.0, 1.0), StatKind::Range, &settings(128, 8000, 3, Monitoring::Grid)).unwrap();
    let ratio = a[1].halfwidth / c[0].halfwidth;
    assert!((ratio - 2.0).abs() < 0.3, "{ratio}");
}

#[test]
fn verify_bound_fbm() {
    let m = ProcessModel::fbm(0.75).unwrap();
    let input = HelixInput::fbm(0.75).unwrap();
    let r = verify_bound(&m, &input, &[0.5, 0.01], &[1.0, 0.5], &settings(128, 2000, 5, Monitoring::Grid)).unwrap();
    assert_eq!(r.rows.len(), 8);
    assert!(r.all_pass());
    let row = r.rows.iter().find(|r| r.eps == 0.5 && r.delta == 1.0 && r.kind == StatKind::Range).unwrap();
    assert_eq!(row.bound, 1.0);
    assert!(row.mc_estimate < 1.0);
    let mut buf = Vec::new();
    r.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().next().unwrap(), "eps,delta,kind,mc_estimate,mc_halfwidth,bound,pass");
    assert_eq!(text.lines().count(), 9);
}

#[test]
fn verify_bound_rejects_wrong_declaration() {
    let m = ProcessModel::fbm(0.75).unwrap();
    let bad = HelixInput::new(1.0, 0.5, 0.75, 0.75, Sign::Positive).unwrap();
    assert!(matches!(
        verify_bound(&m, &bad, &[0.5], &[1.0], &settings(128, 1000, 5, Monitoring::Grid)),
        Err(Error::ModelInconsistency(_))
    ));
}

#[test]
fn slope_fit_recovers_exact_curve() {
    let pts: Vec<(f64, f64)> = [0.4, 0.5, 0.6, 0.7, 0.8].iter().map(|&e| (e, wiener_sup_abs_probability(e))).collect();
    let s = fit_decay_slope(&pts).unwrap();
    assert!((s - 2.14).abs() < 0.02, "{s}");
    assert!(fit_decay_slope(&[(0.5, 0.0), (0.6, 1.0)]).is_none());
}

proptest! {
    #[test]
    fn bound_monotone(h in 0.5f64..0.95, e1 in 1e-4f64..0.06, e2 in 1e-4f64..0.06, d1 in 0.05f64..1.0, d2 in 0.05f64..1.0) {
        let (c, e) = derive_constants(&HelixInput::fbm(h).unwrap()).unwrap();
        let (elo, ehi) = (e1.min(e2), e1.max(e2));
        let (dlo, dhi) = (d1.min(d2), d1.max(d2));
        prop_assert!(theoretical_bound(&c, &e, elo, d1) <= theoretical_bound(&c, &e, ehi, d1));
        prop_assert!(theoretical_bound(&c, &e, e1, dhi) <= theoretical_bound(&c, &e, e1, dlo));
        let b = theoretical_bound(&c, &e, e1, d1);
        prop_assert!((0.0..=1.0).contains(&b));
    }

    #[test]
    fn scaling_identity(c1 in 0.2f64..4.0, c2 in 0.2f64..4.0, h1 in 0.5f64..0.95, f in 0.0f64..1.0, d in 0.01f64..1.0, t in 0.01f64..1.2) {
        let h2 = (2.0 * h1 - 1.0) + f * (h1 - (2.0 * h1 - 1.0));
        prop_assume!(h2 > 2.0 * h1 - 1.0 + 1e-6 && h2 > 0.0);
        let input = HelixInput::new(c1, c2, h1, h2, Sign::Positive).unwrap();
        let (c, e) = derive_constants(&input).unwrap();
        let eps = t * c.c3 * d.powf(h1);
        let a = theoretical_bound(&c, &e, eps, d);
        let b = theoretical_bound_by_scaling(&input, eps, d).unwrap();
        prop_assert!(a == b || (a - b).abs() <= 1e-12 * a.max(b) || a.max(b) < 1e-290, "{} vs {}", a, b);
    }

    #[test]
    fn accepted_holder_hints_below_mu_over_lambda(h1 in 0.5f64..0.95, f in 0.01f64..1.0) {
        let h2 = (2.0 * h1 - 1.0) + f * (h1 - (2.0 * h1 - 1.0));
        let (_, e) = derive_constants(&HelixInput::new(1.0, 1.0, h1, h2, Sign::Positive).unwrap()).unwrap();
        prop_assert!(e.mu / e.lambda >= h1 * (1.0 - 1e-12));
        // any θ admissible for the calculus satisfies θ ≤ H2 ≤ H1 ≤ μ/λ
        prop_assert!(qhlab_core::models::rho_zero_from_exponents(e.lambda, e.mu, h2).is_ok());
    }
}
