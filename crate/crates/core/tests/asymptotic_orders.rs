use ddcap::asymptotics::{
    bernoulli_klogk, expansion_csi, expansion_segmented, loglog_slope, ExpansionReport, Regime,
};
use ddcap::bounds::{optimize_alpha, upper_bound_u};
use ddcap::capacity::{blahut_arimoto, BaOptions};
use ddcap::channel::ChannelParams;

const LADDER: [usize; 5] = [64, 128, 256, 512, 1024];

fn spread(xs: &[f64]) -> f64 {
    let hi = xs.iter().cloned().fold(f64::MIN, f64::max);
    let lo = xs.iter().cloned().fold(f64::MAX, f64::min);
    hi / lo
}

#[test]
fn uniform_bound_residual_is_inverse_square() {
    for (p, q) in [(0.1, 0.0), (0.05, 0.05), (0.0, 0.1), (0.7, 0.3)] {
        let res: Vec<f64> = LADDER
            .iter()
            .map(|&ell| {
                ExpansionReport::l_uniform(&ChannelParams::new(ell, p, q).unwrap())
                    .unwrap()
                    .residual
            })
            .collect();
        let xs: Vec<f64> = LADDER.iter().map(|&l| l as f64).collect();
        let slope = loglog_slope(&xs, &res).unwrap();
        assert!((slope + 2.0).abs() <= 0.3, "p={p} q={q} slope={slope}");
    }
}

#[test]
fn uniform_bound_residual_constant_is_stable() {
    let c: Vec<f64> = [32usize, 64, 128, 256, 512, 1024]
        .iter()
        .map(|&ell| {
            let r = ExpansionReport::l_uniform(&ChannelParams::new(ell, 0.06, 0.04).unwrap())
                .unwrap();
            r.residual.abs() * (ell * ell) as f64 / 0.1
        })
        .collect();
    assert!(spread(&c) < 1.1, "{c:?}");
}

#[test]
fn upper_bound_residual_is_linear_in_the_error_rate_at_fixed_length() {
    // The leading residual is (p+q)·O(ℓ⁻²); the quadratic term sits below it.
    let ps = [0.04, 0.02, 0.01, 0.005];
    for ell in [256usize, 1024, 4096] {
        let res: Vec<f64> = ps
            .iter()
            .map(|&p| {
                ExpansionReport::upper(&ChannelParams::new(ell, p, 0.0).unwrap())
                    .unwrap()
                    .residual
            })
            .collect();
        let slope = loglog_slope(&ps, &res).unwrap();
        assert!((slope - 1.0).abs() <= 0.1, "ell={ell} slope={slope}");
    }
    let res: Vec<f64> = LADDER
        .iter()
        .map(|&ell| {
            ExpansionReport::upper(&ChannelParams::new(ell, 0.0, 0.01).unwrap())
                .unwrap()
                .residual
        })
        .collect();
    let xs: Vec<f64> = LADDER.iter().map(|&l| l as f64).collect();
    let slope = loglog_slope(&xs, &res).unwrap();
    assert!((slope + 2.0).abs() <= 0.3, "slope={slope}");
}

#[test]
fn capacity_expansion_is_sandwiched() {
    let params = ChannelParams::new(10, 0.01, 0.0).unwrap();
    let e = expansion_csi(&params).unwrap();
    let l = 10.0f64;
    let s = 0.01;
    let slack = s / (l * l) + s * s * l.log2().powi(2) / l;
    let lower = optimize_alpha(&params, 1e-7).unwrap().value;
    let upper = upper_bound_u(&params).unwrap();
    assert!(e >= lower - slack && e <= upper + slack, "{lower} {e} {upper} {slack}");
    let c = blahut_arimoto(&params, &BaOptions::default()).unwrap();
    assert!((c.capacity_bits_per_symbol - e).abs() <= slack);
}

#[test]
fn segmented_small_rate_residuals_are_inverse_cube() {
    for c in [0.5, 2.0] {
        for regime in [Regime::DelSmall, Regime::DupSmall] {
            let scaled: Vec<f64> = [32usize, 64, 128, 256, 512, 1024]
                .iter()
                .map(|&ell| {
                    let rate = c / ell as f64;
                    let params = match regime {
                        Regime::DelSmall => ChannelParams::new(ell, rate, 0.0),
                        _ => ChannelParams::new(ell, 0.0, rate),
                    }
                    .unwrap();
                    let r = ExpansionReport::segmented(&params, regime).unwrap();
                    r.residual.abs() * (ell as f64).powi(3)
                })
                .collect();
            assert!(spread(&scaled) < 1.5, "c={c} {regime:?} {scaled:?}");
        }
    }
}

#[test]
fn segmented_general_residual_is_order_one_over_length() {
    for (p, q) in [(0.3, 0.0), (0.1, 0.2), (0.0, 0.5)] {
        let scaled: Vec<f64> = LADDER
            .iter()
            .map(|&ell| {
                let params = ChannelParams::new(ell, p, q).unwrap();
                let r = ExpansionReport::segmented(&params, Regime::General).unwrap();
                r.residual.abs() * ell as f64
            })
            .collect();
        assert!(spread(&scaled) < 1.5, "p={p} q={q} {scaled:?}");
    }
}

#[test]
fn small_rate_expansions_extend_the_general_one() {
    // At p = c/ℓ the small-rate forms add only O(log ℓ / ℓ) terms to the general one.
    for ell in [64usize, 1024] {
        let rate = 1.0 / ell as f64;
        let params = ChannelParams::new(ell, rate, 0.0).unwrap();
        let g = expansion_segmented(&params, Regime::General).unwrap();
        let d = expansion_segmented(&params, Regime::DelSmall).unwrap();
        let l = ell as f64;
        assert!((g - d).abs() <= 3.0 * l.log2() / (l * l));
    }
}

#[test]
fn bernoulli_transform_residual_band() {
    let scaled: Vec<f64> = (4..=12)
        .map(|e| {
            let n = 1usize << e;
            n as f64 * bernoulli_klogk(n, 0.5).unwrap().residual().abs()
        })
        .collect();
    assert!(spread(&scaled) <= 3.0, "{scaled:?}");
}
