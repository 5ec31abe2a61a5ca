//! Large-block expansions and the constants that appear in them.
//!
//! ```text
//! K  = Σ_{j≥1} j log j / 2^(j+1)
//! K₁ = log(2e) - K
//! K₂ = K - log(e/2)
//! ```
//!
//! The lower bound `L^0.5_SI`, the upper bound `U` and `C_SI` share the
//! expansion
//!
//! ```text
//! 1 - ((p+q)/ℓ) log ℓ + (p/ℓ)(K-1) + (q/ℓ)(K+1)
//! ```
//!
//! and differ only in their error terms.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::bounds::{lower_bound_no_si, lower_bound_uniform, upper_bound_u};
use crate::capacity::{blahut_arimoto, BaOptions};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};
use crate::info::{binomial_pmf, xlog2x, NeumaierSum};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Constants {
    pub k: f64,
    pub k1: f64,
    pub k2: f64,
    /// Number of series terms summed.
    pub terms: usize,
    /// Certified bound on the omitted tail of `K`.
    pub tail_bound: f64,
}

/// `Σ_{j≥n} j²/2^(j+1) = (n² + 2n + 3)/2^n`, which dominates the tail of `K`.
fn k_tail_bound(n: usize) -> f64 {
    let n = n as f64;
    (n * n + 2.0 * n + 3.0) * (-n).exp2()
}

/// `K` summed until the certified tail is at most `tol`.
pub fn constant_k(tol: f64) -> Result<Constants> {
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let mut sum = NeumaierSum::default();
    let mut j = 1usize;
    while k_tail_bound(j) > tol {
        let jf = j as f64;
        sum.add(jf * jf.log2() * (-(jf + 1.0)).exp2());
        j += 1;
    }
    let k = sum.total();
    // Written through d so that k1 + k2 rounds to exactly 2.
    let d = LOG2_E - k;
    Ok(Constants {
        k,
        k1: 1.0 + d,
        k2: 1.0 - d,
        terms: j - 1,
        tail_bound: k_tail_bound(j),
    })
}

/// Cached constants with tail below `1e-13`.
pub fn constants() -> &'static Constants {
    static CELL: OnceLock<Constants> = OnceLock::new();
    CELL.get_or_init(|| constant_k(1e-13).expect("positive tolerance"))
}

/// Exact and asymptotic values of the Bernoulli transform of `k log k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BernoulliTransform {
    pub exact: f64,
    pub asymptotic: f64,
}

impl BernoulliTransform {
    pub fn residual(&self) -> f64 {
        self.exact - self.asymptotic
    }
}

/// `Σ_k C(n,k) s^k t^(n-k) k log k` and its large-`n` approximation
///
/// ```text
/// sn log(sn) + (t + (s-1)/2) log e
/// ```
///
/// in bits. The constant term is the natural-log form of the correction rescaled to
/// base 2; the base-2 reading leaves a residual that grows linearly in `n`.
pub fn bernoulli_klogk(n: usize, s: f64) -> Result<BernoulliTransform> {
    check_transform(n, s)?;
    let exact = binomial_pmf(n, s)
        .iter()
        .enumerate()
        .map(|(k, w)| w * xlog2x(k as f64))
        .collect::<NeumaierSum>()
        .total();
    let t = 1.0 - s;
    let sn = s * n as f64;
    Ok(BernoulliTransform {
        exact,
        asymptotic: xlog2x(sn) + (t + (s - 1.0) / 2.0) * LOG2_E,
    })
}

/// `Σ_k C(n,k) s^k t^(n-k) log k` with the `k = 0` term dropped.
pub fn bernoulli_logk(n: usize, s: f64) -> f64 {
    binomial_pmf(n, s)
        .iter()
        .enumerate()
        .skip(1)
        .map(|(k, w)| w * (k as f64).log2())
        .collect::<NeumaierSum>()
        .total()
}

/// The transform of `k log k` rebuilt from the transform of `log k` through
/// `S2(n) = n S1(n) - t n S1(n-1)`.
pub fn bernoulli_klogk_via_log(n: usize, s: f64) -> Result<f64> {
    check_transform(n, s)?;
    let nf = n as f64;
    let prev = if n > 1 { bernoulli_logk(n - 1, s) } else { 0.0 };
    Ok(nf * bernoulli_logk(n, s) - (1.0 - s) * nf * prev)
}

fn check_transform(n: usize, s: f64) -> Result<()> {
    if n < 1 {
        return Err(Error::InvalidArgument("n ≥ 1 required".into()));
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(Error::InvalidArgument(format!("s={s} outside (0, 1]")));
    }
    Ok(())
}

fn check_ell(params: &ChannelParams) -> Result<()> {
    if params.ell() < 2 {
        return Err(Error::InvalidParams("ℓ > 1 required".into()));
    }
    Ok(())
}

fn shared_polynomial(params: &ChannelParams) -> f64 {
    let k = constants().k;
    let ell = params.ell() as f64;
    let (p, q) = (params.p(), params.q());
    1.0 - (p + q) / ell * ell.log2() + p / ell * (k - 1.0) + q / ell * (k + 1.0)
}

/// Expansion of `L^0.5_SI`, valid on the whole simplex with error
/// `O((p+q)/ℓ²)`.
pub fn expansion_l_uniform(params: &ChannelParams) -> Result<f64> {
    check_ell(params)?;
    Ok(shared_polynomial(params))
}

/// Expansion of `U`, with error `O((p+q)² log²ℓ / ℓ)` when `(p+q) log ℓ → 0`.
pub fn expansion_u(params: &ChannelParams) -> Result<f64> {
    check_ell(params)?;
    Ok(shared_polynomial(params))
}

/// Expansion of `C_SI`, with error `(p+q)O(ℓ⁻²) + O((p+q)² log²ℓ / ℓ)`.
pub fn expansion_csi(params: &ChannelParams) -> Result<f64> {
    check_ell(params)?;
    Ok(shared_polynomial(params))
}

/// Regime of the segmented-channel expansion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    General,
    DelSmall,
    DupSmall,
}

/// Expansion of the segmented-channel capacity.
///
/// `DelSmall` requires `q = 0` and `DupSmall` requires `p = 0`.
pub fn expansion_segmented(params: &ChannelParams, regime: Regime) -> Result<f64> {
    check_ell(params)?;
    let ell = params.ell() as f64;
    let c = constants();
    match regime {
        Regime::General => Ok(1.0 - (params.p() + params.q()) * ell.log2() / ell),
        Regime::DelSmall => {
            if params.q() != 0.0 {
                return Err(Error::RegimeMismatch {
                    regime: "del_small",
                    requirement: "q = 0",
                });
            }
            let pd = params.p() / ell;
            Ok(1.0 + xlog2x(pd) - c.k1 * pd)
        }
        Regime::DupSmall => {
            if params.p() != 0.0 {
                return Err(Error::RegimeMismatch {
                    regime: "dup_small",
                    requirement: "p = 0",
                });
            }
            let pi = params.q() / ell;
            Ok(1.0 + xlog2x(pi) + c.k2 * pi)
        }
    }
}

/// An expansion next to the exact quantity it approximates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub params: ChannelParams,
    pub expansion_value: f64,
    pub exact_value: f64,
    pub residual: f64,
}

impl ExpansionReport {
    fn new(params: &ChannelParams, expansion_value: f64, exact_value: f64) -> Self {
        ExpansionReport {
            params: *params,
            expansion_value,
            exact_value,
            residual: exact_value - expansion_value,
        }
    }

    pub fn l_uniform(params: &ChannelParams) -> Result<Self> {
        Ok(Self::new(
            params,
            expansion_l_uniform(params)?,
            lower_bound_uniform(params)?,
        ))
    }

    pub fn upper(params: &ChannelParams) -> Result<Self> {
        Ok(Self::new(params, expansion_u(params)?, upper_bound_u(params)?))
    }

    pub fn capacity(params: &ChannelParams, ba: &BaOptions) -> Result<Self> {
        let sol = blahut_arimoto(params, ba)?;
        Ok(Self::new(
            params,
            expansion_csi(params)?,
            sol.capacity_bits_per_symbol,
        ))
    }

    /// Against the segmented lower bound `L^0.5_SI - H_b(p,q)/ℓ`, unclamped.
    pub fn segmented(params: &ChannelParams, regime: Regime) -> Result<Self> {
        Ok(Self::new(
            params,
            expansion_segmented(params, regime)?,
            lower_bound_no_si(params, 0.5)?,
        ))
    }
}

/// Least-squares slope of `ln |y|` against `ln x`.
pub fn loglog_slope(xs: &[f64], ys: &[f64]) -> Result<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return Err(Error::InvalidArgument(
            "slope fit needs at least two paired points".into(),
        ));
    }
    if xs.iter().any(|&x| !(x > 0.0)) || ys.iter().any(|&y| y == 0.0 || !y.is_finite()) {
        return Err(Error::InvalidArgument(
            "slope fit needs positive abscissae and nonzero ordinates".into(),
        ));
    }
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.abs().ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constants_match_quoted_decimals() {
        let c = constants();
        assert!((c.k - 1.2885).abs() < 5e-5);
        assert!((c.k1 - 1.15416377).abs() < 1e-8);
        assert!((c.k2 - 0.84583623).abs() < 1e-8);
        assert_eq!(c.k1 + c.k2, 2.0);
        assert!(c.tail_bound <= 1e-13);
    }

    #[test]
    fn partial_sums_increase_toward_the_limit() {
        let mut last = 0.0;
        for tol in [1e-2, 1e-4, 1e-6, 1e-8, 1e-10] {
            let c = constant_k(tol).unwrap();
            assert!(c.k >= last);
            assert!(constants().k - c.k <= c.tail_bound + 1e-15);
            last = c.k;
        }
        assert!(constant_k(0.0).is_err());
    }

    #[test]
    fn tail_closed_form_matches_partial_sums() {
        for n in [1usize, 2, 5, 10] {
            let direct: f64 = (n..400)
                .map(|j| (j * j) as f64 * (-(j as f64 + 1.0)).exp2())
                .sum();
            assert!((direct - k_tail_bound(n)).abs() < 1e-12);
        }
    }

    #[test]
    fn half_weighted_index_sum_is_one() {
        let s: f64 = (1..200).map(|j| j as f64 * (-(j as f64 + 1.0)).exp2()).sum();
        assert!((s - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transform_examples() {
        for s in [0.1, 0.5, 1.0] {
            assert_eq!(bernoulli_klogk(1, s).unwrap().exact, 0.0);
        }
        for n in [3usize, 10, 100] {
            let b = bernoulli_klogk(n, 1.0).unwrap();
            let nf = n as f64;
            assert!((b.exact - nf * nf.log2()).abs() < 1e-9);
            assert!((b.asymptotic - nf * nf.log2()).abs() < 1e-12);
        }
        assert!(bernoulli_klogk(0, 0.5).is_err());
        assert!(bernoulli_klogk(4, 0.0).is_err());
    }

    #[test]
    fn transform_two_ways_agree() {
        for n in 1..=64 {
            for s in [0.1, 0.5, 0.77, 1.0] {
                let a = bernoulli_klogk(n, s).unwrap().exact;
                let b = bernoulli_klogk_via_log(n, s).unwrap();
                assert!((a - b).abs() <= 1e-9, "n={n} s={s}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn transform_residual_is_order_one_over_n() {
        let scaled: Vec<f64> = (4..=12)
            .map(|e| {
                let n = 1usize << e;
                n as f64 * bernoulli_klogk(n, 0.5).unwrap().residual().abs()
            })
            .collect();
        let (lo, hi) = scaled
            .iter()
            .fold((f64::MAX, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
        assert!(hi / lo <= 3.0, "{scaled:?}");
    }

    #[test]
    fn base_two_constant_term_is_rejected() {
        // Reading "t log e + (s-1)/2" with base-2 logs throughout.
        let drift: Vec<f64> = [256usize, 4096]
            .iter()
            .map(|&n| {
                let b = bernoulli_klogk(n, 0.5).unwrap();
                let alt = xlog2x(0.5 * n as f64) + 0.5 * LOG2_E - 0.25;
                n as f64 * (b.exact - alt).abs()
            })
            .collect();
        assert!(drift[1] / drift[0] > 10.0);
    }

    #[test]
    fn binomial_log_bridge() {
        // (1/(ℓ 2^(ℓ-1))) Σ m C(ℓ,m) log m = log ℓ - 1 + O(1/ℓ).
        let mut scaled = Vec::new();
        for ell in [64usize, 128, 256, 512, 1024] {
            let t = bernoulli_klogk(ell, 0.5).unwrap().exact * 2.0 / ell as f64;
            let err = t - ((ell as f64).log2() - 1.0);
            scaled.push(err * ell as f64);
        }
        let spread = scaled.iter().cloned().fold(f64::MIN, f64::max)
            - scaled.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 0.05, "{scaled:?}");
    }

    #[test]
    fn expansions_at_noiseless_point() {
        let pr = ChannelParams::new(16, 0.0, 0.0).unwrap();
        assert_eq!(expansion_l_uniform(&pr).unwrap(), 1.0);
        assert_eq!(expansion_u(&pr).unwrap(), 1.0);
        assert_eq!(expansion_csi(&pr).unwrap(), 1.0);
        for r in [Regime::General, Regime::DelSmall, Regime::DupSmall] {
            assert_eq!(expansion_segmented(&pr, r).unwrap(), 1.0);
        }
        assert_eq!(ExpansionReport::upper(&pr).unwrap().residual, 0.0);
    }

    #[test]
    fn regime_mismatch_is_rejected() {
        let pr = ChannelParams::new(8, 0.1, 0.1).unwrap();
        assert!(matches!(
            expansion_segmented(&pr, Regime::DelSmall),
            Err(Error::RegimeMismatch { .. })
        ));
        assert!(expansion_segmented(&pr, Regime::DupSmall).is_err());
        assert!(expansion_u(&ChannelParams::new(1, 0.1, 0.0).unwrap()).is_err());
    }

    #[test]
    fn deletion_and_duplication_enter_asymmetrically() {
        let ell: f64 = 100.0;
        let k = constants().k;
        let base = expansion_u(&ChannelParams::new(100, 0.0, 0.0).unwrap()).unwrap();
        let del = expansion_u(&ChannelParams::new(100, 0.01, 0.0).unwrap()).unwrap();
        let dup = expansion_u(&ChannelParams::new(100, 0.0, 0.01).unwrap()).unwrap();
        let log_term = 0.01 * ell.log2() / ell;
        assert!((del - base + log_term - 0.01 * (k - 1.0) / ell).abs() < 1e-15);
        assert!((dup - base + log_term - 0.01 * (k + 1.0) / ell).abs() < 1e-15);
    }

    #[test]
    fn pure_deletion_leading_behavior() {
        let ell = 1024usize;
        let pr = ChannelParams::new(ell, 1.0, 0.0).unwrap();
        let lf = ell as f64;
        let lead = 1.0 - lf.log2() / lf + (constants().k - 1.0) / lf;
        assert!((expansion_l_uniform(&pr).unwrap() - lead).abs() < 1e-15);
        let r = ExpansionReport::l_uniform(&pr).unwrap();
        assert!(r.residual.abs() < 1.0 / (lf * lf) * 4.0);
    }

    #[test]
    fn slope_of_a_power_law() {
        let xs = [1.0, 2.0, 4.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x: &f64| -3.0 * x.powf(-2.0)).collect();
        assert!((loglog_slope(&xs, &ys).unwrap() + 2.0).abs() < 1e-12);
        assert!(loglog_slope(&xs[..1], &ys[..1]).is_err());
    }
}
