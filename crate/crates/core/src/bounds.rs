//! Closed-form capacity bounds for one block of the channel.
//!
//! * [`lower_bound_markov`]: `L^α_SI`, the mutual information per bit
//!   achieved by a symmetric Markov input with transition probability `α`.
//! * [`lower_bound_uniform`]: the `α = 1/2` specialization `L^0.5_SI`.
//! * [`upper_bound_u`]: `U`, obtained by maximizing the pieces of the
//!   mutual-information decomposition separately.
//! * [`lower_bound_no_si`]: `L^α = L^α_SI - H_b(p,q)/ℓ`, a lower bound on the
//!   capacity of the segmented channel once the error pattern is hidden.
//!
//! The closed form of `L^α_SI` is assembled from the per-length output
//! entropies. With `a = α`, `c = 1-α`, `β`, `γ` as below, and `b_N(m; s)` the
//! binomial mass `C(N,m) s^m (1-s)^(N-m)`:
//!
//! ```text
//! ℓ L^α_SI = 1 + (1-p)(ℓ-1) H(a) + (p+q) c^(ℓ-1) log ℓ
//!          - (p/(ℓ c)) [P₁(a) log a + P₂(a) log c]                  deletion slice, log f part
//!          - (p/ℓ) (a²/c) Σ_m b_{ℓ-2}(m; a) v_m log v_m              deletion slice, v_m = β+γ+γm
//!          - (q/ℓ) (1/c) Σ_m b_ℓ(m; c) m log m                       duplication slice
//!          + ((p+q)/ℓ) Σ_k k log k · a c^(k-1) ((ℓ-k-1)a + 2)        H(Y|X) run term
//! P₁(a) = 2a³(ℓ-2) - (ℓ²+ℓ-6)a² + (ℓ²-3ℓ-2)a + 2ℓ
//! P₂(a) = -2a³(ℓ-2) + (ℓ²+ℓ-6)a² - 2a(ℓ²-2ℓ-1) + ℓ(ℓ-3)
//! β = (ℓ-1 + (a²-a)(2ℓ-4))/a²,  γ = (1-2a)/a²
//! ```
//!
//! The last line is the double sum `Σ_m m a^(m-1) c^(ℓ-m) Σ_k C(ℓ-k-1,m-2) k log k`
//! with the inner binomial sum over `m` done in closed form. Exhaustive
//! enumeration of `I(X;Y)` is the reference for every term; see the tests.

use serde::{Deserialize, Serialize};

use crate::channel::{
    self, markov_input_distribution, ChannelParams, MarkovInput, DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::info::{self, binary_entropy, binomial_pmf, xlog2x};
use crate::seq::{empirical_runlength_entropy, BinaryWord};

/// Closed-form evaluation is restricted to `α ∈ [ALPHA_MIN, 1 - ALPHA_MIN]`.
pub const ALPHA_MIN: f64 = 1e-3;

/// Points in the coarse α grid of [`optimize_alpha`].
pub const ALPHA_GRID_POINTS: usize = 65;

/// Above this block length the partition sum in `U` uses the composition
/// recursion instead of enumerating words.
pub const PARTITION_ENUMERATION_MAX: usize = 16;

fn require_block(params: &ChannelParams) -> Result<()> {
    if params.ell() < 2 {
        return Err(Error::InvalidParams(format!(
            "closed-form bounds need ℓ > 1, got ℓ = {}",
            params.ell()
        )));
    }
    Ok(())
}

/// `H_b(p,q) = -p log p - q log q - (1-p-q) log(1-p-q)` in bits.
pub fn entropy_hb(p: f64, q: f64) -> Result<f64> {
    // Reuse the channel's simplex validation.
    let params = ChannelParams::new(1, p, q)?;
    Ok(-xlog2x(p) - xlog2x(q) - xlog2x(params.stay()))
}

/// The assembled closed form of `L^α_SI`, without range checks.
///
/// Requires `ℓ ≥ 2` and `0 < α < 1`.
pub fn l_si_markov_closed_form(params: &ChannelParams, alpha: f64) -> f64 {
    let ell = params.ell();
    let l = ell as f64;
    let (p, q) = (params.p(), params.q());
    let a = alpha;
    let c = 1.0 - alpha;

    let head = 1.0
        + (1.0 - p) * (l - 1.0) * binary_entropy(a)
        + (p + q) * c.powi(ell as i32 - 1) * l.log2();

    let p1 = 2.0 * a.powi(3) * (l - 2.0) - (l * l + l - 6.0) * a * a
        + (l * l - 3.0 * l - 2.0) * a
        + 2.0 * l;
    let p2 = -2.0 * a.powi(3) * (l - 2.0) + a * a * (l * l + l - 6.0)
        - 2.0 * a * (l * l - 2.0 * l - 1.0)
        + l * (l - 3.0);
    let deletion_poly = (p1 * a.log2() + p2 * c.log2()) / c;

    let beta = (l - 1.0 + (a * a - a) * (2.0 * l - 4.0)) / (a * a);
    let gamma = (1.0 - 2.0 * a) / (a * a);
    let deletion_sum = a * a / c
        * info::sum(
            binomial_pmf(ell - 2, a)
                .into_iter()
                .enumerate()
                .map(|(m, w)| w * xlog2x(beta + gamma + gamma * m as f64)),
        );

    let duplication_sum = info::sum(
        binomial_pmf(ell, c)
            .into_iter()
            .enumerate()
            .skip(1)
            .map(|(m, w)| w * xlog2x(m as f64)),
    ) / c;

    let run_sum = run_term_markov(ell, a);

    (head - (p / l) * deletion_poly - (p / l) * deletion_sum - (q / l) * duplication_sum
        + ((p + q) / l) * run_sum)
        / l
}

/// `Σ_{k=1}^{ℓ-1} k log k · a (1-a)^(k-1) ((ℓ-k-1) a + 2)`.
fn run_term_markov(ell: usize, a: f64) -> f64 {
    let c = 1.0 - a;
    let mut c_pow = 1.0;
    let mut acc = info::NeumaierSum::default();
    for k in 1..ell {
        let kf = k as f64;
        acc.add(xlog2x(kf) * a * c_pow * ((ell - k - 1) as f64 * a + 2.0));
        c_pow *= c;
    }
    acc.total()
}

/// How a Markov lower bound was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluation {
    ClosedForm,
    /// `α` fell outside the closed-form interval and the value was obtained
    /// by enumerating the channel.
    Enumeration,
}

/// Value of `L^α_SI` together with how it was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovBound {
    pub value: f64,
    pub evaluation: Evaluation,
}

/// `L^α_SI` in bits per symbol.
///
/// For `α` outside `[ALPHA_MIN, 1-ALPHA_MIN]` the closed form has removable
/// singularities. There the value comes from enumeration when `ℓ` is within
/// the enumeration cap, and is flagged. Longer blocks keep the closed form,
/// which stays accurate to about `1e-8` up to `α = 1 - 1e-7`. The endpoints
/// `α ∈ {0, 1}` are exact: constant inputs are always told apart (`1/ℓ`),
/// and alternating inputs collide only when an end bit is deleted
/// (`(1 - 2p/ℓ)/ℓ`).
pub fn lower_bound_markov(params: &ChannelParams, alpha: f64) -> Result<MarkovBound> {
    require_block(params)?;
    let input = MarkovInput::new(alpha)?;
    let l = params.ell() as f64;
    let closed = |value| MarkovBound {
        value,
        evaluation: Evaluation::ClosedForm,
    };
    if alpha == 0.0 {
        return Ok(closed(1.0 / l));
    }
    if alpha == 1.0 {
        return Ok(closed((1.0 - 2.0 * params.p() / l) / l));
    }
    if (ALPHA_MIN..=1.0 - ALPHA_MIN).contains(&alpha) || params.ell() > DEFAULT_ENUMERATION_CAP {
        return Ok(closed(l_si_markov_closed_form(params, alpha)));
    }
    let value = markov_lower_bound_enumerated(params, input, DEFAULT_ENUMERATION_CAP)?;
    Ok(MarkovBound {
        value,
        evaluation: Evaluation::Enumeration,
    })
}

/// `I(X^ℓ(α); Y) / ℓ` by exhaustive enumeration.
pub fn markov_lower_bound_enumerated(
    params: &ChannelParams,
    input: MarkovInput,
    cap: usize,
) -> Result<f64> {
    if params.ell() > cap {
        return Err(Error::EnumerationCap {
            ell: params.ell(),
            cap,
        });
    }
    let dist = markov_input_distribution(params.ell(), input)?;
    let mi = channel::mutual_information_exact_with_cap(params, &dist, cap)?;
    Ok(mi / params.ell() as f64)
}

/// `L^0.5_SI`, the uniform-input lower bound.
pub fn lower_bound_uniform(params: &ChannelParams) -> Result<f64> {
    require_block(params)?;
    let ell = params.ell();
    let l = ell as f64;
    let (p, q) = (params.p(), params.q());
    let binomial_term = info::sum(
        binomial_pmf(ell, 0.5)
            .into_iter()
            .enumerate()
            .map(|(m, w)| w * xlog2x(m as f64)),
    );
    let run_term = info::sum((1..ell).map(|j| {
        (ell - j + 3) as f64 * 0.5f64.powi(j as i32 + 1) * xlog2x(j as f64)
    }));
    let half_pow = 0.5f64.powi(ell as i32 - 1);
    Ok(1.0 - p / l - 2.0 * q / (l * l) * binomial_term - (p - (p + q) * half_pow) * l.log2() / l
        + (p + q) / (l * l) * run_term)
}

/// `log2 Σ_{x ∈ {0,1}^ℓ} 2^(-c Ĥ(r(x)))` by enumerating all words.
pub fn log2_partition_enumerated(ell: usize, c: f64) -> Result<f64> {
    if ell == 0 || ell > 30 {
        return Err(Error::EnumerationCap { ell, cap: 30 });
    }
    let total = info::sum(BinaryWord::all(ell).map(|x| {
        let h = empirical_runlength_entropy(&x).expect("non-empty word");
        (-c * h).exp2()
    }));
    Ok(total.log2())
}

/// `log2 Σ_{x ∈ {0,1}^ℓ} 2^(-c Ĥ(r(x)))` by summing over run profiles.
///
/// `2^(-c Ĥ)` factors over runs as `Π_i (r_i/ℓ)^(c r_i/ℓ)`, so the sum over
/// words is twice the sum over compositions of `ℓ` of a product of per-run
/// weights. The composition sum obeys `V(n) = Σ_r φ(r) V(n-r)`, evaluated in
/// log space in `O(ℓ²)`.
pub fn log2_partition_compositions(ell: usize, c: f64) -> Result<f64> {
    if ell == 0 {
        return Err(Error::InvalidArgument("partition needs ℓ ≥ 1".into()));
    }
    let l = ell as f64;
    let ln_phi: Vec<f64> = (0..=ell)
        .map(|r| {
            if r == 0 {
                f64::NEG_INFINITY
            } else {
                let frac = r as f64 / l;
                c * frac * frac.ln()
            }
        })
        .collect();
    let mut ln_v = vec![f64::NEG_INFINITY; ell + 1];
    ln_v[0] = 0.0;
    let mut terms = Vec::with_capacity(ell);
    for n in 1..=ell {
        terms.clear();
        terms.extend((1..=n).map(|r| ln_phi[r] + ln_v[n - r]));
        ln_v[n] = log_sum_exp(&terms);
    }
    Ok(1.0 + ln_v[ell] / std::f64::consts::LN_2)
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + info::sum(xs.iter().map(|x| (x - max).exp())).ln()
}

/// `log2 Σ_x 2^(-c Ĥ(r(x)))`, enumerating for small blocks.
pub fn log2_partition(ell: usize, c: f64) -> Result<f64> {
    if ell <= PARTITION_ENUMERATION_MAX {
        log2_partition_enumerated(ell, c)
    } else {
        log2_partition_compositions(ell, c)
    }
}

/// `log2(2^(ℓ+1) - 2)` without overflow for long blocks.
pub(crate) fn log2_nonalternating_count(ell: usize) -> f64 {
    (ell + 1) as f64 + (-(0.5f64.powi(ell as i32))).ln_1p() / std::f64::consts::LN_2
}

/// The upper bound `U` in bits per symbol.
///
/// At `p + q = 1` the partition term vanishes in the limit and
/// `U = [p(ℓ-1) + q log2(2^(ℓ+1)-2)]/ℓ`.
pub fn upper_bound_u(params: &ChannelParams) -> Result<f64> {
    require_block(params)?;
    let ell = params.ell();
    let l = ell as f64;
    let (p, q) = (params.p(), params.q());
    let stay = 1.0 - p - q;
    let mut numerator = p * (l - 1.0) + q * log2_nonalternating_count(ell);
    if stay > 1e-12 {
        let c = (p + q) / stay;
        numerator += stay * log2_partition(ell, c)?;
    }
    Ok(numerator / l)
}

/// `L^α = L^α_SI - H_b(p,q)/ℓ`; may be negative.
pub fn lower_bound_no_si(params: &ChannelParams, alpha: f64) -> Result<f64> {
    let l_si = lower_bound_markov(params, alpha)?.value;
    Ok(l_si - entropy_hb(params.p(), params.q())? / params.ell() as f64)
}

/// Golden-section search for a maximum of `f` on `[lo, hi]`.
///
/// Stops once the bracket is narrower than `tol` and returns the best point
/// seen.
pub fn golden_section_max<F>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 >= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Maximizer of `L^α_SI` over the closed-form α interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaOptimum {
    pub alpha: f64,
    pub value: f64,
}

/// Maximizes `L^α_SI` over `α ∈ [ALPHA_MIN, 1-ALPHA_MIN]`: a 65-point grid
/// brackets the best cell, then golden-section search refines it to `tol`.
pub fn optimize_alpha(params: &ChannelParams, tol: f64) -> Result<AlphaOptimum> {
    require_block(params)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidArgument(format!("tolerance {tol} must be positive")));
    }
    let lo = ALPHA_MIN;
    let hi = 1.0 - ALPHA_MIN;
    let step = (hi - lo) / (ALPHA_GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..ALPHA_GRID_POINTS)
        .map(|i| if 2 * i + 1 == ALPHA_GRID_POINTS { 0.5 } else { lo + step * i as f64 })
        .collect();
    let f = |a: f64| l_si_markov_closed_form(params, a);
    let (best_i, best_v) = grid
        .iter()
        .map(|&a| f(a))
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |acc, (i, v)| if v > acc.1 { (i, v) } else { acc });
    let left = grid[best_i.saturating_sub(1)];
    let right = grid[(best_i + 1).min(ALPHA_GRID_POINTS - 1)];
    let (alpha, value) = golden_section_max(f, left, right, tol);
    Ok(if value >= best_v {
        AlphaOptimum { alpha, value }
    } else {
        AlphaOptimum {
            alpha: grid[best_i],
            value: best_v,
        }
    })
}

/// How the Markov parameter of a [`BoundsReport`] is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaChoice {
    Fixed(f64),
    Optimize,
    Uniform,
}

/// Default width of the golden-section bracket when optimizing α.
pub const DEFAULT_ALPHA_TOL: f64 = 1e-6;

/// All bounds at one parameter point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub params: ChannelParams,
    pub alpha: f64,
    pub l_si_alpha: f64,
    pub l_si_uniform: f64,
    pub upper_u: f64,
    /// `max(0, l_no_si_raw)`.
    pub l_no_si: f64,
    pub l_no_si_raw: f64,
    pub hb_pq: f64,
    pub evaluation: Evaluation,
}

impl BoundsReport {
    pub fn evaluate(params: &ChannelParams, choice: AlphaChoice) -> Result<Self> {
        require_block(params)?;
        let (alpha, bound) = match choice {
            AlphaChoice::Fixed(a) => (a, lower_bound_markov(params, a)?),
            AlphaChoice::Uniform => (0.5, lower_bound_markov(params, 0.5)?),
            AlphaChoice::Optimize => {
                let opt = optimize_alpha(params, DEFAULT_ALPHA_TOL)?;
                (
                    opt.alpha,
                    MarkovBound {
                        value: opt.value,
                        evaluation: Evaluation::ClosedForm,
                    },
                )
            }
        };
        let hb_pq = entropy_hb(params.p(), params.q())?;
        let l_no_si_raw = bound.value - hb_pq / params.ell() as f64;
        Ok(BoundsReport {
            params: *params,
            alpha,
            l_si_alpha: bound.value,
            l_si_uniform: lower_bound_uniform(params)?,
            upper_u: upper_bound_u(params)?,
            l_no_si: l_no_si_raw.max(0.0),
            l_no_si_raw,
            hb_pq,
            evaluation: bound.evaluation,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::Distribution;
    use crate::seq::binomial;

    fn params(ell: usize, p: f64, q: f64) -> ChannelParams {
        ChannelParams::new(ell, p, q).unwrap()
    }

    fn enumerated(ell: usize, p: f64, q: f64, alpha: f64) -> f64 {
        markov_lower_bound_enumerated(&params(ell, p, q), MarkovInput::new(alpha).unwrap(), 16)
            .unwrap()
    }

    #[test]
    fn hb_examples() {
        assert_eq!(entropy_hb(0.0, 0.0).unwrap(), 0.0);
        assert!((entropy_hb(0.5, 0.0).unwrap() - 1.0).abs() < 1e-15);
        assert!((entropy_hb(1.0 / 3.0, 1.0 / 3.0).unwrap() - 3f64.log2()).abs() < 1e-14);
        assert!(entropy_hb(0.8, 0.3).is_err());
        assert!(entropy_hb(-0.1, 0.3).is_err());
    }

    #[test]
    fn noiseless_markov_bound() {
        for ell in 2..9 {
            for &a in &[0.1, 0.37, 0.5, 0.9] {
                let v = lower_bound_markov(&params(ell, 0.0, 0.0), a).unwrap().value;
                let expected = (1.0 + (ell - 1) as f64 * binary_entropy(a)) / ell as f64;
                assert!((v - expected).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn markov_matches_enumeration_at_reference_point() {
        let closed = lower_bound_markov(&params(4, 0.3, 0.2), 0.3).unwrap();
        assert_eq!(closed.evaluation, Evaluation::ClosedForm);
        assert!((closed.value - enumerated(4, 0.3, 0.2, 0.3)).abs() < 1e-12);
    }

    #[test]
    fn markov_matches_enumeration_off_grid() {
        for ell in [2usize, 3, 7, 12] {
            for &(p, q) in &[(0.05, 0.9), (0.63, 0.11), (1.0, 0.0), (0.0, 1.0)] {
                for &a in &[0.0013, 0.21, 0.77, 0.998] {
                    let c = l_si_markov_closed_form(&params(ell, p, q), a);
                    let e = enumerated(ell, p, q, a);
                    assert!((c - e).abs() < 1e-9, "ℓ={ell} p={p} q={q} α={a}: {c} vs {e}");
                }
            }
        }
    }

    #[test]
    fn alpha_outside_interval_falls_back_to_enumeration() {
        let pr = params(5, 0.2, 0.1);
        for a in [1e-4, 0.99995] {
            let b = lower_bound_markov(&pr, a).unwrap();
            assert_eq!(b.evaluation, Evaluation::Enumeration);
            assert!((b.value - enumerated(5, 0.2, 0.1, a)).abs() < 1e-15);
        }
        let long = lower_bound_markov(&params(20, 0.1, 0.1), 1e-4).unwrap();
        assert_eq!(long.evaluation, Evaluation::ClosedForm);
        assert!(lower_bound_markov(&pr, 1.5).is_err());
        assert!(lower_bound_markov(&params(1, 0.1, 0.1), 0.5).is_err());
    }

    #[test]
    fn endpoint_alphas_are_exact() {
        for ell in 2..=10 {
            for &(p, q) in &[(0.0, 0.0), (0.3, 0.2), (1.0, 0.0), (0.0, 1.0), (0.45, 0.55)] {
                for a in [0.0, 1.0] {
                    let b = lower_bound_markov(&params(ell, p, q), a).unwrap();
                    let e = enumerated(ell, p, q, a);
                    assert!((b.value - e).abs() < 1e-12, "ℓ={ell} p={p} q={q} α={a}");
                }
            }
        }
        assert!((lower_bound_markov(&params(400, 0.5, 0.0), 1.0).unwrap().value
            - (1.0 - 1.0 / 400.0) / 400.0)
            .abs()
            < 1e-15);
    }

    #[test]
    fn run_term_equals_double_sum() {
        for ell in 2..=30usize {
            for &a in &[0.1f64, 0.5, 0.83] {
                let c = 1.0 - a;
                let mut double = 0.0;
                for m in 2..=ell {
                    let inner: f64 = (1..=ell + 1 - m)
                        .map(|k| {
                            binomial((ell - k - 1) as u64, (m - 2) as u64).unwrap() as f64
                                * xlog2x(k as f64)
                        })
                        .sum();
                    double +=
                        m as f64 * a.powi(m as i32 - 1) * c.powi((ell - m) as i32) * inner;
                }
                let single = run_term_markov(ell, a);
                assert!(
                    (double - single).abs() <= 1e-12 * double.abs().max(1.0),
                    "ℓ={ell} α={a}"
                );
            }
        }
    }

    #[test]
    fn uniform_bound_examples() {
        for ell in 2..12 {
            assert!((lower_bound_uniform(&params(ell, 0.0, 0.0)).unwrap() - 1.0).abs() < 1e-14);
        }
        let pr = params(5, 0.4, 0.1);
        let u = lower_bound_uniform(&pr).unwrap();
        let mi = channel::mutual_information_exact(&pr, &Distribution::uniform(5).unwrap()).unwrap();
        assert!((u - mi / 5.0).abs() < 1e-12);
        for ell in 2..40 {
            for &(p, q) in &[(0.3, 0.2), (1.0, 0.0), (0.0, 0.6)] {
                let pr = params(ell, p, q);
                let a = lower_bound_uniform(&pr).unwrap();
                let b = l_si_markov_closed_form(&pr, 0.5);
                assert!((a - b).abs() < 1e-10, "ℓ={ell}");
            }
        }
    }

    #[test]
    fn upper_bound_examples() {
        for ell in [2usize, 5, 16, 17, 40] {
            assert!((upper_bound_u(&params(ell, 0.0, 0.0)).unwrap() - 1.0).abs() < 1e-12);
        }
        let expected = (0.2
            + 0.1 * 6f64.log2()
            + 0.7 * (2.0 + 2.0 * 2f64.powf(-3.0 / 7.0)).log2())
            / 2.0;
        assert!((upper_bound_u(&params(2, 0.2, 0.1)).unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn upper_bound_limit_at_full_error_rate() {
        for ell in [2usize, 6, 20] {
            for &(p, q) in &[(1.0, 0.0), (0.4, 0.6), (0.0, 1.0)] {
                let l = ell as f64;
                let expected = (p * (l - 1.0) + q * (2f64.powi(ell as i32 + 1) - 2.0).log2()) / l;
                let u = upper_bound_u(&params(ell, p, q)).unwrap();
                assert!((u - expected).abs() < 1e-12);
                // Approaching the edge converges to the same value.
                let near = upper_bound_u(&params(ell, p * (1.0 - 1e-9), q * (1.0 - 1e-9))).unwrap();
                assert!((near - expected).abs() < 1e-6, "ℓ={ell} p={p} q={q}: {near} vs {expected}");
            }
        }
    }

    #[test]
    fn partition_routes_agree() {
        for ell in 1..=16 {
            for &c in &[0.0, 0.3, 1.5, 7.0, 250.0] {
                let a = log2_partition_enumerated(ell, c).unwrap();
                let b = log2_partition_compositions(ell, c).unwrap();
                assert!((a - b).abs() < 1e-11, "ℓ={ell} c={c}: {a} vs {b}");
            }
        }
        // Long blocks stay finite.
        let z = log2_partition_compositions(1024, 0.05).unwrap();
        assert!(z.is_finite() && z < 1024.0 && z > 1023.0);
    }

    #[test]
    fn no_si_examples() {
        let pr = params(6, 0.0, 0.0);
        assert_eq!(
            lower_bound_no_si(&pr, 0.4).unwrap(),
            lower_bound_markov(&pr, 0.4).unwrap().value
        );
        let pr = params(8, 0.5, 0.0);
        let v = lower_bound_no_si(&pr, 0.5).unwrap();
        assert!((v - (lower_bound_uniform(&pr).unwrap() - 1.0 / 8.0)).abs() < 1e-12);
    }

    #[test]
    fn optimizer_examples() {
        let opt = optimize_alpha(&params(6, 0.0, 0.0), 1e-9).unwrap();
        assert!((opt.alpha - 0.5).abs() < 1e-4);
        assert!((opt.value - 1.0).abs() < 1e-12);
        let pr = params(2, 0.8, 0.0);
        let opt = optimize_alpha(&pr, 1e-8).unwrap();
        assert!(opt.value >= lower_bound_uniform(&pr).unwrap() - 1e-12);
        assert!(opt.alpha < 0.5);
        assert!(optimize_alpha(&pr, 0.0).is_err());
    }

    #[test]
    fn golden_section_finds_interior_maximum() {
        let (x, v) = golden_section_max(|x| -(x - 0.3141).powi(2), 0.0, 1.0, 1e-10);
        assert!((x - 0.3141).abs() < 1e-8);
        assert!(v <= 0.0 && v > -1e-15);
    }

    #[test]
    fn report_invariants() {
        let pr = params(8, 0.5, 0.0);
        let r = BoundsReport::evaluate(&pr, AlphaChoice::Optimize).unwrap();
        assert!(r.l_si_alpha >= r.l_si_uniform - 1e-12);
        assert!((r.l_no_si_raw - (r.l_si_alpha - r.hb_pq / 8.0)).abs() < 1e-15);
        let r = BoundsReport::evaluate(&pr, AlphaChoice::Uniform).unwrap();
        assert!((r.l_si_alpha - r.l_si_uniform).abs() < 1e-10);
        for v in [r.l_si_alpha, r.l_si_uniform, r.upper_u, r.l_no_si] {
            assert!((0.0..=1.0).contains(&v));
        }
        let r = BoundsReport::evaluate(&params(2, 0.5, 0.0), AlphaChoice::Fixed(0.5)).unwrap();
        assert_eq!(r.l_no_si, r.l_no_si_raw.max(0.0));
    }
}
