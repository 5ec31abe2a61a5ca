//! Numerical capacity of one block with side information.
//!
//! [`blahut_arimoto`] runs the alternating maximization on the sparse
//! transition law and stops on the certified bracket
//!
//! ```text
//! I(P) ≤ C ≤ max_x D(Q(·|x) ‖ P_Y)
//! ```
//!
//! rather than on iterate differences, so a converged result is within
//! `tol` bits per block of the true capacity.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, log2_partition_enumerated, optimize_alpha, upper_bound_u};
use crate::channel::{
    markov_input_distribution, ChannelParams, Distribution, MarkovInput, SparseTransitionLaw,
    DEFAULT_ENUMERATION_CAP,
};
use crate::error::{Error, Result};
use crate::info::{self, NeumaierSum};
use crate::seq::{empirical_runlength_entropy, BinaryWord};

const LOG2_E: f64 = std::f64::consts::LOG2_E;

/// Starting input distribution for Blahut–Arimoto.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaInit {
    Uniform,
    Markov(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BaOptions {
    /// Bracket width in bits per block at which the run stops.
    pub tol: f64,
    pub max_iter: usize,
    pub init: BaInit,
    pub enumeration_cap: usize,
    /// Over-relax the update with an adaptive step, falling back to the plain
    /// step whenever `I` would decrease.
    pub accelerate: bool,
}

/// Largest over-relaxation factor tried by the accelerated iteration.
const MAX_RELAXATION: f64 = 64.0;

impl Default for BaOptions {
    fn default() -> Self {
        BaOptions {
            tol: 1e-6,
            max_iter: 1_000_000,
            init: BaInit::Uniform,
            enumeration_cap: DEFAULT_ENUMERATION_CAP,
            accelerate: true,
        }
    }
}

impl BaOptions {
    pub fn with_tol(tol: f64) -> Self {
        BaOptions {
            tol,
            ..Self::default()
        }
    }
}

/// Capacity bracket at one iterate, in bits per block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bracket {
    /// `I(P)` at the current input.
    pub lower: f64,
    /// `max_x D(Q(·|x) ‖ P_Y)`.
    pub upper: f64,
}

impl Bracket {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Iterate state of Blahut–Arimoto over a fixed sparse law.
///
/// The posterior step `q(x|y) ∝ P(x) Q(y|x)` followed by the input step
/// `P(x) ∝ exp(Σ_y Q(y|x) ln q(x|y))` collapses to
/// `P(x) ← P(x) exp(D_x) / Σ P exp(D)` with `D_x = D(Q(·|x) ‖ P_Y)`, which is
/// what [`BlahutArimoto::update`] applies.
#[derive(Debug, Clone)]
pub struct BlahutArimoto<'a> {
    law: &'a SparseTransitionLaw,
    input: Vec<f64>,
    /// `Σ_y Q ln Q` per input row, in nats.
    row_neg_entropy: Vec<f64>,
    ln_py: Vec<f64>,
    divergence: Vec<f64>,
}

impl<'a> BlahutArimoto<'a> {
    pub fn new(law: &'a SparseTransitionLaw, input: Vec<f64>) -> Result<Self> {
        if input.len() != law.input_count() {
            return Err(Error::InvalidArgument(format!(
                "initial input has {} entries for {} channel inputs",
                input.len(),
                law.input_count()
            )));
        }
        let total = info::sum(input.iter().copied());
        if !(total > 0.0) || input.iter().any(|&m| !(m >= 0.0)) {
            return Err(Error::InvalidDistribution("initial input is not a measure".into()));
        }
        let row_neg_entropy = (0..law.input_count())
            .map(|i| law.row(i).map(|(_, q)| q * q.ln()).sum())
            .collect();
        Ok(BlahutArimoto {
            law,
            input: input.into_iter().map(|m| m / total).collect(),
            row_neg_entropy,
            ln_py: vec![0.0; law.output_count()],
            divergence: vec![0.0; law.input_count()],
        })
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    /// Bracket at the current input. Also caches `D_x` for the next update.
    pub fn bracket(&mut self) -> Bracket {
        let law = self.law;
        let py = &mut self.ln_py;
        py.iter_mut().for_each(|v| *v = 0.0);
        for (i, &px) in self.input.iter().enumerate() {
            if px > 0.0 {
                for (y, q) in law.row(i) {
                    py[y] += px * q;
                }
            }
        }
        py.iter_mut().for_each(|v| *v = v.ln());
        let mut lower = NeumaierSum::default();
        let mut upper = f64::NEG_INFINITY;
        for i in 0..law.input_count() {
            let cross: f64 = law.row(i).map(|(y, q)| q * self.ln_py[y]).sum();
            let d = (self.row_neg_entropy[i] - cross).max(0.0);
            self.divergence[i] = d;
            lower.add(self.input[i] * d);
            upper = upper.max(d);
        }
        Bracket {
            lower: lower.total() * LOG2_E,
            upper: upper * LOG2_E,
        }
    }

    /// Multiplicative update using the divergences from the last
    /// [`bracket`](Self::bracket) call.
    pub fn update(&mut self) {
        self.update_with_step(1.0);
    }

    /// Over-relaxed update `P(x) ← P(x) exp(step·D_x) / Σ P exp(step·D)`.
    /// Steps above 1 are not guaranteed to increase `I`.
    pub fn update_with_step(&mut self, step: f64) {
        // Inputs of zero mass may see D = ∞; they stay at zero.
        let shift = self
            .input
            .iter()
            .zip(&self.divergence)
            .filter(|(&p, _)| p > 0.0)
            .map(|(_, &d)| d)
            .fold(f64::NEG_INFINITY, f64::max);
        let mut total = NeumaierSum::default();
        for (p, &d) in self.input.iter_mut().zip(&self.divergence) {
            if *p > 0.0 {
                *p *= (step * (d - shift)).exp();
            }
            total.add(*p);
        }
        let total = total.total();
        self.input.iter_mut().for_each(|p| *p /= total);
    }

    /// Current input as a [`Distribution`].
    pub fn distribution(&self) -> Result<Distribution> {
        Distribution::from_weights(self.law.inputs().iter().copied().zip(self.input.iter().copied()))
    }
}

/// Result of a Blahut–Arimoto run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaSolution {
    pub params: ChannelParams,
    /// `I/ℓ` at the final iterate; a certified lower estimate of `C_SI`.
    pub capacity_bits_per_symbol: f64,
    pub input_dist: Distribution,
    pub iterations: usize,
    /// Final bracket, bits per block: `I` at the last iterate and the
    /// smallest `max_x D_x` seen over all iterates.
    pub bracket_lower: f64,
    pub bracket_upper: f64,
    /// Whether the bracket closed to within `tol`. Unconverged results must not
    /// be treated as certified.
    pub converged: bool,
}

impl BaSolution {
    /// Upper end of the bracket in bits per symbol.
    pub fn upper_bits_per_symbol(&self) -> f64 {
        self.bracket_upper / self.params.ell() as f64
    }
}

fn initial_input(law: &SparseTransitionLaw, init: BaInit) -> Result<Vec<f64>> {
    match init {
        BaInit::Uniform => Ok(vec![1.0; law.input_count()]),
        BaInit::Markov(alpha) => {
            let dist = markov_input_distribution(law.params().ell(), MarkovInput::new(alpha)?)?;
            Ok(law.inputs().iter().map(|x| dist.mass_of(x)).collect())
        }
    }
}

/// `C_SI` by Blahut–Arimoto over all `2^ℓ` inputs.
pub fn blahut_arimoto(params: &ChannelParams, options: &BaOptions) -> Result<BaSolution> {
    if !(options.tol > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "tolerance {} must be positive",
            options.tol
        )));
    }
    let law = SparseTransitionLaw::full_with_cap(params, options.enumeration_cap)?;
    let mut ba = BlahutArimoto::new(&law, initial_input(&law, options.init)?)?;
    let max_iter = options.max_iter.max(1);
    let mut bracket = ba.bracket();
    // Any input certifies C ≤ max_x D_x, so the best upper end is kept.
    let mut upper = bracket.upper;
    let mut iterations = 1;
    let mut step = 1.0;
    while upper - bracket.lower > options.tol && iterations < max_iter {
        iterations += 1;
        if options.accelerate {
            let saved = (ba.input.clone(), ba.divergence.clone());
            ba.update_with_step(step);
            let next = ba.bracket();
            upper = upper.min(next.upper);
            if step > 1.0 && !(next.lower >= bracket.lower) {
                ba.input = saved.0;
                ba.divergence = saved.1;
                step = 1.0;
                ba.update();
                bracket = ba.bracket();
                upper = upper.min(bracket.upper);
            } else {
                bracket = next;
                step = (step * 2.0).min(MAX_RELAXATION);
            }
        } else {
            ba.update();
            bracket = ba.bracket();
            upper = upper.min(bracket.upper);
        }
    }
    let bracket = Bracket {
        lower: bracket.lower,
        upper,
    };
    let converged = bracket.width() <= options.tol;
    let ell = params.ell() as f64;
    Ok(BaSolution {
        params: *params,
        capacity_bits_per_symbol: bracket.lower / ell,
        input_dist: ba.distribution()?,
        iterations,
        bracket_lower: bracket.lower,
        bracket_upper: bracket.upper,
        converged,
    })
}

/// `P*_X(x) ∝ 2^(-(p+q)/(1-p-q) Ĥ(r(x)))`, the maximizer of the first two
/// terms of the mutual-information decomposition.
///
/// At `p + q = 1` the exponent diverges and the limit is uniform over the two
/// constant words.
pub fn lagrange_optimal_input(params: &ChannelParams) -> Result<Distribution> {
    lagrange_check(params)?;
    let ell = params.ell();
    let stay = 1.0 - params.p() - params.q();
    if stay <= 1e-12 {
        return Distribution::from_pairs([
            (BinaryWord::constant(0, ell)?, 0.5),
            (BinaryWord::constant(1, ell)?, 0.5),
        ]);
    }
    let c = (params.p() + params.q()) / stay;
    Distribution::from_weights(BinaryWord::all(ell).map(|x| {
        let h = empirical_runlength_entropy(&x).expect("non-empty word");
        (x, (-c * h).exp2())
    }))
}

/// `log2 Z` for the normalizer of [`lagrange_optimal_input`].
pub fn lagrange_log2_normalizer(params: &ChannelParams) -> Result<f64> {
    lagrange_check(params)?;
    let stay = 1.0 - params.p() - params.q();
    if stay <= 1e-12 {
        return Err(Error::InvalidParams("normalizer diverges at p + q = 1".into()));
    }
    log2_partition_enumerated(params.ell(), (params.p() + params.q()) / stay)
}

fn lagrange_check(params: &ChannelParams) -> Result<()> {
    if params.ell() < 2 {
        return Err(Error::InvalidParams("ℓ > 1 required".into()));
    }
    if params.ell() > DEFAULT_ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            ell: params.ell(),
            cap: DEFAULT_ENUMERATION_CAP,
        });
    }
    Ok(())
}

/// A sub-probability measure over words of one length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceMeasure {
    pub word_len: usize,
    pub words: Vec<BinaryWord>,
    pub mass: Vec<f64>,
}

impl SliceMeasure {
    pub fn total(&self) -> f64 {
        info::sum(self.mass.iter().copied())
    }

    /// Entropy of the slice after normalizing to a probability law; zero for
    /// the zero measure.
    pub fn normalized_entropy(&self) -> f64 {
        let total = self.total();
        if total <= 0.0 {
            return 0.0;
        }
        info::entropy(self.mass.iter().map(|m| m / total))
    }
}

/// The maximum-entropy output slices: mass `p` uniform over all `2^(ℓ-1)`
/// short words, mass `q` uniform over the `2^(ℓ+1) - 2` non-alternating long
/// words.
pub fn maxent_output_slices(params: &ChannelParams) -> Result<(SliceMeasure, SliceMeasure)> {
    lagrange_check(params)?;
    let ell = params.ell();
    let short = if params.p() > 0.0 {
        let m = params.p() * 0.5f64.powi(ell as i32 - 1);
        let words: Vec<BinaryWord> = BinaryWord::all(ell - 1).collect();
        let mass = vec![m; words.len()];
        SliceMeasure {
            word_len: ell - 1,
            words,
            mass,
        }
    } else {
        SliceMeasure {
            word_len: ell - 1,
            words: Vec::new(),
            mass: Vec::new(),
        }
    };
    let long = if params.q() > 0.0 {
        let m = params.q() / (2f64.powi(ell as i32 + 1) - 2.0);
        let words: Vec<BinaryWord> = BinaryWord::all(ell + 1)
            .filter(|w| !w.is_alternating())
            .collect();
        let mass = vec![m; words.len()];
        SliceMeasure {
            word_len: ell + 1,
            words,
            mass,
        }
    } else {
        SliceMeasure {
            word_len: ell + 1,
            words: Vec::new(),
            mass: Vec::new(),
        }
    };
    Ok((short, long))
}

/// Points `(i·step, j·step)` of the `(p,q)` simplex with `p + q ≤ max_sum`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimplexGrid {
    pub step: f64,
    pub max_sum: f64,
}

/// Default `(p,q)` grid spacing for gap sweeps.
pub const DEFAULT_GRID_STEP: f64 = 0.05;

impl Default for SimplexGrid {
    fn default() -> Self {
        SimplexGrid {
            step: DEFAULT_GRID_STEP,
            max_sum: 1.0,
        }
    }
}

impl SimplexGrid {
    pub fn new(step: f64, max_sum: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::InvalidArgument(format!("grid step {step} outside (0, 1]")));
        }
        if !(0.0..=1.0).contains(&max_sum) {
            return Err(Error::InvalidArgument(format!("p+q limit {max_sum} outside [0, 1]")));
        }
        Ok(SimplexGrid { step, max_sum })
    }

    /// Grid points in row-major `(p, q)` order.
    pub fn points(&self) -> Vec<(f64, f64)> {
        let n = ((self.max_sum / self.step) + 1e-9).floor() as usize;
        let mut pts = Vec::new();
        for i in 0..=n {
            for j in 0..=(n - i) {
                let p = i as f64 * self.step;
                let q = (j as f64 * self.step).min((1.0 - p).max(0.0));
                pts.push((p, q));
            }
        }
        pts
    }
}

/// Capacity and both bounds at one grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GapPoint {
    pub p: f64,
    pub q: f64,
    pub c_si: f64,
    pub upper_u: f64,
    pub l_opt: f64,
    pub ba_converged: bool,
}

impl GapPoint {
    /// `(U - C_SI)/C_SI`.
    pub fn upper_gap(&self) -> f64 {
        (self.upper_u - self.c_si) / self.c_si
    }

    /// `(C_SI - max_α L^α_SI)/C_SI`.
    pub fn lower_gap(&self) -> f64 {
        (self.c_si - self.l_opt) / self.c_si
    }
}

/// Evaluates `C_SI`, `U` and `max_α L^α_SI` at one point.
pub fn gap_point(params: &ChannelParams, ba: &BaOptions) -> Result<GapPoint> {
    let sol = blahut_arimoto(params, ba)?;
    let c_si = sol.capacity_bits_per_symbol;
    assert!(c_si > 0.0, "C_SI vanished at {params:?}");
    Ok(GapPoint {
        p: params.p(),
        q: params.q(),
        c_si,
        upper_u: upper_bound_u(params)?,
        l_opt: optimize_alpha(params, bounds::DEFAULT_ALPHA_TOL)?.value,
        ba_converged: sol.converged,
    })
}

/// Evaluates every grid point, in grid order.
pub fn gap_points(ell: usize, grid: &SimplexGrid, ba: &BaOptions) -> Result<Vec<GapPoint>> {
    grid.points()
        .into_par_iter()
        .map(|(p, q)| gap_point(&ChannelParams::new(ell, p, q)?, ba))
        .collect()
}

/// Maximum relative gaps of `U` and `max_α L^α_SI` to `C_SI` over a grid.
///
/// The maxima are taken over grid points only and so are lower bounds on the
/// maxima over the full simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub ell: usize,
    pub delta_u_percent: f64,
    pub delta_l_percent: f64,
    pub argmax_u: (f64, f64),
    pub argmax_l: (f64, f64),
    pub evaluated: usize,
    /// Points whose Blahut–Arimoto run did not converge; left out of the maxima.
    pub excluded: Vec<(f64, f64)>,
}

impl GapReport {
    pub fn from_points(ell: usize, points: &[GapPoint]) -> Self {
        let mut report = GapReport {
            ell,
            delta_u_percent: 0.0,
            delta_l_percent: 0.0,
            argmax_u: (0.0, 0.0),
            argmax_l: (0.0, 0.0),
            evaluated: 0,
            excluded: Vec::new(),
        };
        for pt in points {
            if !pt.ba_converged {
                report.excluded.push((pt.p, pt.q));
                continue;
            }
            report.evaluated += 1;
            let du = 100.0 * pt.upper_gap();
            let dl = 100.0 * pt.lower_gap();
            if du > report.delta_u_percent {
                report.delta_u_percent = du;
                report.argmax_u = (pt.p, pt.q);
            }
            if dl > report.delta_l_percent {
                report.delta_l_percent = dl;
                report.argmax_l = (pt.p, pt.q);
            }
        }
        report
    }
}

/// `Δ_U(ℓ)` and `Δ_L(ℓ)` over a `(p,q)` grid.
pub fn relative_gaps(ell: usize, grid: &SimplexGrid, ba: &BaOptions) -> Result<GapReport> {
    Ok(GapReport::from_points(ell, &gap_points(ell, grid, ba)?))
}

/// `Δ_L_SI(q, ℓ) = max_p (max_α L^α_SI - L^0.5_SI) / max_α L^α_SI` as a
/// fraction, with `p` on a grid over `[0, 1-q]` including the endpoint.
pub fn uniform_vs_optimized_gap(ell: usize, q: f64, p_step: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidParams(format!("q={q} outside [0, 1]")));
    }
    if !(p_step > 0.0) {
        return Err(Error::InvalidArgument(format!("grid step {p_step} must be positive")));
    }
    let p_max = 1.0 - q;
    let n = (p_max / p_step + 1e-9).floor() as usize;
    let mut ps: Vec<f64> = (0..=n).map(|i| i as f64 * p_step).collect();
    if p_max - ps[n] > 1e-9 {
        ps.push(p_max);
    }
    let gaps = ps
        .into_par_iter()
        .map(|p| {
            let params = ChannelParams::new(ell, p.min(p_max), q)?;
            let best = optimize_alpha(&params, bounds::DEFAULT_ALPHA_TOL)?.value;
            let uniform = bounds::lower_bound_uniform(&params)?;
            Ok(((best - uniform) / best).max(0.0))
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(gaps.into_iter().fold(0.0, f64::max))
}
