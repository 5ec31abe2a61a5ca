//! Exact model of one block of the one-bit deletion/duplication channel.
//!
//! The output alphabet is the disjoint union of words of length `ℓ-1`, `ℓ`
//! and `ℓ+1`: the receiver learns from the output length whether the block
//! saw a deletion, a duplication, or nothing. Deleting (or duplicating) any
//! bit of run `i` produces the same output, so each input row has at most
//! `2 n_r(x) + 1` entries, with masses `p r_i/ℓ`, `q r_i/ℓ` and `1-p-q`.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::info::{self, NeumaierSum};
use crate::seq::{BinaryWord, MAX_WORD_LEN};

/// Largest block length enumerated by default.
///
/// The full law at `ℓ = 16` holds 65 536 rows of at most 33 entries, roughly
/// 25 MB with the output index; every extra bit doubles that.
pub const DEFAULT_ENUMERATION_CAP: usize = 16;

/// Slack allowed on `p + q ≤ 1` for parameters produced by float grids.
const SIMPLEX_SLACK: f64 = 1e-12;

/// `(ℓ, p, q)` for one block of the channel.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    ell: usize,
    p: f64,
    q: f64,
}

impl ChannelParams {
    pub fn new(ell: usize, p: f64, q: f64) -> Result<Self> {
        if ell == 0 {
            return Err(Error::InvalidParams("block length must be at least 1".into()));
        }
        if !(p.is_finite() && q.is_finite()) || p < 0.0 || q < 0.0 {
            return Err(Error::InvalidParams(format!(
                "p={p} and q={q} must be nonnegative"
            )));
        }
        if p + q > 1.0 + SIMPLEX_SLACK {
            return Err(Error::InvalidParams(format!("p+q={} exceeds 1", p + q)));
        }
        Ok(ChannelParams { ell, p, q })
    }

    #[inline]
    pub fn ell(&self) -> usize {
        self.ell
    }

    /// Block deletion probability.
    #[inline]
    pub fn p(&self) -> f64 {
        self.p
    }

    /// Block duplication probability.
    #[inline]
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Probability that the block passes unchanged.
    #[inline]
    pub fn stay(&self) -> f64 {
        (1.0 - self.p - self.q).max(0.0)
    }

    /// Per-bit deletion probability `p_d = p/ℓ`.
    #[inline]
    pub fn p_d(&self) -> f64 {
        self.p / self.ell as f64
    }

    /// Per-bit duplication probability `p_i = q/ℓ`.
    #[inline]
    pub fn p_i(&self) -> f64 {
        self.q / self.ell as f64
    }

    fn check_word(&self, x: &BinaryWord) -> Result<()> {
        if x.len() != self.ell {
            return Err(Error::LengthMismatch {
                expected: self.ell,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn check_cap(&self, cap: usize) -> Result<()> {
        if self.ell > cap || self.ell + 1 > MAX_WORD_LEN {
            return Err(Error::EnumerationCap { ell: self.ell, cap });
        }
        Ok(())
    }
}

/// Symmetric first-order Markov input: uniform first bit, each later bit
/// differs from its predecessor with probability `alpha`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarkovInput {
    alpha: f64,
}

impl MarkovInput {
    pub fn new(alpha: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidAlpha(alpha));
        }
        Ok(MarkovInput { alpha })
    }

    #[inline]
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `f(ℓ, m, α) = ½ (1-α)^(ℓ-m-1) α^m`, the probability of a word with `m`
    /// transitions.
    pub fn word_mass(&self, ell: usize, transitions: usize) -> f64 {
        debug_assert!(transitions < ell);
        0.5 * (1.0 - self.alpha).powi((ell - transitions - 1) as i32)
            * self.alpha.powi(transitions as i32)
    }
}

/// A normalized probability assignment over a finite set of words.
///
/// The support is kept sorted and free of duplicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    support: Vec<BinaryWord>,
    mass: Vec<f64>,
}

/// Tolerance on the total mass of a [`Distribution`].
pub const NORMALIZATION_TOL: f64 = 1e-12;

impl Distribution {
    /// Builds a distribution, merging repeated words.
    pub fn from_pairs<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BinaryWord, f64)>,
    {
        let mut pairs: Vec<(BinaryWord, f64)> = pairs.into_iter().collect();
        if let Some((_, m)) = pairs.iter().find(|(_, m)| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::InvalidDistribution(format!("mass {m} is not a probability")));
        }
        pairs.sort_by_key(|(w, _)| *w);
        let mut support = Vec::with_capacity(pairs.len());
        let mut mass: Vec<f64> = Vec::with_capacity(pairs.len());
        for (w, m) in pairs {
            if support.last() == Some(&w) {
                *mass.last_mut().expect("parallel vecs") += m;
            } else {
                support.push(w);
                mass.push(m);
            }
        }
        let total = info::sum(mass.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "total mass {total} differs from 1"
            )));
        }
        Ok(Distribution { support, mass })
    }

    /// Normalizes nonnegative weights into a distribution.
    pub fn from_weights<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BinaryWord, f64)>,
    {
        let pairs: Vec<(BinaryWord, f64)> = pairs.into_iter().collect();
        let total = info::sum(pairs.iter().map(|(_, m)| *m));
        if !(total.is_finite() && total > 0.0) {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Self::from_pairs(pairs.into_iter().map(|(w, m)| (w, m / total)))
    }

    /// Uniform distribution over `{0,1}^ℓ`.
    pub fn uniform(ell: usize) -> Result<Self> {
        if ell >= MAX_WORD_LEN {
            return Err(Error::WordTooLong {
                len: ell,
                max: MAX_WORD_LEN - 1,
            });
        }
        let m = 0.5f64.powi(ell as i32);
        Ok(Distribution {
            support: BinaryWord::all(ell).collect(),
            mass: vec![m; 1 << ell],
        })
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    pub fn support(&self) -> &[BinaryWord] {
        &self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn iter(&self) -> impl Iterator<Item = (BinaryWord, f64)> + '_ {
        self.support.iter().copied().zip(self.mass.iter().copied())
    }

    /// Mass of `word`, zero when outside the support.
    pub fn mass_of(&self, word: &BinaryWord) -> f64 {
        self.support
            .binary_search(word)
            .map(|i| self.mass[i])
            .unwrap_or(0.0)
    }

    /// Total mass on words of a given length.
    pub fn mass_of_length(&self, len: usize) -> f64 {
        info::sum(self.iter().filter(|(w, _)| w.len() == len).map(|(_, m)| m))
    }

    /// Shannon entropy in bits.
    pub fn entropy(&self) -> f64 {
        info::entropy(self.mass.iter().copied())
    }
}

/// Markov input distribution over all `2^ℓ` words.
pub fn markov_input_distribution(ell: usize, input: MarkovInput) -> Result<Distribution> {
    if ell == 0 || ell >= MAX_WORD_LEN {
        return Err(Error::InvalidArgument(format!(
            "Markov input length {ell} outside 1..{MAX_WORD_LEN}"
        )));
    }
    let support: Vec<BinaryWord> = BinaryWord::all(ell).collect();
    let mass = support
        .iter()
        .map(|w| input.word_mass(ell, w.run_count() - 1))
        .collect();
    Ok(Distribution { support, mass })
}

/// One row `Q(·|x)` of the transition law, sorted by output word.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionRow {
    pub input: BinaryWord,
    pub entries: Vec<(BinaryWord, f64)>,
}

impl TransitionRow {
    pub fn total(&self) -> f64 {
        info::sum(self.entries.iter().map(|(_, m)| *m))
    }

    pub fn prob(&self, y: &BinaryWord) -> f64 {
        self.entries
            .binary_search_by_key(y, |(w, _)| *w)
            .map(|i| self.entries[i].1)
            .unwrap_or(0.0)
    }

    /// Row entropy `H(Y | X = x)` in bits.
    pub fn entropy(&self) -> f64 {
        info::entropy(self.entries.iter().map(|(_, m)| *m))
    }
}

/// `Q(·|x)`: the identity output carries `1-p-q`, shortening run `i` carries
/// `p r_i/ℓ` and lengthening run `i` carries `q r_i/ℓ`. Zero-mass outputs are
/// omitted and coinciding outputs are merged.
pub fn transition_law(x: &BinaryWord, params: &ChannelParams) -> Result<TransitionRow> {
    params.check_word(x)?;
    if params.ell + 1 > MAX_WORD_LEN {
        return Err(Error::WordTooLong {
            len: params.ell + 1,
            max: MAX_WORD_LEN,
        });
    }
    let ell = params.ell as f64;
    let mut entries = Vec::with_capacity(2 * x.run_count() + 1);
    if params.stay() > 0.0 {
        entries.push((*x, params.stay()));
    }
    let mut start = 0;
    for r in x.run_lengths() {
        let weight = r as f64 / ell;
        if params.p > 0.0 {
            entries.push((x.remove(start), params.p * weight));
        }
        if params.q > 0.0 {
            entries.push((x.insert(start, x.bit(start))?, params.q * weight));
        }
        start += r;
    }
    entries.sort_by_key(|(w, _)| *w);
    entries.dedup_by(|later, kept| {
        if later.0 == kept.0 {
            kept.1 += later.1;
            true
        } else {
            false
        }
    });
    Ok(TransitionRow { input: *x, entries })
}

fn check_support(params: &ChannelParams, input: &Distribution) -> Result<()> {
    input
        .support()
        .iter()
        .try_for_each(|w| params.check_word(w))
}

/// `P_Y(y) = Σ_x P_X(x) Q(y|x)`.
pub fn output_distribution(params: &ChannelParams, input: &Distribution) -> Result<Distribution> {
    check_support(params, input)?;
    let mut acc: HashMap<BinaryWord, NeumaierSum> = HashMap::new();
    for (x, px) in input.iter() {
        if px == 0.0 {
            continue;
        }
        for (y, qyx) in transition_law(&x, params)?.entries {
            acc.entry(y).or_default().add(px * qyx);
        }
    }
    let mut pairs: Vec<(BinaryWord, f64)> = acc.into_iter().map(|(y, s)| (y, s.total())).collect();
    pairs.sort_by_key(|(w, _)| *w);
    Ok(Distribution {
        support: pairs.iter().map(|(w, _)| *w).collect(),
        mass: pairs.iter().map(|(_, m)| *m).collect(),
    })
}

/// `I(X;Y) = H(Y) - H(Y|X)` in bits per block, by exact summation over the
/// sparse law. Callers divide by `ℓ` for a per-symbol rate.
pub fn mutual_information_exact(params: &ChannelParams, input: &Distribution) -> Result<f64> {
    mutual_information_exact_with_cap(params, input, DEFAULT_ENUMERATION_CAP)
}

/// [`mutual_information_exact`] with an explicit enumeration cap.
pub fn mutual_information_exact_with_cap(
    params: &ChannelParams,
    input: &Distribution,
    cap: usize,
) -> Result<f64> {
    params.check_cap(cap)?;
    check_support(params, input)?;
    let mut acc: HashMap<BinaryWord, NeumaierSum> = HashMap::new();
    let mut conditional = NeumaierSum::default();
    for (x, px) in input.iter() {
        if px == 0.0 {
            continue;
        }
        let row = transition_law(&x, params)?;
        conditional.add(px * row.entropy());
        for (y, qyx) in row.entries {
            acc.entry(y).or_default().add(px * qyx);
        }
    }
    let output_entropy = info::entropy(acc.values().map(NeumaierSum::total));
    Ok((output_entropy - conditional.total()).max(0.0))
}

/// The transition law of every input of a block, in compressed sparse rows.
///
/// Outputs are indexed by `(length, packed bits)` and only reachable outputs
/// are allocated.
#[derive(Debug, Clone)]
pub struct SparseTransitionLaw {
    params: ChannelParams,
    inputs: Vec<BinaryWord>,
    outputs: Vec<BinaryWord>,
    row_start: Vec<usize>,
    cols: Vec<u32>,
    probs: Vec<f64>,
}

impl SparseTransitionLaw {
    /// Law over all `2^ℓ` inputs, subject to the default enumeration cap.
    pub fn full(params: &ChannelParams) -> Result<Self> {
        Self::full_with_cap(params, DEFAULT_ENUMERATION_CAP)
    }

    pub fn full_with_cap(params: &ChannelParams, cap: usize) -> Result<Self> {
        params.check_cap(cap)?;
        let inputs: Vec<BinaryWord> = BinaryWord::all(params.ell).collect();
        Self::for_inputs(params, inputs)
    }

    /// Law restricted to the given inputs.
    pub fn for_inputs(params: &ChannelParams, inputs: Vec<BinaryWord>) -> Result<Self> {
        let mut index: HashMap<BinaryWord, u32> = HashMap::new();
        let mut outputs = Vec::new();
        let mut row_start = Vec::with_capacity(inputs.len() + 1);
        let mut cols = Vec::new();
        let mut probs = Vec::new();
        row_start.push(0);
        for x in &inputs {
            for (y, m) in transition_law(x, params)?.entries {
                let next = outputs.len() as u32;
                let col = *index.entry(y).or_insert_with(|| {
                    outputs.push(y);
                    next
                });
                cols.push(col);
                probs.push(m);
            }
            row_start.push(cols.len());
        }
        Ok(SparseTransitionLaw {
            params: *params,
            inputs,
            outputs,
            row_start,
            cols,
            probs,
        })
    }

    pub fn params(&self) -> &ChannelParams {
        &self.params
    }

    pub fn inputs(&self) -> &[BinaryWord] {
        &self.inputs
    }

    pub fn outputs(&self) -> &[BinaryWord] {
        &self.outputs
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.outputs.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// `(output index, Q(y|x))` pairs of input row `i`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let span = self.row_start[i]..self.row_start[i + 1];
        self.cols[span.clone()]
            .iter()
            .map(|&c| c as usize)
            .zip(self.probs[span].iter().copied())
    }
}

/// Per-block error event of the segmented channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ErrorEvent {
    Deletion,
    Unchanged,
    Duplication,
}

impl ErrorEvent {
    /// `-1`, `0` or `+1`.
    pub fn as_i8(self) -> i8 {
        match self {
            ErrorEvent::Deletion => -1,
            ErrorEvent::Unchanged => 0,
            ErrorEvent::Duplication => 1,
        }
    }
}

/// Output of the segmented channel for a sequence of blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentedSample {
    /// Concatenated output bits.
    pub output: Vec<u8>,
    /// Output of each block, in input order.
    pub block_outputs: Vec<BinaryWord>,
    pub error_pattern: Vec<ErrorEvent>,
}

impl SegmentedSample {
    /// Counts of `(deletions, unchanged, duplications)`.
    pub fn tallies(&self) -> (usize, usize, usize) {
        self.error_pattern
            .iter()
            .fold((0, 0, 0), |(d, u, i), e| match e {
                ErrorEvent::Deletion => (d + 1, u, i),
                ErrorEvent::Unchanged => (d, u + 1, i),
                ErrorEvent::Duplication => (d, u, i + 1),
            })
    }
}

/// Generator for block `index` under `seed`.
///
/// ChaCha is counter based; each block draws from its own stream so a block's
/// outcome does not depend on how many blocks precede it or which worker
/// produced it.
pub fn block_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Passes one block through the channel using `rng`.
pub fn sample_block<R: Rng + ?Sized>(
    x: &BinaryWord,
    params: &ChannelParams,
    rng: &mut R,
) -> Result<(BinaryWord, ErrorEvent)> {
    params.check_word(x)?;
    let u: f64 = rng.random();
    if u < params.p {
        let pos = rng.random_range(0..params.ell);
        Ok((x.remove(pos), ErrorEvent::Deletion))
    } else if u < params.p + params.q {
        let pos = rng.random_range(0..params.ell);
        Ok((x.insert(pos, x.bit(pos))?, ErrorEvent::Duplication))
    } else {
        Ok((*x, ErrorEvent::Unchanged))
    }
}

/// Passes every block through the channel independently.
///
/// Deterministic in `(seed, block index)`.
pub fn sample_segmented(
    params: &ChannelParams,
    blocks: &[BinaryWord],
    seed: u64,
) -> Result<SegmentedSample> {
    let mut output = Vec::with_capacity(blocks.len() * (params.ell + 1));
    let mut block_outputs = Vec::with_capacity(blocks.len());
    let mut error_pattern = Vec::with_capacity(blocks.len());
    for (i, x) in blocks.iter().enumerate() {
        let mut rng = block_rng(seed, i as u64);
        let (y, event) = sample_block(x, params, &mut rng)?;
        output.extend(y.iter());
        block_outputs.push(y);
        error_pattern.push(event);
    }
    Ok(SegmentedSample {
        output,
        block_outputs,
        error_pattern,
    })
}

/// `count` independent uniformly random blocks of length `ell`.
///
/// Uses a generator domain disjoint from the per-block channel streams.
pub fn random_blocks(ell: usize, count: usize, seed: u64) -> Result<Vec<BinaryWord>> {
    if ell == 0 || ell >= MAX_WORD_LEN {
        return Err(Error::InvalidArgument(format!(
            "block length {ell} outside 1..{MAX_WORD_LEN}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let mask = (1u64 << ell) - 1;
    (0..count)
        .map(|_| BinaryWord::new(rng.random::<u64>() & mask, ell))
        .collect()
}

/// Largest standardized deviation of empirical per-block output counts from
/// the exact output law under uniform inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LawCheck {
    /// `max |count - s P(y)| / sqrt(s P(y)(1 - P(y)))` over checked outputs.
    pub max_z: f64,
    pub worst: Option<BinaryWord>,
    /// Outputs with expected count at least the threshold.
    pub checked: usize,
    /// Observed outputs that the exact law gives zero mass.
    pub impossible: usize,
}

/// Compares `sample` against the exact output law of uniform inputs, over
/// outputs whose expected count is at least `min_expected`.
pub fn law_check(
    params: &ChannelParams,
    sample: &SegmentedSample,
    min_expected: f64,
) -> Result<LawCheck> {
    let law = output_distribution(params, &Distribution::uniform(params.ell)?)?;
    let mut counts: HashMap<BinaryWord, usize> = HashMap::new();
    for y in &sample.block_outputs {
        *counts.entry(*y).or_default() += 1;
    }
    let s = sample.block_outputs.len() as f64;
    let mut check = LawCheck {
        max_z: 0.0,
        worst: None,
        checked: 0,
        impossible: counts.keys().filter(|y| law.mass_of(y) == 0.0).count(),
    };
    for (y, pr) in law.iter() {
        let expected = s * pr;
        if expected < min_expected || pr >= 1.0 {
            continue;
        }
        check.checked += 1;
        let observed = counts.get(&y).copied().unwrap_or(0) as f64;
        let z = (observed - expected).abs() / (expected * (1.0 - pr)).sqrt();
        if z > check.max_z {
            check.max_z = z;
            check.worst = Some(y);
        }
    }
    Ok(check)
}
