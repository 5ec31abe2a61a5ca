//! Binary words, run-length descriptions and run-count combinatorics.
//!
//! A [`BinaryWord`] packs up to 64 bits into a machine word together with an
//! explicit length, so leading zeros are significant and words of different
//! lengths are distinct values. The leftmost bit of the word is the most
//! significant of the `len` stored bits, which makes the integer value read
//! like the written string (`0011` is `3`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Longest word representable in packed form.
pub const MAX_WORD_LEN: usize = 64;

/// Longest block length for which the run-count formulas are evaluated in
/// exact integer arithmetic.
pub const MAX_COUNT_LEN: usize = 63;

/// A finite binary word of length at most [`MAX_WORD_LEN`].
///
/// Ordering is by length first, then lexicographically by bits.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct BinaryWord {
    len: u8,
    bits: u64,
}

impl BinaryWord {
    /// The empty word.
    pub const EMPTY: BinaryWord = BinaryWord { len: 0, bits: 0 };

    /// Builds a word from its packed value; bits above `len` must be zero.
    pub fn new(bits: u64, len: usize) -> Result<Self> {
        if len > MAX_WORD_LEN {
            return Err(Error::WordTooLong {
                len,
                max: MAX_WORD_LEN,
            });
        }
        if len < 64 && bits >> len != 0 {
            return Err(Error::InvalidArgument(format!(
                "value {bits:#b} does not fit in {len} bits"
            )));
        }
        Ok(BinaryWord {
            len: len as u8,
            bits,
        })
    }

    /// Builds a word from a slice of 0/1 symbols.
    pub fn from_bits(symbols: &[u8]) -> Result<Self> {
        if symbols.len() > MAX_WORD_LEN {
            return Err(Error::WordTooLong {
                len: symbols.len(),
                max: MAX_WORD_LEN,
            });
        }
        let mut bits = 0u64;
        for &b in symbols {
            if b > 1 {
                return Err(Error::InvalidBit(char::from(b'0' + b.min(9))));
            }
            bits = (bits << 1) | b as u64;
        }
        Ok(BinaryWord {
            len: symbols.len() as u8,
            bits,
        })
    }

    /// The all-`bit` word of length `len`.
    pub fn constant(bit: u8, len: usize) -> Result<Self> {
        Self::from_bits(&vec![bit & 1; len])
    }

    /// The alternating word of length `len` starting with `first`.
    pub fn alternating(first: u8, len: usize) -> Result<Self> {
        let symbols: Vec<u8> = (0..len).map(|i| (first + i as u8) & 1).collect();
        Self::from_bits(&symbols)
    }

    /// All `2^len` words of a given length in increasing order.
    pub fn all(len: usize) -> impl Iterator<Item = BinaryWord> {
        assert!(len < MAX_WORD_LEN, "cannot enumerate words of length {len}");
        (0..1u64 << len).map(move |bits| BinaryWord {
            len: len as u8,
            bits,
        })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len as usize
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Packed value; the leftmost bit is the most significant.
    #[inline]
    pub fn value(&self) -> u64 {
        self.bits
    }

    /// Bit at position `i`, counting from the left.
    #[inline]
    pub fn bit(&self, i: usize) -> u8 {
        debug_assert!(i < self.len());
        ((self.bits >> (self.len() - 1 - i)) & 1) as u8
    }

    pub fn iter(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len()).map(move |i| self.bit(i))
    }

    pub fn to_vec(&self) -> Vec<u8> {
        self.iter().collect()
    }

    /// Run lengths in order, without the leading bit.
    pub fn run_lengths(&self) -> Vec<usize> {
        let mut runs = Vec::new();
        let mut prev = None;
        for b in self.iter() {
            if prev == Some(b) {
                *runs.last_mut().expect("run open") += 1;
            } else {
                runs.push(1);
                prev = Some(b);
            }
        }
        runs
    }

    /// Number of runs `n_r`; zero for the empty word.
    pub fn run_count(&self) -> usize {
        if self.is_empty() {
            return 0;
        }
        let transitions = (self.bits ^ (self.bits >> 1)) & low_mask(self.len() - 1);
        transitions.count_ones() as usize + 1
    }

    /// Every run has length one.
    pub fn is_alternating(&self) -> bool {
        self.run_count() == self.len()
    }

    /// Bitwise complement.
    pub fn complement(&self) -> BinaryWord {
        BinaryWord {
            len: self.len,
            bits: !self.bits & low_mask(self.len()),
        }
    }

    /// The word read right to left.
    pub fn reversed(&self) -> BinaryWord {
        let len = self.len();
        let bits = if len == 0 {
            0
        } else {
            self.bits.reverse_bits() >> (64 - len)
        };
        BinaryWord {
            len: self.len,
            bits,
        }
    }

    /// The word with position `i` removed.
    pub fn remove(&self, i: usize) -> BinaryWord {
        let len = self.len();
        assert!(i < len, "remove index {i} out of range for length {len}");
        let tail_len = len - 1 - i;
        let tail = self.bits & low_mask(tail_len);
        let head = if len - i >= 64 { 0 } else { self.bits >> (tail_len + 1) };
        BinaryWord {
            len: self.len - 1,
            bits: (head << tail_len) | tail,
        }
    }

    /// The word with `bit` inserted so that it lands at position `i`.
    pub fn insert(&self, i: usize, bit: u8) -> Result<BinaryWord> {
        let len = self.len();
        assert!(i <= len, "insert index {i} out of range for length {len}");
        if len + 1 > MAX_WORD_LEN {
            return Err(Error::WordTooLong {
                len: len + 1,
                max: MAX_WORD_LEN,
            });
        }
        let tail_len = len - i;
        let tail = self.bits & low_mask(tail_len);
        let head = if tail_len >= 64 { 0 } else { self.bits >> tail_len };
        let bits = (((head << 1) | (bit & 1) as u64) << tail_len) | tail;
        Ok(BinaryWord {
            len: self.len + 1,
            bits,
        })
    }

    /// Concatenation of two words.
    pub fn concat(&self, other: &BinaryWord) -> Result<BinaryWord> {
        let len = self.len() + other.len();
        if len > MAX_WORD_LEN {
            return Err(Error::WordTooLong {
                len,
                max: MAX_WORD_LEN,
            });
        }
        let head = if other.len() >= 64 { 0 } else { self.bits << other.len() };
        Ok(BinaryWord {
            len: len as u8,
            bits: head | other.bits,
        })
    }
}

#[inline]
fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl fmt::Display for BinaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_empty() {
            return f.write_str("ε");
        }
        for b in self.iter() {
            f.write_str(if b == 1 { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BinaryWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BinaryWord({self})")
    }
}

impl FromStr for BinaryWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let symbols = s
            .chars()
            .map(|c| match c {
                '0' => Ok(0u8),
                '1' => Ok(1u8),
                other => Err(Error::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>>>()?;
        BinaryWord::from_bits(&symbols)
    }
}

/// Run-length description `(x₁, r₁ r₂ … r_n)` of a non-empty word.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RunLengths {
    pub first_bit: u8,
    pub runs: Vec<usize>,
}

impl RunLengths {
    pub fn run_count(&self) -> usize {
        self.runs.len()
    }

    pub fn word_len(&self) -> usize {
        self.runs.iter().sum()
    }
}

/// Run-length description of a non-empty word.
pub fn runlength_encode(word: &BinaryWord) -> Result<RunLengths> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    Ok(RunLengths {
        first_bit: word.bit(0),
        runs: word.run_lengths(),
    })
}

/// Rebuilds the word from its run-length description.
pub fn runlength_decode(rl: &RunLengths) -> Result<BinaryWord> {
    if rl.runs.is_empty() {
        return Err(Error::EmptyWord);
    }
    if rl.runs.contains(&0) {
        return Err(Error::ZeroRun);
    }
    if rl.first_bit > 1 {
        return Err(Error::InvalidBit(char::from(b'0' + rl.first_bit.min(9))));
    }
    let len = rl.word_len();
    if len > MAX_WORD_LEN {
        return Err(Error::WordTooLong {
            len,
            max: MAX_WORD_LEN,
        });
    }
    let mut symbols = Vec::with_capacity(len);
    let mut bit = rl.first_bit;
    for &r in &rl.runs {
        symbols.extend(std::iter::repeat(bit).take(r));
        bit ^= 1;
    }
    BinaryWord::from_bits(&symbols)
}

/// Empirical run-length entropy `Ĥ(r(x)) = -Σ (r_i/ℓ) log2(r_i/ℓ)` in bits.
pub fn empirical_runlength_entropy(word: &BinaryWord) -> Result<f64> {
    if word.is_empty() {
        return Err(Error::EmptyWord);
    }
    let ell = word.len() as f64;
    Ok(run_profile_entropy(word.run_lengths().into_iter(), ell))
}

/// `-Σ (r/ℓ) log2(r/ℓ)` for an arbitrary run profile of total length `ell`.
pub(crate) fn run_profile_entropy<I: Iterator<Item = usize>>(runs: I, ell: f64) -> f64 {
    crate::info::sum(runs.map(|r| {
        let frac = r as f64 / ell;
        -frac * frac.log2()
    }))
}

/// Exact binomial coefficient, `None` on `u128` overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is divisible by (i + 1) at every step.
        acc = acc.checked_mul((n - i) as u128)? / (i + 1) as u128;
    }
    Some(acc)
}

fn check_count_len(ell: usize) -> Result<()> {
    if ell > MAX_COUNT_LEN {
        Err(Error::WordTooLong {
            len: ell,
            max: MAX_COUNT_LEN,
        })
    } else {
        Ok(())
    }
}

/// `n'(ℓ,m) = 2 C(ℓ-1, m-1)`: length-`ℓ` words with exactly `m` runs.
pub fn count_words_with_m_runs(ell: usize, m: usize) -> Result<u128> {
    check_count_len(ell)?;
    if m == 0 || m > ell {
        return Ok(0);
    }
    let c = binomial((ell - 1) as u64, (m - 1) as u64).ok_or(Error::Overflow("n'(ℓ,m)"))?;
    c.checked_mul(2).ok_or(Error::Overflow("n'(ℓ,m)"))
}

/// `n''(k,m,ℓ)`: total number of length-`k` runs over all length-`ℓ` words
/// with exactly `m` runs.
pub fn count_runs_of_length(k: usize, m: usize, ell: usize) -> Result<u128> {
    check_count_len(ell)?;
    if k == 0 || m == 0 || ell == 0 {
        return Ok(0);
    }
    if m == 1 {
        return Ok(if k == ell { 2 } else { 0 });
    }
    if k + m > ell + 1 {
        return Ok(0);
    }
    let c = binomial((ell - k - 1) as u64, (m - 2) as u64).ok_or(Error::Overflow("n''(k,m,ℓ)"))?;
    c.checked_mul(2 * m as u128)
        .ok_or(Error::Overflow("n''(k,m,ℓ)"))
}

/// `n(ℓ,j)`: total number of length-`j` runs over all length-`ℓ` words.
pub fn total_run_count(ell: usize, j: usize) -> Result<u128> {
    check_count_len(ell)?;
    if j == 0 || j > ell {
        return Ok(0);
    }
    if j == ell {
        return Ok(2);
    }
    let shift = (ell - j - 1) as u32;
    (1u128 << shift)
        .checked_mul((ell - j + 3) as u128)
        .ok_or(Error::Overflow("n(ℓ,j)"))
}
