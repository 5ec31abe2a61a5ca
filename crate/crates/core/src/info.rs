//! Entropy helpers shared by the channel, bound and capacity code.
//!
//! Every quantity here is in bits and uses the convention `0 log 0 = 0`.

/// `x log2 x`, with the value at zero defined as zero.
#[inline]
pub fn xlog2x(x: f64) -> f64 {
    if x > 0.0 {
        x * x.log2()
    } else {
        0.0
    }
}

/// Shannon entropy of a (possibly sub-normalized) mass vector.
pub fn entropy<I>(masses: I) -> f64
where
    I: IntoIterator<Item = f64>,
{
    let mut acc = NeumaierSum::default();
    for m in masses {
        acc.add(-xlog2x(m));
    }
    acc.total()
}

/// Binary entropy `H(a) = -a log a - (1-a) log(1-a)`.
pub fn binary_entropy(a: f64) -> f64 {
    -xlog2x(a) - xlog2x(1.0 - a)
}

/// Compensated summation; the enumeration oracles sum up to 2^16 rows and the
/// closed-form comparisons need agreement well below 1e-9.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn total(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = NeumaierSum::default();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of an iterator of reals.
pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().total()
}

/// Binomial probability mass `C(n,k) s^k (1-s)^(n-k)` for `k = 0..=n`.
///
/// Evaluated in log space so that it stays finite for block lengths in the
/// thousands, where `C(n, n/2)` alone overflows an `f64`.
pub fn binomial_pmf(n: usize, s: f64) -> Vec<f64> {
    debug_assert!((0.0..=1.0).contains(&s));
    if s <= 0.0 {
        let mut v = vec![0.0; n + 1];
        v[0] = 1.0;
        return v;
    }
    if s >= 1.0 {
        let mut v = vec![0.0; n + 1];
        v[n] = 1.0;
        return v;
    }
    let ln_s = s.ln();
    let ln_t = (-s).ln_1p();
    let mut ln_choose = 0.0;
    let mut out = Vec::with_capacity(n + 1);
    for k in 0..=n {
        if k > 0 {
            ln_choose += ((n - k + 1) as f64).ln() - (k as f64).ln();
        }
        out.push((ln_choose + k as f64 * ln_s + (n - k) as f64 * ln_t).exp());
    }
    out
}
