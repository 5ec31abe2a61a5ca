//! Row generators for the figure data.
//!
//! Every generator returns rows in a fixed order that does not depend on how
//! the work was scheduled, so reruns are byte-identical once formatted.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{self, lower_bound_no_si, optimize_alpha, upper_bound_u};
use crate::capacity::{blahut_arimoto, relative_gaps, uniform_vs_optimized_gap, BaOptions, SimplexGrid};
use crate::channel::ChannelParams;
use crate::error::{Error, Result};

/// Maximum relative gaps of `U` and `max_α L^α_SI` to `C_SI` at one block length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig1Row {
    pub ell: usize,
    pub delta_u_percent: f64,
    pub delta_l_percent: f64,
    #[serde(skip)]
    pub excluded: Vec<(f64, f64)>,
}

/// Relative loss of the uniform input against the optimized Markov input.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig2Row {
    pub ell: usize,
    pub q: f64,
    pub delta_lsi_percent: f64,
}

/// Bounds on the segmented deletion channel at `q = 0`.
///
/// `l_opt` and `l_uniform` are the segmented lower bounds
/// `max(0, L^α_SI - H_b(p,q)/ℓ)` at the optimized α and at α = 0.5.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fig34Row {
    pub ell: usize,
    pub p: f64,
    pub upper_u: f64,
    pub l_opt: f64,
    pub l_uniform: f64,
    pub c_si: f64,
    #[serde(skip)]
    pub converged: bool,
}

pub fn fig1_rows(ells: &[usize], grid: &SimplexGrid, ba: &BaOptions) -> Result<Vec<Fig1Row>> {
    ells.iter()
        .map(|&ell| {
            let r = relative_gaps(ell, grid, ba)?;
            Ok(Fig1Row {
                ell,
                delta_u_percent: r.delta_u_percent,
                delta_l_percent: r.delta_l_percent,
                excluded: r.excluded,
            })
        })
        .collect()
}

pub fn fig2_rows(ells: &[usize], qs: &[f64], p_step: f64) -> Result<Vec<Fig2Row>> {
    let mut rows = Vec::with_capacity(ells.len() * qs.len());
    for &ell in ells {
        for &q in qs {
            rows.push(Fig2Row {
                ell,
                q,
                delta_lsi_percent: 100.0 * uniform_vs_optimized_gap(ell, q, p_step)?,
            });
        }
    }
    Ok(rows)
}

/// `0, step, 2·step, …` up to `stop`, with `stop` itself appended if the
/// step does not land on it.
pub fn linear_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!("step {step} must be positive")));
    }
    if !(stop >= start) {
        return Err(Error::InvalidArgument(format!("range [{start}, {stop}] is empty")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    let mut v: Vec<f64> = (0..=n).map(|i| start + i as f64 * step).collect();
    if stop - v[n] > 1e-9 {
        v.push(stop);
    }
    if let Some(last) = v.last_mut() {
        *last = last.min(stop);
    }
    Ok(v)
}

pub fn fig34_row(ell: usize, p: f64, ba: &BaOptions) -> Result<Fig34Row> {
    let params = ChannelParams::new(ell, p, 0.0)?;
    let hb = bounds::entropy_hb(p, 0.0)? / ell as f64;
    let opt = optimize_alpha(&params, bounds::DEFAULT_ALPHA_TOL)?;
    let sol = blahut_arimoto(&params, ba)?;
    Ok(Fig34Row {
        ell,
        p,
        upper_u: upper_bound_u(&params)?,
        l_opt: (opt.value - hb).max(0.0),
        l_uniform: lower_bound_no_si(&params, 0.5)?.max(0.0),
        c_si: sol.capacity_bits_per_symbol,
        converged: sol.converged,
    })
}

pub fn fig34_rows(ell: usize, ps: &[f64], ba: &BaOptions) -> Result<Vec<Fig34Row>> {
    ps.par_iter().map(|&p| fig34_row(ell, p, ba)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_grid_hits_the_endpoint() {
        let g = linear_grid(0.0, 1.0, 0.05).unwrap();
        assert_eq!(g.len(), 21);
        assert_eq!(*g.last().unwrap(), 1.0);
        let g = linear_grid(0.0, 0.25, 0.1).unwrap();
        assert_eq!(g.len(), 4);
        assert_eq!(g[3], 0.25);
        assert!(linear_grid(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn fig34_noiseless_row() {
        let r = fig34_row(8, 0.0, &BaOptions::default()).unwrap();
        assert_eq!(r.upper_u, 1.0);
        assert!((r.c_si - 1.0).abs() < 1e-9);
        assert!((r.l_opt - 1.0).abs() < 1e-9);
    }

    #[test]
    fn fig2_rows_are_percentages_in_order() {
        let rows = fig2_rows(&[2, 3], &[0.1, 0.5], 0.1).unwrap();
        let keys: Vec<(usize, f64)> = rows.iter().map(|r| (r.ell, r.q)).collect();
        assert_eq!(keys, vec![(2, 0.1), (2, 0.5), (3, 0.1), (3, 0.5)]);
        assert!(rows.iter().all(|r| (0.0..100.0).contains(&r.delta_lsi_percent)));
    }
}
