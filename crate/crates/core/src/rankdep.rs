//! Data-driven rank statistic for pairwise independence.

use crate::error::{Error, Result};
use crate::neyman::{select_order, SelectionRule, SmoothResult};
use crate::special::legendre_b_all;

/// Midranks of a sample: 1..n for distinct values, ties averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct RankVector {
    ranks: Vec<f64>,
}

impl RankVector {
    pub fn ranks(&self) -> &[f64] {
        &self.ranks
    }
}

pub fn midranks(values: &[f64]) -> Result<RankVector> {
    let n = values.len();
    if n == 0 {
        return Err(Error::Domain("midranks of an empty sample".into()));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        // positions i..=j (0-based) share the average of ranks i+1..=j+1
        let avg = (i + j + 2) as f64 / 2.0;
        for &idx in &order[i..=j] {
            ranks[idx] = avg;
        }
        i = j + 1;
    }
    Ok(RankVector { ranks })
}

/// The data-driven rank independence statistic for one component pair.
///
/// Components are M_j = n^{-1/2} sum_i b_j(u_i) b_j(v_i) with
/// u_i = (R1_i - 1/2)/n; the same penalized selection machinery as the
/// uniformity statistic picks the order from |M_j|.
pub fn t2_statistic(x: &[f64], y: &[f64], rule: &SelectionRule) -> Result<SmoothResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch { left: x.len(), right: y.len() });
    }
    let n = x.len();
    if n < 2 {
        return Err(Error::InsufficientData { need: 2, got: n });
    }
    let rx = midranks(x)?;
    let ry = midranks(y)?;
    let components = rank_components(rx.ranks(), ry.ranks(), rule.dmax);
    let order = select_order(&components, n, &rule.rank_rule());
    let statistic = components[..order].iter().map(|m| m * m).sum();
    Ok(SmoothResult { statistic, order, components })
}

fn rank_components(rx: &[f64], ry: &[f64], dmax: usize) -> Vec<f64> {
    let n = rx.len();
    let nf = n as f64;
    let mut sums = vec![0.0; dmax];
    let mut bu = vec![0.0; dmax];
    let mut bv = vec![0.0; dmax];
    for i in 0..n {
        let u = (rx[i] - 0.5) / nf;
        let v = (ry[i] - 0.5) / nf;
        legendre_b_all(u, &mut bu);
        legendre_b_all(v, &mut bv);
        for ((s, a), b) in sums.iter_mut().zip(&bu).zip(&bv) {
            *s += a * b;
        }
    }
    for s in sums.iter_mut() {
        *s /= nf.sqrt();
    }
    sums
}
