//! Least squares with heteroskedasticity-robust (HC1) standard errors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition-number ceiling beyond which the ridge fallback kicks in.
const MAX_CONDITION: f64 = 1e12;
const RIDGE_SCALE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct OlsFit {
    /// Intercept first, then one coefficient per column.
    pub coef: Vec<f64>,
    pub se: Vec<f64>,
    pub ridge: bool,
}

/// Regresses `y` on an intercept plus `columns`.
pub fn ols(y: &[f64], columns: &[&[f64]]) -> Result<OlsFit> {
    let n = y.len();
    let p = columns.len() + 1;
    if n <= p {
        return Err(Error::InsufficientData(format!(
            "{n} observations for {p} parameters"
        )));
    }
    if let Some(c) = columns.iter().find(|c| c.len() != n) {
        return Err(Error::Schema(format!(
            "column of length {} against {n} outcomes",
            c.len()
        )));
    }

    let row = |r: usize, c: usize| if c == 0 { 1.0 } else { columns[c - 1][r] };
    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    for r in 0..n {
        for a in 0..p {
            let xa = row(r, a);
            xty[a] += xa * y[r];
            for b in a..p {
                xtx[(a, b)] += xa * row(r, b);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            xtx[(a, b)] = xtx[(b, a)];
        }
    }

    let eig = xtx.clone().symmetric_eigen();
    let max_ev = eig.eigenvalues.max();
    let min_ev = eig.eigenvalues.min();
    let ridge = !(min_ev > 0.0 && max_ev / min_ev < MAX_CONDITION);
    if ridge {
        let lambda = RIDGE_SCALE * max_ev.max(1.0);
        for k in 1..p {
            xtx[(k, k)] += lambda;
        }
    }
    let inv = xtx
        .clone()
        .cholesky()
        .map(|c| c.inverse())
        .ok_or_else(|| Error::Singular("normal equations are not positive definite".into()))?;
    let beta = &inv * xty;

    let mut meat = DMatrix::<f64>::zeros(p, p);
    for r in 0..n {
        let fitted: f64 = (0..p).map(|c| row(r, c) * beta[c]).sum();
        let e2 = (y[r] - fitted).powi(2);
        for a in 0..p {
            let xa = row(r, a) * e2;
            for b in a..p {
                meat[(a, b)] += xa * row(r, b);
            }
        }
    }
    for a in 0..p {
        for b in 0..a {
            meat[(a, b)] = meat[(b, a)];
        }
    }
    let dof = n as f64 / (n - p) as f64;
    let cov = &inv * meat * &inv * dof;
    let se = (0..p).map(|k| cov[(k, k)].max(0.0).sqrt()).collect();

    Ok(OlsFit {
        coef: beta.iter().copied().collect(),
        se,
        ridge,
    })
}

/// Zero-mean, unit-variance copy; `None` for constant columns.
pub fn standardize(col: &[f64]) -> Option<Vec<f64>> {
    let n = col.len() as f64;
    let mean = col.iter().sum::<f64>() / n;
    let var = col.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
    if !(var > 0.0) || !var.is_finite() {
        return None;
    }
    let sd = var.sqrt();
    Some(col.iter().map(|x| (x - mean) / sd).collect())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut k = 0;
    while k < order.len() {
        let mut end = k + 1;
        while end < order.len() && v[order[end]] == v[order[k]] {
            end += 1;
        }
        // average of 1-based positions k+1..=end
        let avg = (k + 1 + end) as f64 / 2.0;
        for &idx in &order[k..end] {
            out[idx] = avg;
        }
        k = end;
    }
    out
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    (sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}
