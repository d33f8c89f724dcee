//! Turning-point detection on sampled one-parameter curves.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::roots::golden_section;

/// Which side of a multistable window a fold bounds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FoldKind {
    /// Local minimum of the input amplitude; a decreasing sweep jumps here.
    LowerFold,
    /// Local maximum of the input amplitude; an increasing sweep jumps here.
    UpperFold,
}

/// Discrete slope `dy/dx` by centered differences (one-sided at the ends).
pub fn slopes(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    assert_eq!(n, ys.len());
    match n {
        0 => vec![],
        1 => vec![0.0],
        _ => (0..n)
            .map(|i| {
                let (l, r) = (i.saturating_sub(1), (i + 1).min(n - 1));
                (ys[r] - ys[l]) / (xs[r] - xs[l])
            })
            .collect(),
    }
}

/// Sign of the discrete slope at each sample, -1, 0 or +1.
pub fn slope_signs(xs: &[f64], ys: &[f64]) -> Vec<i8> {
    slopes(xs, ys)
        .into_iter()
        .map(|s| if s > 0.0 { 1 } else if s < 0.0 { -1 } else { 0 })
        .collect()
}

/// Adjacent index pairs across which the discrete slope changes sign.
pub fn sign_changes(xs: &[f64], ys: &[f64]) -> Vec<(usize, usize, FoldKind)> {
    let signs = slope_signs(xs, ys);
    let mut out = Vec::new();
    let mut last: Option<(usize, i8)> = None;
    for (i, &s) in signs.iter().enumerate() {
        if s == 0 {
            continue;
        }
        if let Some((j, p)) = last {
            if p != s {
                let kind = if p > 0 { FoldKind::UpperFold } else { FoldKind::LowerFold };
                out.push((j, i, kind));
            }
        }
        last = Some((i, s));
    }
    out
}

/// Refines a fold bracketed by samples `lo..=hi` of a curve whose ordinate
/// can be re-evaluated at any abscissa. Returns `(x*, y*)`.
pub fn refine<F>(f: F, xs: &[f64], lo: usize, hi: usize, kind: FoldKind, rel_tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let a = xs[lo.saturating_sub(1)];
    let b = xs[(hi + 1).min(xs.len() - 1)];
    let xtol = rel_tol * a.abs().max(b.abs()).max(f64::MIN_POSITIVE);
    golden_section(f, a, b, kind == FoldKind::UpperFold, xtol)
}
