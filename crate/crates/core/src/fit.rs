//! Ordinary least squares on a line, plus sequence extrapolation helpers.

use alloc::vec::Vec;
#[allow(unused_imports)]
use num_traits::Float;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

impl LineFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// Fits `y = slope * x + intercept`. Returns `None` for fewer than two
/// points or a degenerate abscissa.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Option<LineFit> {
    let n = xs.len().min(ys.len());
    if n < 2 {
        return None;
    }
    let nf = n as f64;
    let mx = xs[..n].iter().sum::<f64>() / nf;
    let my = ys[..n].iter().sum::<f64>() / nf;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut syy = 0.0;
    for i in 0..n {
        let dx = xs[i] - mx;
        let dy = ys[i] - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    Some(LineFit { slope, intercept, r2 })
}

/// Aitken's delta-squared transform. Entries where the second difference
/// vanishes pass the last term through unchanged.
pub fn aitken(seq: &[f64]) -> Vec<f64> {
    if seq.len() < 3 {
        return seq.to_vec();
    }
    seq.windows(3)
        .map(|w| {
            let d1 = w[1] - w[0];
            let d2 = w[2] - w[1];
            let den = d2 - d1;
            if den == 0.0 || !den.is_finite() {
                w[2]
            } else {
                let v = w[2] - d2 * d2 / den;
                if v.is_finite() {
                    v
                } else {
                    w[2]
                }
            }
        })
        .collect()
}

/// Index where the trailing run of non-increasing successive differences
/// begins: `seq[start..]` has `|seq[i] - seq[i-1]|` monotone in `i`.
/// Differences at or below `floor` count as zero, so a sequence that has
/// settled to noise level stays usable.
pub fn usable_tail_start(seq: &[f64], floor: f64) -> usize {
    if seq.len() < 3 {
        return 0;
    }
    let diffs: Vec<f64> = seq
        .windows(2)
        .map(|w| {
            let d = (w[1] - w[0]).abs();
            if d <= floor {
                0.0
            } else {
                d
            }
        })
        .collect();
    let mut start = diffs.len() - 1;
    while start > 0 && diffs[start - 1] >= diffs[start] {
        start -= 1;
    }
    start
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn exact_line() {
        let f = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-15);
        assert!((f.intercept - 1.0).abs() < 1e-15);
        assert!((f.r2 - 1.0).abs() < 1e-15);
        assert!(fit_line(&[1.0], &[1.0]).is_none());
    }

    #[test]
    fn aitken_removes_one_geometric_mode() {
        let seq: Vec<f64> = (0..10).map(|n| 2.0 + 0.5 * 0.8f64.powi(n)).collect();
        for v in aitken(&seq) {
            assert!((v - 2.0).abs() < 1e-13);
        }
    }

    #[test]
    fn tail_start_stops_at_noise() {
        let seq = vec![1.0, 1.1, 1.5, 1.4, 1.35, 1.34];
        assert_eq!(usable_tail_start(&seq, 0.0), 1);
        assert_eq!(usable_tail_start(&[1.0, 0.5, 0.25, 0.25 + 1e-14, 0.25], 1e-12), 0);
    }
}
