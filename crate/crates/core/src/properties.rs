//! Crippen logP scoring, [0, 1] scaling and histograms.

use molgan_chem::{crippen_logp, parse_and_check};
use serde::Serialize;

pub const LOGP_WINDOW: (f64, f64) = (-4.0, 8.0);

/// Clamps `raw` into `[lo, hi]` and maps the window onto `[0, 1]`.
pub fn scale_to_unit(raw: f64, lo: f64, hi: f64) -> f64 {
    debug_assert!(lo < hi);
    (raw.clamp(lo, hi) - lo) / (hi - lo)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    /// `bins + 1` equal-width edges over [0, 1].
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Equal-width bins over [0, 1]; the last bin is closed on the right.
pub fn histogram(scores: &[f64], bins: usize) -> Histogram {
    let bins = bins.max(1);
    let edges = (0..=bins).map(|k| k as f64 / bins as f64).collect();
    let mut counts = vec![0; bins];
    for &s in scores {
        let k = ((s.clamp(0.0, 1.0) * bins as f64) as usize).min(bins - 1);
        counts[k] += 1;
    }
    Histogram { edges, counts }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyReport {
    pub property: &'static str,
    pub window: (f64, f64),
    pub raw: Vec<f64>,
    pub scaled: Vec<f64>,
    pub mean: f64,
    pub median: f64,
    pub histogram: Histogram,
    /// Molecules with at least one atom outside the contribution table.
    pub untyped_molecules: usize,
    /// Reserved for drug-likeness; not computed.
    pub qed: Option<Vec<f64>>,
    /// Reserved for synthetic accessibility; not computed.
    pub sa: Option<Vec<f64>>,
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Summary and histogram of already scaled scores.
pub fn property_histogram(raw: Vec<f64>, scaled: Vec<f64>, bins: usize) -> PropertyReport {
    let n = scaled.len().max(1) as f64;
    PropertyReport {
        property: "logp",
        window: LOGP_WINDOW,
        mean: scaled.iter().sum::<f64>() / n,
        median: if scaled.is_empty() { 0.0 } else { median(&scaled) },
        histogram: histogram(&scaled, bins),
        raw,
        scaled,
        untyped_molecules: 0,
        qed: None,
        sa: None,
    }
}

/// Scores every valid string; invalid ones are skipped.
pub fn logp_report<S: AsRef<str>>(smiles: &[S], bins: usize) -> PropertyReport {
    let mut raw = Vec::new();
    let mut untyped = 0;
    for s in smiles {
        if let Ok((g, _)) = parse_and_check(s.as_ref()) {
            let lp = crippen_logp(&g);
            if !lp.untyped.is_empty() {
                untyped += 1;
            }
            raw.push(lp.value);
        }
    }
    let scaled = raw.iter().map(|&r| scale_to_unit(r, LOGP_WINDOW.0, LOGP_WINDOW.1)).collect();
    let mut report = property_histogram(raw, scaled, bins);
    report.untyped_molecules = untyped;
    report
}

/// `bin_lo,bin_hi,count_generated,count_training` rows after the comments.
pub fn histogram_csv(generated: &Histogram, training: &Histogram, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        out.push_str(c);
        out.push('\n');
    }
    out.push_str("bin_lo,bin_hi,count_generated,count_training\n");
    for k in 0..generated.counts.len() {
        out.push_str(&format!(
            "{:.4},{:.4},{},{}\n",
            generated.edges[k],
            generated.edges[k + 1],
            generated.counts[k],
            training.counts.get(k).copied().unwrap_or(0)
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scaling_endpoints() {
        assert_eq!(scale_to_unit(-4.0, -4.0, 8.0), 0.0);
        assert_eq!(scale_to_unit(8.0, -4.0, 8.0), 1.0);
        assert_eq!(scale_to_unit(2.0, -4.0, 8.0), 0.5);
        assert_eq!(scale_to_unit(-9.0, -4.0, 8.0), 0.0);
        assert_eq!(scale_to_unit(20.0, -4.0, 8.0), 1.0);
    }

    #[test]
    fn histogram_counts() {
        let h = histogram(&[0.31, 0.32, 0.33], 10);
        assert_eq!(h.counts[3], 3);
        assert_eq!(h.counts.iter().sum::<usize>(), 3);
        assert_eq!(histogram(&[1.0], 4).counts, vec![0, 0, 0, 1]);
    }

    #[test]
    fn mean_of_scaled_versus_scaled_mean() {
        let (lo, hi) = LOGP_WINDOW;
        let inside = [-1.0, 0.5, 3.0];
        let r = property_histogram(inside.to_vec(), inside.iter().map(|&x| scale_to_unit(x, lo, hi)).collect(), 5);
        let m = inside.iter().sum::<f64>() / 3.0;
        assert!((r.mean - scale_to_unit(m, lo, hi)).abs() < 1e-12);
        let clamped = [-10.0, 0.5, 3.0];
        let r = property_histogram(clamped.to_vec(), clamped.iter().map(|&x| scale_to_unit(x, lo, hi)).collect(), 5);
        let m = clamped.iter().sum::<f64>() / 3.0;
        assert!((r.mean - scale_to_unit(m, lo, hi)).abs() > 1e-3);
    }

    #[test]
    fn logp_report_skips_invalid() {
        let r = logp_report(&["C", "CC", "C1CC"], 10);
        assert_eq!(r.raw.len(), 2);
        assert!(r.raw[1] > r.raw[0]);
        assert_eq!(r.untyped_molecules, 0);
    }
}
