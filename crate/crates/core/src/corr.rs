//! Link-correlation detection front.
//!
//! A coordinated flood pushes the same low-rate pattern across many decoy
//! edge links at once, so pairwise Pearson correlation over a sliding window
//! of polled utilizations rises together on the server side well before any
//! single flow looks anomalous. Constant (zero-variance) windows carry no
//! correlation information and are excluded from the pair mean rather than
//! counted as zero.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par;

/// Pearson correlation coefficient.
///
/// `Ok(None)` when either side has zero variance over the window; an error
/// only for structurally unusable input (length mismatch or fewer than two
/// points).
pub fn pearson_r(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 2 {
        return Err(Error::SeriesTooShort {
            len: x.len(),
            min: 2,
        });
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    let mut sxy = 0.0;
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mx;
        let dy = b - my;
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Scale a series to unit L1 mass.
pub fn l1_normalize(x: &[f64]) -> Result<Vec<f64>> {
    let mass: f64 = x.iter().map(|v| v.abs()).sum();
    if mass <= 0.0 {
        return Err(Error::AllZeroSeries);
    }
    Ok(x.iter().map(|v| v / mass).collect())
}

/// Mean pairwise correlation per sliding-window position.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorrelationTrace {
    /// Poll time of each window's last sample.
    pub times: Vec<f64>,
    /// Mean Pearson r over the valid pairs at that position.
    pub mean_r: Vec<f64>,
    /// Pairs with nonzero variance on both sides.
    pub n_valid_pairs: Vec<usize>,
    pub window: usize,
    pub n_pairs_total: usize,
}

fn sliding_inner(
    series: &[Vec<f64>],
    times: &[f64],
    window: usize,
    force_seq: bool,
) -> Result<CorrelationTrace> {
    if series.is_empty() {
        return Err(Error::EmptySelection);
    }
    if window < 2 {
        return Err(Error::SeriesTooShort { len: window, min: 2 });
    }
    let len = series[0].len();
    for s in series {
        if s.len() != len {
            return Err(Error::LengthMismatch {
                left: len,
                right: s.len(),
            });
        }
    }
    if times.len() != len {
        return Err(Error::LengthMismatch {
            left: times.len(),
            right: len,
        });
    }
    if window > len {
        return Err(Error::WindowTooLong { window, len });
    }

    let m = series.len();
    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|i| (i + 1..m).map(move |j| (i, j)))
        .collect();
    let n_positions = len - window + 1;

    let at = |p: usize| -> (f64, usize) {
        let lo = p;
        let hi = p + window;
        let mut sum = 0.0;
        let mut valid = 0usize;
        for &(i, j) in &pairs {
            if let Some(r) = pearson_r(&series[i][lo..hi], &series[j][lo..hi])
                .expect("window slices are equal-length and >= 2")
            {
                sum += r;
                valid += 1;
            }
        }
        if valid == 0 {
            (0.0, 0)
        } else {
            (sum / valid as f64, valid)
        }
    };

    let rows: Vec<(f64, usize)> = if force_seq {
        par::map_indexed_seq(n_positions, at)
    } else {
        par::map_indexed(n_positions, at)
    };

    Ok(CorrelationTrace {
        times: (0..n_positions).map(|p| times[p + window - 1]).collect(),
        mean_r: rows.iter().map(|r| r.0).collect(),
        n_valid_pairs: rows.iter().map(|r| r.1).collect(),
        window,
        n_pairs_total: pairs.len(),
    })
}

/// Slide a `window`-sample Pearson mean across every pair of series.
pub fn sliding_mean_corr(
    series: &[Vec<f64>],
    times: &[f64],
    window: usize,
) -> Result<CorrelationTrace> {
    sliding_inner(series, times, window, false)
}

/// Sequential-core variant of [`sliding_mean_corr`]; identical output.
pub fn sliding_mean_corr_seq(
    series: &[Vec<f64>],
    times: &[f64],
    window: usize,
) -> Result<CorrelationTrace> {
    sliding_inner(series, times, window, true)
}

/// First time the trace holds at or above `threshold` for `consecutive`
/// window positions; the time of the position completing the run.
pub fn alarm(trace: &CorrelationTrace, threshold: f64, consecutive: usize) -> Option<f64> {
    let need = consecutive.max(1);
    let mut streak = 0usize;
    for (k, &r) in trace.mean_r.iter().enumerate() {
        if r >= threshold {
            streak += 1;
            if streak >= need {
                return Some(trace.times[k]);
            }
        } else {
            streak = 0;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use proptest::prelude::*;

    /// Reference implementation via the raw-moment formula.
    fn pearson_reference(x: &[f64], y: &[f64]) -> f64 {
        let n = x.len() as f64;
        let sx: f64 = x.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = x.iter().map(|a| a * a).sum();
        let syy: f64 = y.iter().map(|a| a * a).sum();
        let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
        (n * sxy - sx * sy) / ((n * sxx - sx * sx).sqrt() * (n * syy - sy * sy).sqrt())
    }

    #[test]
    fn matches_reference_formula() {
        let x = [1.0, 2.0, 4.0, 3.5, 7.0, 2.2];
        let y = [0.3, 1.9, 2.2, 4.0, 5.5, 1.0];
        let got = pearson_r(&x, &y).unwrap().unwrap();
        assert!((got - pearson_reference(&x, &y)).abs() < 1e-9);
    }

    #[test]
    fn exact_on_linear_relations() {
        assert_eq!(pearson_r(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), Some(1.0));
        assert_eq!(pearson_r(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
    }

    #[test]
    fn zero_variance_is_none_not_error() {
        assert_eq!(pearson_r(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]).unwrap(), None);
        assert_eq!(pearson_r(&[1.0, 2.0, 3.0], &[5.0, 5.0, 5.0]).unwrap(), None);
    }

    #[test]
    fn structural_errors() {
        assert!(matches!(
            pearson_r(&[1.0], &[1.0, 2.0]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            pearson_r(&[1.0], &[2.0]),
            Err(Error::SeriesTooShort { .. })
        ));
    }

    proptest! {
        #[test]
        fn invariant_under_positive_affine_maps(
            xs in proptest::collection::vec(-1e3f64..1e3, 5..40),
            a in 0.01f64..100.0,
            b in -1e3f64..1e3,
        ) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, &v)| v * 0.5 + (i as f64).sin()).collect();
            let scaled: Vec<f64> = xs.iter().map(|&v| a * v + b).collect();
            let r1 = pearson_r(&xs, &ys).unwrap();
            let r2 = pearson_r(&scaled, &ys).unwrap();
            match (r1, r2) {
                (Some(u), Some(v)) => prop_assert!((u - v).abs() < 1e-6),
                (None, None) => {}
                other => prop_assert!(false, "variance classification changed: {other:?}"),
            }
        }

        #[test]
        fn symmetric_in_arguments(
            xs in proptest::collection::vec(-1e3f64..1e3, 5..40),
        ) {
            let ys: Vec<f64> = xs.iter().enumerate().map(|(i, &v)| v.cos() + i as f64).collect();
            let r1 = pearson_r(&xs, &ys).unwrap();
            let r2 = pearson_r(&ys, &xs).unwrap();
            prop_assert_eq!(r1.is_some(), r2.is_some());
            if let (Some(u), Some(v)) = (r1, r2) {
                prop_assert!((u - v).abs() < 1e-12);
            }
        }
    }

    fn noise_series(n_series: usize, len: usize, seed: u64) -> Vec<Vec<f64>> {
        (0..n_series)
            .map(|s| {
                (0..len)
                    .map(|t| rng::unit(seed, &[s as u64, t as u64]))
                    .collect()
            })
            .collect()
    }

    #[test]
    fn independent_noise_has_near_zero_mean_corr() {
        let series = noise_series(10, 120, 31);
        let times: Vec<f64> = (0..120).map(|k| k as f64 * 5.0).collect();
        let trace = sliding_mean_corr(&series, &times, 30).unwrap();
        assert_eq!(trace.n_pairs_total, 45);
        let avg = trace.mean_r.iter().sum::<f64>() / trace.mean_r.len() as f64;
        assert!(avg.abs() < 0.05, "mean over windows {avg}");
        assert!(trace.n_valid_pairs.iter().all(|&v| v == 45));
    }

    #[test]
    fn identical_ramps_are_perfectly_correlated() {
        let base: Vec<f64> = (0..60).map(|k| 0.1 + 0.01 * k as f64).collect();
        let series = vec![base.clone(), base.clone(), base];
        let times: Vec<f64> = (0..60).map(|k| k as f64).collect();
        let trace = sliding_mean_corr(&series, &times, 30).unwrap();
        for (&r, &v) in trace.mean_r.iter().zip(&trace.n_valid_pairs) {
            assert!((r - 1.0).abs() < 1e-12);
            assert_eq!(v, 3);
        }
    }

    #[test]
    fn constant_series_are_excluded_from_the_pair_count() {
        let flat = vec![0.5f64; 60];
        let wavy: Vec<f64> = (0..60).map(|k| (k as f64).sin()).collect();
        let series = vec![flat, wavy.clone(), wavy.iter().map(|v| v * 2.0).collect()];
        let times: Vec<f64> = (0..60).map(|k| k as f64).collect();
        let trace = sliding_mean_corr(&series, &times, 30).unwrap();
        // Only the wavy-wavy pair counts; it is exactly linear.
        for (&r, &v) in trace.mean_r.iter().zip(&trace.n_valid_pairs) {
            assert_eq!(v, 1);
            assert!((r - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn window_and_shape_errors() {
        let series = noise_series(3, 20, 1);
        let times: Vec<f64> = (0..20).map(|k| k as f64).collect();
        assert!(matches!(
            sliding_mean_corr(&series, &times, 30),
            Err(Error::WindowTooLong { .. })
        ));
        assert!(matches!(
            sliding_mean_corr(&[], &times, 5),
            Err(Error::EmptySelection)
        ));
        let ragged = vec![vec![1.0; 20], vec![1.0; 19]];
        assert!(matches!(
            sliding_mean_corr(&ragged, &times, 5),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn parallel_matches_sequential_exactly() {
        let series = noise_series(8, 90, 77);
        let times: Vec<f64> = (0..90).map(|k| k as f64 * 5.0).collect();
        let a = sliding_mean_corr(&series, &times, 30).unwrap();
        let b = sliding_mean_corr_seq(&series, &times, 30).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    #[test]
    fn l1_normalize_unit_mass() {
        let v = l1_normalize(&[3.0, -1.0, 0.5]).unwrap();
        let mass: f64 = v.iter().map(|x| x.abs()).sum();
        assert!((mass - 1.0).abs() < 1e-12);
        assert!(matches!(l1_normalize(&[0.0, 0.0]), Err(Error::AllZeroSeries)));
    }

    #[test]
    fn alarm_requires_consecutive_windows() {
        let trace = CorrelationTrace {
            times: (0..8).map(|k| k as f64).collect(),
            mean_r: vec![0.1, 0.6, 0.2, 0.6, 0.7, 0.8, 0.1, 0.9],
            n_valid_pairs: vec![10; 8],
            window: 30,
            n_pairs_total: 10,
        };
        assert_eq!(alarm(&trace, 0.5, 1), Some(1.0));
        assert_eq!(alarm(&trace, 0.5, 3), Some(5.0));
        assert_eq!(alarm(&trace, 0.5, 4), None);
        assert_eq!(alarm(&trace, 0.95, 1), None);
    }
}
