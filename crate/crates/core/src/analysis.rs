//! Learning-curve statistics: ensemble means, the improvement/degradation
//! split of per-epoch error changes, exponential fits, optimal-epoch
//! extraction and the log-log size-scaling fit.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::mean_std;

/// Errors recorded by one training run, one entry per epoch.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LearningCurve {
    /// Error of the initial mask, scored before epoch 1.
    pub eps_initial: f64,
    /// Error of the mask tested at each epoch.
    pub eps_tested: Vec<f64>,
    /// Last accepted error after each epoch. Non-increasing.
    pub eps_accepted: Vec<f64>,
}

impl LearningCurve {
    pub fn len(&self) -> usize {
        self.eps_accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps_accepted.is_empty()
    }

    pub fn k_opt(&self) -> usize {
        find_optimal_epoch(&self.eps_accepted)
    }

    pub fn eps_opt(&self) -> f64 {
        self.eps_accepted.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Pointwise ensemble mean and population std.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanCurve {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

pub fn average_curves(curves: &[&[f64]]) -> Result<MeanCurve> {
    if curves.len() < 2 {
        return Err(Error::config("averaging needs at least two curves"));
    }
    let len = curves[0].len();
    if curves.iter().any(|c| c.len() != len) {
        return Err(Error::config("curves must have equal lengths"));
    }
    let (mean, std) = (0..len)
        .map(|k| mean_std(&curves.iter().map(|c| c[k]).collect::<Vec<_>>()))
        .unzip();
    Ok(MeanCurve { mean, std })
}

/// Per-epoch change `δ_k = ε^min(k−1) − ε_k` for epochs `2..=K`.
///
/// Positive entries are tested flips that beat the last accepted error;
/// everything else (including ties and unscorable masks, which give `−∞`)
/// belongs to the negative set.
pub fn gradient_split(curve: &LearningCurve) -> Vec<f64> {
    curve
        .eps_accepted
        .iter()
        .zip(curve.eps_tested.iter().skip(1))
        .map(|(prev_min, tested)| prev_min - tested)
        .collect()
}

/// Ensemble per-epoch means of the positive and negative sets.
/// Entry `i` refers to epoch `k = i + 2`. A mean is `NaN` when its set is
/// empty at that epoch; non-finite deltas are counted but not averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSplit {
    pub k: Vec<usize>,
    pub pos_mean: Vec<f64>,
    pub pos_count: Vec<usize>,
    pub neg_mean: Vec<f64>,
    pub neg_count: Vec<usize>,
}

pub fn ensemble_gradient_split(curves: &[LearningCurve]) -> Result<GradientSplit> {
    let deltas: Vec<Vec<f64>> = curves.iter().map(gradient_split).collect();
    let len = deltas.first().map_or(0, Vec::len);
    if deltas.iter().any(|d| d.len() != len) {
        return Err(Error::config("curves must have equal lengths"));
    }
    let mut out = GradientSplit {
        k: (2..len + 2).collect(),
        pos_mean: Vec::with_capacity(len),
        pos_count: Vec::with_capacity(len),
        neg_mean: Vec::with_capacity(len),
        neg_count: Vec::with_capacity(len),
    };
    for i in 0..len {
        let (mut ps, mut pc, mut ns, mut nc, mut nf) = (0.0, 0usize, 0.0, 0usize, 0usize);
        for d in deltas.iter().map(|d| d[i]) {
            if d > 0.0 {
                ps += d;
                pc += 1;
            } else {
                nc += 1;
                if d.is_finite() {
                    ns += d;
                    nf += 1;
                }
            }
        }
        out.pos_mean.push(if pc > 0 { ps / pc as f64 } else { f64::NAN });
        out.pos_count.push(pc);
        out.neg_mean.push(if nf > 0 { ns / nf as f64 } else { f64::NAN });
        out.neg_count.push(nc);
    }
    Ok(out)
}

/// 1-indexed epoch at which `eps_accepted` first reaches its minimum.
pub fn find_optimal_epoch(eps_accepted: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in eps_accepted.iter().enumerate() {
        if *v < eps_accepted[best] {
            best = i;
        }
    }
    best + 1
}

/// Compares the mean of the finite, positive-set deltas of one run in the
/// windows `(k_opt − w, k_opt]` and `(k_opt, k_opt + w]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KinkWindow {
    pub k_opt: usize,
    pub before: f64,
    pub after: f64,
}

impl KinkWindow {
    /// `after > before`; an empty window has mean `NaN` and never passes.
    pub fn rises(&self) -> bool {
        self.after > self.before
    }
}

/// Window means of `select(δ)` around `k_opt` for one curve, where `δ` is
/// the per-epoch change from [`gradient_split`] and `select` keeps the
/// deltas of interest (returning `None` for the rest).
pub fn kink_window(
    curve: &LearningCurve,
    k_opt: usize,
    width: usize,
    select: impl Fn(f64) -> Option<f64>,
) -> KinkWindow {
    let deltas = gradient_split(curve);
    let window_mean = |lo: usize, hi: usize| {
        // epochs k in (lo, hi]; delta index is k − 2
        let vals: Vec<f64> = (lo + 1..=hi)
            .filter(|&k| k >= 2 && k - 2 < deltas.len())
            .filter_map(|k| select(deltas[k - 2]))
            .filter(|v| v.is_finite())
            .collect();
        if vals.is_empty() {
            f64::NAN
        } else {
            vals.iter().sum::<f64>() / vals.len() as f64
        }
    };
    KinkWindow {
        k_opt,
        before: window_mean(k_opt.saturating_sub(width), k_opt),
        after: window_mean(k_opt, k_opt + width),
    }
}

/// Parameters of `a·exp(−k/b) + c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub amplitude: f64,
    /// Decay constant in epochs.
    pub rate: f64,
    pub floor: f64,
    /// Root of the summed squared residuals.
    pub residual: f64,
    /// The best decay constant sits at the upper end of the search range,
    /// i.e. the data show no resolvable exponential decay.
    pub at_bound: bool,
}

impl ExpFit {
    pub fn eval(&self, k: f64) -> f64 {
        self.amplitude * (-k / self.rate).exp() + self.floor
    }

    /// Positive amplitude with a decay constant inside the search range.
    pub fn is_decaying(&self) -> bool {
        self.amplitude > 0.0 && self.rate > 0.0 && !self.at_bound
    }
}

/// Closed-form `(a, c, sse)` for a fixed decay constant, with `c ≥ 0`.
fn linear_part(ks: &[f64], ys: &[f64], rate: f64) -> (f64, f64, f64) {
    let n = ks.len() as f64;
    let basis: Vec<f64> = ks.iter().map(|k| (-k / rate).exp()).collect();
    let (se, sy) = (basis.iter().sum::<f64>(), ys.iter().sum::<f64>());
    let see: f64 = basis.iter().map(|e| e * e).sum();
    let sey: f64 = basis.iter().zip(ys).map(|(e, y)| e * y).sum();
    let det = n * see - se * se;
    let (mut a, mut c) = if det.abs() > 1e-300 * n * see.max(1.0) {
        ((n * sey - se * sy) / det, (see * sy - se * sey) / det)
    } else {
        (0.0, sy / n)
    };
    if c < 0.0 {
        c = 0.0;
        a = if see > 0.0 { sey / see } else { 0.0 };
    }
    let sse = basis
        .iter()
        .zip(ys)
        .map(|(e, y)| {
            let r = y - (a * e + c);
            r * r
        })
        .sum();
    (a, c, sse)
}

/// Least-squares fit of `a·exp(−k/b) + c` to `(ks, ys)`.
///
/// The decay constant is scanned on a log grid spanning `1e-3..1e3` times
/// the covered `k` range and the best grid cell is refined by golden-section
/// search in `log b`. `a` and `c` are solved in closed form for each `b`.
pub fn fit_exponential(ks: &[f64], ys: &[f64]) -> Result<ExpFit> {
    if ks.len() != ys.len() || ks.len() < 4 {
        return Err(Error::FitFailure(format!(
            "need at least 4 paired points, got {} k and {} y",
            ks.len(),
            ys.len()
        )));
    }
    if ks.iter().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::FitFailure("non-finite data".into()));
    }
    let span = ks.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - ks.iter().copied().fold(f64::INFINITY, f64::min);
    let span = if span > 0.0 { span } else { 1.0 };
    let (lo, hi) = ((span * 1e-3).ln(), (span * 1e3).ln());
    const GRID: usize = 241;
    let sse_at = |lb: f64| linear_part(ks, ys, lb.exp()).2;
    let grid: Vec<f64> = (0..GRID)
        .map(|i| lo + (hi - lo) * i as f64 / (GRID - 1) as f64)
        .collect();
    let best = (0..GRID)
        .min_by(|&i, &j| sse_at(grid[i]).total_cmp(&sse_at(grid[j])))
        .expect("grid is non-empty");

    let (mut a, mut b) = (grid[best.saturating_sub(1)], grid[(best + 1).min(GRID - 1)]);
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - phi * (b - a);
    let mut x2 = a + phi * (b - a);
    let (mut f1, mut f2) = (sse_at(x1), sse_at(x2));
    for _ in 0..200 {
        if (b - a).abs() < 1e-12 {
            break;
        }
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - phi * (b - a);
            f1 = sse_at(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + phi * (b - a);
            f2 = sse_at(x2);
        }
    }
    let mut lb = 0.5 * (a + b);
    if sse_at(grid[best]) < sse_at(lb) {
        lb = grid[best];
    }
    let rate = lb.exp();
    let (amplitude, floor, sse) = linear_part(ks, ys, rate);
    if !sse.is_finite() || !amplitude.is_finite() {
        return Err(Error::FitFailure(format!(
            "exponential fit diverged (rate {rate}, sse {sse})"
        )));
    }
    Ok(ExpFit {
        amplitude,
        rate,
        floor,
        residual: sse.sqrt(),
        at_bound: best == GRID - 1,
    })
}

/// Ordinary least squares of `ln k_opt` on `ln n`. Returns `(slope, intercept)`.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Result<(f64, f64)> {
    if points.len() < 3 {
        return Err(Error::config(format!(
            "a log-log fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if points.iter().any(|&(x, y)| !(x > 0.0 && y > 0.0) || !x.is_finite() || !y.is_finite()) {
        return Err(Error::config("log-log fit needs strictly positive finite data"));
    }
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let (mx, my) = (crate::stats::mean(&lx), crate::stats::mean(&ly));
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::config("log-log fit needs at least two distinct sizes"));
    }
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    Ok((slope, my - slope * mx))
}

/// One network size in a sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub n: usize,
    pub mean_k_opt: f64,
    pub std_k_opt: f64,
    pub mean_eps_opt: f64,
    pub mean_eps_test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingResult {
    pub points: Vec<ScalingPoint>,
    /// `None` with fewer than three sizes.
    pub slope: Option<f64>,
    pub intercept: Option<f64>,
    /// Mean optimal error of the smallest network over that of the largest.
    pub performance_ratio: Option<f64>,
}

impl ScalingResult {
    pub fn from_points(mut points: Vec<ScalingPoint>) -> Self {
        points.sort_by_key(|p| p.n);
        let xy: Vec<(f64, f64)> = points.iter().map(|p| (p.n as f64, p.mean_k_opt)).collect();
        let fit = fit_loglog_slope(&xy).ok();
        let performance_ratio = match (points.first(), points.last()) {
            (Some(s), Some(l)) if points.len() >= 2 => Some(s.mean_eps_opt / l.mean_eps_opt),
            _ => None,
        };
        Self {
            points,
            slope: fit.map(|f| f.0),
            intercept: fit.map(|f| f.1),
            performance_ratio,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn curve(tested: &[f64], accepted: &[f64]) -> LearningCurve {
        LearningCurve {
            eps_initial: f64::INFINITY,
            eps_tested: tested.to_vec(),
            eps_accepted: accepted.to_vec(),
        }
    }

    #[test]
    fn average_two_curves() {
        let m = average_curves(&[&[1.0, 0.5], &[3.0, 1.5]]).unwrap();
        assert_eq!(m.mean, vec![2.0, 1.0]);
        let same = average_curves(&[&[1.0, 0.5], &[1.0, 0.5]]).unwrap();
        assert_eq!(same.std, vec![0.0, 0.0]);
        assert!(average_curves(&[&[1.0]]).is_err());
        assert!(average_curves(&[&[1.0], &[1.0, 2.0]]).is_err());
    }

    #[test]
    fn optimal_epoch_first_attainment() {
        assert_eq!(find_optimal_epoch(&[3.0, 1.0, 1.0, 2.0]), 2);
        assert_eq!(find_optimal_epoch(&[3.0, 2.0, 1.0]), 3);
        assert_eq!(find_optimal_epoch(&[1.0]), 1);
    }

    #[test]
    fn split_signs() {
        // accepted min 0.5 before epoch 2, tested 0.3 → +0.2
        let c = curve(&[0.5, 0.3], &[0.5, 0.3]);
        let d = gradient_split(&c);
        assert_eq!(d.len(), 1);
        assert!((d[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn strictly_improving_has_no_negatives() {
        let t = [1.0, 0.9, 0.8, 0.7];
        let s = ensemble_gradient_split(&[curve(&t, &t)]).unwrap();
        assert!(s.neg_count.iter().all(|&c| c == 0));
        assert!(s.neg_mean.iter().all(|v| v.is_nan()));
    }

    #[test]
    fn exact_exponential_recovered() {
        let ks: Vec<f64> = (1..=500).map(f64::from).collect();
        let ys: Vec<f64> = ks.iter().map(|k| (-k / 100.0).exp() + 0.01).collect();
        let f = fit_exponential(&ks, &ys).unwrap();
        assert!((f.amplitude - 1.0).abs() < 1e-6);
        assert!((f.rate / 100.0 - 1.0).abs() < 1e-6);
        assert!((f.floor / 0.01 - 1.0).abs() < 1e-6);
        assert!(f.is_decaying());
    }

    #[test]
    fn constant_curve_fit() {
        let ks: Vec<f64> = (1..=50).map(f64::from).collect();
        let f = fit_exponential(&ks, &vec![0.2; 50]).unwrap();
        assert!(f.amplitude.abs() < 1e-9);
        assert!((f.floor - 0.2).abs() < 1e-9);
    }

    #[test]
    fn fit_rejects_short_or_nan() {
        assert!(fit_exponential(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).is_err());
        assert!(fit_exponential(&[1.0, 2.0, 3.0, 4.0], &[1.0, f64::NAN, 3.0, 4.0]).is_err());
    }

    #[test]
    fn loglog_exact_cases() {
        let (s, _) = fit_loglog_slope(&[(10.0, 10.0), (100.0, 100.0), (1000.0, 1000.0)]).unwrap();
        assert!((s - 1.0).abs() < 1e-12);
        let pts: Vec<(f64, f64)> = [3.0, 30.0, 70.0, 400.0].iter().map(|&n| (n, 2.0 * n * n)).collect();
        let (s, _) = fit_loglog_slope(&pts).unwrap();
        assert!((s - 2.0).abs() < 1e-12);
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]).is_err());
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 2.0)]).is_err());
    }

    #[test]
    fn single_size_has_no_slope() {
        let r = ScalingResult::from_points(vec![ScalingPoint {
            n: 16,
            mean_k_opt: 10.0,
            std_k_opt: 1.0,
            mean_eps_opt: 0.1,
            mean_eps_test: 0.1,
        }]);
        assert_eq!(r.slope, None);
        assert_eq!(r.points.len(), 1);
    }

    #[test]
    fn split_matches_hand_enumeration() {
        // accepted: 1.0 | 0.8 | 0.8 | 0.5 | 0.5
        // tested:   1.0   0.8   0.9   0.5   0.5
        let c = curve(&[1.0, 0.8, 0.9, 0.5, 0.5], &[1.0, 0.8, 0.8, 0.5, 0.5]);
        let d = gradient_split(&c);
        let want = [0.2, -0.1, 0.3, 0.0];
        for (a, b) in d.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
        let other = curve(&[1.0, 1.1, 0.7, 0.7, 0.6], &[1.0, 1.0, 0.7, 0.7, 0.6]);
        let s = ensemble_gradient_split(&[c, other]).unwrap();
        assert_eq!(s.k, vec![2, 3, 4, 5]);
        assert_eq!(s.pos_count, vec![1, 1, 1, 1]);
        assert_eq!(s.neg_count, vec![1, 1, 1, 1]);
        let close = |a: f64, b: f64| (a - b).abs() < 1e-12;
        assert!(close(s.pos_mean[0], 0.2) && close(s.neg_mean[0], -0.1));
        assert!(close(s.pos_mean[1], 0.3) && close(s.neg_mean[1], -0.1));
        assert!(close(s.pos_mean[2], 0.3) && close(s.neg_mean[2], 0.0));
        assert!(close(s.pos_mean[3], 0.1) && close(s.neg_mean[3], 0.0));
    }

    #[test]
    fn noisy_exponential_rate_within_ten_percent() {
        use rand::SeedableRng;
        use rand_distr::{Distribution, Normal};
        let ks: Vec<f64> = (1..=500).map(f64::from).collect();
        let noise = Normal::new(0.0, 0.01).unwrap();
        for seed in 0..20 {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let ys: Vec<f64> = ks
                .iter()
                .map(|k| ((-k / 100.0).exp() + 0.01) * (1.0 + noise.sample(&mut rng)))
                .collect();
            let f = fit_exponential(&ks, &ys).unwrap();
            assert!((f.rate / 100.0 - 1.0).abs() < 0.1, "seed {seed}: {}", f.rate);
        }
    }

    #[test]
    fn kink_window_means() {
        // deltas for k = 2..=7: +0.1, -0.2, +0.3, -0.1, +0.4, +0.2
        let c = curve(&[1.0, 0.9, 1.1, 0.6, 0.7, 0.2, 0.0], &[1.0, 0.9, 0.9, 0.6, 0.6, 0.2, 0.0]);
        let w = kink_window(&c, 4, 2, |d| (d > 0.0).then_some(d));
        assert!((w.before - 0.3).abs() < 1e-12);
        assert!((w.after - 0.4).abs() < 1e-12);
        assert!(w.rises());
        let empty = kink_window(&c, 7, 2, |d| (d > 0.0).then_some(d));
        assert!(empty.after.is_nan() && !empty.rises());
    }

    proptest::proptest! {
        #[test]
        fn split_partitions_every_epoch(tested in proptest::collection::vec(0.0f64..2.0, 2..80)) {
            let mut accepted = Vec::with_capacity(tested.len());
            let mut m = f64::INFINITY;
            for &t in &tested {
                m = m.min(t);
                accepted.push(m);
            }
            let c = curve(&tested, &accepted);
            let d = gradient_split(&c);
            proptest::prop_assert_eq!(d.len(), tested.len() - 1);
            let s = ensemble_gradient_split(std::slice::from_ref(&c)).unwrap();
            let total: usize = s.pos_count.iter().chain(&s.neg_count).sum();
            proptest::prop_assert_eq!(total, tested.len() - 1);
            for i in 0..d.len() {
                proptest::prop_assert_eq!(s.pos_count[i] + s.neg_count[i], 1);
                if s.pos_count[i] == 1 {
                    proptest::prop_assert!(s.pos_mean[i] > 0.0);
                } else {
                    proptest::prop_assert!(s.neg_mean[i] <= 0.0);
                }
            }
            let k = find_optimal_epoch(&accepted);
            proptest::prop_assert_eq!(accepted[k - 1], c.eps_opt());
        }

        #[test]
        fn slope_ignores_scale(ys in proptest::collection::vec(0.1f64..1e3, 3..8), scale in 1e-3f64..1e3) {
            let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| ((i + 1) as f64 * 7.0, y)).collect();
            let scaled: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, y * scale)).collect();
            let (a, ia) = fit_loglog_slope(&pts).unwrap();
            let (b, ib) = fit_loglog_slope(&scaled).unwrap();
            proptest::prop_assert!((a - b).abs() < 1e-12);
            proptest::prop_assert!((ib - ia - scale.ln()).abs() < 1e-9);
        }
    }
}
