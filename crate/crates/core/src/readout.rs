//! Boolean photodiode readout and the normalized mean-square error.
//!
//! The detector sees `y(n) = |Σ_i m_i (E⁰_i − E_i(n))|²` for a 0/1 mask `m`,
//! with `E_i = sqrt(x_i)`. The proportionality constant is fixed to one;
//! any scale disappears once the trace is normalized.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::reservoir::StateMatrix;
use crate::stats::mean_std;

/// The readout mask. `true` means the mirror sends neuron light to the detector.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BooleanReadout(Vec<bool>);

impl BooleanReadout {
    pub fn from_bits(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn all_on(n: usize) -> Self {
        Self(vec![true; n])
    }

    pub fn all_off(n: usize) -> Self {
        Self(vec![false; n])
    }

    /// Bit `i` of `code` becomes mask entry `i`. Used for enumeration.
    pub fn from_code(n: usize, code: u64) -> Self {
        Self((0..n).map(|i| code >> i & 1 == 1).collect())
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    /// Number of active mirrors.
    pub fn weight(&self) -> usize {
        self.0.iter().filter(|&&b| b).count()
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

/// Raw photodiode trace for every retained state row.
pub fn readout_output(states: &StateMatrix, e0: &[f64], mask: &BooleanReadout) -> Result<Vec<f64>> {
    if mask.len() != states.n || e0.len() != states.n {
        return Err(Error::config(format!(
            "mask ({}) and E0 ({}) must match the {} state columns",
            mask.len(),
            e0.len(),
            states.n
        )));
    }
    Ok(states
        .iter_rows()
        .map(|x| {
            let s: f64 = x
                .iter()
                .zip(e0)
                .zip(mask.bits())
                .filter(|(_, &m)| m)
                .map(|((xi, e), _)| e - xi.sqrt())
                .sum();
            s * s
        })
        .collect())
}

/// Per-neuron detector contributions `E⁰_i − E_i(t)`, kept so that many
/// masks can be scored against one set of states.
#[derive(Debug, Clone)]
pub struct ReadoutFeatures {
    pub n: usize,
    data: Vec<f64>,
}

impl ReadoutFeatures {
    pub fn new(states: &StateMatrix, e0: &[f64]) -> Result<Self> {
        if e0.len() != states.n {
            return Err(Error::config("E0 length must match the state columns"));
        }
        let data = states
            .iter_rows()
            .flat_map(|x| x.iter().zip(e0).map(|(xi, e)| e - xi.sqrt()))
            .collect();
        Ok(Self { n: states.n, data })
    }

    pub fn rows(&self) -> usize {
        self.data.len() / self.n.max(1)
    }

    /// Pre-square field sums `Σ_i m_i f_i(t)` per row.
    pub fn field_sums(&self, mask: &BooleanReadout) -> Vec<f64> {
        self.data
            .chunks_exact(self.n)
            .map(|row| row.iter().zip(mask.bits()).filter(|(_, &m)| m).map(|(f, _)| f).sum())
            .collect()
    }

    /// Adds `sign·f_i(t)` to every row's field sum, i.e. switches neuron `i`
    /// on (`sign = 1`) or off (`sign = −1`).
    pub fn toggle(&self, sums: &mut [f64], i: usize, sign: f64) {
        for (s, row) in sums.iter_mut().zip(self.data.chunks_exact(self.n)) {
            *s += sign * row[i];
        }
    }
}

/// Squares field sums into a raw photodiode trace.
pub fn intensity(sums: &[f64]) -> Vec<f64> {
    sums.iter().map(|s| s * s).collect()
}

/// Adds Gaussian detector noise with std `sigma_rel · max(y)` in place.
pub fn add_detector_noise<R: Rng + ?Sized>(raw: &mut [f64], sigma_rel: f64, rng: &mut R) {
    if sigma_rel <= 0.0 {
        return;
    }
    let peak = raw.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    for v in raw.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *v += z * sigma_rel * peak;
    }
}

/// A raw trace together with its normalized form and the statistics used.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputTrace {
    pub raw: Vec<f64>,
    pub normalized: Vec<f64>,
    pub norm_mean: f64,
    pub norm_std: f64,
}

impl OutputTrace {
    /// Normalizes another raw trace with this trace's statistics.
    pub fn apply_to(&self, raw: Vec<f64>) -> OutputTrace {
        let normalized = raw.iter().map(|v| (v - self.norm_mean) / self.norm_std).collect();
        OutputTrace {
            raw,
            normalized,
            norm_mean: self.norm_mean,
            norm_std: self.norm_std,
        }
    }
}

pub fn normalize_output(raw: Vec<f64>) -> Result<OutputTrace> {
    let (mean, std) = mean_std(&raw);
    // Relative threshold: a trace that is constant up to rounding is still constant.
    if raw.is_empty() || !(std > 1e-12 * mean.abs()) || std == 0.0 || !std.is_finite() {
        return Err(Error::DegenerateOutput(format!(
            "readout trace of length {} has std {std}",
            raw.len()
        )));
    }
    let normalized = raw.iter().map(|v| (v - mean) / std).collect();
    Ok(OutputTrace {
        raw,
        normalized,
        norm_mean: mean,
        norm_std: std,
    })
}

/// `(1/T) Σ (target − y)²` over two normalized traces.
pub fn nmse(y_norm: &[f64], target_norm: &[f64]) -> Result<f64> {
    if y_norm.len() != target_norm.len() || y_norm.is_empty() {
        return Err(Error::config(format!(
            "nmse needs equal non-empty lengths, got {} and {}",
            y_norm.len(),
            target_norm.len()
        )));
    }
    let sum: f64 = y_norm.iter().zip(target_norm).map(|(y, t)| (t - y) * (t - y)).sum();
    Ok(sum / y_norm.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn states(rows: &[&[f64]]) -> StateMatrix {
        StateMatrix {
            n: rows[0].len(),
            data: rows.iter().flat_map(|r| r.iter().copied()).collect(),
        }
    }

    #[test]
    fn empty_mask_gives_zero() {
        let s = states(&[&[0.2, 0.3], &[0.5, 0.1]]);
        let y = readout_output(&s, &[1.0, 1.0], &BooleanReadout::all_off(2)).unwrap();
        assert_eq!(y, vec![0.0, 0.0]);
    }

    #[test]
    fn dark_fringe() {
        let s = states(&[&[1.0, 0.3]]);
        let mask = BooleanReadout::from_bits(vec![true, false]);
        assert_eq!(readout_output(&s, &[1.0, 1.0], &mask).unwrap(), vec![0.0]);
    }

    #[test]
    fn dimension_mismatch() {
        let s = states(&[&[1.0, 0.3]]);
        assert!(readout_output(&s, &[1.0, 1.0], &BooleanReadout::all_on(3)).is_err());
    }

    #[test]
    fn normalize_two_point_trace() {
        let t = normalize_output(vec![2.0, 4.0]).unwrap();
        assert_eq!(t.normalized, vec![-1.0, 1.0]);
        assert_eq!((t.norm_mean, t.norm_std), (3.0, 1.0));
        let applied = t.apply_to(vec![5.0]);
        assert_eq!(applied.normalized, vec![2.0]);
    }

    #[test]
    fn constant_trace_is_degenerate() {
        assert!(matches!(normalize_output(vec![0.0; 5]), Err(Error::DegenerateOutput(_))));
        assert!(matches!(normalize_output(vec![2.5; 5]), Err(Error::DegenerateOutput(_))));
    }

    #[test]
    fn nmse_cases() {
        let t = [-1.0, 1.0, -1.0, 1.0];
        assert_eq!(nmse(&t, &t).unwrap(), 0.0);
        let neg: Vec<f64> = t.iter().map(|v| -v).collect();
        assert_eq!(nmse(&neg, &t).unwrap(), 4.0);
        assert!(nmse(&t[..3], &t).is_err());
    }

    #[test]
    fn incremental_toggle_matches_full_sum() {
        let s = states(&[&[0.2, 0.3, 0.9], &[0.5, 0.1, 0.0]]);
        let f = ReadoutFeatures::new(&s, &[1.0, 1.0, 1.0]).unwrap();
        let mut mask = BooleanReadout::from_bits(vec![true, false, true]);
        let mut sums = f.field_sums(&mask);
        f.toggle(&mut sums, 1, 1.0);
        mask.flip(1);
        let direct = readout_output(&s, &[1.0, 1.0, 1.0], &mask).unwrap();
        for (a, b) in intensity(&sums).iter().zip(&direct) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    fn oracle(x: &[f64], e0: &[f64], m: &[bool]) -> f64 {
        let mut s = 0.0;
        for i in 0..x.len() {
            if m[i] {
                s += e0[i] - x[i].sqrt();
            }
        }
        s.abs().powi(2)
    }

    #[test]
    fn three_neuron_oracle() {
        let s = states(&[&[0.25, 0.64, 0.04], &[0.81, 0.0, 1.0]]);
        let e0 = [1.0, 0.9, 1.1];
        let m = BooleanReadout::from_bits(vec![true, false, true]);
        let y = readout_output(&s, &e0, &m).unwrap();
        // (1 − 0.5 + 1.1 − 0.2)² and (1 − 0.9 + 1.1 − 1)²
        assert!((y[0] - 1.4f64.powi(2)).abs() < 1e-12);
        assert!((y[1] - 0.2f64.powi(2)).abs() < 1e-12);
    }

    #[test]
    fn every_mask_matches_oracle_up_to_eight() {
        let mut rng = crate::reservoir::seeded(4, 0);
        for n in 1..=8 {
            let rows: Vec<Vec<f64>> = (0..5).map(|_| (0..n).map(|_| rng.gen_range(0.0..1.0)).collect()).collect();
            let s = StateMatrix { n, data: rows.concat() };
            let e0: Vec<f64> = (0..n).map(|_| rng.gen_range(0.5..1.5)).collect();
            for code in 0..1u64 << n {
                let m = BooleanReadout::from_code(n, code);
                let y = readout_output(&s, &e0, &m).unwrap();
                for (t, row) in rows.iter().enumerate() {
                    assert!((y[t] - oracle(row, &e0, m.bits())).abs() < 1e-12);
                    assert!(y[t] >= 0.0);
                }
            }
        }
    }

    #[test]
    fn independent_sequences_score_two() {
        let mut rng = crate::reservoir::seeded(8, 0);
        let mut draw = || -> Vec<f64> {
            let v: Vec<f64> = (0..10_000).map(|_| rng.sample(StandardNormal)).collect();
            normalize_output(v.iter().map(|x| x + 10.0).collect()).unwrap().normalized
        };
        let (a, b) = (draw(), draw());
        let e = nmse(&a, &b).unwrap();
        assert!((e - 2.0).abs() < 0.1, "{e}");
    }

    proptest::proptest! {
        #[test]
        fn normalized_trace_has_unit_moments(raw in proptest::collection::vec(0.0f64..100.0, 3..200)) {
            if let Ok(t) = normalize_output(raw) {
                let n = t.normalized.len() as f64;
                let m = t.normalized.iter().sum::<f64>() / n;
                let v = t.normalized.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
                proptest::prop_assert!(m.abs() < 1e-12 && (v.sqrt() - 1.0).abs() < 1e-12);
            }
        }

        #[test]
        fn nmse_zero_only_when_equal(a in proptest::collection::vec(-3.0f64..3.0, 1..50), i in 0usize..50, d in 1e-6f64..1.0) {
            proptest::prop_assert_eq!(nmse(&a, &a).unwrap(), 0.0);
            let mut b = a.clone();
            let k = i % b.len();
            b[k] += d;
            proptest::prop_assert!(nmse(&a, &b).unwrap() > 0.0);
        }
    }
}
