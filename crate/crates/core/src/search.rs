//! Quantum bounds by optimizing measurement directions, and randomized scans
//! comparing them with local bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bell::{quantum_value, BellInequality, MeasurementSettings, SectorOperators, WvDecomposition};
use crate::error::{Error, Result};
use crate::local::local_bound;
pub use crate::optimize::SearchConfig;
use crate::optimize::{stream_id, substream, NelderMead};

/// Gaps at or below this value count as "no violation".
pub const VIOLATION_THRESHOLD: f64 = 1e-6;

/// Allowed increase of the optimized value from `N` to a larger `N`.
pub const MONOTONICITY_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizedSettings {
    pub value: f64,
    pub settings: MeasurementSettings,
}

fn unit(theta: f64, phi: f64) -> [f64; 3] {
    let (st, ct) = theta.sin_cos();
    let (sp, cp) = phi.sin_cos();
    [st * cp, st * sp, ct]
}

fn wv_from_angles(ineq: &BellInequality, angles: &[f64]) -> WvDecomposition {
    let m = ineq.settings();
    let alpha: Vec<[f64; 3]> = (0..m).map(|i| unit(angles[2 * i], angles[2 * i + 1])).collect();
    let beta: Vec<[f64; 3]> = (0..m).map(|j| unit(angles[2 * (m + j)], angles[2 * (m + j) + 1])).collect();
    let mut wv = WvDecomposition::zero();
    for i in 0..m {
        for j in 0..m {
            let c = ineq.w(i, j);
            for x in 0..3 {
                let ca = c * alpha[i][x];
                for y in 0..3 {
                    wv.w[x][y] += ca * beta[j][y];
                }
            }
        }
        for x in 0..3 {
            wv.va[x] += ineq.alice_marginals()[i] * alpha[i][x];
            wv.vb[x] += ineq.bob_marginals()[i] * beta[i][x];
        }
    }
    wv
}

fn random_angles<R: Rng>(rng: &mut R, count: usize) -> Vec<f64> {
    (0..count)
        .flat_map(|_| {
            let theta = rng.gen_range(-1.0_f64..=1.0).acos();
            let phi = rng.gen_range(0.0..std::f64::consts::TAU);
            [theta, phi]
        })
        .collect::<Vec<_>>()
}

fn search(
    ineq: &BellInequality,
    ops: &SectorOperators,
    cfg: &SearchConfig,
    warm: &[Vec<f64>],
) -> Result<OptimizedSettings> {
    cfg.validate()?;
    let m = ineq.settings();
    let nm = NelderMead::new(cfg.max_iterations, cfg.tolerance);
    let objective = |x: &[f64]| ops.quantum_value(&wv_from_angles(ineq, x));

    let starts: Vec<(Vec<f64>, f64)> = warm
        .iter()
        .map(|x| (x.clone(), 0.2))
        .chain((0..cfg.restarts).map(|r| {
            let mut rng = substream(cfg.seed, r as u64);
            (random_angles(&mut rng, 2 * m), 0.6)
        }))
        .collect();

    let runs: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|(x0, step)| {
            let r = nm.maximize(objective, x0, *step);
            (r.value, r.x)
        })
        .collect();
    let (_, best) = runs
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, run| if run.0 > acc.0 { run } else { acc });

    let settings = MeasurementSettings::from_angles(&best)?;
    // Report the value at the canonical (wrapped) directions.
    let value = quantum_value(ineq, &settings, ops.spins())?;
    Ok(OptimizedSettings { value, settings })
}

/// Best quantum value found over all `4m` measurement angles.
pub fn optimize_settings(ineq: &BellInequality, spins: u32, cfg: &SearchConfig) -> Result<OptimizedSettings> {
    let ops = SectorOperators::new(spins)?;
    search(ineq, &ops, cfg, &[])
}

/// Like [`optimize_settings`], additionally starting from the given settings.
pub fn optimize_settings_from(
    ineq: &BellInequality,
    spins: u32,
    cfg: &SearchConfig,
    warm: &[MeasurementSettings],
) -> Result<OptimizedSettings> {
    let ops = SectorOperators::new(spins)?;
    let warm: Vec<Vec<f64>> = warm.iter().map(MeasurementSettings::to_angles).collect();
    search(ineq, &ops, cfg, &warm)
}

/// Random inequality with `4 w_ij`, `2 va_i` and `2 vb_j` uniform in `[-1, 1]`.
pub fn random_inequality(m: usize, seed: u64) -> Result<BellInequality> {
    let mut rng = substream(seed, 0);
    let w = (0..m * m).map(|_| rng.gen_range(-0.25..=0.25)).collect();
    let va = (0..m).map(|_| rng.gen_range(-0.5..=0.5)).collect();
    let vb = (0..m).map(|_| rng.gen_range(-0.5..=0.5)).collect();
    BellInequality::new(m, w, va, vb)
}

/// SplitMix64 finalizer, used to derive per-item seeds.
pub fn mix_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub index: usize,
    pub seed: u64,
    pub local: f64,
    pub quantum: f64,
    pub gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanBest {
    pub index: usize,
    pub gap: f64,
    pub inequality: BellInequality,
    pub settings: MeasurementSettings,
}

/// Counts of gaps in ten equal-width bins spanning `[lower, upper]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapHistogram {
    pub lower: f64,
    pub upper: f64,
    pub counts: [u64; 10],
}

impl GapHistogram {
    pub fn from_gaps(gaps: &[f64]) -> Option<Self> {
        let lower = gaps.iter().copied().fold(f64::INFINITY, f64::min);
        let upper = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if gaps.is_empty() {
            return None;
        }
        let mut counts = [0u64; 10];
        let width = (upper - lower) / 10.0;
        for &g in gaps {
            let bin = if width > 0.0 { (((g - lower) / width) as usize).min(9) } else { 0 };
            counts[bin] += 1;
        }
        Some(Self { lower, upper, counts })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub m: usize,
    pub spins: u32,
    pub count: usize,
    pub config: SearchConfig,
    /// `None` when nothing was tested.
    pub best: Option<ScanBest>,
    pub histogram: Option<GapHistogram>,
    pub rows: Vec<ScanRow>,
}

impl ScanReport {
    pub fn best_gap(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.gap)
    }

    pub fn violations(&self) -> usize {
        self.rows.iter().filter(|r| r.gap > VIOLATION_THRESHOLD).count()
    }
}

/// Samples `count` random inequalities and compares local and optimized
/// quantum values at `spins` spins per party.
pub fn scan_random(m: usize, count: usize, spins: u32, cfg: &SearchConfig) -> Result<ScanReport> {
    cfg.validate()?;
    let ops = SectorOperators::new(spins)?;
    let results: Vec<Result<(ScanRow, BellInequality, MeasurementSettings)>> = (0..count)
        .into_par_iter()
        .map(|index| {
            let seed = mix_seed(cfg.seed, index as u64);
            let ineq = random_inequality(m, seed)?;
            let local = local_bound(&ineq)?.value;
            let search_cfg = cfg.with_seed(mix_seed(seed, 1));
            let opt = search(&ineq, &ops, &search_cfg, &[])?;
            let row = ScanRow { index, seed, local, quantum: opt.value, gap: opt.value - local };
            Ok((row, ineq.with_cached_bound(local), opt.settings))
        })
        .collect();

    let mut rows = Vec::with_capacity(count);
    let mut best: Option<ScanBest> = None;
    for item in results {
        let (row, inequality, settings) = item?;
        if best.as_ref().is_none_or(|b| row.gap > b.gap) {
            best = Some(ScanBest { index: row.index, gap: row.gap, inequality, settings });
        }
        rows.push(row);
    }
    let gaps: Vec<f64> = rows.iter().map(|r| r.gap).collect();
    Ok(ScanReport {
        m,
        spins,
        count,
        config: *cfg,
        best,
        histogram: GapHistogram::from_gaps(&gaps),
        rows,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityPoint {
    pub spins: u32,
    pub value: f64,
    pub settings: MeasurementSettings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub points: Vec<MonotonicityPoint>,
    /// Index pairs `(k, k + 1)` where the value grew by more than the tolerance.
    pub increases: Vec<(usize, usize)>,
    pub tolerance: f64,
}

impl MonotonicityReport {
    pub fn values(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.value).collect()
    }

    pub fn is_non_increasing(&self) -> bool {
        self.increases.is_empty()
    }
}

/// Optimized quantum value for each spin number in `spin_list` (ascending).
///
/// Settings found at any `N` are re-evaluated at every other `N`, and each
/// point keeps the best value seen, so every reported value is attained.
pub fn monotonicity_check(
    ineq: &BellInequality,
    spin_list: &[u32],
    cfg: &SearchConfig,
) -> Result<MonotonicityReport> {
    if spin_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParameter(format!(
            "spin numbers must be strictly ascending, got {spin_list:?}"
        )));
    }
    let mut points = Vec::with_capacity(spin_list.len());
    for (k, &spins) in spin_list.iter().enumerate() {
        let ops = SectorOperators::new(spins)?;
        let warm: Vec<Vec<f64>> = points
            .iter()
            .map(|p: &MonotonicityPoint| p.settings.to_angles())
            .collect();
        let opt = search(ineq, &ops, &cfg.with_seed(stream_id(cfg.seed, k as u64)), &warm)?;
        points.push(MonotonicityPoint { spins, value: opt.value, settings: opt.settings });
    }
    let found: Vec<MeasurementSettings> = points.iter().map(|p| p.settings.clone()).collect();
    for p in points.iter_mut() {
        for s in &found {
            let v = quantum_value(ineq, s, p.spins)?;
            if v > p.value {
                p.value = v;
                p.settings = s.clone();
            }
        }
    }
    let increases = points
        .windows(2)
        .enumerate()
        .filter(|(_, w)| w[1].value > w[0].value + MONOTONICITY_TOLERANCE)
        .map(|(k, _)| (k, k + 1))
        .collect();
    Ok(MonotonicityReport { points, increases, tolerance: MONOTONICITY_TOLERANCE })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    fn quick() -> SearchConfig {
        SearchConfig { restarts: 6, max_iterations: 6000, tolerance: 1e-12, seed: 11 }
    }

    #[test]
    fn chsh_one_spin_reaches_tsirelson() {
        let r = optimize_settings(&BellInequality::chsh(), 1, &quick()).unwrap();
        assert_abs_diff_eq!(r.value, SQRT_2 / 2.0, epsilon = 1e-5);
    }

    #[test]
    fn chsh_two_spins_stays_below() {
        let r = optimize_settings(&BellInequality::chsh(), 2, &quick()).unwrap();
        assert!(r.value <= SQRT_2 / 2.0 + 1e-9);
        assert!(r.value - 0.5 <= VIOLATION_THRESHOLD, "gap {}", r.value - 0.5);
    }

    #[test]
    fn marginals_only_have_no_quantum_advantage() {
        let mut va = vec![0.0; 3];
        let mut vb = vec![0.0; 3];
        va[0] = 1.0;
        vb[0] = 1.0;
        let ineq = BellInequality::new(3, vec![0.0; 9], va, vb).unwrap();
        let local = local_bound(&ineq).unwrap().value;
        let r = optimize_settings(&ineq, 2, &quick()).unwrap();
        assert_abs_diff_eq!(local, 1.0);
        assert_abs_diff_eq!(r.value, local, epsilon = 1e-9);
    }

    #[test]
    fn returned_value_is_attained() {
        let ineq = random_inequality(3, 5).unwrap();
        let r = optimize_settings(&ineq, 2, &quick()).unwrap();
        let again = quantum_value(&ineq, &r.settings, 2).unwrap();
        assert_abs_diff_eq!(r.value, again, epsilon = 1e-12);
    }

    #[test]
    fn random_inequality_ranges_and_determinism() {
        let a = random_inequality(4, 99).unwrap();
        assert_eq!(a, random_inequality(4, 99).unwrap());
        assert_ne!(a, random_inequality(4, 100).unwrap());
        assert!(a.correlator_coefficients().iter().all(|w| w.abs() <= 0.25));
        assert!(a.alice_marginals().iter().chain(a.bob_marginals()).all(|v| v.abs() <= 0.5));
    }

    #[test]
    fn empty_scan() {
        let r = scan_random(5, 0, 2, &quick()).unwrap();
        assert_eq!(r.count, 0);
        assert!(r.best_gap().is_none());
        assert!(r.histogram.is_none());
        assert!(r.rows.is_empty());
    }

    #[test]
    fn zero_inequality_monotonicity() {
        let r = monotonicity_check(&BellInequality::zero(2).unwrap(), &[1, 2, 3], &quick()).unwrap();
        assert_eq!(r.values(), vec![0.0, 0.0, 0.0]);
        assert!(r.is_non_increasing());
        assert!(monotonicity_check(&BellInequality::chsh(), &[2, 1], &quick()).is_err());
    }

    #[test]
    fn histogram_bins() {
        let h = GapHistogram::from_gaps(&[0.0, 0.05, 0.5, 1.0]).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 4);
        assert_eq!(h.counts[0], 2);
        assert_eq!(h.counts[9], 1);
        let flat = GapHistogram::from_gaps(&[-0.1, -0.1]).unwrap();
        assert_eq!(flat.counts[0], 2);
    }
}
