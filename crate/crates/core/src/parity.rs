//! Collective measurements on a split ensemble, binned by parity.
//!
//! Each party measures its collective spin along a direction. The outcome is
//! recorded as the number `r` of atoms found in the lower eigenstate, i.e.
//! `r = n/2 - k` for eigenvalue `k` on `n` local atoms, and binned to
//! `(-1)^r`. An empty register always reads `+1`.

use std::f64::consts::{FRAC_PI_2, PI, TAU};

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optimize::{stream_id, substream, NelderMead, SearchConfig};
use crate::spin::{Direction, RotationCache};
use crate::squeeze::{one_axis_twisted, split_state, SplitState};

/// Largest CHSH value allowed by quantum mechanics, `2 sqrt(2)`.
pub const TSIRELSON: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Two settings per party.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChshSettings {
    pub alice: [Direction; 2],
    pub bob: [Direction; 2],
}

impl ChshSettings {
    /// Angles ordered `(theta, phi)` for `a1, a2, b1, b2`; any reals are accepted.
    pub fn from_angles(x: &[f64]) -> Result<Self> {
        if x.len() != 8 {
            return Err(Error::DimensionMismatch(format!("expected 8 angles, got {}", x.len())));
        }
        let d = |k: usize| Direction::from_angles(x[2 * k], x[2 * k + 1]);
        Ok(Self { alice: [d(0), d(1)], bob: [d(2), d(3)] })
    }

    pub fn to_angles(&self) -> [f64; 8] {
        let mut out = [0.0; 8];
        for (k, d) in self.alice.iter().chain(&self.bob).enumerate() {
            out[2 * k] = d.theta();
            out[2 * k + 1] = d.phi();
        }
        out
    }

    pub fn uniform(d: Direction) -> Self {
        Self { alice: [d, d], bob: [d, d] }
    }
}

/// Probabilities of the excitation counts `(r_A, r_B)`, one matrix per number
/// of atoms on Alice's side.
#[derive(Debug, Clone, PartialEq)]
pub struct JointDistribution {
    atoms: usize,
    alice: Direction,
    bob: Direction,
    blocks: Vec<DMatrix<f64>>,
}

impl JointDistribution {
    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn directions(&self) -> (Direction, Direction) {
        (self.alice, self.bob)
    }

    /// Block `n` is `(n + 1) x (N - n + 1)`, indexed by `(r_A, r_B)`.
    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// `P(n_A = n, r_A, r_B)`; zero outside the support.
    pub fn probability(&self, n: usize, r_a: usize, r_b: usize) -> f64 {
        match self.blocks.get(n) {
            Some(b) if r_a < b.nrows() && r_b < b.ncols() => b[(r_a, r_b)],
            _ => 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.blocks.iter().map(|b| b.sum()).sum()
    }
}

fn parity(r: usize) -> f64 {
    if r % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// `E = sum P(n, r_A, r_B) (-1)^(r_A + r_B)`.
pub fn parity_correlator(jd: &JointDistribution) -> f64 {
    jd.blocks
        .iter()
        .map(signed_sum)
        .sum()
}

fn signed_sum(p: &DMatrix<f64>) -> f64 {
    let mut acc = 0.0;
    for c in 0..p.ncols() {
        for r in 0..p.nrows() {
            acc += parity(r + c) * p[(r, c)];
        }
    }
    acc
}

/// Split state held as real and imaginary parts, plus the rotation bases
/// for every local register size.
#[derive(Debug, Clone)]
pub struct ParityEvaluator {
    atoms: usize,
    re: Vec<DMatrix<f64>>,
    im: Vec<DMatrix<f64>>,
    cache: RotationCache,
}

/// `d(theta)` for every register size, with the azimuthal phases `exp(i phi S_z)`.
struct LocalRotation {
    small: Vec<DMatrix<f64>>,
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl LocalRotation {
    fn new(cache: &RotationCache, d: Direction) -> Self {
        let n = cache.n_max();
        // Indexed by t = 2 s + n_max, so one table serves every register size.
        let (sin, cos) = (0..=2 * n).map(|t| (d.phi() * (t as f64 - n as f64) / 2.0).sin_cos()).unzip();
        Self { small: cache.ladder(d.theta()), cos, sin }
    }

    /// Phase `exp(i phi s)` for `s = n/2 - r`, as (cos, sin).
    fn phase(&self, n: usize, r: usize) -> (f64, f64) {
        let t = n + self.cos.len() / 2 - 2 * r;
        (self.cos[t], self.sin[t])
    }
}

impl ParityEvaluator {
    pub fn new(state: &SplitState) -> Self {
        let atoms = state.atoms();
        let re = state.blocks().iter().map(|b| b.map(|c| c.re)).collect();
        let im = state.blocks().iter().map(|b| b.map(|c| c.im)).collect();
        Self { atoms, re, im, cache: RotationCache::new(atoms) }
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    /// Rotated amplitudes `(D_A^dagger psi conj(D_B))` of block `n`, as real and imaginary parts.
    fn rotate_alice(&self, rot: &LocalRotation, n: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let (re, im) = (&self.re[n], &self.im[n]);
        let (zr, zi) = phased_rows(re, im, |r| rot.phase(n, r));
        (rot.small[n].tr_mul(&zr), rot.small[n].tr_mul(&zi))
    }

    fn probabilities(&self, xa: &(DMatrix<f64>, DMatrix<f64>), rot: &LocalRotation, n: usize) -> DMatrix<f64> {
        let nb = self.atoms - n;
        let (wr, wi) = phased_cols(&xa.0, &xa.1, |r| rot.phase(nb, r));
        let yr = wr * &rot.small[nb];
        let yi = wi * &rot.small[nb];
        yr.zip_map(&yi, |a, b| a * a + b * b)
    }

    pub fn joint_distribution(&self, alice: Direction, bob: Direction) -> JointDistribution {
        let (ra, rb) = (LocalRotation::new(&self.cache, alice), LocalRotation::new(&self.cache, bob));
        let blocks = (0..=self.atoms)
            .map(|n| {
                let xa = self.rotate_alice(&ra, n);
                self.probabilities(&xa, &rb, n)
            })
            .collect();
        JointDistribution { atoms: self.atoms, alice, bob, blocks }
    }

    /// `E(a_i, b_j)` for both settings of each party.
    pub fn correlators(&self, s: &ChshSettings) -> [[f64; 2]; 2] {
        let ra = s.alice.map(|d| LocalRotation::new(&self.cache, d));
        let rb = s.bob.map(|d| LocalRotation::new(&self.cache, d));
        let mut e = [[0.0; 2]; 2];
        for n in 0..=self.atoms {
            for (i, rot_a) in ra.iter().enumerate() {
                let xa = self.rotate_alice(rot_a, n);
                for (j, rot_b) in rb.iter().enumerate() {
                    e[i][j] += signed_sum(&self.probabilities(&xa, rot_b, n));
                }
            }
        }
        e
    }

    /// `E(a1,b1) + E(a2,b1) + E(a1,b2) - E(a2,b2)`.
    pub fn chsh(&self, s: &ChshSettings) -> f64 {
        let e = self.correlators(s);
        e[0][0] + e[1][0] + e[0][1] - e[1][1]
    }
}

fn phased_rows(re: &DMatrix<f64>, im: &DMatrix<f64>, phase: impl Fn(usize) -> (f64, f64)) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut zr = re.clone();
    let mut zi = im.clone();
    for r in 0..re.nrows() {
        let (c, s) = phase(r);
        for col in 0..re.ncols() {
            let (a, b) = (re[(r, col)], im[(r, col)]);
            zr[(r, col)] = c * a - s * b;
            zi[(r, col)] = s * a + c * b;
        }
    }
    (zr, zi)
}

fn phased_cols(re: &DMatrix<f64>, im: &DMatrix<f64>, phase: impl Fn(usize) -> (f64, f64)) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut zr = re.clone();
    let mut zi = im.clone();
    for col in 0..re.ncols() {
        let (c, s) = phase(col);
        for r in 0..re.nrows() {
            let (a, b) = (re[(r, col)], im[(r, col)]);
            zr[(r, col)] = c * a - s * b;
            zi[(r, col)] = s * a + c * b;
        }
    }
    (zr, zi)
}

/// Outcome distribution of one pair of collective measurements.
pub fn joint_distribution(state: &SplitState, alice: Direction, bob: Direction) -> JointDistribution {
    ParityEvaluator::new(state).joint_distribution(alice, bob)
}

/// CHSH combination of parity correlators.
pub fn chsh_value(state: &SplitState, settings: &ChshSettings) -> f64 {
    ParityEvaluator::new(state).chsh(settings)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChshResult {
    pub atoms: usize,
    pub chi_t: f64,
    pub value: f64,
    pub settings: ChshSettings,
    /// Seed the restarts were drawn from.
    pub seed: u64,
}

/// Starting point for restart `r`. Restarts cycle through three families:
/// uniform directions, directions near `z` within a few multiples of `1/N`
/// (where large twisting puts its optimum), and directions near `x` within
/// about `1/sqrt(N)` (where weak twisting puts it). Returns the angles and
/// the initial simplex step.
fn restart_point(atoms: usize, seed: u64, stream: u64, r: usize) -> (Vec<f64>, f64) {
    let mut rng = substream(seed, stream);
    let n = atoms.max(1) as f64;
    match r % 3 {
        0 => {
            let x = (0..4).flat_map(|_| [rng.gen_range(-1.0_f64..=1.0).acos(), rng.gen_range(0.0..TAU)]).collect();
            (x, 0.6)
        }
        1 => {
            let cap = (1.5 * PI / n).min(PI);
            let x = (0..4).flat_map(|_| [rng.gen_range(0.0..=cap), rng.gen_range(0.0..TAU)]).collect();
            (x, 0.5 * cap)
        }
        _ => {
            let s = (1.0 / n.sqrt()).min(1.0);
            let x = (0..4).flat_map(|_| [FRAC_PI_2 + rng.gen_range(-s..=s), rng.gen_range(-s..=s)]).collect();
            (x, 0.5 * s)
        }
    }
}

fn optimize_with(
    eval: &ParityEvaluator,
    chi_t: f64,
    cfg: &SearchConfig,
    index: u64,
    warm: &[ChshSettings],
) -> Result<ChshResult> {
    cfg.validate()?;
    let atoms = eval.atoms();
    let nm = NelderMead::new(cfg.max_iterations, cfg.tolerance);
    let objective = |x: &[f64]| match ChshSettings::from_angles(x) {
        Ok(s) => eval.chsh(&s),
        Err(_) => f64::NAN,
    };
    let warm_step = 0.1 / (atoms as f64).sqrt();
    let starts: Vec<(Vec<f64>, f64)> = warm
        .iter()
        .map(|s| (s.to_angles().to_vec(), warm_step))
        .chain((0..cfg.restarts).map(|r| restart_point(atoms, cfg.seed, stream_id(index, r as u64), r)))
        .collect();
    let runs: Vec<(f64, Vec<f64>)> = starts
        .par_iter()
        .map(|(x0, step)| {
            let m = nm.maximize(objective, x0, *step);
            (m.value, m.x)
        })
        .collect();
    let (_, best) = runs
        .into_iter()
        .fold((f64::NEG_INFINITY, Vec::new()), |acc, run| if run.0 > acc.0 { run } else { acc });
    let settings = ChshSettings::from_angles(&best)?;
    let value = eval.chsh(&settings);
    Ok(ChshResult { atoms, chi_t, value, settings, seed: cfg.seed })
}

fn evaluator(atoms: usize, chi_t: f64) -> Result<ParityEvaluator> {
    let state = split_state(&one_axis_twisted(atoms, chi_t)?, 0.5)?;
    Ok(ParityEvaluator::new(&state))
}

/// Best CHSH value over all eight angles for the balanced split of the
/// twisted state with `atoms` atoms.
pub fn optimize_chsh(atoms: usize, chi_t: f64, cfg: &SearchConfig) -> Result<ChshResult> {
    optimize_with(&evaluator(atoms, chi_t)?, chi_t, cfg, 0, &[])
}

/// Like [`optimize_chsh`], additionally starting from the given settings.
pub fn optimize_chsh_from(atoms: usize, chi_t: f64, cfg: &SearchConfig, warm: &[ChshSettings]) -> Result<ChshResult> {
    optimize_with(&evaluator(atoms, chi_t)?, chi_t, cfg, 0, warm)
}

/// One optimization per grid point, in the given order. Each point also
/// starts from the previous point's optimum. Restarts of point `k` use
/// streams `(k, r)` of `cfg.seed`.
pub fn sweep_chi(atoms: usize, grid: &[f64], cfg: &SearchConfig) -> Result<Vec<ChshResult>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("the chi_t grid is empty".into()));
    }
    let mut out: Vec<ChshResult> = Vec::with_capacity(grid.len());
    for (k, &chi) in grid.iter().enumerate() {
        let warm: Vec<ChshSettings> = out.last().map(|p| p.settings).into_iter().collect();
        out.push(optimize_with(&evaluator(atoms, chi)?, chi, cfg, k as u64, &warm)?);
    }
    Ok(out)
}

/// One optimization per atom number, in the given order, each also starting
/// from the previous optimum.
pub fn sweep_n(chi_t: f64, atoms: &[usize], cfg: &SearchConfig) -> Result<Vec<ChshResult>> {
    if atoms.is_empty() {
        return Err(Error::InvalidParameter("the atom-number list is empty".into()));
    }
    let mut out: Vec<ChshResult> = Vec::with_capacity(atoms.len());
    for (k, &n) in atoms.iter().enumerate() {
        let warm: Vec<ChshSettings> = out.last().map(|p| p.settings).into_iter().collect();
        out.push(optimize_with(&evaluator(n, chi_t)?, chi_t, cfg, k as u64, &warm)?);
    }
    Ok(out)
}
