//! One-axis-twisted ensembles and their split between two parties.
//!
//! A symmetric state of `N` two-level atoms is stored by `m`, the number of
//! atoms in level 1, so `J_z = m - N/2`. After a beam splitter each atom sits
//! with Alice or Bob; [`SplitState`] keeps one amplitude matrix per number of
//! atoms on Alice's side.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::CMatrix;

/// Largest atom number accepted by the constructors.
pub const MAX_ATOMS: usize = 4096;

/// `ln C(n, k)` via a table of `ln k!`.
pub(crate) struct LnFactorials(Vec<f64>);

impl LnFactorials {
    pub(crate) fn new(n: usize) -> Self {
        let mut t = Vec::with_capacity(n + 1);
        let mut acc = 0.0_f64;
        t.push(0.0);
        for k in 1..=n {
            acc += (k as f64).ln();
            t.push(acc);
        }
        Self(t)
    }

    pub(crate) fn ln_binomial(&self, n: usize, k: usize) -> f64 {
        self.0[n] - self.0[k] - self.0[n - k]
    }
}

fn check_atoms(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::InvalidParameter("the ensemble needs at least one atom".into()));
    }
    if n > MAX_ATOMS {
        return Err(Error::TooLarge { what: "N", value: n, limit: MAX_ATOMS });
    }
    Ok(())
}

/// Symmetric `N`-atom state with amplitudes `c[m]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DickeState {
    atoms: usize,
    amplitudes: Vec<Complex64>,
}

impl DickeState {
    /// Normalizes `amplitudes`; there are `N + 1` of them.
    pub fn new(amplitudes: Vec<Complex64>) -> Result<Self> {
        let atoms = amplitudes.len().saturating_sub(1);
        check_atoms(atoms)?;
        let norm = amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter("state amplitudes cannot be normalized".into()));
        }
        Ok(Self { atoms, amplitudes: amplitudes.into_iter().map(|c| c / norm).collect() })
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `<J_x>`, `<J_y>`, `<J_z>`.
    pub fn mean_spin(&self) -> [f64; 3] {
        let n = self.atoms as f64;
        let c = &self.amplitudes;
        let mut plus = Complex64::new(0.0, 0.0);
        let mut z = 0.0;
        for m in 0..=self.atoms {
            z += c[m].norm_sqr() * (m as f64 - n / 2.0);
            if m < self.atoms {
                plus += c[m + 1].conj() * c[m] * raise(self.atoms, m);
            }
        }
        [plus.re, plus.im, z]
    }
}

/// `<m + 1| J_+ |m>`.
fn raise(n: usize, m: usize) -> f64 {
    (((n - m) * (m + 1)) as f64).sqrt()
}

/// `exp(-i chi_t J_z^2)` applied to the coherent state along `+x`:
/// `c_m ~ sqrt(C(N, m)) exp(-i chi_t (m - N/2)^2)`.
pub fn one_axis_twisted(atoms: usize, chi_t: f64) -> Result<DickeState> {
    check_atoms(atoms)?;
    if !chi_t.is_finite() {
        return Err(Error::InvalidParameter(format!("chi_t must be finite, got {chi_t}")));
    }
    let lf = LnFactorials::new(atoms);
    let n = atoms as f64;
    let amplitudes = (0..=atoms)
        .map(|m| {
            let mag = (0.5 * (lf.ln_binomial(atoms, m) - n * std::f64::consts::LN_2)).exp();
            let jz = m as f64 - n / 2.0;
            Complex64::from_polar(mag, -chi_t * jz * jz)
        })
        .collect();
    DickeState::new(amplitudes)
}

/// Overlap with the closest GHZ state along `x`,
/// `max_phi |<GHZ_phi|psi>|` with `GHZ_phi ~ |+x>^N + e^{i phi} |-x>^N`.
pub fn ghz_overlap(psi: &DickeState) -> f64 {
    let n = psi.atoms;
    let lf = LnFactorials::new(n);
    let (mut plus, mut minus) = (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0));
    for (m, c) in psi.amplitudes.iter().enumerate() {
        let w = (0.5 * (lf.ln_binomial(n, m) - n as f64 * std::f64::consts::LN_2)).exp();
        plus += c * w;
        // |-x> puts a minus sign on every atom in level 2.
        minus += if (n - m) % 2 == 0 { c * w } else { -c * w };
    }
    (plus.norm() + minus.norm()) / std::f64::consts::SQRT_2
}

/// Wineland parameter `N min_theta Var(cos theta J_y + sin theta J_z) / <J_x>^2`.
///
/// The variance is minimized over the plane orthogonal to `x`, the direction
/// of the mean spin of a twisted coherent state.
pub fn wineland_xi2(psi: &DickeState) -> Result<f64> {
    let atoms = psi.atoms;
    let n = atoms as f64;
    let c = &psi.amplitudes;
    let [jx, jy, jz] = psi.mean_spin();
    if jx.abs() <= 1e-9 * n {
        return Err(Error::Undefined(format!("<J_x> = {jx:e} vanishes, no squeezing parameter")));
    }
    let mut jz2 = 0.0;
    let mut plus2 = Complex64::new(0.0, 0.0);
    let mut plus_z = Complex64::new(0.0, 0.0);
    for m in 0..=atoms {
        let z = m as f64 - n / 2.0;
        jz2 += c[m].norm_sqr() * z * z;
        if m < atoms {
            // {J_+, J_z} between m and m + 1.
            plus_z += c[m + 1].conj() * c[m] * raise(atoms, m) * (2.0 * z + 1.0);
        }
        if m + 1 < atoms {
            plus2 += c[m + 2].conj() * c[m] * raise(atoms, m) * raise(atoms, m + 1);
        }
    }
    let j = n / 2.0;
    // J_y^2 = (2 (J^2 - J_z^2) - J_+^2 - J_-^2) / 4
    let jy2 = (2.0 * (j * (j + 1.0) - jz2) - 2.0 * plus2.re) / 4.0;
    let var_y = jy2 - jy * jy;
    let var_z = jz2 - jz * jz;
    let cov = plus_z.im / 2.0 - jy * jz;
    let mean = 0.5 * (var_y + var_z);
    let half_gap = (0.25 * (var_y - var_z).powi(2) + cov * cov).sqrt();
    let min_var = (mean - half_gap).max(0.0);
    Ok(n * min_var / (jx * jx))
}

/// `10 |log10 xi2|`, the squeezing in decibels reported as a magnitude.
pub fn squeezing_db(xi2: f64) -> f64 {
    (10.0 * xi2.log10()).abs()
}

/// Twisted state of [`one_axis_twisted`] sent through a beam splitter.
///
/// Block `n` holds the amplitudes with `n` atoms on Alice's side as an
/// `(n + 1) x (N - n + 1)` matrix indexed by the descending-`S_z` positions
/// of both parties: with `k`, `l` the atoms Alice holds in levels 1 and 2, and
/// `m` the total in level 1, the row is `l` and the column is `N - m - l`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitState {
    atoms: usize,
    transmission: f64,
    blocks: Vec<CMatrix>,
}

/// Serialized form of a [`SplitState`], with a format version.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitStateDump {
    pub version: u32,
    pub atoms: usize,
    pub chi_t: Option<f64>,
    pub transmission: f64,
    /// `[re, im]` pairs, block after block, each block row-major.
    pub amplitudes: Vec<[f64; 2]>,
}

pub const SPLIT_DUMP_VERSION: u32 = 1;

impl SplitState {
    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn transmission(&self) -> f64 {
        self.transmission
    }

    pub fn blocks(&self) -> &[CMatrix] {
        &self.blocks
    }

    /// Amplitude with `k` level-1 and `l` level-2 atoms at Alice, `m` level-1 atoms in total.
    /// Out-of-range indices have amplitude zero.
    pub fn amplitude(&self, m: usize, k: usize, l: usize) -> Complex64 {
        let n = self.atoms;
        if m > n || k > m || l > n - m {
            return Complex64::new(0.0, 0.0);
        }
        self.blocks[k + l][(l, n - m - l)]
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().flat_map(|b| b.iter()).map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Probability of finding `n` atoms on Alice's side.
    pub fn alice_count_probability(&self, n: usize) -> f64 {
        self.blocks.get(n).map_or(0.0, |b| b.iter().map(|c| c.norm_sqr()).sum())
    }

    pub fn to_dump(&self, chi_t: Option<f64>) -> SplitStateDump {
        SplitStateDump {
            version: SPLIT_DUMP_VERSION,
            atoms: self.atoms,
            chi_t,
            transmission: self.transmission,
            amplitudes: self.blocks.iter().flat_map(|b| b.transpose().iter().map(|c| [c.re, c.im]).collect::<Vec<_>>()).collect(),
        }
    }

    pub fn from_dump(dump: &SplitStateDump) -> Result<Self> {
        if dump.version != SPLIT_DUMP_VERSION {
            return Err(Error::InvalidParameter(format!("unsupported dump version {}", dump.version)));
        }
        check_atoms(dump.atoms)?;
        let n = dump.atoms;
        let expected: usize = (0..=n).map(|a| (a + 1) * (n - a + 1)).sum();
        if dump.amplitudes.len() != expected {
            return Err(Error::DimensionMismatch(format!(
                "{} atoms need {expected} amplitudes, dump has {}",
                n,
                dump.amplitudes.len()
            )));
        }
        let mut it = dump.amplitudes.iter();
        let blocks = (0..=n)
            .map(|a| {
                let vals: Vec<Complex64> = it.by_ref().take((a + 1) * (n - a + 1)).map(|p| Complex64::new(p[0], p[1])).collect();
                CMatrix::from_row_slice(a + 1, n - a + 1, &vals)
            })
            .collect();
        let state = Self { atoms: n, transmission: dump.transmission, blocks };
        if (state.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidParameter(format!("dumped state has norm {}", state.norm())));
        }
        Ok(state)
    }
}

/// Sends every atom to Alice with amplitude `sqrt(t)` and to Bob with
/// `sqrt(1 - t)`, independently of its internal level.
pub fn split_state(psi: &DickeState, transmission: f64) -> Result<SplitState> {
    if !(transmission > 0.0 && transmission < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "transmission must lie in (0, 1), got {transmission}"
        )));
    }
    let n = psi.atoms;
    let lf = LnFactorials::new(n);
    let (ln_t, ln_r) = (transmission.ln(), (1.0 - transmission).ln());
    let blocks: Vec<CMatrix> = (0..=n)
        .map(|a| {
            // a atoms at Alice: row l (level 2 at Alice), column rb = N - m - l.
            let mut block = CMatrix::zeros(a + 1, n - a + 1);
            let route = 0.5 * (a as f64 * ln_t + (n - a) as f64 * ln_r);
            for l in 0..=a {
                let k = a - l;
                for rb in 0..=n - a {
                    let m = n - rb - l;
                    if k > m {
                        continue;
                    }
                    let ln_mag = 0.5 * (lf.ln_binomial(m, k) + lf.ln_binomial(n - m, l)) + route;
                    block[(l, rb)] = psi.amplitudes[m] * ln_mag.exp();
                }
            }
            block
        })
        .collect();
    let state = SplitState { atoms: n, transmission, blocks };
    let norm = state.norm();
    debug_assert!((norm - 1.0).abs() < 1e-9, "split norm {norm}");
    Ok(SplitState { blocks: state.blocks.into_iter().map(|b| b / Complex64::new(norm, 0.0)).collect(), ..state })
}
