//! Collective spin operators on a fixed total-spin sector.
//!
//! Every matrix in this crate uses the same basis ordering: index `r` labels
//! the state with `S_z = j - r`, i.e. eigenvalues run `j, j-1, ..., -j`. For a
//! symmetric register of `n = 2j` spin-1/2 particles, `r` is the number of
//! particles in the lower level.

use std::f64::consts::{PI, TAU};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type CMatrix = DMatrix<Complex64>;

/// Absolute tolerance used when checking Hermiticity of user-provided matrices.
pub const HERMITIAN_TOLERANCE: f64 = 1e-10;

/// Irreducible block of the collective spin, labelled by twice its total spin.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SpinSector {
    two_j: u32,
}

impl SpinSector {
    pub const fn new(two_j: u32) -> Self {
        Self { two_j }
    }

    pub const fn two_j(self) -> u32 {
        self.two_j
    }

    pub fn j(self) -> f64 {
        f64::from(self.two_j) / 2.0
    }

    pub const fn dim(self) -> usize {
        self.two_j as usize + 1
    }

    /// `S_z` eigenvalue carried by basis index `r`.
    pub fn sz(self, r: usize) -> f64 {
        self.j() - r as f64
    }

    /// Whether this sector occurs in the collective spin of `spins` spin-1/2 particles.
    pub fn admissible_for(self, spins: u32) -> bool {
        self.two_j <= spins && (spins - self.two_j) % 2 == 0
    }

    /// All sectors of `spins` spin-1/2 particles, from `j = spins/2` downwards.
    pub fn all_for(spins: u32) -> impl Iterator<Item = SpinSector> {
        (0..=spins / 2).map(move |k| SpinSector::new(spins - 2 * k))
    }
}

/// Unit measurement direction given by polar and azimuthal angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Direction {
    theta: f64,
    phi: f64,
}

impl Direction {
    /// Strict constructor: `theta` in `[0, pi]`, `phi` in `[0, 2pi)`.
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(theta.is_finite() && phi.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "direction angles must be finite, got ({theta}, {phi})"
            )));
        }
        if !(0.0..=PI).contains(&theta) || !(0.0..TAU).contains(&phi) {
            return Err(Error::InvalidParameter(format!(
                "direction angles out of range: theta = {theta}, phi = {phi}"
            )));
        }
        Ok(Self { theta, phi })
    }

    /// Maps arbitrary real angles onto the same physical direction with
    /// canonical ranges. Used by the optimizers, which search over all of R.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        let mut theta = theta.rem_euclid(TAU);
        let mut phi = phi;
        if theta > PI {
            theta = TAU - theta;
            phi += PI;
        }
        let mut phi = phi.rem_euclid(TAU);
        if phi >= TAU {
            phi = 0.0;
        }
        Self { theta, phi }
    }

    pub fn from_vector(v: [f64; 3]) -> Result<Self> {
        let norm = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cannot normalize direction vector {v:?}"
            )));
        }
        let theta = (v[2] / norm).clamp(-1.0, 1.0).acos();
        let phi = v[1].atan2(v[0]);
        Ok(Self::from_angles(theta, phi))
    }

    pub fn x() -> Self {
        Self { theta: PI / 2.0, phi: 0.0 }
    }

    pub fn y() -> Self {
        Self { theta: PI / 2.0, phi: PI / 2.0 }
    }

    pub fn z() -> Self {
        Self { theta: 0.0, phi: 0.0 }
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }
}

/// Dense complex matrix known to equal its conjugate transpose.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianMatrix {
    inner: CMatrix,
}

impl HermitianMatrix {
    /// Validates squareness and Hermiticity (within [`HERMITIAN_TOLERANCE`],
    /// scaled by the largest entry).
    pub fn new(m: CMatrix) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        let deviation = hermitian_deviation(&m);
        let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
        if !(deviation <= HERMITIAN_TOLERANCE * scale) {
            return Err(Error::NotHermitian { deviation });
        }
        Ok(Self { inner: m })
    }

    /// For matrices that are Hermitian by construction.
    pub(crate) fn from_hermitian(m: CMatrix) -> Self {
        debug_assert!(hermitian_deviation(&m) <= 1e-9 * m.iter().map(|z| z.norm()).fold(1.0, f64::max));
        Self { inner: m }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { inner: CMatrix::zeros(dim, dim) }
    }

    pub fn identity(dim: usize) -> Self {
        Self { inner: CMatrix::identity(dim, dim) }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        Self {
            inner: CMatrix::from_fn(n, n, |i, j| {
                if i == j {
                    Complex64::new(diag[i], 0.0)
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }),
        }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.inner
    }

    pub fn into_inner(self) -> CMatrix {
        self.inner
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = self.inner.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn max_eigenvalue(&self) -> f64 {
        match self.dim() {
            0 => f64::NEG_INFINITY,
            1 => self.inner[(0, 0)].re,
            _ => self
                .inner
                .clone()
                .symmetric_eigenvalues()
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max),
        }
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { inner: &self.inner * Complex64::new(c, 0.0) }
    }

    pub fn kron(&self, other: &HermitianMatrix) -> Self {
        Self { inner: self.inner.kronecker(&other.inner) }
    }
}

impl std::ops::Add for &HermitianMatrix {
    type Output = HermitianMatrix;

    fn add(self, rhs: Self) -> HermitianMatrix {
        HermitianMatrix { inner: &self.inner + &rhs.inner }
    }
}

fn hermitian_deviation(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[(i, j)] - m[(j, i)].conj()).norm();
            if !d.is_finite() {
                return f64::INFINITY;
            }
            worst = worst.max(d);
        }
    }
    worst
}

/// Largest eigenvalue of an arbitrary complex matrix, rejecting non-Hermitian input.
pub fn max_eigenvalue(m: &CMatrix) -> Result<f64> {
    Ok(HermitianMatrix::new(m.clone())?.max_eigenvalue())
}

/// The three Cartesian spin components of one sector.
#[derive(Debug, Clone)]
pub struct SpinComponents {
    pub x: HermitianMatrix,
    pub y: HermitianMatrix,
    pub z: HermitianMatrix,
}

impl SpinComponents {
    pub fn as_array(&self) -> [&HermitianMatrix; 3] {
        [&self.x, &self.y, &self.z]
    }
}

/// Standard angular-momentum matrices `S_x, S_y, S_z` in the descending-`S_z` basis.
pub fn spin_components(sector: SpinSector) -> SpinComponents {
    let dim = sector.dim();
    let j = sector.j();
    let zero = Complex64::new(0.0, 0.0);
    // S+ couples r+1 -> r with amplitude sqrt(j(j+1) - m(m+1)), m = j - (r+1).
    let mut raise = DMatrix::<f64>::zeros(dim, dim);
    for r in 0..dim.saturating_sub(1) {
        let m = sector.sz(r + 1);
        raise[(r, r + 1)] = (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt();
    }
    let x = CMatrix::from_fn(dim, dim, |a, b| {
        Complex64::new(0.5 * (raise[(a, b)] + raise[(b, a)]), 0.0)
    });
    let y = CMatrix::from_fn(dim, dim, |a, b| {
        // (S+ - S-) / 2i
        Complex64::new(0.0, -0.5 * (raise[(a, b)] - raise[(b, a)]))
    });
    let z = CMatrix::from_fn(dim, dim, |a, b| {
        if a == b {
            Complex64::new(sector.sz(a), 0.0)
        } else {
            zero
        }
    });
    SpinComponents {
        x: HermitianMatrix::from_hermitian(x),
        y: HermitianMatrix::from_hermitian(y),
        z: HermitianMatrix::from_hermitian(z),
    }
}

/// `d . S` for a unit direction `d`.
pub fn direction_operator(sector: SpinSector, d: Direction) -> HermitianMatrix {
    let s = spin_components(sector);
    project(&s, d.unit_vector())
}

pub(crate) fn project(s: &SpinComponents, v: [f64; 3]) -> HermitianMatrix {
    let m = s.x.as_matrix() * Complex64::new(v[0], 0.0)
        + s.y.as_matrix() * Complex64::new(v[1], 0.0)
        + s.z.as_matrix() * Complex64::new(v[2], 0.0);
    HermitianMatrix::from_hermitian(m)
}

/// Eigenbasis of `S_x` on a register of `n` spin-1/2 particles.
///
/// `exp(-i theta S_y) = U exp(-i theta S_x) U^dagger` with `U = exp(-i pi/2 S_z)`,
/// so one real orthogonal diagonalization per register size gives the reduced
/// rotation matrix for every angle. Unlike the alternating closed-form sum,
/// this stays accurate to near machine precision for registers of many
/// hundreds of particles.
#[derive(Debug, Clone)]
pub struct RotationBasis {
    vectors: DMatrix<f64>,
    /// Exact eigenvalues `j, j-1, ..., -j` matching the columns of `vectors`.
    eigenvalues: Vec<f64>,
}

impl RotationBasis {
    pub fn new(n: usize) -> Self {
        let sector = SpinSector::new(n as u32);
        let j = sector.j();
        let mut jx = DMatrix::<f64>::zeros(n + 1, n + 1);
        for r in 0..n {
            let m = sector.sz(r + 1);
            let c = 0.5 * (j * (j + 1.0) - m * (m + 1.0)).max(0.0).sqrt();
            jx[(r, r + 1)] = c;
            jx[(r + 1, r)] = c;
        }
        let eig = jx.symmetric_eigen();
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
        let vectors = DMatrix::from_fn(n + 1, n + 1, |row, col| eig.eigenvectors[(row, order[col])]);
        let eigenvalues = (0..=n).map(|r| sector.sz(r)).collect();
        Self { vectors, eigenvalues }
    }

    pub fn size(&self) -> usize {
        self.eigenvalues.len() - 1
    }

    /// `d^{n/2}(theta)`, real, in the descending-`S_z` basis.
    pub fn small_d(&self, theta: f64) -> DMatrix<f64> {
        let dim = self.eigenvalues.len();
        let (sin, cos): (Vec<f64>, Vec<f64>) =
            self.eigenvalues.iter().map(|mu| (theta * mu).sin_cos()).unzip();
        let vt = self.vectors.transpose();
        let c = &self.vectors * DMatrix::from_fn(dim, dim, |a, b| cos[a] * vt[(a, b)]);
        let s = &self.vectors * DMatrix::from_fn(dim, dim, |a, b| sin[a] * vt[(a, b)]);
        // exp(-i pi/2 (k - m)) with k - m = r_m - r_k selects the real part.
        DMatrix::from_fn(dim, dim, |rk, rm| match (rm + 4 - rk % 4) % 4 {
            0 => c[(rk, rm)],
            1 => -s[(rk, rm)],
            2 => -c[(rk, rm)],
            _ => s[(rk, rm)],
        })
    }
}

/// Rotation bases for every register size `0..=n_max`.
#[derive(Debug, Clone)]
pub struct RotationCache {
    bases: Vec<RotationBasis>,
}

impl RotationCache {
    pub fn new(n_max: usize) -> Self {
        Self { bases: (0..=n_max).map(RotationBasis::new).collect() }
    }

    pub fn n_max(&self) -> usize {
        self.bases.len() - 1
    }

    pub fn basis(&self, n: usize) -> &RotationBasis {
        &self.bases[n]
    }

    /// `d^{n/2}(theta)` for every `n = 0..=n_max`.
    pub fn ladder(&self, theta: f64) -> Vec<DMatrix<f64>> {
        self.bases.iter().map(|b| b.small_d(theta)).collect()
    }
}

/// `d^{n/2}(theta) = exp(-i theta S_y)` on `n + 1` symmetric states.
pub fn small_d(n: usize, theta: f64) -> DMatrix<f64> {
    RotationBasis::new(n).small_d(theta)
}

/// Rotation taking `z` onto `d`: entries `exp(-i phi k) <k| exp(-i theta S_y) |m>`
/// on the `n + 1` symmetric states, `k` and `m` being `S_z` eigenvalues.
///
/// Column `m` is the eigenvector of `d . S` with eigenvalue `m`.
pub fn wigner_rotation(n: usize, d: Direction) -> CMatrix {
    let small = small_d(n, d.theta());
    with_azimuth(&small, d.phi())
}

pub(crate) fn with_azimuth(small: &DMatrix<f64>, phi: f64) -> CMatrix {
    let dim = small.nrows();
    let sector = SpinSector::new(dim as u32 - 1);
    let phases: Vec<Complex64> = (0..dim)
        .map(|r| Complex64::from_polar(1.0, -phi * sector.sz(r)))
        .collect();
    CMatrix::from_fn(dim, dim, |k, m| phases[k] * small[(k, m)])
}
