//! Normalized two-party Bell expressions with `m` settings per side and their
//! Bell operators on collective spins.
//!
//! Outcomes are rescaled to lie in `[-1/2, 1/2]`, so a local bound does not
//! depend on how many spins each party holds. The collective spin enters
//! through `s = S / N`, independently of the total-spin sector it acts on.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spin::{spin_components, CMatrix, Direction, HermitianMatrix, SpinSector};

/// `sum_ij w_ij <a_i b_j> + sum_i va_i <a_i> + sum_j vb_j <b_j> <= local_bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInequality", into = "RawInequality")]
pub struct BellInequality {
    m: usize,
    w: Vec<f64>,
    va: Vec<f64>,
    vb: Vec<f64>,
    local_bound: Option<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawInequality {
    m: usize,
    w: Vec<f64>,
    va: Vec<f64>,
    vb: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    local_bound: Option<f64>,
}

impl TryFrom<RawInequality> for BellInequality {
    type Error = Error;

    fn try_from(raw: RawInequality) -> Result<Self> {
        let ineq = BellInequality::new(raw.m, raw.w, raw.va, raw.vb)?;
        match raw.local_bound {
            Some(l) if !l.is_finite() => Err(Error::InvalidParameter(format!(
                "local bound must be finite, got {l}"
            ))),
            l => Ok(Self { local_bound: l, ..ineq }),
        }
    }
}

impl From<BellInequality> for RawInequality {
    fn from(b: BellInequality) -> Self {
        Self { m: b.m, w: b.w, va: b.va, vb: b.vb, local_bound: b.local_bound }
    }
}

impl BellInequality {
    /// `w` is row-major, `w[i * m + j]` multiplying `<a_i b_j>`.
    pub fn new(m: usize, w: Vec<f64>, va: Vec<f64>, vb: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::InvalidParameter("an inequality needs m >= 1 settings".into()));
        }
        if w.len() != m * m || va.len() != m || vb.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "m = {m} requires {} correlator and {m}+{m} marginal coefficients, got {}, {}, {}",
                m * m,
                w.len(),
                va.len(),
                vb.len()
            )));
        }
        if let Some(bad) = w.iter().chain(&va).chain(&vb).find(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("non-finite coefficient {bad}")));
        }
        Ok(Self { m, w, va, vb, local_bound: None })
    }

    pub fn zero(m: usize) -> Result<Self> {
        Self::new(m, vec![0.0; m * m], vec![0.0; m], vec![0.0; m])
    }

    /// `<a1 b1> + <a2 b1> + <a1 b2> - <a2 b2>`, local bound 1/2.
    pub fn chsh() -> Self {
        Self {
            m: 2,
            w: vec![1.0, 1.0, 1.0, -1.0],
            va: vec![0.0; 2],
            vb: vec![0.0; 2],
            local_bound: Some(0.5),
        }
    }

    pub fn settings(&self) -> usize {
        self.m
    }

    pub fn w(&self, i: usize, j: usize) -> f64 {
        self.w[i * self.m + j]
    }

    pub fn correlator_coefficients(&self) -> &[f64] {
        &self.w
    }

    pub fn alice_marginals(&self) -> &[f64] {
        &self.va
    }

    pub fn bob_marginals(&self) -> &[f64] {
        &self.vb
    }

    pub fn local_bound(&self) -> Option<f64> {
        self.local_bound
    }

    /// Attaches an exactly computed local bound.
    pub fn with_local_bound(mut self) -> Result<Self> {
        self.local_bound = None;
        let lb = crate::local::local_bound(&self)?;
        self.local_bound = Some(lb.value);
        Ok(self)
    }

    pub(crate) fn with_cached_bound(mut self, value: f64) -> Self {
        self.local_bound = Some(value);
        self
    }

    pub fn without_local_bound(mut self) -> Self {
        self.local_bound = None;
        self
    }

    /// All coefficients (and any cached bound) multiplied by `c`.
    pub fn scaled(&self, c: f64) -> Self {
        let scale = |v: &[f64]| v.iter().map(|x| x * c).collect::<Vec<_>>();
        Self {
            m: self.m,
            w: scale(&self.w),
            va: scale(&self.va),
            vb: scale(&self.vb),
            local_bound: if c >= 0.0 { self.local_bound.map(|l| l * c) } else { None },
        }
    }

    /// Value of the expression on given outcome expectations.
    pub fn evaluate(&self, a: &[f64], b: &[f64], ab: impl Fn(usize, usize) -> f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.m {
            total += self.va[i] * a[i] + self.vb[i] * b[i];
            for j in 0..self.m {
                total += self.w(i, j) * ab(i, j);
            }
        }
        total
    }
}

/// One measurement direction per setting and party.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasurementSettings {
    pub alice: Vec<Direction>,
    pub bob: Vec<Direction>,
}

impl MeasurementSettings {
    pub fn new(alice: Vec<Direction>, bob: Vec<Direction>) -> Result<Self> {
        if alice.len() != bob.len() {
            return Err(Error::DimensionMismatch(format!(
                "Alice has {} settings but Bob has {}",
                alice.len(),
                bob.len()
            )));
        }
        Ok(Self { alice, bob })
    }

    /// Reads `(theta, phi)` pairs: first Alice's `m`, then Bob's `m`.
    pub fn from_angles(angles: &[f64]) -> Result<Self> {
        if angles.len() % 4 != 0 {
            return Err(Error::DimensionMismatch(format!(
                "expected 4m angles, got {}",
                angles.len()
            )));
        }
        let dirs: Vec<Direction> = angles
            .chunks_exact(2)
            .map(|p| Direction::from_angles(p[0], p[1]))
            .collect();
        let m = dirs.len() / 2;
        Ok(Self { alice: dirs[..m].to_vec(), bob: dirs[m..].to_vec() })
    }

    pub fn to_angles(&self) -> Vec<f64> {
        self.alice
            .iter()
            .chain(&self.bob)
            .flat_map(|d| [d.theta(), d.phi()])
            .collect()
    }

    /// Settings that reach the Tsirelson value of [`BellInequality::chsh`]:
    /// Alice measures along x and z, Bob along (x +/- z)/sqrt(2).
    pub fn chsh_optimal() -> Self {
        use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        let x = Direction::x();
        let z = Direction::z();
        let plus = Direction::new(FRAC_PI_4, 0.0).expect("valid angles");
        let minus = Direction::new(FRAC_PI_2 + FRAC_PI_4, 0.0).expect("valid angles");
        Self { alice: vec![x, z], bob: vec![plus, minus] }
    }

    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }
}

/// Bell operator data after contracting coefficients with directions:
/// `B = s_A . W . s_B + s_A . V_A + s_B . V_B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WvDecomposition {
    pub w: [[f64; 3]; 3],
    pub va: [f64; 3],
    pub vb: [f64; 3],
}

impl WvDecomposition {
    pub fn zero() -> Self {
        Self { w: [[0.0; 3]; 3], va: [0.0; 3], vb: [0.0; 3] }
    }
}

pub fn assemble_wv(ineq: &BellInequality, settings: &MeasurementSettings) -> Result<WvDecomposition> {
    let m = ineq.settings();
    if settings.alice.len() != m || settings.bob.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "inequality has m = {m} but settings have {} + {} directions",
            settings.alice.len(),
            settings.bob.len()
        )));
    }
    let alpha: Vec<[f64; 3]> = settings.alice.iter().map(Direction::unit_vector).collect();
    let beta: Vec<[f64; 3]> = settings.bob.iter().map(Direction::unit_vector).collect();
    let mut out = WvDecomposition::zero();
    for i in 0..m {
        for j in 0..m {
            let c = ineq.w(i, j);
            if c == 0.0 {
                continue;
            }
            for x in 0..3 {
                for y in 0..3 {
                    out.w[x][y] += c * alpha[i][x] * beta[j][y];
                }
            }
        }
        for x in 0..3 {
            out.va[x] += ineq.alice_marginals()[i] * alpha[i][x];
            out.vb[x] += ineq.bob_marginals()[i] * beta[i][x];
        }
    }
    Ok(out)
}

/// Normalized spin components `S / N` of every sector available to `N` spins.
///
/// Collective operators are block diagonal over total-spin sectors, and the
/// spectrum inside a block does not depend on its multiplicity, so the Bell
/// operator only has to be diagonalized once per sector pair.
#[derive(Debug, Clone)]
pub struct SectorOperators {
    spins: u32,
    sectors: Vec<(SpinSector, [DMatrix<Complex64>; 3])>,
}

impl SectorOperators {
    pub fn new(spins: u32) -> Result<Self> {
        if spins == 0 {
            return Err(Error::InvalidParameter("need at least one spin per party".into()));
        }
        let norm = Complex64::new(1.0 / f64::from(spins), 0.0);
        let sectors = SpinSector::all_for(spins)
            .map(|sector| {
                let s = spin_components(sector);
                let ops = s.as_array().map(|h| h.as_matrix() * norm);
                (sector, ops)
            })
            .collect();
        Ok(Self { spins, sectors })
    }

    pub fn spins(&self) -> u32 {
        self.spins
    }

    pub fn sectors(&self) -> impl Iterator<Item = SpinSector> + '_ {
        self.sectors.iter().map(|(s, _)| *s)
    }

    fn index_of(&self, sector: SpinSector) -> Result<usize> {
        self.sectors
            .iter()
            .position(|(s, _)| *s == sector)
            .ok_or(Error::InvalidSector { two_j: sector.two_j(), spins: self.spins })
    }

    /// Bell operator on the sector pair `(alice, bob)`.
    pub fn operator(&self, wv: &WvDecomposition, alice: SpinSector, bob: SpinSector) -> Result<HermitianMatrix> {
        let a = self.index_of(alice)?;
        let b = self.index_of(bob)?;
        Ok(HermitianMatrix::from_hermitian(self.assemble(wv, a, b)))
    }

    fn assemble(&self, wv: &WvDecomposition, a: usize, b: usize) -> CMatrix {
        let (_, sa) = &self.sectors[a];
        let (_, sb) = &self.sectors[b];
        let da = sa[0].nrows();
        let db = sb[0].nrows();
        let cr = |x: f64| Complex64::new(x, 0.0);

        // Contract W with Alice's side first: left[y] = sum_x W[x][y] sA_x.
        let left: [CMatrix; 3] = std::array::from_fn(|y| {
            &sa[0] * cr(wv.w[0][y]) + &sa[1] * cr(wv.w[1][y]) + &sa[2] * cr(wv.w[2][y])
        });
        let local_a = &sa[0] * cr(wv.va[0]) + &sa[1] * cr(wv.va[1]) + &sa[2] * cr(wv.va[2]);
        let local_b = &sb[0] * cr(wv.vb[0]) + &sb[1] * cr(wv.vb[1]) + &sb[2] * cr(wv.vb[2]);

        let dim = da * db;
        let mut out = CMatrix::zeros(dim, dim);
        for i in 0..da {
            for k in 0..da {
                for j in 0..db {
                    for l in 0..db {
                        let mut v = left[0][(i, k)] * sb[0][(j, l)]
                            + left[1][(i, k)] * sb[1][(j, l)]
                            + left[2][(i, k)] * sb[2][(j, l)];
                        if j == l {
                            v += local_a[(i, k)];
                        }
                        if i == k {
                            v += local_b[(j, l)];
                        }
                        out[(i * db + j, k * db + l)] = v;
                    }
                }
            }
        }
        out
    }

    /// Largest eigenvalue of the Bell operator over all sector pairs, i.e. the
    /// best value any state of `N + N` spins reaches for these settings.
    pub fn quantum_value(&self, wv: &WvDecomposition) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for a in 0..self.sectors.len() {
            for b in 0..self.sectors.len() {
                let op = HermitianMatrix::from_hermitian(self.assemble(wv, a, b));
                best = best.max(op.max_eigenvalue());
            }
        }
        best
    }
}

/// Bell operator of `wv` on the sector pair, for `spins` spins per party.
pub fn bell_operator(
    wv: &WvDecomposition,
    alice: SpinSector,
    bob: SpinSector,
    spins: u32,
) -> Result<HermitianMatrix> {
    for s in [alice, bob] {
        if !s.admissible_for(spins) {
            return Err(Error::InvalidSector { two_j: s.two_j(), spins });
        }
    }
    SectorOperators::new(spins)?.operator(wv, alice, bob)
}

/// Maximal expectation of the Bell operator over all states of `spins + spins`
/// spin-1/2 particles, for fixed settings.
pub fn quantum_value(ineq: &BellInequality, settings: &MeasurementSettings, spins: u32) -> Result<f64> {
    let wv = assemble_wv(ineq, settings)?;
    Ok(SectorOperators::new(spins)?.quantum_value(&wv))
}

/// `<B> - local bound`; positive values certify Bell correlations.
pub fn witness_value(expectation: f64, ineq: &BellInequality) -> Result<f64> {
    ineq.local_bound()
        .map(|l| expectation - l)
        .ok_or(Error::MissingLocalBound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::SQRT_2;

    #[test]
    fn zero_inequality_gives_zero_wv() {
        let ineq = BellInequality::zero(3).unwrap();
        let s = MeasurementSettings::from_angles(&[0.3; 12]).unwrap();
        assert_eq!(assemble_wv(&ineq, &s).unwrap(), WvDecomposition::zero());
    }

    #[test]
    fn single_zz_term() {
        let ineq = BellInequality::new(1, vec![1.0], vec![0.0], vec![0.0]).unwrap();
        let s = MeasurementSettings::new(vec![Direction::z()], vec![Direction::z()]).unwrap();
        let wv = assemble_wv(&ineq, &s).unwrap();
        for x in 0..3 {
            for y in 0..3 {
                let want = if x == 2 && y == 2 { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(wv.w[x][y], want, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn chsh_wv_expansion() {
        // (A1 + A2) B1 + (A1 - A2) B2 with A = x, z and B = (x +/- z)/sqrt2
        // expands to sqrt2 (x x + z z).
        let wv = assemble_wv(&BellInequality::chsh(), &MeasurementSettings::chsh_optimal()).unwrap();
        let want = [[SQRT_2, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, SQRT_2]];
        for x in 0..3 {
            for y in 0..3 {
                assert_abs_diff_eq!(wv.w[x][y], want[x][y], epsilon = 1e-14);
            }
        }
        assert_eq!(wv.va, [0.0; 3]);
        assert_eq!(wv.vb, [0.0; 3]);
    }

    #[test]
    fn mismatched_settings_rejected() {
        let s = MeasurementSettings::from_angles(&[0.1; 12]).unwrap();
        assert!(matches!(
            assemble_wv(&BellInequality::chsh(), &s),
            Err(Error::DimensionMismatch(_))
        ));
        assert!(MeasurementSettings::new(vec![Direction::z()], vec![]).is_err());
    }

    #[test]
    fn marginal_operator_on_single_spin() {
        let wv = WvDecomposition { va: [0.0, 0.0, 1.0], ..WvDecomposition::zero() };
        let half = SpinSector::new(1);
        let op = bell_operator(&wv, half, half, 1).unwrap();
        let diag = [0.5, 0.5, -0.5, -0.5];
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { diag[i] } else { 0.0 };
                assert_abs_diff_eq!(op.as_matrix()[(i, j)].re, want, epsilon = 1e-15);
                assert_abs_diff_eq!(op.as_matrix()[(i, j)].im, 0.0, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn zero_decomposition_gives_zero_operator() {
        let op = bell_operator(&WvDecomposition::zero(), SpinSector::new(2), SpinSector::new(0), 2).unwrap();
        assert_eq!(op.dim(), 3);
        assert!(op.as_matrix().iter().all(|z| z.norm() == 0.0));
    }

    #[test]
    fn invalid_sector_rejected() {
        let wv = WvDecomposition::zero();
        assert!(matches!(
            bell_operator(&wv, SpinSector::new(1), SpinSector::new(2), 2),
            Err(Error::InvalidSector { two_j: 1, spins: 2 })
        ));
        assert!(bell_operator(&wv, SpinSector::new(4), SpinSector::new(2), 2).is_err());
    }

    #[test]
    fn tsirelson_at_one_spin() {
        let v = quantum_value(&BellInequality::chsh(), &MeasurementSettings::chsh_optimal(), 1).unwrap();
        assert_abs_diff_eq!(v, SQRT_2 / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn two_spins_do_not_exceed_one_spin() {
        let s = MeasurementSettings::chsh_optimal();
        let v1 = quantum_value(&BellInequality::chsh(), &s, 1).unwrap();
        let v2 = quantum_value(&BellInequality::chsh(), &s, 2).unwrap();
        assert!(v2 <= v1 + 1e-12, "{v2} > {v1}");
    }

    #[test]
    fn zero_inequality_value() {
        let s = MeasurementSettings::from_angles(&[0.7; 8]).unwrap();
        let v = quantum_value(&BellInequality::zero(2).unwrap(), &s, 3).unwrap();
        assert_abs_diff_eq!(v, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn witness_arithmetic() {
        let chsh = BellInequality::chsh();
        assert_abs_diff_eq!(witness_value(0.7071, &chsh).unwrap(), 0.2071, epsilon = 1e-12);
        assert_abs_diff_eq!(witness_value(0.5, &chsh).unwrap(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(witness_value(0.3, &chsh).unwrap(), -0.2, epsilon = 1e-12);
        let bare = chsh.without_local_bound();
        assert_eq!(witness_value(0.3, &bare), Err(Error::MissingLocalBound));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let ineq = BellInequality::new(
            2,
            vec![0.123456789012345, -1e-7, 3.0, 0.1],
            vec![1.0 / 3.0, 0.0],
            vec![-0.25, 2.5e-12],
        )
        .unwrap()
        .with_local_bound()
        .unwrap();
        let text = serde_json::to_string(&ineq).unwrap();
        let back: BellInequality = serde_json::from_str(&text).unwrap();
        assert_eq!(back, ineq);
        let bad = r#"{"m":2,"w":[1,2,3],"va":[0,0],"vb":[0,0]}"#;
        assert!(serde_json::from_str::<BellInequality>(bad).is_err());
    }

    #[test]
    fn settings_angle_round_trip() {
        let s = MeasurementSettings::chsh_optimal();
        let back = MeasurementSettings::from_angles(&s.to_angles()).unwrap();
        assert_eq!(back, s);
    }
}
