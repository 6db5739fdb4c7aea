//! Independent reference computations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use num_complex::Complex64;

pub type C = Complex64;
pub type CMat = DMatrix<C>;

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `exp(a)` by scaling and squaring with a Taylor series.
pub fn expm(a: &CMat) -> CMat {
    let n = a.nrows();
    let norm: f64 = a.iter().map(|z| z.norm()).sum::<f64>().max(1e-300);
    let s = (norm.log2().ceil() as i32 + 1).max(0);
    let scaled = a / c(2f64.powi(s));
    let mut term = CMat::identity(n, n);
    let mut sum = CMat::identity(n, n);
    for k in 1..40 {
        term = &term * &scaled / c(k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Spin matrices of spin `j = n/2` in the descending basis, from ladder algebra.
pub fn spin_ops(n: usize) -> [CMat; 3] {
    let j = n as f64 / 2.0;
    let dim = n + 1;
    let mut plus = CMat::zeros(dim, dim);
    for r in 1..dim {
        let m = j - r as f64;
        plus[(r - 1, r)] = c((j * (j + 1.0) - m * (m + 1.0)).sqrt());
    }
    let minus = plus.adjoint();
    let x = (&plus + &minus) / c(2.0);
    let y = (&plus - &minus) / C::new(0.0, 2.0);
    let z = CMat::from_fn(dim, dim, |a, b| if a == b { c(j - a as f64) } else { c(0.0) });
    [x, y, z]
}

fn ln_fact(n: usize) -> f64 {
    (1..=n).map(|k| (k as f64).ln()).sum()
}

/// Closed-form reduced rotation matrix, alternating sum with exact factorials.
pub fn small_d_closed_form(n: usize, theta: f64) -> DMatrix<f64> {
    let j2 = n as i64;
    let (ch, sh) = ((theta / 2.0).cos(), (theta / 2.0).sin());
    DMatrix::from_fn(n + 1, n + 1, |rk, rm| {
        // Row k = j - rk, column m = j - rm.
        let jpk = (n - rk) as i64; // j + k
        let jmk = rk as i64; // j - k
        let jpm = (n - rm) as i64;
        let jmm = rm as i64;
        let pre = 0.5 * (ln_fact(jpk as usize) + ln_fact(jmk as usize) + ln_fact(jpm as usize) + ln_fact(jmm as usize));
        let mut sum = 0.0;
        // k - m = rm - rk
        let kmm = rm as i64 - rk as i64;
        for s in 0..=j2 {
            let (a, b, cc, d) = (jpm - s, s, kmm + s, jmk - s);
            if a < 0 || cc < 0 || d < 0 {
                continue;
            }
            let ln_den = ln_fact(a as usize) + ln_fact(b as usize) + ln_fact(cc as usize) + ln_fact(d as usize);
            let pc = (j2 - kmm - 2 * s) as i32;
            let ps = (kmm + 2 * s) as i32;
            let sign = if (kmm + s) % 2 == 0 { 1.0 } else { -1.0 };
            sum += sign * (pre - ln_den).exp() * ch.powi(pc) * sh.powi(ps);
        }
        sum
    })
}

/// Eigenvalues of a Hermitian matrix by cyclic Jacobi on its real embedding
/// `[[Re, -Im], [Im, Re]]`; each eigenvalue appears twice.
pub fn jacobi_eigenvalues(h: &CMat) -> Vec<f64> {
    let n = h.nrows();
    let mut a = DMatrix::<f64>::from_fn(2 * n, 2 * n, |i, j| {
        let (bi, bj) = (i / n, j / n);
        let z = h[(i % n, j % n)];
        match (bi, bj) {
            (0, 0) | (1, 1) => z.re,
            (0, 1) => -z.im,
            _ => z.im,
        }
    });
    let m = 2 * n;
    for _sweep in 0..100 {
        let off: f64 = (0..m).flat_map(|i| (0..m).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[(i, j)].powi(2)).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..m {
            for q in p + 1..m {
                if a[(p, q)].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[(q, q)] - a[(p, p)]) / (2.0 * a[(p, q)]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let cs = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * cs;
                for k in 0..m {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = cs * akp - sn * akq;
                    a[(k, q)] = sn * akp + cs * akq;
                }
                for k in 0..m {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = cs * apk - sn * aqk;
                    a[(q, k)] = sn * apk + cs * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..m).map(|i| a[(i, i)]).collect();
    ev.sort_by(f64::total_cmp);
    ev
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Single-qubit spin along a unit vector, `n . sigma / 2`.
pub fn qubit_spin(v: [f64; 3]) -> CMat {
    CMat::from_row_slice(
        2,
        2,
        &[c(v[2] / 2.0), C::new(v[0] / 2.0, -v[1] / 2.0), C::new(v[0] / 2.0, v[1] / 2.0), c(-v[2] / 2.0)],
    )
}

/// Collective spin `sum_k n . sigma_k / 2` on `spins` explicit qubits.
pub fn collective_qubits(spins: usize, v: [f64; 3]) -> CMat {
    let dim = 1 << spins;
    let mut total = CMat::zeros(dim, dim);
    for k in 0..spins {
        let mut op = CMat::identity(1, 1);
        for q in 0..spins {
            op = kron(&op, &if q == k { qubit_spin(v) } else { CMat::identity(2, 2) });
        }
        total += op;
    }
    total
}

/// Maximum over all `(N+1)^(2m)` deterministic strategies with outcomes
/// `(N/2 - r) / N`, the normalized eigenvalues of a collective spin component.
pub fn local_brute_force(m: usize, w: &[f64], va: &[f64], vb: &[f64], spins: usize) -> f64 {
    let levels: Vec<f64> = (0..=spins).map(|r| (spins as f64 / 2.0 - r as f64) / spins as f64).collect();
    let base = spins + 1;
    let total = base.pow(2 * m as u32);
    let mut best = f64::NEG_INFINITY;
    let mut digits = vec![0usize; 2 * m];
    for code in 0..total {
        let mut x = code;
        for d in digits.iter_mut() {
            *d = x % base;
            x /= base;
        }
        let a: Vec<f64> = digits[..m].iter().map(|&d| levels[d]).collect();
        let b: Vec<f64> = digits[m..].iter().map(|&d| levels[d]).collect();
        let mut v = 0.0;
        for i in 0..m {
            v += va[i] * a[i] + vb[i] * b[i];
            for j in 0..m {
                v += w[i * m + j] * a[i] * b[j];
            }
        }
        best = best.max(v);
    }
    best
}

/// Twist, split and parity measurement built from explicit operators on the
/// four modes `a1, a2, b1, b2` with `N` atoms in total.
pub struct FockOracle {
    atoms: usize,
    basis: Vec<[usize; 4]>,
    state: Vec<C>,
}

impl FockOracle {
    fn index(&self, occ: [usize; 4]) -> Option<usize> {
        self.basis.iter().position(|&b| b == occ)
    }

    /// Matrix of `adag_p a_q` on the fixed-N space.
    fn hop(basis: &[[usize; 4]], p: usize, q: usize) -> CMat {
        let dim = basis.len();
        let mut out = CMat::zeros(dim, dim);
        for (col, occ) in basis.iter().enumerate() {
            if occ[q] == 0 {
                continue;
            }
            let mut next = *occ;
            let mut amp = (next[q] as f64).sqrt();
            next[q] -= 1;
            next[p] += 1;
            amp *= (next[p] as f64).sqrt();
            let row = basis.iter().position(|&b| b == next).unwrap();
            out[(row, col)] += c(amp);
        }
        out
    }

    pub fn new(atoms: usize, chi_t: f64, transmission: f64) -> Self {
        let mut basis = Vec::new();
        for n0 in 0..=atoms {
            for n1 in 0..=atoms - n0 {
                for n2 in 0..=atoms - n0 - n1 {
                    basis.push([n0, n1, n2, atoms - n0 - n1 - n2]);
                }
            }
        }
        // modes: 0 = a1, 1 = a2, 2 = b1, 3 = b2
        let fact = |k: usize| (1..=k).map(|x| x as f64).product::<f64>();
        let mut state = vec![c(0.0); basis.len()];
        for (i, occ) in basis.iter().enumerate() {
            if occ[2] == 0 && occ[3] == 0 {
                // (a1dag + a2dag)^N / sqrt(2^N N!) |0>
                let binom = fact(atoms) / (fact(occ[0]) * fact(occ[1]));
                let amp = binom * (fact(occ[0]) * fact(occ[1])).sqrt() / (2f64.powi(atoms as i32) * fact(atoms)).sqrt();
                let jz = (occ[0] as f64 - occ[1] as f64) / 2.0;
                state[i] = C::from_polar(amp, -chi_t * jz * jz);
            }
        }
        let theta = transmission.sqrt().acos();
        let g = Self::hop(&basis, 2, 0) - Self::hop(&basis, 0, 2) + Self::hop(&basis, 3, 1) - Self::hop(&basis, 1, 3);
        let u = expm(&(g * c(theta)));
        let psi = &u * nalgebra::DVector::from_vec(state);
        Self { atoms, basis, state: psi.iter().copied().collect() }
    }

    pub fn norm(&self) -> f64 {
        self.state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Amplitude with `k` level-1 and `l` level-2 atoms at Alice and `m` level-1 atoms in total.
    pub fn amplitude(&self, m: usize, k: usize, l: usize) -> C {
        match self.index([k, l, m - k, self.atoms - m - l]) {
            Some(i) => self.state[i],
            None => c(0.0),
        }
    }

    /// `exp(-i phi J_z) exp(-i theta J_y)` for the party on modes `(p1, p2)`.
    fn rotation(&self, p1: usize, p2: usize, theta: f64, phi: f64) -> CMat {
        let b = &self.basis;
        let jy = (Self::hop(b, p1, p2) - Self::hop(b, p2, p1)) / C::new(0.0, 2.0);
        let jz = (Self::hop(b, p1, p1) - Self::hop(b, p2, p2)) / c(2.0);
        expm(&(jz * C::new(0.0, -phi))) * expm(&(jy * C::new(0.0, -theta)))
    }

    /// `P(n_A, r_A, r_B)` for measurements along `(theta, phi)` on each side,
    /// `r` being the number of atoms found in the lower eigenstate.
    pub fn probabilities(&self, alice: (f64, f64), bob: (f64, f64)) -> Vec<((usize, usize, usize), f64)> {
        let ua = self.rotation(0, 1, alice.0, alice.1);
        let ub = self.rotation(2, 3, bob.0, bob.1);
        let rotated = (ub * ua).adjoint() * nalgebra::DVector::from_vec(self.state.clone());
        self.basis
            .iter()
            .zip(rotated.iter())
            .map(|(occ, z)| ((occ[0] + occ[1], occ[1], occ[3]), z.norm_sqr()))
            .collect()
    }

    pub fn correlator(&self, alice: (f64, f64), bob: (f64, f64)) -> f64 {
        self.probabilities(alice, bob)
            .into_iter()
            .map(|((_, ra, rb), p)| if (ra + rb) % 2 == 0 { p } else { -p })
            .sum()
    }

    pub fn chsh(&self, a: [(f64, f64); 2], b: [(f64, f64); 2]) -> f64 {
        self.correlator(a[0], b[0]) + self.correlator(a[1], b[0]) + self.correlator(a[0], b[1]) - self.correlator(a[1], b[1])
    }
}
