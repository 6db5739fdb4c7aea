//! Inequalities in table form, `B = delta + sum alpha_i a_i + sum beta_j b_j
//! + sum gamma_ij a_i b_j >= 0` with outcomes `a_i, b_j` in `{-1, +1}`.
//!
//! Text format, one entry per block:
//!
//! ```text
//! # chsh 2
//! 2  0  0
//! 0 -1 -1
//! 0 -1  1
//! ```
//!
//! A line `# <name> <m>` (exactly two tokens, the second an integer) opens an
//! entry; any other line starting with `#` is a comment. The first table row
//! is `delta beta_1 .. beta_m`, row `i` is `alpha_i gamma_i1 .. gamma_im`.

use std::fmt::Write as _;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bell::BellInequality;
use crate::error::{Error, Result};
use crate::local::{local_bound, MAX_VERTEX_SETTINGS};
use crate::optimize::{substream, SearchConfig};
use crate::search::{mix_seed, optimize_settings, OptimizedSettings};

/// CHSH in table form.
pub const CHSH_CATALOG: &str = "\
# chsh 2
2 0 0
0 -1 -1
0 -1 1
";

/// Entries whose minimum lies within this distance of zero count as tight.
pub const TIGHTNESS_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub name: String,
    pub m: usize,
    pub delta: f64,
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    /// Row-major, `gamma[i * m + j]` multiplying `a_i b_j`.
    pub gamma: Vec<f64>,
    /// Where the entry came from, e.g. a file name and line.
    pub source: String,
}

impl CatalogEntry {
    pub fn new(
        name: impl Into<String>,
        delta: f64,
        alpha: Vec<f64>,
        beta: Vec<f64>,
        gamma: Vec<f64>,
        source: impl Into<String>,
    ) -> Result<Self> {
        let m = alpha.len();
        if m == 0 || beta.len() != m || gamma.len() != m * m {
            return Err(Error::DimensionMismatch(format!(
                "table needs m >= 1 with |alpha| = |beta| = m and |gamma| = m^2, got {}, {}, {}",
                alpha.len(),
                beta.len(),
                gamma.len()
            )));
        }
        let entry = Self { name: name.into(), m, delta, alpha, beta, gamma, source: source.into() };
        if !entry.coefficients().all(f64::is_finite) {
            return Err(Error::InvalidParameter(format!("entry {} has non-finite coefficients", entry.name)));
        }
        Ok(entry)
    }

    fn coefficients(&self) -> impl Iterator<Item = f64> + '_ {
        std::iter::once(self.delta).chain(self.alpha.iter().copied()).chain(self.beta.iter().copied()).chain(self.gamma.iter().copied())
    }

    pub fn gamma(&self, i: usize, j: usize) -> f64 {
        self.gamma[i * self.m + j]
    }

    /// `B` at outcomes in `{-1, +1}`.
    pub fn evaluate(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut v = self.delta;
        for i in 0..self.m {
            v += self.alpha[i] * a[i] + self.beta[i] * b[i];
            for j in 0..self.m {
                v += self.gamma(i, j) * a[i] * b[j];
            }
        }
        v
    }
}

/// Outcome of [`verify_entry`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub valid_nonnegative: bool,
    pub tight: bool,
    pub min_value: f64,
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::Parse { line, message: message.into() }
}

fn header(line: &str) -> Option<(String, &str)> {
    let rest = line.strip_prefix('#')?;
    let tokens: Vec<&str> = rest.split_whitespace().collect();
    match tokens.as_slice() {
        [name, m] if m.bytes().all(|c| c.is_ascii_digit()) => Some((name.to_string(), m)),
        _ => None,
    }
}

/// Parses every entry in `text`. `source` labels the entries' provenance.
pub fn parse_catalog(text: &str, source: &str) -> Result<Vec<CatalogEntry>> {
    struct Open {
        name: String,
        m: usize,
        start: usize,
        rows: Vec<Vec<f64>>,
    }

    fn close(open: Open, source: &str, last_line: usize) -> Result<CatalogEntry> {
        if open.rows.len() != open.m + 1 {
            return Err(parse_error(
                last_line,
                format!("entry {} ends after {} of {} rows", open.name, open.rows.len(), open.m + 1),
            ));
        }
        let delta = open.rows[0][0];
        let beta = open.rows[0][1..].to_vec();
        let alpha = open.rows[1..].iter().map(|r| r[0]).collect();
        let gamma = open.rows[1..].iter().flat_map(|r| r[1..].iter().copied()).collect();
        CatalogEntry::new(open.name, delta, alpha, beta, gamma, format!("{source}:{}", open.start))
            .map_err(|e| parse_error(open.start, e.to_string()))
    }

    let mut entries = Vec::new();
    let mut open: Option<Open> = None;
    let mut last = 0;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some((name, m)) = header(line) {
                let m: usize = m.parse().map_err(|_| parse_error(line_no, format!("bad setting count {m:?}")))?;
                if m == 0 {
                    return Err(parse_error(line_no, "an entry needs m >= 1"));
                }
                if let Some(prev) = open.take() {
                    entries.push(close(prev, source, line_no)?);
                }
                open = Some(Open { name, m, start: line_no, rows: Vec::with_capacity(m + 1) });
            }
            continue;
        }
        let Some(cur) = open.as_mut() else {
            return Err(parse_error(line_no, "table row outside of an entry (missing `# name m` header)"));
        };
        if cur.rows.len() == cur.m + 1 {
            return Err(parse_error(line_no, format!("entry {} already has {} rows", cur.name, cur.m + 1)));
        }
        let row = line
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| parse_error(line_no, format!("not a number: {t:?}"))))
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != cur.m + 1 {
            return Err(parse_error(line_no, format!("expected {} values, found {}", cur.m + 1, row.len())));
        }
        cur.rows.push(row);
        last = line_no;
    }
    if let Some(prev) = open.take() {
        let end = last.max(prev.start);
        entries.push(close(prev, source, end)?);
    }
    Ok(entries)
}

/// Inverse of [`parse_catalog`]; numbers are written so they parse back bit-exactly.
pub fn serialize_catalog(entries: &[CatalogEntry]) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "# {} {}", e.name, e.m);
        let row = |first: f64, rest: &[f64]| {
            std::iter::once(first).chain(rest.iter().copied()).map(|x| format!("{x:?}")).collect::<Vec<_>>().join(" ")
        };
        let _ = writeln!(out, "{}", row(e.delta, &e.beta));
        for i in 0..e.m {
            let _ = writeln!(out, "{}", row(e.alpha[i], &e.gamma[i * e.m..(i + 1) * e.m]));
        }
    }
    out
}

/// Minimum of `B` over all deterministic `+-1` strategies.
///
/// For each of Bob's `2^m` strategies Alice's minimizing reply is explicit,
/// which gives the same minimum as scanning all `2^(2m)` joint strategies.
pub fn verify_entry(e: &CatalogEntry) -> Result<Verification> {
    if e.m > MAX_VERTEX_SETTINGS {
        return Err(Error::TooLarge { what: "m", value: e.m, limit: MAX_VERTEX_SETTINGS });
    }
    let mut min = f64::INFINITY;
    let mut b = vec![0.0; e.m];
    for bits in 0u64..1 << e.m {
        for (j, x) in b.iter_mut().enumerate() {
            *x = if bits >> j & 1 == 0 { 1.0 } else { -1.0 };
        }
        let mut v = e.delta;
        for j in 0..e.m {
            v += e.beta[j] * b[j];
        }
        for i in 0..e.m {
            let field = e.alpha[i] + (0..e.m).map(|j| e.gamma(i, j) * b[j]).sum::<f64>();
            v -= field.abs();
        }
        min = min.min(v);
    }
    Ok(Verification {
        valid_nonnegative: min >= -TIGHTNESS_TOLERANCE,
        tight: min.abs() <= TIGHTNESS_TOLERANCE,
        min_value: min,
    })
}

/// `B >= 0` rewritten as a normalized inequality with outcomes `+-1/2`:
/// `w = -gamma`, `va = -alpha / 2`, `vb = -beta / 2`, bound `delta / 4`.
///
/// The cached local bound is computed exactly rather than copied from
/// `delta / 4`, so it is also correct for entries that are not tight.
pub fn to_normalized(e: &CatalogEntry) -> Result<BellInequality> {
    let ineq = BellInequality::new(
        e.m,
        e.gamma.iter().map(|g| -g).collect(),
        e.alpha.iter().map(|a| -a / 2.0).collect(),
        e.beta.iter().map(|b| -b / 2.0).collect(),
    )?;
    let lb = local_bound(&ineq)?.value;
    Ok(ineq.with_cached_bound(lb))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CatalogSweepRow {
    pub name: String,
    pub source: String,
    pub local: f64,
    pub quantum: f64,
    pub gap: f64,
    pub seed: u64,
    pub optimum: OptimizedSettings,
}

/// Optimized quantum value of every entry at `spins` spins per party.
///
/// Entry `k` is searched with seed `mix_seed(cfg.seed, k)`.
pub fn catalog_sweep(entries: &[CatalogEntry], spins: u32, cfg: &SearchConfig) -> Result<Vec<CatalogSweepRow>> {
    cfg.validate()?;
    entries
        .iter()
        .enumerate()
        .map(|(k, e)| {
            let ineq = to_normalized(e)?;
            let local = ineq.local_bound().ok_or(Error::MissingLocalBound)?;
            let seed = mix_seed(cfg.seed, k as u64);
            let optimum = optimize_settings(&ineq, spins, &cfg.with_seed(seed))?;
            Ok(CatalogSweepRow {
                name: e.name.clone(),
                source: e.source.clone(),
                local,
                quantum: optimum.value,
                gap: optimum.value - local,
                seed,
                optimum,
            })
        })
        .collect()
}

/// Random tight entry with integer coefficients in `{-1, 0, 1}`: `delta` is
/// set to minus the minimum over deterministic strategies, so `B >= 0` holds
/// with equality at some vertex. Entries with `gamma = 0` are redrawn.
pub fn random_tight_entry(m: usize, seed: u64) -> Result<CatalogEntry> {
    if m == 0 || m > MAX_VERTEX_SETTINGS {
        return Err(Error::TooLarge { what: "m", value: m, limit: MAX_VERTEX_SETTINGS });
    }
    let mut rng = substream(seed, 0);
    loop {
        let mut draw = |k: usize| (0..k).map(|_| f64::from(rng.gen_range(-1i8..=1))).collect::<Vec<f64>>();
        let alpha = draw(m);
        let beta = draw(m);
        let gamma = draw(m * m);
        if gamma.iter().all(|&g| g == 0.0) {
            continue;
        }
        let probe = CatalogEntry::new("probe", 0.0, alpha, beta, gamma, "")?;
        let min = verify_entry(&probe)?.min_value;
        return Ok(CatalogEntry {
            name: format!("random-{m}-{seed:x}"),
            delta: -min,
            source: format!("random_tight_entry(m = {m}, seed = {seed})"),
            ..probe
        });
    }
}
