//! End-to-end acceptance run: one PASS/FAIL line per criterion, nonzero
//! exit status if any criterion fails.

#[path = "../../core/tests/oracles/mod.rs"]
mod oracles;

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2, TAU};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use oracles::{local_brute_force, FockOracle};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spinbell_core::catalog::{catalog_sweep, parse_catalog, random_tight_entry, verify_entry};
use spinbell_core::parity::{sweep_chi, sweep_n, ParityEvaluator};
use spinbell_core::search::monotonicity_check;
use spinbell_core::squeeze::squeezing_db;
use spinbell_core::{
    local_bound, one_axis_twisted, random_inequality, scan_random, split_state, wineland_xi2, BellInequality, Direction,
    SearchConfig,
};

/// CHSH at chi_t = pi/2 for N = 4, 6, ..., 20, recorded from a validated run
/// with seed 1, 6 restarts and 3000 evaluations per restart.
const CHSH_VS_N: [f64; 9] = [2.514364, 2.600216, 2.648537, 2.679748, 2.701638, 2.717865, 2.730386, 2.740347, 2.748462];

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn cfg(seed: u64, restarts: usize, max_iterations: usize) -> SearchConfig {
    SearchConfig { restarts, max_iterations, tolerance: 1e-11, seed }
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn spinbell(args: &[&str]) -> Result<String, String> {
    let out = Command::new(env!("CARGO_BIN_EXE_spinbell"))
        .args(args)
        .env_remove("SPINBELL_OUT_DIR")
        .output()
        .map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(String::from_utf8_lossy(&out.stderr).into_owned());
    }
    String::from_utf8(out.stdout).map_err(|e| e.to_string())
}

/// Column `name` of the first data row of a CSV document.
fn csv_field(csv: &str, name: &str) -> Result<f64, String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().ok_or("empty output")?.split(',').collect();
    let col = header.iter().position(|h| *h == name).ok_or(format!("no column {name}"))?;
    let row: Vec<&str> = lines.next().ok_or("no data row")?.split(',').collect();
    row[col].parse().map_err(|e| format!("{e}"))
}

fn ranks(x: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..x.len()).collect();
    idx.sort_by(|&a, &b| x[a].total_cmp(&x[b]));
    let mut r = vec![0.0; x.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && x[idx[j + 1]] == x[idx[i]] {
            j += 1;
        }
        for &k in &idx[i..=j] {
            r[k] = (i + j) as f64 / 2.0;
        }
        i = j + 1;
    }
    r
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn spearman(a: &[f64], b: &[f64]) -> f64 {
    pearson(&ranks(a), &ranks(b))
}

fn tsirelson() -> Result<Verdict, String> {
    let out = spinbell(&["quantum-bound", "--chsh", "--spins", "1", "--restarts", "20", "--seed", "1"])?;
    let q = csv_field(&out, "quantum")?;
    Ok(verdict((q - SQRT_2 / 2.0).abs() <= 1e-5, format!("quantum value {q:.9}")))
}

fn local_exactness() -> Result<Verdict, String> {
    let chsh = local_bound(&BellInequality::chsh()).map_err(|e| e.to_string())?.value;
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0_f64;
    for trial in 0..500 {
        let m = 1 + trial % 4;
        let w: Vec<f64> = (0..m * m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let va: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let vb: Vec<f64> = (0..m).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let brute = local_brute_force(m, &w, &va, &vb, 2);
        let ineq = BellInequality::new(m, w, va, vb).map_err(|e| e.to_string())?;
        worst = worst.max((local_bound(&ineq).map_err(|e| e.to_string())?.value - brute).abs());
    }
    Ok(verdict(chsh == 0.5 && worst < 1e-12, format!("CHSH bound {chsh}, max deviation {worst:.2e} over 500")))
}

fn i3322() -> Result<Verdict, String> {
    let file = fixture("i3322.txt");
    let out = spinbell(&["catalog", "sweep", "--file", file.to_str().unwrap(), "--spins", "2", "--restarts", "50", "--seed", "3"])?;
    let local = csv_field(&out, "local")?;
    let gap = csv_field(&out, "gap")?;
    Ok(verdict(gap <= 1e-6 && (local - 1.0).abs() < 1e-12, format!("local {local}, gap {gap:.3e}")))
}

fn catalog() -> Result<Verdict, String> {
    let text = std::fs::read_to_string(fixture("chsh.txt")).map_err(|e| e.to_string())?;
    let mut entries = parse_catalog(&text, "chsh.txt").map_err(|e| e.to_string())?;
    for seed in 0..12 {
        entries.push(random_tight_entry(4, seed).map_err(|e| e.to_string())?);
    }
    for e in &entries {
        let v = verify_entry(e).map_err(|e| e.to_string())?;
        if !(v.valid_nonnegative && v.tight) {
            return Ok(verdict(false, format!("entry {} failed validation", e.name)));
        }
    }
    let rows = catalog_sweep(&entries, 2, &cfg(4, 8, 5000)).map_err(|e| e.to_string())?;
    let worst = rows.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
    Ok(verdict(worst <= 1e-6, format!("{} entries, largest gap {worst:.3e}", rows.len())))
}

fn random_scan() -> Result<Verdict, String> {
    let mut parts = Vec::new();
    let mut pass = true;
    for (m, seed) in [(5, 5), (6, 6)] {
        let report = scan_random(m, 10_000, 2, &cfg(seed, 2, 4000)).map_err(|e| e.to_string())?;
        let best = report.best_gap().unwrap_or(f64::INFINITY);
        pass &= best <= 1e-6;
        parts.push(format!("m={m}: best gap {best:.3e}"));
    }
    Ok(verdict(pass, parts.join(", ")))
}

fn monotonicity() -> Result<Verdict, String> {
    let mut worst = f64::NEG_INFINITY;
    for k in 0..20u64 {
        let ineq = random_inequality(3, 600 + k).map_err(|e| e.to_string())?;
        let report = monotonicity_check(&ineq, &[1, 2, 3], &cfg(k, 8, 5000)).map_err(|e| e.to_string())?;
        let v = report.values();
        worst = worst.max((v[1] - v[0]).max(v[2] - v[1]));
    }
    Ok(verdict(worst <= 1e-4, format!("largest increase {worst:.3e} over 20 inequalities")))
}

fn pipeline_oracle() -> Result<Verdict, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut amp = 0.0_f64;
    let mut prob = 0.0_f64;
    for case in 0..25 {
        let n = 1 + case % 4;
        let chi = rng.gen_range(0.0..PI);
        let oracle = FockOracle::new(n, chi, 0.5);
        let split = split_state(&one_axis_twisted(n, chi).map_err(|e| e.to_string())?, 0.5).map_err(|e| e.to_string())?;
        for m in 0..=n {
            for k in 0..=m {
                for l in 0..=n - m {
                    amp = amp.max((split.amplitude(m, k, l) - oracle.amplitude(m, k, l)).norm());
                }
            }
        }
        let a = (rng.gen_range(0.0..PI), rng.gen_range(0.0..TAU));
        let b = (rng.gen_range(0.0..PI), rng.gen_range(0.0..TAU));
        let jd = ParityEvaluator::new(&split).joint_distribution(
            Direction::new(a.0, a.1).map_err(|e| e.to_string())?,
            Direction::new(b.0, b.1).map_err(|e| e.to_string())?,
        );
        for ((na, ra, rb), p) in oracle.probabilities(a, b) {
            prob = prob.max((jd.probability(na, ra, rb) - p).abs());
        }
    }
    Ok(verdict(amp < 1e-10 && prob < 1e-10, format!("max amplitude error {amp:.2e}, max probability error {prob:.2e}")))
}

/// First interior local maximum along the grid, or the global maximum if
/// the curve is monotone.
fn first_peak(values: &[f64]) -> f64 {
    (1..values.len().saturating_sub(1))
        .find(|&i| values[i] >= values[i - 1] && values[i] > values[i + 1])
        .map_or_else(|| values.iter().copied().fold(f64::NEG_INFINITY, f64::max), |i| values[i])
}

fn chi_landscape() -> Result<Verdict, String> {
    let grid: Vec<f64> = (1..=40).map(|k| k as f64 * FRAC_PI_2 / 40.0).collect();
    let mut peaks = Vec::new();
    let mut maxima = Vec::new();
    for n in [6, 10] {
        let values: Vec<f64> =
            sweep_chi(n, &grid, &cfg(1, 6, 3000)).map_err(|e| e.to_string())?.iter().map(|r| r.value).collect();
        maxima.push(values.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        peaks.push(first_peak(&values));
    }
    Ok(verdict(
        maxima.iter().all(|&v| v > 2.0) && peaks[1] > peaks[0],
        format!("max {:.6} / {:.6}, small-chi peak N=6 {:.6}, N=10 {:.6}", maxima[0], maxima[1], peaks[0], peaks[1]),
    ))
}

fn n_trend() -> Result<Verdict, String> {
    let atoms: Vec<usize> = (4..=20).step_by(2).collect();
    let values: Vec<f64> =
        sweep_n(FRAC_PI_2, &atoms, &cfg(1, 6, 3000)).map_err(|e| e.to_string())?.iter().map(|r| r.value).collect();
    let non_decreasing = values.windows(2).all(|w| w[1] >= w[0] - 5e-3);
    let last = values[values.len() - 1];
    let gaps: Vec<f64> = values[values.len() - 3..].iter().map(|v| 2.0 * SQRT_2 - v).collect();
    let closing = gaps[1] < gaps[0] && gaps[2] < gaps[1];
    let drift = values.iter().zip(CHSH_VS_N).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(verdict(
        non_decreasing && last > 2.5 && closing && drift < 2e-6,
        format!("N=4 {:.6} .. N=20 {last:.6}, drift from recorded values {drift:.1e}", values[0]),
    ))
}

fn squeezing_trend() -> Result<Verdict, String> {
    let xi2 = wineland_xi2(&one_axis_twisted(500, 0.006).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let db = squeezing_db(xi2);
    let atoms: Vec<usize> = (10..=60).step_by(2).collect();
    let values: Vec<f64> =
        sweep_n(0.006, &atoms, &cfg(1, 3, 2000)).map_err(|e| e.to_string())?.iter().map(|r| r.value).collect();
    let n: Vec<f64> = atoms.iter().map(|&a| a as f64).collect();
    let rho = spearman(&n, &values);
    Ok(verdict(
        (db - 10.0).abs() <= 0.5 && rho > 0.9,
        format!("{db:.3} dB at N=500, Spearman {rho:.4} over N=10..60 (CHSH {:.6} .. {:.6})", values[0], values[values.len() - 1]),
    ))
}

fn determinism() -> Result<Verdict, String> {
    let dir = std::env::temp_dir().join(format!("spinbell-acceptance-{}", std::process::id()));
    std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
    let i3322 = fixture("i3322.txt");
    let runs: [&[&str]; 4] = [
        &["scan", "--m", "4", "--count", "20", "--spins", "2", "--restarts", "2", "--max-evals", "3000", "--seed", "11"],
        &["catalog", "sweep", "--file", i3322.to_str().unwrap(), "--restarts", "4", "--seed", "11"],
        &["squeeze", "sweep-n", "--chi", "1.5707963267948966", "--n", "4:8:2", "--restarts", "2", "--max-evals", "2000", "--format", "json"],
        &["monotonicity", "--m", "3", "--count", "2", "--restarts", "3", "--max-evals", "2000"],
    ];
    let mut identical = 0;
    for (k, args) in runs.iter().enumerate() {
        let mut files = Vec::new();
        for rep in 0..2 {
            let out = dir.join(format!("run{k}-{rep}.dat"));
            spinbell(&[args, &["--out", out.to_str().unwrap()][..]].concat())?;
            files.push(std::fs::read(&out).map_err(|e| e.to_string())?);
        }
        identical += usize::from(!files[0].is_empty() && files[0] == files[1]);
    }
    std::fs::remove_dir_all(&dir).ok();
    Ok(verdict(identical == runs.len(), format!("{identical}/{} commands byte-identical across repeats", runs.len())))
}

type Criterion = (&'static str, Duration, fn() -> Result<Verdict, String>);

fn main() {
    let criteria: [Criterion; 11] = [
        ("Tsirelson value at N=1", Duration::from_secs(10), tsirelson),
        ("local bound exactness", Duration::from_secs(120), local_exactness),
        ("I3322 not violated at N=2", Duration::from_secs(300), i3322),
        ("catalog sweep at N=2", Duration::from_secs(1800), catalog),
        ("random scan m=5,6 at N=2", Duration::from_secs(3600), random_scan),
        ("monotonicity in N", Duration::from_secs(900), monotonicity),
        ("pipeline vs Fock oracle", Duration::from_secs(60), pipeline_oracle),
        ("CHSH vs chi_t landscape", Duration::from_secs(1800), chi_landscape),
        ("CHSH vs N at chi_t=pi/2", Duration::from_secs(1800), n_trend),
        ("squeezing anchor and small-chi trend", Duration::from_secs(7200), squeezing_trend),
        ("determinism", Duration::from_secs(600), determinism),
    ];
    let mut failed = 0;
    for (k, (name, limit, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = run();
        let elapsed = start.elapsed();
        let (pass, detail) = match result {
            Ok(v) => (v.pass && elapsed <= *limit, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        failed += usize::from(!pass);
        println!(
            "{} {:>2} {name}: {detail} [{:.1} s, limit {} s]",
            if pass { "PASS" } else { "FAIL" },
            k + 1,
            elapsed.as_secs_f64(),
            limit.as_secs()
        );
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}
