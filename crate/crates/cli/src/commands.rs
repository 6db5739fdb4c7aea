//! One function per subcommand; each returns the data to emit.

use std::path::Path;

use anyhow::{bail, Context};
use serde_json::json;
use spinbell_core::catalog::{catalog_sweep, parse_catalog, verify_entry};
use spinbell_core::parity::{chsh_value, optimize_chsh, sweep_chi, sweep_n, ChshResult, ChshSettings};
use spinbell_core::search::{mix_seed, monotonicity_check, optimize_settings, random_inequality, scan_random};
use spinbell_core::squeeze::{ghz_overlap, one_axis_twisted, split_state, squeezing_db, wineland_xi2};
use spinbell_core::{local_bound, BellInequality, SearchConfig};

use crate::args::{CatalogCommand, Command, InequalitySource, SqueezeCommand};
use crate::output::{resolve, sig, to_json, write_file, Output, Table};
use crate::ranges::{parse_f64_list, parse_usize_list};
use crate::UsageError;

pub struct Context_<'a> {
    pub cfg: SearchConfig,
    /// Progress and summary lines, kept off the data stream.
    pub log: &'a mut dyn FnMut(String),
}

fn read(path: &Path) -> anyhow::Result<String> {
    std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read {}: {e}", path.display())).into())
}

fn load_inequality(src: &InequalitySource, seed: u64) -> anyhow::Result<BellInequality> {
    if src.chsh {
        return Ok(BellInequality::chsh());
    }
    if let Some(path) = &src.file {
        let text = read(path)?;
        return serde_json::from_str(&text)
            .map_err(|e| UsageError(format!("{}: not a valid inequality: {e}", path.display())).into());
    }
    match src.random {
        Some(m) => Ok(random_inequality(m, seed)?),
        None => bail!(UsageError("one of --chsh, --file, --random is required".into())),
    }
}

fn chsh_table(results: &[ChshResult]) -> Table {
    let mut t = Table::new(&[
        "N", "chi_t", "chsh_value", "theta_a1", "phi_a1", "theta_a2", "phi_a2", "theta_b1", "phi_b1", "theta_b2", "phi_b2", "seed",
    ]);
    for r in results {
        let mut row = vec![r.atoms.to_string(), sig(r.chi_t), sig(r.value)];
        row.extend(r.settings.to_angles().iter().map(|&x| sig(x)));
        row.push(r.seed.to_string());
        t.push(row);
    }
    t
}

pub fn run(command: &Command, ctx: &mut Context_) -> anyhow::Result<Output> {
    let cfg = ctx.cfg;
    match command {
        Command::LocalBound { source } => {
            let ineq = load_inequality(source, cfg.seed)?;
            let lb = local_bound(&ineq)?;
            let mut t = Table::new(&["local_bound"]);
            t.push(vec![sig(lb.value)]);
            Output::new(t, &json!({ "inequality": ineq, "local_bound": lb }))
        }
        Command::QuantumBound { source, spins } => {
            let ineq = load_inequality(source, cfg.seed)?;
            let local = match ineq.local_bound() {
                Some(l) => l,
                None => local_bound(&ineq)?.value,
            };
            let opt = optimize_settings(&ineq, *spins, &cfg)?;
            (ctx.log)(format!("quantum {} local {} gap {}", sig(opt.value), sig(local), sig(opt.value - local)));
            let mut t = Table::new(&["spins", "quantum", "local", "gap", "angles"]);
            let angles: Vec<String> = opt.settings.to_angles().iter().map(|&x| sig(x)).collect();
            t.push(vec![spins.to_string(), sig(opt.value), sig(local), sig(opt.value - local), angles.join(";")]);
            Output::new(t, &json!({ "spins": spins, "local": local, "gap": opt.value - local, "optimum": opt, "config": cfg }))
        }
        Command::Scan { m, count, spins } => {
            let report = scan_random(*m, *count, *spins, &cfg)?;
            (ctx.log)(format!(
                "{} inequalities, best gap {}, {} violations",
                report.count,
                report.best_gap().map_or("n/a".into(), sig),
                report.violations()
            ));
            let mut t = Table::new(&["index", "seed", "local", "quantum", "gap"]);
            for r in &report.rows {
                t.push(vec![r.index.to_string(), r.seed.to_string(), sig(r.local), sig(r.quantum), sig(r.gap)]);
            }
            Output::new(t, &report)
        }
        Command::Monotonicity { m, count, spins } => {
            let list: Vec<u32> = parse_usize_list(spins)?.into_iter().map(|n| n as u32).collect();
            let mut t = Table::new(&["index", "seed", "spins", "value", "non_increasing"]);
            let mut reports = Vec::with_capacity(*count);
            let mut failures = 0;
            for k in 0..*count {
                let seed = mix_seed(cfg.seed, k as u64);
                let ineq = random_inequality(*m, seed)?;
                let report = monotonicity_check(&ineq, &list, &cfg.with_seed(mix_seed(seed, 1)))?;
                failures += usize::from(!report.is_non_increasing());
                for p in &report.points {
                    t.push(vec![k.to_string(), seed.to_string(), p.spins.to_string(), sig(p.value), report.is_non_increasing().to_string()]);
                }
                reports.push(json!({ "index": k, "seed": seed, "inequality": ineq, "report": report }));
            }
            (ctx.log)(format!("{count} inequalities, {failures} with an increase"));
            Output::new(t, &reports)
        }
        Command::Catalog(sub) => catalog(sub, ctx),
        Command::Squeeze(sub) => squeeze(sub, ctx),
        Command::Chsh { n, chi, angles } => {
            let result = match angles {
                Some(text) => {
                    let x = parse_f64_list(text)?;
                    let settings = ChshSettings::from_angles(&x)
                        .map_err(|e| UsageError(format!("--angles: {e}")))?;
                    let state = split_state(&one_axis_twisted(*n, *chi)?, 0.5)?;
                    ChshResult { atoms: *n, chi_t: *chi, value: chsh_value(&state, &settings), settings, seed: cfg.seed }
                }
                None => optimize_chsh(*n, *chi, &cfg)?,
            };
            (ctx.log)(format!("N = {n}, chi_t = {}: CHSH {}", sig(*chi), sig(result.value)));
            Output::new(chsh_table(std::slice::from_ref(&result)), &result)
        }
    }
}

fn catalog(sub: &CatalogCommand, ctx: &mut Context_) -> anyhow::Result<Output> {
    let file = match sub {
        CatalogCommand::Parse { file } | CatalogCommand::Verify { file } | CatalogCommand::Sweep { file, .. } => file,
    };
    let text = read(file)?;
    let entries = parse_catalog(&text, &file.display().to_string())?;
    match sub {
        CatalogCommand::Parse { .. } => {
            let mut t = Table::new(&["name", "m", "delta", "source"]);
            for e in &entries {
                t.push(vec![e.name.clone(), e.m.to_string(), sig(e.delta), e.source.clone()]);
            }
            (ctx.log)(format!("{} entries", entries.len()));
            Output::new(t, &entries)
        }
        CatalogCommand::Verify { .. } => {
            let mut t = Table::new(&["name", "m", "valid_nonnegative", "tight", "min_value"]);
            let mut rows = Vec::new();
            let mut tight = 0;
            for e in &entries {
                let v = verify_entry(e)?;
                tight += usize::from(v.tight && v.valid_nonnegative);
                t.push(vec![e.name.clone(), e.m.to_string(), v.valid_nonnegative.to_string(), v.tight.to_string(), sig(v.min_value)]);
                rows.push(json!({ "name": e.name, "source": e.source, "verification": v }));
            }
            (ctx.log)(format!("{} entries, {tight} tight", entries.len()));
            Output::new(t, &rows)
        }
        CatalogCommand::Sweep { spins, .. } => {
            for e in &entries {
                let v = verify_entry(e)?;
                if !v.valid_nonnegative {
                    bail!("entry {} ({}) is violated by a local strategy (minimum {})", e.name, e.source, sig(v.min_value));
                }
            }
            let rows = catalog_sweep(&entries, *spins, &ctx.cfg)?;
            let worst = rows.iter().map(|r| r.gap).fold(f64::NEG_INFINITY, f64::max);
            (ctx.log)(format!("{} entries, largest gap {}", rows.len(), if rows.is_empty() { "n/a".into() } else { sig(worst) }));
            let mut t = Table::new(&["name", "local", "quantum", "gap", "seed"]);
            for r in &rows {
                t.push(vec![r.name.clone(), sig(r.local), sig(r.quantum), sig(r.gap), r.seed.to_string()]);
            }
            Output::new(t, &rows)
        }
    }
}

fn squeeze(sub: &SqueezeCommand, ctx: &mut Context_) -> anyhow::Result<Output> {
    let cfg = ctx.cfg;
    match sub {
        SqueezeCommand::State { n, chi, transmission, split_dump } => {
            let psi = one_axis_twisted(*n, *chi)?;
            if let Some(path) = split_dump {
                let split = split_state(&psi, *transmission)?;
                let path = resolve(path);
                write_file(&path, &to_json(&split.to_dump(Some(*chi)))?).context("writing the split dump")?;
            }
            let ghz = ghz_overlap(&psi);
            let xi2 = wineland_xi2(&psi).ok();
            (ctx.log)(format!(
                "GHZ overlap {}, xi^2 {}",
                sig(ghz),
                xi2.map_or("undefined".into(), |x| format!("{} ({} dB)", sig(x), sig(squeezing_db(x))))
            ));
            let mut t = Table::new(&["m", "re", "im", "probability"]);
            for (m, c) in psi.amplitudes().iter().enumerate() {
                t.push(vec![m.to_string(), sig(c.re), sig(c.im), sig(c.norm_sqr())]);
            }
            Output::new(
                t,
                &json!({ "atoms": n, "chi_t": chi, "amplitudes": psi, "ghz_overlap": ghz, "xi2": xi2, "mean_spin": psi.mean_spin() }),
            )
        }
        SqueezeCommand::Xi2 { n, chi } => {
            let ns = parse_usize_list(n)?;
            let chis = parse_f64_list(chi)?;
            let mut t = Table::new(&["N", "chi_t", "xi2", "squeezing_db"]);
            let mut rows = Vec::new();
            for &n in &ns {
                for &c in &chis {
                    let xi2 = wineland_xi2(&one_axis_twisted(n, c)?).ok();
                    let cell = |f: fn(f64) -> f64| xi2.map_or("undefined".into(), |x| sig(f(x)));
                    t.push(vec![n.to_string(), sig(c), cell(|x| x), cell(squeezing_db)]);
                    rows.push(json!({ "N": n, "chi_t": c, "xi2": xi2, "squeezing_db": xi2.map(squeezing_db) }));
                }
            }
            Output::new(t, &rows)
        }
        SqueezeCommand::SweepChi { n, chi } => {
            let grid = parse_f64_list(chi)?;
            let results = sweep_chi(*n, &grid, &cfg)?;
            let best = results.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
            (ctx.log)(format!("{} points, best CHSH {}", results.len(), sig(best)));
            Output::new(chsh_table(&results), &results)
        }
        SqueezeCommand::SweepN { chi, n } => {
            let ns = parse_usize_list(n)?;
            let results = sweep_n(*chi, &ns, &cfg)?;
            let best = results.iter().map(|r| r.value).fold(f64::NEG_INFINITY, f64::max);
            (ctx.log)(format!("{} points, best CHSH {}", results.len(), sig(best)));
            Output::new(chsh_table(&results), &results)
        }
    }
}
