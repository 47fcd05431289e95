use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use redundancy_core::codec::{decode, CodedJob, CodingMatrix, GaloisField, Gf256, Gf65536};
use redundancy_core::curve::uniform_grid;
use redundancy_core::figure::RedundancyComparison;
use redundancy_core::meanfield::{solve_virtual_tail, MeanFieldProblem};
use redundancy_core::orderstats::{rep_batch_tail, rep_copy_tail, rep_single_tail};
use redundancy_core::selfcheck::{self, Scale};
use redundancy_core::sim::stats::{ecdf_tail, sup_distance, MIN_SAMPLES};
use redundancy_core::sim::{pool, run as simulate_cell, Policy, SimConfig, SimResult};
use redundancy_core::{SystemParams, TailCurve};

use crate::chart::render_svg;
use crate::config::{ConfigArgs, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::manifest::Manifest;
use crate::table::ComparisonTable;
use crate::CodecArgs;

/// Confidence level of the ECDF bands is `1 - BAND_DELTA`.
pub const BAND_DELTA: f64 = 0.01;

fn parse_list<T: std::str::FromStr>(flag: &str, value: &str) -> Result<Vec<T>> {
    let items: Option<Vec<T>> = value.split(',').map(|s| s.trim().parse().ok()).collect();
    match items {
        Some(items) if !items.is_empty() => Ok(items),
        _ => Err(CliError::Validation(format!("`--{flag}`: cannot parse {value:?}"))),
    }
}

fn prepare_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

/// Writes the table, its chart and returns both paths.
fn emit(table: &ComparisonTable, dir: &Path, stem: &str) -> Result<Vec<PathBuf>> {
    let csv = dir.join(format!("{stem}.csv"));
    let svg = dir.join(format!("{stem}.svg"));
    table.save(&csv)?;
    fs::write(&svg, render_svg(table)).map_err(CliError::io(&svg))?;
    println!("wrote {} and {}", csv.display(), svg.display());
    Ok(vec![csv, svg])
}

fn grid(config: &ExperimentConfig) -> Vec<f64> {
    uniform_grid(config.t_max, config.step)
}

pub fn analytic(args: &ConfigArgs, grid_flag: Option<&str>) -> Result<()> {
    let config = args.resolve()?;
    let times = match grid_flag {
        Some(text) => {
            let times: Vec<f64> = parse_list("grid", text)?;
            if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
                return Err(CliError::Validation(format!(
                    "`--grid`: times must be non-negative and strictly increasing, got {text:?}"
                )));
            }
            times
        }
        None => grid(&config),
    };
    if config.d < 2 {
        return Err(CliError::Validation(format!(
            "`d`: the replication closed form needs d >= 2, got {}",
            config.d
        )));
    }
    let params = SystemParams::mean_field(config.lambda, config.n, 0, config.d)?;
    let d = config.d;
    let n = f64::from(config.n);

    let column = |f: &dyn Fn(f64) -> redundancy_core::Result<f64>| -> Result<Vec<Option<f64>>> {
        times.iter().map(|&t| Ok(Some(f(t)?))).collect()
    };
    let mut table = ComparisonTable::new(config.lambda, times.clone())?
        .with_meta("n", config.n)?
        .with_meta("d", d)?;
    table.push_column(format!("rep_d{d}"), column(&|t| rep_batch_tail(&params, t))?)?;
    table.push_column(format!("rep_job_d{d}"), column(&|t| rep_single_tail(&params, t))?)?;
    table.push_column(format!("rep_copy_d{d}"), column(&|t| rep_copy_tail(&params, t))?)?;
    table.push_column(
        format!("rep_lead_d{d}"),
        column(&|t| Ok((n * rep_single_tail(&params, t)?).min(1.0)))?,
    )?;

    prepare_dir(&config.out_dir)?;
    let mut manifest = Manifest::new("analytic", config.to_lines());
    if let Some(text) = grid_flag {
        manifest.parameters.push(("grid".into(), text.into()));
    }
    manifest.outputs = emit(&table, &config.out_dir, "analytic")?;
    manifest.write(&config.out_dir)?;
    Ok(())
}

pub fn meanfield(args: &ConfigArgs, allow_overload: bool) -> Result<()> {
    let config = args.resolve()?;
    let problems = config
        .m
        .iter()
        .map(|&m| {
            let params = SystemParams::mean_field(config.lambda, config.n, m, config.d)?;
            let problem = MeanFieldProblem::new(params, config.t_max, config.step)?;
            match problem.load_warning() {
                Some(warning) if !allow_overload => Err(CliError::Validation(format!(
                    "`lambda`: {warning}; pass --allow-overload to continue"
                ))),
                _ => Ok(problem),
            }
        })
        .collect::<Result<Vec<_>>>()?;

    let mut table = ComparisonTable::new(config.lambda, grid(&config))?.with_meta("n", config.n)?;
    for problem in &problems {
        let m = problem.params().m();
        let solution = solve_virtual_tail(problem)?;
        table.push_curve(format!("virtual_m{m}"), &solution.virtual_tail)?;
        table.push_curve(format!("mds_m{m}"), &solution.batch_tail)?;
    }

    prepare_dir(&config.out_dir)?;
    let mut manifest = Manifest::new("meanfield", config.to_lines());
    manifest.parameters.push(("allow_overload".into(), allow_overload.to_string()));
    manifest.outputs = emit(&table, &config.out_dir, "meanfield")?;
    manifest.write(&config.out_dir)?;
    Ok(())
}

/// One simulation run of the experiment grid.
#[derive(Debug, Clone)]
struct Cell {
    label: String,
    config: SimConfig,
}

fn build_cells(config: &ExperimentConfig) -> Result<Vec<Cell>> {
    if config.seeds.is_empty() {
        return Err(CliError::Validation("`seeds`: at least one seed is required".into()));
    }
    let mut cells = Vec::new();
    for &policy in &config.policies {
        let ms: Vec<u32> = match policy {
            Policy::Replication => vec![0],
            Policy::Mds => config.m.clone(),
        };
        for m in ms {
            let params = SystemParams::new(config.lambda, config.n, m, config.d, config.k)?;
            for &seed in &config.seeds {
                let sim = SimConfig::new(params, policy, seed)
                    .with_horizon(config.horizon, config.warmup)
                    .with_probe_rate(config.probe_rate)
                    .with_removal(config.removal);
                // Load warnings are logged again when the cell runs.
                sim.validate()?;
                cells.push(Cell {
                    label: policy.label(&params),
                    config: sim,
                });
            }
        }
    }
    Ok(cells)
}

/// Theory curve for a simulated label, if one exists.
fn theory(config: &SimConfig, t_max: f64, step: f64) -> Result<Option<TailCurve>> {
    let p = config.params;
    match config.policy {
        Policy::Replication if p.d() < 2 => Ok(None),
        Policy::Replication => {
            let params = SystemParams::mean_field(p.lambda(), p.n(), 0, p.d())?;
            Ok(Some(TailCurve::from_fn(uniform_grid(t_max, step), |t| {
                rep_batch_tail(&params, t)
            })?))
        }
        Policy::Mds => {
            let params = SystemParams::mean_field(p.lambda(), p.n(), p.m(), p.d())?;
            let problem = MeanFieldProblem::new(params, t_max, step)?;
            Ok(Some(solve_virtual_tail(&problem)?.batch_tail))
        }
    }
}

fn write_samples(path: &Path, header: &str, samples: &[f64]) -> Result<()> {
    let mut text = format!("{header}\n");
    for s in samples {
        text.push_str(&format!("{s:?}\n"));
    }
    fs::write(path, text).map_err(CliError::io(path))
}

/// Adds `sim_<label>_lo/mid/hi` columns, empty when too few samples.
fn push_ecdf(table: &mut ComparisonTable, label: &str, sorted: &[f64]) -> Result<()> {
    let estimates: Vec<_> = table
        .times()
        .iter()
        .map(|&t| (sorted.len() >= MIN_SAMPLES).then(|| ecdf_tail(sorted, t, BAND_DELTA)).transpose())
        .collect::<redundancy_core::Result<_>>()?;
    table.push_column(format!("sim_{label}_lo"), estimates.iter().map(|e| e.map(|e| e.lo)).collect())?;
    table.push_column(format!("sim_{label}_mid"), estimates.iter().map(|e| e.map(|e| e.value)).collect())?;
    table.push_column(format!("sim_{label}_hi"), estimates.iter().map(|e| e.map(|e| e.hi)).collect())?;
    Ok(())
}

pub fn simulate(args: &ConfigArgs, seed_flag: &str) -> Result<()> {
    simulate_with(args, seed_flag, simulate_cell)
}

/// `simulate` with the per-cell runner supplied by the caller.
fn simulate_with(
    args: &ConfigArgs,
    seed_flag: &str,
    runner: impl Fn(&SimConfig) -> redundancy_core::Result<SimResult> + Sync,
) -> Result<()> {
    let mut config = args.resolve()?;
    config.seeds = parse_list("seed", seed_flag)?;
    let cells = build_cells(&config)?;
    prepare_dir(&config.out_dir)?;
    let cell_dir = config.out_dir.join("cells");
    prepare_dir(&cell_dir)?;

    log::info!("running {} cells", cells.len());
    let outcomes: Vec<(Cell, redundancy_core::Result<SimResult>)> = cells
        .into_par_iter()
        .map(|cell| {
            let result = runner(&cell.config);
            (cell, result)
        })
        .collect();

    let mut manifest = Manifest::new("simulate", config.to_lines());
    // Successful runs grouped by label, in first-seen order.
    let mut by_label: Vec<(String, SimConfig, Vec<SimResult>)> = Vec::new();
    let mut failed = 0;
    for (cell, outcome) in outcomes {
        let seed = cell.config.seed;
        match outcome {
            Ok(result) => {
                let stem = format!("{}_seed{seed}", cell.label);
                let batch = cell_dir.join(format!("{stem}_batch.csv"));
                let probe = cell_dir.join(format!("{stem}_probe.csv"));
                write_samples(&batch, "batch_completion", &result.batch_completion_samples)?;
                write_samples(&probe, "probe_sojourn", &result.probe_sojourn_samples)?;
                println!(
                    "{:<10} seed {seed:<6} batches {:<8} mean completion {:.4}  probes {:<7} mean sojourn {:.4}",
                    cell.label,
                    result.counts.recorded_batches,
                    result.mean_batch_completion(),
                    result.counts.probes,
                    result.mean_probe_sojourn()
                );
                manifest.outputs.extend([batch, probe]);
                match by_label.iter_mut().find(|(label, _, _)| *label == cell.label) {
                    Some(group) => group.2.push(result),
                    None => by_label.push((cell.label, cell.config, vec![result])),
                }
            }
            Err(e) => {
                failed += 1;
                eprintln!("cell {} seed {seed} failed: {e}", cell.label);
                manifest.notes.push(format!("cell {} seed {seed} failed: {e}", cell.label));
            }
        }
    }

    let mut table = ComparisonTable::new(config.lambda, grid(&config))?
        .with_meta("n", config.n)?
        .with_meta("k", config.k)?
        .with_meta("seeds", config.seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(" "))?
        .with_meta("band_confidence", 1.0 - BAND_DELTA)?;
    for (label, sim, results) in &by_label {
        let pooled = pool(results);
        match theory(sim, config.t_max, config.step) {
            Ok(Some(curve)) => {
                let gap = sup_distance(&pooled.batch_completion_samples, |t| curve.at(t));
                let note = format!(
                    "{label}: sup distance to theory {gap:.4} over {} samples",
                    pooled.batch_completion_samples.len()
                );
                println!("{note}");
                manifest.notes.push(note);
                table.push_curve(label.clone(), &curve)?;
            }
            Ok(None) => manifest.notes.push(format!("{label}: no closed-form theory curve")),
            Err(e) => {
                log::warn!("{label}: theory curve unavailable: {e}");
                manifest.notes.push(format!("{label}: theory curve unavailable: {e}"));
            }
        }
        push_ecdf(&mut table, label, &pooled.batch_completion_samples)?;
    }
    manifest.outputs.extend(emit(&table, &config.out_dir, "comparison")?);
    manifest.write(&config.out_dir)?;

    if failed > 0 {
        return Err(CliError::Runtime(format!("{failed} simulation cell(s) failed")));
    }
    Ok(())
}

/// Per simulated label: largest gap between ECDF and theory, and the share
/// of grid points where the theory lies inside the band.
#[derive(Debug, Clone, PartialEq)]
pub struct Agreement {
    pub label: String,
    pub max_gap: f64,
    pub inside_band: f64,
    pub points: usize,
}

pub fn agreement(table: &ComparisonTable) -> Vec<Agreement> {
    let mut out = Vec::new();
    for column in table.columns() {
        let Some(label) = column.name.strip_prefix("sim_").and_then(|s| s.strip_suffix("_mid")) else {
            continue;
        };
        let (Some(theory), Some(lo), Some(hi)) = (
            table.column(label),
            table.column(&format!("sim_{label}_lo")),
            table.column(&format!("sim_{label}_hi")),
        ) else {
            continue;
        };
        let (mut max_gap, mut inside, mut points) = (0.0f64, 0usize, 0usize);
        for i in 0..table.times().len() {
            if let (Some(th), Some(mid), Some(l), Some(h)) = (theory.values[i], column.values[i], lo.values[i], hi.values[i])
            {
                points += 1;
                max_gap = max_gap.max((th - mid).abs());
                if (l..=h).contains(&th) {
                    inside += 1;
                }
            }
        }
        if points > 0 {
            out.push(Agreement {
                label: label.into(),
                max_gap,
                inside_band: inside as f64 / points as f64,
                points,
            });
        }
    }
    out
}

pub fn compare(path: &Path, chart: Option<&Path>) -> Result<()> {
    let table = ComparisonTable::load(path)?;
    println!("lambda = {}", table.meta_value("lambda").unwrap_or("?"));
    let rows = agreement(&table);
    if rows.is_empty() {
        println!("no simulation column with a matching theory column");
    }
    for row in &rows {
        println!(
            "{:<10} max |ecdf - theory| {:.4}  theory inside band at {:.1}% of {} points",
            row.label,
            row.max_gap,
            100.0 * row.inside_band,
            row.points
        );
    }
    if let Some(chart) = chart {
        fs::write(chart, render_svg(&table)).map_err(CliError::io(chart))?;
        println!("wrote {}", chart.display());
    }
    Ok(())
}

pub fn fig1(args: &ConfigArgs, simulate: bool, seed_flag: Option<&str>, sim_m: &str) -> Result<()> {
    const N: u32 = 3;
    const D: u32 = 3;
    const MS: [u32; 5] = [2, 3, 4, 5, 6];
    let mut config = args.resolve()?;
    config.n = N;
    config.d = D;
    config.m = MS.to_vec();
    let figure = RedundancyComparison::compute(config.lambda, N, D, &MS, config.t_max, config.step)?;

    let mut table = ComparisonTable::new(config.lambda, figure.replication.times().to_vec())?
        .with_meta("n", N)?
        .with_meta("d", D)?;
    table.push_curve(format!("rep_d{D}"), &figure.replication)?;
    for (m, curve) in &figure.mds {
        table.push_curve(format!("mds_m{m}"), curve)?;
    }

    let mut manifest = Manifest::new("fig1", config.to_lines());
    for m in MS {
        let crossings = figure.crossings(m).unwrap_or(0);
        let dominates = figure.mds_dominates(m).unwrap_or(false);
        let note = format!("m={m}: {crossings} crossing(s) with replication; MDS <= replication everywhere: {dominates}");
        println!("{note}");
        manifest.notes.push(note);
    }

    if simulate {
        let seeds = seed_flag.ok_or_else(|| CliError::Validation("`--seed`: required with --simulate".into()))?;
        config.seeds = parse_list("seed", seeds)?;
        config.m = parse_list("sim-m", sim_m)?;
        config.policies = vec![Policy::Replication, Policy::Mds];
        let cells = build_cells(&config)?;
        let results: Vec<(Cell, SimResult)> = cells
            .into_par_iter()
            .map(|cell| simulate_cell(&cell.config).map(|r| (cell, r)))
            .collect::<redundancy_core::Result<_>>()?;
        let mut labels: Vec<String> = Vec::new();
        for (cell, _) in &results {
            if !labels.contains(&cell.label) {
                labels.push(cell.label.clone());
            }
        }
        for label in labels {
            let runs: Vec<SimResult> =
                results.iter().filter(|(c, _)| c.label == label).map(|(_, r)| r.clone()).collect();
            push_ecdf(&mut table, &label, &pool(&runs).batch_completion_samples)?;
        }
        manifest.parameters.push(("sim_m".into(), sim_m.into()));
    }

    prepare_dir(&config.out_dir)?;
    manifest.outputs = emit(&table, &config.out_dir, "fig1")?;
    manifest.write(&config.out_dir)?;
    Ok(())
}

fn codec_round_trip<F: GaloisField>(args: &CodecArgs) -> Result<()> {
    let n = args.n;
    let m = args.m;
    if n == 0 {
        return Err(CliError::Validation("`--n`: must be at least 1".into()));
    }
    let message = args.message.as_bytes();
    let chunk = message.len().div_ceil(n).max(1).next_multiple_of(F::SYMBOL_BYTES);
    let jobs: Vec<Vec<u8>> = (0..n)
        .map(|i| {
            let mut job: Vec<u8> = message.iter().skip(i * chunk).take(chunk).copied().collect();
            job.resize(chunk, 0);
            job
        })
        .collect();
    let matrix = CodingMatrix::<F>::new(n, m, args.scheme, args.seed)?;
    let coded = matrix.encode(0, &jobs)?;

    let erased: Vec<usize> = match &args.erase {
        Some(list) => {
            let erased: Vec<usize> = parse_list("erase", list)?;
            if let Some(bad) = erased.iter().find(|&&i| i >= n + m) {
                return Err(CliError::Validation(format!("`--erase`: index {bad} is out of range 0..{}", n + m)));
            }
            erased
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
            let mut picked = sample(&mut rng, n + m, m).into_vec();
            picked.sort_unstable();
            picked
        }
    };
    let survivors: Vec<CodedJob<F>> = coded.iter().filter(|c| !erased.contains(&c.index)).cloned().collect();
    println!(
        "{} scheme over GF({}): {n} source jobs of {chunk} bytes, {} coded jobs, erased {erased:?}",
        args.scheme,
        F::ORDER,
        n + m
    );
    let decoded = decode(&survivors)?;
    let mut recovered: Vec<u8> = decoded.concat();
    recovered.truncate(message.len());
    if recovered != message {
        return Err(CliError::Runtime("decoded payload differs from the source".into()));
    }
    println!("recovered {:?} from {} coded jobs", String::from_utf8_lossy(&recovered), survivors.len());
    Ok(())
}

pub fn codec_demo(args: &CodecArgs) -> Result<()> {
    match args.field.as_str() {
        "gf256" => codec_round_trip::<Gf256>(args),
        "gf65536" => codec_round_trip::<Gf65536>(args),
        other => Err(CliError::Validation(format!("`--field`: expected gf256 or gf65536, got {other:?}"))),
    }
}

pub fn selftest(full: bool) -> Result<()> {
    let scale = if full { Scale::Full } else { Scale::Quick };
    let checks = selfcheck::run_all(scale);
    for check in &checks {
        println!("{check}");
    }
    let failed = checks.iter().filter(|c| !c.passed).count();
    println!("{} passed, {failed} failed", checks.len() - failed);
    if failed > 0 {
        return Err(CliError::SelftestFailed {
            failed,
            total: checks.len(),
        });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use redundancy_core::Error;

    use super::*;

    #[test]
    fn failed_cell_spares_the_others() {
        let dir = tempfile::tempdir().unwrap();
        let args = ConfigArgs {
            lambda: Some("0.5".into()),
            n: Some("1".into()),
            m: Some("0".into()),
            d: Some("2".into()),
            k: Some("50".into()),
            horizon: Some("3000".into()),
            warmup: Some("500".into()),
            t_max: Some("5".into()),
            step: Some("0.1".into()),
            out_dir: Some(dir.path().display().to_string()),
            ..Default::default()
        };
        let err = simulate_with(&args, "1,2", |c| {
            if c.seed == 2 && c.policy == Policy::Mds {
                Err(Error::EventOverflow { pending: 0, t: 0.0 })
            } else {
                simulate_cell(c)
            }
        })
        .unwrap_err();
        assert_eq!(err.exit_code(), 2);
        let cells = dir.path().join("cells");
        assert!(cells.join("mds_m0_seed1_batch.csv").exists());
        assert!(!cells.join("mds_m0_seed2_batch.csv").exists());
        assert!(cells.join("rep_d2_seed2_batch.csv").exists());
        let table = ComparisonTable::load(&dir.path().join("comparison.csv")).unwrap();
        assert!(table.column("sim_mds_m0_mid").is_some());
        let manifest = fs::read_to_string(dir.path().join("manifest.txt")).unwrap();
        assert!(manifest.contains("cell mds_m0 seed 2 failed"));
    }

    #[test]
    fn agreement_pairs_columns() {
        let mut t = ComparisonTable::new(0.5, vec![0.0, 1.0, 2.0]).unwrap();
        t.push_column("rep_d2", vec![Some(1.0), Some(0.5), Some(0.2)]).unwrap();
        t.push_column("sim_rep_d2_lo", vec![Some(0.9), Some(0.45), None]).unwrap();
        t.push_column("sim_rep_d2_mid", vec![Some(1.0), Some(0.47), None]).unwrap();
        t.push_column("sim_rep_d2_hi", vec![Some(1.0), Some(0.49), None]).unwrap();
        t.push_column("sim_mds_m1_mid", vec![Some(1.0), None, None]).unwrap();
        let rows = agreement(&t);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].points, 2);
        assert!((rows[0].max_gap - 0.03).abs() < 1e-12);
        assert_eq!(rows[0].inside_band, 0.5);
    }
}
