use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use deepselect_core::evaluation::{build_fault_features, Dbscan};
use deepselect_core::io::{format_id_list, format_id_values, read_id_list, write_bytes};
use deepselect_core::synthetic::{generate, SyntheticConfig};
use deepselect_core::{
    evaluate_selection, normalize_features, stability_stats, wilcoxon_signed_rank, Alternative,
    EvalReport, Method, RunData, RunManifest, SearchParams, SelectionProblem, SelectionResult,
    StabilityStats,
};
use log::{info, warn};
use rayon::prelude::*;
use serde::Serialize;

use crate::{ClusterArgs, Command, CompareArgs, EvaluateArgs, RunOptions, SelectArgs, SyntheticArgs, ValidateArgs};

pub const THREADS_VAR: &str = "DEEPSELECT_THREADS";

/// Bad arguments or inputs detected by the CLI itself.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

/// 2 for usage and validation errors, 1 for everything else.
pub fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<deepselect_core::Error>() {
            return if e.is_validation() { 2 } else { 1 };
        }
    }
    1
}

/// Runs `f` on a pool capped by `DEEPSELECT_THREADS` when it is set.
pub fn with_thread_cap<T: Send>(f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    match std::env::var(THREADS_VAR) {
        Ok(v) => {
            let threads: usize = v
                .trim()
                .parse()
                .ok()
                .filter(|&t| t > 0)
                .ok_or_else(|| usage(format!("{THREADS_VAR} must be a positive integer, got {v:?}")))?;
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .context("building the worker pool")?
                .install(f)
        }
        Err(_) => f(),
    }
}

pub fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Select(a) => select(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Compare(a) => compare(a),
        Command::ClusterFaults(a) => cluster_faults(a),
        Command::Validate(a) => validate(a),
        Command::GenSynthetic(a) => gen_synthetic(a),
    }
}

fn load(manifest: &Path) -> Result<RunData> {
    let m = RunManifest::load(manifest)?;
    Ok(RunData::load(m)?)
}

fn params_for(data: &RunData, run: &RunOptions) -> SearchParams {
    let m = &data.manifest;
    let mut params = SearchParams::for_profile(
        run.profile.or(m.profile).unwrap_or_default(),
        run.budget.unwrap_or(m.budget),
    );
    params.seed = run.seed.unwrap_or(m.seed);
    params.variant = run.variant.or(m.variant).unwrap_or_default();
    params
}

fn parse_method(name: &str, params: &SearchParams) -> Result<Method> {
    // a bare `deepgd` picks up `--variant`
    if name.trim() == "deepgd" {
        return Ok(Method::DeepGd(params.variant));
    }
    Ok(name.parse()?)
}

fn problem_of(data: &RunData) -> Result<SelectionProblem> {
    Ok(SelectionProblem::new(data.probabilities.clone(), &data.features)?)
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_bytes(path, text.as_bytes())?;
    Ok(())
}

fn sidecar_path(out: &Path) -> PathBuf {
    out.with_extension("json")
}

fn select(args: SelectArgs) -> Result<()> {
    let data = load(&args.manifest)?;
    let params = params_for(&data, &args.run);
    let name = args.method.as_deref().unwrap_or(&data.manifest.method);
    let method = parse_method(name, &params)?;
    let problem = problem_of(&data)?;
    info!("running {method} with budget {} and seed {}", params.budget, params.seed);
    let result = method.run(&problem, &params)?;
    let sidecar = sidecar_path(&args.out);
    if sidecar == args.out {
        return Err(usage("--out must not have a .json extension"));
    }
    write_bytes(&args.out, format_id_list(&result.subset).as_bytes())?;
    write_json(&sidecar, &result)?;
    info!("wrote {} and {}", args.out.display(), sidecar.display());
    Ok(())
}

fn read_selection(path: &Path) -> Result<SelectionResult> {
    if path.extension().and_then(|e| e.to_str()) == Some("json") {
        let text = fs::read_to_string(path)
            .map_err(|e| deepselect_core::Error::Io { path: path.into(), source: e })?;
        serde_json::from_str(&text).map_err(|e| {
            deepselect_core::Error::Parse {
                path: path.into(),
                message: e.to_string(),
            }
            .into()
        })
    } else {
        Ok(SelectionResult::new("external", read_id_list(path)?))
    }
}

fn report_for(data: &RunData, selection: &SelectionResult) -> Result<EvalReport> {
    let clusters = data
        .clusters
        .as_ref()
        .ok_or_else(|| usage("manifest has no `clusters` file"))?;
    let features = normalize_features(&data.features);
    Ok(evaluate_selection(selection, &features, &data.mask()?, clusters)?)
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let data = load(&args.manifest)?;
    let selection = read_selection(&args.selection)?;
    let report = report_for(&data, &selection)?;
    match args.out {
        Some(path) => write_json(&path, &report),
        None => {
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(())
        }
    }
}

#[derive(Debug, Serialize)]
struct MethodSummary {
    method: String,
    runs: usize,
    fdr: Option<StabilityStats>,
    /// Mean log diversity; `None` when a run's selection is degenerate.
    mean_log_gd: Option<f64>,
    wilcoxon_vs_deepgd: Option<PairedTest>,
}

#[derive(Debug, Serialize)]
struct PairedTest {
    /// Two-sided p-value.
    p_two_sided: Option<f64>,
    /// One-sided p-value for deepgd scoring higher.
    p_deepgd_greater: Option<f64>,
    note: Option<String>,
}

#[derive(Debug, Serialize)]
struct CompareStats {
    budget: usize,
    seed: u64,
    repeats: usize,
    methods: Vec<MethodSummary>,
}

fn paired_test(deepgd: &[f64], other: &[f64]) -> PairedTest {
    let pairs: Vec<(f64, f64)> = deepgd.iter().copied().zip(other.iter().copied()).collect();
    let two = wilcoxon_signed_rank(&pairs, Alternative::TwoSided);
    let one = wilcoxon_signed_rank(&pairs, Alternative::Greater);
    match (two, one) {
        (Ok(t), Ok(o)) => PairedTest {
            p_two_sided: Some(t.p_value),
            p_deepgd_greater: Some(o.p_value),
            note: None,
        },
        (Err(e), _) | (_, Err(e)) => PairedTest {
            p_two_sided: None,
            p_deepgd_greater: None,
            note: Some(e.to_string()),
        },
    }
}

fn compare(args: CompareArgs) -> Result<()> {
    if args.repeats == 0 {
        return Err(usage("--repeats must be at least 1"));
    }
    let data = load(&args.manifest)?;
    let base = params_for(&data, &args.run);
    let methods: Vec<Method> = args
        .methods
        .iter()
        .map(|m| parse_method(m, &base))
        .collect::<Result<_>>()?;
    let problem = problem_of(&data)?;
    let clusters = data
        .clusters
        .as_ref()
        .ok_or_else(|| usage("manifest has no `clusters` file"))?;
    let mask = data.mask()?;
    let features = problem.features();

    let jobs: Vec<(usize, u64)> = (0..methods.len())
        .flat_map(|m| (0..args.repeats as u64).map(move |r| (m, r)))
        .collect();
    let reports: Vec<EvalReport> = jobs
        .par_iter()
        .map(|&(m, r)| -> Result<EvalReport> {
            let params = SearchParams {
                seed: base.seed.wrapping_add(r),
                ..base.clone()
            };
            let mut selection = methods[m].run(&problem, &params)?;
            selection.seed = Some(params.seed);
            Ok(evaluate_selection(&selection, features, &mask, clusters)?)
        })
        .collect::<Result<_>>()?;

    fs::create_dir_all(&args.out_dir)
        .map_err(|e| deepselect_core::Error::Io { path: args.out_dir.clone(), source: e })?;
    let mut csv = String::from(EvalReport::CSV_HEADER);
    csv.push('\n');
    for r in &reports {
        csv.push_str(&r.csv_row());
        csv.push('\n');
    }
    write_bytes(&args.out_dir.join("runs.csv"), csv.as_bytes())?;

    if args.repeats < 2 {
        warn!("one run per method: stability statistics and paired tests omitted");
        return Ok(());
    }
    let per_method: Vec<&[EvalReport]> = reports.chunks(args.repeats).collect();
    let deepgd = methods
        .iter()
        .position(|m| *m == Method::default())
        .map(|i| per_method[i].iter().map(|r| r.fdr).collect::<Vec<_>>());
    let mut summaries = Vec::new();
    for (method, runs) in methods.iter().zip(&per_method) {
        let fdrs: Vec<f64> = runs.iter().map(|r| r.fdr).collect();
        let gd: f64 = runs.iter().map(|r| r.log_gd).sum::<f64>() / runs.len() as f64;
        summaries.push(MethodSummary {
            method: method.to_string(),
            runs: runs.len(),
            fdr: Some(stability_stats(&fdrs)?),
            mean_log_gd: gd.is_finite().then_some(gd),
            wilcoxon_vs_deepgd: match &deepgd {
                Some(d) if *method != Method::default() => Some(paired_test(d, &fdrs)),
                _ => None,
            },
        });
    }
    write_json(
        &args.out_dir.join("stats.json"),
        &CompareStats {
            budget: base.budget,
            seed: base.seed,
            repeats: args.repeats,
            methods: summaries,
        },
    )
}

fn cluster_faults(args: ClusterArgs) -> Result<()> {
    let data = load(&args.manifest)?;
    let labels = data
        .labels
        .as_ref()
        .ok_or_else(|| usage("manifest has no `labels` file"))?;
    if !(args.class_weight >= 0.0 && args.class_weight.is_finite()) {
        return Err(usage("--class-weight must be a non-negative number"));
    }
    let dbscan = Dbscan::new(args.eps, args.min_pts)?;
    let features = normalize_features(&data.features);
    let (ids, rows) = build_fault_features(
        &features,
        labels,
        &data.probabilities,
        &data.mask()?,
        args.class_weight,
    )?;
    let found = dbscan.fit(&rows)?;
    let clusters = found.iter().filter(|&&c| c >= 0).max().map_or(0, |&c| c + 1);
    let noise = found.iter().filter(|&&c| c < 0).count();
    info!("{} mispredicted inputs: {clusters} clusters, {noise} noise", ids.len());
    let pairs: Vec<(usize, i64)> = ids.into_iter().zip(found).collect();
    write_bytes(&args.out, format_id_values(&pairs).as_bytes())?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Summary {
    n: usize,
    m: usize,
    d: usize,
    budget: usize,
    mispredicted: Option<usize>,
    clustered: Option<usize>,
    total_faults: Option<usize>,
}

fn validate(args: ValidateArgs) -> Result<()> {
    let data = load(&args.manifest)?;
    let n = data.n_inputs();
    if data.manifest.budget == 0 || data.manifest.budget > n {
        return Err(deepselect_core::Error::Budget {
            budget: data.manifest.budget,
            n,
        }
        .into());
    }
    let mispredicted = match &data.labels {
        Some(_) => Some(data.mask()?.iter().filter(|&&b| b).count()),
        None => None,
    };
    if let (Some(clusters), Some(_)) = (&data.clusters, &data.labels) {
        let mask = data.mask()?;
        if let Some(id) = (0..n).find(|&i| mask[i] && clusters.cluster_of(i).is_none()) {
            return Err(deepselect_core::Error::Coverage(id).into());
        }
    }
    let summary = Summary {
        n,
        m: data.probabilities.n_classes(),
        d: data.features.n_features(),
        budget: data.manifest.budget,
        mispredicted,
        clustered: data.clusters.as_ref().map(|c| c.len()),
        total_faults: data.clusters.as_ref().map(|c| c.total_faults()),
    };
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(())
}

fn gen_synthetic(args: SyntheticArgs) -> Result<()> {
    let config = SyntheticConfig {
        n: args.n,
        m: args.m,
        d: args.d,
        faults: args.faults,
        mispredict_rate: args.mispredict_rate,
        seed: args.seed,
        correlation: args.correlation,
    };
    if args.budget == 0 || args.budget > args.n {
        return Err(usage(format!("--budget {} is invalid for {} inputs", args.budget, args.n)));
    }
    let data = generate(&config)?;
    data.write(&args.out, args.budget, args.seed)
        .with_context(|| format!("writing benchmark to {}", args.out.display()))?;
    info!(
        "wrote {} inputs, {} faults, gini/misprediction correlation {:.3}",
        config.n, config.faults, data.correlation
    );
    Ok(())
}
