//! The untrained-probe experiment: score similarity benchmarks with raw
//! embeddings and with the same embeddings pushed through random untrained
//! networks, then compare the Spearman correlations.

use std::fs;
use std::path::Path;

use serde::Serialize;

use mnno_core::{
    derive_seed, forward, load_benchmark_pairs, planted_benchmark, run_untrained_probe,
    score_word_pairs, spearman_rho, wilcoxon_rank_sum_p, Activation, BenchmarkPairs, Layer,
    MappingModel, ProbeMapping, ProbeRow, SimilarityMeasure, VectorSet64,
};

use crate::config::Exp2Config;
use crate::error::{runtime, Classify, CliResult};
use crate::report::{probe_to_csv, probe_to_markdown, write_artifact, ReportFormat};

/// Probe rows produced by an exact identity map instead of random nets:
/// a plumbing smoke test. Mapped rows must equal the raw rows.
fn identity_rows(
    embeddings: &VectorSet64,
    benchmarks: &[BenchmarkPairs],
    runs: usize,
) -> CliResult<Vec<ProbeRow>> {
    let d = embeddings.dim();
    let mut layer = Layer::<f64>::zeros(d, d);
    for i in 0..d {
        layer.weights.set(i, i, 1.0);
    }
    let identity = MappingModel::from_layers(vec![layer], Activation::Tanh).or_failed()?;
    let mapped = forward(&identity, embeddings).or_failed()?;

    let mut rows = Vec::new();
    for bench in benchmarks {
        for measure in [SimilarityMeasure::Cosine, SimilarityMeasure::Euclidean] {
            let raw = score_word_pairs(embeddings, bench, measure).or_failed()?;
            let raw_rho = spearman_rho(&raw.predicted, &raw.human).or_failed()?;
            rows.push(ProbeRow {
                benchmark: bench.name().to_string(),
                measure,
                mapping: ProbeMapping::Raw,
                mean_rho: raw_rho,
                p_vs_raw: None,
                coverage: raw.coverage,
            });
            let scored = score_word_pairs(&mapped, bench, measure).or_failed()?;
            let rho = spearman_rho(&scored.predicted, &scored.human).or_failed()?;
            for mapping in [ProbeMapping::Lin, ProbeMapping::Nn] {
                let p = wilcoxon_rank_sum_p(&vec![rho; runs], &vec![raw_rho; runs])
                    .or_failed()?;
                rows.push(ProbeRow {
                    benchmark: bench.name().to_string(),
                    measure,
                    mapping,
                    mean_rho: rho,
                    p_vs_raw: Some(p),
                    coverage: scored.coverage,
                });
            }
        }
    }
    Ok(rows)
}

#[derive(Serialize)]
struct Exp2Provenance<'a> {
    config: &'a Exp2Config,
    identity_smoke: bool,
    benchmarks: Vec<String>,
    /// Init seeds of the untrained linear maps, one per run.
    lin_seeds: Vec<u64>,
    /// Init seeds of the untrained one-hidden-layer nets, one per run.
    nn_seeds: Vec<u64>,
}

/// Runs the probe experiment described by `cfg`, writing `report.csv`,
/// `report.md`, and `provenance.json` into `out_dir`.
pub fn run_experiment2(
    cfg: &Exp2Config,
    out_dir: &Path,
    format: Option<ReportFormat>,
) -> CliResult<Vec<ProbeRow>> {
    cfg.validate()?;
    let embeddings = cfg.embeddings.resolve()?;
    let mut benchmarks = Vec::new();
    for path in &cfg.probe.benchmarks {
        benchmarks.push(load_benchmark_pairs(path).or_invalid()?);
    }
    if let Some(planted) = &cfg.probe.planted {
        let seed = planted.seed.unwrap_or_else(|| derive_seed(cfg.seed, &[8]));
        benchmarks.push(
            planted_benchmark(&embeddings, planted.n_pairs, planted.measure, seed)
                .or_invalid()?,
        );
    }

    let rows = if cfg.probe.identity_smoke {
        identity_rows(&embeddings, &benchmarks, cfg.probe.runs)?
    } else {
        run_untrained_probe(
            &embeddings,
            &benchmarks,
            cfg.probe.runs,
            cfg.probe.d_y,
            cfg.probe.activation,
            cfg.seed,
        )
        .or_failed()?
    };

    fs::create_dir_all(out_dir)
        .map_err(|e| runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    if format != Some(ReportFormat::Markdown) {
        write_artifact(&out_dir.join("report.csv"), &probe_to_csv(&rows)?)?;
    }
    if format != Some(ReportFormat::Csv) {
        write_artifact(&out_dir.join("report.md"), &probe_to_markdown(&rows)?)?;
    }
    let runs = cfg.probe.runs as u64;
    let prov = Exp2Provenance {
        config: cfg,
        identity_smoke: cfg.probe.identity_smoke,
        benchmarks: benchmarks.iter().map(|b| b.name().to_string()).collect(),
        lin_seeds: (0..runs).map(|r| derive_seed(cfg.seed, &[0, r])).collect(),
        nn_seeds: (0..runs).map(|r| derive_seed(cfg.seed, &[1, r])).collect(),
    };
    let prov_json = serde_json::to_string_pretty(&prov).or_failed()?;
    write_artifact(&out_dir.join("provenance.json"), &prov_json)?;
    Ok(rows)
}
