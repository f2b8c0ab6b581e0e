//! Word-pair benchmark scoring and the untrained-network probe: mapping
//! embeddings through random nets and checking how much of the similarity
//! ranking survives.

use std::collections::HashMap;
use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::vector_set::VectorSet;
use crate::error::{Error, Result};
use crate::model::{forward, init_model, Activation, InitScheme};
use crate::scalar::{to_f64, Scalar};
use crate::seeds::derive_seed;
use crate::similarity::{similarity, SimilarityMeasure};
use crate::stats::{spearman_rho, wilcoxon_rank_sum_p};

/// Human-rated word pairs: rows of (word1, word2, rating).
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkPairs {
    name: String,
    rows: Vec<(String, String, f64)>,
}

impl BenchmarkPairs {
    pub fn new(name: impl Into<String>, rows: Vec<(String, String, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("benchmark has no pairs".into()));
        }
        for (w1, w2, r) in &rows {
            if !r.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "non-finite rating for pair ({w1}, {w2})"
                )));
            }
        }
        Ok(BenchmarkPairs {
            name: name.into(),
            rows,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn rows(&self) -> &[(String, String, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// Reads `word1 TAB word2 TAB rating` lines; the benchmark is named after
/// the file stem.
pub fn load_benchmark_pairs(path: &Path) -> Result<BenchmarkPairs> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut rows = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                line: line_no,
                msg: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        let rating: f64 = fields[2].trim().parse().map_err(|_| Error::Parse {
            line: line_no,
            msg: format!("non-numeric rating `{}`", fields[2]),
        })?;
        rows.push((fields[0].to_string(), fields[1].to_string(), rating));
    }
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "benchmark".to_string());
    BenchmarkPairs::new(name, rows)
}

/// Predicted similarities for the covered benchmark pairs, their human
/// ratings in the same order, and the covered fraction.
#[derive(Clone, Debug, PartialEq)]
pub struct ScoredPairs {
    pub predicted: Vec<f64>,
    pub human: Vec<f64>,
    pub coverage: f64,
}

/// Scores every pair whose two words are both present in `embeddings`.
/// Pairs with an out-of-vocabulary word are skipped and reflected in the
/// coverage fraction; zero coverage is an error.
pub fn score_word_pairs<S: Scalar>(
    embeddings: &VectorSet<S>,
    pairs: &BenchmarkPairs,
    measure: SimilarityMeasure,
) -> Result<ScoredPairs> {
    let index: HashMap<&str, usize> = embeddings
        .keys()
        .iter()
        .enumerate()
        .map(|(i, k)| (k.as_str(), i))
        .collect();
    let mut predicted = Vec::new();
    let mut human = Vec::new();
    for (w1, w2, rating) in pairs.rows() {
        let (Some(&i), Some(&j)) = (index.get(w1.as_str()), index.get(w2.as_str())) else {
            continue;
        };
        let s = similarity(embeddings.vector(i), embeddings.vector(j), measure)?;
        predicted.push(to_f64(s));
        human.push(*rating);
    }
    if predicted.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no pair of benchmark `{}` is covered by the embeddings",
            pairs.name()
        )));
    }
    let coverage = predicted.len() as f64 / pairs.len() as f64;
    Ok(ScoredPairs {
        predicted,
        human,
        coverage,
    })
}

/// Mapping whose scores a probe report row describes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProbeMapping {
    /// The embeddings themselves, unmapped.
    Raw,
    /// Untrained linear map.
    Lin,
    /// Untrained one-hidden-layer net.
    Nn,
}

impl fmt::Display for ProbeMapping {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ProbeMapping::Raw => write!(f, "raw"),
            ProbeMapping::Lin => write!(f, "lin"),
            ProbeMapping::Nn => write!(f, "nn"),
        }
    }
}

impl FromStr for ProbeMapping {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(ProbeMapping::Raw),
            "lin" => Ok(ProbeMapping::Lin),
            "nn" => Ok(ProbeMapping::Nn),
            other => Err(Error::InvalidArgument(format!(
                "unknown probe mapping `{other}` (expected raw, lin, or nn)"
            ))),
        }
    }
}

/// One cell of the untrained-probe report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub benchmark: String,
    pub measure: SimilarityMeasure,
    pub mapping: ProbeMapping,
    /// Mean Spearman rho over the runs (a single value for `raw`).
    pub mean_rho: f64,
    /// Two-sided Wilcoxon p comparing the per-run rhos against the raw rho;
    /// absent for the `raw` row itself.
    pub p_vs_raw: Option<f64>,
    pub coverage: f64,
}

/// Maps `embeddings` through `runs` freshly initialized untrained networks
/// (weights uniform in [-1, 1), biases zero) and scores every benchmark
/// under both similarity measures.
///
/// For each benchmark and measure the report holds three rows: the raw
/// embeddings, an untrained linear map, and an untrained net with one hidden
/// layer as wide as the output. The wide hidden layer matters: with n random
/// features the map perturbs pairwise similarities at the 1/sqrt(n) scale,
/// so narrow probes scramble similarity rankings that wide ones preserve.
/// Deterministic given `seed`.
pub fn run_untrained_probe<S: Scalar>(
    embeddings: &VectorSet<S>,
    benchmarks: &[BenchmarkPairs],
    runs: usize,
    d_y: usize,
    activation: Activation,
    seed: u64,
) -> Result<Vec<ProbeRow>> {
    if runs == 0 {
        return Err(Error::InvalidArgument("probe needs at least one run".into()));
    }
    if benchmarks.is_empty() {
        return Err(Error::InvalidArgument("probe needs a benchmark".into()));
    }
    let d_x = embeddings.dim();
    let scheme = InitScheme::Uniform { lo: -1.0, hi: 1.0 };

    // One mapped copy of the embeddings per run and mapping kind, shared
    // across benchmarks and measures.
    let mut lin_mapped = Vec::with_capacity(runs);
    let mut nn_mapped = Vec::with_capacity(runs);
    for r in 0..runs {
        let lin = init_model::<S>(
            d_x,
            d_y,
            &[],
            activation,
            scheme,
            derive_seed(seed, &[0, r as u64]),
        )?;
        lin_mapped.push(forward(&lin, embeddings)?);
        let nn = init_model::<S>(
            d_x,
            d_y,
            &[d_y],
            activation,
            scheme,
            derive_seed(seed, &[1, r as u64]),
        )?;
        nn_mapped.push(forward(&nn, embeddings)?);
    }

    let mut rows = Vec::new();
    for bench in benchmarks {
        for measure in [SimilarityMeasure::Cosine, SimilarityMeasure::Euclidean] {
            let raw = score_word_pairs(embeddings, bench, measure)?;
            let raw_rho = spearman_rho(&raw.predicted, &raw.human)?;
            rows.push(ProbeRow {
                benchmark: bench.name().to_string(),
                measure,
                mapping: ProbeMapping::Raw,
                mean_rho: raw_rho,
                p_vs_raw: None,
                coverage: raw.coverage,
            });
            for (mapping, mapped) in [
                (ProbeMapping::Lin, &lin_mapped),
                (ProbeMapping::Nn, &nn_mapped),
            ] {
                let mut rhos = Vec::with_capacity(runs);
                let mut coverage = 0.0;
                for set in mapped {
                    let scored = score_word_pairs(set, bench, measure)?;
                    rhos.push(spearman_rho(&scored.predicted, &scored.human)?);
                    coverage = scored.coverage;
                }
                let mean_rho = rhos.iter().sum::<f64>() / runs as f64;
                let raw_sample = vec![raw_rho; runs];
                let p = wilcoxon_rank_sum_p(&rhos, &raw_sample)?;
                rows.push(ProbeRow {
                    benchmark: bench.name().to_string(),
                    measure,
                    mapping,
                    mean_rho,
                    p_vs_raw: Some(p),
                    coverage,
                });
            }
        }
    }
    Ok(rows)
}
