//! Implementations of the CLI subcommands.

use std::fs;
use std::path::{Path, PathBuf};

use mnno_core::{
    bonferroni_adjust, derive_seed, init_model, k_fold_split, load_vector_set, mean_nn_overlap,
    pair_by_keys, train, wilcoxon_rank_sum_p, write_paired_tsv, Error as CoreError,
    SimilarityMeasure, VectorFormat, VectorSet64,
};

use crate::config::{load_config, Exp1Config, Exp2Config, SynthCmdConfig, TrainCmdConfig};
use crate::error::{runtime, validation, Classify, CliResult};
use crate::exp1::run_experiment1;
use crate::exp2::run_experiment2;
use crate::report::ReportFormat;

fn resolve_out_dir(flag: Option<PathBuf>, configured: &Option<PathBuf>, id: &str) -> PathBuf {
    flag.or_else(|| configured.clone())
        .unwrap_or_else(|| PathBuf::from(format!("out-{id}")))
}

fn create_out_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| runtime(format!("cannot create {}: {e}", dir.display())))
}

/// `mnno X_FILE Y_FILE`: pair two vector files by key and print their mean
/// nearest-neighbor overlap.
pub fn cmd_mnno(
    x_path: &Path,
    y_path: &Path,
    k: usize,
    measure: &str,
    format: &str,
) -> CliResult<()> {
    let measure: SimilarityMeasure = measure.parse().or_invalid()?;
    let format: VectorFormat = format.parse().or_invalid()?;
    if k == 0 {
        return Err(validation("--k must be positive"));
    }
    let x: VectorSet64 = load_vector_set(x_path, format).or_invalid()?;
    let y: VectorSet64 = load_vector_set(y_path, format).or_invalid()?;
    let (ds, diagnostics) = pair_by_keys(&x, &y).or_invalid()?;
    eprintln!("{diagnostics}");
    let value = mean_nn_overlap(ds.x(), ds.y(), k, measure).or_invalid()?;
    println!("{value}");
    Ok(())
}

/// `train`: one model, one seeded holdout split, full history + checkpoint.
pub fn cmd_train(
    config_path: &Path,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> CliResult<()> {
    let mut cfg: TrainCmdConfig = load_config(config_path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    let dataset = cfg.dataset.resolve(None)?;
    let splits = k_fold_split(&dataset, cfg.split.folds, derive_seed(cfg.seed, &[0]))
        .or_invalid()?;
    let (train_set, test_set) = splits
        .into_iter()
        .nth(cfg.split.test_fold)
        .expect("test_fold validated against folds");
    let model = init_model::<f64>(
        train_set.x().dim(),
        train_set.y().dim(),
        &cfg.model.hidden_dims,
        cfg.model.activation,
        cfg.model.init,
        derive_seed(cfg.seed, &[1]),
    )
    .or_invalid()?;
    let mut tcfg = cfg.train.clone();
    tcfg.seed = derive_seed(cfg.seed, &[2]);
    let (trained, history) = match train(model, &train_set, &test_set, &tcfg) {
        Ok(out) => out,
        Err(e @ CoreError::Diverged { .. }) => return Err(runtime(e)),
        Err(e) => return Err(validation(e)),
    };

    let dir = resolve_out_dir(out_dir, &cfg.out_dir, &cfg.id);
    create_out_dir(&dir)?;
    history.write_csv(&dir.join("history.csv")).or_failed()?;
    trained.save_checkpoint(&dir.join("model.json")).or_failed()?;
    if let Some(record) = history.final_record() {
        println!(
            "epoch={} train_loss={} test_loss={} mnno_x_test={} mnno_y_test={}",
            record.epoch,
            record.train_loss,
            record.test_loss,
            record.mnno_x_test,
            record.mnno_y_test
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

/// `exp1`: the mapping experiment.
pub fn cmd_exp1(
    config_path: &Path,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    k: Option<usize>,
    measure: Option<&str>,
    format: Option<&str>,
) -> CliResult<()> {
    let mut cfg: Exp1Config = load_config(config_path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    if let Some(k) = k {
        cfg.experiment.k = k;
    }
    if let Some(measure) = measure {
        cfg.experiment.measure = measure.parse().or_invalid()?;
    }
    let format = format.map(|s| s.parse::<ReportFormat>()).transpose()?;
    let dir = resolve_out_dir(out_dir, &cfg.out_dir, &cfg.id);
    let report = run_experiment1(&cfg, &dir, format)?;
    for row in &report.rows {
        println!(
            "{} {} {}: mnno_x_fx={} mnno_y_fx={} mnno_xy={} p={} {}",
            row.direction,
            row.model,
            row.loss,
            row.mnno_x_fx,
            row.mnno_y_fx,
            row.mnno_xy,
            row.p_value,
            row.status
        );
    }
    println!("wrote {}", dir.display());
    Ok(())
}

/// `exp2`: the untrained-probe experiment.
pub fn cmd_exp2(
    config_path: &Path,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
    format: Option<&str>,
) -> CliResult<()> {
    let mut cfg: Exp2Config = load_config(config_path)?;
    if let Some(seed) = seed {
        cfg.seed = seed;
    }
    let format = format.map(|s| s.parse::<ReportFormat>()).transpose()?;
    let dir = resolve_out_dir(out_dir, &cfg.out_dir, &cfg.id);
    let rows = run_experiment2(&cfg, &dir, format)?;
    for row in &rows {
        match row.p_vs_raw {
            None => println!(
                "{} {} {}: rho={}",
                row.benchmark, row.measure, row.mapping, row.mean_rho
            ),
            Some(p) => println!(
                "{} {} {}: rho={} p_vs_raw={}",
                row.benchmark, row.measure, row.mapping, row.mean_rho, p
            ),
        }
    }
    println!("wrote {}", dir.display());
    Ok(())
}

/// `synth`: generate a synthetic paired dataset and write it as paired TSV.
pub fn cmd_synth(
    config_path: &Path,
    seed: Option<u64>,
    out_dir: Option<PathBuf>,
) -> CliResult<()> {
    let mut cfg: SynthCmdConfig = load_config(config_path)?;
    if let Some(seed) = seed {
        cfg.synthetic.seed = seed;
    }
    cfg.validate()?;
    let dataset = mnno_core::generate_synthetic_paired::<f64>(&cfg.synthetic).or_invalid()?;
    let dir = resolve_out_dir(out_dir, &cfg.out_dir, &cfg.id);
    create_out_dir(&dir)?;
    write_paired_tsv(&dir.join("dataset.tsv"), &dataset).or_failed()?;
    let meta = serde_json::to_string_pretty(&cfg.synthetic).or_failed()?;
    fs::write(dir.join("meta.json"), meta)
        .map_err(|e| runtime(format!("cannot write meta.json: {e}")))?;
    println!(
        "wrote {}/dataset.tsv ({} items, d_x={}, d_y={})",
        dir.display(),
        dataset.len(),
        dataset.x().dim(),
        dataset.y().dim()
    );
    Ok(())
}

/// `stats`: Wilcoxon rank-sum on two named CSV columns, with optional
/// Bonferroni adjustment for `m` comparisons.
pub fn cmd_stats(file: &Path, col_a: &str, col_b: &str, m: Option<usize>) -> CliResult<()> {
    let text = fs::read_to_string(file)
        .map_err(|e| validation(format!("cannot read {}: {e}", file.display())))?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines
        .next()
        .ok_or_else(|| validation(format!("{} is empty", file.display())))?;
    let columns: Vec<&str> = header.split(',').collect();
    let index_of = |name: &str| -> CliResult<usize> {
        columns.iter().position(|c| *c == name).ok_or_else(|| {
            validation(format!(
                "{} has no column `{name}` (columns: {})",
                file.display(),
                columns.join(", ")
            ))
        })
    };
    let ia = index_of(col_a)?;
    let ib = index_of(col_b)?;
    let mut a = Vec::new();
    let mut b = Vec::new();
    for (idx, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != columns.len() {
            return Err(validation(format!(
                "{} line {}: expected {} fields, got {}",
                file.display(),
                idx + 2,
                columns.len(),
                fields.len()
            )));
        }
        for (target, i) in [(&mut a, ia), (&mut b, ib)] {
            let v: f64 = fields[i].parse().map_err(|_| {
                validation(format!(
                    "{} line {}: bad number `{}`",
                    file.display(),
                    idx + 2,
                    fields[i]
                ))
            })?;
            target.push(v);
        }
    }
    let p = wilcoxon_rank_sum_p(&a, &b).or_invalid()?;
    println!("wilcoxon_p = {p}");
    if let Some(m) = m {
        let adjusted = bonferroni_adjust(&[p], Some(m)).or_invalid()?;
        println!("bonferroni_p = {}", adjusted[0]);
    }
    Ok(())
}
