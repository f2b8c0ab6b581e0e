//! The mapping experiment: for every direction × model × loss combination,
//! select hyperparameters by cross-validated grid search, retrain per
//! replicate, measure overlap with the input space (mNNO(X,f(X))), the
//! target space (mNNO(Y,f(X))), and the raw-space baseline (mNNO(X,Y)) on
//! held-out data, and test the difference between the two mapped columns
//! with a Wilcoxon rank-sum test under Bonferroni correction.

use std::fs;
use std::path::Path;

use serde::Serialize;

use mnno_core::{
    bonferroni_adjust, derive_seed, forward, grid_search_cv, init_model, k_fold_split,
    mean_nn_overlap, train, wilcoxon_rank_sum_p, Error as CoreError, GridSearchResult, LossKind,
    PairedDataset64, SimilarityMeasure, TrainConfig, VectorSet64,
};

use crate::config::{Direction, Exp1Config, ModelKind, ReplicateMode};
use crate::error::{runtime, validation, Classify, CliResult};
use crate::report::{write_artifact, Exp1Report, Exp1Row, ReportFormat, RowStatus};

/// Presents the dataset with the requested side as the input space X.
fn oriented(ds: &PairedDataset64, direction: Direction) -> CliResult<PairedDataset64> {
    match direction {
        Direction::XToY => Ok(ds.clone()),
        Direction::YToX => PairedDataset64::new(
            ds.y().clone(),
            ds.x().clone(),
            ds.labels().map(<[String]>::to_vec),
        )
        .or_failed(),
    }
}

/// Overlap metric for report cells: undefined values (zero vectors under
/// cosine, sets too small to have neighbors) become NaN instead of aborting.
fn overlap_or_nan(
    a: &VectorSet64,
    b: &VectorSet64,
    k: usize,
    measure: SimilarityMeasure,
) -> CliResult<f64> {
    match mean_nn_overlap(a, b, k, measure) {
        Ok(v) => Ok(v),
        Err(CoreError::ZeroVector { .. }) | Err(CoreError::InvalidArgument(_)) => Ok(f64::NAN),
        Err(e) => Err(runtime(e)),
    }
}

#[derive(Serialize)]
struct ReplicateProvenance {
    replicate: usize,
    init_seed: u64,
    train_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    data_seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    split_seed: Option<u64>,
    test_keys: Vec<String>,
    mnno_x_fx: f64,
    mnno_y_fx: f64,
    mnno_xy: f64,
    final_train_loss: f64,
    final_test_loss: f64,
}

#[derive(Serialize)]
struct RowProvenance {
    direction: String,
    model: String,
    loss: String,
    grid_seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    grid: Option<GridSearchResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_hidden_dims: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_learning_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_dropout: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    chosen_epochs: Option<usize>,
    replicates: Vec<ReplicateProvenance>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_raw: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    p_adjusted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    failure: Option<String>,
}

#[derive(Serialize)]
struct Exp1Provenance<'a> {
    config: &'a Exp1Config,
    rows: Vec<RowProvenance>,
}

struct RowDraft {
    direction: Direction,
    model: ModelKind,
    loss: LossKind,
    mean_x: f64,
    mean_y: f64,
    mean_xy: f64,
    p_raw: Option<f64>,
    status: RowStatus,
}

struct ReplicateOutcome {
    mnno_x_fx: f64,
    mnno_y_fx: f64,
    mnno_xy: f64,
    final_train_loss: f64,
    final_test_loss: f64,
}

#[allow(clippy::too_many_arguments)]
fn run_replicate(
    train_set: &PairedDataset64,
    test_set: &PairedDataset64,
    hidden: &[usize],
    cfg: &Exp1Config,
    win_cfg: &TrainConfig,
    init_seed: u64,
    train_seed: u64,
    history_path: Option<&Path>,
) -> CliResult<Result<ReplicateOutcome, String>> {
    let model = init_model::<f64>(
        train_set.x().dim(),
        train_set.y().dim(),
        hidden,
        cfg.grid.activation,
        cfg.grid.init,
        init_seed,
    )
    .or_failed()?;
    let mut tcfg = win_cfg.clone();
    tcfg.seed = train_seed;
    match train(model, train_set, test_set, &tcfg) {
        Err(CoreError::Diverged { epoch, loss }) => {
            Ok(Err(format!("diverged at epoch {epoch} (loss {loss:e})")))
        }
        Err(e) => Err(runtime(e)),
        Ok((trained, history)) => {
            if let Some(path) = history_path {
                history.write_csv(path).or_failed()?;
            }
            let preds = forward(&trained, test_set.x()).or_failed()?;
            let k = cfg.experiment.k;
            let measure = cfg.experiment.measure;
            let record = history.final_record().expect("epochs >= 1");
            Ok(Ok(ReplicateOutcome {
                mnno_x_fx: overlap_or_nan(test_set.x(), &preds, k, measure)?,
                mnno_y_fx: overlap_or_nan(test_set.y(), &preds, k, measure)?,
                mnno_xy: overlap_or_nan(test_set.x(), test_set.y(), k, measure)?,
                final_train_loss: record.train_loss,
                final_test_loss: record.test_loss,
            }))
        }
    }
}

fn failed_draft(
    direction: Direction,
    model: ModelKind,
    loss: LossKind,
) -> RowDraft {
    RowDraft {
        direction,
        model,
        loss,
        mean_x: f64::NAN,
        mean_y: f64::NAN,
        mean_xy: f64::NAN,
        p_raw: None,
        status: RowStatus::Failed,
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

#[allow(clippy::too_many_arguments)]
fn run_row(
    cfg: &Exp1Config,
    grid_dataset: &PairedDataset64,
    direction: Direction,
    model: ModelKind,
    loss: LossKind,
    row_i: u64,
    hist_dir: Option<&Path>,
) -> CliResult<(RowDraft, RowProvenance)> {
    let e = &cfg.experiment;
    let mut base = cfg.train.clone();
    base.loss = loss;
    base.neighbor_k = e.k;
    base.neighbor_measure = e.measure;
    let space = cfg.grid.space_for(model);
    let grid_seed = derive_seed(cfg.seed, &[1, row_i]);
    let row_tag = format!("{direction}_{model}_{loss}");

    let mut prov = RowProvenance {
        direction: direction.to_string(),
        model: model.to_string(),
        loss: loss.to_string(),
        grid_seed,
        grid: None,
        chosen_hidden_dims: None,
        chosen_learning_rate: None,
        chosen_margin: None,
        chosen_dropout: None,
        chosen_epochs: None,
        replicates: vec![],
        p_raw: None,
        p_adjusted: None,
        failure: None,
    };

    let row_grid_ds = oriented(grid_dataset, direction)?;
    let grid_res = match grid_search_cv(&row_grid_ds, &space, &base, e.folds, grid_seed) {
        Ok(r) => r,
        Err(CoreError::AllCellsFailed(n)) => {
            prov.failure = Some(format!("all {n} grid cells diverged"));
            return Ok((failed_draft(direction, model, loss), prov));
        }
        Err(err) => return Err(runtime(err)),
    };
    let (hidden, win_cfg) = grid_res.winning_config(&base);
    prov.chosen_hidden_dims = Some(hidden.clone());
    prov.chosen_learning_rate = Some(win_cfg.learning_rate);
    prov.chosen_margin = Some(win_cfg.margin);
    prov.chosen_dropout = Some(win_cfg.dropout);
    prov.chosen_epochs = Some(win_cfg.epochs);
    prov.grid = Some(grid_res);

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut xys = Vec::new();
    let mut failure: Option<String> = None;

    let replicate_sets: Vec<(PairedDataset64, PairedDataset64, Option<u64>, Option<u64>)> =
        match e.replicate {
            ReplicateMode::Folds => {
                let folds = k_fold_split(&row_grid_ds, e.folds, derive_seed(grid_seed, &[0]))
                    .or_failed()?;
                folds
                    .into_iter()
                    .map(|(tr, te)| (tr, te, None, None))
                    .collect()
            }
            ReplicateMode::Runs => {
                let mut sets = Vec::with_capacity(e.runs);
                for r in 0..e.runs {
                    let ds_r = if cfg.dataset.is_synthetic() {
                        let data_seed = derive_seed(cfg.seed, &[6, r as u64]);
                        let ds = cfg.dataset.resolve(Some(data_seed))?;
                        (oriented(&ds, direction)?, Some(data_seed))
                    } else {
                        (row_grid_ds.clone(), None)
                    };
                    let split_seed = derive_seed(cfg.seed, &[7, r as u64]);
                    let (tr, te) = k_fold_split(&ds_r.0, e.folds, split_seed)
                        .or_failed()?
                        .into_iter()
                        .next()
                        .expect("k >= 2 folds");
                    sets.push((tr, te, ds_r.1, Some(split_seed)));
                }
                sets
            }
        };

    for (f, (train_set, test_set, data_seed, split_seed)) in replicate_sets.iter().enumerate() {
        let init_seed = derive_seed(cfg.seed, &[3, row_i, f as u64]);
        let train_seed = derive_seed(cfg.seed, &[4, row_i, f as u64]);
        let history_path = hist_dir.map(|d| d.join(format!("{row_tag}_rep{f}.csv")));
        let outcome = run_replicate(
            train_set,
            test_set,
            &hidden,
            cfg,
            &win_cfg,
            init_seed,
            train_seed,
            history_path.as_deref(),
        )?;
        match outcome {
            Err(msg) => {
                failure = Some(format!("replicate {f}: {msg}"));
                break;
            }
            Ok(out) => {
                xs.push(out.mnno_x_fx);
                ys.push(out.mnno_y_fx);
                xys.push(out.mnno_xy);
                prov.replicates.push(ReplicateProvenance {
                    replicate: f,
                    init_seed,
                    train_seed,
                    data_seed: *data_seed,
                    split_seed: *split_seed,
                    test_keys: test_set.keys().to_vec(),
                    mnno_x_fx: out.mnno_x_fx,
                    mnno_y_fx: out.mnno_y_fx,
                    mnno_xy: out.mnno_xy,
                    final_train_loss: out.final_train_loss,
                    final_test_loss: out.final_test_loss,
                });
            }
        }
    }

    if let Some(msg) = failure {
        prov.failure = Some(msg);
        return Ok((failed_draft(direction, model, loss), prov));
    }

    let finite = xs.iter().chain(&ys).all(|v| v.is_finite());
    let p_raw = if finite {
        wilcoxon_rank_sum_p(&xs, &ys).ok()
    } else {
        None
    };
    prov.p_raw = p_raw;
    Ok((
        RowDraft {
            direction,
            model,
            loss,
            mean_x: mean(&xs),
            mean_y: mean(&ys),
            mean_xy: mean(&xys),
            p_raw,
            status: RowStatus::Ok,
        },
        prov,
    ))
}

/// Runs the whole experiment described by `cfg`, writing `report.csv`,
/// `report.md`, `provenance.json`, and (optionally) per-replicate training
/// histories into `out_dir`. Returns the assembled report.
pub fn run_experiment1(
    cfg: &Exp1Config,
    out_dir: &Path,
    format: Option<ReportFormat>,
) -> CliResult<Exp1Report> {
    cfg.validate()?;
    let grid_dataset = match cfg.experiment.replicate {
        ReplicateMode::Runs if cfg.dataset.is_synthetic() => {
            cfg.dataset.resolve(Some(derive_seed(cfg.seed, &[6, 0])))?
        }
        _ => cfg.dataset.resolve(None)?,
    };
    if cfg.experiment.losses.contains(&LossKind::MaxMargin) && grid_dataset.labels().is_none() {
        return Err(validation(
            "max_margin loss requires a labeled dataset (labels file, labeled paired TSV, or synthetic data)",
        ));
    }
    fs::create_dir_all(out_dir)
        .map_err(|e| runtime(format!("cannot create {}: {e}", out_dir.display())))?;
    let hist_dir = out_dir.join("histories");
    if cfg.experiment.histories {
        fs::create_dir_all(&hist_dir)
            .map_err(|e| runtime(format!("cannot create {}: {e}", hist_dir.display())))?;
    }
    let hist_dir = cfg.experiment.histories.then_some(hist_dir.as_path());

    let mut drafts = Vec::new();
    let mut row_provs = Vec::new();
    let mut row_i: u64 = 0;
    for &direction in &cfg.experiment.directions {
        for &model in &cfg.experiment.models {
            for &loss in &cfg.experiment.losses {
                let (draft, prov) =
                    run_row(cfg, &grid_dataset, direction, model, loss, row_i, hist_dir)?;
                drafts.push(draft);
                row_provs.push(prov);
                row_i += 1;
            }
        }
    }

    // Bonferroni over every row that produced a raw p-value.
    let raw_ps: Vec<f64> = drafts.iter().filter_map(|d| d.p_raw).collect();
    let adjusted = if raw_ps.is_empty() {
        vec![]
    } else {
        bonferroni_adjust(&raw_ps, None).or_failed()?
    };
    let mut adj_iter = adjusted.into_iter();
    let mut rows = Vec::with_capacity(drafts.len());
    for (draft, prov) in drafts.into_iter().zip(&mut row_provs) {
        let p_adj = draft.p_raw.map(|_| adj_iter.next().expect("one per raw p"));
        prov.p_adjusted = p_adj;
        let p_value = p_adj.unwrap_or(f64::NAN);
        rows.push(Exp1Row {
            dataset: cfg.id.clone(),
            direction: draft.direction,
            model: draft.model,
            loss: draft.loss,
            measure: cfg.experiment.measure,
            k: cfg.experiment.k,
            mnno_x_fx: draft.mean_x,
            mnno_y_fx: draft.mean_y,
            mnno_xy: draft.mean_xy,
            p_value,
            significant: p_adj.is_some_and(|p| p < cfg.experiment.significance),
            status: draft.status,
        });
    }
    let report = Exp1Report { rows };

    if format != Some(ReportFormat::Markdown) {
        write_artifact(&out_dir.join("report.csv"), &report.to_csv()?)?;
    }
    if format != Some(ReportFormat::Csv) {
        write_artifact(&out_dir.join("report.md"), &report.to_markdown()?)?;
    }
    let prov = Exp1Provenance {
        config: cfg,
        rows: row_provs,
    };
    let prov_json = serde_json::to_string_pretty(&prov).or_failed()?;
    write_artifact(&out_dir.join("provenance.json"), &prov_json)?;
    Ok(report)
}
