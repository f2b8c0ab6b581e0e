//! Exhaustive hyperparameter search with k-fold cross-validation.
//!
//! Every cell of the grid (hidden layout × learning rate × margin × dropout)
//! is trained on each fold with a fully derived seed, so the search result is
//! deterministic and independent of scheduling. Cells that diverge are
//! excluded rather than aborting the search.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::paired::{k_fold_split, PairedDataset};
use crate::error::{Error, Result};
use crate::model::{init_model, Activation, InitScheme};
use crate::scalar::Scalar;
use crate::seeds::derive_seed;
use crate::train::{train, TrainConfig};

/// The searched axes. `hidden_dims` entries are full hidden layouts (an empty
/// layout is a linear model), so depth and width are both searchable.
/// Empty `margins` / `dropouts` grids mean "keep the base config's value".
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpace {
    pub hidden_dims: Vec<Vec<usize>>,
    pub learning_rates: Vec<f64>,
    #[serde(default)]
    pub margins: Vec<f64>,
    #[serde(default)]
    pub dropouts: Vec<f64>,
    #[serde(default = "GridSpace::default_activation")]
    pub activation: Activation,
    #[serde(default)]
    pub init: InitScheme,
}

impl GridSpace {
    fn default_activation() -> Activation {
        Activation::Tanh
    }

    pub fn validate(&self) -> Result<()> {
        if self.hidden_dims.is_empty() {
            return Err(Error::InvalidArgument(
                "hidden_dims grid must list at least one layout".into(),
            ));
        }
        if self.learning_rates.is_empty() {
            return Err(Error::InvalidArgument(
                "learning rate grid must not be empty".into(),
            ));
        }
        for &lr in &self.learning_rates {
            if !(lr > 0.0) || !lr.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "learning rates must be positive and finite, got {lr}"
                )));
            }
        }
        for &m in &self.margins {
            if !(m >= 0.0) || !m.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "margins must be non-negative and finite, got {m}"
                )));
            }
        }
        for &d in &self.dropouts {
            if !(0.0..1.0).contains(&d) {
                return Err(Error::InvalidArgument(format!(
                    "dropout rates must lie in [0, 1), got {d}"
                )));
            }
        }
        Ok(())
    }

    /// Cell configurations in enumeration order:
    /// hidden layout, then learning rate, then margin, then dropout.
    pub fn cells(&self, base: &TrainConfig) -> Vec<CellConfig> {
        let margins: Vec<f64> = if self.margins.is_empty() {
            vec![base.margin]
        } else {
            self.margins.clone()
        };
        let dropouts: Vec<f64> = if self.dropouts.is_empty() {
            vec![base.dropout]
        } else {
            self.dropouts.clone()
        };
        let mut cells = Vec::new();
        for hidden in &self.hidden_dims {
            for &lr in &self.learning_rates {
                for &margin in &margins {
                    for &dropout in &dropouts {
                        cells.push(CellConfig {
                            hidden_dims: hidden.clone(),
                            learning_rate: lr,
                            margin,
                            dropout,
                        });
                    }
                }
            }
        }
        cells
    }
}

/// One point of the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellConfig {
    pub hidden_dims: Vec<usize>,
    pub learning_rate: f64,
    pub margin: f64,
    pub dropout: f64,
}

impl CellConfig {
    /// Width of the first hidden layer; a linear model counts as 0.
    /// This is the tie-breaking size used when two cells score equally.
    pub fn first_hidden_dim(&self) -> usize {
        self.hidden_dims.first().copied().unwrap_or(0)
    }

    fn apply(&self, base: &TrainConfig, seed: u64) -> TrainConfig {
        let mut cfg = base.clone();
        cfg.learning_rate = self.learning_rate;
        cfg.margin = self.margin;
        cfg.dropout = self.dropout;
        cfg.seed = seed;
        // Metric traces are not needed to score a cell.
        cfg.mnno_every = 0;
        cfg
    }
}

/// CV outcome of one cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum CellStatus {
    Ok {
        /// Test loss per epoch, averaged over folds (index 0 = epoch 1).
        mean_test_loss_by_epoch: Vec<f64>,
        /// 1-based epoch minimizing the mean test loss (earliest on ties).
        best_epoch: usize,
        /// The minimum itself — the cell's score.
        best_loss: f64,
    },
    Failed {
        message: String,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellOutcome {
    pub cell: CellConfig,
    pub status: CellStatus,
}

impl CellOutcome {
    pub fn is_ok(&self) -> bool {
        matches!(self.status, CellStatus::Ok { .. })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSearchResult {
    pub cells: Vec<CellOutcome>,
    pub best_index: usize,
}

impl GridSearchResult {
    pub fn best(&self) -> &CellOutcome {
        &self.cells[self.best_index]
    }

    /// 1-based CV-selected epoch count of the winning cell.
    pub fn best_epoch(&self) -> usize {
        match self.best().status {
            CellStatus::Ok { best_epoch, .. } => best_epoch,
            CellStatus::Failed { .. } => unreachable!("best cell is always Ok"),
        }
    }

    /// The winner as a concrete training recipe: hidden layout plus a config
    /// with the searched values filled in and epochs set to the CV choice.
    pub fn winning_config(&self, base: &TrainConfig) -> (Vec<usize>, TrainConfig) {
        let cell = &self.best().cell;
        let mut cfg = base.clone();
        cfg.learning_rate = cell.learning_rate;
        cfg.margin = cell.margin;
        cfg.dropout = cell.dropout;
        cfg.epochs = self.best_epoch();
        (cell.hidden_dims.clone(), cfg)
    }
}

/// Picks the winner among `(score, first hidden dim, learning rate)` triples:
/// lowest score, ties broken by smaller hidden size, then smaller rate.
fn select_best_index(scored: &[(usize, f64, usize, f64)]) -> usize {
    let mut best = scored[0];
    for &cand in &scored[1..] {
        let (_, c_loss, c_dh, c_lr) = cand;
        let (_, b_loss, b_dh, b_lr) = best;
        let better = c_loss < b_loss
            || (c_loss == b_loss && (c_dh < b_dh || (c_dh == b_dh && c_lr < b_lr)));
        if better {
            best = cand;
        }
    }
    best.0
}

fn run_cell<S: Scalar>(
    dataset: &PairedDataset<S>,
    folds: &[(PairedDataset<S>, PairedDataset<S>)],
    cell: &CellConfig,
    cell_index: u64,
    space: &GridSpace,
    base: &TrainConfig,
    seed: u64,
) -> Result<CellStatus> {
    let mut per_fold: Vec<Vec<f64>> = Vec::with_capacity(folds.len());
    for (f, (train_set, test_set)) in folds.iter().enumerate() {
        let train_seed = derive_seed(seed, &[1, cell_index, f as u64]);
        let init_seed = derive_seed(seed, &[2, cell_index, f as u64]);
        let model = init_model::<S>(
            dataset.x().dim(),
            dataset.y().dim(),
            &cell.hidden_dims,
            space.activation,
            space.init,
            init_seed,
        )?;
        let cfg = cell.apply(base, train_seed);
        match train(model, train_set, test_set, &cfg) {
            Ok((_, history)) => {
                per_fold.push(history.records.iter().map(|r| r.test_loss).collect());
            }
            Err(Error::Diverged { epoch, loss }) => {
                return Ok(CellStatus::Failed {
                    message: format!("fold {f}: diverged at epoch {epoch} (loss {loss:e})"),
                });
            }
            Err(e) => return Err(e),
        }
    }
    let epochs = per_fold[0].len();
    let mean_by_epoch: Vec<f64> = (0..epochs)
        .map(|e| per_fold.iter().map(|f| f[e]).sum::<f64>() / per_fold.len() as f64)
        .collect();
    let (best_idx, &best_loss) = mean_by_epoch
        .iter()
        .enumerate()
        .min_by(|(_, a), (_, b)| a.partial_cmp(b).expect("finite CV losses"))
        .expect("at least one epoch");
    Ok(CellStatus::Ok {
        mean_test_loss_by_epoch: mean_by_epoch,
        best_epoch: best_idx + 1,
        best_loss,
    })
}

/// Exhaustive k-fold CV over the grid. Every cell is scored by its mean test
/// loss at the best epoch; the best cell is the one with the lowest score
/// (ties: smaller first hidden dim, then smaller learning rate). Diverging
/// cells are reported as `Failed` and excluded from the ranking.
///
/// The fold partition is shared by all cells and derived from `seed`, as are
/// each cell×fold's init and training seeds, so the whole search is
/// deterministic and cells can be evaluated in parallel.
pub fn grid_search_cv<S: Scalar>(
    dataset: &PairedDataset<S>,
    space: &GridSpace,
    base: &TrainConfig,
    k_folds: usize,
    seed: u64,
) -> Result<GridSearchResult> {
    space.validate()?;
    base.validate()?;
    if base.epochs == 0 {
        return Err(Error::InvalidArgument(
            "grid search needs a positive epoch budget".into(),
        ));
    }
    let folds = k_fold_split(dataset, k_folds, derive_seed(seed, &[0]))?;
    let cells = space.cells(base);
    let outcomes: Vec<CellOutcome> = cells
        .into_par_iter()
        .enumerate()
        .map(|(c, cell)| {
            let status = run_cell(dataset, &folds, &cell, c as u64, space, base, seed)?;
            Ok(CellOutcome { cell, status })
        })
        .collect::<Result<_>>()?;

    let scored: Vec<(usize, f64, usize, f64)> = outcomes
        .iter()
        .enumerate()
        .filter_map(|(i, o)| match o.status {
            CellStatus::Ok { best_loss, .. } => {
                Some((i, best_loss, o.cell.first_hidden_dim(), o.cell.learning_rate))
            }
            CellStatus::Failed { .. } => None,
        })
        .collect();
    if scored.is_empty() {
        return Err(Error::AllCellsFailed(outcomes.len()));
    }
    let best_index = select_best_index(&scored);
    Ok(GridSearchResult {
        cells: outcomes,
        best_index,
    })
}
