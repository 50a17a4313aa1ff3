//! Regret-growth sweeps on the lower-bound family.
//!
//! Every `(N, K)` cell uses the instance tuned to its own `K`
//! (`p_i = 1/2 ± sqrt(N/K)/4`) and reports the cumulative regret after `K`
//! episodes, averaged over seeds.

use crate::aggregate::mean_ci;
use crate::config::{AlgoKind, EnvKind, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::oracle::{regret_slope, ScalingFit};
use crate::runner::run_experiment;

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingSweep {
    pub branching: Vec<usize>,
    pub episodes: Vec<usize>,
    pub algo: AlgoKind,
    pub seeds: Vec<u64>,
    pub master_seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCell {
    pub branching: usize,
    pub episodes: usize,
    pub mean_regret: f64,
    pub ci_half_width: Option<f64>,
    pub per_seed: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingTable {
    pub algo: AlgoKind,
    pub cells: Vec<ScalingCell>,
    /// One fit per branching factor with at least four `K` values.
    pub fits: Vec<(usize, ScalingFit)>,
}

impl ScalingTable {
    pub fn cell(&self, branching: usize, episodes: usize) -> Option<&ScalingCell> {
        self.cells
            .iter()
            .find(|c| c.branching == branching && c.episodes == episodes)
    }

    pub fn fit(&self, branching: usize) -> Option<&ScalingFit> {
        self.fits.iter().find(|(n, _)| *n == branching).map(|(_, f)| f)
    }
}

/// Configuration for one cell of the sweep.
pub fn cell_config(sweep: &ScalingSweep, branching: usize, episodes: usize) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::for_pair(EnvKind::LowerBound, sweep.algo);
    cfg.episodes = episodes;
    cfg.seeds = sweep.seeds.clone();
    cfg.master_seed = sweep.master_seed;
    cfg.eval_every = episodes;
    cfg.eval_episodes = 1;
    cfg.track_regret = true;
    cfg.lower_bound.branching = branching;
    cfg.lower_bound.tuned_for_episodes = Some(episodes);
    cfg
}

pub fn run_cell(sweep: &ScalingSweep, branching: usize, episodes: usize) -> Result<ScalingCell> {
    let cfg = cell_config(sweep, branching, episodes);
    let per_seed = run_experiment(&cfg)?
        .into_iter()
        .map(|recs| {
            recs.last()
                .and_then(|r| r.cum_regret)
                .ok_or_else(|| HarnessError::Oracle("run produced no regret".into()))
        })
        .collect::<Result<Vec<f64>>>()?;
    let (mean, half) = mean_ci(&per_seed);
    Ok(ScalingCell {
        branching,
        episodes,
        mean_regret: mean,
        ci_half_width: half,
        per_seed,
    })
}

pub fn run_sweep(sweep: &ScalingSweep) -> Result<ScalingTable> {
    if sweep.algo == AlgoKind::Twap {
        return Err(HarnessError::Inadmissible("twap is defined for trading only".into()));
    }
    let mut cells = Vec::new();
    let mut fits = Vec::new();
    for &n in &sweep.branching {
        let row: Vec<ScalingCell> = sweep
            .episodes
            .iter()
            .map(|&k| run_cell(sweep, n, k))
            .collect::<Result<_>>()?;
        if row.len() >= 4 {
            let ks: Vec<f64> = row.iter().map(|c| c.episodes as f64).collect();
            let rs: Vec<f64> = row.iter().map(|c| c.mean_regret).collect();
            fits.push((n, regret_slope(&ks, &rs)?));
        }
        cells.extend(row);
    }
    Ok(ScalingTable {
        algo: sweep.algo,
        cells,
        fits,
    })
}

/// Cells as CSV rows followed by one `fit` row per branching factor.
pub fn render_csv(table: &ScalingTable) -> String {
    let mut out = String::from("kind,algo,N,K,mean_regret,ci_half_width,slope,constant\n");
    let algo = table.algo.as_str();
    for c in &table.cells {
        out.push_str(&format!(
            "cell,{algo},{},{},{},{},,\n",
            c.branching,
            c.episodes,
            c.mean_regret,
            c.ci_half_width.map(|h| h.to_string()).unwrap_or_default()
        ));
    }
    for (n, f) in &table.fits {
        out.push_str(&format!("fit,{algo},{n},,,,{},{}\n", f.slope, f.constant()));
    }
    out
}
