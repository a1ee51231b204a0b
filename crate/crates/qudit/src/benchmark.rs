//! Parallel Monte Carlo campaigns and their CSV summary.

use std::time::Instant;

use qudit_core::oracle::{Campaign, CampaignConfig, CampaignReport, Strategy};
use qudit_core::Result;
use rayon::prelude::*;
use serde::Serialize;

pub const CSV_HEADER: [&str; 9] = [
    "d",
    "strategy",
    "trials",
    "successes",
    "max_candidates",
    "mean_candidates",
    "measure_zero_hits",
    "mean_fidelity",
    "seconds",
];

/// Runs trials on the rayon pool. Each trial owns its random stream, so the
/// report does not depend on the thread count.
pub fn run_parallel(cfg: CampaignConfig, timed: bool) -> Result<CampaignReport> {
    let start = Instant::now();
    let campaign = Campaign::new(cfg)?;
    let outcomes = (0..cfg.trials)
        .into_par_iter()
        .map(|i| campaign.trial(i))
        .collect::<Result<Vec<_>>>()?;
    let mut report = campaign.report(&outcomes);
    if timed {
        report.wall_time = Some(start.elapsed().as_secs_f64());
    }
    Ok(report)
}

#[derive(Serialize)]
struct Row<'a> {
    d: usize,
    strategy: &'a str,
    trials: u64,
    successes: u64,
    max_candidates: usize,
    mean_candidates: f64,
    measure_zero_hits: u64,
    mean_fidelity: f64,
    seconds: Option<f64>,
}

pub fn to_csv(reports: &[CampaignReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in reports {
        w.serialize(Row {
            d: r.d,
            strategy: r.strategy.as_str(),
            trials: r.trials,
            successes: r.success_count,
            max_candidates: r.max_candidates,
            mean_candidates: r.mean_candidates,
            measure_zero_hits: r.measure_zero_hits,
            mean_fidelity: r.mean_fidelity,
            seconds: r.wall_time,
        })
        .expect("in-memory CSV write");
    }
    if reports.is_empty() {
        w.write_record(CSV_HEADER).expect("in-memory CSV write");
    }
    String::from_utf8(w.into_inner().expect("in-memory CSV flush")).expect("CSV is UTF-8")
}

/// One report per `(d, strategy)`, dimensions outermost.
pub fn run_grid(
    dims: &[usize],
    strategies: &[Strategy],
    template: CampaignConfig,
    timed: bool,
) -> Result<Vec<CampaignReport>> {
    let mut out = Vec::with_capacity(dims.len() * strategies.len());
    for &dim in dims {
        for &strategy in strategies {
            out.push(run_parallel(
                CampaignConfig {
                    dim,
                    strategy,
                    ..template
                },
                timed,
            )?);
        }
    }
    Ok(out)
}
