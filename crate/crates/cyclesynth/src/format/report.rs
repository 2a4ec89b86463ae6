//! Simulation report JSON and per-cycle cost CSV.

use serde::Serialize;

use cyclesynth_core::sim::SimReport;

use super::to_json;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
struct ReportFile<'a> {
    stages: usize,
    total_cost: f64,
    cycles: usize,
    empirical_acpc: f64,
    pairs: Vec<PairEntry>,
    entry_stage: Option<usize>,
    seed: u64,
    rng: &'a str,
    cycle_cost_mean: f64,
    cycle_cost_std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
struct PairEntry {
    count_l: usize,
    count_k: usize,
    last_l: Option<usize>,
}

pub fn report_to_json(report: &SimReport) -> String {
    to_json(&ReportFile {
        stages: report.stages,
        total_cost: report.total_cost,
        cycles: report.cycles,
        empirical_acpc: report.empirical_acpc,
        pairs: report
            .pairs
            .iter()
            .map(|c| PairEntry { count_l: c.count_l, count_k: c.count_k, last_l: c.last_l })
            .collect(),
        entry_stage: report.entry_stage,
        seed: report.seed,
        rng: report.rng,
        cycle_cost_mean: report.cycle_cost_mean,
        cycle_cost_std: report.cycle_cost_std,
    })
}

/// `cycle,cost` rows for every completed cycle.
pub fn write_cycle_csv<W: std::io::Write>(costs: &[f64], out: W) -> csv::Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["cycle", "cost"])?;
    for (i, c) in costs.iter().enumerate() {
        writer.write_record([(i + 1).to_string(), c.to_string()])?;
    }
    writer.flush()?;
    Ok(())
}
