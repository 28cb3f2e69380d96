use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::sim::{run, Metrics, SimConfig, Trace};
use crate::world::Scenario;

pub const SWEEP_HEADER: [&str; 5] = ["h_m", "min_separation_cm", "energy_kJ_per_kg", "t_f_s", "status"];

/// One sensing radius of a sweep. Numeric fields are empty when the run
/// failed.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub h_m: f64,
    pub min_separation_cm: Option<f64>,
    #[serde(rename = "energy_kJ_per_kg")]
    pub energy_kj_per_kg: Option<f64>,
    pub t_f_s: Option<f64>,
    pub status: String,
}

#[derive(Debug, Clone, Default)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// Metrics and trace for each row, `None` where the run failed.
    pub runs: Vec<Option<(Metrics, Trace)>>,
}

impl SweepResult {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(SWEEP_HEADER).map_err(|e| Error::Parse(e.to_string()))?;
        for r in &self.rows {
            let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
            let h = if r.h_m.is_infinite() { "inf".to_string() } else { r.h_m.to_string() };
            w.write_record([h, opt(r.min_separation_cm), opt(r.energy_kj_per_kg), opt(r.t_f_s), r.status.clone()])
                .map_err(|e| Error::Parse(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("csv is utf-8")
    }
}

/// Runs `base` once per sensing radius in `hs`. Runs execute in parallel;
/// rows come back in the order of `hs`. A failed run yields a failed row.
pub fn sweep(base: &Scenario, hs: &[f64], config: &SimConfig) -> SweepResult {
    let results: Vec<(SweepRow, Option<(Metrics, Trace)>)> = hs
        .par_iter()
        .map(|&h| {
            let mut s = base.clone();
            s.h = h;
            match run(&s, config) {
                Ok((trace, m)) => (
                    SweepRow {
                        h_m: h,
                        min_separation_cm: Some(m.min_separation_m * 100.0),
                        energy_kj_per_kg: Some(m.total_energy_kj_per_kg),
                        t_f_s: Some(m.t_f_s),
                        status: "ok".to_string(),
                    },
                    Some((m, trace)),
                ),
                Err(e) => (
                    SweepRow {
                        h_m: h,
                        min_separation_cm: None,
                        energy_kj_per_kg: None,
                        t_f_s: None,
                        status: format!("failed: {e}"),
                    },
                    None,
                ),
            }
        })
        .collect();
    let (rows, runs) = results.into_iter().unzip();
    SweepResult { rows, runs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world::{AgentState, GoalSpec};

    fn base() -> Scenario {
        Scenario {
            agents: vec![AgentState::at_rest(1, 0.0, 0.0), AgentState::at_rest(2, 1.0, 0.0)],
            goals: vec![GoalSpec::fixed(1, 0.0, 2.0), GoalSpec::fixed(2, 1.0, 2.0)],
            h: f64::INFINITY,
            radius: 0.05,
            deadline: 10.0,
            v_min: 0.0,
            v_max: 2.0,
            u_min: 0.0,
            u_max: 5.0,
            duration: 20.0,
            dt: 0.2,
        }
    }

    #[test]
    fn rows_follow_request_order() {
        let cfg = SimConfig::default();
        let a = sweep(&base(), &[f64::INFINITY, 0.5], &cfg);
        let b = sweep(&base(), &[0.5, f64::INFINITY], &cfg);
        assert_eq!(a.rows[0], b.rows[1]);
        assert_eq!(a.rows[1], b.rows[0]);
        assert!(a.rows.iter().all(|r| r.status == "ok"));
        assert!(a.rows[0].t_f_s.unwrap() <= 20.0);
    }

    #[test]
    fn failed_run_keeps_sweep_going() {
        // h below the minimum sensing radius fails validation
        let r = sweep(&base(), &[0.01, f64::INFINITY], &SimConfig::default());
        assert!(r.rows[0].status.starts_with("failed"));
        assert_eq!(r.rows[1].status, "ok");
        let text = r.to_csv_string();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
        assert!(lines.next().unwrap().starts_with("0.01,,,,"));
        assert!(lines.next().unwrap().starts_with("inf,"));
    }
}
