//! Window-size sensitivity: Monte-Carlo means of NCU and budget deviation
//! for a list of window sizes.

use sper_core::RunConfig;

use crate::error::{Error, Result};
use crate::pipeline::run;
use crate::synth::SyntheticSpec;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub window_size: usize,
    pub runs: usize,
    pub mean_ncu: f64,
    pub mean_ncu_matched: f64,
    pub mean_deviation: f64,
    pub mean_recall: Option<f64>,
}

pub const SWEEP_HEADER: &str = "window,runs,mean_ncu_vs_topB,mean_ncu_matched,mean_deviation,mean_recall";

impl SweepRow {
    pub fn to_csv(&self) -> String {
        use crate::report::fmt_g6;
        format!(
            "{},{},{},{},{},{}",
            self.window_size,
            self.runs,
            fmt_g6(self.mean_ncu),
            fmt_g6(self.mean_ncu_matched),
            fmt_g6(self.mean_deviation),
            self.mean_recall.map(fmt_g6).unwrap_or_default()
        )
    }
}

/// Parses `start:end:step` (inclusive) or a comma list such as `100,200,400`.
pub fn parse_window_list(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::Usage(format!("bad window list {spec:?}; use start:end:step or a,b,c"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        let [start, end, step] = parts.as_slice() else {
            return Err(bad());
        };
        let (start, end, step) = (num(start)?, num(end)?, num(step)?);
        if step == 0 || start > end {
            return Err(bad());
        }
        Ok((start..=end).step_by(step).collect())
    } else {
        spec.split(',').map(num).collect()
    }
}

/// For each window size, runs the stochastic filter on `spec`'s stream once
/// per seed (the seed drives both stream generation and the filter) and
/// averages the results.
pub fn sweep_window(spec: &SyntheticSpec, base: &RunConfig, windows: &[usize], seeds: &[u64]) -> Result<Vec<SweepRow>> {
    if seeds.is_empty() {
        return Err(Error::Usage("sweep needs at least one seed".into()));
    }
    let configs = windows
        .iter()
        .map(|&w| {
            RunConfig {
                window_size: w,
                k: spec.k,
                ..base.clone()
            }
            .validated()
        })
        .collect::<sper_core::Result<Vec<_>>>()?;

    let mut sums = vec![(0.0, 0.0, 0.0, 0.0, true); windows.len()];
    for &seed in seeds {
        let workload = SyntheticSpec { seed, ..spec.clone() }.generate()?;
        let truth = (!workload.truth.is_empty()).then_some(&workload.truth);
        for (cfg, acc) in configs.iter().zip(&mut sums) {
            let out = run(&mut &workload, &RunConfig { seed, ..cfg.clone() })?;
            let m = out.metrics(truth);
            acc.0 += m.ncu.vs_top_b.unwrap_or(0.0);
            acc.1 += m.ncu.matched.unwrap_or(0.0);
            acc.2 += m.budget.relative_deviation.unwrap_or(0.0);
            match m.final_recall() {
                Some(r) => acc.3 += r,
                None => acc.4 = false,
            }
        }
    }
    let n = seeds.len() as f64;
    Ok(windows
        .iter()
        .zip(sums)
        .map(|(&w, (ncu, matched, dev, recall, has_recall))| SweepRow {
            window_size: w,
            runs: seeds.len(),
            mean_ncu: ncu / n,
            mean_ncu_matched: matched / n,
            mean_deviation: dev / n,
            mean_recall: has_recall.then(|| recall / n),
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::WeightDistribution;

    fn spec() -> SyntheticSpec {
        SyntheticSpec {
            n_queries: 2000,
            k: 5,
            distribution: WeightDistribution::mixture(0.2),
            seed: 0,
        }
    }

    #[test]
    fn window_lists() {
        assert_eq!(parse_window_list("100:500:100").unwrap(), [100, 200, 300, 400, 500]);
        assert_eq!(parse_window_list("200").unwrap(), [200]);
        assert_eq!(parse_window_list("50, 80").unwrap(), [50, 80]);
        assert!(parse_window_list("1:2").is_err());
        assert!(parse_window_list("5:1:1").is_err());
        assert!(parse_window_list("a").is_err());
    }

    #[test]
    fn single_window_single_seed_equals_plain_run() {
        let base = RunConfig::default();
        let rows = sweep_window(&spec(), &base, &[200], &[4]).unwrap();
        let w = SyntheticSpec { seed: 4, ..spec() }.generate().unwrap();
        let m = run(&mut &w, &RunConfig { seed: 4, ..base }).unwrap().metrics(Some(&w.truth));
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].mean_ncu, m.ncu.vs_top_b.unwrap());
        assert_eq!(rows[0].mean_deviation, m.budget.relative_deviation.unwrap());
    }

    #[test]
    fn averages_over_seeds() {
        let base = RunConfig::default();
        let seeds: Vec<u64> = (0..10).collect();
        let rows = sweep_window(&spec(), &base, &[200], &seeds).unwrap();
        let mut total = 0.0;
        for &s in &seeds {
            let w = SyntheticSpec { seed: s, ..spec() }.generate().unwrap();
            total += run(&mut &w, &RunConfig { seed: s, ..base.clone() })
                .unwrap()
                .metrics(Some(&w.truth))
                .ncu
                .vs_top_b
                .unwrap();
        }
        assert!((rows[0].mean_ncu - total / 10.0).abs() < 1e-12);
        assert_eq!(rows[0].runs, 10);
    }

    #[test]
    fn rejects_unstable_windows() {
        assert!(sweep_window(&spec(), &RunConfig::default(), &[20], &[1]).is_err());
    }
}
