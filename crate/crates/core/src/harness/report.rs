use serde::{Deserialize, Serialize};

use super::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::stats::{wilson, Interval, Z95};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Experiment {
    Qver,
    Qint,
    Qpriv,
}

impl std::str::FromStr for Experiment {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "qver" => Ok(Self::Qver),
            "qint" => Ok(Self::Qint),
            "qpriv" => Ok(Self::Qpriv),
            other => Err(Error::Config(format!("unknown experiment {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub index: u64,
    pub seed: u64,
    /// 1 win, 0 loss, −1 false attack.
    pub outcome: i8,
    /// Protocol-specific `key=value` pairs separated by `;`.
    pub aux: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialReport {
    pub experiment: Experiment,
    pub protocol: String,
    pub strategy: String,
    pub config: ExperimentConfig,
    pub wins: u64,
    pub losses: u64,
    pub false_attacks: u64,
    pub win_rate: Option<f64>,
    pub interval: Option<Interval>,
    pub trials: Vec<TrialRecord>,
}

impl TrialReport {
    pub fn new(
        experiment: Experiment,
        protocol: String,
        strategy: String,
        config: ExperimentConfig,
        trials: Vec<TrialRecord>,
    ) -> Self {
        let count = |o: i8| trials.iter().filter(|t| t.outcome == o).count() as u64;
        let (wins, losses, false_attacks) = (count(1), count(0), count(-1));
        let mut report = Self {
            experiment,
            protocol,
            strategy,
            config,
            wins,
            losses,
            false_attacks,
            win_rate: None,
            interval: None,
            trials,
        };
        if let Ok((rate, iv)) = estimate_advantage(&report) {
            report.win_rate = Some(rate);
            report.interval = Some(iv);
        }
        report
    }

    pub fn total(&self) -> u64 {
        self.wins + self.losses + self.false_attacks
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Internal(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("bad report: {e}")))
    }

    /// One row per trial: trial_index, seed, outcome, auxiliary.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let err = |e: csv::Error| Error::Internal(e.to_string());
        w.write_record(["trial_index", "seed", "outcome", "auxiliary"])
            .map_err(err)?;
        for t in &self.trials {
            w.write_record([
                t.index.to_string(),
                t.seed.to_string(),
                t.outcome.to_string(),
                t.aux.clone(),
            ])
            .map_err(err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Internal(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Internal(e.to_string()))
    }
}

/// Win rate among trials that are not false attacks, with a Wilson 95% interval.
pub fn estimate_advantage(report: &TrialReport) -> Result<(f64, Interval)> {
    let n = report.wins + report.losses;
    if n == 0 {
        return Err(Error::DegenerateSample);
    }
    Ok((report.wins as f64 / n as f64, wilson(report.wins, n, Z95)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(wins: u64, losses: u64, false_attacks: u64) -> TrialReport {
        let mut trials = Vec::new();
        let mut push = |o: i8, k: u64| {
            for _ in 0..k {
                let index = trials.len() as u64;
                trials.push(TrialRecord {
                    index,
                    seed: index,
                    outcome: o,
                    aux: String::new(),
                });
            }
        };
        push(1, wins);
        push(0, losses);
        push(-1, false_attacks);
        TrialReport::new(
            Experiment::Qpriv,
            "p".into(),
            "s".into(),
            ExperimentConfig::new("p", 2, 0.0, 1, 0),
            trials,
        )
    }

    #[test]
    fn even_split() {
        let (rate, iv) = estimate_advantage(&report(50, 50, 0)).unwrap();
        assert_eq!(rate, 0.5);
        assert!(iv.contains(0.5));
    }

    #[test]
    fn all_wins() {
        let (rate, iv) = estimate_advantage(&report(100, 0, 0)).unwrap();
        assert_eq!(rate, 1.0);
        assert!(iv.lo > 0.96);
    }

    #[test]
    fn only_false_attacks() {
        let r = report(0, 0, 10);
        assert_eq!(estimate_advantage(&r), Err(Error::DegenerateSample));
        assert_eq!(r.total(), 10);
        assert!(r.win_rate.is_none());
    }

    #[test]
    fn csv_header_and_rows() {
        let csv = report(1, 1, 0).to_csv().unwrap();
        let lines: Vec<_> = csv.lines().collect();
        assert_eq!(lines[0], "trial_index,seed,outcome,auxiliary");
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn json_round_trip() {
        let r = report(3, 2, 1);
        assert_eq!(TrialReport::from_json(&r.to_json().unwrap()).unwrap(), r);
    }
}
