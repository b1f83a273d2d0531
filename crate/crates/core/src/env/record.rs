use std::io::{self, Write};

use crate::error::{Error, Result};

pub const RUN_CSV_HEADER: &str = "trial,t,arm,reward,inst_regret,cum_regret,beta,round_time_ns";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RoundLog {
    /// 1-based round index.
    pub t: usize,
    pub arm: usize,
    pub reward: f64,
    pub inst_regret: f64,
    pub cum_regret: f64,
    pub beta: f64,
    /// Wall time of select + observe.
    pub round_time_ns: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub total_regret: f64,
    /// `1 / inf mu'` over `[-S, S]`.
    pub kappa_analytic: f64,
    /// `1 / min mu'(x^T theta*)` over every presented arm.
    pub kappa_empirical: f64,
    pub wall_time_ns: u64,
    pub fit_warnings: usize,
}

/// Per-round log of a single trial.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub policy: String,
    pub rounds: Vec<RoundLog>,
    /// `mu'` at the optimal arm of each round.
    pub optimal_slopes: Vec<f64>,
    pub summary: RunSummary,
}

impl RunRecord {
    pub fn horizon(&self) -> usize {
        self.rounds.len()
    }

    pub fn final_regret(&self) -> f64 {
        self.rounds.last().map_or(0.0, |r| r.cum_regret)
    }

    pub fn cum_regret(&self) -> Vec<f64> {
        self.rounds.iter().map(|r| r.cum_regret).collect()
    }

    pub fn round_times(&self) -> Vec<u64> {
        self.rounds.iter().map(|r| r.round_time_ns).collect()
    }

    /// Writes the rows of this record under trial index `trial`.
    pub fn write_rows<W: Write>(&self, trial: usize, out: &mut W) -> io::Result<()> {
        for r in &self.rounds {
            writeln!(
                out,
                "{trial},{},{},{},{},{},{},{}",
                r.t, r.arm, r.reward, r.inst_regret, r.cum_regret, r.beta, r.round_time_ns
            )?;
        }
        Ok(())
    }
}

/// `1 / ((1/T) sum_t mu'(x_{t,*}^T theta*))`.
pub fn kappa_star_empirical(optimal_slopes: &[f64]) -> Result<f64> {
    if optimal_slopes.is_empty() {
        return Err(Error::Contract(
            "kappa* is undefined for an empty run".into(),
        ));
    }
    let mean = optimal_slopes.iter().sum::<f64>() / optimal_slopes.len() as f64;
    Ok(1.0 / mean)
}

pub fn write_run_csv<'a, W, I>(out: &mut W, records: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (usize, &'a RunRecord)>,
{
    writeln!(out, "{RUN_CSV_HEADER}")?;
    for (trial, rec) in records {
        rec.write_rows(trial, out)?;
    }
    Ok(())
}
