//! Invariant checks over a recorded trace.

use std::fmt;

use crate::dfwagt::{RunTrace, FEASIBILITY_SLACK};
use crate::error::Error;

/// Tolerance of the mean-tracking identities.
pub const CONSERVATION_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CheckStatus {
    Pass,
    /// First round at which the check failed.
    Fail { round: u64 },
    /// Horizon too short for the check to be meaningful.
    Skipped,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditCheck {
    pub name: &'static str,
    pub status: CheckStatus,
    /// Largest observed value of the checked quantity.
    pub worst: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub checks: Vec<AuditCheck>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AuditThresholds {
    /// `max_i 2R_i`
    pub diameter: f64,
    pub consensus_factor: f64,
    pub tracker_factor: f64,
    pub decay_from_round: u64,
}

impl AuditReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| !matches!(c.status, CheckStatus::Fail { .. }))
    }

    pub fn first_failure(&self) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| matches!(c.status, CheckStatus::Fail { .. }))
    }

    pub fn check(&self, name: &str) -> Option<&AuditCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// `Err(Error::Invariant)` naming the first failed check.
    pub fn into_result(self) -> Result<Self, Error> {
        match self.first_failure() {
            Some(AuditCheck {
                name,
                status: CheckStatus::Fail { round },
                ..
            }) => Err(Error::Invariant {
                check: name.to_string(),
                round: *round,
            }),
            _ => Ok(self),
        }
    }

    pub fn evaluate(trace: &RunTrace, t: &AuditThresholds) -> Self {
        let per_round = |name, threshold, value: fn(&crate::dfwagt::RoundRecord) -> f64| {
            let mut worst: f64 = 0.0;
            let mut status = CheckStatus::Pass;
            for r in &trace.records {
                let v = value(r);
                worst = worst.max(v);
                // NaN must fail, hence the negated comparison.
                if !(v <= threshold) && status == CheckStatus::Pass {
                    status = CheckStatus::Fail { round: r.k };
                }
            }
            AuditCheck {
                name,
                status,
                worst,
                threshold,
            }
        };
        let mut checks = vec![
            per_round("lemma2_v_mean", CONSERVATION_TOL, |r| r.v_mean_residual),
            per_round("lemma2_y_mean", CONSERVATION_TOL, |r| r.y_mean_residual),
            per_round("feasibility", FEASIBILITY_SLACK, |r| r.feasibility_violation),
        ];

        let last = trace.last();
        let long_enough = last.k >= t.decay_from_round;
        let threshold = t.consensus_factor * t.diameter;
        checks.push(AuditCheck {
            name: "consensus_decay",
            status: decay_status(long_enough, last.consensus_err <= threshold, last.k),
            worst: last.consensus_err,
            threshold,
        });
        let early = trace.at(10).map(|r| r.tracker_err).unwrap_or(f64::NAN);
        let ratio = if early == 0.0 && last.tracker_err == 0.0 {
            0.0
        } else {
            last.tracker_err / early
        };
        checks.push(AuditCheck {
            name: "tracker_decay",
            status: decay_status(
                long_enough && !early.is_nan(),
                ratio <= t.tracker_factor,
                last.k,
            ),
            worst: ratio,
            threshold: t.tracker_factor,
        });
        Self { checks }
    }
}

fn decay_status(applicable: bool, ok: bool, round: u64) -> CheckStatus {
    match (applicable, ok) {
        (false, _) => CheckStatus::Skipped,
        (true, true) => CheckStatus::Pass,
        (true, false) => CheckStatus::Fail { round },
    }
}

impl fmt::Display for AuditReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match c.status {
                CheckStatus::Pass => "pass".to_string(),
                CheckStatus::Fail { round } => format!("FAIL (first at round {round})"),
                CheckStatus::Skipped => "skipped".to_string(),
            };
            writeln!(
                f,
                "{:<22} {:<28} worst {:.3e} threshold {:.3e}",
                c.name, status, c.worst, c.threshold
            )?;
        }
        Ok(())
    }
}
