//! Decomposition traces and their tabular export.

use serde::Serialize;

use crate::schedule::{ScaleSchedule, ScheduleRegime};

/// Per-scale diagnostics from the inner solver.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScaleReport {
    pub iterations: usize,
    pub converged: bool,
    pub solver_residual: f64,
    /// Objective of the accepted increment.
    pub objective: f64,
    /// Objective of the solver's candidate before the safeguard.
    pub candidate_objective: f64,
    /// True when the candidate was replaced by the zero increment.
    pub safeguard_used: bool,
}

/// History of a multiscale run.
#[derive(Debug, Clone, PartialEq)]
pub struct DecompositionTrace<E> {
    pub schedule: ScaleSchedule,
    pub regime: ScheduleRegime,
    pub increments: Vec<E>,
    pub partial_sums: Vec<E>,
    pub fidelity: Vec<f64>,
    pub regularizer_of_sum: Vec<f64>,
    pub regularizer_of_increment: Vec<f64>,
    pub augmented: Vec<f64>,
    pub reports: Vec<ScaleReport>,
}

impl<E> DecompositionTrace<E> {
    pub fn new(schedule: ScaleSchedule) -> Self {
        Self {
            regime: schedule.regime(),
            schedule,
            increments: Vec::new(),
            partial_sums: Vec::new(),
            fidelity: Vec::new(),
            regularizer_of_sum: Vec::new(),
            regularizer_of_increment: Vec::new(),
            augmented: Vec::new(),
            reports: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.fidelity.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fidelity.is_empty()
    }

    pub fn last_sum(&self) -> Option<&E> {
        self.partial_sums.last()
    }

    /// Rows of stored values, one per scale.
    pub fn residual_summary(&self) -> Vec<SummaryRow> {
        (0..self.len())
            .map(|n| SummaryRow {
                n,
                fidelity: self.fidelity[n],
                augmented: self.augmented[n],
                reg_increment: self.regularizer_of_increment[n],
                reg_sum: self.regularizer_of_sum[n],
                safeguard_used: self.reports[n].safeguard_used,
            })
            .collect()
    }

    pub fn to_json(&self) -> serde_json::Value {
        export_json(&self.schedule, self.regime, None, &self.residual_summary())
    }

    pub fn to_csv(&self) -> String {
        summary_csv(&self.residual_summary())
    }

    /// Applies `f` to every stored element, keeping all scalar histories.
    pub fn map_elements<F, T>(self, mut f: F) -> DecompositionTrace<T>
    where
        F: FnMut(E) -> T,
    {
        DecompositionTrace {
            schedule: self.schedule,
            regime: self.regime,
            increments: self.increments.into_iter().map(&mut f).collect(),
            partial_sums: self.partial_sums.into_iter().map(&mut f).collect(),
            fidelity: self.fidelity,
            regularizer_of_sum: self.regularizer_of_sum,
            regularizer_of_increment: self.regularizer_of_increment,
            augmented: self.augmented,
            reports: self.reports,
        }
    }
}

/// One row of [`DecompositionTrace::residual_summary`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SummaryRow {
    pub n: usize,
    pub fidelity: f64,
    pub augmented: f64,
    pub reg_increment: f64,
    pub reg_sum: f64,
    pub safeguard_used: bool,
}

#[derive(Serialize)]
struct TraceExport<'a> {
    #[serde(skip_serializing_if = "Option::is_none")]
    group: Option<&'a str>,
    schedule: &'a ScaleSchedule,
    regime: ScheduleRegime,
    rows: &'a [SummaryRow],
}

pub(crate) fn export_json(
    schedule: &ScaleSchedule,
    regime: ScheduleRegime,
    group: Option<&str>,
    rows: &[SummaryRow],
) -> serde_json::Value {
    serde_json::to_value(TraceExport {
        group,
        schedule,
        regime,
        rows,
    })
    .expect("trace rows are plain data")
}

pub const SUMMARY_HEADER: &str = "n,fidelity,augmented,reg_increment,reg_sum,safeguard_used";

pub(crate) fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.n,
            fmt_f64(r.fidelity),
            fmt_f64(r.augmented),
            fmt_f64(r.reg_increment),
            fmt_f64(r.reg_sum),
            r.safeguard_used
        ));
    }
    out
}

/// Shortest round-trip decimal form, with `inf`/`-inf`/`nan` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.to_string()
    } else {
        format!("{x:?}")
    }
}
