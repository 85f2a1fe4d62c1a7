//! Geometric parameter schedules and their regime classification.
//!
//! A schedule fixes the scale weights `λ_n = λ0 · g^n`, the partial-sum
//! penalties `a_n = a0 / d^n` and the exponents `(α, β, γ)` used by every
//! scale problem
//!
//! ```text
//! min  λ_n [ d(N̂, N(σ̃_{n-1} + σ))^α + a_n |σ̃_{n-1} + σ|^γ ] + |σ|^β
//! ```
//!
//! The convergence statements available for a run depend only on the
//! asymptotic ratios `2^{βn} / λ_n` and `2^{βn} / (λ_n a_n)`, which for
//! geometric families reduce to comparisons between `g`, `g / d` and `2^β`.

use serde::{Deserialize, Serialize};

use crate::error::ScheduleError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleSchedule {
    pub lambda0: f64,
    pub lambda_growth: f64,
    pub a0: f64,
    pub a_decay: f64,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub n_max: usize,
}

/// Strongest parameter condition satisfied by a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScheduleRegime {
    /// `a_n ≡ 0` and `limsup 2^{βn}/λ_n < ∞`.
    Basic,
    /// `a_n ↓ 0` and `limsup 2^{βn}/λ_n < ∞`.
    Tight,
    /// `a_n ↓ 0` and `2^{βn}/(λ_n a_n) → 0`.
    TightConvergent,
    Unclassified,
}

impl std::fmt::Display for ScheduleRegime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let name = match self {
            ScheduleRegime::Basic => "Basic",
            ScheduleRegime::Tight => "Tight",
            ScheduleRegime::TightConvergent => "TightConvergent",
            ScheduleRegime::Unclassified => "Unclassified",
        };
        f.write_str(name)
    }
}

impl ScaleSchedule {
    /// Basic schedule `λ_n = λ0 · g^n`, `a_n = 0`, with the given exponents.
    pub fn basic(lambda0: f64, lambda_growth: f64, alpha: f64, beta: f64, n_max: usize) -> Self {
        Self {
            lambda0,
            lambda_growth,
            a0: 0.0,
            a_decay: 1.0,
            alpha,
            beta,
            gamma: 1.0,
            n_max,
        }
    }

    pub fn tight(
        lambda0: f64,
        lambda_growth: f64,
        a0: f64,
        a_decay: f64,
        (alpha, beta, gamma): (f64, f64, f64),
        n_max: usize,
    ) -> Self {
        Self {
            lambda0,
            lambda_growth,
            a0,
            a_decay,
            alpha,
            beta,
            gamma,
            n_max,
        }
    }

    pub fn validate(&self) -> Result<(), ScheduleError> {
        let positive = |name: &'static str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ScheduleError::Invalid { field: name, value: v })
            }
        };
        positive("lambda0", self.lambda0)?;
        positive("alpha", self.alpha)?;
        positive("beta", self.beta)?;
        positive("gamma", self.gamma)?;
        if !(self.lambda_growth.is_finite() && self.lambda_growth > 1.0) {
            return Err(ScheduleError::Invalid {
                field: "lambda_growth",
                value: self.lambda_growth,
            });
        }
        if !(self.a0.is_finite() && self.a0 >= 0.0) {
            return Err(ScheduleError::Invalid { field: "a0", value: self.a0 });
        }
        if !(self.a_decay.is_finite() && self.a_decay >= 1.0) {
            return Err(ScheduleError::Invalid {
                field: "a_decay",
                value: self.a_decay,
            });
        }
        for n in 0..=self.n_max {
            let lambda = self.lambda(n);
            if !(lambda.is_finite() && lambda > 0.0) {
                return Err(ScheduleError::LambdaOverflow { n, value: lambda });
            }
        }
        Ok(())
    }

    pub fn lambda(&self, n: usize) -> f64 {
        self.lambda0 * self.lambda_growth.powi(n as i32)
    }

    /// `a_n`, clamped so that the computed sequence is nonincreasing bit for bit.
    pub fn a(&self, n: usize) -> f64 {
        if self.a0 == 0.0 {
            return 0.0;
        }
        let mut value = self.a0;
        for k in 1..=n {
            let next = self.a0 / self.a_decay.powi(k as i32);
            value = next.min(value);
        }
        value
    }

    pub fn lambdas(&self) -> Vec<f64> {
        (0..=self.n_max).map(|n| self.lambda(n)).collect()
    }

    pub fn a_values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.n_max + 1);
        let mut prev = f64::INFINITY;
        for n in 0..=self.n_max {
            let v = if self.a0 == 0.0 {
                0.0
            } else {
                (self.a0 / self.a_decay.powi(n as i32)).min(prev)
            };
            prev = v;
            out.push(v);
        }
        out
    }

    pub fn regime(&self) -> ScheduleRegime {
        classify_schedule(self)
    }
}

/// Classifies a schedule into the strongest regime whose defining condition
/// holds. Geometric families make every condition a closed-form comparison.
pub fn classify_schedule(s: &ScaleSchedule) -> ScheduleRegime {
    let two_beta = 2f64.powf(s.beta);
    let lambda_bounded = s.lambda_growth >= two_beta;
    if s.a0 == 0.0 {
        return if lambda_bounded {
            ScheduleRegime::Basic
        } else {
            ScheduleRegime::Unclassified
        };
    }
    let a_vanishes = s.a_decay > 1.0;
    if !a_vanishes {
        return ScheduleRegime::Unclassified;
    }
    if s.lambda_growth / s.a_decay > two_beta {
        ScheduleRegime::TightConvergent
    } else if lambda_bounded {
        ScheduleRegime::Tight
    } else {
        ScheduleRegime::Unclassified
    }
}

/// One row of the diagnostic ratio table printed by `check-schedule`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatioRow {
    pub n: usize,
    pub lambda: f64,
    pub a: f64,
    /// `2^{βn} / λ_n`
    pub basic_ratio: f64,
    /// `2^{βn} / (λ_n a_n)`; infinite when `a_n = 0`.
    pub tight_ratio: f64,
}

/// Directly evaluated ratio sequences for `n = 0..=n_last`.
///
/// Evaluated in log space so that large `n` neither overflows nor
/// underflows before the ratio is formed.
pub fn ratio_table(s: &ScaleSchedule, n_last: usize) -> Vec<RatioRow> {
    let ln2b = s.beta * std::f64::consts::LN_2;
    (0..=n_last)
        .map(|n| {
            let nf = n as f64;
            let ln_lambda = s.lambda0.ln() + nf * s.lambda_growth.ln();
            let basic = (nf * ln2b - ln_lambda).exp();
            let tight = if s.a0 == 0.0 {
                f64::INFINITY
            } else {
                let ln_a = s.a0.ln() - nf * s.a_decay.ln();
                (nf * ln2b - ln_lambda - ln_a).exp()
            };
            RatioRow {
                n,
                lambda: s.lambda(n),
                a: s.a(n),
                basic_ratio: basic,
                tight_ratio: tight,
            }
        })
        .collect()
}
