//! Threshold conditions for weak and strong well-posedness of the
//! McKean-Vlasov SDE with kernel `b in L^r(B^beta_{p,q})` and initial law
//! `mu in B^{beta0}_{p0,q0}`, together with the derived exponents
//! `zeta0, Gamma, theta` and the integrability window for the non-linear
//! drift.
//!
//! Conventions: `1/inf = 0`, the conjugate of 1 is `inf`, and every
//! inequality is strict.

use crate::error::{Error, Result};

/// Parameter tuple for the kernel space `L^r(B^beta_{p,q})`, the initial law
/// space `B^{beta0}_{p0,q0}`, and the slack `eta`.
#[derive(Debug, Clone, Copy)]
pub struct LebesgueBesovIndices {
    pub r: f64,
    pub p: f64,
    pub q: f64,
    pub beta: f64,
    pub p0: f64,
    pub q0: f64,
    pub beta0: f64,
    pub d: usize,
    pub alpha: f64,
    pub eta: f64,
    /// Whether `div(b) in L^r(B^beta_{p,q})` is asserted (required at beta = -1).
    pub has_div_bound: bool,
}

impl LebesgueBesovIndices {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("r", self.r), ("p", self.p), ("q", self.q), ("p0", self.p0), ("q0", self.q0)] {
            if !(v >= 1.0) {
                return Err(Error::Parameter(format!("{name} must lie in [1, inf], got {v}")));
            }
        }
        if !(self.beta >= -1.0 && self.beta <= 0.0) {
            return Err(Error::Parameter(format!("beta must lie in [-1, 0], got {}", self.beta)));
        }
        if !(self.beta0 >= 0.0) {
            return Err(Error::Parameter(format!("beta0 must be >= 0, got {}", self.beta0)));
        }
        if !(self.alpha > 1.0 && self.alpha <= 2.0) {
            return Err(Error::Parameter(format!("alpha must lie in (1, 2], got {}", self.alpha)));
        }
        if !(self.eta > 0.0) {
            return Err(Error::Parameter(format!("eta must be positive, got {}", self.eta)));
        }
        if !(1..=3).contains(&self.d) {
            return Err(Error::Parameter(format!("d must be 1, 2 or 3, got {}", self.d)));
        }
        Ok(())
    }

    fn inv(x: f64) -> f64 {
        if x.is_infinite() {
            0.0
        } else {
            1.0 / x
        }
    }

    /// `beta * 1_{beta in (-1, 0]}`: the indicator bookkeeping of the
    /// exponent formulas; beta = -1 drops the beta contribution.
    pub fn beta_ind(&self) -> f64 {
        if self.beta > -1.0 {
            self.beta
        } else {
            0.0
        }
    }

    pub fn intrinsic_index(&self) -> f64 {
        intrinsic_index(self.beta0, self.p0, self.d)
    }
}

/// The intrinsic Besov index `beta0 + d/p0'` of the initial law.
pub fn intrinsic_index(beta0: f64, p0: f64, d: usize) -> f64 {
    let inv_p0 = if p0.is_infinite() { 0.0 } else { 1.0 / p0 };
    beta0 + d as f64 * (1.0 - inv_p0)
}

/// Which branch of the strong-uniqueness max-form binds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StrongBranch {
    /// `2 - 3a/2 + a/r + [.]` (raw bracket) dominates.
    Strengthened,
    /// `1 - a + a/r + [.]_+` (weak-condition bracket) dominates.
    Weak,
}

/// Verdicts and derived exponents for one parameter tuple.
#[derive(Debug, Clone)]
pub struct ConditionReport {
    pub intrinsic_index: f64,
    pub c0: bool,
    pub c0_s: bool,
    pub c1: bool,
    pub c2: bool,
    pub c1_s: bool,
    pub c2_s: bool,
    pub c2_reason: Option<String>,
    pub zeta0: f64,
    pub gamma: f64,
    pub theta: f64,
    pub r0_window: Option<(f64, f64)>,
    /// Slack of the binding inequality in the beta scale.
    pub margin: f64,
    /// Largest eta keeping Gamma positive (the gap at eta = 0).
    pub eta_max: f64,
    pub binding_branch: StrongBranch,
}

impl ConditionReport {
    /// Weak well-posedness under the quadratic-estimate route.
    pub fn well_posed(&self) -> bool {
        self.c1 || self.c2
    }

    pub fn strongly_well_posed(&self) -> bool {
        self.c1_s || self.c2_s
    }
}

fn pos(x: f64) -> f64 {
    x.max(0.0)
}

/// Evaluate every condition and exponent for one tuple.
pub fn evaluate_conditions(idx: &LebesgueBesovIndices) -> Result<ConditionReport> {
    idx.validate()?;
    let a = idx.alpha;
    let d = idx.d as f64;
    let inv = LebesgueBesovIndices::inv;
    let a_over_r = a * inv(idx.r);
    let d_over_p = d * inv(idx.p);
    let i0 = idx.intrinsic_index();
    let beta = idx.beta;
    let beta_in_range = beta > -1.0; // beta in (-1, 0], given validate()
    let bracket = -beta + d_over_p - i0;

    // (C0): 1 - a + d/p + a/r < beta, beta in (-1, 0]
    let c0 = beta_in_range && 1.0 - a + d_over_p + a_over_r < beta;
    // (C0_S): 2 - 3a/2 + d/p + a/r < beta
    let c0_s = beta_in_range && 2.0 - 1.5 * a + d_over_p + a_over_r < beta;

    // (C1): 1 - a + a/r + [ -beta + d/p - (beta0 + d/p0') ]_+ < beta
    let c1_lhs = 1.0 - a + a_over_r + pos(bracket);
    let c1 = beta_in_range && c1_lhs < beta;

    // (C2), only at beta = -1 with the divergence structure condition
    let mut c2_reason = None;
    let c2 = if beta_in_range {
        false
    } else if !idx.has_div_bound {
        c2_reason = Some("missing div(b) structure condition".to_string());
        false
    } else {
        a_over_r < a - 1.0 && 1.0 - a + a_over_r + d_over_p - i0 < beta && d_over_p < i0
    };

    // (C1_S): max of the strengthened raw-bracket expression and the (C1) one
    let strength_lhs = 2.0 - 1.5 * a + a_over_r + bracket;
    let c1_s_lhs = strength_lhs.max(c1_lhs);
    let c1_s = beta_in_range && c1_s_lhs < beta;
    let binding_branch =
        if strength_lhs >= c1_lhs { StrongBranch::Strengthened } else { StrongBranch::Weak };

    // (C2_S) is asserted on top of (C2), so the strengthened verdict implies
    // the weak one
    let c2_s = c2 && 2.0 - 1.5 * a + a_over_r + (d_over_p - i0) < beta;

    let beta_ind = idx.beta_ind();
    let zeta0 = (-beta + d_over_p - i0) / a;
    let gamma_at_zero = a + beta_ind - 1.0 - a_over_r - a * zeta0;
    let gamma = gamma_at_zero - idx.eta;
    let theta = 1.0 - (1.0 - beta_ind) / a - inv(idx.r) - idx.eta / a;

    let r0_window = if (c1 || c2) && gamma > 0.0 && theta > 0.0 {
        let lower = a / (a - (1.0 - beta_ind));
        let upper = if idx.r.is_infinite() { 1.0 / theta } else { idx.r / (1.0 + idx.r * theta) };
        if lower < upper {
            Some((lower, upper))
        } else {
            None
        }
    } else {
        None
    };

    let margin = if beta_in_range {
        beta - c1_lhs
    } else {
        // smallest slack among the three (C2) clauses
        let s1 = (a - 1.0) - a_over_r;
        let s2 = beta - (1.0 - a + a_over_r + d_over_p - i0);
        let s3 = i0 - d_over_p;
        s1.min(s2).min(s3)
    };

    Ok(ConditionReport {
        intrinsic_index: i0,
        c0,
        c0_s,
        c1,
        c2,
        c1_s,
        c2_s,
        c2_reason,
        zeta0,
        gamma,
        theta,
        r0_window,
        margin,
        eta_max: gamma_at_zero,
        binding_branch,
    })
}

/// The three concrete models.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    Burgers,
    Vortex2D,
    KellerSegel,
}

#[derive(Debug, Clone)]
pub struct ModelVerdict {
    pub weak: bool,
    pub strong: bool,
    pub binding_inequality: String,
    /// For Burgers: the kernel-space integrability index realizing the verdict.
    pub best_p: Option<f64>,
}

/// Model-specific weak/strong thresholds in terms of the intrinsic index of
/// the initial law.
pub fn model_thresholds(
    model: Model,
    alpha: f64,
    d: usize,
    beta0: f64,
    p0: f64,
) -> Result<ModelVerdict> {
    if !(alpha > 1.0 && alpha <= 2.0) {
        return Err(Error::Parameter(format!("alpha must lie in (1, 2], got {alpha}")));
    }
    if !(p0 >= 1.0) || !(beta0 >= 0.0) {
        return Err(Error::Parameter("need p0 >= 1 and beta0 >= 0".into()));
    }
    match model {
        Model::Burgers => {
            if d != 1 {
                return Err(Error::Parameter(format!("Burgers requires d = 1, got {d}")));
            }
            let i0 = intrinsic_index(beta0, p0, 1);
            // weak: exists p with 1 - a + [1 - i0]_+ < -1/p'; scan a fixed grid
            let mut grid: Vec<f64> = (0..=90).map(|k| 1.0 + 0.1 * k as f64).collect();
            grid.push(f64::INFINITY);
            let lhs = 1.0 - alpha + pos(1.0 - i0);
            let mut weak = false;
            let mut best_p = None;
            let mut best_margin = f64::NEG_INFINITY;
            for &p in &grid {
                // -1/p' = -(1 - 1/p)
                let rhs = if p == 1.0 { 0.0 } else { -(1.0 - 1.0 / p) };
                let margin = rhs - lhs;
                if margin > best_margin {
                    best_margin = margin;
                    best_p = Some(p);
                }
                if lhs < rhs {
                    weak = true;
                }
            }
            let strong = i0 > 3.0 * (1.0 - alpha / 2.0);
            Ok(ModelVerdict {
                weak,
                strong,
                binding_inequality: format!(
                    "weak: 1-alpha+[1-(beta0+1/p0')]_+ < -1/p' at p={:?}; strong: beta0+1/p0' > 3(1-alpha/2) = {}",
                    best_p,
                    3.0 * (1.0 - alpha / 2.0)
                ),
                best_p,
            })
        }
        Model::Vortex2D => {
            if d != 2 {
                return Err(Error::Parameter(format!("the vortex model requires d = 2, got {d}")));
            }
            let i0 = intrinsic_index(beta0, p0, 2);
            let weak = i0 > 2.0 - alpha;
            let strong = i0 > 3.0 - 1.5 * alpha;
            Ok(ModelVerdict {
                weak,
                strong,
                binding_inequality: format!(
                    "weak: beta0+2/p0' > 2-alpha = {}; strong: > 3-(3/2)alpha = {}",
                    2.0 - alpha,
                    3.0 - 1.5 * alpha
                ),
                best_p: None,
            })
        }
        Model::KellerSegel => {
            if d < 2 {
                return Err(Error::Parameter(format!("Keller-Segel requires d >= 2, got {d}")));
            }
            let i0 = intrinsic_index(beta0, p0, d);
            let weak = i0 > 1.0 - alpha + d as f64;
            let strong = i0 > 2.0 - 1.5 * alpha + d as f64;
            Ok(ModelVerdict {
                weak,
                strong,
                binding_inequality: format!(
                    "weak: beta0+d/p0' > 1-alpha+d = {}; strong: > 2-(3/2)alpha+d = {}",
                    1.0 - alpha + d as f64,
                    2.0 - 1.5 * alpha + d as f64
                ),
                best_p: None,
            })
        }
    }
}
