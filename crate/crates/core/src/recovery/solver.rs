//! Basis pursuit, `min ‖α‖₁ subject to Aα = y`, by a primal-dual proximal
//! iteration that touches `A` only through forward and adjoint products.
//!
//! Each step soft-thresholds a gradient step on the primal and takes an
//! over-relaxed ascent step on the multiplier of the equality constraint.
//! Periodically the current support is polished: a least-squares fit on the
//! support gives a feasible point, and the minimum-norm dual vector matching
//! its signs either certifies optimality outright or the scaled dual iterate
//! bounds the duality gap.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Result};
use crate::linop::{dot, norm1, norm2, operator_norm_sq, LinearMap};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BpSettings {
    /// Feasibility: `‖Aα - y‖₂ <= feasibility_tol · max(1, ‖y‖₂)`.
    pub feasibility_tol: f64,
    /// Optimality: duality gap `<= gap_tol · max(1, ‖α‖₁)`.
    pub gap_tol: f64,
    pub max_iterations: usize,
    /// Over-relaxation of the primal extrapolation.
    pub relaxation: f64,
    pub power_iterations: usize,
    /// Iterations between support-polishing attempts.
    pub polish_every: usize,
    /// Seed of the power-iteration start vector.
    pub seed: u64,
}

impl Default for BpSettings {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-8,
            gap_tol: 1e-6,
            max_iterations: 5000,
            relaxation: 1.0,
            power_iterations: 40,
            polish_every: 10,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryResult {
    pub solution: Vec<f64>,
    pub residual_norm: f64,
    pub l1_value: f64,
    pub duality_gap: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Support and sign agreement with the ground truth, when one was supplied.
    pub support_exact: Option<bool>,
}

/// Relative size below which an entry counts as off the support.
pub const SUPPORT_RATIO: f64 = 1e-6;

/// Signs agree on the true support and every other entry is at most
/// [`SUPPORT_RATIO`] times the largest on-support magnitude.
pub fn support_matches(solution: &[f64], truth: &[f64]) -> bool {
    let on_max = solution
        .iter()
        .zip(truth)
        .filter(|(_, t)| **t != 0.0)
        .fold(0.0f64, |m, (s, _)| m.max(s.abs()));
    solution.iter().zip(truth).all(|(s, t)| {
        if *t != 0.0 {
            s.signum() == t.signum() && *s != 0.0
        } else {
            s.abs() <= SUPPORT_RATIO * on_max
        }
    })
}

fn soft(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

struct Polished {
    x: Vec<f64>,
    residual: f64,
    /// Dual objective of the sign-matching certificate, when it is dual feasible.
    certified_dual: Option<f64>,
}

fn polish(a: &dyn LinearMap, y: &[f64], support: &[usize]) -> Result<Option<Polished>> {
    let m = a.rows();
    let k = support.len();
    if k == 0 || k > m {
        return Ok(None);
    }
    let mut cols = DMatrix::zeros(m, k);
    for (c, &j) in support.iter().enumerate() {
        cols.set_column(c, &DVector::from_vec(a.column(j)?));
    }
    let gram = cols.tr_mul(&cols);
    let Some(chol) = gram.clone().cholesky() else {
        return Ok(None);
    };
    let yv = DVector::from_column_slice(y);
    let coef = chol.solve(&cols.tr_mul(&yv));
    let residual = (&cols * &coef - &yv).norm();

    let mut x = vec![0.0; a.cols()];
    support.iter().zip(coef.iter()).for_each(|(&j, &c)| x[j] = c);

    let signs = coef.map(f64::signum);
    let u = &cols * chol.solve(&signs);
    let g = a.apply_adjoint(u.as_slice())?;
    let sup = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let certified_dual = (sup <= 1.0 + 1e-9).then(|| dot(y, u.as_slice()) / sup.max(1.0));
    Ok(Some(Polished {
        x,
        residual,
        certified_dual,
    }))
}

/// Approximate minimizer of `‖α‖₁` subject to `Aα = y`. Non-convergence is
/// reported through `converged`, not as an error.
pub fn solve_bp(
    a: &dyn LinearMap,
    y: &[f64],
    settings: &BpSettings,
    truth: Option<&[f64]>,
) -> Result<RecoveryResult> {
    check_len(y.len(), a.rows(), "measurement vector")?;
    if let Some(t) = truth {
        check_len(t.len(), a.cols(), "ground truth")?;
    }
    let n = a.cols();
    let y_norm = norm2(y);
    let feas_bound = settings.feasibility_tol * y_norm.max(1.0);
    let finish = |solution: Vec<f64>, residual_norm: f64, duality_gap: f64, iterations, converged| {
        RecoveryResult {
            support_exact: truth.map(|t| support_matches(&solution, t)),
            l1_value: norm1(&solution),
            solution,
            residual_norm,
            duality_gap,
            iterations,
            converged,
        }
    };

    if y_norm == 0.0 {
        return Ok(finish(vec![0.0; n], 0.0, 0.0, 0, true));
    }

    // Power iteration underestimates ‖A‖²; pad it so τ·σ·‖A‖² stays below one.
    let lip = (1.2 * operator_norm_sq(a, settings.power_iterations, settings.seed)?).sqrt();
    let tau = 0.95 / lip;
    let sigma = 0.95 / lip;
    let theta = settings.relaxation;

    let mut x = vec![0.0; n];
    let mut ax = vec![0.0; y.len()];
    let mut u = vec![0.0; y.len()];
    let mut atu = vec![0.0; n];
    let mut last_support: Vec<usize> = Vec::new();
    let mut best: Option<(Vec<f64>, f64, f64)> = None;

    for it in 1..=settings.max_iterations {
        let x_new: Vec<f64> = x
            .iter()
            .zip(&atu)
            .map(|(xi, gi)| soft(xi - tau * gi, tau))
            .collect();
        let ax_new = a.apply(&x_new)?;
        for i in 0..u.len() {
            let ax_bar = ax_new[i] + theta * (ax_new[i] - ax[i]);
            u[i] += sigma * (ax_bar - y[i]);
        }
        x = x_new;
        ax = ax_new;
        atu = a.apply_adjoint(&u)?;

        // Dual value of the iterate, scaled into the feasible set ‖Aᵀv‖∞ <= 1.
        let atu_sup = atu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let iterate_dual = -dot(y, &u) / atu_sup.max(1.0);

        let residual: f64 = ax.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
        if residual <= feas_bound {
            let p = norm1(&x);
            let gap = p - iterate_dual;
            if gap <= settings.gap_tol * p.max(1.0) {
                return Ok(finish(x, residual, gap.max(0.0), it, true));
            }
        }

        if it % settings.polish_every.max(1) == 0 {
            let support: Vec<usize> = (0..n).filter(|&i| x[i] != 0.0).collect();
            if support != last_support {
                if let Some(p) = polish(a, y, &support)? {
                    if p.residual <= feas_bound {
                        let l1 = norm1(&p.x);
                        let dual = p.certified_dual.map_or(iterate_dual, |d| d.max(iterate_dual));
                        let gap = l1 - dual;
                        if gap <= settings.gap_tol * l1.max(1.0) {
                            return Ok(finish(p.x, p.residual, gap.max(0.0), it, true));
                        }
                        if best.as_ref().is_none_or(|b| l1 < b.2) {
                            best = Some((p.x, p.residual, l1));
                        }
                    }
                }
                last_support = support;
            }
        }
    }

    let it = settings.max_iterations;
    let atu_sup = atu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let dual = -dot(y, &u) / atu_sup.max(1.0);
    match best {
        Some((bx, res, l1)) => Ok(finish(bx, res, l1 - dual, it, false)),
        None => {
            let residual = ax.iter().zip(y).map(|(p, q)| (p - q) * (p - q)).sum::<f64>().sqrt();
            let gap = norm1(&x) - dual;
            Ok(finish(x, residual, gap, it, false))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::CsError;

    #[test]
    fn zero_measurements() {
        let a = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        let r = solve_bp(&a, &[0.0, 0.0], &BpSettings::default(), None).unwrap();
        assert_eq!(r.solution, vec![0.0; 3]);
        assert_eq!(r.iterations, 0);
        assert!(r.converged);
    }

    #[test]
    fn identity_system_returns_measurements() {
        let a = DMatrix::<f64>::identity(8, 8) * 2.0;
        let y = [0.4, -1.0, 3.0, 0.0, 0.25, -0.5, 1.5, 2.0];
        let r = solve_bp(&a, &y, &BpSettings::default(), None).unwrap();
        assert!(r.converged);
        for (s, v) in r.solution.iter().zip(y) {
            assert!((s - v / 2.0).abs() <= 1e-8);
        }
    }

    #[test]
    fn small_underdetermined_problem() {
        // x = (0, 0, 1.5, 0, -2) is the unique sparsest and ℓ1-minimal solution here.
        let a = DMatrix::from_row_slice(
            3,
            5,
            &[
                1.0, 0.2, -0.3, 0.5, 0.1, //
                -0.4, 1.0, 0.6, 0.2, -0.2, //
                0.3, -0.1, 0.2, 1.0, 0.9,
            ],
        );
        let truth = [0.0, 0.0, 1.5, 0.0, -2.0];
        let y = a.apply(&truth).unwrap();
        let r = solve_bp(&a, &y, &BpSettings::default(), Some(&truth)).unwrap();
        assert!(r.converged, "{r:?}");
        assert!(r.residual_norm <= 1e-8 * norm2(&y).max(1.0));
        assert!(r.l1_value <= norm1(&truth) + 1e-6);
    }

    #[test]
    fn dimension_mismatch() {
        let a = DMatrix::<f64>::identity(4, 4);
        assert!(matches!(
            solve_bp(&a, &[1.0; 3], &BpSettings::default(), None),
            Err(CsError::InvalidDimension(_))
        ));
    }

    #[test]
    fn non_convergence_is_a_flag() {
        let a = DMatrix::from_row_slice(2, 4, &[1.0, 0.3, -0.7, 0.2, 0.1, 1.0, 0.4, -0.9]);
        let settings = BpSettings {
            max_iterations: 3,
            polish_every: 1000,
            ..BpSettings::default()
        };
        let r = solve_bp(&a, &[1.0, 2.0], &settings, None).unwrap();
        assert!(!r.converged);
        assert_eq!(r.iterations, 3);
    }

    #[test]
    fn support_matching_rule() {
        assert!(support_matches(&[0.0, 1.0, -2.0], &[0.0, 0.5, -1.0]));
        assert!(support_matches(&[1e-7, 1.0, -2.0], &[0.0, 0.5, -1.0]));
        assert!(!support_matches(&[1e-3, 1.0, -2.0], &[0.0, 0.5, -1.0]));
        assert!(!support_matches(&[0.0, -1.0, -2.0], &[0.0, 0.5, -1.0]));
    }
}
