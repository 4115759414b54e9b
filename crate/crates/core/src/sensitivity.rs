//! Analytic partial derivatives of the interface root and the effective
//! conductivity with respect to `p` and `theta1`, finite-difference
//! validation, and the monotonicity-regime classifier for `E > 1`.
//!
//! All four derivatives come from implicit differentiation of
//! `f(x0; p, theta1) = 0`; the shared denominator is `f'(x0)`. Differentiating
//! in `theta1` treats the geometry factors as the only `theta1`-dependent
//! quantities (`dA/dtheta = -1/theta^2`, `dB/dtheta = -(d-1)/theta^2`), which
//! is what produces the `(d-1)` constant in place of the 3D-specific 2.

use crate::error::{Error, Result};
use crate::kernel::{effective_conductivity, interface_fn_derivative, solve_root, SolverConfig};
use crate::model::{Problem, Root, SensitivityReport};

/// Shared pieces of the four derivative formulas.
struct Parts {
    /// `E + A x0`, guaranteed positive for a valid root.
    core_arg: f64,
    /// `f'(x0)`.
    denom: f64,
}

fn parts(prob: &Problem, root: &Root) -> Result<Parts> {
    let theta1 = prob.theta1();
    if theta1 <= 0.0 || theta1 >= 1.0 {
        return Err(Error::Domain(format!(
            "sensitivities require 0 < theta1 < 1 (got {theta1})"
        )));
    }
    let gf = prob.geometry_factors()?;
    let core_arg = prob.e_field() + gf.a_coef() * root.x0;
    if core_arg.is_nan() || core_arg <= 0.0 {
        return Err(Error::Domain(format!(
            "root violates E + A x0 > 0 (got {core_arg})"
        )));
    }
    Ok(Parts {
        core_arg,
        denom: interface_fn_derivative(root.x0, prob, &gf),
    })
}

/// `d x0 / d p = -sigma1 (E + A x0)^(p-1) ln(E + A x0) / f'(x0)`.
pub fn dx0_dp(prob: &Problem, root: &Root) -> Result<f64> {
    let q = parts(prob, root)?;
    let numer = -prob.sigma1() * q.core_arg.powf(prob.p() - 1.0) * q.core_arg.ln();
    Ok(numer / q.denom)
}

/// `d sigma_star / d p = -(d sigma2 / E) d x0 / d p`.
pub fn dsigma_dp(prob: &Problem, root: &Root) -> Result<f64> {
    Ok(-prob.dim().as_f64() * prob.sigma2() / prob.e_field() * dx0_dp(prob, root)?)
}

/// `d x0 / d theta1 = (x0/theta1^2) [sigma1 (p-1)(E + A x0)^(p-2) + (d-1) sigma2] / f'(x0)`.
pub fn dx0_dtheta(prob: &Problem, root: &Root) -> Result<f64> {
    let q = parts(prob, root)?;
    let d = prob.dim().as_f64();
    let bracket = prob.sigma1() * (prob.p() - 1.0) * q.core_arg.powf(prob.p() - 2.0)
        + (d - 1.0) * prob.sigma2();
    let theta1 = prob.theta1();
    Ok(root.x0 / (theta1 * theta1) * bracket / q.denom)
}

/// `d sigma_star / d theta1 = -(d sigma2 / E) d x0 / d theta1`; expands to
/// `-(d sigma2 x0)/(E theta1^2) [sigma1 (p-1)(E+Ax0)^(p-2) + (d-1) sigma2] / f'(x0)`.
pub fn dsigma_dtheta(prob: &Problem, root: &Root) -> Result<f64> {
    Ok(-prob.dim().as_f64() * prob.sigma2() / prob.e_field() * dx0_dtheta(prob, root)?)
}

/// Sign of `d x0 / d p` predicted by the closed-form threshold for `E > 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Increasing,
    Decreasing,
    Flat,
}

impl Regime {
    pub fn as_str(self) -> &'static str {
        match self {
            Regime::Increasing => "Increasing",
            Regime::Decreasing => "Decreasing",
            Regime::Flat => "Flat",
        }
    }
}

/// Threshold verdict plus the numerical cross-check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegimeReport {
    /// Verdict of the closed-form threshold
    /// `sigma1 >= sigma2 (dE - (d-1) - theta1)/(1 - theta1)`.
    pub regime: Regime,
    /// The threshold value `sigma2 (dE - (d-1) - theta1)/(1 - theta1)`.
    pub threshold: f64,
    /// `d x0 / d p` computed from the solved root.
    pub dx0_dp: f64,
    /// Raised when the threshold verdict and the derivative sign disagree
    /// beyond `FLAT_TOL`.
    pub consistency_flag: bool,
}

/// Tolerance under which a derivative counts as zero for regime purposes.
pub const FLAT_TOL: f64 = 1e-8;

/// Classifies the sign of `d x0 / d p` for `E > 1` via the closed-form
/// threshold, then cross-checks against the computed derivative.
///
/// The threshold works because `sign(d x0/d p) = -sign(ln(E + A x0))`, and
/// `E + A x0 <= 1` exactly when `f((1-E)/A) >= 0`, which collapses to the
/// `sigma1` comparison after substituting the geometry factors.
pub fn regime_classify(prob: &Problem) -> Result<RegimeReport> {
    if prob.e_field() <= 1.0 {
        return Err(Error::Domain(format!(
            "regime classification applies to E > 1 (got {})",
            prob.e_field()
        )));
    }
    let theta1 = prob.theta1();
    if theta1 <= 0.0 || theta1 >= 1.0 {
        return Err(Error::Domain(format!(
            "regime classification requires 0 < theta1 < 1 (got {theta1})"
        )));
    }
    let d = prob.dim().as_f64();
    let threshold = prob.sigma2() * (d * prob.e_field() - (d - 1.0) - theta1) / (1.0 - theta1);
    let gap = prob.sigma1() - threshold;
    let regime = if gap.abs() <= 1e-12 * prob.sigma1().max(threshold.abs()) {
        Regime::Flat
    } else if gap > 0.0 {
        Regime::Increasing
    } else {
        Regime::Decreasing
    };

    let root = solve_root(prob, &SolverConfig::default())?;
    let deriv = dx0_dp(prob, &root)?;
    let consistent = match regime {
        Regime::Increasing => deriv >= -FLAT_TOL,
        Regime::Decreasing => deriv <= FLAT_TOL,
        Regime::Flat => deriv.abs() <= FLAT_TOL,
    };
    Ok(RegimeReport {
        regime,
        threshold,
        dx0_dp: deriv,
        consistency_flag: !consistent,
    })
}

/// All four analytic derivatives plus central finite-difference estimates
/// that re-solve the root at each perturbed point.
///
/// The actual step for a parameter `q` is `fd_step * max(1, |q|)`.
pub fn full_report(prob: &Problem, cfg: &SolverConfig, fd_step: f64) -> Result<SensitivityReport> {
    if !fd_step.is_finite() || fd_step <= 0.0 {
        return Err(Error::Domain(format!(
            "fd_step must be positive (got {fd_step})"
        )));
    }
    let theta1 = prob.theta1();
    if theta1 <= 0.0 || theta1 >= 1.0 {
        return Err(Error::Domain(format!(
            "sensitivities require 0 < theta1 < 1 (got {theta1})"
        )));
    }
    let hp = fd_step * prob.p().abs().max(1.0);
    if prob.p() - hp <= 1.0 {
        return Err(Error::Step {
            step: hp,
            reason: format!("p - step = {} does not exceed 1", prob.p() - hp),
        });
    }
    let ht = fd_step;
    if theta1 - ht <= 0.0 || theta1 + ht >= 1.0 {
        return Err(Error::Step {
            step: ht,
            reason: format!("theta1 +/- step leaves (0, 1) at theta1 = {theta1}"),
        });
    }

    let root = solve_root(prob, cfg)?;
    let dx_dp = dx0_dp(prob, &root)?;
    let ds_dp = dsigma_dp(prob, &root)?;
    let dx_dt = dx0_dtheta(prob, &root)?;
    let ds_dt = dsigma_dtheta(prob, &root)?;

    let eval = |pr: &Problem| -> Result<(f64, f64)> {
        let eff = effective_conductivity(pr, cfg)?;
        Ok((eff.x0, eff.sigma_star))
    };
    let (x_pp, s_pp) = eval(&prob.with_p(prob.p() + hp)?)?;
    let (x_pm, s_pm) = eval(&prob.with_p(prob.p() - hp)?)?;
    let (x_tp, s_tp) = eval(&prob.with_theta1(theta1 + ht)?)?;
    let (x_tm, s_tm) = eval(&prob.with_theta1(theta1 - ht)?)?;

    let fd_dx_dp = (x_pp - x_pm) / (2.0 * hp);
    let fd_ds_dp = (s_pp - s_pm) / (2.0 * hp);
    let fd_dx_dt = (x_tp - x_tm) / (2.0 * ht);
    let fd_ds_dt = (s_tp - s_tm) / (2.0 * ht);

    let rel = |a: f64, f: f64| (a - f).abs() / a.abs().max(f.abs()).max(1e-9);
    let max_rel_mismatch = rel(dx_dp, fd_dx_dp)
        .max(rel(ds_dp, fd_ds_dp))
        .max(rel(dx_dt, fd_dx_dt))
        .max(rel(ds_dt, fd_ds_dt));

    Ok(SensitivityReport {
        dx0_dp: dx_dp,
        dsigma_dp: ds_dp,
        dx0_dtheta: dx_dt,
        dsigma_dtheta: ds_dt,
        fd_dx0_dp: fd_dx_dp,
        fd_dsigma_dp: fd_ds_dp,
        fd_dx0_dtheta: fd_dx_dt,
        fd_dsigma_dtheta: fd_ds_dt,
        max_rel_mismatch,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Dim;
    use approx::assert_relative_eq;

    fn prob(s1: f64, s2: f64, p: f64, e: f64, th: f64, d: u32) -> Problem {
        Problem::new(s1, s2, p, e, th, Dim::from_u32(d).unwrap()).unwrap()
    }

    fn solved(pr: &Problem) -> Root {
        solve_root(pr, &SolverConfig::default()).unwrap()
    }

    #[test]
    fn dx0_dp_positive_at_unit_field() {
        // E = 1, sigma1 > sigma2: x0 strictly increasing in p.
        let pr = prob(10.0, 1.0, 2.0, 1.0, 0.5, 3);
        let root = solved(&pr);
        assert!(dx0_dp(&pr, &root).unwrap() > 0.0);
        // Consistent with the increasing table row -0.99 ... -0.17.
        let x_low = solved(&prob(10.0, 1.0, 1.1, 1.0, 0.5, 3)).x0;
        let x_high = solved(&prob(10.0, 1.0, 10.0, 1.0, 0.5, 3)).x0;
        assert!(x_low < x_high);
    }

    #[test]
    fn dx0_dp_vanishes_in_full_core_limit() {
        let pr = prob(10.0, 1.0, 2.5, 1.0, 1.0 - 1e-12, 3);
        let root = solved(&pr);
        assert!(dx0_dp(&pr, &root).unwrap().abs() < 1e-9);
    }

    #[test]
    fn dsigma_dp_negative_and_tied_to_dx0_dp() {
        let pr = prob(10.0, 1.0, 2.7, 1.0, 0.5, 3);
        let root = solved(&pr);
        let ds = dsigma_dp(&pr, &root).unwrap();
        let dx = dx0_dp(&pr, &root).unwrap();
        assert!(ds < 0.0);
        let d = pr.dim().as_f64();
        assert_relative_eq!(
            ds,
            -d * pr.sigma2() / pr.e_field() * dx,
            max_relative = 1e-14
        );
    }

    #[test]
    fn dx0_dtheta_carries_sign_of_x0() {
        let pr = prob(10.0, 1.0, 2.0, 1.0, 0.5, 3);
        let root = solved(&pr);
        assert!(root.x0 < 0.0);
        assert!(dx0_dtheta(&pr, &root).unwrap() < 0.0);
        assert!(dsigma_dtheta(&pr, &root).unwrap() > 0.0);
        // Matches the p = 2 column trend -0.18, -0.43, -0.60, -0.82.
        let xs: Vec<f64> = [0.2, 0.4, 0.5, 0.6]
            .iter()
            .map(|&t| solved(&prob(10.0, 1.0, 2.0, 1.0, t, 3)).x0)
            .collect();
        for w in xs.windows(2) {
            assert!(w[1] < w[0]);
        }
    }

    #[test]
    fn dsigma_dtheta_positive_for_strong_field() {
        let pr = prob(10.0, 1.0, 3.0, 2.0, 0.4, 3);
        let root = solved(&pr);
        assert!(root.x0 < 0.0);
        assert!(dsigma_dtheta(&pr, &root).unwrap() > 0.0);
    }

    #[test]
    fn constant_sigma_configuration_has_zero_theta_derivative() {
        // sigma1/sigma2 = E^(2-p) makes f(0) = 0, so x0 = 0 and sigma_star
        // is flat in theta1.
        let e: f64 = 0.7;
        let p = 4.0;
        let pr = prob(e.powf(2.0 - p), 1.0, p, e, 0.5, 3);
        let root = solved(&pr);
        assert!(dsigma_dtheta(&pr, &root).unwrap().abs() < 1e-10);
    }

    fn fd_dx0_dp(pr: &Problem, h: f64) -> f64 {
        let cfg = SolverConfig::default();
        let xp = effective_conductivity(&pr.with_p(pr.p() + h).unwrap(), &cfg)
            .unwrap()
            .x0;
        let xm = effective_conductivity(&pr.with_p(pr.p() - h).unwrap(), &cfg)
            .unwrap()
            .x0;
        (xp - xm) / (2.0 * h)
    }

    #[test]
    fn derivatives_match_finite_differences() {
        for &(s1, s2, p, e, th, d) in &[
            (10.0, 1.0, 2.7, 1.0, 0.5, 3u32),
            (3.0, 2.0, 2.5, 1.3, 0.37, 3),
            (5.0, 1.0, 1.6, 0.7, 0.6, 2),
            (10.0, 1.0, 4.0, 2.0, 0.8, 3),
        ] {
            let pr = prob(s1, s2, p, e, th, d);
            let root = solved(&pr);
            let analytic = dx0_dp(&pr, &root).unwrap();
            let fd = fd_dx0_dp(&pr, 1e-6);
            assert!(
                (analytic - fd).abs() <= 1e-5 * analytic.abs().max(fd.abs()).max(1e-9),
                "{pr:?}: analytic {analytic} vs fd {fd}"
            );
            let report = full_report(&pr, &SolverConfig::default(), 1e-6).unwrap();
            assert!(
                report.max_rel_mismatch < 1e-5,
                "{pr:?}: mismatch {}",
                report.max_rel_mismatch
            );
        }
    }

    #[test]
    fn unit_field_has_opposed_p_derivatives() {
        let report = full_report(
            &prob(10.0, 1.0, 2.0, 1.0, 0.5, 3),
            &SolverConfig::default(),
            1e-6,
        )
        .unwrap();
        assert!(report.dx0_dp > 0.0);
        assert!(report.dsigma_dp < 0.0);
    }

    #[test]
    fn oversized_step_is_rejected() {
        let err = full_report(
            &prob(10.0, 1.0, 2.0, 1.0, 1.0 - 1e-8, 3),
            &SolverConfig::default(),
            1e-6,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Step { .. }));
        let err = full_report(
            &prob(10.0, 1.0, 1.0 + 1e-8, 1.0, 0.5, 3),
            &SolverConfig::default(),
            1e-6,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Step { .. }));
    }

    #[test]
    fn regime_matches_strong_field_table_rows() {
        // E=2, sigma1=10, sigma2=1: theta1=0.4 increases with p, theta1=0.8
        // decreases.
        let up = regime_classify(&prob(10.0, 1.0, 2.0, 2.0, 0.4, 3)).unwrap();
        assert_eq!(up.regime, Regime::Increasing);
        assert!(!up.consistency_flag);
        assert!(up.dx0_dp > 0.0);

        let down = regime_classify(&prob(10.0, 1.0, 2.0, 2.0, 0.8, 3)).unwrap();
        assert_eq!(down.regime, Regime::Decreasing);
        assert!(!down.consistency_flag);
        assert!(down.dx0_dp < 0.0);

        // Verify against the solved roots across p like the table rows.
        let x_small = solved(&prob(10.0, 1.0, 1.1, 2.0, 0.4, 3)).x0;
        let x_large = solved(&prob(10.0, 1.0, 10.0, 2.0, 0.4, 3)).x0;
        assert!(x_small < x_large);
        let x_small = solved(&prob(10.0, 1.0, 1.1, 2.0, 0.8, 3)).x0;
        let x_large = solved(&prob(10.0, 1.0, 10.0, 2.0, 0.8, 3)).x0;
        assert!(x_small > x_large);
    }

    #[test]
    fn regime_flat_at_threshold_equality() {
        // sigma1 = sigma2 (3E - 2 - theta1)/(1 - theta1) solved for theta1
        // with sigma1=10, sigma2=1, E=2 gives theta1 = 2/3; there x0 = (1-E)/A
        // independently of p.
        let pr = prob(10.0, 1.0, 2.7, 2.0, 2.0 / 3.0, 3);
        let report = regime_classify(&pr).unwrap();
        assert_eq!(report.regime, Regime::Flat);
        assert!(report.dx0_dp.abs() <= FLAT_TOL);
        assert!(!report.consistency_flag);
    }

    #[test]
    fn regime_threshold_generalizes_to_disks() {
        // d = 2 threshold sigma2 (2E - 1 - theta1)/(1 - theta1): equality at
        // theta1 = 7/9 for sigma1=10, sigma2=1, E=2, flanked by the two
        // strict regimes. The derivative cross-check must agree throughout.
        let flat = regime_classify(&prob(10.0, 1.0, 3.0, 2.0, 7.0 / 9.0, 2)).unwrap();
        assert_eq!(flat.regime, Regime::Flat);
        assert!(flat.dx0_dp.abs() <= FLAT_TOL);
        assert!(!flat.consistency_flag);

        for (theta1, expect) in [(0.5, Regime::Increasing), (0.9, Regime::Decreasing)] {
            for p in [1.4, 2.0, 5.0] {
                let rep = regime_classify(&prob(10.0, 1.0, p, 2.0, theta1, 2)).unwrap();
                assert_eq!(rep.regime, expect, "theta1={theta1}, p={p}");
                assert!(!rep.consistency_flag, "theta1={theta1}, p={p}");
            }
        }
    }

    #[test]
    fn regime_requires_strong_field() {
        assert!(regime_classify(&prob(10.0, 1.0, 2.0, 1.0, 0.5, 3)).is_err());
    }
}
