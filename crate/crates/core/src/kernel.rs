//! Interface-function evaluation, root solving and effective conductivity.
//!
//! The interface unknown `x0 = b2 / r_e^d` is the unique zero of
//!
//! ```text
//! f(x) = sigma1 |E + A x|^(p-2) (E + A x) - sigma2 (E - B x)
//! ```
//!
//! which is strictly increasing, negative at `-E/A` and positive at `E/B`.
//! Every quantity downstream (`sigma_star`, the field coefficients, the
//! sensitivities) is an explicit function of `x0`.

use crate::error::{Error, Result};
use crate::model::{Branch, EffectiveResult, GeometryFactors, Problem, Root};

/// Root-solver tolerances. `None` selects scale-aware defaults:
/// `abs_tol = 1e-14 * (sigma1 * max(1,E)^(p-1) + sigma2 * E)` and
/// `x_tol = 1e-15 * (initial bracket width)`, so behavior is uniform across
/// field magnitudes that differ by orders of magnitude.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Residual tolerance on `|f(x)|`.
    pub abs_tol: Option<f64>,
    /// Bracket-width tolerance.
    pub x_tol: Option<f64>,
    /// Iteration budget.
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            abs_tol: None,
            x_tol: None,
            max_iter: 200,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(t) = self.abs_tol {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::Domain(format!("abs_tol must be positive (got {t})")));
            }
        }
        if let Some(t) = self.x_tol {
            if !t.is_finite() || t <= 0.0 {
                return Err(Error::Domain(format!("x_tol must be positive (got {t})")));
            }
        }
        if self.max_iter == 0 {
            return Err(Error::Domain("max_iter must be at least 1".into()));
        }
        Ok(())
    }

    /// Residual tolerance resolved against the natural magnitude of `f`.
    pub fn residual_tolerance(&self, prob: &Problem) -> f64 {
        self.abs_tol.unwrap_or_else(|| 1e-14 * f_scale(prob))
    }

    fn width_tolerance(&self, bracket_width: f64) -> f64 {
        self.x_tol.unwrap_or(1e-15 * bracket_width)
    }
}

/// Natural magnitude of the interface function's terms.
fn f_scale(prob: &Problem) -> f64 {
    let e = prob.e_field();
    prob.sigma1() * e.max(1.0).powf(prob.p() - 1.0) + prob.sigma2() * e
}

/// Signed power `sign(t) |t|^q`, the odd extension of `t^q`.
///
/// Evaluating `|t|^(p-2) t` this way avoids the 0 * inf form at `t = 0` for
/// `p < 2` and is exact about the sign for every `p > 1`.
pub fn signed_pow(t: f64, q: f64) -> f64 {
    if t == 0.0 {
        0.0
    } else {
        t.signum() * t.abs().powf(q)
    }
}

/// The interface function `f(x)`. Total: defined for every real `x`.
pub fn interface_fn(x: f64, prob: &Problem, gf: &GeometryFactors) -> f64 {
    f_and_scale(x, prob, gf).0
}

/// `f(x)` together with the magnitude of its terms, the natural scale of the
/// rounding noise in evaluating `f` at `x`.
fn f_and_scale(x: f64, prob: &Problem, gf: &GeometryFactors) -> (f64, f64) {
    let e = prob.e_field();
    let core = prob.sigma1() * signed_pow(e + gf.a_coef() * x, prob.p() - 1.0);
    let coat = prob.sigma2() * (e - gf.b_coef() * x);
    let scale = core.abs() + prob.sigma2() * (e + (gf.b_coef() * x).abs());
    (core - coat, scale)
}

/// `f'(x) = A sigma1 (p-1) |E + A x|^(p-2) + sigma2 B`.
///
/// Positive everywhere it is finite; unbounded as `E + A x -> 0` when
/// `p < 2`, which the solver guards by falling back to bisection.
pub fn interface_fn_derivative(x: f64, prob: &Problem, gf: &GeometryFactors) -> f64 {
    let t = (prob.e_field() + gf.a_coef() * x).abs();
    gf.a_coef() * prob.sigma1() * (prob.p() - 1.0) * t.powf(prob.p() - 2.0)
        + prob.sigma2() * gf.b_coef()
}

/// Solves `f(x0) = 0` on the analytic bracket `(-E/A, E/B)`.
///
/// The bracket is first tightened by the sign of `f(0)`, then a safeguarded
/// Newton iteration (bisection fallback whenever the Newton step leaves the
/// bracket, stalls, or the derivative is not finite) drives the residual
/// below the tolerance or the bracket below the width tolerance, whichever
/// comes first. Deterministic for fixed inputs.
///
/// For `p` close to 1 the root can sit where `E + A x` is so small that
/// `f'(x0) * ulp(x0)` exceeds any fixed residual tolerance; no double then
/// satisfies the residual criterion and the width criterion is the honest
/// stopping rule. `Root::residual` always reports the actually achieved
/// `|f(x0)|`.
///
/// Requires `0 < theta1 < 1`; the degenerate fractions have closed forms in
/// [`effective_conductivity`].
pub fn solve_root(prob: &Problem, cfg: &SolverConfig) -> Result<Root> {
    cfg.validate()?;
    let theta1 = prob.theta1();
    if theta1 <= 0.0 || theta1 >= 1.0 {
        return Err(Error::Domain(format!(
            "root solve requires 0 < theta1 < 1 (got {theta1}); \
             use effective_conductivity for the closed-form limits"
        )));
    }
    let gf = prob.geometry_factors()?;
    let e = prob.e_field();
    let f = |x: f64| interface_fn(x, prob, &gf);

    // f(0) = sigma1 E^(p-1) - sigma2 E decides which side of 0 the root is on.
    let f0 = f(0.0);
    let (mut lo, mut hi) = if f0 > 0.0 {
        (-e / gf.a_coef(), 0.0)
    } else if f0 < 0.0 {
        (0.0, e / gf.b_coef())
    } else {
        return Ok(Root {
            x0: 0.0,
            residual: 0.0,
            bracket_lo: -e / gf.a_coef(),
            bracket_hi: e / gf.b_coef(),
            iterations: 0,
        });
    };
    let (bracket_lo, bracket_hi) = (lo, hi);

    let abs_tol = cfg.residual_tolerance(prob);
    let x_tol = cfg.width_tolerance(hi - lo);

    // f is increasing: f(lo) < 0 < f(hi) throughout. The stopping residual
    // is the configured tolerance or the local rounding floor of evaluating
    // f, whichever is smaller: polishing to the floor keeps the residual
    // small relative to the transmission terms themselves even when the
    // a-priori scale overestimates them (large p pushes the two apart).
    let mut x = 0.5 * (lo + hi);
    let mut step = hi - lo;
    let mut step_prev = step;
    let (mut fx, mut fscale_local) = f_and_scale(x, prob, &gf);
    let mut best = (x, fx);

    for it in 1..=cfg.max_iter {
        if fx.abs() < best.1.abs() {
            best = (x, fx);
        }
        if fx.abs() <= abs_tol.min(4.0 * f64::EPSILON * fscale_local) {
            return Ok(Root {
                x0: x,
                residual: fx.abs(),
                bracket_lo,
                bracket_hi,
                iterations: it,
            });
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let width = hi - lo;
        if width <= x_tol.max(2.0 * f64::EPSILON * lo.abs().max(hi.abs())) {
            // Root localized to the width tolerance (at worst a couple of
            // ulps); return the candidate with the smallest residual. The
            // midpoint keeps the result strictly inside the analytic bracket
            // even when a caller-supplied x_tol stops the very first step.
            let mid = 0.5 * (lo + hi);
            let (mut x0, mut residual) = (mid, f(mid).abs());
            for cand in [lo, hi] {
                if cand != bracket_lo && cand != bracket_hi {
                    let fc = f(cand).abs();
                    if fc < residual {
                        x0 = cand;
                        residual = fc;
                    }
                }
            }
            return Ok(Root {
                x0,
                residual,
                bracket_lo,
                bracket_hi,
                iterations: it,
            });
        }

        let dfx = interface_fn_derivative(x, prob, &gf);
        let newton = x - fx / dfx;
        // Take Newton only when it stays strictly inside the bracket and at
        // least keeps pace with bisection; otherwise bisect. Non-finite
        // derivatives (p < 2 near E + A x = 0) fail the first test.
        let next = if dfx.is_finite()
            && dfx > 0.0
            && newton > lo
            && newton < hi
            && 2.0 * fx.abs() <= (step_prev * dfx).abs()
        {
            newton
        } else {
            0.5 * (lo + hi)
        };
        step_prev = step;
        step = (next - x).abs();
        if next == x {
            // No representable progress from x; force a bisection step.
            x = 0.5 * (lo + hi);
        } else {
            x = next;
        }
        (fx, fscale_local) = f_and_scale(x, prob, &gf);
    }

    // The budget ran out while polishing; the best iterate still counts as
    // converged if it meets the configured tolerance.
    if best.1.abs() <= abs_tol {
        return Ok(Root {
            x0: best.0,
            residual: best.1.abs(),
            bracket_lo,
            bracket_hi,
            iterations: cfg.max_iter,
        });
    }
    Err(Error::Convergence {
        iterations: cfg.max_iter,
        bracket_lo: lo,
        bracket_hi: hi,
        residual: best.1.abs(),
    })
}

/// Effective conductivity `sigma_star = (sigma2/E)(E - d x0)` with the
/// degenerate fractions and the `p = 2` closed form handled explicitly.
pub fn effective_conductivity(prob: &Problem, cfg: &SolverConfig) -> Result<EffectiveResult> {
    let d = prob.dim().as_f64();
    let (s1, s2) = (prob.sigma1(), prob.sigma2());
    let e = prob.e_field();
    let theta1 = prob.theta1();

    let (x0, sigma_star, branch) = if theta1 == 0.0 {
        (0.0, s2, Branch::AllLinear)
    } else if theta1 == 1.0 {
        let epm2 = e.abs().powf(prob.p() - 2.0);
        let x0 = (s2 - s1 * epm2) * e / (d * s2);
        (x0, s1 * epm2, Branch::AllNonlinear)
    } else if prob.p() == 2.0 {
        let gf = prob.geometry_factors()?;
        let x0 = (s2 - s1) * e / (gf.a_coef() * s1 + gf.b_coef() * s2);
        (x0, (s2 / e) * (e - d * x0), Branch::LinearClosedForm)
    } else {
        let root = solve_root(prob, cfg)?;
        (root.x0, (s2 / e) * (e - d * root.x0), Branch::GeneralRoot)
    };

    let hs_value = if prob.p() == 2.0 {
        let hs = hashin_shtrikman(prob);
        if (sigma_star - hs).abs() >= 1e-12 * hs.abs().max(1.0) {
            return Err(Error::Inconsistency(format!(
                "p = 2 effective conductivity {sigma_star} disagrees with the \
                 Hashin-Shtrikman closed form {hs}"
            )));
        }
        Some(hs)
    } else {
        None
    };

    Ok(EffectiveResult {
        sigma_star,
        x0,
        hs_value,
        branch,
    })
}

/// Hashin-Shtrikman closed form
/// `sigma2 + d theta1 sigma2 (sigma1 - sigma2) / (d sigma2 + theta2 (sigma1 - sigma2))`.
///
/// Defined for every `theta1` in `[0, 1]`; the exponent field of the problem
/// is ignored.
pub fn hashin_shtrikman(prob: &Problem) -> f64 {
    let d = prob.dim().as_f64();
    let (s1, s2) = (prob.sigma1(), prob.sigma2());
    let (t1, t2) = (prob.theta1(), prob.theta2());
    s2 + d * t1 * s2 * (s1 - s2) / (d * s2 + t2 * (s1 - s2))
}

/// Hashin-Shtrikman bounds `(lower, upper)` for a linear two-phase composite
/// at the problem's fractions. Requires the phases labeled so that
/// `sigma1 > sigma2`; no silent swap.
pub fn hs_bounds(prob: &Problem) -> Result<(f64, f64)> {
    let (s1, s2) = (prob.sigma1(), prob.sigma2());
    if s1 <= s2 {
        return Err(Error::Domain(format!(
            "Hashin-Shtrikman bounds require sigma1 > sigma2 (got {s1} <= {s2})"
        )));
    }
    let d = prob.dim().as_f64();
    let (t1, t2) = (prob.theta1(), prob.theta2());
    let lower = hashin_shtrikman(prob);
    let upper = s1 + d * t2 * s1 * (s2 - s1) / (d * s1 + t1 * (s2 - s1));
    if lower > upper * (1.0 + 1e-12) {
        return Err(Error::Inconsistency(format!(
            "Hashin-Shtrikman lower bound {lower} exceeds upper bound {upper}"
        )));
    }
    Ok((lower, upper))
}
