//! Validated domain types shared by all other modules.

use crate::error::{Error, Result};

/// Spatial dimension of the inclusion problem: coated disks (2D) or coated
/// spheres (3D).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn from_u32(d: u32) -> Result<Dim> {
        match d {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            other => Err(Error::Domain(format!("dim must be 2 or 3 (got {other})"))),
        }
    }

    pub fn as_u32(self) -> u32 {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.as_u32())
    }
}

/// The five physical inputs plus spatial dimension.
///
/// `sigma1` is the power-law core conductivity coefficient, `sigma2` the
/// linear coating conductivity, `p > 1` the power-law exponent, `e_field` the
/// applied boundary field magnitude, and `theta1` the core volume fraction
/// (3D) or area fraction (2D).
///
/// The applied field is restricted to `e_field > 0`; a negative applied field
/// maps onto a positive one by the odd symmetry of the whole pipeline
/// (`u -> -u` flips every coefficient sign and leaves the effective
/// conductivity unchanged), so callers handle that case by negating inputs
/// and outputs rather than through a dedicated branch here.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Problem {
    sigma1: f64,
    sigma2: f64,
    p: f64,
    e_field: f64,
    theta1: f64,
    dim: Dim,
}

impl Problem {
    /// Validates the raw inputs and returns a `Problem` iff every bound
    /// holds. Nothing is normalized; `theta1 = 0` and `theta1 = 1` are legal
    /// and route to closed-form branches downstream.
    pub fn new(
        sigma1: f64,
        sigma2: f64,
        p: f64,
        e_field: f64,
        theta1: f64,
        dim: Dim,
    ) -> Result<Problem> {
        if !sigma1.is_finite() || sigma1 <= 0.0 {
            return Err(Error::Domain(format!(
                "sigma1 must be positive (got {sigma1})"
            )));
        }
        if !sigma2.is_finite() || sigma2 <= 0.0 {
            return Err(Error::Domain(format!(
                "sigma2 must be positive (got {sigma2})"
            )));
        }
        if !p.is_finite() || p <= 1.0 {
            return Err(Error::Domain(format!("p must exceed 1 (got {p})")));
        }
        if !e_field.is_finite() || e_field <= 0.0 {
            return Err(Error::Domain(format!("e must be positive (got {e_field})")));
        }
        if !(0.0..=1.0).contains(&theta1) {
            return Err(Error::Domain(format!(
                "theta1 must lie in [0, 1] (got {theta1})"
            )));
        }
        Ok(Problem {
            sigma1,
            sigma2,
            p,
            e_field,
            theta1,
            dim,
        })
    }

    pub fn sigma1(&self) -> f64 {
        self.sigma1
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn e_field(&self) -> f64 {
        self.e_field
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    /// Coating fraction, always derived as `1 - theta1`.
    pub fn theta2(&self) -> f64 {
        1.0 - self.theta1
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    /// Same problem with a different core fraction.
    pub fn with_theta1(&self, theta1: f64) -> Result<Problem> {
        Problem::new(
            self.sigma1,
            self.sigma2,
            self.p,
            self.e_field,
            theta1,
            self.dim,
        )
    }

    /// Same problem with a different exponent.
    pub fn with_p(&self, p: f64) -> Result<Problem> {
        Problem::new(
            self.sigma1,
            self.sigma2,
            p,
            self.e_field,
            self.theta1,
            self.dim,
        )
    }

    /// Geometry factors for this problem; fails with
    /// [`Error::DegenerateGeometry`] at `theta1 = 0`.
    pub fn geometry_factors(&self) -> Result<GeometryFactors> {
        GeometryFactors::new(self.theta1, self.dim)
    }
}

/// The two combinations of the core fraction that the interface equation is
/// written in: `a_coef = 1/theta1 - 1` and `b_coef = (d-1)/theta1 + 1`.
///
/// These depend only on `theta1` and the dimension, never on the concrete
/// radii, and satisfy `b_coef - (d-1) * a_coef = d` identically.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometryFactors {
    a_coef: f64,
    b_coef: f64,
}

impl GeometryFactors {
    pub fn new(theta1: f64, dim: Dim) -> Result<GeometryFactors> {
        if !(theta1 > 0.0 && theta1 <= 1.0) {
            if theta1 == 0.0 {
                return Err(Error::DegenerateGeometry);
            }
            return Err(Error::Domain(format!(
                "theta1 must lie in (0, 1] for geometry factors (got {theta1})"
            )));
        }
        // (1 - theta1)/theta1 instead of 1/theta1 - 1: exact for theta1 near 1.
        let a_coef = (1.0 - theta1) / theta1;
        let b_coef = (dim.as_f64() - 1.0 + theta1) / theta1;
        Ok(GeometryFactors { a_coef, b_coef })
    }

    pub fn a_coef(&self) -> f64 {
        self.a_coef
    }

    pub fn b_coef(&self) -> f64 {
        self.b_coef
    }
}

/// Solved interface unknown `x0 = b2 / r_e^d` with solver metadata.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    /// The unique zero of the interface function.
    pub x0: f64,
    /// `|f(x0)|` after the solve.
    pub residual: f64,
    /// Initial bracket handed to the iteration (after the sign-of-`f(0)`
    /// tightening).
    pub bracket_lo: f64,
    pub bracket_hi: f64,
    /// Iterations consumed.
    pub iterations: usize,
}

/// Field coefficients for a concrete `(r_c, r_e)` realization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    /// Core field slope.
    pub a1: f64,
    /// Coating linear coefficient.
    pub a2: f64,
    /// Coating dipole coefficient, units length^d x field.
    pub b2: f64,
    pub r_c: f64,
    pub r_e: f64,
}

/// Which computation path produced the effective conductivity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    /// Interior `theta1` and `p != 2`: iterative root solve.
    GeneralRoot,
    /// `theta1 = 1`: the inclusion is all power-law material.
    AllNonlinear,
    /// `theta1 = 0`: the inclusion is all linear material.
    AllLinear,
    /// `p = 2`: closed-form root, Hashin-Shtrikman value.
    LinearClosedForm,
}

impl Branch {
    pub fn as_str(self) -> &'static str {
        match self {
            Branch::GeneralRoot => "GeneralRoot",
            Branch::AllNonlinear => "AllNonlinear",
            Branch::AllLinear => "AllLinear",
            Branch::LinearClosedForm => "LinearClosedForm",
        }
    }
}

/// Effective conductivity together with limit-case diagnostics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveResult {
    pub sigma_star: f64,
    /// The interface unknown behind `sigma_star` (0 in the all-linear limit).
    pub x0: f64,
    /// Hashin-Shtrikman closed form, populated whenever `p = 2`.
    pub hs_value: Option<f64>,
    pub branch: Branch,
}

/// The four analytic partial derivatives of `(x0, sigma_star)` with respect
/// to `(p, theta1)`, paired with central finite-difference estimates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SensitivityReport {
    pub dx0_dp: f64,
    pub dsigma_dp: f64,
    pub dx0_dtheta: f64,
    pub dsigma_dtheta: f64,
    pub fd_dx0_dp: f64,
    pub fd_dsigma_dp: f64,
    pub fd_dx0_dtheta: f64,
    pub fd_dsigma_dtheta: f64,
    /// Worst relative disagreement between an analytic derivative and its
    /// finite-difference estimate.
    pub max_rel_mismatch: f64,
}
