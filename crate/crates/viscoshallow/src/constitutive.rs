use crate::basis::BasisSet;
use crate::error::{Result, SolverError};
use crate::field::CoefficientField;
use crate::mesh::Mesh1D;

/// Material and gravity parameters.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct PhysicalParams {
    /// Density (kg/m^3).
    pub rho: f64,
    /// Gravity (m/s^2).
    pub g: f64,
    /// Slope angle of the reference plane (rad).
    pub alpha: f64,
    /// Dynamic viscosity (Pa s).
    pub eta: f64,
    /// Yield stress (Pa).
    pub sigma0: f64,
}

impl PhysicalParams {
    pub fn new(rho: f64, g: f64, alpha: f64, eta: f64, sigma0: f64) -> Result<Self> {
        if !(rho > 0.0) || !(g > 0.0) || eta < 0.0 || sigma0 < 0.0 {
            return Err(SolverError::InvalidArgument(
                "need rho > 0, g > 0, eta >= 0, sigma0 >= 0".into(),
            ));
        }
        Ok(Self {
            rho,
            g,
            alpha,
            eta,
            sigma0,
        })
    }

    /// Slope-normal gravity component g cos(alpha).
    pub fn g_c(&self) -> f64 {
        self.g * self.alpha.cos()
    }

    /// Slope-tangential gravity component g sin(alpha).
    pub fn g_s(&self) -> f64 {
        self.g * self.alpha.sin()
    }
}

/// Which regularization of the plastic term to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum RegVariant {
    /// Smoothed-max quotient; C1, piecewise nonlinear derivative.
    Reg1,
    /// Three-branch local smoothing; C1, piecewise linear derivative.
    Reg2,
    /// Global tanh smoothing; C-infinity.
    Reg3,
}

/// Continuation schedule for ramping gamma inside a time step.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct ContinuationSchedule {
    /// Starting regularization slope.
    pub gamma0: f64,
    /// Number of continuation solves per step (>= 2).
    pub n_gamma: usize,
}

/// Regularization parameters for the plastic stress.
#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct RegularizationConfig {
    pub variant: RegVariant,
    /// Pre-yield slope (Pa s).
    pub gamma: f64,
    /// Transition smoothing parameter; unused by Reg3.
    pub beta: f64,
    pub continuation: Option<ContinuationSchedule>,
}

impl RegularizationConfig {
    pub fn new(variant: RegVariant, gamma: f64, beta: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(SolverError::InvalidArgument("gamma must be positive".into()));
        }
        if variant != RegVariant::Reg3 && !(beta > 0.0) {
            return Err(SolverError::InvalidArgument(
                "beta must be positive for the local regularizations".into(),
            ));
        }
        Ok(Self {
            variant,
            gamma,
            beta,
            continuation: None,
        })
    }

    pub fn with_continuation(mut self, gamma0: f64, n_gamma: usize) -> Result<Self> {
        if n_gamma < 2 {
            return Err(SolverError::InvalidArgument(
                "continuation needs at least two stages".into(),
            ));
        }
        self.continuation = Some(ContinuationSchedule { gamma0, n_gamma });
        Ok(self)
    }

    pub fn with_gamma(&self, gamma: f64) -> Self {
        Self {
            gamma,
            continuation: None,
            ..*self
        }
    }
}

/// sign with sign(0) = 0, so all stress formulas vanish at E = 0.
fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Local smooth max, max_beta(x, 0): C1 blend of max(x, 0) over a band of
/// half-width 1/(2 beta) around zero.
pub fn smooth_max(x: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(SolverError::InvalidArgument("beta must be positive".into()));
    }
    let half = 0.5 / beta;
    Ok(if x >= half {
        x
    } else if x <= -half {
        0.0
    } else {
        0.5 * beta * (x + half) * (x + half)
    })
}

/// Derivative of `smooth_max` with respect to x.
pub fn smooth_max_deriv(x: f64, beta: f64) -> Result<f64> {
    if !(beta > 0.0) {
        return Err(SolverError::InvalidArgument("beta must be positive".into()));
    }
    let half = 0.5 / beta;
    Ok(if x >= half {
        1.0
    } else if x <= -half {
        0.0
    } else {
        beta * (x + half)
    })
}

/// Newtonian part of the depth-averaged 1D stress: 4 eta E.
pub fn newtonian_stress(e: f64, params: &PhysicalParams) -> f64 {
    4.0 * params.eta * e
}

/// Regularized plastic part of the depth-averaged 1D stress.
///
/// All variants are odd in E, vanish at E = 0, and saturate at 2 sigma0.
/// With sigma0 = 0 the plastic term is identically zero and is returned as
/// such (the Reg2 branch formulas degenerate there).
pub fn plastic_stress(e: f64, params: &PhysicalParams, reg: &RegularizationConfig) -> f64 {
    let s0 = params.sigma0;
    if s0 == 0.0 {
        return 0.0;
    }
    let g = reg.gamma;
    match reg.variant {
        RegVariant::Reg1 => {
            let den = smooth_max(g * e.abs() - s0, reg.beta).unwrap() + s0;
            2.0 * s0 * g * e / den
        }
        RegVariant::Reg2 => {
            let b = reg.beta;
            let half = 0.5 / b;
            let y = g * e.abs();
            if y >= s0 + half {
                2.0 * s0 * sgn(e)
            } else if y <= s0 - half {
                2.0 * g * e
            } else {
                let r = s0 - y + half;
                sgn(e) * (2.0 * s0 - b * r * r)
            }
        }
        RegVariant::Reg3 => 2.0 * s0 * (g * e).tanh(),
    }
}

/// Analytic derivative of `plastic_stress` with respect to E.
pub fn plastic_stress_derivative(
    e: f64,
    params: &PhysicalParams,
    reg: &RegularizationConfig,
) -> f64 {
    let s0 = params.sigma0;
    if s0 == 0.0 {
        return 0.0;
    }
    let g = reg.gamma;
    match reg.variant {
        RegVariant::Reg1 => {
            let x = g * e.abs() - s0;
            let den = smooth_max(x, reg.beta).unwrap() + s0;
            let dmax = smooth_max_deriv(x, reg.beta).unwrap();
            2.0 * s0 * g / den - 2.0 * s0 * g * g * e * sgn(e) * dmax / (den * den)
        }
        RegVariant::Reg2 => {
            let b = reg.beta;
            let half = 0.5 / b;
            let y = g * e.abs();
            if y >= s0 + half {
                0.0
            } else if y <= s0 - half {
                2.0 * g
            } else {
                2.0 * b * g * (s0 - y + half)
            }
        }
        RegVariant::Reg3 => {
            let c = (g * e).cosh();
            2.0 * s0 * g / (c * c)
        }
    }
}

/// Total depth-averaged stress and its derivative with respect to E.
pub fn total_stress_and_derivative(
    e: f64,
    params: &PhysicalParams,
    reg: &RegularizationConfig,
) -> (f64, f64) {
    (
        newtonian_stress(e, params) + plastic_stress(e, params, reg),
        4.0 * params.eta + plastic_stress_derivative(e, params, reg),
    )
}

/// Percentage of the domain where the material flows, i.e. |E| >= sigma0/gamma,
/// integrated with the Heaviside indicator over the quadrature points.
pub fn active_fraction(
    e_field: &CoefficientField,
    mesh: &Mesh1D,
    basis: &BasisSet,
    sigma0: f64,
    gamma: f64,
) -> Result<f64> {
    if !(gamma > 0.0) {
        return Err(SolverError::InvalidArgument("gamma must be positive".into()));
    }
    let threshold = sigma0 / gamma;
    let mut active = 0.0;
    for e in 0..mesh.n_elements() {
        let jac = 0.5 * mesh.element_width(e);
        let block = e_field.block(e);
        for q in 0..basis.n_quad() {
            let val = basis.eval_coeffs_at(block, q);
            if val.abs() >= threshold {
                active += jac * basis.quad_weights()[q];
            }
        }
    }
    Ok(100.0 * active / mesh.length())
}
