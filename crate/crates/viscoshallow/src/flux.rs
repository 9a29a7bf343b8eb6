use crate::error::{Result, SolverError};

/// Conserved pair U = (h, h u).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConservedPair {
    pub h: f64,
    pub hu: f64,
}

/// Primitive pair V = (h, u); these are the Newton unknowns.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrimitivePair {
    pub h: f64,
    pub u: f64,
}

impl PrimitivePair {
    pub fn new(h: f64, u: f64) -> Self {
        Self { h, u }
    }

    pub fn to_conserved(self) -> ConservedPair {
        ConservedPair {
            h: self.h,
            hu: self.h * self.u,
        }
    }
}

/// 2x2 Jacobian block, row-major: rows are flux components, columns are (h, u).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jacobian2 {
    pub a: [[f64; 2]; 2],
}

impl Jacobian2 {
    pub const ZERO: Jacobian2 = Jacobian2 { a: [[0.0; 2]; 2] };
}

/// Which gravity constant enters the wave-speed estimate sqrt(g h).
/// The flux itself always uses the slope-normal component g_c.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum WaveSpeedGravity {
    /// Plain g, as the wave-speed formula is printed.
    Standard,
    /// Slope-normal g cos(alpha).
    Effective,
}

/// Physical flux F = (h u, h u^2 + g_c h^2 / 2).
pub fn physical_flux(v: PrimitivePair, g_c: f64) -> (f64, f64) {
    (v.h * v.u, v.h * v.u * v.u + 0.5 * g_c * v.h * v.h)
}

/// Jacobian of the physical flux with respect to the primitives (h, u).
pub fn physical_flux_jacobian(v: PrimitivePair, g_c: f64) -> Jacobian2 {
    Jacobian2 {
        a: [
            [v.u, v.h],
            [v.u * v.u + g_c * v.h, 2.0 * v.h * v.u],
        ],
    }
}

/// Left/right signal speed estimates for the 1D shallow-water system.
pub fn wave_speeds(left: PrimitivePair, right: PrimitivePair, g: f64) -> Result<(f64, f64)> {
    if left.h < 0.0 || right.h < 0.0 {
        return Err(SolverError::InvalidArgument(format!(
            "negative depth in wave speeds: {} / {}",
            left.h, right.h
        )));
    }
    let cl = (g * left.h).sqrt();
    let cr = (g * right.h).sqrt();
    let s_l = (left.u - cl).min(right.u - cr);
    let s_r = (left.u + cl).max(right.u + cr);
    Ok((s_l, s_r))
}

/// HLL approximate Riemann flux for the advective term.
pub fn hll_flux(left: PrimitivePair, right: PrimitivePair, g: f64, g_c: f64) -> Result<(f64, f64)> {
    let (s_l, s_r) = wave_speeds(left, right, g)?;
    if s_l >= 0.0 {
        Ok(physical_flux(left, g_c))
    } else if s_r <= 0.0 {
        Ok(physical_flux(right, g_c))
    } else {
        let ds = s_r - s_l;
        if ds == 0.0 {
            return Err(SolverError::Numeric(
                "coincident wave speeds in HLL middle state".into(),
            ));
        }
        let fl = physical_flux(left, g_c);
        let fr = physical_flux(right, g_c);
        let ul = left.to_conserved();
        let ur = right.to_conserved();
        Ok((
            (s_r * fl.0 - s_l * fr.0 + s_l * s_r * (ur.h - ul.h)) / ds,
            (s_r * fl.1 - s_l * fr.1 + s_l * s_r * (ur.hu - ul.hu)) / ds,
        ))
    }
}

/// Branch-wise derivatives of the HLL flux with respect to the left and right
/// primitive states. The wave speeds are held frozen during differentiation;
/// only F and U are differentiated, which is the tangent the Newton solve uses.
pub fn hll_flux_derivative(
    left: PrimitivePair,
    right: PrimitivePair,
    g: f64,
    g_c: f64,
) -> Result<(Jacobian2, Jacobian2)> {
    let (s_l, s_r) = wave_speeds(left, right, g)?;
    if s_l >= 0.0 {
        Ok((physical_flux_jacobian(left, g_c), Jacobian2::ZERO))
    } else if s_r <= 0.0 {
        Ok((Jacobian2::ZERO, physical_flux_jacobian(right, g_c)))
    } else {
        let ds = s_r - s_l;
        if ds == 0.0 {
            return Err(SolverError::Numeric(
                "coincident wave speeds in HLL middle state".into(),
            ));
        }
        let jl = physical_flux_jacobian(left, g_c);
        let jr = physical_flux_jacobian(right, g_c);
        // dU/dV = [[1, 0], [u, h]]
        let dul = [[1.0, 0.0], [left.u, left.h]];
        let dur = [[1.0, 0.0], [right.u, right.h]];
        let mut out_l = Jacobian2::ZERO;
        let mut out_r = Jacobian2::ZERO;
        for r in 0..2 {
            for c in 0..2 {
                out_l.a[r][c] = (s_r * jl.a[r][c] - s_l * s_r * dul[r][c]) / ds;
                out_r.a[r][c] = (-s_l * jr.a[r][c] + s_l * s_r * dur[r][c]) / ds;
            }
        }
        Ok((out_l, out_r))
    }
}

/// Component-wise arithmetic mean of the two traces.
pub fn central_flux(a_left: &[f64], a_right: &[f64]) -> Result<Vec<f64>> {
    if a_left.len() != a_right.len() {
        return Err(SolverError::InvalidArgument(format!(
            "central flux length mismatch: {} vs {}",
            a_left.len(),
            a_right.len()
        )));
    }
    Ok(a_left
        .iter()
        .zip(a_right)
        .map(|(l, r)| 0.5 * (l + r))
        .collect())
}
