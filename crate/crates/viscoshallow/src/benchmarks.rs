use crate::assembly::{BcKind, BoundarySpec, ProblemSetup, SideBc, SolutionState};
use crate::constitutive::{active_fraction, PhysicalParams, RegularizationConfig};
use crate::error::{Result, SolverError};
use crate::field::{interpolate_lobatto, project_with_basis, CoefficientField};
use crate::mesh::build_uniform_mesh;
use crate::newton::RunStats;
use std::f64::consts::PI;

/// Domain length of the two equilibrium tests.
pub const SLOPE_TEST_LENGTH: f64 = 10.0;
/// Still-water depth parameter of the equilibrium tests.
pub const SLOPE_TEST_H0: f64 = 3.0;
/// Dam-break geometry: domain length, wall position, reservoir and tail depths.
pub const DAM_LENGTH: f64 = 3.0;
pub const DAM_WALL: f64 = 1.5;
pub const DAM_H1: f64 = 1.5;
pub const DAM_H2: f64 = 0.5;

fn bottom_profile(x: f64) -> f64 {
    (PI * x).cos()
}

/// Projects the height from a prescribed free surface: h = surface - H with
/// the discrete bottom, so that for m0 <= m1 the discrete free surface is
/// exactly the prescribed one.
fn height_from_surface<F: Fn(f64) -> f64>(
    surface: F,
    bottom: &CoefficientField,
    setup_basis: &crate::basis::BasisSet,
    bottom_basis: &crate::basis::BasisSet,
    mesh: &crate::mesh::Mesh1D,
) -> CoefficientField {
    let mut h = CoefficientField::zeros(setup_basis.order(), mesh.n_elements());
    for e in 0..mesh.n_elements() {
        let block = h.block_mut(e);
        for q in 0..setup_basis.n_quad() {
            let x = mesh.to_physical(e, setup_basis.quad_nodes()[q]);
            let hd = bottom_basis.eval_coeffs_at(bottom.block(e), q);
            let value = surface(x) - hd;
            let w = setup_basis.quad_weights()[q];
            for (i, slot) in block.iter_mut().enumerate() {
                *slot += w * setup_basis.values_at(q)[i] * value;
            }
        }
    }
    h
}

/// Constant-free-surface equilibrium over H(x) = cos(pi x) on a slope: the
/// free surface is horizontal, so the state must be preserved exactly when
/// m0 <= m1. Dirichlet conditions on every variable at both ends.
pub fn setup_constant_free_surface(
    n_el: usize,
    orders: [usize; 4],
    params: PhysicalParams,
    reg: RegularizationConfig,
) -> Result<(ProblemSetup, SolutionState)> {
    let mesh = build_uniform_mesh(0.0, SLOPE_TEST_LENGTH, n_el)?;
    let bottom = interpolate_lobatto(bottom_profile, orders[0], &mesh)?;
    let alpha = params.alpha;
    let h0 = SLOPE_TEST_H0;
    let surface = move |x: f64| h0 / alpha.cos() - x * alpha.tan();
    let l = SLOPE_TEST_LENGTH;
    let bc = BoundarySpec {
        left: SideBc {
            h: BcKind::Dirichlet(h0 / alpha.cos() - 1.0),
            u: BcKind::Dirichlet(0.0),
            e: BcKind::Dirichlet(0.0),
        },
        right: SideBc {
            h: BcKind::Dirichlet(h0 / alpha.cos() - l * alpha.tan() - (PI * l).cos()),
            u: BcKind::Dirichlet(0.0),
            e: BcKind::Dirichlet(0.0),
        },
    };
    let setup = ProblemSetup::new(mesh, orders, bottom, params, reg, bc)?;
    let mut state = setup.zero_state();
    state.h = height_from_surface(
        surface,
        &setup.bottom,
        &setup.basis_h,
        &setup.basis_bottom,
        &setup.mesh,
    );
    Ok((setup, state))
}

/// Free surface parallel to the sloped reference plane over H(x) = cos(pi x);
/// gravity pulls along the slope and the state stays rigid only when the
/// yield stress exceeds `yield_threshold`.
pub fn setup_parallel_free_surface(
    n_el: usize,
    orders: [usize; 4],
    params: PhysicalParams,
    reg: RegularizationConfig,
) -> Result<(ProblemSetup, SolutionState)> {
    let mesh = build_uniform_mesh(0.0, SLOPE_TEST_LENGTH, n_el)?;
    let bottom = interpolate_lobatto(bottom_profile, orders[0], &mesh)?;
    let h0 = SLOPE_TEST_H0;
    let bc = BoundarySpec {
        left: SideBc {
            h: BcKind::HomogeneousNeumann,
            u: BcKind::HomogeneousNeumann,
            e: BcKind::HomogeneousNeumann,
        },
        right: SideBc {
            h: BcKind::HomogeneousNeumann,
            u: BcKind::Dirichlet(0.0),
            e: BcKind::HomogeneousNeumann,
        },
    };
    let setup = ProblemSetup::new(mesh, orders, bottom, params, reg, bc)?;
    let mut state = setup.zero_state();
    state.h = height_from_surface(
        |_| h0,
        &setup.bottom,
        &setup.basis_h,
        &setup.basis_bottom,
        &setup.mesh,
    );
    Ok((setup, state))
}

/// Minimal yield stress that keeps the parallel-free-surface state rigid:
/// rho g sin(alpha) h0 L / (2 sqrt2 (h0 - 1)).
pub fn yield_threshold(params: &PhysicalParams, h0: f64, length: f64) -> f64 {
    params.rho * params.g * params.alpha.sin() * h0 * length
        / (2.0 * 2.0f64.sqrt() * (h0 - 1.0))
}

/// Wet-bed dam break on a flat bottom: reservoir depth 1.5 left of the wall
/// at x = 1.5, tail depth 0.5. Dirichlet depths at both ends, zero-gradient
/// velocity, and E pinned to zero at the ends.
pub fn setup_dam_break(
    n_el: usize,
    orders: [usize; 4],
    params: PhysicalParams,
    reg: RegularizationConfig,
) -> Result<(ProblemSetup, SolutionState)> {
    let mesh = build_uniform_mesh(0.0, DAM_LENGTH, n_el)?;
    let bottom = CoefficientField::zeros(orders[0], n_el);
    let bc = BoundarySpec {
        left: SideBc {
            h: BcKind::Dirichlet(DAM_H1),
            u: BcKind::HomogeneousNeumann,
            e: BcKind::Dirichlet(0.0),
        },
        right: SideBc {
            h: BcKind::Dirichlet(DAM_H2),
            u: BcKind::HomogeneousNeumann,
            e: BcKind::Dirichlet(0.0),
        },
    };
    let setup = ProblemSetup::new(mesh, orders, bottom, params, reg, bc)?;
    let mut state = setup.zero_state();
    // The step sits on an element edge for even n_el, so the element-wise
    // projection reproduces it exactly.
    state.h = project_with_basis(
        |x| if x < DAM_WALL { DAM_H1 } else { DAM_H2 },
        &setup.basis_h,
        &setup.mesh,
    );
    Ok((setup, state))
}

/// Middle state (h_m, u_m) and shock speed of the wet-bed dam-break problem,
/// from a bisection on the rarefaction/shock matching condition.
pub fn stoker_middle_state(h1: f64, h2: f64, g: f64) -> Result<(f64, f64, f64)> {
    if !(h1 > h2 && h2 > 0.0) {
        return Err(SolverError::InvalidArgument(
            "need reservoir depth h1 > tail depth h2 > 0".into(),
        ));
    }
    let c1 = (g * h1).sqrt();
    let condition = |hm: f64| -> f64 {
        2.0 * (c1 - (g * hm).sqrt())
            - (hm - h2) * (g * (hm + h2) / (2.0 * hm * h2)).sqrt()
    };
    let mut lo = h2;
    let mut hi = h1;
    if condition(lo) <= 0.0 || condition(hi) >= 0.0 {
        return Err(SolverError::Numeric(
            "dam-break matching condition does not bracket a root".into(),
        ));
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if condition(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * h1 {
            break;
        }
    }
    let hm = 0.5 * (lo + hi);
    let um = 2.0 * (c1 - (g * hm).sqrt());
    let shock_speed = hm * um / (hm - h2);
    Ok((hm, um, shock_speed))
}

/// Classical wet-bed dam-break solution of the inviscid shallow-water
/// equations; `x` is measured from the wall. For t <= 0 the initial step is
/// returned.
pub fn stoker_solution(x: f64, t: f64, h1: f64, h2: f64, g: f64) -> Result<(f64, f64)> {
    if t <= 0.0 {
        return Ok(if x <= 0.0 { (h1, 0.0) } else { (h2, 0.0) });
    }
    let (hm, um, shock_speed) = stoker_middle_state(h1, h2, g)?;
    let c1 = (g * h1).sqrt();
    let cm = (g * hm).sqrt();
    let xi = x / t;
    Ok(if xi <= -c1 {
        (h1, 0.0)
    } else if xi <= um - cm {
        // Inside the rarefaction fan: u - sqrt(g h) = xi, u + 2 sqrt(g h) = 2 c1.
        let c = (2.0 * c1 - xi) / 3.0;
        (c * c / g, 2.0 * (xi + c1) / 3.0)
    } else if xi < shock_speed {
        (hm, um)
    } else {
        (h2, 0.0)
    })
}

/// Error norms against a reference solution, evaluated at the quadrature
/// points. The L2 entries follow the squared-integral convention
/// int (err)^2 dOmega without a square root.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ErrorReport {
    pub l2_h: f64,
    pub l2_u: f64,
    pub linf_h: f64,
    pub linf_u: f64,
    pub active_pct: f64,
    pub nr_per_step: f64,
    pub cpu_seconds: f64,
}

/// Reference height and velocity profiles for `error_norms`.
pub struct ReferenceFields<'a> {
    pub h: Box<dyn Fn(f64) -> f64 + 'a>,
    pub u: Box<dyn Fn(f64) -> f64 + 'a>,
}

pub fn error_norms(
    state: &SolutionState,
    reference: &ReferenceFields,
    setup: &ProblemSetup,
    stats: Option<&RunStats>,
) -> Result<ErrorReport> {
    let mut report = ErrorReport::default();
    let mesh = &setup.mesh;
    for e in 0..mesh.n_elements() {
        let jac = 0.5 * mesh.element_width(e);
        for q in 0..setup.n_quad() {
            let x = mesh.to_physical(e, setup.basis_h.quad_nodes()[q]);
            let w = setup.basis_h.quad_weights()[q];
            let h = setup.basis_h.eval_coeffs_at(state.h.block(e), q);
            let u = setup.basis_u.eval_coeffs_at(state.u.block(e), q);
            let err_h = h - (reference.h)(x);
            let err_u = u - (reference.u)(x);
            report.l2_h += jac * w * err_h * err_h;
            report.l2_u += jac * w * err_u * err_u;
            report.linf_h = report.linf_h.max(err_h.abs());
            report.linf_u = report.linf_u.max(err_u.abs());
        }
    }
    report.active_pct = active_fraction(
        &state.e,
        mesh,
        &setup.basis_e,
        setup.params.sigma0,
        setup.reg.gamma,
    )?;
    if let Some(stats) = stats {
        report.nr_per_step = stats.newton_per_step();
        report.cpu_seconds = stats.wall_time;
    }
    Ok(report)
}

/// Element-wise flow indicator: true where any quadrature point of the
/// element has |E| >= sigma0 / gamma.
pub fn active_elements(state: &SolutionState, setup: &ProblemSetup) -> Vec<bool> {
    let threshold = setup.params.sigma0 / setup.reg.gamma;
    (0..setup.mesh.n_elements())
        .map(|e| {
            (0..setup.n_quad()).any(|q| {
                setup
                    .basis_e
                    .eval_coeffs_at(state.e.block(e), q)
                    .abs()
                    >= threshold
            })
        })
        .collect()
}

/// Maximal runs of equal flags, e.g. inactive/active/inactive/active/inactive
/// counts as five regions.
pub fn region_count(flags: &[bool]) -> usize {
    let mut count = 0;
    let mut prev: Option<bool> = None;
    for &f in flags {
        if prev != Some(f) {
            count += 1;
            prev = Some(f);
        }
    }
    count
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::RegVariant;
    use approx::assert_abs_diff_eq;

    fn slope_params(eta: f64, sigma0: f64) -> PhysicalParams {
        PhysicalParams::new(1.0, 9.81, PI / 18.0, eta, sigma0).unwrap()
    }

    fn reg1() -> RegularizationConfig {
        RegularizationConfig::new(RegVariant::Reg1, 1e3, 1e3).unwrap()
    }

    #[test]
    fn constant_free_surface_boundary_height() {
        let (setup, state) = setup_constant_free_surface(50, [1, 1, 1, 1], slope_params(1.0, 1.0), reg1()).unwrap();
        // Left trace of the reconstructed height equals h0 / cos(alpha) - 1.
        let h_left: f64 = setup
            .basis_h
            .trace_left()
            .iter()
            .zip(state.h.block(0))
            .map(|(t, c)| t * c)
            .sum();
        assert_abs_diff_eq!(h_left, 3.0 / (PI / 18.0).cos() - 1.0, epsilon = 1e-12);
        // Velocity projects to zero.
        assert!(state.u.coeffs().iter().all(|c| c.abs() < 1e-15));
        // Free surface h + H is horizontal in the tilted frame: slope -tan(alpha).
        let alpha = PI / 18.0;
        for e in 0..setup.mesh.n_elements() {
            for q in 0..setup.n_quad() {
                let x = setup.mesh.to_physical(e, setup.basis_h.quad_nodes()[q]);
                let h = setup.basis_h.eval_coeffs_at(state.h.block(e), q);
                let b = setup.basis_bottom.eval_coeffs_at(setup.bottom.block(e), q);
                assert_abs_diff_eq!(
                    h + b + x * alpha.tan(),
                    3.0 / alpha.cos(),
                    epsilon = 1e-11
                );
            }
        }
    }

    #[test]
    fn yield_threshold_reference_value() {
        let params = slope_params(1.0, 9.035);
        let thr = yield_threshold(&params, 3.0, 10.0);
        assert_abs_diff_eq!(thr, 9.0341, epsilon = 5e-4);
        assert!(params.sigma0 >= thr);
        // Flat slope never yields.
        let flat = PhysicalParams::new(1.0, 9.81, 0.0, 1.0, 1.0).unwrap();
        assert_abs_diff_eq!(yield_threshold(&flat, 3.0, 10.0), 0.0);
    }

    #[test]
    fn dam_break_initial_state() {
        let params = PhysicalParams::new(1.0, 9.81, 0.0, 0.02, 0.2).unwrap();
        let reg = RegularizationConfig::new(RegVariant::Reg1, 1e2, 1e2).unwrap();
        let (setup, state) = setup_dam_break(100, [1, 1, 1, 0], params, reg).unwrap();
        let h_left: f64 = setup
            .basis_h
            .trace_left()
            .iter()
            .zip(state.h.block(0))
            .map(|(t, c)| t * c)
            .sum();
        let h_right: f64 = setup
            .basis_h
            .trace_right()
            .iter()
            .zip(state.h.block(99))
            .map(|(t, c)| t * c)
            .sum();
        assert_abs_diff_eq!(h_left, 1.5, epsilon = 1e-13);
        assert_abs_diff_eq!(h_right, 0.5, epsilon = 1e-13);
        // Total volume 1.5 * 1.5 + 0.5 * 1.5 = 3.0 (means preserved by projection).
        let mut volume = 0.0;
        for e in 0..100 {
            let jac = 0.5 * setup.mesh.element_width(e);
            for q in 0..setup.n_quad() {
                volume += jac
                    * setup.basis_h.quad_weights()[q]
                    * setup.basis_h.eval_coeffs_at(state.h.block(e), q);
            }
        }
        assert_abs_diff_eq!(volume, 3.0, epsilon = 1e-12);
        assert!(state.u.coeffs().iter().all(|c| *c == 0.0));
        assert!(state.e.coeffs().iter().all(|c| *c == 0.0));
    }

    #[test]
    fn stoker_limits_and_rankine_hugoniot() {
        let (h1, h2, g) = (1.5, 0.5, 9.81);
        // Step limit.
        assert_eq!(stoker_solution(-0.1, 0.0, h1, h2, g).unwrap(), (h1, 0.0));
        assert_eq!(stoker_solution(0.1, 0.0, h1, h2, g).unwrap(), (h2, 0.0));
        assert_eq!(stoker_solution(-1e3, 1.0, h1, h2, g).unwrap(), (h1, 0.0));
        assert_eq!(stoker_solution(1e3, 1.0, h1, h2, g).unwrap(), (h2, 0.0));
        // Tiny time recovers the step away from the origin.
        let (h, u) = stoker_solution(-0.01, 1e-9, h1, h2, g).unwrap();
        assert_abs_diff_eq!(h, h1);
        assert_abs_diff_eq!(u, 0.0);

        let (hm, um, s) = stoker_middle_state(h1, h2, g).unwrap();
        assert!(h2 < hm && hm < h1);
        // Rankine-Hugoniot jump conditions across the shock into still water.
        let mass = hm * (um - s) - h2 * (0.0 - s);
        let momentum =
            (hm * um * um + 0.5 * g * hm * hm) - (0.5 * g * h2 * h2) - s * (hm * um);
        assert_abs_diff_eq!(mass, 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(momentum, 0.0, epsilon = 1e-10);
        // Rarefaction invariant through the fan.
        let c1 = (g * h1).sqrt();
        assert_abs_diff_eq!(um + 2.0 * (g * hm).sqrt(), 2.0 * c1, epsilon = 1e-10);
        // The fan is continuous at both edges.
        let (h_head, u_head) = stoker_solution(-c1 * 1.0 + 1e-12, 1.0, h1, h2, g).unwrap();
        assert_abs_diff_eq!(h_head, h1, epsilon = 1e-9);
        assert_abs_diff_eq!(u_head, 0.0, epsilon = 1e-9);
        let tail = um - (g * hm).sqrt();
        let (h_tail, _) = stoker_solution(tail * 1.0 - 1e-12, 1.0, h1, h2, g).unwrap();
        assert_abs_diff_eq!(h_tail, hm, epsilon = 1e-9);

        assert!(stoker_solution(0.0, 1.0, 0.5, 1.5, g).is_err());
    }

    #[test]
    fn error_norms_conventions() {
        let params = PhysicalParams::new(1.0, 9.81, 0.0, 0.0, 0.0).unwrap();
        let reg = RegularizationConfig::new(RegVariant::Reg1, 1e2, 1e2).unwrap();
        let (setup, state) = setup_dam_break(10, [1, 1, 1, 0], params, reg).unwrap();
        // Reference equal to the state itself: all norms zero.
        let self_ref = ReferenceFields {
            h: Box::new(|x| if x < DAM_WALL { DAM_H1 } else { DAM_H2 }),
            u: Box::new(|_| 0.0),
        };
        let report = error_norms(&state, &self_ref, &setup, None).unwrap();
        assert_abs_diff_eq!(report.l2_h, 0.0, epsilon = 1e-26);
        assert_abs_diff_eq!(report.linf_h, 0.0, epsilon = 1e-13);
        // Uniform height offset delta: linf = delta, l2 = delta^2 |Omega|.
        let delta = 0.03;
        let off_ref = ReferenceFields {
            h: Box::new(move |x| if x < DAM_WALL { DAM_H1 } else { DAM_H2 } - delta),
            u: Box::new(|_| 0.0),
        };
        let report = error_norms(&state, &off_ref, &setup, None).unwrap();
        assert_abs_diff_eq!(report.linf_h, delta, epsilon = 1e-12);
        assert_abs_diff_eq!(report.l2_h, delta * delta * DAM_LENGTH, epsilon = 1e-12);
    }

    #[test]
    fn region_counting() {
        assert_eq!(region_count(&[false, false, true, false, true, false]), 5);
        assert_eq!(region_count(&[true, true, true]), 1);
        assert_eq!(region_count(&[]), 0);
        assert_eq!(region_count(&[false, true]), 2);
    }
}
