use crate::basis::{gauss_lobatto_nodes, legendre_basis, normalized_legendre, BasisSet};
use crate::error::{Result, SolverError};
use crate::mesh::Mesh1D;

/// Per-element modal coefficients of a scalar field.
///
/// Element `e` stores `order + 1` coefficients against the normalized
/// Legendre basis on the reference interval; the physical field on the
/// element is `sum_i c_{e,i} psi_i(xi(x))`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientField {
    order: usize,
    n_el: usize,
    coeffs: Vec<f64>,
}

impl CoefficientField {
    pub fn zeros(order: usize, n_el: usize) -> Self {
        Self {
            order,
            n_el,
            coeffs: vec![0.0; n_el * (order + 1)],
        }
    }

    pub fn from_coeffs(order: usize, n_el: usize, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != n_el * (order + 1) {
            return Err(SolverError::InvalidArgument(format!(
                "expected {} coefficients, got {}",
                n_el * (order + 1),
                coeffs.len()
            )));
        }
        Ok(Self {
            order,
            n_el,
            coeffs,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn n_elements(&self) -> usize {
        self.n_el
    }

    pub fn block(&self, e: usize) -> &[f64] {
        let n = self.order + 1;
        &self.coeffs[e * n..(e + 1) * n]
    }

    pub fn block_mut(&mut self, e: usize) -> &mut [f64] {
        let n = self.order + 1;
        &mut self.coeffs[e * n..(e + 1) * n]
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }
}

/// Evaluates a field inside one element at reference coordinate `xi`.
pub fn evaluate_field(
    field: &CoefficientField,
    _basis: &BasisSet,
    element: usize,
    xi: f64,
) -> Result<f64> {
    if element >= field.n_elements() {
        return Err(SolverError::OutOfRange(format!(
            "element {element} out of {}",
            field.n_elements()
        )));
    }
    Ok(field
        .block(element)
        .iter()
        .enumerate()
        .map(|(i, c)| c * normalized_legendre(i, xi))
        .sum())
}

/// Element-wise L2 projection of `f` onto the basis carried by `basis`.
///
/// The coefficients are c_{e,i} = sum_q w_q psi_i(xi_q) f(x(xi_q)); with the
/// orthonormal reference basis the element mass matrix is the identity times
/// the Jacobian, which cancels against the integral's Jacobian.
pub fn project_with_basis<F: Fn(f64) -> f64>(
    f: F,
    basis: &BasisSet,
    mesh: &Mesh1D,
) -> CoefficientField {
    let n_el = mesh.n_elements();
    let n_fun = basis.n_functions();
    let mut field = CoefficientField::zeros(basis.order(), n_el);
    for e in 0..n_el {
        let block = field.block_mut(e);
        for (q, &xi) in basis.quad_nodes().iter().enumerate() {
            let fx = f(mesh.to_physical(e, xi));
            let w = basis.quad_weights()[q];
            for i in 0..n_fun {
                block[i] += w * basis.values_at(q)[i] * fx;
            }
        }
    }
    field
}

/// Element-wise L2 projection of `f` at the given order, using the default
/// order + 2 point Gauss rule.
pub fn project_function<F: Fn(f64) -> f64>(
    f: F,
    order: usize,
    mesh: &Mesh1D,
) -> Result<CoefficientField> {
    let basis = legendre_basis(order, order + 2)?;
    Ok(project_with_basis(f, &basis, mesh))
}

/// Collocation of `f` at the element Gauss-Lobatto nodes.
///
/// For order >= 1 the node set contains both element endpoints, so the
/// resulting piecewise polynomial is continuous across interfaces and matches
/// `f` exactly at the element edges. This is the representation used for the
/// bottom height: interface continuity of the discrete bottom is what lets
/// hydrostatic equilibria cancel exactly in the interface fluxes.
pub fn interpolate_lobatto<F: Fn(f64) -> f64>(
    f: F,
    order: usize,
    mesh: &Mesh1D,
) -> Result<CoefficientField> {
    let n_fun = order + 1;
    let nodes = gauss_lobatto_nodes(n_fun)?;
    // Collocation matrix V[k][i] = psi_i(node_k), inverted once.
    let mut vmat = vec![0.0; n_fun * n_fun];
    for (k, &xi) in nodes.iter().enumerate() {
        for i in 0..n_fun {
            vmat[k * n_fun + i] = normalized_legendre(i, xi);
        }
    }
    let mut field = CoefficientField::zeros(order, mesh.n_elements());
    let mut rhs = vec![0.0; n_fun];
    for e in 0..mesh.n_elements() {
        for (k, &xi) in nodes.iter().enumerate() {
            rhs[k] = f(mesh.to_physical(e, xi));
        }
        let coeffs = solve_dense(&vmat, &rhs, n_fun)?;
        field.block_mut(e).copy_from_slice(&coeffs);
    }
    Ok(field)
}

/// Gaussian elimination with partial pivoting for the small collocation systems.
fn solve_dense(a: &[f64], b: &[f64], n: usize) -> Result<Vec<f64>> {
    let mut m = a.to_vec();
    let mut x = b.to_vec();
    for k in 0..n {
        let mut piv = k;
        for r in k + 1..n {
            if m[r * n + k].abs() > m[piv * n + k].abs() {
                piv = r;
            }
        }
        if m[piv * n + k].abs() < 1e-300 {
            return Err(SolverError::Singular("collocation matrix".into()));
        }
        if piv != k {
            for c in 0..n {
                m.swap(k * n + c, piv * n + c);
            }
            x.swap(k, piv);
        }
        for r in k + 1..n {
            let fac = m[r * n + k] / m[k * n + k];
            for c in k..n {
                m[r * n + c] -= fac * m[k * n + c];
            }
            x[r] -= fac * x[k];
        }
    }
    for k in (0..n).rev() {
        let mut s = x[k];
        for c in k + 1..n {
            s -= m[k * n + c] * x[c];
        }
        x[k] = s / m[k * n + k];
    }
    Ok(x)
}
