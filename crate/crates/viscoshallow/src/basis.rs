use crate::error::{Result, SolverError};

/// Gauss-Legendre rule on the reference interval [-1, 1].
#[derive(Debug, Clone)]
pub struct QuadratureRule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Evaluates the Legendre polynomial P_n and its derivative at `x`.
fn legendre_pair(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let mut p_prev = 1.0;
    let mut p = x;
    let mut dp_prev = 0.0;
    let mut dp = 1.0;
    for k in 1..n {
        let kf = k as f64;
        let p_next = ((2.0 * kf + 1.0) * x * p - kf * p_prev) / (kf + 1.0);
        // P'_{k+1} = P'_{k-1} + (2k+1) P_k
        let dp_next = dp_prev + (2.0 * kf + 1.0) * p;
        p_prev = p;
        p = p_next;
        dp_prev = dp;
        dp = dp_next;
    }
    (p, dp)
}

/// Gauss-Legendre nodes and weights, exact for polynomials of degree 2n-1.
pub fn gauss_legendre(n: usize) -> Result<QuadratureRule> {
    if n == 0 {
        return Err(SolverError::InvalidArgument(
            "quadrature needs at least one point".into(),
        ));
    }
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let half = n.div_ceil(2);
    for i in 0..half {
        // Newton iteration on P_n from a Chebyshev-like initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_pair(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-15 {
                let (p2, d2) = legendre_pair(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
    }
    Ok(QuadratureRule { nodes, weights })
}

/// Gauss-Lobatto nodes for n+1 points (n >= 1): the endpoints plus the roots
/// of P'_n. Collocation at these nodes yields interface-continuous
/// interpolants, since adjacent elements share the endpoint values.
pub fn gauss_lobatto_nodes(n_points: usize) -> Result<Vec<f64>> {
    match n_points {
        0 => Err(SolverError::InvalidArgument(
            "lobatto rule needs at least one point".into(),
        )),
        1 => Ok(vec![0.0]),
        2 => Ok(vec![-1.0, 1.0]),
        _ => {
            let n = n_points - 1; // polynomial degree of the underlying P_n
            let mut nodes = vec![0.0; n_points];
            nodes[0] = -1.0;
            nodes[n] = 1.0;
            for k in 1..n {
                // Interior nodes are roots of P'_n; Newton from a cosine guess.
                let mut x = (std::f64::consts::PI * k as f64 / n as f64).cos();
                for _ in 0..100 {
                    let (p, dp) = legendre_pair(n, x);
                    // d/dx P'_n from the Legendre ODE: (1-x^2) P''_n = 2x P'_n - n(n+1) P_n
                    let ddp = (2.0 * x * dp - (n as f64) * (n as f64 + 1.0) * p) / (1.0 - x * x);
                    let dx = dp / ddp;
                    x -= dx;
                    if dx.abs() < 1e-15 {
                        break;
                    }
                }
                nodes[n - k] = x;
            }
            nodes.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Ok(nodes)
        }
    }
}

/// Normalized Legendre basis value psi_i(xi) = sqrt((2i+1)/2) P_i(xi),
/// orthonormal on [-1, 1].
pub fn normalized_legendre(i: usize, xi: f64) -> f64 {
    let (p, _) = legendre_pair(i, xi);
    ((2.0 * i as f64 + 1.0) / 2.0).sqrt() * p
}

/// Derivative of the normalized Legendre basis with respect to xi.
pub fn normalized_legendre_deriv(i: usize, xi: f64) -> f64 {
    let (_, dp) = legendre_pair(i, xi);
    ((2.0 * i as f64 + 1.0) / 2.0).sqrt() * dp
}

/// Normalized Legendre basis of a given order with tabulated quadrature data.
#[derive(Debug, Clone)]
pub struct BasisSet {
    order: usize,
    quad: QuadratureRule,
    /// values[q][i] = psi_i(xi_q)
    values: Vec<Vec<f64>>,
    /// derivs[q][i] = psi'_i(xi_q) (reference-coordinate derivative)
    derivs: Vec<Vec<f64>>,
    /// Trace values psi_i(-1) and psi_i(+1).
    left: Vec<f64>,
    right: Vec<f64>,
}

/// Builds the normalized Legendre basis of degree `order` tabulated on an
/// `n_quad`-point Gauss rule. The rule must integrate products of two basis
/// functions exactly, i.e. n_quad >= order + 1.
pub fn legendre_basis(order: usize, n_quad: usize) -> Result<BasisSet> {
    if n_quad < order + 1 {
        return Err(SolverError::InvalidArgument(format!(
            "{n_quad}-point quadrature cannot integrate degree-{} products",
            2 * order
        )));
    }
    let quad = gauss_legendre(n_quad)?;
    let n_fun = order + 1;
    let mut values = Vec::with_capacity(n_quad);
    let mut derivs = Vec::with_capacity(n_quad);
    for &xi in &quad.nodes {
        values.push((0..n_fun).map(|i| normalized_legendre(i, xi)).collect());
        derivs.push(
            (0..n_fun)
                .map(|i| normalized_legendre_deriv(i, xi))
                .collect(),
        );
    }
    let left = (0..n_fun).map(|i| normalized_legendre(i, -1.0)).collect();
    let right = (0..n_fun).map(|i| normalized_legendre(i, 1.0)).collect();
    Ok(BasisSet {
        order,
        quad,
        values,
        derivs,
        left,
        right,
    })
}

impl BasisSet {
    pub fn order(&self) -> usize {
        self.order
    }

    /// Number of basis functions, order + 1.
    pub fn n_functions(&self) -> usize {
        self.order + 1
    }

    pub fn n_quad(&self) -> usize {
        self.quad.nodes.len()
    }

    pub fn quad_nodes(&self) -> &[f64] {
        &self.quad.nodes
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad.weights
    }

    /// Basis values at quadrature node `q`.
    pub fn values_at(&self, q: usize) -> &[f64] {
        &self.values[q]
    }

    /// Reference-coordinate basis derivatives at quadrature node `q`.
    pub fn derivs_at(&self, q: usize) -> &[f64] {
        &self.derivs[q]
    }

    /// Trace values at xi = -1.
    pub fn trace_left(&self) -> &[f64] {
        &self.left
    }

    /// Trace values at xi = +1.
    pub fn trace_right(&self) -> &[f64] {
        &self.right
    }

    /// Evaluates sum_i c_i psi_i at quadrature node `q`.
    pub fn eval_coeffs_at(&self, coeffs: &[f64], q: usize) -> f64 {
        self.values[q]
            .iter()
            .zip(coeffs)
            .map(|(v, c)| v * c)
            .sum()
    }

    /// Evaluates the reference-coordinate derivative at quadrature node `q`.
    pub fn eval_deriv_at(&self, coeffs: &[f64], q: usize) -> f64 {
        self.derivs[q]
            .iter()
            .zip(coeffs)
            .map(|(v, c)| v * c)
            .sum()
    }
}
