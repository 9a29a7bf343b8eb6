use crate::error::{Result, SolverError};

/// Partition of a 1D interval into elements.
///
/// Edges are strictly increasing; element `e` spans
/// `[element_edges[e], element_edges[e + 1]]`.
#[derive(Debug, Clone)]
pub struct Mesh1D {
    x_left: f64,
    x_right: f64,
    element_edges: Vec<f64>,
}

impl Mesh1D {
    /// Builds a mesh from an explicit edge list.
    pub fn from_edges(element_edges: Vec<f64>) -> Result<Self> {
        if element_edges.len() < 2 {
            return Err(SolverError::InvalidArgument(
                "mesh needs at least two edges".into(),
            ));
        }
        for pair in element_edges.windows(2) {
            if !(pair[1] > pair[0]) {
                return Err(SolverError::InvalidArgument(format!(
                    "mesh edges must be strictly increasing, got {} then {}",
                    pair[0], pair[1]
                )));
            }
        }
        Ok(Self {
            x_left: element_edges[0],
            x_right: *element_edges.last().unwrap(),
            element_edges,
        })
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn n_elements(&self) -> usize {
        self.element_edges.len() - 1
    }

    pub fn edges(&self) -> &[f64] {
        &self.element_edges
    }

    pub fn element_width(&self, e: usize) -> f64 {
        self.element_edges[e + 1] - self.element_edges[e]
    }

    pub fn element_center(&self, e: usize) -> f64 {
        0.5 * (self.element_edges[e] + self.element_edges[e + 1])
    }

    /// Length of the whole domain.
    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    /// Maps a reference coordinate `xi` in [-1, 1] to physical space.
    pub fn to_physical(&self, e: usize, xi: f64) -> f64 {
        self.element_center(e) + 0.5 * self.element_width(e) * xi
    }
}

/// Builds a uniform partition of `[x_left, x_right]` into `n_el` elements.
pub fn build_uniform_mesh(x_left: f64, x_right: f64, n_el: usize) -> Result<Mesh1D> {
    if n_el == 0 {
        return Err(SolverError::InvalidArgument(
            "element count must be positive".into(),
        ));
    }
    if !(x_right > x_left) {
        return Err(SolverError::InvalidArgument(format!(
            "degenerate interval [{x_left}, {x_right}]"
        )));
    }
    let width = (x_right - x_left) / n_el as f64;
    let mut edges: Vec<f64> = (0..=n_el).map(|i| x_left + i as f64 * width).collect();
    // Pin the endpoints exactly.
    edges[0] = x_left;
    edges[n_el] = x_right;
    Mesh1D::from_edges(edges)
}
