use crate::error::{Result, SolverError};

/// Block-tridiagonal matrix with square blocks of uniform size.
///
/// Block row `i` holds `lower[i]` (coupling to block `i - 1`), `diag[i]`, and
/// `upper[i]` (coupling to block `i + 1`); the boundary lower/upper blocks are
/// present but unused. Blocks are stored row-major.
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    n_blocks: usize,
    block_size: usize,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl BlockTridiagonal {
    pub fn zeros(n_blocks: usize, block_size: usize) -> Self {
        let len = n_blocks * block_size * block_size;
        Self {
            n_blocks,
            block_size,
            lower: vec![0.0; len],
            diag: vec![0.0; len],
            upper: vec![0.0; len],
        }
    }

    pub fn n_blocks(&self) -> usize {
        self.n_blocks
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn n_rows(&self) -> usize {
        self.n_blocks * self.block_size
    }

    fn block_mut(storage: &mut [f64], nb: usize, i: usize) -> &mut [f64] {
        &mut storage[i * nb * nb..(i + 1) * nb * nb]
    }

    fn block(storage: &[f64], nb: usize, i: usize) -> &[f64] {
        &storage[i * nb * nb..(i + 1) * nb * nb]
    }

    pub fn diag_mut(&mut self, i: usize) -> &mut [f64] {
        Self::block_mut(&mut self.diag, self.block_size, i)
    }

    pub fn lower_mut(&mut self, i: usize) -> &mut [f64] {
        Self::block_mut(&mut self.lower, self.block_size, i)
    }

    pub fn upper_mut(&mut self, i: usize) -> &mut [f64] {
        Self::block_mut(&mut self.upper, self.block_size, i)
    }

    pub fn diag(&self, i: usize) -> &[f64] {
        Self::block(&self.diag, self.block_size, i)
    }

    pub fn lower(&self, i: usize) -> &[f64] {
        Self::block(&self.lower, self.block_size, i)
    }

    pub fn upper(&self, i: usize) -> &[f64] {
        Self::block(&self.upper, self.block_size, i)
    }

    /// Matrix entry (r, c) in global indexing; zero outside the block band.
    pub fn entry(&self, r: usize, c: usize) -> f64 {
        let nb = self.block_size;
        let (bi, ri) = (r / nb, r % nb);
        let (bj, cj) = (c / nb, c % nb);
        if bj + 1 == bi {
            self.lower(bi)[ri * nb + cj]
        } else if bj == bi {
            self.diag(bi)[ri * nb + cj]
        } else if bj == bi + 1 {
            self.upper(bi)[ri * nb + cj]
        } else {
            0.0
        }
    }

    /// Matrix-vector product, for residual checks.
    pub fn multiply(&self, x: &[f64]) -> Vec<f64> {
        let nb = self.block_size;
        let mut y = vec![0.0; self.n_rows()];
        for bi in 0..self.n_blocks {
            for ri in 0..nb {
                let mut acc = 0.0;
                if bi > 0 {
                    let blk = self.lower(bi);
                    for cj in 0..nb {
                        acc += blk[ri * nb + cj] * x[(bi - 1) * nb + cj];
                    }
                }
                let blk = self.diag(bi);
                for cj in 0..nb {
                    acc += blk[ri * nb + cj] * x[bi * nb + cj];
                }
                if bi + 1 < self.n_blocks {
                    let blk = self.upper(bi);
                    for cj in 0..nb {
                        acc += blk[ri * nb + cj] * x[(bi + 1) * nb + cj];
                    }
                }
                y[bi * nb + ri] = acc;
            }
        }
        y
    }

    /// Direct solve via banded LU factorization with partial pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        if rhs.len() != self.n_rows() {
            return Err(SolverError::InvalidArgument(format!(
                "rhs length {} does not match system size {}",
                rhs.len(),
                self.n_rows()
            )));
        }
        let nb = self.block_size;
        let half_band = 2 * nb - 1;
        let mut band = BandedMatrix::zeros(self.n_rows(), half_band, half_band);
        for bi in 0..self.n_blocks {
            for ri in 0..nb {
                let r = bi * nb + ri;
                if bi > 0 {
                    let blk = self.lower(bi);
                    for cj in 0..nb {
                        band.set(r, (bi - 1) * nb + cj, blk[ri * nb + cj]);
                    }
                }
                let blk = self.diag(bi);
                for cj in 0..nb {
                    band.set(r, bi * nb + cj, blk[ri * nb + cj]);
                }
                if bi + 1 < self.n_blocks {
                    let blk = self.upper(bi);
                    for cj in 0..nb {
                        band.set(r, (bi + 1) * nb + cj, blk[ri * nb + cj]);
                    }
                }
            }
        }
        let factored = band.factor()?;
        let mut x = rhs.to_vec();
        factored.solve_in_place(&mut x);
        Ok(x)
    }
}

/// Compact banded matrix in the Numerical-Recipes layout: row `i` stores the
/// band entries for columns i - kl .. i + ku left-aligned, so the diagonal
/// sits at compact column `kl`.
pub struct BandedMatrix {
    n: usize,
    kl: usize,
    ku: usize,
    rows: Vec<f64>,
}

/// LU factorization of a banded matrix with partial pivoting.
pub struct FactoredBand {
    n: usize,
    kl: usize,
    width: usize,
    upper: Vec<f64>,
    multipliers: Vec<f64>,
    pivots: Vec<usize>,
}

impl BandedMatrix {
    pub fn zeros(n: usize, kl: usize, ku: usize) -> Self {
        Self {
            n,
            kl,
            ku,
            rows: vec![0.0; n * (kl + ku + 1)],
        }
    }

    pub fn set(&mut self, r: usize, c: usize, value: f64) {
        let width = self.kl + self.ku + 1;
        let offset = c + self.kl - r; // panics if outside the band
        self.rows[r * width + offset] = value;
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        if c + self.kl < r || c > r + self.ku {
            return 0.0;
        }
        let width = self.kl + self.ku + 1;
        self.rows[r * width + (c + self.kl - r)]
    }

    /// Banded LU with partial pivoting (bandec-style elimination).
    pub fn factor(mut self) -> Result<FactoredBand> {
        let n = self.n;
        let kl = self.kl;
        let width = self.kl + self.ku + 1;
        // Left-shift the top kl rows so every row starts at its first band entry.
        let mut l = kl;
        for i in 0..kl.min(n) {
            for j in (kl - i)..width {
                self.rows[i * width + j - l] = self.rows[i * width + j];
            }
            l -= 1;
            for j in (width - l - 1)..width {
                self.rows[i * width + j] = 0.0;
            }
        }
        let mut multipliers = vec![0.0; n * kl];
        let mut pivots = vec![0usize; n];
        // Flags exact singularity; well-conditioned systems never get near this.
        let tiny = 1e-300;
        let mut l = kl;
        for k in 0..n {
            if l < n {
                l += 1;
            }
            let limit = l.min(n);
            let mut piv_val = self.rows[k * width].abs();
            let mut piv_row = k;
            for j in (k + 1)..limit {
                let v = self.rows[j * width].abs();
                if v > piv_val {
                    piv_val = v;
                    piv_row = j;
                }
            }
            pivots[k] = piv_row;
            if piv_val <= tiny {
                return Err(SolverError::Singular(format!(
                    "zero pivot at row {k} of {n}"
                )));
            }
            if piv_row != k {
                for j in 0..width {
                    self.rows.swap(k * width + j, piv_row * width + j);
                }
            }
            for i in (k + 1)..limit {
                let factor = self.rows[i * width] / self.rows[k * width];
                multipliers[k * kl + (i - k - 1)] = factor;
                for j in 1..width {
                    self.rows[i * width + j - 1] =
                        self.rows[i * width + j] - factor * self.rows[k * width + j];
                }
                self.rows[i * width + width - 1] = 0.0;
            }
        }
        Ok(FactoredBand {
            n,
            kl,
            width,
            upper: self.rows,
            multipliers,
            pivots,
        })
    }
}

impl FactoredBand {
    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        let kl = self.kl;
        let width = self.width;
        let mut l = kl;
        for k in 0..n {
            let piv = self.pivots[k];
            if piv != k {
                b.swap(k, piv);
            }
            if l < n {
                l += 1;
            }
            for i in (k + 1)..l.min(n) {
                b[i] -= self.multipliers[k * kl + (i - k - 1)] * b[k];
            }
        }
        let mut l = 1;
        for i in (0..n).rev() {
            let mut sum = b[i];
            for k in 1..l {
                sum -= self.upper[i * width + k] * b[i + k];
            }
            b[i] = sum / self.upper[i * width];
            if l < width {
                l += 1;
            }
        }
    }
}

/// Solves a block-tridiagonal system; thin wrapper naming the operation.
pub fn linear_solve(system: &BlockTridiagonal, rhs: &[f64]) -> Result<Vec<f64>> {
    system.solve(rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Dense Gaussian elimination oracle, independent of the banded path.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut piv = k;
            for r in k + 1..n {
                if m[r][k].abs() > m[piv][k].abs() {
                    piv = r;
                }
            }
            m.swap(k, piv);
            x.swap(k, piv);
            for r in k + 1..n {
                let f = m[r][k] / m[k][k];
                for c in k..n {
                    m[r][c] -= f * m[k][c];
                }
                x[r] -= f * x[k];
            }
        }
        for k in (0..n).rev() {
            let mut s = x[k];
            for c in k + 1..n {
                s -= m[k][c] * x[c];
            }
            x[k] = s / m[k][k];
        }
        x
    }

    fn to_dense(m: &BlockTridiagonal) -> Vec<Vec<f64>> {
        let n = m.n_rows();
        (0..n)
            .map(|r| (0..n).map(|c| m.entry(r, c)).collect())
            .collect()
    }

    #[test]
    fn identity_system_returns_rhs() {
        let nb = 3;
        let mut m = BlockTridiagonal::zeros(4, nb);
        for i in 0..4 {
            for d in 0..nb {
                m.diag_mut(i)[d * nb + d] = 1.0;
            }
        }
        let rhs: Vec<f64> = (0..12).map(|i| i as f64 - 3.5).collect();
        let x = linear_solve(&m, &rhs).unwrap();
        for (a, b) in x.iter().zip(&rhs) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn two_block_diagonal_system() {
        let mut m = BlockTridiagonal::zeros(2, 2);
        // diag blocks [[2,0],[0,4]] and [[5,0],[0,10]]
        m.diag_mut(0).copy_from_slice(&[2.0, 0.0, 0.0, 4.0]);
        m.diag_mut(1).copy_from_slice(&[5.0, 0.0, 0.0, 10.0]);
        let x = linear_solve(&m, &[2.0, 4.0, 5.0, 10.0]).unwrap();
        for v in x {
            assert_abs_diff_eq!(v, 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn random_block_tridiagonal_matches_dense_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        for &(nb, n) in &[(2usize, 5usize), (3, 7), (5, 12), (1, 9)] {
            let mut m = BlockTridiagonal::zeros(n, nb);
            for i in 0..n {
                for r in 0..nb {
                    for c in 0..nb {
                        m.diag_mut(i)[r * nb + c] =
                            rng.gen_range(-1.0..1.0) + if r == c { 6.0 } else { 0.0 };
                        if i > 0 {
                            m.lower_mut(i)[r * nb + c] = rng.gen_range(-1.0..1.0);
                        }
                        if i + 1 < n {
                            m.upper_mut(i)[r * nb + c] = rng.gen_range(-1.0..1.0);
                        }
                    }
                }
            }
            let rhs: Vec<f64> = (0..n * nb).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let x = linear_solve(&m, &rhs).unwrap();
            let oracle = dense_solve(&to_dense(&m), &rhs);
            for (a, b) in x.iter().zip(&oracle) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-10);
            }
            // Residual of the linear system.
            let ax = m.multiply(&x);
            let rnorm: f64 = ax
                .iter()
                .zip(&rhs)
                .map(|(u, v)| (u - v) * (u - v))
                .sum::<f64>()
                .sqrt();
            let bnorm: f64 = rhs.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(rnorm <= 1e-10 * bnorm.max(1.0));
        }
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        // Diagonal block with a zero in the (0,0) slot still factors.
        let mut m = BlockTridiagonal::zeros(2, 2);
        m.diag_mut(0).copy_from_slice(&[0.0, 2.0, 3.0, 1.0]);
        m.upper_mut(0).copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        m.lower_mut(1).copy_from_slice(&[0.5, 0.0, 0.0, 0.5]);
        m.diag_mut(1).copy_from_slice(&[4.0, 1.0, 1.0, 3.0]);
        let rhs = [1.0, 2.0, 3.0, 4.0];
        let x = linear_solve(&m, &rhs).unwrap();
        let oracle = dense_solve(&to_dense(&m), &rhs);
        for (a, b) in x.iter().zip(&oracle) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
    }

    #[test]
    fn exactly_singular_matrix_is_reported() {
        let mut m = BlockTridiagonal::zeros(2, 2);
        m.diag_mut(0).copy_from_slice(&[1.0, 0.0, 0.0, 1.0]);
        // Second block is all zeros -> singular.
        match linear_solve(&m, &[1.0, 1.0, 1.0, 1.0]) {
            Err(SolverError::Singular(_)) => {}
            other => panic!("expected singular error, got {other:?}"),
        }
    }
}
