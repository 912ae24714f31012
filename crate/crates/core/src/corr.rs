//! Port geometry of a planar fluid antenna and the spatial correlation
//! between its ports under 3D isotropic scattering.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::specfun::spherical_bessel_j0;

/// Eigenvalue clamp used when a correlation matrix has to be repaired.
pub const EIGEN_FLOOR: f64 = 1e-6;
/// Minimum eigenvalue below which a matrix is treated as indefinite.
pub const INDEFINITE_TOLERANCE: f64 = -1e-10;

/// `n1 × n2` ports spread uniformly over a `w1 λ × w2 λ` aperture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PortGrid {
    n1: usize,
    n2: usize,
    w1: f64,
    w2: f64,
}

impl PortGrid {
    pub fn new(n1: usize, n2: usize, w1: f64, w2: f64) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidGrid(format!("need at least one port per side, got {n1}×{n2}")));
        }
        for (n, w, side) in [(n1, w1, "w1"), (n2, w2, "w2")] {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::InvalidGrid(format!("{side} = {w} must be finite and nonnegative")));
            }
            if n > 1 && w == 0.0 {
                return Err(Error::InvalidGrid(format!("{side} = 0 with {n} ports puts distinct ports on top of each other")));
            }
        }
        Ok(Self { n1, n2, w1, w2 })
    }

    /// A conventional single fixed antenna.
    pub fn single() -> Self {
        Self { n1: 1, n2: 1, w1: 0.0, w2: 0.0 }
    }

    /// Square `side × side` grid over a `w λ × w λ` aperture.
    pub fn square(side: usize, w: f64) -> Result<Self> {
        let w = if side == 1 { 0.0 } else { w };
        Self::new(side, side, w, w)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn w1(&self) -> f64 {
        self.w1
    }

    pub fn w2(&self) -> f64 {
        self.w2
    }

    pub fn port_count(&self) -> usize {
        self.n1 * self.n2
    }

    /// Position of a 1-based port, in wavelengths.
    fn position(&self, n: usize) -> Result<(f64, f64)> {
        let (i1, i2) = port_to_grid(n, self)?;
        let along = |i: usize, count: usize, w: f64| {
            if count == 1 {
                0.0
            } else {
                (i - 1) as f64 / (count - 1) as f64 * w
            }
        };
        Ok((along(i1, self.n1, self.w1), along(i2, self.n2, self.w2)))
    }
}

/// 1-based port index to 1-based `(n1, n2)`, row-major:
/// `n = (n2 - 1) * grid.n1 + n1`.
pub fn port_to_grid(n: usize, grid: &PortGrid) -> Result<(usize, usize)> {
    let count = grid.port_count();
    if n == 0 || n > count {
        return Err(Error::PortOutOfRange { index: n, count });
    }
    let k = n - 1;
    Ok((k % grid.n1 + 1, k / grid.n1 + 1))
}

/// Inverse of [`port_to_grid`].
pub fn grid_to_port(n1: usize, n2: usize, grid: &PortGrid) -> Result<usize> {
    if n1 == 0 || n1 > grid.n1 || n2 == 0 || n2 > grid.n2 {
        return Err(Error::PortOutOfRange { index: (n2.max(1) - 1) * grid.n1 + n1, count: grid.port_count() });
    }
    Ok((n2 - 1) * grid.n1 + n1)
}

/// `j0(2π d)` with `d` the distance between ports `n` and `m` in wavelengths.
/// A side with a single port contributes no separation.
pub fn port_correlation(n: usize, m: usize, grid: &PortGrid) -> Result<f64> {
    let (x1, y1) = grid.position(n)?;
    let (x2, y2) = grid.position(m)?;
    let d = (x1 - x2).hypot(y1 - y2);
    Ok(spherical_bessel_j0(2.0 * PI * d))
}

/// Port correlation matrix, possibly repaired to be positive definite, with
/// its lower Cholesky factor.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationMatrix {
    entries: DMatrix<f64>,
    repaired: bool,
    eigen_floor: f64,
    chol: DMatrix<f64>,
}

impl CorrelationMatrix {
    /// Identity correlation, i.e. independent ports.
    pub fn identity(dim: usize) -> Self {
        let eye = DMatrix::identity(dim, dim);
        Self { entries: eye.clone(), repaired: false, eigen_floor: 0.0, chol: eye }
    }

    /// Takes an explicit symmetric matrix with unit diagonal, repairing it if
    /// it is indefinite or cannot be factorized.
    pub fn from_matrix(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim {
            return Err(Error::NotFactorizable(format!("matrix is {}×{}", entries.nrows(), entries.ncols())));
        }
        for i in 0..dim {
            if (entries[(i, i)] - 1.0).abs() > 1e-12 {
                return Err(Error::NotFactorizable(format!("diagonal entry {i} is {}", entries[(i, i)])));
            }
            for j in 0..i {
                if (entries[(i, j)] - entries[(j, i)]).abs() > 1e-14 || !entries[(i, j)].is_finite() {
                    return Err(Error::NotFactorizable(format!("entries ({i},{j}) and ({j},{i}) differ")));
                }
            }
        }
        let entries = DMatrix::from_fn(dim, dim, |i, j| if i >= j { entries[(i, j)] } else { entries[(j, i)] });

        let min_eig = SymmetricEigen::new(entries.clone()).eigenvalues.min();
        if min_eig >= INDEFINITE_TOLERANCE {
            if let Some(ch) = Cholesky::new(entries.clone()) {
                return Ok(Self { entries, repaired: false, eigen_floor: 0.0, chol: ch.l() });
            }
        }
        let repaired = clamp_and_renormalize(&entries, EIGEN_FLOOR);
        let chol = Cholesky::new(repaired.clone())
            .ok_or_else(|| Error::NotFactorizable("Cholesky failed after eigenvalue repair".into()))?
            .l();
        Ok(Self { entries: repaired, repaired: true, eigen_floor: EIGEN_FLOOR, chol })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    /// 0-based entry.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn repaired(&self) -> bool {
        self.repaired
    }

    pub fn eigen_floor(&self) -> f64 {
        self.eigen_floor
    }

    /// Lower-triangular `L` with `L Lᵀ` equal to the (repaired) matrix.
    pub fn chol(&self) -> &DMatrix<f64> {
        &self.chol
    }

    pub fn is_identity(&self) -> bool {
        let dim = self.dim();
        (0..dim).all(|i| (0..dim).all(|j| self.entries[(i, j)] == if i == j { 1.0 } else { 0.0 }))
    }
}

fn clamp_and_renormalize(m: &DMatrix<f64>, floor: f64) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let clamped = eig.eigenvalues.map(|v| v.max(floor));
    let v = &eig.eigenvectors;
    let rebuilt = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    let n = rebuilt.nrows();
    let scale: Vec<f64> = (0..n).map(|i| rebuilt[(i, i)].sqrt().recip()).collect();
    let mut out = DMatrix::from_fn(n, n, |i, j| rebuilt[(i, j)] * scale[i] * scale[j]);
    for i in 0..n {
        out[(i, i)] = 1.0;
        for j in 0..i {
            out[(j, i)] = out[(i, j)];
        }
    }
    out
}

/// Correlation matrix of all ports of `grid`.
pub fn build_correlation(grid: &PortGrid) -> Result<CorrelationMatrix> {
    let n = grid.port_count();
    let mut m = DMatrix::identity(n, n);
    for i in 0..n {
        for j in 0..i {
            let rho = port_correlation(i + 1, j + 1, grid)?;
            m[(i, j)] = rho;
            m[(j, i)] = rho;
        }
    }
    CorrelationMatrix::from_matrix(m)
}
