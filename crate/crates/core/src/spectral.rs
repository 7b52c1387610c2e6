//! Diagonalization, level curves with curvature, and densities of states.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::spin_core::{BlockTag, Branch, CollectiveHamiltonian, Frame, OperatorMatrix, Parity};
use crate::tridiagonal::{orient_columns, SymTridiagonal};

/// Parameters a spectrum was built from, when known.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSource {
    pub n: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub branch: Branch,
    pub frame: Frame,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, matching `eigenvalues`.
    pub eigenvectors: DMatrix<f64>,
    pub block: BlockTag,
    pub source: Option<SpectrumSource>,
}

impl Spectrum {
    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn with_source(mut self, source: SpectrumSource) -> Self {
        self.source = Some(source);
        self
    }

    /// `max_k ||H v_k - E_k v_k||_inf / max(1, |E_k|)`.
    pub fn max_scaled_residual(&self, h: &DMatrix<f64>) -> f64 {
        let hv = h * &self.eigenvectors;
        let mut worst: f64 = 0.0;
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            let r = (hv.column(k) - self.eigenvectors.column(k) * e).amax();
            worst = worst.max(r / e.abs().max(1.0));
        }
        worst
    }

    /// `max |V^T V - I|`.
    pub fn orthonormality_defect(&self) -> f64 {
        let n = self.eigenvectors.ncols();
        (self.eigenvectors.transpose() * &self.eigenvectors - DMatrix::identity(n, n)).amax()
    }
}

const DENSE_EPS: f64 = 1e-14;
const DENSE_MAX_ITER: usize = 10_000;

/// Dense symmetric eigendecomposition. Columns are oriented so their
/// largest-magnitude component is positive, which makes output deterministic.
pub fn diagonalize(h: &OperatorMatrix) -> Result<Spectrum> {
    let eig = h
        .entries()
        .clone()
        .try_symmetric_eigen(DENSE_EPS, DENSE_MAX_ITER)
        .ok_or_else(|| Error::NoConvergence {
            context: format!("dense {0}x{0} {1:?} block", h.dim(), h.block()),
        })?;
    let mut order: Vec<usize> = (0..h.dim()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::from_fn(h.dim(), h.dim(), |r, c| eig.eigenvectors[(r, order[c])]);
    orient_columns(&mut eigenvectors);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        block: h.block(),
        source: None,
    })
}

/// Tridiagonal route, used for parity blocks.
pub fn diagonalize_tridiagonal(t: &SymTridiagonal, block: BlockTag) -> Result<Spectrum> {
    let (eigenvalues, eigenvectors) = t.eigen_full()?;
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
        block,
        source: None,
    })
}

/// Even-block energies `E_n(alpha)` of the bath Hamiltonian on a uniform
/// `alpha` grid, tracked by sorted index, with central-difference curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCurves {
    pub n: usize,
    pub alphas: Vec<f64>,
    pub step: f64,
    /// `levels[k][i] = E_k(alphas[i])`.
    pub levels: Vec<Vec<f64>>,
    /// `curvature[k][i]` at `alphas[i + 1]`; the endpoints are undefined.
    pub curvature: Vec<Vec<f64>>,
}

impl LevelCurves {
    /// Alpha values where the curvature is defined.
    pub fn curvature_alphas(&self) -> &[f64] {
        &self.alphas[1..self.alphas.len() - 1]
    }
}

pub(crate) fn uniform_step(grid: &[f64], name: &'static str) -> Result<f64> {
    if grid.len() < 2 {
        return Err(Error::invalid(name, "grid needs at least two points"));
    }
    let step = (grid[grid.len() - 1] - grid[0]) / (grid.len() - 1) as f64;
    if !(step > 0.0) {
        return Err(Error::invalid(name, "grid must be strictly increasing"));
    }
    for (i, &v) in grid.iter().enumerate() {
        let want = grid[0] + step * i as f64;
        if (v - want).abs() > 1e-9 * step.max(want.abs()) {
            return Err(Error::invalid(name, "grid must be uniform"));
        }
    }
    Ok(step)
}

/// Second central difference `(f[i-1] - 2 f[i] + f[i+1]) / h^2` at the
/// interior points.
pub fn central_curvature(values: &[f64], step: f64) -> Vec<f64> {
    let h2 = step * step;
    values
        .windows(3)
        .map(|w| (w[0] - 2.0 * w[1] + w[2]) / h2)
        .collect()
}

pub fn level_curves(n: usize, alpha_grid: &[f64]) -> Result<LevelCurves> {
    if alpha_grid.len() < 5 {
        return Err(Error::invalid("alpha", "level curves need at least 5 grid points"));
    }
    let step = uniform_step(alpha_grid, "alpha")?;
    if alpha_grid[0] < 0.0 || alpha_grid[alpha_grid.len() - 1] > 1.0 {
        return Err(Error::invalid("alpha", "grid must lie within [0, 1]"));
    }
    let mut per_alpha = Vec::with_capacity(alpha_grid.len());
    for &alpha in alpha_grid {
        let t = CollectiveHamiltonian::lmg(n, alpha)?.block_tridiagonal(Parity::Even);
        per_alpha.push(t.eigenvalues().map_err(|e| e.at(format!("alpha={alpha}")))?);
    }
    let n_levels = per_alpha[0].len();
    let levels: Vec<Vec<f64>> = (0..n_levels)
        .map(|k| per_alpha.iter().map(|ev| ev[k]).collect())
        .collect();
    let curvature = levels.iter().map(|l| central_curvature(l, step)).collect();
    Ok(LevelCurves {
        n,
        alphas: alpha_grid.to_vec(),
        step,
        levels,
        curvature,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    Histogram,
    Classical,
}

/// Density of states on uniform bins.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityProfile {
    pub kind: DensityKind,
    /// Bin centers.
    pub energies: Vec<f64>,
    pub width: f64,
    pub density: Vec<f64>,
    /// Target value of `sum(density) * width`.
    pub normalization: f64,
}

impl DensityProfile {
    pub fn integral(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.width
    }

    pub fn lower_edge(&self, i: usize) -> f64 {
        self.energies[i] - 0.5 * self.width
    }

    pub fn upper_edge(&self, i: usize) -> f64 {
        self.energies[i] + 0.5 * self.width
    }

    /// Index of the bin whose half-open interval holds `e`, if any.
    pub fn bin_of(&self, e: f64) -> Option<usize> {
        (0..self.energies.len()).find(|&i| self.lower_edge(i) <= e && e < self.upper_edge(i))
    }

    /// First index of the largest density value.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &d) in self.density.iter().enumerate() {
            if d > self.density[best] {
                best = i;
            }
        }
        best
    }

    /// Density rescaled to unit integral.
    pub fn normalized(&self) -> Vec<f64> {
        let total = self.integral();
        self.density.iter().map(|d| d / total).collect()
    }
}

/// Histogram of `eigenvalues` on `n_bins` uniform bins spanning
/// `[min E, max E]`; counts are divided by the bin width.
pub fn dos_histogram(eigenvalues: &[f64], n_bins: usize) -> Result<DensityProfile> {
    if eigenvalues.is_empty() {
        return Err(Error::invalid("spectrum", "cannot histogram an empty spectrum"));
    }
    if n_bins < 10 {
        return Err(Error::invalid("bins", format!("need at least 10 bins, got {n_bins}")));
    }
    let lo = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
    let mut counts = vec![0.0; n_bins];
    for &e in eigenvalues {
        let idx = (((e - lo) / width).floor() as usize).min(n_bins - 1);
        counts[idx] += 1.0;
    }
    Ok(DensityProfile {
        kind: DensityKind::Histogram,
        energies: (0..n_bins).map(|i| lo + (i as f64 + 0.5) * width).collect(),
        width,
        density: counts.into_iter().map(|c| c / width).collect(),
        normalization: eigenvalues.len() as f64,
    })
}

/// Resolution of the `(theta, phi)` sampling behind [`classical_dos`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PhaseSpaceGrid {
    pub theta: usize,
    pub phi: usize,
}

impl Default for PhaseSpaceGrid {
    fn default() -> Self {
        PhaseSpaceGrid { theta: 4000, phi: 4000 }
    }
}

/// Energy per spin of the spin-coherent state `|theta, phi>`.
pub fn coherent_energy(alpha: f64, theta: f64, phi: f64) -> f64 {
    let (st, ct) = theta.sin_cos();
    let cp = phi.cos();
    -(1.0 - alpha) * st * st * cp * cp + 0.5 * alpha * (1.0 + ct)
}

/// Smooth density of states from the classical energy surface
/// `E = N h(theta, phi)` with measure `sin(theta) dtheta dphi`.
///
/// `energy_grid` holds uniform bin centers; each midpoint sample of the
/// sphere is binned into the grid cell holding its energy. The result is
/// scaled so the density over the whole sphere integrates to `N + 1`.
pub fn classical_dos(
    n: usize,
    alpha: f64,
    energy_grid: &[f64],
    resolution: PhaseSpaceGrid,
) -> Result<DensityProfile> {
    if n < 2 || !n.is_multiple_of(2) {
        return Err(Error::invalid("N", format!("environment size must be even and at least 2, got {n}")));
    }
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid("alpha", format!("classical density needs 0 <= alpha < 1, got {alpha}")));
    }
    if resolution.theta == 0 || resolution.phi == 0 {
        return Err(Error::invalid("grid", "phase-space resolution must be positive"));
    }
    let width = uniform_step(energy_grid, "energy")?;
    let bins = energy_grid.len();
    let lo = energy_grid[0] - 0.5 * width;
    let nf = n as f64;

    let dtheta = std::f64::consts::PI / resolution.theta as f64;
    let dphi = 2.0 * std::f64::consts::PI / resolution.phi as f64;
    let cos2_phi: Vec<f64> = (0..resolution.phi)
        .map(|j| {
            let c = ((j as f64 + 0.5) * dphi).cos();
            c * c
        })
        .collect();

    let mut weights = vec![0.0; bins];
    let mut total = 0.0;
    for i in 0..resolution.theta {
        let theta = (i as f64 + 0.5) * dtheta;
        let (st, ct) = theta.sin_cos();
        let w = st * dtheta * dphi;
        let exch = -(1.0 - alpha) * st * st * nf;
        let field = 0.5 * alpha * (1.0 + ct) * nf;
        for &c2 in &cos2_phi {
            total += w;
            let e = exch * c2 + field;
            let k = ((e - lo) / width).floor();
            if k >= 0.0 && (k as usize) < bins {
                weights[k as usize] += w;
            }
        }
    }
    let norm = nf + 1.0;
    Ok(DensityProfile {
        kind: DensityKind::Classical,
        energies: energy_grid.to_vec(),
        width,
        density: weights.into_iter().map(|w| norm * w / (total * width)).collect(),
        normalization: norm,
    })
}
