//! Parameter sweeps: coupling scans of the speed limit and of the
//! non-Markovianity, the critical-coupling locus, finite-size scaling,
//! `(tau_e, lambda)` maps, the density-of-states comparison and mean-field
//! cross-checks.
//!
//! Scan points run on the rayon pool and are gathered by grid index, so
//! results do not depend on the number of workers.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::qsl_metrics::{evaluate_metrics, evaluate_metrics_along, MetricSample, QubitAngles, SampleParams};
use crate::quench::{decompose_from_ground, ground_state, GroundState};
use crate::spectral::{classical_dos, dos_histogram, level_curves, DensityProfile, LevelCurves, PhaseSpaceGrid};
use crate::spin_core::{validate_alpha, validate_size, CollectiveHamiltonian, Frame, Parity};

/// `lambda_c = 2 - 5 alpha / 2`.
pub fn analytic_critical_coupling(alpha: f64) -> Result<f64> {
    if !(0.0..=0.8).contains(&alpha) {
        return Err(Error::invalid(
            "alpha",
            format!("critical coupling is defined for 0 <= alpha <= 0.8, got {alpha}"),
        ));
    }
    Ok(2.0 - 2.5 * alpha)
}

/// Mean-field energies per spin in the critical frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanField {
    /// `cos(theta*) = -alpha / (4 (1 - alpha))` of the deformed minimum.
    pub cos_theta: f64,
    pub ground_per_n: f64,
    /// Mean energy per spin after the quench `alpha -> alpha + lambda`.
    pub mean_per_n: f64,
    pub separatrix_per_n: f64,
}

pub fn mean_field_check(alpha: f64, lambda: f64) -> Result<MeanField> {
    if !(0.0..0.8).contains(&alpha) {
        return Err(Error::invalid(
            "alpha",
            format!("deformed phase requires 0 <= alpha < 0.8, got {alpha}"),
        ));
    }
    let c = -alpha / (4.0 * (1.0 - alpha));
    let ground = -(1.0 - alpha) * (1.0 - c * c) + 0.5 * alpha * (1.0 + c);
    Ok(MeanField {
        cos_theta: c,
        ground_per_n: ground,
        mean_per_n: ground + 0.5 * lambda * c + 0.5 * lambda,
        separatrix_per_n: 0.0,
    })
}

/// Coupling at which the mean-field quenched energy reaches the separatrix.
pub fn mean_field_critical_coupling(alpha: f64) -> Result<f64> {
    // the mean energy is affine in lambda
    let at0 = mean_field_check(alpha, 0.0)?;
    let at1 = mean_field_check(alpha, 1.0)?;
    let slope = at1.mean_per_n - at0.mean_per_n;
    Ok((at1.separatrix_per_n - at0.mean_per_n) / slope)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    Lambda,
    Alpha,
    Size,
    TauE,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::Lambda => "lambda",
            Axis::Alpha => "alpha",
            Axis::Size => "N",
            Axis::TauE => "tau_e",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanGrid {
    pub axis: Axis,
    pub values: Vec<f64>,
}

/// Rounds away the drift of `start + i * step`.
fn snap(v: f64) -> f64 {
    (v * 1e12).round() / 1e12
}

impl ScanGrid {
    /// `min, min + step, ...` up to `max` inclusive.
    pub fn uniform(axis: Axis, min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !min.is_finite() || !(max >= min) {
            return Err(Error::invalid("grid", format!("need min <= max and step > 0 for the {axis} grid")));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        Self::from_values(axis, (0..count).map(|i| snap(min + i as f64 * step)).collect())
    }

    pub fn from_values(axis: Axis, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("grid", format!("the {axis} grid is empty")));
        }
        if values.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::invalid("grid", format!("the {axis} grid must be strictly increasing")));
        }
        Ok(ScanGrid { axis, values })
    }

    /// Coupling grid that also holds the analytic critical coupling when it
    /// falls inside `[min, max]` but between grid points.
    pub fn lambda(min: f64, max: f64, step: f64, alpha: f64) -> Result<Self> {
        let mut grid = Self::uniform(Axis::Lambda, min, max, step)?;
        if let Ok(lc) = analytic_critical_coupling(alpha) {
            let inside = lc >= grid.values[0] && lc <= *grid.values.last().unwrap();
            if inside && !grid.values.iter().any(|v| (v - lc).abs() <= 1e-9) {
                let at = grid.values.partition_point(|v| *v < lc);
                grid.values.insert(at, lc);
                log::info!("inserted lambda_c = {lc} into the coupling grid");
            }
        }
        Ok(grid)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    SpeedLimit,
    NonMarkovianity,
}

impl Metric {
    pub fn of(self, s: &MetricSample) -> f64 {
        match self {
            Metric::SpeedLimit => s.tau_qsl,
            Metric::NonMarkovianity => s.nm,
        }
    }
}

/// First index of the largest value; NaN never wins.
pub fn argmax_first(values: &[f64]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (i, &v) in values.iter().enumerate() {
        if v.is_nan() {
            continue;
        }
        match best {
            Some(b) if v <= values[b] => {}
            _ => best = Some(i),
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanResult {
    pub grid: ScanGrid,
    pub metric: Metric,
    pub samples: Vec<MetricSample>,
    pub argmax: usize,
}

impl ScanResult {
    fn new(grid: ScanGrid, metric: Metric, samples: Vec<MetricSample>) -> Result<Self> {
        let values: Vec<f64> = samples.iter().map(|s| metric.of(s)).collect();
        let argmax = argmax_first(&values).ok_or_else(|| Error::Numerical("scan produced no finite values".into()))?;
        Ok(ScanResult {
            grid,
            metric,
            samples,
            argmax,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        self.samples.iter().map(|s| self.metric.of(s)).collect()
    }

    pub fn argmax_location(&self) -> f64 {
        self.grid.values[self.argmax]
    }

    pub fn max_value(&self) -> f64 {
        self.metric.of(&self.samples[self.argmax])
    }
}

/// Physical setting shared by the coupling scans.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuenchSetup {
    pub n: usize,
    pub alpha: f64,
    pub angles: QubitAngles,
    pub frame: Frame,
    /// Explicit time step; `None` picks the default resolution.
    pub dt: Option<f64>,
}

impl QuenchSetup {
    pub fn new(n: usize, alpha: f64) -> Self {
        QuenchSetup {
            n,
            alpha,
            angles: QubitAngles::default(),
            frame: Frame::default(),
            dt: None,
        }
    }

    fn params(&self, lambda: f64) -> SampleParams {
        SampleParams {
            n: self.n,
            alpha: self.alpha,
            lambda,
            theta: self.angles.theta,
            frame: self.frame,
        }
    }
}

/// Metrics at each `tau_e` for one coupling. `lambda = 0` leaves the qubit
/// uncoupled: no speed limit, no backflow.
fn coupling_point(setup: &QuenchSetup, ground: &GroundState, lambda: f64, taus: &[f64]) -> Result<Vec<MetricSample>> {
    if lambda == 0.0 {
        return Ok(taus.iter().map(|&t| MetricSample::uncoupled(t, setup.params(0.0))).collect());
    }
    let dec = decompose_from_ground(ground, lambda, setup.frame)?;
    if let [tau_e] = taus {
        Ok(vec![evaluate_metrics(&dec, *tau_e, &setup.angles, setup.dt)?])
    } else {
        evaluate_metrics_along(&dec, taus, &setup.angles, setup.dt)
    }
}

fn check_lambda_grid(grid: &ScanGrid) -> Result<()> {
    if grid.axis != Axis::Lambda {
        return Err(Error::invalid("grid", format!("expected a lambda grid, got {}", grid.axis)));
    }
    if grid.values.iter().any(|l| !(*l >= 0.0 && l.is_finite())) {
        return Err(Error::invalid("lambda", "couplings must be finite and non-negative"));
    }
    Ok(())
}

fn scan(grid: &ScanGrid, setup: &QuenchSetup, tau_e: f64, metric: Metric) -> Result<ScanResult> {
    check_lambda_grid(grid)?;
    let ground = ground_state(setup.n, setup.alpha)?;
    let samples = grid
        .values
        .par_iter()
        .map(|&lambda| {
            coupling_point(setup, &ground, lambda, &[tau_e])
                .map(|mut v| v.remove(0))
                .map_err(|e| e.at(format!("lambda={lambda}")))
        })
        .collect::<Result<Vec<_>>>()?;
    ScanResult::new(grid.clone(), metric, samples)
}

/// `tau_QSL` over a coupling grid.
pub fn lambda_scan(grid: &ScanGrid, setup: &QuenchSetup, tau_e: f64) -> Result<ScanResult> {
    scan(grid, setup, tau_e, Metric::SpeedLimit)
}

/// Non-Markovianity over a coupling grid.
pub fn nm_scan(grid: &ScanGrid, setup: &QuenchSetup, tau_e: f64) -> Result<ScanResult> {
    scan(grid, setup, tau_e, Metric::NonMarkovianity)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LocusPoint {
    pub alpha: f64,
    pub numeric: f64,
    pub analytic: f64,
}

/// Numeric critical coupling (argmax of `tau_QSL`) against the analytic one
/// for each `alpha`; `lambdas` gives `(min, max, step)` of the coupling grid.
pub fn critical_locus(
    alphas: &[f64],
    setup: &QuenchSetup,
    tau_e: f64,
    lambdas: (f64, f64, f64),
) -> Result<Vec<LocusPoint>> {
    if alphas.iter().any(|a| !(0.0..=0.72 + 1e-12).contains(a)) {
        return Err(Error::invalid("alpha", "locus values must lie in [0, 0.72]"));
    }
    alphas
        .iter()
        .map(|&alpha| {
            let grid = ScanGrid::lambda(lambdas.0, lambdas.1, lambdas.2, alpha)?;
            let result = lambda_scan(&grid, &QuenchSetup { alpha, ..*setup }, tau_e)
                .map_err(|e| e.at(format!("alpha={alpha}")))?;
            Ok(LocusPoint {
                alpha,
                numeric: result.argmax_location(),
                analytic: analytic_critical_coupling(alpha)?,
            })
        })
        .collect()
}

/// Ordinary least squares `y = intercept + slope x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub rss: f64,
    pub count: usize,
}

pub fn linear_fit(x: &[f64], y: &[f64]) -> Result<LinearFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::invalid("fit", "need at least two paired points"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("fit", "abscissae are all equal"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    Ok(LinearFit {
        slope,
        intercept,
        rss,
        count: x.len(),
    })
}

/// `log y = intercept - mu log x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitResult {
    pub mu: f64,
    pub intercept: f64,
    pub rss: f64,
    pub count: usize,
}

pub fn fit_power_law(x: &[f64], y: &[f64]) -> Result<FitResult> {
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Numerical("power-law fit needs positive data".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let fit = linear_fit(&lx, &ly)?;
    Ok(FitResult {
        mu: -fit.slope,
        intercept: fit.intercept,
        rss: fit.rss,
        count: fit.count,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalingResult {
    pub sizes: Vec<usize>,
    pub samples: Vec<MetricSample>,
    pub fit: FitResult,
}

/// Fits `1 - tau_QSL / tau_e ~ N^{-mu}` at the analytic critical coupling.
pub fn size_scaling(sizes: &[usize], setup: &QuenchSetup, tau_e: f64) -> Result<ScalingResult> {
    if sizes.len() < 5 {
        return Err(Error::invalid("N", format!("scaling needs at least 5 sizes, got {}", sizes.len())));
    }
    for &n in sizes {
        validate_size(n)?;
    }
    let lambda = analytic_critical_coupling(setup.alpha)?;
    let samples = sizes
        .par_iter()
        .map(|&n| {
            let point = QuenchSetup { n, ..*setup };
            let ground = ground_state(n, setup.alpha)?;
            coupling_point(&point, &ground, lambda, &[tau_e])
                .map(|mut v| v.remove(0))
                .map_err(|e| e.at(format!("N={n}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if let Some(bad) = samples.iter().find(|s| s.tau_qsl >= s.tau_e) {
        return Err(Error::Numerical(format!(
            "tau_QSL = {} reaches tau_e at N={}; the scaling fit is undefined",
            bad.tau_qsl, bad.params.n
        )));
    }
    let x: Vec<f64> = sizes.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = samples.iter().map(|s| 1.0 - s.tau_qsl / s.tau_e).collect();
    Ok(ScalingResult {
        sizes: sizes.to_vec(),
        samples,
        fit: fit_power_law(&x, &y)?,
    })
}

/// `tau_QSL` on a `(tau_e, lambda)` grid, rows indexed by `tau_e`.
#[derive(Debug, Clone, PartialEq)]
pub struct Heatmap {
    pub taus: ScanGrid,
    pub lambdas: ScanGrid,
    /// Row-major, `taus.len() x lambdas.len()`.
    pub values: Vec<f64>,
    pub row_argmax: Vec<usize>,
}

impl Heatmap {
    pub fn row(&self, i: usize) -> &[f64] {
        let w = self.lambdas.len();
        &self.values[i * w..(i + 1) * w]
    }

    pub fn row_max(&self) -> Vec<f64> {
        (0..self.taus.len()).map(|i| self.row(i)[self.row_argmax[i]]).collect()
    }
}

pub fn qsl_heatmap(taus: &ScanGrid, lambdas: &ScanGrid, setup: &QuenchSetup) -> Result<Heatmap> {
    check_lambda_grid(lambdas)?;
    if taus.axis != Axis::TauE || taus.values.iter().any(|t| !(*t > 0.0)) {
        return Err(Error::invalid("tau_e", "heatmap rows need positive evolution times"));
    }
    let ground = ground_state(setup.n, setup.alpha)?;
    let columns = lambdas
        .values
        .par_iter()
        .map(|&lambda| {
            coupling_point(setup, &ground, lambda, &taus.values).map_err(|e| e.at(format!("lambda={lambda}")))
        })
        .collect::<Result<Vec<_>>>()?;
    let width = lambdas.len();
    let mut values = vec![0.0; taus.len() * width];
    for (j, column) in columns.iter().enumerate() {
        for (i, s) in column.iter().enumerate() {
            values[i * width + j] = s.tau_qsl;
        }
    }
    let row_argmax = values
        .chunks(width)
        .map(|row| argmax_first(row).ok_or_else(|| Error::Numerical("heatmap row has no finite values".into())))
        .collect::<Result<Vec<_>>>()?;
    Ok(Heatmap {
        taus: taus.clone(),
        lambdas: lambdas.clone(),
        values,
        row_argmax,
    })
}

/// Full environment spectrum, both parity blocks, ascending.
pub fn environment_spectrum(n: usize, alpha: f64) -> Result<Vec<f64>> {
    let h = CollectiveHamiltonian::lmg(n, alpha)?;
    let mut all = Vec::with_capacity(n + 1);
    for parity in [Parity::Even, Parity::Odd] {
        all.extend(h.block_tridiagonal(parity).eigenvalues()?);
    }
    all.sort_by(f64::total_cmp);
    Ok(all)
}

/// Gaps between paired even and odd levels, lowest first.
pub fn parity_gaps(n: usize, alpha: f64, pairs: usize) -> Result<Vec<f64>> {
    let h = CollectiveHamiltonian::lmg(n, alpha)?;
    let even = h.block_tridiagonal(Parity::Even).eigenvalues()?;
    let odd = h.block_tridiagonal(Parity::Odd).eigenvalues()?;
    if pairs > odd.len() {
        return Err(Error::invalid("pairs", format!("only {} odd levels exist", odd.len())));
    }
    Ok(even.iter().zip(&odd).take(pairs).map(|(e, o)| (e - o).abs()).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct DosComparison {
    pub histogram: DensityProfile,
    pub classical: DensityProfile,
    /// Bins left out of the distance: the two whose centers are closest to 0.
    pub excluded: [usize; 2],
    /// `sum |p - q| width` of the unit-normalized profiles over the kept bins.
    pub l1_distance: f64,
}

/// Quantum histogram of the full spectrum against the classical density on
/// the same bin centers.
pub fn dos_comparison(n: usize, alpha: f64, bins: usize, resolution: PhaseSpaceGrid) -> Result<DosComparison> {
    validate_alpha(alpha)?;
    let histogram = dos_histogram(&environment_spectrum(n, alpha)?, bins)?;
    let classical = classical_dos(n, alpha, &histogram.energies, resolution)?;
    let mut order: Vec<usize> = (0..bins).collect();
    order.sort_by(|&a, &b| histogram.energies[a].abs().total_cmp(&histogram.energies[b].abs()));
    let excluded = [order[0].min(order[1]), order[0].max(order[1])];
    let p = histogram.normalized();
    let q = classical.normalized();
    let l1_distance = (0..bins)
        .filter(|i| !excluded.contains(i))
        .map(|i| (p[i] - q[i]).abs() * histogram.width)
        .sum();
    Ok(DosComparison {
        histogram,
        classical,
        excluded,
        l1_distance,
    })
}

/// Where a level's curvature dips and where the level crosses zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CurvatureDip {
    pub level: usize,
    /// Grid index and value of alpha at the most negative curvature.
    pub dip_index: usize,
    pub dip_alpha: f64,
    /// Grid index and value of alpha minimizing `|E_n|`, interior points only.
    pub zero_index: usize,
    pub zero_alpha: f64,
}

impl CurvatureDip {
    pub fn offset_steps(&self) -> usize {
        self.dip_index.abs_diff(self.zero_index)
    }
}

pub fn curvature_dip(curves: &LevelCurves, level: usize) -> Result<CurvatureDip> {
    let curvature = curves
        .curvature
        .get(level)
        .ok_or_else(|| Error::invalid("level", format!("level {level} is not tracked")))?;
    let neg: Vec<f64> = curvature.iter().map(|c| -c).collect();
    let dip = argmax_first(&neg).ok_or_else(|| Error::Numerical("empty curvature".into()))?;
    // curvature index i belongs to alpha index i + 1
    let interior = &curves.levels[level][1..curves.alphas.len() - 1];
    let abs: Vec<f64> = interior.iter().map(|e| -e.abs()).collect();
    let zero = argmax_first(&abs).ok_or_else(|| Error::Numerical("empty level".into()))?;
    Ok(CurvatureDip {
        level,
        dip_index: dip + 1,
        dip_alpha: curves.alphas[dip + 1],
        zero_index: zero + 1,
        zero_alpha: curves.alphas[zero + 1],
    })
}

/// Level curves on `alpha = 0, step, ..., 1`.
pub fn spectrum_scan(n: usize, step: f64) -> Result<LevelCurves> {
    let grid = ScanGrid::uniform(Axis::Alpha, 0.0, 1.0, step)?;
    level_curves(n, &grid.values)
}
