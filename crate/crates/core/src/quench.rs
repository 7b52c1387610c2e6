//! Sudden quench of the bath: decomposition of the branch-0 ground state in
//! the coupled-branch eigenbasis, the decoherence factor `M(t)` with its exact
//! derivative, the strength function and energy moments.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spin_core::{Branch, CollectiveHamiltonian, Frame, Parity};

/// Lowest even-parity eigenpair of the unperturbed branch Hamiltonian
/// `-(4(1-alpha)/N) S_x^2 + alpha S_z`.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundState {
    pub n: usize,
    pub alpha: f64,
    pub energy: f64,
    /// Unit vector in the even block, ascending `m`.
    pub vector: Vec<f64>,
}

pub fn ground_state(n: usize, alpha: f64) -> Result<GroundState> {
    let h0 = CollectiveHamiltonian::effective(n, alpha, 0.0, Branch::Unperturbed, Frame::Interaction)?;
    let (energy, vector) = h0
        .block_tridiagonal(Parity::Even)
        .lowest_eigenpair()
        .map_err(|e| e.at(format!("ground state N={n} alpha={alpha}")))?;
    Ok(GroundState {
        n,
        alpha,
        energy,
        vector,
    })
}

impl GroundState {
    /// `<G| S_z^p |G>`.
    pub fn sz_moment(&self, power: i32) -> f64 {
        let ms = crate::spin_core::block_m_values(self.n, Parity::Even);
        ms.iter()
            .zip(&self.vector)
            .map(|(m, g)| m.powi(power) * g * g)
            .sum()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuenchDecomposition {
    pub n: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub frame: Frame,
    /// `|<k|G>|^2`, aligned with `energies`.
    pub weights: Vec<f64>,
    /// Frame-resolved eigenenergies of the coupled branch, ascending.
    pub energies: Vec<f64>,
    /// Branch-0 ground energy `E_G`.
    pub ground_energy: f64,
}

pub fn decompose_quench(n: usize, alpha: f64, lambda: f64, frame: Frame) -> Result<QuenchDecomposition> {
    let ground = ground_state(n, alpha)?;
    decompose_from_ground(&ground, lambda, frame)
}

/// Decomposition reusing a precomputed ground state, so scans over `lambda`
/// share one branch-0 solve.
pub fn decompose_from_ground(ground: &GroundState, lambda: f64, frame: Frame) -> Result<QuenchDecomposition> {
    let h1 = CollectiveHamiltonian::effective(ground.n, ground.alpha, lambda, Branch::Coupled, frame)?;
    let (mut energies, components) = h1
        .block_tridiagonal(Parity::Even)
        .eigen_projected(&ground.vector)
        .map_err(|e| e.at(format!("lambda={lambda}")))?;
    if frame == Frame::Interaction {
        energies.iter_mut().for_each(|e| *e -= ground.energy);
    }
    Ok(QuenchDecomposition {
        n: ground.n,
        alpha: ground.alpha,
        lambda,
        frame,
        weights: components.into_iter().map(|c| c * c).collect(),
        energies,
        ground_energy: ground.energy,
    })
}

impl QuenchDecomposition {
    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn max_abs_energy(&self) -> f64 {
        self.energies.iter().fold(0.0, |a, e| a.max(e.abs()))
    }

    /// `Delta t = min(tau_e / 2000, 0.1 / max|E_k|)`.
    pub fn default_dt(&self, tau_e: f64) -> f64 {
        let fastest = self.max_abs_energy();
        let by_phase = if fastest > 0.0 { 0.1 / fastest } else { f64::INFINITY };
        (tau_e / 2000.0).min(by_phase)
    }

    /// `M(t)` and `dM/dt` at a single time, summed directly.
    pub fn evaluate(&self, t: f64) -> (Complex64, Complex64) {
        let mut m = Complex64::new(0.0, 0.0);
        let mut dm = Complex64::new(0.0, 0.0);
        for (&w, &e) in self.weights.iter().zip(&self.energies) {
            let z = Complex64::from_polar(1.0, -e * t);
            m += z * w;
            dm += z * Complex64::new(0.0, -w * e);
        }
        (m, dm)
    }
}

/// Weighted mean and variance of the quenched energies.
pub fn energy_moments(dec: &QuenchDecomposition) -> (f64, f64) {
    let mean: f64 = dec.weights.iter().zip(&dec.energies).map(|(w, e)| w * e).sum();
    let second: f64 = dec
        .weights
        .iter()
        .zip(&dec.energies)
        .map(|(w, e)| w * (e - mean) * (e - mean))
        .sum();
    (mean, second.max(0.0))
}

/// `M(t)` and `dM/dt` on the uniform grid `t_i = i dt`, `i = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct DecoherenceSeries {
    pub dt: f64,
    pub m: Vec<Complex64>,
    pub dm: Vec<Complex64>,
}

impl DecoherenceSeries {
    /// Builds a series from raw samples, e.g. for synthetic inputs.
    pub fn from_samples(dt: f64, m: Vec<Complex64>, dm: Vec<Complex64>) -> Result<Self> {
        if !(dt > 0.0) || m.is_empty() || m.len() != dm.len() {
            return Err(Error::invalid(
                "series",
                "need dt > 0 and equally long nonempty M and dM samples",
            ));
        }
        Ok(DecoherenceSeries { dt, m, dm })
    }

    pub fn len(&self) -> usize {
        self.m.len()
    }

    pub fn is_empty(&self) -> bool {
        self.m.is_empty()
    }

    pub fn time(&self, i: usize) -> f64 {
        i as f64 * self.dt
    }

    pub fn tau_e(&self) -> f64 {
        self.time(self.len() - 1)
    }

    /// `|dM/dt|` at sample `i`.
    pub fn rate(&self, i: usize) -> f64 {
        self.dm[i].norm()
    }

    pub fn rates(&self) -> Vec<f64> {
        self.dm.iter().map(|z| z.norm()).collect()
    }

    /// Every `stride`-th sample.
    pub fn decimate(&self, stride: usize) -> DecoherenceSeries {
        DecoherenceSeries {
            dt: self.dt * stride as f64,
            m: self.m.iter().step_by(stride).copied().collect(),
            dm: self.dm.iter().step_by(stride).copied().collect(),
        }
    }
}

/// Phasors are re-seeded from `exp` this often to bound recurrence drift.
const RESEED_INTERVAL: usize = 128;

/// Terms lighter than this contribute below double precision to both sums.
const NEGLIGIBLE_WEIGHT: f64 = 1e-32;

/// Rejects explicit steps that break `max|E_k| dt <= 0.1`.
pub fn check_dt(dec: &QuenchDecomposition, dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", "time step must be positive"));
    }
    let phase = dec.max_abs_energy() * dt;
    if phase > 0.1 * (1.0 + 1e-12) {
        return Err(Error::invalid(
            "dt",
            format!("max|E| dt = {phase:.4} exceeds 0.1; use dt <= {:.3e}", 0.1 / dec.max_abs_energy()),
        ));
    }
    Ok(())
}

/// Evaluates `M(t) = sum_k w_k exp(-i E_k t)` and its exact derivative on a
/// uniform grid ending at `tau_e`.
///
/// Without `dt` the default resolution is used. An explicit `dt` must keep
/// `max|E_k| dt <= 0.1`. The step is then shrunk so the grid lands on `tau_e`.
pub fn decoherence_series(dec: &QuenchDecomposition, tau_e: f64, dt: Option<f64>) -> Result<DecoherenceSeries> {
    if !(tau_e > 0.0 && tau_e.is_finite()) {
        return Err(Error::invalid("tau_e", format!("evolution time must be positive, got {tau_e}")));
    }
    let dt = match dt {
        None => dec.default_dt(tau_e),
        Some(dt) => {
            check_dt(dec, dt)?;
            dt
        }
    };
    let steps = ((tau_e / dt) - 1e-9).ceil().max(1.0) as usize;
    Ok(series_with_steps(dec, tau_e, steps))
}

pub(crate) fn series_with_steps(dec: &QuenchDecomposition, tau_e: f64, steps: usize) -> DecoherenceSeries {
    let dt = tau_e / steps as f64;
    let terms: Vec<(f64, f64)> = dec
        .weights
        .iter()
        .zip(&dec.energies)
        .filter(|(w, _)| **w > NEGLIGIBLE_WEIGHT)
        .map(|(&w, &e)| (w, e))
        .collect();
    let weight: Vec<f64> = terms.iter().map(|t| t.0).collect();
    let weighted_energy: Vec<f64> = terms.iter().map(|t| t.0 * t.1).collect();
    let (step_re, step_im): (Vec<f64>, Vec<f64>) = terms
        .iter()
        .map(|&(_, e)| {
            let (s, c) = (-e * dt).sin_cos();
            (c, s)
        })
        .unzip();
    let mut z_re = vec![0.0; terms.len()];
    let mut z_im = vec![0.0; terms.len()];

    let mut m = Vec::with_capacity(steps + 1);
    let mut dm = Vec::with_capacity(steps + 1);
    for i in 0..=steps {
        if i % RESEED_INTERVAL == 0 {
            let t = i as f64 * dt;
            for (k, &(_, e)) in terms.iter().enumerate() {
                let (s, c) = (-e * t).sin_cos();
                z_re[k] = c;
                z_im[k] = s;
            }
        } else {
            for k in 0..terms.len() {
                let (a, b) = (z_re[k], z_im[k]);
                z_re[k] = a * step_re[k] - b * step_im[k];
                z_im[k] = a * step_im[k] + b * step_re[k];
            }
        }
        let (mut mr, mut mi, mut dr, mut di) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..terms.len() {
            mr += weight[k] * z_re[k];
            mi += weight[k] * z_im[k];
            // -i (a + i b) = b - i a
            dr += weighted_energy[k] * z_im[k];
            di -= weighted_energy[k] * z_re[k];
        }
        m.push(Complex64::new(mr, mi));
        dm.push(Complex64::new(dr, di));
    }
    // <G|G> = 1
    m[0] = Complex64::new(1.0, 0.0);
    DecoherenceSeries { dt, m, dm }
}

/// Binned strength function `omega(E)` and its energy-weighted partner
/// `A(E)`. Bin edges sit on multiples of the width, so `E = 0` is an edge.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthFunction {
    pub edges: Vec<f64>,
    pub omega: Vec<f64>,
    pub a: Vec<f64>,
}

impl StrengthFunction {
    pub fn width(&self) -> f64 {
        self.edges[1] - self.edges[0]
    }

    pub fn centers(&self) -> Vec<f64> {
        self.edges.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect()
    }

    pub fn bin_of(&self, e: f64) -> Option<usize> {
        let w = self.width();
        let k = ((e - self.edges[0]) / w).floor();
        if k < 0.0 || k as usize >= self.omega.len() {
            None
        } else {
            Some(k as usize)
        }
    }
}

pub fn strength_and_a(dec: &QuenchDecomposition, n_bins: usize) -> Result<StrengthFunction> {
    if n_bins < 10 {
        return Err(Error::invalid("bins", format!("need at least 10 bins, got {n_bins}")));
    }
    let lo = dec.energies.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = dec.energies.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let width = if hi > lo { (hi - lo) / n_bins as f64 } else { 1.0 };
    let first = (lo / width).floor() as i64;
    let last = (hi / width).floor() as i64 + 1;
    let bins = (last - first) as usize;
    let mut omega = vec![0.0; bins];
    let mut a = vec![0.0; bins];
    for (&w, &e) in dec.weights.iter().zip(&dec.energies) {
        let k = (((e / width).floor() as i64 - first) as usize).min(bins - 1);
        omega[k] += w;
        a[k] += w * e;
    }
    Ok(StrengthFunction {
        edges: (first..=last).map(|j| j as f64 * width).collect(),
        omega,
        a,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ground_state_small_cases() {
        // H^0 even block for N=2, alpha=0.4 is [[-1.0, -0.6], [-0.6, -0.2]]
        let g = ground_state(2, 0.4).unwrap();
        let want = -0.6 - (0.16f64 + 0.36).sqrt();
        assert!((g.energy - want).abs() < 1e-12);
        assert!((g.energy + 1.321110).abs() < 1e-6);

        let g = ground_state(2, 1.0).unwrap();
        assert!((g.energy + 1.0).abs() < 1e-12);
        assert!((g.vector[0].abs() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ground_state_below_field_only_energy() {
        for &n in &[10usize, 40, 200] {
            for &alpha in &[0.1, 0.4, 0.7] {
                let g = ground_state(n, alpha).unwrap();
                assert!(g.energy < -alpha * n as f64 / 2.0, "N={n} alpha={alpha}");
            }
        }
    }

    #[test]
    fn trivial_quench_interaction_frame() {
        let d = decompose_quench(20, 0.4, 0.0, Frame::Interaction).unwrap();
        let heavy: Vec<_> = d.weights.iter().zip(&d.energies).filter(|(w, _)| **w > 1e-12).collect();
        assert_eq!(heavy.len(), 1);
        assert!((heavy[0].0 - 1.0).abs() < 1e-12);
        assert!(heavy[0].1.abs() < 1e-9);
        let (mean, var) = energy_moments(&d);
        assert!(mean.abs() < 1e-9 && var < 1e-9);
    }

    #[test]
    fn n2_weights_by_hand() {
        // branch 0 even block [[-1.0,-0.6],[-0.6,-0.2]], branch 1 [[-2.0,-0.6],[-0.6,0.8]]
        let ground = |a: f64, b: f64, c: f64| {
            let e = 0.5 * (a + c) - (0.25 * (a - c) * (a - c) + b * b).sqrt();
            let v = [b, e - a];
            let norm = (v[0] * v[0] + v[1] * v[1]).sqrt();
            (e, [v[0] / norm, v[1] / norm])
        };
        let (_, g) = ground(-1.0, -0.6, -0.2);
        let (e1, v1) = ground(-2.0, -0.6, 0.8);
        let w_low = (g[0] * v1[0] + g[1] * v1[1]).powi(2);
        let d = decompose_quench(2, 0.4, 1.0, Frame::Interaction).unwrap();
        assert!((d.weights[0] - w_low).abs() < 1e-12);
        assert!((d.weights[1] - (1.0 - w_low)).abs() < 1e-12);
        assert!((d.energies[0] - (e1 - d.ground_energy)).abs() < 1e-12);
        assert!((d.total_weight() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn moments_match_operator_identities() {
        for &(n, alpha, lambda) in &[(40usize, 0.4, 1.0), (100, 0.3, 0.5), (60, 0.6, 1.7)] {
            let g = ground_state(n, alpha).unwrap();
            let sz = g.sz_moment(1);
            let var_sz = g.sz_moment(2) - sz * sz;
            let di = decompose_from_ground(&g, lambda, Frame::Interaction).unwrap();
            let dc = decompose_from_ground(&g, lambda, Frame::Critical).unwrap();
            let (mi, vi) = energy_moments(&di);
            let (_, vc) = energy_moments(&dc);
            assert!((di.total_weight() - 1.0).abs() < 1e-12);
            assert!((mi - lambda * sz).abs() < 1e-9 * (1.0 + mi.abs()));
            assert!((vi - lambda * lambda * var_sz).abs() < 1e-9 * (1.0 + vi));
            assert!((vi - vc).abs() < 1e-9 * (1.0 + vi));
        }
    }

    #[test]
    fn series_initial_values() {
        let d = decompose_quench(40, 0.4, 0.8, Frame::Critical).unwrap();
        let s = decoherence_series(&d, 1.0, None).unwrap();
        assert_eq!(s.m[0], Complex64::new(1.0, 0.0));
        let (mean, _) = energy_moments(&d);
        assert!((s.rate(0) - mean.abs()).abs() < 1e-9 * (1.0 + mean.abs()));
        assert!((s.tau_e() - 1.0).abs() < 1e-12);
        assert!(s.m.iter().all(|z| z.norm() <= 1.0 + 1e-12));
    }

    #[test]
    fn series_matches_pointwise_sum() {
        let d = decompose_quench(60, 0.3, 1.2, Frame::Critical).unwrap();
        let s = decoherence_series(&d, 2.0, None).unwrap();
        for i in (0..s.len()).step_by(97) {
            let (m, dm) = d.evaluate(s.time(i));
            assert!((m - s.m[i]).norm() < 1e-11);
            assert!((dm - s.dm[i]).norm() < 1e-11 * (1.0 + dm.norm()));
        }
    }

    #[test]
    fn uncoupled_series_has_unit_modulus() {
        for frame in [Frame::Interaction, Frame::Critical] {
            let d = decompose_quench(30, 0.5, 0.0, frame).unwrap();
            let s = decoherence_series(&d, 3.0, None).unwrap();
            assert!(s.m.iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        }
    }

    #[test]
    fn coarse_dt_rejected() {
        let d = decompose_quench(40, 0.4, 1.0, Frame::Critical).unwrap();
        let too_big = 0.2 / d.max_abs_energy();
        assert!(decoherence_series(&d, 1.0, Some(too_big)).is_err());
        assert!(decoherence_series(&d, 1.0, Some(0.05 / d.max_abs_energy())).is_ok());
        assert!(decoherence_series(&d, -1.0, None).is_err());
    }

    #[test]
    fn strength_bins_sum_and_zero_edge() {
        let d = decompose_quench(200, 0.4, 1.0, Frame::Critical).unwrap();
        let sf = strength_and_a(&d, 40).unwrap();
        assert!((sf.omega.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(sf.edges.contains(&0.0));
        for (k, &a) in sf.a.iter().enumerate() {
            let (lo, hi) = (sf.edges[k], sf.edges[k + 1]);
            if lo >= 0.0 {
                assert!(a >= 0.0);
            } else if hi <= 0.0 {
                assert!(a <= 0.0);
            }
        }
        assert!(strength_and_a(&d, 5).is_err());
    }
}
