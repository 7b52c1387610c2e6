//! Qubit-level quantities built from the decoherence factor: reduced density
//! matrix, Bures angle, Liouvillian Schatten norms, speed-limit time, trace
//! distance and the non-Markovianity measure.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::quench::{series_with_steps, DecoherenceSeries, QuenchDecomposition};
use crate::spin_core::Frame;

/// Bloch angles of the initial qubit state
/// `cos(theta/2)|0> + exp(-i phi) sin(theta/2)|1>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QubitAngles {
    pub theta: f64,
    pub phi: f64,
}

impl Default for QubitAngles {
    fn default() -> Self {
        QubitAngles {
            theta: FRAC_PI_2,
            phi: 0.0,
        }
    }
}

impl QubitAngles {
    pub fn new(theta: f64, phi: f64) -> Result<Self> {
        if !(0.0..=PI).contains(&theta) {
            return Err(Error::invalid("theta", format!("must lie in [0, pi], got {theta}")));
        }
        if !(0.0..2.0 * PI).contains(&phi) {
            return Err(Error::invalid("phi", format!("must lie in [0, 2 pi), got {phi}")));
        }
        Ok(QubitAngles { theta, phi })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedDensity(pub [[Complex64; 2]; 2]);

impl ReducedDensity {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn trace(&self) -> Complex64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        (0..2).all(|i| (0..2).all(|j| (self.0[i][j] - self.0[j][i].conj()).norm() <= tol))
    }

    /// `tr(self * other)`.
    pub fn overlap(&self, other: &ReducedDensity) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..2 {
            for k in 0..2 {
                acc += self.0[i][k] * other.0[k][i];
            }
        }
        acc
    }

    pub fn sub(&self, other: &ReducedDensity) -> [[Complex64; 2]; 2] {
        let mut out = self.0;
        for (i, row) in out.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v -= other.0[i][j];
            }
        }
        out
    }
}

fn check_modulus(m: Complex64) -> Result<()> {
    if !(m.norm() <= 1.0 + 1e-12) {
        return Err(Error::invalid("M", format!("decoherence factor modulus {} exceeds 1", m.norm())));
    }
    Ok(())
}

pub fn reduced_density(angles: &QubitAngles, m: Complex64) -> Result<ReducedDensity> {
    check_modulus(m)?;
    let half = angles.theta / 2.0;
    let coherence = Complex64::from_polar(0.5 * angles.theta.sin(), angles.phi);
    Ok(ReducedDensity([
        [Complex64::new(half.cos().powi(2), 0.0), coherence * m.conj()],
        [coherence.conj() * m, Complex64::new(half.sin().powi(2), 0.0)],
    ]))
}

/// `L = asin sqrt(sin^2(theta) (1 - Re M) / 2)`.
pub fn bures_angle(angles: &QubitAngles, m: Complex64) -> f64 {
    let arg = 0.5 * angles.theta.sin().powi(2) * (1.0 - m.re);
    if !(-1e-9..=1.0 + 1e-9).contains(&arg) {
        log::warn!("Bures angle argument {arg} clamped to [0, 1]");
    }
    arg.clamp(0.0, 1.0).sqrt().asin()
}

/// Trace, Hilbert-Schmidt and operator norms of the dephasing generator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchattenNorms {
    pub trace: f64,
    pub hilbert_schmidt: f64,
    pub operator: f64,
}

pub fn liouvillian_norms(theta: f64, rate: f64) -> Result<SchattenNorms> {
    if !(rate >= 0.0) {
        return Err(Error::invalid("rate", format!("|dM/dt| must be non-negative, got {rate}")));
    }
    let l = 0.5 * theta.sin().abs() * rate;
    Ok(SchattenNorms {
        trace: 2.0 * l,
        hilbert_schmidt: std::f64::consts::SQRT_2 * l,
        operator: l,
    })
}

/// Composite trapezoid rule on a uniform grid.
pub fn trapezoid(values: &[f64], dt: f64) -> f64 {
    match values {
        [] | [_] => 0.0,
        [first, inner @ .., last] => dt * (0.5 * (first + last) + inner.iter().sum::<f64>()),
    }
}

/// Running trapezoid integrals `I[i] = int_0^{t_i}`.
pub fn cumulative_trapezoid(values: &[f64], dt: f64) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(values.len());
    out.push(0.0);
    for w in values.windows(2) {
        acc += 0.5 * dt * (w[0] + w[1]);
        out.push(acc);
    }
    out.truncate(values.len());
    out
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedLimit {
    pub tau_e: f64,
    pub tau_qsl: f64,
    /// Time average of the operator-norm of the generator.
    pub gamma_inf: f64,
}

/// Rate integrals below this are rounding noise of an uncoupled evolution.
const RATE_INTEGRAL_FLOOR: f64 = 1e-13;

fn speed_limit(theta: f64, m_end: Complex64, rate_integral: f64, tau_e: f64) -> SpeedLimit {
    let sin = theta.sin().abs();
    let mean_rate = rate_integral / tau_e;
    let tau_qsl = if rate_integral > RATE_INTEGRAL_FLOOR {
        sin * (1.0 - m_end.re) / mean_rate
    } else {
        0.0
    };
    SpeedLimit {
        tau_e,
        tau_qsl,
        gamma_inf: 0.5 * sin * mean_rate,
    }
}

/// `tau_QSL = sin(theta) (1 - Re M(tau_e)) / <|dM/dt|>` over the whole series.
pub fn qsl_time(series: &DecoherenceSeries, theta: f64) -> SpeedLimit {
    qsl_time_at(series, series.len() - 1, theta)
}

/// Speed limit for the evolution time `t_end = end * dt`.
pub fn qsl_time_at(series: &DecoherenceSeries, end: usize, theta: f64) -> SpeedLimit {
    if end == 0 {
        return SpeedLimit {
            tau_e: 0.0,
            tau_qsl: 0.0,
            gamma_inf: 0.0,
        };
    }
    let rates: Vec<f64> = series.dm[..=end].iter().map(|z| z.norm()).collect();
    speed_limit(theta, series.m[end], trapezoid(&rates, series.dt), series.time(end))
}

/// Below this `|M|` the derivative of the modulus falls back to a difference.
const MODULUS_FLOOR: f64 = 1e-12;

/// `d|M|/dt` on the series grid.
pub fn modulus_derivative(series: &DecoherenceSeries) -> Vec<f64> {
    let n = series.len();
    (0..n)
        .map(|i| {
            let m = series.m[i];
            let a = m.norm();
            if a > MODULUS_FLOOR {
                (m.conj() * series.dm[i]).re / a
            } else if n == 1 {
                0.0
            } else if i + 1 < n {
                (series.m[i + 1].norm() - a) / series.dt
            } else {
                (a - series.m[i - 1].norm()) / series.dt
            }
        })
        .collect()
}

/// Variation of `f` across one step of width `h`. When the endpoint slopes
/// disagree in sign the turning value is the less extreme of the Hermite cubic
/// extremum and the tangent intersection: the first is exact for smooth
/// extrema, the second for kinks.
fn step_variation(f0: f64, f1: f64, d0: f64, d1: f64, h: f64) -> f64 {
    if d0 * d1 >= 0.0 {
        return (f1 - f0).abs();
    }
    let slope = (f1 - f0) / h;
    let c2 = (3.0 * slope - 2.0 * d0 - d1) / h;
    let c3 = (d0 + d1 - 2.0 * slope) / (h * h);
    let deriv = |s: f64| d0 + 2.0 * c2 * s + 3.0 * c3 * s * s;
    let (mut lo, mut hi) = (0.0, h);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if deriv(mid) * d0 > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = 0.5 * (lo + hi);
    let smooth = f0 + s * (d0 + s * (c2 + s * c3));
    // tangent lines meet at the turning point of a kink
    let s_kink = ((f1 - f0 - d1 * h) / (d0 - d1)).clamp(0.0, h);
    let kink = f0 + d0 * s_kink;
    let turn = if d0 < 0.0 { smooth.max(kink) } else { smooth.min(kink) }.max(0.0);
    (turn - f0).abs() + (f1 - turn).abs()
}

/// Running values of `int_0^{t_i} |d|M|/dt| dt`.
pub fn cumulative_backflow_integral(series: &DecoherenceSeries) -> Vec<f64> {
    let f: Vec<f64> = series.m.iter().map(|z| z.norm()).collect();
    let d = modulus_derivative(series);
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(f.len());
    out.push(0.0);
    for i in 1..f.len() {
        acc += step_variation(f[i - 1], f[i], d[i - 1], d[i], series.dt);
        out.push(acc);
    }
    out
}

fn backflow(integral: f64, m_end: Complex64) -> f64 {
    let nm = 0.5 * (integral + m_end.norm() - 1.0);
    if (-1e-9..0.0).contains(&nm) {
        0.0
    } else {
        nm
    }
}

/// `N = (int_0^{tau_e} |d|M|/dt| dt + |M(tau_e)| - 1) / 2`.
pub fn non_markovianity(series: &DecoherenceSeries) -> f64 {
    let integral = *cumulative_backflow_integral(series).last().unwrap_or(&0.0);
    backflow(integral, series.m[series.len() - 1])
}

/// Half the trace norm of `a - b` for 2x2 Hermitian matrices.
pub fn trace_distance(a: &ReducedDensity, b: &ReducedDensity) -> Result<f64> {
    for (name, rho) in [("rho1", a), ("rho2", b)] {
        if !rho.is_hermitian(1e-12) {
            return Err(Error::invalid(name, "density matrix is not Hermitian"));
        }
    }
    let d = a.sub(b);
    let mean = 0.5 * (d[0][0].re + d[1][1].re);
    let radius = (0.25 * (d[0][0].re - d[1][1].re).powi(2) + d[0][1].norm_sqr()).sqrt();
    Ok(0.5 * ((mean + radius).abs() + (mean - radius).abs()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleParams {
    pub n: usize,
    pub alpha: f64,
    pub lambda: f64,
    pub theta: f64,
    pub frame: Frame,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSample {
    pub tau_e: f64,
    pub tau_qsl: f64,
    pub gamma_inf: f64,
    pub nm: f64,
    /// Time step of the accepted grid.
    pub dt: f64,
    pub params: SampleParams,
}

impl MetricSample {
    fn new(limit: SpeedLimit, nm: f64, dt: f64, params: SampleParams) -> Result<Self> {
        if limit.tau_qsl > limit.tau_e + 1e-9 {
            return Err(Error::Numerical(format!(
                "tau_QSL = {} exceeds tau_e = {}",
                limit.tau_qsl, limit.tau_e
            )));
        }
        if nm < 0.0 {
            return Err(Error::Numerical(format!("negative non-Markovianity {nm}")));
        }
        Ok(MetricSample {
            tau_e: limit.tau_e,
            tau_qsl: limit.tau_qsl,
            gamma_inf: limit.gamma_inf,
            nm,
            dt,
            params,
        })
    }

    /// Sample of an uncoupled qubit: no motion, no backflow.
    pub fn uncoupled(tau_e: f64, params: SampleParams) -> Self {
        MetricSample {
            tau_e,
            tau_qsl: 0.0,
            gamma_inf: 0.0,
            nm: 0.0,
            dt: 0.0,
            params,
        }
    }
}

/// Relative change in `tau_QSL` tolerated when the step is halved.
pub const QUADRATURE_TOLERANCE: f64 = 1e-6;
const MAX_REFINEMENTS: usize = 8;

fn gate_passes(coarse: f64, fine: f64) -> bool {
    (fine - coarse).abs() <= QUADRATURE_TOLERANCE * fine.abs()
}

/// Speed limit and non-Markovianity at one evolution time, refining the grid
/// until halving the step moves `tau_QSL` by less than [`QUADRATURE_TOLERANCE`].
pub fn evaluate_metrics(
    dec: &QuenchDecomposition,
    tau_e: f64,
    angles: &QubitAngles,
    dt: Option<f64>,
) -> Result<MetricSample> {
    Ok(evaluate_metrics_along(dec, &[tau_e], angles, dt)?.remove(0))
}

/// Metrics at several evolution times from one series. All times must be
/// integer multiples of a common tick, the smallest positive spacing among
/// them, so that they fall on the grid.
pub fn evaluate_metrics_along(
    dec: &QuenchDecomposition,
    taus: &[f64],
    angles: &QubitAngles,
    dt: Option<f64>,
) -> Result<Vec<MetricSample>> {
    if taus.is_empty() {
        return Err(Error::invalid("tau_e", "no evolution times requested"));
    }
    if taus.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
        return Err(Error::invalid("tau_e", "evolution times must be positive"));
    }
    let tau_max = taus.iter().copied().fold(0.0, f64::max);
    let tau_min = taus.iter().copied().fold(f64::INFINITY, f64::min);
    let tick = common_tick(taus).ok_or_else(|| {
        Error::invalid("tau_e", "evolution times must be integer multiples of a common spacing")
    })?;
    let base_dt = match dt {
        None => dec.default_dt(tau_min),
        Some(dt) => {
            crate::quench::check_dt(dec, dt)?;
            dt
        }
    };
    let params = SampleParams {
        n: dec.n,
        alpha: dec.alpha,
        lambda: dec.lambda,
        theta: angles.theta,
        frame: dec.frame,
    };
    let mut per_tick = ((tick / base_dt) - 1e-9).ceil().max(1.0) as usize;
    let ticks_total = (tau_max / tick).round() as usize;
    let positions: Vec<usize> = taus.iter().map(|t| (t / tick).round() as usize).collect();

    for _ in 0..=MAX_REFINEMENTS {
        let fine = series_with_steps(dec, tau_max, 2 * per_tick * ticks_total);
        let coarse = fine.decimate(2);
        let coarse_rates: Vec<f64> = coarse.rates();
        let fine_rates: Vec<f64> = fine.rates();
        let coarse_int = cumulative_trapezoid(&coarse_rates, coarse.dt);
        let fine_int = cumulative_trapezoid(&fine_rates, fine.dt);
        let converged = positions.iter().all(|&p| {
            let i = p * per_tick;
            let c = speed_limit(angles.theta, coarse.m[i], coarse_int[i], coarse.time(i));
            let f = speed_limit(angles.theta, fine.m[2 * i], fine_int[2 * i], fine.time(2 * i));
            gate_passes(c.tau_qsl, f.tau_qsl)
        });
        if converged {
            let variation = cumulative_backflow_integral(&fine);
            return positions
                .iter()
                .map(|&p| {
                    let i = 2 * p * per_tick;
                    let limit = speed_limit(angles.theta, fine.m[i], fine_int[i], fine.time(i));
                    MetricSample::new(limit, backflow(variation[i], fine.m[i]), fine.dt, params)
                })
                .collect();
        }
        per_tick *= 2;
    }
    Err(Error::Numerical(format!(
        "tau_QSL quadrature did not converge for N={} alpha={} lambda={}",
        dec.n, dec.alpha, dec.lambda
    )))
}

/// Largest spacing `h` (the smallest positive gap among the times, or the
/// smallest time itself) such that every time is an integer multiple of `h`.
fn common_tick(taus: &[f64]) -> Option<f64> {
    let mut sorted = taus.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut tick = sorted[0];
    for w in sorted.windows(2) {
        let gap = w[1] - w[0];
        if gap > 1e-12 * w[1] {
            tick = tick.min(gap);
        }
    }
    let on_grid = sorted.iter().all(|t| {
        let k = t / tick;
        (k - k.round()).abs() <= 1e-9 * k.max(1.0)
    });
    on_grid.then_some(tick)
}
