//! Information flux, the BLP non-Markovianity measure and revival detection.
//!
//! The measure is the total increase of the trace distance up to a
//! truncation time. On a sampled curve this is the sum of the positive
//! increments `max(D_{i+1} - D_i, 0)`, which is exactly the integral of the
//! positive part of the flux of the piecewise-linear interpolant.

use alloc::{format, vec::Vec};
use core::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::dephasing::{couplings, curve_from_couplings, CurveMeta, DephasingCurve, ThermalSpec};
use crate::lattice::{ChainParams, ModeTable};
use crate::oracle::{FockConfig, Oracle};
use crate::{Error, Result, MIN_ABS_DELTA};

/// Values above this certify non-Markovian evolution.
pub const NM_TOLERANCE: f64 = 1e-6;

/// Default truncation time of the measure.
pub const DEFAULT_T_TRUNC: f64 = 120.0;

/// Upper bound on the floating-point work of one [`pair_scan`].
pub const MAX_SCAN_WORK: f64 = 2e11;

/// Antipodal pair of pure spin states. The first member is
/// `cos(theta/2)|e> + e^{i phi} sin(theta/2)|g>`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BlochPair {
    pub theta: f64,
    pub phi: f64,
}

impl BlochPair {
    /// Eigenstates of sigma_x.
    pub const SIGMA_X: Self = Self { theta: PI / 2.0, phi: 0.0 };

    pub fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    pub fn member(&self) -> [Complex64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [Complex64::new(c, 0.0), Complex64::from_polar(s, self.phi)]
    }

    pub fn partner(&self) -> [Complex64; 2] {
        let (s, c) = (0.5 * self.theta).sin_cos();
        [Complex64::new(s, 0.0), -Complex64::from_polar(c, self.phi)]
    }

    /// `|psi><psi| - |psi_perp><psi_perp|`.
    pub fn difference(&self) -> Matrix2<Complex64> {
        let (a, b) = (self.member(), self.partner());
        Matrix2::from_fn(|i, j| a[i] * a[j].conj() - b[i] * b[j].conj())
    }

    pub fn is_equatorial(&self, tol: f64) -> bool {
        (self.theta - PI / 2.0).abs() <= tol
    }

    /// `n_theta x n_phi` grid with `theta_i = i pi / n_theta` and
    /// `phi_j = 2 pi j / n_phi`.
    pub fn grid(n_theta: usize, n_phi: usize) -> Vec<Self> {
        let mut out = Vec::with_capacity(n_theta * n_phi);
        for i in 0..n_theta {
            for j in 0..n_phi {
                out.push(Self::new(
                    PI * i as f64 / n_theta as f64,
                    2.0 * PI * j as f64 / n_phi as f64,
                ));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NMResult {
    pub value: f64,
    pub truncation_time: f64,
    pub pair: BlochPair,
    pub meta: Option<CurveMeta>,
}

impl NMResult {
    pub fn is_non_markovian(&self) -> bool {
        self.value > NM_TOLERANCE
    }
}

/// `dD/dt` by central differences, one-sided at the ends.
pub fn information_flux(curve: &DephasingCurve) -> Result<Vec<f64>> {
    let d = curve.values();
    let n = d.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 samples, got {n}")));
    }
    let h = curve.dt();
    let mut out = Vec::with_capacity(n);
    out.push((d[1] - d[0]) / h);
    out.extend(d.windows(3).map(|w| (w[2] - w[0]) / (2.0 * h)));
    out.push((d[n - 1] - d[n - 2]) / h);
    Ok(out)
}

/// Sum of positive increments of `values`.
pub fn positive_variation(values: &[f64]) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).max(0.0)).sum()
}

/// BLP measure of `curve` up to `t_trunc`, for the `|+>, |->` pair.
pub fn blp_measure(curve: &DephasingCurve, t_trunc: f64) -> Result<NMResult> {
    let t_max = curve.t_max();
    if !(t_trunc > 0.0 && t_trunc <= t_max * (1.0 + 1e-12)) {
        return Err(Error::InvalidParameter(format!(
            "truncation time must lie in (0, {t_max}], got {t_trunc}"
        )));
    }
    let last = ((t_trunc / curve.dt() + 1e-9).floor() as usize).min(curve.len() - 1);
    Ok(NMResult {
        value: positive_variation(&curve.values()[..=last]),
        truncation_time: t_trunc,
        pair: BlochPair::SIGMA_X,
        meta: curve.meta().copied(),
    })
}

/// Detector of the first genuine revival after the initial damping.
///
/// It follows the backflow collected in a trailing window,
/// `W(t) = positive variation of D over (t - window, t]`. Tracking starts at
/// `t = window` if the curve has been (nearly) monotone so far, otherwise at
/// the first local maximum of `W`, once the early oscillations start to die
/// out. A revival is declared when `W` rises above
/// `(1 + relative) * min W + threshold`, and its onset is the last time `W`
/// sat at that minimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RevivalCriterion {
    pub threshold: f64,
    pub window: f64,
    pub relative: f64,
}

impl Default for RevivalCriterion {
    fn default() -> Self {
        Self {
            threshold: 1e-3,
            window: 25.0,
            relative: 0.3,
        }
    }
}

/// Onset time of the first revival, or `None` if there is none before the
/// end of the curve.
pub fn revival_time(curve: &DephasingCurve, criterion: &RevivalCriterion) -> Result<Option<f64>> {
    let RevivalCriterion {
        threshold,
        window,
        relative,
    } = *criterion;
    if !(threshold > 0.0 && window > 0.0 && relative >= 0.0) {
        return Err(Error::InvalidParameter(format!("bad revival criterion {criterion:?}")));
    }
    let d = curve.values();
    let w = ((window / curve.dt()).round() as usize).max(1);
    if d.len() <= w + 1 {
        return Ok(None);
    }
    let mut prefix = Vec::with_capacity(d.len());
    prefix.push(0.0);
    for pair in d.windows(2) {
        let last = *prefix.last().unwrap_or(&0.0);
        prefix.push(last + (pair[1] - pair[0]).max(0.0));
    }
    let backflow = |i: usize| prefix[i] - prefix[i - w];

    let mut start = w;
    if backflow(w) > threshold {
        while start + 1 < d.len() && backflow(start + 1) >= backflow(start) {
            start += 1;
        }
    }
    let mut min = f64::INFINITY;
    let mut at_min = start;
    for i in start..d.len() {
        let b = backflow(i);
        if b <= min {
            min = b;
            at_min = i;
        }
        if b > (1.0 + relative) * min + threshold {
            return Ok(Some(curve.time(at_min)));
        }
    }
    Ok(None)
}

/// Fixed settings of a (delta, temperature) sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SweepConfig {
    pub n_ions: usize,
    pub eta: f64,
    pub dt: f64,
    pub t_trunc: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            n_ions: 100,
            eta: ChainParams::DEFAULT_ETA,
            dt: crate::dephasing::DEFAULT_DT,
            t_trunc: DEFAULT_T_TRUNC,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub delta: f64,
    pub beta_omega_max: f64,
    pub outcome: Result<NMResult>,
}

fn chain(cfg: &SweepConfig, delta: f64) -> Result<ChainParams> {
    if !(delta.abs() >= MIN_ABS_DELTA) {
        return Err(Error::InvalidParameter(format!(
            "|delta| must be >= {MIN_ABS_DELTA}, got {delta}"
        )));
    }
    ChainParams::new(cfg.n_ions, delta)?.with_eta(cfg.eta)
}

/// Measures at one delta for several temperatures, sharing the mode table.
pub fn sweep_delta(cfg: &SweepConfig, delta: f64, betas: &[f64]) -> Vec<SweepPoint> {
    let prepared = chain(cfg, delta).and_then(|p| {
        let table = ModeTable::for_params(&p)?;
        Ok((p, couplings(&table, p.eta())?))
    });
    betas
        .iter()
        .map(|&bom| {
            let outcome = prepared.clone().and_then(|(params, c)| {
                let thermal = ThermalSpec::new(bom)?;
                let curve = curve_from_couplings(&c, thermal, cfg.t_trunc, cfg.dt)?.with_meta(CurveMeta {
                    params,
                    thermal,
                    omega_max: c.omega_max(),
                    beta: thermal.beta(c.omega_max()),
                });
                blp_measure(&curve, cfg.t_trunc)
            });
            SweepPoint {
                delta,
                beta_omega_max: bom,
                outcome,
            }
        })
        .collect()
}

/// Orders sweep points by `(beta_omega_max, delta)`.
pub fn sort_points(points: &mut [SweepPoint]) {
    points.sort_by(|a, b| {
        a.beta_omega_max
            .total_cmp(&b.beta_omega_max)
            .then(a.delta.total_cmp(&b.delta))
    });
}

/// One measure per `(delta, beta_omega_max)`; failures are kept per point.
pub fn sweep(cfg: &SweepConfig, deltas: &[f64], betas: &[f64]) -> Vec<SweepPoint> {
    let mut out: Vec<SweepPoint> = deltas.iter().flat_map(|&d| sweep_delta(cfg, d, betas)).collect();
    sort_points(&mut out);
    out
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairScan {
    /// Measure of every grid pair, in grid order.
    pub values: Vec<(BlochPair, f64)>,
    pub best: f64,
    /// All pairs within a relative `1e-9` of `best`. The maximiser is often
    /// degenerate, so a single argmax would be decided by rounding.
    pub maximizers: Vec<BlochPair>,
}

/// Exact BLP measure for every antipodal pair on `grid`, over
/// `[0, t_trunc]` with step `dt`.
pub fn pair_scan(
    config: &FockConfig,
    beta: f64,
    grid: &[BlochPair],
    t_trunc: f64,
    dt: f64,
) -> Result<PairScan> {
    if grid.is_empty() {
        return Err(Error::InvalidInput("empty pair grid".into()));
    }
    if !(dt > 0.0 && t_trunc > 0.0) {
        return Err(Error::InvalidParameter(format!("bad time grid: t_trunc {t_trunc}, dt {dt}")));
    }
    let steps = (t_trunc / dt + 1e-9).floor() as usize + 1;
    let oracle = Oracle::new(config, beta)?;
    let work = oracle.kernel_cost() * steps as f64;
    if work > MAX_SCAN_WORK {
        return Err(Error::ResourceLimit(format!(
            "pair scan needs ~{work:.1e} flops, limit {MAX_SCAN_WORK:.1e}"
        )));
    }
    let kernels: Vec<_> = (0..steps).map(|i| oracle.kernel(dt * i as f64)).collect();
    let values: Vec<(BlochPair, f64)> = grid
        .iter()
        .map(|pair| {
            let d: Vec<f64> = kernels.iter().map(|k| k.pair_distance(pair)).collect();
            (*pair, positive_variation(&d))
        })
        .collect();
    let best = values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max);
    let tol = (1e-9 * best.abs()).max(1e-13);
    let maximizers = values.iter().filter(|v| v.1 >= best - tol).map(|v| v.0).collect();
    Ok(PairScan {
        values,
        best,
        maximizers,
    })
}
