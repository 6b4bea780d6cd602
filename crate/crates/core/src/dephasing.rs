//! Thermal dephasing of the probe spin after the pulse / free evolution /
//! pulse sequence.
//!
//! Every quantity is a sum over coupled transverse modes weighted by
//! `|alpha_j|^2 coth(omega_j beta / 2)`:
//!
//! ```text
//! A(t)  = 2 sum_j w_j sin^2(omega_j t / 2)
//! B(t)  =   sum_j w_j sin(omega_j t)
//! xi    = exp(-1/2 sum_j w_j)
//! V(t)  = exp(-A(t))
//! D(t)  = 1/4 |1 + 2 cos B (V - xi^4 / V) + V^4 + 2 xi^4|
//! ```
//!
//! `D` is the trace distance between the evolved `|+>` and `|->` states.

use alloc::{format, vec::Vec};

#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::lattice::{ChainParams, ModeTable, S1_ZERO};
use crate::{Error, Result, MIN_ABS_DELTA};

/// Below this `beta * omega_max` the `|+>, |->` pair is no longer guaranteed
/// to be optimal and the closed form is used outside its calibrated range.
pub const MIN_BETA_OMEGA_MAX: f64 = 0.3;

/// Default sampling step of dephasing curves.
pub const DEFAULT_DT: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Coupling {
    pub omega: f64,
    pub alpha_sq: f64,
}

/// Per-mode coupling strengths `|alpha_j|^2` with their frequencies.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CouplingSet {
    entries: Vec<Coupling>,
    omega_max: f64,
}

impl CouplingSet {
    pub fn new(entries: Vec<Coupling>) -> Result<Self> {
        for c in &entries {
            if !(c.alpha_sq >= 0.0 && c.alpha_sq.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "coupling strength must be finite and >= 0, got {}",
                    c.alpha_sq
                )));
            }
            if !(c.omega > 0.0 && c.omega.is_finite()) {
                return Err(Error::InvalidInput(format!(
                    "coupled mode frequency must be finite and > 0, got {}",
                    c.omega
                )));
            }
        }
        let omega_max = entries
            .iter()
            .filter(|c| c.alpha_sq > 0.0)
            .map(|c| c.omega)
            .fold(0.0, f64::max);
        Ok(Self { entries, omega_max })
    }

    pub fn single(omega: f64, alpha_sq: f64) -> Result<Self> {
        Self::new(alloc::vec![Coupling { omega, alpha_sq }])
    }

    pub fn entries(&self) -> &[Coupling] {
        &self.entries
    }

    /// Largest frequency among modes with nonzero coupling; `0` when empty.
    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn total_alpha_sq(&self) -> f64 {
        self.entries.iter().map(|c| c.alpha_sq).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// The `m` most strongly coupled modes, strongest first. Ties keep table
    /// order.
    pub fn strongest(&self, m: usize) -> Self {
        let mut idx: Vec<usize> = (0..self.entries.len()).collect();
        idx.sort_by(|&a, &b| self.entries[b].alpha_sq.total_cmp(&self.entries[a].alpha_sq));
        let entries: Vec<Coupling> = idx.into_iter().take(m).map(|i| self.entries[i]).collect();
        // Cannot fail: entries were already validated.
        Self::new(entries).expect("subset of a valid coupling set")
    }

    /// The `m` strongest modes, rescaled so that their total `|alpha|^2`
    /// equals that of the whole set. Small stand-in for a full table when
    /// checking the closed form against the exact evaluation.
    pub fn strongest_rescaled(&self, m: usize) -> Result<Self> {
        let sub = self.strongest(m);
        let kept = sub.total_alpha_sq();
        if kept <= 0.0 {
            return Ok(sub);
        }
        sub.scaled(self.total_alpha_sq() / kept)
    }

    /// Multiplies every `|alpha_j|^2` by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        if !(factor >= 0.0 && factor.is_finite()) {
            return Err(Error::InvalidParameter(format!("scale factor must be >= 0, got {factor}")));
        }
        Self::new(
            self.entries
                .iter()
                .map(|c| Coupling {
                    omega: c.omega,
                    alpha_sq: c.alpha_sq * factor,
                })
                .collect(),
        )
    }
}

/// `|alpha_j|^2 = eta^2 s1_j^2 / (2 omega_j)` for every mode that couples to
/// the transverse motion of the probed ion.
pub fn couplings(table: &ModeTable, eta: f64) -> Result<CouplingSet> {
    if table.is_empty() {
        return Err(Error::InvalidInput("empty mode table".into()));
    }
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameter(format!("eta must be > 0, got {eta}")));
    }
    let mut entries = Vec::new();
    for m in table.modes() {
        if m.s1.abs() <= S1_ZERO {
            continue;
        }
        if m.omega <= 0.0 {
            return Err(Error::SoftModeDivergence { s1: m.s1 });
        }
        entries.push(Coupling {
            omega: m.omega,
            alpha_sq: eta * eta * m.s1 * m.s1 / (2.0 * m.omega),
        });
    }
    CouplingSet::new(entries)
}

/// Temperature in units of the fastest coupled mode. `INFINITY` means `T = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ThermalSpec {
    beta_omega_max: f64,
}

impl ThermalSpec {
    pub fn new(beta_omega_max: f64) -> Result<Self> {
        if !(beta_omega_max > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beta * omega_max must be > 0 or infinite, got {beta_omega_max}"
            )));
        }
        Ok(Self { beta_omega_max })
    }

    pub fn zero_temperature() -> Self {
        Self {
            beta_omega_max: f64::INFINITY,
        }
    }

    pub fn beta_omega_max(&self) -> f64 {
        self.beta_omega_max
    }

    pub fn is_zero_temperature(&self) -> bool {
        self.beta_omega_max.is_infinite()
    }

    /// Inverse temperature for a coupling set whose fastest mode is
    /// `omega_max`.
    pub fn beta(&self, omega_max: f64) -> f64 {
        if self.is_zero_temperature() {
            f64::INFINITY
        } else {
            self.beta_omega_max / omega_max
        }
    }
}

/// `coth(omega beta / 2)`, i.e. `2 n_B + 1`. Equal to `1` at `beta = inf`.
pub fn thermal_weight(omega: f64, beta: f64) -> Result<f64> {
    if !(omega > 0.0) {
        return Err(Error::InvalidParameter(format!("omega must be > 0, got {omega}")));
    }
    if !(beta > 0.0) {
        return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
    }
    if beta.is_infinite() {
        return Ok(1.0);
    }
    Ok(1.0 + 2.0 / (omega * beta).exp_m1())
}

/// Which reading of the time-independent factor `xi` to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum XiReading {
    /// `exp(-1/2 sum_j |alpha_j|^2 coth_j)`.
    Adopted,
    /// `prod_j exp(-|alpha_j|^2 / 2) coth_j`, with the thermal factor outside
    /// the exponent. Kept only so validation can tell the two apart.
    Literal,
}

/// One sample of the dephasing quantities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Sample {
    pub a: f64,
    pub b: f64,
    pub v: f64,
    pub d: f64,
}

/// Coupling set with thermal weights folded in, ready to be sampled.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalKernel {
    omega: Vec<f64>,
    weight: Vec<f64>,
    total_weight: f64,
    xi: f64,
    reading: XiReading,
}

impl ThermalKernel {
    pub fn new(c: &CouplingSet, beta: f64) -> Result<Self> {
        Self::with_reading(c, beta, XiReading::Adopted)
    }

    pub fn with_reading(c: &CouplingSet, beta: f64, reading: XiReading) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        if beta * c.omega_max() < MIN_BETA_OMEGA_MAX {
            log::warn!(
                "beta * omega_max = {} is below {MIN_BETA_OMEGA_MAX}; the |+>,|-> pair may not be optimal",
                beta * c.omega_max()
            );
        }
        let mut omega = Vec::with_capacity(c.len());
        let mut weight = Vec::with_capacity(c.len());
        let mut bare = 0.0;
        let mut log_coth = 0.0;
        for e in c.entries() {
            let coth = thermal_weight(e.omega, beta)?;
            omega.push(e.omega);
            weight.push(e.alpha_sq * coth);
            bare += e.alpha_sq;
            log_coth += coth.ln();
        }
        let total_weight: f64 = weight.iter().sum();
        let xi = match reading {
            XiReading::Adopted => (-0.5 * total_weight).exp(),
            XiReading::Literal => (-0.5 * bare + log_coth).exp(),
        };
        Ok(Self {
            omega,
            weight,
            total_weight,
            xi,
            reading,
        })
    }

    pub fn xi(&self) -> f64 {
        self.xi
    }

    pub fn reading(&self) -> XiReading {
        self.reading
    }

    pub fn decay_exponent_a(&self, t: f64) -> f64 {
        self.omega
            .iter()
            .zip(&self.weight)
            .map(|(&w, &g)| {
                let s = (0.5 * w * t).sin();
                2.0 * g * s * s
            })
            .sum()
    }

    pub fn phase_b(&self, t: f64) -> f64 {
        self.omega.iter().zip(&self.weight).map(|(&w, &g)| g * (w * t).sin()).sum()
    }

    pub fn visibility(&self, t: f64) -> f64 {
        (-self.decay_exponent_a(t)).exp()
    }

    pub fn sample(&self, t: f64) -> Sample {
        let mut a = 0.0;
        let mut b = 0.0;
        for (&w, &g) in self.omega.iter().zip(&self.weight) {
            let (s, c) = (0.5 * w * t).sin_cos();
            a += 2.0 * g * s * s;
            // sin(w t) = 2 sin(w t / 2) cos(w t / 2)
            b += 2.0 * g * s * c;
        }
        let v = (-a).exp();
        let d = combine(a, b, self.xi, self.xi_ratio(a));
        Sample { a, b, v, d }
    }

    pub fn optimal_trace_distance(&self, t: f64) -> f64 {
        self.sample(t).d
    }

    /// `xi^4 / V`, evaluated without forming `1 / V`, which overflows once
    /// the visibility has decayed.
    fn xi_ratio(&self, a: f64) -> f64 {
        match self.reading {
            XiReading::Adopted => (a - 2.0 * self.total_weight).exp(),
            XiReading::Literal => self.xi.powi(4) * a.exp(),
        }
    }
}

fn combine(a: f64, b: f64, xi: f64, xi4_over_v: f64) -> f64 {
    let v = (-a).exp();
    let xi4 = xi.powi(4);
    let raw = 0.25 * (1.0 + 2.0 * b.cos() * (v - xi4_over_v) + v.powi(4) + 2.0 * xi4).abs();
    if raw > 1.0 + 1e-12 {
        log::debug!("trace distance {raw} clamped to 1");
    }
    raw.clamp(0.0, 1.0)
}

pub fn decay_exponent_a(t: f64, beta: f64, c: &CouplingSet) -> Result<f64> {
    Ok(ThermalKernel::new(c, beta)?.decay_exponent_a(t))
}

pub fn phase_b(t: f64, beta: f64, c: &CouplingSet) -> Result<f64> {
    Ok(ThermalKernel::new(c, beta)?.phase_b(t))
}

pub fn xi(beta: f64, c: &CouplingSet) -> Result<f64> {
    Ok(ThermalKernel::new(c, beta)?.xi())
}

pub fn xi_literal(beta: f64, c: &CouplingSet) -> Result<f64> {
    Ok(ThermalKernel::with_reading(c, beta, XiReading::Literal)?.xi())
}

pub fn visibility(t: f64, beta: f64, c: &CouplingSet) -> Result<f64> {
    Ok(ThermalKernel::new(c, beta)?.visibility(t))
}

/// Trace distance of the `|+>, |->` pair, clamped to `[0, 1]`.
pub fn optimal_trace_distance(t: f64, beta: f64, c: &CouplingSet) -> Result<f64> {
    Ok(ThermalKernel::new(c, beta)?.optimal_trace_distance(t))
}

/// Zero-temperature trace distance, written out without thermal weights.
pub fn optimal_trace_distance_zero_temperature(t: f64, c: &CouplingSet) -> f64 {
    let mut a = 0.0;
    let mut b = 0.0;
    let mut total = 0.0;
    for e in c.entries() {
        let s = (0.5 * e.omega * t).sin();
        a += 2.0 * e.alpha_sq * s * s;
        b += e.alpha_sq * (e.omega * t).sin();
        total += e.alpha_sq;
    }
    let xi = (-0.5 * total).exp();
    combine(a, b, xi, (a - 2.0 * total).exp())
}

/// Provenance of a curve computed from a chain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CurveMeta {
    pub params: ChainParams,
    pub thermal: ThermalSpec,
    pub omega_max: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Components {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub v: Vec<f64>,
}

/// Trace distance sampled on the uniform grid `t_i = i dt`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DephasingCurve {
    dt: f64,
    values: Vec<f64>,
    components: Option<Components>,
    meta: Option<CurveMeta>,
}

fn check_grid(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    if !(t_max > 0.0 && t_max.is_finite()) {
        return Err(Error::InvalidParameter(format!("t_max must be > 0, got {t_max}")));
    }
    Ok((t_max / dt + 1e-9).floor() as usize + 1)
}

impl DephasingCurve {
    /// Wraps precomputed values on a uniform grid of step `dt`.
    pub fn from_values(dt: f64, values: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
        }
        if values.is_empty() {
            return Err(Error::InvalidInput("empty curve".into()));
        }
        Ok(Self {
            dt,
            values,
            components: None,
            meta: None,
        })
    }

    /// Wraps `(t_i, D_i)` samples, which must start at 0 and be uniformly
    /// spaced.
    pub fn from_samples(times: &[f64], values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::DimensionMismatch {
                left: times.len(),
                right: values.len(),
            });
        }
        if times.len() < 2 {
            return Self::from_values(1.0, values);
        }
        let dt = times[1] - times[0];
        let uniform = times.first() == Some(&0.0)
            && times
                .windows(2)
                .all(|w| ((w[1] - w[0]) - dt).abs() <= 1e-9 * dt.abs().max(1.0));
        if !uniform || !(dt > 0.0) {
            return Err(Error::InvalidInput("time grid must be uniform and start at 0".into()));
        }
        Self::from_values(dt, values)
    }

    pub fn with_meta(mut self, meta: CurveMeta) -> Self {
        self.meta = Some(meta);
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.dt * (self.values.len() - 1) as f64
    }

    pub fn time(&self, i: usize) -> f64 {
        self.dt * i as f64
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.values.len()).map(move |i| self.time(i))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn components(&self) -> Option<&Components> {
        self.components.as_ref()
    }

    pub fn meta(&self) -> Option<&CurveMeta> {
        self.meta.as_ref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Samples a prepared kernel on `[0, t_max]` with step `dt`.
pub fn sample_kernel(kernel: &ThermalKernel, t_max: f64, dt: f64) -> Result<DephasingCurve> {
    let len = check_grid(t_max, dt)?;
    let mut values = Vec::with_capacity(len);
    let mut comp = Components {
        a: Vec::with_capacity(len),
        b: Vec::with_capacity(len),
        v: Vec::with_capacity(len),
    };
    for i in 0..len {
        let s = kernel.sample(dt * i as f64);
        values.push(s.d);
        comp.a.push(s.a);
        comp.b.push(s.b);
        comp.v.push(s.v);
    }
    Ok(DephasingCurve {
        dt,
        values,
        components: Some(comp),
        meta: None,
    })
}

/// Curve for an explicit coupling set; `thermal` is resolved against the
/// set's own `omega_max`.
pub fn curve_from_couplings(
    c: &CouplingSet,
    thermal: ThermalSpec,
    t_max: f64,
    dt: f64,
) -> Result<DephasingCurve> {
    let beta = thermal.beta(c.omega_max());
    sample_kernel(&ThermalKernel::new(c, beta)?, t_max, dt)
}

/// Full pipeline: mode table of the right phase, couplings, thermal weights,
/// sampling.
pub fn curve(params: &ChainParams, thermal: ThermalSpec, t_max: f64, dt: f64) -> Result<DephasingCurve> {
    if params.delta().abs() < MIN_ABS_DELTA {
        return Err(Error::InvalidParameter(format!(
            "|delta| must be >= {MIN_ABS_DELTA}, got {}",
            params.delta()
        )));
    }
    let table = ModeTable::for_params(params)?;
    let c = couplings(&table, params.eta())?;
    let beta = thermal.beta(c.omega_max());
    let out = curve_from_couplings(&c, thermal, t_max, dt)?;
    Ok(out.with_meta(CurveMeta {
        params: *params,
        thermal,
        omega_max: c.omega_max(),
        beta,
    }))
}
