//! Equilibrium configurations and normal modes of a periodic ion ring.
//!
//! Ion `j` (1-based, `j = 1..=N`) sits at `x_j = j` in the linear phase and
//! at `(j, (-1)^j b / 2)` in the zigzag phase. Coulomb interactions are summed
//! over the `N` partners at signed offsets `m = ±1..=±N/2`, so the partner at
//! `N/2` enters through both of its images. This is exactly the sum that
//! produces the closed-form dispersion relations below.

use alloc::{format, vec::Vec};
use core::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::{Error, Result};

/// Eigenvalues with magnitude below this are exact zeros (translation mode).
pub const ZERO_EIGENVALUE: f64 = 1e-10;

/// Eigenvalues below this signal that the equilibrium finder failed.
pub const UNSTABLE_EIGENVALUE: f64 = -1e-8;

/// Amplitudes at or below this are treated as uncoupled.
pub const S1_ZERO: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChainParams {
    n_ions: usize,
    nu_t: f64,
    delta: f64,
    eta: f64,
    target_ion: usize,
}

impl ChainParams {
    pub const DEFAULT_ETA: f64 = 0.1;

    /// Chain of `n_ions` at relative distance `delta` from criticality, with
    /// the default Lamb-Dicke parameter and the probe on ion 1.
    pub fn new(n_ions: usize, delta: f64) -> Result<Self> {
        let nu_c = critical_frequency(n_ions)?;
        if !delta.is_finite() || delta <= -1.0 {
            return Err(Error::InvalidParameter(format!(
                "delta must be finite and > -1, got {delta}"
            )));
        }
        Ok(Self {
            n_ions,
            nu_t: (1.0 + delta) * nu_c,
            delta,
            eta: Self::DEFAULT_ETA,
            target_ion: 1,
        })
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::InvalidParameter(format!("eta must be > 0, got {eta}")));
        }
        self.eta = eta;
        Ok(self)
    }

    pub fn with_target_ion(mut self, target_ion: usize) -> Result<Self> {
        if target_ion == 0 || target_ion > self.n_ions {
            return Err(Error::InvalidParameter(format!(
                "target ion must be in 1..={}, got {target_ion}",
                self.n_ions
            )));
        }
        self.target_ion = target_ion;
        Ok(self)
    }

    pub fn n_ions(&self) -> usize {
        self.n_ions
    }

    /// Transverse trap frequency, `(1 + delta) * critical_frequency(N)`.
    pub fn nu_t(&self) -> f64 {
        self.nu_t
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn target_ion(&self) -> usize {
        self.target_ion
    }

    pub fn phase(&self) -> Phase {
        if self.delta >= 0.0 {
            Phase::Linear
        } else {
            Phase::Zigzag
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Linear,
    Zigzag,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    TransverseCos,
    TransverseSin,
    AxialCos,
    AxialSin,
    ZigzagNumeric,
}

impl Branch {
    pub fn as_str(&self) -> &'static str {
        match self {
            Branch::TransverseCos => "transverse_cos",
            Branch::TransverseSin => "transverse_sin",
            Branch::AxialCos => "axial_cos",
            Branch::AxialSin => "axial_sin",
            Branch::ZigzagNumeric => "zigzag_numeric",
        }
    }

    pub fn is_transverse(&self) -> bool {
        matches!(self, Branch::TransverseCos | Branch::TransverseSin)
    }
}

/// One phonon normal mode.
///
/// `s1` is the transverse (y) amplitude of the probed ion in the orthonormal
/// eigenvector. For numerically diagonalised zigzag modes `k_index` is the
/// rank of the eigenvalue, not a wave number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Mode {
    pub branch: Branch,
    pub k_index: usize,
    pub omega: f64,
    pub s1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ModeTable {
    modes: Vec<Mode>,
    phase: Phase,
    params: ChainParams,
    omega_max: f64,
}

impl ModeTable {
    fn new(modes: Vec<Mode>, phase: Phase, params: ChainParams) -> Self {
        let omega_max = modes.iter().map(|m| m.omega).fold(0.0, f64::max);
        Self {
            modes,
            phase,
            params,
            omega_max,
        }
    }

    /// Table from explicit modes. Frequencies must be finite and >= 0 and
    /// `(branch, k_index)` keys unique.
    pub fn from_modes(modes: Vec<Mode>, params: ChainParams) -> Result<Self> {
        for (i, m) in modes.iter().enumerate() {
            if !(m.omega >= 0.0 && m.omega.is_finite() && m.s1.is_finite()) {
                return Err(Error::InvalidInput(format!("mode {i}: bad frequency or amplitude")));
            }
            if modes[..i].iter().any(|o| o.branch == m.branch && o.k_index == m.k_index) {
                return Err(Error::InvalidInput(format!(
                    "duplicate mode ({}, {})",
                    m.branch.as_str(),
                    m.k_index
                )));
            }
        }
        Ok(Self::new(modes, params.phase(), params))
    }

    /// Builds the table appropriate for the phase of `params`.
    pub fn for_params(params: &ChainParams) -> Result<Self> {
        match params.phase() {
            Phase::Linear => linear_mode_table(params),
            Phase::Zigzag => zigzag_mode_table(params),
        }
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    pub fn phase(&self) -> Phase {
        self.phase
    }

    pub fn params(&self) -> &ChainParams {
        &self.params
    }

    pub fn omega_max(&self) -> f64 {
        self.omega_max
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }
}

fn check_n_ions(n: usize) -> Result<()> {
    if n < 4 || n % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "number of ions must be even and >= 4, got {n}"
        )));
    }
    Ok(())
}

fn check_k(k: f64) -> Result<f64> {
    // Tolerate the rounding of 2*pi*n/N at the zone edge.
    if !(k >= -1e-12 && k <= PI + 1e-12) {
        return Err(Error::InvalidParameter(format!("k must lie in [0, pi], got {k}")));
    }
    Ok(k.clamp(0.0, PI))
}

/// `sum_{j=1}^{N/2} sin^2(j k / 2) / j^3`
fn lattice_sum(k: f64, n: usize) -> f64 {
    (1..=n / 2)
        .map(|j| {
            let j = j as f64;
            let s = (j * k / 2.0).sin();
            s * s / (j * j * j)
        })
        .sum()
}

/// Transverse trap frequency at which the `k = pi` transverse mode of an
/// `n`-ion ring goes soft.
pub fn critical_frequency(n: usize) -> Result<f64> {
    check_n_ions(n)?;
    Ok(2.0 * lattice_sum(PI, n).sqrt())
}

pub fn axial_dispersion(k: f64, n: usize) -> Result<f64> {
    check_n_ions(n)?;
    let k = check_k(k)?;
    Ok((8.0 * lattice_sum(k, n)).sqrt())
}

/// Transverse dispersion of the linear chain. Fails when the radicand is
/// negative, i.e. when the linear chain is not an equilibrium at `nu_t`.
pub fn transverse_dispersion(k: f64, nu_t: f64, n: usize) -> Result<f64> {
    check_n_ions(n)?;
    let k = check_k(k)?;
    let nu_sq = nu_t * nu_t;
    let omega_sq = nu_sq - 4.0 * lattice_sum(k, n);
    // Cancellation at exact criticality leaves a few ulps of either sign.
    if omega_sq.abs() <= 64.0 * f64::EPSILON * nu_sq {
        return Ok(0.0);
    }
    if omega_sq < 0.0 {
        return Err(Error::SoftModeInstability { k, omega_sq });
    }
    Ok(omega_sq.sqrt())
}

/// All `2N` modes of the linear ring: `N` transverse modes carrying the
/// probe amplitudes and `N` axial modes, which do not couple (`s1 = 0`).
pub fn linear_mode_table(params: &ChainParams) -> Result<ModeTable> {
    if params.delta <= 0.0 {
        return Err(Error::WrongPhase(format!(
            "linear mode table needs delta > 0, got {}",
            params.delta
        )));
    }
    let n = params.n_ions;
    let nf = n as f64;
    let x1 = params.target_ion as f64;
    let edge_amp = 1.0 / nf.sqrt();
    let bulk_amp = (2.0 / nf).sqrt();

    let mut modes = Vec::with_capacity(2 * n);
    for idx in 0..=n / 2 {
        let k = 2.0 * PI * idx as f64 / nf;
        let omega_t = transverse_dispersion(k, params.nu_t, n)?;
        let omega_a = axial_dispersion(k, n)?;
        let mut push = |branch, omega, s1| {
            modes.push(Mode {
                branch,
                k_index: idx,
                omega,
                s1,
            })
        };
        if idx == 0 || idx == n / 2 {
            push(Branch::TransverseCos, omega_t, edge_amp * (k * x1).cos());
            push(Branch::AxialCos, omega_a, 0.0);
        } else {
            push(Branch::TransverseCos, omega_t, bulk_amp * (k * x1).cos());
            push(Branch::TransverseSin, omega_t, bulk_amp * (k * x1).sin());
            push(Branch::AxialCos, omega_a, 0.0);
            push(Branch::AxialSin, omega_a, 0.0);
        }
    }
    Ok(ModeTable::new(modes, Phase::Linear, *params))
}

/// Staggered transverse offset of ion `j` (0-based).
fn stagger(j: usize, b: f64) -> f64 {
    // Ion j+1 sits at (-1)^(j+1) b / 2.
    if j % 2 == 0 {
        -b / 2.0
    } else {
        b / 2.0
    }
}

fn offsets(n: usize) -> impl Iterator<Item = i64> {
    let half = (n / 2) as i64;
    (-half..=half).filter(|&m| m != 0)
}

/// Potential energy of the ring for displacements `u` (axial) and `v`
/// (transverse, absolute) of each ion, interleaved as
/// `[u_1, v_1, u_2, v_2, ...]`.
pub fn ring_energy(params: &ChainParams, coords: &[f64]) -> Result<f64> {
    let n = params.n_ions;
    if coords.len() != 2 * n {
        return Err(Error::DimensionMismatch {
            left: coords.len(),
            right: 2 * n,
        });
    }
    let nu_sq = params.nu_t * params.nu_t;
    let mut energy = 0.0;
    for i in 0..n {
        let (ui, vi) = (coords[2 * i], coords[2 * i + 1]);
        energy += 0.5 * nu_sq * vi * vi;
        for m in offsets(n) {
            let p = (i as i64 + m).rem_euclid(n as i64) as usize;
            let dx = m as f64 + coords[2 * p] - ui;
            let dy = coords[2 * p + 1] - vi;
            energy += 0.5 / (dx * dx + dy * dy).sqrt();
        }
    }
    Ok(energy)
}

/// Energy per ion of the staggered configuration with transverse offset `b`.
pub fn zigzag_energy_per_ion(params: &ChainParams, b: f64) -> f64 {
    let nu_sq = params.nu_t * params.nu_t;
    let coulomb: f64 = offsets(params.n_ions)
        .map(|m| {
            let dy = if m % 2 == 0 { 0.0 } else { b };
            let mf = m as f64;
            0.5 / (mf * mf + dy * dy).sqrt()
        })
        .sum();
    nu_sq * b * b / 8.0 + coulomb
}

/// Equilibrium transverse offset `b` of the staggered configuration.
///
/// Solves the stationarity condition
/// `nu_t^2 / 4 = 1/2 sum_{odd m} (m^2 + b^2)^(-3/2)` by bracketing and
/// bisection. Returns `0` for `delta >= 0`, where the linear chain is the
/// minimiser.
pub fn zigzag_equilibrium(params: &ChainParams) -> Result<f64> {
    if params.delta >= 0.0 {
        return Ok(0.0);
    }
    let target = params.nu_t * params.nu_t / 4.0;
    let odd: Vec<f64> = offsets(params.n_ions)
        .filter(|m| m % 2 != 0)
        .map(|m| (m * m) as f64)
        .collect();
    let excess = |b: f64| -> f64 {
        let b2 = b * b;
        0.5 * odd.iter().map(|&m2| (m2 + b2).powf(-1.5)).sum::<f64>() - target
    };
    if excess(0.0) <= 0.0 {
        return Ok(0.0);
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while excess(hi) > 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::InvalidParameter(format!(
                "no zigzag equilibrium bracket for delta = {}",
                params.delta
            )));
        }
    }
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if excess(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mass-weighted Hessian (unit masses) of the ring potential about the
/// staggered configuration with offset `b`, in the interleaved
/// `(x_1, y_1, x_2, y_2, ...)` displacement coordinates.
pub fn hessian(params: &ChainParams, b: f64) -> DMatrix<f64> {
    let n = params.n_ions;
    let mut h = DMatrix::<f64>::zeros(2 * n, 2 * n);
    for i in 0..n {
        h[(2 * i + 1, 2 * i + 1)] += params.nu_t * params.nu_t;
        for m in offsets(n) {
            let p = (i as i64 + m).rem_euclid(n as i64) as usize;
            let rx = m as f64;
            let ry = stagger(p, b) - stagger(i, b);
            let r2 = rx * rx + ry * ry;
            let r5 = r2 * r2 * r2.sqrt();
            // Half of the 1/r Hessian: every directed (i, m) term carries 1/2.
            let block = [
                [0.5 * (3.0 * rx * rx - r2) / r5, 0.5 * 3.0 * rx * ry / r5],
                [0.5 * 3.0 * rx * ry / r5, 0.5 * (3.0 * ry * ry - r2) / r5],
            ];
            for a in 0..2 {
                for c in 0..2 {
                    let v = block[a][c];
                    h[(2 * i + a, 2 * i + c)] += v;
                    h[(2 * p + a, 2 * p + c)] += v;
                    h[(2 * i + a, 2 * p + c)] -= v;
                    h[(2 * p + a, 2 * i + c)] -= v;
                }
            }
        }
    }
    h
}

/// Diagonalises the Hessian about offset `b` and returns the `2N` modes in
/// ascending frequency. Zero modes get `omega = 0` and `s1 = 0`.
pub fn normal_modes(params: &ChainParams, b: f64) -> Result<Vec<Mode>> {
    let h = hessian(params, b);
    let sym = (&h + h.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &c| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[c]));

    let y_row = 2 * (params.target_ion - 1) + 1;
    let mut modes = Vec::with_capacity(order.len());
    for (rank, &col) in order.iter().enumerate() {
        let lambda = eig.eigenvalues[col];
        if lambda < UNSTABLE_EIGENVALUE {
            return Err(Error::UnstableEquilibrium { eigenvalue: lambda });
        }
        let (omega, s1) = if lambda.abs() < ZERO_EIGENVALUE {
            (0.0, 0.0)
        } else {
            (lambda.max(0.0).sqrt(), eig.eigenvectors[(y_row, col)])
        };
        modes.push(Mode {
            branch: Branch::ZigzagNumeric,
            k_index: rank,
            omega,
            s1,
        });
    }
    Ok(modes)
}

/// All `2N` modes of the zigzag ring, from the numerically diagonalised
/// Hessian about the staggered equilibrium.
pub fn zigzag_mode_table(params: &ChainParams) -> Result<ModeTable> {
    if params.delta >= 0.0 {
        return Err(Error::WrongPhase(format!(
            "zigzag mode table needs delta < 0, got {}",
            params.delta
        )));
    }
    let b = zigzag_equilibrium(params)?;
    let modes = normal_modes(params, b)?;
    Ok(ModeTable::new(modes, Phase::Zigzag, *params))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn zeta3_odd_limit() -> f64 {
        // sum over odd j of 1/j^3 = (7/8) zeta(3), summed to convergence.
        let mut s = 0.0;
        let mut j = 1.0_f64;
        while j < 2e6 {
            s += 1.0 / (j * j * j);
            j += 2.0;
        }
        s
    }

    #[test]
    fn critical_frequency_small_ring() {
        assert_relative_eq!(critical_frequency(4).unwrap(), 2.0, epsilon = 1e-15);
    }

    #[test]
    fn critical_frequency_rejects_bad_sizes() {
        assert!(critical_frequency(5).is_err());
        assert!(critical_frequency(2).is_err());
        assert!(critical_frequency(0).is_err());
    }

    #[test]
    fn critical_frequency_approaches_zeta_limit() {
        let limit = (4.0 * zeta3_odd_limit()).sqrt();
        assert_relative_eq!(limit, 2.05114, epsilon = 1e-5);
        let big = critical_frequency(20_000).unwrap();
        assert!((big - limit).abs() < 1e-8);
    }

    #[test]
    fn critical_frequency_monotone_in_n() {
        let mut prev = critical_frequency(4).unwrap();
        for n in (6..=200).step_by(2) {
            let cur = critical_frequency(n).unwrap();
            assert!(cur >= prev, "N = {n}");
            prev = cur;
        }
    }

    #[test]
    fn axial_dispersion_limits() {
        assert_eq!(axial_dispersion(0.0, 100).unwrap(), 0.0);
        let limit = (8.0 * zeta3_odd_limit()).sqrt();
        assert_relative_eq!(limit, 2.900758, epsilon = 1e-6);
        assert!((axial_dispersion(PI, 20_000).unwrap() - limit).abs() < 1e-8);
        assert!(axial_dispersion(PI + 0.1, 100).is_err());
        assert!(axial_dispersion(-0.1, 100).is_err());
    }

    #[test]
    fn axial_dispersion_increasing() {
        let mut prev = 0.0;
        for i in 1..=1000 {
            let k = PI * i as f64 / 1000.0;
            let w = axial_dispersion(k, 100).unwrap();
            assert!(w > prev, "k = {k}");
            prev = w;
        }
    }

    #[test]
    fn transverse_dispersion_anchor_points() {
        for n in [4, 10, 100] {
            let nu_c = critical_frequency(n).unwrap();
            assert_eq!(transverse_dispersion(0.0, 1.7, n).unwrap(), 1.7);
            assert!(transverse_dispersion(PI, nu_c, n).unwrap() <= 1e-12);
            let nu_t = 1.1 * nu_c;
            let w = transverse_dispersion(PI, nu_t, n).unwrap();
            assert_relative_eq!(w, nu_c * (1.1_f64 * 1.1 - 1.0).sqrt(), max_relative = 1e-12);
            assert_relative_eq!(w / nu_c, 0.458_257_569_5, max_relative = 1e-9);
        }
    }

    #[test]
    fn transverse_dispersion_below_critical_is_unstable() {
        let nu_c = critical_frequency(100).unwrap();
        let err = transverse_dispersion(PI, 0.99 * nu_c, 100).unwrap_err();
        assert!(matches!(err, Error::SoftModeInstability { .. }));
    }

    #[test]
    fn linear_table_counts_and_normalisation() {
        for n in [4, 6, 10, 100] {
            let p = ChainParams::new(n, 0.1).unwrap();
            let table = linear_mode_table(&p).unwrap();
            assert_eq!(table.len(), 2 * n);
            let transverse: Vec<_> =
                table.modes().iter().filter(|m| m.branch.is_transverse()).collect();
            assert_eq!(transverse.len(), n);
            let norm: f64 = transverse.iter().map(|m| m.s1 * m.s1).sum();
            assert_relative_eq!(norm, 1.0, epsilon = 1e-12);
            assert!(table
                .modes()
                .iter()
                .filter(|m| !m.branch.is_transverse())
                .all(|m| m.s1 == 0.0));
        }
    }

    #[test]
    fn linear_table_soft_mode_at_zone_edge() {
        let p = ChainParams::new(100, 0.1).unwrap();
        let table = linear_mode_table(&p).unwrap();
        let min = table
            .modes()
            .iter()
            .filter(|m| m.branch.is_transverse())
            .map(|m| m.omega)
            .fold(f64::INFINITY, f64::min);
        assert_relative_eq!(min, transverse_dispersion(PI, p.nu_t(), 100).unwrap());
        assert!((min - 0.9400).abs() < 1e-3, "{min}");
    }

    #[test]
    fn linear_table_unique_keys() {
        let p = ChainParams::new(10, 0.2).unwrap();
        let table = linear_mode_table(&p).unwrap();
        let mut keys: Vec<_> = table.modes().iter().map(|m| (m.branch.as_str(), m.k_index)).collect();
        keys.sort();
        let len = keys.len();
        keys.dedup();
        assert_eq!(keys.len(), len);
    }

    #[test]
    fn wrong_phase_errors() {
        let lin = ChainParams::new(10, -0.1).unwrap();
        assert!(matches!(linear_mode_table(&lin), Err(Error::WrongPhase(_))));
        let zz = ChainParams::new(10, 0.1).unwrap();
        assert!(matches!(zigzag_mode_table(&zz), Err(Error::WrongPhase(_))));
    }

    #[test]
    fn linear_hessian_matches_dispersion() {
        let p = ChainParams::new(10, 0.1).unwrap();
        let mut numeric: Vec<f64> = normal_modes(&p, 0.0).unwrap().iter().map(|m| m.omega).collect();
        let mut analytic: Vec<f64> = linear_mode_table(&p).unwrap().modes().iter().map(|m| m.omega).collect();
        numeric.sort_by(f64::total_cmp);
        analytic.sort_by(f64::total_cmp);
        for (a, b) in numeric.iter().zip(&analytic) {
            if *b == 0.0 {
                assert_eq!(*a, 0.0);
            } else {
                assert_relative_eq!(a, b, max_relative = 1e-10);
            }
        }
    }

    #[test]
    fn hessian_matches_finite_differences() {
        let p = ChainParams::new(8, -0.05).unwrap();
        let b = zigzag_equilibrium(&p).unwrap();
        let h = hessian(&p, b);
        let mut base = Vec::with_capacity(16);
        for j in 0..8 {
            base.push(0.0);
            base.push(stagger(j, b));
        }
        let step = 1e-4;
        let e = |c: &[f64]| ring_energy(&p, c).unwrap();
        for (a, c) in [(0, 0), (1, 1), (0, 3), (1, 3), (5, 9), (2, 15)] {
            let mut pp = base.clone();
            pp[a] += step;
            pp[c] += step;
            let mut pm = base.clone();
            pm[a] += step;
            pm[c] -= step;
            let mut mp = base.clone();
            mp[a] -= step;
            mp[c] += step;
            let mut mm = base.clone();
            mm[a] -= step;
            mm[c] -= step;
            let fd = (e(&pp) - e(&pm) - e(&mp) + e(&mm)) / (4.0 * step * step);
            assert!((fd - h[(a, c)]).abs() < 1e-5, "({a},{c}): {fd} vs {}", h[(a, c)]);
        }
    }

    #[test]
    fn zigzag_offset_vanishes_at_transition() {
        let p = ChainParams::new(100, 0.0).unwrap();
        assert_eq!(zigzag_equilibrium(&p).unwrap(), 0.0);
        let p = ChainParams::new(100, 0.05).unwrap();
        assert_eq!(zigzag_equilibrium(&p).unwrap(), 0.0);
    }

    #[test]
    fn zigzag_offset_lowers_energy() {
        for delta in [-1e-4, -1e-2, -0.1] {
            let p = ChainParams::new(100, delta).unwrap();
            let b = zigzag_equilibrium(&p).unwrap();
            assert!(b > 0.0);
            let e_star = zigzag_energy_per_ion(&p, b);
            assert!(e_star <= zigzag_energy_per_ion(&p, 0.0));
            assert!(e_star <= zigzag_energy_per_ion(&p, 1.01 * b));
            assert!(e_star <= zigzag_energy_per_ion(&p, 0.99 * b));
        }
    }

    #[test]
    fn zigzag_ansatz_is_stationary_for_all_coordinates() {
        // Gradient of the full 2N-coordinate energy vanishes at the ansatz.
        let p = ChainParams::new(12, -0.03).unwrap();
        let b = zigzag_equilibrium(&p).unwrap();
        let mut base = Vec::new();
        for j in 0..12 {
            base.push(0.0);
            base.push(stagger(j, b));
        }
        let step = 1e-6;
        for c in 0..24 {
            let mut plus = base.clone();
            plus[c] += step;
            let mut minus = base.clone();
            minus[c] -= step;
            let g = (ring_energy(&p, &plus).unwrap() - ring_energy(&p, &minus).unwrap()) / (2.0 * step);
            assert!(g.abs() < 1e-7, "coordinate {c}: {g}");
        }
    }

    #[test]
    fn zigzag_table_has_one_zero_mode_and_unit_norm() {
        for delta in [-1e-5, -1e-3, -0.01, -0.1] {
            let p = ChainParams::new(100, delta).unwrap();
            let table = zigzag_mode_table(&p).unwrap();
            assert_eq!(table.len(), 200);
            let zeros = table.modes().iter().filter(|m| m.omega == 0.0).count();
            assert_eq!(zeros, 1, "delta = {delta}");
            let norm: f64 = table.modes().iter().map(|m| m.s1 * m.s1).sum();
            assert_relative_eq!(norm, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn zigzag_spectrum_joins_linear_spectrum_at_transition() {
        let zz = zigzag_mode_table(&ChainParams::new(100, -1e-4).unwrap()).unwrap();
        let lin = linear_mode_table(&ChainParams::new(100, 1e-4).unwrap()).unwrap();
        let mut a: Vec<f64> = zz.modes().iter().map(|m| m.omega).collect();
        let mut b: Vec<f64> = lin.modes().iter().map(|m| m.omega).collect();
        a.sort_by(f64::total_cmp);
        b.sort_by(f64::total_cmp);
        let scale = lin.omega_max();
        let gap = a.iter().zip(&b).map(|(x, y)| (x - y).abs() / scale).fold(0.0, f64::max);
        assert!(gap < 0.01, "max relative gap {gap}");
    }
}
