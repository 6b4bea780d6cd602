//! Exact simulation of the Ramsey protocol for a few modes in a truncated
//! Fock space.
//!
//! The protocol is `U = P(-pi/4) F(t) P(pi/4)` with the instantaneous pulse
//! `P(theta) = cos(theta) - i sin(theta) X`, `X = s+ (x) Dm + s- (x) Dm^dag`,
//! where `Dm` is the product of single-mode displacements and `F(t)` is free
//! evolution of the modes in the frame rotating with the spin. On the
//! truncated space `Dm` is built as the exponential of the truncated
//! generator, so it is exactly unitary, `X^2 = 1` and the pulse formula is
//! exact.
//!
//! Spin blocks of `U` (`c = s = 1/sqrt 2`):
//!
//! ```text
//! U_ee = c^2 F + s^2 Dm F Dm^dag        U_eg = i c s (Dm F - F Dm)
//! U_gg = c^2 F + s^2 Dm^dag F Dm        U_ge = i c s (Dm^dag F - F Dm^dag)
//! ```
//!
//! Every term is a tensor product over modes and the environment starts in a
//! product of diagonal thermal states, so the partial trace factorises into
//! per-mode traces `tr(X rho_j Y^dag)`. [`Oracle`] uses that factorisation; the
//! dense functions at the bottom build the full matrices and exist to check
//! it on small spaces.

use alloc::{format, vec, vec::Vec};
use core::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{DMatrix, Matrix2, SymmetricEigen};
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;
use serde::Serialize;

use crate::blp::BlochPair;
use crate::dephasing::{CouplingSet, ThermalKernel, XiReading};
use crate::{Error, Result};

pub const MAX_MODES: usize = 4;
pub const DEFAULT_N_MAX: usize = 10;
/// Largest admissible per-mode cutoff.
pub const MAX_N_MAX: usize = 200;
/// Bound on the unnormalised thermal weight beyond the cutoff.
pub const THERMAL_TAIL: f64 = 1e-6;
/// Thermally weighted probability allowed to leak past the cutoff.
pub const LEAKAGE_TOLERANCE: f64 = 1e-6;
/// Largest full spin-plus-environment dimension for the dense path.
pub const MAX_DENSE_DIM: usize = 600;

type C = Complex64;

const ZERO: C = C::new(0.0, 0.0);
const ONE: C = C::new(1.0, 0.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleMode {
    pub omega: f64,
    pub alpha: C,
}

/// Modes of the environment and their Fock cutoffs. Mode `j` keeps the
/// levels `0..=n_max[j]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FockConfig {
    modes: Vec<OracleMode>,
    n_max: Vec<usize>,
}

/// `exp(-x (n_max + 1)) / (1 - exp(-x))` with `x = beta omega`: the thermal
/// weight discarded by the cutoff, relative to the ground state.
pub fn thermal_tail(omega: f64, beta: f64, n_max: usize) -> f64 {
    if beta.is_infinite() {
        return 0.0;
    }
    let x = beta * omega;
    (-x * (n_max as f64 + 1.0)).exp() / -(-x).exp_m1()
}

/// `max(10, n_tail + 4 ceil|alpha|)`, with `n_tail` the smallest cutoff whose
/// thermal tail is below [`THERMAL_TAIL`].
pub fn auto_cutoff(omega: f64, alpha_abs: f64, beta: f64) -> usize {
    let mut n_tail = 0;
    while thermal_tail(omega, beta, n_tail) >= THERMAL_TAIL {
        n_tail += 1;
    }
    DEFAULT_N_MAX.max(n_tail + 4 * alpha_abs.ceil() as usize)
}

impl FockConfig {
    pub fn new(modes: Vec<OracleMode>, n_max: Vec<usize>) -> Result<Self> {
        if modes.len() != n_max.len() {
            return Err(Error::DimensionMismatch {
                left: modes.len(),
                right: n_max.len(),
            });
        }
        if modes.len() > MAX_MODES {
            return Err(Error::ResourceLimit(format!(
                "{} modes requested, at most {MAX_MODES} supported",
                modes.len()
            )));
        }
        if let Some(&n) = n_max.iter().find(|&&n| n == 0 || n > MAX_N_MAX) {
            return Err(Error::ResourceLimit(format!("cutoff {n} outside 1..={MAX_N_MAX}")));
        }
        for m in &modes {
            if !(m.omega > 0.0 && m.omega.is_finite()) || !(m.alpha.re.is_finite() && m.alpha.im.is_finite()) {
                return Err(Error::InvalidInput(format!("bad oracle mode {m:?}")));
            }
        }
        Ok(Self { modes, n_max })
    }

    /// Cutoffs chosen per mode by [`auto_cutoff`] for inverse temperature
    /// `beta`.
    pub fn auto(modes: Vec<OracleMode>, beta: f64) -> Result<Self> {
        let n_max = modes.iter().map(|m| auto_cutoff(m.omega, m.alpha.norm(), beta)).collect();
        Self::new(modes, n_max)
    }

    /// Modes from a coupling set with `alpha_j = i sqrt(|alpha_j|^2)`, the
    /// phase of a transverse kick.
    pub fn from_couplings(c: &CouplingSet, beta: f64) -> Result<Self> {
        let modes = c
            .entries()
            .iter()
            .map(|e| OracleMode {
                omega: e.omega,
                alpha: C::new(0.0, e.alpha_sq.sqrt()),
            })
            .collect();
        Self::auto(modes, beta)
    }

    pub fn modes(&self) -> &[OracleMode] {
        &self.modes
    }

    pub fn n_max(&self) -> &[usize] {
        &self.n_max
    }

    pub fn n_modes(&self) -> usize {
        self.modes.len()
    }

    /// Environment dimension `prod_j (n_max_j + 1)`.
    pub fn env_dim(&self) -> usize {
        self.n_max.iter().map(|n| n + 1).product()
    }

    /// The same modes as a coupling set, for the closed-form formulas.
    pub fn couplings(&self) -> Result<CouplingSet> {
        CouplingSet::new(
            self.modes
                .iter()
                .map(|m| crate::dephasing::Coupling {
                    omega: m.omega,
                    alpha_sq: m.alpha.norm_sqr(),
                })
                .collect(),
        )
    }

    pub fn check_thermal(&self, beta: f64) -> Result<()> {
        if !(beta > 0.0) {
            return Err(Error::InvalidParameter(format!("beta must be > 0, got {beta}")));
        }
        for (m, &n) in self.modes.iter().zip(&self.n_max) {
            let tail = thermal_tail(m.omega, beta, n);
            if tail >= THERMAL_TAIL {
                return Err(Error::CutoffInsufficient {
                    omega: m.omega,
                    n_max: n,
                    tail,
                });
            }
        }
        Ok(())
    }
}

/// Hermitian, unit-trace, positive semidefinite matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    m: DMatrix<C>,
}

impl DensityMatrix {
    pub fn new(m: DMatrix<C>) -> Result<Self> {
        Self::with_tolerance(m, 1e-10)
    }

    /// Validates with a custom tolerance on trace and positivity; the
    /// Hermiticity tolerance stays at `1e-12`.
    pub fn with_tolerance(m: DMatrix<C>, tol: f64) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::DimensionMismatch {
                left: m.nrows(),
                right: m.ncols(),
            });
        }
        let herm = (&m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if herm > 1e-12 {
            return Err(Error::InvalidInput(format!("not Hermitian: {herm:e}")));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > tol || tr.im.abs() > tol {
            return Err(Error::InvalidInput(format!("trace {tr} differs from 1")));
        }
        let min_eig = hermitian_eigenvalues(&m).iter().copied().fold(f64::INFINITY, f64::min);
        if min_eig < -tol {
            return Err(Error::InvalidInput(format!("negative eigenvalue {min_eig:e}")));
        }
        Ok(Self { m })
    }

    /// `|psi><psi|` for a normalised `psi`.
    pub fn pure(psi: &[C]) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::new(&v * v.adjoint())
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<C> {
        &self.m
    }

    pub fn into_inner(self) -> DMatrix<C> {
        self.m
    }

    pub fn purity(&self) -> f64 {
        (&self.m * &self.m).trace().re
    }
}

fn hermitian_eigenvalues(m: &DMatrix<C>) -> Vec<f64> {
    let sym = (m + m.adjoint()) * C::new(0.5, 0.0);
    SymmetricEigen::new(sym).eigenvalues.iter().copied().collect()
}

/// `D(rho1, rho2) = 1/2 tr|rho1 - rho2|`.
pub fn trace_distance(rho1: &DensityMatrix, rho2: &DensityMatrix) -> Result<f64> {
    if rho1.dim() != rho2.dim() {
        return Err(Error::DimensionMismatch {
            left: rho1.dim(),
            right: rho2.dim(),
        });
    }
    let diff = &rho1.m - &rho2.m;
    Ok(0.5 * hermitian_eigenvalues(&diff).iter().map(|l| l.abs()).sum::<f64>())
}

/// Product of truncated single-mode thermal states, renormalised after
/// truncation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProductThermalState {
    populations: Vec<Vec<f64>>,
}

impl ProductThermalState {
    pub fn populations(&self) -> &[Vec<f64>] {
        &self.populations
    }

    pub fn mean_occupation(&self, mode: usize) -> f64 {
        self.populations[mode].iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Full environment density matrix, first mode slowest.
    pub fn to_dense(&self) -> Result<DensityMatrix> {
        let mut diag = vec![1.0];
        for p in &self.populations {
            diag = diag.iter().flat_map(|a| p.iter().map(move |b| a * b)).collect();
        }
        let d = diag.len();
        DensityMatrix::new(DMatrix::from_fn(d, d, |i, j| if i == j { C::new(diag[i], 0.0) } else { ZERO }))
    }
}

fn populations(omega: f64, beta: f64, n_max: usize) -> Vec<f64> {
    let mut p = vec![0.0; n_max + 1];
    if beta.is_infinite() {
        p[0] = 1.0;
        return p;
    }
    let x = beta * omega;
    for (n, pn) in p.iter_mut().enumerate() {
        *pn = (-x * n as f64).exp();
    }
    let z: f64 = p.iter().sum();
    p.iter_mut().for_each(|pn| *pn /= z);
    p
}

pub fn thermal_state(beta: f64, config: &FockConfig) -> Result<ProductThermalState> {
    config.check_thermal(beta)?;
    Ok(ProductThermalState {
        populations: config
            .modes
            .iter()
            .zip(&config.n_max)
            .map(|(m, &n)| populations(m.omega, beta, n))
            .collect(),
    })
}

/// Annihilation operator on levels `0..dim`.
pub fn ladder(dim: usize) -> DMatrix<C> {
    DMatrix::from_fn(dim, dim, |i, j| if j == i + 1 { C::new((j as f64).sqrt(), 0.0) } else { ZERO })
}

/// `exp(alpha a^dag - alpha^* a)` with the truncated ladder operator; exactly
/// unitary on the truncated space.
pub fn displacement(alpha: C, dim: usize) -> DMatrix<C> {
    let a = ladder(dim);
    let gen = a.adjoint() * alpha - &a * alpha.conj();
    // gen is anti-Hermitian, so i * gen is Hermitian and exp(gen) = exp(-i H).
    let h = gen * C::new(0.0, 1.0);
    let h = (&h + h.adjoint()) * C::new(0.5, 0.0);
    let eig = SymmetricEigen::new(h);
    let v = &eig.eigenvectors;
    let phases = eig.eigenvalues.map(|l| C::new(0.0, -l).exp());
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// Thermally weighted probability that the untruncated displacement moves
/// out of the kept levels: `sum_n p_n sum_{m > n_max} |<m|D|n>|^2`.
pub fn displacement_leakage(alpha: C, populations: &[f64]) -> f64 {
    let n = populations.len();
    let big = 2 * n + 16 + (8.0 * alpha.norm_sqr()).ceil() as usize;
    let d = displacement(alpha, big);
    populations
        .iter()
        .enumerate()
        .map(|(col, p)| p * (n..big).map(|row| d[(row, col)].norm_sqr()).sum::<f64>())
        .sum()
}

struct ModeOps {
    omega: f64,
    d: DMatrix<C>,
    d_dag: DMatrix<C>,
    p: Vec<f64>,
}

// Per-mode operators entering the spin blocks of U.
const OP_F: usize = 0;
const OP_DFDD: usize = 1;
const OP_DF: usize = 2;
const OP_FD: usize = 3;
const OP_DDF: usize = 4;
const OP_FDD: usize = 5;
const OP_DDFD: usize = 6;
const N_OPS: usize = 7;

/// Terms `(coefficient, operator)` of the spin block `U_{ac}`, spin index
/// `0 = e`, `1 = g`.
fn block_terms(a: usize, c: usize) -> [(C, usize); 2] {
    let cc = C::new(0.5, 0.0);
    let ics = C::new(0.0, 0.5);
    match (a, c) {
        (0, 0) => [(cc, OP_F), (cc, OP_DFDD)],
        (0, 1) => [(ics, OP_DF), (-ics, OP_FD)],
        (1, 0) => [(ics, OP_DDF), (-ics, OP_FDD)],
        _ => [(cc, OP_F), (cc, OP_DDFD)],
    }
}

/// Spin channel at one time: `rho_S[a][b] = sum_{c,d} K[a][b][c][d] rho0[c][d]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelKernel {
    k: [[[[C; 2]; 2]; 2]; 2],
}

impl ChannelKernel {
    pub fn apply(&self, rho0: &Matrix2<C>) -> Matrix2<C> {
        Matrix2::from_fn(|a, b| {
            let mut acc = ZERO;
            for c in 0..2 {
                for d in 0..2 {
                    acc += self.k[a][b][c][d] * rho0[(c, d)];
                }
            }
            acc
        })
    }

    /// Trace distance of the evolved pair, in closed form for 2x2 states.
    pub fn pair_distance(&self, pair: &BlochPair) -> f64 {
        let diff = self.apply(&pair.difference());
        let dz = 0.5 * (diff[(0, 0)].re - diff[(1, 1)].re);
        let off = 0.5 * (diff[(0, 1)] + diff[(1, 0)].conj());
        (dz * dz + off.norm_sqr()).sqrt()
    }
}

/// Factorised exact evaluator for one configuration and temperature.
pub struct Oracle {
    ops: Vec<ModeOps>,
    leakage: f64,
}

impl Oracle {
    pub fn new(config: &FockConfig, beta: f64) -> Result<Self> {
        let state = thermal_state(beta, config)?;
        let mut ops = Vec::with_capacity(config.n_modes());
        let mut leakage: f64 = 0.0;
        for ((m, &n), p) in config.modes.iter().zip(&config.n_max).zip(state.populations) {
            let d = displacement(m.alpha, n + 1);
            leakage = leakage.max(displacement_leakage(m.alpha, &p));
            ops.push(ModeOps {
                omega: m.omega,
                d_dag: d.adjoint(),
                d,
                p,
            });
        }
        if leakage > LEAKAGE_TOLERANCE {
            log::warn!("displacement leaks {leakage:e} of the thermal weight past the Fock cutoff");
        }
        Ok(Self { ops, leakage })
    }

    /// Largest per-mode leaked probability.
    pub fn leakage(&self) -> f64 {
        self.leakage
    }

    /// Floating-point work of one [`Oracle::kernel`] call, used to refuse
    /// intractable scans.
    pub fn kernel_cost(&self) -> f64 {
        self.ops
            .iter()
            .map(|o| {
                let n = o.p.len() as f64;
                16.0 * n * n * n + 8.0 * (N_OPS * N_OPS) as f64 * n * n
            })
            .sum()
    }

    pub fn kernel(&self, t: f64) -> ChannelKernel {
        // traces[j][x][y] = tr(X_j rho_j Y_j^dag)
        let traces: Vec<[[C; N_OPS]; N_OPS]> = self.ops.iter().map(|o| mode_traces(o, t)).collect();
        let mut k = [[[[ZERO; 2]; 2]; 2]; 2];
        for (a, ka) in k.iter_mut().enumerate() {
            for (b, kab) in ka.iter_mut().enumerate() {
                for (c, kabc) in kab.iter_mut().enumerate() {
                    for (d, out) in kabc.iter_mut().enumerate() {
                        let mut acc = ZERO;
                        for (lp, x) in block_terms(a, c) {
                            for (lq, y) in block_terms(b, d) {
                                let prod = traces.iter().fold(lp * lq.conj(), |acc, tr| acc * tr[x][y]);
                                acc += prod;
                            }
                        }
                        *out = acc;
                    }
                }
            }
        }
        ChannelKernel { k }
    }
}

fn mode_traces(o: &ModeOps, t: f64) -> [[C; N_OPS]; N_OPS] {
    let n = o.p.len();
    let f: Vec<C> = (0..n).map(|k| C::new(0.0, -o.omega * k as f64 * t).exp()).collect();
    // Right multiplication by diag(f) scales columns, left multiplication rows.
    let scale_cols = |m: &DMatrix<C>| DMatrix::from_fn(n, n, |i, j| m[(i, j)] * f[j]);
    let scale_rows = |m: &DMatrix<C>| DMatrix::from_fn(n, n, |i, j| f[i] * m[(i, j)]);
    let fm = DMatrix::from_fn(n, n, |i, j| if i == j { f[i] } else { ZERO });
    let df = scale_cols(&o.d);
    let ddf = scale_cols(&o.d_dag);
    let mats: [DMatrix<C>; N_OPS] = [
        fm,
        &df * &o.d_dag,
        df.clone(),
        scale_rows(&o.d),
        ddf.clone(),
        scale_rows(&o.d_dag),
        &ddf * &o.d,
    ];
    let mut out = [[ZERO; N_OPS]; N_OPS];
    for x in 0..N_OPS {
        // X rho with rho = diag(p): scale columns by p.
        let xr = DMatrix::from_fn(n, n, |i, j| mats[x][(i, j)] * o.p[j]);
        for y in 0..N_OPS {
            out[x][y] = xr.iter().zip(mats[y].iter()).map(|(u, v)| u * v.conj()).sum();
        }
    }
    out
}

fn ket(theta: f64, phi: f64) -> [C; 2] {
    let (s, c) = (0.5 * theta).sin_cos();
    [C::new(c, 0.0), C::from_polar(s, phi)]
}

fn projector(psi: [C; 2]) -> Matrix2<C> {
    Matrix2::from_fn(|i, j| psi[i] * psi[j].conj())
}

fn matrix2_to_density(m: Matrix2<C>) -> Result<DensityMatrix> {
    let d = DMatrix::from_fn(2, 2, |i, j| m[(i, j)]);
    // Symmetrise away rounding before validation.
    let d = (&d + d.adjoint()) * C::new(0.5, 0.0);
    DensityMatrix::with_tolerance(d, 1e-9)
}

/// Spin state after the protocol for the initial state
/// `cos(theta/2)|e> + e^{i phi} sin(theta/2)|g>`.
pub fn reduced_state(theta: f64, phi: f64, beta: f64, config: &FockConfig, t: f64) -> Result<DensityMatrix> {
    if !(theta.is_finite() && phi.is_finite()) {
        return Err(Error::InvalidParameter("Bloch angles must be finite".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("t must be >= 0, got {t}")));
    }
    let kernel = Oracle::new(config, beta)?.kernel(t);
    matrix2_to_density(kernel.apply(&projector(ket(theta, phi))))
}

/// Largest deviation between the exact and the closed-form trace distance
/// of the `|+>, |->` pair over a time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Comparison {
    pub max_deviation: f64,
    pub time: f64,
}

pub fn compare_analytic(beta: f64, config: &FockConfig, times: &[f64]) -> Result<Comparison> {
    compare_analytic_with(beta, config, times, XiReading::Adopted)
}

pub fn compare_analytic_with(
    beta: f64,
    config: &FockConfig,
    times: &[f64],
    reading: XiReading,
) -> Result<Comparison> {
    let oracle = Oracle::new(config, beta)?;
    let analytic = ThermalKernel::with_reading(&config.couplings()?, beta, reading)?;
    let pair = BlochPair::SIGMA_X;
    let mut worst = Comparison {
        max_deviation: 0.0,
        time: times.first().copied().unwrap_or(0.0),
    };
    for &t in times {
        let dev = (oracle.kernel(t).pair_distance(&pair) - analytic.optimal_trace_distance(t)).abs();
        if dev > worst.max_deviation {
            worst = Comparison { max_deviation: dev, time: t };
        }
    }
    Ok(worst)
}

// Dense path.

fn check_dense(config: &FockConfig) -> Result<usize> {
    let dim = 2 * config.env_dim();
    if dim > MAX_DENSE_DIM {
        return Err(Error::ResourceLimit(format!(
            "dense protocol dimension {dim} exceeds {MAX_DENSE_DIM}"
        )));
    }
    Ok(dim)
}

fn kron_all(factors: impl Iterator<Item = DMatrix<C>>) -> DMatrix<C> {
    factors.fold(DMatrix::from_element(1, 1, ONE), |acc, m| acc.kronecker(&m))
}

/// `exp(-i sign pi/4 X)` on spin (x) environment, spin index slowest.
pub fn pulse_unitary(config: &FockConfig, sign: f64) -> Result<DMatrix<C>> {
    check_dense(config)?;
    let dm = kron_all(
        config
            .modes
            .iter()
            .zip(&config.n_max)
            .map(|(m, &n)| displacement(m.alpha, n + 1)),
    );
    let e = dm.nrows();
    let mut x = DMatrix::<C>::zeros(2 * e, 2 * e);
    x.view_mut((0, e), (e, e)).copy_from(&dm);
    x.view_mut((e, 0), (e, e)).copy_from(&dm.adjoint());
    let id = DMatrix::<C>::identity(2 * e, 2 * e);
    Ok(id * C::new(FRAC_1_SQRT_2, 0.0) - x * C::new(0.0, sign * FRAC_1_SQRT_2))
}

/// Free evolution of the modes, identity on the spin.
pub fn free_evolution(config: &FockConfig, t: f64) -> Result<DMatrix<C>> {
    check_dense(config)?;
    let f = kron_all(config.modes.iter().zip(&config.n_max).map(|(m, &n)| {
        DMatrix::from_fn(n + 1, n + 1, |i, j| {
            if i == j {
                C::new(0.0, -m.omega * i as f64 * t).exp()
            } else {
                ZERO
            }
        })
    }));
    Ok(DMatrix::<C>::identity(2, 2).kronecker(&f))
}

pub fn protocol_unitary(config: &FockConfig, t: f64) -> Result<DMatrix<C>> {
    Ok(pulse_unitary(config, -1.0)? * free_evolution(config, t)? * pulse_unitary(config, 1.0)?)
}

/// [`reduced_state`] computed with full matrices.
pub fn dense_reduced_state(theta: f64, phi: f64, beta: f64, config: &FockConfig, t: f64) -> Result<DensityMatrix> {
    let u = protocol_unitary(config, t)?;
    let env = thermal_state(beta, config)?.to_dense()?.into_inner();
    let psi = projector(ket(theta, phi));
    let spin = DMatrix::from_fn(2, 2, |i, j| psi[(i, j)]);
    let rho = &u * spin.kronecker(&env) * u.adjoint();
    let e = env.nrows();
    let rs = Matrix2::from_fn(|a, b| (0..e).map(|k| rho[(a * e + k, b * e + k)]).sum());
    matrix2_to_density(rs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dephasing::{optimal_trace_distance, visibility};
    use approx::assert_relative_eq;
    use core::f64::consts::PI;

    fn one_mode(omega: f64, alpha: C, n_max: usize) -> FockConfig {
        FockConfig::new(vec![OracleMode { omega, alpha }], vec![n_max]).unwrap()
    }

    fn two_modes() -> FockConfig {
        FockConfig::new(
            vec![
                OracleMode { omega: 0.9, alpha: C::new(0.0, 0.3) },
                OracleMode { omega: 1.7, alpha: C::new(0.1, -0.2) },
            ],
            vec![7, 6],
        )
        .unwrap()
    }

    fn max_abs(m: &DMatrix<C>) -> f64 {
        m.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn displacement_is_unitary_and_matches_coherent_state() {
        let alpha = C::new(0.3, -0.4);
        let d = displacement(alpha, 40);
        let id = DMatrix::<C>::identity(40, 40);
        assert!(max_abs(&(d.adjoint() * &d - id)) < 1e-12);
        // <n|D|0> = e^{-|a|^2/2} a^n / sqrt(n!)
        let mut coef = C::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
        for n in 0..10 {
            assert!((d[(n, 0)] - coef).norm() < 1e-12, "n = {n}");
            coef = coef * alpha / ((n + 1) as f64).sqrt();
        }
    }

    #[test]
    fn leakage_small_for_generous_cutoff() {
        let p = populations(1.0, f64::INFINITY, 10);
        assert!(displacement_leakage(C::new(0.0, 0.1), &p) < 1e-12);
        let p = populations(1.0, 0.3, 10);
        assert!(displacement_leakage(C::new(0.0, 1.0), &p) > 1e-6);
    }

    #[test]
    fn thermal_state_limits() {
        let cfg = one_mode(1.0, ZERO, 10);
        let st = thermal_state(f64::INFINITY, &cfg).unwrap();
        assert_eq!(st.populations()[0][0], 1.0);
        assert!(st.populations()[0][1..].iter().all(|&p| p == 0.0));

        let ln2 = 2.0_f64.ln();
        let cfg = one_mode(1.0, ZERO, auto_cutoff(1.0, 0.0, ln2));
        let st = thermal_state(ln2, &cfg).unwrap();
        let p = &st.populations()[0];
        assert!((p[0] - 0.5).abs() < 1e-6);
        for n in 1..p.len() {
            assert_relative_eq!(p[n] / p[n - 1], 0.5, max_relative = 1e-12);
        }
        assert_relative_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn mean_occupation_is_bose() {
        for beta in [0.2, 0.7, 2.0] {
            let omega = 1.3;
            let cfg = FockConfig::auto(vec![OracleMode { omega, alpha: ZERO }], beta).unwrap();
            let st = thermal_state(beta, &cfg).unwrap();
            let bose = 1.0 / (beta * omega).exp_m1();
            assert!((st.mean_occupation(0) - bose).abs() < 1e-4 * (1.0 + bose), "beta {beta}");
        }
    }

    #[test]
    fn cutoff_too_small_is_rejected() {
        let cfg = one_mode(1.0, ZERO, 10);
        assert!(matches!(thermal_state(0.5, &cfg), Err(Error::CutoffInsufficient { .. })));
    }

    #[test]
    fn too_many_modes_is_a_resource_error() {
        let modes = vec![OracleMode { omega: 1.0, alpha: ZERO }; 5];
        assert!(matches!(FockConfig::new(modes, vec![3; 5]), Err(Error::ResourceLimit(_))));
    }

    #[test]
    fn dense_protocol_is_unitary_and_identity_at_zero() {
        let cfg = two_modes();
        let dim = 2 * cfg.env_dim();
        let id = DMatrix::<C>::identity(dim, dim);
        let u = protocol_unitary(&cfg, 3.1).unwrap();
        assert!(max_abs(&(u.adjoint() * &u - &id)) < 1e-9);
        let u0 = protocol_unitary(&cfg, 0.0).unwrap();
        assert!(max_abs(&(u0 - &id)) < 1e-10);
    }

    #[test]
    fn dense_and_factorised_paths_agree() {
        let cfg = two_modes();
        for (beta, t) in [(f64::INFINITY, 2.3), (3.0, 0.7), (3.0, 11.0)] {
            for (theta, phi) in [(0.0, 0.0), (PI / 2.0, 0.0), (1.1, 2.5)] {
                let a = reduced_state(theta, phi, beta, &cfg, t).unwrap();
                let b = dense_reduced_state(theta, phi, beta, &cfg, t).unwrap();
                assert!(max_abs(&(a.matrix() - b.matrix())) < 1e-12, "beta {beta}, t {t}");
            }
        }
    }

    #[test]
    fn reduced_state_is_a_state() {
        let cfg = two_modes();
        for t in [0.0, 1.0, 5.5, 30.0] {
            let r = reduced_state(0.8, 1.9, 3.0, &cfg, t).unwrap();
            assert!((r.matrix().trace().re - 1.0).abs() < 1e-9);
            assert!(r.purity() <= 1.0 + 1e-12);
        }
        let r0 = reduced_state(0.8, 1.9, 3.0, &cfg, 0.0).unwrap();
        let psi = ket(0.8, 1.9);
        let target = DensityMatrix::pure(&psi).unwrap();
        assert!(max_abs(&(r0.matrix() - target.matrix())) < 1e-12);
    }

    #[test]
    fn decoupled_modes_leave_spin_untouched() {
        let cfg = FockConfig::auto(
            vec![OracleMode { omega: 1.0, alpha: ZERO }, OracleMode { omega: 2.0, alpha: ZERO }],
            0.9,
        )
        .unwrap();
        let start = DensityMatrix::pure(&ket(1.2, 0.4)).unwrap();
        for t in [0.0, 3.3, 40.0] {
            let r = reduced_state(1.2, 0.4, 0.9, &cfg, t).unwrap();
            assert!(max_abs(&(r.matrix() - start.matrix())) < 1e-12);
        }
        let cmp = compare_analytic(0.9, &cfg, &[0.0, 1.0, 2.0]).unwrap();
        assert!(cmp.max_deviation < 1e-15);
    }

    #[test]
    fn single_mode_zero_temperature_coherence() {
        let alpha = C::new(0.0, 0.25);
        let omega = 1.0;
        let cfg = one_mode(omega, alpha, 10);
        let c = cfg.couplings().unwrap();
        for t in [0.5, 1.3, PI, 4.0] {
            // |+> maps to a state whose coherence modulus is V(t).
            let r = reduced_state(PI / 2.0, 0.0, f64::INFINITY, &cfg, t).unwrap();
            let coh = 2.0 * r.matrix()[(0, 1)].norm();
            let m = r.matrix();
            let bloch = ((m[(0, 0)].re - m[(1, 1)].re).powi(2) + (2.0 * m[(0, 1)].norm()).powi(2)).sqrt();
            assert!(bloch <= 1.0 + 1e-12);
            let expected = (-2.0 * alpha.norm_sqr() * (0.5 * omega * t).sin().powi(2)).exp();
            assert!((visibility(t, f64::INFINITY, &c).unwrap() - expected).abs() < 1e-15);
            let d = Oracle::new(&cfg, f64::INFINITY).unwrap().kernel(t).pair_distance(&BlochPair::SIGMA_X);
            let closed = optimal_trace_distance(t, f64::INFINITY, &c).unwrap();
            assert!((d - closed).abs() < 1e-10, "t {t}: {d} vs {closed}");
            assert!(coh <= 1.0);
        }
    }

    #[test]
    fn trace_distance_basics() {
        let e = DensityMatrix::pure(&[ONE, ZERO]).unwrap();
        let g = DensityMatrix::pure(&[ZERO, ONE]).unwrap();
        let h = FRAC_1_SQRT_2;
        let plus = DensityMatrix::pure(&[C::new(h, 0.0), C::new(h, 0.0)]).unwrap();
        let minus = DensityMatrix::pure(&[C::new(h, 0.0), C::new(-h, 0.0)]).unwrap();
        assert!(trace_distance(&e, &e).unwrap().abs() < 1e-15);
        assert_relative_eq!(trace_distance(&e, &g).unwrap(), 1.0, epsilon = 1e-14);
        assert_relative_eq!(trace_distance(&plus, &minus).unwrap(), 1.0, epsilon = 1e-14);
        let big = DensityMatrix::new(DMatrix::identity(3, 3) * C::new(1.0 / 3.0, 0.0)).unwrap();
        assert!(matches!(trace_distance(&e, &big), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn density_matrix_validation() {
        let bad_trace = DMatrix::identity(2, 2);
        assert!(DensityMatrix::new(bad_trace).is_err());
        let not_herm = DMatrix::from_row_slice(2, 2, &[C::new(0.5, 0.0), C::new(0.1, 0.0), ZERO, C::new(0.5, 0.0)]);
        assert!(DensityMatrix::new(not_herm).is_err());
        let negative = DMatrix::from_row_slice(2, 2, &[C::new(1.5, 0.0), ZERO, ZERO, C::new(-0.5, 0.0)]);
        assert!(DensityMatrix::new(negative).is_err());
    }

    #[test]
    fn antipodal_pairs_start_fully_distinguishable() {
        let cfg = two_modes();
        let k = Oracle::new(&cfg, 2.0).unwrap().kernel(0.0);
        for (theta, phi) in [(0.0, 0.0), (0.7, 1.0), (PI / 2.0, 3.0)] {
            let d = k.pair_distance(&BlochPair::new(theta, phi));
            assert!((d - 1.0).abs() < 1e-10);
        }
    }
}
