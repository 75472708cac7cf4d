//! Numerical layer: simulation, Gramians, minimum-energy control and
//! initial-state reconstruction.
//!
//! All decisions (is this chain controllable? observable?) are made
//! upstream in exact arithmetic; this module trusts the [`Verdict`] and
//! never re-decides from floats. Model entries are converted to `f64`
//! once, at the boundary. Integration is classical fixed-step RK4 for
//! reproducible traces.
//!
//! [`Verdict`]: crate::analysis::Verdict

use crate::analysis::decide;
use crate::chain::StateSpaceModel;
use nalgebra::{Cholesky, DMatrix, DVector, RowDVector, SymmetricEigen};
use num_rational::BigRational;
use num_traits::ToPrimitive;
use std::io::{self, Write};
use thiserror::Error;

mod matexp;
mod quarter_car;

pub use matexp::matrix_exponential;
pub use quarter_car::{quarter_car_demo, QuarterCarRun, QuarterCarSpec, RoadProfile};

/// Default integration step (seconds).
pub const DEFAULT_STEP: f64 = 1e-3;
/// Default horizon (seconds).
pub const DEFAULT_HORIZON: f64 = 5.0;
/// Terminal-state tolerance for a steering plan, in the infinity norm
/// after normalizing by `max(1, |z_target|_inf)`.
pub const CONTROL_TOLERANCE: f64 = 1e-4;
/// Relative recovery tolerance for noiseless initial-state reconstruction.
pub const RECONSTRUCTION_TOLERANCE: f64 = 1e-6;
/// A reachability Gramian whose smallest eigenvalue is below this times
/// the largest counts as numerically singular.
pub const GRAMIAN_SINGULAR_RATIO: f64 = 1e-8;
/// Relative diagonal threshold below which the reconstruction regressor
/// counts as rank deficient.
pub const RANK_DEFICIENCY_RTOL: f64 = 1e-8;

/// Errors from the numerical layer.
#[derive(Debug, Error)]
pub enum DynamicsError {
    #[error("step must be positive, finite and no larger than the horizon (step = {step}, horizon = {horizon})")]
    BadStep { step: f64, horizon: f64 },
    #[error("state became non-finite at t = {time}")]
    NonFiniteState { time: f64 },
    #[error("matrix has non-finite entries")]
    NonFinite,
    #[error("chain is not controllable; no steering input exists")]
    NotControllable,
    #[error("chain is not observable; outputs do not determine the state")]
    NotObservable,
    #[error("need at least {needed} samples at distinct times, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("regressor is rank deficient below relative threshold {threshold:e}")]
    RankDeficientRegressor { threshold: f64 },
    #[error("reachability Gramian is numerically singular (condition ~ {condition:e})")]
    IllConditionedGramian { condition: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("expected a state vector of length {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
}

/// Float view of an exact model.
pub(crate) struct FloatModel {
    pub f: DMatrix<f64>,
    pub g: DVector<f64>,
    pub h: RowDVector<f64>,
}

impl FloatModel {
    pub fn new(model: &StateSpaceModel) -> Result<Self, DynamicsError> {
        let dim = model.dim();
        let mut f = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            for j in 0..dim {
                f[(i, j)] = to_f64(model.f_matrix().at(i, j))?;
            }
        }
        let g = DVector::from_iterator(
            dim,
            model
                .g_vector()
                .iter()
                .map(to_f64)
                .collect::<Result<Vec<_>, _>>()?,
        );
        let h = RowDVector::from_iterator(
            dim,
            model
                .h_vector()
                .iter()
                .map(to_f64)
                .collect::<Result<Vec<_>, _>>()?,
        );
        Ok(Self { f, g, h })
    }
}

fn to_f64(r: &BigRational) -> Result<f64, DynamicsError> {
    r.to_f64()
        .filter(|x| x.is_finite())
        .ok_or(DynamicsError::NonFinite)
}

/// Number of RK4 steps for the requested horizon; the realized horizon is
/// `steps * step`, the nearest grid multiple.
pub(crate) fn grid_steps(horizon: f64, step: f64) -> Result<usize, DynamicsError> {
    if !step.is_finite() || !horizon.is_finite() || step <= 0.0 || horizon < step {
        return Err(DynamicsError::BadStep { step, horizon });
    }
    Ok(((horizon / step).round() as usize).max(1))
}

/// Classical RK4 over `n_steps` fixed steps, recording every node.
pub(crate) fn rk4_states(
    z0: DVector<f64>,
    deriv: &dyn Fn(f64, &DVector<f64>) -> DVector<f64>,
    n_steps: usize,
    step: f64,
) -> Result<Vec<DVector<f64>>, DynamicsError> {
    if z0.iter().any(|v| !v.is_finite()) {
        return Err(DynamicsError::NonFiniteState { time: 0.0 });
    }
    let mut states = Vec::with_capacity(n_steps + 1);
    let mut y = z0;
    states.push(y.clone());
    for j in 0..n_steps {
        let t = j as f64 * step;
        let half = 0.5 * step;
        let k1 = deriv(t, &y);
        let k2 = deriv(t + half, &(&y + &k1 * half));
        let k3 = deriv(t + half, &(&y + &k2 * half));
        let k4 = deriv(t + step, &(&y + &k3 * step));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState {
                time: (j + 1) as f64 * step,
            });
        }
        states.push(y.clone());
    }
    Ok(states)
}

/// A time-sampled record of states, outputs and inputs on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub outputs: Vec<f64>,
    pub inputs: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn terminal_state(&self) -> &[f64] {
        self.states.last().expect("trajectory has at least one node")
    }

    /// Writes `t,z1..z2N,y,u` rows.
    pub fn to_csv<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        let dim = self.states.first().map_or(0, Vec::len);
        write!(out, "t")?;
        for i in 1..=dim {
            write!(out, ",z{i}")?;
        }
        writeln!(out, ",y,u")?;
        for j in 0..self.len() {
            write!(out, "{}", self.times[j])?;
            for v in &self.states[j] {
                write!(out, ",{v}")?;
            }
            writeln!(out, ",{},{}", self.outputs[j], self.inputs[j])?;
        }
        Ok(())
    }
}

/// Integrates `zdot = F z + g u(t)` with classical RK4 on a fixed grid;
/// the output sequence is the position of the last mass at each node.
pub fn simulate(
    model: &StateSpaceModel,
    z0: &[f64],
    input: impl Fn(f64) -> f64,
    horizon: f64,
    step: f64,
) -> Result<Trajectory, DynamicsError> {
    let dim = model.dim();
    if z0.len() != dim {
        return Err(DynamicsError::DimensionMismatch {
            expected: dim,
            got: z0.len(),
        });
    }
    let n_steps = grid_steps(horizon, step)?;
    let fm = FloatModel::new(model)?;
    let deriv = |t: f64, y: &DVector<f64>| &fm.f * y + &fm.g * input(t);
    let states = rk4_states(DVector::from_column_slice(z0), &deriv, n_steps, step)?;

    let out_index = model.n_masses() - 1;
    let times: Vec<f64> = (0..=n_steps).map(|j| j as f64 * step).collect();
    let outputs = states.iter().map(|s| s[out_index]).collect();
    let inputs = times.iter().map(|&t| input(t)).collect();
    Ok(Trajectory {
        times,
        states: states.into_iter().map(|s| s.iter().copied().collect()).collect(),
        outputs,
        inputs,
    })
}

/// The finite-horizon reachability Gramian
/// `W(T) = integral of e^{F tau} g g^T e^{F^T tau} d tau` over `[0, T]`,
/// obtained by RK4 quadrature of `Wdot = F W + W F^T + g g^T`, `W(0) = 0`.
/// Symmetric positive semidefinite; positive definite exactly when the
/// chain is controllable. (`F` has a double eigenvalue at zero, so only
/// the finite-horizon Gramian makes sense here.)
pub fn reachability_gramian(
    model: &StateSpaceModel,
    horizon: f64,
    step: f64,
) -> Result<DMatrix<f64>, DynamicsError> {
    let n_steps = grid_steps(horizon, step)?;
    let fm = FloatModel::new(model)?;
    let ggt = &fm.g * fm.g.transpose();
    let ft = fm.f.transpose();
    let deriv = |w: &DMatrix<f64>| &fm.f * w + w * &ft + &ggt;

    let dim = model.dim();
    let mut w = DMatrix::<f64>::zeros(dim, dim);
    for j in 0..n_steps {
        let k1 = deriv(&w);
        let k2 = deriv(&(&w + &k1 * (0.5 * step)));
        let k3 = deriv(&(&w + &k2 * (0.5 * step)));
        let k4 = deriv(&(&w + &k3 * step));
        w += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (step / 6.0);
        if w.iter().any(|v| !v.is_finite()) {
            return Err(DynamicsError::NonFiniteState {
                time: (j + 1) as f64 * step,
            });
        }
    }
    // round-off symmetrization
    Ok((&w + &w.transpose()) * 0.5)
}

/// A steering input on a uniform grid, interpreted piecewise-linearly.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlPlan {
    /// Realized horizon `T` (a grid multiple of `step`).
    pub horizon: f64,
    pub step: f64,
    /// Input samples at `t_j = j * step`, `j = 0..=n`.
    pub samples: Vec<f64>,
    pub initial_state: Vec<f64>,
    pub target_state: Vec<f64>,
    /// Eigenvalue ratio of the Gramian that produced the plan.
    pub gramian_condition: f64,
}

impl ControlPlan {
    /// Piecewise-linear evaluation of the input, clamped to the grid.
    pub fn input(&self, t: f64) -> f64 {
        let n = self.samples.len() - 1;
        let x = (t / self.step).clamp(0.0, n as f64);
        let i = (x.floor() as usize).min(n - 1);
        let frac = x - i as f64;
        self.samples[i] * (1.0 - frac) + self.samples[i + 1] * frac
    }

    /// The L2 cost `integral u^2 dt` of the sampled input (trapezoid rule).
    pub fn energy(&self) -> f64 {
        let mut acc = 0.0;
        for w in self.samples.windows(2) {
            acc += 0.5 * (w[0] * w[0] + w[1] * w[1]) * self.step;
        }
        acc
    }

    /// Writes `t,u` rows.
    pub fn to_csv<W: Write + ?Sized>(&self, out: &mut W) -> io::Result<()> {
        writeln!(out, "t,u")?;
        for (j, u) in self.samples.iter().enumerate() {
            writeln!(out, "{},{u}", j as f64 * self.step)?;
        }
        Ok(())
    }
}

/// Synthesizes the minimum-energy input steering `z0` to `z_target` over
/// the horizon:
///
/// ```text
/// u(t) = g^T e^{F^T (T - t)} W(T)^{-1} (z_target - e^{F T} z0)
/// ```
///
/// sampled on the integration grid. Requires an exactly controllable
/// chain (checked through the exact verdict, never from floats). The
/// Gramian eigenvalue ratio is reported on the plan; a Gramian that is
/// not numerically positive definite is an error.
pub fn min_energy_control(
    model: &StateSpaceModel,
    z0: &[f64],
    z_target: &[f64],
    horizon: f64,
    step: f64,
) -> Result<ControlPlan, DynamicsError> {
    let dim = model.dim();
    for v in [z0, z_target] {
        if v.len() != dim {
            return Err(DynamicsError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
    }
    if !decide(model.spec()).controllable_observable {
        return Err(DynamicsError::NotControllable);
    }
    let n_steps = grid_steps(horizon, step)?;
    let t_final = n_steps as f64 * step;
    let fm = FloatModel::new(model)?;

    let w = reachability_gramian(model, t_final, step)?;
    let eig = SymmetricEigen::new(w.clone());
    let max_eig = eig.eigenvalues.iter().fold(0.0f64, |a, &b| a.max(b.abs()));
    let min_eig = eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b.abs()));
    let condition = if min_eig > 0.0 {
        max_eig / min_eig
    } else {
        f64::INFINITY
    };
    let chol = Cholesky::new(w).ok_or(DynamicsError::IllConditionedGramian { condition })?;

    let reach_gap = DVector::from_column_slice(z_target)
        - matrix_exponential(&fm.f, t_final)? * DVector::from_column_slice(z0);
    let eta = chol.solve(&reach_gap);

    // u(t_j) = (e^{F (T - t_j)} g) . eta, swept backward with one
    // per-step transition matrix so only forward exponentials appear.
    let phi = matrix_exponential(&fm.f, step)?;
    let mut samples = vec![0.0; n_steps + 1];
    let mut q = fm.g.clone();
    samples[n_steps] = q.dot(&eta);
    for j in (0..n_steps).rev() {
        q = &phi * q;
        samples[j] = q.dot(&eta);
    }

    Ok(ControlPlan {
        horizon: t_final,
        step,
        samples,
        initial_state: z0.to_vec(),
        target_state: z_target.to_vec(),
        gramian_condition: condition,
    })
}

/// Re-simulates a plan from its initial state with the plan's own grid.
pub fn simulate_plan(
    model: &StateSpaceModel,
    plan: &ControlPlan,
) -> Result<Trajectory, DynamicsError> {
    simulate(
        model,
        &plan.initial_state,
        |t| plan.input(t),
        plan.horizon,
        plan.step,
    )
}

/// A least-squares initial-state estimate and its fit quality.
#[derive(Debug, Clone, PartialEq)]
pub struct Reconstruction {
    pub initial_state: Vec<f64>,
    /// Euclidean norm of the output residual `|A z0 - y|`.
    pub residual: f64,
    /// Whether the residual is consistent with the declared noise floor.
    pub within_noise_floor: bool,
}

/// Recovers the initial state from output samples of the unforced chain:
/// solves `y_j = h e^{F t_j} z0` in the least-squares sense by
/// column-pivoted QR. Requires an exactly observable chain and at least
/// `2N` samples at distinct times.
pub fn reconstruct_initial_state(
    model: &StateSpaceModel,
    samples: &[(f64, f64)],
    noise_floor: f64,
) -> Result<Reconstruction, DynamicsError> {
    if !decide(model.spec()).controllable_observable {
        return Err(DynamicsError::NotObservable);
    }
    let dim = model.dim();
    let mut times: Vec<f64> = samples.iter().map(|&(t, _)| t).collect();
    times.sort_by(|a, b| a.total_cmp(b));
    times.dedup();
    if times.len() < dim {
        return Err(DynamicsError::InsufficientSamples {
            needed: dim,
            got: times.len(),
        });
    }

    let fm = FloatModel::new(model)?;
    let mut regressor = DMatrix::<f64>::zeros(samples.len(), dim);
    let mut rhs = DVector::<f64>::zeros(samples.len());
    for (row, &(t, y)) in samples.iter().enumerate() {
        let obs_row = &fm.h * matrix_exponential(&fm.f, t)?;
        regressor.row_mut(row).copy_from(&obs_row);
        rhs[row] = y;
    }

    let (z0, residual) = least_squares(&regressor, &rhs, RANK_DEFICIENCY_RTOL)?;
    let scale = rhs.amax().max(1.0);
    Ok(Reconstruction {
        initial_state: z0.iter().copied().collect(),
        residual,
        within_noise_floor: residual <= noise_floor * scale,
    })
}

/// Least squares `min |a x - b|` via column-pivoted QR with a relative
/// rank threshold on the R diagonal.
pub(crate) fn least_squares(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    rtol: f64,
) -> Result<(DVector<f64>, f64), DynamicsError> {
    let ncols = a.ncols();
    let qr = a.clone().col_piv_qr();
    let (q, r, p) = qr.unpack();

    let diag_max = (0..ncols).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
    if (0..ncols).any(|i| r[(i, i)].abs() < rtol * diag_max) || diag_max == 0.0 {
        return Err(DynamicsError::RankDeficientRegressor { threshold: rtol });
    }

    let qtb = q.transpose() * b;
    let mut x = DVector::<f64>::zeros(ncols);
    for i in (0..ncols).rev() {
        let mut acc = qtb[i];
        for j in i + 1..ncols {
            acc -= r[(i, j)] * x[j];
        }
        x[i] = acc / r[(i, i)];
    }
    // a * P = Q R, so undo the column permutation
    p.inv_permute_rows(&mut x);
    let residual = (a * &x - b).norm();
    Ok((x, residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::make_counterexample_n3;
    use crate::chain::ChainSpec;
    use num_bigint::BigInt;

    fn rat(n: i64, d: i64) -> BigRational {
        BigRational::new(BigInt::from(n), BigInt::from(d))
    }

    fn unit_chain(n: usize) -> ChainSpec {
        ChainSpec::from_ints(&vec![1; n], &vec![1; n - 1], &vec![1; n - 1]).unwrap()
    }

    fn counterexample_spec() -> ChainSpec {
        make_counterexample_n3(
            &[rat(1, 1), rat(1, 1), rat(1, 1)],
            &rat(1, 1),
            &rat(1, 1),
            &rat(1, 1),
        )
        .unwrap()
        .spec()
        .clone()
    }

    #[test]
    fn equilibrium_stays_put() {
        let model = unit_chain(3).to_state_space();
        let z0 = [1.0, 1.0, 1.0, 0.0, 0.0, 0.0];
        let traj = simulate(&model, &z0, |_| 0.0, 1.0, 1e-2).unwrap();
        for state in &traj.states {
            for (a, b) in state.iter().zip(&z0) {
                assert!((a - b).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn rigid_drift_under_double_zero_eigenvalue() {
        let model = unit_chain(2).to_state_space();
        let v = 0.5;
        let traj = simulate(&model, &[0.0, 0.0, v, v], |_| 0.0, 2.0, 1e-3).unwrap();
        let end = traj.terminal_state();
        assert!((end[0] - v * 2.0).abs() < 1e-10);
        assert!((end[1] - v * 2.0).abs() < 1e-10);
        assert!((end[2] - v).abs() < 1e-12);
        assert!((end[3] - v).abs() < 1e-12);
    }

    #[test]
    fn momentum_is_conserved_without_input() {
        let spec = ChainSpec::from_ints(&[2, 3, 5], &[1, 4], &[1, 0]).unwrap();
        let model = spec.to_state_space();
        let z0 = [0.3, -0.2, 0.1, 0.4, -1.0, 0.2];
        let traj = simulate(&model, &z0, |_| 0.0, 3.0, 1e-3).unwrap();
        let masses = [2.0, 3.0, 5.0];
        let momentum = |s: &[f64]| (0..3).map(|i| masses[i] * s[3 + i]).sum::<f64>();
        let p0 = momentum(&z0);
        for s in &traj.states {
            let rel = (momentum(s) - p0).abs() / p0.abs().max(1.0);
            assert!(rel < 1e-10, "momentum drift {rel}");
        }
    }

    #[test]
    fn momentum_rate_equals_applied_force() {
        let model = unit_chain(2).to_state_space();
        let traj = simulate(&model, &[0.0; 4], |t: f64| t.sin(), 2.0, 1e-3).unwrap();
        let end = traj.terminal_state();
        let momentum = end[2] + end[3];
        let impulse = 1.0 - 2.0f64.cos(); // integral of sin over [0, 2]
        assert!((momentum - impulse).abs() < 1e-9);
    }

    #[test]
    fn bad_steps_are_rejected() {
        let model = unit_chain(2).to_state_space();
        assert!(matches!(
            simulate(&model, &[0.0; 4], |_| 0.0, 0.0, 1e-3),
            Err(DynamicsError::BadStep { .. })
        ));
        assert!(matches!(
            simulate(&model, &[0.0; 4], |_| 0.0, 1.0, -1.0),
            Err(DynamicsError::BadStep { .. })
        ));
        assert!(matches!(
            simulate(&model, &[0.0; 3], |_| 0.0, 1.0, 1e-3),
            Err(DynamicsError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn gramian_is_positive_definite_for_controllable_chain() {
        // the horizon must give the input time to reach the far end:
        // longer chains need longer windows before the ratio clears 1e-10
        for (spec, horizon) in [(unit_chain(2), 1.0), (unit_chain(4), 5.0)] {
            let model = spec.to_state_space();
            let w = reachability_gramian(&model, horizon, 1e-3).unwrap();
            let eig = SymmetricEigen::new(w);
            let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
            let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
            assert!(min > 1e-10 * max, "eigenvalue ratio {:e}", min / max);
        }
    }

    #[test]
    fn gramian_is_singular_for_the_counterexample() {
        let model = counterexample_spec().to_state_space();
        let w = reachability_gramian(&model, 1.0, 1e-3).unwrap();
        let eig = SymmetricEigen::new(w);
        let max = eig.eigenvalues.iter().cloned().fold(0.0f64, f64::max);
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min.abs() < GRAMIAN_SINGULAR_RATIO * max, "{min} vs {max}");
    }

    #[test]
    fn short_gramian_has_small_norm() {
        let model = unit_chain(2).to_state_space();
        let w = reachability_gramian(&model, 1e-3, 1e-3).unwrap();
        assert!(w.amax() < 2e-3);
    }

    #[test]
    fn zero_to_zero_control_is_zero() {
        let model = unit_chain(2).to_state_space();
        let plan = min_energy_control(&model, &[0.0; 4], &[0.0; 4], 1.0, 1e-3).unwrap();
        assert!(plan.samples.iter().all(|&u| u.abs() < 1e-12));
        assert!(plan.energy() < 1e-20);
    }

    #[test]
    fn control_round_trip_n2() {
        let model = unit_chain(2).to_state_space();
        let target = [1.0, 0.0, 0.0, 0.0];
        let plan = min_energy_control(&model, &[0.0; 4], &target, 5.0, 1e-3).unwrap();
        let traj = simulate_plan(&model, &plan).unwrap();
        let end = traj.terminal_state();
        let err = end
            .iter()
            .zip(&target)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < CONTROL_TOLERANCE, "terminal error {err}");
    }

    #[test]
    fn uncontrollable_chain_is_refused() {
        let model = counterexample_spec().to_state_space();
        assert!(matches!(
            min_energy_control(&model, &[0.0; 6], &[1.0, 0.0, 0.0, 0.0, 0.0, 0.0], 1.0, 1e-3),
            Err(DynamicsError::NotControllable)
        ));
        assert!(matches!(
            reconstruct_initial_state(&model, &[(0.0, 0.0); 8], 1e-8),
            Err(DynamicsError::NotObservable)
        ));
    }

    #[test]
    fn reconstruction_round_trip_n2() {
        let model = unit_chain(2).to_state_space();
        let z0 = [1.0, -1.0, 0.5, 0.0];
        let traj = simulate(&model, &z0, |_| 0.0, 3.0, 1e-3).unwrap();
        let samples: Vec<(f64, f64)> = (0..12)
            .map(|i| {
                let idx = i * (traj.len() - 1) / 11;
                (traj.times[idx], traj.outputs[idx])
            })
            .collect();
        let rec = reconstruct_initial_state(&model, &samples, 1e-8).unwrap();
        for (a, b) in rec.initial_state.iter().zip(&z0) {
            assert!((a - b).abs() < RECONSTRUCTION_TOLERANCE, "{a} vs {b}");
        }
        assert!(rec.within_noise_floor);
    }

    #[test]
    fn reconstruction_of_zero_trajectory_is_zero() {
        let model = unit_chain(2).to_state_space();
        let samples: Vec<(f64, f64)> = (0..8).map(|i| (0.3 * i as f64, 0.0)).collect();
        let rec = reconstruct_initial_state(&model, &samples, 1e-8).unwrap();
        assert!(rec.initial_state.iter().all(|v| v.abs() < 1e-12));
        assert!(rec.residual < 1e-12);
    }

    #[test]
    fn too_few_samples_is_an_error() {
        let model = unit_chain(2).to_state_space();
        let samples = vec![(0.0, 0.0), (0.5, 0.1), (0.5, 0.1)];
        assert!(matches!(
            reconstruct_initial_state(&model, &samples, 1e-8),
            Err(DynamicsError::InsufficientSamples { needed: 4, .. })
        ));
    }

    #[test]
    fn least_squares_solves_exactly_determined_system() {
        // 3x2 overdetermined with known solution (1, 2) and zero residual
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        let (x, residual) = least_squares(&a, &b, 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((x[1] - 2.0).abs() < 1e-12);
        assert!(residual < 1e-12);
    }

    #[test]
    fn least_squares_minimizes_residual() {
        // inconsistent system: best fit of [1;1] column to (0, 2) is x = 1
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 1.0]);
        let b = DVector::from_column_slice(&[0.0, 2.0]);
        let (x, residual) = least_squares(&a, &b, 1e-12).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12);
        assert!((residual - 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn least_squares_detects_rank_deficiency() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let b = DVector::from_column_slice(&[1.0, 2.0, 3.0]);
        assert!(matches!(
            least_squares(&a, &b, 1e-8),
            Err(DynamicsError::RankDeficientRegressor { .. })
        ));
    }

    #[test]
    fn rk4_is_fourth_order() {
        let model = unit_chain(2).to_state_space();
        let z0 = [0.2, -0.1, 0.0, 0.3];
        let input = |t: f64| (2.0 * t).sin();
        let reference = simulate(&model, &z0, input, 1.0, 1e-4 / 4.0).unwrap();
        let coarse = simulate(&model, &z0, input, 1.0, 2e-2).unwrap();
        let fine = simulate(&model, &z0, input, 1.0, 1e-2).unwrap();
        let err = |t: &Trajectory| {
            t.terminal_state()
                .iter()
                .zip(reference.terminal_state())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let ratio = err(&coarse) / err(&fine);
        assert!(ratio > 12.0, "halving the step only gained {ratio}x");
    }
}
