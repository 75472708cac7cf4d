//! Quarter-car suspension demo: a two-mass chain driven through the tyre.
//!
//! The wheel (mass `m_1`) and the quarter of the car body (mass `m_2`)
//! form a two-mass chain coupled by the suspension spring and shock
//! absorber. The road excites the wheel through the tyre:
//!
//! ```text
//! f_ext = k (z_road - z_wheel) + c (zdot_road - zdot_wheel)
//! ```
//!
//! The demo simulates the coupled system over a road profile and then
//! recovers the initial state purely from body-position samples. Every
//! two-mass chain is observable from its far end, so the body trace plus
//! the known road determines where the wheel started and how it moved.

use super::{
    grid_steps, least_squares, rk4_states, DynamicsError, Reconstruction, Trajectory,
};
use nalgebra::{DMatrix, DVector};
use std::fmt;
use std::str::FromStr;

/// Built-in road profiles `z_road(t)` with their derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoadProfile {
    /// `z_road = 0`.
    Flat,
    /// A step of the given height at the given time. The velocity is
    /// taken as zero everywhere (the jump itself carries no width).
    Step { height: f64, time: f64 },
    /// `amplitude * sin(2 pi f t)`.
    Sine { amplitude: f64, frequency_hz: f64 },
}

impl RoadProfile {
    pub fn position(&self, t: f64) -> f64 {
        match *self {
            RoadProfile::Flat => 0.0,
            RoadProfile::Step { height, time } => {
                if t >= time {
                    height
                } else {
                    0.0
                }
            }
            RoadProfile::Sine {
                amplitude,
                frequency_hz,
            } => amplitude * (std::f64::consts::TAU * frequency_hz * t).sin(),
        }
    }

    pub fn velocity(&self, t: f64) -> f64 {
        match *self {
            RoadProfile::Flat | RoadProfile::Step { .. } => 0.0,
            RoadProfile::Sine {
                amplitude,
                frequency_hz,
            } => {
                let omega = std::f64::consts::TAU * frequency_hz;
                amplitude * omega * (omega * t).cos()
            }
        }
    }
}

/// `flat`, `step:<height>:<time>` or `sine:<amplitude>:<frequency>`.
impl FromStr for RoadProfile {
    type Err = DynamicsError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || DynamicsError::InvalidParameter(format!("unknown road profile {s:?}"));
        let num = |v: &str| v.parse::<f64>().map_err(|_| bad());
        match parts.as_slice() {
            ["flat"] => Ok(RoadProfile::Flat),
            ["step", h, t] => Ok(RoadProfile::Step {
                height: num(h)?,
                time: num(t)?,
            }),
            ["sine", a, f] => Ok(RoadProfile::Sine {
                amplitude: num(a)?,
                frequency_hz: num(f)?,
            }),
            _ => Err(bad()),
        }
    }
}

impl fmt::Display for RoadProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            RoadProfile::Flat => write!(f, "flat"),
            RoadProfile::Step { height, time } => write!(f, "step:{height}:{time}"),
            RoadProfile::Sine {
                amplitude,
                frequency_hz,
            } => write!(f, "sine:{amplitude}:{frequency_hz}"),
        }
    }
}

/// Parameters of the quarter-car model. State ordering is
/// `(z_wheel, z_body, v_wheel, v_body)`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterCarSpec {
    /// Mass of the complete wheel (kg).
    pub wheel_mass: f64,
    /// A quarter of the car-body mass (kg).
    pub body_mass: f64,
    /// Suspension spring constant (N/m).
    pub suspension_stiffness: f64,
    /// Shock-absorber damping (N s/m).
    pub suspension_damping: f64,
    /// Tyre compliance (N/m).
    pub tyre_stiffness: f64,
    /// Tyre damping (N s/m).
    pub tyre_damping: f64,
    pub road: RoadProfile,
}

impl QuarterCarSpec {
    pub fn new(
        wheel_mass: f64,
        body_mass: f64,
        suspension_stiffness: f64,
        suspension_damping: f64,
        tyre_stiffness: f64,
        tyre_damping: f64,
        road: RoadProfile,
    ) -> Result<Self, DynamicsError> {
        let spec = Self {
            wheel_mass,
            body_mass,
            suspension_stiffness,
            suspension_damping,
            tyre_stiffness,
            tyre_damping,
            road,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Textbook passenger-car numbers: 40 kg wheel, 250 kg quarter body,
    /// 28 kN/m suspension with a 2 kN s/m shock absorber, 125 kN/m tyre.
    pub fn passenger_car(road: RoadProfile) -> Self {
        Self {
            wheel_mass: 40.0,
            body_mass: 250.0,
            suspension_stiffness: 28_000.0,
            suspension_damping: 2_000.0,
            tyre_stiffness: 125_000.0,
            tyre_damping: 0.0,
            road,
        }
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        let positive = [
            ("wheel mass", self.wheel_mass),
            ("body mass", self.body_mass),
            ("suspension stiffness", self.suspension_stiffness),
            ("tyre stiffness", self.tyre_stiffness),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(DynamicsError::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let nonnegative = [
            ("suspension damping", self.suspension_damping),
            ("tyre damping", self.tyre_damping),
        ];
        for (name, v) in nonnegative {
            if !(v.is_finite() && v >= 0.0) {
                return Err(DynamicsError::InvalidParameter(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        Ok(())
    }

    /// The free two-mass chain matrix (suspension only).
    fn chain_matrix(&self) -> DMatrix<f64> {
        let (m1, m2) = (self.wheel_mass, self.body_mass);
        let (k1, c1) = (self.suspension_stiffness, self.suspension_damping);
        DMatrix::from_row_slice(
            4,
            4,
            &[
                0.0,
                0.0,
                1.0,
                0.0,
                0.0,
                0.0,
                0.0,
                1.0,
                -k1 / m1,
                k1 / m1,
                -c1 / m1,
                c1 / m1,
                k1 / m2,
                -k1 / m2,
                c1 / m2,
                -c1 / m2,
            ],
        )
    }

    /// The chain matrix with the tyre coupling folded in (the homogeneous
    /// part once the road forcing is split off).
    fn closed_loop_matrix(&self) -> DMatrix<f64> {
        let mut f = self.chain_matrix();
        f[(2, 0)] -= self.tyre_stiffness / self.wheel_mass;
        f[(2, 2)] -= self.tyre_damping / self.wheel_mass;
        f
    }
}

/// Result of the quarter-car demo: the trajectory plus the initial state
/// recovered from body-position samples alone.
#[derive(Debug, Clone, PartialEq)]
pub struct QuarterCarRun {
    pub trajectory: Trajectory,
    pub reconstruction: Reconstruction,
}

/// Simulates the quarter car over its road profile and reconstructs the
/// initial state from the body-position output.
///
/// The tyre force depends on the wheel state, so the reconstruction runs
/// against the tyre-coupled system matrix: a second simulation from the
/// zero state isolates the road-forced response, and subtracting it from
/// the observed body positions leaves the free evolution of the unknown
/// initial state, which least squares then inverts.
pub fn quarter_car_demo(
    spec: &QuarterCarSpec,
    z0: &[f64; 4],
    horizon: f64,
    step: f64,
) -> Result<QuarterCarRun, DynamicsError> {
    spec.validate()?;
    let n_steps = grid_steps(horizon, step)?;
    let fc = spec.closed_loop_matrix();
    let (k, c) = (spec.tyre_stiffness, spec.tyre_damping);
    let m1 = spec.wheel_mass;
    let road = spec.road;

    let deriv = move |t: f64, y: &DVector<f64>| {
        let mut dy = &fc * y;
        dy[2] += (k * road.position(t) + c * road.velocity(t)) / m1;
        dy
    };

    let states = rk4_states(DVector::from_column_slice(z0), &deriv, n_steps, step)?;
    let forced = rk4_states(DVector::zeros(4), &deriv, n_steps, step)?;

    let times: Vec<f64> = (0..=n_steps).map(|j| j as f64 * step).collect();
    let tyre_force = |t: f64, s: &DVector<f64>| {
        k * (road.position(t) - s[0]) + c * (road.velocity(t) - s[2])
    };
    let trajectory = Trajectory {
        outputs: states.iter().map(|s| s[1]).collect(),
        inputs: times
            .iter()
            .zip(&states)
            .map(|(&t, s)| tyre_force(t, s))
            .collect(),
        states: states.iter().map(|s| s.iter().copied().collect()).collect(),
        times: times.clone(),
    };

    // Body-position samples, quadratically biased toward the start:
    // suspension transients decay within a second or two, so late samples
    // carry no initial-state information.
    let sample_count = 16usize;
    let window_steps = (((n_steps as f64 * step).min(2.0) / step).round() as usize).max(1);
    let mut indices: Vec<usize> = (0..sample_count)
        .map(|i| {
            let frac = i as f64 / (sample_count - 1) as f64;
            ((frac * frac * window_steps as f64).round() as usize).min(n_steps)
        })
        .collect();
    indices.push(n_steps);
    indices.sort_unstable();
    indices.dedup();
    if indices.len() < 8 {
        return Err(DynamicsError::InsufficientSamples {
            needed: 8,
            got: indices.len(),
        });
    }
    // The sampled outputs live on the RK4 grid, so the regressor inverts
    // the integrator's own one-step transition (for a linear system that
    // is the degree-4 Taylor polynomial of e^{F h}); recovery is then
    // limited by rounding, not truncation.
    let phi = rk4_transition(&spec.closed_loop_matrix(), step);
    let mut regressor = DMatrix::<f64>::zeros(indices.len(), 4);
    let mut rhs = DVector::<f64>::zeros(indices.len());
    let mut power = DMatrix::<f64>::identity(4, 4);
    let mut reached = 0usize;
    for (row, &idx) in indices.iter().enumerate() {
        while reached < idx {
            power = &phi * &power;
            reached += 1;
        }
        regressor.row_mut(row).copy_from(&power.row(1));
        rhs[row] = states[idx][1] - forced[idx][1];
    }
    let (z0_hat, residual) = least_squares(&regressor, &rhs, super::RANK_DEFICIENCY_RTOL)?;
    let scale = rhs.amax().max(1.0);
    let reconstruction = Reconstruction {
        initial_state: z0_hat.iter().copied().collect(),
        residual,
        within_noise_floor: residual <= 1e-8 * scale,
    };

    Ok(QuarterCarRun {
        trajectory,
        reconstruction,
    })
}

/// The exact one-step map of classical RK4 applied to `zdot = F z`:
/// `I + hF + (hF)^2/2 + (hF)^3/6 + (hF)^4/24`.
fn rk4_transition(f: &DMatrix<f64>, step: f64) -> DMatrix<f64> {
    let n = f.nrows();
    let a1 = f * step;
    let a2 = &a1 * &a1;
    let a3 = &a2 * &a1;
    let a4 = &a3 * &a1;
    DMatrix::identity(n, n) + a1 + a2 / 2.0 + a3 / 6.0 + a4 / 24.0
}
