//! Fixed-step RK4 flows and conserved-quantity drift monitoring.
//!
//! Determinism is the design driver here: fixed step sizes, seeded
//! sampling elsewhere, monitors evaluated on accepted states only. No
//! adaptive stepping, no dense output.

use std::sync::Arc;

use thiserror::Error;

use crate::algebroid::{LieAlgebroid, ProlongedSection};
use crate::dynamics::{DynamicsError, LagrangianSystem, State};
use crate::expr::{Env, EvalError, Expr};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrateError {
    #[error("invalid integration input: {0}")]
    Invalid(String),
    #[error("integration aborted at t = {t}: {reason}")]
    Aborted {
        t: f64,
        reason: AbortReason,
        partial: Box<Trajectory>,
    },
    #[error("drift needs at least 2 samples")]
    TooShort,
    #[error(transparent)]
    Eval(#[from] EvalError),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AbortReason {
    #[error("singular Hessian (condition estimate {condition:.3e})")]
    SingularHessian { condition: f64 },
    #[error("state left the finite range")]
    NonFinite,
    #[error("monitor `{name}` failed: {message}")]
    Monitor { name: String, message: String },
    #[error("dynamics error: {0}")]
    Dynamics(String),
}

type MonitorFn = Arc<dyn Fn(&State) -> Result<f64, String> + Send + Sync>;

/// A named scalar quantity evaluated along a trajectory.
#[derive(Clone)]
pub struct Monitor {
    name: String,
    eval: MonitorFn,
}

impl std::fmt::Debug for Monitor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Monitor").field("name", &self.name).finish()
    }
}

impl Monitor {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn from_fn<F>(name: impl Into<String>, eval: F) -> Self
    where
        F: Fn(&State) -> Result<f64, String> + Send + Sync + 'static,
    {
        Monitor {
            name: name.into(),
            eval: Arc::new(eval),
        }
    }

    /// Evaluates an expression in the coordinates of `algebroid`.
    pub fn from_expr(name: impl Into<String>, expr: Expr, algebroid: &LieAlgebroid) -> Self {
        let names = algebroid.coord_names();
        Monitor::from_fn(name, move |state: &State| {
            let values = state.flat();
            expr.eval(&Env::new(&names, &values))
                .map_err(|e| e.to_string())
        })
    }

    /// The energy of a Lagrangian system as a monitor named `energy`.
    pub fn energy(sys: &LagrangianSystem) -> Self {
        Monitor::from_expr("energy", sys.energy().clone(), sys.algebroid())
    }

    pub fn value_at(&self, state: &State) -> Result<f64, String> {
        (self.eval)(state)
    }
}

/// Time-stamped states with monitored quantities sampled at every step.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State>,
    pub monitors: Vec<(String, Vec<f64>)>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last_state(&self) -> Option<&State> {
        self.states.last()
    }
}

/// Max deviation of one monitored quantity from its initial value.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftEntry {
    pub name: String,
    pub initial: f64,
    pub max_deviation: f64,
    /// `max_deviation / max(1, |initial|)`.
    pub relative_drift: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DriftReport {
    pub entries: Vec<DriftEntry>,
}

impl DriftReport {
    pub fn max_relative_drift(&self) -> f64 {
        self.entries
            .iter()
            .map(|e| e.relative_drift)
            .fold(0.0, f64::max)
    }
}

/// Per-quantity drift over a trajectory.
pub fn drift(trajectory: &Trajectory) -> Result<DriftReport, IntegrateError> {
    if trajectory.len() < 2 {
        return Err(IntegrateError::TooShort);
    }
    let entries = trajectory
        .monitors
        .iter()
        .map(|(name, series)| {
            let initial = series[0];
            let max_deviation = series
                .iter()
                .map(|v| (v - initial).abs())
                .fold(0.0, f64::max);
            DriftEntry {
                name: name.clone(),
                initial,
                max_deviation,
                relative_drift: max_deviation / initial.abs().max(1.0),
            }
        })
        .collect();
    Ok(DriftReport { entries })
}

/// One classic RK4 step of `z' = f(z)`.
fn rk4_step<F>(f: &F, z: &[f64], dt: f64) -> Result<Vec<f64>, AbortReason>
where
    F: Fn(&[f64]) -> Result<Vec<f64>, AbortReason>,
{
    let n = z.len();
    let k1 = f(z)?;
    let mut zb: Vec<f64> = (0..n).map(|i| z[i] + 0.5 * dt * k1[i]).collect();
    let k2 = f(&zb)?;
    for i in 0..n {
        zb[i] = z[i] + 0.5 * dt * k2[i];
    }
    let k3 = f(&zb)?;
    for i in 0..n {
        zb[i] = z[i] + dt * k3[i];
    }
    let k4 = f(&zb)?;
    let out: Vec<f64> = (0..n)
        .map(|i| z[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(AbortReason::NonFinite);
    }
    Ok(out)
}

/// Step schedule covering `[0, t_end]`: `full` steps of size `h` plus an
/// optional shorter remainder step.
fn schedule(t_end: f64, h: f64) -> (usize, Option<f64>) {
    let ratio = t_end / h;
    let rounded = ratio.round();
    if (ratio - rounded).abs() <= 1e-9 * ratio.abs().max(1.0) {
        (rounded as usize, None)
    } else {
        let full = ratio.floor() as usize;
        (full, Some(t_end - full as f64 * h))
    }
}

/// Integrates the Euler-Lagrange dynamics from `s0` to `t_end` with fixed
/// step `h`, sampling every monitor at each accepted step.
///
/// A singular Hessian, a domain error in a monitor, or a non-finite state
/// aborts the run; the partial trajectory accumulated so far rides along
/// in the error.
pub fn simulate(
    sys: &LagrangianSystem,
    s0: &State,
    t_end: f64,
    h: f64,
    monitors: &[Monitor],
) -> Result<Trajectory, IntegrateError> {
    if h <= 0.0 || h.is_nan() {
        return Err(IntegrateError::Invalid(format!(
            "step size {h} must be positive"
        )));
    }
    if t_end <= 0.0 || t_end.is_nan() {
        return Err(IntegrateError::Invalid(format!(
            "end time {t_end} must be positive"
        )));
    }
    let m = sys.algebroid().base_dim();
    let field = |z: &[f64]| -> Result<Vec<f64>, AbortReason> {
        let state = State::from_flat(m, z);
        let (xdot, ydot) = sys.el_field(&state).map_err(|e| match e {
            DynamicsError::SingularHessian { condition } => {
                AbortReason::SingularHessian { condition }
            }
            DynamicsError::NonFiniteState => AbortReason::NonFinite,
            other => AbortReason::Dynamics(other.to_string()),
        })?;
        let mut out = xdot;
        out.extend(ydot);
        Ok(out)
    };

    let mut trajectory = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        monitors: monitors
            .iter()
            .map(|mo| (mo.name().to_string(), Vec::new()))
            .collect(),
    };

    let record = |traj: &mut Trajectory, t: f64, state: &State| -> Result<(), AbortReason> {
        for (monitor, (name, series)) in monitors.iter().zip(traj.monitors.iter_mut()) {
            let value = monitor
                .value_at(state)
                .map_err(|message| AbortReason::Monitor {
                    name: name.clone(),
                    message,
                })?;
            series.push(value);
        }
        traj.times.push(t);
        traj.states.push(state.clone());
        Ok(())
    };

    let abort = |t: f64, reason: AbortReason, partial: Trajectory| IntegrateError::Aborted {
        t,
        reason,
        partial: Box::new(partial),
    };

    if let Err(reason) = record(&mut trajectory, 0.0, s0) {
        return Err(abort(0.0, reason, trajectory));
    }

    let (full, remainder) = schedule(t_end, h);
    let mut z = s0.flat();
    for step in 0..full {
        let t_next = (step + 1) as f64 * h;
        match rk4_step(&field, &z, h) {
            Ok(next) => z = next,
            Err(reason) => return Err(abort(step as f64 * h, reason, trajectory)),
        }
        let state = State::from_flat(m, &z);
        if let Err(reason) = record(&mut trajectory, t_next, &state) {
            return Err(abort(t_next, reason, trajectory));
        }
    }
    if let Some(dt) = remainder {
        if dt > 0.0 {
            match rk4_step(&field, &z, dt) {
                Ok(next) => z = next,
                Err(reason) => return Err(abort(full as f64 * h, reason, trajectory)),
            }
            let state = State::from_flat(m, &z);
            if let Err(reason) = record(&mut trajectory, t_end, &state) {
                return Err(abort(t_end, reason, trajectory));
            }
        }
    }
    Ok(trajectory)
}

/// RK4 flow of the vector field on E anchored to a prolonged section:
/// `xdot^i = rho^i_a xi^a`, `ydot^a = V^a`. Negative times flow backwards
/// with the same step magnitude, so forward/backward compositions cancel
/// to integrator accuracy.
pub fn flow_on_e(
    algebroid: &LieAlgebroid,
    section: &ProlongedSection,
    start: &State,
    t: f64,
    h: f64,
) -> Result<State, IntegrateError> {
    if h <= 0.0 || h.is_nan() {
        return Err(IntegrateError::Invalid(format!(
            "step size {h} must be positive"
        )));
    }
    if t == 0.0 {
        return Ok(start.clone());
    }
    let m = algebroid.base_dim();
    let p = algebroid.rank();
    let names = algebroid.coord_names();

    // symbolic components of the anchored field, in flat-state order
    let mut components: Vec<Expr> = (0..m)
        .map(|i| {
            Expr::sum(
                (0..p).map(|a| algebroid.anchor_component(a, i).clone() * section.base[a].clone()),
            )
        })
        .collect();
    components.extend(section.fiber.iter().cloned());

    let field = |z: &[f64]| -> Result<Vec<f64>, AbortReason> {
        let env = Env::new(&names, z);
        components
            .iter()
            .map(|e| {
                e.eval(&env)
                    .map_err(|err| AbortReason::Dynamics(err.to_string()))
            })
            .collect()
    };

    let steps = (t.abs() / h).ceil().max(1.0) as usize;
    let dt = t / steps as f64;
    let mut z = start.flat();
    for step in 0..steps {
        z = rk4_step(&field, &z, dt).map_err(|reason| IntegrateError::Aborted {
            t: step as f64 * dt,
            reason,
            partial: Box::default(),
        })?;
    }
    Ok(State::from_flat(m, &z))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebroid::Section;
    use crate::expr::parse;

    fn tangent(m: usize) -> Arc<LieAlgebroid> {
        let x: Vec<Arc<str>> = (1..=m)
            .map(|i| Arc::from(format!("x{i}").as_str()))
            .collect();
        let y: Vec<Arc<str>> = (1..=m)
            .map(|i| Arc::from(format!("y{i}").as_str()))
            .collect();
        let c = vec![vec![vec![Expr::ZERO; m]; m]; m];
        let rho = (0..m)
            .map(|a| {
                (0..m)
                    .map(|i| if i == a { Expr::ONE } else { Expr::ZERO })
                    .collect()
            })
            .collect();
        Arc::new(LieAlgebroid::new(x, y, c, rho).unwrap())
    }

    fn so3() -> Arc<LieAlgebroid> {
        let y: Vec<Arc<str>> = vec!["y1".into(), "y2".into(), "y3".into()];
        let mut c = vec![vec![vec![Expr::ZERO; 3]; 3]; 3];
        for (a, b, g, v) in [
            (0, 1, 2, 1.0),
            (1, 0, 2, -1.0),
            (1, 2, 0, 1.0),
            (2, 1, 0, -1.0),
            (2, 0, 1, 1.0),
            (0, 2, 1, -1.0),
        ] {
            c[a][b][g] = Expr::constant(v);
        }
        Arc::new(LieAlgebroid::new(vec![], y, c, vec![vec![]; 3]).unwrap())
    }

    fn system(algebroid: &Arc<LieAlgebroid>, text: &str) -> LagrangianSystem {
        let l = parse(text, &algebroid.scope()).unwrap();
        LagrangianSystem::new(algebroid.clone(), l).unwrap()
    }

    #[test]
    fn harmonic_oscillator_half_period() {
        let a = tangent(1);
        let sys = system(&a, "(y1^2 - x1^2)/2");
        let s0 = State::new(vec![1.0], vec![0.0]).unwrap();
        let traj = simulate(&sys, &s0, std::f64::consts::PI, 1e-3, &[]).unwrap();
        let end = traj.last_state().unwrap();
        assert!((end.x[0] - (-1.0)).abs() < 1e-8, "x(pi) = {}", end.x[0]);
    }

    #[test]
    fn free_particle_is_exact() {
        let a = tangent(1);
        let sys = system(&a, "y1^2/2");
        let s0 = State::new(vec![0.0], vec![1.0]).unwrap();
        let traj = simulate(&sys, &s0, 1.0, 1e-2, &[]).unwrap();
        let end = traj.last_state().unwrap();
        assert!((end.x[0] - 1.0).abs() < 1e-13);
        assert_eq!(end.y[0], 1.0);
    }

    #[test]
    fn rigid_body_momentum_drift_stays_tiny() {
        let scope = so3().scope();
        let a = so3();
        let l = parse("(3*y1^2 + 2*y2^2 + 2*y3^2)/2", &scope).unwrap();
        let sys = LagrangianSystem::new(a.clone(), l).unwrap();
        let s0 = State::new(vec![], vec![1.0, 0.5, -0.7]).unwrap();
        let momentum = Monitor::from_expr("I1*y1", parse("3*y1", &scope).unwrap(), &a);
        let energy = Monitor::energy(&sys);
        let traj = simulate(&sys, &s0, 10.0, 1e-3, &[momentum, energy]).unwrap();
        let report = drift(&traj).unwrap();
        assert!(report.entries[0].max_deviation <= 1e-8);
        assert!(report.entries[1].max_deviation <= 1e-8);
    }

    #[test]
    fn monitors_record_on_accepted_steps_only() {
        let a = tangent(1);
        let sys = system(&a, "y1^2/2");
        let s0 = State::new(vec![0.0], vec![2.0]).unwrap();
        let traj = simulate(&sys, &s0, 0.5, 0.1, &[Monitor::energy(&sys)]).unwrap();
        assert_eq!(traj.times.len(), 6);
        assert_eq!(traj.monitors[0].1.len(), 6);
    }

    #[test]
    fn partial_step_covers_non_divisible_end_times() {
        let a = tangent(1);
        let sys = system(&a, "y1^2/2");
        let s0 = State::new(vec![0.0], vec![1.0]).unwrap();
        let traj = simulate(&sys, &s0, 0.25, 0.1, &[]).unwrap();
        assert_eq!(traj.times.len(), 4);
        assert!((traj.times[3] - 0.25).abs() < 1e-15);
        assert!((traj.last_state().unwrap().x[0] - 0.25).abs() < 1e-13);
    }

    #[test]
    fn singular_hessian_aborts_with_partial_trajectory() {
        let a = tangent(2);
        let sys = system(&a, "(y1^2 + y2^2)/2 + y1*y2");
        let s0 = State::new(vec![0.0, 0.0], vec![1.0, 0.0]).unwrap();
        match simulate(&sys, &s0, 1.0, 1e-2, &[]) {
            Err(IntegrateError::Aborted {
                partial, reason, ..
            }) => {
                // the initial sample is accepted before the first step fails
                assert_eq!(partial.len(), 1);
                assert!(matches!(reason, AbortReason::SingularHessian { .. }));
            }
            other => panic!("expected abort, got {other:?}"),
        }
    }

    #[test]
    fn monitor_domain_error_aborts() {
        let a = tangent(1);
        let sys = system(&a, "y1^2/2");
        let s0 = State::new(vec![1.0], vec![-1.0]).unwrap();
        let bad = Monitor::from_expr("log-x", parse("log(x1)", &a.scope()).unwrap(), &a);
        // x(t) = 1 - t crosses zero, after which log(x1) is undefined
        match simulate(&sys, &s0, 2.0, 0.25, &[bad]) {
            Err(IntegrateError::Aborted {
                reason, partial, ..
            }) => {
                assert!(matches!(reason, AbortReason::Monitor { .. }));
                assert!(partial.len() >= 2);
            }
            other => panic!("expected monitor abort, got {other:?}"),
        }
    }

    #[test]
    fn flow_of_complete_lift_rotates_so3_fiber() {
        let a = so3();
        let xi1 = Section::new(&a, vec![Expr::ONE, Expr::ZERO, Expr::ZERO]).unwrap();
        let lift = a.complete_lift(&xi1);
        let s = State::new(vec![], vec![0.0, 1.0, 0.0]).unwrap();
        let end = flow_on_e(&a, &lift, &s, std::f64::consts::FRAC_PI_2, 1e-3).unwrap();
        assert!(end.y[0].abs() < 1e-8);
        assert!(end.y[1].abs() < 1e-8);
        assert!((end.y[2] - (-1.0)).abs() < 1e-8);
    }

    #[test]
    fn flow_at_zero_time_is_identity() {
        let a = tangent(1);
        let x = Section::new(&a, vec![Expr::ONE]).unwrap();
        let lift = a.complete_lift(&x);
        let s = State::new(vec![0.3], vec![-0.4]).unwrap();
        assert_eq!(flow_on_e(&a, &lift, &s, 0.0, 1e-3).unwrap(), s);
    }

    #[test]
    fn flow_reversibility() {
        let a = tangent(2);
        let scope = a.scope();
        let x = Section::new(
            &a,
            vec![
                parse("x2", &scope).unwrap(),
                parse("x1*x1", &scope).unwrap(),
            ],
        )
        .unwrap();
        let lift = a.complete_lift(&x);
        let s = State::new(vec![0.2, -0.3], vec![0.7, 0.1]).unwrap();
        let fwd = flow_on_e(&a, &lift, &s, 0.8, 1e-3).unwrap();
        let back = flow_on_e(&a, &lift, &fwd, -0.8, 1e-3).unwrap();
        for (got, want) in back.flat().iter().zip(s.flat()) {
            assert!((got - want).abs() < 1e-8);
        }
    }

    #[test]
    fn drift_report_basics() {
        let traj = Trajectory {
            times: vec![0.0, 0.5, 1.0],
            states: vec![
                State::new(vec![], vec![0.0]).unwrap(),
                State::new(vec![], vec![0.0]).unwrap(),
                State::new(vec![], vec![0.0]).unwrap(),
            ],
            monitors: vec![
                ("constant".into(), vec![4.0, 4.0, 4.0]),
                ("time".into(), vec![0.0, 0.5, 1.0]),
            ],
        };
        let report = drift(&traj).unwrap();
        assert_eq!(report.entries[0].max_deviation, 0.0);
        assert_eq!(report.entries[1].max_deviation, 1.0);
        assert_eq!(report.entries[1].relative_drift, 1.0);

        let short = Trajectory {
            times: vec![0.0],
            states: vec![State::new(vec![], vec![0.0]).unwrap()],
            monitors: vec![],
        };
        assert!(matches!(drift(&short), Err(IntegrateError::TooShort)));
    }

    #[test]
    fn rk4_order_on_harmonic_oscillator() {
        let a = tangent(1);
        let sys = system(&a, "(y1^2 - x1^2)/2");
        let s0 = State::new(vec![1.0], vec![0.0]).unwrap();
        // endpoint away from multiples of pi/2, where the leading h^4 phase
        // error would be suppressed and the ratio would drift off 16
        let t_end: f64 = 2.0;
        let exact = t_end.cos();
        let error = |h: f64| {
            let traj = simulate(&sys, &s0, t_end, h, &[]).unwrap();
            (traj.last_state().unwrap().x[0] - exact).abs()
        };
        let (e1, e2, e3) = (error(1e-2), error(5e-3), error(2.5e-3));
        let r1 = e1 / e2;
        let r2 = e2 / e3;
        assert!((12.0..=20.0).contains(&r1), "ratio {r1}");
        assert!((12.0..=20.0).contains(&r2), "ratio {r2}");
    }
}
