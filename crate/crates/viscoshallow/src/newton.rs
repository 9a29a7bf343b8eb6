use crate::assembly::{apply_update, assemble_residual, assemble_system, ProblemSetup, SolutionState};
use crate::error::{Result, SolverError};
use crate::linalg::linear_solve;
use std::time::Instant;

/// Newton iteration controls for one implicit-Euler step.
///
/// The convergence check compares the residual 2-norm against
/// `abs_tol * max(1, J_max / dt)`: the time term scales residual rows by
/// element-Jacobian over dt, and with small steps the round-off floor of the
/// assembled residual grows with that factor, so a fixed absolute tolerance
/// would be unreachable.
#[derive(Debug, Clone, Copy)]
pub struct NewtonConfig {
    pub max_iters: usize,
    /// Absolute tolerance on the residual 2-norm at unit mass scale.
    pub abs_tol: f64,
    /// Relative residual reduction that also counts as converged.
    pub rel_tol: f64,
    pub dt: f64,
}

impl NewtonConfig {
    pub fn new(dt: f64) -> Self {
        Self {
            max_iters: 10,
            abs_tol: 1e-10,
            rel_tol: 1e-12,
            dt,
        }
    }
}

/// Convergence record of one implicit step.
#[derive(Debug, Clone)]
pub struct StepStats {
    /// Newton updates performed.
    pub newton_iters: usize,
    pub final_residual: f64,
    pub converged: bool,
    pub wall_time: f64,
    /// Residual 2-norm before each update and after the last one.
    pub residual_history: Vec<f64>,
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Newton-Raphson solve of the coupled (V, E) system at the new time level.
///
/// Iterates full undamped updates until the residual 2-norm drops below
/// `abs_tol` or is reduced by `rel_tol`, or `max_iters` updates have been
/// taken. Hitting the iteration cap is reported through the `converged` flag
/// rather than as an error; invalid states and singular tangents are errors.
pub fn newton_solve(
    state_guess: &SolutionState,
    state_old: &SolutionState,
    setup: &ProblemSetup,
    config: &NewtonConfig,
) -> Result<(SolutionState, StepStats)> {
    if config.max_iters == 0 {
        return Err(SolverError::InvalidArgument(
            "need at least one Newton iteration".into(),
        ));
    }
    let start = Instant::now();
    let j_max = (0..setup.mesh.n_elements())
        .map(|e| 0.5 * setup.mesh.element_width(e))
        .fold(0.0f64, f64::max);
    let tol = config.abs_tol * (j_max / config.dt).max(1.0);
    let mut state = state_guess.clone();
    let mut history = Vec::with_capacity(config.max_iters + 1);
    let mut norm = norm2(&assemble_residual(&state, state_old, config.dt, setup)?);
    history.push(norm);
    let norm0 = norm;
    let mut iters = 0;
    let mut converged = norm <= tol;
    while !converged && iters < config.max_iters {
        let (residual, jacobian) = assemble_system(&state, state_old, config.dt, setup)?;
        let rhs: Vec<f64> = residual.iter().map(|r| -r).collect();
        let delta = linear_solve(&jacobian, &rhs)?;
        apply_update(&mut state, &delta, setup);
        iters += 1;
        norm = norm2(&assemble_residual(&state, state_old, config.dt, setup)?);
        history.push(norm);
        converged = norm <= tol || norm <= config.rel_tol * norm0;
    }
    Ok((
        state,
        StepStats {
            newton_iters: iters,
            final_residual: norm,
            converged,
            wall_time: start.elapsed().as_secs_f64(),
            residual_history: history,
        },
    ))
}

/// One backward-Euler step, warm-started from the previous state.
pub fn step(
    state_old: &SolutionState,
    dt: f64,
    setup: &ProblemSetup,
    config: &NewtonConfig,
) -> Result<(SolutionState, StepStats)> {
    let cfg = NewtonConfig { dt, ..*config };
    let (mut state, stats) = newton_solve(state_old, state_old, setup, &cfg)?;
    state.time = state_old.time + dt;
    Ok((state, stats))
}

/// One backward-Euler step solved as a continuation sequence in gamma:
/// gamma_i = gamma0 + (i - 1) (gamma - gamma0) / (n_gamma - 1), each solve
/// warm-starting the next, all against the same old state.
pub fn continuation_step(
    state_old: &SolutionState,
    dt: f64,
    setup: &ProblemSetup,
    config: &NewtonConfig,
    schedule: (f64, f64, usize),
) -> Result<(SolutionState, StepStats)> {
    let (gamma0, gamma, n_gamma) = schedule;
    if n_gamma < 2 {
        return Err(SolverError::InvalidArgument(
            "continuation needs n_gamma >= 2".into(),
        ));
    }
    let start = Instant::now();
    let cfg = NewtonConfig { dt, ..*config };
    let mut guess = state_old.clone();
    let mut total_iters = 0;
    let mut history = Vec::new();
    let mut all_converged = true;
    let mut final_residual = 0.0;
    for i in 1..=n_gamma {
        let gamma_i = gamma0 + (i - 1) as f64 * (gamma - gamma0) / (n_gamma - 1) as f64;
        let mut stage = setup.clone();
        stage.reg = setup.reg.with_gamma(gamma_i);
        let (next, stats) = newton_solve(&guess, state_old, &stage, &cfg)?;
        total_iters += stats.newton_iters;
        history.extend(stats.residual_history.iter().copied());
        all_converged &= stats.converged;
        final_residual = stats.final_residual;
        guess = next;
    }
    guess.time = state_old.time + dt;
    Ok((
        guess,
        StepStats {
            newton_iters: total_iters,
            final_residual,
            converged: all_converged,
            wall_time: start.elapsed().as_secs_f64(),
            residual_history: history,
        },
    ))
}

/// Aggregated statistics of a time-stepping run.
#[derive(Debug, Clone, Default)]
pub struct RunStats {
    pub steps: usize,
    pub total_newton_iters: usize,
    /// Steps accepted at the iteration cap without meeting the tolerance.
    pub nonconverged_steps: usize,
    pub wall_time: f64,
}

impl RunStats {
    pub fn newton_per_step(&self) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            self.total_newton_iters as f64 / self.steps as f64
        }
    }
}

/// Receives state snapshots as the simulation advances.
pub trait Observer {
    fn on_step(&mut self, step: usize, time: f64, state: &SolutionState, stats: &StepStats);
}

impl<F: FnMut(usize, f64, &SolutionState, &StepStats)> Observer for F {
    fn on_step(&mut self, step: usize, time: f64, state: &SolutionState, stats: &StepStats) {
        self(step, time, state, stats)
    }
}

/// Advances the state to `t_final` by repeated implicit steps (continuation
/// steps when the regularization carries a schedule). The final step is
/// shortened to land on the horizon exactly. Observers see every accepted
/// step. On a step failure the error is returned together with the stats
/// accumulated so far.
pub fn run_simulation(
    initial: &SolutionState,
    t_final: f64,
    setup: &ProblemSetup,
    config: &NewtonConfig,
    observers: &mut [&mut dyn Observer],
) -> std::result::Result<(SolutionState, RunStats), (SolverError, RunStats)> {
    let start = Instant::now();
    let mut stats = RunStats::default();
    let mut state = initial.clone();
    if t_final < initial.time {
        return Err((
            SolverError::InvalidArgument("t_final precedes the initial time".into()),
            stats,
        ));
    }
    let schedule = setup
        .reg
        .continuation
        .map(|c| (c.gamma0, setup.reg.gamma, c.n_gamma));
    let mut step_index = 0;
    loop {
        let remaining = t_final - state.time;
        if remaining <= 1e-12 * config.dt.max(1.0) {
            break;
        }
        let dt = config.dt.min(remaining);
        let result = match schedule {
            Some(sched) => continuation_step(&state, dt, setup, config, sched),
            None => step(&state, dt, setup, config),
        };
        match result {
            Ok((next, step_stats)) => {
                stats.steps += 1;
                stats.total_newton_iters += step_stats.newton_iters;
                if !step_stats.converged {
                    stats.nonconverged_steps += 1;
                }
                state = next;
                step_index += 1;
                for obs in observers.iter_mut() {
                    obs.on_step(step_index, state.time, &state, &step_stats);
                }
            }
            Err(err) => {
                stats.wall_time = start.elapsed().as_secs_f64();
                return Err((err, stats));
            }
        }
    }
    stats.wall_time = start.elapsed().as_secs_f64();
    Ok((state, stats))
}
