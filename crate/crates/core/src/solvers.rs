//! Time-stepping driver and the scheme orchestrators: monolithic, nonlinear
//! splitting, and alternate linearized splitting, each with Newton or
//! L-scheme linearization, optional Anderson acceleration, stopping and
//! divergence detection, and per-run reporting.

use std::time::{Duration, Instant};

use thiserror::Error;

use crate::anderson::AndersonState;
use crate::assembly::{
    assemble_flow_subsystem, assemble_ls_mono, assemble_newton_mono, assemble_transport_subsystem,
    AssemblyError, DiscreteState, LParams, LinearSystem, Linearization, Problem,
};
use crate::linalg::{cond1_with_factors, factorize, CondMode, CondStats, LinalgError};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid scheme configuration: {0}")]
    InvalidConfig(String),
    #[error("time grid rejected: T = {t_end}, dt = {dt} gives no whole number of steps")]
    InvalidTimeGrid { t_end: f64, dt: f64 },
    #[error("residual history needs >= 3 positive entries")]
    InvalidResidualHistory,
    #[error("residual history is fully stalled, no order could be estimated")]
    StalledResidualHistory,
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Coupling strategy between the flow pair and the transport equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coupling {
    Monolithic,
    NonlinearSplit,
    AlternateSplit,
}

/// Linearization selector of a scheme configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinKind {
    Newton,
    LScheme,
}

/// Full configuration of one solver run.
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    pub coupling: Coupling,
    pub linearization: LinKind,
    pub l: LParams,
    /// Stopping tolerance on the max-norm increments of all three unknowns.
    pub tolerance: f64,
    pub max_iter_per_step: usize,
    pub divergence_norm_cap: f64,
    /// Anderson depth of the coupling/monolithic loop. 0 disables.
    pub aa_m: usize,
    /// Anderson depth of the inner linearization loops (nonlinear splitting).
    pub aa_m_lin: usize,
    /// Record condition numbers at every linear solve.
    pub record_condition: bool,
    /// Alternate splitting: accelerate the pair of half-steps as one map
    /// (default) instead of each half-step separately.
    pub aa_wrap_half_steps: bool,
    /// Optional per-block scaling of the iterate vector before acceleration.
    pub aa_block_scale: Option<(f64, f64, f64)>,
}

impl SchemeConfig {
    pub fn new(coupling: Coupling, linearization: LinKind) -> Self {
        SchemeConfig {
            coupling,
            linearization,
            l: LParams::uniform(0.1),
            tolerance: 1e-6,
            max_iter_per_step: 500,
            divergence_norm_cap: 1e10,
            aa_m: 0,
            aa_m_lin: 0,
            record_condition: true,
            aa_wrap_half_steps: true,
            aa_block_scale: None,
        }
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.tolerance > 0.0) {
            return Err(SolverError::InvalidConfig(format!("tolerance = {}", self.tolerance)));
        }
        if self.max_iter_per_step == 0 {
            return Err(SolverError::InvalidConfig("max_iter_per_step = 0".into()));
        }
        if !(self.divergence_norm_cap > 0.0) {
            return Err(SolverError::InvalidConfig(format!(
                "divergence_norm_cap = {}",
                self.divergence_norm_cap
            )));
        }
        if self.linearization == LinKind::LScheme {
            self.l.validate().map_err(|e| SolverError::InvalidConfig(e.to_string()))?;
        }
        Ok(())
    }

    fn lin(&self) -> Linearization {
        match self.linearization {
            LinKind::Newton => Linearization::Newton,
            LinKind::LScheme => Linearization::LScheme(self.l),
        }
    }
}

/// Why a time step failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureCause {
    IterationCap,
    Divergence,
    NonFinite,
    SingularMatrix,
}

impl std::fmt::Display for FailureCause {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            FailureCause::IterationCap => "iteration_cap",
            FailureCause::Divergence => "divergence",
            FailureCause::NonFinite => "non_finite",
            FailureCause::SingularMatrix => "singular_matrix",
        };
        f.write_str(s)
    }
}

/// Per-iteration max-norm increments of the three unknowns.
#[derive(Debug, Clone, Default)]
pub struct ResidualHistory {
    pub psi: Vec<f64>,
    pub theta: Vec<f64>,
    pub conc: Vec<f64>,
}

impl ResidualHistory {
    fn push(&mut self, dpsi: f64, dtheta: f64, dconc: f64) {
        self.psi.push(dpsi);
        self.theta.push(dtheta);
        self.conc.push(dconc);
    }
}

/// Outcome of one time step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    /// Coupling/monolithic iterations.
    pub iterations: usize,
    /// Inner flow solves (nonlinear splitting only).
    pub flow_iterations: usize,
    /// Inner transport solves (nonlinear splitting only).
    pub transport_iterations: usize,
    pub converged: bool,
    pub failure: Option<FailureCause>,
}

/// Aggregated report of one simulation.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub steps: Vec<StepRecord>,
    pub converged: bool,
    pub failure: Option<FailureCause>,
    pub cond_full: CondStats,
    pub cond_flow: CondStats,
    pub cond_transport: CondStats,
    /// Increment history of the last executed step.
    pub final_step_residuals: ResidualHistory,
    pub wall_time: Duration,
}

impl RunReport {
    /// Total iterations: monolithic/alternate count coupling iterations,
    /// the nonlinear splitting counts inner flow plus inner transport solves.
    pub fn total_iterations(&self) -> usize {
        let coupled: usize = self.steps.iter().map(|s| s.iterations).sum();
        let inner: usize =
            self.steps.iter().map(|s| s.flow_iterations + s.transport_iterations).sum();
        if inner > 0 {
            inner
        } else {
            coupled
        }
    }

    pub fn total_flow_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.flow_iterations).sum()
    }

    pub fn total_transport_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.transport_iterations).sum()
    }
}

/// True iff all three increment vectors are within `eps` in the max norm.
pub fn check_stop(dpsi: &[f64], dtheta: &[f64], dconc: &[f64], eps: f64) -> bool {
    let linf = |v: &[f64]| v.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    linf(dpsi) <= eps && linf(dtheta) <= eps && linf(dconc) <= eps
}

fn linf_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()))
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

fn all_finite(v: &[f64]) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Condition-number accumulators of one run, split by equation block.
#[derive(Debug)]
pub struct CondRecorders {
    enabled: bool,
    full: CondStats,
    flow: CondStats,
    transport: CondStats,
}

impl CondRecorders {
    pub fn new(enabled: bool) -> Self {
        CondRecorders {
            enabled,
            full: CondStats::default(),
            flow: CondStats::default(),
            transport: CondStats::default(),
        }
    }
}

enum Block {
    Full,
    Flow,
    Transport,
}

/// Factorize, optionally record the condition number, and solve.
fn solve_system(
    sys: &LinearSystem,
    rec: &mut CondRecorders,
    block: Block,
) -> Result<Vec<f64>, FailureCause> {
    solve_keeping_factors(sys, rec, block).map(|(x, _)| x)
}

fn solve_keeping_factors(
    sys: &LinearSystem,
    rec: &mut CondRecorders,
    block: Block,
) -> Result<(Vec<f64>, crate::linalg::LuFactors), FailureCause> {
    let factors = match factorize(&sys.matrix) {
        Ok(f) => f,
        Err(LinalgError::Singular { .. }) => return Err(FailureCause::SingularMatrix),
        Err(_) => return Err(FailureCause::NonFinite),
    };
    if rec.enabled {
        let c = cond1_with_factors(&sys.matrix, &factors, CondMode::Auto);
        match block {
            Block::Full => rec.full.record(c),
            Block::Flow => rec.flow.record(c),
            Block::Transport => rec.transport.record(c),
        }
    }
    let x = factors.solve(&sys.rhs).map_err(|_| FailureCause::SingularMatrix)?;
    Ok((x, factors))
}

fn map_assembly_failure(e: AssemblyError) -> FailureCause {
    match e {
        AssemblyError::NonFinite { .. } => FailureCause::NonFinite,
        AssemblyError::Linalg(LinalgError::Singular { .. }) => FailureCause::SingularMatrix,
        AssemblyError::Linalg(LinalgError::NonFinite { .. }) => FailureCause::NonFinite,
        _ => FailureCause::NonFinite,
    }
}

/// Result of one time step: the converged state (if any), the iteration
/// record, and the per-iteration increment history.
#[derive(Debug)]
pub struct StepOutcome {
    pub state: Option<DiscreteState>,
    pub record: StepRecord,
    pub residuals: ResidualHistory,
}

/// Max-norm of the increment the next solve of `sys` would produce at `x`,
/// estimated with the factorization of the previous sub-system. The residual
/// b - A x is the sub-problem's nonlinear residual at x, so this realizes
/// the increment stopping test one solve early. None until a factorization
/// exists.
fn predicted_increment(
    sys: &LinearSystem,
    x: &[f64],
    factors: &Option<crate::linalg::LuFactors>,
) -> Option<f64> {
    let f = factors.as_ref()?;
    if f.dim() != sys.dim() {
        return None;
    }
    let ax = sys.matrix.matvec(x);
    let r: Vec<f64> = sys.rhs.iter().zip(&ax).map(|(b, a)| b - a).collect();
    f.solve(&r).ok().map(|d| max_abs(&d))
}

fn fail(record_iters: (usize, usize, usize), cause: FailureCause, hist: ResidualHistory) -> StepOutcome {
    StepOutcome {
        state: None,
        record: StepRecord {
            iterations: record_iters.0,
            flow_iterations: record_iters.1,
            transport_iterations: record_iters.2,
            converged: false,
            failure: Some(cause),
        },
        residuals: hist,
    }
}

fn scaled(v: &[f64], n: usize, s: Option<(f64, f64, f64)>) -> Vec<f64> {
    match s {
        None => v.to_vec(),
        Some((a, b, c)) => {
            let mut out = v.to_vec();
            for i in 0..n {
                out[i] *= a;
                out[n + i] *= b;
                out[2 * n + i] *= c;
            }
            out
        }
    }
}

fn unscaled(v: Vec<f64>, n: usize, s: Option<(f64, f64, f64)>) -> Vec<f64> {
    match s {
        None => v,
        Some((a, b, c)) => {
            let mut out = v;
            for i in 0..n {
                out[i] /= a;
                out[n + i] /= b;
                out[2 * n + i] /= c;
            }
            out
        }
    }
}

/// One time step of the monolithic schemes: assemble, solve, accelerate,
/// check increments; the first iterate is the previous time-step solution.
pub fn step_monolithic(
    old: &DiscreteState,
    dt: f64,
    t_new: f64,
    p: &Problem,
    cfg: &SchemeConfig,
    rec: &mut CondRecorders,
) -> StepOutcome {
    let n = p.num_cells();
    let mut cur = old.clone();
    cur.time = t_new;
    let mut aa = AndersonState::new(cfg.aa_m);
    let mut hist = ResidualHistory::default();
    let scale = (cfg.aa_m > 0).then_some(cfg.aa_block_scale).flatten();

    for iter in 1..=cfg.max_iter_per_step {
        let sys = match cfg.lin() {
            Linearization::Newton => assemble_newton_mono(&cur, old, dt, p),
            Linearization::LScheme(l) => assemble_ls_mono(&cur, old, dt, p, l),
        };
        let sys = match sys {
            Ok(s) => s,
            Err(e) => return fail((iter, 0, 0), map_assembly_failure(e), hist),
        };
        let gx = match solve_system(&sys, rec, Block::Full) {
            Ok(v) => v,
            Err(c) => return fail((iter, 0, 0), c, hist),
        };
        let next_vec = if cfg.aa_m == 0 {
            gx
        } else {
            unscaled(aa.step(&scaled(&cur.to_vec(), n, scale), &scaled(&gx, n, scale)), n, scale)
        };
        if !all_finite(&next_vec) {
            return fail((iter, 0, 0), FailureCause::NonFinite, hist);
        }
        let next = DiscreteState::from_vec(&next_vec, n, t_new);
        let dpsi = linf_diff(&next.psi, &cur.psi);
        let dtheta = linf_diff(&next.theta, &cur.theta);
        let dconc = linf_diff(&next.conc, &cur.conc);
        hist.push(dpsi, dtheta, dconc);
        if max_abs(&next_vec) > cfg.divergence_norm_cap {
            return fail((iter, 0, 0), FailureCause::Divergence, hist);
        }
        cur = next;
        if dpsi <= cfg.tolerance && dtheta <= cfg.tolerance && dconc <= cfg.tolerance {
            return StepOutcome {
                state: Some(cur),
                record: StepRecord {
                    iterations: iter,
                    flow_iterations: 0,
                    transport_iterations: 0,
                    converged: true,
                    failure: None,
                },
                residuals: hist,
            };
        }
    }
    fail((cfg.max_iter_per_step, 0, 0), FailureCause::IterationCap, hist)
}

/// One time step of the alternate linearized splitting: one linearized flow
/// solve, then one linearized transport solve on the fresh flow fields, per
/// coupling iteration.
pub fn step_altlins(
    old: &DiscreteState,
    dt: f64,
    t_new: f64,
    p: &Problem,
    cfg: &SchemeConfig,
    rec: &mut CondRecorders,
) -> StepOutcome {
    let n = p.num_cells();
    let mut cur = old.clone();
    cur.time = t_new;
    let lin = cfg.lin();
    let mut aa_pair = AndersonState::new(cfg.aa_m);
    let mut aa_flow = AndersonState::new(cfg.aa_m);
    let mut aa_conc = AndersonState::new(cfg.aa_m);
    let mut hist = ResidualHistory::default();
    let scale = (cfg.aa_m > 0 && cfg.aa_wrap_half_steps).then_some(cfg.aa_block_scale).flatten();

    for iter in 1..=cfg.max_iter_per_step {
        let sysf =
            match assemble_flow_subsystem(&cur, old, dt, p, &cur.conc, &cur.theta, &lin) {
                Ok(s) => s,
                Err(e) => return fail((iter, 0, 0), map_assembly_failure(e), hist),
            };
        let flow_sol = match solve_system(&sysf, rec, Block::Flow) {
            Ok(v) => v,
            Err(c) => return fail((iter, 0, 0), c, hist),
        };
        let (mut psi1, mut theta1) = (flow_sol[..n].to_vec(), flow_sol[n..].to_vec());
        if cfg.aa_m > 0 && !cfg.aa_wrap_half_steps {
            let mut xk = cur.psi.clone();
            xk.extend_from_slice(&cur.theta);
            let mut gx = psi1.clone();
            gx.extend_from_slice(&theta1);
            let acc = aa_flow.step(&xk, &gx);
            psi1 = acc[..n].to_vec();
            theta1 = acc[n..].to_vec();
        }
        if !all_finite(&psi1) || !all_finite(&theta1) {
            return fail((iter, 0, 0), FailureCause::NonFinite, hist);
        }

        let syst = match assemble_transport_subsystem(
            &cur.conc, &cur.conc, &psi1, &theta1, old, dt, t_new, p, &lin,
        ) {
            Ok(s) => s,
            Err(e) => return fail((iter, 0, 0), map_assembly_failure(e), hist),
        };
        let mut conc1 = match solve_system(&syst, rec, Block::Transport) {
            Ok(v) => v,
            Err(c) => return fail((iter, 0, 0), c, hist),
        };
        if cfg.aa_m > 0 && !cfg.aa_wrap_half_steps {
            conc1 = aa_conc.step(&cur.conc, &conc1);
        }

        let mut next_vec = psi1;
        next_vec.extend_from_slice(&theta1);
        next_vec.extend_from_slice(&conc1);
        if cfg.aa_m > 0 && cfg.aa_wrap_half_steps {
            next_vec =
                unscaled(aa_pair.step(&scaled(&cur.to_vec(), n, scale), &scaled(&next_vec, n, scale)), n, scale);
        }
        if !all_finite(&next_vec) {
            return fail((iter, 0, 0), FailureCause::NonFinite, hist);
        }
        let next = DiscreteState::from_vec(&next_vec, n, t_new);
        let dpsi = linf_diff(&next.psi, &cur.psi);
        let dtheta = linf_diff(&next.theta, &cur.theta);
        let dconc = linf_diff(&next.conc, &cur.conc);
        hist.push(dpsi, dtheta, dconc);
        if max_abs(&next_vec) > cfg.divergence_norm_cap {
            return fail((iter, 0, 0), FailureCause::Divergence, hist);
        }
        cur = next;
        if dpsi <= cfg.tolerance && dtheta <= cfg.tolerance && dconc <= cfg.tolerance {
            return StepOutcome {
                state: Some(cur),
                record: StepRecord {
                    iterations: iter,
                    flow_iterations: 0,
                    transport_iterations: 0,
                    converged: true,
                    failure: None,
                },
                residuals: hist,
            };
        }
    }
    fail((cfg.max_iter_per_step, 0, 0), FailureCause::IterationCap, hist)
}

/// One time step of the nonlinear splitting: the flow pair is inner-solved
/// to tolerance with the concentration and the hysteresis argument frozen at
/// the outer iterate, then the transport equation is inner-solved with the
/// implicit reaction; the outer loop iterates the coupling. Anderson depths:
/// m on the outer loop, m_lin on both inner loops, all restarted per loop.
pub fn step_nonlins(
    old: &DiscreteState,
    dt: f64,
    t_new: f64,
    p: &Problem,
    cfg: &SchemeConfig,
    rec: &mut CondRecorders,
) -> StepOutcome {
    let n = p.num_cells();
    let mut cur = old.clone();
    cur.time = t_new;
    let lin = cfg.lin();
    let mut aa_outer = AndersonState::new(cfg.aa_m);
    let mut hist = ResidualHistory::default();
    let scale = (cfg.aa_m > 0).then_some(cfg.aa_block_scale).flatten();
    let (mut flow_iters, mut transport_iters) = (0usize, 0usize);
    // factorizations of the last solved sub-systems; they turn the stopping
    // test into a predicted-increment check that costs no extra solve
    let mut flow_factors: Option<crate::linalg::LuFactors> = None;
    let mut transport_factors: Option<crate::linalg::LuFactors> = None;

    for outer in 1..=cfg.max_iter_per_step {
        // flow sub-problem in (psi, theta); stop once the increment the next
        // solve would produce is within tolerance
        let mut psi = cur.psi.clone();
        let mut theta = cur.theta.clone();
        let mut aa_f = AndersonState::new(cfg.aa_m_lin);
        let mut inner_ok = false;
        for _ in 1..=cfg.max_iter_per_step {
            let it = DiscreteState::new(psi.clone(), theta.clone(), cur.conc.clone(), t_new);
            let sys =
                match assemble_flow_subsystem(&it, old, dt, p, &cur.conc, &cur.theta, &lin) {
                    Ok(s) => s,
                    Err(e) => {
                        return fail(
                            (outer, flow_iters, transport_iters),
                            map_assembly_failure(e),
                            hist,
                        )
                    }
                };
            let mut xk = psi.clone();
            xk.extend_from_slice(&theta);
            if let Some(d) = predicted_increment(&sys, &xk, &flow_factors) {
                if d <= cfg.tolerance {
                    inner_ok = true;
                    break;
                }
            }
            let (gx, factors) = match solve_keeping_factors(&sys, rec, Block::Flow) {
                Ok(v) => v,
                Err(c) => return fail((outer, flow_iters, transport_iters), c, hist),
            };
            flow_factors = Some(factors);
            flow_iters += 1;
            let next = aa_f.step(&xk, &gx);
            if !all_finite(&next) {
                return fail((outer, flow_iters, transport_iters), FailureCause::NonFinite, hist);
            }
            let dpsi = linf_diff(&next[..n], &psi);
            let dtheta = linf_diff(&next[n..], &theta);
            psi.copy_from_slice(&next[..n]);
            theta.copy_from_slice(&next[n..]);
            if max_abs(&next) > cfg.divergence_norm_cap {
                return fail((outer, flow_iters, transport_iters), FailureCause::Divergence, hist);
            }
            if dpsi <= cfg.tolerance && dtheta <= cfg.tolerance {
                inner_ok = true;
                break;
            }
        }
        if !inner_ok {
            return fail((outer, flow_iters, transport_iters), FailureCause::IterationCap, hist);
        }

        // transport sub-problem in c with implicit reaction
        let mut conc = cur.conc.clone();
        let mut aa_t = AndersonState::new(cfg.aa_m_lin);
        inner_ok = false;
        for _ in 1..=cfg.max_iter_per_step {
            let sys = match assemble_transport_subsystem(
                &conc, &cur.conc, &psi, &theta, old, dt, t_new, p, &lin,
            ) {
                Ok(s) => s,
                Err(e) => {
                    return fail((outer, flow_iters, transport_iters), map_assembly_failure(e), hist)
                }
            };
            if let Some(d) = predicted_increment(&sys, &conc, &transport_factors) {
                if d <= cfg.tolerance {
                    inner_ok = true;
                    break;
                }
            }
            let (gc, factors) = match solve_keeping_factors(&sys, rec, Block::Transport) {
                Ok(v) => v,
                Err(c) => return fail((outer, flow_iters, transport_iters), c, hist),
            };
            transport_factors = Some(factors);
            transport_iters += 1;
            let next = aa_t.step(&conc, &gc);
            if !all_finite(&next) {
                return fail((outer, flow_iters, transport_iters), FailureCause::NonFinite, hist);
            }
            let dc = linf_diff(&next, &conc);
            conc = next;
            if max_abs(&conc) > cfg.divergence_norm_cap {
                return fail((outer, flow_iters, transport_iters), FailureCause::Divergence, hist);
            }
            if dc <= cfg.tolerance {
                inner_ok = true;
                break;
            }
        }
        if !inner_ok {
            return fail((outer, flow_iters, transport_iters), FailureCause::IterationCap, hist);
        }

        let mut next_vec = psi;
        next_vec.extend_from_slice(&theta);
        next_vec.extend_from_slice(&conc);
        if cfg.aa_m > 0 {
            next_vec = unscaled(
                aa_outer.step(&scaled(&cur.to_vec(), n, scale), &scaled(&next_vec, n, scale)),
                n,
                scale,
            );
            if !all_finite(&next_vec) {
                return fail((outer, flow_iters, transport_iters), FailureCause::NonFinite, hist);
            }
        }
        let next = DiscreteState::from_vec(&next_vec, n, t_new);
        let dpsi = linf_diff(&next.psi, &cur.psi);
        let dtheta = linf_diff(&next.theta, &cur.theta);
        let dconc = linf_diff(&next.conc, &cur.conc);
        hist.push(dpsi, dtheta, dconc);
        if max_abs(&next_vec) > cfg.divergence_norm_cap {
            return fail((outer, flow_iters, transport_iters), FailureCause::Divergence, hist);
        }
        cur = next;
        if dpsi <= cfg.tolerance && dtheta <= cfg.tolerance && dconc <= cfg.tolerance {
            return StepOutcome {
                state: Some(cur),
                record: StepRecord {
                    iterations: outer,
                    flow_iterations: flow_iters,
                    transport_iterations: transport_iters,
                    converged: true,
                    failure: None,
                },
                residuals: hist,
            };
        }
    }
    fail(
        (cfg.max_iter_per_step, flow_iters, transport_iters),
        FailureCause::IterationCap,
        hist,
    )
}

/// Runs the full simulation over t in (0, T] with fixed step dt.
///
/// Returns the trajectory (including the initial state) and the aggregated
/// report. A failing step terminates the run; its partial data stay in the
/// report and the failed state is never used.
pub fn run_simulation(
    p: &Problem,
    ic: &DiscreteState,
    cfg: &SchemeConfig,
    t_end: f64,
    dt: f64,
) -> Result<(Vec<DiscreteState>, RunReport), SolverError> {
    cfg.validate()?;
    if !(dt > 0.0) || !(t_end > 0.0) {
        return Err(SolverError::InvalidTimeGrid { t_end, dt });
    }
    let steps_f = t_end / dt;
    let steps = steps_f.round() as usize;
    if steps == 0 || (steps_f - steps as f64).abs() > 1e-8 * steps_f.max(1.0) {
        return Err(SolverError::InvalidTimeGrid { t_end, dt });
    }
    ic.validate(p.num_cells()).map_err(SolverError::Assembly)?;

    let start = Instant::now();
    let mut rec = CondRecorders::new(cfg.record_condition);
    let mut trajectory = Vec::with_capacity(steps + 1);
    trajectory.push(ic.clone());
    let mut records = Vec::with_capacity(steps);
    let mut final_hist = ResidualHistory::default();
    let mut failure = None;

    for k in 1..=steps {
        let t_new = k as f64 * dt;
        let old = trajectory.last().unwrap();
        let outcome = match cfg.coupling {
            Coupling::Monolithic => step_monolithic(old, dt, t_new, p, cfg, &mut rec),
            Coupling::AlternateSplit => step_altlins(old, dt, t_new, p, cfg, &mut rec),
            Coupling::NonlinearSplit => step_nonlins(old, dt, t_new, p, cfg, &mut rec),
        };
        final_hist = outcome.residuals;
        let failed = outcome.record.failure;
        records.push(outcome.record);
        match outcome.state {
            Some(s) => trajectory.push(s),
            None => {
                failure = failed;
                break;
            }
        }
    }

    let report = RunReport {
        converged: failure.is_none(),
        failure,
        steps: records,
        cond_full: rec.full,
        cond_flow: rec.flow,
        cond_transport: rec.transport,
        final_step_residuals: final_hist,
        wall_time: start.elapsed(),
    };
    Ok((trajectory, report))
}

/// Averaged per-iteration convergence order of a residual sequence:
/// ORD_j = log(res_{j+1}/res_j) / log(res_j/res_{j-1}), averaged over the
/// admissible interior indices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrdEstimate {
    pub mean: f64,
    pub used: usize,
    pub excluded: usize,
}

pub fn ord_per_iteration(res: &[f64]) -> Result<OrdEstimate, SolverError> {
    if res.len() < 3 || res.iter().any(|&r| !(r > 0.0) || !r.is_finite()) {
        return Err(SolverError::InvalidResidualHistory);
    }
    let mut sum = 0.0;
    let mut used = 0;
    let mut excluded = 0;
    for j in 1..res.len() - 1 {
        let den = (res[j] / res[j - 1]).ln();
        let num = (res[j + 1] / res[j]).ln();
        if den.abs() < 1e-12 || !num.is_finite() || !den.is_finite() {
            excluded += 1;
            continue;
        }
        let ord = num / den;
        if !ord.is_finite() {
            excluded += 1;
            continue;
        }
        sum += ord;
        used += 1;
    }
    if used == 0 {
        return Err(SolverError::StalledResidualHistory);
    }
    Ok(OrdEstimate { mean: sum / used as f64, used, excluded })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn check_stop_conjunction() {
        assert!(check_stop(&[0.0, 0.0], &[0.0], &[0.0], 1e-6));
        assert!(check_stop(&[1e-7, -1e-7], &[1e-7], &[1e-7], 1e-6));
        assert!(!check_stop(&[2e-6, 0.0], &[0.0], &[0.0], 1e-6));
        assert!(!check_stop(&[0.0], &[2e-6], &[0.0], 1e-6));
    }

    #[test]
    fn ord_of_geometric_sequence_is_one() {
        let est = ord_per_iteration(&[1e-1, 1e-2, 1e-3]).unwrap();
        assert_relative_eq!(est.mean, 1.0, epsilon = 1e-12);
        assert_eq!(est.used, 1);
    }

    #[test]
    fn ord_of_squaring_sequence_is_two() {
        let est = ord_per_iteration(&[1e-1, 1e-2, 1e-4]).unwrap();
        assert_relative_eq!(est.mean, 2.0, epsilon = 1e-12);
    }

    #[test]
    fn ord_rejects_short_or_nonpositive() {
        assert!(ord_per_iteration(&[1.0, 0.5]).is_err());
        assert!(ord_per_iteration(&[1.0, 0.0, 0.5]).is_err());
        assert!(ord_per_iteration(&[1.0, -0.5, 0.2]).is_err());
    }

    #[test]
    fn ord_excludes_stalls() {
        // middle pair stalls (equal residuals), the rest is geometric
        let est = ord_per_iteration(&[1e-1, 1e-2, 1e-2, 1e-3, 1e-4]).unwrap();
        assert!(est.excluded >= 1);
        assert!(est.used >= 1);
    }

    #[test]
    fn config_validation() {
        let mut cfg = SchemeConfig::new(Coupling::Monolithic, LinKind::LScheme);
        assert!(cfg.validate().is_ok());
        cfg.l = LParams { l1: 0.0, l2: 0.1, l3: 0.1 };
        assert!(cfg.validate().is_err());
        cfg.l = LParams::uniform(0.1);
        cfg.tolerance = 0.0;
        assert!(cfg.validate().is_err());
    }
}
