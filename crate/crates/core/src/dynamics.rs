//! Steppers for the pair `(y, w)` and the run loop that records a trace.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::analysis::{check_lemma_barrier, check_lemma_norm_drop, PotentialReport};
use crate::linalg::{l1_norm, least_squares_solution, max_abs, weighted_l2_min, FEASIBILITY_TOLERANCE};
use crate::model::Instance;
use crate::trace::{TerminalStatus, Trace};
use crate::{Error, Result};

/// Magnitude below which an undamped step freezes a coordinate at zero.
pub const DEFAULT_ZERO_CLAMP: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case", tag = "kind"))]
pub enum Variant {
    /// `(y, w) ← (1 − h)(y, w) + h(q, |q|)` with `q` weighted by `w`.
    Unified,
    /// Weights `|y|`, undamped, with permanent zeroing.
    Irls,
    /// Same as [`Variant::Unified`] restricted to `h < 1` and `w > 0`.
    Physarum,
    /// Weights `√(yᵢ² + η²)`, undamped, never zero.
    RegularizedIrls { eta: f64 },
}

impl Variant {
    pub fn name(&self) -> &'static str {
        match self {
            Variant::Unified => "unified",
            Variant::Irls => "irls",
            Variant::Physarum => "physarum",
            Variant::RegularizedIrls { .. } => "reg-irls",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepConfig {
    pub h: f64,
    pub variant: Variant,
    pub zero_clamp: f64,
}

impl StepConfig {
    pub fn unified(h: f64) -> Self {
        Self {
            h,
            variant: Variant::Unified,
            zero_clamp: DEFAULT_ZERO_CLAMP,
        }
    }

    pub fn irls() -> Self {
        Self {
            h: 1.0,
            variant: Variant::Irls,
            zero_clamp: DEFAULT_ZERO_CLAMP,
        }
    }

    pub fn physarum(h: f64) -> Self {
        Self {
            h,
            variant: Variant::Physarum,
            zero_clamp: DEFAULT_ZERO_CLAMP,
        }
    }

    pub fn regularized_irls(eta: f64) -> Self {
        Self {
            h: 1.0,
            variant: Variant::RegularizedIrls { eta },
            zero_clamp: DEFAULT_ZERO_CLAMP,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = || Error::BadStepSize {
            h: self.h,
            variant: self.variant.name(),
        };
        match self.variant {
            Variant::Unified if !(self.h > 0.0 && self.h <= 1.0) => Err(bad()),
            Variant::Irls if self.h != 1.0 => Err(bad()),
            Variant::Physarum if !(self.h > 0.0 && self.h < 1.0) => Err(bad()),
            Variant::RegularizedIrls { eta } if !(eta > 0.0 && eta.is_finite()) => {
                Err(Error::InvalidParameters(format!("eta must be positive, got {eta}")))
            }
            Variant::RegularizedIrls { .. } if self.h != 1.0 => Err(bad()),
            _ if !(self.zero_clamp >= 0.0) => {
                Err(Error::InvalidParameters("zero_clamp must be nonnegative".into()))
            }
            _ => Ok(()),
        }
    }
}

/// A feasible point `y` and the weights `w` that define the next solve.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct State {
    pub y: Vec<f64>,
    pub w: Vec<f64>,
    pub k: u64,
    /// `wᵢ > 0`.
    pub support: Vec<bool>,
}

impl State {
    pub fn new(y: Vec<f64>, w: Vec<f64>) -> Self {
        let support = w.iter().map(|&v| v > 0.0).collect();
        Self { y, w, k: 0, support }
    }

    /// `w = |y|`; entries at or below `zero_clamp` start frozen at zero.
    pub fn irls(mut y: Vec<f64>, zero_clamp: f64) -> Self {
        for v in &mut y {
            if v.abs() <= zero_clamp {
                *v = 0.0;
            }
        }
        let w = y.iter().map(|v| v.abs()).collect();
        Self::new(y, w)
    }

    /// `w = |y| + 1`, which puts `w ≥ 1` and `|y| ≤ w`.
    pub fn physarum(y: Vec<f64>) -> Self {
        let w = y.iter().map(|v| v.abs() + 1.0).collect();
        Self::new(y, w)
    }

    /// Start for `cfg`'s variant from a feasible `y`.
    pub fn for_variant(y: Vec<f64>, cfg: &StepConfig) -> Self {
        match cfg.variant {
            Variant::Irls => Self::irls(y, cfg.zero_clamp),
            Variant::Unified if cfg.h == 1.0 => Self::irls(y, cfg.zero_clamp),
            Variant::RegularizedIrls { eta } => {
                let w = y.iter().map(|v| libm::hypot(*v, eta)).collect();
                Self::new(y, w)
            }
            Variant::Unified | Variant::Physarum => Self::physarum(y),
        }
    }

    fn successor(&self, y: Vec<f64>, w: Vec<f64>) -> Self {
        let support = w.iter().map(|&v| v > 0.0).collect();
        Self {
            y,
            w,
            k: self.k + 1,
            support,
        }
    }
}

/// Least-squares start `Aᵀ(AAᵀ)⁻¹b`.
pub fn least_squares_start(inst: &Instance) -> Result<Vec<f64>> {
    least_squares_solution(inst.a(), inst.b())
}

/// One step together with the minimizer that drove it.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    /// Weighted ℓ2 minimizer for the weights of the incoming state.
    pub q: Vec<f64>,
    /// `Σ qᵢ²/wᵢ`.
    pub energy: f64,
    /// `bᵀ L⁺ b`.
    pub dual_energy: f64,
    pub next: State,
}

fn check_len(inst: &Instance, st: &State) -> Result<()> {
    for len in [st.y.len(), st.w.len()] {
        if len != inst.cols() {
            return Err(Error::DimensionMismatch {
                expected: inst.cols(),
                found: len,
            });
        }
    }
    Ok(())
}

fn clamp_small(q: &mut [f64], clamp: f64) {
    for v in q.iter_mut() {
        if v.abs() <= clamp {
            *v = 0.0;
        }
    }
}

fn damped(inst: &Instance, st: &State, h: f64, clamp: Option<f64>) -> Result<StepOutcome> {
    let sol = weighted_l2_min(inst.a(), inst.b(), &st.w)?;
    let mut q = sol.q;
    if let Some(c) = clamp {
        clamp_small(&mut q, c);
    }
    let (y, w) = if h == 1.0 {
        (q.clone(), q.iter().map(|v| v.abs()).collect())
    } else {
        let keep = 1.0 - h;
        let y = st.y.iter().zip(&q).map(|(y, q)| keep * y + h * q).collect();
        let w = st
            .w
            .iter()
            .zip(&q)
            .map(|(w, q)| keep * w + h * q.abs())
            .collect();
        (y, w)
    };
    Ok(StepOutcome {
        q,
        energy: sol.energy,
        dual_energy: sol.dual_energy,
        next: st.successor(y, w),
    })
}

/// Dispatches on `cfg.variant`.
pub fn step(inst: &Instance, st: &State, cfg: &StepConfig) -> Result<StepOutcome> {
    cfg.validate()?;
    check_len(inst, st)?;
    match cfg.variant {
        Variant::Unified => {
            let clamp = (cfg.h == 1.0).then_some(cfg.zero_clamp);
            damped(inst, st, cfg.h, clamp)
        }
        Variant::Physarum => physarum_outcome(inst, st, cfg.h),
        Variant::Irls => irls_outcome(inst, st, cfg.zero_clamp),
        Variant::RegularizedIrls { eta } => regularized_outcome(inst, st, eta),
    }
}

/// `y' = (1 − h)y + hq`, `w' = (1 − h)w + h|q|` with `q` weighted by `w`.
/// At `h = 1` entries of `q` at or below `zero_clamp` become exact zeros.
pub fn unified_step(inst: &Instance, st: &State, cfg: &StepConfig) -> Result<State> {
    let cfg = StepConfig {
        variant: Variant::Unified,
        ..*cfg
    };
    step(inst, st, &cfg).map(|o| o.next)
}

fn irls_outcome(inst: &Instance, st: &State, zero_clamp: f64) -> Result<StepOutcome> {
    // Frozen coordinates stay out of the support even if y drifted.
    let weights: Vec<f64> = st
        .y
        .iter()
        .zip(&st.support)
        .map(|(y, &on)| if on && y.abs() > zero_clamp { y.abs() } else { 0.0 })
        .collect();
    if weights.iter().all(|&w| w == 0.0) {
        return Err(Error::InfeasibleOnSupport {
            residual: max_abs(inst.b()),
        });
    }
    let sol = weighted_l2_min(inst.a(), inst.b(), &weights)?;
    let mut y = sol.q;
    clamp_small(&mut y, zero_clamp);
    let w = y.iter().map(|v| v.abs()).collect();
    Ok(StepOutcome {
        q: y.clone(),
        energy: sol.energy,
        dual_energy: sol.dual_energy,
        next: st.successor(y, w),
    })
}

/// `y' = argmin Σ xᵢ²/|yᵢ|` over `Ax = b`, solved on the coordinates where
/// `y` is nonzero; the rest stay at zero for good.
pub fn irls_step(inst: &Instance, st: &State) -> Result<State> {
    check_len(inst, st)?;
    irls_outcome(inst, st, DEFAULT_ZERO_CLAMP).map(|o| o.next)
}

fn physarum_outcome(inst: &Instance, st: &State, h: f64) -> Result<StepOutcome> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::BadStepSize {
            h,
            variant: "physarum",
        });
    }
    if let Some(index) = st.w.iter().position(|&w| !(w > 0.0)) {
        return Err(Error::NonPositiveWeight { index });
    }
    // Euler form w + h(|q| − w) of the continuous dynamics; algebraically
    // the unified update, computed independently of it.
    let sol = weighted_l2_min(inst.a(), inst.b(), &st.w)?;
    let q = sol.q;
    let y = st.y.iter().zip(&q).map(|(y, q)| y + h * (q - y)).collect();
    let w = st
        .w
        .iter()
        .zip(&q)
        .map(|(w, q)| {
            let next = w + h * (q.abs() - w);
            // Positive in exact arithmetic; guard against underflow.
            if next > 0.0 {
                next
            } else {
                f64::MIN_POSITIVE
            }
        })
        .collect();
    Ok(StepOutcome {
        q,
        energy: sol.energy,
        dual_energy: sol.dual_energy,
        next: st.successor(y, w),
    })
}

pub fn physarum_step(inst: &Instance, st: &State, h: f64) -> Result<State> {
    check_len(inst, st)?;
    physarum_outcome(inst, st, h).map(|o| o.next)
}

fn regularized_outcome(inst: &Instance, st: &State, eta: f64) -> Result<StepOutcome> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidParameters(format!("eta must be positive, got {eta}")));
    }
    let weights: Vec<f64> = st.y.iter().map(|v| libm::hypot(*v, eta)).collect();
    let sol = weighted_l2_min(inst.a(), inst.b(), &weights)?;
    let y = sol.q.clone();
    Ok(StepOutcome {
        q: sol.q,
        energy: sol.energy,
        dual_energy: sol.dual_energy,
        next: st.successor(y, weights),
    })
}

/// Weighted ℓ2 step with weights `√(yᵢ² + η²)`; `w'` holds those weights.
pub fn regularized_irls_step(inst: &Instance, st: &State, eta: f64) -> Result<State> {
    check_len(inst, st)?;
    regularized_outcome(inst, st, eta).map(|o| o.next)
}

/// `ε / (40·n²·α²)`, the step size under which the barrier potential is
/// guaranteed to climb.
pub fn theorem_step_size(inst: &Instance, eps: f64, alpha: f64) -> Result<f64> {
    if !(eps > 0.0 && eps < 0.5) {
        return Err(Error::BadEpsilon(eps));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidParameters(format!("alpha must be positive, got {alpha}")));
    }
    let n = inst.cols() as f64;
    Ok(eps / (40.0 * n * n * alpha * alpha))
}

/// `constant · (ln M + ln ‖x*‖₁) / (h·ε²)` with `M = ‖w⁰‖₁ / ‖x*‖₁`, i.e.
/// `constant · ln ‖w⁰‖₁ / (h·ε²)`.
pub fn theorem_iteration_cap(w0_l1: f64, h: f64, eps: f64, constant: f64) -> f64 {
    constant * libm::log(w0_l1) / (h * eps * eps)
}

/// When to end a [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StoppingRule {
    pub max_iter: u64,
    /// Stop once `‖w^(k)‖₁` is at or below this value.
    pub target_l1_w: Option<f64>,
    /// Stop once `‖y^(k) − y^(k−1)‖∞ ≤ tol·(1 + ‖y^(k)‖∞)`.
    pub stationary_tol: Option<f64>,
}

impl StoppingRule {
    pub fn max_iter(max_iter: u64) -> Self {
        Self {
            max_iter,
            target_l1_w: None,
            stationary_tol: None,
        }
    }

    /// `‖w‖₁ ≤ (1 + ε)·‖x*‖₁`.
    pub fn gap(max_iter: u64, eps: f64, optimum: f64) -> Self {
        Self {
            target_l1_w: Some((1.0 + eps) * optimum),
            ..Self::max_iter(max_iter)
        }
    }

    pub fn with_stationary_tol(mut self, tol: f64) -> Self {
        self.stationary_tol = Some(tol);
        self
    }
}

/// Extra recording for [`run_with`].
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub instance_id: String,
    /// Enables the barrier column and barrier check.
    pub x_star: Option<Vec<f64>>,
    /// Enables the lemma checks on consecutive rows.
    pub eps: Option<f64>,
    /// Needed by the barrier check.
    pub alpha: Option<f64>,
    pub record_iterates: bool,
    /// Keep every `every`-th row; 0 and 1 keep all.
    pub every: u64,
}

/// Owns the evolving state and advances it one step at a time.
pub struct Stepper<'a> {
    inst: &'a Instance,
    cfg: StepConfig,
    state: State,
}

/// The state that was just left and the minimizer computed from it.
pub struct Advance {
    pub previous: State,
    pub q: Vec<f64>,
    pub energy: f64,
    pub dual_energy: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(inst: &'a Instance, cfg: StepConfig, start: State) -> Result<Self> {
        cfg.validate()?;
        check_len(inst, &start)?;
        let residual = inst.residual(&start.y);
        if !(residual <= FEASIBILITY_TOLERANCE * (1.0 + max_abs(inst.b()))) {
            return Err(Error::InfeasibleState { residual });
        }
        Ok(Self {
            inst,
            cfg,
            state: start,
        })
    }

    pub fn state(&self) -> &State {
        &self.state
    }

    pub fn into_state(self) -> State {
        self.state
    }

    pub fn advance(&mut self) -> Result<Advance> {
        let out = step(self.inst, &self.state, &self.cfg)?;
        let previous = core::mem::replace(&mut self.state, out.next);
        Ok(Advance {
            previous,
            q: out.q,
            energy: out.energy,
            dual_energy: out.dual_energy,
        })
    }
}

pub fn run(inst: &Instance, start: State, cfg: &StepConfig, stop: &StoppingRule) -> Trace {
    run_with(inst, start, cfg, stop, &RunOptions::default())
}

/// Iterates the configured stepper. Row `k` describes state `k` and the
/// minimizer computed from it; a step that fails ends the run with the
/// error recorded in the terminal status.
pub fn run_with(
    inst: &Instance,
    start: State,
    cfg: &StepConfig,
    stop: &StoppingRule,
    opts: &RunOptions,
) -> Trace {
    let mut trace = Trace::new(opts.instance_id.clone(), *cfg);
    trace.column_names = inst.column_names.clone();
    if opts.record_iterates {
        trace.iterates = Some(Vec::new());
    }
    let every = opts.every.max(1);
    let x_star = opts.x_star.as_deref();
    let mut stepper = match Stepper::new(inst, *cfg, start) {
        Ok(s) => s,
        Err(e) => {
            trace.terminal_status = TerminalStatus::KernelError(e.to_string());
            return trace;
        }
    };

    let mut prev_report: Option<PotentialReport> = None;
    let mut prev_y: Option<Vec<f64>> = None;
    let mut barrier_skipped = false;
    loop {
        let k = stepper.state().k;
        let residual = inst.residual(&stepper.state().y);
        let adv = match stepper.advance() {
            Ok(a) => a,
            Err(e) => {
                trace.terminal_status = match e {
                    Error::InfeasibleOnSupport { .. } => TerminalStatus::SupportCollapse,
                    other => TerminalStatus::KernelError(other.to_string()),
                };
                break;
            }
        };
        let report = PotentialReport::new(k, &adv.previous.y, &adv.previous.w, &adv.q, adv.energy, x_star);

        if let (Some(prev), Some(eps)) = (&prev_report, opts.eps) {
            trace.checks.push(check_lemma_norm_drop(prev, &report, cfg.h, eps));
            if let (Some(x), Some(alpha), false) = (x_star, opts.alpha, barrier_skipped) {
                match check_lemma_barrier(prev, &report, cfg.h, eps, x, alpha) {
                    Ok(c) => trace.checks.push(c),
                    Err(e) => {
                        barrier_skipped = true;
                        trace.notes.push(format!("barrier check skipped: {e}"));
                    }
                }
            }
        }

        let stationary = match (stop.stationary_tol, &prev_y) {
            (Some(tol), Some(py)) => {
                let diff = py
                    .iter()
                    .zip(&adv.previous.y)
                    .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()));
                diff <= tol * (1.0 + max_abs(&adv.previous.y))
            }
            _ => false,
        };
        let target = stop.target_l1_w.is_some_and(|t| report.l1_w <= t);
        let status = if target {
            Some(TerminalStatus::TargetReached)
        } else if stationary {
            Some(TerminalStatus::Stationary)
        } else if k >= stop.max_iter {
            Some(TerminalStatus::MaxIter)
        } else {
            None
        };

        if k % every == 0 || status.is_some() {
            trace.rows.push(report.clone());
            trace.residuals.push(residual);
            if let Some(it) = trace.iterates.as_mut() {
                it.push(adv.previous.y.clone());
            }
        }
        if let Some(s) = status {
            trace.terminal_status = s;
            break;
        }
        prev_report = Some(report);
        prev_y = Some(adv.previous.y);
    }
    trace
}

/// `‖y‖₁` of the last recorded iterate, or of the last row.
pub fn final_l1_y(trace: &Trace) -> Option<f64> {
    match &trace.iterates {
        Some(it) => it.last().map(|y| l1_norm(y)),
        None => trace.rows.last().map(|r| r.l1_y),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use crate::linalg::Matrix;
    use crate::model::{appendix_a_state, build_graph_instance, GraphSpec};
    use approx::assert_relative_eq;

    fn scalar() -> Instance {
        Instance::new(Matrix::identity(1), vec![1.0]).unwrap()
    }

    fn split() -> Instance {
        Instance::new(Matrix::from_rows(&[vec![1.0, 1.0]]).unwrap(), vec![1.0]).unwrap()
    }

    #[test]
    fn unified_scalar_half_step() {
        let st = State::new(vec![1.0], vec![2.0]);
        let next = unified_step(&scalar(), &st, &StepConfig::unified(0.5)).unwrap();
        assert_eq!(next.y, vec![1.0]);
        assert_eq!(next.w, vec![1.5]);
        assert_eq!(next.k, 1);
    }

    #[test]
    fn unified_split_half_step() {
        let st = State::new(vec![0.5, 0.5], vec![1.0, 3.0]);
        let next = unified_step(&split(), &st, &StepConfig::unified(0.5)).unwrap();
        assert_relative_eq!(next.y[0], 0.375, epsilon = 1e-15);
        assert_relative_eq!(next.y[1], 0.625, epsilon = 1e-15);
        assert_relative_eq!(next.w[0], 0.625, epsilon = 1e-15);
        assert_relative_eq!(next.w[1], 1.875, epsilon = 1e-15);
    }

    #[test]
    fn unified_full_step_is_irls_image() {
        let st = State::new(vec![0.5, 0.5], vec![1.0, 3.0]);
        let next = unified_step(&split(), &st, &StepConfig::unified(1.0)).unwrap();
        assert_relative_eq!(next.y[0], 0.25, epsilon = 1e-15);
        assert_relative_eq!(next.y[1], 0.75, epsilon = 1e-15);
        assert_eq!(next.w, next.y.iter().map(|v| v.abs()).collect::<Vec<_>>());
    }

    #[test]
    fn irls_scalar() {
        let next = irls_step(&scalar(), &State::irls(vec![7.0], 1e-14)).unwrap();
        assert_eq!(next.y, vec![1.0]);
    }

    #[test]
    fn irls_parallel_edges_fixed_point() {
        let g = GraphSpec {
            vertex_count: 2,
            edges: vec![(0, 1), (0, 1)],
            source: 0,
            sink: 1,
        };
        let inst = build_graph_instance(&g).unwrap();
        let next = irls_step(&inst, &State::irls(vec![0.3, 0.7], 1e-14)).unwrap();
        assert_relative_eq!(next.y[0], 0.3, epsilon = 1e-15);
        assert_relative_eq!(next.y[1], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn irls_zeroes_the_bridge_in_one_step() {
        let (inst, y0) = appendix_a_state();
        let next = irls_step(&inst, &State::irls(y0, DEFAULT_ZERO_CLAMP)).unwrap();
        assert_eq!(next.y[3], 0.0);
        assert!(!next.support[3]);
        for (i, v) in next.y.iter().enumerate() {
            if i != 3 {
                assert_relative_eq!(*v, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn physarum_scalar_geometric_approach() {
        let inst = scalar();
        let s1 = physarum_step(&inst, &State::new(vec![1.0], vec![2.0]), 0.5).unwrap();
        assert_eq!(s1.w, vec![1.5]);
        let s2 = physarum_step(&inst, &s1, 0.5).unwrap();
        assert_eq!(s2.w, vec![1.25]);
    }

    #[test]
    fn physarum_preconditions() {
        let inst = scalar();
        let st = State::new(vec![1.0], vec![2.0]);
        assert!(physarum_step(&inst, &st, 1.0).is_err());
        assert!(physarum_step(&inst, &st, 0.0).is_err());
        let zero = State::new(vec![1.0], vec![0.0]);
        assert_eq!(
            physarum_step(&inst, &zero, 0.5),
            Err(Error::NonPositiveWeight { index: 0 })
        );
    }

    #[test]
    fn regularized_examples() {
        let next = regularized_irls_step(&split(), &State::new(vec![0.9, 0.1], vec![1.0, 1.0]), 1e6).unwrap();
        assert!((next.y[0] - 0.5).abs() < 1e-9 && (next.y[1] - 0.5).abs() < 1e-9);
        let next = regularized_irls_step(&scalar(), &State::new(vec![3.0], vec![3.0]), 0.1).unwrap();
        assert_relative_eq!(next.y[0], 1.0, epsilon = 1e-15);

        let (inst, y0) = appendix_a_state();
        let next = regularized_irls_step(&inst, &State::new(y0.clone(), y0), 0.01).unwrap();
        assert!(next.y[3].abs() > 0.0);
    }

    #[test]
    fn step_size_formula() {
        let (inst, _) = appendix_a_state();
        assert_relative_eq!(theorem_step_size(&inst, 0.1, 1.0).unwrap(), 0.1 / 3240.0);
        assert_relative_eq!(theorem_step_size(&split(), 0.4, 1.0).unwrap(), 0.0025);
        assert_eq!(theorem_step_size(&split(), 0.6, 1.0), Err(Error::BadEpsilon(0.6)));
        assert_eq!(theorem_step_size(&split(), 0.0, 1.0), Err(Error::BadEpsilon(0.0)));
    }

    #[test]
    fn config_validation() {
        assert!(StepConfig::physarum(1.0).validate().is_err());
        assert!(StepConfig::unified(0.0).validate().is_err());
        assert!(StepConfig::regularized_irls(0.0).validate().is_err());
        let mut c = StepConfig::irls();
        c.h = 0.5;
        assert!(c.validate().is_err());
        assert!(StepConfig::unified(1.0).validate().is_ok());
    }

    #[test]
    fn run_with_zero_iterations() {
        let t = run(
            &scalar(),
            State::physarum(vec![1.0]),
            &StepConfig::physarum(0.5),
            &StoppingRule::max_iter(0),
        );
        assert_eq!(t.rows.len(), 1);
        assert_eq!(t.rows[0].k, 0);
        assert_eq!(t.terminal_status, TerminalStatus::MaxIter);
    }

    #[test]
    fn run_detects_support_collapse() {
        // The only coordinate is below the clamp, so nothing can carry b.
        let inst = Instance::new(Matrix::identity(1), vec![1e-15]).unwrap();
        let t = run(
            &inst,
            State::irls(vec![1e-15], DEFAULT_ZERO_CLAMP),
            &StepConfig::irls(),
            &StoppingRule::max_iter(5),
        );
        assert_eq!(t.terminal_status, TerminalStatus::SupportCollapse);
    }

    #[test]
    fn run_rejects_infeasible_start() {
        let t = run(
            &scalar(),
            State::physarum(vec![2.0]),
            &StepConfig::physarum(0.5),
            &StoppingRule::max_iter(3),
        );
        assert!(matches!(t.terminal_status, TerminalStatus::KernelError(_)));
        assert!(t.rows.is_empty());
    }

    #[test]
    fn appendix_a_irls_run_stalls_at_four() {
        let (inst, y0) = appendix_a_state();
        let opts = RunOptions {
            record_iterates: true,
            ..RunOptions::default()
        };
        let t = run_with(
            &inst,
            State::irls(y0, DEFAULT_ZERO_CLAMP),
            &StepConfig::irls(),
            &StoppingRule::max_iter(50).with_stationary_tol(1e-13),
            &opts,
        );
        assert_eq!(t.terminal_status, TerminalStatus::Stationary);
        assert_eq!(t.iterates.as_ref().unwrap()[1][3], 0.0);
        assert!((final_l1_y(&t).unwrap() - 4.0).abs() < 1e-9);
    }

    #[test]
    fn run_reaches_target_and_thins_rows() {
        let (inst, _) = appendix_a_state();
        let y0 = least_squares_start(&inst).unwrap();
        let opts = RunOptions {
            every: 10,
            eps: Some(0.1),
            ..RunOptions::default()
        };
        let t = run_with(
            &inst,
            State::physarum(y0),
            &StepConfig::physarum(0.05),
            &StoppingRule::gap(100_000, 0.1, 3.0),
            &opts,
        );
        assert_eq!(t.terminal_status, TerminalStatus::TargetReached);
        let last = t.rows.last().unwrap();
        assert!(last.l1_w <= 3.3);
        assert!(t.rows.iter().rev().skip(1).all(|r| r.k % 10 == 0));
        assert!(t.checks.iter().all(|c| c.passed));
    }
}
