//! CSI-free position search: ZO-AdaMM driven by magnitude-only measurements.
//!
//! Each iteration probes the receiver at `r ± μ·e_i` for a randomly chosen
//! coordinate `i`, forms a central-difference gradient of `|y|²`, feeds it to
//! adaptive-moment updates with bias correction and takes an ascent step that
//! is clamped back into the region.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Position, Probe, Region};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperParams {
    /// α, in wavelengths per step.
    pub step_size: f64,
    pub beta1: f64,
    pub beta2: f64,
    /// Smoothing radius μ of the central difference, in wavelengths.
    pub mu: f64,
    /// Dimension factor `d` of the gradient estimate.
    pub dim_factor: f64,
    /// Added to `√v̂` in the update denominator.
    pub epsilon: f64,
    /// Random candidates probed to pick the starting point (N).
    pub num_init_candidates: usize,
    /// Iteration budget (T); each iteration costs two measurements.
    pub max_iterations: usize,
    /// Stop once the last [`EARLY_STOP_WINDOW`] steps were all shorter than
    /// [`EARLY_STOP_NORM`].
    pub early_stop: bool,
}

pub const EARLY_STOP_WINDOW: usize = 5;
pub const EARLY_STOP_NORM: f64 = 1e-3;

impl Default for HyperParams {
    fn default() -> Self {
        Self {
            step_size: 0.03,
            beta1: 0.9,
            beta2: 0.99,
            mu: 0.1,
            dim_factor: 2.0,
            epsilon: 1e-8,
            num_init_candidates: 9,
            max_iterations: 30,
            early_stop: false,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.step_size > 0.0 && self.step_size.is_finite()) {
            problems.push(format!(
                "step_size must be positive, got {}",
                self.step_size
            ));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            problems.push(format!("beta1 must lie in [0, 1), got {}", self.beta1));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            problems.push(format!("beta2 must lie in [0, 1), got {}", self.beta2));
        }
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            problems.push(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.dim_factor > 0.0 && self.dim_factor.is_finite()) {
            problems.push(format!(
                "dim_factor must be positive, got {}",
                self.dim_factor
            ));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            problems.push(format!(
                "epsilon must be non-negative, got {}",
                self.epsilon
            ));
        }
        if self.num_init_candidates == 0 {
            problems.push("num_init_candidates must be at least 1".to_string());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(invalid(problems.join("; ")))
        }
    }

    /// Measurements consumed by a full run: `N + 2T`.
    pub fn measurement_budget(&self) -> usize {
        self.num_init_candidates + 2 * self.max_iterations
    }
}

/// Standard unit direction used by the gradient estimate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::X => 0,
            Axis::Y => 1,
        }
    }

    pub fn unit(self) -> Position {
        match self {
            Axis::X => Position::new(1.0, 0.0),
            Axis::Y => Position::new(0.0, 1.0),
        }
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.random_bool(0.5) {
            Axis::X
        } else {
            Axis::Y
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientEstimate {
    pub gradient: [f64; 2],
    /// `|y(r + μu)|²`
    pub power_plus: f64,
    /// `|y(r − μu)|²`
    pub power_minus: f64,
}

/// Two-point central-difference gradient of `|y|²` along `axis`.
///
/// The probe points are clamped into `region` (the antenna cannot leave it),
/// while the quotient keeps the nominal `2μ` spacing.
pub fn zo_gradient<P: Probe + ?Sized>(
    probe: &mut P,
    position: Position,
    mu: f64,
    axis: Axis,
    dim_factor: f64,
    region: &Region,
) -> Result<GradientEstimate> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(invalid(format!(
            "smoothing radius must be positive, got {mu}"
        )));
    }
    let offset = axis.unit() * mu;
    let power_plus = probe.measure(project(position + offset, region)).norm_sqr();
    let power_minus = probe.measure(project(position - offset, region)).norm_sqr();
    let mut gradient = [0.0; 2];
    gradient[axis.index()] = dim_factor / (2.0 * mu) * (power_plus - power_minus);
    Ok(GradientEstimate {
        gradient,
        power_plus,
        power_minus,
    })
}

/// Iterate of the adaptive-moment search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptimizerState {
    pub position: Position,
    /// First moment.
    pub m: [f64; 2],
    /// Second moment, elementwise non-negative.
    pub v: [f64; 2],
    /// Completed steps.
    pub t: u32,
}

impl OptimizerState {
    pub fn new(position: Position) -> Self {
        Self {
            position,
            m: [0.0; 2],
            v: [0.0; 2],
            t: 0,
        }
    }

    /// Bias-corrected moments `(m̂, v̂)` for the current counter; zero before
    /// the first step.
    pub fn bias_corrected(&self, hyper: &HyperParams) -> ([f64; 2], [f64; 2]) {
        if self.t == 0 {
            return ([0.0; 2], [0.0; 2]);
        }
        let c1 = 1.0 - hyper.beta1.powi(self.t as i32);
        let c2 = 1.0 - hyper.beta2.powi(self.t as i32);
        (
            [self.m[0] / c1, self.m[1] / c1],
            [self.v[0] / c2, self.v[1] / c2],
        )
    }
}

/// One ZO-AdaMM ascent step followed by projection onto the region.
pub fn adamm_step(
    state: &OptimizerState,
    gradient: [f64; 2],
    hyper: &HyperParams,
    region: &Region,
) -> OptimizerState {
    let mut next = *state;
    next.t += 1;
    for (i, &g) in gradient.iter().enumerate() {
        next.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g;
        next.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g * g;
    }
    let (m_hat, v_hat) = next.bias_corrected(hyper);
    let mut step = [0.0; 2];
    for i in 0..2 {
        let denom = v_hat[i].sqrt() + hyper.epsilon;
        // 0/0 only when the coordinate has never seen a gradient and ε = 0
        step[i] = if denom > 0.0 {
            hyper.step_size * m_hat[i] / denom
        } else {
            0.0
        };
    }
    next.position = project(
        Position::new(state.position.x + step[0], state.position.y + step[1]),
        region,
    );
    next
}

/// Componentwise clamp into `[-A/2, A/2]`.
pub fn project(position: Position, region: &Region) -> Position {
    let h = region.half_side();
    Position::new(position.x.clamp(-h, h), position.y.clamp(-h, h))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialPoint {
    pub position: Position,
    /// `|y|²` measured at the chosen candidate.
    pub measured_power: f64,
    /// Index of the chosen candidate among the draws.
    pub candidate: usize,
}

/// Probes `num_candidates` uniform random positions once each and keeps the
/// strongest; ties go to the lowest index.
pub fn init_position<P: Probe + ?Sized, R: Rng + ?Sized>(
    probe: &mut P,
    region: &Region,
    num_candidates: usize,
    rng: &mut R,
) -> Result<InitialPoint> {
    if num_candidates == 0 {
        return Err(invalid("at least one initialization candidate is required"));
    }
    let mut best: Option<InitialPoint> = None;
    for candidate in 0..num_candidates {
        let position = region.sample(rng);
        let measured_power = probe.measure(position).norm_sqr();
        if best.is_none_or(|b| measured_power > b.measured_power) {
            best = Some(InitialPoint {
                position,
                measured_power,
                candidate,
            });
        }
    }
    Ok(best.expect("num_candidates >= 1"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    /// 1-based iteration index.
    pub iteration: usize,
    /// Position the gradient was probed around.
    pub position: Position,
    pub axis: Axis,
    pub power_plus: f64,
    pub power_minus: f64,
    pub gradient: [f64; 2],
    /// Position after the projected update.
    pub updated: Position,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub initial: InitialPoint,
    pub iterations: Vec<IterationRecord>,
    /// Probe calls made by the run, read from the probe's own counter.
    pub measurements: u64,
}

impl Trajectory {
    pub fn final_position(&self) -> Position {
        self.iterations
            .last()
            .map_or(self.initial.position, |r| r.updated)
    }
}

/// Full CSI-free search: initialization from `N` candidates, then up to `T`
/// ZO-AdaMM iterations of two measurements each.
///
/// `init_rng` draws the candidates and `direction_rng` the per-iteration axes.
pub fn optimize<P, R1, R2>(
    probe: &mut P,
    region: &Region,
    hyper: &HyperParams,
    init_rng: &mut R1,
    direction_rng: &mut R2,
) -> Result<(Position, Trajectory)>
where
    P: Probe + ?Sized,
    R1: Rng + ?Sized,
    R2: Rng + ?Sized,
{
    hyper.validate()?;
    let start_count = probe.measurement_count();
    let initial = init_position(probe, region, hyper.num_init_candidates, init_rng)?;

    let mut state = OptimizerState::new(initial.position);
    let mut iterations = Vec::with_capacity(hyper.max_iterations);
    let mut short_steps = 0usize;
    for iteration in 1..=hyper.max_iterations {
        let axis = Axis::random(direction_rng);
        let estimate = zo_gradient(
            probe,
            state.position,
            hyper.mu,
            axis,
            hyper.dim_factor,
            region,
        )?;
        let next = adamm_step(&state, estimate.gradient, hyper, region);
        iterations.push(IterationRecord {
            iteration,
            position: state.position,
            axis,
            power_plus: estimate.power_plus,
            power_minus: estimate.power_minus,
            gradient: estimate.gradient,
            updated: next.position,
        });

        if (next.position - state.position).norm() < EARLY_STOP_NORM {
            short_steps += 1;
        } else {
            short_steps = 0;
        }
        state = next;
        if hyper.early_stop && short_steps >= EARLY_STOP_WINDOW {
            break;
        }
    }

    let trajectory = Trajectory {
        initial,
        iterations,
        measurements: probe.measurement_count() - start_count,
    };
    Ok((state.position, trajectory))
}
