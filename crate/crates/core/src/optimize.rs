//! Numerical kernels: ternary search, clamped 1D gradient descent,
//! constriction-coefficient PSO and a central-difference gradient.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Bounds3, Interval, Point3};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iteration: usize,
    pub candidate: Vec<f64>,
    pub objective: f64,
}

/// Per-iteration record of an iterative optimizer.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct OptimizationTrace {
    pub records: Vec<TraceRecord>,
}

impl OptimizationTrace {
    pub fn push(&mut self, iteration: usize, candidate: &[f64], objective: f64) {
        self.records.push(TraceRecord {
            iteration,
            candidate: candidate.to_vec(),
            objective,
        });
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn objectives(&self) -> impl Iterator<Item = f64> + '_ {
        self.records.iter().map(|r| r.objective)
    }
}

fn finite(v: f64, context: &str) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::non_finite(context))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TernaryConfig {
    pub a: f64,
    pub b: f64,
    pub precision: f64,
}

impl TernaryConfig {
    pub fn new(a: f64, b: f64, precision: f64) -> Result<Self> {
        let cfg = Self { a, b, precision };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a < self.b) || !self.a.is_finite() || !self.b.is_finite() {
            return Err(Error::invalid(
                "interval",
                format!("need a < b, got [{}, {}]", self.a, self.b),
            ));
        }
        if !(self.precision > 0.0) {
            return Err(Error::invalid("precision", "must be positive"));
        }
        Ok(())
    }

    /// Number of contractions needed: `ceil(log_1.5((b - a) / precision))`.
    pub fn expected_steps(&self) -> usize {
        let ratio = (self.b - self.a) / self.precision;
        if ratio < 1.0 {
            0
        } else {
            (ratio.ln() / 1.5f64.ln()).ceil() as usize
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TernaryResult {
    pub argmin: f64,
    pub steps: usize,
}

/// Minimize a unimodal `f` on `[a, b]`.
pub fn ternary_search(mut f: impl FnMut(f64) -> f64, cfg: &TernaryConfig) -> Result<TernaryResult> {
    cfg.validate()?;
    let (mut a, mut b) = (cfg.a, cfg.b);
    let mut steps = 0;
    while (b - a).abs() >= cfg.precision {
        let l = a + (b - a) / 3.0;
        let r = b - (b - a) / 3.0;
        let fl = finite(f(l), "ternary search")?;
        let fr = finite(f(r), "ternary search")?;
        if fl > fr {
            a = l;
        } else {
            b = r;
        }
        steps += 1;
    }
    Ok(TernaryResult {
        argmin: 0.5 * (a + b),
        steps,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GdConfig {
    pub step_size: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Starting point; placement falls back to `x_b + 1` when unset.
    pub initial_point: Option<f64>,
}

impl Default for GdConfig {
    fn default() -> Self {
        Self {
            step_size: 0.01,
            tolerance: 1e-6,
            max_iterations: 500,
            initial_point: None,
        }
    }
}

impl GdConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.step_size > 0.0) {
            return Err(Error::invalid("step_size", "must be positive"));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("tolerance", "must be positive"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        if let Some(x0) = self.initial_point {
            finite(x0, "initial point")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdResult {
    pub x: f64,
    pub iterations: usize,
    pub converged: bool,
    pub trace: OptimizationTrace,
}

/// Projected gradient descent `x <- clamp(x - a f'(x))`.
///
/// `value_and_grad` returns the objective and its derivative; the objective
/// is only recorded in the trace. Stops when a step moves less than the
/// tolerance or after `max_iterations` steps.
pub fn gradient_descent_1d(
    mut value_and_grad: impl FnMut(f64) -> Result<(f64, f64)>,
    cfg: &GdConfig,
    x0: f64,
    clamp: Interval,
) -> Result<GdResult> {
    cfg.validate()?;
    let mut x = clamp.clamp(finite(x0, "initial point")?);
    let mut trace = OptimizationTrace::default();
    let (v0, _) = value_and_grad(x)?;
    trace.push(0, &[x], finite(v0, "gradient descent objective")?);
    for n in 1..=cfg.max_iterations {
        let (_, g) = value_and_grad(x)?;
        let g = finite(g, "gradient descent derivative")?;
        let next = clamp.clamp(x - cfg.step_size * g);
        let moved = (next - x).abs();
        x = next;
        let (v, _) = value_and_grad(x)?;
        trace.push(n, &[x], finite(v, "gradient descent objective")?);
        if moved < cfg.tolerance {
            return Ok(GdResult {
                x,
                iterations: n,
                converged: true,
                trace,
            });
        }
    }
    Ok(GdResult {
        x,
        iterations: cfg.max_iterations,
        converged: false,
        trace,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsoConfig {
    pub kappa: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub population: usize,
    pub max_iterations: usize,
    pub bounds: Bounds3,
    pub seed: u64,
}

impl Default for PsoConfig {
    fn default() -> Self {
        let i = Interval {
            min: 0.0,
            max: 1000.0,
        };
        Self {
            kappa: 1.0,
            phi1: 2.05,
            phi2: 2.05,
            population: 50,
            max_iterations: 200,
            bounds: Bounds3 { x: i, y: i, z: i },
            seed: 1,
        }
    }
}

/// Inertia and acceleration weights derived from the constriction factor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsoCoefficients {
    pub chi: f64,
    pub w: f64,
    pub c1: f64,
    pub c2: f64,
}

impl PsoConfig {
    pub fn validate(&self) -> Result<()> {
        let phi = self.phi1 + self.phi2;
        if !(phi > 4.0) {
            return Err(Error::invalid(
                "phi1 + phi2",
                format!("constriction needs phi > 4, got {phi}"),
            ));
        }
        if !(self.kappa > 0.0 && self.kappa <= 1.0) {
            return Err(Error::invalid("kappa", "must lie in (0, 1]"));
        }
        if self.population < 2 {
            return Err(Error::invalid("population", "must be at least 2"));
        }
        if self.max_iterations < 1 {
            return Err(Error::invalid("max_iterations", "must be at least 1"));
        }
        for axis in self.bounds.axes() {
            Interval::new(axis.min, axis.max)?;
        }
        Ok(())
    }

    pub fn coefficients(&self) -> PsoCoefficients {
        let phi = self.phi1 + self.phi2;
        let chi = 2.0 * self.kappa / (2.0 - phi - (phi * phi - 4.0 * phi).sqrt()).abs();
        PsoCoefficients {
            chi,
            w: chi,
            c1: chi * self.phi1,
            c2: chi * self.phi2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PsoResult {
    pub best: Point3,
    pub cost: f64,
    /// Global-best location and cost after initialization (iteration 0) and
    /// after every sweep of the swarm.
    pub trace: OptimizationTrace,
}

struct Particle {
    position: [f64; 3],
    velocity: [f64; 3],
    best_position: [f64; 3],
    best_cost: f64,
}

/// Constriction-coefficient particle swarm over a box in R^3.
///
/// The global best is refreshed as soon as any particle improves on it, so
/// later particles in the same sweep already steer towards it. Particles
/// leaving the box are clamped and lose the velocity component along that
/// axis.
pub fn pso(mut cost: impl FnMut(Point3) -> Result<f64>, cfg: &PsoConfig) -> Result<PsoResult> {
    cfg.validate()?;
    let PsoCoefficients { w, c1, c2, .. } = cfg.coefficients();
    let axes = cfg.bounds.axes();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut eval = |p: [f64; 3]| -> Result<f64> { finite(cost(Point3::from_array(p))?, "PSO cost") };

    let mut swarm = Vec::with_capacity(cfg.population);
    let mut global_position = [0.0; 3];
    let mut global_cost = f64::INFINITY;
    for _ in 0..cfg.population {
        let position: [f64; 3] = std::array::from_fn(|d| sample(&mut rng, axes[d]));
        let c = eval(position)?;
        if c < global_cost {
            global_cost = c;
            global_position = position;
        }
        swarm.push(Particle {
            position,
            velocity: [0.0; 3],
            best_position: position,
            best_cost: c,
        });
    }
    let mut trace = OptimizationTrace::default();
    trace.push(0, &global_position, global_cost);

    for it in 1..=cfg.max_iterations {
        for p in swarm.iter_mut() {
            for d in 0..3 {
                let r1: f64 = rng.random();
                let r2: f64 = rng.random();
                p.velocity[d] = w * p.velocity[d]
                    + c1 * r1 * (p.best_position[d] - p.position[d])
                    + c2 * r2 * (global_position[d] - p.position[d]);
                let moved = p.position[d] + p.velocity[d];
                let clamped = axes[d].clamp(moved);
                if clamped != moved {
                    p.velocity[d] = 0.0;
                }
                p.position[d] = clamped;
            }
            let c = eval(p.position)?;
            if c < p.best_cost {
                p.best_cost = c;
                p.best_position = p.position;
                if c < global_cost {
                    global_cost = c;
                    global_position = p.position;
                }
            }
        }
        trace.push(it, &global_position, global_cost);
    }
    Ok(PsoResult {
        best: Point3::from_array(global_position),
        cost: global_cost,
        trace,
    })
}

fn sample(rng: &mut ChaCha8Rng, axis: Interval) -> f64 {
    if axis.width() > 0.0 {
        rng.random_range(axis.min..=axis.max)
    } else {
        axis.min
    }
}

/// Central differences `(f(x + h e_i) - f(x - h e_i)) / 2h` along each axis.
pub fn finite_difference_gradient(mut f: impl FnMut(&[f64]) -> f64, x: &[f64], h: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + h;
            let up = f(&probe);
            probe[i] = x[i] - h;
            let down = f(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * h)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ternary_parabola() {
        let cfg = TernaryConfig::new(0.0, 10.0, 1e-6).unwrap();
        let r = ternary_search(|x| (x - 5.0).powi(2), &cfg).unwrap();
        assert_abs_diff_eq!(r.argmin, 5.0, epsilon = 1e-6);
        assert_eq!(r.steps, cfg.expected_steps());
    }

    #[test]
    fn ternary_monotone_goes_left() {
        let cfg = TernaryConfig::new(0.0, 1.0, 1e-3).unwrap();
        let r = ternary_search(|x| x, &cfg).unwrap();
        assert!(r.argmin < 1e-3);
    }

    #[test]
    fn ternary_rejects_nan_and_bad_config() {
        let cfg = TernaryConfig::new(0.0, 1.0, 1e-3).unwrap();
        assert!(matches!(
            ternary_search(|_| f64::NAN, &cfg),
            Err(Error::NonFinite { .. })
        ));
        assert!(TernaryConfig::new(1.0, 1.0, 1e-3).is_err());
        assert!(TernaryConfig::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn ternary_tie_keeps_left_part() {
        // Constant function: every comparison ties, so the search drifts left.
        let cfg = TernaryConfig::new(0.0, 9.0, 1e-6).unwrap();
        let r = ternary_search(|_| 1.0, &cfg).unwrap();
        assert!(r.argmin < 1e-5);
    }

    #[test]
    fn gd_quadratic() {
        let cfg = GdConfig {
            max_iterations: 5000,
            ..GdConfig::default()
        };
        let r = gradient_descent_1d(
            |x| Ok(((x - 3.0).powi(2), 2.0 * (x - 3.0))),
            &cfg,
            0.0,
            Interval::new(-10.0, 10.0).unwrap(),
        )
        .unwrap();
        assert!(r.converged);
        assert_abs_diff_eq!(r.x, 3.0, epsilon = 1e-3);
        let values: Vec<f64> = r.trace.objectives().collect();
        assert!(values.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn gd_stationary_start() {
        let r = gradient_descent_1d(
            |_| Ok((0.0, 0.0)),
            &GdConfig::default(),
            2.5,
            Interval::new(0.0, 5.0).unwrap(),
        )
        .unwrap();
        assert_eq!(r.x, 2.5);
        assert_eq!(r.iterations, 1);
        assert!(r.converged);
    }

    #[test]
    fn gd_clamps_and_rejects_nan() {
        let lo = Interval::new(1.0, 5.0).unwrap();
        let r = gradient_descent_1d(|x| Ok((x, 1.0)), &GdConfig::default(), 1.2, lo).unwrap();
        assert_eq!(r.x, 1.0);
        let nan = gradient_descent_1d(|_| Ok((0.0, f64::NAN)), &GdConfig::default(), 1.2, lo);
        assert!(matches!(nan, Err(Error::NonFinite { .. })));
    }

    #[test]
    fn constriction_coefficients() {
        let c = PsoConfig::default().coefficients();
        assert_abs_diff_eq!(c.chi, 0.729_843_788_128_357_3, epsilon = 1e-12);
        assert_abs_diff_eq!(c.c1, c.chi * 2.05, epsilon = 1e-15);
        assert_eq!(c.w, c.chi);
        let bad = PsoConfig {
            phi1: 2.0,
            phi2: 2.0,
            ..PsoConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    fn bowl_config(seed: u64) -> PsoConfig {
        PsoConfig {
            bounds: Bounds3::new((0.0, 10.0), (0.0, 10.0), (0.0, 10.0)).unwrap(),
            seed,
            ..PsoConfig::default()
        }
    }

    #[test]
    fn pso_bowl() {
        let target = Point3::new(1.0, 2.0, 3.0);
        let r = pso(|p| Ok(p.distance_squared(target)), &bowl_config(7)).unwrap();
        assert!(r.best.distance(target) < 1e-2);
        assert_eq!(r.trace.len(), 201);
    }

    #[test]
    fn pso_is_deterministic() {
        let target = Point3::new(4.0, 4.0, 4.0);
        let a = pso(|p| Ok(p.distance_squared(target)), &bowl_config(3)).unwrap();
        let b = pso(|p| Ok(p.distance_squared(target)), &bowl_config(3)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pso_point_bounds() {
        let p = Point3::new(2.0, 3.0, 4.0);
        let cfg = PsoConfig {
            bounds: Bounds3::point(p),
            ..PsoConfig::default()
        };
        let r = pso(|q| Ok(q.x + q.y + q.z), &cfg).unwrap();
        assert_eq!(r.best, p);
        assert_eq!(r.cost, 9.0);
    }

    #[test]
    fn pso_boundary_optimum() {
        // Minimum outside the box lands on the clamped corner.
        let target = Point3::new(-5.0, 12.0, 5.0);
        let r = pso(|p| Ok(p.distance_squared(target)), &bowl_config(2)).unwrap();
        assert!(r.best.distance(Point3::new(0.0, 10.0, 5.0)) < 1e-6);
    }

    #[test]
    fn finite_differences() {
        let g = finite_difference_gradient(|x| x[0] * x[0], &[3.0], 1e-5);
        assert_abs_diff_eq!(g[0], 6.0, epsilon = 1e-8);
        let z = finite_difference_gradient(|_| 4.2, &[1.0, 2.0, 3.0], 1e-3);
        assert_eq!(z, vec![0.0; 3]);
    }
}
