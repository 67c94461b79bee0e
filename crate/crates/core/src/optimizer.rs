//! Nelder-Mead downhill simplex with a random initial simplex.
//!
//! Every vertex of the starting simplex is drawn coordinate-wise from
//! `U(init_low, init_high)` using a ChaCha8 stream keyed by the run seed, so a
//! run is a pure function of `(objective, config, seed)`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimplexConfig {
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    pub max_evals: usize,
    pub f_tolerance: f64,
    pub x_tolerance: f64,
    pub restarts: usize,
    pub init_low: f64,
    pub init_high: f64,
}

impl Default for SimplexConfig {
    fn default() -> Self {
        Self {
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            max_evals: 600,
            f_tolerance: 1e-10,
            x_tolerance: 1e-8,
            restarts: 1,
            init_low: 0.0,
            init_high: 0.1,
        }
    }
}

impl SimplexConfig {
    pub fn validate(&self, dim: usize) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        if dim == 0 {
            return bad("Nelder-Mead needs dimension >= 1".into());
        }
        if !(self.f_tolerance > 0.0 && self.x_tolerance > 0.0) {
            return bad("simplex tolerances must be positive".into());
        }
        if self.max_evals < dim + 1 {
            return bad(format!(
                "budget of {} evaluations cannot build a {}-dimensional simplex",
                self.max_evals, dim
            ));
        }
        if self.restarts == 0 {
            return bad("at least one restart is required".into());
        }
        if !(self.reflection > 0.0
            && self.expansion > 1.0
            && self.contraction > 0.0
            && self.contraction < 1.0
            && self.shrink > 0.0
            && self.shrink < 1.0)
        {
            return bad("simplex coefficients out of range".into());
        }
        if !(self.init_low < self.init_high) {
            return bad("init_low must be below init_high".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptResult {
    pub best_params: Vec<f64>,
    pub best_value: f64,
    pub evals_used: usize,
    /// Stopped on a tolerance rather than the evaluation budget.
    pub converged: bool,
    /// Best value after each iteration of the winning restart.
    #[serde(skip)]
    pub incumbent_trace: Vec<f64>,
    /// Values at the vertices of the winning restart's initial simplex.
    #[serde(skip)]
    pub initial_values: Vec<f64>,
}

struct Vertex {
    x: Vec<f64>,
    f: f64,
}

/// Minimises `objective` over `R^dim`.
///
/// Terminates when the spread of simplex values drops below `f_tolerance`, the
/// simplex fits in a box of half-width `x_tolerance` around its best vertex, or
/// the evaluation budget is spent (the final iteration may overshoot the
/// budget by at most `dim + 1` evaluations). With `restarts > 1` independent
/// runs use derived seeds and the best result wins; `evals_used` then counts
/// all runs.
pub fn nelder_mead<F>(mut objective: F, dim: usize, config: &SimplexConfig, seed: u64) -> Result<OptResult>
where
    F: FnMut(&[f64]) -> f64,
{
    config.validate(dim)?;
    let mut best: Option<OptResult> = None;
    let mut total_evals = 0;
    for restart in 0..config.restarts {
        let run_seed = if restart == 0 { seed } else { seed::derive(seed, restart as u64) };
        let run = single_run(&mut objective, dim, config, run_seed);
        total_evals += run.evals_used;
        if best.as_ref().map_or(true, |b| run.best_value < b.best_value) {
            best = Some(run);
        }
    }
    let mut best = best.expect("restarts >= 1");
    best.evals_used = total_evals;
    Ok(best)
}

fn single_run<F>(objective: &mut F, dim: usize, cfg: &SimplexConfig, seed: u64) -> OptResult
where
    F: FnMut(&[f64]) -> f64,
{
    let mut rng = seed::rng(seed);
    let mut evals = 0usize;
    let mut eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        let v = objective(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };

    let mut simplex: Vec<Vertex> = (0..=dim)
        .map(|_| {
            let x: Vec<f64> = (0..dim).map(|_| rng.gen_range(cfg.init_low..cfg.init_high)).collect();
            let f = eval(&x, &mut evals);
            Vertex { x, f }
        })
        .collect();
    let initial_values: Vec<f64> = simplex.iter().map(|v| v.f).collect();
    let mut trace = Vec::new();
    let mut converged = false;

    loop {
        // stable sort keeps earlier vertices first on ties
        simplex.sort_by(|a, b| a.f.total_cmp(&b.f));
        trace.push(simplex[0].f);

        let spread = simplex[dim].f - simplex[0].f;
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.x.iter().zip(&simplex[0].x).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if spread <= cfg.f_tolerance || diameter <= cfg.x_tolerance {
            converged = true;
            break;
        }
        if evals >= cfg.max_evals {
            break;
        }

        let centroid: Vec<f64> = (0..dim)
            .map(|k| simplex[..dim].iter().map(|v| v.x[k]).sum::<f64>() / dim as f64)
            .collect();
        let worst = &simplex[dim];
        let along = |t: f64| -> Vec<f64> {
            centroid
                .iter()
                .zip(&worst.x)
                .map(|(c, w)| c + t * (c - w))
                .collect()
        };

        let xr = along(cfg.reflection);
        let fr = eval(&xr, &mut evals);
        if fr < simplex[0].f {
            let xe = along(cfg.reflection * cfg.expansion);
            let fe = eval(&xe, &mut evals);
            simplex[dim] = if fe < fr { Vertex { x: xe, f: fe } } else { Vertex { x: xr, f: fr } };
            continue;
        }
        if fr < simplex[dim - 1].f {
            simplex[dim] = Vertex { x: xr, f: fr };
            continue;
        }
        if fr < simplex[dim].f {
            let xc = along(cfg.reflection * cfg.contraction);
            let fc = eval(&xc, &mut evals);
            if fc <= fr {
                simplex[dim] = Vertex { x: xc, f: fc };
                continue;
            }
        } else {
            let xcc = along(-cfg.contraction);
            let fcc = eval(&xcc, &mut evals);
            if fcc < simplex[dim].f {
                simplex[dim] = Vertex { x: xcc, f: fcc };
                continue;
            }
        }
        // shrink toward the best vertex
        let (head, tail) = simplex.split_at_mut(1);
        let anchor = &head[0].x;
        for v in tail.iter_mut() {
            for (xi, ai) in v.x.iter_mut().zip(anchor) {
                *xi = ai + cfg.shrink * (*xi - ai);
            }
            v.f = eval(&v.x, &mut evals);
        }
    }

    let best = simplex.swap_remove(0);
    OptResult {
        best_params: best.x,
        best_value: best.f,
        evals_used: evals,
        converged,
        incumbent_trace: trace,
        initial_values,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn convex_quadratic() {
        let f = |x: &[f64]| (x[0] - 0.3).powi(2) + (x[1] + 0.2).powi(2);
        let r = nelder_mead(f, 2, &SimplexConfig::default(), 1).unwrap();
        assert!(r.converged);
        assert!((r.best_params[0] - 0.3).abs() < 1e-5);
        assert!((r.best_params[1] + 0.2).abs() < 1e-5);
        assert!((f(&r.best_params) - r.best_value).abs() < 1e-12);
    }

    #[test]
    fn constant_objective_stops_at_once() {
        let r = nelder_mead(|_| 4.2, 2, &SimplexConfig::default(), 9).unwrap();
        assert!(r.converged);
        assert_eq!(r.evals_used, 3);
        assert_eq!(r.best_value, 4.2);
        assert!(r.best_params.iter().all(|&v| (0.0..0.1).contains(&v)));
    }

    #[test]
    fn two_qubit_energy_minimum() {
        // <E> = sin 4β sin 2γ for one edge with J = 1
        let f = |x: &[f64]| (4.0 * x[0]).sin() * (2.0 * x[1]).sin();
        let r = nelder_mead(f, 2, &SimplexConfig::default(), 3).unwrap();
        assert!((r.best_value + 1.0).abs() < 1e-6, "{}", r.best_value);
    }

    #[test]
    fn one_dimensional() {
        // f_tolerance 1e-10 on a quadratic resolves x to about 1e-5
        let r = nelder_mead(|x| (x[0] - 2.0).powi(2), 1, &SimplexConfig::default(), 5).unwrap();
        assert!(r.converged);
        assert!((r.best_params[0] - 2.0).abs() < 1e-4);
    }

    #[test]
    fn deterministic_and_monotone() {
        let f = |x: &[f64]| (x[0] * 3.0).sin() + x[1].powi(2) + 0.1 * x[0].powi(2);
        let cfg = SimplexConfig { restarts: 3, ..Default::default() };
        let a = nelder_mead(f, 2, &cfg, 11).unwrap();
        let b = nelder_mead(f, 2, &cfg, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.incumbent_trace, b.incumbent_trace);
        assert!(a.incumbent_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(a.initial_values.iter().all(|&v| a.best_value <= v));
    }

    #[test]
    fn budget_exhaustion_reported() {
        let cfg = SimplexConfig { max_evals: 10, ..Default::default() };
        let r = nelder_mead(|x| (x[0] - 5.0).powi(2) + (x[1] + 5.0).powi(2), 2, &cfg, 2).unwrap();
        assert!(!r.converged);
        assert!(r.evals_used <= 10 + 3);
    }

    #[test]
    fn invalid_configs() {
        let f = |_: &[f64]| 0.0;
        assert!(nelder_mead(f, 0, &SimplexConfig::default(), 0).is_err());
        let cfg = SimplexConfig { max_evals: 2, ..Default::default() };
        assert!(nelder_mead(f, 2, &cfg, 0).is_err());
        let cfg = SimplexConfig { f_tolerance: 0.0, ..Default::default() };
        assert!(nelder_mead(f, 2, &cfg, 0).is_err());
    }
}
