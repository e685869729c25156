//! Basis Pursuit Denoising over implicit measurement operators.
//!
//! Solves `min ||s||_1  s.t.  ||A s - y||_2 <= eps` by Douglas-Rachford
//! splitting between the complex soft-threshold (the l1 proximal map) and an
//! exact projection onto the residual ball. The projection diagonalizes in
//! the eigenbasis of the small `m x m` Gram matrix `A A^H`, which the
//! operator caches, so each iteration costs two operator applications plus
//! `O(m)` work for the projection's scalar root-find.
//!
//! The returned point is the best feasible iterate seen (smallest l1 norm),
//! so the reported objective trace is non-increasing by construction and the
//! residual bound holds whenever `converged` is set.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::signal::MeasurementOperator;

/// Relative slack allowed on the residual constraint of a converged solution.
pub const FEASIBILITY_SLACK: f64 = 1e-3;

/// One BPDN instance: operator, observation, and noise bound.
#[derive(Debug)]
pub struct BpdnProblem<'a> {
    operator: &'a MeasurementOperator,
    observation: Vec<Complex64>,
    epsilon: f64,
}

impl<'a> BpdnProblem<'a> {
    pub fn new(
        operator: &'a MeasurementOperator,
        observation: Vec<Complex64>,
        epsilon: f64,
    ) -> Result<Self> {
        if observation.len() != operator.out_dim() {
            return Err(Error::Dimension(format!(
                "observation length {} != operator out_dim {}",
                observation.len(),
                operator.out_dim()
            )));
        }
        if !epsilon.is_finite() || epsilon < 0.0 {
            return Err(Error::InvalidInput(format!(
                "epsilon must be finite and nonnegative, got {epsilon}"
            )));
        }
        if observation.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::InvalidInput(
                "observation contains NaN or infinite entries".into(),
            ));
        }
        Ok(BpdnProblem {
            operator,
            observation,
            epsilon,
        })
    }

    pub fn operator(&self) -> &MeasurementOperator {
        self.operator
    }

    pub fn observation(&self) -> &[Complex64] {
        &self.observation
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }
}

/// Solver output; `coefficients` is the best feasible iterate.
#[derive(Debug, Clone)]
pub struct BpdnSolution {
    pub coefficients: Vec<Complex64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Best feasible l1 value after each iteration once a feasible point
    /// exists; non-increasing.
    pub objective_trace: Vec<f64>,
}

impl BpdnSolution {
    pub fn l1_norm(&self) -> f64 {
        self.coefficients.iter().map(|v| v.norm()).sum()
    }
}

/// Tuning knobs for [`solve_bpdn_with`].
#[derive(Debug, Clone, Copy)]
pub struct SolverOptions {
    pub max_iterations: usize,
    /// Relative fixed-point tolerance on the splitting gap.
    pub tolerance: f64,
    /// Prox step as a fraction of the data scale `||A^H y||_inf`.
    pub gamma_scale: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iterations: 600,
            tolerance: 1e-7,
            gamma_scale: 0.12,
        }
    }
}

/// Solves the BPDN program with default step sizing.
pub fn solve_bpdn(
    problem: &BpdnProblem,
    max_iterations: usize,
    tolerance: f64,
) -> Result<BpdnSolution> {
    if max_iterations == 0 {
        return Err(Error::InvalidInput("max_iterations must be positive".into()));
    }
    let options = SolverOptions {
        max_iterations,
        tolerance,
        ..SolverOptions::default()
    };
    solve_bpdn_with(problem, &options)
}

/// Solves the BPDN program with explicit options.
pub fn solve_bpdn_with(problem: &BpdnProblem, options: &SolverOptions) -> Result<BpdnSolution> {
    let op = problem.operator();
    let y = problem.observation();
    let eps = problem.epsilon();
    let in_dim = op.in_dim();

    let y_norm = norm(y);
    if y_norm <= eps {
        // Zero is feasible, and no point has smaller l1 norm.
        return Ok(BpdnSolution {
            coefficients: vec![Complex64::default(); in_dim],
            residual_norm: y_norm,
            iterations: 0,
            converged: true,
            objective_trace: vec![0.0],
        });
    }

    let gram = op.gram_spectrum();
    let projector = BallProjector {
        op,
        y,
        eps,
        eigenvalues: gram.eigenvalues().to_vec(),
        gram: &gram,
    };

    let mut w = op.adjoint(y)?;
    let gamma = options.gamma_scale * inf_norm(&w);
    if gamma == 0.0 {
        // A^H y = 0 with ||y|| > eps: y is orthogonal to the operator range,
        // so no iterate can improve on the zero vector.
        return Ok(BpdnSolution {
            coefficients: vec![Complex64::default(); in_dim],
            residual_norm: y_norm,
            iterations: 0,
            converged: false,
            objective_trace: Vec::new(),
        });
    }

    let feasible_cap = eps.max(1e-12 * y_norm) * (1.0 + FEASIBILITY_SLACK);
    let mut best: Option<(f64, Vec<Complex64>)> = None;
    let mut trace = Vec::new();
    let mut s = vec![Complex64::default(); in_dim];
    let mut reflected = vec![Complex64::default(); in_dim];
    let mut iterations = 0;
    let mut fixed_point = false;

    for it in 0..options.max_iterations {
        iterations = it + 1;
        for k in 0..in_dim {
            s[k] = soft_threshold(w[k], gamma);
            reflected[k] = s[k] * 2.0 - w[k];
        }
        let (z, z_residual) = projector.project(&reflected)?;

        if z_residual <= feasible_cap {
            let l1: f64 = z.iter().map(|v| v.norm()).sum();
            let better = best.as_ref().map_or(true, |(b, _)| l1 < *b);
            if better {
                best = Some((l1, z.clone()));
            }
        }
        if let Some((b, _)) = &best {
            trace.push(*b);
        }

        let mut gap2 = 0.0;
        let mut z_norm2 = 0.0;
        for k in 0..in_dim {
            let d = z[k] - s[k];
            gap2 += d.norm_sqr();
            z_norm2 += z[k].norm_sqr();
            w[k] += d;
        }
        if gap2.sqrt() <= options.tolerance * z_norm2.sqrt().max(1.0) {
            fixed_point = true;
            break;
        }
    }

    let (coefficients, fallback) = match best {
        Some((_, z)) => (z, false),
        None => (s, true),
    };
    let residual = {
        let fit = op.forward(&coefficients)?;
        let mut r2 = 0.0;
        for (a, b) in fit.iter().zip(y) {
            r2 += (a - b).norm_sqr();
        }
        r2.sqrt()
    };
    let feasible = residual <= eps * (1.0 + FEASIBILITY_SLACK) + 1e-12 * y_norm;
    Ok(BpdnSolution {
        coefficients,
        residual_norm: residual,
        iterations,
        converged: fixed_point && feasible && !fallback,
        objective_trace: trace,
    })
}

/// High-probability upper bound on the norm of an `m`-sample complex Gaussian
/// noise vector with per-sample variance `sigma_sq`.
pub fn epsilon_from_noise(sigma_sq: f64, m: usize) -> Result<f64> {
    if !(sigma_sq >= 0.0) || !sigma_sq.is_finite() {
        return Err(Error::InvalidInput(format!(
            "noise variance must be finite and nonnegative, got {sigma_sq}"
        )));
    }
    if m == 0 {
        return Err(Error::InvalidInput("measurement count must be positive".into()));
    }
    let mf = m as f64;
    Ok((sigma_sq * (mf + 2.0 * (mf * mf.ln()).sqrt())).sqrt())
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn inf_norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

fn soft_threshold(v: Complex64, gamma: f64) -> Complex64 {
    let mag = v.norm();
    if mag <= gamma {
        Complex64::default()
    } else {
        v * ((mag - gamma) / mag)
    }
}

struct BallProjector<'a> {
    op: &'a MeasurementOperator,
    y: &'a [Complex64],
    eps: f64,
    eigenvalues: Vec<f64>,
    gram: &'a crate::signal::GramSpectrum,
}

impl BallProjector<'_> {
    /// Euclidean projection of `v` onto `{z : ||A z - y|| <= eps}`, exact up
    /// to the scalar root-find. Returns the point and its residual norm.
    fn project(&self, v: &[Complex64]) -> Result<(Vec<Complex64>, f64)> {
        let av = self.op.forward(v)?;
        let r: Vec<Complex64> = av.iter().zip(self.y).map(|(a, b)| a - b).collect();
        let r_norm = norm(&r);
        if r_norm <= self.eps {
            return Ok((v.to_vec(), r_norm));
        }

        let rt = self.gram.to_eigenbasis(&r);
        let lambda_max = self.eigenvalues.last().copied().unwrap_or(0.0);
        let lambda_floor = lambda_max * 1e-14;

        // Residual after correcting with multiplier mu:
        //   g(mu) = sum_i (mu / (lambda_i + mu))^2 |rt_i|^2,
        // increasing from the out-of-range energy at mu=0 to ||r||^2.
        let mut q = vec![Complex64::default(); rt.len()];
        let residual_at = |mu: f64| -> f64 {
            let mut g = 0.0;
            for (i, &l) in self.eigenvalues.iter().enumerate() {
                let f = if l + mu > 0.0 { mu / (l + mu) } else { 1.0 };
                g += f * f * rt[i].norm_sqr();
            }
            g.sqrt()
        };

        let mu = if self.eps == 0.0 {
            0.0
        } else {
            let mut lo = 0.0;
            let mut hi = lambda_max.max(1.0);
            while residual_at(hi) < self.eps {
                hi *= 2.0;
                if !hi.is_finite() {
                    break;
                }
            }
            for _ in 0..120 {
                let mid = 0.5 * (lo + hi);
                if residual_at(mid) < self.eps {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            0.5 * (lo + hi)
        };

        for (i, &l) in self.eigenvalues.iter().enumerate() {
            q[i] = if l > lambda_floor || mu > 0.0 {
                rt[i] / (l + mu)
            } else {
                Complex64::default()
            };
        }
        let corr = self.gram.from_eigenbasis(&q);
        let back = self.op.adjoint(&corr)?;
        let z: Vec<Complex64> = v.iter().zip(&back).map(|(a, b)| a - b).collect();
        Ok((z, residual_at(mu)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{compose_operator, SamplingPattern, WaveformFrame};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_vec(len: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        (0..len)
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect()
    }

    #[test]
    fn identity_operator_returns_observation() {
        let n = 16;
        let mut body = vec![Complex64::default(); n];
        body[0] = Complex64::new(1.0, 0.0);
        let frame = WaveformFrame::from_body(body, 4, 0).unwrap();
        let op = compose_operator(&[frame], false, &SamplingPattern::full(n)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y = random_vec(n, &mut rng);
        let problem = BpdnProblem::new(&op, y.clone(), 0.0).unwrap();
        let sol = solve_bpdn(&problem, 2000, 1e-12).unwrap();
        assert!(sol.converged);
        for (a, b) in sol.coefficients.iter().zip(&y) {
            assert!((a - b).norm() < 1e-9, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_observation_gives_zero_solution() {
        let n = 16;
        let frame = WaveformFrame::rademacher(n, 4, 0).unwrap();
        let pattern = SamplingPattern::uniform_random(n, 8, 1).unwrap();
        let op = compose_operator(&[frame], false, &pattern).unwrap();
        let problem = BpdnProblem::new(&op, vec![Complex64::default(); 8], 0.5).unwrap();
        let sol = solve_bpdn(&problem, 100, 1e-9).unwrap();
        assert!(sol.converged);
        assert_eq!(sol.iterations, 0);
        assert!(sol.coefficients.iter().all(|v| *v == Complex64::default()));
    }

    #[test]
    fn one_sparse_noiseless_recovery() {
        let n = 32;
        let m = 16;
        for seed in 0..10u64 {
            let frame = WaveformFrame::rademacher(n, 8, seed).unwrap();
            let pattern = SamplingPattern::uniform_random(n, m, seed + 100).unwrap();
            let op = compose_operator(&[frame.clone()], false, &pattern).unwrap();

            let mut rng = ChaCha8Rng::seed_from_u64(seed + 200);
            let tap = rng.random_range(0..n);
            let alpha = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
            let mut coeffs = vec![Complex64::default(); n];
            coeffs[tap] = alpha;
            let y = op.forward(&coeffs).unwrap();

            let problem = BpdnProblem::new(&op, y, 0.0).unwrap();
            let sol = solve_bpdn(&problem, 3000, 1e-10).unwrap();
            assert!(sol.converged, "seed {seed} did not converge");
            let peak = sol
                .coefficients
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                .unwrap()
                .0;
            assert_eq!(peak, tap, "seed {seed}");
            assert!(
                (sol.coefficients[tap] - alpha).norm() <= 1e-6,
                "seed {seed}: coefficient error {}",
                (sol.coefficients[tap] - alpha).norm()
            );
        }
    }

    #[test]
    fn converged_solution_is_feasible() {
        let n = 32;
        let frame = WaveformFrame::rademacher(n, 8, 5).unwrap();
        let pattern = SamplingPattern::uniform_random(n, 12, 6).unwrap();
        let op = compose_operator(&[frame], false, &pattern).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let y = random_vec(12, &mut rng);
        let eps = 0.3 * norm(&y);
        let problem = BpdnProblem::new(&op, y, eps).unwrap();
        let sol = solve_bpdn(&problem, 2000, 1e-9).unwrap();
        assert!(sol.converged);
        assert!(sol.residual_norm <= eps * (1.0 + FEASIBILITY_SLACK));
    }

    #[test]
    fn objective_trace_is_monotone() {
        let n = 32;
        let frame = WaveformFrame::rademacher(n, 8, 9).unwrap();
        let pattern = SamplingPattern::uniform_random(n, 12, 10).unwrap();
        let op = compose_operator(&[frame], false, &pattern).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let y = random_vec(12, &mut rng);
        let problem = BpdnProblem::new(&op, y, 0.05).unwrap();
        let sol = solve_bpdn(&problem, 500, 1e-12).unwrap();
        assert!(!sol.objective_trace.is_empty());
        for w in sol.objective_trace.windows(2) {
            assert!(w[1] <= w[0] + 1e-15, "{} then {}", w[0], w[1]);
        }
    }

    #[test]
    fn scaling_equivariance() {
        let n = 32;
        let frame = WaveformFrame::rademacher(n, 8, 13).unwrap();
        let pattern = SamplingPattern::uniform_random(n, 16, 14).unwrap();
        let op = compose_operator(&[frame], false, &pattern).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let mut coeffs = vec![Complex64::default(); n];
        coeffs[4] = Complex64::new(1.0, 0.2);
        coeffs[20] = Complex64::new(-0.5, 0.8);
        let y = op.forward(&coeffs).unwrap();
        let noise = random_vec(16, &mut rng);
        let y: Vec<Complex64> = y
            .iter()
            .zip(&noise)
            .map(|(a, b)| a + b * 0.01)
            .collect();
        let eps = 0.05;

        let c = Complex64::new(0.0, 2.0);
        let yc: Vec<Complex64> = y.iter().map(|v| v * c).collect();

        let p1 = BpdnProblem::new(&op, y, eps).unwrap();
        let p2 = BpdnProblem::new(&op, yc, eps * c.norm()).unwrap();
        let s1 = solve_bpdn(&p1, 4000, 1e-13).unwrap();
        let s2 = solve_bpdn(&p2, 4000, 1e-13).unwrap();
        assert!(s1.converged && s2.converged);
        let scale: f64 = s1.coefficients.iter().map(|v| v.norm()).sum();
        for (a, b) in s1.coefficients.iter().zip(&s2.coefficients) {
            assert!(
                (a * c - b).norm() <= 1e-8 * scale.max(1.0),
                "{a} scaled vs {b}"
            );
        }
    }

    #[test]
    fn epsilon_rule_values() {
        assert_eq!(epsilon_from_noise(0.0, 64).unwrap(), 0.0);
        let e = epsilon_from_noise(1.0, 100).unwrap();
        assert!((e - 11.954886888874647).abs() < 1e-12);
        let small = epsilon_from_noise(0.01, 64).unwrap();
        let unit = epsilon_from_noise(1.0, 64).unwrap();
        assert!((small - 0.1 * unit).abs() < 1e-12);
        assert!(epsilon_from_noise(-1.0, 10).is_err());
        assert!(epsilon_from_noise(1.0, 0).is_err());
    }

    #[test]
    fn epsilon_rule_bounds_noise_with_high_probability() {
        let m = 100;
        let eps = epsilon_from_noise(1.0, m).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let trials = 10_000;
        let mut within = 0;
        for _ in 0..trials {
            let noise = crate::channel::gaussian_noise(m, 1.0, &mut rng);
            if norm(&noise) <= eps {
                within += 1;
            }
        }
        assert!(
            within as f64 >= 0.97 * trials as f64,
            "only {within}/{trials} inside the bound"
        );
    }

    #[test]
    fn rejects_bad_inputs() {
        let n = 16;
        let frame = WaveformFrame::rademacher(n, 4, 0).unwrap();
        let pattern = SamplingPattern::uniform_random(n, 8, 1).unwrap();
        let op = compose_operator(&[frame], false, &pattern).unwrap();
        assert!(BpdnProblem::new(&op, vec![Complex64::default(); 7], 0.1).is_err());
        assert!(BpdnProblem::new(&op, vec![Complex64::default(); 8], -0.1).is_err());
        let mut bad = vec![Complex64::default(); 8];
        bad[3] = Complex64::new(f64::NAN, 0.0);
        assert!(BpdnProblem::new(&op, bad, 0.1).is_err());
        let good = BpdnProblem::new(&op, vec![Complex64::new(1.0, 0.0); 8], 0.1).unwrap();
        assert!(solve_bpdn(&good, 0, 1e-9).is_err());
    }
}
