//! (mu/mu_w, lambda)-CMA-ES with cumulation paths, rank-1 plus rank-mu
//! covariance adaptation and cumulative step-size control. Population size
//! is fixed at lambda = 40 with mu = 20 log-decreasing recombination
//! weights; no restarts. Infeasible offspring are resampled up to 100 times,
//! then clamped to the box.

use super::{AlgorithmId, BudgetedProblem, OptimizerError, RunResult};
use crate::seeding::derive_rng;
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub(crate) const LAMBDA: usize = 40;
const MAX_RESAMPLES: usize = 100;

pub(crate) struct Cmaes {
    dim: usize,
    bounds: Vec<(f64, f64)>,
    weights: Vec<f64>,
    mu_eff: f64,
    c_sigma: f64,
    d_sigma: f64,
    c_c: f64,
    c_1: f64,
    c_mu: f64,
    chi_n: f64,
    pub(crate) mean: Vec<f64>,
    pub(crate) sigma: f64,
    pub(crate) cov: DMatrix<f64>,
    path_sigma: Vec<f64>,
    path_c: Vec<f64>,
    generation: usize,
    rng: ChaCha12Rng,
}

impl Cmaes {
    pub(crate) fn new(dim: usize, bounds: &[(f64, f64)], seed: u64) -> Self {
        let mu = LAMBDA / 2;
        let raw: Vec<f64> = (1..=mu)
            .map(|i| ((LAMBDA as f64 + 1.0) / 2.0).ln() - (i as f64).ln())
            .collect();
        let sum: f64 = raw.iter().sum();
        let weights: Vec<f64> = raw.iter().map(|w| w / sum).collect();
        let mu_eff = 1.0 / weights.iter().map(|w| w * w).sum::<f64>();
        let n = dim as f64;
        let c_sigma = (mu_eff + 2.0) / (n + mu_eff + 5.0);
        let d_sigma = 1.0 + 2.0 * (((mu_eff - 1.0) / (n + 1.0)).sqrt() - 1.0).max(0.0) + c_sigma;
        let c_c = (4.0 + mu_eff / n) / (n + 4.0 + 2.0 * mu_eff / n);
        let c_1 = 2.0 / ((n + 1.3).powi(2) + mu_eff);
        let c_mu = (1.0 - c_1)
            .min(2.0 * (mu_eff - 2.0 + 1.0 / mu_eff) / ((n + 2.0).powi(2) + mu_eff));
        let chi_n = n.sqrt() * (1.0 - 1.0 / (4.0 * n) + 1.0 / (21.0 * n * n));

        let mut rng = derive_rng("cmaes", &[seed]);
        let mean: Vec<f64> = bounds.iter().map(|&(lo, hi)| rng.random_range(lo..=hi)).collect();
        // sigma_0 = 0.3 * box range (3.0 on the default [-5, 5] box)
        let range = bounds.iter().map(|(lo, hi)| hi - lo).sum::<f64>() / n;
        Cmaes {
            dim,
            bounds: bounds.to_vec(),
            weights,
            mu_eff,
            c_sigma,
            d_sigma,
            c_c,
            c_1,
            c_mu,
            chi_n,
            mean,
            sigma: 0.3 * range,
            cov: DMatrix::identity(dim, dim),
            path_sigma: vec![0.0; dim],
            path_c: vec![0.0; dim],
            generation: 0,
            rng,
        }
    }

    /// Largest asymmetry entry of the covariance; adaptation keeps it at 0
    /// by explicit re-symmetrization each generation.
    #[cfg_attr(not(test), allow(dead_code))]
    pub(crate) fn cov_asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim {
            for j in 0..self.dim {
                worst = worst.max((self.cov[(i, j)] - self.cov[(j, i)]).abs());
            }
        }
        worst
    }

    /// Runs one generation. Returns false when the budget refused an
    /// evaluation; distribution state is then left untouched.
    pub(crate) fn step(&mut self, bp: &mut BudgetedProblem<'_>) -> bool {
        let d = self.dim;
        // keep the eigensolver input exactly symmetric
        for i in 0..d {
            for j in 0..i {
                let avg = 0.5 * (self.cov[(i, j)] + self.cov[(j, i)]);
                self.cov[(i, j)] = avg;
                self.cov[(j, i)] = avg;
            }
        }
        let eigen = self.cov.clone().symmetric_eigen();
        let basis = eigen.eigenvectors;
        let scales: Vec<f64> = eigen.eigenvalues.iter().map(|&v| v.max(1e-30).sqrt()).collect();

        // sample and evaluate lambda offspring
        let mut ys: Vec<Vec<f64>> = Vec::with_capacity(LAMBDA);
        let mut values: Vec<f64> = Vec::with_capacity(LAMBDA);
        for _ in 0..LAMBDA {
            let (x, y) = self.sample_candidate(&basis, &scales);
            match bp.try_evaluate(&x) {
                Some(v) => {
                    ys.push(y);
                    values.push(v);
                }
                None => return false,
            }
        }

        let mut order: Vec<usize> = (0..LAMBDA).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));

        // recombination
        let mut y_w = vec![0.0; d];
        for (rank, &w) in self.weights.iter().enumerate() {
            let y = &ys[order[rank]];
            for (acc, &v) in y_w.iter_mut().zip(y) {
                *acc += w * v;
            }
        }
        for (m, &dy) in self.mean.iter_mut().zip(&y_w) {
            *m += self.sigma * dy;
        }

        // step-size path uses the whitened mean displacement C^(-1/2) y_w
        let mut whitened = vec![0.0; d];
        for (col, &s) in scales.iter().enumerate() {
            let mut proj = 0.0;
            for row in 0..d {
                proj += basis[(row, col)] * y_w[row];
            }
            let scaled = proj / s;
            for row in 0..d {
                whitened[row] += basis[(row, col)] * scaled;
            }
        }
        let cs_bias = (self.c_sigma * (2.0 - self.c_sigma) * self.mu_eff).sqrt();
        for (p, &w) in self.path_sigma.iter_mut().zip(&whitened) {
            *p = (1.0 - self.c_sigma) * *p + cs_bias * w;
        }
        let ps_norm = self.path_sigma.iter().map(|v| v * v).sum::<f64>().sqrt();
        let gen_decay = 1.0 - (1.0 - self.c_sigma).powi(2 * (self.generation as i32 + 1));
        let h_sigma = ps_norm / gen_decay.sqrt() / self.chi_n
            < 1.4 + 2.0 / (d as f64 + 1.0);

        let cc_bias = (self.c_c * (2.0 - self.c_c) * self.mu_eff).sqrt();
        for (p, &dy) in self.path_c.iter_mut().zip(&y_w) {
            *p = (1.0 - self.c_c) * *p + if h_sigma { cc_bias * dy } else { 0.0 };
        }

        // rank-1 + rank-mu covariance update
        let stall = if h_sigma { 0.0 } else { self.c_c * (2.0 - self.c_c) };
        let keep = 1.0 - self.c_1 - self.c_mu + self.c_1 * stall;
        for i in 0..d {
            for j in 0..d {
                let mut rank_mu = 0.0;
                for (rank, &w) in self.weights.iter().enumerate() {
                    let y = &ys[order[rank]];
                    rank_mu += w * y[i] * y[j];
                }
                self.cov[(i, j)] = keep * self.cov[(i, j)]
                    + self.c_1 * self.path_c[i] * self.path_c[j]
                    + self.c_mu * rank_mu;
            }
        }

        // cumulative step-size adaptation, exponent capped for safety
        let expo = (self.c_sigma / self.d_sigma) * (ps_norm / self.chi_n - 1.0);
        self.sigma = (self.sigma * expo.min(1.0).exp()).clamp(1e-20, 1e20);
        self.generation += 1;
        true
    }

    fn sample_candidate(&mut self, basis: &DMatrix<f64>, scales: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let d = self.dim;
        let mut last = Vec::new();
        for attempt in 0..MAX_RESAMPLES {
            let mut y = vec![0.0; d];
            for (col, &s) in scales.iter().enumerate() {
                let z: f64 = self.rng.sample(StandardNormal);
                let step = s * z;
                for row in 0..d {
                    y[row] += basis[(row, col)] * step;
                }
            }
            let x: Vec<f64> = self.mean.iter().zip(&y).map(|(m, dy)| m + self.sigma * dy).collect();
            if x.iter().zip(&self.bounds).all(|(v, (lo, hi))| v >= lo && v <= hi) {
                return (x, y);
            }
            if attempt == MAX_RESAMPLES - 1 {
                last = x;
            }
        }
        // clamp the last draw, keeping y consistent with the repaired x
        let x: Vec<f64> = last
            .iter()
            .zip(&self.bounds)
            .map(|(v, &(lo, hi))| v.clamp(lo, hi))
            .collect();
        let y: Vec<f64> = x.iter().zip(&self.mean).map(|(v, m)| (v - m) / self.sigma).collect();
        (x, y)
    }
}

pub fn run_cmaes(mut bp: BudgetedProblem<'_>, seed: u64) -> Result<RunResult, OptimizerError> {
    if bp.max_evals() < LAMBDA {
        return Err(OptimizerError::BudgetTooSmall {
            algorithm: AlgorithmId::Cmaes,
            budget: bp.max_evals(),
            needed: LAMBDA,
        });
    }
    let mut state = Cmaes::new(bp.dim(), bp.bounds(), seed);
    while state.step(&mut bp) {}
    Ok(bp.finish(AlgorithmId::Cmaes, seed))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::make_instance;

    #[test]
    fn rejects_budget_below_lambda() {
        let inst = make_instance(1, 2, 1).unwrap();
        let bp = BudgetedProblem::new(&inst, LAMBDA - 1);
        assert!(matches!(run_cmaes(bp, 1), Err(OptimizerError::BudgetTooSmall { .. })));
    }

    #[test]
    fn is_deterministic() {
        let inst = make_instance(6, 5, 3).unwrap();
        let a = run_cmaes(BudgetedProblem::new(&inst, 4000), 11).unwrap();
        let b = run_cmaes(BudgetedProblem::new(&inst, 4000), 11).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn state_stays_sane_every_generation() {
        let inst = make_instance(2, 6, 4).unwrap();
        let mut bp = BudgetedProblem::new(&inst, 4000);
        let mut state = Cmaes::new(bp.dim(), bp.bounds(), 5);
        while state.step(&mut bp) {
            assert!(state.cov_asymmetry() < 1e-12);
            assert!(state.sigma.is_finite() && state.sigma > 0.0);
        }
        assert_eq!(bp.used(), 4000);
    }

    #[test]
    fn consumes_budget_to_within_one_generation() {
        let inst = make_instance(1, 3, 2).unwrap();
        for budget in [LAMBDA, 95, 1000] {
            let r = run_cmaes(BudgetedProblem::new(&inst, budget), 3).unwrap();
            assert!(r.evals_used <= budget);
            assert!(r.evals_used + LAMBDA > budget);
        }
    }

    #[test]
    fn solves_sphere_quickly() {
        let inst = make_instance(1, 4, 8).unwrap();
        let r = run_cmaes(BudgetedProblem::new(&inst, 8000), 1).unwrap();
        assert!(r.best_error < 1e-8, "best error {}", r.best_error);
    }
}
