//! Adam with bias correction, masked for frozen parameters.

use ndarray::Array2;

use crate::ml::ModelParams;

/// First- and second-moment state for one parameter set.
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    steps: u64,
    m: Vec<Array2<f64>>,
    v: Vec<Array2<f64>>,
}

impl Adam {
    pub fn new(params: &ModelParams, learning_rate: f64) -> Self {
        let zeros: Vec<Array2<f64>> = params
            .entries
            .iter()
            .map(|(_, t)| Array2::zeros(t.dim()))
            .collect();
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            steps: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    /// One update. `grads` holds one gradient per parameter entry, in entry
    /// order; entries with `frozen[i]` set are skipped entirely, so frozen
    /// tensors stay bit-identical.
    pub fn step(&mut self, params: &mut ModelParams, grads: &[Array2<f64>], frozen: &[bool]) {
        assert_eq!(grads.len(), params.entries.len());
        assert_eq!(frozen.len(), params.entries.len());
        self.steps += 1;
        let t = self.steps as i32;
        let m_corr = 1.0 - self.beta1.powi(t);
        let v_corr = 1.0 - self.beta2.powi(t);
        for (i, (_, tensor)) in params.entries.iter_mut().enumerate() {
            if frozen[i] {
                continue;
            }
            let g = &grads[i];
            self.m[i] = self.beta1 * &self.m[i] + (1.0 - self.beta1) * g;
            self.v[i] = self.beta2 * &self.v[i] + (1.0 - self.beta2) * &g.mapv(|x| x * x);
            let m_hat = &self.m[i] / m_corr;
            let v_hat = &self.v[i] / v_corr;
            let update = m_hat / (v_hat.mapv(f64::sqrt) + self.epsilon);
            *tensor = &*tensor - &(self.learning_rate * update);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn toy_params() -> ModelParams {
        ModelParams {
            seed: 0,
            entries: vec![
                ("a/w".into(), arr2(&[[1.0, 2.0]])),
                ("b/w".into(), arr2(&[[3.0]])),
            ],
        }
    }

    #[test]
    fn zero_gradient_changes_nothing() {
        let mut params = toy_params();
        let snapshot = params.clone();
        let mut opt = Adam::new(&params, 1e-3);
        let grads = vec![Array2::zeros((1, 2)), Array2::zeros((1, 1))];
        for _ in 0..5 {
            opt.step(&mut params, &grads, &[false, false]);
        }
        assert_eq!(params, snapshot);
    }

    #[test]
    fn first_step_moves_by_the_learning_rate() {
        let mut params = toy_params();
        let mut opt = Adam::new(&params, 1e-3);
        let grads = vec![arr2(&[[1.0, 1.0]]), arr2(&[[1.0]])];
        opt.step(&mut params, &grads, &[false, false]);
        // bias-corrected m̂ = v̂ = 1 on the first step, so Δ ≈ −lr
        assert!((params.entries[0].1[[0, 0]] - (1.0 - 1e-3)).abs() < 1e-10);
        assert!((params.entries[1].1[[0, 0]] - (3.0 - 1e-3)).abs() < 1e-10);
    }

    #[test]
    fn frozen_entries_are_bit_identical() {
        let mut params = toy_params();
        let frozen_before = params.entries[1].1.clone();
        let mut opt = Adam::new(&params, 0.1);
        let grads = vec![arr2(&[[0.5, -0.3]]), arr2(&[[10.0]])];
        for _ in 0..7 {
            opt.step(&mut params, &grads, &[false, true]);
        }
        assert_eq!(params.entries[1].1, frozen_before);
        assert_ne!(params.entries[0].1, toy_params().entries[0].1);
    }

    #[test]
    fn identical_runs_are_bit_identical() {
        let run = || {
            let mut params = toy_params();
            let mut opt = Adam::new(&params, 3e-3);
            for k in 0..20 {
                let g = 0.1 + 0.01 * k as f64;
                let grads = vec![arr2(&[[g, -g]]), arr2(&[[g * g]])];
                opt.step(&mut params, &grads, &[false, false]);
            }
            params
        };
        assert_eq!(run(), run());
    }
}
