use serde::{Deserialize, Serialize};

/// Adam hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamParams {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamParams {
    fn default() -> Self {
        AdamParams {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Moment estimates for every parameter plus the step counter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdamState {
    pub hyper: AdamParams,
    first: Vec<f64>,
    second: Vec<f64>,
    t: u64,
}

impl AdamState {
    pub fn new(n_params: usize) -> Self {
        Self::with_params(n_params, AdamParams::default())
    }

    pub fn with_params(n_params: usize, hyper: AdamParams) -> Self {
        AdamState {
            hyper,
            first: vec![0.0; n_params],
            second: vec![0.0; n_params],
            t: 0,
        }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second
    }

    /// One bias-corrected Adam update of `params` in place.
    ///
    /// # Panics
    /// If `params`, `grads` and the state disagree in length.
    pub fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        assert_eq!(params.len(), self.first.len(), "parameter count");
        assert_eq!(grads.len(), self.first.len(), "gradient count");
        let AdamParams { beta1, beta2, eps } = self.hyper;
        self.t += 1;
        let t = self.t as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((p, &g), m), v) in params
            .iter_mut()
            .zip(grads)
            .zip(&mut self.first)
            .zip(&mut self.second)
        {
            *m = beta1 * *m + (1.0 - beta1) * g;
            *v = beta2 * *v + (1.0 - beta2) * g * g;
            let m_hat = *m / c1;
            let v_hat = *v / c2;
            *p -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr_times_sign() {
        for g in [3.0, -0.02, 150.0] {
            let mut st = AdamState::new(1);
            let mut p = [1.0];
            st.step(&mut p, &[g], 0.01);
            // m_hat = g, v_hat = g^2, so the step is lr * g / (|g| + eps)
            let exact = -0.01 * g / (f64::abs(g) + 1e-8);
            assert!((p[0] - 1.0 - exact).abs() < 1e-15);
            assert!((p[0] - 1.0 + 0.01 * g.signum()).abs() < 1e-8);
            assert_eq!(st.steps(), 1);
        }
    }

    #[test]
    fn zero_gradient_leaves_params() {
        let mut st = AdamState::new(3);
        let mut p = [0.5, -2.0, 7.0];
        for _ in 0..10 {
            st.step(&mut p, &[0.0; 3], 0.1);
        }
        assert_eq!(p, [0.5, -2.0, 7.0]);
        assert_eq!(st.steps(), 10);
        assert!(st.second_moment().iter().all(|&v| v >= 0.0));
    }

    /// Textbook Adam on one scalar, written out independently.
    fn reference_quadratic(lr: f64, steps: usize) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8);
        let (mut theta, mut m, mut v) = (0.0f64, 0.0, 0.0);
        for t in 1..=steps {
            let g = 2.0 * (theta - 3.0);
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powf(t as f64));
            let vh = v / (1.0 - b2.powf(t as f64));
            theta -= lr * mh / (vh.sqrt() + eps);
        }
        theta
    }

    #[test]
    fn quadratic_converges() {
        let reference = reference_quadratic(0.1, 500);
        assert!((reference - 3.0).abs() < 1e-2);
        let mut st = AdamState::new(1);
        let mut theta = [0.0];
        for _ in 0..500 {
            let g = [2.0 * (theta[0] - 3.0)];
            st.step(&mut theta, &g, 0.1);
        }
        assert!((theta[0] - 3.0).abs() < 1e-2);
        assert!((theta[0] - reference).abs() < 1e-9);
    }
}
