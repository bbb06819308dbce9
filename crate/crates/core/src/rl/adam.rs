use super::mlp::Scalar;

/// Adam with bias correction; the learning rate is passed per step.
#[derive(Debug, Clone)]
pub struct Adam<T> {
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<T>,
    v: Vec<T>,
    t: u64,
}

impl<T: Scalar> Adam<T> {
    pub fn new(n_params: usize) -> Self {
        Adam { beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![T::zero(); n_params], v: vec![T::zero(); n_params], t: 0 }
    }

    pub fn steps(&self) -> u64 {
        self.t
    }

    pub fn step(&mut self, params: &mut [T], grad: &[T], lr: f64) {
        assert_eq!(params.len(), self.m.len());
        assert_eq!(grad.len(), self.m.len());
        self.t += 1;
        let (b1, b2) = (T::of(self.beta1), T::of(self.beta2));
        let c1 = 1.0 - self.beta1.powi(self.t as i32);
        let c2 = 1.0 - self.beta2.powi(self.t as i32);
        let step = T::of(lr * c2.sqrt() / c1);
        let eps = T::of(self.eps * c2.sqrt());
        let one = T::one();
        for i in 0..params.len() {
            let g = grad[i];
            self.m[i] = b1 * self.m[i] + (one - b1) * g;
            self.v[i] = b2 * self.v[i] + (one - b2) * g * g;
            params[i] = params[i] - step * self.m[i] / (self.v[i].sqrt() + eps);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_step_moves_by_lr() {
        let mut a: Adam<f64> = Adam::new(2);
        let mut p = [1.0, -1.0];
        a.step(&mut p, &[0.3, -2.0], 0.1);
        assert!((p[0] - 0.9).abs() < 1e-6 && (p[1] + 0.9).abs() < 1e-6);
    }

    #[test]
    fn minimizes_quadratic() {
        let mut a: Adam<f64> = Adam::new(1);
        let mut p = [5.0];
        for _ in 0..2000 {
            let g = [2.0 * (p[0] - 2.0)];
            a.step(&mut p, &g, 0.05);
        }
        assert!((p[0] - 2.0).abs() < 1e-3);
    }
}
