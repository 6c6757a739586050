//! Classical fixed-step fourth-order Runge–Kutta.

/// RK4 stepper with reusable stage buffers for a system of fixed dimension.
#[derive(Debug, Clone)]
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 {
            k1: vec![0.0; dim],
            k2: vec![0.0; dim],
            k3: vec![0.0; dim],
            k4: vec![0.0; dim],
            tmp: vec![0.0; dim],
        }
    }

    /// Advances `y` by one step of length `h` for the autonomous system
    /// `dy/dt = f(y)`; `f` writes the derivative into its second argument.
    pub fn step<F>(&mut self, f: F, y: &mut [f64], h: f64)
    where
        F: Fn(&[f64], &mut [f64]),
    {
        debug_assert_eq!(y.len(), self.k1.len());
        f(y, &mut self.k1);
        axpy(&mut self.tmp, y, 0.5 * h, &self.k1);
        f(&self.tmp, &mut self.k2);
        axpy(&mut self.tmp, y, 0.5 * h, &self.k2);
        f(&self.tmp, &mut self.k3);
        axpy(&mut self.tmp, y, h, &self.k3);
        f(&self.tmp, &mut self.k4);
        for (i, yi) in y.iter_mut().enumerate() {
            *yi += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// out = y + a·k
fn axpy(out: &mut [f64], y: &[f64], a: f64, k: &[f64]) {
    for ((o, yi), ki) in out.iter_mut().zip(y).zip(k) {
        *o = yi + a * ki;
    }
}
