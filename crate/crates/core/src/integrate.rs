//! Classical fixed-step RK4 shared by the density-matrix and wavefunction solvers.

use num_complex::Complex64;

use crate::drive::DriveSpec;

pub(crate) struct Rk4 {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4 {
    pub(crate) fn new(size: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); size];
        Self {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    /// One step of dx/dt = f(Ω(t), x); `apply(Ω, x, out)` must overwrite `out`.
    pub(crate) fn step<F>(
        &mut self,
        apply: F,
        drive: &DriveSpec,
        t: f64,
        dt: f64,
        x: &mut [Complex64],
    ) where
        F: Fn(Complex64, &[Complex64], &mut [Complex64]),
    {
        let half = 0.5 * dt;
        let w0 = drive.evaluate(t);
        let wh = drive.evaluate(t + half);
        let w1 = drive.evaluate(t + dt);

        apply(w0, x, &mut self.k1);
        for ((y, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k1) {
            *y = xi + k * half;
        }
        apply(wh, &self.tmp, &mut self.k2);
        for ((y, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k2) {
            *y = xi + k * half;
        }
        apply(wh, &self.tmp, &mut self.k3);
        for ((y, xi), k) in self.tmp.iter_mut().zip(x.iter()).zip(&self.k3) {
            *y = xi + k * dt;
        }
        apply(w1, &self.tmp, &mut self.k4);
        let sixth = dt / 6.0;
        for (i, xi) in x.iter_mut().enumerate() {
            *xi += (self.k1[i] + (self.k2[i] + self.k3[i]) * 2.0 + self.k4[i]) * sixth;
        }
    }
}
