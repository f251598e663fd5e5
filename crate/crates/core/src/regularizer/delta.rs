//! `f_{E₀,ε}(E) = 1 + 2 Σ_{n>=1} φ_q(nε) T_n(E₀) T_n(E)` and the right-hand
//! side of its Poisson summation form.

use std::f64::consts::PI;

use num_complex::Complex64;

use super::fourier::{hat_cutoff, phi_hat};
use super::{KernelParams, PhiTable};
use crate::error::{invalid, Result};

/// Largest direct-series term tolerated before switching to the Poisson form.
const DIRECT_TERM_LIMIT: f64 = 1e3;

#[derive(Debug, Clone)]
pub struct DeltaKernel {
    e0: f64,
    theta0: f64,
    params: KernelParams,
    table: PhiTable,
    hat_cutoff: f64,
}

impl DeltaKernel {
    /// Kernel centred at `E₀ ∈ (-1, 1)`, summed until `φ_q(nε)` is negligible.
    pub fn new(e0: f64, params: KernelParams) -> Result<Self> {
        if !(e0 > -1.0 && e0 < 1.0) {
            return Err(invalid("E0", "must lie in (-1, 1)"));
        }
        Ok(Self {
            e0,
            theta0: e0.acos(),
            table: PhiTable::new(&params)?,
            hat_cutoff: hat_cutoff(&params)?,
            params,
        })
    }

    /// Same kernel with the series cut at `n_max`.
    pub fn with_n_max(mut self, n_max: usize) -> Result<Self> {
        self.table = PhiTable::with_len(&self.params, n_max)?;
        Ok(self)
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn theta0(&self) -> f64 {
        self.theta0
    }

    pub fn params(&self) -> &KernelParams {
        &self.params
    }

    pub fn n_max(&self) -> usize {
        self.table.n_max()
    }
}

/// Partial sum of the defining series; `E` may lie outside `[-1, 1]`.
pub fn delta_kernel_series(k: &DeltaKernel, e: f64) -> f64 {
    let (mut a0, mut a1) = (1.0, k.e0);
    let (mut b0, mut b1) = (1.0, e);
    let mut sum = 0.0;
    for n in 1..=k.n_max() {
        sum += k.table.get(n) * a1 * b1;
        let a2 = 2.0 * k.e0 * a1 - a0;
        let b2 = 2.0 * e * b1 - b0;
        a0 = a1;
        a1 = a2;
        b0 = b1;
        b1 = b2;
    }
    1.0 + 2.0 * sum
}

/// `f_{E₀,ε}(E)`: the series on `[-1, 1]` and wherever its terms stay
/// moderate, the Poisson form at complex `θ` otherwise.
pub fn delta_kernel_eval(k: &DeltaKernel, e: f64) -> Result<f64> {
    if !e.is_finite() {
        return Err(invalid("E", "must be finite"));
    }
    if e.abs() <= 1.0 {
        return Ok(delta_kernel_series(k, e));
    }
    let growth = e.abs().acosh();
    let largest = (1..=k.n_max())
        .map(|n| k.table.get(n) * (n as f64 * growth).cosh())
        .fold(0.0, f64::max);
    if largest < DIRECT_TERM_LIMIT {
        return Ok(delta_kernel_series(k, e));
    }
    let theta = if e > 0.0 {
        Complex64::new(0.0, growth)
    } else {
        Complex64::new(PI, growth)
    };
    let m = poisson_m_range(k);
    poisson_rhs_complex(k, theta, m).map(|z| z.re)
}

/// Symmetric range `-m..=m` covering every non-negligible Poisson term for
/// real `θ, θ₀ ∈ [0, 2π]`.
pub fn poisson_m_range(k: &DeltaKernel) -> i64 {
    (k.params.epsilon() * k.hat_cutoff).ceil() as i64 + 3
}

/// `(2ε)⁻¹ Σ_{|m|<=m_range} [φ̂((m - (θ+θ₀)/2π)/ε) + φ̂((m - (θ-θ₀)/2π)/ε)]`.
pub fn poisson_rhs(k: &DeltaKernel, theta: f64, m_range: i64) -> Result<f64> {
    poisson_rhs_complex(k, Complex64::new(theta, 0.0), m_range).map(|z| z.re)
}

pub fn poisson_rhs_complex(k: &DeltaKernel, theta: Complex64, m_range: i64) -> Result<Complex64> {
    if m_range < 0 {
        return Err(invalid("m_range", "must be nonnegative"));
    }
    let eps = k.params.epsilon();
    let plus = (theta + k.theta0) / (2.0 * PI);
    let minus = (theta - k.theta0) / (2.0 * PI);
    let mut sum = Complex64::new(0.0, 0.0);
    for m in -m_range..=m_range {
        let mf = m as f64;
        for c in [plus, minus] {
            let xi = (mf - c) / eps;
            // both parts beyond the cutoff are negligible on the real line
            if xi.im == 0.0 && xi.re.abs() > k.hat_cutoff {
                continue;
            }
            sum += phi_hat(&k.params, xi)?;
        }
    }
    Ok(sum / (2.0 * eps))
}
