//! Market parameter records.

use crate::error::{Error, Result};

/// Black-Scholes parameters: risk-free rate `r` and volatility `sigma`.
///
/// The variance is stored as given so that `r = sigma^2 / 2` can be hit
/// exactly when the caller works in variance units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BsParams {
    r: f64,
    sigma2: f64,
}

impl BsParams {
    pub fn new(r: f64, sigma: f64) -> Result<Self> {
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma",
                value: sigma,
                reason: "must be finite and positive",
            });
        }
        Self::from_variance(r, sigma * sigma)
    }

    pub fn from_variance(r: f64, sigma2: f64) -> Result<Self> {
        if !(r.is_finite() && r >= 0.0) {
            return Err(Error::InvalidParameter {
                name: "r",
                value: r,
                reason: "must be finite and non-negative",
            });
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::InvalidParameter {
                name: "sigma2",
                value: sigma2,
                reason: "must be finite and positive",
            });
        }
        Ok(Self { r, sigma2 })
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    pub fn sigma(&self) -> f64 {
        self.sigma2.sqrt()
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Conventional stability bound `sigma^2 <= 2r`. Reported, never enforced.
    pub fn stable(&self) -> bool {
        self.sigma2 <= 2.0 * self.r
    }

    /// Coefficient of the first-derivative (non-Hermitian) term, `sigma^2/2 - r`.
    pub fn drift(&self) -> f64 {
        0.5 * self.sigma2 - self.r
    }
}

/// Merton-Garman parameters.
///
/// The variance follows `sigma^2 = e^y`; `lambda` and `mu` set its drift,
/// `zeta` its noise, `alpha` the exponent, and `rho` the price-volatility
/// correlation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MgParams {
    pub r: f64,
    pub lambda: f64,
    pub mu: f64,
    pub zeta: f64,
    pub alpha: f64,
    pub rho: f64,
}

impl MgParams {
    pub fn new(r: f64, lambda: f64, mu: f64, zeta: f64, alpha: f64, rho: f64) -> Result<Self> {
        let p = Self {
            r,
            lambda,
            mu,
            zeta,
            alpha,
            rho,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            ("r", self.r),
            ("lambda", self.lambda),
            ("mu", self.mu),
            ("zeta", self.zeta),
            ("alpha", self.alpha),
            ("rho", self.rho),
        ];
        for (name, value) in finite {
            if !value.is_finite() {
                return Err(Error::InvalidParameter {
                    name,
                    value,
                    reason: "must be finite",
                });
            }
        }
        if self.r < 0.0 {
            return Err(Error::InvalidParameter {
                name: "r",
                value: self.r,
                reason: "must be non-negative",
            });
        }
        if self.zeta < 0.0 {
            return Err(Error::InvalidParameter {
                name: "zeta",
                value: self.zeta,
                reason: "must be non-negative",
            });
        }
        if !(-1.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter {
                name: "rho",
                value: self.rho,
                reason: "must lie in [-1, 1]",
            });
        }
        Ok(())
    }

    /// `zeta^2 e^{2y(alpha-1)}`, the coefficient of the second `y` derivative.
    pub fn vol_diffusion(&self, y: f64) -> f64 {
        self.zeta * self.zeta * (2.0 * y * (self.alpha - 1.0)).exp()
    }

    /// `rho zeta e^{y(alpha-1/2)}`, the mixed-derivative coefficient.
    pub fn correlation_term(&self, y: f64) -> f64 {
        self.rho * self.zeta * (y * (self.alpha - 0.5)).exp()
    }

    /// `B(y) = r - e^y/2`, the price-drift term multiplying `p_x`.
    pub fn price_drift(&self, y: f64) -> f64 {
        self.r - 0.5 * y.exp()
    }

    /// `A(y) = lambda e^{-y} + mu - (zeta^2/2) e^{2y(alpha-1)}`, the
    /// volatility-drift term multiplying `p_y`.
    pub fn vol_drift(&self, y: f64) -> f64 {
        self.lambda * (-y).exp() + self.mu - 0.5 * self.vol_diffusion(y)
    }

    /// `G(y) = lambda e^{-y} + mu + (zeta^2/2) e^{2y(alpha-1)} + rho zeta e^{y(alpha-1/2)}`.
    ///
    /// `H_MG e^{x+y} = -G(y) e^{x+y}`, and `e^y G(y)` is the martingale
    /// constraint residual.
    pub fn extended_decay(&self, y: f64) -> f64 {
        self.lambda * (-y).exp() + self.mu + 0.5 * self.vol_diffusion(y) + self.correlation_term(y)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn stability_flag() {
        assert!(BsParams::new(0.05, 0.2).unwrap().stable());
        assert!(BsParams::from_variance(0.02, 0.04).unwrap().stable());
        assert!(!BsParams::new(0.01, 0.5).unwrap().stable());
    }

    #[test]
    fn bs_rejects_bad_inputs() {
        assert!(BsParams::new(-0.01, 0.2).is_err());
        assert!(BsParams::new(0.05, 0.0).is_err());
        assert!(BsParams::new(0.05, f64::NAN).is_err());
    }

    #[test]
    fn mg_invariants() {
        assert!(MgParams::new(0.05, 0.01, 0.02, 0.1, 1.0, 0.0).is_ok());
        assert!(MgParams::new(0.05, 0.01, 0.02, 0.1, 1.0, 1.5).is_err());
        assert!(MgParams::new(0.05, 0.01, 0.02, -0.1, 1.0, 0.0).is_err());
        assert!(MgParams::new(-0.05, 0.01, 0.02, 0.1, 1.0, 0.0).is_err());
        assert!(MgParams::new(0.0, 0.01, 0.02, 0.0, 1.0, -1.0).is_ok());
    }

    #[test]
    fn coefficient_helpers() {
        let p = MgParams::new(0.1, 0.01, 0.02, 0.1, 1.0, 0.0).unwrap();
        let y = 0.1f64.ln();
        assert!((p.vol_drift(y) - 0.115).abs() < 1e-15);
        assert!((p.price_drift(y) - 0.05).abs() < 1e-15);
    }
}
