//! Model constants and the explicit intermediate profile.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::quadrature;

/// Relative tolerance for the quadrature/closed-form cross-check of the q-moment.
pub const MOMENT_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    pub p: f64,
    pub mu: f64,
    pub dim: usize,
    pub q: f64,
    pub beta: f64,
    pub kappa: f64,
    pub b: f64,
    pub a: f64,
    /// Truncation constant K of the cutoff χ.
    pub k_trunc: f64,
    /// ∫|y|^q e^{-y²/4} dy as computed by quadrature.
    pub q_moment: f64,
}

/// Closed form of ∫_ℝ |y|^r e^{-y²/4} dy.
pub fn gaussian_abs_moment(r: f64) -> f64 {
    2f64.powf(r + 1.0) * gamma((r + 1.0) / 2.0)
}

impl ModelParams {
    pub fn new(p: f64, mu: f64, k_trunc: f64) -> Result<Self> {
        if !(p > 3.0) || !p.is_finite() {
            return Err(Error::ExponentTooSmall(p));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::NonPositiveMu(mu));
        }
        if !(k_trunc >= 6.0) || !k_trunc.is_finite() {
            return Err(Error::TruncationTooSmall(k_trunc));
        }
        let q = 2.0 * p / (p + 1.0);
        let beta = (p + 1.0) / (2.0 * (p - 1.0));
        let kappa = (1.0 / (p - 1.0)).powf(1.0 / (p - 1.0));

        let q_moment = quadrature::abs_moment_quadrature(q);
        let closed = gaussian_abs_moment(q);
        let relative = ((q_moment - closed) / closed).abs();
        if relative > MOMENT_TOLERANCE {
            return Err(Error::MomentMismatch {
                quadrature: q_moment,
                closed_form: closed,
                relative,
            });
        }

        let dim = 1usize;
        let n = dim as f64;
        let e = (p + 1.0) / (p - 1.0);
        let b = 0.5
            * (p - 1.0).powf((p - 2.0) / (p - 1.0))
            * ((4.0 * std::f64::consts::PI).sqrt() * (p + 1.0).powi(2) * n / (p * q_moment)).powf(e)
            * mu.powf(-e);
        let a = 2.0 * n * b * kappa / (p - 1.0).powi(2);
        Ok(Self {
            p,
            mu,
            dim,
            q,
            beta,
            kappa,
            b,
            a,
            k_trunc,
            q_moment,
        })
    }

    /// Copy with b scaled by `factor`; a is re-derived from the scaled b.
    pub fn with_b_factor(&self, factor: f64) -> Self {
        let mut out = *self;
        out.b *= factor;
        out.a = 2.0 * self.dim as f64 * out.b * self.kappa / (self.p - 1.0).powi(2);
        out
    }

    /// Copy with only a scaled.
    pub fn with_a_factor(&self, factor: f64) -> Self {
        let mut out = *self;
        out.a *= factor;
        out
    }

    /// Same constants for a different gradient coefficient (b, a rescale as μ^{-(p+1)/(p-1)}).
    pub fn with_mu(&self, mu: f64) -> Result<Self> {
        Self::new(self.p, mu, self.k_trunc)
    }

    /// Profile exponent 1/(p-1).
    #[inline]
    pub fn inv_pm1(&self) -> f64 {
        1.0 / (self.p - 1.0)
    }

    /// φ₀(z) = (p−1+bz²)^{−1/(p−1)}.
    #[inline]
    pub fn phi0(&self, z: f64) -> f64 {
        (self.p - 1.0 + self.b * z * z).powf(-self.inv_pm1())
    }

    /// φ(y,s) = φ₀(y/s^β) + a/s^{2β}.
    pub fn phi(&self, y: f64, s: f64) -> Result<f64> {
        if !(s > 0.0) {
            return Err(Error::NonPositiveTime(s));
        }
        Ok(self.phi0(y / s.powf(self.beta)) + self.a * s.powf(-2.0 * self.beta))
    }

    pub fn derivatives(&self, y: f64, s: f64) -> Result<ProfilePoint> {
        Ok(self.slice(s)?.at(y))
    }

    /// Precomputed s-dependent factors for evaluating the profile along a line of constant s.
    pub fn slice(&self, s: f64) -> Result<ProfileSlice> {
        if !(s > 0.0) {
            return Err(Error::NonPositiveTime(s));
        }
        let p = self.p;
        let sb = s.powf(self.beta);
        Ok(ProfileSlice {
            p,
            b: self.b,
            inv_sb: 1.0 / sb,
            offset: self.a / (sb * sb),
            c_y: -2.0 * self.b / ((p - 1.0) * sb),
            c_yy: 2.0 * self.b / ((p - 1.0) * sb * sb),
            c_yy2: 2.0 * self.b * p / (p - 1.0),
            c_s: 2.0 * self.beta * self.b / ((p - 1.0) * s),
            c_s0: -2.0 * self.beta * self.a / (sb * sb * s),
        })
    }
}

/// φ and its derivatives at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfilePoint {
    pub phi: f64,
    pub dy: f64,
    pub dyy: f64,
    pub ds: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct ProfileSlice {
    p: f64,
    b: f64,
    inv_sb: f64,
    offset: f64,
    c_y: f64,
    c_yy: f64,
    c_yy2: f64,
    c_s: f64,
    c_s0: f64,
}

impl ProfileSlice {
    #[inline]
    pub fn phi(&self, y: f64) -> f64 {
        let z = y * self.inv_sb;
        (self.p - 1.0 + self.b * z * z).powf(-1.0 / (self.p - 1.0)) + self.offset
    }

    #[inline]
    pub fn at(&self, y: f64) -> ProfilePoint {
        let z = y * self.inv_sb;
        let base = self.p - 1.0 + self.b * z * z;
        let f0 = base.powf(-1.0 / (self.p - 1.0));
        // φ₀^p = φ₀ / base, φ₀^{2p-1} = φ₀^p / base
        let f0p = f0 / base;
        let f0_2p1 = f0p / base;
        ProfilePoint {
            phi: f0 + self.offset,
            dy: self.c_y * z * f0p,
            dyy: self.c_yy * (-f0p + self.c_yy2 * z * z * f0_2p1),
            ds: self.c_s * z * z * f0p + self.c_s0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // 30-digit reference values computed with an arbitrary-precision oracle.
    const REF: [(f64, f64, f64, f64); 4] = [
        (4.0, 10.7984638801404, 1.66383037265855, 0.693361274350635),
        (5.0, 13.5063784941794, 1.1938064778133, 0.707106781186548),
        (7.0, 21.18796121402, 0.873222241842145, 0.0),
        (9.0, 31.2396257271961, 0.752782640283973, 0.0),
    ];

    #[test]
    fn constants_match_reference() {
        for &(p, b, a, kappa) in &REF {
            let m = ModelParams::new(p, 1.0, 6.0).unwrap();
            assert_relative_eq!(m.b, b, max_relative = 1e-12);
            assert_relative_eq!(m.a, a, max_relative = 1e-12);
            if kappa > 0.0 {
                assert_relative_eq!(m.kappa, kappa, max_relative = 1e-13);
            }
            assert_eq!(m.dim, 1);
        }
    }

    #[test]
    fn exponent_identities() {
        for p in [4.0, 5.0, 7.0, 9.0] {
            let m = ModelParams::new(p, 1.0, 6.0).unwrap();
            assert!((2.0 * m.beta * (m.q - 1.0) - 1.0).abs() < 4.0 * f64::EPSILON);
            assert!((2.0 * m.beta * m.q - 2.0 * m.beta - 1.0).abs() < 8.0 * f64::EPSILON);
            assert!(m.q > 1.5 && m.q < 2.0 && m.beta > 0.5 && m.beta < 1.0);
        }
        let m = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        assert_eq!(m.q, 5.0 / 3.0);
        assert_eq!(m.beta, 0.75);
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(matches!(ModelParams::new(3.0, 1.0, 6.0), Err(Error::ExponentTooSmall(_))));
        assert!(matches!(ModelParams::new(2.5, 1.0, 6.0), Err(Error::ExponentTooSmall(_))));
        assert!(matches!(ModelParams::new(5.0, 0.0, 6.0), Err(Error::NonPositiveMu(_))));
        assert!(matches!(ModelParams::new(5.0, 1.0, 5.0), Err(Error::TruncationTooSmall(_))));
        let m = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        assert!(matches!(m.phi(0.0, 0.0), Err(Error::NonPositiveTime(_))));
        assert!(m.derivatives(1.0, -1.0).is_err());
    }

    #[test]
    fn b_scales_with_mu() {
        let m1 = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        let m2 = m1.with_mu(2.0).unwrap();
        assert_relative_eq!(m2.b, m1.b * 2f64.powf(-1.5), max_relative = 1e-13);
    }

    #[test]
    fn profile_values() {
        let m = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        assert_relative_eq!(m.phi0(0.0), m.kappa, max_relative = 1e-15);
        assert_relative_eq!(m.phi0(1.0), (4.0 + m.b).powf(-0.25), max_relative = 1e-15);
        let z = 1e6;
        assert_relative_eq!(m.phi0(z) * (m.b * z * z).powf(0.25), 1.0, max_relative = 1e-9);
        assert_relative_eq!(
            m.phi(0.0, 100.0).unwrap(),
            m.kappa + m.a * 100f64.powf(-1.5),
            max_relative = 1e-15
        );
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let m = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        let (y, s, h) = (3.0, 50.0, 1e-4);
        let d = m.derivatives(y, s).unwrap();
        let f = |y: f64, s: f64| m.phi(y, s).unwrap();
        let dy = (f(y + h, s) - f(y - h, s)) / (2.0 * h);
        let dyy = (f(y + h, s) - 2.0 * f(y, s) + f(y - h, s)) / (h * h);
        let ds = (f(y, s + h) - f(y, s - h)) / (2.0 * h);
        assert_relative_eq!(d.dy, dy, max_relative = 1e-6);
        assert_relative_eq!(d.ds, ds, max_relative = 1e-6);
        assert_relative_eq!(d.dyy, dyy, max_relative = 1e-4);
        assert_eq!(m.derivatives(0.0, 7.0).unwrap().dy, 0.0);
    }

    #[test]
    fn gradient_bound_uniform() {
        let m = ModelParams::new(5.0, 1.0, 6.0).unwrap();
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for s in [10.0, 100.0, 1000.0, 10000.0] {
            let sl = m.slice(s).unwrap();
            let sb = s.powf(m.beta);
            let sup = (0..4000)
                .map(|i| sl.at(i as f64 * 0.005 * sb).dy.abs())
                .fold(0.0, f64::max);
            lo = lo.min(sup * sb);
            hi = hi.max(sup * sb);
        }
        assert!(hi / lo < 1.0001, "{lo} {hi}");
    }
}
