//! Bounded noise laws with continuous densities.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::prelude::*;

/// A law on a bounded interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "law", rename_all = "snake_case")]
pub enum NoiseLaw {
    Uniform { lo: f64, hi: f64 },
    Triangular { lo: f64, mode: f64, hi: f64 },
    /// Beta(2, 2) rescaled to `[lo, hi]`.
    Bump { lo: f64, hi: f64 },
}

impl NoiseLaw {
    pub fn uniform(lo: f64, hi: f64) -> Self {
        NoiseLaw::Uniform { lo, hi }
    }

    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.support();
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(param("noise", format!("support [{lo}, {hi}] is empty or unbounded")));
        }
        if let NoiseLaw::Triangular { mode, .. } = *self {
            if !(lo..=hi).contains(&mode) {
                return Err(param("noise", format!("mode {mode} outside [{lo}, {hi}]")));
            }
        }
        Ok(())
    }

    pub fn support(&self) -> (f64, f64) {
        match *self {
            NoiseLaw::Uniform { lo, hi }
            | NoiseLaw::Triangular { lo, hi, .. }
            | NoiseLaw::Bump { lo, hi } => (lo, hi),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            NoiseLaw::Uniform { lo, hi } | NoiseLaw::Bump { lo, hi } => 0.5 * (lo + hi),
            NoiseLaw::Triangular { lo, mode, hi } => (lo + mode + hi) / 3.0,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseLaw::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            NoiseLaw::Bump { lo, hi } => (hi - lo).powi(2) / 20.0,
            NoiseLaw::Triangular { lo, mode: c, hi } => {
                (lo * lo + c * c + hi * hi - lo * c - lo * hi - c * hi) / 18.0
            }
        }
    }

    pub fn density(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x < lo || x > hi {
            return 0.0;
        }
        let w = hi - lo;
        match *self {
            NoiseLaw::Uniform { .. } => 1.0 / w,
            NoiseLaw::Bump { .. } => {
                let u = (x - lo) / w;
                6.0 * u * (1.0 - u) / w
            }
            NoiseLaw::Triangular { mode, .. } => {
                if x < mode {
                    2.0 * (x - lo) / (w * (mode - lo))
                } else if x > mode {
                    2.0 * (hi - x) / (w * (hi - mode))
                } else {
                    2.0 / w
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let (lo, hi) = self.support();
        if x <= lo {
            return 0.0;
        }
        if x >= hi {
            return 1.0;
        }
        let w = hi - lo;
        match *self {
            NoiseLaw::Uniform { .. } => (x - lo) / w,
            NoiseLaw::Bump { .. } => {
                let u = (x - lo) / w;
                u * u * (3.0 - 2.0 * u)
            }
            NoiseLaw::Triangular { mode, .. } => {
                if x <= mode {
                    (x - lo).powi(2) / (w * (mode - lo))
                } else {
                    1.0 - (hi - x).powi(2) / (w * (hi - mode))
                }
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match *self {
            NoiseLaw::Uniform { lo, hi } => lo + (hi - lo) * u,
            NoiseLaw::Bump { lo, hi } => {
                // median of three uniforms is Beta(2, 2)
                let (v, w): (f64, f64) = (rng.random(), rng.random());
                let m = u.max(v).min(u.min(v).max(w));
                lo + (hi - lo) * m
            }
            NoiseLaw::Triangular { lo, mode, hi } => {
                let w = hi - lo;
                let f = (mode - lo) / w;
                if u < f {
                    lo + (u * w * (mode - lo)).sqrt()
                } else {
                    hi - ((1.0 - u) * w * (hi - mode)).sqrt()
                }
            }
        }
    }
}
