//! Reflected angle diffusion on `[0, pi]` with generator
//! `(1 / (2 sin theta)) (a u')'`, built from the non-singular diffusion
//! `(1/2) (a u')'` by the time change `dt = sin(theta) dt~`.

use core::f64::consts::PI;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::prelude::*;

/// The diffusion coefficient `a(theta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diffusivity {
    Constant { a: f64 },
    /// `base + amplitude sin(theta)`.
    Sine { base: f64, amplitude: f64 },
}

impl Default for Diffusivity {
    fn default() -> Self {
        Diffusivity::Constant { a: 1.0 }
    }
}

impl Diffusivity {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Diffusivity::Constant { a } => a > 0.0 && a.is_finite(),
            Diffusivity::Sine { base, amplitude } => base > 0.0 && base + amplitude > 0.0 && amplitude.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(param("diffusivity", "a(theta) must be positive on [0, pi]"))
        }
    }

    /// `(a, a')` at `theta`.
    pub fn eval(&self, theta: f64) -> (f64, f64) {
        match *self {
            Diffusivity::Constant { a } => (a, 0.0),
            Diffusivity::Sine { base, amplitude } => (base + amplitude * theta.sin(), amplitude * theta.cos()),
        }
    }
}

/// Step control for [`reflected_diffusion_step`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiffusionControl {
    /// Internal-time step cap; the step used is `min(step, delta / 100)`.
    pub step: f64,
    /// Angles closer than this to `0` or `pi` are resampled.
    pub grazing: f64,
    pub max_steps: u64,
    pub max_resamples: u32,
}

impl Default for DiffusionControl {
    fn default() -> Self {
        DiffusionControl {
            step: 1e-3,
            grazing: 1e-9,
            max_steps: 100_000_000,
            max_resamples: 100,
        }
    }
}

fn fold(mut theta: f64) -> f64 {
    loop {
        if theta < 0.0 {
            theta = -theta;
        } else if theta > PI {
            theta = 2.0 * PI - theta;
        } else {
            return theta;
        }
    }
}

fn euler<R: Rng + ?Sized>(a: &Diffusivity, theta: f64, dt: f64, rng: &mut R) -> f64 {
    let (v, dv) = a.eval(theta);
    let z: f64 = rng.sample(StandardNormal);
    fold(theta + 0.5 * dv * dt + (v * dt).sqrt() * z)
}

fn run<R: Rng + ?Sized>(a: &Diffusivity, theta0: f64, delta: f64, ctl: &DiffusionControl, rng: &mut R) -> Result<f64> {
    let h = ctl.step.min(delta / 100.0);
    let mut theta = theta0;
    let mut clock = 0.0;
    let mut steps = 0u64;
    loop {
        let s = theta.sin();
        if s > 0.0 && delta - clock <= s * h {
            return Ok(euler(a, theta, (delta - clock) / s, rng));
        }
        let next = euler(a, theta, h, rng);
        clock += 0.5 * (s + next.sin()) * h;
        theta = next;
        if clock >= delta {
            return Ok(theta);
        }
        steps += 1;
        if steps > ctl.max_steps {
            return Err(Error::Integration(format!(
                "angle diffusion used {steps} steps without reaching time {delta}"
            )));
        }
    }
}

/// One sample of the angle diffusion at time `delta`, started at `theta0`.
pub fn reflected_diffusion_step<R: Rng + ?Sized>(a: &Diffusivity, theta0: f64, delta: f64, ctl: &DiffusionControl, rng: &mut R) -> Result<f64> {
    if !(0.0..=PI).contains(&theta0) {
        return Err(param("theta", format!("{theta0} is outside [0, pi]")));
    }
    if !(delta >= 0.0 && delta.is_finite()) {
        return Err(param("delta", "must be non-negative"));
    }
    if delta == 0.0 {
        return Ok(theta0);
    }
    for _ in 0..=ctl.max_resamples {
        let theta = run(a, theta0, delta, ctl, rng)?;
        if theta > ctl.grazing && theta < PI - ctl.grazing {
            return Ok(theta);
        }
    }
    Err(Error::Tangential(theta0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::StreamKey;
    use crate::stats::{ks_distance, Moments};

    fn rng(i: u64) -> crate::rng::StreamRng {
        StreamKey::new(11, 99, i, 0).rng()
    }

    #[test]
    fn fold_maps_into_range() {
        assert_eq!(fold(-0.5), 0.5);
        assert_eq!(fold(PI + 0.25), PI - 0.25);
        assert!((fold(-2.0 * PI - 0.1) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn zero_delta_is_identity() {
        let a = Diffusivity::default();
        assert_eq!(reflected_diffusion_step(&a, 1.0, 0.0, &DiffusionControl::default(), &mut rng(0)).unwrap(), 1.0);
        assert!(reflected_diffusion_step(&a, 4.0, 0.1, &DiffusionControl::default(), &mut rng(0)).is_err());
    }

    #[test]
    fn chained_samples_have_sine_density() {
        let a = Diffusivity::default();
        let ctl = DiffusionControl::default();
        let mut r = rng(1);
        let mut theta = 0.3;
        let n = 200_000;
        let mut sample = Vec::with_capacity(n);
        for _ in 0..n {
            theta = reflected_diffusion_step(&a, theta, 0.5, &ctl, &mut r).unwrap();
            sample.push(theta);
        }
        let ks = ks_distance(&sample, |t| 0.5 * (1.0 - t.cos()));
        assert!(ks < 0.01, "ks {ks}");
        // the uniform law is far from the invariant one
        let uniform_ks = ks_distance(&sample, |t| t / PI);
        assert!(uniform_ks > 0.05);
    }

    #[test]
    fn symmetric_about_right_angle() {
        let a = Diffusivity::Sine { base: 1.0, amplitude: 0.5 };
        let ctl = DiffusionControl::default();
        let n = 20_000;
        let mut r = rng(2);
        let mut m = Moments::default();
        let mut above = 0;
        for _ in 0..n {
            let t = reflected_diffusion_step(&a, PI / 2.0, 0.2, &ctl, &mut r).unwrap();
            m.push(t - PI / 2.0);
            above += (t > PI / 2.0) as u64;
        }
        assert!(m.mean().abs() < 4.0 * (m.variance() / n as f64).sqrt());
        let p = crate::stats::Proportion::new(above, n, 4.0);
        assert!(p.covers(0.5));
    }

    #[test]
    fn diffusive_scaling() {
        let a = Diffusivity::default();
        let ctl = DiffusionControl::default();
        let msd = |delta: f64, seed: u64| {
            let mut r = rng(seed);
            let mut m = Moments::default();
            for _ in 0..20_000 {
                let t = reflected_diffusion_step(&a, PI / 2.0, delta, &ctl, &mut r).unwrap();
                m.push((t - PI / 2.0).powi(2));
            }
            m.mean()
        };
        let (big, small) = (msd(0.02, 3), msd(0.01, 4));
        // away from the boundary sin(theta) ~ 1, so E|d theta|^2 ~ delta
        assert!((big / small - 2.0).abs() < 0.2, "{big} {small}");
        assert!((big - 0.02).abs() < 0.002);
    }
}
