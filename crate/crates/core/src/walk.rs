//! Alternating random walk `S_m = x + sum of steps`, odd steps from one
//! law and even steps from another, and the parity of its first passage
//! over a level `n * lambda`.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::math::{integrate, QuadTol};
use crate::noise::NoiseLaw;
use crate::prelude::*;
use crate::rng::{channel, experiment, StreamKey};
use crate::runner::ReplicaRunner;
use crate::stats::Proportion;

/// Law of one step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "snake_case")]
pub enum StepLaw {
    /// The noise value itself.
    Direct(NoiseLaw),
    /// `-(1/eps) ln(1 - eps c - eps delta xi)`: the log-speed loss at a wall
    /// with perturbed restitution.
    LogRestitution {
        c: f64,
        eps: f64,
        delta: f64,
        noise: NoiseLaw,
    },
}

impl StepLaw {
    fn transform(&self, x: f64) -> f64 {
        match *self {
            StepLaw::Direct(_) => x,
            StepLaw::LogRestitution { c, eps, delta, .. } => -(-eps * (c + delta * x)).ln_1p() / eps,
        }
    }

    fn noise(&self) -> &NoiseLaw {
        match self {
            StepLaw::Direct(n) | StepLaw::LogRestitution { noise: n, .. } => n,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.noise().validate()?;
        let (lo, hi) = self.support();
        if !(lo > 0.0 && hi.is_finite()) {
            return Err(param("step", format!("steps must lie in a bounded subset of (0, inf), got [{lo}, {hi}]")));
        }
        Ok(())
    }

    /// Bounds `(alpha, beta)` of a step.
    pub fn support(&self) -> (f64, f64) {
        let (lo, hi) = self.noise().support();
        (self.transform(lo), self.transform(hi))
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.transform(self.noise().sample(rng))
    }

    /// Exact mean by quadrature against the noise density.
    pub fn mean(&self) -> f64 {
        match self {
            StepLaw::Direct(n) => n.mean(),
            StepLaw::LogRestitution { noise, .. } => {
                let (lo, hi) = noise.support();
                integrate(|x| self.transform(x) * noise.density(x), lo, hi, QuadTol::new(1e-14, 1e-12))
                    .map(|q| q.value)
                    .unwrap_or(f64::NAN)
            }
        }
    }
}

/// The walk together with its passage level `n * lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlternatingWalk {
    pub odd: StepLaw,
    pub even: StepLaw,
    pub start: f64,
    pub lambda: f64,
    pub n: u64,
}

impl AlternatingWalk {
    pub fn validate(&self) -> Result<()> {
        self.odd.validate()?;
        self.even.validate()?;
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(param("lambda", "must be positive"));
        }
        if !self.start.is_finite() {
            return Err(param("start", "must be finite"));
        }
        Ok(())
    }

    pub fn level(&self) -> f64 {
        self.n as f64 * self.lambda
    }

    /// `E even / (E odd + E even)`, the limit of `P(tau even)`.
    pub fn limit_even(&self) -> f64 {
        let (a, b) = (self.odd.mean(), self.even.mean());
        b / (a + b)
    }

    /// First `m >= 0` with `S_m > n lambda`, drawing odd steps from `odd`
    /// and even steps from `even`.
    pub fn first_passage<R: Rng + ?Sized>(&self, odd: &mut R, even: &mut R) -> u64 {
        let level = self.level();
        let mut s = self.start;
        let mut m = 0;
        while s <= level {
            m += 1;
            s += if m % 2 == 1 {
                self.odd.sample(odd)
            } else {
                self.even.sample(even)
            };
        }
        m
    }

    /// Passage index of replica `replica`, with streams keyed by `seed`.
    pub fn replica(&self, seed: u64, replica: u64) -> u64 {
        let key = StreamKey::new(seed, experiment::WALK, replica, channel::ODD_STEPS);
        let mut odd = key.rng();
        let mut even = key.with_channel(channel::EVEN_STEPS).rng();
        self.first_passage(&mut odd, &mut even)
    }
}

/// Parity frequencies of the first passage.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParityEstimate {
    pub even: Proportion,
    pub odd: Proportion,
    pub limit_even: f64,
    pub mean_passage: f64,
    pub max_passage: u64,
}

/// Monte Carlo estimate of `P(tau even)` with `z`-sigma Wilson intervals.
pub fn stopping_parity<R: ReplicaRunner>(walk: &AlternatingWalk, replicas: u64, seed: u64, z: f64, runner: &R) -> Result<ParityEstimate> {
    walk.validate()?;
    if replicas == 0 {
        return Err(param("replicas", "must be positive"));
    }
    let taus = runner.map(replicas, |i| walk.replica(seed, i));
    let even = taus.iter().filter(|&&t| t % 2 == 0).count() as u64;
    let total: u64 = taus.iter().sum();
    Ok(ParityEstimate {
        even: Proportion::new(even, replicas, z),
        odd: Proportion::new(replicas - even, replicas, z),
        limit_even: walk.limit_even(),
        mean_passage: total as f64 / replicas as f64,
        max_passage: taus.iter().copied().max().unwrap_or(0),
    })
}

/// One row of a parity scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanRow {
    pub n: u64,
    pub p_even: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub analytic_limit: f64,
    pub deviation: f64,
    pub sigma: f64,
}

/// `P(tau even)` for each `n` in `ns`, each with its own stream family.
pub fn parity_convergence_scan<R: ReplicaRunner>(walk: &AlternatingWalk, ns: &[u64], replicas: u64, seed: u64, z: f64, runner: &R) -> Result<Vec<ScanRow>> {
    if ns.windows(2).any(|w| w[1] < w[0]) {
        return Err(param("n_list", "must be non-decreasing"));
    }
    ns.iter()
        .map(|&n| {
            let w = AlternatingWalk { n, ..*walk };
            let est = stopping_parity(&w, replicas, seed ^ n.rotate_left(32), z, runner)?;
            Ok(ScanRow {
                n,
                p_even: est.even.estimate,
                ci_lo: est.even.lo,
                ci_hi: est.even.hi,
                analytic_limit: est.limit_even,
                deviation: (est.even.estimate - est.limit_even).abs(),
                sigma: est.even.sigma(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runner::Serial;
    use proptest::prelude::*;

    fn walk(odd: NoiseLaw, even: NoiseLaw, lambda: f64, n: u64) -> AlternatingWalk {
        AlternatingWalk {
            odd: StepLaw::Direct(odd),
            even: StepLaw::Direct(even),
            start: 0.0,
            lambda,
            n,
        }
    }

    #[test]
    fn symmetric_laws() {
        let u = NoiseLaw::uniform(1.0, 2.0);
        let w = walk(u, u, 1.0, 1000);
        assert_eq!(w.limit_even(), 0.5);
        let est = stopping_parity(&w, 20_000, 1, 3.0, &Serial).unwrap();
        assert!(est.even.covers(0.5));
        assert_eq!(est.even.successes + est.odd.successes, 20_000);
    }

    #[test]
    fn small_n_matches_quadrature() {
        // steps in (1, 2), level 3: tau is 2 or 3 and tau = 2 iff x1 + x2 > 3
        let a = NoiseLaw::Triangular {
            lo: 1.0,
            mode: 1.2,
            hi: 2.0,
        };
        let b = NoiseLaw::Bump { lo: 1.0, hi: 2.0 };
        let w = walk(a, b, 3.0, 1);
        // P(x1 + x2 > 3) = int f_a(x) (1 - F_b(3 - x)) dx
        let exact = integrate(|x| a.density(x) * (1.0 - b.cdf(3.0 - x)), 1.0, 2.0, QuadTol::default())
            .unwrap()
            .value;
        let n = 400_000;
        let taus = Serial.map(n, |i| w.replica(9, i));
        assert!(taus.iter().all(|&t| t == 2 || t == 3));
        let p = taus.iter().filter(|&&t| t == 2).count() as f64 / n as f64;
        assert!((p - exact).abs() < 1e-3 + 3.0 * (exact * (1.0 - exact) / n as f64).sqrt(), "{p} vs {exact}");
    }

    #[test]
    fn log_restitution_mean() {
        let noise = NoiseLaw::uniform(0.1, 2.9);
        let s = StepLaw::LogRestitution {
            c: 2.0,
            eps: 1e-3,
            delta: 0.1,
            noise,
        };
        // first order: c + delta E xi
        assert!((s.mean() - 2.15).abs() < 5e-3);
        let (lo, hi) = s.support();
        assert!(lo > 2.0 && hi < 2.3);
    }

    #[test]
    fn scan_rejects_unsorted() {
        let u = NoiseLaw::uniform(1.0, 2.0);
        assert!(parity_convergence_scan(&walk(u, u, 1.0, 1), &[10, 5], 10, 0, 3.0, &Serial).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn passage_index_bounds(lo in 0.1f64..1.0, w in 0.01f64..2.0, level in 1.0f64..50.0, seed in 0u64..1000) {
            let law = NoiseLaw::uniform(lo, lo + w);
            let walk = walk(law, law, level, 1);
            let tau = walk.replica(seed, 0);
            let (alpha, beta) = (lo, lo + w);
            prop_assert!(tau as f64 * alpha <= level + beta);
            prop_assert!(tau as f64 * beta > level);
        }
    }
}
