//! Diffusion process constants and the closed-form forward noising.

use crate::{Error, Result, Scalar};

/// Per-step variances and their cumulative products. Index convention:
/// `betas[t - 1]` is the step-`t` variance for `t` in `1..=t_max`;
/// `alphabar(0) = 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule<S: Scalar> {
    pub betas: Vec<S>,
    pub alphas: Vec<S>,
    pub alphabars: Vec<S>,
}

impl<S: Scalar> NoiseSchedule<S> {
    /// Linear beta ramp. The canonical setting is `t_max = 1000`, betas from
    /// 1e-4 to 0.02; shorter ramps should scale the endpoints so the terminal
    /// signal level stays negligible.
    pub fn linear(t_max: usize, beta_start: f64, beta_end: f64) -> Result<Self> {
        if t_max == 0 {
            return Err(Error::InvalidSchedule("t_max must be positive".into()));
        }
        let betas: Vec<S> = (0..t_max)
            .map(|i| {
                let frac = if t_max == 1 { 0.0 } else { i as f64 / (t_max - 1) as f64 };
                S::from_f64_c(beta_start + (beta_end - beta_start) * frac)
            })
            .collect();
        Self::from_betas(betas)
    }

    /// Default ramp: 1000 steps, 1e-4 to 0.02.
    pub fn default_linear() -> Self {
        Self::linear(1000, 1e-4, 0.02).expect("canonical schedule is valid")
    }

    /// Linear ramp with endpoints scaled by `1000 / t_max`, preserving the
    /// total noise budget of the canonical schedule at any step count.
    pub fn scaled_linear(t_max: usize) -> Result<Self> {
        let scale = 1000.0 / t_max as f64;
        Self::linear(t_max, (1e-4 * scale).min(0.5), (0.02 * scale).min(0.999))
    }

    pub fn from_betas(betas: Vec<S>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidSchedule("empty beta sequence".into()));
        }
        if betas.iter().any(|&b| !(b > S::zero() && b < S::one())) {
            return Err(Error::InvalidSchedule("betas must lie in (0, 1)".into()));
        }
        let alphas: Vec<S> = betas.iter().map(|&b| S::one() - b).collect();
        let mut alphabars = Vec::with_capacity(betas.len());
        let mut acc = S::one();
        for &a in &alphas {
            acc *= a;
            alphabars.push(acc);
        }
        Ok(NoiseSchedule { betas, alphas, alphabars })
    }

    pub fn t_max(&self) -> usize {
        self.betas.len()
    }

    /// Cumulative signal level; `alphabar(0) = 1`.
    pub fn alphabar(&self, t: usize) -> S {
        if t == 0 {
            S::one()
        } else {
            self.alphabars[t - 1]
        }
    }

    pub fn check_step(&self, t: usize) -> Result<()> {
        if t == 0 || t > self.t_max() {
            return Err(Error::StepOutOfRange { t, t_max: self.t_max() });
        }
        Ok(())
    }
}

/// Closed-form forward noising: `x_t = sqrt(alphabar_t) x0 + sqrt(1 -
/// alphabar_t) eps`.
pub fn forward_noise<S: Scalar>(
    x0: &[S],
    t: usize,
    eps: &[S],
    sched: &NoiseSchedule<S>,
) -> Result<Vec<S>> {
    sched.check_step(t)?;
    if x0.len() != eps.len() {
        return Err(Error::ShapeMismatch(format!(
            "forward_noise: x0 has {} elements, eps {}",
            x0.len(),
            eps.len()
        )));
    }
    let ab = sched.alphabar(t);
    let signal = ab.sqrt();
    let noise = (S::one() - ab).sqrt();
    Ok(x0.iter().zip(eps).map(|(&x, &e)| signal * x + noise * e).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn alphabars_strictly_decrease_from_one() {
        let s: NoiseSchedule<f64> = NoiseSchedule::default_linear();
        assert!(s.alphabar(0) == 1.0);
        assert!((s.alphabar(1) - (1.0 - 1e-4)).abs() < 1e-12);
        for t in 1..=s.t_max() {
            assert!(s.alphabar(t) < s.alphabar(t - 1));
        }
        // Terminal level is negligible.
        assert!(s.alphabar(s.t_max()) < 1e-4);
    }

    #[test]
    fn scaled_ramp_keeps_terminal_level_low() {
        let s: NoiseSchedule<f64> = NoiseSchedule::scaled_linear(250).unwrap();
        assert!(s.alphabar(s.t_max()) < 1e-3, "{}", s.alphabar(s.t_max()));
    }

    #[test]
    fn forward_noise_mixture_coefficients() {
        // alphabar == 1 would return x0 exactly; the first step of a gentle
        // ramp is close. Exercise the exact algebra with a handmade schedule.
        let sched = NoiseSchedule::<f64>::from_betas(vec![0.75]).unwrap();
        // alphabar_1 = 0.25 -> x = 0.5 x0 + sqrt(0.75) eps.
        let x0 = vec![2.0, -4.0];
        let eps = vec![1.0, 1.0];
        let xt = forward_noise(&x0, 1, &eps, &sched).unwrap();
        assert!((xt[0] - (1.0 + 0.75f64.sqrt())).abs() < 1e-12);
        assert!((xt[1] - (-2.0 + 0.75f64.sqrt())).abs() < 1e-12);
    }

    #[test]
    fn forward_noise_is_linear() {
        let sched = NoiseSchedule::<f64>::default_linear();
        let x0 = vec![0.3, -0.7, 0.1];
        let eps = vec![0.5, 0.25, -1.0];
        let a = forward_noise(&x0, 100, &eps, &sched).unwrap();
        let x0_2: Vec<f64> = x0.iter().map(|v| v * 2.0).collect();
        let eps_2: Vec<f64> = eps.iter().map(|v| v * 2.0).collect();
        let b = forward_noise(&x0_2, 100, &eps_2, &sched).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((2.0 * x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn step_bounds_are_enforced() {
        let sched = NoiseSchedule::<f64>::default_linear();
        assert!(forward_noise(&[0.0], 0, &[0.0], &sched).is_err());
        assert!(forward_noise(&[0.0], 1001, &[0.0], &sched).is_err());
    }

    #[test]
    fn noised_variance_matches_mixture() {
        // Var(x_t) = alphabar * Var(x0) + (1 - alphabar) over many draws.
        let sched = NoiseSchedule::<f64>::default_linear();
        let t = 400;
        let ab = sched.alphabar(t);
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        let n = 200_000;
        let x0: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal) * 0.5).collect();
        let eps: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        let xt = forward_noise(&x0, t, &eps, &sched).unwrap();
        let mean = xt.iter().sum::<f64>() / n as f64;
        let var = xt.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n as f64;
        let expect = ab * 0.25 + (1.0 - ab);
        assert!((var - expect).abs() < 0.01, "var {var} vs {expect}");
    }
}
