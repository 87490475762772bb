//! Online gradient descent over a Euclidean ball.
//!
//! `h_1 = 0`, `h_{t+1} = Proj_W[h_t - eta * g_t]` with the fixed step
//! `eta = 2W / (Z sqrt(T))`, which gives `O(W Z sqrt(T))` regret against
//! any fixed `|h| <= W` when every gradient has norm at most `Z`.

use crate::error::{Error, Result};
use crate::loglik::norm2;

/// `W z / max(|z|, W)`.
pub fn project_ball(z: &[f64], radius: f64) -> Vec<f64> {
    let norm = norm2(z);
    if norm <= radius {
        return z.to_vec();
    }
    // rounding can leave the scaled vector a few ulps outside the ball;
    // shrink until it is inside so that projecting again is the identity
    let mut scale = radius / norm;
    loop {
        let p: Vec<f64> = z.iter().map(|x| x * scale).collect();
        if norm2(&p) <= radius {
            return p;
        }
        scale = scale.next_down();
    }
}

/// Fixed-horizon OGD state. Updates return a new value.
#[derive(Debug, Clone, PartialEq)]
pub struct OgdState {
    h: Vec<f64>,
    radius: f64,
    gradient_bound: f64,
    eta: f64,
    t: u64,
    clipped: u64,
}

impl OgdState {
    pub fn new(n: usize, radius: f64, gradient_bound: f64, horizon: u64) -> Result<Self> {
        if !(radius > 0.0) || !(gradient_bound > 0.0) || horizon == 0 || n == 0 {
            return Err(Error::Config(format!(
                "OGD needs n, W, Z, T > 0 (n={n}, W={radius}, Z={gradient_bound}, T={horizon})"
            )));
        }
        let eta = 2.0 * radius / (gradient_bound * (horizon as f64).sqrt());
        Ok(Self {
            h: vec![0.0; n],
            radius,
            gradient_bound,
            eta,
            t: 0,
            clipped: 0,
        })
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn gradient_bound(&self) -> f64 {
        self.gradient_bound
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    /// Number of updates applied.
    pub fn t(&self) -> u64 {
        self.t
    }

    /// Gradients that exceeded `Z` and were rescaled.
    pub fn clipped(&self) -> u64 {
        self.clipped
    }

    /// Overrides the hypothesis (projected onto the ball). Used to pin `h = h*` in tests.
    pub fn with_h(mut self, h: Vec<f64>) -> Result<Self> {
        if h.len() != self.h.len() {
            return Err(Error::Dimension {
                expected: self.h.len(),
                got: h.len(),
            });
        }
        self.h = project_ball(&h, self.radius);
        Ok(self)
    }

    pub fn step(&self, gradient: &[f64]) -> Self {
        assert_eq!(gradient.len(), self.h.len(), "gradient dimension");
        let mut next = self.clone();
        let g_norm = norm2(gradient);
        let scale = if g_norm > self.gradient_bound {
            next.clipped += 1;
            self.gradient_bound / g_norm
        } else {
            1.0
        };
        let moved: Vec<f64> = self
            .h
            .iter()
            .zip(gradient)
            .map(|(h, g)| h - self.eta * scale * g)
            .collect();
        next.h = project_ball(&moved, self.radius);
        next.t += 1;
        next
    }
}

/// OGD for an unknown horizon: epochs of length 1, 2, 4, ... each restart a
/// fixed-horizon run sized to the epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct DoublingOgd {
    inner: OgdState,
    epoch_len: u64,
    epoch_t: u64,
    total_clipped: u64,
}

impl DoublingOgd {
    pub fn new(n: usize, radius: f64, gradient_bound: f64) -> Result<Self> {
        Ok(Self {
            inner: OgdState::new(n, radius, gradient_bound, 1)?,
            epoch_len: 1,
            epoch_t: 0,
            total_clipped: 0,
        })
    }

    pub fn h(&self) -> &[f64] {
        self.inner.h()
    }

    pub fn eta(&self) -> f64 {
        self.inner.eta()
    }

    pub fn clipped(&self) -> u64 {
        self.total_clipped + self.inner.clipped()
    }

    pub fn step(&self, gradient: &[f64]) -> Self {
        let mut next = self.clone();
        next.inner = self.inner.step(gradient);
        next.epoch_t += 1;
        if next.epoch_t == next.epoch_len {
            next.total_clipped += next.inner.clipped();
            next.epoch_len *= 2;
            next.epoch_t = 0;
            next.inner = OgdState::new(
                self.inner.h.len(),
                self.inner.radius,
                self.inner.gradient_bound,
                next.epoch_len,
            )
            .expect("parameters already validated");
        }
        next
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn projection_examples() {
        assert_eq!(project_ball(&[0.0, 0.0], 3.0), vec![0.0, 0.0]);
        assert_eq!(project_ball(&[0.3, 0.4], 1.0), vec![0.3, 0.4]);
        let p = project_ball(&[3.0, 4.0], 1.0);
        assert!((p[0] - 0.6).abs() < 1e-15 && (p[1] - 0.8).abs() < 1e-15);
    }

    #[test]
    fn init_examples() {
        let s = OgdState::new(3, 1.0, 2.0, 100).unwrap();
        assert!((s.eta() - 0.1).abs() < 1e-15);
        assert_eq!(s.h(), &[0.0; 3]);
        let s = OgdState::new(1, 1.0, 1.0, 4).unwrap();
        assert!((s.eta() - 1.0).abs() < 1e-15);
        assert!(OgdState::new(1, 0.0, 1.0, 4).is_err());
        assert!(OgdState::new(1, 1.0, 1.0, 0).is_err());
    }

    #[test]
    fn step_examples() {
        // W=10, Z=2, T=10000 gives eta = 0.1
        let s = OgdState::new(2, 10.0, 2.0, 10_000).unwrap();
        assert!((s.eta() - 0.1).abs() < 1e-15);
        let next = s.step(&[1.0, 0.0]);
        assert!((next.h()[0] + 0.1).abs() < 1e-15 && next.h()[1] == 0.0);
        assert_eq!(next.t(), 1);
        assert_eq!(s.h(), &[0.0, 0.0], "old state untouched");
        assert_eq!(next.step(&[0.0, 0.0]).h(), next.h());

        let near_edge = OgdState::new(2, 1.0, 100.0, 1)
            .unwrap()
            .with_h(vec![0.9, 0.0])
            .unwrap();
        let pushed = near_edge.step(&[-50.0, 0.0]);
        assert!(norm2(pushed.h()) <= 1.0 + 1e-12);
    }

    #[test]
    fn clips_oversized_gradients() {
        // eta = 2 * 1000 / (1 * 100) = 20; the gradient 10 is rescaled to norm 1
        let s = OgdState::new(1, 1000.0, 1.0, 10_000).unwrap();
        let next = s.step(&[10.0]);
        assert_eq!(next.clipped(), 1);
        assert!((next.h()[0] + 20.0).abs() < 1e-12);
    }

    #[test]
    fn doubling_restarts() {
        let mut d = DoublingOgd::new(1, 1.0, 1.0).unwrap();
        let etas: Vec<f64> = (0..4)
            .map(|_| {
                let eta = d.eta();
                d = d.step(&[0.0]);
                eta
            })
            .collect();
        assert!((etas[0] - 2.0).abs() < 1e-12);
        assert!((etas[1] - 2.0 / 2f64.sqrt()).abs() < 1e-12);
        assert!((etas[3] - 1.0).abs() < 1e-12);
    }
}
