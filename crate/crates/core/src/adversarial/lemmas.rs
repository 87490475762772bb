//! Exact check of the extreme-forecast bounds over binary-signal structures.
//!
//! Each of `n` experts gets one binary signal `s_i in {s_i^0, s_i^1}`. A
//! signal profile is identified with `B = {i : s_i = s_i^1}` (bit `i` of a
//! mask) and the joint law is given by masses `a0[B] = P(omega = 0, B)` and
//! `a1[B] = P(omega = 1, B)`. Signals here may be arbitrarily correlated.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest expert count the checker accepts (`2^(n+1)` masses).
pub const MAX_LEMMA_EXPERTS: usize = 4;

const MASS_TOL: f64 = 1e-12;

/// Joint law of the state and `n` binary signals.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryJointStructure {
    n: usize,
    a0: Vec<f64>,
    a1: Vec<f64>,
}

impl BinaryJointStructure {
    pub fn new(n: usize, a0: Vec<f64>, a1: Vec<f64>) -> Result<Self> {
        if n == 0 || n > MAX_LEMMA_EXPERTS {
            return Err(Error::Config(format!("need 1 <= n <= {MAX_LEMMA_EXPERTS}, got {n}")));
        }
        let size = 1usize << n;
        if a0.len() != size || a1.len() != size {
            return Err(Error::Dimension {
                expected: size,
                got: a0.len().min(a1.len()),
            });
        }
        if a0.iter().chain(&a1).any(|&a| !(a >= 0.0) || !a.is_finite()) {
            return Err(Error::InvalidStructure("masses must be finite and nonnegative".into()));
        }
        let total: f64 = a0.iter().chain(&a1).sum();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::InvalidStructure(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { n, a0, a1 })
    }

    /// Rescales nonnegative masses to total one.
    pub fn normalized(n: usize, mut a0: Vec<f64>, mut a1: Vec<f64>) -> Result<Self> {
        let total: f64 = a0.iter().chain(&a1).sum();
        if !(total > 0.0) {
            return Err(Error::InvalidStructure("all masses are zero".into()));
        }
        a0.iter_mut().chain(a1.iter_mut()).for_each(|a| *a /= total);
        Self::new(n, a0, a1)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn a0(&self) -> &[f64] {
        &self.a0
    }

    pub fn a1(&self) -> &[f64] {
        &self.a1
    }

    /// `(P(omega = 0, s_i = signal), P(omega = 1, s_i = signal))`.
    fn signal_mass(&self, expert: usize, signal: bool) -> (f64, f64) {
        let mut m0 = 0.0;
        let mut m1 = 0.0;
        for b in 0..self.a0.len() {
            if ((b >> expert) & 1 == 1) == signal {
                m0 += self.a0[b];
                m1 += self.a1[b];
            }
        }
        (m0, m1)
    }

    /// Expert `i`'s forecast after seeing `signal`; `None` if it never occurs.
    pub fn posterior(&self, expert: usize, signal: bool) -> Option<f64> {
        let (m0, m1) = self.signal_mass(expert, signal);
        let total = m0 + m1;
        (total > 0.0).then(|| m1 / total)
    }

    fn forecasts(&self) -> Vec<[Option<f64>; 2]> {
        (0..self.n)
            .map(|i| [self.posterior(i, false), self.posterior(i, true)])
            .collect()
    }

    /// Masks of profiles where some expert forecasts at most `alpha` (`zeta_0`)
    /// and where some expert forecasts at least `1 - alpha` (`zeta_1`).
    fn events(&self, alpha: f64) -> (Vec<bool>, Vec<bool>) {
        let f = self.forecasts();
        // posteriors built to sit exactly on the bound may be off by an ulp
        let alpha = alpha * (1.0 + 1e-12);
        let size = self.a0.len();
        let mut low = vec![false; size];
        let mut high = vec![false; size];
        for b in 0..size {
            for (i, fi) in f.iter().enumerate() {
                if let Some(x) = fi[(b >> i) & 1] {
                    low[b] |= x <= alpha;
                    high[b] |= x >= 1.0 - alpha;
                }
            }
        }
        (low, high)
    }

    fn event_masses(&self, event: &[bool]) -> (f64, f64) {
        event
            .iter()
            .enumerate()
            .filter(|(_, &e)| e)
            .fold((0.0, 0.0), |(m0, m1), (b, _)| (m0 + self.a0[b], m1 + self.a1[b]))
    }

    /// `P(omega = 1 | zeta_0(alpha))`, or `None` when the event is empty.
    pub fn prob_one_given_low(&self, alpha: f64) -> Option<f64> {
        let (m0, m1) = self.event_masses(&self.events(alpha).0);
        (m0 + m1 > 0.0).then(|| m1 / (m0 + m1))
    }

    /// `P(omega = 0 | zeta_1(alpha))`, or `None` when the event is empty.
    pub fn prob_zero_given_high(&self, alpha: f64) -> Option<f64> {
        let (m0, m1) = self.event_masses(&self.events(alpha).1);
        (m0 + m1 > 0.0).then(|| m0 / (m0 + m1))
    }

    /// `P(zeta_0(alpha) and zeta_1(alpha))`.
    pub fn prob_both(&self, alpha: f64) -> f64 {
        let (low, high) = self.events(alpha);
        let both: Vec<bool> = low.iter().zip(&high).map(|(a, b)| *a && *b).collect();
        let (m0, m1) = self.event_masses(&both);
        m0 + m1
    }
}

/// Masses `a0[{}] = 1 - alpha` and `a1[[n] \ {i}] = alpha` for every `i`
/// (for `n = 1`, `a1[{}] = alpha`), normalized. Each `s_i^0` has posterior
/// exactly `alpha` and `P(omega = 1 | zeta_0) = n alpha / ((1 - alpha) + n alpha)`.
pub fn near_extremal_structure(n: usize, alpha: f64) -> Result<BinaryJointStructure> {
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Config(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    if n == 0 || n > MAX_LEMMA_EXPERTS {
        return Err(Error::Config(format!("need 1 <= n <= {MAX_LEMMA_EXPERTS}, got {n}")));
    }
    let size = 1usize << n;
    let full = size - 1;
    let mut a0 = vec![0.0; size];
    let mut a1 = vec![0.0; size];
    a0[0] = 1.0 - alpha;
    for i in 0..n {
        a1[full & !(1 << i)] += alpha;
    }
    BinaryJointStructure::normalized(n, a0, a1)
}

/// Which extreme signals a sampled structure is forced to have.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Shape {
    Low,
    High,
    Both,
}

/// Scales `a1` on profiles where expert `i` saw `s_i^0` so that its
/// posterior drops to `target`. Only lowers other experts' `s^0` posteriors.
fn push_low(a0: &[f64], a1: &mut [f64], i: usize, target: f64) {
    let (mut m0, mut m1) = (0.0, 0.0);
    for b in (0..a0.len()).filter(|b| (b >> i) & 1 == 0) {
        m0 += a0[b];
        m1 += a1[b];
    }
    if m1 + m0 == 0.0 || m1 / (m0 + m1) <= target {
        return;
    }
    // k m1 / (m0 + k m1) = target
    let k = if m0 == 0.0 { 0.0 } else { target * m0 / ((1.0 - target) * m1) };
    for b in (0..a0.len()).filter(|b| (b >> i) & 1 == 0) {
        a1[b] *= k;
    }
}

/// Mirror of [`push_low`]: scales `a0` where expert `i` saw `s_i^1`.
fn push_high(a0: &mut [f64], a1: &[f64], i: usize, target: f64) {
    let (mut m0, mut m1) = (0.0, 0.0);
    for b in (0..a0.len()).filter(|b| (b >> i) & 1 == 1) {
        m0 += a0[b];
        m1 += a1[b];
    }
    if m1 + m0 == 0.0 || m0 / (m0 + m1) <= target {
        return;
    }
    let k = if m1 == 0.0 { 0.0 } else { target * m1 / ((1.0 - target) * m0) };
    for b in (0..a0.len()).filter(|b| (b >> i) & 1 == 1) {
        a0[b] *= k;
    }
}

/// Draws a structure whose extreme signals satisfy the posterior constraint.
///
/// Masses start as sparse exponentials. For [`Shape::Low`] every `s_i^0` is
/// pushed to posterior at most `alpha` (targets are drawn at or below the
/// bound, sometimes exactly on it); `High` mirrors this; `Both` alternates
/// the two passes until both hold.
fn sample_constrained<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    shape: Shape,
    rng: &mut R,
) -> Option<BinaryJointStructure> {
    let size = 1usize << n;
    let draw = |rng: &mut R| -> f64 {
        if rng.random::<f64>() < 0.3 {
            0.0
        } else {
            -(1.0 - rng.random::<f64>()).ln()
        }
    };
    let mut a0: Vec<f64> = (0..size).map(|_| draw(rng)).collect();
    let mut a1: Vec<f64> = (0..size).map(|_| draw(rng)).collect();
    // just inside the bound, so rounding cannot push a posterior past it
    let edge = alpha * (1.0 - 1e-12);
    let target = |rng: &mut R| -> f64 {
        if rng.random::<f64>() < 0.5 {
            edge
        } else {
            alpha * rng.random::<f64>()
        }
    };
    let passes = if shape == Shape::Both { 60 } else { 1 };
    for _ in 0..passes {
        for i in 0..n {
            if shape != Shape::High {
                let t = target(rng);
                push_low(&a0, &mut a1, i, t);
            }
            if shape != Shape::Low {
                let t = target(rng);
                push_high(&mut a0, &a1, i, t);
            }
        }
    }
    let s = BinaryJointStructure::normalized(n, a0, a1).ok()?;
    // `Both` may not settle; keep only instances whose constraints hold.
    let ok = (0..n).all(|i| {
        let low_ok = shape == Shape::High || s.posterior(i, false).map_or(true, |x| x <= alpha);
        let high_ok = shape == Shape::Low || s.posterior(i, true).map_or(true, |x| x >= 1.0 - alpha);
        low_ok && high_ok
    });
    ok.then_some(s)
}

/// Outcome of [`extreme_lemma_oracle`].
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LemmaCheck {
    pub n: usize,
    pub alpha: f64,
    pub trials: u64,
    /// Sampled structures where the respective event was nonempty.
    pub low_events: u64,
    pub high_events: u64,
    pub low_violations: u64,
    pub high_violations: u64,
    pub both_violations: u64,
    /// Largest `P(omega = 1 | zeta_0) / (n alpha)` seen.
    pub worst_low_ratio: f64,
    pub worst_high_ratio: f64,
    /// Largest `P(zeta_0 and zeta_1) / (2 n alpha)` seen.
    pub worst_both_ratio: f64,
}

impl LemmaCheck {
    pub fn violations(&self) -> u64 {
        self.low_violations + self.high_violations + self.both_violations
    }

    fn merge(mut self, other: Self) -> Self {
        self.trials += other.trials;
        self.low_events += other.low_events;
        self.high_events += other.high_events;
        self.low_violations += other.low_violations;
        self.high_violations += other.high_violations;
        self.both_violations += other.both_violations;
        self.worst_low_ratio = self.worst_low_ratio.max(other.worst_low_ratio);
        self.worst_high_ratio = self.worst_high_ratio.max(other.worst_high_ratio);
        self.worst_both_ratio = self.worst_both_ratio.max(other.worst_both_ratio);
        self
    }

    fn record(n: usize, alpha: f64, s: &BinaryJointStructure) -> Self {
        // relative slack for the rounding in posteriors that sit on the bound
        let slack = 1e-9;
        let bound = n as f64 * alpha;
        let mut c = LemmaCheck {
            n,
            alpha,
            trials: 1,
            ..Default::default()
        };
        if let Some(p) = s.prob_one_given_low(alpha) {
            c.low_events = 1;
            c.worst_low_ratio = p / bound;
            c.low_violations = u64::from(p > bound * (1.0 + slack));
        }
        if let Some(p) = s.prob_zero_given_high(alpha) {
            c.high_events = 1;
            c.worst_high_ratio = p / bound;
            c.high_violations = u64::from(p > bound * (1.0 + slack));
        }
        let both = s.prob_both(alpha);
        c.worst_both_ratio = both / (2.0 * bound);
        c.both_violations = u64::from(both > 2.0 * bound * (1.0 + slack));
        c
    }
}

/// Samples `trials` constrained binary structures and counts violations of
///
/// * `P(omega = 1 | some forecast <= alpha) <= n alpha`,
/// * `P(omega = 0 | some forecast >= 1 - alpha) <= n alpha`,
/// * `P(forecasts on both sides) <= 2 n alpha`.
///
/// Events are evaluated from the experts' actual posteriors, so every bound
/// is checked on every instance. Trials cycle through structures with low,
/// high and two-sided extreme signals and run in parallel; the result only
/// depends on the seed drawn from `rng`.
pub fn extreme_lemma_oracle<R: Rng + ?Sized>(
    n: usize,
    alpha: f64,
    trials: u64,
    rng: &mut R,
) -> Result<LemmaCheck> {
    if n == 0 || n > MAX_LEMMA_EXPERTS {
        return Err(Error::Config(format!("need 1 <= n <= {MAX_LEMMA_EXPERTS}, got {n}")));
    }
    if !(alpha > 0.0 && alpha < 0.5) {
        return Err(Error::Config(format!("alpha must lie in (0, 1/2), got {alpha}")));
    }
    if trials == 0 {
        return Err(Error::Config("need at least one trial".into()));
    }
    let base: u64 = rng.random();
    let empty = LemmaCheck {
        n,
        alpha,
        ..Default::default()
    };
    let check = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut local = ChaCha8Rng::seed_from_u64(base);
            local.set_stream(t);
            let shape = [Shape::Low, Shape::High, Shape::Both][(t % 3) as usize];
            let s = loop {
                if let Some(s) = sample_constrained(n, alpha, shape, &mut local) {
                    break s;
                }
            };
            LemmaCheck::record(n, alpha, &s)
        })
        .reduce(|| empty, LemmaCheck::merge);
    Ok(check)
}
