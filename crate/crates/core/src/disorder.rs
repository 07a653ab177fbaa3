//! Space-time perturbations of the nonlinearity coefficient,
//! `g(x, t) = G (1 + sigma(x, t))`.
//!
//! `sigma` is piecewise constant in time: the profile over the affected nodes
//! is regenerated every `refresh_interval` time units. Three generators are
//! available:
//!
//! * chaotic: iterates of the logistic map `c -> mu c (1 - c)`, one per node,
//!   mapped to `epsilon (2c - 1)`. The chain runs uninterrupted across
//!   segments.
//! * random: independent uniform draws on `[-epsilon, epsilon)` from a seeded
//!   ChaCha stream.
//! * quasiperiodic: `epsilon (cos(5x)/2 + cos(sqrt(5) x)/2)`, static in time.
//!
//! Generator values are always consumed in ascending node order, so a spec
//! and its seed fix the schedule bit for bit.

use std::fmt;
use std::ops::Range;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::Grid1D;

/// Relative slack used when snapping times onto segment boundaries.
const TIME_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PerturbationKind {
    None,
    Chaotic,
    Random,
    Quasiperiodic,
}

impl PerturbationKind {
    pub const ALL: [PerturbationKind; 4] = [
        PerturbationKind::None,
        PerturbationKind::Chaotic,
        PerturbationKind::Random,
        PerturbationKind::Quasiperiodic,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            PerturbationKind::None => "none",
            PerturbationKind::Chaotic => "chaotic",
            PerturbationKind::Random => "random",
            PerturbationKind::Quasiperiodic => "quasiperiodic",
        }
    }

    /// Whether the profile is regenerated on the refresh schedule.
    pub fn is_time_dependent(&self) -> bool {
        matches!(self, PerturbationKind::Chaotic | PerturbationKind::Random)
    }
}

impl fmt::Display for PerturbationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PerturbationKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(PerturbationKind::None),
            "chaotic" | "logistic" => Ok(PerturbationKind::Chaotic),
            "random" => Ok(PerturbationKind::Random),
            "quasiperiodic" | "nonperiodic" => Ok(PerturbationKind::Quasiperiodic),
            other => Err(format!(
                "unknown perturbation kind `{other}` (expected none, chaotic, random or quasiperiodic)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// Amplitude: `|sigma| <= epsilon`. For the quasiperiodic kind this is
    /// the cosine prefactor alpha.
    pub epsilon: f64,
    /// Time between profile refreshes (tau).
    pub refresh_interval: f64,
    pub logistic_mu: f64,
    pub seed: u64,
    /// Starting iterate of the logistic chain. Derived from `seed` when unset.
    pub initial_iterate: Option<f64>,
    /// Affected interval `[x_lo, x_hi]`; the whole grid when unset.
    pub region: Option<(f64, f64)>,
}

impl Default for PerturbationSpec {
    fn default() -> Self {
        Self {
            kind: PerturbationKind::None,
            epsilon: 0.0,
            refresh_interval: 2.0,
            logistic_mu: 4.0,
            seed: 1,
            initial_iterate: None,
            region: None,
        }
    }
}

impl PerturbationSpec {
    pub fn new(kind: PerturbationKind, epsilon: f64, seed: u64) -> Self {
        Self {
            kind,
            epsilon,
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::config(
                "perturbation.epsilon",
                "must be finite and non-negative",
            ));
        }
        if !(self.refresh_interval.is_finite() && self.refresh_interval > 0.0) {
            return Err(Error::config("perturbation.tau", "must be positive"));
        }
        if !(self.logistic_mu > 0.0 && self.logistic_mu <= 4.0) {
            return Err(Error::config("perturbation.mu", "must lie in (0, 4]"));
        }
        if let Some(c0) = self.initial_iterate {
            if !(c0 > 0.0 && c0 < 1.0) {
                return Err(Error::config("perturbation.c0", "must lie in (0, 1)"));
            }
        }
        if let Some((lo, hi)) = self.region {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(Error::config(
                    "perturbation.x_lo",
                    "region must satisfy x_lo <= x_hi",
                ));
            }
        }
        Ok(())
    }

    /// Node indices covered by the region.
    pub fn affected_nodes(&self, grid: &Grid1D) -> Result<Range<usize>> {
        let Some((lo, hi)) = self.region else {
            return Ok(0..grid.len());
        };
        let eps = 1e-9 * grid.dx();
        let first = ((lo - grid.x_min()) / grid.dx() - eps).ceil().max(0.0) as usize;
        let last = ((hi - grid.x_min()) / grid.dx() + eps).floor();
        if last < 0.0 || first >= grid.len() {
            return Err(Error::config(
                "perturbation.x_lo",
                "region does not overlap the grid",
            ));
        }
        let end = (last as usize + 1).min(grid.len());
        Ok(first..end.max(first))
    }

    fn starting_iterate(&self) -> f64 {
        self.initial_iterate
            .unwrap_or_else(|| unit_open_interval(splitmix64(self.seed)))
    }
}

/// One step of the logistic map, `mu c (1 - c)`.
pub fn logistic_next(c: f64, mu: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&c) {
        return Err(Error::contract(format!("logistic iterate {c} outside [0, 1]")));
    }
    if !(mu > 0.0 && mu <= 4.0) {
        return Err(Error::contract(format!("logistic parameter {mu} outside (0, 4]")));
    }
    Ok(mu * c * (1.0 - c))
}

/// Logistic orbit that survives collapse onto the absorbing point 0.
///
/// If the state reaches exactly 0 (e.g. after passing through 1/2 and 1 at
/// `mu = 4`), the next request reseeds from `(seed, segment)` and records the
/// segment in [`LogisticChain::reseeds`].
#[derive(Debug, Clone, PartialEq)]
pub struct LogisticChain {
    state: f64,
    mu: f64,
    seed: u64,
    reseeds: Vec<usize>,
}

impl LogisticChain {
    pub fn new(c0: f64, mu: f64, seed: u64) -> Result<Self> {
        if !(c0 > 0.0 && c0 < 1.0) {
            return Err(Error::contract(format!("chain start {c0} outside (0, 1)")));
        }
        logistic_next(c0, mu)?;
        Ok(Self {
            state: c0,
            mu,
            seed,
            reseeds: Vec::new(),
        })
    }

    pub fn state(&self) -> f64 {
        self.state
    }

    /// Segments at which the chain had to be restarted.
    pub fn reseeds(&self) -> &[usize] {
        &self.reseeds
    }

    fn next(&mut self, segment: usize) -> f64 {
        if self.state == 0.0 {
            log::warn!(
                "logistic chain collapsed to 0; reseeding for segment {segment} (seed {})",
                self.seed
            );
            self.state = reseed_iterate(self.seed, segment);
            self.reseeds.push(segment);
        }
        self.state = self.mu * self.state * (1.0 - self.state);
        self.state
    }
}

fn reseed_iterate(seed: u64, segment: usize) -> f64 {
    let mixed = splitmix64(seed) ^ (segment as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    unit_open_interval(splitmix64(mixed))
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Maps 53 random bits to `(k + 1/2) / 2^53`, which avoids 0, 1/4, 1/2, 3/4
/// and 1, the points where the `mu = 4` orbit is trivially periodic.
fn unit_open_interval(bits: u64) -> f64 {
    ((bits >> 11) as f64 + 0.5) / (1u64 << 53) as f64
}

/// Chaotic profile: one logistic iterate per affected node, mapped to
/// `epsilon (2c - 1)`. Nodes outside `affected` get 0 and consume nothing.
pub fn chaotic_profile(
    grid: &Grid1D,
    affected: Range<usize>,
    chain: &mut LogisticChain,
    segment: usize,
    epsilon: f64,
) -> Vec<f64> {
    let mut sigma = vec![0.0; grid.len()];
    for s in &mut sigma[affected] {
        let c = chain.next(segment);
        *s = epsilon * (2.0 * c - 1.0);
    }
    sigma
}

/// Uniform profile on `[-epsilon, epsilon)`, one draw per affected node.
pub fn random_profile(
    grid: &Grid1D,
    affected: Range<usize>,
    rng: &mut ChaCha8Rng,
    epsilon: f64,
) -> Vec<f64> {
    let mut sigma = vec![0.0; grid.len()];
    for s in &mut sigma[affected] {
        let u: f64 = rng.random();
        // + 0.0 folds -0.0 into 0.0 when epsilon is zero
        *s = epsilon * (2.0 * u - 1.0) + 0.0;
    }
    sigma
}

/// `alpha (cos(5x)/2 + cos(sqrt(5) x)/2)` on the affected nodes.
pub fn quasiperiodic_profile(grid: &Grid1D, affected: Range<usize>, alpha: f64) -> Vec<f64> {
    let k = 5f64.sqrt();
    let mut sigma = vec![0.0; grid.len()];
    for i in affected {
        let x = grid.x(i);
        sigma[i] = alpha * (0.5 * (5.0 * x).cos() + 0.5 * (k * x).cos());
    }
    sigma
}

/// `G (1 + sigma)`.
#[inline]
pub fn nonlinearity(g_background: f64, sigma: f64) -> f64 {
    g_background * (1.0 + sigma)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub t_start: f64,
    pub sigma: Vec<f64>,
}

/// Generator state after the last segment was produced.
#[derive(Debug, Clone)]
pub enum GeneratorState {
    Static,
    Logistic(LogisticChain),
    Random(Box<ChaCha8Rng>),
}

/// Realised `sigma(x, t)` over `[0, t_final]`.
#[derive(Debug, Clone)]
pub struct SigmaSchedule {
    spec: PerturbationSpec,
    grid: Grid1D,
    t_final: f64,
    segments: Vec<Segment>,
    generator: GeneratorState,
}

impl SigmaSchedule {
    /// Produces `ceil(t_final / tau)` segments for the time-dependent kinds,
    /// a single segment otherwise.
    pub fn build(spec: &PerturbationSpec, grid: &Grid1D, t_final: f64) -> Result<Self> {
        spec.validate()?;
        if !(t_final.is_finite() && t_final > 0.0) {
            return Err(Error::config("solver.t_final", "must be positive"));
        }
        let affected = spec.affected_nodes(grid)?;
        let tau = spec.refresh_interval;

        let (segments, generator) = match spec.kind {
            PerturbationKind::None => (
                vec![Segment {
                    t_start: 0.0,
                    sigma: vec![0.0; grid.len()],
                }],
                GeneratorState::Static,
            ),
            PerturbationKind::Quasiperiodic => (
                vec![Segment {
                    t_start: 0.0,
                    sigma: quasiperiodic_profile(grid, affected, spec.epsilon),
                }],
                GeneratorState::Static,
            ),
            PerturbationKind::Chaotic => {
                let mut chain =
                    LogisticChain::new(spec.starting_iterate(), spec.logistic_mu, spec.seed)?;
                let segments = (0..segment_count(t_final, tau))
                    .map(|k| Segment {
                        t_start: k as f64 * tau,
                        sigma: chaotic_profile(grid, affected.clone(), &mut chain, k, spec.epsilon),
                    })
                    .collect();
                (segments, GeneratorState::Logistic(chain))
            }
            PerturbationKind::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
                let segments = (0..segment_count(t_final, tau))
                    .map(|k| Segment {
                        t_start: k as f64 * tau,
                        sigma: random_profile(grid, affected.clone(), &mut rng, spec.epsilon),
                    })
                    .collect();
                (segments, GeneratorState::Random(Box::new(rng)))
            }
        };

        Ok(Self {
            spec: spec.clone(),
            grid: *grid,
            t_final,
            segments,
            generator,
        })
    }

    pub fn spec(&self) -> &PerturbationSpec {
        &self.spec
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn generator(&self) -> &GeneratorState {
        &self.generator
    }

    /// Segments at which a collapsed logistic chain was restarted.
    pub fn reseeds(&self) -> &[usize] {
        match &self.generator {
            GeneratorState::Logistic(chain) => chain.reseeds(),
            _ => &[],
        }
    }

    /// Index of the segment active at time `t` (right-continuous).
    pub fn segment_index(&self, t: f64) -> Result<usize> {
        if !(t >= 0.0 && t <= self.t_final * (1.0 + TIME_SNAP)) {
            return Err(Error::contract(format!(
                "t = {t} outside schedule range [0, {}]",
                self.t_final
            )));
        }
        if self.segments.len() == 1 {
            return Ok(0);
        }
        let k = (t / self.spec.refresh_interval + TIME_SNAP).floor() as usize;
        Ok(k.min(self.segments.len() - 1))
    }

    pub fn profile_at(&self, t: f64) -> Result<&[f64]> {
        Ok(&self.segments[self.segment_index(t)?].sigma)
    }

    pub fn sigma_at(&self, node: usize, t: f64) -> Result<f64> {
        if node >= self.grid.len() {
            return Err(Error::contract(format!(
                "node {node} outside grid of {} nodes",
                self.grid.len()
            )));
        }
        Ok(self.profile_at(t)?[node])
    }
}

fn segment_count(t_final: f64, tau: f64) -> usize {
    ((t_final / tau) * (1.0 - TIME_SNAP)).ceil().max(1.0) as usize
}
