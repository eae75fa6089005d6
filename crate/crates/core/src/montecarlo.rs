//! Monte Carlo estimates by rejection sampling of simple random walk.
//!
//! Each attempt starts at a uniformly chosen start point and walks until it
//! leaves the interior. Attempts that do not end at an accepted exit are
//! rejected; accepted paths are loop-erased and tested for the edge `{0, 1}`.
//! Every trajectory is determined by `(seed, chunk index)`, so results do not
//! depend on how chunks are scheduled.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{LerwError, Result};
use crate::identity::Variant;
use crate::lattice::{build_domain, LatticeDomain, LatticePoint};
use crate::walks::{loop_erase_points, uses_marked_edge, WalkPath};

pub const DEFAULT_CHUNK: u64 = 10_000;
pub const MAX_WALK_STEPS: u64 = 1_000_000_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n: u32,
    pub samples: u64,
    pub seed: u64,
    pub variant: Variant,
    /// Attempts per independently seeded chunk.
    #[serde(default = "default_chunk")]
    pub chunk: u64,
}

fn default_chunk() -> u64 {
    DEFAULT_CHUNK
}

impl McConfig {
    pub fn new(n: u32, samples: u64, seed: u64) -> Self {
        McConfig {
            n,
            samples,
            seed,
            variant: Variant::Theorem31,
            chunk: DEFAULT_CHUNK,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct McEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub accepted: u64,
    pub attempted: u64,
    pub edge_hits: u64,
    /// Number of equally likely start points; converts frequencies to masses.
    pub scale: f64,
}

impl McEstimate {
    fn from_counts(scale: f64, attempted: u64, accepted: u64, edge_hits: u64) -> Self {
        let (mean, std_error) = binomial(scale, edge_hits, attempted);
        McEstimate {
            mean,
            std_error,
            accepted,
            attempted,
            edge_hits,
            scale,
        }
    }

    /// Estimate of the total path mass (`f(n)` for crossings).
    pub fn path_mass(&self) -> (f64, f64) {
        binomial(self.scale, self.accepted, self.attempted)
    }

    /// Normal-approximation interval `mean ± z · std_error`.
    pub fn interval(&self, z: f64) -> (f64, f64) {
        (
            self.mean - z * self.std_error,
            self.mean + z * self.std_error,
        )
    }
}

fn binomial(scale: f64, hits: u64, attempted: u64) -> (f64, f64) {
    let p = hits as f64 / attempted as f64;
    (scale * p, scale * (p * (1.0 - p) / attempted as f64).sqrt())
}

/// Uniform steps drawn two bits at a time.
struct Steps<'r, R: RngCore> {
    rng: &'r mut R,
    bits: u64,
    left: u32,
}

impl<'r, R: RngCore> Steps<'r, R> {
    fn new(rng: &'r mut R) -> Self {
        Steps {
            rng,
            bits: 0,
            left: 0,
        }
    }

    #[inline]
    fn next(&mut self, p: LatticePoint) -> LatticePoint {
        if self.left == 0 {
            self.bits = self.rng.next_u64();
            self.left = 32;
        }
        let dir = self.bits & 3;
        self.bits >>= 2;
        self.left -= 1;
        match dir {
            0 => LatticePoint::new(p.x + 1, p.y),
            1 => LatticePoint::new(p.x, p.y + 1),
            2 => LatticePoint::new(p.x - 1, p.y),
            _ => LatticePoint::new(p.x, p.y - 1),
        }
    }
}

/// Walks from `start` until the first non-interior point and leaves the
/// trajectory in `path`.
fn run_walk<R: RngCore>(
    d: &LatticeDomain,
    start: LatticePoint,
    rng: &mut R,
    path: &mut Vec<LatticePoint>,
) -> Result<()> {
    path.clear();
    path.push(start);
    let mut steps = Steps::new(rng);
    let mut cur = start;
    for _ in 0..MAX_WALK_STEPS {
        cur = steps.next(cur);
        path.push(cur);
        if !d.contains(cur) {
            return Ok(());
        }
    }
    Err(LerwError::numerical(format!(
        "walk from {start} exceeded {MAX_WALK_STEPS} steps"
    )))
}

/// One attempt: a uniform left-boundary start, SRW to the first exit, kept
/// only if it exits through the right boundary.
pub fn sample_crossing<R: RngCore>(d: &LatticeDomain, rng: &mut R) -> Result<Option<WalkPath>> {
    let left = d.left_boundary();
    let start = left[rng.random_range(0..left.len())];
    let mut path = Vec::new();
    run_walk(d, start, rng, &mut path)?;
    let end = *path.last().expect("nonempty walk");
    Ok((path.len() > 2 && d.is_right(end)).then(|| WalkPath::from_points_unchecked(path)))
}

#[derive(Default, Clone, Copy)]
struct Tally {
    attempted: u64,
    accepted: u64,
    edge_hits: u64,
}

impl Tally {
    fn merge(self, o: Tally) -> Tally {
        Tally {
            attempted: self.attempted + o.attempted,
            accepted: self.accepted + o.accepted,
            edge_hits: self.edge_hits + o.edge_hits,
        }
    }
}

fn chunk_rng(seed: u64, chunk: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(chunk);
    rng
}

fn run_chunk(
    d: &LatticeDomain,
    starts: &[LatticePoint],
    accept: &(dyn Fn(LatticePoint) -> bool + Sync),
    seed: u64,
    chunk: u64,
    attempts: u64,
) -> Result<Tally> {
    let mut rng = chunk_rng(seed, chunk);
    let mut path = Vec::new();
    let mut t = Tally::default();
    for _ in 0..attempts {
        let start = starts[rng.random_range(0..starts.len())];
        run_walk(d, start, &mut rng, &mut path)?;
        t.attempted += 1;
        let end = *path.last().expect("nonempty walk");
        // A first step straight back out of the domain is not a path in K_n.
        if path.len() <= 2 || !accept(end) {
            continue;
        }
        t.accepted += 1;
        if uses_marked_edge(&loop_erase_points(&path)) {
            t.edge_hits += 1;
        }
    }
    Ok(t)
}

/// `Σ p̂(η)` over loop-erased paths through `{0, 1}`, estimated from
/// `cfg.samples` attempts.
pub fn estimate_edge_probability(cfg: &McConfig) -> Result<McEstimate> {
    if cfg.samples == 0 || cfg.chunk == 0 {
        return Err(LerwError::precondition(
            "samples and chunk size must be positive",
        ));
    }
    let d = build_domain(cfg.n)?;
    let (starts, accept): (Vec<LatticePoint>, Box<dyn Fn(LatticePoint) -> bool + Sync>) =
        match cfg.variant {
            Variant::Theorem31 => {
                let dd = d.clone();
                (
                    d.left_boundary().to_vec(),
                    Box::new(move |q| dd.is_right(q)),
                )
            }
            Variant::Theorem51 { zeta1, zeta2 } => {
                if !d.is_boundary(zeta1) || !d.is_boundary(zeta2) {
                    return Err(LerwError::precondition(format!(
                        "{zeta1} and {zeta2} must both lie on the boundary of A_{}",
                        cfg.n
                    )));
                }
                (vec![zeta1], Box::new(move |q| q == zeta2))
            }
        };
    let chunks = cfg.samples.div_ceil(cfg.chunk);
    let tallies: Vec<Tally> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let attempts = cfg.chunk.min(cfg.samples - c * cfg.chunk);
            run_chunk(&d, &starts, accept.as_ref(), cfg.seed, c, attempts)
        })
        .collect::<Result<_>>()?;
    let t = tallies.into_iter().fold(Tally::default(), Tally::merge);
    Ok(McEstimate::from_counts(
        starts.len() as f64,
        t.attempted,
        t.accepted,
        t.edge_hits,
    ))
}

/// Where origin excursions are cut off.
#[derive(Copy, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Cutoff {
    /// Stop once `|S| > r`.
    Radius(f64),
    /// Stop on leaving `A_n`; the estimate is then the finite-domain value
    /// `s_{A_n}` with `Q_0(A_n) = 1 / (1 - s_{A_n})`.
    Square(u32),
}

impl Default for Cutoff {
    fn default() -> Self {
        Cutoff::Radius(6f64.exp())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: u64,
    /// Excursions stopped by the cutoff before returning.
    pub truncated: u64,
}

impl SEstimate {
    pub fn truncated_fraction(&self) -> f64 {
        self.truncated as f64 / self.samples as f64
    }
}

/// `E[(-1)^J]` over SRW excursions from the origin back to it, each
/// contributing zero if cut off first.
pub fn estimate_s_constant(samples: u64, seed: u64, cutoff: Cutoff) -> Result<SEstimate> {
    if samples == 0 {
        return Err(LerwError::precondition("samples must be positive"));
    }
    let inside: Box<dyn Fn(LatticePoint) -> bool + Sync> = match cutoff {
        Cutoff::Radius(r) => {
            if !(r > 0.0) {
                return Err(LerwError::precondition(format!(
                    "cutoff radius {r} must be positive"
                )));
            }
            let r2 = r * r;
            Box::new(move |p| (p.x as f64).powi(2) + (p.y as f64).powi(2) <= r2)
        }
        Cutoff::Square(n) => {
            let d = build_domain(n)?;
            Box::new(move |p| d.contains(p))
        }
    };
    let chunks = samples.div_ceil(DEFAULT_CHUNK);
    let parts: Vec<(i64, u64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = chunk_rng(seed, c);
            let mut steps = Steps::new(&mut rng);
            let (mut sum, mut cut) = (0i64, 0u64);
            for _ in 0..DEFAULT_CHUNK.min(samples - c * DEFAULT_CHUNK) {
                let mut cur = LatticePoint::ORIGIN;
                let mut odd = false;
                let mut n = 0u64;
                loop {
                    let next = steps.next(cur);
                    odd ^= crate::lattice::crosses_ray(cur, next);
                    cur = next;
                    n += 1;
                    if cur == LatticePoint::ORIGIN {
                        sum += if odd { -1 } else { 1 };
                        break;
                    }
                    if !inside(cur) {
                        cut += 1;
                        break;
                    }
                    if n >= MAX_WALK_STEPS {
                        return Err(LerwError::numerical(format!(
                            "excursion exceeded {MAX_WALK_STEPS} steps"
                        )));
                    }
                }
            }
            Ok((sum, cut))
        })
        .collect::<Result<_>>()?;
    let (sum, truncated) = parts
        .iter()
        .fold((0i64, 0u64), |a, b| (a.0 + b.0, a.1 + b.1));
    let returned = samples - truncated;
    // Each sample is -1, 0 or +1.
    let mean = sum as f64 / samples as f64;
    let second = returned as f64 / samples as f64;
    let std_error = ((second - mean * mean).max(0.0) / samples as f64).sqrt();
    Ok(SEstimate {
        mean,
        std_error,
        samples,
        truncated,
    })
}
