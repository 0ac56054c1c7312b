//! Continuous Harris hawks optimization: population, escaping energy,
//! exploration and the four besiege strategies.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::rng_at;

/// Population size, iteration budget, search box and seed.
#[derive(Debug, Clone, PartialEq)]
pub struct HhoParams {
    pub n_hawks: usize,
    pub max_iters: usize,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub dimension: usize,
    pub seed: u64,
}

impl HhoParams {
    pub fn new(n_hawks: usize, max_iters: usize, lower_bound: f64, upper_bound: f64, dimension: usize, seed: u64) -> Result<Self> {
        let p = Self {
            n_hawks,
            max_iters,
            lower_bound,
            upper_bound,
            dimension,
            seed,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_hawks < 2 {
            return Err(Error::invalid("hho needs at least 2 hawks"));
        }
        if self.max_iters < 1 {
            return Err(Error::invalid("hho needs at least 1 iteration"));
        }
        if self.dimension < 1 {
            return Err(Error::invalid("hho dimension must be >= 1"));
        }
        if !(self.upper_bound > self.lower_bound) {
            return Err(Error::invalid(format!(
                "hho bounds [{}, {}] require ub > lb",
                self.lower_bound, self.upper_bound
            )));
        }
        Ok(())
    }

    pub fn clamp(&self, position: &mut [f64]) {
        for v in position {
            *v = v.clamp(self.lower_bound, self.upper_bound);
        }
    }

    /// Defaults for a `dimension`-gene problem: 10 hawks, 100 iterations, box [-1, 1].
    pub fn defaults(dimension: usize) -> Self {
        Self {
            n_hawks: 10,
            max_iters: 100,
            lower_bound: -1.0,
            upper_bound: 1.0,
            dimension,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Hawk {
    pub position: Vec<f64>,
    pub fitness: f64,
}

impl Hawk {
    pub fn new(position: Vec<f64>) -> Self {
        Self {
            position,
            fitness: f64::INFINITY,
        }
    }
}

/// Uniform positions in the search box. A box narrower than machine
/// precision collapses to `lower_bound`.
pub fn init_population(p: &HhoParams) -> Vec<Hawk> {
    let mut rng = rng_at(p.seed, &[0x1417]);
    let width = p.upper_bound - p.lower_bound;
    let scale = 1f64.max(p.lower_bound.abs()).max(p.upper_bound.abs());
    let collapsed = width <= f64::EPSILON * scale;
    (0..p.n_hawks)
        .map(|_| {
            let position = (0..p.dimension)
                .map(|_| {
                    if collapsed {
                        p.lower_bound
                    } else {
                        (p.lower_bound + rng.random::<f64>() * width).min(p.upper_bound)
                    }
                })
                .collect();
            Hawk::new(position)
        })
        .collect()
}

/// Componentwise mean of all hawk positions.
pub fn mean_position(pop: &[Hawk]) -> Result<Vec<f64>> {
    let first = pop.first().ok_or_else(|| Error::invalid("empty population"))?;
    let mut mean = vec![0.0; first.position.len()];
    for hawk in pop {
        for (m, v) in mean.iter_mut().zip(&hawk.position) {
            *m += v;
        }
    }
    let n = pop.len() as f64;
    mean.iter_mut().for_each(|m| *m /= n);
    Ok(mean)
}

/// Escaping energy of the prey at one iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyState {
    pub e0: f64,
    pub e: f64,
    pub iteration: usize,
}

impl EnergyState {
    /// `E0 = 2r - 1`, `E = 2 E0 (1 - t/T)`.
    pub fn from_draw(r: f64, t: usize, max_iters: usize) -> Result<Self> {
        if t >= max_iters {
            return Err(Error::invalid(format!("iteration {t} outside [0, {max_iters})")));
        }
        let e0 = 2.0 * r - 1.0;
        let e = 2.0 * e0 * (1.0 - t as f64 / max_iters as f64);
        Ok(Self { e0, e, iteration: t })
    }

    pub fn is_exploration(&self) -> bool {
        self.e.abs() >= 1.0
    }
}

pub fn escaping_energy<R: Rng + ?Sized>(t: usize, max_iters: usize, rng: &mut R) -> Result<EnergyState> {
    EnergyState::from_draw(rng.random(), t, max_iters)
}

/// Random numbers consumed by one exploration move.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExplorationDraws {
    pub q: f64,
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub peer: usize,
}

impl ExplorationDraws {
    pub fn sample<R: Rng + ?Sized>(n_hawks: usize, rng: &mut R) -> Self {
        Self {
            q: rng.random(),
            r1: rng.random(),
            r2: rng.random(),
            r3: rng.random(),
            r4: rng.random(),
            peer: rng.random_range(0..n_hawks),
        }
    }
}

/// Perch either relative to a random peer (`q >= 0.5`) or relative to the
/// prey and the flock mean (`q < 0.5`). Result is clamped to the box.
pub fn exploration_update(
    z: &[f64],
    peer: &[f64],
    rabbit: &[f64],
    mean: &[f64],
    draws: &ExplorationDraws,
    p: &HhoParams,
) -> Vec<f64> {
    let mut next: Vec<f64> = if draws.q >= 0.5 {
        peer.iter()
            .zip(z)
            .map(|(&zk, &zi)| zk - draws.r1 * (zk - 2.0 * draws.r2 * zi).abs())
            .collect()
    } else {
        let shift = draws.r3 * (p.lower_bound + draws.r4 * (p.upper_bound - p.lower_bound));
        rabbit.iter().zip(mean).map(|(&zr, &zm)| (zr - zm) - shift).collect()
    };
    p.clamp(&mut next);
    next
}

pub fn exploration_step<R: Rng + ?Sized>(
    hawk: &Hawk,
    pop: &[Hawk],
    best: &Hawk,
    mean: &[f64],
    p: &HhoParams,
    rng: &mut R,
) -> Vec<f64> {
    let draws = ExplorationDraws::sample(pop.len(), rng);
    exploration_update(&hawk.position, &pop[draws.peer].position, &best.position, mean, &draws, p)
}

/// The four exploitation strategies, selected by `|E|` and the escape
/// chance `r`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Besiege {
    Soft,
    Hard,
    SoftWithDives,
    HardWithDives,
}

impl Besiege {
    pub fn select(e: f64, r: f64) -> Self {
        match (r >= 0.5, e.abs() >= 0.5) {
            (true, true) => Besiege::Soft,
            (true, false) => Besiege::Hard,
            (false, true) => Besiege::SoftWithDives,
            (false, false) => Besiege::HardWithDives,
        }
    }
}

/// `ΔZ - E |J Z_rabbit - Z|` with `ΔZ = Z_rabbit - Z`.
pub fn soft_besiege(z: &[f64], rabbit: &[f64], e: f64, jump: f64) -> Vec<f64> {
    z.iter()
        .zip(rabbit)
        .map(|(&zi, &zr)| (zr - zi) - e * (jump * zr - zi).abs())
        .collect()
}

/// `Z_rabbit - E |ΔZ|`.
pub fn hard_besiege(z: &[f64], rabbit: &[f64], e: f64) -> Vec<f64> {
    z.iter().zip(rabbit).map(|(&zi, &zr)| zr - e * (zr - zi).abs()).collect()
}

/// Dive target `Z_rabbit - E |J Z_rabbit - anchor|`; the anchor is the hawk
/// itself for soft dives and the flock mean for hard dives.
pub fn dive_target(anchor: &[f64], rabbit: &[f64], e: f64, jump: f64) -> Vec<f64> {
    anchor
        .iter()
        .zip(rabbit)
        .map(|(&a, &zr)| zr - e * (jump * zr - a).abs())
        .collect()
}

pub const LEVY_BETA: f64 = 1.5;

/// Mantegna scale `σ_u` for a Lévy-stable step with exponent `beta`.
pub fn mantegna_sigma(beta: f64) -> f64 {
    let num = libm::tgamma(1.0 + beta) * (std::f64::consts::PI * beta / 2.0).sin();
    let den = libm::tgamma((1.0 + beta) / 2.0) * beta * 2f64.powf((beta - 1.0) / 2.0);
    (num / den).powf(1.0 / beta)
}

/// `0.01 · u σ / |v|^{1/β}` per dimension, `u, v ~ N(0,1)`.
pub fn levy_flight<R: Rng + ?Sized>(dim: usize, beta: f64, rng: &mut R) -> Vec<f64> {
    let sigma = mantegna_sigma(beta);
    (0..dim)
        .map(|_| {
            let u: f64 = rng.sample(StandardNormal);
            let v: f64 = rng.sample(StandardNormal);
            0.01 * u * sigma / v.abs().powf(1.0 / beta)
        })
        .collect()
}

/// A candidate scored by the caller-supplied objective, with whatever
/// side data the objective produced (e.g. a binary mask).
#[derive(Debug, Clone, PartialEq)]
pub struct Scored<T> {
    pub position: Vec<f64>,
    pub fitness: f64,
    pub payload: T,
}

/// Outcome of one exploitation move.
#[derive(Debug, Clone, PartialEq)]
pub enum Move<T> {
    /// Besiege moves are always taken; the caller scores them.
    Unscored(Vec<f64>),
    /// A dive candidate beat the current fitness.
    Accepted(Scored<T>),
    /// Neither dive candidate improved; the hawk stays put.
    Stay,
}

/// One exploitation move for `hawk`. Dive candidates are scored with
/// `objective` and kept only if they improve on `hawk.fitness`.
pub fn exploitation_step<R, T, F>(
    hawk: &Hawk,
    rabbit: &Hawk,
    mean: &[f64],
    energy: &EnergyState,
    p: &HhoParams,
    rng: &mut R,
    mut objective: F,
) -> Move<T>
where
    R: Rng + ?Sized,
    F: FnMut(&[f64], &mut R) -> (f64, T),
{
    let r: f64 = rng.random();
    let jump = 2.0 * (1.0 - rng.random::<f64>());
    let e = energy.e;
    let clamp = |mut v: Vec<f64>| {
        p.clamp(&mut v);
        v
    };
    match Besiege::select(e, r) {
        Besiege::Soft => Move::Unscored(clamp(soft_besiege(&hawk.position, &rabbit.position, e, jump))),
        Besiege::Hard => Move::Unscored(clamp(hard_besiege(&hawk.position, &rabbit.position, e))),
        kind => {
            let anchor = if kind == Besiege::SoftWithDives { &hawk.position[..] } else { mean };
            let y = clamp(dive_target(anchor, &rabbit.position, e, jump));
            let (fy, ty) = objective(&y, rng);
            if fy < hawk.fitness {
                return Move::Accepted(Scored {
                    position: y,
                    fitness: fy,
                    payload: ty,
                });
            }
            let levy = levy_flight(y.len(), LEVY_BETA, rng);
            let z = clamp(
                y.iter()
                    .zip(&levy)
                    .map(|(&yi, &li)| yi + rng.random::<f64>() * li)
                    .collect(),
            );
            let (fz, tz) = objective(&z, rng);
            if fz < hawk.fitness {
                Move::Accepted(Scored {
                    position: z,
                    fitness: fz,
                    payload: tz,
                })
            } else {
                Move::Stay
            }
        }
    }
}
