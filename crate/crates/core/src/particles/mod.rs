//! Particle systems that sample isosurfaces and ridge surfaces of a scalar
//! field. Particles live on mesh positions, find neighbours through a k-d
//! tree rebuilt every iteration, and move by the feature step plus the
//! tangential part of an inter-particle repulsion.

pub mod eigen;
pub mod feature;
pub mod kdtree;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::linalg::{self, Vec3};
use crate::position::{pos_from_world, pos_sub, MeshPos, MoveOptions, Scheme};
use crate::scalar::Real;

pub use eigen::{eig_sym3, Eigen3};
pub use feature::{Feature, FeatureKind, Local};
pub use kdtree::KdTree;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Particle<T> {
    pub pos: MeshPos<T>,
    pub energy: T,
    pub strength: T,
    pub id: u64,
    /// Iterations survived.
    pub age: usize,
    /// Per-particle multiplier on the repulsion gain, shrunk when a move
    /// would raise the particle's energy.
    pub gain_scale: T,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PsysConfig<T> {
    pub radius: T,
    pub eps: T,
    /// Repulsion gain γ.
    pub gain: T,
    pub max_iters: usize,
    /// A converged particle whose energy is at most this spawns an offspring.
    pub spawn_energy: T,
    /// A particle whose energy exceeds this dies.
    pub kill_energy: T,
    pub max_population: usize,
    /// Iterations before a weak ridge particle may die.
    pub grace: usize,
    /// Feature-only steps applied after the main loop.
    pub polish_iters: usize,
    pub scheme: Scheme<T>,
    pub opts: MoveOptions<T>,
    pub rng_seed: u64,
    pub threads: usize,
}

impl<T: Real> Default for PsysConfig<T> {
    fn default() -> Self {
        Self {
            radius: T::lit(0.5),
            eps: T::lit(0.005),
            gain: T::lit(0.5),
            max_iters: 500,
            spawn_energy: T::zero(),
            kill_energy: T::infinity(),
            max_population: 20_000,
            grace: 10,
            polish_iters: 3,
            scheme: Scheme::GuidedChecked(T::lit(1e-5)),
            opts: MoveOptions::default(),
            rng_seed: 0,
            threads: 1,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PsysStats<T> {
    pub iterations: usize,
    pub births: usize,
    pub deaths: usize,
    pub max_motion: T,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PsysResult<T> {
    pub particles: Vec<Particle<T>>,
    pub stats: PsysStats<T>,
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum PsysError {
    #[error("every particle died")]
    AllDead,
    #[error("invalid particle system configuration: {0}")]
    BadConfig(String),
}

/// `φ(s) = (1 − s)⁴` on `[0, 1)`.
fn phi<T: Real>(s: T) -> T {
    if s >= T::one() {
        T::zero()
    } else {
        (T::one() - s).powi(4)
    }
}

fn dphi<T: Real>(s: T) -> T {
    if s >= T::one() {
        T::zero()
    } else {
        -T::lit(4.0) * (T::one() - s).powi(3)
    }
}

/// Some unit vector orthogonal to `n` (or an axis when `n` is absent).
fn tangent<T: Real>(n: Option<Vec3<T>>) -> Vec3<T> {
    let Some(n) = n else { return [T::one(), T::zero(), T::zero()] };
    let mut a = 0;
    for k in 1..3 {
        if n[k].abs() < n[a].abs() {
            a = k;
        }
    }
    let mut e = [T::zero(); 3];
    e[a] = T::one();
    let t = linalg::axpy(e, -linalg::dot(n, e), n);
    linalg::scale(t, linalg::norm(t).recip())
}

fn mix(seed: u64, iter: usize, id: u64) -> u64 {
    let mut z = seed ^ (iter as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ id.wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Update<T> {
    pos: MeshPos<T>,
    energy: T,
    strength: T,
    motion: T,
    gain_scale: T,
    die: bool,
    offspring: Option<MeshPos<T>>,
}

pub struct ParticleSystem<'a, T> {
    feature: Feature<'a, T>,
    cfg: PsysConfig<T>,
    particles: Vec<Particle<T>>,
    tree: KdTree<T>,
    iteration: usize,
    next_id: u64,
    stats: PsysStats<T>,
    pool: Option<rayon::ThreadPool>,
}

impl<'a, T: Real> ParticleSystem<'a, T> {
    /// Seeds outside the mesh are dropped.
    pub fn new(mut feature: Feature<'a, T>, cfg: PsysConfig<T>, seeds: &[Vec3<T>]) -> Result<Self, PsysError> {
        if !(cfg.radius > T::zero() && cfg.eps > T::zero()) {
            return Err(PsysError::BadConfig("radius and eps must be positive".into()));
        }
        if let FeatureKind::RidgeSurface { strength_threshold, .. } = feature.kind {
            if !(strength_threshold > T::zero()) {
                return Err(PsysError::BadConfig("ridge strength threshold must be positive".into()));
            }
        }
        let half = cfg.radius * T::lit(0.5);
        feature.step_limit = feature.step_limit.min(half);
        let pool = if cfg.threads > 1 {
            Some(
                rayon::ThreadPoolBuilder::new()
                    .num_threads(cfg.threads)
                    .build()
                    .map_err(|e| PsysError::BadConfig(e.to_string()))?,
            )
        } else {
            None
        };
        let mesh = feature.field.mesh().as_ref();
        let particles: Vec<_> = seeds
            .iter()
            .map(|&x| pos_from_world(mesh, x))
            .filter(MeshPos::is_valid)
            .enumerate()
            .map(|(i, pos)| Particle {
                pos,
                energy: T::zero(),
                strength: feature.strength(&pos),
                id: i as u64,
                age: 0,
                gain_scale: T::one(),
            })
            .collect();
        let mut sys = Self {
            feature,
            cfg,
            next_id: particles.len() as u64,
            particles,
            tree: KdTree::new(Vec::new()),
            iteration: 0,
            stats: PsysStats::default(),
            pool,
        };
        sys.rebuild();
        Ok(sys)
    }

    pub fn particles(&self) -> &[Particle<T>] {
        &self.particles
    }

    pub fn stats(&self) -> &PsysStats<T> {
        &self.stats
    }

    pub fn feature(&self) -> &Feature<'a, T> {
        &self.feature
    }

    fn rebuild(&mut self) {
        self.tree = KdTree::new(self.particles.iter().map(|p| p.pos.world()).collect());
    }

    /// Live particles within `radius` of particle `i`, with world offsets
    /// `pos_sub(other, p)`.
    pub fn neighbors(&self, i: usize) -> Vec<(usize, Vec3<T>)> {
        let p = &self.particles[i];
        self.tree
            .within(p.pos.world(), self.cfg.radius)
            .into_iter()
            .filter(|&j| j != i)
            .map(|j| (j, pos_sub(&self.particles[j].pos, &p.pos)))
            .collect()
    }

    fn energy_at(&self, x: Vec3<T>, nbrs: &[(usize, Vec3<T>)]) -> T {
        let mut e = T::zero();
        for &(j, _) in nbrs {
            let d = linalg::dist(self.particles[j].pos.world(), x);
            e += phi(d / self.cfg.radius);
        }
        e
    }

    fn update(&self, i: usize) -> Update<T> {
        let cfg = &self.cfg;
        let p = &self.particles[i];
        let mesh = self.feature.field.mesh().as_ref();
        let dead = |pos| Update {
            pos,
            energy: T::zero(),
            strength: T::zero(),
            motion: T::zero(),
            gain_scale: p.gain_scale,
            die: true,
            offspring: None,
        };
        let Some(local) = self.feature.local(&p.pos) else {
            return dead(p.pos);
        };
        let nbrs = self.neighbors(i);
        let mut energy = T::zero();
        let mut rep = linalg::zero3();
        let coincident = cfg.radius * T::lit(1e-9);
        for &(j, r) in &nbrs {
            let d = linalg::norm(r);
            let s = d / cfg.radius;
            energy += phi(s);
            let dir = if d > coincident {
                linalg::scale(r, d.recip())
            } else {
                // pretend the higher id sits on the + side of a fixed tangent
                let t = tangent(local.normal);
                if p.id < self.particles[j].id {
                    t
                } else {
                    linalg::neg(t)
                }
            };
            rep = linalg::axpy(rep, dphi(s), dir);
        }

        if let FeatureKind::RidgeSurface { strength_threshold, .. } = self.feature.kind {
            if p.age >= cfg.grace && local.strength < strength_threshold {
                return dead(p.pos);
            }
        }
        if energy > cfg.kill_energy {
            return dead(p.pos);
        }

        let rep = local.perp(linalg::scale(rep, cfg.gain * cfg.radius));
        // shrink the repulsion after an energy increase, and while the move
        // would raise this particle's energy
        let mut scale = p.gain_scale;
        if p.age > 0 && energy > p.energy {
            scale *= T::lit(0.5);
        }
        if !nbrs.is_empty() && linalg::norm(rep) > T::zero() {
            for _ in 0..4 {
                let trial = linalg::axpy(p.pos.world(), scale, rep);
                if self.energy_at(trial, &nbrs) <= energy {
                    break;
                }
                scale *= T::lit(0.5);
            }
        }
        let mut motion = linalg::axpy(local.step, scale, rep);
        let len = linalg::norm(motion);
        let half = cfg.radius * T::lit(0.5);
        if len > half {
            motion = linalg::scale(motion, half / len);
        }
        let pos = cfg.scheme.apply(mesh, &p.pos, motion, &cfg.opts);
        if !pos.is_valid() {
            return dead(pos);
        }

        let converged = linalg::norm(local.step) <= cfg.eps * cfg.radius;
        let offspring = (converged && energy <= cfg.spawn_energy).then(|| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix(cfg.rng_seed, self.iteration, p.id));
            let mut dir = linalg::zero3();
            for _ in 0..8 {
                let u = [rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5].map(T::lit);
                dir = local.perp(u);
                if linalg::norm(dir) > T::lit(1e-3) {
                    break;
                }
            }
            if linalg::norm(dir) <= T::lit(1e-3) {
                dir = tangent(local.normal);
            }
            let dir = linalg::scale(dir, half / linalg::norm(dir));
            cfg.scheme.apply(mesh, &pos, dir, &cfg.opts)
        });

        Update {
            pos,
            energy,
            strength: local.strength,
            motion: len.min(half),
            gain_scale: (scale * T::lit(1.25)).min(T::one()),
            die: false,
            offspring: offspring.filter(MeshPos::is_valid),
        }
    }

    /// One synchronous iteration; returns the largest motion.
    pub fn step(&mut self) -> T {
        let n = self.particles.len();
        let updates: Vec<Update<T>> = match &self.pool {
            Some(pool) => pool.install(|| (0..n).into_par_iter().map(|i| self.update(i)).collect()),
            None => (0..n).map(|i| self.update(i)).collect(),
        };
        let mut next = Vec::with_capacity(n);
        let mut max_motion = T::zero();
        let (mut births, mut deaths) = (0, 0);
        let mut newborn = Vec::new();
        for (p, u) in self.particles.iter().zip(updates) {
            if u.die {
                deaths += 1;
                continue;
            }
            max_motion = max_motion.max(u.motion);
            next.push(Particle {
                pos: u.pos,
                energy: u.energy,
                strength: u.strength,
                id: p.id,
                age: p.age + 1,
                gain_scale: u.gain_scale,
            });
            if let Some(pos) = u.offspring {
                newborn.push(pos);
            }
        }
        for pos in newborn {
            if next.len() >= self.cfg.max_population {
                break;
            }
            next.push(Particle {
                pos,
                energy: T::zero(),
                strength: self.feature.strength(&pos),
                id: self.next_id,
                age: 0,
                gain_scale: T::one(),
            });
            self.next_id += 1;
            births += 1;
        }
        self.particles = next;
        self.rebuild();
        self.iteration += 1;
        self.stats.iterations = self.iteration;
        self.stats.births += births;
        self.stats.deaths += deaths;
        self.stats.max_motion = max_motion;
        self.stats.converged = births == 0 && deaths == 0 && max_motion <= self.cfg.eps * self.cfg.radius;
        log::debug!(
            "iteration {}: {} particles, +{births} -{deaths}, max motion {max_motion}",
            self.iteration,
            self.particles.len()
        );
        max_motion
    }

    /// Feature-only steps, then the final strength filter for ridges.
    pub fn polish(&mut self) {
        let mesh = self.feature.field.mesh().as_ref();
        let feature = self.feature;
        let cfg = self.cfg;
        let before = self.particles.len();
        for _ in 0..cfg.polish_iters {
            for p in &mut self.particles {
                let step = feature.step(&p.pos);
                p.pos = cfg.scheme.apply(mesh, &p.pos, step, &cfg.opts);
            }
            self.particles.retain(|p| p.pos.is_valid());
        }
        for p in &mut self.particles {
            p.strength = feature.strength(&p.pos);
        }
        if let FeatureKind::RidgeSurface { strength_threshold, .. } = feature.kind {
            self.particles.retain(|p| p.strength >= strength_threshold);
        }
        self.stats.deaths += before - self.particles.len();
        self.rebuild();
    }
}

/// Iterates until the largest motion is at most `eps·radius` with no births
/// or deaths, or `max_iters`; then polishes.
pub fn psys_run<T: Real>(
    feature: Feature<'_, T>,
    cfg: &PsysConfig<T>,
    seeds: &[Vec3<T>],
) -> Result<PsysResult<T>, PsysError> {
    let mut sys = ParticleSystem::new(feature, *cfg, seeds)?;
    sys.stats.deaths = seeds.len() - sys.particles.len();
    while sys.iteration < cfg.max_iters && !sys.particles.is_empty() {
        sys.step();
        if sys.stats.converged {
            break;
        }
    }
    sys.polish();
    if sys.particles.is_empty() {
        return Err(PsysError::AllDead);
    }
    Ok(PsysResult {
        particles: sys.particles,
        stats: sys.stats,
    })
}

/// `n` points spread over a sphere (Fibonacci lattice).
pub fn sphere_seeds<T: Real>(n: usize, center: Vec3<T>, radius: T) -> Vec<Vec3<T>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let th = golden * i as f64;
            let u = [r * th.cos(), y, r * th.sin()].map(T::lit);
            linalg::axpy(center, radius, u)
        })
        .collect()
}

/// `n` points drawn uniformly from the mesh bounds and kept if inside the mesh.
pub fn random_seeds<T: Real>(mesh: &crate::mesh::Mesh<T>, n: usize, rng_seed: u64) -> Vec<Vec3<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let b = mesh.bounds();
    let mut out = Vec::with_capacity(n);
    let mut tries = 0;
    while out.len() < n && tries < 100 * n.max(1) {
        tries += 1;
        let x: Vec3<T> = std::array::from_fn(|k| b.min[k] + (b.max[k] - b.min[k]) * T::lit(rng.gen::<f64>()));
        if mesh.locate(x, T::inside_tol()).is_some() {
            out.push(x);
        }
    }
    out
}
