//! Generators for the distribution families the theory quantifies over,
//! plus class-dependent label-flip injection on conditionals.

use std::f64::consts::PI;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::dist::{top_and_gap, Atom, Label, MetricSpace, NoisyDistribution, Point};
use crate::error::{Error, Result};
use crate::learners::BallFamilySpec;
use crate::seed::{derive_seed, rng_from_seed, stream};

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("gamma must lie in (0,1), got {gamma}")))
    }
}

/// Binary conditional with `label` on top at probability `top`, nudged
/// upward until the top-minus-second gap is at least `gamma` in floating
/// point.
fn binary_cond(label: Label, mut top: f64, gamma: f64) -> Vec<f64> {
    while top - (1.0 - top) < gamma && top < 1.0 {
        top = top.next_up();
    }
    let mut cond = vec![1.0 - top, 1.0 - top];
    cond[label] = top;
    cond
}

/// One atom at the origin with P(y = +1) = (1 + bγ)/2.
pub fn gen_single_atom(gamma: f64, b: i8) -> Result<NoisyDistribution> {
    check_gamma(gamma)?;
    let bg = match b {
        1 => gamma,
        -1 => -gamma,
        _ => return Err(Error::InvalidParameter(format!("b must be ±1, got {b}"))),
    };
    NoisyDistribution::new(
        2,
        MetricSpace::euclidean(1),
        vec![Atom {
            point: Point::scalar(0.0)?,
            mass: 1.0,
            cond: vec![(1.0 - bg) / 2.0, (1.0 + bg) / 2.0],
        }],
    )
}

/// `k` corners of the smallest binary cube holding them (Hamming metric),
/// random masses, and a random Bayes label per corner with gap ≥ γ.
pub fn gen_shattered_finite(k: usize, gamma: f64, num_labels: usize, seed: u64) -> Result<NoisyDistribution> {
    check_gamma(gamma)?;
    if k == 0 {
        return Err(Error::InvalidParameter("need at least one atom".into()));
    }
    if num_labels < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 labels, got {num_labels}")));
    }
    let dim = (usize::BITS - (k - 1).leading_zeros()).max(1) as usize;
    let mut rng = rng_from_seed(seed);
    let c = num_labels as f64;
    // top − (1 − top)/(C − 1) ≥ γ
    let t_min = (gamma * (c - 1.0) + 1.0) / c;
    let mut atoms = Vec::with_capacity(k);
    for i in 0..k {
        let coords = (0..dim).map(|b| ((i >> b) & 1) as f64).collect();
        let mass = rng.gen_range(0.5..1.5);
        let label = rng.gen_range(0..num_labels);
        let mut top = t_min + rng.gen::<f64>() * (1.0 - t_min);
        let cond = if num_labels == 2 {
            binary_cond(label, top, gamma)
        } else {
            loop {
                let rest = (1.0 - top) / (c - 1.0);
                if top - rest >= gamma || top >= 1.0 {
                    let mut cond = vec![rest; num_labels];
                    cond[label] = top;
                    break cond;
                }
                top = top.next_up();
            }
        };
        atoms.push(Atom { point: Point::new(coords)?, mass, cond });
    }
    NoisyDistribution::renormalized(num_labels, MetricSpace::hamming(dim), atoms)
}

/// Parameters of [`gen_clustered_balls`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClusteredBalls {
    pub k: usize,
    pub gamma: f64,
    pub lambda: f64,
    pub lipschitz_l: f64,
    pub atoms_per_ball: usize,
    /// Target noise rate η; must not exceed (1 − γ)/2.
    pub noise: f64,
}

/// `k` disjoint balls of radius γ/(2·max(λ, 3L)) centred on a square
/// lattice in the plane. Atoms come in pairs mirrored through the centre
/// (plus the centre itself when the count is odd), masses are uniform, and
/// inside ball i the Bayes label is fixed with top probability
/// 1 − η + β⟨u_i, x − c_i⟩. The mirroring makes the noise rate exactly η;
/// β is capped so the conditional is λ-Lipschitz, stays in [0,1] and keeps
/// every gap at least γ.
pub fn gen_clustered_balls(p: &ClusteredBalls, seed: u64) -> Result<(NoisyDistribution, BallFamilySpec)> {
    check_gamma(p.gamma)?;
    if p.k == 0 || p.atoms_per_ball == 0 {
        return Err(Error::InvalidParameter("need at least one ball and one atom per ball".into()));
    }
    if !(p.lambda > 0.0) || !(p.lipschitz_l > 0.0) {
        return Err(Error::InvalidParameter("lambda and L must be positive".into()));
    }
    let slack = (1.0 - p.gamma) / 2.0 - p.noise;
    if !(p.noise >= 0.0) || slack < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "noise must lie in [0, (1-γ)/2] = [0, {}], got {}",
            (1.0 - p.gamma) / 2.0,
            p.noise
        )));
    }
    let r = p.gamma / (2.0 * p.lambda.max(3.0 * p.lipschitz_l));
    // Atoms of different balls sit more than 1/λ apart, so the Lipschitz
    // condition across balls holds whatever the conditionals are.
    let spacing = (5.0 * r).max(3.0 * r + 1.0 / p.lambda);
    let side = (p.k as f64).sqrt().ceil() as usize;
    let beta = p.lambda.min(slack / r).min(p.noise / r);

    let mut rng = rng_from_seed(seed);
    let mass = 1.0 / (p.k * p.atoms_per_ball) as f64;
    let mut centers = Vec::with_capacity(p.k);
    let mut atoms = Vec::with_capacity(p.k * p.atoms_per_ball);
    for i in 0..p.k {
        let c = [(i % side) as f64 * spacing, (i / side) as f64 * spacing];
        centers.push(Point::new(c.to_vec())?);
        let label: Label = rng.gen_range(0..2);
        let phi = rng.gen::<f64>() * 2.0 * PI;
        let u = [phi.cos(), phi.sin()];
        let mut offsets = Vec::with_capacity(p.atoms_per_ball);
        if p.atoms_per_ball % 2 == 1 {
            offsets.push([0.0, 0.0]);
        }
        for _ in 0..p.atoms_per_ball / 2 {
            let rho = 0.95 * r * rng.gen::<f64>().sqrt();
            let theta = rng.gen::<f64>() * 2.0 * PI;
            let v = [rho * theta.cos(), rho * theta.sin()];
            offsets.push(v);
            offsets.push([-v[0], -v[1]]);
        }
        for v in offsets {
            let top = 1.0 - p.noise + beta * (u[0] * v[0] + u[1] * v[1]);
            atoms.push(Atom {
                point: Point::new(vec![c[0] + v[0], c[1] + v[1]])?,
                mass,
                cond: binary_cond(label, top.min(1.0), p.gamma),
            });
        }
    }
    let metric = MetricSpace::euclidean(2);
    let d = NoisyDistribution::new(2, metric, atoms)?;
    let spec = BallFamilySpec::new(centers, r, p.lipschitz_l, metric)?;
    Ok((d, spec))
}

/// `atom_count` atoms at the cell midpoints of [0,1] with uniform mass.
/// P(y = 1 | x) = clamp(1/2 ± λ(x − c), noise, 1 − noise) for a crossing
/// point c halfway between two neighbouring atoms in the middle third;
/// the atom pair and the orientation come from the seed.
pub fn gen_lipschitz_1d(atom_count: usize, lambda: f64, noise_level: f64, seed: u64) -> Result<NoisyDistribution> {
    if atom_count < 2 {
        return Err(Error::InvalidParameter("need at least two atoms".into()));
    }
    if !(lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
    }
    if !(0.0..0.5).contains(&noise_level) {
        return Err(Error::InvalidParameter(format!("noise level must lie in [0, 0.5), got {noise_level}")));
    }
    let n = atom_count;
    let mut rng = rng_from_seed(seed);
    let lo = n / 3;
    let hi = (2 * n / 3).max(lo + 1).min(n - 1);
    let j = rng.gen_range(lo..hi).min(n - 2);
    let x = |i: usize| (i as f64 + 0.5) / n as f64;
    let crossing = (x(j) + x(j + 1)) / 2.0;
    let orient = if rng.gen::<bool>() { 1.0 } else { -1.0 };
    let mass = 1.0 / n as f64;
    let atoms = (0..n)
        .map(|i| {
            let q = (0.5 + orient * lambda * (x(i) - crossing)).clamp(noise_level, 1.0 - noise_level);
            Ok(Atom { point: Point::scalar(x(i))?, mass, cond: vec![1.0 - q, q] })
        })
        .collect::<Result<Vec<_>>>()?;
    NoisyDistribution::new(2, MetricSpace::euclidean(1), atoms)
}

/// Move `rate` of the `from`-label probability to `to`, at every atom.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassFlip {
    pub from: Label,
    pub to: Label,
    pub rate: f64,
}

/// Apply every flip to the original conditionals (the amounts moved are
/// computed from `d`'s conditionals, not compounded). Rejects the result
/// if any atom's Bayes label changes or its gap drops to zero.
pub fn apply_class_flip(d: &NoisyDistribution, flips: &[ClassFlip]) -> Result<NoisyDistribution> {
    let c = d.num_labels();
    for f in flips {
        if f.from >= c || f.to >= c || f.from == f.to {
            return Err(Error::InvalidParameter(format!("bad flip {} -> {}", f.from, f.to)));
        }
        if !(0.0..=0.5).contains(&f.rate) {
            return Err(Error::InvalidParameter(format!("flip rate must lie in [0, 0.5), got {}", f.rate)));
        }
    }
    let mut conds = Vec::with_capacity(d.len());
    for (i, atom) in d.atoms().iter().enumerate() {
        let mut cond = atom.cond.clone();
        for f in flips {
            let moved = f.rate * atom.cond[f.from];
            cond[f.to] += moved;
            cond[f.from] -= moved;
        }
        let (label, gap) = top_and_gap(&cond);
        if label != d.bayes_label(i) || gap <= 0.0 {
            return Err(Error::MarginDestroyed { atom: i });
        }
        conds.push(cond);
    }
    d.with_conditionals(&conds)
}

/// A generator and its parameters, as it appears in experiment configs.
/// `seed`, when absent, is derived from the experiment seed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GeneratorSpec {
    SingleAtom {
        gamma: f64,
        b: i8,
    },
    ShatteredFinite {
        k: usize,
        gamma: f64,
        #[serde(default = "two")]
        num_labels: usize,
        seed: Option<u64>,
    },
    ClusteredBalls {
        k: usize,
        gamma: f64,
        lambda: f64,
        lipschitz_l: f64,
        atoms_per_ball: usize,
        noise: f64,
        seed: Option<u64>,
    },
    #[serde(rename = "lipschitz-1d")]
    Lipschitz1d {
        atom_count: usize,
        lambda: f64,
        noise_level: f64,
        seed: Option<u64>,
    },
    /// A distribution written out in full.
    Explicit {
        distribution: NoisyDistribution,
    },
}

fn two() -> usize {
    2
}

/// A generated distribution with the ball family when there is one.
#[derive(Clone, Debug)]
pub struct Generated {
    pub distribution: NoisyDistribution,
    pub balls: Option<BallFamilySpec>,
}

impl GeneratorSpec {
    pub fn generate(&self, experiment_seed: u64) -> Result<Generated> {
        let seed_or = |s: &Option<u64>| s.unwrap_or_else(|| derive_seed(experiment_seed, stream::GENERATOR, 0));
        let plain = |d| Generated { distribution: d, balls: None };
        Ok(match self {
            GeneratorSpec::SingleAtom { gamma, b } => plain(gen_single_atom(*gamma, *b)?),
            GeneratorSpec::ShatteredFinite { k, gamma, num_labels, seed } => {
                plain(gen_shattered_finite(*k, *gamma, *num_labels, seed_or(seed))?)
            }
            GeneratorSpec::ClusteredBalls { k, gamma, lambda, lipschitz_l, atoms_per_ball, noise, seed } => {
                let p = ClusteredBalls {
                    k: *k,
                    gamma: *gamma,
                    lambda: *lambda,
                    lipschitz_l: *lipschitz_l,
                    atoms_per_ball: *atoms_per_ball,
                    noise: *noise,
                };
                let (d, balls) = gen_clustered_balls(&p, seed_or(seed))?;
                Generated { distribution: d, balls: Some(balls) }
            }
            GeneratorSpec::Lipschitz1d { atom_count, lambda, noise_level, seed } => {
                plain(gen_lipschitz_1d(*atom_count, *lambda, *noise_level, seed_or(seed))?)
            }
            GeneratorSpec::Explicit { distribution } => plain(distribution.clone()),
        })
    }
}

/// A generator plus optional class flips applied to its output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistributionSpec {
    #[serde(flatten)]
    pub generator: GeneratorSpec,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub class_flips: Vec<ClassFlip>,
}

impl DistributionSpec {
    pub fn generate(&self, experiment_seed: u64) -> Result<Generated> {
        let mut g = self.generator.generate(experiment_seed)?;
        if !self.class_flips.is_empty() {
            g.distribution = apply_class_flip(&g.distribution, &self.class_flips)?;
        }
        Ok(g)
    }
}
