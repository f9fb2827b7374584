use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{rng, step_sizes, RngSeed};
use crate::error::{invalid, Result};
use crate::measures::{Grid, ParticleCloud, Topology};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Pair interaction `(1/n) Σ_j Φ'(X_i - X_j)`.
#[derive(Clone, Default)]
pub enum Interaction {
    #[default]
    None,
    /// `Φ'` evaluated on every pair, `O(n²)` per step. On the torus the
    /// difference is taken as the minimum image.
    Pairwise(ScalarFn),
    /// `Φ(x) = Σ_{k≥1} c_k cos(2πk x / L)` given by `c = [c_1, c_2, ...]`; the
    /// pair sum factorizes through the empirical Fourier modes, `O(nK)` per
    /// step, and equals the pairwise sum up to roundoff.
    Fourier(Vec<f64>),
}

impl fmt::Debug for Interaction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::None => f.write_str("None"),
            Self::Pairwise(_) => f.write_str("Pairwise"),
            Self::Fourier(c) => f.debug_tuple("Fourier").field(c).finish(),
        }
    }
}

/// `dX_i = -A Ψ'(X_i) dt - (A/n) Σ_j Φ'(X_i - X_j) dt + √(2σ²) dW_i`.
#[derive(Clone, Debug)]
pub struct SdeModel {
    pub a: f64,
    pub sigma2: f64,
    pub dpsi: Option<PotentialDerivative>,
    pub interaction: Interaction,
}

#[derive(Clone)]
pub struct PotentialDerivative(ScalarFn);

impl fmt::Debug for PotentialDerivative {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PotentialDerivative")
    }
}

impl SdeModel {
    /// Pure diffusion with generator `Δ`.
    pub fn brownian() -> Self {
        Self {
            a: 1.0,
            sigma2: 1.0,
            dpsi: None,
            interaction: Interaction::None,
        }
    }

    pub fn new(a: f64, sigma2: f64) -> Result<Self> {
        if !(a > 0.0 && sigma2 > 0.0) {
            return Err(invalid("A and σ² must be positive"));
        }
        Ok(Self {
            a,
            sigma2,
            dpsi: None,
            interaction: Interaction::None,
        })
    }

    pub fn with_potential(mut self, dpsi: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.dpsi = Some(PotentialDerivative(Arc::new(dpsi)));
        self
    }

    pub fn with_interaction(mut self, interaction: Interaction) -> Self {
        self.interaction = interaction;
        self
    }

    fn interaction_forces(&self, x: &[f64], domain: &Grid) -> Vec<f64> {
        let n = x.len() as f64;
        let l = domain.length();
        match &self.interaction {
            Interaction::None => vec![0.0; x.len()],
            Interaction::Pairwise(dphi) => {
                let torus = domain.topology() == Topology::Torus;
                x.par_iter()
                    .map(|&xi| {
                        let mut acc = 0.0;
                        for &xj in x {
                            let mut d = xi - xj;
                            if torus {
                                d -= l * (d / l).round();
                            }
                            acc += dphi(d);
                        }
                        acc / n
                    })
                    .collect()
            }
            Interaction::Fourier(c) => {
                // Σ_j sin(ω(x_i - x_j)) = sin(ωx_i) Σ cos(ωx_j) - cos(ωx_i) Σ sin(ωx_j)
                let modes: Vec<(f64, f64, f64)> = c
                    .iter()
                    .enumerate()
                    .map(|(k, &ck)| {
                        let w = 2.0 * PI * (k + 1) as f64 / l;
                        let (s, co) = x.iter().fold((0.0, 0.0), |(s, co), &xj| {
                            (s + (w * xj).sin(), co + (w * xj).cos())
                        });
                        (ck * w, s / n, co / n)
                    })
                    .collect();
                x.iter()
                    .map(|&xi| {
                        modes
                            .iter()
                            .enumerate()
                            .map(|(k, &(cw, s, co))| {
                                let w = 2.0 * PI * (k + 1) as f64 / l;
                                -cw * ((w * xi).sin() * co - (w * xi).cos() * s)
                            })
                            .sum()
                    })
                    .collect()
            }
        }
    }
}

/// Recorded particle positions after each step, with unconstrained
/// (unwrapped / unreflected) coordinates alongside.
#[derive(Debug, Clone, PartialEq)]
pub struct ParticleTrajectory {
    pub times: Vec<f64>,
    pub clouds: Vec<ParticleCloud>,
    pub unwrapped: Vec<Vec<f64>>,
}

impl ParticleTrajectory {
    pub fn last(&self) -> &ParticleCloud {
        &self.clouds[self.clouds.len() - 1]
    }

    /// Unconstrained displacement of each particle between the first and last record.
    pub fn displacements(&self) -> Vec<f64> {
        let (a, b) = (
            &self.unwrapped[0],
            &self.unwrapped[self.unwrapped.len() - 1],
        );
        a.iter().zip(b).map(|(x, y)| y - x).collect()
    }
}

fn constrain(x: f64, domain: &Grid) -> f64 {
    let l = domain.length();
    match domain.topology() {
        Topology::Torus => {
            let y = x.rem_euclid(l);
            if y >= l {
                0.0
            } else {
                y
            }
        }
        Topology::Interval => {
            let y = x.rem_euclid(2.0 * l);
            if y > l {
                2.0 * l - y
            } else {
                y
            }
        }
    }
}

/// Euler increments `x ← x + √(2 dt) N(0,1)`, wrapped on the torus and
/// reflected on the interval.
pub fn brownian_cloud(
    x0: &ParticleCloud,
    t_end: f64,
    dt: f64,
    seed: RngSeed,
) -> Result<ParticleTrajectory> {
    interacting_sde(x0, &SdeModel::brownian(), t_end, dt, seed)
}

/// Euler-Maruyama for the interacting system. Noise is drawn particle by
/// particle in index order from one stream, so results are independent of the
/// thread count used for the pair forces.
pub fn interacting_sde(
    x0: &ParticleCloud,
    model: &SdeModel,
    t_end: f64,
    dt: f64,
    seed: RngSeed,
) -> Result<ParticleTrajectory> {
    if !(model.a > 0.0 && model.sigma2 > 0.0) {
        return Err(invalid("A and σ² must be positive"));
    }
    let domain = *x0.domain();
    let mut gen = rng(seed);
    let mut x = x0.positions().to_vec();
    let mut free = x.clone();
    let mut t = 0.0;
    let mut traj = ParticleTrajectory {
        times: vec![0.0],
        clouds: vec![x0.clone()],
        unwrapped: vec![free.clone()],
    };
    for h in step_sizes(t_end, dt)? {
        let pair = model.interaction_forces(&x, &domain);
        let noise = (2.0 * model.sigma2 * h).sqrt();
        for i in 0..x.len() {
            let background = model.dpsi.as_ref().map_or(0.0, |f| (f.0)(x[i]));
            let z: f64 = StandardNormal.sample(&mut gen);
            let dxi = -model.a * (background + pair[i]) * h + noise * z;
            free[i] += dxi;
            x[i] = constrain(x[i] + dxi, &domain);
        }
        t += h;
        traj.times.push(t);
        traj.clouds.push(ParticleCloud::new(x.clone(), domain)?);
        traj.unwrapped.push(free.clone());
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_steps_return_initial_cloud() {
        let c = ParticleCloud::new(vec![0.1, 0.7], Grid::unit_torus(4)).unwrap();
        let t = brownian_cloud(&c, 0.0, 0.1, 1).unwrap();
        assert_eq!(t.clouds, vec![c]);
    }

    #[test]
    fn seeded_runs_are_identical() {
        let c = ParticleCloud::new(vec![0.5; 100], Grid::unit_torus(4)).unwrap();
        assert_eq!(
            brownian_cloud(&c, 0.1, 0.01, 9).unwrap(),
            brownian_cloud(&c, 0.1, 0.01, 9).unwrap()
        );
        assert_ne!(
            brownian_cloud(&c, 0.1, 0.01, 9).unwrap(),
            brownian_cloud(&c, 0.1, 0.01, 10).unwrap()
        );
    }

    #[test]
    fn positions_stay_in_domain() {
        let g = Grid::unit_interval(4);
        let c = ParticleCloud::new(vec![0.01; 500], g).unwrap();
        let t = brownian_cloud(&c, 0.5, 0.05, 3).unwrap();
        assert!(t
            .clouds
            .iter()
            .all(|c| c.positions().iter().all(|&x| (0.0..=1.0).contains(&x))));
    }

    #[test]
    fn fourier_interaction_matches_pairwise() {
        let g = Grid::unit_torus(8);
        let x0 =
            ParticleCloud::new((0..50).map(|i| (i as f64 * 0.137).fract()).collect(), g).unwrap();
        let c = vec![0.3, -0.1];
        let dphi = move |d: f64| {
            -0.3 * 2.0 * PI * (2.0 * PI * d).sin() + 0.1 * 4.0 * PI * (4.0 * PI * d).sin()
        };
        let base = SdeModel::new(1.0, 0.5)
            .unwrap()
            .with_potential(|x| (2.0 * PI * x).sin());
        let a = interacting_sde(
            &x0,
            &base.clone().with_interaction(Interaction::Fourier(c)),
            0.05,
            0.01,
            4,
        )
        .unwrap();
        let b = interacting_sde(
            &x0,
            &base.with_interaction(Interaction::Pairwise(Arc::new(dphi))),
            0.05,
            0.01,
            4,
        )
        .unwrap();
        for (p, q) in a
            .unwrapped
            .last()
            .unwrap()
            .iter()
            .zip(b.unwrapped.last().unwrap())
        {
            assert!((p - q).abs() < 1e-12);
        }
    }
}
