use std::f64::consts::PI;

use ldgf_core::measures::{empirical_measure, Grid, GridMeasure, OccupationProfile, ParticleCloud};
use ldgf_core::pde::{drift_interaction_solve, heat_solve, PdeConfig};
use ldgf_core::stochastic::{
    birth_death_simulate, brownian_cloud, interacting_sde, replicas, spin_flip_simulate,
    ssep_simulate, EnsembleSummary, Interaction, SdeModel,
};
use ldgf_core::GridDensity;

fn mean_var(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (
        m,
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0),
    )
}

#[test]
fn brownian_displacement_variance() {
    let t = 0.01;
    let x0 = ParticleCloud::new(vec![0.5; 100_000], Grid::unit_interval(8)).unwrap();
    let traj = brownian_cloud(&x0, t, t, 17).unwrap();
    let d = traj.displacements();
    let (_, v) = mean_var(&d);
    // the variance of a sample variance of normals is 2σ⁴/(n-1)
    let se = (2.0f64 / (d.len() - 1) as f64).sqrt() * 2.0 * t;
    assert!((v - 2.0 * t).abs() < 3.0 * se, "{v}");
}

#[test]
fn ou_mean_relaxes() {
    // Ψ = (x - ½)², A = σ² = 1: the mean obeys m' = -2(m - ½)
    let x0 = ParticleCloud::new(vec![0.3; 20_000], Grid::unit_interval(8)).unwrap();
    let model = SdeModel::new(1.0, 1.0)
        .unwrap()
        .with_potential(|x| 2.0 * (x - 0.5));
    let t = 0.02;
    let traj = interacting_sde(&x0, &model, t, 1e-3, 5).unwrap();
    let (m, v) = mean_var(traj.unwrapped.last().unwrap());
    let expected = 0.5 - 0.2 * (-2.0 * t).exp();
    assert!(
        (m - expected).abs() < 3.0 * (v / 20_000.0).sqrt() + 1e-4,
        "{m} {expected}"
    );
}

#[test]
fn interacting_particles_track_the_mean_field_equation() {
    let g = Grid::unit_torus(64);
    let psi = g.sample(|x| 0.5 * (2.0 * PI * x).cos());
    let phi = g.sample_kernel(|x| 0.3 * (2.0 * PI * x).cos());
    let rho0 = GridMeasure::uniform(g);
    let t = 0.1;
    let pde = drift_interaction_solve(&rho0, &psi, &phi, &PdeConfig::new(g, 1e-3, t)).unwrap();
    let model = SdeModel::new(1.0, 1.0)
        .unwrap()
        .with_potential(|x| -PI * (2.0 * PI * x).sin())
        .with_interaction(Interaction::Fourier(vec![0.3]));
    // four independent systems of 10⁴ particles pooled to lower the binning noise
    let n = 10_000;
    let pooled: Vec<Vec<f64>> = replicas(4, 23, |seed| {
        let x0 =
            ParticleCloud::new((0..n).map(|i| (i as f64 + 0.5) / n as f64).collect(), g).unwrap();
        let traj = interacting_sde(&x0, &model, t, 2e-3, seed).unwrap();
        empirical_measure(traj.last(), &g).unwrap().into_weights()
    });
    let avg: Vec<f64> = (0..64)
        .map(|i| pooled.iter().map(|w| w[i]).sum::<f64>() / 4.0)
        .collect();
    let gap: f64 = avg
        .iter()
        .zip(pde.last().weights())
        .map(|(a, b)| (a - b).abs())
        .sum();
    assert!(gap <= 0.05, "{gap}");
}

#[test]
fn ssep_tagged_particle_variance() {
    let n = 16;
    let t = 0.01;
    let mut init = vec![false; n];
    init[3] = true;
    let disp: Vec<f64> = replicas(10_000, 31, |s| {
        ssep_simulate(&init, t, t, s).unwrap().displacements[0] as f64
    });
    let msd = disp.iter().map(|d| d * d).sum::<f64>() / disp.len() as f64;
    let expected = (n * n) as f64 * t;
    // for a Poisson-difference walk E[d⁴] = λ + 3λ²
    let se =
        ((expected + 3.0 * expected * expected - expected * expected) / disp.len() as f64).sqrt();
    assert!((msd - expected).abs() < 3.0 * se, "{msd} {expected}");
}

#[test]
fn ssep_step_profile_follows_heat_flow() {
    let n = 512;
    let block = 16;
    let t = 0.1;
    let init: Vec<bool> = (0..n).map(|i| i < n / 2).collect();
    let runs = replicas(8, 41, |s| ssep_simulate(&init, t, t, s).unwrap());
    let cells = n / block;
    let mut avg = vec![0.0; cells];
    for r in &runs {
        for (a, c) in avg
            .iter_mut()
            .zip(r.coarse_grained(r.times.len() - 1, block))
        {
            *a += c / runs.len() as f64;
        }
    }
    // rate n²/2 per direction on spacing 1/n gives ∂_t ρ = ½ ∂_xx ρ
    let g = Grid::unit_torus(cells);
    let rho0 = OccupationProfile::from_fn(g, |x| if x < 0.5 { 1.0 } else { 0.0 }).unwrap();
    let cfg = PdeConfig::new(g, 1e-4, t).with_coefficients(1.0, 0.5);
    let heat = heat_solve(&rho0, &cfg).unwrap();
    let gap: f64 = avg
        .iter()
        .zip(heat.last().density())
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
        * g.dx();
    assert!(gap <= 0.08, "{gap}");
}

#[test]
fn birth_death_walk_statistics() {
    let n = 100;
    let t = 0.5;
    let flat: Vec<f64> = replicas(10_000, 3, |s| {
        birth_death_simulate(&|_| 0.0, 1.0, n, t, 50, s)
            .unwrap()
            .final_value()
    });
    let (m, v) = mean_var(&flat);
    assert!((m - 0.5).abs() < 3.0 * (v / 1e4).sqrt());
    let expected = 2.0 * t / n as f64;
    // the jump count difference has variance 2λ and fourth central moment 2λ + 12λ², λ = nt
    let lam = n as f64 * t;
    let se = ((2.0 * lam + 8.0 * lam * lam) / 1e4).sqrt() / (n * n) as f64;
    assert!((v - expected).abs() < 3.0 * se, "{v} {expected}");
    // constant force: U_n(t) - U_n(0) has mean t (a - b) = -1.5 t
    let ln2 = 2f64.ln();
    let tilted: Vec<f64> = replicas(2_000, 4, |s| {
        birth_death_simulate(&|_| ln2, 1.0, 1000, 0.2, 0, s)
            .unwrap()
            .final_value()
    });
    let (m, v) = mean_var(&tilted);
    assert!((m / 0.2 + 1.5).abs() < 3.0 * (v / 2e3).sqrt() / 0.2, "{m}");
}

#[test]
fn spin_flip_ensemble_mean() {
    let n = 50;
    let times: Vec<f64> = (0..=5).map(|k| 0.1 * k as f64).collect();
    let samples: Vec<Vec<f64>> = replicas(10_000, 8, |s| {
        spin_flip_simulate(n, 0.8, 0.5, s).unwrap().sample(&times)
    });
    let summary = EnsembleSummary::from_samples(n, 8, times.clone(), &samples).unwrap();
    for (k, t) in times.iter().enumerate().skip(1) {
        let exact = 0.8 * (-2.0 * t).exp();
        assert!(
            (summary.mean[k] - exact).abs() < 3.0 * summary.standard_error(k),
            "{t}"
        );
    }
}
