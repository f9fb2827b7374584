use rand::Rng;
use rand_distr::{Distribution, Exp1};
use serde::{Deserialize, Serialize};

use super::{rng, RngSeed};
use crate::error::{invalid, Result};

/// Piecewise-constant trajectory: `values[i]` holds on `[times[i], times[i+1])`.
/// The last entry repeats the final value at the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JumpPath {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

impl JumpPath {
    fn start(v: f64) -> Self {
        Self {
            times: vec![0.0],
            values: vec![v],
        }
    }

    fn push(&mut self, t: f64, v: f64) {
        self.times.push(t);
        self.values.push(v);
    }

    pub fn value_at(&self, t: f64) -> f64 {
        let i = self.times.partition_point(|&s| s <= t);
        self.values[i.saturating_sub(1)]
    }

    pub fn sample(&self, times: &[f64]) -> Vec<f64> {
        times.iter().map(|&t| self.value_at(t)).collect()
    }

    pub fn final_value(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    /// Number of jumps (entries minus the initial and horizon records).
    pub fn jumps(&self) -> usize {
        self.values.len().saturating_sub(2)
    }
}

/// Gillespie run of a nearest-neighbour walk on `ℤ` with state-dependent
/// up/down rates; returns the visited states and jump times.
fn gillespie<F: Fn(i64) -> (f64, f64)>(
    k0: i64,
    t_end: f64,
    seed: RngSeed,
    rates: F,
    scale: f64,
) -> JumpPath {
    let mut gen = rng(seed);
    let mut k = k0;
    let mut t = 0.0;
    let mut path = JumpPath::start(k as f64 * scale);
    loop {
        let (up, down) = rates(k);
        let total = up + down;
        if total <= 0.0 {
            break;
        }
        let wait: f64 = Exp1.sample(&mut gen);
        t += wait / total;
        if t > t_end {
            break;
        }
        k += if gen.gen::<f64>() * total < up { 1 } else { -1 };
        path.push(t, k as f64 * scale);
    }
    path.push(t_end, k as f64 * scale);
    path
}

/// `U_n(t) = k(nt)/n` for the walk with rates `a_k = α e^{-E'(k/n)}` (up) and
/// `b_k = α e^{E'(k/n)}` (down), time sped up by `n`.
pub fn birth_death_simulate(
    de: &dyn Fn(f64) -> f64,
    alpha: f64,
    n: usize,
    t_end: f64,
    k0: i64,
    seed: RngSeed,
) -> Result<JumpPath> {
    if !(alpha > 0.0) || n == 0 || !(t_end >= 0.0) {
        return Err(invalid("birth-death walk needs α > 0, n ≥ 1, t_end ≥ 0"));
    }
    let nf = n as f64;
    Ok(gillespie(
        k0,
        t_end,
        seed,
        |k| {
            let d = de(k as f64 / nf);
            (nf * alpha * (-d).exp(), nf * alpha * d.exp())
        },
        1.0 / nf,
    ))
}

/// `n` spins with `up` of them pointing up; `m = 2 up / n - 1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpinState {
    pub n: usize,
    pub up: usize,
}

impl SpinState {
    pub fn from_magnetization(n: usize, m: f64) -> Result<Self> {
        let up = n as f64 * (1.0 + m) / 2.0;
        if n == 0 || !(-1.0..=1.0).contains(&m) || (up - up.round()).abs() > 1e-9 {
            return Err(invalid(format!(
                "m = {m} is not a magnetization of {n} spins"
            )));
        }
        Ok(Self {
            n,
            up: up.round() as usize,
        })
    }

    pub fn magnetization(&self) -> f64 {
        2.0 * self.up as f64 / self.n as f64 - 1.0
    }

    /// Rate of `m → m - 2/n`, `n(1+m)/2`.
    pub fn down_rate(&self) -> f64 {
        self.up as f64
    }

    /// Rate of `m → m + 2/n`, `n(1-m)/2`.
    pub fn up_rate(&self) -> f64 {
        (self.n - self.up) as f64
    }
}

/// Magnetization path of `n` independent rate-1 spin flips.
pub fn spin_flip_simulate(n: usize, m0: f64, t_end: f64, seed: RngSeed) -> Result<JumpPath> {
    let s0 = SpinState::from_magnetization(n, m0)?;
    let nf = n as f64;
    let path = gillespie(
        s0.up as i64,
        t_end,
        seed,
        |k| {
            let s = SpinState { n, up: k as usize };
            (s.up_rate(), s.down_rate())
        },
        1.0,
    );
    let values = path.values.iter().map(|&k| 2.0 * k / nf - 1.0).collect();
    Ok(JumpPath {
        times: path.times,
        values,
    })
}

/// Snapshots of an exclusion process on the periodic lattice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SsepTrajectory {
    pub times: Vec<f64>,
    pub occupations: Vec<Vec<bool>>,
    /// Net signed number of sites moved by each particle (in initial site order).
    pub displacements: Vec<i64>,
    pub jumps: u64,
}

impl SsepTrajectory {
    /// Occupation averaged over blocks of `block` consecutive sites.
    pub fn coarse_grained(&self, index: usize, block: usize) -> Vec<f64> {
        self.occupations[index]
            .chunks(block)
            .map(|c| c.iter().filter(|&&b| b).count() as f64 / c.len() as f64)
            .collect()
    }
}

/// Kinetic Monte Carlo on `T_n`: every particle attempts a jump to each
/// neighbour at rate `n²/2`; attempts onto occupied sites are discarded.
/// Snapshots are taken at multiples of `record_dt` up to `t_end`.
pub fn ssep_simulate(
    initial: &[bool],
    t_end: f64,
    record_dt: f64,
    seed: RngSeed,
) -> Result<SsepTrajectory> {
    let n = initial.len();
    if n < 2 || !(record_dt > 0.0) || !(t_end >= 0.0) {
        return Err(invalid(
            "SSEP needs at least two sites, record_dt > 0 and t_end ≥ 0",
        ));
    }
    let mut occ = initial.to_vec();
    let mut pos: Vec<usize> = (0..n).filter(|&i| occ[i]).collect();
    let mut disp = vec![0i64; pos.len()];
    let records = (t_end / record_dt + 1e-9).floor() as usize;
    let record_times: Vec<f64> = (0..=records).map(|k| k as f64 * record_dt).collect();
    let mut traj = SsepTrajectory {
        times: Vec::new(),
        occupations: Vec::new(),
        displacements: Vec::new(),
        jumps: 0,
    };
    let mut next = 0;
    let total = pos.len() as f64 * (n as f64).powi(2);
    let mut gen = rng(seed);
    let mut t = 0.0;
    let frozen = pos.is_empty() || pos.len() == n;
    loop {
        let t_next = if frozen {
            f64::INFINITY
        } else {
            let e: f64 = Exp1.sample(&mut gen);
            t + e / total
        };
        while next < record_times.len() && record_times[next] < t_next {
            traj.times.push(record_times[next]);
            traj.occupations.push(occ.clone());
            next += 1;
        }
        if t_next > t_end {
            break;
        }
        t = t_next;
        let p = gen.gen_range(0..pos.len());
        let right = gen.gen::<bool>();
        let from = pos[p];
        let to = if right {
            (from + 1) % n
        } else {
            (from + n - 1) % n
        };
        if !occ[to] {
            occ[from] = false;
            occ[to] = true;
            pos[p] = to;
            disp[p] += if right { 1 } else { -1 };
            traj.jumps += 1;
        }
    }
    traj.displacements = disp;
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_lattice_is_frozen() {
        let t = ssep_simulate(&[true; 8], 1.0, 0.5, 1).unwrap();
        assert_eq!(t.jumps, 0);
        assert!(t.occupations.iter().all(|o| o.iter().all(|&b| b)));
        assert_eq!(t.times, vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn ssep_conserves_particles() {
        let init: Vec<bool> = (0..32).map(|i| i % 3 == 0).collect();
        let count = init.iter().filter(|&&b| b).count();
        let t = ssep_simulate(&init, 0.05, 0.01, 2).unwrap();
        assert!(t.jumps > 0);
        assert!(t
            .occupations
            .iter()
            .all(|o| o.iter().filter(|&&b| b).count() == count));
    }

    #[test]
    fn spin_state_rates() {
        let s = SpinState::from_magnetization(10, 1.0).unwrap();
        assert_eq!((s.down_rate(), s.up_rate()), (10.0, 0.0));
        assert!(SpinState::from_magnetization(10, 0.15).is_err());
        assert!(SpinState::from_magnetization(10, 1.2).is_err());
        assert_eq!(SpinState::from_magnetization(4, -0.5).unwrap().up, 1);
    }

    #[test]
    fn spin_flip_stays_on_lattice() {
        let p = spin_flip_simulate(20, 0.8, 1.0, 7).unwrap();
        for &m in &p.values {
            let up = 20.0 * (1.0 + m) / 2.0;
            assert!((up - up.round()).abs() < 1e-9 && (-1.0..=1.0).contains(&m));
        }
        assert!(p.jumps() > 0);
    }

    #[test]
    fn jump_path_lookup() {
        let p = JumpPath {
            times: vec![0.0, 0.5, 1.0],
            values: vec![1.0, 2.0, 2.0],
        };
        assert_eq!(p.sample(&[0.0, 0.49, 0.5, 1.0]), vec![1.0, 1.0, 2.0, 2.0]);
    }

    #[test]
    fn symmetric_walk_has_no_drift_bias_in_rates() {
        let p = birth_death_simulate(&|_| 0.0, 1.0, 10, 1.0, 5, 3).unwrap();
        assert_eq!(p.values[0], 0.5);
        assert!(p
            .values
            .windows(2)
            .all(|w| ((w[1] - w[0]).abs() - 0.1).abs() < 1e-12 || w[1] == w[0]));
    }
}
