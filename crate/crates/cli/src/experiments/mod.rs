mod flows;
mod ldp;
mod rates;
mod scalar;
mod transport;

use crate::config::{ParamSpec, Params};
use crate::error::CliError;
use crate::report::Outcome;

pub type Runner = fn(&Params, u64) -> Result<Outcome, CliError>;

pub struct Experiment {
    pub name: &'static str,
    pub summary: &'static str,
    /// The relations the experiment tests, in words.
    pub relations: &'static [&'static str],
    pub params: &'static [ParamSpec],
    /// Table files written next to `summary.json`, without extension.
    pub tables: &'static [&'static str],
    pub run: Runner,
}

pub static EXPERIMENTS: &[Experiment] = &[
    Experiment {
        name: "w2-crosscheck",
        summary: "Compares three exact Wasserstein solvers and checks the dynamic (Benamou-Brenier) formulation against the static distance.",
        relations: &[
            "quantile integral = transport LP = optimal assignment for equal-count empirical measures",
            "the displacement geodesic attains the squared distance as kinetic action, and no competing path does better",
        ],
        params: transport::W2_PARAMS,
        tables: &["pairs", "competitors"],
        run: transport::w2_crosscheck,
    },
    Experiment {
        name: "jko-vs-heat",
        summary: "Runs the entropy minimizing-movement scheme against a Crank-Nicolson heat solve.",
        relations: &[
            "minimizing movement of (1/2h) d^2 + entropy approximates the diffusion equation",
            "the gap closes at first order in h",
        ],
        params: flows::JKO_PARAMS,
        tables: &["gaps", "profiles"],
        run: flows::jko_vs_heat,
    },
    Experiment {
        name: "rate-zero-on-solution",
        summary: "Evaluates the gradient-flow rate functional on heat-flow paths, their reversals, and random synthetic paths.",
        relations: &[
            "the rate functional vanishes on solutions of the gradient flow (Wasserstein mobility with entropy, exclusion mobility with mixing entropy)",
            "E(T) - E(0) + (1/2) integral of |dot rho|^2 + |force|^2 equals (1/2) integral of |dot rho + M DE|^2 (chain rule)",
        ],
        params: rates::RATE_PARAMS,
        tables: &["wasserstein_defects", "ssep_defects", "chain_rule"],
        run: rates::rate_zero_on_solution,
    },
    Experiment {
        name: "sanov-ladder",
        summary: "Exact type probabilities of i.i.d. symbols against the relative entropy.",
        relations: &["-(1/n) log P(type = rho) tends to H(rho|mu), within log(n+1)/n from above"],
        params: ldp::SANOV_PARAMS,
        tables: &["ladder"],
        run: ldp::sanov_ladder,
    },
    Experiment {
        name: "spinflip-ldp",
        summary: "Exact terminal-bin probabilities of independent spin flips against the minimal spin-flip action, plus a Monte Carlo mean.",
        relations: &[
            "-(1/n) log P(m_T in bin) tends to the least action of the spin-flip Lagrangian over paths ending in the bin",
            "the typical magnetization relaxes as m0 exp(-2t)",
        ],
        params: ldp::SPINFLIP_PARAMS,
        tables: &["bins"],
        run: ldp::spinflip_ldp,
    },
    Experiment {
        name: "birthdeath-flow",
        summary: "Checks the cosh-type dissipation pairs and the zero action of their generalized gradient flows.",
        relations: &[
            "psi*(v) = sup over xi of (v xi - psi(xi)) for the birth-death and spin-flip pairs",
            "the flow u' = psi'(-E'(u)) has zero action and nonincreasing energy",
        ],
        params: scalar::BIRTHDEATH_PARAMS,
        tables: &["legendre", "flows"],
        run: scalar::birthdeath_flow,
    },
    Experiment {
        name: "fdt-equivalence",
        summary: "Path dependence of the cross term in the drift-diffusion rate functional.",
        relations: &["with sigma^2 = A kT the cross term integrates to a free-energy difference, independent of the path"],
        params: rates::FDT_PARAMS,
        tables: &["cross_terms"],
        run: rates::fdt_equivalence,
    },
    Experiment {
        name: "decay-scheme",
        summary: "Runs the split minimizing-movement scheme for diffusion with decay against a direct solve.",
        relations: &[
            "each step keeps a fraction exp(-lambda h) of the mass",
            "the iterated scheme approximates diffusion-drift with linear decay",
        ],
        params: flows::DECAY_PARAMS,
        tables: &["gaps"],
        run: flows::decay_scheme,
    },
    Experiment {
        name: "heatbath-ladder",
        summary: "Exact microcanonical system-bath laws against the reduced rate functional.",
        relations: &[
            "-(1/n) log P(rho) approaches the reduced rate H(rho|mu) + N I_B(Ebar - E(rho)/N) + const",
            "for a large bath the reduced rate becomes the relative entropy to the tilted measure",
        ],
        params: ldp::HEATBATH_PARAMS,
        tables: &["ladder", "large_bath"],
        run: ldp::heatbath_ladder,
    },
    Experiment {
        name: "discrete-time-mobility",
        summary: "Short-time exponent of the unlabelled Brownian transition density, reported without a threshold.",
        relations: &["-(4h/n) log p_h(x -> y) for unlabelled particles tends to the squared Wasserstein distance of the empirical measures"],
        params: transport::MOBILITY_PARAMS,
        tables: &["exponents"],
        run: transport::discrete_time_mobility,
    },
];

pub fn find(name: &str) -> Result<&'static Experiment, CliError> {
    EXPERIMENTS
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| CliError::UnknownExperiment(name.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_is_consistent() {
        let mut names: Vec<&str> = EXPERIMENTS.iter().map(|e| e.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 10);
        for e in EXPERIMENTS {
            for s in e.params {
                assert!(
                    serde_json::from_str::<serde_json::Value>(s.default).is_ok(),
                    "{} {}",
                    e.name,
                    s.key
                );
            }
        }
        assert!(find("nope").is_err());
    }
}
