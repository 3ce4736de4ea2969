"""Second-order adaptive online learning with Bernstein-condition benchmarks."""

from .algorithms import (FixedHedge, FollowTheLeader, MetaGrad, Squint,
                         metagrad_eta_grid, project_mahalanobis, squint_eta_grid)
from .conditions import (BernsteinProfile, CgfProfile, FiniteDist, admissible_c,
                         bernstein_profile, central_bound, cgf_profile,
                         esi_chain_check, esi_check, esi_mixture_check, exact_cgf,
                         expected_regret_bound, optimized_theorem_bound,
                         squeezer_check, theorem_bound, tuned_gamma, zero_law)
from .core import (BallDomain, BoxDomain, ConfigurationError, ContractViolation,
                   LossEvent, RegretTrace, RunKey, SimplexDomain,
                   UnsupportedOperation, accumulate_hedge, accumulate_oco,
                   as_loss_vector, as_pmf, derive_seed, make_rng)
from .environments import (AbsoluteLoss, AdversarialSigns, EnvOracle, GapExperts,
                           HingeBall, KappaExperts, MarkovExperts, env_from_config,
                           env_to_config, hedge_excess_samples, make_env,
                           oco_excess_samples, parse_env_id)
from .harness import (Record, RunResult, SweepConfig, compare_bound, fit_rate,
                      quantile_report, read_records_csv, run_once, sweep,
                      write_records_csv)

__version__ = "0.1.0"
