"""Monte Carlo for the killed OU process and the resolvent."""
from .engine import ExitEnsemble, PathConfig, block_rng, ou_step, simulate_exits
from .estimators import (
    MCEstimate,
    cylindrical_convergence,
    kernel_check,
    kernel_g,
    killed_semigroup,
    resolvent_mc,
)
