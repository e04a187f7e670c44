"""Online and offline maximisation of submodular functions over assignments."""

from .core import (Assignment, CapExceeded, ConcaveOverIntersection, DiscountedPositional, FunctionOracle,
                   GroundSet, InvalidInput, Item, SeparablePositional, SubmodularityReport, SumOracle,
                   ValueOracle, WeightedCoverage, brute_force_opt, check_monotone_submodular,
                   discounted_positional_value, is_feasible)
from .experts import (EstimatedFeedback, FollowTheLeader, FollowThePerturbedLeader,
                      RandomizedWeightedMajority)
from .matroid import (ExplicitMatroid, FractionalPoint, FreeMatroid, Matroid, OracleIntegrityError,
                      PartitionMatroid, UniformMatroid, check_matroid_axioms, round_to_independent)
from .offline import (ArgmaxErrorInjector, ColoredTable, beta, color_averaged_value, locally_greedy,
                      sample_colors, tabular_greedy)
from .online import (OnlineContinuousGreedy, ProtocolError, TGOnline, marginal, multilinear_eval,
                     ocg_offline_solve, sample_marginal_estimate)
from .rng import Streams, stream

__version__ = "0.1.0"
