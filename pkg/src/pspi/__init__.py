"""Safe policy improvement on parametric MDPs: SPIBB, parameter tying, and sound action pruning."""

from .bounds import inc_beta, inc_beta_inv, n_wedge_bound, zeta_bound
from .game import (GameValues, PruneResult, aval_cval, aval_cval_policy, aval_cval_prune,
                   improving_transitions, strict_bound_holds, worst_case_subpmdp)
from .modelio import load_pmdp, parse_pmdp, save_pmdp, serialize_pmdp
from .parametric import (label_classes, parametric_mle, parametric_uncertainty_set,
                         pooled_counts, pspibb_policy)
from .pmdp import (Mdp, ModelError, PMdp, build_pmdp, instantiate, is_graph_preserving,
                   normalize_distinct_labels)
from .polynomial import Polynomial, parse_polynomial
from .reach import almost_sure_hit
from .solve import policy_evaluation, policy_iteration, value_iteration
from .spibb import Dataset, count, mle_mdp, spibb_policy, uncertainty_set

__version__ = "0.1.0"
