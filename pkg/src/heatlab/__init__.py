"""heatlab: a numerical laboratory for random walks on weighted graphs.

Computes heat kernels, smallest Dirichlet eigenvalues, effective resistances
and mean exit times on finite weighted graphs (lattice boxes and the Vicsek
tree family), and empirically verifies the isoperimetric inequalities and
heat-kernel upper bounds they control: the exit-time, Faber-Krahn and
resistance forms, diagonal and sub-Gaussian off-diagonal kernel estimates,
the Davies-Gaffney integrated bound, exit-time tails and mean value
inequalities, reporting fitted constants and worst-case witnesses.
"""

__version__ = "0.1.0"

from .errors import HeatlabError
from .graph import (
    VertexSet,
    WeightedGraph,
    annulus_volume,
    ball,
    boundary,
    build_graph,
    check_p0,
    closure,
    graph_from_json,
    graph_to_json,
    volume_regularity_report,
)
from .generators import lattice_box, stretched_vicsek, vicsek_tree, weighted_vicsek
from .kernel import (
    KernelSlice,
    green_function,
    green_kernel,
    heat_kernel,
    killed_kernel,
    survival_probability,
    transition_step,
    two_step_graph,
)
from .montecarlo import SimResult, simulate_exit, simulate_tail
from .potential import (
    ExitProfile,
    annulus_resistance,
    effective_resistance,
    exit_profile,
    extreme_exit_time,
    inverse_exit,
    kappa,
    mean_exit_time,
    subgaussian_k,
)
from .spectral import EigenResult, dirichlet_energy, lambda_min

__all__ = [name for name in dir() if not name.startswith("_")]
