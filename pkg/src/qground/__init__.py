"""qground: learning to ground existentially quantified planning goals.

Pipeline: generate colored STRIPS instances, label (state, goal) pairs with
a breadth-first-search cost oracle, train a relational GNN value function,
then ground goal variables greedily by value argmin and hand the fully
ground goal to a classical planner.  Includes DNF goal compilation and an
evaluation harness for validity/reachability/optimality metrics.
"""

__version__ = "0.1.0"

from . import dataset, evalharness, generators, goals, oracle, policy, rgnn, strips, tensor

__all__ = [
    "__version__",
    "dataset",
    "evalharness",
    "generators",
    "goals",
    "oracle",
    "policy",
    "rgnn",
    "strips",
    "tensor",
]
