"""dqest: decision-accuracy estimation for expert workers.

Estimates each worker's probability of deciding correctly from their noisy
binary decision history plus a small amount of ground truth. Provides the
model-based estimator (MDE), the empirical agreement rate (EAR), a hybrid
that picks or blends the two (MDE-HYB), global-model baselines (GM-GT,
GM-ALL), an exclusive-ground-truth variant, and a simulation harness.
"""

from dqest._backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
