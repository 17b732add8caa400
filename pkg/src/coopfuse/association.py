"""Co-visible box association by entropy-regularized optimal transport.

Detections from the two vehicles rarely match one-to-one: each side sees
objects the other does not.  The cost matrix of center distances is therefore
augmented with a "dustbin" row and column at a fixed cost, so every box may
stay unmatched at bounded cost.  The relaxed transport problem is solved with
log-domain Sinkhorn iteration and pairs are read off by a mutual-argmax rule.

``hungarian_oracle`` solves the same combinatorial problem exactly (dustbin
replicated into a square assignment) and is the reference the Sinkhorn path
is tested against.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np
from numpy.typing import NDArray
from scipy.optimize import linear_sum_assignment

from .geometry import OrientedBox

__all__ = [
    "AssociationConfig",
    "AssignmentResult",
    "ConvergenceError",
    "build_cost",
    "augment",
    "sinkhorn_solve",
    "extract_pairs",
    "hungarian_oracle",
    "empty_assignment",
    "associate",
]

DEFAULT_DUSTBIN_COST = 10.0
DEFAULT_EPSILON = 0.1
DEFAULT_ITERATIONS = 2500

#: Marginal violation above which sinkhorn_solve refuses to return a plan.
CONVERGENCE_LIMIT = 1e-3

#: Tie tolerance for the mutual-argmax extraction.
TIE_TOL = 1e-12

_ANNEAL_SWEEPS = 5


class ConvergenceError(RuntimeError):
    """Sinkhorn failed to reach an acceptable marginal violation."""

    def __init__(self, violation: float, iterations: int) -> None:
        super().__init__(
            f"marginal violation {violation:.3e} exceeds {CONVERGENCE_LIMIT:.0e} "
            f"after {iterations} sweeps"
        )
        self.violation = violation
        self.iterations = iterations


@dataclass(frozen=True)
class AssociationConfig:
    """Tunables for the transport-based matcher.

    dustbin_cost must exceed the worst center misalignment a noisy pose can
    cause between truly co-visible boxes, otherwise real pairs fall into the
    dustbin; epsilon sets the entropic sharpness at the distance scale of the
    center noise.
    """

    dustbin_cost: float = DEFAULT_DUSTBIN_COST
    epsilon: float = DEFAULT_EPSILON
    iterations: int = DEFAULT_ITERATIONS


@dataclass(frozen=True)
class AssignmentResult:
    """Transport plan plus the matching read off from it.

    ``pairs`` holds (ego_index, cav_index) tuples; indices absent from any
    pair are listed in ``unmatched_ego`` / ``unmatched_cav``.
    """

    transport_plan: NDArray[np.float64]
    pairs: tuple[tuple[int, int], ...]
    unmatched_ego: tuple[int, ...]
    unmatched_cav: tuple[int, ...]


def build_cost(
    ego_boxes: Sequence[OrientedBox], cav_boxes_in_ego: Sequence[OrientedBox]
) -> NDArray[np.float64]:
    """Pairwise Euclidean center distances, shape (len(ego), len(cav))."""
    ego = np.array([b.center for b in ego_boxes], dtype=float).reshape(len(ego_boxes), 3)
    cav = np.array([b.center for b in cav_boxes_in_ego], dtype=float).reshape(
        len(cav_boxes_in_ego), 3
    )
    return np.linalg.norm(ego[:, None, :] - cav[None, :, :], axis=2)


def augment(cost: NDArray[np.float64], dustbin_cost: float) -> NDArray[np.float64]:
    """Border the cost matrix with a dustbin row and column at fixed cost."""
    if not np.isfinite(dustbin_cost) or dustbin_cost <= 0.0:
        raise ValueError(f"dustbin cost must be finite and positive, got {dustbin_cost}")
    cost = np.asarray(cost, dtype=float)
    m, n = cost.shape
    out = np.full((m + 1, n + 1), float(dustbin_cost))
    out[:m, :n] = cost
    return out


def _marginals(shape: tuple[int, int]) -> tuple[NDArray[np.float64], NDArray[np.float64]]:
    rows, cols = shape
    row_sums = np.ones(rows)
    row_sums[-1] = cols - 1
    col_sums = np.ones(cols)
    col_sums[-1] = rows - 1
    return row_sums, col_sums


def _project_to_marginals(
    plan: NDArray[np.float64],
    row_sums: NDArray[np.float64],
    col_sums: NDArray[np.float64],
) -> NDArray[np.float64]:
    """Rescale and top up a near-feasible plan so the marginals hold exactly."""
    plan = plan * np.minimum(1.0, row_sums / plan.sum(axis=1))[:, None]
    plan = plan * np.minimum(1.0, col_sums / plan.sum(axis=0))[None, :]
    # scaling leaves gaps that are nonnegative up to float dust; clamp so the
    # rank-one top-up cannot push near-zero entries negative
    row_gap = np.maximum(row_sums - plan.sum(axis=1), 0.0)
    col_gap = np.maximum(col_sums - plan.sum(axis=0), 0.0)
    total_gap = row_gap.sum()
    if total_gap > 0.0:
        plan = plan + np.outer(row_gap, col_gap) / total_gap
    return plan


def sinkhorn_solve(
    cost_aug: NDArray[np.float64],
    epsilon: float = DEFAULT_EPSILON,
    iterations: int = DEFAULT_ITERATIONS,
    *,
    tol: float = 1e-6,
) -> NDArray[np.float64]:
    """Solve the dustbin-augmented transport problem; returns the plan.

    Runs log-domain Sinkhorn with an epsilon-halving warm start (the plan
    structure locks in at coarse regularization, then sharpens), stopping
    early once the marginal violation drops below ``tol``.  The returned plan
    is projected onto the marginal polytope, so its row sums are
    ``[1, ..., 1, n]`` and column sums ``[1, ..., 1, m]`` to float precision.

    Raises ConvergenceError if the violation still exceeds 1e-3 after the
    sweep budget; near-tie instances converge slowly and may need a larger
    ``iterations``.
    """
    if epsilon <= 0.0:
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if iterations < 1:
        raise ValueError(f"iterations must be >= 1, got {iterations}")
    cost_aug = np.asarray(cost_aug, dtype=float)
    rows, cols = cost_aug.shape
    if rows < 2 or cols < 2:
        raise ValueError(
            "sinkhorn_solve needs at least one real box per side; "
            "empty problems are short-circuited in associate()"
        )
    row_sums, col_sums = _marginals(cost_aug.shape)
    log_r = np.log(row_sums)
    log_c = np.log(col_sums)

    # potentials scaled by the current regularization level
    f_scaled = np.zeros(rows)
    g_scaled = np.zeros(cols)

    def sweep(scaled_cost: NDArray[np.float64]) -> None:
        gap = g_scaled[None, :] - scaled_cost
        top = gap.max(axis=1)
        f_scaled[:] = log_r - top - np.log(np.exp(gap - top[:, None]).sum(axis=1))
        gap = f_scaled[:, None] - scaled_cost
        top = gap.max(axis=0)
        g_scaled[:] = log_c - top - np.log(np.exp(gap - top[None, :]).sum(axis=0))

    level = float(cost_aug.max())
    while level > epsilon:
        scaled = cost_aug / level
        for _ in range(_ANNEAL_SWEEPS):
            sweep(scaled)
        new_level = max(epsilon, 0.5 * level)
        f_scaled *= level / new_level
        g_scaled *= level / new_level
        level = new_level

    scaled = cost_aug / epsilon
    violation = np.inf
    done = 0
    for done in range(1, iterations + 1):
        sweep(scaled)
        # columns are exact right after the column update; rows carry the error
        plan = np.exp(f_scaled[:, None] + g_scaled[None, :] - scaled)
        violation = float(np.abs(plan.sum(axis=1) - row_sums).max())
        if violation < tol:
            break
    if violation > CONVERGENCE_LIMIT:
        raise ConvergenceError(violation, done)
    plan = np.exp(f_scaled[:, None] + g_scaled[None, :] - scaled)
    return _project_to_marginals(plan, row_sums, col_sums)


def _argmax_lowest(values: NDArray[np.float64]) -> int:
    """Index of the maximum; ties within TIE_TOL go to the lowest index."""
    return int(np.argmax(values >= values.max() - TIE_TOL))


def extract_pairs(plan: NDArray[np.float64]) -> AssignmentResult:
    """Mutual-argmax pairs from a transport plan, with dustbin dominance.

    (i, j) is a pair when j is the argmax of row i, i is the argmax of column
    j (both over the real entries), and the pair's mass strictly exceeds the
    mass each index sends to its dustbin.
    """
    plan = np.asarray(plan, dtype=float)
    m, n = plan.shape[0] - 1, plan.shape[1] - 1
    inner = plan[:m, :n]
    pairs: list[tuple[int, int]] = []
    if m > 0 and n > 0:
        row_pick = [_argmax_lowest(inner[i]) for i in range(m)]
        col_pick = [_argmax_lowest(inner[:, j]) for j in range(n)]
        for i in range(m):
            j = row_pick[i]
            if col_pick[j] != i:
                continue
            if inner[i, j] > plan[i, n] and inner[i, j] > plan[m, j]:
                pairs.append((i, j))
    matched_ego = {i for i, _ in pairs}
    matched_cav = {j for _, j in pairs}
    return AssignmentResult(
        transport_plan=plan,
        pairs=tuple(pairs),
        unmatched_ego=tuple(i for i in range(m) if i not in matched_ego),
        unmatched_cav=tuple(j for j in range(n) if j not in matched_cav),
    )


def hungarian_oracle(cost_aug: NDArray[np.float64]) -> list[tuple[int, int]]:
    """Exact minimum-cost matching with optional non-assignment.

    The dustbin row/column is replicated into an (m+n) square matrix so every
    box can independently opt out at the dustbin cost; the interior of the
    optimal assignment is returned.  Exact but factorially structured, meant
    for test-scale inputs.
    """
    cost_aug = np.asarray(cost_aug, dtype=float)
    m, n = cost_aug.shape[0] - 1, cost_aug.shape[1] - 1
    if m > 12 or n > 12:
        raise ValueError(f"oracle is for test-scale problems, got {m}x{n}")
    if m == 0 or n == 0:
        return []
    dustbin_cost = float(cost_aug[-1, -1])
    square = np.full((m + n, m + n), dustbin_cost)
    square[:m, :n] = cost_aug[:m, :n]
    row_idx, col_idx = linear_sum_assignment(square)
    return [(int(i), int(j)) for i, j in zip(row_idx, col_idx) if i < m and j < n]


def empty_assignment(m: int, n: int) -> AssignmentResult:
    """All-dustbin result: every box unmatched, plan marginals still exact."""
    plan = np.zeros((m + 1, n + 1))
    plan[:m, n] = 1.0
    plan[m, :n] = 1.0
    return AssignmentResult(
        transport_plan=plan,
        pairs=(),
        unmatched_ego=tuple(range(m)),
        unmatched_cav=tuple(range(n)),
    )


def associate(
    ego_boxes: Sequence[OrientedBox],
    cav_boxes_in_ego: Sequence[OrientedBox],
    config: AssociationConfig = AssociationConfig(),
) -> AssignmentResult:
    """Full association step: cost, dustbin, Sinkhorn, mutual-argmax pairs.

    Empty input on either side skips the solver and returns everything
    unmatched.
    """
    m, n = len(ego_boxes), len(cav_boxes_in_ego)
    if m == 0 or n == 0:
        return empty_assignment(m, n)
    cost = build_cost(ego_boxes, cav_boxes_in_ego)
    plan = sinkhorn_solve(
        augment(cost, config.dustbin_cost), config.epsilon, config.iterations
    )
    return extract_pairs(plan)
