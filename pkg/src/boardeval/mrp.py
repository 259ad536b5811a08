"""Exact Markov-reward-process solvers on finite discretized chains.

Values satisfy v = r + gamma * P v. The closed form factors
(I - gamma P) v = r; the iterative form repeats the fixed-point map from
v = r. Both serve as oracles for the fitted iteration.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .states import DiscretizedChain


class MrpError(ValueError):
    pass


class SingularChainError(MrpError):
    """gamma = 1 on a chain where some states never reach an absorbing
    zero-reward terminal."""

    def __init__(self, stuck_states: list[int]):
        self.stuck_states = stuck_states
        super().__init__(
            f"(I - P) is singular: states {stuck_states[:10]} cannot reach an "
            "absorbing zero-reward terminal"
        )


@dataclass(frozen=True)
class MrpSolution:
    values: np.ndarray
    gamma: float
    method: str  # "closed-form" | "iterative"
    iterations: int
    residual: float
    converged: bool = True


def _check_gamma(gamma: float) -> None:
    if not 0.0 <= gamma <= 1.0:
        raise MrpError(f"gamma must be in [0, 1], got {gamma}")


def _residual(chain: DiscretizedChain, v: np.ndarray, gamma: float) -> float:
    return float(np.max(np.abs(v - (chain.rewards + gamma * chain.transition @ v))))


def _states_not_reaching_absorption(chain: DiscretizedChain) -> list[int]:
    P = chain.transition
    absorbing = np.isclose(np.diag(P), 1.0) & np.isclose(chain.rewards, 0.0)
    reached = absorbing.copy()
    frontier = list(np.nonzero(absorbing)[0])
    incoming = [np.nonzero(P[:, j] > 0)[0] for j in range(len(P))]
    while frontier:
        j = frontier.pop()
        for i in incoming[j]:
            if not reached[i]:
                reached[i] = True
                frontier.append(i)
    return [int(i) for i in np.nonzero(~reached)[0]]


def solve_closed_form(chain: DiscretizedChain, gamma: float) -> MrpSolution:
    """Solve (I - gamma P) v = r by LU factorization, never by inversion.

    At gamma = 1 the full system is singular for any row-stochastic P, so
    the solve runs on the transient block with absorbing zero-reward
    states pinned to value 0; every state must reach one of them.
    """
    _check_gamma(gamma)
    P, r = chain.transition, chain.rewards
    n = chain.n_states
    try:
        if gamma == 1.0:
            stuck = _states_not_reaching_absorption(chain)
            if stuck:
                raise SingularChainError(stuck)
            absorbing = np.isclose(np.diag(P), 1.0) & np.isclose(r, 0.0)
            tr = ~absorbing
            v = np.zeros(n)
            if tr.any():
                A = np.eye(int(tr.sum())) - P[np.ix_(tr, tr)]
                v[tr] = np.linalg.solve(A, r[tr])
        else:
            v = np.linalg.solve(np.eye(n) - gamma * P, r)
    except np.linalg.LinAlgError as e:
        raise SingularChainError(_states_not_reaching_absorption(chain)) from e
    res = _residual(chain, v, gamma)
    if res > 1e-10 * max(1.0, float(np.abs(r).max())):
        raise MrpError(f"closed-form residual too large: {res:g}")
    return MrpSolution(values=v, gamma=gamma, method="closed-form", iterations=0, residual=res)


def value_iterate(
    chain: DiscretizedChain,
    gamma: float,
    tol: float = 1e-10,
    max_iters: int = 100_000,
) -> MrpSolution:
    """Iterate v <- r + gamma P v from v = r until the max-norm change
    drops below tol. Non-convergent gamma = 1 chains return a partial
    result flagged converged=False."""
    _check_gamma(gamma)
    if tol <= 0:
        raise MrpError("tol must be positive")
    v = chain.rewards.copy()
    converged = False
    it = 0
    for it in range(1, max_iters + 1):
        v_next = chain.rewards + gamma * chain.transition @ v
        delta = float(np.max(np.abs(v_next - v)))
        v = v_next
        if delta < tol:
            converged = True
            break
    return MrpSolution(
        values=v,
        gamma=gamma,
        method="iterative",
        iterations=it,
        residual=_residual(chain, v, gamma),
        converged=converged,
    )


def write_solution(sol: MrpSolution, chain: DiscretizedChain, path: str | Path) -> None:
    lines = ["state_index,state_label,value"]
    for i, label in enumerate(chain.labels):
        tag = "/".join(str(x) for x in label) if isinstance(label, tuple) else str(label)
        lines.append(f"{i},{tag},{sol.values[i]:.9g}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
