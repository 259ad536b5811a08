import numpy as np
import pytest

from boardeval.mrp import MrpError, SingularChainError, solve_closed_form, value_iterate
from boardeval.states import DiscretizedChain, Discretizer


def chain_from(P, r):
    P = np.asarray(P, dtype=float)
    r = np.asarray(r, dtype=float)
    n = len(r)
    return DiscretizedChain(
        index={("s", i): i for i in range(n)},
        labels=[("s", i) for i in range(n)],
        transition=P,
        rewards=r,
        counts=P.copy(),
        terminal_index=n - 1,
        discretizer=Discretizer(),
    )


def random_absorbing_chain(rng, n_states):
    """Row-stochastic chain where every state leaks toward an absorbing
    zero-reward terminal."""
    n = n_states
    P = rng.random((n, n))
    P[:, -1] += 0.3  # guaranteed escape mass
    P[-1] = 0.0
    P[-1, -1] = 1.0
    P = P / P.sum(axis=1, keepdims=True)
    r = rng.integers(-1, 2, size=n).astype(float)
    r[-1] = 0.0
    return chain_from(P, r)


class TestClosedForm:
    def test_two_state_worked_example(self):
        chain = chain_from([[0.0, 1.0], [0.0, 1.0]], [1.0, 0.0])
        sol = solve_closed_form(chain, 0.5)
        assert sol.values == pytest.approx([1.0, 0.0])
        assert sol.residual <= 1e-10

    def test_self_loop_geometric_series(self):
        chain = chain_from([[1.0]], [1.0])
        sol = solve_closed_form(chain, 0.5)
        assert sol.values == pytest.approx([2.0])

    def test_zero_rewards(self):
        rng = np.random.default_rng(1)
        chain = random_absorbing_chain(rng, 8)
        chain.rewards[:] = 0.0
        for gamma in (0.0, 0.7, 1.0):
            assert solve_closed_form(chain, gamma).values == pytest.approx([0.0] * 8)

    def test_gamma_one_without_absorption_raises(self):
        chain = chain_from([[0.0, 1.0], [1.0, 0.0]], [1.0, 0.0])
        with pytest.raises(SingularChainError) as exc:
            solve_closed_form(chain, 1.0)
        assert exc.value.stuck_states == [0, 1]

    def test_gamma_out_of_range(self):
        chain = chain_from([[1.0]], [0.0])
        with pytest.raises(MrpError):
            solve_closed_form(chain, 1.2)


class TestValueIterate:
    def test_agrees_with_closed_form(self):
        chain = chain_from([[0.0, 1.0], [0.0, 1.0]], [1.0, 0.0])
        sol = value_iterate(chain, 0.5, tol=1e-10)
        assert sol.converged
        assert np.max(np.abs(sol.values - solve_closed_form(chain, 0.5).values)) < 1e-8

    def test_gamma_zero_is_myopic(self):
        rng = np.random.default_rng(2)
        chain = random_absorbing_chain(rng, 10)
        sol = value_iterate(chain, 0.0, tol=1e-12)
        assert sol.values == pytest.approx(chain.rewards)
        assert sol.iterations <= 2

    def test_nonconvergent_flagged(self):
        chain = chain_from([[0.0, 1.0], [1.0, 0.0]], [1.0, -0.5])
        sol = value_iterate(chain, 1.0, tol=1e-10, max_iters=50)
        assert not sol.converged
        assert sol.iterations == 50

    def test_oracle_equivalence_over_random_chains(self):
        rng = np.random.default_rng(42)
        for trial in range(100):
            chain = random_absorbing_chain(rng, int(rng.integers(2, 51)))
            gamma = [0.5, 0.9, 1.0][trial % 3]
            cf = solve_closed_form(chain, gamma)
            vi = value_iterate(chain, gamma, tol=1e-12, max_iters=20000)
            assert np.max(np.abs(cf.values - vi.values)) < 1e-8


class TestProperties:
    def test_reward_monotonicity(self):
        rng = np.random.default_rng(3)
        chain = random_absorbing_chain(rng, 12)
        base = solve_closed_form(chain, 0.9).values
        bumped = chain_from(chain.transition, chain.rewards)
        bumped.rewards[4] += 1.0
        new = solve_closed_form(bumped, 0.9).values
        assert np.all(new >= base - 1e-12)

    def test_reward_scaling_linearity(self):
        rng = np.random.default_rng(4)
        chain = random_absorbing_chain(rng, 15)
        v1 = solve_closed_form(chain, 0.8).values
        scaled = chain_from(chain.transition, 3.0 * chain.rewards)
        v3 = solve_closed_form(scaled, 0.8).values
        assert np.allclose(v3, 3.0 * v1, atol=1e-10)
