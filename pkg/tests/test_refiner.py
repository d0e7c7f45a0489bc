import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

import srlrefine.autodiff as ad
from srlrefine.autodiff import Adam, Tensor, gradient_check
from srlrefine.refiner import (PredictionState, Refiner, aggregate_other_roles, relaxed_sense,
                               role_mass)

from conftest import tiny_config, tiny_setup

TOL = 1e-4


def refiner_setup(mode="structured", tied=True, seed=1):
    model, batch, insts, vocab = tiny_setup()
    cfg = tiny_config()
    logits, enc = model(batch)
    Pi = model.sense_embeddings(batch)
    ref = Refiner(vocab.n_roles, model.embeddings.width, cfg.d_pi, cfg, np.random.default_rng(seed),
                  mode=mode, tied=tied)
    ref.eval()
    state0 = PredictionState(0, ad.softmax(logits.roles), ad.softmax(logits.senses))
    return ref, (enc, batch, logits, Pi), state0


def random_stochastic(rng, *shape):
    return rng.dirichlet(np.ones(shape[-1]), size=shape[:-1])


# -- aggregates ------------------------------------------------------------------

def test_aggregate_single_token_is_zero():
    R = Tensor(np.array([[0.1, 0.5, 0.4]]))
    assert not aggregate_other_roles(R).data.any()


def test_aggregate_three_tokens():
    R = np.array([[0.8, 0.2], [0.7, 0.3], [0.5, 0.5]])
    np.testing.assert_allclose(aggregate_other_roles(Tensor(R)).data[:, 0], [0.8, 0.7, 0.5], atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 7), st.integers(2, 6), st.integers(0, 10_000))
def test_exclusion_identity(n, r, seed):
    R = random_stochastic(np.random.default_rng(seed), n, r)
    o = aggregate_other_roles(Tensor(R)).data
    np.testing.assert_allclose(o + R[:, 1:], np.broadcast_to(R[:, 1:].sum(0), o.shape), atol=1e-6)
    # direct summation oracle
    for i in range(n):
        np.testing.assert_allclose(o[i], sum(R[k, 1:] for k in range(n) if k != i) + np.zeros(r - 1),
                                   atol=1e-12)


def test_aggregate_ignores_padding():
    R = np.array([[[0.5, 0.5], [0.0, 1.0], [0.0, 1.0]]])
    mask = np.array([[1.0, 1.0, 0.0]])
    np.testing.assert_allclose(aggregate_other_roles(Tensor(R), mask).data[0, :2, 0], [1.0, 0.5])


def test_role_mass_examples():
    R = np.array([[0.7, 0.1, 0.2], [0.3, 0.3, 0.4]])
    np.testing.assert_allclose(role_mass(Tensor(R)).data, [0.4, 0.6], atol=1e-12)
    all_null = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
    assert not role_mass(Tensor(all_null)).data.any()


def test_single_sense_relaxation_is_the_row():
    Pi = Tensor(np.array([[[0.3, -1.2, 2.0]]]))
    for p in (1.0, 0.4):
        np.testing.assert_allclose(relaxed_sense(Pi, Tensor([[p]])).data[0], np.array([0.3, -1.2, 2.0]) * p)
    np.testing.assert_array_equal(relaxed_sense(Pi, Tensor([[1.0]])).data[0], Pi.data[0, 0])


# -- widths ------------------------------------------------------------------------

def test_corrector_widths():
    cfg = tiny_config()
    r, d_x, d_pi = 4, 7, cfg.d_pi
    full = Refiner(r, d_x, d_pi, cfg, np.random.default_rng(0))
    self_ = Refiner(r, d_x, d_pi, cfg, np.random.default_rng(0), mode="self")
    assert full.W_role.shape == (cfg.d_r, 2 * r - 1 + 2 * cfg.d_g + d_pi)
    assert full.W_sense.shape == (cfg.d_r, r - 1 + cfg.d_g + d_pi)
    assert self_.W_role.shape == (cfg.d_r, r + 2 * cfg.d_g + d_pi)
    assert self_.W_sense.shape == (cfg.d_r, cfg.d_g + d_pi)
    with pytest.raises(ValueError, match="mode"):
        Refiner(r, d_x, d_pi, cfg, np.random.default_rng(0), mode="other")


# -- iteration -------------------------------------------------------------------

@pytest.mark.parametrize("mode", ["structured", "self"])
def test_zero_refiner_is_a_noop(mode):
    ref, args, state0 = refiner_setup(mode)
    ref.zero_()
    states = ref.iterate(state0, ref.prepare(*args), 2)
    assert [s.t for s in states] == [0, 1, 2]
    for s in states[1:]:
        np.testing.assert_array_equal(s.R.data, state0.R.data)
        np.testing.assert_array_equal(s.P.data, state0.P.data)


def test_iterate_zero_steps_and_negative():
    ref, args, state0 = refiner_setup()
    inp = ref.prepare(*args)
    assert ref.iterate(state0, inp, 0) == [state0]
    with pytest.raises(ValueError):
        ref.iterate(state0, inp, -1)


def test_refined_states_are_distributions():
    ref, args, state0 = refiner_setup()
    _, batch, _, _ = args
    for s in ref.iterate(state0, ref.prepare(*args), 3):
        real = batch.token_mask > 0
        np.testing.assert_allclose(s.R.data.sum(-1)[real], 1.0, atol=1e-6)
        np.testing.assert_allclose(s.P.data.sum(-1), 1.0, atol=1e-6)
        assert np.all(s.R.data >= 0) and np.all(s.P.data >= 0)


def test_refiner_changes_baseline_when_nonzero():
    ref, args, state0 = refiner_setup()
    states = ref.iterate(state0, ref.prepare(*args), 1)
    assert not np.allclose(states[1].R.data, state0.R.data)


# -- tying -----------------------------------------------------------------------

def test_tied_views_share_storage_through_training():
    ref, args, state0 = refiner_setup(tied=True)
    ref.train()
    assert not hasattr(ref, "W_role_out")
    opt = Adam(ref.parameters(), lr=1e-2)
    gold = np.random.default_rng(0).integers(0, state0.R.shape[-1], size=state0.R.shape[:2])
    for _ in range(5):
        s1 = ref.step(state0, ref.prepare(*args))
        loss = -ad.tsum(ad.log_softmax(s1.role_logits)[np.arange(gold.shape[0])[:, None],
                                                          np.arange(gold.shape[1])[None], gold])
        opt.zero_grad()
        ad.backward(loss)
        opt.step()
        np.testing.assert_array_equal(ref.role_out().data, ref.W_role.data.T[: ref.n_roles])
        np.testing.assert_array_equal(ref.sense_out().data, ref.W_sense.data.T[: ref.d_pi])


def test_untied_has_separate_output_weights():
    ref, _, _ = refiner_setup(tied=False)
    names = dict(ref.named_parameters())
    assert any("W_role_out" in k for k in names) and any("W_sense_out" in k for k in names)


# -- permutation behaviour -------------------------------------------------------

def _corrections_for_token(ref, inp, R, P, i):
    return ref.role_corrections(Tensor(R), P, inp).data[0, i]


@pytest.mark.parametrize("mode", ["structured", "self"])
def test_moving_mass_between_other_tokens(mode):
    ref, args, state0 = refiner_setup(mode)
    inp = ref.prepare(*args)
    rng = np.random.default_rng(7)
    R = random_stochastic(rng, *state0.R.shape)
    base = _corrections_for_token(ref, inp, R, state0.P, 0)
    # swapping rows 1 and 2 keeps each column total over the other tokens
    same_totals = R.copy()
    same_totals[0, [1, 2]] = R[0, [2, 1]]
    np.testing.assert_allclose(_corrections_for_token(ref, inp, same_totals, state0.P, 0), base, atol=1e-6)
    # moving mass across role columns of token 1 changes the column totals
    across = R.copy()
    across[0, 1, 1:] = R[0, 1, 1:][::-1]
    moved = _corrections_for_token(ref, inp, across, state0.P, 0)
    if mode == "structured":
        assert not np.allclose(moved, base, atol=1e-6)
    else:
        np.testing.assert_allclose(moved, base, atol=1e-6)


# -- gradients -------------------------------------------------------------------

@pytest.mark.parametrize("mode", ["structured", "self"])
def test_gradient_check_through_two_steps(mode):
    ref, args, state0 = refiner_setup(mode, seed=4)
    rng = np.random.default_rng(9)
    R0 = Tensor(random_stochastic(rng, *state0.R.shape), requires_grad=True)
    P0 = Tensor(state0.P.data.astype(np.float64), requires_grad=True)
    wR = rng.normal(size=state0.R.shape)
    wP = rng.normal(size=state0.P.shape)

    def fn():
        states = ref.iterate(PredictionState(0, R0, P0), ref.prepare(*args), 2)
        return ad.tsum(states[-1].R * wR) + ad.tsum(states[-1].P * wP)

    assert gradient_check(fn, ref.parameters() + [R0]) < TOL
