import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from treecomp.errors import NumericsError, ShapeError
from treecomp.model import SparseRows
from treecomp.optimizer import OptimizerState, adagrad_step


def test_zero_gradient_is_noop():
    params = {"w": np.array([1.0, -2.0])}
    state = OptimizerState.for_params(params)
    adagrad_step(params, {"w": np.zeros(2)}, state)
    assert np.array_equal(params["w"], [1.0, -2.0])
    assert np.array_equal(state.accum["w"], [0.0, 0.0])


def test_first_and_second_step():
    params = {"w": np.array([0.0])}
    state = OptimizerState.for_params(params, lr=0.01)
    adagrad_step(params, {"w": np.array([3.0])}, state)
    assert state.accum["w"][0] == 9.0
    assert params["w"][0] == pytest.approx(-0.01 * 3 / (3 + 1e-8), abs=1e-17)
    adagrad_step(params, {"w": np.array([4.0])}, state)
    assert state.accum["w"][0] == 25.0
    assert params["w"][0] == pytest.approx(-0.01 * 3 / (3 + 1e-8) - 0.01 * 4 / (5 + 1e-8), abs=1e-17)
    assert state.steps == 2


def test_sparse_rows_touch_only_their_rows():
    params = {"E": np.ones((4, 2))}
    state = OptimizerState.for_params(params)
    adagrad_step(params, [("E", SparseRows(np.array([2]), np.array([[1.0, -1.0]])))], state)
    assert np.array_equal(params["E"][[0, 1, 3]], np.ones((3, 2)))
    assert np.allclose(params["E"][2], [1 - 0.01, 1 + 0.01], atol=1e-9)
    assert np.array_equal(state.accum["E"][2], [1.0, 1.0])


def test_nan_leaves_state_untouched():
    params = {"a": np.zeros(2), "b": np.zeros(2)}
    state = OptimizerState.for_params(params)
    with pytest.raises(NumericsError):
        adagrad_step(params, {"a": np.ones(2), "b": np.array([np.nan, 0.0])}, state)
    assert np.array_equal(params["a"], np.zeros(2))
    assert np.array_equal(state.accum["a"], np.zeros(2))
    assert state.steps == 0


def test_shape_errors():
    params = {"a": np.zeros(2)}
    state = OptimizerState.for_params(params)
    with pytest.raises(ShapeError):
        adagrad_step(params, {"a": np.zeros(3)}, state)
    with pytest.raises(ShapeError):
        adagrad_step(params, {"z": np.zeros(2)}, state)


@given(st.lists(arrays(np.float64, 3, elements=st.floats(-1e3, 1e3)), min_size=1, max_size=20))
@settings(max_examples=100, deadline=None)
def test_accumulator_non_decreasing(grads):
    params = {"w": np.zeros(3)}
    state = OptimizerState.for_params(params)
    prev = state.accum["w"].copy()
    for g in grads:
        adagrad_step(params, {"w": g}, state)
        assert np.all(state.accum["w"] >= prev)
        prev = state.accum["w"].copy()
