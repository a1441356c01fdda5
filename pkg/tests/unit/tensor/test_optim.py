"""Unit tests for the Adam optimizer."""

import numpy as np
import pytest

from src.tensor.core import ShapeError, Tensor
from src.tensor.optim import Adam, AdamState, adam_step


class TestAdamStep:
    """Test single bias-corrected updates."""

    def test_first_step_moves_by_lr_times_sign(self):
        """Test that the first update is lr * sign(g) up to eps."""
        param = Tensor(np.zeros(3), requires_grad=True)
        state = AdamState(lr=0.01)
        adam_step([param], [np.array([2.0, -0.5, 1e-3])], state)
        np.testing.assert_allclose(param.data, [-0.01, 0.01, -0.01], rtol=1e-4)
        assert state.step == 1

    def test_missing_gradient_leaves_parameter_bit_identical(self):
        """Test that a None gradient produces exactly no change."""
        values = np.array([[0.3, -1.7]])
        param = Tensor(values, requires_grad=True)
        adam_step([param], [None], AdamState())
        np.testing.assert_array_equal(param.data, values)

    def test_new_array_is_assigned(self):
        """Test that updates never mutate arrays captured earlier."""
        param = Tensor(np.ones(2), requires_grad=True)
        captured = param.data
        adam_step([param], [np.ones(2)], AdamState())
        np.testing.assert_array_equal(captured, np.ones(2))
        assert param.data is not captured

    def test_gradient_shape_mismatch(self):
        """Test that a misaligned gradient is rejected."""
        param = Tensor(np.ones((2, 2)), requires_grad=True)
        with pytest.raises(ShapeError):
            adam_step([param], [np.ones(4)], AdamState())

    def test_length_mismatch(self):
        """Test that params and grads must pair up."""
        param = Tensor(np.ones(2), requires_grad=True)
        with pytest.raises(ShapeError):
            adam_step([param], [], AdamState())

    def test_state_tied_to_parameter_list(self):
        """Test that reusing a state with another parameter list fails."""
        state = AdamState()
        a = Tensor(np.ones(2), requires_grad=True)
        adam_step([a], [np.ones(2)], state)
        with pytest.raises(ShapeError):
            adam_step([a, a], [np.ones(2), np.ones(2)], state)


class TestAdam:
    """Test the stateful wrapper."""

    def test_minimizes_quadratic(self):
        """Test that repeated steps drive (x - 3)^2 toward its minimum."""
        x = Tensor(np.array(0.0), requires_grad=True)
        opt = Adam([x], lr=0.1)
        for _ in range(500):
            opt.zero_grad()
            gap = x - 3.0
            (gap * gap).backward()
            opt.step()
        assert x.item() == pytest.approx(3.0, abs=5e-2)

    def test_frozen_parameters_untouched(self):
        """Test that tensors outside the optimizer keep their values."""
        trained = Tensor(np.ones(2), requires_grad=True)
        frozen = Tensor(np.ones(2), requires_grad=True)
        opt = Adam([trained], lr=0.1)
        trained.grad = np.ones(2)
        frozen.grad = np.ones(2)
        opt.step()
        np.testing.assert_array_equal(frozen.data, np.ones(2))
        assert np.all(trained.data < 1.0)

    def test_zero_grad_clears_buffers(self):
        """Test that zero_grad resets every managed gradient."""
        x = Tensor(np.ones(2), requires_grad=True)
        x.grad = np.ones(2)
        Adam([x]).zero_grad()
        assert x.grad is None

    def test_default_rate(self):
        """Test that the default learning rate is the usual 1e-3."""
        assert Adam([Tensor(np.ones(1), requires_grad=True)]).state.lr == 1e-3
        assert AdamState().lr == 1e-3
