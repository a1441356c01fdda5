"""Unit tests for Module, Linear and MLP."""

import numpy as np
import pytest

from src.tensor.core import Tensor, TensorError
from src.tensor.nn import MLP, Linear


class TestLinear:
    """Test the affine layer."""

    def test_output_shape_and_values(self, rng):
        """Test that forward computes x @ W + b row-wise."""
        layer = Linear(3, 2, rng)
        x = rng.normal(size=(4, 3))
        out = layer(Tensor(x))
        expected = x @ layer.weight.data + layer.bias.data
        np.testing.assert_allclose(out.data, expected)

    def test_without_bias(self, rng):
        """Test that bias=False registers only the weight."""
        layer = Linear(3, 2, rng, bias=False)
        assert list(layer.named_parameters()) == ["weight"]

    def test_init_bound(self, rng):
        """Test that weights lie within +-sqrt(1/in)."""
        layer = Linear(16, 4, rng)
        assert np.all(np.abs(layer.weight.data) <= 0.25)


class TestMLP:
    """Test stacked layers and parameter discovery."""

    def test_named_parameters_are_dotted(self, rng):
        """Test that nested layers are keyed by attribute path."""
        mlp = MLP([3, 5, 2], rng)
        assert sorted(mlp.named_parameters()) == [
            "layers.0.bias",
            "layers.0.weight",
            "layers.1.bias",
            "layers.1.weight",
        ]

    def test_sigmoid_output_in_unit_interval(self, rng):
        """Test that a sigmoid head yields values in (0, 1)."""
        mlp = MLP([2, 4, 1], rng, final_activation="sigmoid")
        out = mlp(Tensor(rng.normal(size=(6, 2)) * 10.0))
        assert np.all((out.data > 0.0) & (out.data < 1.0))

    def test_rejects_single_size(self, rng):
        """Test that an MLP needs input and output widths."""
        with pytest.raises(TensorError):
            MLP([3], rng)

    def test_rejects_unknown_activation(self, rng):
        """Test that unknown activations are refused."""
        with pytest.raises(TensorError, match="Unknown activation"):
            MLP([3, 1], rng, final_activation="tanh")

    def test_same_seed_same_weights(self):
        """Test that initialization is reproducible from the generator."""
        a = MLP([3, 4, 1], np.random.default_rng(7))
        b = MLP([3, 4, 1], np.random.default_rng(7))
        for key, value in a.state_dict().items():
            np.testing.assert_array_equal(value, b.state_dict()[key])


class TestStateDict:
    """Test checkpoint save and load."""

    def test_save_load_restores_values(self, rng, tmp_path):
        """Test that a saved model reloads into a fresh instance."""
        source = MLP([3, 4, 2], rng)
        source.save(tmp_path / "ckpt")
        target = MLP([3, 4, 2], np.random.default_rng(99))
        target.load(tmp_path / "ckpt")
        for key, value in source.state_dict().items():
            np.testing.assert_array_equal(target.state_dict()[key], value)

    def test_missing_key_rejected(self, rng):
        """Test that an incomplete state is refused."""
        mlp = MLP([3, 2], rng)
        with pytest.raises(TensorError, match="missing"):
            mlp.load_state_dict({"layers.0.weight": np.zeros((3, 2))})

    def test_shape_mismatch_rejected(self, rng):
        """Test that a wrongly shaped array is refused."""
        mlp = MLP([3, 2], rng)
        state = mlp.state_dict()
        state["layers.0.weight"] = np.zeros((2, 3))
        with pytest.raises(TensorError, match="stored shape"):
            mlp.load_state_dict(state)

    def test_zero_grad(self, rng):
        """Test that zero_grad clears every parameter gradient."""
        mlp = MLP([2, 1], rng)
        for param in mlp.parameters():
            param.grad = np.ones_like(param.data)
        mlp.zero_grad()
        assert all(p.grad is None for p in mlp.parameters())
