import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from grassnet import tensor as tn
from grassnet.ops import (
    ComplexPair,
    ContractError,
    dft,
    dropout,
    glu,
    grad_check,
    layer_norm,
    pointwise,
    relative_error,
    softmax_rows,
    sym_eig,
)
from grassnet.tensor import DimensionError, DomainError, Tensor


def leaf(x):
    return Tensor(np.asarray(x, dtype=float), requires_grad=True)


class TestMatmul:
    def test_hand_product(self):
        out = tn.matmul(Tensor([[1, 2], [3, 4]]), Tensor([[5, 6], [7, 8]]))
        np.testing.assert_array_equal(out.data, [[19, 22], [43, 50]])

    def test_triple_loop_oracle(self, rng):
        a, b = rng.normal(size=(3, 4)), rng.normal(size=(4, 5))
        ref = np.zeros((3, 5))
        for i in range(3):
            for j in range(5):
                for k in range(4):
                    ref[i, j] += a[i, k] * b[k, j]
        np.testing.assert_allclose(tn.matmul(Tensor(a), Tensor(b)).data, ref, atol=1e-12)

    def test_identity_and_zero(self, rng):
        m = rng.normal(size=(3, 3))
        np.testing.assert_array_equal((Tensor(np.eye(3)) @ Tensor(m)).data, m)
        np.testing.assert_array_equal((Tensor(np.zeros((3, 3))) @ Tensor(m)).data, np.zeros((3, 3)))

    def test_shape_mismatch_names_both_shapes(self):
        with pytest.raises(DimensionError, match=r"\(2, 3\).*\(2, 3\)"):
            tn.matmul(Tensor(np.ones((2, 3))), Tensor(np.ones((2, 3))))

    def test_batched_gradient(self, rng):
        a, b = leaf(rng.normal(size=(2, 3, 4))), leaf(rng.normal(size=(4, 2)))
        assert grad_check(lambda: (tn.matmul(a, b) ** 2).sum(), [a, b]) < 1e-7


class TestPointwise:
    def test_sigmoid_at_zero(self):
        x = leaf(0.0)
        y = tn.sigmoid(x)
        y.backward()
        assert y.item() == 0.5
        assert x.grad == 0.25

    def test_leaky_relu_slope(self):
        assert pointwise(Tensor(-1.0), "leaky_relu", 0.2).item() == pytest.approx(-0.2, abs=1e-15)

    def test_log_domain(self):
        with pytest.raises(DomainError):
            tn.log(Tensor([1.0, 0.0]))
        with pytest.raises(DomainError):
            tn.log(Tensor(-2.0))

    def test_sigmoid_is_stable_for_large_inputs(self):
        out = tn.sigmoid(Tensor([-800.0, 800.0])).data
        np.testing.assert_array_equal(out, [0.0, 1.0])

    @pytest.mark.parametrize("kind", ["sigmoid", "leaky_relu", "tanh", "exp"])
    def test_gradients(self, rng, kind):
        x = leaf(rng.uniform(-1, 1, 6))
        assert grad_check(lambda: pointwise(x, kind).sum(), [x]) < 1e-7


class TestSoftmax:
    def test_examples(self):
        np.testing.assert_allclose(softmax_rows(Tensor([0.0, 0.0])).data, [0.5, 0.5])
        np.testing.assert_array_equal(softmax_rows(Tensor([3.7])).data, [1.0])
        np.testing.assert_allclose(softmax_rows(Tensor([math.log(1), math.log(3)])).data,
                                   [0.25, 0.75], atol=1e-15)

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (3, 5), elements=st.floats(-30, 30)), st.floats(-50, 50))
    def test_rows_sum_to_one_and_shift_invariant(self, x, c):
        s = softmax_rows(Tensor(x)).data
        np.testing.assert_allclose(s.sum(axis=1), 1.0, atol=1e-12)
        np.testing.assert_allclose(softmax_rows(Tensor(x + c)).data, s, atol=1e-12)

    def test_gradient(self, rng):
        x = leaf(rng.normal(size=(2, 4)))
        w = rng.normal(size=(2, 4))
        assert grad_check(lambda: (softmax_rows(x) * w).sum(), [x]) < 1e-7


class TestGluAndLayerNorm:
    def test_glu_examples(self, rng):
        a = rng.normal(size=(3, 4))
        np.testing.assert_allclose(glu(Tensor(a), Tensor(np.zeros((3, 4)))).data, 0.5 * a)
        assert not glu(Tensor(np.zeros(4)), Tensor(rng.normal(size=4))).data.any()

    def test_glu_oracle(self, rng):
        a, g = rng.normal(size=(5, 3)), rng.normal(size=(5, 3))
        ref = a * (1.0 / (1.0 + np.exp(-g)))
        np.testing.assert_allclose(glu(Tensor(a), Tensor(g)).data, ref, atol=1e-12, rtol=0)

    def test_glu_shape_check(self):
        with pytest.raises(DimensionError):
            glu(Tensor(np.ones(3)), Tensor(np.ones(4)))

    def test_layer_norm_constant_row(self):
        out = layer_norm(Tensor(np.full(5, 3.0)), Tensor(np.ones(5)), Tensor(np.zeros(5)))
        np.testing.assert_array_equal(out.data, np.zeros(5))

    def test_layer_norm_oracle(self, rng):
        x, g, b = rng.normal(size=(4, 6)), rng.normal(size=6), rng.normal(size=6)
        mu = x.mean(axis=1, keepdims=True)
        var = ((x - mu) ** 2).mean(axis=1, keepdims=True)
        ref = (x - mu) / np.sqrt(var + 1e-5) * g + b
        out = layer_norm(Tensor(x), Tensor(g), Tensor(b)).data
        np.testing.assert_allclose(out, ref, atol=1e-12, rtol=0)

    def test_layer_norm_standardized_input(self, rng):
        x = rng.normal(size=8)
        x = (x - x.mean()) / x.std()
        out = layer_norm(Tensor(x), Tensor(np.ones(8)), Tensor(np.zeros(8))).data
        np.testing.assert_allclose(out, x, atol=1e-5)

    def test_layer_norm_gradient(self, rng):
        x, g, b = leaf(rng.normal(size=(2, 5))), leaf(rng.normal(size=5)), leaf(rng.normal(size=5))
        w = rng.normal(size=(2, 5))
        assert grad_check(lambda: (layer_norm(x, g, b) * w).sum(), [x, g, b]) < 1e-6

    def test_dropout_eval_is_identity_and_train_is_inverted(self, rng):
        x = Tensor(np.ones((200, 50)))
        np.testing.assert_array_equal(dropout(x, 0.2, False, rng).data, x.data)
        kept = dropout(x, 0.2, True, rng).data
        assert set(np.unique(kept)) <= {0.0, 1.25}
        assert abs(kept.mean() - 1.0) < 0.03


class TestDft:
    def test_constant_and_impulse(self):
        out = dft(ComplexPair.real(Tensor([1.0, 1, 1, 1]))).to_numpy()
        np.testing.assert_allclose(out, [4, 0, 0, 0], atol=1e-15)
        out = dft(ComplexPair.real(Tensor([1.0, 0, 0, 0]))).to_numpy()
        np.testing.assert_allclose(out, [1, 1, 1, 1], atol=1e-15)

    def test_round_trip_length_seven(self, rng):
        x = rng.normal(size=7) + 1j * rng.normal(size=7)
        pair = ComplexPair(Tensor(x.real), Tensor(x.imag))
        back = dft(dft(pair), inverse=True).to_numpy()
        assert np.abs(back - x).max() < 1e-10

    @pytest.mark.parametrize("t", [1, 2, 3, 8, 17, 64])
    def test_matches_numpy_fft(self, rng, t):
        x = rng.normal(size=(3, t))
        out = dft(ComplexPair.real(Tensor(x))).to_numpy()
        np.testing.assert_allclose(out, np.fft.fft(x, axis=-1), atol=1e-10)

    def test_gradient(self, rng):
        re, im = leaf(rng.normal(size=(2, 5))), leaf(rng.normal(size=(2, 5)))
        w1, w2 = rng.normal(size=(2, 5)), rng.normal(size=(2, 5))

        def f():
            out = dft(ComplexPair(re, im))
            return (out.re * w1).sum() + (out.im * w2).sum()
        assert grad_check(f, [re, im]) < 1e-7


class TestSymEig:
    def test_identity(self):
        dec = sym_eig(np.eye(3))
        np.testing.assert_allclose(dec.eigenvalues, [1, 1, 1])

    def test_diagonal_axis_aligned(self):
        dec = sym_eig(np.diag([1.0, 2.0, 3.0]))
        np.testing.assert_allclose(dec.eigenvalues, [1, 2, 3])
        np.testing.assert_allclose(dec.eigenvectors, np.eye(3), atol=1e-15)

    def test_rejects_asymmetric(self):
        with pytest.raises(ContractError):
            sym_eig(np.array([[0.0, 1.0], [0.0, 0.0]]))

    @pytest.mark.parametrize("n", [1, 2, 8, 32])
    def test_orthonormal_and_reconstructs(self, rng, n):
        a = rng.normal(size=(n, n))
        a = a + a.T
        dec = sym_eig(a)
        u = dec.eigenvectors
        assert np.abs(u.T @ u - np.eye(n)).max() < 1e-8
        assert np.abs(dec.reconstruct() - a).max() < 1e-8

    def test_sign_rule(self, rng):
        a = rng.normal(size=(6, 6))
        u = sym_eig(a + a.T).eigenvectors
        for col in u.T:
            first_big = np.flatnonzero(np.abs(col) >= np.abs(col).max() - 1e-10)[0]
            assert col[first_big] > 0

    def test_deterministic_under_flip(self, rng):
        a = rng.normal(size=(5, 5))
        a = a + a.T
        u1 = sym_eig(a).eigenvectors
        q = np.diag([1, -1, 1, -1, 1.0])
        u2 = q @ sym_eig(q @ a @ q).eigenvectors
        np.testing.assert_allclose(np.abs(u1), np.abs(u2), atol=1e-10)


class TestAutodiff:
    def test_sum_of_squares(self, rng):
        x = leaf(rng.normal(size=5))
        (x * x).sum().backward()
        np.testing.assert_allclose(x.grad, 2 * x.data)

    def test_unused_leaf_gets_zero(self, rng):
        x, y = leaf(rng.normal(size=3)), leaf(rng.normal(size=3))
        (x * 2.0).sum().backward()
        assert y.grad is None or not np.any(y.grad)

    def test_non_scalar_backward_raises(self):
        with pytest.raises(DimensionError):
            (leaf([1.0, 2.0]) * 2.0).backward()

    def test_shared_subexpression_accumulates(self):
        x = leaf(3.0)
        y = x * x
        (y + y).backward()
        assert x.grad == 12.0

    def test_broadcast_gradients(self, rng):
        a, b = leaf(rng.normal(size=(4, 3))), leaf(rng.normal(size=3))
        assert grad_check(lambda: ((a + b) * (a - b) / (b * b + 1.0)).sum(), [a, b]) < 1e-7

    def test_indexing_concat_stack(self, rng):
        a = leaf(rng.normal(size=(3, 4)))
        w = rng.normal(size=(2, 2, 4))

        def f():
            s = tn.stack([a[0], a[2]], axis=0)
            c = tn.concat([s, a[1:2] * 2.0], axis=0)[:2]
            return (tn.stack([c, c], axis=0) * w).sum()
        assert grad_check(f, [a]) < 1e-7

    def test_grad_check_on_known_functions(self, rng):
        x = leaf(rng.uniform(-1, 1, 4))
        assert grad_check(lambda: (x * 3.0).sum(), [x]) < 1e-9
        assert grad_check(lambda: (x * x).sum(), [x]) < 1e-7

    def test_relative_error_floor(self):
        assert relative_error(0.0, 0.0) == 0.0
        assert relative_error(1.0, 1.0 + 1e-9) == pytest.approx(1e-9, rel=1e-3)
