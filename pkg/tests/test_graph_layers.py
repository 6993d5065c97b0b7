import numpy as np
import pytest

from grassnet import tensor as tn
from grassnet.latent_graph import (
    GruParams,
    LatentGraphParams,
    gru_cell,
    gru_encode,
    latent_adjacency,
)
from grassnet.ops import grad_check
from grassnet.spectral import (
    ChebGcnParams,
    FcHeadParams,
    SpectralConvParams,
    cheb_gcn_cell,
    fc_head,
    gft,
    normalized_laplacian,
    spectral_conv,
)
from grassnet.tensor import DimensionError, Tensor


def sig(x):
    return 1.0 / (1.0 + np.exp(-x))


def random_gru(rng, hidden=5):
    p = GruParams.init(rng, 1, hidden)
    for t in (p.b_z, p.b_r, p.b_h):
        t.data = rng.normal(size=t.shape)
    return p


class TestGru:
    def test_zero_everything_stays_zero(self):
        h = gru_encode(np.zeros((3, 4)), GruParams.zeros(1, 6))
        np.testing.assert_array_equal(h.data, np.zeros((3, 6)))

    def test_step_oracle(self, rng):
        p = random_gru(rng)
        x = rng.normal(size=(4, 3))
        h = np.zeros((4, 5))
        for t in range(3):
            xt = x[:, t:t + 1]
            z = sig(xt @ p.w_z.data + h @ p.u_z.data + p.b_z.data)
            r = sig(xt @ p.w_r.data + h @ p.u_r.data + p.b_r.data)
            cand = np.tanh(xt @ p.w_h.data + (r * h) @ p.u_h.data + p.b_h.data)
            h = (1 - z) * h + z * cand
        np.testing.assert_allclose(gru_encode(x, p).data, h, atol=1e-12, rtol=0)

    def test_batched_matches_unbatched(self, rng):
        p = random_gru(rng)
        x = rng.normal(size=(2, 3, 4))
        both = gru_encode(x, p).data
        np.testing.assert_array_equal(both[1], gru_encode(x[1], p).data)

    def test_bit_identical_reruns(self, rng):
        p = random_gru(rng)
        x = rng.normal(size=(3, 2))
        assert np.array_equal(gru_encode(x, p).data, gru_encode(x, p).data)

    def test_empty_sequence(self):
        with pytest.raises(DimensionError):
            gru_encode(np.zeros((3, 0)), GruParams.zeros(1, 4))

    def test_gradient(self, rng):
        p = random_gru(rng, hidden=3)
        x = rng.normal(size=(2, 3))
        w = rng.normal(size=(2, 3))
        params = list(p.tensors().values())
        assert grad_check(lambda: (gru_encode(x, p) * w).sum(), params) < 1e-4

    def test_cell_keeps_state_when_update_gate_closed(self, rng):
        p = GruParams.zeros(1, 2)
        p.b_z.data[:] = -1e3
        h = Tensor(rng.normal(size=(1, 2)))
        np.testing.assert_allclose(gru_cell(Tensor([[5.0]]), h, p).data, h.data)


class TestLatentAdjacency:
    def test_single_node(self, rng):
        a = latent_adjacency(rng.normal(size=(1, 4)), LatentGraphParams.init(rng, 4))
        np.testing.assert_array_equal(a.data, [[1.0]])

    def test_identical_rows_give_uniform(self, rng):
        h = np.tile(rng.normal(size=4), (5, 1))
        a = latent_adjacency(h, LatentGraphParams.init(rng, 4))
        np.testing.assert_allclose(a.data, np.full((5, 5), 0.2), atol=1e-15)

    def test_oracle(self, rng):
        h = rng.normal(size=(6, 4))
        p = LatentGraphParams.init(rng, 4, d_k=3)
        s = (h @ p.w_query.data) @ (h @ p.w_key.data).T / np.sqrt(3)
        e = np.exp(s - s.max(axis=1, keepdims=True))
        np.testing.assert_allclose(latent_adjacency(h, p).data, e / e.sum(1, keepdims=True),
                                   atol=1e-12, rtol=0)

    @pytest.mark.parametrize("n", [2, 17, 64])
    def test_row_stochastic(self, rng, n):
        a = latent_adjacency(rng.normal(size=(n, 8)) * 3, LatentGraphParams.init(rng, 8))
        assert np.abs(a.data.sum(axis=1) - 1).max() < 1e-10

    def test_permutation_equivariance(self, rng):
        h = rng.normal(size=(7, 4))
        p = LatentGraphParams.init(rng, 4)
        perm = rng.permutation(7)
        a = latent_adjacency(h, p).data
        np.testing.assert_array_equal(latent_adjacency(h[perm], p).data, a[perm][:, perm])

    def test_gradient(self, rng):
        h = Tensor(rng.normal(size=(4, 3)), requires_grad=True)
        p = LatentGraphParams.init(rng, 3)
        w = rng.normal(size=(4, 4))
        params = [h, p.w_query, p.w_key]
        assert grad_check(lambda: (latent_adjacency(h, p) * w).sum(), params) < 1e-6


class TestLaplacian:
    def test_edgeless_graph(self):
        spec = normalized_laplacian(np.zeros((2, 2)))
        np.testing.assert_array_equal(spec.laplacian, np.eye(2))
        np.testing.assert_allclose(spec.basis.eigenvalues, [1, 1])

    def test_two_node_graph(self):
        spec = normalized_laplacian(np.array([[0.0, 1.0], [1.0, 0.0]]))
        np.testing.assert_allclose(spec.laplacian, [[1, -1], [-1, 1]], atol=1e-15)
        np.testing.assert_allclose(spec.basis.eigenvalues, [0, 2], atol=1e-15)
        x_hat = gft(np.array([[1.0], [1.0]]), spec).data
        np.testing.assert_allclose(x_hat.ravel(), [np.sqrt(2), 0], atol=1e-15)

    def test_identity_laplacian_gft_is_identity(self, rng):
        x = rng.normal(size=(3, 2))
        np.testing.assert_allclose(gft(x, normalized_laplacian(np.zeros((3, 3)))).data, x)

    def test_bipartite_top_eigenvalue(self):
        a = np.zeros((4, 4))
        a[:2, 2:] = 1
        a[2:, :2] = 1
        lam = normalized_laplacian(a).basis.eigenvalues
        assert abs(lam.max() - 2) < 1e-12 and abs(lam.min()) < 1e-12

    @pytest.mark.parametrize("n", [3, 12, 32])
    def test_spectrum_bounds_and_round_trip(self, rng, n):
        a = rng.random((n, n)) * (rng.random((n, n)) < 0.5)
        spec = normalized_laplacian(a)
        lam = spec.basis.eigenvalues
        assert lam.min() >= -1e-8 and lam.max() <= 2 + 1e-8
        x = rng.normal(size=(n, 4))
        assert np.abs(gft(gft(x, spec), spec, inverse=True).data - x).max() < 1e-10

    def test_connected_graph_has_zero_eigenvalue(self, rng):
        a = rng.random((6, 6)) + 0.1
        assert abs(normalized_laplacian(a).basis.eigenvalues.min()) < 1e-8

    def test_batched(self, rng):
        a = rng.random((3, 5, 5))
        batch = normalized_laplacian(a)
        np.testing.assert_allclose(batch.laplacian[2], normalized_laplacian(a[2]).laplacian)


class TestChebCell:
    def dense(self, x, a, theta):
        a_t = 0.5 * (a + a.T) + np.eye(len(a))
        d = np.diag(a_t.sum(axis=1) ** -0.5)
        return sig(d @ a_t @ d @ x @ theta)

    def test_edgeless_reduction(self, rng):
        x, p = rng.normal(size=(3, 4)), ChebGcnParams.init(rng, 4, 2)
        out = cheb_gcn_cell(x, np.zeros((3, 3)), p).data
        np.testing.assert_allclose(out, sig(x @ p.theta.data), atol=1e-15)

    def test_zero_theta(self, rng):
        p = ChebGcnParams(Tensor(np.zeros((4, 2))))
        out = cheb_gcn_cell(rng.normal(size=(3, 4)), rng.random((3, 3)), p).data
        np.testing.assert_array_equal(out, np.full((3, 2), 0.5))

    @pytest.mark.parametrize("n", [1, 3, 9, 16])
    def test_dense_oracle(self, rng, n):
        x, a = rng.normal(size=(n, 5)), rng.random((n, n))
        p = ChebGcnParams.init(rng, 5, 3)
        np.testing.assert_allclose(cheb_gcn_cell(x, a, p).data, self.dense(x, a, p.theta.data),
                                   atol=1e-12, rtol=0)

    def test_gradient_reaches_adjacency(self, rng):
        x = rng.normal(size=(3, 2))
        a = Tensor(rng.random((3, 3)), requires_grad=True)
        p = ChebGcnParams.init(rng, 2, 2)
        w = rng.normal(size=(3, 2))
        assert grad_check(lambda: (cheb_gcn_cell(x, a, p) * w).sum(), [a, p.theta]) < 1e-6


def random_conv(rng, channels, width=3):
    p = SpectralConvParams.init(rng, channels, width)
    for t in p.tensors().values():
        t.data = rng.normal(size=t.shape)
    return p


def conv_oracle(x, u, p, channels):
    """Dense numpy version: np.fft and explicit same-padded correlation loops."""
    n, t = x.shape
    freq = np.fft.fft(u.T @ x, axis=-1)
    width = p.value_re.shape[0]
    pad = width // 2
    out = np.zeros((n, channels, t), dtype=complex)
    for part, suffix in ((freq.real, "re"), (freq.imag, "im")):
        vk, gk = getattr(p, f"value_{suffix}").data, getattr(p, f"gate_{suffix}").data
        vb, gb = getattr(p, f"bias_value_{suffix}").data, getattr(p, f"bias_gate_{suffix}").data
        padded = np.pad(part, ((0, 0), (pad, pad)))
        res = np.zeros((n, channels, t))
        for i in range(n):
            for c in range(channels):
                for k in range(t):
                    v = vb[c] + sum(vk[w, c] * padded[i, k + w] for w in range(width))
                    g = gb[c] + sum(gk[w, c] * padded[i, k + w] for w in range(width))
                    res[i, c, k] = v * sig(g)
        out += res if suffix == "re" else 1j * res
    back = np.fft.ifft(out, axis=-1).real
    return u @ back.reshape(n, channels * t)


class TestSpectralConv:
    def test_zero_input_zero_bias(self, rng):
        spec = normalized_laplacian(rng.random((4, 4)))
        p = SpectralConvParams.init(rng, 3)
        out = spectral_conv(np.zeros((4, 2)), spec, p).data
        np.testing.assert_array_equal(out, np.zeros((4, 6)))

    @pytest.mark.parametrize("n,t,channels", [(1, 2, 1), (4, 2, 3), (5, 6, 2)])
    def test_dense_oracle(self, rng, n, t, channels):
        x = rng.normal(size=(n, t))
        spec = normalized_laplacian(rng.random((n, n)))
        p = random_conv(rng, channels)
        out = spectral_conv(x, spec, p).data
        assert out.shape == (n, channels * t)
        np.testing.assert_allclose(out, conv_oracle(x, spec.u, p, channels), atol=1e-10, rtol=0)

    def test_batch_and_channel_axes(self, rng):
        spec = normalized_laplacian(rng.random((2, 3, 3)))
        p = random_conv(rng, 2)
        x = rng.normal(size=(2, 4, 3, 2))     # batch, input channels, nodes, time
        summed = spectral_conv(x, spec, p).data
        assert summed.shape == (2, 3, 4)
        manual = sum(conv_oracle(x[1, c], spec.u[1], p, 2) for c in range(4))
        np.testing.assert_allclose(summed[1], manual, atol=1e-10)
        cat = spectral_conv(x, spec, p, reduce="concat").data
        assert cat.shape == (2, 3, 16)
        np.testing.assert_allclose(cat[1, :, 4:8], conv_oracle(x[1, 1], spec.u[1], p, 2), atol=1e-10)

    def test_finite_on_extreme_inputs(self, rng):
        spec = normalized_laplacian(rng.random((4, 4)))
        out = spectral_conv(rng.normal(size=(4, 2)) * 1e6, spec, random_conv(rng, 2)).data
        assert np.isfinite(out).all()

    def test_node_mismatch(self, rng):
        with pytest.raises(DimensionError):
            spectral_conv(np.zeros((3, 2)), normalized_laplacian(np.ones((4, 4))),
                          SpectralConvParams.init(rng))


class TestFcHead:
    def test_zero_weights(self, rng):
        p = FcHeadParams.init(rng, 6, 4)
        for t in (p.w1, p.b1, p.w2, p.b2):
            t.data[:] = 0
        assert not fc_head(rng.normal(size=(3, 6)), p).data.any()

    def test_oracle(self, rng):
        p = FcHeadParams.init(rng, 6, 4)
        p.ln_gain.data = rng.normal(size=6)
        p.b1.data = rng.normal(size=4)
        x = rng.normal(size=(3, 6))
        mu, var = x.mean(1, keepdims=True), x.var(1, keepdims=True)
        h = (x - mu) / np.sqrt(var + 1e-5) * p.ln_gain.data + p.ln_bias.data
        h = np.where(h > 0, h, 0.2 * h)
        ref = (h @ p.w1.data + p.b1.data) @ p.w2.data + p.b2.data
        np.testing.assert_allclose(fc_head(x, p).data, ref, atol=1e-12, rtol=0)

    def test_gradient_through_conv_and_head(self, rng):
        spec = normalized_laplacian(rng.random((3, 3)))
        conv = random_conv(rng, 2)
        head = FcHeadParams.init(rng, 4, 3)
        x = Tensor(rng.normal(size=(3, 2)), requires_grad=True)
        w = rng.normal(size=(3, 3))
        params = [x, *conv.tensors().values(), *head.tensors().values()]
        assert grad_check(lambda: (tn.tanh(fc_head(spectral_conv(x, spec, conv), head)) * w).sum(),
                          params) < 1e-4
