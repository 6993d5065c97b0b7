"""Graph spectrum, joint graph/frequency convolution, and the FC head."""
from __future__ import annotations

from dataclasses import dataclass, fields

import numpy as np

from grassnet import init
from grassnet import tensor as tn
from grassnet.ops import (
    ComplexPair,
    EigenDecomposition,
    dft,
    dropout,
    glu,
    layer_norm,
    linear,
    sym_eig,
)
from grassnet.tensor import DimensionError, Tensor, as_tensor


def _params_dict(obj) -> dict[str, Tensor]:
    return {f.name: getattr(obj, f.name) for f in fields(obj) if isinstance(getattr(obj, f.name), Tensor)}


@dataclass
class GraphSpectrum:
    laplacian: np.ndarray
    basis: EigenDecomposition

    @property
    def u(self) -> np.ndarray:
        return self.basis.eigenvectors


def _detached(a) -> np.ndarray:
    return a.data if isinstance(a, Tensor) else np.asarray(a, dtype=np.float64)


def normalized_laplacian(a) -> GraphSpectrum:
    """Symmetric normalized Laplacian of the symmetrized adjacency.

    Works on a single (N, N) matrix or a stack (..., N, N).  Zero-degree
    nodes get D^{-1/2} = 0, so an isolated node contributes an identity row.
    """
    arr = _detached(a)
    a_sym = 0.5 * (arr + np.swapaxes(arr, -1, -2))
    deg = a_sym.sum(axis=-1)
    with np.errstate(divide="ignore"):
        inv_sqrt = np.where(deg > 0, 1.0 / np.sqrt(np.where(deg > 0, deg, 1.0)), 0.0)
    n = arr.shape[-1]
    lap = np.eye(n) - inv_sqrt[..., :, None] * a_sym * inv_sqrt[..., None, :]
    lap = 0.5 * (lap + np.swapaxes(lap, -1, -2))
    return GraphSpectrum(lap, sym_eig(lap))


def gft(x, basis: EigenDecomposition | GraphSpectrum, inverse: bool = False) -> Tensor:
    """Graph Fourier transform over the node axis of (..., N, F) input."""
    if isinstance(basis, GraphSpectrum):
        basis = basis.basis
    u = basis.eigenvectors
    x = as_tensor(x)
    if x.ndim < 2 or x.shape[-2] != u.shape[-1]:
        raise DimensionError(f"gft: node axis of {x.shape} does not match basis {u.shape}")
    mat = u if inverse else np.swapaxes(u, -1, -2)
    return tn.matmul(Tensor(mat), x)


# -- first-order Chebyshev cell ----------------------------------------

@dataclass
class ChebGcnParams:
    theta: Tensor

    @classmethod
    def init(cls, rng, input_dim: int, output_dim: int) -> "ChebGcnParams":
        return cls(init.glorot(rng, (input_dim, output_dim)))

    def tensors(self) -> dict[str, Tensor]:
        return {"theta": self.theta}


def cheb_gcn_cell(x, a, params: ChebGcnParams) -> Tensor:
    """sigmoid(D~^-1/2 A~ D~^-1/2 X Theta) with A~ = sym(A) + I.

    Differentiable in ``a``, so adjacency gradients flow through this cell.
    """
    a = as_tensor(a)
    n = a.shape[-1]
    a_tilde = (a + tn.transpose(a)) * 0.5 + np.eye(n)
    inv_sqrt = tn.power(a_tilde.sum(axis=-1), -0.5)
    norm = a_tilde * inv_sqrt.reshape(*inv_sqrt.shape, 1) * inv_sqrt.reshape(
        *inv_sqrt.shape[:-1], 1, n
    )
    return tn.sigmoid(tn.matmul(tn.matmul(norm, x), params.theta))


# -- joint spectral convolution -------------------------------------------

@dataclass
class SpectralConvParams:
    """1-D kernels (width x channels) over the frequency axis.

    Each branch (real, imaginary) has its own value and gate kernel.
    """

    value_re: Tensor
    gate_re: Tensor
    bias_value_re: Tensor
    bias_gate_re: Tensor
    value_im: Tensor
    gate_im: Tensor
    bias_value_im: Tensor
    bias_gate_im: Tensor

    def __post_init__(self):
        if self.value_re.shape != self.value_im.shape or self.gate_re.shape != self.gate_im.shape:
            raise DimensionError("real and imaginary branches must share kernel shapes")

    @property
    def kernel_width(self) -> int:
        return self.value_re.shape[0]

    @property
    def channels(self) -> int:
        return self.value_re.shape[1]

    @classmethod
    def init(cls, rng, channels: int = 1, kernel_width: int = 3) -> "SpectralConvParams":
        if kernel_width % 2 != 1:
            raise ValueError("kernel_width must be odd for same padding")
        kw = {}
        for branch in ("re", "im"):
            kw[f"value_{branch}"] = init.glorot(rng, (kernel_width, channels))
            kw[f"gate_{branch}"] = init.glorot(rng, (kernel_width, channels))
            kw[f"bias_value_{branch}"] = init.zeros((channels,))
            kw[f"bias_gate_{branch}"] = init.zeros((channels,))
        return cls(**kw)

    def tensors(self) -> dict[str, Tensor]:
        return _params_dict(self)


def _windows(x: Tensor, width: int) -> Tensor:
    """Same-padded sliding windows along the last axis: (..., L) -> (..., L, width)."""
    pad = width // 2
    length = x.shape[-1]
    if pad:
        zeros = Tensor(np.zeros(x.shape[:-1] + (pad,)))
        x = tn.concat([zeros, x, zeros], axis=-1)
    return tn.stack([x[..., k:k + length] for k in range(width)], axis=-1)


def _branch(x: Tensor, value_k, gate_k, value_b, gate_b) -> Tensor:
    win = _windows(x, value_k.shape[0])
    return glu(linear(win, value_k, value_b), linear(win, gate_k, gate_b))


def spectral_conv(x, spectrum: GraphSpectrum, params: SpectralConvParams,
                  reduce: str = "sum") -> Tensor:
    """GFT -> DFT -> gated 1-D conv per branch -> IDFT -> IGFT.

    ``x`` is (..., N, T), or (..., C_in, N, T) with an input-channel axis
    when it has one more dimension than the spectrum's basis.  Channel
    outputs are summed (``reduce="sum"``) or concatenated.  Returns
    (..., N, d_spec) where d_spec = conv channels x T (times C_in when
    concatenating).
    """
    x = as_tensor(x)
    u = spectrum.u
    has_channels = x.ndim == u.ndim + 1
    if not has_channels:
        x = x.reshape(*x.shape[:-2], 1, *x.shape[-2:])
    *lead, c_in, n, t = x.shape
    if t < 1:
        raise DimensionError("spectral_conv needs T >= 1")
    if n != u.shape[-1]:
        raise DimensionError(f"spectral_conv: {n} nodes vs basis {u.shape}")

    ut = Tensor(np.swapaxes(u, -1, -2)[..., None, :, :])
    x_hat = tn.matmul(ut, x)                                  # (..., C_in, N, T)
    freq = dft(ComplexPair.real(x_hat))
    p = params
    y_re = _branch(freq.re, p.value_re, p.gate_re, p.bias_value_re, p.bias_gate_re)
    y_im = _branch(freq.im, p.value_im, p.gate_im, p.bias_value_im, p.bias_gate_im)
    back = dft(ComplexPair(tn.transpose(y_re), tn.transpose(y_im)), inverse=True)
    h = back.re                                               # (..., C_in, N, c, T)

    c = p.channels
    if reduce == "sum":
        h = h.sum(axis=-4)
        h = h.reshape(*lead, n, c * t)
    elif reduce == "concat":
        h = tn.transpose(h, tuple(range(len(lead))) + tuple(len(lead) + i for i in (1, 0, 2, 3)))
        h = h.reshape(*lead, n, c_in * c * t)
    else:
        raise ValueError(f"unknown channel reduction {reduce!r}")
    return tn.matmul(Tensor(u), h)


# -- FC head ---------------------------------------------------------------

@dataclass
class FcHeadParams:
    ln_gain: Tensor
    ln_bias: Tensor
    w1: Tensor
    b1: Tensor
    w2: Tensor
    b2: Tensor
    dropout: float = 0.2
    slope: float = 0.2

    @classmethod
    def init(cls, rng, in_dim: int, out_dim: int = 64, dropout: float = 0.2,
             slope: float = 0.2) -> "FcHeadParams":
        return cls(
            init.ones((in_dim,)), init.zeros((in_dim,)),
            init.glorot(rng, (in_dim, out_dim)), init.zeros((out_dim,)),
            init.glorot(rng, (out_dim, out_dim)), init.zeros((out_dim,)),
            dropout, slope,
        )

    def tensors(self) -> dict[str, Tensor]:
        return _params_dict(self)


def fc_head(h, params: FcHeadParams, training: bool = False,
            rng: np.random.Generator | None = None) -> Tensor:
    """Layer norm -> LeakyReLU -> dropout -> linear -> linear."""
    h = as_tensor(h)
    if h.shape[-1] != params.ln_gain.shape[0]:
        raise DimensionError(f"fc_head expects width {params.ln_gain.shape[0]}, got {h.shape}")
    out = layer_norm(h, params.ln_gain, params.ln_bias)
    out = tn.leaky_relu(out, params.slope)
    out = dropout(out, params.dropout, training, rng)
    out = linear(out, params.w1, params.b1)
    return linear(out, params.w2, params.b2)
