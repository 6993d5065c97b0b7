"""Composite differentiable operations and the two spectral primitives.

``dft`` is the naive kernel-sum transform written as two real matmuls, so
it is differentiable through the tensor engine.  ``sym_eig`` is a
preprocessing step only: its outputs are plain arrays and no gradient
flows through them.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from grassnet import tensor as tn
from grassnet.tensor import DimensionError, Tensor, as_tensor


class ContractError(ValueError):
    pass


def pointwise(x, kind: str, slope: float = 0.2) -> Tensor:
    """Apply one of ``sigmoid``, ``leaky_relu``, ``tanh``, ``log``, ``exp``."""
    if kind == "sigmoid":
        return tn.sigmoid(x)
    if kind == "leaky_relu":
        return tn.leaky_relu(x, slope)
    if kind == "tanh":
        return tn.tanh(x)
    if kind == "log":
        return tn.log(x)
    if kind == "exp":
        return tn.exp(x)
    raise ValueError(f"unknown pointwise kind {kind!r}")


def softmax_rows(x) -> Tensor:
    return tn.softmax(x, axis=-1)


def glu(a, g) -> Tensor:
    a, g = as_tensor(a), as_tensor(g)
    if a.shape != g.shape:
        raise DimensionError(f"glu shape mismatch: {a.shape} vs {g.shape}")
    return a * tn.sigmoid(g)


def layer_norm(x, gain, bias, eps: float = 1e-5) -> Tensor:
    x = as_tensor(x)
    mu = x.mean(axis=-1, keepdims=True)
    centered = x - mu
    var = (centered * centered).mean(axis=-1, keepdims=True)
    return centered / tn.sqrt(var + eps) * gain + bias


def dropout(x, rate: float, training: bool, rng: np.random.Generator | None) -> Tensor:
    """Inverted dropout; identity when not training."""
    if not training or rate <= 0.0:
        return as_tensor(x)
    keep = (rng.random(as_tensor(x).shape) >= rate) / (1.0 - rate)
    return x * keep


def linear(x, weight, bias=None) -> Tensor:
    x = as_tensor(x)
    if x.ndim == 1:
        out = tn.matmul(x.reshape(1, x.shape[0]), weight).reshape(weight.shape[-1])
    else:
        out = tn.matmul(x, weight)
    return out if bias is None else out + bias


# -- Fourier transform --------------------------------------------------

@dataclass
class ComplexPair:
    re: Tensor
    im: Tensor

    def __post_init__(self):
        self.re = as_tensor(self.re)
        self.im = as_tensor(self.im)
        if self.re.shape != self.im.shape:
            raise DimensionError(
                f"real/imaginary shape mismatch: {self.re.shape} vs {self.im.shape}"
            )

    @classmethod
    def real(cls, x) -> "ComplexPair":
        x = as_tensor(x)
        return cls(x, Tensor(np.zeros(x.shape)))

    def to_numpy(self) -> np.ndarray:
        return self.re.data + 1j * self.im.data


@lru_cache(maxsize=64)
def _dft_kernels(n: int) -> tuple[np.ndarray, np.ndarray]:
    t = np.arange(n)
    angle = 2.0 * np.pi * np.outer(t, t) / n
    cos, sin = np.cos(angle), np.sin(angle)
    cos.setflags(write=False)
    sin.setflags(write=False)
    return cos, sin


def dft(x: ComplexPair, inverse: bool = False) -> ComplexPair:
    """Discrete Fourier transform along the last axis.

    Forward uses the kernel e^{-2 pi i k t / T}; the inverse uses the
    conjugate kernel and a 1/T scale.
    """
    n = x.re.shape[-1]
    if n < 1:
        raise DimensionError("dft needs at least one sample")
    cos, sin = _dft_kernels(n)
    re, im = x.re, x.im
    if re.ndim == 1:
        out = dft(ComplexPair(re.reshape(1, n), im.reshape(1, n)), inverse)
        return ComplexPair(out.re.reshape(n), out.im.reshape(n))
    if not inverse:
        out_re = tn.matmul(re, cos) + tn.matmul(im, sin)
        out_im = tn.matmul(im, cos) - tn.matmul(re, sin)
        return ComplexPair(out_re, out_im)
    scale = 1.0 / n
    out_re = (tn.matmul(re, cos) - tn.matmul(im, sin)) * scale
    out_im = (tn.matmul(im, cos) + tn.matmul(re, sin)) * scale
    return ComplexPair(out_re, out_im)


# -- symmetric eigendecomposition -------------------------------------

@dataclass
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        u = self.eigenvectors
        return (u * self.eigenvalues[..., None, :]) @ np.swapaxes(u, -1, -2)


def _fix_signs(vectors: np.ndarray) -> np.ndarray:
    mag = np.abs(vectors)
    # first component within round-off of the column maximum decides the sign
    near_max = mag >= mag.max(axis=-2, keepdims=True) - 1e-10
    pivot = np.argmax(near_max, axis=-2)
    pivot_vals = np.take_along_axis(vectors, pivot[..., None, :], axis=-2)
    signs = np.where(pivot_vals < 0, -1.0, 1.0)
    return vectors * signs


def sym_eig(a, tol: float = 1e-10) -> EigenDecomposition:
    """Eigendecomposition of a symmetric matrix (or a stack of them).

    Eigenvalues ascend; each eigenvector has its largest-magnitude
    component positive.  Not differentiable.
    """
    arr = a.data if isinstance(a, Tensor) else np.asarray(a, dtype=np.float64)
    if arr.ndim < 2 or arr.shape[-1] != arr.shape[-2]:
        raise DimensionError(f"sym_eig needs square matrices, got {arr.shape}")
    asym = np.abs(arr - np.swapaxes(arr, -1, -2)).max() if arr.size else 0.0
    if asym > tol:
        raise ContractError(f"sym_eig input not symmetric (max asymmetry {asym:.3e})")
    vals, vecs = np.linalg.eigh(arr)
    return EigenDecomposition(vals, _fix_signs(vecs))


# -- gradient checking ---------------------------------------------------

def relative_error(analytic: float, numeric: float, floor: float = 1e-7) -> float:
    return abs(analytic - numeric) / max(abs(analytic), abs(numeric), floor)


def grad_check(
    f: Callable[[], Tensor],
    params: Sequence[Tensor],
    step: float = 1e-5,
    indices: Sequence[tuple[int, tuple]] | None = None,
) -> float:
    """Worst relative error between autodiff and central differences.

    ``f`` is re-evaluated with each probed parameter entry nudged in place.
    ``indices`` selects (param position, entry index) pairs; default is
    every entry of every parameter.
    """
    for p in params:
        p.grad = None
    f().backward()
    analytic = [np.zeros_like(p.data) if p.grad is None else p.grad.copy() for p in params]
    if indices is None:
        indices = [(k, idx) for k, p in enumerate(params) for idx in np.ndindex(p.shape)]
    worst = 0.0
    for k, idx in indices:
        p = params[k]
        orig = p.data[idx]
        p.data[idx] = orig + step
        up = f().item()
        p.data[idx] = orig - step
        down = f().item()
        p.data[idx] = orig
        numeric = (up - down) / (2.0 * step)
        worst = max(worst, relative_error(analytic[k][idx], numeric))
    return worst
