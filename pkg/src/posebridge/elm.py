"""Regularized extreme learning machine: the local kernel primitive.

A kernel is a single-hidden-layer network whose hidden weights and biases
are drawn uniformly from [-1, 1] by a seeded generator and never trained.
Only the output weights are fitted, in closed form:

    b = H^T (lam*I + H H^T)^{-1} T

where H is the hidden-layer output matrix over the training inputs and T
the target matrix.  With ``hidden_count >= n_samples`` and a tiny ``lam``
the fit interpolates the training set (up to the regularization bias).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, cho_factor, cho_solve, lstsq
from scipy.special import expit

from .errors import NumericFailure

DEFAULT_REGULARIZATION = 1e-6

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class ElmKernel:
    """Immutable trained kernel mapping R^input_dim -> R^output_dim."""

    input_dim: int
    output_dim: int
    hidden_count: int
    hidden_weights: np.ndarray  # (hidden_count, input_dim)
    hidden_biases: np.ndarray   # (hidden_count,)
    output_weights: np.ndarray  # (hidden_count, output_dim)
    regularization: float
    seed: int


def hidden_parameters(seed, hidden_count, input_dim):
    """Derive the fixed hidden layer from a seed.

    Weights are drawn first, then biases, all uniform on [-1, 1].  The draw
    order is part of the serialization contract: stored kernels keep only
    the seed and re-derive these arrays on load.
    """
    rng = np.random.default_rng(int(seed) & _SEED_MASK)
    weights = rng.uniform(-1.0, 1.0, (hidden_count, input_dim))
    biases = rng.uniform(-1.0, 1.0, hidden_count)
    return weights, biases


def _features(weights, biases, x2d):
    # logistic activation; expit is overflow-safe at extreme arguments
    return expit(x2d @ weights.T + biases)


def _as_samples(arr, name):
    a = np.asarray(arr, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(-1, 1)
    if a.ndim != 2:
        raise ValueError(f"{name} must be a 2-D array of samples, got ndim={a.ndim}")
    if not np.all(np.isfinite(a)):
        raise ValueError(f"{name} contains non-finite values")
    return a


def train(inputs, targets, hidden_count, regularization=DEFAULT_REGULARIZATION, seed=0):
    """Fit output weights on paired samples and return the kernel.

    Parameters
    ----------
    inputs : array-like, shape (n_samples, input_dim)
    targets : array-like, shape (n_samples, output_dim)
    hidden_count : int
        Number of hidden units.  At least the sample count if the kernel
        should interpolate.
    regularization : float
        Ridge term added to the hidden Gram matrix; must be >= 0.
    seed : int
        Seed for the fixed hidden layer.

    Raises
    ------
    ValueError
        On empty/mismatched inputs or negative regularization.
    NumericFailure
        If ``regularization == 0`` and the hidden Gram matrix is singular;
        the caller must retry with a positive value.
    """
    x = _as_samples(inputs, "inputs")
    t = _as_samples(targets, "targets")
    if x.shape[0] == 0:
        raise ValueError("inputs must be nonempty")
    if x.shape[0] != t.shape[0]:
        raise ValueError(
            f"inputs and targets disagree on sample count: {x.shape[0]} != {t.shape[0]}"
        )
    if hidden_count < 1:
        raise ValueError("hidden_count must be >= 1")
    lam = float(regularization)
    if lam < 0:
        raise ValueError("regularization must be >= 0")

    weights, biases = hidden_parameters(seed, int(hidden_count), x.shape[1])
    h = _features(weights, biases, x)
    gram = h @ h.T
    gram[np.diag_indices_from(gram)] += lam
    try:
        z = cho_solve(cho_factor(gram, lower=True), t)
    except LinAlgError:
        if lam == 0.0:
            raise NumericFailure(
                "hidden Gram matrix is singular with regularization=0; "
                "retrain with a positive regularization"
            ) from None
        # column-pivoted least squares keeps going on badly conditioned systems
        z = lstsq(gram, t, lapack_driver="gelsy")[0]
    out = h.T @ z
    if not np.all(np.isfinite(out)):
        raise NumericFailure("training produced non-finite output weights")

    weights.flags.writeable = False
    biases.flags.writeable = False
    out.flags.writeable = False
    return ElmKernel(
        input_dim=x.shape[1],
        output_dim=t.shape[1],
        hidden_count=int(hidden_count),
        hidden_weights=weights,
        hidden_biases=biases,
        output_weights=out,
        regularization=lam,
        seed=int(seed),
    )


def predict(kernel, x):
    """Evaluate the kernel at a single point, returning shape (output_dim,)."""
    a = np.asarray(x, dtype=np.float64)
    if a.shape != (kernel.input_dim,):
        raise ValueError(
            f"input has shape {a.shape}, kernel expects ({kernel.input_dim},)"
        )
    feats = _features(kernel.hidden_weights, kernel.hidden_biases, a[None, :])
    return (feats @ kernel.output_weights)[0]


def predict_many(kernel, xs):
    """Evaluate the kernel at each row of ``xs``; returns (n, output_dim)."""
    a = np.asarray(xs, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != kernel.input_dim:
        raise ValueError(
            f"inputs have shape {a.shape}, kernel expects (*, {kernel.input_dim})"
        )
    return _features(kernel.hidden_weights, kernel.hidden_biases, a) @ kernel.output_weights


KERNEL_FORMAT_VERSION = 1


def kernel_to_dict(kernel):
    """Serialize to a JSON-ready dict; hidden layer is stored as its seed."""
    return {
        "format_version": KERNEL_FORMAT_VERSION,
        "input_dim": kernel.input_dim,
        "output_dim": kernel.output_dim,
        "hidden_count": kernel.hidden_count,
        "seed": kernel.seed,
        "regularization": kernel.regularization,
        "output_weights": kernel.output_weights.tolist(),
    }


def kernel_from_dict(data):
    """Rebuild a kernel from :func:`kernel_to_dict` output."""
    version = data.get("format_version")
    if version != KERNEL_FORMAT_VERSION:
        raise ValueError(f"unsupported kernel format_version: {version!r}")
    weights, biases = hidden_parameters(
        data["seed"], data["hidden_count"], data["input_dim"]
    )
    out = np.asarray(data["output_weights"], dtype=np.float64)
    if out.shape != (data["hidden_count"], data["output_dim"]):
        raise ValueError("output_weights shape disagrees with declared dimensions")
    weights.flags.writeable = False
    biases.flags.writeable = False
    out.flags.writeable = False
    return ElmKernel(
        input_dim=int(data["input_dim"]),
        output_dim=int(data["output_dim"]),
        hidden_count=int(data["hidden_count"]),
        hidden_weights=weights,
        hidden_biases=biases,
        output_weights=out,
        regularization=float(data["regularization"]),
        seed=int(data["seed"]),
    )
