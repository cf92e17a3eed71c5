"""Bootstrap estimates for quantities derived from homodyne samples."""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Estimate:
    value: float
    stderr: float = 0.0

    def to_dict(self):
        value = self.value
        if isinstance(value, complex):
            return {"re": value.real, "im": value.imag, "stderr": self.stderr}
        return {"value": value, "stderr": self.stderr}


def group_seed(seed: int, *keys: float) -> np.random.SeedSequence:
    """Deterministic per-group stream; phases enter as nano-radian integers."""
    entropy = [int(seed) % 2 ** 32]
    for key in keys:
        entropy.append(int(round(float(key) * 1e9)) % 2 ** 32)
    return np.random.SeedSequence(entropy)


def replicate_power_sums(x: np.ndarray, max_order: int, n_boot: int, seed_sequence) -> np.ndarray:
    '''
    Raw moments of ``n_boot`` bootstrap resamples of ``x``.

    The same resample indices serve every order, so moments of one group
    stay jointly consistent inside a replicate.

    :param x: samples, shape ``(n,)`` or ``(n, 2)`` for paired records
    :return: array ``(n_boot, max_order + 1)`` or ``(n_boot, max_order + 1, max_order + 1)``
    '''
    rng = np.random.default_rng(seed_sequence)
    n = x.shape[0]
    paired = x.ndim == 2
    shape = (n_boot,) + ((max_order + 1,) * (2 if paired else 1))
    out = np.empty(shape)
    for b in range(n_boot):
        resample = x[rng.integers(0, n, n)]
        out[b] = power_means(resample, max_order)
    return out


def power_means(x: np.ndarray, max_order: int) -> np.ndarray:
    """Plug-in raw moments ``mean(x^k)`` (or ``mean(x1^a x2^b)``) up to ``max_order``."""
    if x.ndim == 1:
        means = np.empty(max_order + 1)
        power = np.ones_like(x)
        for k in range(max_order + 1):
            means[k] = power.mean()
            power = power * x
        return means
    first = np.ones((max_order + 1, x.shape[0]))
    second = np.ones((max_order + 1, x.shape[0]))
    for k in range(1, max_order + 1):
        first[k] = first[k - 1] * x[:, 0]
        second[k] = second[k - 1] * x[:, 1]
    return first @ second.T / x.shape[0]


def estimate(fn: Callable, obj) -> Estimate:
    '''
    Evaluate ``fn`` on ``obj`` and on each of ``obj.replicates()``.

    The standard error is the spread of the replicate values (0 for
    analytic objects, which have no replicates). Complex results use the
    modulus of the replicate deviations.
    '''
    value = fn(obj)
    replicates: Sequence = obj.replicates()
    if not replicates:
        return Estimate(value, 0.0)
    values = np.array([fn(r) for r in replicates])
    if np.iscomplexobj(values):
        stderr = float(np.sqrt(np.var(values.real, ddof=1) + np.var(values.imag, ddof=1)))
    else:
        stderr = float(np.std(values, ddof=1))
    return Estimate(value, stderr)


def estimate_array(fn: Callable, obj):
    """Vector version of ``estimate``: returns ``(values, stderr)`` arrays."""
    values = np.asarray(fn(obj))
    replicates = obj.replicates()
    if not replicates:
        return values, np.zeros(values.shape)
    stacked = np.array([np.asarray(fn(r)) for r in replicates])
    if np.iscomplexobj(stacked):
        stderr = np.sqrt(np.var(stacked.real, axis=0, ddof=1) + np.var(stacked.imag, axis=0, ddof=1))
    else:
        stderr = np.std(stacked, axis=0, ddof=1)
    return values, stderr
