"""Likelihood-derived losses over Bellman errors and the softmax policy map.

``l_loss`` is the negative mean Logistic(0, sigma) log-likelihood of the
errors with the scale-normalization constant dropped:
mean(t + 2*log(1 + exp(-t))) at t = err/sigma.  It is an even, convex
function of each error, minimized at zero with value log 4, with gradient
bounded by 1/(N*sigma).  Near zero it tracks log4 + mse_loss/2 up to a
quartic remainder.  ``mse_loss`` keeps the matching Normal convention
mean(err^2 / 2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

LN4 = math.log(4.0)


@dataclass(frozen=True)
class LossConfig:
    """Scale hyperparameter of the Logistic likelihood loss (fixed, not learned)."""

    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError(f"sigma must be positive, got {self.sigma}")


def _as_errors(errors) -> np.ndarray:
    arr = np.asarray(errors, dtype=float)
    if arr.ndim != 1 or arr.size == 0:
        raise DomainError("errors must be a non-empty 1-D vector")
    return arr


def mse_loss(errors) -> float:
    """mean(err^2) / 2."""
    arr = _as_errors(errors)
    return float(np.mean(0.5 * arr * arr))


def _lloss_terms(t: np.ndarray) -> np.ndarray:
    # t + 2*log(1+exp(-t)) is even in t; evaluating at |t| avoids overflow
    # for large negative t and keeps the large-|t| asymptote exact.
    at = np.abs(t)
    return at + 2.0 * np.log1p(np.exp(-at))


def l_loss(errors, cfg: LossConfig = LossConfig()) -> float:
    """mean(err/sigma + 2*log(1 + exp(-err/sigma))), computed stably."""
    arr = _as_errors(errors)
    return float(np.mean(_lloss_terms(arr / cfg.sigma)))


def l_loss_grad(errors, cfg: LossConfig = LossConfig()) -> np.ndarray:
    """Per-element gradient of l_loss: tanh(err/(2*sigma)) / (N*sigma).

    Bounded by 1/(N*sigma) in magnitude, unlike the mse_loss gradient.
    """
    arr = _as_errors(errors)
    return np.tanh(arr / (2.0 * cfg.sigma)) / (arr.size * cfg.sigma)


def taylor_gap(t: float) -> float:
    """|l_loss term - (log4 + t^2/4)| at a single standardized error t.

    The cubic term of the expansion vanishes (even function); the leading
    remainder is t^4/96, so gap/t^4 stays below 1/96 + margin near zero.
    """
    term = float(_lloss_terms(np.array([float(t)]))[0])
    return abs(term - (LN4 + 0.25 * t * t))


def softmax_policy(q_row, mu_row, zeta: float) -> np.ndarray:
    """Reference-weighted softmax  mu_a * exp(q_a/zeta) / sum_b mu_b * exp(q_b/zeta).

    Max-subtraction keeps exp in range; entries with mu = 0 keep zero mass.
    """
    q = np.asarray(q_row, dtype=float)
    mu = np.asarray(mu_row, dtype=float)
    if q.shape != mu.shape or q.ndim != 1 or q.size == 0:
        raise DomainError("q_row and mu_row must be matching non-empty 1-D vectors")
    if not zeta > 0:
        raise DomainError(f"zeta must be positive, got {zeta}")
    if np.any(mu < 0):
        raise DomainError("mu_row must be non-negative")
    total = float(np.sum(mu))
    if total == 0.0:
        raise DomainError("mu_row must have positive total mass")
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"mu_row must sum to 1, got {total}")
    scaled = q / zeta
    weights = mu * np.exp(scaled - np.max(scaled[mu > 0]))
    return weights / np.sum(weights)
