"""Linear classifier, logistic-regression baseline trainer, save/load."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import TrainingError


@dataclass(frozen=True)
class LinearModel:
    """Weight vector and intercept; decision rule sign(w.x + b), ties -> +1."""

    w: np.ndarray
    b: float
    feature_names: tuple = ()

    def __post_init__(self):
        w = np.asarray(self.w, dtype=float)
        if not np.isfinite(w).all() or not np.isfinite(self.b):
            raise ValueError("model parameters must be finite")
        object.__setattr__(self, "w", w)


@dataclass
class TrainConfig:
    learning_rate: float = 0.1
    max_epochs: int = 2000
    tolerance: float = 1e-8
    l2: float = 0.0
    seed: int = 0

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")
        if self.max_epochs < 1:
            raise ValueError("need at least one epoch")
        if self.l2 < 0:
            raise ValueError("L2 penalty must be non-negative")


def decision_value(m: LinearModel, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.shape[-1] != len(m.w):
        raise ValueError(f"expected {len(m.w)} features, got {x.shape[-1]}")
    return x @ m.w + m.b


def predict(m: LinearModel, X) -> np.ndarray:
    """Predictions in {-1, +1}; decision value >= 0 maps to +1."""
    return np.where(decision_value(m, X) >= 0, 1, -1)


def predict_proba(m: LinearModel, X) -> np.ndarray:
    """Sigmoid of the decision value."""
    d = decision_value(m, X)
    return 1.0 / (1.0 + np.exp(-np.clip(d, -500, 500)))


def _loss_and_grad(w, b, X, y, l2):
    margins = y * (X @ w + b)
    loss = np.logaddexp(0.0, -margins).mean() + 0.5 * l2 * (w @ w)
    # d/dm log(1+exp(-m)) = -sigmoid(-m)
    coeff = -y / (1.0 + np.exp(np.clip(margins, -500, 500)))
    gw = X.T @ coeff / len(y) + l2 * w
    gb = coeff.mean()
    return loss, gw, gb


def train_logistic_baseline(
    X, y, cfg: TrainConfig | None = None, feature_names=(), loss_history: list | None = None
) -> LinearModel:
    """Full-batch gradient descent on mean log-loss over {-1,+1} labels.

    Step size decays as learning_rate / sqrt(epoch); stops when the loss
    delta falls below cfg.tolerance or the epoch cap is hit.  Pass a list as
    `loss_history` to record the loss observed at the start of each epoch.
    """
    cfg = cfg or TrainConfig()
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.zeros(X.shape[1])
    b = 0.0
    prev_loss = np.inf
    for epoch in range(1, cfg.max_epochs + 1):
        loss, gw, gb = _loss_and_grad(w, b, X, y, cfg.l2)
        if not np.isfinite(loss):
            raise TrainingError(f"non-finite loss at epoch {epoch}; reduce the learning rate")
        if loss_history is not None:
            loss_history.append(float(loss))
        if abs(prev_loss - loss) < cfg.tolerance:
            break
        prev_loss = loss
        lr = cfg.learning_rate / np.sqrt(epoch)
        w = w - lr * gw
        b = b - lr * gb
    return LinearModel(w=w, b=b, feature_names=tuple(feature_names))


def logistic_loss(m: LinearModel, X, y, l2: float = 0.0) -> float:
    loss, _, _ = _loss_and_grad(m.w, m.b, np.asarray(X, float), np.asarray(y, float), l2)
    return float(loss)


def gradient_check(m: LinearModel, X, y, l2: float = 0.0, h: float = 1e-5) -> float:
    """Max relative error between the analytic gradient and central differences."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    _, gw, gb = _loss_and_grad(m.w, m.b, X, y, l2)
    analytic = np.append(gw, gb)
    theta = np.append(m.w, m.b)

    def loss_at(t):
        l, _, _ = _loss_and_grad(t[:-1], t[-1], X, y, l2)
        return l

    numeric = np.empty_like(theta)
    for i in range(len(theta)):
        up, dn = theta.copy(), theta.copy()
        up[i] += h
        dn[i] -= h
        numeric[i] = (loss_at(up) - loss_at(dn)) / (2 * h)
    denom = np.maximum(np.maximum(np.abs(analytic), np.abs(numeric)), 1.0)
    return float(np.max(np.abs(analytic - numeric) / denom))


def save_model(m: LinearModel, path):
    record = {
        "feature_names": list(m.feature_names),
        "w": m.w.tolist(),
        "b": float(m.b),
    }
    Path(path).write_text(json.dumps(record, indent=2))


def load_model(path) -> LinearModel:
    record = json.loads(Path(path).read_text())
    return LinearModel(
        w=np.asarray(record["w"], dtype=float),
        b=float(record["b"]),
        feature_names=tuple(record.get("feature_names", ())),
    )
