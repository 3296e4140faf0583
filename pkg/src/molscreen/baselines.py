"""Compound-only baseline: logistic regression on hashed fingerprints.

The baseline deliberately ignores targets: it scores a compound's
active-vs-decoy status from its fingerprint alone. On benchmarks whose
decoys are compositionally distinct from actives it performs embarrassingly
well, which is exactly the dataset bias it exists to expose; on benchmarks
where the label genuinely depends on the (compound, target) pair it cannot
beat chance by much.

The model is fit by full-batch gradient descent (Adam) on the mean
cross-entropy plus an L2 penalty on the weights (bias excluded), starting
from zeros, so a fit is deterministic.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin

from .ecfp import EcfpConfig, ecfp
from .errors import DegenerateLabels
from .evaluation import auc
from .io import PairSample, ScreeningDataset
from .predictor import sigmoid, softplus
from .validation import check_binary_labels, check_matrix


class CompoundOnlyLogisticRegression(ClassifierMixin, BaseEstimator):
    """L2-regularized logistic regression fit by full-batch Adam.

    Parameters
    ----------
    l2 : float, default=1e-4
        Weight penalty coefficient (the bias is not penalized).
    learning_rate : float, default=0.05
    iterations : int, default=300
    random_state : int, default=0
        Kept for interface symmetry; the zero initialization makes the fit
        deterministic regardless.
    """

    def __init__(
        self,
        l2: float = 1e-4,
        learning_rate: float = 0.05,
        iterations: int = 300,
        random_state: int = 0,
    ):
        self.l2 = l2
        self.learning_rate = learning_rate
        self.iterations = iterations
        self.random_state = random_state

    def fit(self, X, y):
        X = check_matrix("X", X)
        y = check_binary_labels(y)
        if y.sum() == 0 or y.sum() == len(y):
            raise DegenerateLabels("logistic regression needs both classes")
        n, d = X.shape
        w = np.zeros(d)
        b = 0.0
        m_w = np.zeros(d)
        v_w = np.zeros(d)
        m_b = v_b = 0.0
        beta1, beta2, eps = 0.9, 0.999, 1e-8
        target = y.astype(np.float64)
        for t in range(1, self.iterations + 1):
            p = sigmoid(X @ w + b)
            residual = (p - target) / n
            g_w = X.T @ residual + self.l2 * w
            g_b = float(residual.sum())
            m_w = beta1 * m_w + (1 - beta1) * g_w
            v_w = beta2 * v_w + (1 - beta2) * g_w * g_w
            m_b = beta1 * m_b + (1 - beta1) * g_b
            v_b = beta2 * v_b + (1 - beta2) * g_b * g_b
            bias1 = 1 - beta1**t
            bias2 = 1 - beta2**t
            w -= self.learning_rate * (m_w / bias1) / (np.sqrt(v_w / bias2) + eps)
            b -= self.learning_rate * (m_b / bias1) / (np.sqrt(v_b / bias2) + eps)
        self.coef_ = w
        self.intercept_ = b
        self.n_features_in_ = d
        return self

    def decision_function(self, X) -> np.ndarray:
        X = check_matrix("X", X, n_columns=self.n_features_in_)
        return X @ self.coef_ + self.intercept_

    def predict_proba(self, X) -> np.ndarray:
        p = sigmoid(self.decision_function(X))
        return np.column_stack([1.0 - p, p])

    def predict(self, X) -> np.ndarray:
        return (self.decision_function(X) >= 0.0).astype(np.int64)

    def log_loss(self, X, y) -> float:
        """Mean cross-entropy plus the L2 penalty (the trained objective)."""
        z = self.decision_function(X)
        y = check_binary_labels(y).astype(np.float64)
        ce = float(np.mean(softplus(z) - y * z))
        return ce + 0.5 * self.l2 * float(self.coef_ @ self.coef_)


def train_logreg_compound_only(
    fingerprints,
    labels,
    l2: float = 1e-4,
    learning_rate: float = 0.05,
    iterations: int = 300,
    random_state: int = 0,
) -> tuple[CompoundOnlyLogisticRegression, float]:
    """Fit the compound-only baseline and report its training AUC."""
    model = CompoundOnlyLogisticRegression(
        l2=l2,
        learning_rate=learning_rate,
        iterations=iterations,
        random_state=random_state,
    ).fit(fingerprints, labels)
    training_auc = auc(model.decision_function(np.asarray(fingerprints, dtype=np.float64)), labels)
    return model, training_auc


def compound_rows(
    dataset: ScreeningDataset,
    samples: list[PairSample],
    config: EcfpConfig = EcfpConfig(),
) -> tuple[np.ndarray, np.ndarray, list[str]]:
    """Design matrix for the baseline: one fingerprint row per labeled pair.

    The same compound contributes one row per pair it appears in, mirroring
    per-target screening sets. Returns (X, labels, target ids).
    """
    distinct: dict[str, np.ndarray] = {}
    rows = np.zeros((len(samples), config.width), dtype=np.float64)
    for i, sample in enumerate(samples):
        values = distinct.get(sample.ligand_id)
        if values is None:
            values = ecfp(dataset.compound(sample.ligand_id), config).values
            distinct[sample.ligand_id] = values
        rows[i] = values
    labels = np.array([s.label for s in samples], dtype=np.int64)
    targets = [s.pocket_id for s in samples]
    return rows, labels, targets
