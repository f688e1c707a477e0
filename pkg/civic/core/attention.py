"""Scaled dot-product self-attention and its analytic derivative with respect to the token embeddings."""

from pathlib import Path

import numpy as np
from pydantic import BaseModel, validator

from .exceptions import AttentionShapeError, ConfigurationError
from .utility import load_json


def _as_matrix(value, name: str) -> np.ndarray:
    matrix = np.asarray(value, dtype=float)
    if matrix.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix")
    if not np.all(np.isfinite(matrix)):
        raise ValueError(f"{name} must be finite")
    return matrix


class HeadParams(BaseModel):
    """Projection matrices of one head: W_q, W_k are d_model x d_k and W_v is d_model x d_v."""

    W_q: np.ndarray
    W_k: np.ndarray
    W_v: np.ndarray

    class Config:
        arbitrary_types_allowed = True
        allow_mutation = False

    @validator("W_q", "W_k", "W_v", pre=True)
    def convert_to_matrix(cls, v, field):
        return _as_matrix(v, field.name)

    @validator("W_v")
    def check_head_shapes(cls, v, values):
        if "W_q" not in values or "W_k" not in values:
            return v
        W_q, W_k = values["W_q"], values["W_k"]
        if W_q.shape != W_k.shape:
            raise ValueError("W_q and W_k must have the same shape")
        if v.shape[0] != W_q.shape[0]:
            raise ValueError("W_v must have d_model rows like W_q and W_k")
        if W_q.shape[1] < 1:
            raise ValueError("d_k must be at least 1")
        return v

    @property
    def d_model(self) -> int:
        return self.W_q.shape[0]

    @property
    def d_k(self) -> int:
        return self.W_q.shape[1]

    @property
    def d_v(self) -> int:
        return self.W_v.shape[1]


class AttentionParams(BaseModel):
    """Per-head parameters; every head shares d_model, d_k and d_v."""

    heads: list[HeadParams]

    class Config:
        allow_mutation = False

    @validator("heads")
    def check_consistent_heads(cls, v):
        if not v:
            raise ValueError("at least one head is required")
        shapes = {(h.d_model, h.d_k, h.d_v) for h in v}
        if len(shapes) > 1:
            raise ValueError("all heads must share d_model, d_k and d_v")
        return v

    @property
    def n_heads(self) -> int:
        return len(self.heads)

    @property
    def d_model(self) -> int:
        return self.heads[0].d_model


def _check_sequence(Y: np.ndarray, d_model: int) -> np.ndarray:
    Y = np.asarray(Y, dtype=float)
    if Y.ndim != 2 or Y.shape[0] < 1:
        raise AttentionShapeError("Y must be an n x d_model matrix with n >= 1")
    if Y.shape[1] != d_model:
        raise AttentionShapeError(
            f"Y has {Y.shape[1]} columns but the projections expect d_model={d_model}"
        )
    return Y


def project_qkv(
    Y: np.ndarray, params: HeadParams
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Q = Y W_q, K = Y W_k, V = Y W_v."""
    Y = _check_sequence(Y, params.d_model)
    return Y @ params.W_q, Y @ params.W_k, Y @ params.W_v


def softmax_rows(logits: np.ndarray) -> np.ndarray:
    """Row-wise softmax with the row maximum subtracted first."""
    shifted = logits - logits.max(axis=1, keepdims=True)
    exponentials = np.exp(shifted)
    return exponentials / exponentials.sum(axis=1, keepdims=True)


def attention_weights(Q: np.ndarray, K: np.ndarray, d_k: int) -> np.ndarray:
    """
    Row-stochastic n x n attention matrix.

    Row i is the softmax over j of (Q_i . K_j) / sqrt(d_k).
    """
    if d_k < 1:
        raise AttentionShapeError("d_k must be at least 1")
    Q, K = np.atleast_2d(Q), np.atleast_2d(K)
    if Q.shape[1] != d_k or K.shape[1] != d_k:
        raise AttentionShapeError(f"Q and K must both have d_k={d_k} columns")
    if Q.shape[0] != K.shape[0]:
        raise AttentionShapeError("Q and K must have the same number of rows")
    return softmax_rows(Q @ K.T / np.sqrt(d_k))


def attention_output(weights: np.ndarray, V: np.ndarray) -> np.ndarray:
    """Output_i = sum_j weights[i, j] V_j."""
    weights, V = np.atleast_2d(weights), np.atleast_2d(V)
    if weights.shape[0] != weights.shape[1] or weights.shape[1] != V.shape[0]:
        raise AttentionShapeError(
            f"weights {weights.shape} do not conform with V {V.shape}"
        )
    return weights @ V


def head_weights(Y: np.ndarray, params: AttentionParams) -> list[np.ndarray]:
    """The attention matrix of every head, in head order."""
    matrices = []
    for head in params.heads:
        Q, K, _ = project_qkv(Y, head)
        matrices.append(attention_weights(Q, K, head.d_k))
    return matrices


def multi_head(Y: np.ndarray, params: AttentionParams) -> np.ndarray:
    """Concatenates the per-head attention outputs along the feature axis; shape n x (heads * d_v)."""
    outputs = []
    for head in params.heads:
        Q, K, V = project_qkv(Y, head)
        outputs.append(attention_output(attention_weights(Q, K, head.d_k), V))
    return np.concatenate(outputs, axis=1)


def multi_head_jvp(
    Y: np.ndarray, dY: np.ndarray, params: AttentionParams
) -> np.ndarray:
    """
    Directional derivative of `multi_head` at Y along dY.

    Per head, with S = Q K^T / sqrt(d_k) and A = softmax(S):
    dS = (dQ K^T + Q dK^T) / sqrt(d_k), dA = A * (dS - rowsum(A * dS)), dO = dA V + A dV.
    """
    Y = _check_sequence(Y, params.d_model)
    dY = np.asarray(dY, dtype=float)
    if dY.shape != Y.shape:
        raise AttentionShapeError("dY must have the same shape as Y")

    blocks = []
    for head in params.heads:
        Q, K, V = Y @ head.W_q, Y @ head.W_k, Y @ head.W_v
        dQ, dK, dV = dY @ head.W_q, dY @ head.W_k, dY @ head.W_v
        scale = np.sqrt(head.d_k)
        A = softmax_rows(Q @ K.T / scale)
        dS = (dQ @ K.T + Q @ dK.T) / scale
        dA = A * (dS - (A * dS).sum(axis=1, keepdims=True))
        blocks.append(dA @ V + A @ dV)
    return np.concatenate(blocks, axis=1)


def multi_head_jacobian(Y: np.ndarray, params: AttentionParams) -> np.ndarray:
    """
    Full Jacobian of `multi_head` with respect to Y.

    J[i, c, t, m] is the derivative of output entry (i, c) by Y[t, m]; shape n x (heads * d_v) x n x d_model.
    """
    Y = _check_sequence(Y, params.d_model)
    n, d_model = Y.shape
    out_width = params.n_heads * params.heads[0].d_v
    jacobian = np.zeros((n, out_width, n, d_model))
    for t in range(n):
        for m in range(d_model):
            direction = np.zeros_like(Y)
            direction[t, m] = 1.0
            jacobian[:, :, t, m] = multi_head_jvp(Y, direction, params)
    return jacobian


def load_attention_input(path: Path) -> tuple[np.ndarray, AttentionParams]:
    """
    Reads a JSON document {"Y": [[...]], "heads": [{"W_q": ..., "W_k": ..., "W_v": ...}, ...]}.
    """
    path = Path(path)
    if not path.is_file():
        raise ConfigurationError(f"{path}: not found")
    document = load_json(path)
    if not isinstance(document, dict) or "Y" not in document:
        raise ConfigurationError(f"{path}: expected an object with 'Y' and 'heads'")
    try:
        params = AttentionParams(
            heads=[HeadParams(**head) for head in document.get("heads", [])]
        )
        Y = _as_matrix(document["Y"], "Y")
    except (TypeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: {exc}") from exc
    return _check_sequence(Y, params.d_model), params
