"""Minimal dense feed-forward networks with manual backprop and Adam.

Everything is float64 and pure: operations return fresh objects, so Params
can be shared read-only across workers. The batched inner kernels live in
the backend module (compiled extension with a numpy fallback); this module
owns shapes, initialisation, the optimiser, serialisation and the
finite-difference oracle used by the gradient checks.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .backend import kernels

ACTIVATIONS = ("tanh", "relu", "identity")
_ACT_CODE = {"identity": 0, "tanh": 1, "relu": 2}


@dataclass(frozen=True)
class NetLayout:
    """Layer sizes plus one activation name per hidden layer.

    The output layer is always identity. ``sizes`` includes the input and
    output widths, so a layout needs at least two entries.
    """

    sizes: tuple[int, ...]
    activations: tuple[str, ...] = ()

    def __post_init__(self):
        sizes = tuple(int(s) for s in self.sizes)
        object.__setattr__(self, "sizes", sizes)
        object.__setattr__(self, "activations", tuple(self.activations))
        if len(sizes) < 2:
            raise ValueError("layout needs at least input and output sizes")
        if any(s < 1 for s in sizes):
            raise ValueError(f"layer sizes must be >= 1, got {sizes}")
        n_hidden = len(sizes) - 2
        if len(self.activations) != n_hidden:
            raise ValueError(
                f"expected {n_hidden} hidden activations, got {len(self.activations)}"
            )
        for act in self.activations:
            if act not in ACTIVATIONS:
                raise ValueError(f"unknown activation {act!r}")

    @classmethod
    def dense(cls, sizes, activation: str = "tanh") -> "NetLayout":
        """Layout with the same activation on every hidden layer."""
        sizes = tuple(int(s) for s in sizes)
        return cls(sizes, (activation,) * max(0, len(sizes) - 2))

    @property
    def n_layers(self) -> int:
        return len(self.sizes) - 1

    @property
    def in_dim(self) -> int:
        return self.sizes[0]

    @property
    def out_dim(self) -> int:
        return self.sizes[-1]

    def act_codes(self) -> np.ndarray:
        """Integer activation code per affine layer; output layer identity."""
        codes = [_ACT_CODE[a] for a in self.activations] + [_ACT_CODE["identity"]]
        return np.asarray(codes, dtype=np.int32)


class Params:
    """Per-layer weight matrices and bias vectors in canonical layer order.

    Treated as immutable once built; updates replace the whole object.
    Gradients reuse this container (``Grad`` below) since they are
    parameter-shaped.
    """

    __slots__ = ("layout", "weights", "biases")

    def __init__(self, layout: NetLayout, weights, biases):
        if len(weights) != layout.n_layers or len(biases) != layout.n_layers:
            raise ValueError("wrong number of layer blocks for layout")
        for i, (w, b) in enumerate(zip(weights, biases)):
            want = (layout.sizes[i], layout.sizes[i + 1])
            if w.shape != want or b.shape != (want[1],):
                raise ValueError(f"layer {i} blocks have shape {w.shape}/{b.shape}, want {want}")
        self.layout = layout
        self.weights = [np.ascontiguousarray(w, dtype=np.float64) for w in weights]
        self.biases = [np.ascontiguousarray(b, dtype=np.float64) for b in biases]

    def copy(self) -> "Params":
        return Params(self.layout, [w.copy() for w in self.weights], [b.copy() for b in self.biases])

    def zeros_like(self) -> "Params":
        return Params(
            self.layout,
            [np.zeros_like(w) for w in self.weights],
            [np.zeros_like(b) for b in self.biases],
        )

    @property
    def n_params(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def blocks(self):
        """Iterate (index, weight, bias) per layer."""
        return enumerate(zip(self.weights, self.biases))

    def is_finite(self) -> bool:
        return all(
            np.isfinite(w).all() and np.isfinite(b).all()
            for w, b in zip(self.weights, self.biases)
        )

    def scaled(self, factor: float) -> "Params":
        return Params(
            self.layout,
            [w * factor for w in self.weights],
            [b * factor for b in self.biases],
        )

    def to_vector(self) -> np.ndarray:
        parts = []
        for w, b in zip(self.weights, self.biases):
            parts.append(w.ravel())
            parts.append(b)
        return np.concatenate(parts)

    @classmethod
    def from_vector(cls, layout: NetLayout, vec: np.ndarray) -> "Params":
        weights, biases, pos = [], [], 0
        for i in range(layout.n_layers):
            p, q = layout.sizes[i], layout.sizes[i + 1]
            weights.append(vec[pos:pos + p * q].reshape(p, q))
            pos += p * q
            biases.append(vec[pos:pos + q])
            pos += q
        if pos != vec.size:
            raise ValueError("vector length does not match layout")
        return cls(layout, weights, biases)

    def allclose(self, other: "Params", rtol: float = 1e-12, atol: float = 0.0) -> bool:
        if self.layout.sizes != other.layout.sizes:
            return False
        return bool(np.allclose(self.to_vector(), other.to_vector(), rtol=rtol, atol=atol))

    def equals(self, other: "Params") -> bool:
        """Bit-exact comparison (canonical order makes this meaningful)."""
        if self.layout.sizes != other.layout.sizes:
            return False
        return bool(np.array_equal(self.to_vector(), other.to_vector()))

    def to_text(self) -> str:
        """Flat text form: a layout header, then one row per matrix and bias."""
        lines = ["layout: " + ",".join(str(s) for s in self.layout.sizes)]
        for w, b in zip(self.weights, self.biases):
            lines.append(" ".join(repr(float(v)) for v in w.ravel()))
            lines.append(" ".join(repr(float(v)) for v in b))
        return "\n".join(lines) + "\n"

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_text())


Grad = Params


def load_params(path, activation: str = "tanh") -> Params:
    """Load Params saved by :meth:`Params.save`.

    The text format stores sizes only, so the hidden activation must be
    supplied (it is recorded in run manifests by the harness).
    """
    with open(path, "r", encoding="utf-8") as fh:
        return params_from_text(fh.read(), activation=activation)


def params_from_text(text: str, activation: str = "tanh") -> Params:
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or not lines[0].startswith("layout:"):
        raise ValueError("missing layout header")
    sizes = tuple(int(tok) for tok in lines[0].split(":", 1)[1].split(","))
    layout = NetLayout.dense(sizes, activation)
    rows = lines[1:]
    if len(rows) != 2 * layout.n_layers:
        raise ValueError(f"expected {2 * layout.n_layers} value rows, got {len(rows)}")
    weights, biases = [], []
    for i in range(layout.n_layers):
        p, q = sizes[i], sizes[i + 1]
        w = np.array(rows[2 * i].split(), dtype=np.float64)
        b = np.array(rows[2 * i + 1].split(), dtype=np.float64)
        if w.size != p * q or b.size != q:
            raise ValueError(f"layer {i} row lengths do not match layout")
        weights.append(w.reshape(p, q))
        biases.append(b)
    return Params(layout, weights, biases)


def init_params(layout: NetLayout, seed: int) -> Params:
    """Uniform fan-in init: W ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)), b = 0."""
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for i in range(layout.n_layers):
        fan_in = layout.sizes[i]
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, layout.sizes[i + 1])))
        biases.append(np.zeros(layout.sizes[i + 1]))
    return Params(layout, weights, biases)


def _as_batch(x, dim: int, name: str):
    arr = np.ascontiguousarray(x, dtype=np.float64)
    if arr.ndim == 1:
        if arr.shape[0] != dim:
            raise ValueError(f"{name} has length {arr.shape[0]}, expected {dim}")
        return arr[None, :], True
    if arr.ndim == 2:
        if arr.shape[1] != dim:
            raise ValueError(f"{name} has width {arr.shape[1]}, expected {dim}")
        return arr, False
    raise ValueError(f"{name} must be a vector or a batch of vectors")


def forward(params: Params, x):
    """Forward pass; returns (output, cache) with cache feeding backward.

    Accepts a single input vector or an (n, in_dim) batch; the output
    matches the input's ndim. The cache holds per-layer post-activations.
    """
    batch, squeeze = _as_batch(x, params.layout.in_dim, "input")
    acts = kernels.mlp_forward(params.weights, params.biases, params.layout.act_codes(), batch)
    out = acts[-1]
    return (out[0] if squeeze else out), acts


def backward(params: Params, cache, output_grad) -> Grad:
    """Gradient of ``output . output_grad`` w.r.t. every parameter."""
    grad_batch, _ = _as_batch(output_grad, params.layout.out_dim, "output_grad")
    if grad_batch.shape[0] != cache[0].shape[0]:
        raise ValueError("output_grad batch size does not match cache")
    d_ws, d_bs = kernels.mlp_backward(
        params.weights, params.layout.act_codes(), cache, grad_batch
    )
    return Params(params.layout, d_ws, d_bs)


@dataclass(frozen=True)
class AdamState:
    """Adam moment accumulators plus hyperparameters; t steps taken so far."""

    m: Params
    v: Params
    t: int = 0
    alpha: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    @classmethod
    def fresh(cls, params: Params, alpha: float = 1e-3, beta1: float = 0.9,
              beta2: float = 0.999, eps: float = 1e-8) -> "AdamState":
        return cls(params.zeros_like(), params.zeros_like(), 0, alpha, beta1, beta2, eps)


def adam_step(state: AdamState, params: Params, grad: Grad):
    """One Adam update with bias correction; returns (new_params, new_state)."""
    for i, (gw, gb) in grad.blocks():
        if not (np.isfinite(gw).all() and np.isfinite(gb).all()):
            raise ValueError(f"non-finite gradient in layer {i}")
    t = state.t + 1
    c1 = 1.0 - state.beta1 ** t
    c2 = 1.0 - state.beta2 ** t
    new_w, new_b, m_w, m_b, v_w, v_b = [], [], [], [], [], []
    for (w, b), (gw, gb), (mw, mb), (vw, vb) in zip(
        zip(params.weights, params.biases),
        zip(grad.weights, grad.biases),
        zip(state.m.weights, state.m.biases),
        zip(state.v.weights, state.v.biases),
    ):
        mw2 = state.beta1 * mw + (1.0 - state.beta1) * gw
        mb2 = state.beta1 * mb + (1.0 - state.beta1) * gb
        vw2 = state.beta2 * vw + (1.0 - state.beta2) * gw * gw
        vb2 = state.beta2 * vb + (1.0 - state.beta2) * gb * gb
        new_w.append(w - state.alpha * (mw2 / c1) / (np.sqrt(vw2 / c2) + state.eps))
        new_b.append(b - state.alpha * (mb2 / c1) / (np.sqrt(vb2 / c2) + state.eps))
        m_w.append(mw2)
        m_b.append(mb2)
        v_w.append(vw2)
        v_b.append(vb2)
    layout = params.layout
    new_state = replace(
        state,
        m=Params(layout, m_w, m_b),
        v=Params(layout, v_w, v_b),
        t=t,
    )
    return Params(layout, new_w, new_b), new_state


def finite_diff_grad(params: Params, loss, eps: float = 1e-5) -> Grad:
    """Central-difference gradient of ``loss(params)`` per coordinate."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    base = params.to_vector()
    out = np.empty_like(base)
    for i in range(base.size):
        hi = base.copy()
        lo = base.copy()
        hi[i] += eps
        lo[i] -= eps
        out[i] = (
            loss(Params.from_vector(params.layout, hi))
            - loss(Params.from_vector(params.layout, lo))
        ) / (2.0 * eps)
    return Params.from_vector(params.layout, out)


def max_relative_gap(a: Params, b: Params) -> float:
    """Infinity-norm relative gap between two parameter-shaped blocks."""
    va, vb = a.to_vector(), b.to_vector()
    scale = max(np.abs(va).max(initial=0.0), np.abs(vb).max(initial=0.0), 1e-12)
    return float(np.abs(va - vb).max(initial=0.0) / scale)
