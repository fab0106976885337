"""Minimal MLP with exact reverse-mode gradients and Adam.

Everything is float64 and deterministic: matrix products run through the
selected kernel backend (fixed summation order), and no parallel reductions
are used. One network class serves all four roles (policies, critic,
discriminator); outputs are raw values or logits, activations are ReLU on
hidden layers and identity on the output layer.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import _kernels as K
from .errors import ShapeError, StateError

CHECKPOINT_VERSION = 1


def glorot_uniform(rng: np.random.Generator, n_in: int, n_out: int) -> np.ndarray:
    bound = np.sqrt(6.0 / (n_in + n_out))
    return rng.uniform(-bound, bound, size=(n_in, n_out))


@dataclass
class Tape:
    """Recorded activations of one forward pass, enough to backprop."""

    inputs: list[np.ndarray]  # layer inputs, inputs[0] is X
    masks: list[np.ndarray]  # ReLU masks per hidden layer (float 0/1)
    output: np.ndarray


class MLP:
    """Fully connected net: affine layers, ReLU hidden activations."""

    def __init__(self, layer_sizes, rng: np.random.Generator | None = None):
        layer_sizes = [int(s) for s in layer_sizes]
        if len(layer_sizes) < 2 or any(s <= 0 for s in layer_sizes):
            raise ShapeError(f"bad layer sizes {layer_sizes}")
        self.layer_sizes = layer_sizes
        if rng is None:
            rng = np.random.default_rng(0)
        self.weights = [
            glorot_uniform(rng, a, b)
            for a, b in zip(layer_sizes[:-1], layer_sizes[1:])
        ]
        self.biases = [np.zeros(b) for b in layer_sizes[1:]]
        self._tape: Tape | None = None

    @property
    def n_in(self) -> int:
        return self.layer_sizes[0]

    @property
    def n_out(self) -> int:
        return self.layer_sizes[-1]

    def copy(self) -> "MLP":
        dup = MLP.__new__(MLP)
        dup.layer_sizes = list(self.layer_sizes)
        dup.weights = [w.copy() for w in self.weights]
        dup.biases = [b.copy() for b in self.biases]
        dup._tape = None
        return dup

    # -- forward / backward -------------------------------------------------

    def _as_batch(self, x) -> tuple[np.ndarray, bool]:
        x = np.asarray(x, dtype=np.float64)
        single = x.ndim == 1
        if single:
            x = x[None, :]
        if x.ndim != 2 or x.shape[1] != self.n_in:
            raise ShapeError(
                f"input has shape {x.shape}, network expects (*, {self.n_in})"
            )
        return np.ascontiguousarray(x), single

    def forward(self, x, record: bool = False):
        """Evaluate the net on a vector or a batch of rows.

        With record=True the activations are kept for a later backward().
        """
        h, single = self._as_batch(x)
        inputs = [h]
        masks = []
        last = len(self.weights) - 1
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            z = K.matmul(h, w) + b
            if i < last:
                m = (z > 0.0).astype(np.float64)
                h = z * m
                masks.append(m)
                inputs.append(h)
            else:
                h = z
        if record:
            self._tape = Tape(inputs=inputs, masks=masks, output=h)
        return h[0] if single else h

    def forward_tape(self, x) -> tuple[np.ndarray, Tape]:
        """Forward returning an explicit tape (safe to interleave passes)."""
        h, _ = self._as_batch(x)
        out = self.forward(h, record=True)
        tape, self._tape = self._tape, None
        return out, tape

    def backward_tape(self, tape: Tape, d_out) -> list[tuple[np.ndarray, np.ndarray]]:
        """Exact gradients of sum_i <d_out[i], output[i]> w.r.t. parameters.

        d_out carries any loss scaling (e.g. 1/B for a batch mean), so the
        returned [(dW, db), ...] are gradients of the scalar loss itself.
        """
        d = np.ascontiguousarray(d_out, dtype=np.float64)
        if d.ndim == 1:
            d = d[None, :]
        if d.shape != tape.output.shape:
            raise ShapeError(
                f"output grad shape {d.shape} != output shape {tape.output.shape}"
            )
        grads: list[tuple[np.ndarray, np.ndarray]] = [None] * len(self.weights)
        for i in range(len(self.weights) - 1, -1, -1):
            dw = K.matmul_tn(tape.inputs[i], d)
            db = d.sum(axis=0)
            grads[i] = (dw, db)
            if i > 0:
                d = K.matmul_nt(d, self.weights[i]) * tape.masks[i - 1]
        return grads

    def backward(self, d_out):
        """Backward through the last recorded forward (record=True)."""
        if self._tape is None:
            raise StateError("backward() without a recorded forward pass")
        tape, self._tape = self._tape, None
        return self.backward_tape(tape, d_out)

    def input_gradient(self, tape: Tape) -> np.ndarray:
        """Per-row gradient of the scalar output w.r.t. the input row."""
        if self.n_out != 1:
            raise ShapeError("input_gradient requires a scalar-output net")
        B = tape.output.shape[0]
        q = np.ones((B, 1))
        for i in range(len(self.weights) - 1, 0, -1):
            q = K.matmul_nt(q, self.weights[i]) * tape.masks[i - 1]
        return K.matmul_nt(q, self.weights[0])

    def grad_penalty(self, tape: Tape, cont_mask: np.ndarray):
        """Mean squared norm of d(output)/d(selected input coords), with its
        exact parameter gradients (ReLU masks treated as locally constant).

        Returns (penalty, grads) where grads aligns with backward_tape output.
        Bias gradients are zero: biases only move activation thresholds.
        """
        if self.n_out != 1:
            raise ShapeError("grad_penalty requires a scalar-output net")
        B = tape.output.shape[0]
        L = len(self.weights)
        # Input-gradient chain, keeping intermediates.
        qs: list[np.ndarray] = [None] * (L + 1)
        qs[L] = np.ones((B, 1))
        rs: list[np.ndarray] = [None] * L  # rs[i] = d out / d inputs[i]
        for i in range(L - 1, -1, -1):
            r = K.matmul_nt(qs[i + 1], self.weights[i])
            rs[i] = r
            if i > 0:
                qs[i] = r * tape.masks[i - 1]
        sel = rs[0] * cont_mask
        penalty = float(np.sum(sel * sel) / B)
        # Adjoint pass through the (piecewise linear) gradient chain.
        lam_r = (2.0 / B) * sel
        grads = []
        for i in range(L):
            dw = K.matmul_tn(lam_r, qs[i + 1])
            grads.append((dw, np.zeros(self.weights[i].shape[1])))
            if i < L - 1:
                lam_q = K.matmul(lam_r, self.weights[i])
                lam_r = lam_q * tape.masks[i]
        return penalty, grads

    # -- parameter plumbing -------------------------------------------------

    def params(self) -> list[np.ndarray]:
        out = []
        for w, b in zip(self.weights, self.biases):
            out.append(w)
            out.append(b)
        return out

    def get_flat(self) -> np.ndarray:
        return np.concatenate([p.ravel() for p in self.params()])

    def set_flat(self, flat: np.ndarray) -> None:
        i = 0
        for p in self.params():
            p.flat[:] = flat[i : i + p.size]
            i += p.size
        if i != flat.size:
            raise ShapeError("flat parameter vector has wrong length")


def zero_grads_like(net: MLP):
    return [
        (np.zeros_like(w), np.zeros_like(b))
        for w, b in zip(net.weights, net.biases)
    ]


def add_grads(total, extra, scale: float = 1.0):
    """total += scale * extra, layerwise; returns total."""
    for (tw, tb), (ew, eb) in zip(total, extra):
        tw += scale * ew
        tb += scale * eb
    return total


def flat_grads(grads) -> np.ndarray:
    parts = []
    for dw, db in grads:
        parts.append(dw.ravel())
        parts.append(db.ravel())
    return np.concatenate(parts)


# -- Adam ---------------------------------------------------------------------


@dataclass
class AdamState:
    """Moment accumulators for one network."""

    lr: float
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-7
    step: int = 0
    m: list[np.ndarray] = field(default_factory=list)
    v: list[np.ndarray] = field(default_factory=list)

    @classmethod
    def for_net(cls, net: MLP, lr: float, beta1=0.9, beta2=0.999, eps=1e-7):
        st = cls(lr=lr, beta1=beta1, beta2=beta2, eps=eps)
        st.m = [np.zeros_like(p) for p in net.params()]
        st.v = [np.zeros_like(p) for p in net.params()]
        return st


def adam_step(net: MLP, grads, state: AdamState) -> None:
    """One bias-corrected Adam update, in place."""
    params = net.params()
    gs = []
    for dw, db in grads:
        gs.append(dw)
        gs.append(db)
    if len(gs) != len(params):
        raise ShapeError("gradient structure does not match network")
    for g, p in zip(gs, params):
        if g.shape != p.shape:
            raise ShapeError(f"gradient shape {g.shape} != param shape {p.shape}")
    state.step += 1
    for p, g, m, v in zip(params, gs, state.m, state.v):
        K.adam_step(p, g, m, v, state.step, state.lr, state.beta1, state.beta2, state.eps)


# -- categorical heads --------------------------------------------------------


def log_softmax(logits: np.ndarray) -> np.ndarray:
    """Row-wise log softmax with max subtraction."""
    z = np.asarray(logits, dtype=np.float64)
    single = z.ndim == 1
    if single:
        z = z[None, :]
    z = z - z.max(axis=1, keepdims=True)
    out = z - np.log(np.exp(z).sum(axis=1, keepdims=True))
    return out[0] if single else out


def softmax(logits: np.ndarray) -> np.ndarray:
    return np.exp(log_softmax(logits))


def logprob_at(logits: np.ndarray, index) -> float | np.ndarray:
    """log softmax(logits)[index]; index may be a vector for batched rows."""
    lp = log_softmax(logits)
    if lp.ndim == 1:
        idx = int(index)
        if not 0 <= idx < lp.shape[0]:
            raise ShapeError(f"index {idx} out of range for {lp.shape[0]} logits")
        return float(lp[idx])
    idx = np.asarray(index, dtype=np.int64)
    if idx.min() < 0 or idx.max() >= lp.shape[1]:
        raise ShapeError("index out of range")
    return lp[np.arange(lp.shape[0]), idx]


# -- checkpoint files ---------------------------------------------------------


def save_nets(path, nets: dict[str, MLP], extra: dict | None = None) -> None:
    """Write named networks to one npz container (bit-exact round trip)."""
    payload: dict[str, np.ndarray] = {
        "format_version": np.int64(CHECKPOINT_VERSION)
    }
    names = sorted(nets)
    payload["net_names"] = np.array(names)
    for name, net in ((n, nets[n]) for n in names):
        payload[f"{name}/layer_sizes"] = np.asarray(net.layer_sizes, dtype=np.int64)
        for i, (w, b) in enumerate(zip(net.weights, net.biases)):
            payload[f"{name}/w{i}"] = w
            payload[f"{name}/b{i}"] = b
    for key, val in (extra or {}).items():
        payload[f"extra/{key}"] = np.asarray(val)
    with open(path, "wb") as fh:  # plain handle: savez must not append ".npz"
        np.savez(fh, **payload)


def load_nets(path) -> tuple[dict[str, MLP], dict[str, np.ndarray]]:
    """Inverse of save_nets. Raises DataError on version mismatch."""
    import zipfile

    from .errors import DataError

    try:
        archive = np.load(path, allow_pickle=False)
    except (OSError, ValueError, zipfile.BadZipFile) as exc:
        raise DataError(f"cannot read checkpoint {path}: {exc}") from exc
    with archive as z:
        if "format_version" not in z:
            raise DataError(f"{path}: not a network checkpoint")
        version = int(z["format_version"])
        if version != CHECKPOINT_VERSION:
            raise DataError(
                f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}"
            )
        nets: dict[str, MLP] = {}
        for name in z["net_names"]:
            name = str(name)
            sizes = [int(s) for s in z[f"{name}/layer_sizes"]]
            net = MLP.__new__(MLP)
            net.layer_sizes = sizes
            net.weights = []
            net.biases = []
            net._tape = None
            for i in range(len(sizes) - 1):
                net.weights.append(z[f"{name}/w{i}"].copy())
                net.biases.append(z[f"{name}/b{i}"].copy())
            nets[name] = net
        extra = {
            key[len("extra/"):]: z[key].copy()
            for key in z.files
            if key.startswith("extra/")
        }
    return nets, extra
