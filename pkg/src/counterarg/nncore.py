"""Small dense-tensor library with reverse-mode differentiation.

Everything is float64 numpy underneath. Each op records its parents and a
closure that pushes the output gradient back to them; ``backward`` walks the
recorded graph in reverse topological order. Broadcasting is limited to
matrix-vector products and bias addition.
"""

import contextlib
import json
import math
import os
import struct

import numpy as np

from .errors import InputError, ShapeError

_GRAD_ENABLED = True


@contextlib.contextmanager
def no_grad():
    """Build no graph inside the block (inference)."""
    global _GRAD_ENABLED
    prev = _GRAD_ENABLED
    _GRAD_ENABLED = False
    try:
        yield
    finally:
        _GRAD_ENABLED = prev


class Tensor:
    __slots__ = ("data", "grad", "requires_grad", "_parents", "_backward", "name")

    def __init__(self, data, requires_grad=False, name=None):
        self.data = np.asarray(data, dtype=np.float64)
        self.grad = None
        self.requires_grad = requires_grad
        self._parents = ()
        self._backward = None
        self.name = name

    @property
    def shape(self):
        return self.data.shape

    def __len__(self):
        return self.data.shape[0]

    def __repr__(self):
        label = f" {self.name}" if self.name else ""
        return f"<Tensor{label} shape={self.shape}>"

    def item(self):
        return float(self.data)

    def numpy(self):
        return self.data

    def zero_grad(self):
        self.grad = None

    # operator sugar
    def __add__(self, other):
        return add(self, other)

    def __sub__(self, other):
        return sub(self, other)

    def __mul__(self, other):
        return mul(self, other)

    def __neg__(self):
        return neg(self)

    def __matmul__(self, other):
        return matmul(self, other)

    def __getitem__(self, idx):
        return getitem(self, idx)


def tensor(data, requires_grad=False, name=None):
    return Tensor(data, requires_grad, name)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def _result(data, parents, backward):
    out = Tensor(data)
    if _GRAD_ENABLED and any(p.requires_grad for p in parents):
        out.requires_grad = True
        out._parents = parents
        out._backward = backward
    return out


def _acc(t, g):
    if not t.requires_grad:
        return
    if t.grad is None:
        t.grad = np.array(g, dtype=np.float64, copy=True)
    else:
        t.grad = t.grad + g


# ---------------------------------------------------------------- arithmetic


def add(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape == b.shape:
        def back(g):
            _acc(a, g)
            _acc(b, g)
    elif a.data.ndim == 2 and b.data.ndim == 1 and a.shape[1] == b.shape[0]:
        def back(g):
            _acc(a, g)
            _acc(b, g.sum(axis=0))
    else:
        raise ShapeError("add", a.shape, b.shape)
    return _result(a.data + b.data, (a, b), back)


def sub(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    if a.shape != b.shape:
        raise ShapeError("sub", a.shape, b.shape)

    def back(g):
        _acc(a, g)
        _acc(b, -g)

    return _result(a.data - b.data, (a, b), back)


def neg(a):
    def back(g):
        _acc(a, -g)

    return _result(-a.data, (a,), back)


def mul(a, b):
    """Elementwise product; ``b`` may also be a Python scalar."""
    if not isinstance(b, Tensor):
        c = float(b)

        def back_scalar(g):
            _acc(a, g * c)

        return _result(a.data * c, (a,), back_scalar)
    if a.shape != b.shape:
        raise ShapeError("mul", a.shape, b.shape)

    def back(g):
        _acc(a, g * b.data)
        _acc(b, g * a.data)

    return _result(a.data * b.data, (a, b), back)


def matmul(a, b):
    a, b = _as_tensor(a), _as_tensor(b)
    da, db = a.data.ndim, b.data.ndim
    if da not in (1, 2) or db not in (1, 2) or a.shape[-1] != b.shape[0]:
        raise ShapeError("matmul", a.shape, b.shape)
    A, B = a.data, b.data

    def back(g):
        if da == 2 and db == 2:
            _acc(a, g @ B.T)
            _acc(b, A.T @ g)
        elif da == 2:
            _acc(a, np.outer(g, B))
            _acc(b, A.T @ g)
        elif db == 2:
            _acc(a, B @ g)
            _acc(b, np.outer(A, g))
        else:
            _acc(a, g * B)
            _acc(b, g * A)

    return _result(A @ B, (a, b), back)


def concat(tensors, axis=0):
    tensors = [_as_tensor(t) for t in tensors]
    if not tensors:
        raise ShapeError("concat")
    nd = tensors[0].data.ndim
    if nd == 1 and all(t.data.ndim == 1 for t in tensors):
        return _concat1d(tensors)
    ax = axis % nd if nd else 0
    for t in tensors[1:]:
        if t.data.ndim != nd or any(
            t.shape[i] != tensors[0].shape[i] for i in range(nd) if i != ax
        ):
            raise ShapeError("concat", *(t.shape for t in tensors))
    sizes = [t.shape[ax] for t in tensors]
    bounds = np.cumsum([0] + sizes)

    def back(g):
        for t, lo, hi in zip(tensors, bounds[:-1], bounds[1:]):
            if t.requires_grad:
                sl = [slice(None)] * nd
                sl[ax] = slice(lo, hi)
                _acc(t, g[tuple(sl)])

    return _result(np.concatenate([t.data for t in tensors], axis=ax), tuple(tensors), back)


def _concat1d(tensors):
    bounds = []
    lo = 0
    for t in tensors:
        bounds.append((t, lo, lo + t.data.shape[0]))
        lo += t.data.shape[0]

    def back(g):
        for t, a, b in bounds:
            if t.requires_grad:
                _acc(t, g[a:b])

    return _result(np.concatenate([t.data for t in tensors]), tuple(tensors), back)


def stack(tensors):
    """Stack equal-shape tensors along a new leading axis."""
    tensors = [_as_tensor(t) for t in tensors]
    if not tensors or any(t.shape != tensors[0].shape for t in tensors):
        raise ShapeError("stack", *(t.shape for t in tensors))

    def back(g):
        for i, t in enumerate(tensors):
            _acc(t, g[i])

    return _result(np.stack([t.data for t in tensors]), tuple(tensors), back)


def getitem(a, idx):
    """Index or slice; integer-array indices accumulate on repeats."""
    shape = a.shape
    basic = isinstance(idx, (int, slice)) or (
        isinstance(idx, tuple) and all(isinstance(i, (int, slice)) for i in idx)
    )

    def back(g):
        full = np.zeros(shape)
        if basic:
            full[idx] = g
        else:
            np.add.at(full, idx, g)
        _acc(a, full)

    return _result(a.data[idx], (a,), back)


# --------------------------------------------------------------- pointwise


def tanh(a):
    y = np.tanh(a.data)

    def back(g):
        _acc(a, g * (1.0 - y * y))

    return _result(y, (a,), back)


def sigmoid(a):
    # tanh form avoids overflow in exp for large |x|
    y = 0.5 * (1.0 + np.tanh(0.5 * a.data))

    def back(g):
        _acc(a, g * y * (1.0 - y))

    return _result(y, (a,), back)


def exp(a):
    y = np.exp(a.data)

    def back(g):
        _acc(a, g * y)

    return _result(y, (a,), back)


def log(a, eps=1e-12):
    """Natural log of max(a, eps); the clamp blocks the gradient where it binds."""
    x = np.maximum(a.data, eps)
    live = a.data >= eps

    def back(g):
        _acc(a, np.where(live, g / x, 0.0))

    return _result(np.log(x), (a,), back)


def softmax(a, axis=-1):
    z = a.data - a.data.max(axis=axis, keepdims=True)
    e = np.exp(z)
    y = e / e.sum(axis=axis, keepdims=True)

    def back(g):
        _acc(a, y * (g - (g * y).sum(axis=axis, keepdims=True)))

    return _result(y, (a,), back)


def log_softmax(a, axis=-1):
    z = a.data - a.data.max(axis=axis, keepdims=True)
    lse = np.log(np.exp(z).sum(axis=axis, keepdims=True))
    y = z - lse

    def back(g):
        p = np.exp(y)
        _acc(a, g - p * g.sum(axis=axis, keepdims=True))

    return _result(y, (a,), back)


def dropout(a, p, train, rng):
    """Inverted dropout: kept units are scaled by 1/(1-p); identity when not training."""
    if not train or p <= 0.0:
        return a
    if not 0.0 <= p < 1.0:
        raise ValueError(f"dropout probability must be in [0, 1), got {p}")
    mask = (rng.random(a.shape) >= p) / (1.0 - p)

    def back(g):
        _acc(a, g * mask)

    return _result(a.data * mask, (a,), back)


# -------------------------------------------------------------- reductions


def sum(a):  # noqa: A001 - mirrors numpy naming inside this namespace
    shape = a.shape

    def back(g):
        _acc(a, np.broadcast_to(g, shape))

    return _result(a.data.sum(), (a,), back)


def mean(a):
    shape = a.shape
    n = a.data.size

    def back(g):
        _acc(a, np.broadcast_to(g / n, shape))

    return _result(a.data.mean(), (a,), back)


def add_all(terms):
    """Sum of equal-shape tensors as a single graph node."""
    terms = [_as_tensor(t) for t in terms]
    if not terms:
        raise ShapeError("add_all")
    if any(t.shape != terms[0].shape for t in terms):
        raise ShapeError("add_all", *(t.shape for t in terms))

    def back(g):
        for t in terms:
            _acc(t, g)

    out = terms[0].data.copy()
    for t in terms[1:]:
        out = out + t.data
    return _result(out, tuple(terms), back)


# -------------------------------------------------------------- embeddings


def embedding(table, ids):
    """Rows of ``table`` for integer ``ids`` (an int gives a vector)."""
    ids_arr = np.asarray(ids, dtype=np.int64)
    if table.data.ndim != 2 or (ids_arr.size and (ids_arr.min() < 0 or ids_arr.max() >= table.shape[0])):
        raise ShapeError("embedding", table.shape, ids_arr.shape)
    shape = table.shape

    def back(g):
        full = np.zeros(shape)
        np.add.at(full, ids_arr, g)
        _acc(table, full)

    return _result(table.data[ids_arr], (table,), back)


def embedding_bag(table, bags):
    """One row per bag: the sum of the bag's embedding rows (zeros for an empty bag)."""
    if table.data.ndim != 2:
        raise ShapeError("embedding_bag", table.shape)
    n_rows = table.shape[0]
    rows, cols = [], []
    for i, bag in enumerate(bags):
        for tok in bag:
            if not 0 <= tok < n_rows:
                raise ShapeError("embedding_bag", table.shape, (tok,))
            rows.append(i)
            cols.append(tok)
    rows = np.asarray(rows, dtype=np.int64)
    cols = np.asarray(cols, dtype=np.int64)
    out = np.zeros((len(bags), table.shape[1]))
    np.add.at(out, rows, table.data[cols])
    shape = table.shape

    def back(g):
        full = np.zeros(shape)
        np.add.at(full, cols, g[rows])
        _acc(table, full)

    return _result(out, (table,), back)


# ---------------------------------------------------------------- backward


def _topo_order(root):
    order = []
    seen = set()
    stack_ = [(root, False)]
    while stack_:
        node, expanded = stack_.pop()
        if expanded:
            order.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack_.append((node, True))
        for p in node._parents:
            if p.requires_grad and id(p) not in seen:
                stack_.append((p, False))
    return order


def backward(loss, retain_graph=False):
    """Populate ``.grad`` on every leaf reachable from the scalar ``loss``.

    Gradients accumulate into existing ``.grad`` arrays of leaves. The graph
    is released afterwards unless ``retain_graph`` is set.
    """
    if loss.data.size != 1 or loss.data.ndim > 1:
        raise ShapeError("backward (loss must be scalar)", loss.shape)
    if not loss.requires_grad:
        return
    order = _topo_order(loss)
    loss.grad = np.ones_like(loss.data) if loss.grad is None else loss.grad + 1.0
    for node in reversed(order):
        if node._backward is None:
            continue
        g = node.grad
        node.grad = None
        if g is not None:
            node._backward(g)
    if not retain_graph:
        for node in order:
            node._parents = ()
            node._backward = None


# ------------------------------------------------------------- parameters


class ParamStore:
    """Named, ordered trainable tensors."""

    def __init__(self, seed=0, scale=0.1):
        self._params = {}
        self.rng = np.random.default_rng(seed)
        self.scale = scale

    def add(self, name, shape, kind="weight", scale=None):
        """Register a parameter: weights ~ uniform(-scale, scale), biases zero."""
        scale = self.scale if scale is None else scale
        if name in self._params:
            raise InputError(f"duplicate parameter {name}")
        if kind == "bias":
            data = np.zeros(shape)
        elif kind == "weight":
            data = self.rng.uniform(-scale, scale, size=shape)
        else:
            raise ValueError(f"unknown parameter kind {kind}")
        t = Tensor(data, requires_grad=True, name=name)
        self._params[name] = t
        return t

    def __getitem__(self, name):
        return self._params[name]

    def __contains__(self, name):
        return name in self._params

    def __iter__(self):
        return iter(self._params.items())

    def __len__(self):
        return len(self._params)

    def names(self):
        return list(self._params)

    def zero_grad(self):
        for t in self._params.values():
            t.grad = None

    def n_values(self):
        return int(np.sum([t.data.size for t in self._params.values()]))

    def state(self):
        return {k: t.data.copy() for k, t in self._params.items()}

    def load_state(self, state):
        missing = set(self._params) ^ set(state)
        if missing:
            raise InputError(f"parameter sets differ: {sorted(missing)}")
        for k, t in self._params.items():
            arr = np.asarray(state[k], dtype=np.float64)
            if arr.shape != t.shape:
                raise ShapeError(f"load_state[{k}]", t.shape, arr.shape)
            t.data = arr.copy()


# ------------------------------------------------------------------- LSTM


def lstm_step(x, h, c, W, b):
    """One LSTM step. W: (4H, In + H), gate rows ordered input, forget, output, candidate."""
    H = h.shape[0]
    if W.shape != (4 * H, x.shape[0] + H) or b.shape != (4 * H,) or c.shape != (H,):
        raise ShapeError("lstm_step", x.shape, h.shape, c.shape, W.shape, b.shape)
    z = add(matmul(W, concat([x, h])), b)
    gates = sigmoid(z[: 3 * H])
    i, f, o = gates[:H], gates[H : 2 * H], gates[2 * H :]
    g = tanh(z[3 * H :])
    c_new = add(mul(f, c), mul(i, g))
    h_new = mul(o, tanh(c_new))
    return h_new, c_new


def lstm_stack_step(x, states, layers, p_drop=0.0, train=False, rng=None):
    """Step a stack of LSTM layers; dropout sits between layers only.

    ``states`` and ``layers`` are per-layer lists of (h, c) and (W, b).
    Returns the new state list; the top layer's h is the output.
    """
    if len(states) != len(layers):
        raise ShapeError("lstm_stack_step", (len(states),), (len(layers),))
    new = []
    inp = x
    for k, ((h, c), (W, b)) in enumerate(zip(states, layers)):
        if k > 0:
            inp = dropout(inp, p_drop, train, rng)
        h2, c2 = lstm_step(inp, h, c, W, b)
        new.append((h2, c2))
        inp = h2
    return new


# -------------------------------------------------------------- optimizer


class Adagrad:
    """Adagrad with global-norm clipping applied before the accumulator update."""

    def __init__(self, params, lr=0.15, initial_accumulator=0.1, clip_norm=2.0):
        self.params = params
        self.lr = lr
        self.clip_norm = clip_norm
        self.acc = {name: np.full(t.shape, float(initial_accumulator)) for name, t in params}

    def step(self):
        """Apply one update from the current ``.grad`` values; returns the pre-clip norm."""
        grads = {}
        for name, t in self.params:
            g = t.grad if t.grad is not None else np.zeros(t.shape)
            if g.shape != t.shape:
                raise ShapeError(f"adagrad[{name}]", t.shape, g.shape)
            if not np.all(np.isfinite(g)):
                raise FloatingPointError(f"non-finite gradient for parameter {name}")
            grads[name] = g
        norm = math.sqrt(float(np.sum([np.sum(g * g) for g in grads.values()])))
        if self.clip_norm and norm > self.clip_norm:
            factor = self.clip_norm / norm
            grads = {k: g * factor for k, g in grads.items()}
        for name, t in self.params:
            g = grads[name]
            self.acc[name] += g * g
            t.data = t.data - self.lr * g / np.sqrt(self.acc[name])
        return norm

    def state(self):
        return {k: v.copy() for k, v in self.acc.items()}


# ------------------------------------------------------------- checkpoints

CHECKPOINT_MAGIC = b"CACKPT\x00\x01"
CHECKPOINT_VERSION = 1


def save_checkpoint(path, arrays, meta=None):
    """Write named float64 arrays plus a JSON metadata object.

    Layout: 8-byte magic, uint32 version, uint64 header length, UTF-8 JSON
    header {"tensors": [{"name", "shape", "offset", "count"}], "meta": ...},
    then the concatenated little-endian float64 payload.
    """
    entries = []
    offset = 0
    for name in arrays:
        arr = np.asarray(arrays[name], dtype=np.float64)
        entries.append({"name": name, "shape": list(arr.shape), "offset": offset, "count": int(arr.size)})
        offset += int(arr.size)
    header = json.dumps({"tensors": entries, "meta": meta or {}}, sort_keys=True).encode("utf-8")
    tmp = f"{path}.partial"
    with open(tmp, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(struct.pack("<IQ", CHECKPOINT_VERSION, len(header)))
        fh.write(header)
        for name in arrays:
            fh.write(np.ascontiguousarray(arrays[name], dtype="<f8").tobytes())
    os.replace(tmp, path)


def load_checkpoint(path):
    """Return (arrays, meta) from a file written by save_checkpoint."""
    with open(path, "rb") as fh:
        blob = fh.read()
    m = len(CHECKPOINT_MAGIC)
    if blob[:m] != CHECKPOINT_MAGIC:
        raise InputError("not a checkpoint file (bad magic)", path)
    version, hlen = struct.unpack("<IQ", blob[m : m + 12])
    if version != CHECKPOINT_VERSION:
        raise InputError(f"unsupported checkpoint version {version}", path)
    start = m + 12
    header = json.loads(blob[start : start + hlen].decode("utf-8"))
    payload = np.frombuffer(blob[start + hlen :], dtype="<f8")
    arrays = {}
    for e in header["tensors"]:
        lo, n = e["offset"], e["count"]
        if lo + n > payload.size:
            raise InputError(f"truncated checkpoint at tensor {e['name']}", path)
        arrays[e["name"]] = payload[lo : lo + n].astype(np.float64).reshape(e["shape"])
    return arrays, header["meta"]


# ----------------------------------------------------------- gradient check


def _rel_err(a, b):
    denom = max(abs(a), abs(b))
    return 0.0 if denom == 0.0 else abs(a - b) / denom


def gradcheck(loss_fn, params, eps=1e-4, per_param=3, rng=None, rtol=1e-4, atol=1e-6):
    """Compare analytic gradients against central differences.

    ``loss_fn`` rebuilds the graph and returns a scalar Tensor. For each named
    parameter, ``per_param`` randomly chosen elements are perturbed, plus
    one random direction over the whole tensor. Returns {name: worst record}
    where a record is (rel_err, abs_err, analytic, numeric, passed).
    """
    rng = rng if rng is not None else np.random.default_rng(0)
    for _, t in params:
        t.grad = None
    backward(loss_fn())
    analytic = {name: (t.grad.copy() if t.grad is not None else np.zeros(t.shape)) for name, t in params}
    report = {}
    with no_grad():
        for name, t in params:
            flat = t.data.reshape(-1)
            checks = []
            k = min(per_param, flat.size)
            for idx in rng.choice(flat.size, size=k, replace=False):
                orig = flat[idx]
                flat[idx] = orig + eps
                up = loss_fn().item()
                flat[idx] = orig - eps
                down = loss_fn().item()
                flat[idx] = orig
                checks.append((analytic[name].reshape(-1)[idx], (up - down) / (2 * eps)))
            direction = rng.standard_normal(t.shape)
            direction /= np.linalg.norm(direction)
            base = t.data.copy()
            t.data = base + eps * direction
            up = loss_fn().item()
            t.data = base - eps * direction
            down = loss_fn().item()
            t.data = base
            checks.append((float(np.sum(analytic[name] * direction)), (up - down) / (2 * eps)))
            worst = None
            for a, n in checks:
                rel, ab = _rel_err(a, n), abs(a - n)
                rec = (rel, ab, a, n, rel <= rtol or ab <= atol)
                if worst is None or (not rec[4], rec[0]) > (not worst[4], worst[0]):
                    worst = rec
            report[name] = worst
    for _, t in params:
        t.grad = None
    return report
