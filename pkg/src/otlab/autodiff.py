"""Dense float64 tensors with reverse-mode automatic differentiation.

Operations are recorded on a ``Tape`` as a linear list of nodes, so parents
always precede children and the backward sweep is a single reverse pass over
the list. ``Tape.backward`` accumulates gradients into every leaf tensor,
then clears the tape and bumps its generation counter; tensors that survive
a backward call (parameters held by a training loop) re-register themselves
lazily as leaves of the next generation, so loops never re-watch anything.

Only scalar-with-tensor broadcasting is supported; batch operations such as
bias addition (``add_row``) and per-row reduction (``sum_rows``) are explicit
primitives. Every primitive checks its output for NaN/Inf and raises
``NumericError`` instead of propagating silently.
"""

from __future__ import annotations

import functools

import numpy as np

from .exceptions import ContractError, DomainError, NumericError, ShapeError

__all__ = [
    "Tensor",
    "Tape",
    "as_tensor",
    "matmul",
    "add",
    "sub",
    "mul",
    "scale",
    "square",
    "sqrt",
    "absolute",
    "powf",
    "leaky_relu",
    "mean",
    "tsum",
    "sum_rows",
    "add_row",
    "transpose",
]


def _check_finite(data, op):
    # a NaN/Inf entry always leaves the sum non-finite, so this one reduction
    # replaces a full isfinite scan (finite-overflow false alarms only occur
    # at ~1e308 scales, which are failures worth flagging anyway)
    if not np.isfinite(data.sum()):
        raise NumericError(f"{op} produced non-finite values")


def _op(fn):
    # numpy's overflow warnings are redundant here: every result is
    # finiteness-checked and raises NumericError instead
    @functools.wraps(fn)
    def wrapped(*args, **kwargs):
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            return fn(*args, **kwargs)

    return wrapped


class Tensor:
    """n-d float64 array, optionally recorded on a tape.

    ``data`` is the raw (row-major) numpy buffer; ``grad`` is populated by
    ``Tape.backward`` for leaf tensors. Constructing with ``tape=...``
    registers the tensor as a trainable leaf.
    """

    __slots__ = ("data", "tape", "grad", "_node", "_gen")

    def __init__(self, values, tape=None):
        data = np.asarray(values, dtype=np.float64)
        with np.errstate(over="ignore", invalid="ignore"):
            _check_finite(data, "tensor construction")
        self.data = data
        self.tape = tape
        self.grad = None
        self._node = None
        self._gen = -1
        if tape is not None:
            self._node = tape._register_leaf(self)
            self._gen = tape._generation

    @classmethod
    def _wrap(cls, data, tape, node):
        t = cls.__new__(cls)
        t.data = data
        t.tape = tape
        t.grad = None
        t._node = node
        t._gen = tape._generation if tape is not None else -1
        return t

    @property
    def shape(self):
        return self.data.shape

    @property
    def ndim(self):
        return self.data.ndim

    @property
    def size(self):
        return self.data.size

    @property
    def T(self):
        return transpose(self)

    def item(self) -> float:
        if self.data.size != 1:
            raise ShapeError(f"item() on tensor of shape {self.shape}")
        return float(self.data.reshape(()))

    def __repr__(self):
        tracked = "tracked" if self.tape is not None else "constant"
        return f"Tensor(shape={self.shape}, {tracked})"

    # operator sugar; scalars are broadcast, everything else must match shapes
    def __add__(self, other):
        return add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        return sub(self, other)

    def __rsub__(self, other):
        return sub(other, self)

    def __mul__(self, other):
        return mul(self, other)

    __rmul__ = __mul__

    def __neg__(self):
        return scale(self, -1.0)

    def __matmul__(self, other):
        return matmul(self, other)

    def square(self):
        return square(self)

    def sqrt(self):
        return sqrt(self)

    def abs(self):
        return absolute(self)

    def mean(self):
        return mean(self)

    def sum(self):
        return tsum(self)

    def sum_rows(self):
        return sum_rows(self)

    def leaky_relu(self, alpha=0.2):
        return leaky_relu(self, alpha)


class Tape:
    """Append-ordered record of primitive operations with parent references."""

    def __init__(self):
        self._ops = []  # (out_id, parent_ids, pullbacks)
        self._leaves = {}  # node_id -> leaf Tensor
        self._n = 0
        self._generation = 0

    def __len__(self):
        return self._n

    def _new_node(self) -> int:
        nid = self._n
        self._n += 1
        return nid

    def _register_leaf(self, tensor) -> int:
        nid = self._new_node()
        self._leaves[nid] = tensor
        return nid

    def _node_of(self, tensor) -> int:
        # Tensors from a cleared generation come back as fresh leaves: their
        # history is gone, so constant-leaf semantics are the correct ones.
        if tensor._gen != self._generation:
            tensor._node = self._register_leaf(tensor)
            tensor._gen = self._generation
        return tensor._node

    def backward(self, root: Tensor) -> dict:
        """Reverse sweep from a scalar root.

        Accumulates ``grad`` on every leaf of the current generation, clears
        the tape, and returns the node_id -> gradient map of the sweep.
        """
        if root.tape is not self or root._gen != self._generation:
            raise ContractError("backward root is not recorded on this tape")
        if root.data.size != 1:
            raise ContractError(f"backward root must be scalar, got shape {root.shape}")
        grads: list = [None] * self._n
        grads[root._node] = np.ones_like(root.data)
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            for out_id, parent_ids, pulls in reversed(self._ops):
                g = grads[out_id]
                if g is None:
                    continue
                for pid, pull in zip(parent_ids, pulls):
                    contrib = pull(g)
                    if grads[pid] is None:
                        grads[pid] = contrib
                    else:
                        grads[pid] = grads[pid] + contrib
        for nid, leaf in self._leaves.items():
            g = grads[nid]
            leaf.grad = np.zeros_like(leaf.data) if g is None else np.asarray(g)
        result = {nid: g for nid, g in enumerate(grads) if g is not None}
        self._ops.clear()
        self._leaves.clear()
        self._n = 0
        self._generation += 1
        return result


def as_tensor(values) -> Tensor:
    if isinstance(values, Tensor):
        return values
    return Tensor(values)


def _apply(op_name, out_data, srcs_pulls):
    """Record one primitive: srcs_pulls is [(tensor, pullback), ...]."""
    _check_finite(out_data, op_name)
    tracked = [(t, p) for t, p in srcs_pulls if t.tape is not None]
    if not tracked:
        return Tensor._wrap(out_data, None, None)
    tape = tracked[0][0].tape
    for t, _ in tracked[1:]:
        if t.tape is not tape:
            raise ContractError(f"{op_name} mixes tensors from different tapes")
    parent_ids = tuple(tape._node_of(t) for t, _ in tracked)
    pulls = tuple(p for _, p in tracked)
    nid = tape._new_node()
    tape._ops.append((nid, parent_ids, pulls))
    return Tensor._wrap(out_data, tape, nid)


def _reduce_to(g, shape):
    # gradient of a scalar operand broadcast against a tensor
    return np.asarray(np.sum(g)).reshape(shape)


def _elementwise_pair(a, b, op_name):
    a, b = as_tensor(a), as_tensor(b)
    if a.shape != b.shape and a.size != 1 and b.size != 1:
        raise ShapeError(
            f"{op_name}: shapes {a.shape} and {b.shape} are not broadcast-compatible "
            "(only scalar-with-tensor broadcasting is supported)"
        )
    return a, b


def _pull_identity(t, out_shape):
    if t.shape == out_shape:
        return lambda g: g
    return lambda g: _reduce_to(g, t.shape)


@_op
def matmul(a, b) -> Tensor:
    a, b = as_tensor(a), as_tensor(b)
    if a.ndim != 2 or b.ndim != 2:
        raise ShapeError(f"matmul needs 2-D operands, got {a.shape} @ {b.shape}")
    if a.shape[1] != b.shape[0]:
        raise ShapeError(f"matmul inner dimensions differ: {a.shape} @ {b.shape}")
    ad, bd = a.data, b.data
    out = ad @ bd
    return _apply("matmul", out, [(a, lambda g: g @ bd.T), (b, lambda g: ad.T @ g)])


@_op
def add(a, b) -> Tensor:
    a, b = _elementwise_pair(a, b, "add")
    out = a.data + b.data
    return _apply("add", out, [(a, _pull_identity(a, out.shape)), (b, _pull_identity(b, out.shape))])


@_op
def sub(a, b) -> Tensor:
    a, b = _elementwise_pair(a, b, "sub")
    out = a.data - b.data
    pull_b = (lambda g: -g) if b.shape == out.shape else (lambda g: -_reduce_to(g, b.shape))
    return _apply("sub", out, [(a, _pull_identity(a, out.shape)), (b, pull_b)])


@_op
def mul(a, b) -> Tensor:
    a, b = _elementwise_pair(a, b, "mul")
    ad, bd = a.data, b.data
    out = ad * bd
    pull_a = (lambda g: g * bd) if a.shape == out.shape else (lambda g: _reduce_to(g * bd, a.shape))
    pull_b = (lambda g: g * ad) if b.shape == out.shape else (lambda g: _reduce_to(g * ad, b.shape))
    return _apply("mul", out, [(a, pull_a), (b, pull_b)])


@_op
def scale(a, k: float) -> Tensor:
    a = as_tensor(a)
    k = float(k)
    if not np.isfinite(k):
        raise NumericError("scale factor must be finite")
    return _apply("scale", a.data * k, [(a, lambda g: g * k)])


@_op
def square(a) -> Tensor:
    a = as_tensor(a)
    ad = a.data
    return _apply("square", ad * ad, [(a, lambda g: 2.0 * ad * g)])


@_op
def sqrt(a) -> Tensor:
    a = as_tensor(a)
    if np.any(a.data <= 0):
        raise DomainError("sqrt requires strictly positive input")
    out = np.sqrt(a.data)
    return _apply("sqrt", out, [(a, lambda g: 0.5 * g / out)])


@_op
def absolute(a) -> Tensor:
    # subgradient convention: derivative 0 at the kink
    a = as_tensor(a)
    sign = np.sign(a.data)
    return _apply("abs", np.abs(a.data), [(a, lambda g: g * sign)])


@_op
def powf(a, p: float) -> Tensor:
    a = as_tensor(a)
    p = float(p)
    if np.any(a.data < 0):
        raise DomainError("powf requires nonnegative input")
    out = a.data**p
    local = np.where(a.data > 0, p * a.data ** (p - 1.0), 0.0)
    return _apply("powf", out, [(a, lambda g: g * local)])


@_op
def leaky_relu(a, alpha: float = 0.2) -> Tensor:
    a = as_tensor(a)
    mask = np.where(a.data > 0, 1.0, float(alpha))
    return _apply("leaky_relu", a.data * mask, [(a, lambda g: g * mask)])


@_op
def mean(a) -> Tensor:
    a = as_tensor(a)
    n = a.size
    out = np.asarray(a.data.mean())
    return _apply("mean", out, [(a, lambda g: np.full(a.shape, float(g) / n))])


@_op
def tsum(a) -> Tensor:
    """Sum of all entries (named to avoid shadowing builtins)."""
    a = as_tensor(a)
    out = np.asarray(a.data.sum())
    return _apply("sum", out, [(a, lambda g: np.full(a.shape, float(g)))])


@_op
def sum_rows(a) -> Tensor:
    """Row-wise sum of a 2-D tensor: [B, d] -> [B]."""
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeError(f"sum_rows needs a 2-D tensor, got shape {a.shape}")
    out = a.data.sum(axis=1)
    return _apply("sum_rows", out, [(a, lambda g: np.broadcast_to(g[:, None], a.shape))])


@_op
def add_row(a, row) -> Tensor:
    """Add a row vector to every row of a matrix: [B, d] + [d]."""
    a, row = as_tensor(a), as_tensor(row)
    if a.ndim != 2 or row.ndim != 1 or a.shape[1] != row.shape[0]:
        raise ShapeError(f"add_row: incompatible shapes {a.shape} and {row.shape}")
    out = a.data + row.data[None, :]
    return _apply("add_row", out, [(a, lambda g: g), (row, lambda g: g.sum(axis=0))])


@_op
def transpose(a) -> Tensor:
    a = as_tensor(a)
    if a.ndim != 2:
        raise ShapeError(f"transpose needs a 2-D tensor, got shape {a.shape}")
    out = np.ascontiguousarray(a.data.T)
    return _apply("transpose", out, [(a, lambda g: np.ascontiguousarray(g.T))])
