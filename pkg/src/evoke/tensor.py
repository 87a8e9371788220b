"""Dense tensors with reverse-mode automatic differentiation.

Deliberately small: only the operators the 9x9 grid CNNs need, plus the
Adam optimizer and a seeded PRNG. Data lives in contiguous row-major
numpy arrays. float32 is the working precision; float64 can be selected
per tensor for gradient verification.
"""

from __future__ import annotations

import math
import weakref
import zlib
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.special import expit

DEFAULT_DTYPE = np.float32


class ShapeError(ValueError):
    """Operand extents violate an operator contract."""


class ValidationError(ValueError):
    """Operand values violate an operator contract."""


class GraphError(RuntimeError):
    """Autodiff misuse, e.g. backward on a non-scalar."""


class NanGradientError(FloatingPointError):
    """A parameter gradient went non-finite during optimization."""


class Tensor:
    """N-dimensional array with an optional gradient of the same shape."""

    __slots__ = ("data", "requires_grad", "grad", "node", "name", "__weakref__")

    def __init__(self, data, requires_grad=False, dtype=None, name=None):
        if dtype is None:
            if isinstance(data, np.ndarray) and data.dtype in (np.float32, np.float64):
                dtype = data.dtype
            else:
                dtype = DEFAULT_DTYPE
        # asarray with order="C" keeps 0-d scalars 0-d (ascontiguousarray does not)
        self.data = np.asarray(data, dtype=dtype, order="C")
        self.requires_grad = bool(requires_grad)
        self.grad = None
        self.node = None
        self.name = name

    @property
    def dims(self):
        return self.data.shape

    @property
    def dtype(self):
        return self.data.dtype

    @property
    def size(self):
        return self.data.size

    def item(self):
        return self.data.item()

    def detach(self):
        return Tensor(self.data.copy(), dtype=self.dtype, name=self.name)

    def zero_grad(self):
        self.grad = None

    def __repr__(self):
        tag = f" name={self.name!r}" if self.name else ""
        return f"Tensor(dims={tuple(self.dims)}, dtype={self.data.dtype}{tag})"


class Node:
    """One recorded operator application.

    The output pointer is weak: strong references run strictly upward
    (tensor -> node -> input tensors), so dropping the loss tensor frees
    a whole graph, including the convolution buffers captured by
    backward closures, by reference counting alone.
    """

    __slots__ = ("op", "inputs", "_output", "backward_fn")

    def __init__(self, op, inputs, output, backward_fn):
        self.op = op
        self.inputs = inputs
        self._output = weakref.ref(output)
        self.backward_fn = backward_fn

    @property
    def output(self):
        return self._output()


class ComputeGraph:
    """Topologically ordered operator trace ending at one output."""

    def __init__(self, nodes):
        self.nodes = list(nodes)

    def __len__(self):
        return len(self.nodes)

    def __iter__(self):
        return iter(self.nodes)


def _tracked(inputs):
    return any(t.requires_grad or t.node is not None for t in inputs)


def _attach(out, op, inputs, backward_fn):
    if _tracked(inputs):
        out.node = Node(op, tuple(inputs), out, backward_fn)
    return out


def trace(output):
    """Depth-first topological ordering of the graph below `output`.

    Iterative, and deliberately free of self-referencing closures: a
    cycle here would pin every captured convolution buffer until the
    garbage collector happens to run.
    """
    nodes = []
    seen = set()
    stack = [] if output.node is None else [(output.node, False)]
    while stack:
        node, expanded = stack.pop()
        if expanded:
            nodes.append(node)
            continue
        if id(node) in seen:
            continue
        seen.add(id(node))
        stack.append((node, True))
        for parent in node.inputs:
            if parent.node is not None and id(parent.node) not in seen:
                stack.append((parent.node, False))
    return ComputeGraph(nodes)


def backward(loss):
    """Populate .grad on every reachable requires_grad tensor.

    Gradients are summed where a tensor feeds several nodes, and summed
    into any preexisting .grad (call zero_grad between steps). Returns
    the ComputeGraph that was walked; each node is visited exactly once.
    """
    if not isinstance(loss, Tensor):
        raise GraphError("backward expects a Tensor")
    if loss.size != 1:
        raise GraphError(f"backward requires a scalar loss, got dims {tuple(loss.dims)}")
    graph = trace(loss)
    acc = {id(loss): (loss, np.ones_like(loss.data))}

    def deposit(t, g):
        if t.requires_grad:
            t.grad = g.copy() if t.grad is None else t.grad + g

    for node in reversed(graph.nodes):
        entry = acc.pop(id(node.output), None)
        if entry is None:
            continue
        out_grad = entry[1]
        deposit(node.output, out_grad)
        in_grads = node.backward_fn(out_grad)
        for inp, g in zip(node.inputs, in_grads):
            if g is None:
                continue
            if inp.requires_grad or inp.node is not None:
                _, cur = acc.get(id(inp), (inp, None))
                acc[id(inp)] = (inp, g if cur is None else cur + g)
    for t, g in acc.values():
        deposit(t, g)
    return graph


# ---------------------------------------------------------------------------
# operators


class PadSpec(NamedTuple):
    top: int
    bottom: int
    left: int
    right: int


def same_padding(kh, kw=None):
    """Zero padding preserving spatial extents at stride 1.

    Even kernels place the extra cell after (bottom/right), so a 4x4
    kernel pads 1 before and 2 after on each axis.
    """
    kw = kh if kw is None else kw
    return PadSpec((kh - 1) // 2, kh // 2, (kw - 1) // 2, kw // 2)


def _check_ndim(label, t, ndim):
    if t.data.ndim != ndim:
        raise ShapeError(f"{label} must be {ndim}-d, got dims {tuple(t.dims)}")


def conv2d(x, w, b, padding=None):
    """2-D convolution at stride 1 with zero padding.

    out[n,o,y,x] = b[o] + sum_{c,i,j} x_pad[n,c,y+i,x+j] * w[o,c,i,j]

    Internally runs channels-last so the im2col buffer copies in long
    contiguous runs; the tensor contract stays [n, c, h, w].
    """
    _check_ndim("conv2d input", x, 4)
    _check_ndim("conv2d weight", w, 4)
    _check_ndim("conv2d bias", b, 1)
    n, cin, h, wd = x.dims
    cout, cin_w, kh, kw = w.dims
    if cin != cin_w:
        raise ShapeError(f"conv2d: input has {cin} channels, weight expects {cin_w}")
    if b.dims != (cout,):
        raise ShapeError(f"conv2d: bias dims {tuple(b.dims)} do not match {cout} output maps")
    pad = same_padding(kh, kw) if padding is None else PadSpec(*padding)

    xh = np.ascontiguousarray(x.data.transpose(0, 2, 3, 1))  # [n, h, w, c]
    xph = np.pad(xh, ((0, 0), (pad.top, pad.bottom), (pad.left, pad.right), (0, 0)))
    oh = h + pad.top + pad.bottom - kh + 1
    ow = wd + pad.left + pad.right - kw + 1
    if oh < 1 or ow < 1:
        raise ShapeError(f"conv2d: kernel {kh}x{kw} exceeds padded input {tuple(x.dims)}")
    if kh == 1 and kw == 1:
        cols = xph.reshape(n * oh * ow, cin)
    else:
        win = np.lib.stride_tricks.sliding_window_view(xph, (kh, kw), axis=(1, 2))
        # [n, oh, ow, c, kh, kw] -> [n*oh*ow, kh*kw*c] with c contiguous
        cols = np.ascontiguousarray(win.transpose(0, 1, 2, 4, 5, 3)).reshape(n * oh * ow, kh * kw * cin)
    w2 = np.ascontiguousarray(w.data.transpose(0, 2, 3, 1)).reshape(cout, kh * kw * cin)
    out2 = cols @ w2.T
    out2 += b.data
    out = Tensor(np.ascontiguousarray(out2.reshape(n, oh, ow, cout).transpose(0, 3, 1, 2)), dtype=x.dtype)

    def bw(go):
        go2 = np.ascontiguousarray(go.transpose(0, 2, 3, 1)).reshape(n * oh * ow, cout)
        gb = go2.sum(axis=0)
        gw = np.ascontiguousarray(
            (go2.T @ cols).reshape(cout, kh, kw, cin).transpose(0, 3, 1, 2)
        )
        gcols = go2 @ w2
        gxph = np.zeros_like(xph)
        if kh == 1 and kw == 1:
            gxph += gcols.reshape(xph.shape)
        else:
            g6 = gcols.reshape(n, oh, ow, kh, kw, cin)
            for i in range(kh):
                for j in range(kw):
                    gxph[:, i : i + oh, j : j + ow, :] += g6[:, :, :, i, j, :]
        gxh = gxph[:, pad.top : pad.top + h, pad.left : pad.left + wd, :]
        gx = np.ascontiguousarray(gxh.transpose(0, 3, 1, 2))
        return gx, gw, gb

    return _attach(out, "conv2d", (x, w, b), bw)


def linear(x, w, b):
    """Affine map out = x @ w.T + b with x:[n,f], w:[out,f], b:[out]."""
    _check_ndim("linear input", x, 2)
    _check_ndim("linear weight", w, 2)
    _check_ndim("linear bias", b, 1)
    n, f = x.dims
    out_f, f_w = w.dims
    if f != f_w:
        raise ShapeError(f"linear: input features {f} do not match weight features {f_w}")
    if b.dims != (out_f,):
        raise ShapeError(f"linear: bias dims {tuple(b.dims)} do not match {out_f} outputs")
    out = Tensor(x.data @ w.data.T + b.data, dtype=x.dtype)

    def bw(go):
        return go @ w.data, go.T @ x.data, go.sum(axis=0)

    return _attach(out, "linear", (x, w, b), bw)


def relu(x):
    """Elementwise max(0, x); the subgradient at exactly 0 is 0."""
    out = Tensor(np.maximum(x.data, 0), dtype=x.dtype)
    mask = x.data > 0

    def bw(go):
        return (go * mask,)

    return _attach(out, "relu", (x,), bw)


def sigmoid(x):
    """Elementwise logistic 1/(1+exp(-x)), overflow-safe for large |x|."""
    y = expit(x.data)
    out = Tensor(y, dtype=x.dtype)

    def bw(go):
        return (go * y * (1.0 - y),)

    return _attach(out, "sigmoid", (x,), bw)


def _softplus(z):
    return np.maximum(z, 0) + np.log1p(np.exp(-np.abs(z)))


def bce_with_logits(logits, targets):
    """Binary cross-entropy on logits: mean over rows, sum over columns.

    Evaluated in logit space as t*softplus(-z) + (1-t)*softplus(z), so no
    probability is ever materialized and saturation cannot overflow.
    Targets may be soft, anywhere in [0, 1].
    """
    _check_ndim("bce logits", logits, 2)
    if logits.dims != targets.dims:
        raise ShapeError(f"bce: logits dims {tuple(logits.dims)} != targets dims {tuple(targets.dims)}")
    t = targets.data
    if t.size == 0:
        raise ShapeError("bce: empty input")
    if float(t.min()) < 0.0 or float(t.max()) > 1.0:
        raise ValidationError("bce: targets must lie in [0, 1]")
    z = logits.data
    n = z.shape[0]
    elem = t * _softplus(-z) + (1.0 - t) * _softplus(z)
    out = Tensor(np.asarray(elem.sum() / n), dtype=logits.dtype)

    def bw(go):
        g = go / n
        return (expit(z) - t) * g, -z * g

    return _attach(out, "bce_with_logits", (logits, targets), bw)


def add(a, b):
    """Elementwise sum of two tensors of identical dims."""
    if a.dims != b.dims:
        raise ShapeError(f"add: dims {tuple(a.dims)} != {tuple(b.dims)}")
    out = Tensor(a.data + b.data, dtype=a.dtype)

    def bw(go):
        return go, go

    return _attach(out, "add", (a, b), bw)


def scale(x, c):
    """Multiply by a python scalar."""
    c = float(c)
    out = Tensor(x.data * c, dtype=x.dtype)

    def bw(go):
        return (go * c,)

    return _attach(out, "scale", (x,), bw)


def reshape(x, dims):
    dims = tuple(int(d) for d in dims)
    if int(np.prod(dims, dtype=np.int64)) != x.size:
        raise ShapeError(f"reshape: cannot view {tuple(x.dims)} as {dims}")
    out = Tensor(x.data.reshape(dims).copy(), dtype=x.dtype)

    def bw(go):
        return (go.reshape(x.dims),)

    return _attach(out, "reshape", (x,), bw)


def flatten(x):
    """Collapse all but the leading (batch) axis."""
    return reshape(x, (x.dims[0], int(np.prod(x.dims[1:], dtype=np.int64))))


def tsum(x):
    """Sum of all elements, as a scalar tensor."""
    out = Tensor(np.asarray(x.data.sum()), dtype=x.dtype)

    def bw(go):
        return (np.ones_like(x.data) * go,)

    return _attach(out, "sum", (x,), bw)


# ---------------------------------------------------------------------------
# optimizer


@dataclass
class AdamState:
    """Adam moments, one m/v array per parameter in parameter order."""

    lr: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    step: int = 0
    m: list = field(default_factory=list)
    v: list = field(default_factory=list)


def adam_step(params, grads, state, names=None):
    """One bias-corrected Adam update, applied in place to param data."""
    if len(params) != len(grads):
        raise ShapeError(f"adam_step: {len(params)} params but {len(grads)} grads")
    if not state.m:
        state.m = [np.zeros_like(p.data) for p in params]
        state.v = [np.zeros_like(p.data) for p in params]
    if len(state.m) != len(params):
        raise ShapeError("adam_step: state does not match parameter set")
    state.step += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1 ** state.step
    c2 = 1.0 - b2 ** state.step
    for i, (p, g) in enumerate(zip(params, grads)):
        label = names[i] if names else (p.name or f"param[{i}]")
        if g is None:
            raise ValidationError(f"adam_step: missing gradient for {label}")
        g = np.asarray(g, dtype=p.data.dtype)
        if g.shape != p.data.shape:
            raise ShapeError(f"adam_step: gradient dims {g.shape} != param dims {p.data.shape} for {label}")
        if not np.isfinite(g).all():
            raise NanGradientError(f"non-finite gradient for {label} at step {state.step}")
        m, v = state.m[i], state.v[i]
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p.data -= state.lr * (m / c1) / (np.sqrt(v / c2) + state.eps)
    return params, state


class Adam:
    """Binds named parameters to an AdamState for training loops."""

    def __init__(self, named_params, lr=1e-3, beta1=0.9, beta2=0.999, eps=1e-8):
        named_params = list(named_params)
        self.names = [n for n, _ in named_params]
        self.params = [p for _, p in named_params]
        self.state = AdamState(lr=lr, beta1=beta1, beta2=beta2, eps=eps)

    def zero_grad(self):
        for p in self.params:
            p.grad = None

    def step(self):
        adam_step(self.params, [p.grad for p in self.params], self.state, self.names)


# ---------------------------------------------------------------------------
# seeded randomness


def _key_part(k):
    if isinstance(k, str):
        return zlib.crc32(k.encode("utf-8"))
    return int(k) & 0xFFFFFFFF


class Prng:
    """Counter-based PCG64 stream; one seed gives one scalar stream on
    every platform, and derive() splits stable independent substreams."""

    def __init__(self, seed, _key=()):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF
        self._key = tuple(_key)
        ss = np.random.SeedSequence(self.seed, spawn_key=self._key)
        self._gen = np.random.Generator(np.random.PCG64(ss))

    def derive(self, *key):
        """Independent child stream at a stable (str|int, ...) path."""
        return Prng(self.seed, self._key + tuple(_key_part(k) for k in key))

    def uniform(self, low, high, size=None):
        return self._gen.uniform(low, high, size)

    def normal(self, size=None, dtype=np.float64):
        return self._gen.standard_normal(size, dtype=dtype)

    def integers(self, low, high, size=None):
        return self._gen.integers(low, high, size)

    def permutation(self, n):
        return self._gen.permutation(n)


def kaiming_init(prng, dims, dtype=DEFAULT_DTYPE, name=None):
    """Uniform(-sqrt(6/fan_in), +sqrt(6/fan_in)) parameter tensor."""
    dims = tuple(int(d) for d in dims)
    if not dims or any(d <= 0 for d in dims):
        raise ShapeError(f"kaiming_init: invalid dims {dims}")
    if len(dims) >= 2:
        fan_in = int(np.prod(dims[1:], dtype=np.int64))
    else:
        fan_in = dims[0]
    bound = math.sqrt(6.0 / fan_in)
    data = prng.uniform(-bound, bound, dims).astype(dtype)
    return Tensor(data, requires_grad=True, dtype=dtype, name=name)
