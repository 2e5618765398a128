"""Forward ops with hand-derived backward rules.

Conventions:
  - image / grid tensors are (H, W, C); token sequences are (T, D)
  - conv weights are (kh, kw, C_in, C_out), linear weights (D_in, D_out)
  - broadcasting is restricted to scalar-with-tensor and a trailing-axis bias
    vector; anything else needs an explicit reshape (keeps shape bugs loud)
  - every compute op checks its output for NaN/Inf and raises NonFiniteError

The module-level OP_REGISTRY powers the generic ``forward_op`` dispatcher and
lets the gradient-check suite enumerate the full catalog.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np
from numpy.lib.stride_tricks import as_strided
from scipy.special import erf as _erf

from ..errors import NonFiniteError, ShapeError
from .tensor import Tensor, make_result

_INV_SQRT2 = 1.0 / np.sqrt(2.0)
_INV_SQRT2PI = 1.0 / np.sqrt(2.0 * np.pi)


def _ensure_finite(op, arr):
    if not np.all(np.isfinite(arr)):
        raise NonFiniteError(op)


def _as_tensor(x):
    return x if isinstance(x, Tensor) else Tensor(x)


def constant(data):
    """Tensor that never tracks gradients (data, targets, masks...)."""
    return Tensor(np.asarray(data, dtype=np.float64), requires_grad=False)


def zeros(shape):
    return Tensor(np.zeros(shape, dtype=np.float64))


def ones(shape):
    return Tensor(np.ones(shape, dtype=np.float64))


# ---------------------------------------------------------------------------
# elementwise arithmetic (restricted broadcasting)
# ---------------------------------------------------------------------------

def _classify_pair(op, a, b):
    """Allowed pairings: same-shape, tensor+python-scalar, tensor+0-d tensor,
    tensor + trailing-axis bias vector. Returns a mode tag."""
    if isinstance(b, (int, float)):
        return "pyscalar"
    if a.shape == b.shape:
        return "same"
    if b.ndim == 0:
        return "scalar"
    if a.ndim == 0:
        return "lscalar"
    if b.ndim == 1 and a.ndim >= 1 and a.shape[-1] == b.shape[0]:
        return "bias"
    raise ShapeError(op, f"shapes {a.shape} and {b.shape} not combinable "
                         "(only same-shape, scalar, or trailing bias)")


def _reduce_bias(g, dim):
    return g.reshape(-1, dim).sum(axis=0)


def add(a, b):
    a = _as_tensor(a)
    if isinstance(b, (int, float)):
        out = a.data + float(b)
        _ensure_finite("add", out)
        return make_result("add", out, [a], lambda g: (g,))
    b = _as_tensor(b)
    mode = _classify_pair("add", a, b)
    out = a.data + b.data
    _ensure_finite("add", out)

    def backward(g):
        if mode == "same":
            return g, g
        if mode == "scalar":
            return g, np.asarray(g.sum())
        if mode == "lscalar":
            return np.asarray(g.sum()), g
        return g, _reduce_bias(g, b.data.shape[0])

    return make_result("add", out, [a, b], backward)


def sub(a, b):
    a = _as_tensor(a)
    if isinstance(b, (int, float)):
        out = a.data - float(b)
        _ensure_finite("sub", out)
        return make_result("sub", out, [a], lambda g: (g,))
    b = _as_tensor(b)
    mode = _classify_pair("sub", a, b)
    out = a.data - b.data
    _ensure_finite("sub", out)

    def backward(g):
        if mode == "same":
            return g, -g
        if mode == "scalar":
            return g, np.asarray(-g.sum())
        if mode == "lscalar":
            return np.asarray(g.sum()), -g
        return g, -_reduce_bias(g, b.data.shape[0])

    return make_result("sub", out, [a, b], backward)


def neg(a):
    a = _as_tensor(a)
    return make_result("neg", -a.data, [a], lambda g: (-g,))


def mul(a, b):
    a = _as_tensor(a)
    if isinstance(b, (int, float)):
        s = float(b)
        out = a.data * s
        _ensure_finite("mul", out)
        return make_result("mul", out, [a], lambda g: (g * s,))
    b = _as_tensor(b)
    mode = _classify_pair("mul", a, b)
    out = a.data * b.data
    _ensure_finite("mul", out)
    a_data, b_data = a.data, b.data

    def backward(g):
        if mode == "same":
            return g * b_data, g * a_data
        if mode == "scalar":
            return g * b_data, np.asarray((g * a_data).sum())
        if mode == "lscalar":
            return np.asarray((g * b_data).sum()), g * a_data
        return g * b_data, _reduce_bias(g * a_data, b_data.shape[0])

    return make_result("mul", out, [a, b], backward)


def div(a, b):
    """a / b where b is a scalar or matches a's shape."""
    a = _as_tensor(a)
    if isinstance(b, (int, float)):
        s = float(b)
        out = a.data / s
        _ensure_finite("div", out)
        return make_result("div", out, [a], lambda g: (g / s,))
    b = _as_tensor(b)
    if b.ndim != 0 and a.shape != b.shape:
        raise ShapeError("div", f"shapes {a.shape} and {b.shape}; divisor "
                                "must be scalar or same-shape")
    with np.errstate(divide="ignore", invalid="ignore"):
        out = a.data / b.data
    _ensure_finite("div", out)
    a_data, b_data = a.data, b.data

    def backward(g):
        da = g / b_data
        db = -g * a_data / (b_data * b_data)
        if b_data.ndim == 0:
            db = np.asarray(db.sum())
        return da, db

    return make_result("div", out, [a, b], backward)


# ---------------------------------------------------------------------------
# shape manipulation
# ---------------------------------------------------------------------------

def reshape(a, shape):
    a = _as_tensor(a)
    try:
        out = a.data.reshape(shape).copy()
    except ValueError as exc:
        raise ShapeError("reshape", f"{a.shape} -> {shape}: {exc}") from exc
    in_shape = a.shape
    return make_result("reshape", out, [a], lambda g: (g.reshape(in_shape),))


def transpose(a, axes):
    a = _as_tensor(a)
    if sorted(axes) != list(range(a.ndim)):
        raise ShapeError("transpose", f"axes {axes} invalid for ndim {a.ndim}")
    out = np.transpose(a.data, axes).copy()
    inv = np.argsort(axes)
    return make_result("transpose", out, [a],
                       lambda g: (np.transpose(g, inv),))


def concat(parts, axis=0):
    parts = [_as_tensor(p) for p in parts]
    if not parts:
        raise ShapeError("concat", "no operands")
    nd = parts[0].ndim
    for p in parts:
        if p.ndim != nd:
            raise ShapeError("concat", f"rank mismatch {p.shape} vs "
                                       f"{parts[0].shape}")
    try:
        out = np.concatenate([p.data for p in parts], axis=axis)
    except ValueError as exc:
        raise ShapeError("concat", str(exc)) from exc
    sizes = [p.shape[axis] for p in parts]

    def backward(g):
        grads = []
        start = 0
        for n in sizes:
            sl = [slice(None)] * nd
            sl[axis] = slice(start, start + n)
            grads.append(g[tuple(sl)])
            start += n
        return tuple(grads)

    return make_result("concat", out, parts, backward)


def narrow(a, axis, start, length):
    """Contiguous slice along one axis (concat's inverse)."""
    a = _as_tensor(a)
    if not (0 <= start and start + length <= a.shape[axis]):
        raise ShapeError("narrow", f"[{start}:{start + length}] out of range "
                                   f"for axis {axis} of {a.shape}")
    sl = [slice(None)] * a.ndim
    sl[axis] = slice(start, start + length)
    sl = tuple(sl)
    out = a.data[sl].copy()
    in_shape = a.shape

    def backward(g):
        z = np.zeros(in_shape)
        z[sl] = g
        return (z,)

    return make_result("narrow", out, [a], backward)


def gather(a, idx):
    """Select rows of ``a`` along axis 0 with an integer index vector."""
    a = _as_tensor(a)
    idx = np.asarray(idx, dtype=np.int64)
    if idx.ndim != 1:
        raise ShapeError("gather", f"index must be 1-D, got {idx.shape}")
    if idx.size and (idx.min() < 0 or idx.max() >= a.shape[0]):
        raise ShapeError("gather", f"index out of range for axis 0 of "
                                   f"{a.shape}")
    out = a.data[idx].copy()
    in_shape = a.shape

    def backward(g):
        z = np.zeros(in_shape)
        np.add.at(z, idx, g)
        return (z,)

    return make_result("gather", out, [a], backward)


# ---------------------------------------------------------------------------
# reductions
# ---------------------------------------------------------------------------

def sum_(a, axis=None, keepdims=False):
    a = _as_tensor(a)
    out = a.data.sum(axis=axis, keepdims=keepdims)
    in_shape = a.shape

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g, in_shape).copy(),)
        ge = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(ge, in_shape).copy(),)

    return make_result("sum", np.asarray(out), [a], backward)


def mean(a, axis=None, keepdims=False):
    a = _as_tensor(a)
    out = a.data.mean(axis=axis, keepdims=keepdims)
    in_shape = a.shape
    n = a.data.size if axis is None else a.shape[axis]

    def backward(g):
        if axis is None:
            return (np.broadcast_to(g / n, in_shape).copy(),)
        ge = g if keepdims else np.expand_dims(g, axis)
        return (np.broadcast_to(ge / n, in_shape).copy(),)

    return make_result("mean", np.asarray(out), [a], backward)


# ---------------------------------------------------------------------------
# linear algebra
# ---------------------------------------------------------------------------

def matmul(a, b):
    """2-D matmul or batched 3-D matmul with identical leading dims."""
    a, b = _as_tensor(a), _as_tensor(b)
    if a.ndim != b.ndim or a.ndim not in (2, 3):
        raise ShapeError("matmul", f"need equal rank 2 or 3, got {a.shape} "
                                   f"and {b.shape}")
    if a.shape[-1] != b.shape[-2] or (a.ndim == 3 and a.shape[0] != b.shape[0]):
        raise ShapeError("matmul", f"inner dims of {a.shape} and {b.shape} "
                                   "do not align")
    out = a.data @ b.data
    _ensure_finite("matmul", out)
    a_data, b_data = a.data, b.data

    def backward(g):
        return g @ b_data.swapaxes(-1, -2), a_data.swapaxes(-1, -2) @ g

    return make_result("matmul", out, [a, b], backward)


def linear(x, w, b=None):
    """Affine map on the trailing feature axis: x @ w (+ b)."""
    y = matmul(x, w)
    if b is not None:
        y = add(y, b)
    return y


# ---------------------------------------------------------------------------
# activations and normalization
# ---------------------------------------------------------------------------

def sigmoid(a):
    a = _as_tensor(a)
    x = a.data
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    y = out

    return make_result("sigmoid", out, [a], lambda g: (g * y * (1.0 - y),))


def gelu(a):
    """Exact (erf-based) GELU."""
    a = _as_tensor(a)
    x = a.data
    cdf = 0.5 * (1.0 + _erf(x * _INV_SQRT2))
    out = x * cdf
    pdf = _INV_SQRT2PI * np.exp(-0.5 * x * x)

    return make_result("gelu", out, [a], lambda g: (g * (cdf + x * pdf),))


def softmax(a):
    """Softmax along the last axis."""
    a = _as_tensor(a)
    x = a.data
    m = x.max(axis=-1, keepdims=True)
    e = np.exp(x - m)
    y = e / e.sum(axis=-1, keepdims=True)

    def backward(g):
        dot = (g * y).sum(axis=-1, keepdims=True)
        return (y * (g - dot),)

    return make_result("softmax", y, [a], backward)


def log_softmax(a):
    a = _as_tensor(a)
    x = a.data
    m = x.max(axis=-1, keepdims=True)
    lse = m + np.log(np.exp(x - m).sum(axis=-1, keepdims=True))
    out = x - lse
    sm = np.exp(out)

    def backward(g):
        return (g - sm * g.sum(axis=-1, keepdims=True),)

    return make_result("log_softmax", out, [a], backward)


def layer_norm(x, gamma, beta, eps=1e-5):
    """Normalize the trailing feature axis; eps sits inside the sqrt."""
    x, gamma, beta = _as_tensor(x), _as_tensor(gamma), _as_tensor(beta)
    d = x.shape[-1]
    if gamma.shape != (d,) or beta.shape != (d,):
        raise ShapeError("layer_norm", f"affine params {gamma.shape}/"
                                       f"{beta.shape} vs feature dim {d}")
    mu = x.data.mean(axis=-1, keepdims=True)
    var = x.data.var(axis=-1, keepdims=True)
    inv = 1.0 / np.sqrt(var + eps)
    xhat = (x.data - mu) * inv
    out = xhat * gamma.data + beta.data
    _ensure_finite("layer_norm", out)
    gamma_data = gamma.data

    def backward(g):
        dgamma = (g * xhat).reshape(-1, d).sum(axis=0)
        dbeta = g.reshape(-1, d).sum(axis=0)
        dxhat = g * gamma_data
        m1 = dxhat.mean(axis=-1, keepdims=True)
        m2 = (dxhat * xhat).mean(axis=-1, keepdims=True)
        dx = inv * (dxhat - m1 - xhat * m2)
        return dx, dgamma, dbeta

    return make_result("layer_norm", out, [x, gamma, beta], backward)


# ---------------------------------------------------------------------------
# convolution and pooling
# ---------------------------------------------------------------------------

@lru_cache(maxsize=256)
def _col_index(h, w, cin, kh, kw, stride, pad):
    """Flat indices into the padded input for every im2col column entry."""
    hp, wp = h + 2 * pad, w + 2 * pad
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    oy = np.arange(ho)[:, None, None, None, None]
    ox = np.arange(wo)[None, :, None, None, None]
    ky = np.arange(kh)[None, None, :, None, None]
    kx = np.arange(kw)[None, None, None, :, None]
    c = np.arange(cin)[None, None, None, None, :]
    iy = oy * stride + ky
    ix = ox * stride + kx
    flat = (iy * wp + ix) * cin + c
    return np.broadcast_to(flat, (ho, wo, kh, kw, cin)).ravel()


def _im2col(xp, kh, kw, stride):
    hp, wp, cin = xp.shape
    ho = (hp - kh) // stride + 1
    wo = (wp - kw) // stride + 1
    s0, s1, s2 = xp.strides
    win = as_strided(xp, shape=(ho, wo, kh, kw, cin),
                     strides=(s0 * stride, s1 * stride, s0, s1, s2))
    return win.reshape(ho * wo, kh * kw * cin), ho, wo


def conv2d(x, w, b=None, stride=1, padding=0):
    """2-D convolution (cross-correlation) over an (H, W, C_in) grid."""
    x, w = _as_tensor(x), _as_tensor(w)
    if x.ndim != 3 or w.ndim != 4:
        raise ShapeError("conv2d", f"input {x.shape} / kernel {w.shape}")
    h, wd, cin = x.shape
    kh, kw, wcin, cout = w.shape
    if wcin != cin:
        raise ShapeError("conv2d", f"input channels {cin} != kernel channels "
                                   f"{wcin}")
    if kh > h + 2 * padding or kw > wd + 2 * padding:
        raise ShapeError("conv2d", f"kernel {kh}x{kw} exceeds padded input "
                                   f"{h + 2 * padding}x{wd + 2 * padding}")
    if b is not None:
        b = _as_tensor(b)
        if b.shape != (cout,):
            raise ShapeError("conv2d", f"bias {b.shape} vs out channels "
                                       f"{cout}")

    xp = np.pad(x.data, ((padding, padding), (padding, padding), (0, 0)))
    cols, ho, wo = _im2col(xp, kh, kw, stride)
    wmat = w.data.reshape(-1, cout)
    out2 = cols @ wmat
    if b is not None:
        out2 = out2 + b.data
    out = out2.reshape(ho, wo, cout)
    _ensure_finite("conv2d", out)

    idx = _col_index(h, wd, cin, kh, kw, stride, padding)
    pad_shape = xp.shape
    w_shape = w.shape

    def backward(g):
        g2 = g.reshape(ho * wo, cout)
        dw = (cols.T @ g2).reshape(w_shape)
        dcols = g2 @ wmat.T
        dxp = np.bincount(idx, weights=dcols.ravel(),
                          minlength=pad_shape[0] * pad_shape[1] * cin)
        dxp = dxp.reshape(pad_shape)
        dx = dxp[padding:padding + h, padding:padding + wd, :]
        if b is None:
            return dx, dw
        return dx, dw, g2.sum(axis=0)

    parents = [x, w] if b is None else [x, w, b]
    return make_result("conv2d", out, parents, backward)


def avg_pool_spatial(x, window=None, stride=None):
    """Spatial average pool; global (-> (1, C)) when no window is given."""
    x = _as_tensor(x)
    if x.ndim != 3:
        raise ShapeError("avg_pool_spatial", f"need (H, W, C), got {x.shape}")
    h, w, c = x.shape
    if window is None:
        out = x.data.mean(axis=(0, 1)).reshape(1, c)
        n = h * w

        def backward(g):
            return (np.broadcast_to(g.reshape(1, 1, c) / n, (h, w, c)).copy(),)

        return make_result("avg_pool_spatial", out, [x], backward)

    stride = stride or window
    if window > h or window > w:
        raise ShapeError("avg_pool_spatial", f"window {window} exceeds input "
                                             f"{h}x{w}")
    cols, ho, wo = _im2col(x.data, window, window, stride)
    out = cols.reshape(ho * wo, window * window, c).mean(axis=1)
    out = out.reshape(ho, wo, c)
    idx = _col_index(h, w, c, window, window, stride, 0)

    def backward(g):
        ge = np.broadcast_to(g[:, :, None, None, :] / (window * window),
                             (ho, wo, window, window, c))
        dx = np.bincount(idx, weights=ge.ravel(), minlength=h * w * c)
        return (dx.reshape(h, w, c),)

    return make_result("avg_pool_spatial", out, [x], backward)


def max_pool_spatial(x, window=None, stride=None):
    """Spatial max pool; gradient routes to the first maximum per window."""
    x = _as_tensor(x)
    if x.ndim != 3:
        raise ShapeError("max_pool_spatial", f"need (H, W, C), got {x.shape}")
    h, w, c = x.shape
    if window is None:
        flat = x.data.reshape(-1, c)
        arg = flat.argmax(axis=0)
        out = flat[arg, np.arange(c)].reshape(1, c)

        def backward(g):
            dx = np.zeros((h * w, c))
            dx[arg, np.arange(c)] = g.reshape(c)
            return (dx.reshape(h, w, c),)

        return make_result("max_pool_spatial", out, [x], backward)

    stride = stride or window
    if window > h or window > w:
        raise ShapeError("max_pool_spatial", f"window {window} exceeds input "
                                             f"{h}x{w}")
    cols, ho, wo = _im2col(x.data, window, window, stride)
    win = cols.reshape(ho * wo, window * window, c)
    arg = win.argmax(axis=1)
    out = np.take_along_axis(win, arg[:, None, :], axis=1)[:, 0, :]
    out = out.reshape(ho, wo, c)
    idx = _col_index(h, w, c, window, window, stride, 0)
    idx_win = idx.reshape(ho * wo, window * window, c)

    def backward(g):
        chosen = np.take_along_axis(idx_win, arg[:, None, :], axis=1)[:, 0, :]
        dx = np.bincount(chosen.ravel(), weights=g.ravel(),
                         minlength=h * w * c)
        return (dx.reshape(h, w, c),)

    return make_result("max_pool_spatial", out, [x], backward)


def avg_pool_channel(x):
    """Mean over the channel axis, keepdims: (H, W, C) -> (H, W, 1)."""
    x = _as_tensor(x)
    if x.ndim != 3:
        raise ShapeError("avg_pool_channel", f"need (H, W, C), got {x.shape}")
    c = x.shape[-1]
    out = x.data.mean(axis=-1, keepdims=True)

    def backward(g):
        return (np.broadcast_to(g / c, x.shape).copy(),)

    return make_result("avg_pool_channel", out, [x], backward)


def max_pool_channel(x):
    x = _as_tensor(x)
    if x.ndim != 3:
        raise ShapeError("max_pool_channel", f"need (H, W, C), got {x.shape}")
    arg = x.data.argmax(axis=-1)
    out = np.take_along_axis(x.data, arg[..., None], axis=-1)
    in_shape = x.shape

    def backward(g):
        dx = np.zeros(in_shape)
        np.put_along_axis(dx, arg[..., None], g, axis=-1)
        return (dx,)

    return make_result("max_pool_channel", out, [x], backward)


def upsample_nearest(x, scale=2):
    x = _as_tensor(x)
    if x.ndim != 3:
        raise ShapeError("upsample_nearest", f"need (H, W, C), got {x.shape}")
    f = int(scale)
    h, w, c = x.shape
    out = np.repeat(np.repeat(x.data, f, axis=0), f, axis=1)

    def backward(g):
        return (g.reshape(h, f, w, f, c).sum(axis=(1, 3)),)

    return make_result("upsample_nearest", out, [x], backward)


@lru_cache(maxsize=64)
def _bilinear_matrix(n, f):
    """Dense (n*f, n) interpolation matrix, align_corners=False with border
    replication. Upsampling one axis is a matmul with this; the backward
    pass is a matmul with its transpose."""
    src = (np.arange(n * f) + 0.5) / f - 0.5
    i0f = np.floor(src)
    w = src - i0f
    i0 = np.clip(i0f, 0, n - 1).astype(np.int64)
    i1 = np.clip(i0f + 1, 0, n - 1).astype(np.int64)
    mat = np.zeros((n * f, n))
    rows = np.arange(n * f)
    np.add.at(mat, (rows, i0), 1.0 - w)
    np.add.at(mat, (rows, i1), w)
    return mat


def _resize_axis0(arr, mat):
    h, w, c = arr.shape
    return (mat @ arr.reshape(h, w * c)).reshape(mat.shape[0], w, c)


def upsample_bilinear(x, scale=2):
    """Bilinear upsample by an integer factor, align_corners=False."""
    x = _as_tensor(x)
    if x.ndim != 3:
        raise ShapeError("upsample_bilinear", f"need (H, W, C), got {x.shape}")
    f = int(scale)
    h, w, c = x.shape
    my = _bilinear_matrix(h, f)
    mx = _bilinear_matrix(w, f)
    rows = _resize_axis0(x.data, my)
    out = _resize_axis0(rows.transpose(1, 0, 2), mx).transpose(1, 0, 2)

    def backward(g):
        gr = _resize_axis0(g.transpose(1, 0, 2), mx.T).transpose(1, 0, 2)
        return (_resize_axis0(gr, my.T),)

    return make_result("upsample_bilinear", out, [x], backward)


# ---------------------------------------------------------------------------
# attention (composed from primitives)
# ---------------------------------------------------------------------------

def attention(q, k, v, num_heads):
    """Multi-head scaled dot-product attention over (T, D) sequences."""
    q, k, v = _as_tensor(q), _as_tensor(k), _as_tensor(v)
    t, d = q.shape
    if k.shape != (t, d) or v.shape != (t, d):
        raise ShapeError("attention", f"q {q.shape}, k {k.shape}, v {v.shape}")
    if d % num_heads != 0:
        raise ShapeError("attention", f"dim {d} not divisible by "
                                      f"{num_heads} heads")
    dh = d // num_heads

    def split(x):
        return transpose(reshape(x, (t, num_heads, dh)), (1, 0, 2))

    qh, kh, vh = split(q), split(k), split(v)
    scores = mul(matmul(qh, transpose(kh, (0, 2, 1))), 1.0 / np.sqrt(dh))
    weights = softmax(scores)
    out = matmul(weights, vh)
    return reshape(transpose(out, (1, 0, 2)), (t, d))


# ---------------------------------------------------------------------------
# non-differentiable helpers
# ---------------------------------------------------------------------------

def one_hot(ids, num_classes, zero_class0=False):
    """(H, W) integer ids -> (H, W, num_classes) float planes.

    With ``zero_class0`` the class-0 plane stays all-zero (used by the mask
    embedding, where background must contribute nothing).
    """
    ids = np.asarray(ids)
    if ids.min() < 0 or ids.max() >= num_classes:
        raise ShapeError("one_hot", f"ids in [{ids.min()}, {ids.max()}] "
                                    f"exceed {num_classes} classes")
    planes = np.zeros(ids.shape + (num_classes,), dtype=np.float64)
    np.put_along_axis(planes, ids[..., None].astype(np.int64), 1.0, axis=-1)
    if zero_class0:
        planes[..., 0] = 0.0
    return planes


# ---------------------------------------------------------------------------
# generic dispatch
# ---------------------------------------------------------------------------

OP_REGISTRY = {
    "add": add,
    "sub": sub,
    "neg": neg,
    "mul": mul,
    "div": div,
    "matmul": matmul,
    "linear": linear,
    "reshape": reshape,
    "transpose": transpose,
    "concat": concat,
    "narrow": narrow,
    "gather": gather,
    "sum": sum_,
    "mean": mean,
    "sigmoid": sigmoid,
    "gelu": gelu,
    "softmax": softmax,
    "log_softmax": log_softmax,
    "layer_norm": layer_norm,
    "conv2d": conv2d,
    "avg_pool_spatial": avg_pool_spatial,
    "max_pool_spatial": max_pool_spatial,
    "avg_pool_channel": avg_pool_channel,
    "max_pool_channel": max_pool_channel,
    "upsample_nearest": upsample_nearest,
    "upsample_bilinear": upsample_bilinear,
    "attention": attention,
}


def forward_op(kind, inputs, attrs=None):
    """Apply a catalog op by name. ``inputs`` feed positionally, ``attrs`` as
    keyword arguments."""
    fn = OP_REGISTRY.get(kind)
    if fn is None:
        raise ShapeError("forward_op", f"unknown op kind '{kind}'")
    if kind == "concat":
        return fn(inputs, **(attrs or {}))
    return fn(*inputs, **(attrs or {}))
