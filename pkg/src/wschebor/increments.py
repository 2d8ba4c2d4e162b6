"""Smoothed processes and normalized small-increment processes.

The central operator is the Stieltjes convolution of a path against the
derivative measure of a kernel,

    dotX(t) = (1/eps) * int X(t - eps*u) dpsi(u),

whose atoms reduce to exact finite differences of path values while the
density part is handled by trapezoidal quadrature.  Everything is
assembled into a single discrete stencil over grid offsets, so the whole
transform is one (possibly FFT-based) convolution per path.

All operations are pure transformations of immutable inputs and can be
applied to independent replicas fully in parallel.
"""

from dataclasses import dataclass

import numpy as np
from scipy import signal

from .errors import CoverageError, ParameterError, ResolutionError
from .paths import GridPath

MIN_EPS_OVER_DT = 4.0


@dataclass(frozen=True)
class IncrementProcess:
    """A normalized increment process eps^(1-H) * dotX together with its inputs."""

    source_meta: dict
    kernel_id: str
    epsilon: float
    hurst_index: float
    values: GridPath


def dpsi_window(kernel, epsilon, window):
    """Source interval needed to evaluate the increment process on `window`."""
    a, b = kernel.dpsi_hull()
    w0, w1 = window
    return (w0 - epsilon * b, w1 - epsilon * a)


def smooth_window(kernel, epsilon, window):
    """Source interval needed to evaluate the smoothed process on `window`."""
    a, b = kernel.support
    w0, w1 = window
    return (w0 - epsilon * b, w1 - epsilon * a)


def _guard_resolution(kernel, epsilon, dt):
    if epsilon < MIN_EPS_OVER_DT * dt:
        raise ResolutionError(
            f"epsilon={epsilon:g} is below {MIN_EPS_OVER_DT:g} grid steps (dt={dt:g})")


def _output_slice(source, window, required):
    lo, hi = required
    tol = 1e-9 * source.dt
    if source.t_start > lo + tol or source.t_end < hi - tol:
        raise CoverageError(
            f"source grid [{source.t_start:g}, {source.t_end:g}] does not cover "
            f"the required interval [{lo:g}, {hi:g}]")
    w0, w1 = window
    i0 = int(np.ceil((w0 - source.t_start) / source.dt - 1e-9))
    i1 = int(np.floor((w1 - source.t_start) / source.dt + 1e-9))
    if i1 - i0 < 1:
        raise CoverageError("window contains fewer than two grid nodes")
    return i0, i1


class _Stencil:
    """Discrete convolution weights over integer grid offsets.

    Fractional offsets (atoms landing off-grid) are split linearly between
    the two neighbouring nodes; Brownian-type paths are Holder continuous,
    so the interpolation error stays below Monte Carlo noise at the
    resolutions the guard admits.
    """

    def __init__(self):
        self._weights = {}

    def add(self, offset, weight):
        lo = int(np.floor(offset))
        frac = offset - lo
        if abs(frac) < 1e-9:
            self._weights[lo] = self._weights.get(lo, 0.0) + weight
        elif frac > 1.0 - 1e-9:
            self._weights[lo + 1] = self._weights.get(lo + 1, 0.0) + weight
        else:
            self._weights[lo] = self._weights.get(lo, 0.0) + weight * (1.0 - frac)
            self._weights[lo + 1] = self._weights.get(lo + 1, 0.0) + weight * frac

    def apply(self, values, i0, i1):
        """Evaluate sum_k w_k X[i + k] for i in [i0, i1]."""
        offs = sorted(self._weights)
        o_min, o_max = offs[0], offs[-1]
        if i0 + o_min < 0 or i1 + o_max > values.size - 1:
            raise CoverageError("stencil reaches outside the source grid")
        n_out = i1 - i0 + 1
        if len(offs) <= 8:
            out = np.zeros(n_out)
            for o in offs:
                out += self._weights[o] * values[i0 + o:i0 + o + n_out]
            return out
        dense = np.zeros(o_max - o_min + 1)
        for o, w in self._weights.items():
            dense[o - o_min] = w
        seg = values[i0 + o_min:i1 + o_max + 1]
        return signal.fftconvolve(seg, dense[::-1], mode="valid")


def _trapezoid_pieces(fn, lo, hi, breakpoints, du_target):
    """Trapezoid nodes and weights for int fn(u) du, piece by piece.

    Each smooth piece between discontinuities gets its own grid, and the
    function is sampled a hair inside the piece so one-sided limits are
    picked up at jump locations.
    """
    cuts = [lo] + [p for p in sorted(breakpoints) if lo < p < hi] + [hi]
    nodes, weights = [], []
    for a, b in zip(cuts[:-1], cuts[1:]):
        m = max(2, int(round((b - a) / du_target)))
        u = np.linspace(a, b, m + 1)
        du = u[1] - u[0]
        nudge = 1e-9 * du
        u_eval = u.copy()
        u_eval[0] += nudge
        u_eval[-1] -= nudge
        w = np.asarray(fn(u_eval), dtype=float) * du
        w[0] *= 0.5
        w[-1] *= 0.5
        nodes.append(u)
        weights.append(w)
    return np.concatenate(nodes), np.concatenate(weights)


def _dpsi_stencil(kernel, epsilon, dt):
    st = _Stencil()
    for loc, w in kernel.atoms:
        st.add(-epsilon * loc / dt, w / epsilon)
    if kernel.density is not None:
        c, d = kernel.density_support
        u, w = _trapezoid_pieces(kernel.density, c, d,
                                 kernel.density_breakpoints, dt / epsilon)
        for uj, wj in zip(u, w / epsilon):
            st.add(-epsilon * uj / dt, wj)
    return st


def _psi_stencil(kernel, epsilon, dt):
    st = _Stencil()
    a, b = kernel.support
    # Jumps of psi itself sit at the interior atom locations of dpsi;
    # kinks follow the density breakpoints.
    breaks = tuple(loc for loc, _ in kernel.atoms if a < loc < b) \
        + tuple(kernel.density_breakpoints)
    u, w = _trapezoid_pieces(kernel.psi, a, b, breaks, dt / epsilon)
    for uj, wj in zip(u, w):
        st.add(-epsilon * uj / dt, wj)
    return st


def smooth(source, kernel, epsilon, window=(0.0, 1.0)):
    """Mollification X * psi_eps evaluated on `window`.

    Trapezoidal quadrature of int psi(u) X(t - eps*u) du on a kernel grid
    aligned with the path resolution.
    """
    _guard_resolution(kernel, epsilon, source.dt)
    if not np.isfinite(kernel.support[0]) or not np.isfinite(kernel.support[1]):
        raise ParameterError(f"kernel {kernel.kernel_id!r} has no finite smoothing support")
    i0, i1 = _output_slice(source, window, smooth_window(kernel, epsilon, window))
    st = _psi_stencil(kernel, epsilon, source.dt)
    out = st.apply(source.values, i0, i1)
    meta = dict(source.meta, kernel=kernel.kernel_id, epsilon=epsilon, transform="smooth")
    return GridPath(source.t_start + i0 * source.dt, source.dt, out, meta)


def dot_increment(source, kernel, epsilon, window=(0.0, 1.0)):
    """Derivative-type increments (1/eps) int X(t - eps*u) dpsi(u) on `window`.

    For the forward-difference kernel this is exactly
    (X(t + eps) - X(t)) / eps at nodes where both times are on the grid.
    """
    _guard_resolution(kernel, epsilon, source.dt)
    if not kernel.has_derivative_measure:
        raise ParameterError(
            f"kernel {kernel.kernel_id!r} carries no derivative measure")
    i0, i1 = _output_slice(source, window, dpsi_window(kernel, epsilon, window))
    st = _dpsi_stencil(kernel, epsilon, source.dt)
    out = st.apply(source.values, i0, i1)
    meta = dict(source.meta, kernel=kernel.kernel_id, epsilon=epsilon, transform="dot")
    return GridPath(source.t_start + i0 * source.dt, source.dt, out, meta)


def _hurst_index(source):
    desc = source.meta.get("descriptor")
    if desc is None:
        raise ParameterError("source path carries no process descriptor")
    return desc.self_similarity_index


def normalized_increment(source, kernel, epsilon, window=(0.0, 1.0)):
    """The scale-normalized increment process eps^(1-H) * dotX."""
    h = _hurst_index(source)
    dot = dot_increment(source, kernel, epsilon, window)
    values = GridPath(dot.t_start, dot.dt, epsilon ** (1.0 - h) * dot.values, dot.meta)
    return IncrementProcess(
        source_meta=dict(source.meta),
        kernel_id=kernel.kernel_id,
        epsilon=epsilon,
        hurst_index=h,
        values=values,
    )


def unit_scale_process(source, kernel, window=(0.0, 1.0)):
    """The stationary unit-scale process int X(s) dpsi(t - s).

    This is the epsilon = 1 increment process; with the forward-difference
    kernel and a Brownian source it is the Slepian process
    W(t + 1) - W(t).  It is stationary whenever the source has stationary
    increments.
    """
    return normalized_increment(source, kernel, 1.0, window).values
