"""Galerkin assembly of 2D Helmholtz boundary operators on closed curves.

Assembles the single-layer, double-layer and (regularized) hypersingular
operator matrices, the piecewise-linear Gram (mass) matrix and the
variational Laplacian over a :class:`~filtbem.mesh2d.CurveMesh`.

Quadrature strategy
-------------------
Segment pairs that do not touch are integrated with tensor Gauss-Legendre.
The kernel log singularity on touching pairs is split off analytically:

* same segment: the log part of the double integral has a closed form for
  linear shape functions; the remainder is smooth up to d^2 log d terms.
* adjacent segments: the square is split along the diagonal through the
  shared node (Duffy), where log|r-r'| = log(radial) + log(angular factor);
  the radial log moments are exact and the angular factor is smooth.

The hypersingular operator uses the integration-by-parts representation
(arclength derivatives and normal-weighted single layers), scaled by ik so
that the normalized composition with the single layer is second kind; see
``assemble_hypersingular``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh2d import CurveMesh
from .special import EULER_GAMMA, hankel_h1_0, hankel_h1_1

__all__ = [
    "ScatteringParams",
    "assemble_gram",
    "assemble_laplacian",
    "assemble_single_layer",
    "assemble_double_layer",
    "assemble_hypersingular",
    "assemble_helmholtz_pair",
    "assert_symmetric",
]

LOG_COEF = -1.0 / (2.0 * np.pi)  # strength of the ln|r-r'| part of the kernel
SYMMETRY_TOL = 1e-12

# Exact moments over the unit square: integral of n_a(x) n_b(y) ln|x-y|
# for linear shape functions n_0 = 1-x, n_1 = x (same-segment log part).
_SELF_LOG_MOMENTS = np.array([[-7.0 / 16.0, -5.0 / 16.0],
                              [-5.0 / 16.0, -7.0 / 16.0]])

# Adjacent-pair radial log moments on the two Duffy triangles, indexed
# [a, b] with a, b the global local node indices (0 = segment start).
# T1: integral of psi_a psi_b * x * ln x over the triangle y <= x;
# T2: the mirrored triangle.  Derived by expanding the shape products in
# monomials and using  iint x^m t^n ln x = -1/((m+1)^2 (n+1)).
_ADJ_LOG_M1 = np.array([[-23.0 / 288.0, -1.0 / 32.0],
                        [-11.0 / 96.0, -7.0 / 288.0]])
_ADJ_LOG_M2 = np.array([[-7.0 / 288.0, -1.0 / 32.0],
                        [-11.0 / 96.0, -23.0 / 288.0]])
# Coefficients of the angular-factor integrals: entry [a][b] multiplies
# T_0 = int ln(rho) dt  and  T_1 = int t ln(rho) dt  on each triangle.
_ADJ_GAMMA_T1 = {
    "g0": np.array([[1.0 / 3.0, 0.0], [1.0 / 6.0, 0.0]]),
    "g1": np.array([[-1.0 / 4.0, 1.0 / 4.0], [-1.0 / 12.0, 1.0 / 12.0]]),
}
_ADJ_GAMMA_T2 = {
    "g0": np.array([[0.0, 0.0], [1.0 / 6.0, 1.0 / 3.0]]),
    "g1": np.array([[1.0 / 12.0, 1.0 / 4.0], [-1.0 / 12.0, -1.0 / 4.0]]),
}


@dataclass(frozen=True)
class ScatteringParams:
    """Wavenumber/impedance pair describing the background medium."""

    k: float    # rad/m
    eta: float  # ohm

    def __post_init__(self):
        if self.k <= 0:
            raise ValueError("wavenumber must be positive")
        if self.eta <= 0:
            raise ValueError("impedance must be positive")


def assert_symmetric(mat: np.ndarray, rel_tol: float = SYMMETRY_TOL, name: str = "matrix"):
    """Raise if ``mat`` deviates from its transpose beyond ``rel_tol`` (max norm)."""
    scale = np.abs(mat).max()
    if scale == 0.0:
        return
    asym = np.abs(mat - mat.T).max() / scale
    if asym > rel_tol:
        raise AssertionError(f"{name} asymmetry {asym:.3e} exceeds {rel_tol:.1e}")


def _gauss01(order: int):
    """Gauss-Legendre nodes/weights on [0, 1]."""
    x, w = np.polynomial.legendre.leggauss(order)
    return 0.5 * (x + 1.0), 0.5 * w


def _check_order(quad_order: int):
    if quad_order < 2:
        raise ValueError(f"quadrature order must be >= 2, got {quad_order}")


# ---------------------------------------------------------------------------
# Kernels
# ---------------------------------------------------------------------------
def _kernel_full(k: float, d: np.ndarray, kind: str) -> np.ndarray:
    """Single-layer kernel at distance d (> 0)."""
    if kind == "helmholtz":
        return 0.25j * hankel_h1_0(k * d)
    if kind == "yukawa":
        from scipy.special import k0
        return (0.5 / np.pi) * k0(k * d) + 0.0j
    raise ValueError(f"unknown kernel kind {kind!r}")


def _kernel_smooth(k: float, d: np.ndarray, kind: str) -> np.ndarray:
    """Single-layer kernel plus ln(d)/(2 pi): bounded as d -> 0."""
    out = _kernel_full(k, d, kind) - LOG_COEF * np.log(d)
    return out


def _kernel_smooth_limit(k: float, kind: str) -> complex:
    """d -> 0 limit of the smooth kernel remainder."""
    if kind == "helmholtz":
        return 0.25j - (np.log(0.5 * k) + EULER_GAMMA) / (2.0 * np.pi)
    return -(np.log(0.5 * k) + EULER_GAMMA) / (2.0 * np.pi) + 0.0j


# ---------------------------------------------------------------------------
# Shared machinery: per-pair shape-function blocks of the single layer
# ---------------------------------------------------------------------------
def _rolled_add(dst: np.ndarray, src: np.ndarray, a: int, b: int):
    """dst[i, j] += src[i-a, j-b] with cyclic wrap, without temporaries."""
    n = dst.shape[0]
    ra, rb = a % n, b % n
    dst[ra:, rb:] += src[: n - ra, : n - rb]
    dst[:ra, rb:] += src[n - ra:, : n - rb]
    dst[ra:, :rb] += src[: n - ra, n - rb:]
    dst[:ra, :rb] += src[n - ra:, n - rb:]


def _far_pair_accumulate(mesh, k, quad_order, kind, accum):
    """Tensor-Gauss contributions of all segment pairs to the four
    shape-function accumulators ``accum[a][b]``; touching-pair entries are
    filled with garbage and must be overwritten by the caller."""
    n = mesh.n_nodes
    ell = mesh.segment_lengths
    x, w = _gauss01(quad_order)
    g = len(x)
    # quadrature points per segment: pts[q] is (n, 2) for node q
    chords = mesh.tangents * ell[:, None]
    pts = mesh.nodes[None, :, :] + x[:, None, None] * chords[None, :, :]
    shapes = np.stack([1.0 - x, x])  # shapes[a][g]
    jac = np.outer(ell, ell)
    floor = 1e-12 * mesh.h

    kern = np.empty((n, n), np.complex128)
    kern_t = np.empty((n, n), np.complex128)
    for gi in range(g):
        dxi = pts[gi, :, 0][:, None]
        dyi = pts[gi, :, 1][:, None]
        for hi in range(gi, g):
            dx = dxi - pts[hi, :, 0][None, :]
            dy = dyi - pts[hi, :, 1][None, :]
            d = np.sqrt(dx * dx + dy * dy)
            np.maximum(d, floor, out=d)
            kern[:] = _kernel_full(k, d, kind)
            kern *= jac
            ww = w[gi] * w[hi]
            if hi == gi:
                for a in range(2):
                    for b in range(2):
                        accum[a][b] += (ww * shapes[a, gi] * shapes[b, gi]) * kern
            else:
                np.copyto(kern_t, kern.T)
                for a in range(2):
                    for b in range(2):
                        accum[a][b] += (ww * shapes[a, gi] * shapes[b, hi]) * kern
                        accum[a][b] += (ww * shapes[a, hi] * shapes[b, gi]) * kern_t


def _self_pair_blocks(mesh, k, near_order, kind):
    """Exact-log + smooth-remainder blocks for every same-segment pair.

    Returns blocks[a][b] of shape (n,).
    """
    ell = mesh.segment_lengths
    x, w = _gauss01(near_order)
    diff = np.abs(x[:, None] - x[None, :])
    d = ell[:, None, None] * diff[None, :, :]
    sm = np.empty(d.shape, np.complex128)
    mask = d > 0.0
    sm[mask] = _kernel_smooth(k, d[mask], kind)
    sm[~mask] = _kernel_smooth_limit(k, kind)

    shapes = np.stack([1.0 - x, x])
    blocks = [[None, None], [None, None]]
    log_scale = LOG_COEF * ell * ell
    for a in range(2):
        for b in range(2):
            coef = np.outer(w * shapes[a], w * shapes[b])
            smooth = ell * ell * np.einsum("pgh,gh->p", sm, coef)
            blocks[a][b] = log_scale * (0.25 * np.log(ell) + _SELF_LOG_MOMENTS[a, b]) + smooth
    return blocks


def _adjacent_pair_blocks(mesh, k, near_order, kind):
    """Blocks for every adjacent ordered pair (p, p+1).

    Coordinates are measured from the shared node: on segment p the local
    variable runs backward (so shape a=1, the shared node, is 1-x) and on
    segment p+1 forward.  Returns blocks[a][b] of shape (n,).
    """
    n = mesh.n_nodes
    ell = mesh.segment_lengths
    lp = ell
    lq = np.roll(ell, -1)
    cosang = np.sum(mesh.tangents * np.roll(mesh.tangents, -1, axis=0), axis=1)

    tg, tw = _gauss01(near_order)
    # radial factors rho on the two Duffy triangles
    rho1_sq = lp[:, None] ** 2 + (lq[:, None] * tg) ** 2 \
        + 2.0 * lp[:, None] * lq[:, None] * tg * cosang[:, None]
    rho2_sq = lq[:, None] ** 2 + (lp[:, None] * tg) ** 2 \
        + 2.0 * lp[:, None] * lq[:, None] * tg * cosang[:, None]
    t0_1 = 0.5 * (np.log(rho1_sq) @ tw)
    t1_1 = 0.5 * (np.log(rho1_sq) @ (tw * tg))
    t0_2 = 0.5 * (np.log(rho2_sq) @ tw)
    t1_2 = 0.5 * (np.log(rho2_sq) @ (tw * tg))

    # smooth remainder over the full square, from-shared-node coordinates
    xg = tg
    d_sq = (lp[:, None, None] * xg[None, :, None]) ** 2 \
        + (lq[:, None, None] * xg[None, None, :]) ** 2 \
        + 2.0 * (lp * lq * cosang)[:, None, None] * xg[None, :, None] * xg[None, None, :]
    sm = _kernel_smooth(k, np.sqrt(d_sq), kind)

    shp_p = np.stack([xg, 1.0 - xg])       # psi_a on segment p vs from-node coord
    shp_q = np.stack([1.0 - xg, xg])       # psi_b on segment q
    blocks = [[None, None], [None, None]]
    scale = lp * lq
    for a in range(2):
        for b in range(2):
            logpart = _ADJ_LOG_M1[a, b] + _ADJ_LOG_M2[a, b] \
                + _ADJ_GAMMA_T1["g0"][a, b] * t0_1 + _ADJ_GAMMA_T1["g1"][a, b] * t1_1 \
                + _ADJ_GAMMA_T2["g0"][a, b] * t0_2 + _ADJ_GAMMA_T2["g1"][a, b] * t1_2
            coef = np.outer(tw * shp_p[a], tw * shp_q[b])
            smooth = np.einsum("pgh,gh->p", sm, coef)
            blocks[a][b] = scale * (LOG_COEF * logpart + smooth)
    return blocks


def _single_layer_blocks(mesh, k, quad_order, kind="helmholtz"):
    """Shape-function blocks A[a][b][p, q] = iint psi_a psi_b g over pair (p, q)."""
    _check_order(quad_order)
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    n = mesh.n_nodes
    near_order = max(3 * quad_order, 24)
    accum = [[np.zeros((n, n), np.complex128) for _ in range(2)] for _ in range(2)]
    _far_pair_accumulate(mesh, k, quad_order, kind, accum)

    idx = np.arange(n)
    nxt = (idx + 1) % n
    self_blocks = _self_pair_blocks(mesh, k, near_order, kind)
    adj_blocks = _adjacent_pair_blocks(mesh, k, near_order, kind)
    for a in range(2):
        for b in range(2):
            accum[a][b][idx, idx] = self_blocks[a][b]
            accum[a][b][idx, nxt] = adj_blocks[a][b]
            accum[a][b][nxt, idx] = adj_blocks[b][a]
    return accum


# ---------------------------------------------------------------------------
# Public assembly routines
# ---------------------------------------------------------------------------
def assemble_gram(mesh: CurveMesh) -> np.ndarray:
    """Piecewise-linear mass matrix (analytic per-segment integrals).

    Uniform mesh of segment length h: diagonal 2h/3, neighbors h/6.
    Row sums equal the nodal arclength weights (l_left + l_right)/2.
    """
    n = mesh.n_nodes
    ell = mesh.segment_lengths
    gram = np.zeros((n, n))
    idx = np.arange(n)
    nxt = (idx + 1) % n
    gram[idx, idx] = (np.roll(ell, 1) + ell) / 3.0
    gram[idx, nxt] = ell / 6.0
    gram[nxt, idx] = ell / 6.0
    return gram


def assemble_laplacian(mesh: CurveMesh) -> np.ndarray:
    """Variational Laplacian: stiffness of arclength derivatives of hats.

    Positive semidefinite with the constant vector in its nullspace.
    """
    n = mesh.n_nodes
    inv = 1.0 / mesh.segment_lengths
    lap = np.zeros((n, n))
    idx = np.arange(n)
    nxt = (idx + 1) % n
    lap[idx, idx] = np.roll(inv, 1) + inv
    lap[idx, nxt] = -inv
    lap[nxt, idx] = -inv
    return lap


def assemble_single_layer(mesh: CurveMesh, k: float, quad_order: int = 8,
                          kind: str = "helmholtz") -> np.ndarray:
    """Galerkin single-layer matrix, hat functions against hat functions.

    Parameters
    ----------
    mesh : CurveMesh
    k : float
        Wavenumber (rad/m), > 0.
    quad_order : int
        Gauss-Legendre order per direction on non-touching pairs (>= 2);
        touching pairs use the split singular scheme at order
        max(3*quad_order, 24), so doubling ``quad_order`` probes far-pair
        convergence without moving the (already tighter) near treatment.
    kind : {"helmholtz", "yukawa"}
        Oscillatory kernel (first-kind Hankel) or the exponentially
        decaying one on an imaginary wavenumber of the same magnitude.

    Returns
    -------
    np.ndarray, complex128, (n, n), symmetric.
    """
    blocks = _single_layer_blocks(mesh, k, quad_order, kind)
    n = mesh.n_nodes
    out = np.zeros((n, n), np.complex128)
    for a in range(2):
        for b in range(2):
            _rolled_add(out, blocks[a][b], a, b)
    assert_symmetric(out, name="single-layer matrix")
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("single-layer matrix contains non-finite entries")
    return out


def assemble_hypersingular(mesh: CurveMesh, k: float, quad_order: int = 8) -> np.ndarray:
    """Hypersingular operator via integration by parts, scaled by ik.

    The bilinear form is  ik * [ <psi', S phi'> - k^2 <psi n, S(phi n)> ]
    with arclength derivatives; the ik scaling makes the normalized
    composition (ik)^{-1} G^{-1/2} S G^{-1} N G^{-1/2} cluster at +1/4
    (the second-kind identity used throughout this package).
    """
    blocks = _single_layer_blocks(mesh, k, quad_order)
    return _hypersingular_from_blocks(mesh, k, blocks)


def _hypersingular_from_blocks(mesh, k, blocks):
    n = mesh.n_nodes
    ell = mesh.segment_lengths
    total = blocks[0][0] + blocks[0][1] + blocks[1][0] + blocks[1][1]
    winv = total * np.outer(1.0 / ell, 1.0 / ell)
    deriv = np.zeros((n, n), np.complex128)
    _rolled_add(deriv, winv, 1, 1)
    _rolled_add(deriv, -winv, 1, 0)
    _rolled_add(deriv, -winv, 0, 1)
    deriv += winv

    normal_dot = mesh.normals @ mesh.normals.T
    nweighted = np.zeros((n, n), np.complex128)
    for a in range(2):
        for b in range(2):
            _rolled_add(nweighted, normal_dot * blocks[a][b], a, b)

    out = 1j * k * (deriv - k * k * nweighted)
    assert_symmetric(out, name="hypersingular matrix")
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("hypersingular matrix contains non-finite entries")
    return out


def assemble_helmholtz_pair(mesh: CurveMesh, k: float, quad_order: int = 8):
    """Assemble the single-layer and hypersingular matrices in one kernel pass.

    Returns
    -------
    (slayer, hyper) : tuple of np.ndarray
    """
    blocks = _single_layer_blocks(mesh, k, quad_order)
    n = mesh.n_nodes
    slayer = np.zeros((n, n), np.complex128)
    for a in range(2):
        for b in range(2):
            _rolled_add(slayer, blocks[a][b], a, b)
    assert_symmetric(slayer, name="single-layer matrix")
    hyper = _hypersingular_from_blocks(mesh, k, blocks)
    return slayer, hyper


# ---------------------------------------------------------------------------
# Double layer
# ---------------------------------------------------------------------------
def _dlayer_far_accumulate(mesh, k, quad_order, accum):
    n = mesh.n_nodes
    ell = mesh.segment_lengths
    x, w = _gauss01(quad_order)
    g = len(x)
    chords = mesh.tangents * ell[:, None]
    pts = mesh.nodes[None, :, :] + x[:, None, None] * chords[None, :, :]
    shapes = np.stack([1.0 - x, x])
    jac = np.outer(ell, ell)
    nx = mesh.normals[:, 0]
    ny = mesh.normals[:, 1]
    floor = 1e-12 * mesh.h

    for gi in range(g):
        for hi in range(g):
            dx = pts[gi, :, 0][:, None] - pts[hi, :, 0][None, :]
            dy = pts[gi, :, 1][:, None] - pts[hi, :, 1][None, :]
            d = np.sqrt(dx * dx + dy * dy)
            np.maximum(d, floor, out=d)
            wdot = dx * nx[None, :] + dy * ny[None, :]
            kern = (0.25j * k) * hankel_h1_1(k * d) * (wdot / d)
            kern *= jac
            ww = w[gi] * w[hi]
            for a in range(2):
                for b in range(2):
                    accum[a][b] += (ww * shapes[a, gi] * shapes[b, hi]) * kern


def _dlayer_adjacent_generic(k, lt, ls, cc, wc, near_order):
    """Double-layer blocks for ordered adjacent pairs sharing a node.

    Coordinates run away from the shared node on both segments: test point
    r = v + u e_T, source r' = v + s e_S, with ``cc = e_T . e_S`` and
    ``wc = e_T . n_S`` (source normal).  Then (r - r').n_S = u * wc and
    d^2 = u^2 + s^2 - 2 u s cc, so after the Duffy split the static
    inverse-square part of the kernel is a polynomial over an angular
    factor, integrated exactly in the radial direction.

    Shape functions are in shared-node convention: index 0 is the hat of
    the shared node (1 - coordinate), index 1 the far one.  Returns
    blocks[a_hat][b_hat], each of shape (n,).
    """
    tg, tw = _gauss01(near_order)
    rho1_sq = lt[:, None] ** 2 + (ls[:, None] * tg) ** 2 \
        - 2.0 * (lt * ls)[:, None] * tg * cc[:, None]
    rho2_sq = ls[:, None] ** 2 + (lt[:, None] * tg) ** 2 \
        - 2.0 * (lt * ls)[:, None] * tg * cc[:, None]

    # int psi_a(x) psi_b(x t) dx on the first triangle and
    # int psi_a(y t) psi_b(y) dy on the second, as polynomials in t
    p1 = {(0, 0): 0.5 - tg / 6.0, (0, 1): tg / 6.0,
          (1, 0): 0.5 - tg / 3.0, (1, 1): tg / 3.0}
    p2 = {(0, 0): 0.5 - tg / 6.0, (0, 1): 0.5 - tg / 3.0,
          (1, 0): tg / 6.0, (1, 1): tg / 3.0}

    static_scale = (lt * lt * ls * wc) / (2.0 * np.pi)

    # remainder (full kernel minus static part) over the full square
    d_sq = (lt[:, None, None] * tg[None, :, None]) ** 2 \
        + (ls[:, None, None] * tg[None, None, :]) ** 2 \
        - 2.0 * (lt * ls * cc)[:, None, None] * tg[None, :, None] * tg[None, None, :]
    d = np.sqrt(d_sq)
    wdot = (lt * wc)[:, None, None] * tg[None, :, None]
    rem = wdot * ((0.25j * k) * hankel_h1_1(k * d) / d - 1.0 / (2.0 * np.pi * d_sq))

    hat = np.stack([1.0 - tg, tg])
    blocks = [[None, None], [None, None]]
    for a in range(2):
        for b in range(2):
            stat = static_scale * (
                (p1[a, b] / rho1_sq) @ tw + ((tg * p2[a, b]) / rho2_sq) @ tw
            )
            coef = np.outer(tw * hat[a], tw * hat[b])
            smooth = (lt * ls) * np.einsum("pgh,gh->p", rem, coef)
            blocks[a][b] = stat + smooth
    return blocks


def assemble_double_layer(mesh: CurveMesh, k: float, quad_order: int = 8) -> np.ndarray:
    """Galerkin double-layer matrix (normal derivative at the source point).

    The kernel is bounded on smooth curves; on the polygonal chain it
    vanishes identically on same-segment pairs (flat-segment limit), so
    self-pair blocks are zero and adjacent pairs carry the near-singular
    static part, integrated by the Duffy split.
    """
    _check_order(quad_order)
    if k <= 0:
        raise ValueError("wavenumber must be positive")
    n = mesh.n_nodes
    near_order = max(3 * quad_order, 24)
    accum = [[np.zeros((n, n), np.complex128) for _ in range(2)] for _ in range(2)]
    _dlayer_far_accumulate(mesh, k, quad_order, accum)

    idx = np.arange(n)
    nxt = (idx + 1) % n
    ell = mesh.segment_lengths
    tang = mesh.tangents
    nrm = mesh.normals
    ell_next = np.roll(ell, -1)
    cc = -np.sum(tang * np.roll(tang, -1, axis=0), axis=1)  # away-from-node dirs

    # ordered pair (p, p+1): test = p (shared node local 1), source = p+1
    fwd = _dlayer_adjacent_generic(
        k, ell, ell_next, cc, -np.sum(tang * np.roll(nrm, -1, axis=0), axis=1),
        near_order)
    # ordered pair (p+1, p): test = p+1 (shared local 0), source = p
    bwd = _dlayer_adjacent_generic(
        k, ell_next, ell, cc, np.sum(np.roll(tang, -1, axis=0) * nrm, axis=1),
        near_order)

    out = np.zeros((n, n), np.complex128)
    for a in range(2):
        for b in range(2):
            accum[a][b][idx, idx] = 0.0
            accum[a][b][idx, nxt] = fwd[1 - a][b]
            accum[a][b][nxt, idx] = bwd[a][1 - b]
            _rolled_add(out, accum[a][b], a, b)
    if not np.all(np.isfinite(out)):
        raise FloatingPointError("double-layer matrix contains non-finite entries")
    return out
