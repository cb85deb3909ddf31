"""Free-fermion backend for quadratic Ising-type circuits.

Jordan-Wigner frame with Majoranas a_{2j} = c_j + c_j^dag and
a_{2j+1} = i (c_j - c_j^dag), where c_j annihilates the all-up state, so

    Z_j          = i a_{2j} a_{2j+1}
    X_j X_{j+1}  = i a_{2j+1} a_{2j+2}

and every gate of an XXBond/ZField circuit is a two-Majorana rotation
exp(theta a_p a_q).  Pure states are carried as annihilator frames: a
2N x N matrix Q whose columns are the coefficient vectors of operators
annihilating the state.  Complex couplings make the transfer matrices
complex orthogonal, which preserves the frame's isotropy exactly; a
Hermitian re-orthonormalization after every layer keeps the columns
well conditioned.

The all-up initial state has even fermion parity, which quadratic gates
conserve, so the wrap-around XX bond is taken in the antiperiodic sector
(its generator carries a relative minus sign) throughout.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np
import scipy.linalg

from dualcirc.circuits import CircuitSpec, Layer, LayerKind, SpecError
from dualcirc.dense import ZeroAmplitude

_RANK_TOL = 1e-13
_ORTHO_TOL = 1e-10

# (pair offset, wrap sign) per layer kind: field gates live on Majorana
# pair (2j, 2j+1), bond gates on (2j+1, 2j+2) with the boundary pair
# (2N-1, 0) flipped for antiperiodicity.
_FIELD_LIKE = {LayerKind.Z_FIELD, LayerKind.X_FIELD}
_BOND_LIKE = {LayerKind.XX_BOND, LayerKind.ZZ_BOND}
_FIELD_PROJ = {LayerKind.PROJ_Z, LayerKind.PROJ_X}
_BOND_PROJ = {LayerKind.PROJ_XX, LayerKind.PROJ_ZZ}


def _gate_pairs(layer: Layer, n_sites: int) -> list:
    """(p, q, theta_sign) Majorana pairs for each site/bond of the layer."""
    if layer.kind in _FIELD_LIKE | _FIELD_PROJ:
        return [(2 * j, 2 * j + 1, 1.0) for j in range(n_sites)]
    if layer.kind in _BOND_LIKE | _BOND_PROJ:
        out = []
        for j in range(n_sites):
            if j < n_sites - 1:
                out.append((2 * j + 1, 2 * j + 2, 1.0))
            else:
                out.append((2 * n_sites - 1, 0, -1.0))
        return out
    raise SpecError(f"layer kind {layer.kind.value} is not quadratic")


def layer_transfer(layer: Layer, n_sites: int) -> np.ndarray:
    """2N x 2N complex-orthogonal transfer matrix E with Q' = E Q."""
    if np.any(layer.proj):
        raise SpecError("projector layers act through project_frame")
    e = np.eye(2 * n_sites, dtype=complex)
    for (p, q, sgn), th in zip(_gate_pairs(layer, n_sites), layer.couplings):
        if th == 0:
            continue
        # exp(i th P) with P = i a_p a_q (interior) gives exp(-th a_p a_q);
        # the wrap-around bond picks up the antiperiodic minus sign.
        t = -sgn * complex(th)
        c, s = cmath.cos(2 * t), cmath.sin(2 * t)
        e[[p, q], :] = np.array([[c, s], [-s, c]]) @ e[[p, q], :]
    return e


def floquet_orthogonal(spec: CircuitSpec) -> np.ndarray:
    """Real orthogonal single-particle matrix of one unitary period."""
    n = spec.num_sites
    e = np.eye(2 * n, dtype=complex)
    for lay in spec.layers:
        if np.any(np.abs(lay.couplings.imag) > 1e-14) or np.any(lay.proj):
            raise SpecError("floquet_orthogonal needs a fully unitary period")
        e = layer_transfer(lay, n) @ e
    o = e.real
    if np.abs(o @ o.T - np.eye(2 * n)).max() > _ORTHO_TOL:
        raise SpecError("period matrix is not orthogonal")
    return o


# ---------------------------------------------------------------------------
# Annihilator frames.


def vacuum_frame(n_sites: int) -> np.ndarray:
    """Frame of the all-up product state: columns c_j = (a_{2j} - i a_{2j+1})/2."""
    q = np.zeros((2 * n_sites, n_sites), dtype=complex)
    for j in range(n_sites):
        q[2 * j, j] = 0.5
        q[2 * j + 1, j] = -0.5j
    return q


def purified_mixed_frame(n_sites: int) -> np.ndarray:
    """Frame on system + mirror sites purifying the maximally mixed state.

    Each annihilator pairs system Majorana i with mirror Majorana 2n + i,
    f_i = (a_i + i a_{2n+i}) / 2, so every system-block covariance entry
    vanishes.  Circuit layers should be embedded on the system half only
    (see embed_system_transfer).
    """
    n2 = 2 * n_sites
    q = np.zeros((2 * n2, n2), dtype=complex)
    for i in range(n2):
        q[i, i] = 0.5
        q[n2 + i, i] = 0.5j
    return q


def embed_system_transfer(e_sys: np.ndarray, n_total_majorana: int) -> np.ndarray:
    """Extend a system-only transfer matrix by the identity on the mirror."""
    m = e_sys.shape[0]
    e = np.eye(n_total_majorana, dtype=complex)
    e[:m, :m] = e_sys
    return e


def renormalize_frame(q: np.ndarray) -> np.ndarray:
    """Restore Q^dag Q = I/2 by recombining columns within their span.

    Column equilibration followed by a Cholesky solve of the Gram matrix;
    falls back to QR if the equilibrated Gram matrix is numerically
    rank deficient, and raises ZeroAmplitude when the span itself has
    collapsed (a projector annihilated the state).
    """
    norms = np.linalg.norm(q, axis=0)
    if norms.min() < _RANK_TOL:
        raise ZeroAmplitude("frame column collapsed")
    qe = q / norms[None, :]
    g = qe.conj().T @ qe
    try:
        low = np.linalg.cholesky(g)
        # Q_new = Q_e L^{-dag} / sqrt(2), via (L^dag)^{-T} = conj(L)^{-1}
        sol = scipy.linalg.solve_triangular(low.conj(), qe.T, lower=True)
        return sol.T / math.sqrt(2.0)
    except np.linalg.LinAlgError:
        w, r = np.linalg.qr(qe)
        if np.abs(np.diag(r)).min() < 1e-10:
            raise ZeroAmplitude("frame rank collapsed") from None
        return w / math.sqrt(2.0)


def evolve_frame(q: np.ndarray, e: np.ndarray) -> np.ndarray:
    """Apply a layer transfer and re-orthonormalize."""
    return renormalize_frame(e @ q)


def project_frame(q: np.ndarray, p: int, qq: int, sign: int) -> np.ndarray:
    """Forced projection onto the sign eigenspace of i a_p a_q.

    With d = (a_p - i sign a_q)/2 the projector is d d^dag.  The projected
    state is annihilated by d, by every old annihilator combination that
    anticommutes to zero with both d and d^dag, and by one remaining
    combination u with {A(u), d^dag} = 0 after subtracting its d^dag
    component.  This is exact; no large-angle rotation limit is taken.
    """
    n2, n = q.shape
    w_d = np.zeros(n2, dtype=complex)
    w_d[p], w_d[qq] = 0.5, -0.5j * sign
    w_dd = np.conj(w_d)  # coefficient vector of d^dag
    # anticommutators of each frame annihilator with d and d^dag
    c = q[p, :] - 1j * sign * q[qq, :]
    e = q[p, :] + 1j * sign * q[qq, :]
    survival = 1.0 - float(np.sum(np.abs(c) ** 2))
    if survival < 1e-12:
        raise ZeroAmplitude("state orthogonal to the projector eigenspace")
    _, s2, vh = np.linalg.svd(np.vstack([c, e]))
    rank = int(np.sum(s2 > 1e-12))
    cols = [q @ vh[rank:].conj().T]  # combinations killed by both
    if rank:
        row_basis = vh[:rank].conj().T
        e_on = e @ row_basis
        if rank == 2:
            alpha = np.array([e_on[1], -e_on[0]])
            u = row_basis @ alpha
            cols.append((q @ u - (c @ u) * w_dd)[:, None])
        elif abs(e_on[0]) < 1e-12:
            u = row_basis[:, 0]
            cols.append((q @ u - (c @ u) * w_dd)[:, None])
        elif np.abs(c).max() < 1e-12:
            # d already annihilates the state; the old combination survives
            cols.append(q @ row_basis)
    cols.append(w_d[:, None])
    # the candidates can be linearly dependent (w_d may already lie in the
    # old span); keep an orthonormal basis of the right rank
    stacked = np.concatenate(cols, axis=1)
    u, s, _ = np.linalg.svd(stacked, full_matrices=False)
    keep = s > 1e-10 * max(1.0, s[0])
    if int(keep.sum()) != n:
        raise ZeroAmplitude("projected frame lost rank")
    return u[:, keep] / math.sqrt(2.0)


def project_layer_pairs(layer: Layer, n_sites: int) -> list:
    """(p, q, sign of i a_p a_q) for each tagged projector of the layer.

    (1 + s Z_j)/2 with Z = i a a' projects i a a' onto s; likewise for
    (1 + s XX)/2, with the antiperiodic boundary sign folded in.
    """
    out = []
    for (p, qq, sgn), s in zip(_gate_pairs(layer, n_sites), layer.proj):
        if s == 0:
            continue
        out.append((p, qq, int(s) if sgn > 0 else -int(s)))
    return out


def apply_layer_frame(q: np.ndarray, layer: Layer, n_sites: int,
                      renormalize: bool = True) -> np.ndarray:
    """Evolve a frame by one circuit layer (unitary, non-unitary or projector).

    The gates of a layer act on disjoint Majorana pairs, so the rotation
    is applied as one vectorized row update instead of a 2N x 2N matrix
    product; frames larger than 2 * n_sites (purified system + mirror)
    are handled automatically since the mirror rows are never touched.
    """
    if layer.kind in _FIELD_PROJ | _BOND_PROJ:
        for p, qq, sign in project_layer_pairs(layer, n_sites):
            q = project_frame(q, p, qq, sign)
        return q
    pairs = _gate_pairs(layer, n_sites)
    ps = np.array([p for p, _, _ in pairs])
    qs = np.array([qq for _, qq, _ in pairs])
    ts = -np.array([sgn for _, _, sgn in pairs]) * layer.couplings
    c = np.cos(2 * ts)[:, None]
    s = np.sin(2 * ts)[:, None]
    out = q.astype(complex, copy=True)
    rp, rq = out[ps], out[qs]
    out[ps] = c * rp + s * rq
    out[qs] = -s * rp + c * rq
    return renormalize_frame(out) if renormalize else out


def run_layers_frame(
    q: np.ndarray, layers: Sequence[Layer], n_sites: int, renorm_every: int = 1
) -> np.ndarray:
    """Apply a layer sequence; ``renorm_every`` sets how many non-projector
    layers may pass between re-orthonormalizations."""
    since = 0
    for lay in layers:
        if lay.kind in _FIELD_PROJ | _BOND_PROJ:
            q = apply_layer_frame(q, lay, n_sites)
            since = 0
            continue
        since += 1
        q = apply_layer_frame(q, lay, n_sites, renormalize=since >= renorm_every)
        if since >= renorm_every:
            since = 0
    if since:
        q = renormalize_frame(q)
    return q


# ---------------------------------------------------------------------------
# Covariance and entropy.


def covariance_from_frame(q: np.ndarray) -> np.ndarray:
    """Real antisymmetric K with <a_j a_k> = delta_jk + i K_jk."""
    n2 = q.shape[0]
    m = 4.0 * (q.conj() @ q.T) - np.eye(n2)
    k = (-1j * m)
    if np.abs(k.imag).max() > 1e-9:
        raise SpecError("covariance has a non-real residue; frame invalid")
    return k.real


def entropy_from_covariance(k: np.ndarray, region: Sequence[int]) -> float:
    """Von Neumann entropy (nats) of a site region from the covariance."""
    idx = []
    for j in sorted(region):
        idx.extend((2 * j, 2 * j + 1))
    ka = k[np.ix_(idx, idx)]
    nu = np.linalg.svd(ka, compute_uv=False)
    nu = np.clip(nu, 0.0, 1.0)
    p = 0.5 * (1.0 + nu)
    ent = -(p * np.log(np.maximum(p, 1e-300)) + (1 - p) * np.log(np.maximum(1 - p, 1e-300)))
    return float(0.5 * ent.sum())


def frame_entropy(q: np.ndarray, region: Sequence[int]) -> float:
    return entropy_from_covariance(covariance_from_frame(q), region)


# ---------------------------------------------------------------------------
# Single-particle diagnostics.


def ipr_spectrum(o: np.ndarray) -> np.ndarray:
    """Inverse participation ratio 1 / sum |psi_i|^4 per eigenvector of O."""
    _, v = np.linalg.eig(o)
    v = v / np.linalg.norm(v, axis=0, keepdims=True)
    return 1.0 / np.sum(np.abs(v) ** 4, axis=0)


def _w_blocks(k: float, j: complex, h: complex) -> tuple:
    """4x4 momentum-space generators of the XX and Z half-periods.

    Basis (a_k^{(0)}, a_k^{(1)}, a_{-k}^{(0)}, a_{-k}^{(1)}) with the two
    Majorana flavors per site as the unit cell; each generator is block
    diagonal in (k, -k) and its exponential reproduces the corresponding
    block of the real-space layer transfer at antiperiodic momenta.
    """

    def g_z(kk):
        t = -h
        return np.array([[0, 2 * t], [-2 * t, 0]], dtype=complex)

    def g_x(kk):
        t = -j
        ek = cmath.exp(1j * kk)
        return np.array([[0, -2 * t / ek], [2 * t * ek, 0]], dtype=complex)

    def diag4(f):
        w = np.zeros((4, 4), dtype=complex)
        w[:2, :2] = f(k)
        w[2:, 2:] = f(-k)
        return w

    return diag4(g_x), diag4(g_z)


def dual_spectrum_k(k: float, j: complex, h: complex) -> tuple:
    """Quasi-energies of one momentum mode of an XX + Z Floquet period.

    Returns (eps, x) with exp(w) = x/4 +- sqrt((x/4)^2 - 1) and
    eps = +- sqrt(-w^2);  x = 2(1+cos k)cos(2h-2J) + 2(1-cos k)cos(2h+2J).
    The closed form is checked against the numerically diagonalized
    exp(W_XX) exp(W_Z) block product.
    """
    j, h = complex(j), complex(h)
    x = 2 * (1 + math.cos(k)) * cmath.cos(2 * h - 2 * j) + 2 * (1 - math.cos(k)) * cmath.cos(
        2 * h + 2 * j
    )
    disc = cmath.sqrt((x / 4) ** 2 - 1)
    ew = x / 4 + disc
    w_xx, w_z = _w_blocks(k, j, h)
    ek_mat = scipy.linalg.expm(w_xx) @ scipy.linalg.expm(w_z)
    evs = np.linalg.eigvals(ek_mat)
    for target in (ew, 1.0 / ew):
        if np.abs(evs - target).min() > 1e-10 * max(1.0, abs(target)):
            raise SpecError("closed-form spectrum disagrees with block diagonalization")
    w = cmath.log(ew)
    eps = cmath.sqrt(-(w ** 2))
    return eps, x


def real_energy_window(
    alpha_h: float, alpha_j: float, n_grid: int = 4096
) -> float:
    """Fraction of k in (0, pi) whose quasi-energy is purely real.

    Couplings J = pi/4 + i alpha_j, h = pi/4 + i alpha_h; the mode at k is
    real exactly when |x/4| < 1 with
    x = 2(1+cos k)cosh(2a_h-2a_j) - 2(1-cos k)cosh(2a_h+2a_j).
    """
    k = (np.arange(n_grid) + 0.5) * math.pi / n_grid
    x = 2 * (1 + np.cos(k)) * math.cosh(2 * alpha_h - 2 * alpha_j) - 2 * (
        1 - np.cos(k)
    ) * math.cosh(2 * alpha_h + 2 * alpha_j)
    return float(np.mean(np.abs(x / 4) < 1.0))


def real_window_half_width(alpha_h: float) -> float:
    """Closed-form half width of the real-energy k-window at alpha_j = 0."""
    return math.asin(1.0 / math.cosh(2 * alpha_h))
