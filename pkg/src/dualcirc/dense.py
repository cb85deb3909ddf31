"""Exact state-vector backend.

States are flat complex arrays of length 2**n with site 0 on the most
significant bit, so |up...up> is index 0 and the Z eigenvalue of site j
at basis index b is 1 - 2*((b >> (n-1-j)) & 1).  Layer application also
accepts a (2**n, m) array of column states, which is how period matrices
are assembled.

Everything here is meant for n <= 14 or so; the large-system work is done
by the free-fermion and stabilizer backends, with this module as oracle.
"""

from __future__ import annotations

import cmath
import math
from functools import lru_cache
from typing import Iterable, Sequence

import numpy as np

from dualcirc.circuits import (
    CircuitSpec,
    Layer,
    LayerKind,
    SpecError,
    dual_coupling_x_from_zz,
    dual_coupling_zz_from_x,
)

# Norm below this after a projector means the trajectory was annihilated.
_NORM_TOL = 1e-14


class ZeroAmplitude(Exception):
    """A forced projector annihilated the state."""


_TORCH = None


def _torch():
    """torch module if importable, else None (plain numpy fallback)."""
    global _TORCH
    if _TORCH is None:
        try:
            import torch

            _TORCH = torch
        except ImportError:
            _TORCH = False
    return _TORCH or None


@lru_cache(maxsize=32)
def _spins(n: int) -> np.ndarray:
    """(n, 2**n) array of Z eigenvalues, site-major bit convention."""
    idx = np.arange(1 << n)
    return (1 - 2 * ((idx[None, :] >> (n - 1 - np.arange(n)[:, None])) & 1)).astype(
        np.float64
    )


def initial_state(n: int) -> np.ndarray:
    psi = np.zeros(1 << n, dtype=complex)
    psi[0] = 1.0
    return psi


def layer_targets(layer: Layer, sites) -> list:
    """Sites or site pairs each coupling of the layer acts on."""
    if isinstance(sites, tuple):
        lx, ly = sites
        if layer.kind in (LayerKind.X_FIELD, LayerKind.Z_FIELD, LayerKind.PROJ_X,
                          LayerKind.PROJ_Z):
            return [(i,) for i in range(lx * ly)]
        out = []
        for y in range(ly):
            for x in range(lx):
                i = x + lx * y
                if layer.orientation == "x":
                    j = (x + 1) % lx + lx * y
                else:
                    j = x + lx * ((y + 1) % ly)
                out.append((i, j))
        return out
    n = sites
    if layer.kind in (LayerKind.X_FIELD, LayerKind.Z_FIELD, LayerKind.PROJ_X,
                      LayerKind.PROJ_Z):
        return [(i,) for i in range(n)]
    return [(i, (i + 1) % n) for i in range(n)]


def _mix_site(psi: np.ndarray, n: int, j: int, theta: complex) -> np.ndarray:
    """exp(i theta X_j) acting on the first axis."""
    shaped = psi.reshape(1 << j, 2, -1)
    flipped = shaped[:, ::-1, :]
    return (np.cos(theta) * shaped + 1j * np.sin(theta) * flipped).reshape(psi.shape)


def _flip_mask_index(n: int, sites: Iterable[int]) -> np.ndarray:
    mask = 0
    for j in sites:
        mask |= 1 << (n - 1 - j)
    return np.arange(1 << n) ^ mask


def apply_layer(psi: np.ndarray, layer: Layer, sites) -> np.ndarray:
    """Apply one layer to a state (or a batch of column states)."""
    n = (psi.shape[0] - 1).bit_length()
    targets = layer_targets(layer, sites)
    kind = layer.kind
    bshape = (-1,) + (1,) * (psi.ndim - 1)
    spins = _spins(n)

    if kind in (LayerKind.Z_FIELD, LayerKind.ZZ_BOND):
        expo = np.zeros(1 << n, dtype=complex)
        for c, p, tgt in zip(layer.couplings, layer.proj, targets):
            if p:
                raise SpecError("projector tag on a unitary-kind layer")
            if c == 0:
                continue
            d = spins[tgt[0]]
            if len(tgt) == 2:
                d = d * spins[tgt[1]]
            expo += c * d
        return psi * np.exp(1j * expo).reshape(bshape)

    if kind == LayerKind.X_FIELD:
        out = psi
        for c, p, tgt in zip(layer.couplings, layer.proj, targets):
            if p:
                raise SpecError("projector tag on a unitary-kind layer")
            if c == 0:
                continue
            out = _mix_site(out, n, tgt[0], complex(c))
        return out

    if kind == LayerKind.XX_BOND:
        out = psi
        for c, p, tgt in zip(layer.couplings, layer.proj, targets):
            if p:
                raise SpecError("projector tag on a unitary-kind layer")
            if c == 0:
                continue
            ix = _flip_mask_index(n, tgt)
            out = np.cos(complex(c)) * out + 1j * np.sin(complex(c)) * out[ix]
        return out

    if kind in (LayerKind.PROJ_Z, LayerKind.PROJ_ZZ):
        mask = np.ones(1 << n)
        for p, tgt in zip(layer.proj, targets):
            if p == 0:
                continue
            d = spins[tgt[0]]
            if len(tgt) == 2:
                d = d * spins[tgt[1]]
            mask = mask * (d == p)
        return psi * mask.reshape(bshape)

    if kind in (LayerKind.PROJ_X, LayerKind.PROJ_XX):
        out = psi
        for p, tgt in zip(layer.proj, targets):
            if p == 0:
                continue
            if len(tgt) == 1:
                shaped = out.reshape(1 << tgt[0], 2, -1)
                out = 0.5 * (shaped + p * shaped[:, ::-1, :]).reshape(out.shape)
            else:
                ix = _flip_mask_index(n, tgt)
                out = 0.5 * (out + p * out[ix])
        return out

    raise SpecError(f"unhandled layer kind {kind}")


def apply_layers(psi: np.ndarray, layers: Sequence[Layer], sites) -> np.ndarray:
    for lay in layers:
        psi = apply_layer(psi, lay, sites)
    return psi


def run_layers(
    psi: np.ndarray, layers: Sequence[Layer], sites, renormalize: bool = True
) -> np.ndarray:
    """Apply layers, renormalizing after each; raises ZeroAmplitude on collapse."""
    for lay in layers:
        psi = apply_layer(psi, lay, sites)
        if renormalize:
            nrm = np.linalg.norm(psi)
            if nrm < _NORM_TOL:
                raise ZeroAmplitude(f"state annihilated at layer {lay.kind.value}")
            psi = psi / nrm
    return psi


def circuit_matrix(spec: CircuitSpec, layers: Sequence[Layer] | None = None) -> np.ndarray:
    """Matrix of the full layer product (columns = images of basis states)."""
    n = spec.num_sites
    mat = np.eye(1 << n, dtype=complex)
    return apply_layers(mat, spec.layers if layers is None else layers, spec.sites)


def circuit_trace(spec: CircuitSpec, layers: Sequence[Layer] | None = None) -> complex:
    return complex(np.trace(circuit_matrix(spec, layers)))


def _fast_layer_plan(layers: Sequence[Layer], sites):
    """Per-layer (diagonal phase vector | X-mix angle list) plan, or None.

    Covers the layer kinds whose action factorizes into a diagonal phase
    and independent single-site X mixes; anything else (XX bonds,
    projectors) signals the caller to use the generic path.
    """
    if isinstance(sites, tuple):
        return None
    n = sites
    plan = []
    for layer in layers:
        targets = layer_targets(layer, sites)
        if layer.kind in (LayerKind.Z_FIELD, LayerKind.ZZ_BOND):
            if any(layer.proj):
                raise SpecError("projector tag on a unitary-kind layer")
            spins = _spins(n)
            expo = np.zeros(1 << n, dtype=complex)
            for c, tgt in zip(layer.couplings, targets):
                if c == 0:
                    continue
                d = spins[tgt[0]]
                if len(tgt) == 2:
                    d = d * spins[tgt[1]]
                expo += c * d
            plan.append(("diag", np.exp(1j * expo)))
        elif layer.kind == LayerKind.X_FIELD:
            if any(layer.proj):
                raise SpecError("projector tag on a unitary-kind layer")
            mixes = [
                (tgt[0], complex(c))
                for c, tgt in zip(layer.couplings, targets)
                if c != 0
            ]
            plan.append(("mix", mixes))
        else:
            return None
    return plan


def circuit_matrix_power(spec: CircuitSpec, t: int, single: bool = False) -> np.ndarray:
    """Matrix of the t-fold layer product, assembled without dense matmuls.

    Each period costs O(L 4^L): diagonal layers scale rows, X layers do
    site-wise 2x2 mixes on the whole column batch.  With single=True the
    batch is complex64, which keeps per-entry error around 1e-6 -- far
    below any ensemble statistic built on top -- at half the memory
    traffic.  Falls back to the generic layer loop for layer kinds
    outside the fast plan.
    """
    if t < 0:
        raise ValueError("negative power")
    n = spec.num_sites
    dtype = np.complex64 if single else np.complex128
    plan = _fast_layer_plan(spec.layers, spec.sites)
    if plan is None:
        mat = np.eye(1 << n, dtype=dtype)
        for _ in range(t):
            mat = apply_layers(mat, spec.layers, spec.sites)
        return mat.astype(dtype, copy=False)
    torch = _torch()
    if torch is None:
        mat = np.eye(1 << n, dtype=dtype)
        for _ in range(t):
            for kind, data in plan:
                if kind == "diag":
                    mat *= data.astype(dtype)[:, None]
                else:
                    for j, c in data:
                        mat = _mix_site(mat, n, j, c).astype(dtype, copy=False)
        return mat
    tdtype = torch.complex64 if single else torch.complex128
    cols = 1 << n
    mat = torch.eye(cols, dtype=tdtype)
    diags = {
        id(data): torch.from_numpy(data.astype(dtype)).unsqueeze(1)
        for kind, data in plan
        if kind == "diag"
    }
    for _ in range(t):
        for kind, data in plan:
            if kind == "diag":
                mat.mul_(diags[id(data)])
            else:
                for j, c in data:
                    shaped = mat.view(1 << j, 2, -1)
                    a0 = shaped[:, 0, :]
                    a1 = shaped[:, 1, :]
                    ccos = complex(cmath.cos(c))
                    isin = 1j * complex(cmath.sin(c))
                    b0 = ccos * a0 + isin * a1
                    b1 = isin * a0 + ccos * a1
                    a0.copy_(b0)
                    a1.copy_(b1)
    return mat.numpy()


def matrix_power(u: np.ndarray, t: int) -> np.ndarray:
    """u**t by binary squaring (t >= 0)."""
    if t < 0:
        raise ValueError("negative power")
    result = np.eye(u.shape[0], dtype=u.dtype)
    base = u
    while t:
        if t & 1:
            result = result @ base
        base = base @ base if t > 1 else base
        t >>= 1
    return result


# ---------------------------------------------------------------------------
# Entanglement entropy.


def entanglement_entropy(psi: np.ndarray, region: Sequence[int]) -> float:
    """Von Neumann entropy (nats) of a site subset of a pure state."""
    n = (psi.shape[0] - 1).bit_length()
    region = list(region)
    rest = [j for j in range(n) if j not in region]
    perm = region + rest
    block = psi.reshape((2,) * n).transpose(perm).reshape(1 << len(region), -1)
    s = np.linalg.svd(block, compute_uv=False)
    p = s * s
    tot = p.sum()
    if tot < _NORM_TOL:
        raise ZeroAmplitude("zero-norm state has no entropy")
    p = p[p > 1e-16 * tot] / tot
    return float(-(p * np.log(p)).sum())


# ---------------------------------------------------------------------------
# Trace identity bookkeeping.


def _field_to_bond_constant(theta: complex) -> complex:
    """Prefactor A in exp(i theta X) = A exp(i J s s') elementwise."""
    c = dual_coupling_zz_from_x(theta)
    if c.is_projector:
        return cmath.cos(theta) if c.projector_sign > 0 else 1j * cmath.sin(theta)
    return cmath.cos(complex(theta)) * cmath.exp(-1j * c.value)


def _bond_to_field_constant(jz: complex) -> complex:
    """Prefactor B in exp(i jz s s') = B (exp(i jx X))_{s s'}."""
    c = dual_coupling_x_from_zz(jz)
    if c.is_projector:
        return 2.0 * cmath.exp(1j * complex(jz))
    return cmath.exp(1j * complex(jz)) / cmath.cos(c.value)


def rotation_trace_constant(spec: CircuitSpec, n_periods: int) -> complex:
    """Constant c in tr(U_F**T) = c * tr(dual product), T = n_periods.

    One factor per gate of the unrotated circuit: the transverse-field
    gate at site r contributes A(theta_r) per period, the bond gate
    B(J_r) per period, and a field parallel to the bond axis contributes
    nothing (it rotates to itself).
    """
    kinds = {lay.kind for lay in spec.layers}
    if LayerKind.X_FIELD in kinds and LayerKind.ZZ_BOND in kinds:
        trans = next(l for l in spec.layers if l.kind == LayerKind.X_FIELD)
        bond = next(l for l in spec.layers if l.kind == LayerKind.ZZ_BOND)
    elif LayerKind.Z_FIELD in kinds and LayerKind.XX_BOND in kinds:
        trans = next(l for l in spec.layers if l.kind == LayerKind.Z_FIELD)
        bond = next(l for l in spec.layers if l.kind == LayerKind.XX_BOND)
    else:
        raise SpecError("trace constant needs a rotatable field+bond period")
    c = 1.0 + 0.0j
    for r in range(spec.num_sites):
        c *= (
            _field_to_bond_constant(complex(trans.couplings[r]))
            * _bond_to_field_constant(complex(bond.couplings[r]))
        ) ** n_periods
    return c


# ---------------------------------------------------------------------------
# Eigenvectors of a unitary via a random Hermitian combination.

_TORCH_MIN_DIM = 1024


def _eigh(h: np.ndarray) -> tuple:
    if h.shape[0] >= _TORCH_MIN_DIM:
        try:
            import torch

            w, v = torch.linalg.eigh(torch.from_numpy(h))
            return w.numpy(), v.numpy()
        except ImportError:
            pass
    return np.linalg.eigh(h)


def _matmul(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    if a.shape[0] >= _TORCH_MIN_DIM:
        torch = _torch()
        if torch is not None:
            return (torch.from_numpy(a) @ torch.from_numpy(b)).numpy()
    return a @ b


def unitary_eigvecs(u: np.ndarray, tol: float | None = None) -> tuple:
    """Eigenvalues and eigenvectors of a unitary matrix.

    Diagonalizes the Hermitian part (U + U^dag)/2, whose eigenvectors
    match U's except inside clusters of nearly equal cos(phase) -- the
    generic +-phi pairs plus accidental near-collisions.  Each cluster
    spans a U-invariant subspace, so diagonalizing the small compression
    of U inside it resolves the mixing exactly.  A residual check guards
    the result, with a Schur decomposition as last resort.

    A complex64 input is processed in single precision; the default
    residual tolerance and the cluster width scale with the precision.
    """
    single = u.dtype == np.complex64
    if tol is None:
        tol = 5e-3 if single else 1e-6
    gap_tol = 1e-3 if single else 1e-10
    w, v = _eigh((0.5 * (u + u.conj().T)).astype(u.dtype, copy=False))
    uv = _matmul(u, v)
    splits = list(np.nonzero(np.diff(w) > gap_tol)[0] + 1) + [len(w)]
    start = 0
    for stop in splits:
        if stop - start > 1:
            block = v[:, start:stop]
            ublock = uv[:, start:stop]
            m = block.conj().T @ ublock
            _, small = np.linalg.eig(m)
            small, _ = np.linalg.qr(small)
            v[:, start:stop] = block @ small
            uv[:, start:stop] = ublock @ small
        start = stop
    lam = np.sum(v.conj() * uv, axis=0)
    resid = np.linalg.norm(uv - v * lam[None, :], axis=0).max()
    if resid < tol:
        return lam, v
    import scipy.linalg

    t, z = scipy.linalg.schur(u.astype(np.complex128, copy=False), output="complex")
    return np.diag(t).copy(), z


def eigenstate_entropies(
    v: np.ndarray, region: Sequence[int], chunk: int = 256
) -> np.ndarray:
    """Entropy of the given region for every column state of v."""
    n = (v.shape[0] - 1).bit_length()
    region = list(region)
    rest = [j for j in range(n) if j not in region]
    dim_a = 1 << len(region)
    out = np.empty(v.shape[1])
    for lo in range(0, v.shape[1], chunk):
        cols = v[:, lo : lo + chunk]
        m = cols.shape[1]
        block = (
            cols.reshape((2,) * n + (m,))
            .transpose([n] + region + rest)
            .reshape(m, dim_a, -1)
        )
        s = np.linalg.svd(block, compute_uv=False)
        p = s * s
        p /= p.sum(axis=1, keepdims=True)
        plogp = np.where(p > 1e-16, p * np.log(np.maximum(p, 1e-300)), 0.0)
        out[lo : lo + m] = -plogp.sum(axis=1)
    return out


# ---------------------------------------------------------------------------
# Infinite-temperature autocorrelator.


def spacetime_correlator(u: np.ndarray, t_half: int, sites: Sequence[int]) -> np.ndarray:
    """tr(U^t Z_r U^t Z_r) / tr(U^{2t}) for each site r, with t = t_half.

    Z_r is diagonal, so with A = U^t the numerator is z^T (A * A^T) z for
    the diagonal sign vector z of Z_r: O(4^n) per site instead of a
    matrix product per site.
    """
    return correlator_from_power(matrix_power(u, t_half), sites)


def correlator_from_power(a: np.ndarray, sites: Sequence[int]) -> np.ndarray:
    """Correlator from a precomputed half-time power A = U^t."""
    n = (a.shape[0] - 1).bit_length()
    m = a * a.T
    denom = m.sum(dtype=np.complex128)
    spins = _spins(n)
    out = np.empty(len(sites), dtype=complex)
    for k, r in enumerate(sites):
        z = spins[r].astype(a.real.dtype)
        # same elementwise masking and summation path as the denominator,
        # so a diagonal U (no transverse kicks) gives numerator ==
        # denominator bitwise; the 1 + delta/denom form then yields
        # exactly 1 (complex division alone does not guarantee x/x == 1)
        num = (m * z[None, :] * z[:, None]).sum(dtype=np.complex128)
        out[k] = 1.0 + (num - denom) / denom
    return out


# ---------------------------------------------------------------------------
# Purification helpers.


def bell_pairs_state(n: int) -> np.ndarray:
    """2n-qubit purification of the maximally mixed n-qubit state.

    Site i is Bell-paired with site n + i; tracing out sites n..2n-1
    leaves the identity / 2**n.
    """
    idx = np.arange(1 << (2 * n))
    sys = idx >> n
    mirror = idx & ((1 << n) - 1)
    psi = (sys == mirror).astype(complex)
    return psi / math.sqrt(1 << n)


def ancilla_probe_state(n: int, rng) -> np.ndarray:
    """n+1 qubits: an ancilla (least significant bit) maximally entangled
    with the whole system, (|0>|psi_0> + |1>|psi_1>)/sqrt(2) for a random
    orthonormal pair of system states.

    Entangling with the full system rather than one site makes the
    ancilla's fate probe the circuit's many-body dynamics instead of the
    local gate acting on a single partner site."""
    dim = 1 << n
    raw = rng.normal(size=(dim, 2)) + 1j * rng.normal(size=(dim, 2))
    basis, _ = np.linalg.qr(raw)
    psi = np.zeros(1 << (n + 1), dtype=complex)
    psi[0::2] = basis[:, 0] / math.sqrt(2.0)  # system bits above the ancilla
    psi[1::2] = basis[:, 1] / math.sqrt(2.0)
    return psi
