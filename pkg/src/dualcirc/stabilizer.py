"""Clifford tableau backend for the binary-coupling 2D model and its dual.

The circuit uses only two gate families, the quarter-angle exponentials
exp(+-i pi/4 P) for P in {X_j, Z_i Z_j}, and the forced projectors
(1 + P)/2.  States are tracked with a stabilizer tableau in the
destabilizer/stabilizer form: rows 0..n-1 hold destabilizer generators,
rows n..2n-1 the stabilizer generators of the state.

Rows are stored bit-packed (one uint64 word per 64 sites) with the phase
of each generator kept exactly as a power of i.  A row with masks (x, z)
and phase exponent r represents

    i^r  *  prod_j  X_j^{x_j} Z_j^{z_j}

with X written to the left of Z on every site.  All phase bookkeeping
below follows from the single reordering rule Z X = -X Z.

Entanglement entropy is the standard phase-free GF(2) rank formula:
S_A = (rank of the stabilizer rows restricted to region A minus |A|)
in bits.
"""

from __future__ import annotations

import math

import numpy as np

from dualcirc.circuits import CircuitSpec, Layer, LayerKind, SpecError
from dualcirc.dense import ZeroAmplitude

_QUARTER = math.pi / 4.0
_ANGLE_TOL = 1e-12
_ONES = np.uint64(0xFFFFFFFFFFFFFFFF)


def _nwords(n: int) -> int:
    return (n + 63) >> 6


def _bit(rows: np.ndarray, j: int) -> np.ndarray:
    """Bit j of every packed row, as a uint64 0/1 vector."""
    return (rows[:, j >> 6] >> np.uint64(j & 63)) & np.uint64(1)


def _toggle(rows: np.ndarray, j: int, mask: np.ndarray) -> None:
    """XOR bit j of every row with the 0/1 vector ``mask``."""
    rows[:, j >> 6] ^= mask << np.uint64(j & 63)


def _fold_parity(acc: np.ndarray) -> np.ndarray:
    """Per-element parity of a uint64 array, by bit folding."""
    for shift in (32, 16, 8, 4, 2, 1):
        acc = acc ^ (acc >> np.uint64(shift))
    return (acc & np.uint64(1)).astype(np.uint8)


def _parity(words: np.ndarray) -> np.ndarray:
    """Parity of the set bits along the last (word) axis."""
    return _fold_parity(np.bitwise_xor.reduce(words, axis=-1))


def _popcount(words: np.ndarray) -> np.ndarray:
    """Number of set bits along the last (word) axis."""
    as_bytes = words[..., None].view(np.uint8).reshape(*words.shape[:-1], -1)
    return _BYTE_COUNTS[as_bytes].sum(axis=-1)


_BYTE_COUNTS = np.array([bin(b).count("1") for b in range(256)], dtype=np.int64)


class PauliString:
    """A Pauli operator with an exact phase i^r, bit-packed over n sites."""

    __slots__ = ("n", "x", "z", "r", "x_sites", "z_sites")

    def __init__(self, n: int, x: np.ndarray, z: np.ndarray, r: int = 0):
        self.n = n
        self.x = np.asarray(x, dtype=np.uint64)
        self.z = np.asarray(z, dtype=np.uint64)
        self.r = int(r) % 4
        # Known site supports, when built from site lists; lets sparse
        # targets skip whole-row symplectic products.
        self.x_sites = None
        self.z_sites = None

    @classmethod
    def from_sites(cls, n, x_sites=(), z_sites=(), r: int = 0) -> "PauliString":
        w = _nwords(n)
        x = np.zeros(w, dtype=np.uint64)
        z = np.zeros(w, dtype=np.uint64)
        for j in x_sites:
            x[j >> 6] ^= np.uint64(1) << np.uint64(j & 63)
        for j in z_sites:
            z[j >> 6] ^= np.uint64(1) << np.uint64(j & 63)
        p = cls(n, x, z, r)
        p.x_sites = tuple(x_sites)
        p.z_sites = tuple(z_sites)
        return p

    @property
    def phase(self) -> complex:
        return 1j ** self.r

    def is_hermitian(self) -> bool:
        overlap = int(_popcount(self.x & self.z))
        return (self.r - overlap) % 2 == 0

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, PauliString)
            and self.n == other.n
            and self.r == other.r
            and bool(np.array_equal(self.x, other.x))
            and bool(np.array_equal(self.z, other.z))
        )

    def __repr__(self) -> str:
        names = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "XZ"}
        body = "".join(
            names[
                int((self.x[j >> 6] >> np.uint64(j & 63)) & np.uint64(1)),
                int((self.z[j >> 6] >> np.uint64(j & 63)) & np.uint64(1)),
            ]
            for j in range(self.n)
        )
        return f"(i^{self.r}) {body}"


class Tableau:
    """Destabilizer/stabilizer tableau for a pure stabilizer state.

    ``x``, ``z`` are (2n, words) packed bit arrays and ``r`` the phase
    exponents; rows [0, n) are destabilizers, rows [n, 2n) stabilizers.
    """

    __slots__ = ("n", "x", "z", "r")

    def __init__(self, n: int, x: np.ndarray, z: np.ndarray, r: np.ndarray):
        self.n = n
        self.x = x
        self.z = z
        self.r = r

    def copy(self) -> "Tableau":
        return Tableau(self.n, self.x.copy(), self.z.copy(), self.r.copy())

    def stabilizer(self, i: int) -> PauliString:
        return PauliString(self.n, self.x[self.n + i], self.z[self.n + i],
                           int(self.r[self.n + i]))

    def _anticommute(self, p: PauliString) -> np.ndarray:
        """0/1 vector: which rows anticommute with p."""
        if p.x_sites is not None and p.z_sites is not None:
            m = np.zeros(self.x.shape[0], dtype=np.uint64)
            for j in p.x_sites:
                m ^= _bit(self.z, j)
            for j in p.z_sites:
                m ^= _bit(self.x, j)
            return m.astype(np.uint8)
        acc = np.bitwise_xor.reduce(self.x & p.z[None, :], axis=-1)
        acc ^= np.bitwise_xor.reduce(self.z & p.x[None, :], axis=-1)
        return _fold_parity(acc)


def new_z_product(n: int) -> Tableau:
    """The all-up product state: stabilizers {+Z_i}, destabilizers {X_i}."""
    if n < 1:
        raise SpecError("need at least one site")
    w = _nwords(n)
    x = np.zeros((2 * n, w), dtype=np.uint64)
    z = np.zeros((2 * n, w), dtype=np.uint64)
    r = np.zeros(2 * n, dtype=np.uint8)
    for i in range(n):
        x[i, i >> 6] = np.uint64(1) << np.uint64(i & 63)
        z[n + i, i >> 6] = np.uint64(1) << np.uint64(i & 63)
    return Tableau(n, x, z, r)


# ---------------------------------------------------------------------------
# Gates.


def apply_quarter_exponential(tab: Tableau, p: PauliString, sign: int = 1) -> Tableau:
    """Conjugate every generator by exp(sign * i pi/4 * p), in place.

    Generators commuting with p are unchanged; an anticommuting g maps to
    sign * i * p * g.  The product phase follows the X-before-Z row
    convention: i^(r_p + r_g) picks up (-1)^|z_p & x_g| from commuting the
    Z part of p through the X part of g.
    """
    if not p.is_hermitian():
        raise SpecError("quarter exponential needs a Hermitian generator")
    m = tab._anticommute(p)
    cross = _parity(tab.x & p.z[None, :])
    const = (1 + p.r + (2 if sign < 0 else 0)) % 4
    tab.r = (tab.r + m * ((const + 2 * cross) % 4)) % 4
    wide = np.uint64(0) - m.astype(np.uint64)  # 0 or all-ones per row
    tab.x ^= wide[:, None] & p.x[None, :]
    tab.z ^= wide[:, None] & p.z[None, :]
    return tab


def _multiply_into(tab: Tableau, rows: np.ndarray, k: int) -> None:
    """row_l <- row_k * row_l for every l in rows (left-multiplication)."""
    cross = _parity(tab.x[rows] & tab.z[k][None, :])
    tab.r[rows] = (tab.r[rows] + tab.r[k] + 2 * cross) % 4
    tab.x[rows] ^= tab.x[k]
    tab.z[rows] ^= tab.z[k]


def forced_project(tab: Tableau, p: PauliString) -> Tableau:
    """Project onto the +1 eigenspace of p, with the outcome forced.

    If some stabilizer anticommutes with p the measurement is genuinely
    random and forcing +1 is a rank-halving update with probability 1/2.
    Otherwise +-p is already in the stabilizer group: +p is a no-op and
    -p means the forced outcome has zero Born weight.

    Raises ZeroAmplitude in the -p case.
    """
    if not p.is_hermitian():
        raise SpecError("forced projection needs a Hermitian target")
    n = tab.n
    m = tab._anticommute(p)
    stab_hits = np.nonzero(m[n:])[0]
    if stab_hits.size:
        k = n + int(stab_hits[0])
        rows = np.nonzero(m)[0]
        rows = rows[rows != k]
        if rows.size:
            _multiply_into(tab, rows, k)
        tab.x[k - n] = tab.x[k]
        tab.z[k - n] = tab.z[k]
        tab.r[k - n] = tab.r[k]
        tab.x[k] = p.x
        tab.z[k] = p.z
        tab.r[k] = p.r
        return tab
    # Deterministic case: rebuild +-p as the product of the stabilizers
    # whose destabilizer partners anticommute with p.
    acc_x = np.zeros_like(p.x)
    acc_z = np.zeros_like(p.z)
    acc_r = 0
    for i in np.nonzero(m[:n])[0]:
        s = n + int(i)
        cross = int(_parity((tab.z[s] & acc_x)[None, :])[0])
        acc_r = (acc_r + int(tab.r[s]) + 2 * cross) % 4
        acc_x = acc_x ^ tab.x[s]
        acc_z = acc_z ^ tab.z[s]
    if not (np.array_equal(acc_x, p.x) and np.array_equal(acc_z, p.z)):
        raise SpecError("commuting target is outside the stabilizer group")
    if acc_r != p.r:
        raise ZeroAmplitude("forced outcome has zero Born weight")
    return tab


# ---------------------------------------------------------------------------
# Layer application.


def _x_rotation_layer(tab: Tableau, sites, sign: int) -> None:
    """exp(sign i pi/4 X_j) on each listed site; phases add columnwise."""
    const = 1 if sign > 0 else 3
    inc = np.zeros(tab.x.shape[0], dtype=np.int64)
    for j in sites:
        m = _bit(tab.z, j)
        _toggle(tab.x, j, m)
        inc += m.astype(np.int64)
    tab.r = (tab.r + const * inc) % 4


def _z_rotation_layer(tab: Tableau, sites, sign: int) -> None:
    const = 3 if sign > 0 else 1
    inc = np.zeros(tab.x.shape[0], dtype=np.int64)
    for j in sites:
        m = _bit(tab.x, j)
        _toggle(tab.z, j, m)
        inc += m.astype(np.int64)
    tab.r = (tab.r + const * inc) % 4


def _zz_rotation_layer(tab: Tableau, bonds, sign: int) -> None:
    """exp(sign i pi/4 Z_i Z_j) on each listed bond.

    A row anticommutes iff exactly one of its x bits on the bond is set,
    so the reordering sign is always -1 and the phase step is 3 (+pi/4)
    or 1 (-pi/4) per anticommuting bond.
    """
    const = 3 if sign > 0 else 1
    inc = np.zeros(tab.x.shape[0], dtype=np.int64)
    for i, j in bonds:
        m = _bit(tab.x, i) ^ _bit(tab.x, j)
        _toggle(tab.z, i, m)
        _toggle(tab.z, j, m)
        inc += m.astype(np.int64)
    tab.r = (tab.r + const * inc) % 4


def _xx_rotation_layer(tab: Tableau, bonds, sign: int) -> None:
    const = 1 if sign > 0 else 3
    inc = np.zeros(tab.x.shape[0], dtype=np.int64)
    for i, j in bonds:
        m = _bit(tab.z, i) ^ _bit(tab.z, j)
        _toggle(tab.x, i, m)
        _toggle(tab.x, j, m)
        inc += m.astype(np.int64)
    tab.r = (tab.r + const * inc) % 4


_PROJ_BUILDERS = {
    LayerKind.PROJ_X: lambda n, t: PauliString.from_sites(n, x_sites=t),
    LayerKind.PROJ_Z: lambda n, t: PauliString.from_sites(n, z_sites=t),
    LayerKind.PROJ_XX: lambda n, t: PauliString.from_sites(n, x_sites=t),
    LayerKind.PROJ_ZZ: lambda n, t: PauliString.from_sites(n, z_sites=t),
}

_ROTATION_LAYERS = {
    LayerKind.X_FIELD: ("site", _x_rotation_layer),
    LayerKind.Z_FIELD: ("site", _z_rotation_layer),
    LayerKind.ZZ_BOND: ("bond", _zz_rotation_layer),
    LayerKind.XX_BOND: ("bond", _xx_rotation_layer),
}


def _layer_signs(couplings: np.ndarray) -> np.ndarray:
    """Map layer couplings to gate signs: 0 none, +-1 for exp(+-i pi/4 P).

    Accepts either quarter angles (+-pi/4 in radians) or the binary
    convention of the unrotated model, where a coupling of 1 switches on
    a gate at angle -pi/4.
    """
    if np.any(np.abs(couplings.imag) > _ANGLE_TOL):
        raise SpecError("Clifford layer couplings must be real")
    v = couplings.real
    signs = np.zeros(len(v), dtype=np.int8)
    signs[np.abs(v - _QUARTER) < _ANGLE_TOL] = 1
    signs[np.abs(v + _QUARTER) < _ANGLE_TOL] = -1
    signs[np.abs(v - 1.0) < _ANGLE_TOL] = -1
    bad = (signs == 0) & (np.abs(v) > _ANGLE_TOL)
    if bad.any():
        raise SpecError(
            f"coupling {v[bad][0]!r} is not a quarter angle or binary switch"
        )
    return signs


def _targets(indices, layer: Layer, sites):
    """Gate targets for the given coupling indices: sites or bond pairs."""
    if layer.kind in (LayerKind.X_FIELD, LayerKind.Z_FIELD,
                      LayerKind.PROJ_X, LayerKind.PROJ_Z):
        return [(int(i),) for i in indices]
    if isinstance(sites, tuple):
        lx, _ly = sites
        out = []
        for i in indices:
            i = int(i)
            x, y = i % lx, i // lx
            if layer.orientation == "y":
                j = x + lx * ((y + 1) % _ly)
            else:
                j = (x + 1) % lx + lx * y
            out.append((i, j))
        return out
    return [(int(i), (int(i) + 1) % sites) for i in indices]


def apply_layer_tableau(
    tab: Tableau, layer: Layer, sites, zero_weight: str = "abort", stats=None
) -> Tableau:
    """Apply one circuit layer to the tableau, in place.

    Unitary layers must carry quarter-angle (or binary) couplings;
    projector tags become forced projections and may raise ZeroAmplitude.

    ``zero_weight`` selects what a zero-Born-weight forced projection
    does: "abort" re-raises ZeroAmplitude; "keep" keeps the deterministic
    opposite outcome (the state is unchanged, the projection is skipped)
    and counts the event in ``stats['zero_weight_events']``.
    """
    if zero_weight not in ("abort", "keep"):
        raise SpecError(f"unknown zero-weight policy {zero_weight!r}")
    proj_kind = None
    if layer.kind in _PROJ_BUILDERS:
        proj_kind = layer.kind
    elif layer.kind in _ROTATION_LAYERS:
        if np.any(layer.proj != 0):
            raise SpecError("projector tags on a unitary layer kind")
    else:
        raise SpecError(f"unsupported layer kind {layer.kind.value}")

    if proj_kind is not None:
        build = _PROJ_BUILDERS[proj_kind]
        tagged = np.nonzero(layer.proj)[0]
        for i, target in zip(tagged, _targets(tagged, layer, sites)):
            p = build(tab.n, target)
            p.r = 0 if int(layer.proj[i]) > 0 else 2
            try:
                forced_project(tab, p)
            except ZeroAmplitude:
                if zero_weight == "abort":
                    raise
                if stats is not None:
                    stats["zero_weight_events"] = stats.get("zero_weight_events", 0) + 1
        return tab

    _, apply = _ROTATION_LAYERS[layer.kind]
    signs = _layer_signs(layer.couplings)
    for sgn in (1, -1):
        picked = _targets(np.nonzero(signs == sgn)[0], layer, sites)
        if not picked:
            continue
        if layer.kind in (LayerKind.X_FIELD, LayerKind.Z_FIELD):
            apply(tab, [t[0] for t in picked], sgn)
        else:
            apply(tab, picked, sgn)
    return tab


def run_2d_period(
    tab: Tableau, spec: CircuitSpec, rng=None, zero_weight: str = "abort", stats=None
):
    """Apply one period of a Clifford circuit spec; returns (tab, aborted).

    Accepts either the unrotated binary-coupling period or a rotated
    sequence of row layers with quarter angles and forced projectors.
    Under the default "abort" policy, the first zero-Born-weight
    projection stops the run and sets the abort flag; the caller is
    expected to resample the realization.  Under "keep", deterministic
    opposite outcomes are kept (no-ops) and counted in ``stats``; the
    abort flag is then always False.
    """
    del rng  # sampling happens when the spec is drawn
    for layer in spec.layers:
        try:
            apply_layer_tableau(tab, layer, spec.sites, zero_weight, stats)
        except ZeroAmplitude:
            return tab, True
    return tab, False


# ---------------------------------------------------------------------------
# Observables.


def _gf2_rank(bits: np.ndarray) -> int:
    """Rank over GF(2) of a 0/1 matrix, by packed-row elimination."""
    if bits.size == 0:
        return 0
    packed = np.packbits(bits.astype(np.uint8), axis=1)
    nrows, ncols = bits.shape
    rank = 0
    for c in range(ncols):
        word, bit = c >> 3, np.uint8(0x80 >> (c & 7))
        hits = np.nonzero(packed[rank:, word] & bit)[0]
        if hits.size == 0:
            continue
        pivot = rank + int(hits[0])
        if pivot != rank:
            packed[[rank, pivot]] = packed[[pivot, rank]]
        below = rank + 1 + np.nonzero(packed[rank + 1:, word] & bit)[0]
        packed[below] ^= packed[rank]
        rank += 1
        if rank == nrows:
            break
    return rank


def entropy_region(tab: Tableau, region) -> float:
    """Entanglement entropy of a site set, in nats.

    Phase-free GF(2) rank of the stabilizer rows restricted to the
    region, minus the region size, in units of ln 2.
    """
    region = sorted(set(int(j) for j in region))
    if not 0 < len(region) < tab.n:
        if len(region) in (0, tab.n):
            return 0.0
        raise SpecError("region must be a subset of the sites")
    n = tab.n
    cols = [_bit(tab.x[n:], j) for j in region]
    cols += [_bit(tab.z[n:], j) for j in region]
    bits = np.stack(cols, axis=1)
    return (_gf2_rank(bits) - len(region)) * math.log(2.0)


def expectation(tab: Tableau, p: PauliString):
    """<p> for a Hermitian Pauli: +-1 if +-p is stabilized, else 0."""
    if not p.is_hermitian():
        raise SpecError("expectation needs a Hermitian operator")
    n = tab.n
    m = tab._anticommute(p)
    if m[n:].any():
        return 0
    acc_x = np.zeros_like(p.x)
    acc_z = np.zeros_like(p.z)
    acc_r = 0
    for i in np.nonzero(m[:n])[0]:
        s = n + int(i)
        cross = int(_parity((tab.z[s] & acc_x)[None, :])[0])
        acc_r = (acc_r + int(tab.r[s]) + 2 * cross) % 4
        acc_x = acc_x ^ tab.x[s]
        acc_z = acc_z ^ tab.z[s]
    if not (np.array_equal(acc_x, p.x) and np.array_equal(acc_z, p.z)):
        raise SpecError("commuting operator is outside the stabilizer group")
    return 1 if acc_r == p.r else -1


def check_tableau(tab: Tableau) -> None:
    """Assert the symplectic invariants; raises SpecError on violation.

    Stabilizer rows must commute pairwise, every row must be Hermitian,
    the destabilizer/stabilizer pairing must be canonical (d_i
    anticommutes with s_j iff i == j), and the full tableau must have
    GF(2) rank 2n.
    """
    n = tab.n
    for i in range(n):
        d = PauliString(n, tab.x[i], tab.z[i], int(tab.r[i]))
        s = tab.stabilizer(i)
        if not s.is_hermitian():
            raise SpecError(f"stabilizer {i} is not a Hermitian +-1 operator")
        if not d.is_hermitian():
            raise SpecError(f"destabilizer {i} is not Hermitian")
        anti_s = tab._anticommute(s)
        if anti_s[n:].any():
            raise SpecError(f"stabilizer {i} anticommutes with another stabilizer")
        want = np.zeros(n, dtype=np.uint8)
        want[i] = 1
        if not np.array_equal(anti_s[:n], want):
            raise SpecError(f"destabilizer pairing broken at row {i}")
    bits = np.concatenate(
        [np.stack([_bit(tab.x, j) for j in range(n)], axis=1),
         np.stack([_bit(tab.z, j) for j in range(n)], axis=1)],
        axis=1,
    )
    if _gf2_rank(bits) != 2 * n:
        raise SpecError("tableau is not full rank")
