"""Circuit descriptions and the space-time rotation of their couplings.

A circuit is an ordered list of layers, each layer a set of commuting
one- or two-site Ising-type gates with (possibly complex) angle couplings.
Layers are applied to states in list order, i.e. ``layers[0]`` acts first.

The rotation exchanges one space direction with time.  For the 1D
Ising-form circuits used here it reduces to two coupling maps:

* transverse field theta  ->  bond coupling  -pi/4 + (i/2) log(tan theta)
* bond coupling theta     ->  transverse field  arctan(-i exp(-2i theta))

Couplings at the singular points of either map are represented by an
explicit projector tag rather than infinite floats.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Sequence

import numpy as np

GOLDEN_Q = 2.0 / (1.0 + math.sqrt(5.0))

# |tan theta| below this is treated as an exact projector limit.
_PROJ_TOL = 1e-12
# Imaginary parts below this count as a real (unitary) coupling.
_REAL_TOL = 1e-12


class SpecError(ValueError):
    """Structurally invalid circuit description."""


class LayerKind(Enum):
    X_FIELD = "XField"
    Z_FIELD = "ZField"
    ZZ_BOND = "ZZBond"
    XX_BOND = "XXBond"
    PROJ_XX = "ForcedProjXX"
    PROJ_X = "ForcedProjX"
    PROJ_Z = "ForcedProjZ"
    PROJ_ZZ = "ForcedProjZZ"


FIELD_KINDS = {LayerKind.X_FIELD, LayerKind.Z_FIELD, LayerKind.PROJ_X, LayerKind.PROJ_Z}
BOND_KINDS = {LayerKind.ZZ_BOND, LayerKind.XX_BOND, LayerKind.PROJ_XX, LayerKind.PROJ_ZZ}


@dataclass(frozen=True)
class Coupling:
    """A complex gate angle, or a tagged projector limit.

    ``projector_sign`` is 0 for an ordinary coupling; +1/-1 select the
    eigenvalue of the forced projector (1 + sign * P) / 2 the gate
    degenerates to.
    """

    value: complex = 0.0
    projector_sign: int = 0

    def __post_init__(self):
        if self.projector_sign not in (-1, 0, 1):
            raise SpecError(f"bad projector sign {self.projector_sign}")
        if self.projector_sign == 0 and not (
            math.isfinite(self.value.real) and math.isfinite(self.value.imag)
        ):
            raise SpecError("non-finite coupling; use a projector tag instead")

    @property
    def is_projector(self) -> bool:
        return self.projector_sign != 0

    @classmethod
    def projector(cls, sign: int = 1) -> "Coupling":
        return cls(0.0, sign)

    def __complex__(self) -> complex:
        if self.is_projector:
            raise SpecError("projector-limit coupling has no finite value")
        return complex(self.value)


class GateClass(Enum):
    UNITARY = "Unitary"
    FORCED_PROJECTOR = "ForcedProjector"
    GENERAL_NON_UNITARY = "GeneralNonUnitary"


# Pauli content of the projector a tagged coupling collapses to, per layer kind.
_PROJ_TARGET = {
    LayerKind.PROJ_XX: "XX",
    LayerKind.PROJ_X: "X",
    LayerKind.PROJ_Z: "Z",
    LayerKind.PROJ_ZZ: "ZZ",
    LayerKind.XX_BOND: "XX",
    LayerKind.X_FIELD: "X",
    LayerKind.ZZ_BOND: "ZZ",
    LayerKind.Z_FIELD: "Z",
}


@dataclass(frozen=True)
class Layer:
    """One layer of identical commuting gates.

    ``couplings`` holds one complex angle per site (field kinds) or per
    bond (bond kinds); ``proj`` is the matching array of projector tags
    (0 none, +-1 forced-projector eigenvalue).  For 2D bond layers
    ``orientation`` distinguishes x- from y-directed bonds.
    """

    kind: LayerKind
    couplings: np.ndarray
    proj: np.ndarray | None = None
    orientation: str | None = None

    def __post_init__(self):
        vals = np.asarray(self.couplings, dtype=complex)
        object.__setattr__(self, "couplings", vals)
        if self.proj is None:
            object.__setattr__(self, "proj", np.zeros(len(vals), dtype=np.int8))
        else:
            pr = np.asarray(self.proj, dtype=np.int8)
            if pr.shape != vals.shape:
                raise SpecError("proj tags and couplings must align")
            object.__setattr__(self, "proj", pr)
        if not np.all(np.isfinite(self.couplings[self.proj == 0])):
            raise SpecError("non-finite coupling; use a projector tag instead")
        if self.orientation not in (None, "x", "y"):
            raise SpecError(f"bad bond orientation {self.orientation!r}")

    def coupling(self, i: int) -> Coupling:
        if self.proj[i] != 0:
            return Coupling.projector(int(self.proj[i]))
        return Coupling(complex(self.couplings[i]))

    @property
    def n(self) -> int:
        return len(self.couplings)


@dataclass(frozen=True)
class CircuitSpec:
    """An ordered layer sequence on a periodic chain or square lattice.

    For Floquet circuits the layers are one period; rotated circuits store
    the full (quasi-periodic) sequence and are cycled when evolved longer.
    ``sites`` is the site count in 1D or an (Lx, Ly) pair in 2D.
    """

    layers: tuple
    sites: int | tuple
    boundary: str = "periodic"
    initial_state: str = "z_up"

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))
        if self.boundary != "periodic":
            raise SpecError("only periodic boundaries are supported")
        for lay in self.layers:
            if self.is_2d:
                if lay.kind in BOND_KINDS and lay.orientation is None:
                    raise SpecError("2D bond layers need an orientation")
                if lay.n != self.num_sites:
                    raise SpecError(
                        f"layer {lay.kind.value}: {lay.n} couplings for "
                        f"{self.num_sites} sites"
                    )
            else:
                # Periodic chain: bond count == site count.
                if lay.n != self.num_sites:
                    raise SpecError(
                        f"layer {lay.kind.value}: {lay.n} couplings for "
                        f"{self.num_sites} sites"
                    )

    @property
    def is_2d(self) -> bool:
        return isinstance(self.sites, tuple)

    @property
    def num_sites(self) -> int:
        if self.is_2d:
            return self.sites[0] * self.sites[1]
        return self.sites


# ---------------------------------------------------------------------------
# The two coupling maps.


def dual_coupling_zz_from_x(jx: Coupling | complex) -> Coupling:
    """Bond coupling dual to a transverse-field coupling.

    Returns -pi/4 + (i/2) log(tan jx); the tan->0 and tan->inf limits come
    back as projector tags (eigenvalue +1 and -1 respectively).
    """
    if isinstance(jx, Coupling):
        if jx.is_projector:
            raise SpecError("cannot rotate a projector-limit coupling")
        jx = jx.value
    t = cmath.tan(complex(jx))
    if abs(t) < _PROJ_TOL:
        return Coupling.projector(1)
    if abs(t) > 1.0 / _PROJ_TOL:
        return Coupling.projector(-1)
    return Coupling(-math.pi / 4 + 0.5j * cmath.log(t))


def dual_coupling_x_from_zz(jz: Coupling | complex) -> Coupling:
    """Transverse-field coupling dual to a bond coupling.

    Returns arctan(-i exp(-2i jz)); the arctan poles (bond coupling at 0
    or pi/2 mod pi) come back as projector tags.
    """
    if isinstance(jz, Coupling):
        if jz.is_projector:
            raise SpecError("cannot rotate a projector-limit coupling")
        jz = jz.value
    w = -1j * cmath.exp(-2j * complex(jz))
    if abs(w + 1j) < _PROJ_TOL:
        return Coupling.projector(1)
    if abs(w - 1j) < _PROJ_TOL:
        return Coupling.projector(-1)
    val = np.arctan(complex(w))
    return Coupling(complex(val))


def classify_gate(c: Coupling | complex, kind: LayerKind) -> tuple:
    """(GateClass, projector target or None, projector sign or 0)."""
    if isinstance(c, Coupling) and c.is_projector:
        return (GateClass.FORCED_PROJECTOR, _PROJ_TARGET[kind], c.projector_sign)
    if kind in (LayerKind.PROJ_XX, LayerKind.PROJ_X, LayerKind.PROJ_Z, LayerKind.PROJ_ZZ):
        sign = c.projector_sign if isinstance(c, Coupling) else 1
        return (GateClass.FORCED_PROJECTOR, _PROJ_TARGET[kind], sign or 1)
    v = complex(c)
    if abs(v.imag) < _REAL_TOL:
        return (GateClass.UNITARY, None, 0)
    return (GateClass.GENERAL_NON_UNITARY, None, 0)


# ---------------------------------------------------------------------------
# 1D rotation.

# The two supported Floquet forms.  "Z-diagonal": transverse X field plus
# ZZ bonds (and optional parallel Z field).  "X-diagonal": Z field acting
# transverse to XX bonds (and optional parallel X field).
_FORM_Z = {LayerKind.X_FIELD, LayerKind.ZZ_BOND, LayerKind.Z_FIELD}
_FORM_X = {LayerKind.Z_FIELD, LayerKind.XX_BOND, LayerKind.X_FIELD}


def _single_layer(spec: CircuitSpec, kind: LayerKind) -> Layer | None:
    found = [lay for lay in spec.layers if lay.kind == kind]
    if len(found) > 1:
        raise SpecError(f"duplicate {kind.value} layer in one period")
    return found[0] if found else None


def rotate_circuit_1d(spec: CircuitSpec, dual_sites: int | None = None) -> CircuitSpec:
    """Space-time rotate a 1D Floquet period.

    Site-r couplings of the input become step-t couplings of the output:
    the transverse field becomes a (spatially uniform) bond layer via
    ``dual_coupling_zz_from_x``, the bond layer becomes a field via
    ``dual_coupling_x_from_zz``, and any field parallel to the bond axis
    is carried through unchanged.  The returned spec holds the full
    sequence of ``L`` dual steps as its layer list, acting on a chain of
    ``dual_sites`` sites (the number of periods of the unrotated circuit;
    defaults to the original chain length).
    """
    if spec.is_2d:
        raise SpecError("rotate_circuit_1d needs a 1D spec")
    kinds = {lay.kind for lay in spec.layers}
    n = spec.num_sites
    if kinds <= {LayerKind.X_FIELD, LayerKind.ZZ_BOND, LayerKind.Z_FIELD} and (
        LayerKind.X_FIELD in kinds and LayerKind.ZZ_BOND in kinds
    ):
        trans = _single_layer(spec, LayerKind.X_FIELD)
        bond = _single_layer(spec, LayerKind.ZZ_BOND)
        par = _single_layer(spec, LayerKind.Z_FIELD)
        bond_kind, trans_kind, par_kind = (
            LayerKind.ZZ_BOND,
            LayerKind.X_FIELD,
            LayerKind.Z_FIELD,
        )
        proj_bond = LayerKind.PROJ_ZZ
        proj_field = LayerKind.PROJ_X
    elif kinds <= {LayerKind.Z_FIELD, LayerKind.XX_BOND, LayerKind.X_FIELD} and (
        LayerKind.Z_FIELD in kinds and LayerKind.XX_BOND in kinds
    ):
        trans = _single_layer(spec, LayerKind.Z_FIELD)
        bond = _single_layer(spec, LayerKind.XX_BOND)
        par = _single_layer(spec, LayerKind.X_FIELD)
        bond_kind, trans_kind, par_kind = (
            LayerKind.XX_BOND,
            LayerKind.Z_FIELD,
            LayerKind.X_FIELD,
        )
        proj_bond = LayerKind.PROJ_XX
        proj_field = LayerKind.PROJ_Z
    else:
        raise SpecError(
            "rotation needs a transverse-field layer plus a bond layer "
            f"(got kinds {sorted(k.value for k in kinds)})"
        )
    if np.any(trans.proj) or np.any(bond.proj):
        raise SpecError("cannot rotate a spec that already contains projectors")

    m = n if dual_sites is None else dual_sites
    out_layers: list[Layer] = []
    for t in range(n):
        step: list[Layer] = []
        # Floquet couplings are time independent, so every dual layer is
        # uniform along the dual chain; step t inherits site t's couplings.
        dual_bond = dual_coupling_zz_from_x(complex(trans.couplings[t]))
        if dual_bond.is_projector:
            step.append(
                Layer(proj_bond, np.zeros(m), np.full(m, dual_bond.projector_sign, np.int8))
            )
        else:
            step.append(Layer(bond_kind, np.full(m, dual_bond.value)))
        if par is not None:
            step.append(Layer(par_kind, np.full(m, complex(par.couplings[t]))))
        dual_field = dual_coupling_x_from_zz(complex(bond.couplings[t]))
        if dual_field.is_projector:
            step.append(
                Layer(proj_field, np.zeros(m), np.full(m, dual_field.projector_sign, np.int8))
            )
        else:
            step.append(Layer(trans_kind, np.full(m, dual_field.value)))
        out_layers.extend(step)
    return CircuitSpec(tuple(out_layers), m, spec.boundary, spec.initial_state)


# ---------------------------------------------------------------------------
# 2D rotation (binary-coupling Clifford model).


def rotate_circuit_2d(spec: CircuitSpec) -> CircuitSpec:
    """Rotate the 2D binary-coupling Clifford Floquet period.

    The input layers carry couplings in {0, 1} (gate on/off at angle
    -pi/4).  x and t are exchanged: y-bond ZZ gates are invariant, an
    x-bond ZZ gate becomes a single-site X gate (on: exp(i pi/4 X), off:
    the forced projector (1+X)/2), and the X field becomes an x-bond ZZ
    gate (on: exp(i pi/4 ZZ), off: (1+ZZ)/2).  The output lists, for each
    of the Lx dual time steps and each row y, the three row layers of the
    rotated period in application order.
    """
    if not spec.is_2d:
        raise SpecError("rotate_circuit_2d needs a 2D spec")
    lx, ly = spec.sites
    zz_x = zz_y = xf = None
    for lay in spec.layers:
        if lay.kind == LayerKind.ZZ_BOND and lay.orientation == "x":
            zz_x = lay
        elif lay.kind == LayerKind.ZZ_BOND and lay.orientation == "y":
            zz_y = lay
        elif lay.kind == LayerKind.X_FIELD:
            xf = lay
        else:
            raise SpecError(f"unexpected layer {lay.kind.value} in 2D Floquet spec")
    if zz_x is None or zz_y is None or xf is None:
        raise SpecError("2D spec needs x-bond ZZ, y-bond ZZ and X-field layers")
    for lay in (zz_x, zz_y, xf):
        vals = lay.couplings
        if not np.all(np.isin(vals.real, (0.0, 1.0))) or np.any(vals.imag):
            raise SpecError("2D couplings must be binary (0 or 1)")

    def idx(x: int, y: int) -> int:
        return (x % lx) + lx * (y % ly)

    n = lx * ly
    out: list[Layer] = []
    for t in range(lx):
        for y in range(ly):
            # V_ZZ,- : from the X field at (x=t, y); acts on x-bonds of row y.
            vals = np.zeros(n, complex)
            proj = np.zeros(n, np.int8)
            on = xf.couplings[idx(t, y)].real == 1.0
            for x in range(lx):
                b = idx(x, y)
                if on:
                    vals[b] = math.pi / 4
                else:
                    proj[b] = 1
            out.append(
                Layer(LayerKind.PROJ_ZZ if not on else LayerKind.ZZ_BOND, vals, proj, "x")
            )
            # V_ZZ,| : from the y-bond at (x=t, y); invariant under rotation.
            if zz_y.couplings[idx(t, y)].real == 1.0:
                vals = np.zeros(n, complex)
                for x in range(lx):
                    vals[idx(x, y)] = math.pi / 4
                out.append(Layer(LayerKind.ZZ_BOND, vals, None, "y"))
            # V_X : from the x-bond at (x=t, y); acts on sites of row y.
            vals = np.zeros(n, complex)
            proj = np.zeros(n, np.int8)
            on = zz_x.couplings[idx(t, y)].real == 1.0
            for x in range(lx):
                s = idx(x, y)
                if on:
                    vals[s] = math.pi / 4
                else:
                    proj[s] = 1
            out.append(
                Layer(LayerKind.PROJ_X if not on else LayerKind.X_FIELD, vals, proj, None)
            )
    return CircuitSpec(tuple(out), spec.sites, spec.boundary, spec.initial_state)


# ---------------------------------------------------------------------------
# Coupling schedules.


def build_aa_schedule(
    n: int, h: float, lam: float, q: float = GOLDEN_Q, delta: float = 0.0
) -> np.ndarray:
    """Quasiperiodic field schedule h + lam * cos(2 pi q r + delta), r = 1..n."""
    if n < 1:
        raise SpecError("need at least one site")
    r = np.arange(1, n + 1)
    return h + lam * np.cos(2.0 * math.pi * q * r + delta)


def build_mbl_schedule(
    n: int, mean: float, sigma: float, seed: int | np.random.Generator
) -> np.ndarray:
    """n independent Gaussian field values, reproducible from the seed."""
    if sigma <= 0:
        raise SpecError("sigma must be positive")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    return rng.normal(mean, sigma, size=n)


def sample_2d_couplings(
    lx: int, ly: int, p: float, seed: int | np.random.Generator
) -> dict:
    """Binary couplings for the 2D Clifford model: 0 w.p. p, 1 w.p. 1-p."""
    if not 0.0 <= p <= 1.0:
        raise SpecError("p must be a probability")
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    n = lx * ly
    return {
        "jx": (rng.random(n) >= p).astype(np.int8),
        "jy": (rng.random(n) >= p).astype(np.int8),
        "h": (rng.random(n) >= p).astype(np.int8),
    }


def build_2d_floquet(lx: int, ly: int, couplings: dict) -> CircuitSpec:
    """Eq-9-style 2D Clifford Floquet period from binary coupling arrays."""
    layers = (
        Layer(LayerKind.X_FIELD, couplings["h"].astype(complex)),
        Layer(LayerKind.ZZ_BOND, couplings["jx"].astype(complex), None, "x"),
        Layer(LayerKind.ZZ_BOND, couplings["jy"].astype(complex), None, "y"),
    )
    return CircuitSpec(layers, (lx, ly))


def build_aa_floquet(
    n: int, j: float = 1.0, h: float = 2.5, lam: float = 0.0, delta: float = 0.0
) -> CircuitSpec:
    """Quasiperiodic XX-bond Floquet period: exp(iJ sum XX) exp(i sum h_r Z)."""
    hs = build_aa_schedule(n, h, lam, delta=delta)
    layers = (
        Layer(LayerKind.Z_FIELD, hs.astype(complex)),
        Layer(LayerKind.XX_BOND, np.full(n, complex(j))),
    )
    return CircuitSpec(layers, n)


def build_aa_dual_step(n: int, h_t: float, j: float = 1.0) -> list:
    """One time step of the rotated quasiperiodic circuit."""
    jt = dual_coupling_zz_from_x(h_t)
    if jt.is_projector:
        bond = Layer(LayerKind.PROJ_XX, np.zeros(n), np.full(n, jt.projector_sign, np.int8))
    else:
        bond = Layer(LayerKind.XX_BOND, np.full(n, jt.value))
    ht = dual_coupling_x_from_zz(j)
    fld = Layer(LayerKind.Z_FIELD, np.full(n, complex(ht)))
    return [bond, fld]


def build_mbl_floquet(
    n: int, j_x: float, tau: float = 0.8, h: Sequence[float] | None = None
) -> CircuitSpec:
    """Interacting Floquet period exp(iJx sum X) exp(-i tau sum ZZ - i tau sum h_r Z)."""
    h = np.zeros(n) if h is None else np.asarray(h, float)
    layers = (
        Layer(LayerKind.ZZ_BOND, np.full(n, complex(-tau))),
        Layer(LayerKind.Z_FIELD, (-tau * h).astype(complex)),
        Layer(LayerKind.X_FIELD, np.full(n, complex(j_x))),
    )
    return CircuitSpec(layers, n)


def build_mbl_dual_step(n: int, j_x: float, tau: float, h_t: float) -> list:
    """One time step of the rotated interacting circuit."""
    jz = dual_coupling_zz_from_x(j_x)
    if jz.is_projector:
        bond = Layer(LayerKind.PROJ_ZZ, np.zeros(n), np.full(n, jz.projector_sign, np.int8))
    else:
        bond = Layer(LayerKind.ZZ_BOND, np.full(n, jz.value))
    fld = Layer(LayerKind.Z_FIELD, np.full(n, complex(-tau * h_t)))
    jx_t = dual_coupling_x_from_zz(-tau)
    trans = Layer(LayerKind.X_FIELD, np.full(n, complex(jx_t)))
    return [bond, fld, trans]


# ---------------------------------------------------------------------------
# Text serialization.


def spec_to_text(spec: CircuitSpec) -> str:
    lines = []
    if spec.is_2d:
        lines.append(f"sites = {spec.sites[0]} x {spec.sites[1]}")
    else:
        lines.append(f"sites = {spec.sites}")
    lines.append(f"boundary = {spec.boundary}")
    lines.append(f"initial = {spec.initial_state}")
    for lay in spec.layers:
        kind = lay.kind.value
        if lay.orientation:
            kind += "/" + lay.orientation
        toks = []
        for i in range(lay.n):
            if lay.proj[i] > 0:
                toks.append("projector+")
            elif lay.proj[i] < 0:
                toks.append("projector-")
            else:
                v = lay.couplings[i]
                toks.append(f"{v.real:.17g},{v.imag:.17g}")
        lines.append(f"layer {kind} " + " ".join(toks))
    return "\n".join(lines) + "\n"


def spec_from_text(text: str) -> CircuitSpec:
    sites: int | tuple | None = None
    boundary = "periodic"
    initial = "z_up"
    layers: list[Layer] = []
    for ln, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        try:
            if line.startswith("sites"):
                rhs = line.split("=", 1)[1].strip()
                if "x" in rhs:
                    a, b = rhs.split("x")
                    sites = (int(a), int(b))
                else:
                    sites = int(rhs)
            elif line.startswith("boundary"):
                boundary = line.split("=", 1)[1].strip()
            elif line.startswith("initial"):
                initial = line.split("=", 1)[1].strip()
            elif line.startswith("layer"):
                parts = line.split()
                kind_tok = parts[1]
                orientation = None
                if "/" in kind_tok:
                    kind_tok, orientation = kind_tok.split("/")
                kind = LayerKind(kind_tok)
                vals, proj = [], []
                for tok in parts[2:]:
                    if tok == "projector+":
                        vals.append(0.0)
                        proj.append(1)
                    elif tok == "projector-":
                        vals.append(0.0)
                        proj.append(-1)
                    else:
                        re, im = tok.split(",")
                        vals.append(complex(float(re), float(im)))
                        proj.append(0)
                layers.append(
                    Layer(kind, np.array(vals, complex), np.array(proj, np.int8), orientation)
                )
            else:
                raise SpecError(f"unrecognized directive {line.split()[0]!r}")
        except SpecError:
            raise
        except Exception as exc:
            raise SpecError(f"line {ln}: {exc}") from exc
    if sites is None:
        raise SpecError("missing 'sites' directive")
    return CircuitSpec(tuple(layers), sites, boundary, initial)
