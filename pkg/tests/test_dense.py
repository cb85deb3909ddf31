import cmath
import math

import numpy as np
import pytest

from dualcirc.circuits import (
    CircuitSpec,
    Layer,
    LayerKind,
    build_2d_floquet,
    build_aa_floquet,
    rotate_circuit_1d,
    rotate_circuit_2d,
    sample_2d_couplings,
)
from dualcirc import dense
from dualcirc.dense import ZeroAmplitude

X = np.array([[0, 1], [1, 0]], complex)
Z = np.diag([1.0, -1.0]).astype(complex)
I2 = np.eye(2, dtype=complex)


def kron_all(ops):
    m = ops[0]
    for o in ops[1:]:
        m = np.kron(m, o)
    return m


def site_op(n, j, op):
    return kron_all([op if k == j else I2 for k in range(n)])


def expm_pauli(theta, pauli):
    dim = pauli.shape[0]
    return np.cos(complex(theta)) * np.eye(dim, dtype=complex) + 1j * np.sin(
        complex(theta)
    ) * pauli


class TestLayerApplication:
    """Each layer kind against explicit kron-built operators at n = 3."""

    n = 3

    def rand_state(self, seed=0):
        rng = np.random.default_rng(seed)
        psi = rng.normal(size=8) + 1j * rng.normal(size=8)
        return psi / np.linalg.norm(psi)

    def test_x_field(self):
        thetas = np.array([0.3, 0.7 + 0.2j, -0.4])
        psi = self.rand_state(1)
        got = dense.apply_layer(psi, Layer(LayerKind.X_FIELD, thetas), self.n)
        mat = np.eye(8, dtype=complex)
        for j, th in enumerate(thetas):
            mat = expm_pauli(th, site_op(self.n, j, X)) @ mat
        np.testing.assert_allclose(got, mat @ psi, atol=1e-12)

    def test_z_layers_diagonal(self):
        hs = np.array([0.2, -0.5 + 0.1j, 0.9])
        js = np.array([0.3, 0.6, -0.2 + 0.3j])
        psi = self.rand_state(2)
        got = dense.apply_layer(psi, Layer(LayerKind.Z_FIELD, hs), self.n)
        got = dense.apply_layer(got, Layer(LayerKind.ZZ_BOND, js), self.n)
        mat = np.eye(8, dtype=complex)
        for j, h in enumerate(hs):
            mat = expm_pauli(h, site_op(self.n, j, Z)) @ mat
        for b, jc in enumerate(js):
            zz = site_op(self.n, b, Z) @ site_op(self.n, (b + 1) % self.n, Z)
            mat = expm_pauli(jc, zz) @ mat
        np.testing.assert_allclose(got, mat @ psi, atol=1e-12)

    def test_xx_bond_with_wraparound(self):
        js = np.array([0.4, 0.0, 0.7 - 0.1j])
        psi = self.rand_state(3)
        got = dense.apply_layer(psi, Layer(LayerKind.XX_BOND, js), self.n)
        mat = np.eye(8, dtype=complex)
        for b, jc in enumerate(js):
            if jc == 0:
                continue
            xx = site_op(self.n, b, X) @ site_op(self.n, (b + 1) % self.n, X)
            mat = expm_pauli(jc, xx) @ mat
        np.testing.assert_allclose(got, mat @ psi, atol=1e-12)

    @pytest.mark.parametrize("sign", [1, -1])
    def test_projectors(self, sign):
        psi = self.rand_state(4)
        for kind, op in [
            (LayerKind.PROJ_X, site_op(self.n, 1, X)),
            (LayerKind.PROJ_Z, site_op(self.n, 1, Z)),
            (LayerKind.PROJ_XX, site_op(self.n, 1, X) @ site_op(self.n, 2, X)),
            (LayerKind.PROJ_ZZ, site_op(self.n, 1, Z) @ site_op(self.n, 2, Z)),
        ]:
            proj = np.zeros(self.n, np.int8)
            proj[1] = sign
            got = dense.apply_layer(psi, Layer(kind, np.zeros(self.n), proj), self.n)
            want = 0.5 * (np.eye(8) + sign * op) @ psi
            np.testing.assert_allclose(got, want, atol=1e-12)

    def test_batch_matches_columns(self):
        spec = build_aa_floquet(3, j=0.7, h=0.9, lam=0.3)
        mat = dense.circuit_matrix(spec)
        for col in range(3):
            e = np.zeros(8, complex)
            e[col] = 1
            np.testing.assert_allclose(
                dense.apply_layers(e, spec.layers, 3), mat[:, col], atol=1e-12
            )

    def test_zero_amplitude_raised(self):
        # project |up up up> onto Z = -1 at site 0
        psi = dense.initial_state(3)
        proj = np.array([-1, 0, 0], np.int8)
        with pytest.raises(ZeroAmplitude):
            dense.run_layers(psi, [Layer(LayerKind.PROJ_Z, np.zeros(3), proj)], 3)


class TestEntropy:
    def test_product_state(self):
        assert dense.entanglement_entropy(dense.initial_state(4), [0, 1]) == pytest.approx(
            0.0, abs=1e-12
        )

    def test_bell_pair(self):
        psi = np.zeros(4, complex)
        psi[0] = psi[3] = 1 / math.sqrt(2)
        assert dense.entanglement_entropy(psi, [0]) == pytest.approx(math.log(2))

    def test_bell_pairs_state(self):
        n = 3
        psi = dense.bell_pairs_state(n)
        assert np.linalg.norm(psi) == pytest.approx(1.0)
        # the system block is maximally mixed
        assert dense.entanglement_entropy(psi, list(range(n))) == pytest.approx(
            n * math.log(2)
        )
        # and so is each pair against the rest
        assert dense.entanglement_entropy(psi, [0, n]) == pytest.approx(0.0, abs=1e-12)

    def test_noncontiguous_region(self):
        rng = np.random.default_rng(8)
        psi = rng.normal(size=16) + 1j * rng.normal(size=16)
        psi /= np.linalg.norm(psi)
        # entropy of a region equals entropy of its complement for pure states
        a = dense.entanglement_entropy(psi, [0, 2])
        b = dense.entanglement_entropy(psi, [1, 3])
        assert a == pytest.approx(b, abs=1e-10)


class TestTraceIdentity:
    """tr(U_F^T) = c tr(prod_r V_r), dense enumeration on small grids."""

    def check(self, spec, t):
        u = dense.circuit_matrix(spec)
        lhs = np.trace(np.linalg.matrix_power(u, t))
        dual = rotate_circuit_1d(spec, dual_sites=t)
        rhs = dense.rotation_trace_constant(spec, t) * dense.circuit_trace(dual)
        assert abs(lhs - rhs) <= 1e-8 * max(abs(lhs), 1e-12)

    def test_random_specs(self):
        rng = np.random.default_rng(42)
        for k in range(50):
            l = int(rng.integers(3, 5))
            t = int(rng.integers(3, 5))
            hs = rng.uniform(0.2, 1.3, l) + 1j * rng.uniform(-0.3, 0.3, l)
            js = rng.uniform(0.2, 1.3, l) + 1j * rng.uniform(-0.3, 0.3, l)
            if k % 2:
                layers = (
                    Layer(LayerKind.Z_FIELD, hs),
                    Layer(LayerKind.XX_BOND, js),
                )
            else:
                gs = rng.uniform(-0.5, 0.5, l).astype(complex)
                layers = (
                    Layer(LayerKind.ZZ_BOND, js),
                    Layer(LayerKind.Z_FIELD, gs),
                    Layer(LayerKind.X_FIELD, hs),
                )
            self.check(CircuitSpec(layers, l), t)

    def test_projector_limit_step(self):
        # a field gate at the identity limit rotates to a forced projector
        hs = np.array([0.0, 0.9, 0.7, 1.1], complex)
        spec = CircuitSpec(
            (
                Layer(LayerKind.Z_FIELD, hs),
                Layer(LayerKind.XX_BOND, np.full(4, 0.7 + 0j)),
            ),
            4,
        )
        self.check(spec, 3)

    def test_bond_projector_limit(self):
        spec = CircuitSpec(
            (
                Layer(LayerKind.Z_FIELD, np.full(4, 0.6 + 0j)),
                Layer(LayerKind.XX_BOND, np.full(4, math.pi / 2 + 0j)),
            ),
            4,
        )
        self.check(spec, 3)

    def test_frozen_map_value(self):
        # jz = 0.3 dual field, pinned by the same identity the suite checks
        from dualcirc.circuits import dual_coupling_x_from_zz

        got = dual_coupling_x_from_zz(0.3).value
        w = -1j * cmath.exp(-2j * 0.3)
        assert got == pytest.approx(complex(np.arctan(w)))
        spec = CircuitSpec(
            (
                Layer(LayerKind.Z_FIELD, np.full(3, 0.8 + 0j)),
                Layer(LayerKind.XX_BOND, np.full(3, 0.3 + 0j)),
            ),
            3,
        )
        self.check(spec, 3)


class TestRotate2DDense:
    """The rotated 2D circuit against dense evolution on a 2x3 lattice."""

    def test_all_on_dual_is_unitary(self):
        lx, ly = 2, 3
        ones = np.ones(lx * ly, np.int8)
        dual = rotate_circuit_2d(build_2d_floquet(lx, ly, {"jx": ones, "jy": ones, "h": ones}))
        u = dense.circuit_matrix(dual)
        np.testing.assert_allclose(u @ u.conj().T, np.eye(1 << 6), atol=1e-10)

    def test_projector_steps_are_projectors(self):
        lx, ly = 2, 3
        c = sample_2d_couplings(lx, ly, 0.5, seed=2)
        dual = rotate_circuit_2d(build_2d_floquet(lx, ly, c))
        rng = np.random.default_rng(0)
        psi = rng.normal(size=1 << 6) + 1j * rng.normal(size=1 << 6)
        psi /= np.linalg.norm(psi)
        out = dense.apply_layers(psi, dual.layers, (lx, ly))
        again = dense.apply_layers(out, dual.layers, (lx, ly))
        # norm can only shrink under forced projectors
        assert np.linalg.norm(out) <= 1.0 + 1e-10
        assert np.linalg.norm(again) <= np.linalg.norm(out) + 1e-10


class TestEigvecs:
    def test_random_unitary(self):
        rng = np.random.default_rng(3)
        a = rng.normal(size=(32, 32)) + 1j * rng.normal(size=(32, 32))
        q, _ = np.linalg.qr(a)
        lam, v = dense.unitary_eigvecs(q)
        np.testing.assert_allclose(np.abs(lam), 1.0, atol=1e-10)
        np.testing.assert_allclose(q @ v, v * lam[None, :], atol=1e-8)

    def test_eigenstate_entropies_match_loop(self):
        rng = np.random.default_rng(4)
        a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        q, _ = np.linalg.qr(a)
        _, v = dense.unitary_eigvecs(q)
        region = [0, 1]
        batched = dense.eigenstate_entropies(v, region, chunk=5)
        for k in range(16):
            assert batched[k] == pytest.approx(
                dense.entanglement_entropy(v[:, k], region), abs=1e-10
            )


class TestCorrelator:
    def test_z_conserving_circuit_gives_one(self):
        # with the transverse field off, Z_r commutes with the evolution
        n = 4
        spec = CircuitSpec(
            (
                Layer(LayerKind.ZZ_BOND, np.full(n, -0.8 + 0j)),
                Layer(LayerKind.Z_FIELD, np.full(n, 0.3 + 0j)),
            ),
            n,
        )
        u = dense.circuit_matrix(spec)
        c = dense.spacetime_correlator(u, t_half=6, sites=range(n))
        np.testing.assert_allclose(c, 1.0, atol=1e-12)

    def test_matches_direct_trace(self):
        rng = np.random.default_rng(5)
        a = rng.normal(size=(16, 16)) + 1j * rng.normal(size=(16, 16))
        q, _ = np.linalg.qr(a)
        t_half = 3
        got = dense.spacetime_correlator(q, t_half, sites=[1])
        zmat = np.diag(dense._spins(4)[1]).astype(complex)
        at = np.linalg.matrix_power(q, t_half)
        want = np.trace(at @ zmat @ at @ zmat) / np.trace(at @ at)
        assert got[0] == pytest.approx(want, abs=1e-12)


class TestMatrixPower:
    @pytest.mark.parametrize("t", [0, 1, 2, 3, 7, 16])
    def test_against_numpy(self, t):
        rng = np.random.default_rng(t)
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        m /= np.linalg.norm(m, 2)
        np.testing.assert_allclose(
            dense.matrix_power(m, t), np.linalg.matrix_power(m, t), atol=1e-12
        )


class TestAncillaState:
    def test_probe_entanglement(self):
        psi = dense.ancilla_probe_state(4, np.random.default_rng(0))
        assert np.linalg.norm(psi) == pytest.approx(1.0)
        assert dense.entanglement_entropy(psi, [4]) == pytest.approx(math.log(2))
        # the ancilla is entangled with the whole system: tracing out any
        # single site leaves the ancilla entropy at log 2
        assert dense.entanglement_entropy(psi, [0, 4]) >= math.log(2) - 1e-9
