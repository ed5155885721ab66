"""Group layer: descriptors, dilations, the law, and the gauge."""

import numpy as np
import pytest

from carnotx import (
    GroupDescriptor,
    UnsupportedGroupError,
    dilate,
    group_inverse,
    group_multiply,
    heisenberg,
    homogeneous_norm,
    left_translation,
)


def abelian(n: int) -> GroupDescriptor:
    """Commutative single-layer descriptor: the frame is the identity."""

    def sigma(x):
        x = np.asarray(x, dtype=float)
        out = np.zeros(x.shape[:-1] + (n, n))
        out[...] = np.eye(n)
        return out

    def jac(x):
        x = np.asarray(x, dtype=float)
        return np.zeros(x.shape[:-1] + (n, n, n))

    return GroupDescriptor(
        name=f"abelian-{n}", layer_dims=(n,), sigma_eval=sigma, sigma_jacobian_eval=jac
    )


class TestDescriptor:
    def test_heisenberg_shapes(self):
        for d, n, q in [(1, 3, 4), (2, 5, 6), (3, 7, 8)]:
            G = heisenberg(d)
            assert G.n == n
            assert G.m == 2 * d
            assert G.homogeneous_dimension == q
            assert G.dilation_weights == (1,) * (2 * d) + (2,)
            assert G.is_heisenberg()

    def test_heisenberg_rejects_bad_d(self):
        for bad in (0, -1, 1.5, True):
            with pytest.raises(ValueError):
                heisenberg(bad)

    def test_frame_matrix_values(self):
        G = heisenberg(1)
        sig = G.sigma_eval(np.array([0.3, -0.7, 0.2]))
        assert np.allclose(sig, [[1.0, 0.0], [0.0, 1.0], [-1.4, -0.6]])

    def test_frame_is_derivative_of_right_translation(self):
        # Column j of sigma(x) is d/ds of x * (s e_j) at s = 0.
        G = heisenberg(2)
        rng = np.random.default_rng(7)
        x = rng.uniform(-1, 1, G.n)
        s = 1e-6
        for j in range(G.m):
            e = np.zeros(G.n)
            e[j] = 1.0
            plus = group_multiply(G, x, s * e)
            minus = group_multiply(G, x, -s * e)
            col = (plus - minus) / (2 * s)
            assert np.allclose(col, G.sigma_eval(x)[:, j], atol=1e-9)

    def test_descriptor_validation_rejects_bad_frame(self):
        def sigma(x):
            x = np.asarray(x, dtype=float)
            out = np.zeros(x.shape[:-1] + (3, 2))
            out[..., 0, 0] = 2.0  # top block must be the identity
            out[..., 1, 1] = 1.0
            return out

        def jac(x):
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape[:-1] + (3, 3, 2))

        with pytest.raises(ValueError):
            GroupDescriptor(
                name="bad", layer_dims=(2, 1), sigma_eval=sigma, sigma_jacobian_eval=jac
            )

    def test_abelian_descriptor_is_not_heisenberg(self):
        G = abelian(3)
        assert not G.is_heisenberg()
        assert G.homogeneous_dimension == 3


class TestLaw:
    def test_frozen_product(self):
        G = heisenberg(1)
        out = group_multiply(G, np.array([1.0, 0.0, 0.0]), np.array([0.0, 1.0, 0.0]))
        assert np.array_equal(out, [1.0, 1.0, -2.0])

    def test_identity_and_inverse(self):
        G = heisenberg(2)
        rng = np.random.default_rng(3)
        x = rng.uniform(-2, 2, (5, G.n))
        zero = np.zeros(G.n)
        assert np.allclose(group_multiply(G, x, zero), x)
        assert np.allclose(group_multiply(G, zero, x), x)
        assert np.allclose(group_multiply(G, x, group_inverse(G, x)), 0.0)
        assert np.allclose(group_multiply(G, group_inverse(G, x), x), 0.0)

    def test_associativity(self):
        G = heisenberg(2)
        rng = np.random.default_rng(11)
        x, y, z = rng.uniform(-1.5, 1.5, (3, G.n))
        left = group_multiply(G, group_multiply(G, x, y), z)
        right = group_multiply(G, x, group_multiply(G, y, z))
        assert np.allclose(left, right, atol=1e-14)

    def test_noncommutative(self):
        G = heisenberg(1)
        x = np.array([1.0, 0.0, 0.0])
        y = np.array([0.0, 1.0, 0.0])
        assert not np.allclose(group_multiply(G, x, y), group_multiply(G, y, x))

    def test_left_translation_matches_product(self):
        G = heisenberg(1)
        g = np.array([0.4, -0.2, 0.9])
        x = np.array([[0.1, 0.3, -0.5], [1.0, -1.0, 2.0]])
        assert np.allclose(left_translation(G, g)(x), group_multiply(G, g, x))

    def test_law_requires_heisenberg(self):
        G = abelian(3)
        with pytest.raises(UnsupportedGroupError):
            group_multiply(G, np.zeros(3), np.zeros(3))
        with pytest.raises(UnsupportedGroupError):
            homogeneous_norm(G, np.zeros(3))


class TestDilationsAndGauge:
    def test_dilation_weights(self):
        G = heisenberg(1)
        out = dilate(G, 3.0, np.array([1.0, -2.0, 5.0]))
        assert np.allclose(out, [3.0, -6.0, 45.0])

    def test_dilation_is_homomorphism(self):
        G = heisenberg(2)
        rng = np.random.default_rng(5)
        x, y = rng.uniform(-1, 1, (2, G.n))
        lam = 1.7
        a = dilate(G, lam, group_multiply(G, x, y))
        b = group_multiply(G, dilate(G, lam, x), dilate(G, lam, y))
        assert np.allclose(a, b, atol=1e-14)

    def test_dilation_rejects_nonpositive(self):
        G = heisenberg(1)
        for lam in (0.0, -1.0):
            with pytest.raises(ValueError):
                dilate(G, lam, np.zeros(3))

    def test_gauge_values_and_homogeneity(self):
        G = heisenberg(1)
        assert homogeneous_norm(G, np.array([1.0, 0.0, 0.0])) == 1.0
        assert homogeneous_norm(G, np.array([0.0, 0.0, 4.0])) == 2.0
        rng = np.random.default_rng(2)
        x = rng.uniform(-2, 2, (7, G.n))
        lam = 0.37
        assert np.allclose(
            homogeneous_norm(G, dilate(G, lam, x)),
            lam * homogeneous_norm(G, x),
            rtol=1e-14,
        )

    def test_gauge_symmetric_under_inverse(self):
        G = heisenberg(2)
        rng = np.random.default_rng(9)
        x = rng.uniform(-1, 1, (4, G.n))
        assert np.allclose(
            homogeneous_norm(G, group_inverse(G, x)), homogeneous_norm(G, x)
        )
