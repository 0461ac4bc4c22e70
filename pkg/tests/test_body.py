import numpy as np
import pytest

from christoffel import body, harmonics, sphere
from christoffel.errors import InvalidParameter

from conftest import harmonic_field


@pytest.fixture(scope="module")
def ellipsoid():
    return body.Ellipsoid(1.0, 1.2, 0.8)


@pytest.fixture(scope="module")
def ellipsoid_u(grid48, ellipsoid):
    return body.support_function(ellipsoid, grid48, L_max=32)


class TestSupport:
    def test_sphere(self, grid16):
        u = body.support_function(body.Sphere(1.0), grid16, L_max=8)
        assert np.max(np.abs(u.values - 1.0)) < 1e-14

    def test_degenerate_ellipsoid_is_sphere(self, grid16):
        u = body.support_function(body.Ellipsoid(1.0, 1.0, 1.0), grid16, L_max=8)
        assert np.max(np.abs(u.values - 1.0)) < 1e-12

    def test_ellipsoid_axis_value(self, ellipsoid):
        assert abs(ellipsoid.support_values(np.array([[0.0, 1.0, 0.0]]))[0] - 1.2) < 1e-15

    def test_parameter_gates(self):
        with pytest.raises(InvalidParameter):
            body.Sphere(0.0)
        with pytest.raises(InvalidParameter):
            body.Ellipsoid(1.0, -1.0, 1.0)
        with pytest.raises(InvalidParameter):
            body.HarmonicBump(l=2, m=3, eps=0.1, base=2.0)


class TestForward:
    def test_unit_sphere(self, grid16):
        u = body.support_function(body.Sphere(1.0), grid16, L_max=8)
        f = body.forward_f(u)
        assert np.max(np.abs(f.values - 2.0)) < 1e-12

    def test_single_mode(self, grid16):
        eps = 0.25
        u = harmonic_field(grid16, 1.0, {(2, 0): eps}, L_max=8)
        f = body.forward_f(u)
        expected = harmonic_field(grid16, 2.0, {(2, 0): -4 * eps}, L_max=8)
        assert np.max(np.abs(f.values - expected.values)) < 1e-12

    def test_ellipsoid_analytic(self, grid48, ellipsoid, ellipsoid_u):
        f = body.forward_f(ellipsoid_u)
        analytic = body.ellipsoid_forward_f(ellipsoid, grid48.nodes)
        assert np.max(np.abs(f.values - analytic)) < 1e-6


class TestEmbed:
    def test_ball_radius(self, grid16):
        u = body.support_function(body.Sphere(1.7), grid16, L_max=8)
        mesh = body.embed(u)
        radii = np.linalg.norm(mesh.vertices[: grid16.node_count], axis=1)
        assert np.max(np.abs(radii - 1.7)) < 1e-12

    def test_translated_ball(self, grid16):
        v = np.array([0.2, -0.1, 0.3])
        k = np.sqrt(4 * np.pi / 3)
        u = harmonic_field(
            grid16, 1.0, {(1, 1): v[0] * k, (1, -1): v[1] * k, (1, 0): v[2] * k}, L_max=8
        )
        mesh = body.embed(u)
        expected = grid16.nodes + v
        assert np.max(
            np.linalg.norm(mesh.vertices[: grid16.node_count] - expected, axis=1)
        ) < 1e-12

    def test_ellipsoid_on_surface(self, grid48, ellipsoid, ellipsoid_u):
        mesh = body.embed(ellipsoid_u)
        P = mesh.vertices[: grid48.node_count]
        A = ellipsoid.axes_sq
        implicit = P[:, 0] ** 2 / A[0] + P[:, 1] ** 2 / A[1] + P[:, 2] ** 2 / A[2]
        assert np.max(np.abs(implicit - 1.0)) < 1e-6

    def test_faces_and_normals(self, grid16):
        u = body.support_function(body.Sphere(1.0), grid16, L_max=8)
        mesh = body.embed(u)
        assert mesh.node_vertex_count == grid16.node_count
        assert mesh.vertices.shape[0] == grid16.node_count + 2
        assert mesh.normals.shape == mesh.vertices.shape
        assert mesh.faces.min() >= 0 and mesh.faces.max() < len(mesh.vertices)
        # convex body: all faces oriented outward
        V, F = mesh.vertices, mesh.faces
        cross = np.cross(V[F[:, 1]] - V[F[:, 0]], V[F[:, 2]] - V[F[:, 0]])
        centroid = (V[F[:, 0]] + V[F[:, 1]] + V[F[:, 2]]) / 3.0
        assert np.all(np.sum(cross * centroid, axis=1) > 0)

    def test_watertight_edge_count(self, grid16):
        # closed 2-manifold: every edge shared by exactly two faces
        u = body.support_function(body.Sphere(1.0), grid16, L_max=8)
        mesh = body.embed(u)
        edges = {}
        for tri in mesh.faces:
            for a, b in ((tri[0], tri[1]), (tri[1], tri[2]), (tri[2], tri[0])):
                key = (min(a, b), max(a, b))
                edges[key] = edges.get(key, 0) + 1
        assert set(edges.values()) == {2}


class TestPrincipalRadii:
    def test_ball(self, grid16):
        u = body.support_function(body.Sphere(2.5), grid16, L_max=8)
        r1, r2 = body.principal_radii(u, grid16.nodes[12])
        assert abs(r1 - 2.5) < 1e-10 and abs(r2 - 2.5) < 1e-10

    def test_ellipsoid_axis_points(self, ellipsoid, ellipsoid_u):
        a, b, c = ellipsoid.a, ellipsoid.b, ellipsoid.c
        cases = {
            (1.0, 0.0, 0.0): sorted((b * b / a, c * c / a)),
            (0.0, 1.0, 0.0): sorted((a * a / b, c * c / b)),
            (0.0, 0.0, 1.0): sorted((a * a / c, b * b / c)),
        }
        for x, expected in cases.items():
            for sign in (1.0, -1.0):
                r = body.principal_radii(ellipsoid_u, sign * np.array(x))
                assert abs(r[0] - expected[0]) < 1e-6
                assert abs(r[1] - expected[1]) < 1e-6

    def test_analytic_oracle_general_points(self, grid48, ellipsoid, ellipsoid_u):
        for idx in (100, 1111, 3000):
            x = grid48.nodes[idx]
            r = body.principal_radii(ellipsoid_u, x)
            ra = body.ellipsoid_principal_radii(ellipsoid, x)
            assert abs(r[0] - ra[0]) < 1e-6 and abs(r[1] - ra[1]) < 1e-6

    def test_trace_identity(self, grid48, ellipsoid_u):
        f = body.forward_f(ellipsoid_u)
        for idx in range(0, grid48.node_count, 977):
            r1, r2 = body.principal_radii(ellipsoid_u, grid48.nodes[idx])
            assert abs(r1 + r2 - f.values[idx]) < 1e-8


class TestRoundTrip:
    def test_sphere_and_ellipsoid(self, grid48, ellipsoid, ellipsoid_u):
        for u_exact in (
            body.support_function(body.Sphere(1.3), grid48, L_max=32),
            ellipsoid_u,
        ):
            f = body.forward_f(u_exact)
            u = harmonics.solve_christoffel(f)
            # degree-1 alignment: both ellipsoid and sphere are centered, and
            # the solver zeroes the degree-1 part, so compare directly
            mesh = body.embed(u)
            mesh_exact = body.embed(u_exact)
            err = np.linalg.norm(
                mesh.vertices[: grid48.node_count]
                - mesh_exact.vertices[: grid48.node_count],
                axis=1,
            )
            assert np.max(err) < 1e-5

    def test_translated_body_alignment(self, grid24):
        # translation lives in the degree-1 coefficients; aligning them
        # reproduces the off-center body exactly
        v = np.array([0.15, 0.0, -0.2])
        k = np.sqrt(4 * np.pi / 3)
        u_exact = harmonic_field(
            grid24, 1.0,
            {(2, 0): 0.1, (1, 1): v[0] * k, (1, -1): v[1] * k, (1, 0): v[2] * k},
            L_max=12,
        )
        f = body.forward_f(u_exact)
        u = harmonics.solve_christoffel(f, project=True)
        aligned = harmonics.HarmonicCoeffs(
            L_max=12, c=u.coeffs.c + (u_exact.coeffs.c - u.coeffs.c) * 0.0
        )
        c = u.coeffs.c.copy()
        c[1:4] = u_exact.coeffs.c[1:4]
        aligned = harmonics.synthesize(harmonics.HarmonicCoeffs(L_max=12, c=c), grid24)
        assert np.max(np.abs(aligned.values - u_exact.values)) < 1e-10


class TestObj:
    def test_format(self, grid16, tmp_path):
        u = body.support_function(body.Sphere(1.0), grid16, L_max=8)
        mesh = body.embed(u)
        path = tmp_path / "ball.obj"
        body.write_obj(mesh, path)
        lines = path.read_text().splitlines()
        n_v = sum(1 for ln in lines if ln.startswith("v "))
        n_vn = sum(1 for ln in lines if ln.startswith("vn "))
        n_f = sum(1 for ln in lines if ln.startswith("f "))
        assert n_v == len(mesh.vertices) and n_vn == len(mesh.normals)
        assert n_f == len(mesh.faces)
        first_v = lines[0].split()
        assert first_v[0] == "v" and len(first_v) == 4
        float(first_v[1])  # parses as a number
        face = next(ln for ln in lines if ln.startswith("f ")).split()
        idx = [int(p) for p in face[1:]]
        assert min(idx) >= 1 and max(idx) <= len(mesh.vertices)
