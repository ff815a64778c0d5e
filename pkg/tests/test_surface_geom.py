import numpy as np
import pytest

from rbfsurf import (
    GeometryError,
    Kernel,
    KernelFamily,
    NodeSet,
    analytic_frames,
    approx_normal,
    estimate_frames,
    fit_levelset,
    gen_sphere_nodes,
    levelset_curvature,
    levelset_gradient,
    levelset_normal,
    load_frames,
    nearest_neighbors,
    save_frames,
    schwarz_p,
    unit_sphere,
)
from rbfsurf.surface_geom import LevelSetFit, SurfaceFrame

GAUSS2 = Kernel(KernelFamily.GAUSSIAN, 2.0)


@pytest.fixture(scope="module")
def sphere_nodes():
    return gen_sphere_nodes(1000)


def sphere_fit(nodes, i, m=16, kernel=GAUSS2):
    st = nearest_neighbors(nodes, i, m)
    return fit_levelset(st, nodes, kernel, h=float(st.neighbor_distances[0]))


class TestApproxNormal:
    def test_planar_patch(self):
        n = approx_normal([0, 0, 1], [0.1, 0, 1], [0, 0.1, 1])
        assert abs(abs(n[2]) - 1.0) < 1e-12
        assert np.linalg.norm(n) == pytest.approx(1.0)

    def test_collinear_rejected(self):
        with pytest.raises(GeometryError):
            approx_normal([0, 0, 0], [1, 0, 0], [2, 0, 0])

    def test_coincident_rejected(self):
        with pytest.raises(GeometryError):
            approx_normal([0, 0, 0], [1, 0, 0], [1, 0, 0])

    def test_sphere_points_near_pole(self):
        # three points near (1,0,0) on the sphere: normal within 10 degrees
        def on_sphere(y, z):
            return np.array([np.sqrt(1 - y * y - z * z), y, z])

        n = approx_normal(on_sphere(0.0, 0.0), on_sphere(0.08, 0.01), on_sphere(0.01, 0.08))
        cos = abs(n @ [1.0, 0.0, 0.0])
        assert cos >= np.cos(np.radians(10.0))


class TestFitLevelset:
    def test_residuals_on_sphere_stencil(self, sphere_nodes):
        fit = sphere_fit(sphere_nodes, 123)
        pts = fit.centers[:-2]
        for p in pts:
            assert abs(fit(p)) <= 1e-8
        assert fit(fit.centers[-2]) == pytest.approx(1.0, abs=1e-8)
        assert fit(fit.centers[-1]) == pytest.approx(-1.0, abs=1e-8)

    def test_coefficients_sum_to_zero(self, sphere_nodes):
        fit = sphere_fit(sphere_nodes, 7)
        assert abs(fit.coefficients.sum()) <= 1e-10 * np.abs(fit.coefficients).max()

    def test_small_stencil_rejected(self, sphere_nodes):
        st = nearest_neighbors(sphere_nodes, 0, 4)
        with pytest.raises(ValueError):
            fit_levelset(st, sphere_nodes, GAUSS2, h=0.1)

    def test_nonpositive_offset_rejected(self, sphere_nodes):
        st = nearest_neighbors(sphere_nodes, 0, 16)
        with pytest.raises(ValueError):
            fit_levelset(st, sphere_nodes, GAUSS2, h=0.0)

    def test_planar_stencil_normal(self):
        # regular grid in the z=0 plane; fitted normal must be +-e_z
        xs, ys = np.meshgrid(np.arange(4) * 0.1, np.arange(4) * 0.1)
        pts = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(16)])
        nodes = NodeSet(pts)
        st = nearest_neighbors(nodes, 5, 9)
        fit = fit_levelset(st, nodes, Kernel(KernelFamily.GAUSSIAN, 1.0),
                           h=float(st.neighbor_distances[0]))
        n = levelset_normal(fit, nodes.points[5])
        assert abs(abs(n[2]) - 1.0) <= 1e-6
        assert abs(levelset_curvature(fit, nodes.points[5], n)) <= 1e-3


class TestLevelsetDerivatives:
    def test_zero_coefficients_zero_gradient(self):
        fit = LevelSetFit(np.zeros(3), 0.5, np.eye(3), GAUSS2, 1.0)
        np.testing.assert_array_equal(levelset_gradient(fit, [0.3, 0.2, 0.1]), np.zeros(3))

    def test_gradient_at_center_single_rbf(self):
        fit = LevelSetFit(np.array([1.0]), 0.0, np.array([[0.2, 0.3, 0.4]]), GAUSS2, 1.0)
        np.testing.assert_allclose(levelset_gradient(fit, [0.2, 0.3, 0.4]), np.zeros(3))

    def test_gradient_matches_finite_differences(self, sphere_nodes):
        fit = sphere_fit(sphere_nodes, 321)
        x = sphere_nodes.points[321]
        fd = np.empty(3)
        for a in range(3):
            e = np.zeros(3)
            e[a] = 1e-6
            fd[a] = (fit(x + e) - fit(x - e)) / 2e-6
        np.testing.assert_allclose(levelset_gradient(fit, x), fd, rtol=1e-6, atol=1e-9)

    def test_sphere_normal_is_radial(self, sphere_nodes):
        # fixed equatorial node: the one nearest (1,0,0)
        i = int(np.argmax(sphere_nodes.points @ np.array([1.0, 0.0, 0.0])))
        fit = sphere_fit(sphere_nodes, i)
        n = levelset_normal(fit, sphere_nodes.points[i])
        x = sphere_nodes.points[i]
        assert min(np.abs(n - x).max(), np.abs(n + x).max()) <= 1e-3

    def test_zero_gradient_raises(self):
        fit = LevelSetFit(np.zeros(3), 0.5, np.eye(3), GAUSS2, 1.0)
        with pytest.raises(GeometryError):
            levelset_normal(fit, [0.1, 0.2, 0.3])
        with pytest.raises(GeometryError):
            levelset_curvature(fit, [0.1, 0.2, 0.3], [0.0, 0.0, 1.0])

    def test_sphere_curvature_close_to_two(self, sphere_nodes):
        st = nearest_neighbors(sphere_nodes, 42, 31)
        fit = fit_levelset(st, sphere_nodes, GAUSS2, h=float(st.neighbor_distances[0]))
        x = sphere_nodes.points[42]
        n = levelset_normal(fit, x)
        # the raw fit's sign convention follows its internal normal guess,
        # so only the magnitude is pinned down here
        kappa = levelset_curvature(fit, x, n)
        assert 1.9 <= abs(kappa) <= 2.1

    def test_curvature_sign_tracks_normal(self, sphere_nodes):
        fit = sphere_fit(sphere_nodes, 55, m=31)
        x = sphere_nodes.points[55]
        n = levelset_normal(fit, x)
        k_plus = levelset_curvature(fit, x, n)
        k_minus = levelset_curvature(fit, x, -n)
        # the formula sees n only through (r.n)^2, so flipping n must be
        # compensated by the caller; the estimator flips kappa with n
        assert k_plus == pytest.approx(k_minus)

    def test_curvature_against_fd_divergence(self, sphere_nodes):
        # oracle: divergence of the unit gradient field by central differences
        fit = sphere_fit(sphere_nodes, 17, m=31)
        x = sphere_nodes.points[17]
        n = levelset_normal(fit, x)

        def unit_normal(p):
            g = levelset_gradient(fit, p)
            return g / np.linalg.norm(g)

        step = 1e-5
        div = 0.0
        for a in range(3):
            e = np.zeros(3)
            e[a] = step
            div += (unit_normal(x + e)[a] - unit_normal(x - e)[a]) / (2 * step)
        assert levelset_curvature(fit, x, n) == pytest.approx(div, abs=1e-6)


class TestEstimateFrames:
    def test_sphere_frames_accuracy(self, sphere_nodes):
        frames = estimate_frames(sphere_nodes, 31, GAUSS2)
        assert np.abs(frames.normals - sphere_nodes.points).max() <= 1e-2
        assert np.abs(frames.curvatures - 2.0).max() <= 1e-1

    def test_normals_unit(self, sphere_nodes):
        frames = estimate_frames(sphere_nodes, 11, GAUSS2)
        norms = np.linalg.norm(frames.normals, axis=1)
        assert np.abs(norms - 1.0).max() <= 1e-12

    def test_orientation_outward_on_sphere(self, sphere_nodes):
        frames = estimate_frames(sphere_nodes, 21, GAUSS2)
        dots = np.einsum("ij,ij->i", frames.normals, sphere_nodes.points)
        assert np.all(dots > 0)

    @pytest.mark.filterwarnings("ignore:local system poorly conditioned")
    def test_global_stencil_n_equals_m(self):
        # M == N exercises the all-in-one-stencil path; the kernel must be
        # wide enough (small eps) for a 40-point global fit to resolve the sphere
        nodes = gen_sphere_nodes(40)
        frames = estimate_frames(nodes, 40, Kernel(KernelFamily.GAUSSIAN, 0.3))
        dots = np.einsum("ij,ij->i", frames.normals, nodes.points)
        assert np.all(dots > 0)
        assert np.abs(frames.curvatures - 2.0).max() <= 0.5

    def test_m_bounds(self, sphere_nodes):
        with pytest.raises(ValueError):
            estimate_frames(sphere_nodes, 4, GAUSS2)
        small = gen_sphere_nodes(30)
        with pytest.raises(ValueError):
            estimate_frames(small, 31, GAUSS2)


class TestSurfaceFrame:
    def test_shape_validation(self):
        with pytest.raises(ValueError):
            SurfaceFrame(np.zeros((5, 3)), np.zeros(4))

    def test_flipped(self):
        f = SurfaceFrame(np.eye(3)[None, 0].repeat(4, 0), np.full(4, 2.0))
        g = f.flipped()
        np.testing.assert_array_equal(g.normals, -f.normals)
        np.testing.assert_array_equal(g.curvatures, -f.curvatures)


class TestAnalyticFrames:
    def test_sphere(self, sphere_nodes):
        frames = analytic_frames(unit_sphere(), sphere_nodes.points)
        np.testing.assert_allclose(frames.normals, sphere_nodes.points, atol=1e-12)
        np.testing.assert_allclose(frames.curvatures, 2.0, atol=1e-12)

    def test_schwarz_p_against_fd(self):
        surface = schwarz_p()
        nodes = gen_sphere_nodes(200)
        from rbfsurf import project_radial
        proj = project_radial(nodes, surface, drop_misses=True)
        frames = analytic_frames(surface, proj.points)

        # FD oracle for div(grad F / |grad F|)
        def unit_grad(p):
            g = surface.gradF(p)
            return g / np.linalg.norm(g)

        rng = np.random.default_rng(5)
        for i in rng.integers(0, len(proj), 10):
            x = proj.points[i]
            step = 1e-6
            div = 0.0
            for a in range(3):
                e = np.zeros(3)
                e[a] = step
                div += (unit_grad(x + e)[a] - unit_grad(x - e)[a]) / (2 * step)
            assert frames.curvatures[i] == pytest.approx(div, abs=1e-5)


class TestFrameCsv:
    def test_round_trip(self, tmp_path, sphere_nodes):
        frames = estimate_frames(sphere_nodes, 11, GAUSS2)
        path = tmp_path / "frames.csv"
        save_frames(sphere_nodes, frames, path)
        header = path.read_text().splitlines()[0]
        assert header == "x,y,z,nx,ny,nz,kappa"
        points, back = load_frames(path)
        np.testing.assert_array_equal(points, sphere_nodes.points)
        np.testing.assert_array_equal(back.normals, frames.normals)
        np.testing.assert_array_equal(back.curvatures, frames.curvatures)
