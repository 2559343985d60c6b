import numpy as np
import pytest

from filtbem.assembly2d import assemble_gram
from filtbem.excitation2d import (MagneticLineSource, PlaneWaveTE,
                                  assemble_rhs, incident_e_field,
                                  incident_fields)
from filtbem.mesh2d import Ellipse, build_mesh
from filtbem.special import hankel_h1_0


class TestIncidentFields:
    def test_plane_wave_phase_at_origin(self):
        src = PlaneWaveTE((1.0, 0.0), amplitude=2.0 - 1.0j)
        _, h = incident_fields(src, 0.7, 1.0, np.array([0.0, 0.0]),
                               np.array([0.0, 1.0]))
        assert h == pytest.approx(2.0 - 1.0j)

    def test_line_source_field_value(self):
        src = MagneticLineSource((0.0, 0.0), amplitude=3.0 + 0.0j)
        k = 1.3
        _, h = incident_fields(src, k, 1.0, np.array([1.0, 0.0]),
                               np.array([0.0, 1.0]))
        assert h == pytest.approx(3.0 * 0.25j * hankel_h1_0(k))

    def test_evaluation_at_source_rejected(self):
        src = MagneticLineSource((1.0, 2.0))
        with pytest.raises(ValueError):
            incident_fields(src, 1.0, 1.0, np.array([1.0, 2.0]),
                            np.array([1.0, 0.0]))

    @pytest.mark.parametrize("src", [
        MagneticLineSource((0.4, -0.3)),
        PlaneWaveTE((0.6, 0.8)),
    ])
    def test_maxwell_consistency_fd_curl(self, src):
        # z . curl E = -i omega mu h_z, with omega mu = k eta
        k, eta = 0.9, 2.0
        rng = np.random.default_rng(8)
        pts = rng.uniform(1.5, 3.0, (20, 2)) * rng.choice([-1, 1], (20, 2))
        step = 1e-5
        ex_y1 = incident_e_field(src, k, eta, pts + [0.0, step])[:, 0]
        ex_y0 = incident_e_field(src, k, eta, pts - [0.0, step])[:, 0]
        ey_x1 = incident_e_field(src, k, eta, pts + [step, 0.0])[:, 1]
        ey_x0 = incident_e_field(src, k, eta, pts - [step, 0.0])[:, 1]
        curl_z = (ey_x1 - ey_x0) / (2 * step) - (ex_y1 - ex_y0) / (2 * step)
        _, h = incident_fields(src, k, eta, pts, np.tile([1.0, 0.0], (20, 1)))
        expected = -1j * k * eta * h
        assert np.abs(curl_z - expected).max() / np.abs(expected).max() <= 1e-6

    def test_unit_direction_required(self):
        with pytest.raises(ValueError):
            PlaneWaveTE((1.0, 1.0))


class TestAssembleRhs:
    def setup_method(self):
        self.mesh = build_mesh(Ellipse(1.42, 1.32), 64)

    def test_zero_amplitude(self):
        src = MagneticLineSource((3.0, 0.0), amplitude=0.0j)
        e_vec, h_vec = assemble_rhs(self.mesh, src, 0.4, 1.0)
        assert np.abs(e_vec).max() == 0.0
        assert np.abs(h_vec).max() == 0.0

    def test_source_too_close_rejected(self):
        node = self.mesh.nodes[0]
        src = MagneticLineSource(tuple(node + 0.1 * self.mesh.h))
        with pytest.raises(ValueError):
            assemble_rhs(self.mesh, src, 0.4, 1.0)

    def test_constant_moments_match_gram_row_sums(self):
        # f = 1 through the quadrature path (plane wave, k -> 0 limit of
        # h_z) must reproduce the analytic Gram row sums
        gram_rows = assemble_gram(self.mesh).sum(axis=1)
        src = PlaneWaveTE((1.0, 0.0))
        _, h_vec = assemble_rhs(self.mesh, src, 1e-12, 1.0)
        # residual phase k * |r| ~ 3e-12 bounds the agreement
        assert np.abs(h_vec - gram_rows).max() <= 1e-11 * gram_rows.max()

    def test_small_k_plane_wave_against_higher_order_quadrature(self):
        k, eta = 1e-6, 1.0
        src = PlaneWaveTE((0.8, 0.6))
        e8, _ = assemble_rhs(self.mesh, src, k, eta, quad_order=8)
        e16, _ = assemble_rhs(self.mesh, src, k, eta, quad_order=16)
        assert np.abs(e8 - e16).max() <= 1e-10 * np.abs(e16).max()

    def test_band_limited_in_laplacian_basis(self):
        # tail of the normalized electric RHS above the filtering point is
        # tiny for a source well away from the curve
        from filtbem.calderon2d import assemble_operators, normalized_rhs

        mesh = build_mesh(Ellipse(1.42, 1.32), 251)
        ops = assemble_operators(mesh, 0.4)
        v_e, _ = normalized_rhs(ops, MagneticLineSource((3.0, 0.0)), 1.0)
        _, modes = ops.filter(50).modes_ascending()
        proj = np.abs(modes.T @ v_e)
        assert proj[50:].max() <= 1e-6 * proj.max()
