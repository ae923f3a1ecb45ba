import math

import numpy as np
import pytest

import dpglab


def test_mesh_counts():
    m = dpglab.unit_square_mesh(2)
    assert m.num_triangles == 8
    assert m.num_vertices == 9
    assert m.is_conforming()
    assert math.isclose(m.total_area(), 1.0)
    fine = dpglab.refine_uniform(m)
    assert fine.num_triangles == 32
    assert math.isclose(fine.total_area(), 1.0)
    assert dpglab.lshape_mesh().total_area() == pytest.approx(3.0)


def test_mesh_arrays_round_trip():
    m = dpglab.unit_square_mesh(1)
    v = m.vertices
    t = m.triangles
    assert v.shape[1] == 2 and t.shape[1] == 3
    assert dpglab.Mesh(v, t, m.refinement_edges) == m


def test_solve_and_mark():
    prob = dpglab.square_smooth()
    mesh = prob.initial_mesh()
    r = dpglab.solve(mesh, prob, dpglab.TrialKind.standard, 1, postprocess=True)
    assert r["eta"] > 0
    assert len(r["local_eta"]) == mesh.num_triangles
    assert r["orthogonality_defect"] <= 1e-8 * r["orthogonality_scale"]
    marked = dpglab.mark([3.0, 4.0, 0.0, 1.0], 0.5)
    assert marked == [1]


def test_run_study_and_slope(tmp_path):
    out = tmp_path / "study.csv"
    recs = dpglab.run_study("square", p=0, trial=dpglab.TrialKind.augmented, levels=4, out=str(out))
    assert len(recs) == 4
    assert out.exists()
    assert dpglab.fit_slope(recs, "err_u", 3) == pytest.approx(1.0, abs=0.15)


def test_bad_config_raises(tmp_path):
    with pytest.raises(dpglab.ConfigError):
        dpglab.run_study("square", p=-1, out=str(tmp_path / "x.csv"))
