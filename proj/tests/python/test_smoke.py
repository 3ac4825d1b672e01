import json
import math
import os
from pathlib import Path

import numpy as np
import pytest

import spectral_nsr as sn

DATA = Path(os.environ.get("SNSR_TEST_DATA", Path(__file__).resolve().parents[1] / "data"))


def path3():
    return sn.Graph.from_edges(3, [(0, 1, 1.0), (1, 2, 1.0)])


def test_graph_and_laplacian():
    g = path3()
    assert g.size == 3 and g.edge_count == 2
    assert g.labels == ["v0", "v1", "v2"]
    lap = sn.laplacian(g)
    expected = np.array([[1, -1, 0], [-1, 2, -1], [0, -1, 1]], dtype=float)
    assert np.array_equal(lap.dense(), expected)
    vals = sn.eigendecompose(lap).eigenvalues
    assert np.allclose(vals, [0.0, 1.0, 3.0], atol=1e-12)
    assert sn.lambda_max_bound(sn.laplacian(g, "normalized")) == 2.0


def test_gft_round_trip_matches_numpy():
    rng = np.random.default_rng(0)
    n = 30
    edges = [(i, j, float(rng.uniform(0.5, 1.5))) for i in range(n) for j in range(i + 1, n) if rng.random() < 0.2]
    g = sn.Graph.from_edges(n, edges)
    lap = sn.laplacian(g)
    basis = sn.eigendecompose(lap)
    assert np.allclose(np.sort(np.linalg.eigvalsh(lap.dense())), basis.eigenvalues, atol=1e-10)
    x = rng.standard_normal(n)
    xh = sn.gft(basis, x)
    assert math.isclose(np.linalg.norm(xh), np.linalg.norm(x), rel_tol=1e-12)
    assert np.allclose(sn.igft(basis, xh), x, atol=1e-12)


def test_chebyshev_matches_exact_and_numpy():
    rng = np.random.default_rng(1)
    n = 40
    edges = [(i, i + 1, 1.0) for i in range(n - 1)] + [(0, n - 1, 0.5)]
    g = sn.Graph.from_edges(n, edges)
    lap = sn.laplacian(g)
    lmax = sn.estimate_lambda_max(lap)
    f = sn.ChebyshevFilter(list(rng.uniform(-1, 1, 6)), lmax)
    x = rng.standard_normal(n)
    y = sn.chebyshev_filter(lap, f, x)
    # numpy reference: eigendecomposition of the dense Laplacian
    w, u = np.linalg.eigh(lap.dense())
    t = 2.0 * w / lmax - 1.0
    h = sum(c * np.cos(k * np.arccos(np.clip(t, -1, 1))) for k, c in enumerate(f.coefficients))
    assert np.allclose(y, u @ (h * (u.T @ x)), atol=1e-10)
    assert np.allclose(sn.exact_filter(sn.eigendecompose(lap), f, x), y, atol=1e-10)


def test_fit_and_sample_response():
    f = sn.fit_chebyshev(lambda l: l, 1, 2.0)
    assert np.allclose(f.coefficients, [1.0, 1.0], atol=1e-12)
    grid, vals = f.sample(5)
    assert np.allclose(vals, grid, atol=1e-12)
    heat = sn.fit_chebyshev("heat", 20, 2.0)
    assert abs(heat.response(1.0) - math.exp(-1.0)) < 1e-10
    assert sn.ChebyshevFilter.from_json(f.to_json()).coefficients == f.coefficients


def test_forward_chain():
    out = sn.forward_chain("atom a\natom b\natom c\nfact a\nclause b :- a\nclause c :- b\nexclusive a c\n")
    assert out["closure"] == ["a", "b", "c"]
    assert out["conflicts"] == [("a", "c")]
    assert "  [c1] c :- b" in out["traces"]


def test_errors_carry_codes():
    with pytest.raises(sn.SnsrError) as info:
        sn.Graph.from_edges(2, [(0, 0, 1.0)])
    assert info.value.code == "SelfLoop"
    assert info.value.numerical is False
    with pytest.raises(sn.SnsrError) as info:
        sn.ChebyshevFilter([1.0], -1.0)
    assert info.value.code == "BadParams"


def test_dataset_training_and_eval(tmp_path):
    data = sn.generate_dataset("transitive", count=60, max_depth=3, width=2, seed=4)
    assert (len(data.train), len(data.val), len(data.test)) == (48, 6, 6)
    data.save(tmp_path / "ds")
    back = sn.Dataset.load(tmp_path / "ds")
    assert [t.kb_text for t in back.train] == [t.kb_text for t in data.train]
    run = sn.train(data, "epochs=3\nlatency_reps=1\n")
    assert len(run["history"]) == 4
    report = sn.evaluate(run["best"], data.test)
    assert 0.0 <= report["accuracy"] <= 1.0 and "timing" not in report
    again = sn.Checkpoint.from_json(run["best"].to_json())
    assert json.loads(again.to_json()) == json.loads(run["best"].to_json())


def test_reference_checkpoint_golden():
    ck = sn.Checkpoint.load(DATA / "reference_ckpt.json")
    out = sn.run_pipeline(ck, sn.gen_transitive(3, 2, 0))
    golden = (DATA / "golden_transitive_d3_s0.txt").read_text().splitlines()
    assert out["closure"] == golden
    untrained = sn.evaluate(sn.untrained(""), sn.generate_dataset(seed=0).test)["accuracy"]
    trained = sn.evaluate(ck, sn.generate_dataset(seed=0).test)["accuracy"]
    assert trained >= 0.95 and trained - untrained >= 0.2
