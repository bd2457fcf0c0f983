import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from isolip.experiments import (
    ExperimentConfig,
    FamilySpec,
    GaussianGrid,
    epsilon_kn,
    parse_graph,
    prohorov_bridge_certificate,
    run_cube_stability,
    run_normal_law,
    run_obsdiam_chain,
    run_torus,
    scaled_distance_law,
)
from isolip.coupling import prohorov
from isolip.measure import AtomicMeasure, scale_shift
from isolip.mmspace import SpaceError


@given(st.integers(2, 50), st.integers(1, 10_000))
def test_epsilon_normalizes_variance(k, n):
    assert abs(epsilon_kn(k, n) ** 2 * n * (k * k - 1) / 12 - 1) <= 1e-12


def test_epsilon_examples():
    assert epsilon_kn(2, 1) == 2
    assert epsilon_kn(3, 3) == pytest.approx(math.sqrt(0.5))


def test_scaled_law_has_unit_variance():
    nu = scaled_distance_law(4, 5, epsilon_kn(4, 5))
    var = float(np.dot(nu.weights, (nu.atoms - nu.mean()) ** 2))
    assert var == pytest.approx(1.0, abs=1e-12)


def test_gaussian_grid():
    g = GaussianGrid().measure()
    assert g.size == 2401 and g.atoms[0] == -6 and g.atoms[-1] == 6
    assert g.mass == pytest.approx(1.0, abs=1e-12)
    assert abs(g.mean()) < 1e-12
    assert float(np.dot(g.weights, g.atoms**2)) == pytest.approx(1.0, abs=1e-3)


def test_normal_law_single_step_centered():
    rep = run_normal_law(2, [1])
    row = rep.rows[0]
    assert row["eps_kn"] == 2 and row["mean_shift"] == 1
    assert rep.meta["recentered"]


def test_normal_law_trend():
    rep = run_normal_law(2, [4, 16])
    assert rep.rows[1]["prohorov"] < rep.rows[0]["prohorov"]
    assert rep.passed


def test_bridge_certificate_bounds():
    mu = AtomicMeasure.uniform([0, 1, 2])
    nu = AtomicMeasure([0.2, 1.5, 3.0], [0.5, 0.25, 0.25])
    p = prohorov(mu, nu)
    cert = prohorov_bridge_certificate(mu, nu, p)
    assert cert.plan.is_transport(mu, nu)
    assert cert.s_achieved <= 2 * p + 1e-12 and cert.t_achieved <= p + 1e-12


def test_cube_stability_small():
    rep = run_cube_stability([2, 4], 2)
    first = rep.rows[0]
    assert first["dominant_at_bound"] and first["min_s_max"] <= 0.5
    assert rep.rows[0]["prohorov_next"] <= 2 * (2 / 2)
    assert rep.passed


def test_cube_stability_k8():
    rep = run_cube_stability([8], 1)
    assert rep.rows[0]["min_s_max"] <= 1 / 8 and rep.passed


def test_torus_examples():
    rep = run_torus(4, 1)
    assert rep.rows[0]["icl"] is True and rep.passed
    rep = run_torus(2, 2)
    assert rep.rows[0]["dominant_at_1"]
    with pytest.raises(SpaceError):
        run_torus(3, 1)


@pytest.mark.parametrize("k,n,factors,kappa", [(2, 3, ["K2"] * 3, 0.25), (3, 2, ["P3", "C3"], 0.5)])
def test_obsdiam_chain_examples(k, n, factors, kappa):
    rep = run_obsdiam_chain(k, n, factors, [kappa], FamilySpec(mcshane=10, seed=3))
    assert rep.passed


def test_obsdiam_chain_kappa_one():
    rep = run_obsdiam_chain(2, 2, ["K2", "K2"], [1.0])
    row = rep.rows[0]
    assert row["diam_nu"] == 0 and row["lower_graph"] == 0 and row["lower_cube"] == 0


def test_obsdiam_chain_factor_mismatch():
    with pytest.raises(ValueError):
        run_obsdiam_chain(3, 2, ["K2", "K2"], [0.5])


def test_parse_graph():
    assert parse_graph("K3").order == 3 and len(parse_graph("K3").edges) == 3
    assert parse_graph({"order": 2, "edges": [[0, 1]]}).order == 2
    with pytest.raises(ValueError):
        parse_graph("Q7")


def test_config_roundtrip_and_unknown_keys():
    cfg = ExperimentConfig.from_dict({"name": "torus", "k": 4, "family": {"mcshane": 3, "seed": 9}})
    assert cfg.family.mcshane == 3
    assert ExperimentConfig.from_dict(cfg.as_dict()).as_dict() == cfg.as_dict()
    with pytest.raises(ValueError):
        ExperimentConfig.from_dict({"name": "torus", "colour": 1})


def test_translation_does_not_move_prohorov_comparison():
    # the recentering step only translates, so distances between two laws shifted together are unchanged
    a, b = AtomicMeasure.uniform([0, 1]), AtomicMeasure.uniform([0.2, 1.4])
    assert prohorov(scale_shift(a, 1, 7), scale_shift(b, 1, 7)) == pytest.approx(prohorov(a, b))


def test_parallel_rows_match_serial(monkeypatch):
    serial = run_normal_law(2, [2, 4, 8]).as_dict()
    monkeypatch.setenv("ISOLIP_WORKERS", "2")
    assert run_normal_law(2, [2, 4, 8]).as_dict() == serial


@pytest.mark.parametrize("n", [1, 4])
def test_normal_law_distance_matches_lp_oracle(n):
    from oracles import prohorov_lp

    from isolip.measure import recenter

    nu = recenter(scaled_distance_law(2, n, epsilon_kn(2, n)))
    coarse = GaussianGrid(atoms=61).measure()
    assert prohorov(nu, coarse) == pytest.approx(prohorov_lp(nu, coarse), abs=1e-9)
