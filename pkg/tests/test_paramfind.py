"""Newton forging of defective parameter sets: recovery, freezing, errors."""

import json

import numpy as np
import pytest

from defectbench.analytic1d import EigenConfig, ModelParams, ascent_of
from defectbench.bench.cases import REDUCED_CONFIG, REGULAR_CONFIG
from defectbench.paramfind import (
    LeftAdmissibleRegionError,
    config_to_json,
    defect_residual,
    solve_defect_system,
    verify_configuration,
)


def _perturb(config: EigenConfig, rel: float) -> tuple:
    par = config.params
    return (
        par.a_R * (1 + rel * (1 + 1j)),
        par.c * (1 + rel * (1 - 1j)),
        config.lam * (1 + rel * 1j),
    )


@pytest.mark.parametrize("config", [REGULAR_CONFIG, REDUCED_CONFIG],
                         ids=["half", "third"])
def test_recovers_published_triple_from_perturbation(config):
    init = _perturb(config, 1e-3)
    report = solve_defect_system(config.params.b, 3, init)
    assert report.converged
    assert report.certified_ascent == 3
    sol = report.solution
    assert abs(sol.lam - config.lam) < 1e-6 * abs(config.lam)
    assert abs(sol.params.a_R - config.params.a_R) < 1e-6 * abs(config.params.a_R)
    assert abs(sol.params.c - config.params.c) < 1e-6 * abs(config.params.c)


def test_defect_residual_vanishes_at_published_point():
    par = REGULAR_CONFIG.params
    res = defect_residual(par.b, par.a_R, par.c, REGULAR_CONFIG.lam, 3)
    # raw coefficients are small relative to the eigenvalue scale
    assert np.max(np.abs(res)) < 1e-6 * abs(REGULAR_CONFIG.lam)


def test_nu1_freezes_coefficients_and_finds_simple_root():
    # with a_R=1, c=0 fixed, the nu=1 system is a root solve for
    # lam cos(sqrt(lam)); nearest root to 2 is (pi/2)^2
    report = solve_defect_system(0.5, 1, (1.0, 0.0, 2.0 + 0.1j))
    sol = report.solution
    assert sol.params.a_R == 1.0 and sol.params.c == 0.0
    assert abs(sol.lam - (np.pi / 2) ** 2) < 1e-8
    assert report.certified_ascent == 1


def test_nu2_freezes_c_only():
    init = _perturb(REGULAR_CONFIG, 1e-3)
    report = solve_defect_system(0.5, 2, init, freeze_c=REGULAR_CONFIG.params.c)
    assert report.solution.params.c == REGULAR_CONFIG.params.c
    assert report.residual_norm <= 1e-10


def test_verify_configuration_certifies_published_ascent():
    report = verify_configuration(REGULAR_CONFIG)
    assert report.converged
    assert report.certified_ascent == 3
    assert report.residual_norm < 1e-6


def test_verify_configuration_rejects_wrong_ascent_claim():
    wrong = EigenConfig(params=REGULAR_CONFIG.params, lam=REGULAR_CONFIG.lam,
                        ascent=2)
    report = verify_configuration(wrong)
    assert not report.converged


def test_left_half_plane_start_rejected():
    with pytest.raises(LeftAdmissibleRegionError):
        solve_defect_system(0.5, 3, (-1.0 + 0j, 0.0, 5.0 + 5.0j))


def test_invalid_defect_order_rejected():
    with pytest.raises(ValueError):
        solve_defect_system(0.5, 4, (1.0, 0.0, 2.0))
    with pytest.raises(ValueError):
        defect_residual(0.5, 1.0, 0.0, 2.0, 0)


def test_defect_residual_input_validation():
    with pytest.raises(ValueError):
        defect_residual(0.5, -1.0 + 0j, 0.0, 2.0, 3)
    with pytest.raises(ValueError):
        defect_residual(0.5, 1.0, 0.0, 0.0, 3)


def test_config_json_roundtrip_fields():
    text = config_to_json(REGULAR_CONFIG)
    doc = json.loads(text)
    assert doc["b"] == 0.5
    assert doc["ascent"] == 3
    par = ModelParams(doc["b"], complex(doc["a_R"]["re"], doc["a_R"]["im"]),
                      complex(doc["c"]["re"], doc["c"]["im"]))
    lam = complex(doc["lambda"]["re"], doc["lambda"]["im"])
    assert ascent_of(par, lam) == 3
