"""One line per acceptance criterion.

Run ``pytest tests/test_acceptance.py -s`` (or ``-v``) to see the
``[PASS]``/``[FAIL]`` lines; each criterion is also its own test item.
"""

import math

import pytest

from lyaprank.acceptance import CRITERIA, REFERENCE_CONSTANTS, run_acceptance, run_criterion


SLUGS = {1: "tribonacci", 2: "thue-morse", 3: "fibonacci", 4: "return-example", 5: "squarefree-zeta",
         6: "squarefree-cylinders", 7: "moebius-pressure", 8: "counterexample", 9: "bernoulli",
         10: "properties"}


def _label(cid):
    return f"{cid:02d}-{SLUGS[cid]}"


@pytest.mark.parametrize("cid", sorted(CRITERIA), ids=_label)
def test_criterion(cid, capsys):
    result = run_criterion(cid)
    with capsys.disabled():
        print("\n" + result.line())
    assert result.error is None, result.error
    assert result.passed, result.line()


def test_all_ten_criteria_registered():
    assert sorted(CRITERIA) == list(range(1, 11))


@pytest.mark.parametrize("key,cid,value", [
    ("tribonacci_rho", 1, 1.8393),
    ("thue_morse_F11", 2, 0.17),
    ("fibonacci_F1", 3, 0.38),
    ("example_F1", 4, 0.2),
    ("zeta2_2", 5, 3.0995),
    ("nu_110", 6, 0.1972),
    ("moebius2_dpsi_plus_inf", 7, 0.6079),
    ("counterexample_limit", 8, 0.9),
])
def test_tampered_constant_fails_named_criterion(key, cid, value):
    assert REFERENCE_CONSTANTS[key] != value
    result = run_criterion(cid, {key: value})
    assert not result.passed
    assert result.line().startswith(f"[FAIL] criterion {cid}:")


def test_tampering_does_not_leak():
    run_criterion(1, {"tribonacci_rho": 2.0})
    assert math.isclose(REFERENCE_CONSTANTS["tribonacci_rho"], 1.839286755214161)
    assert run_criterion(1).passed


def test_subset_and_threads():
    results = run_acceptance([4, 1], threads=2)
    assert [r.cid for r in results] == [4, 1]
    assert all(r.passed for r in results)
    with pytest.raises(KeyError):
        run_acceptance([11])


def test_report_dict_is_json_ready():
    import json
    d = run_criterion(1).as_dict()
    json.dumps(d)
    assert d["id"] == 1 and d["passed"] is True
