import io
import json
from pathlib import Path

import numpy as np
import pytest

from lyaprank.cli import main
from lyaprank.config import build_family, build_source, load_config, validate_config
from lyaprank.errors import ConfigError
from lyaprank.sequences import SubstitutionSource

CONFIGS = Path(__file__).resolve().parent.parent / "configs"


def run(argv):
    out, err = io.StringIO(), io.StringIO()
    code = main(argv, out, err)
    return code, out.getvalue(), err.getvalue()


def write(tmp_path, cfg, name="c.json"):
    p = tmp_path / name
    p.write_text(json.dumps(cfg))
    return str(p)


def csv_map(text):
    return dict(line.split(",", 1) for line in text.splitlines() if "," in line and not line.startswith("#"))


@pytest.mark.parametrize("path", sorted(CONFIGS.glob("*.json")), ids=lambda p: p.stem)
def test_shipped_configs_validate(path):
    load_config(path)


def test_unknown_sequence_type_diagnostic():
    with pytest.raises(ConfigError, match="unknown type 'bogus'"):
        validate_config({"sequence": {"type": "bogus"}})


def test_missing_field_diagnostic():
    with pytest.raises(ConfigError, match="'seed' is a required property"):
        validate_config({"sequence": {"type": "bernoulli", "p": [0.5, 0.5]}})


def test_unknown_top_level_key():
    with pytest.raises(ConfigError):
        validate_config({"colour": 1})


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError, match="does not exist"):
        load_config(tmp_path / "missing.json")
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    with pytest.raises(ConfigError, match="invalid JSON"):
        load_config(bad)


def test_build_family_from_dense_and_complex():
    fam = build_family({"A0": [[1, 2], [2, 4]], "others": [[[1, 0], [0, 1]]]})
    assert fam.A0.lam == pytest.approx(5.0)
    fam = build_family({"A0": {"u": [[1, 1], 0], "v": [1, 0]}, "others": [[[1, 0], [0, 1]]]})
    assert fam.is_complex
    with pytest.raises(ConfigError):
        build_family({"A0": [[1, 0], [0, 1]], "others": [[[1, 0], [0, 1]]]})


def test_build_source_substitution_images():
    src = build_source({"type": "substitution", "images": [[0, 1], [0]]})
    assert isinstance(src, SubstitutionSource)
    assert src.generate(5).tolist() == [0, 1, 0, 0, 1]


def test_sequence_command():
    code, out, _ = run(["sequence", "-c", str(CONFIGS / "thue_morse_sequence.json")])
    assert code == 0 and out.strip() == "0110100110010110"


def test_sequence_n_override(tmp_path):
    cfg = write(tmp_path, {"command": "sequence", "sequence": {"type": "bfree", "set": {"type": "squarefree"}}})
    code, out, _ = run(["sequence", "-c", cfg, "--n", "10"])
    assert code == 0 and out.strip() == "1110111001"


def test_seed_override_changes_bernoulli(tmp_path):
    cfg = write(tmp_path, {"command": "sequence", "n": 40,
                           "sequence": {"type": "bernoulli", "p": [0.5, 0.5], "seed": 1}})
    a = run(["sequence", "-c", cfg])[1]
    b = run(["sequence", "-c", cfg, "--seed", "2"])[1]
    assert a != b and a == run(["sequence", "-c", cfg, "--seed", "1"])[1]


def test_freq_command_thue_morse():
    code, out, _ = run(["freq", "-c", str(CONFIGS / "thue_morse_freq.json")])
    assert code == 0
    disc = [float(line.rsplit(",", 1)[1]) for line in out.splitlines() if line.startswith(("durand,", "michel,"))]
    assert disc and max(disc) < 1e-12


def test_freq_command_squarefree():
    code, out, _ = run(["freq", "-c", str(CONFIGS / "squarefree_freq.json")])
    assert code == 0
    rows = csv_map(out)
    assert abs(float(rows["111"]) - 0.1254869809) < 1e-9


def test_lyap_command_fibonacci():
    code, out, _ = run(["lyap", "-c", str(CONFIGS / "fibonacci_lyap.json")])
    rows = csv_map(out)
    assert code == 0
    assert float(rows["abs_gap"]) < 1e-4


def test_lyap_neg_inf_is_a_result():
    code, out, _ = run(["lyap", "-c", str(CONFIGS / "lambda_zero_lyap.json")])
    rows = csv_map(out)
    assert code == 0
    assert rows["closed_form"] == "-inf" and rows["degenerate_reason"] == "lambdaZero"


def test_lyap_counterexample_warns():
    code, out, err = run(["lyap", "-c", str(CONFIGS / "counterexample_lyap.json")])
    assert code == 0
    assert "rho0=0; hypotheses not met" in out + err


def test_lyap_bernoulli():
    code, out, _ = run(["lyap", "-c", str(CONFIGS / "bernoulli_lyap.json")])
    assert code == 0 and "closed_form" in out


def test_spectrum_command(tmp_path):
    code, out, _ = run(["spectrum", "-c", str(CONFIGS / "moebius2_spectrum.json"), "--out-dir", str(tmp_path)])
    assert code == 0
    rows = csv_map(out)
    assert abs(float(rows["alpha_max"]) - 0.607927) < 1e-6
    assert rows["convex"] == "True"
    p = (tmp_path / "moebius2_pressure.csv").read_text().splitlines()
    assert p[0] == "beta,psi,dpsi" and len(p) == 802
    assert (tmp_path / "moebius2.svg").exists()
    first = run(["spectrum", "-c", str(CONFIGS / "moebius2_spectrum.json"), "--out-dir", str(tmp_path / "again")])
    assert first[0] == 0
    assert (tmp_path / "again" / "moebius2_pressure.csv").read_text() == (tmp_path / "moebius2_pressure.csv").read_text()


def test_spectrum_bad_weights(tmp_path):
    cfg = write(tmp_path, {"command": "spectrum", "potential": [[0, 0], [0, 1]],
                           "weights": {"type": "substitution", "name": "tribonacci"}})
    code, _, err = run(["spectrum", "-c", cfg, "--out-dir", str(tmp_path)])
    assert code == 2 and "weights" in err


def test_spectrum_empty_grid(tmp_path):
    cfg = write(tmp_path, {"command": "spectrum", "potential": [[0, 0], [0, 1]],
                           "weights": {"type": "substitution", "name": "fibonacci"}, "grid": []})
    code, _, err = run(["spectrum", "-c", cfg, "--out-dir", str(tmp_path)])
    assert code == 2 and "empty" in err


def test_config_error_exit_code(tmp_path):
    cfg = write(tmp_path, {"command": "freq", "sequence": {"type": "bogus"}})
    code, _, err = run(["freq", "-c", cfg])
    assert code == 2 and "unknown type" in err


def test_command_mismatch(tmp_path):
    code, _, err = run(["lyap", "-c", str(CONFIGS / "thue_morse_freq.json")])
    assert code == 2 and "not 'lyap'" in err


def test_numeric_error_exit_code(tmp_path):
    cfg = write(tmp_path, {"command": "freq", "sequence": {"type": "bfree", "set": {"type": "squarefree"}},
                           "methods": ["mirsky"], "precision": 1e-20})
    code, _, err = run(["freq", "-c", cfg])
    assert code == 3 and "PrecisionUnreachable" in err


def test_non_primitive_substitution_is_config_error(tmp_path):
    cfg = write(tmp_path, {"command": "freq", "methods": ["durand"],
                           "sequence": {"type": "substitution", "images": [[0, 1], [1, 1]]}})
    code, _, err = run(["freq", "-c", cfg])
    assert code == 2 and "primitive" in err


def test_validate_subset_and_report(tmp_path):
    report = tmp_path / "r.json"
    code, out, _ = run(["validate", "--criteria", "1", "4", "--report", str(report)])
    assert code == 0
    assert out.count("[PASS]") == 2
    data = json.loads(report.read_text())
    assert [d["id"] for d in data] == [1, 4] and all(d["passed"] for d in data)


def test_validate_tampered_constant(tmp_path):
    cfg = write(tmp_path, {"command": "validate", "criteria": [1, 4], "constants": {"example_F1": 0.2}})
    code, out, _ = run(["validate", "-c", cfg])
    assert code == 3
    assert "[PASS] criterion 1" in out and "[FAIL] criterion 4" in out


def test_validate_unknown_ids_and_constants(tmp_path):
    assert run(["validate", "--criteria", "99"])[0] == 2
    cfg = write(tmp_path, {"command": "validate", "constants": {"nonsense": 1.0}})
    assert run(["validate", "-c", cfg])[0] == 2


def test_thread_env_var(monkeypatch):
    monkeypatch.setenv("LYAPRANK_THREADS", "2")
    code, out, _ = run(["validate", "--criteria", "1", "4"])
    assert code == 0 and out.count("[PASS]") == 2
    monkeypatch.setenv("LYAPRANK_THREADS", "zero")
    assert run(["validate", "--criteria", "1"])[0] == 2
