import json

import jcli

INVERSION_DOC = {
    "n": 2,
    "jspecial": {"edges": [{"i": 1, "k": 2, "N": 1}]},
    "geodesic": {"edges": [{"i": 1, "k": 2, "g": [[0, -1], [1, 0]]}]},
}


def _write_doc(tmp_path, data, name="doc.json"):
    path = tmp_path / name
    path.write_text(json.dumps(data))
    return str(path)


def _run(argv, capsys):
    code = jcli.main(argv)
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def _report(out):
    payload = json.loads(out)
    assert payload["schema"] == jcli.REPORT_SCHEMA
    return payload["result"]


# ---------------------------------------------------------------------------
# modpoly


def test_modpoly_prints_the_polynomial(capsys):
    code, out, _ = _run(["modpoly", "1"], capsys)
    assert code == 0
    assert out.strip() == "X - Y"


def test_modpoly_json(capsys):
    code, out, _ = _run(["modpoly", "2", "--json"], capsys)
    assert code == 0
    result = _report(out)
    assert result["level"] == 2
    assert result["degree"] == 3
    assert result["symmetric"] is True


def test_modpoly_unsupported_level(tmp_path, capsys):
    code, _, err = _run(["modpoly", "7", "--golden-dir", str(tmp_path)], capsys)
    assert code == 2
    assert err.startswith("error: unsupported-level")
    assert "hint: " in err


# ---------------------------------------------------------------------------
# synth / analyze / explore


def test_synth_report_is_deterministic(tmp_path, capsys):
    doc = _write_doc(tmp_path, INVERSION_DOC)
    out_file = tmp_path / "report.json"
    code, first, _ = _run(["synth", doc, "--out", str(out_file)], capsys)
    assert code == 0
    result = _report(first)
    assert result["dim"] == 4
    assert result["invariants_hold"] is True
    assert result["document"]["geodesic"]["edges"][0]["g"] == [[0, -1], [1, 0]]
    assert out_file.read_text() == first
    _, second, _ = _run(["synth", doc], capsys)
    assert second == first


def test_synth_inconsistent_geodesic(tmp_path, capsys):
    data = {
        "n": 3,
        "jspecial": {"edges": [{"i": 1, "k": 2, "N": 1}, {"i": 2, "k": 3, "N": 1}, {"i": 1, "k": 3, "N": 1}]},
        "geodesic": {
            "edges": [
                {"i": 1, "k": 2, "g": [[1, 1], [0, 1]]},
                {"i": 2, "k": 3, "g": [[1, 1], [0, 1]]},
                {"i": 1, "k": 3, "g": [[1, 1], [0, 1]]},
            ]
        },
    }
    code, _, err = _run(["synth", _write_doc(tmp_path, data)], capsys)
    assert code == 3
    assert "invalid-geodesic" in err
    assert "compose to the identity" in err


def test_analyze_reports_atypical_meet(tmp_path, capsys):
    data = {"n": 2, "V": ["y1 - y2"], "T": ["y1 - y2", "dy1 - dy2", "ddy1 - ddy2"]}
    code, out, _ = _run(["analyze", _write_doc(tmp_path, data), "--normality"], capsys)
    assert code == 0
    result = _report(out)
    assert result["verdict"] == "atypical-witness"
    assert result["excess"] == 1
    assert result["normality"]["normal"]["holds"] is True


def test_analyze_needs_v(tmp_path, capsys):
    code, _, err = _run(["analyze", _write_doc(tmp_path, {"n": 1})], capsys)
    assert code == 3
    assert "no 'V' section" in err


def test_explore_finds_both_blocks_inside_the_diagonal_hypersurface(tmp_path, capsys):
    data = {"n": 2, "V": ["y1 - y2"]}
    code, out, _ = _run(["explore", _write_doc(tmp_path, data)], capsys)
    assert code == 0
    result = _report(out)
    assert result["partial"] is False
    assert len(result["candidates"]) == 2
    assert [w["excess"] for w in result["witnesses"]] == [1, 1]


# ---------------------------------------------------------------------------
# deriv


def test_deriv_space(tmp_path, capsys):
    doc = _write_doc(tmp_path, {"n": 1, "generators": ["y1 - dy1"]})
    code, out, _ = _run(["deriv", doc, "space"], capsys)
    assert code == 0
    assert _report(out)["dim"] == 2


def test_deriv_stabilize(tmp_path, capsys):
    doc = _write_doc(tmp_path, {"n": 1, "generators": ["y1 - dy1"]})
    code, out, _ = _run(["deriv", doc, "stabilize", "--point", "y1=3,dy1=3,ddy1=3"], capsys)
    assert code == 0
    assert _report(out)["steps"] == 1


def test_deriv_stabilize_needs_a_point(tmp_path, capsys):
    doc = _write_doc(tmp_path, {"n": 1, "generators": ["y1 - dy1"]})
    code, _, err = _run(["deriv", doc, "stabilize"], capsys)
    assert code == 3
    assert "needs --point" in err


def test_deriv_bound(tmp_path, capsys):
    doc = _write_doc(tmp_path, {"n": 1})
    code, out, _ = _run(["deriv", doc, "bound"], capsys)
    assert code == 0
    result = _report(out)
    assert result["dim_lambda"] == 1
    assert result["holds"] is True


def test_deriv_ax_schanuel_on_the_whole_space(tmp_path, capsys):
    doc = _write_doc(tmp_path, {"n": 1, "ambient": "full"})
    code, out, _ = _run(["deriv", doc, "ax-schanuel"], capsys)
    assert code == 0
    result = _report(out)
    assert (result["dim_V"], result["bound"], result["holds"]) == (4, 4, True)


def test_deriv_ax_schanuel_violation_fails_the_check(tmp_path, capsys):
    doc = _write_doc(tmp_path, {"n": 1, "ambient": "full", "generators": ["dy1 - y1"]})
    code, out, _ = _run(["deriv", doc, "ax-schanuel"], capsys)
    assert code == 1
    result = _report(out)
    assert result["holds"] is False
    assert result["deficit"] == 1


def test_deriv_ax_schanuel_needs_the_full_ambient(tmp_path, capsys):
    doc = _write_doc(tmp_path, {"n": 1})
    code, _, err = _run(["deriv", doc, "ax-schanuel"], capsys)
    assert code == 3
    assert "(x, y, dy, ddy)" in err


# ---------------------------------------------------------------------------
# oracle


def test_oracle_jet_at_the_critical_point(capsys):
    code, out, _ = _run(["oracle", "jet", "--tau", "i"], capsys)
    assert code == 0
    result = _report(out)
    assert result["critical_point"] is True
    assert result["ode_residual"] is None
    assert result["j"].startswith("1728")


def test_oracle_jet_regular_point(capsys):
    code, out, _ = _run(["oracle", "jet", "--tau", "0.2+1.1i", "--bits", "160"], capsys)
    assert code == 0
    result = _report(out)
    assert result["critical_point"] is False
    assert float(result["ode_residual"]) < 1e-30
    assert result["bits"] == 160


def test_oracle_out_of_domain(capsys):
    code, _, err = _run(["oracle", "jet", "--tau", "0.1i"], capsys)
    assert code == 4
    assert "out-of-domain" in err


def test_oracle_validate(tmp_path, capsys):
    doc = _write_doc(tmp_path, INVERSION_DOC)
    code, out, _ = _run(["oracle", "validate", "--doc", doc, "--tau", "0.05+1i", "--count", "2"], capsys)
    assert code == 0
    result = _report(out)
    assert result["ok"] is True
    assert result["samples"] == 2


def test_oracle_sample_needs_a_document(capsys):
    code, _, err = _run(["oracle", "sample"], capsys)
    assert code == 3
    assert "needs --doc" in err


# ---------------------------------------------------------------------------
# Input errors


def test_missing_document_file(tmp_path, capsys):
    code, _, err = _run(["synth", str(tmp_path / "absent.json")], capsys)
    assert code == 3
    assert err.startswith("error: invalid-input")


def test_malformed_document(tmp_path, capsys):
    path = tmp_path / "bad.json"
    path.write_text("{broken")
    code, _, err = _run(["synth", str(path)], capsys)
    assert code == 3
    assert "not valid JSON" in err


def test_failures_reach_the_event_log(tmp_path, capsys):
    import eventlog

    _run(["oracle", "jet", "--tau", "0.1i"], capsys)
    with open(eventlog._LOG_PATH) as handle:
        assert "oracle failed: out-of-domain" in handle.read()
