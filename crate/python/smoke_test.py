"""Smoke test for the patientflow Python extension.

Build and install first:
    cd crates/python && maturin build --release -o dist && pip install dist/*.whl
"""

import json
import tempfile

import patientflow


def main():
    scenario = patientflow.Scenario.generate("minimal", 3)
    print(scenario)
    assert scenario.facility_counts == {"stach": 1, "ltach": 1, "nh": 1}

    with tempfile.TemporaryDirectory() as tmp:
        scenario.write(tmp)
        assert repr(patientflow.Scenario.load(tmp)) == repr(scenario)

    scenario.seed = 42
    logs = []
    for _ in range(2):
        model = patientflow.Model(scenario, record_events=True)
        first = model.step()
        assert first["day"] == 0
        model.run(59)
        assert model.day == 60
        logs.append(model.take_events())
    assert patientflow.logs_identical(logs[0], logs[1])

    census = model.census()
    assert all(c >= 0 for c in census.values())
    moves = model.moves()
    assert moves[0][0] == 0 and moves[0][2] == 0

    report = json.loads(model.report_json())
    assert report["days_run"] == 60

    rows = model.validate()
    assert {r[0] for r in rows} == {1, 2, 3}
    assert all(r[5] in ("pass", "fail", "skip") for r in rows)

    try:
        patientflow.Scenario.generate("galactic")
    except ValueError:
        pass
    else:
        raise AssertionError("unknown preset accepted")

    print(f"ok: {len(logs[0].splitlines())} event lines, {len(rows)} validation rows")


if __name__ == "__main__":
    main()
