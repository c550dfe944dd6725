"""Smoke test for the qorpilot extension module.

    pip install --no-build-isolation -e crates/py
    python python/smoke_test.py
"""

import json
import pathlib
import sys

import qorpilot

ROOT = pathlib.Path(__file__).resolve().parent.parent
FIXTURES = ROOT / "fixtures"


def main() -> int:
    print("qorpilot", qorpilot.version())

    assert qorpilot.delta_percent(230044, 217415) == -5.49

    cfg_text = (FIXTURES / "table1" / "nangate45_aes.cfg").read_text()
    cfg = json.loads(qorpilot.parse_flow_config(cfg_text))
    assert cfg["design"] == "aes" and cfg["parameters"]["CORE_UTIL"] == "85"
    try:
        qorpilot.parse_flow_config(cfg_text.replace("CORE_UTIL=85", "CORE_UTIL=0"))
    except ValueError as e:
        assert "CORE_UTIL" in str(e)
    else:
        raise AssertionError("CORE_UTIL=0 accepted")

    cfg["stage"] = "Full"
    base = json.loads(qorpilot.replay(str(FIXTURES / "t2.qor.jsonl"), json.dumps(cfg)))
    new = json.loads(qorpilot.replay(str(FIXTURES / "t2.qor.jsonl"), json.dumps(cfg), "table2"))
    rwl = "routed_wirelength_um"
    assert qorpilot.delta_percent(base[rwl], new[rwl]) == -5.49

    graph = json.loads(qorpilot.build_graph(str(FIXTURES / "eda_repo"), ["third_party/**", "**/test/**"]))
    assert graph["condensed"] is True
    assert any(n["qualified_name"] == "dpl::displacementCost" for n in graph["nodes"])

    culprit, probes = qorpilot.bisect(1000, lambda k: k >= 613)
    assert culprit == 613 and probes <= 11

    assert qorpilot.run_cli(["--help"]) == 0
    print("smoke test passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
