"""Smoke test for the glow extension module.

Build first with `cargo build --release -p glow-py` (or install with maturin
from crates/py), then run `python3 python/smoke_test.py` or `pytest python/`.
"""

import importlib.machinery
import importlib.util
import json
import pathlib
import sys
import tempfile

ROOT = pathlib.Path(__file__).resolve().parent.parent


def load_glow():
    try:
        import glow

        return glow
    except ImportError:
        pass
    for profile in ("release", "debug"):
        for name in ("libglow.so", "libglow.dylib", "glow.dll"):
            path = ROOT / "target" / profile / name
            if path.exists():
                loader = importlib.machinery.ExtensionFileLoader("glow", str(path))
                spec = importlib.util.spec_from_file_location("glow", path, loader=loader)
                module = importlib.util.module_from_spec(spec)
                loader.exec_module(module)
                sys.modules["glow"] = module
                return module
    raise ImportError("glow extension not found; run `cargo build --release -p glow-py`")


glow = load_glow()


def test_primitives():
    assert glow.trajectory_value([3, -5, 4, 10, -1]) == 12
    assert [glow.min_state_selections(1000, 50, n) for n in range(1, 6)] == [19, 9, 5, 4, 3]
    f = glow.Frontier(2)
    assert f.insert(1, [5])
    assert f.insert(2, [1, 1])
    assert f.insert(3, [5])
    assert not f.insert(4, [0])
    assert f.ids() == [3, 1] and f.peaks() == [5, 5] and len(f) == 2


def test_miniquest():
    env = glow.MiniQuest()
    first = env.reset(0)
    assert first["score"] == 0 and first["valid_actions"]
    step = env.step(first["valid_actions"][0])
    assert step["fingerprint"] == env.fingerprint()


def test_run_report_replay():
    with tempfile.TemporaryDirectory() as out:
        summary = glow.run(None, out, seeds=[3])
        assert summary["seeds"][0]["max_score"] == 100
        log = summary["seeds"][0]["log"]
        transcript = glow.replay(log)
        assert transcript["lines"][-1]["score"] == 100
        report = glow.report([log])
        assert len(report["rows"]) == 1 and "glow+mar" in report["text"]
        try:
            glow.replay(log, 999_999)
        except glow.GlowError as e:
            assert "not found" in str(e)
        else:
            raise AssertionError("unknown trajectory id was accepted")


def test_config_validation():
    cfg = json.loads((ROOT / "configs" / "default.json").read_text())
    assert glow.load_config(cfg)["n_explorations"] == 3
    del cfg["n_explorations"]
    try:
        glow.load_config(cfg)
    except glow.GlowError as e:
        assert "n_explorations" in str(e)
    else:
        raise AssertionError("config without n_explorations was accepted")


def test_variance_and_parsers():
    report = glow.variance_lab([1.0, 1.0], [2, 4], trials=2000)
    assert all(a["pass"] for a in report["actions"])
    fixtures = ROOT / "crates" / "core" / "tests" / "fixtures"
    states = glow.parse_key_states((fixtures / "global_analysis.txt").read_text())
    assert any("troll" in s["descriptor"].lower() for s in states)
    entries = glow.parse_w_local((fixtures / "local_advantages.txt").read_text())
    assert len(entries) == 4 and entries[0]["state_descriptor"] == "The Troll Room"


if __name__ == "__main__":
    tests = [v for k, v in sorted(globals().items()) if k.startswith("test_")]
    for t in tests:
        t()
        print(f"ok {t.__name__}")
    print(f"{len(tests)} passed")
