import json
import os

import pytest

from polarnet.cli import main, wilson_interval


def write(tmp_path, name, obj):
    p = tmp_path / name
    p.write_text(json.dumps(obj))
    return str(p)


BUILD_CFG = {
    "receivers": [
        {"eps_tile": [0.5], "decode_set": [1, 2]},
        {"eps_tile": [0.0, 1.0], "decode_set": [1, 2]},
    ],
    "target": [0.75, 0.75],
    "N": 64,
    "k": 1,
    "split_eps": 0.1,
}


class TestExitCodes:
    def test_missing_config_file(self, tmp_path, capsys):
        rc = main(["analyze", "--config", str(tmp_path / "nope.json")])
        assert rc == 2

    def test_malformed_config(self, tmp_path):
        p = tmp_path / "bad.json"
        p.write_text("{not json")
        assert main(["analyze", "--config", str(p)]) == 2

    def test_missing_field(self, tmp_path):
        cfg = write(tmp_path, "c.json", {"n": 4})
        assert main(["analyze", "--config", cfg,
                     "--out-dir", str(tmp_path)]) == 2

    def test_precondition_error(self, tmp_path):
        cfg = dict(BUILD_CFG, target=[1.0, 1.0])
        path = write(tmp_path, "c.json", cfg)
        assert main(["build", "--config", path,
                     "--out-dir", str(tmp_path)]) == 3

    def test_success(self, tmp_path):
        cfg = write(tmp_path, "c.json",
                    {"channel": {"type": "bec", "epsilon": 0.5}, "n": 4})
        assert main(["analyze", "--config", cfg,
                     "--out-dir", str(tmp_path)]) == 0
        text = (tmp_path / "bit_channels.csv").read_text()
        assert text.splitlines()[0].endswith("config_hash,version")
        assert len(text.splitlines()) == 17


class TestOutputs:
    def test_analyze_conservation(self, tmp_path):
        cfg = write(tmp_path, "c.json",
                    {"channel": {"type": "bec", "epsilon": 0.5}, "n": 6})
        assert main(["analyze", "--config", cfg,
                     "--out-dir", str(tmp_path)]) == 0
        rows = (tmp_path / "bit_channels.csv").read_text().splitlines()[1:]
        total = sum(float(r.split(",")[1]) for r in rows)
        assert abs(total - 32.0) < 1e-9

    def test_path_profile(self, tmp_path):
        cfg = write(tmp_path, "c.json", {
            "mac": {"type": "parity-linked", "users": 2, "eps_tile": [0.5]},
            "path": "1^2 2^4 1^2",
        })
        assert main(["analyze", "--config", cfg,
                     "--out-dir", str(tmp_path)]) == 0
        assert (tmp_path / "path_profile.csv").exists()

    def test_region_vertices(self, tmp_path):
        cfg = write(tmp_path, "c.json", {
            "task": "mac",
            "channel": {"inputs": [2, 2], "outputs": 3,
                        "kernel": [[1, 0, 0], [0, 1, 0],
                                   [0, 1, 0], [0, 0, 1]]},
        })
        assert main(["region", "--config", cfg,
                     "--out-dir", str(tmp_path)]) == 0
        doc = json.loads((tmp_path / "region.json").read_text())
        verts = [tuple(v) for v in doc["region"]["vertices"]]
        assert (0.5, 1.0) in verts and (1.0, 0.5) in verts

    def test_build_and_simulate(self, tmp_path):
        cfg = write(tmp_path, "c.json", dict(BUILD_CFG, trials=100, chunk=32))
        assert main(["build", "--config", cfg,
                     "--out-dir", str(tmp_path)]) == 0
        assert (tmp_path / "code_spec.json").exists()
        assert (tmp_path / "theorem_report.json").exists()
        assert main(["simulate", "--config", cfg, "--seed", "4",
                     "--out-dir", str(tmp_path)]) == 0
        rows = (tmp_path / "block_error.csv").read_text().splitlines()
        assert rows[0].startswith("receiver,user,errors,trials,ber")

    def test_repeat_runs_identical(self, tmp_path):
        cfg = write(tmp_path, "c.json", dict(BUILD_CFG, trials=100, chunk=32))
        outs = []
        for d in ("a", "b"):
            out = tmp_path / d
            assert main(["simulate", "--config", cfg, "--seed", "4",
                         "--out-dir", str(out)]) == 0
            outs.append((out / "block_error.csv").read_bytes())
        assert outs[0] == outs[1]


class TestWilson:
    def test_known_value(self):
        lo, hi = wilson_interval(0, 100)
        assert lo == pytest.approx(0.0, abs=1e-12)
        assert hi == pytest.approx(0.0370, abs=5e-4)

    def test_contains_point_estimate(self):
        lo, hi = wilson_interval(7, 50)
        assert lo < 7 / 50 < hi
