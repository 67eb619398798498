"""Shared CLI input files."""

import json

import pytest


def write(path, obj):
    path.write_text(json.dumps(obj))
    return str(path)


@pytest.fixture
def files(tmp_path):
    bsc = lambda p: [[1 - p, p], [p, 1 - p]]
    erasure = [[0.5, 0.5, 0.0], [0.0, 0.5, 0.5]]
    return {
        "structure": write(tmp_path / "s.json", {"K": 2, "qualified": [[1, 2]], "forbidden": "complement"}),
        "overlap": write(tmp_path / "bad_s.json", {"K": 3, "qualified": [[1, 2]], "forbidden": [[1, 2, 3]]}),
        "erasures": write(tmp_path / "c.json", {"type": "dmc", "transitions": [erasure, erasure]}),
        "degraded_dmc": write(tmp_path / "d.json", {"type": "dmc", "transitions": [bsc(0.2), bsc(0.1)]}),
        "reversed_dmc": write(tmp_path / "r.json", {"type": "dmc", "transitions": [bsc(0.1), bsc(0.2)]}),
        "siso": write(tmp_path / "siso_ch.json", {"type": "siso", "N": [2.0, 1.0], "P": 1.0}),
        "bad_siso": write(tmp_path / "bad_siso.json", {"type": "siso", "N": [1.0, 2.0], "P": 1.0}),
        "mimo": write(tmp_path / "mimo_ch.json", {"type": "mimo", "Sigma": [[2, 0, 0, 2], [1, 0, 0, 1]],
                                               "S": [1, 0, 0, 1]}),
        "mimo_chain": write(tmp_path / "mchain.json", {"S": [1, 0, 0, 1], "chain": [[0.5, 0, 0, 0.5]]}),
        "dists": write(tmp_path / "dists.json", [[0.5, 0.5], [[0.9, 0.1], [0.1, 0.9]]]),
        "instance": write(tmp_path / "inst.json", {"H": [1, 0, 0, 1], "Sigma": [1, 0, 0, 1],
                                                   "S": [2, 0, 0, 2]}),
        "chain": write(tmp_path / "chain.json", {"S": [2, 0, 0, 2], "chain": [[1, 0, 0, 1]]}),
        "sim": write(tmp_path / "sim.json", {
            "channel": {"type": "dmc", "transitions": [bsc(0.3), [[1, 0], [0, 1]]]},
            "dists": [[1.0], [[0.5, 0.5]]], "rates": [0, 0.5], "total_rates": [0, 1.0]}),
        "broken": str((tmp_path / "broken.json").resolve()),
    }
