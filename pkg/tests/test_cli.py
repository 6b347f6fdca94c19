import json
import subprocess
import sys

import numpy as np
import pytest

from qpolar.channel import bec
from qpolar.cli import main, render_json
from qpolar.codec import construct, simulate
from qpolar.gf import arikan_kernel, field_make
from qpolar.kernsearch import FixedKernel


def run_cli(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


# ---- rendering


def test_render_json_is_deterministic_and_roundtrips():
    doc = {"a": 0.1, "b": [1, 2.5, True, None, "x"], "c": {"d": 0.375}, "e": []}
    text = render_json(doc)
    assert text == render_json(doc)
    back = json.loads(text)
    assert back["a"] == 0.1 and back["c"]["d"] == 0.375
    assert '"d": 0.375' in text  # dyadic floats print short
    assert render_json(np.float64(0.5)) == "0.5"
    assert render_json(np.bool_(True)) == "true"
    with pytest.raises(TypeError):
        render_json(object())


# ---- basic subcommands


def test_params_bec(capsys):
    code, out, _ = run_cli(capsys, "params", "--bec", "0.5", "--holder")
    assert code == 0
    doc = json.loads(out)
    assert doc["params"]["H"] == 0.5
    assert doc["holder"]["ok"]


def test_transform_single_child(capsys):
    code, out, _ = run_cli(capsys, "transform", "--bec", "0.5", "--arikan", "--index", "2")
    assert code == 0
    doc = json.loads(out)
    assert doc["params"]["H"] == 0.25


def test_transform_all_children(capsys):
    code, out, _ = run_cli(capsys, "transform", "--bec", "0.5", "--arikan")
    doc = json.loads(out)
    assert code == 0
    hs = [c["params"]["H"] for c in doc["children"]]
    assert hs == [0.75, 0.25]
    assert doc["parent"]["H"] == 0.5


def test_kernel_weights_and_certify(capsys):
    code, out, _ = run_cli(capsys, "kernel", "--arikan")
    assert code == 0
    doc = json.loads(out)
    assert [r["min_weight"] for r in doc["positions"]] == [1, 2]
    code, out, _ = run_cli(capsys, "kernel", "--arikan", "--certify", "0.1", "0.1")
    assert code == 0
    assert json.loads(out)["pass"]


def test_kernel_search_emits_loadable_kernel(capsys, tmp_path):
    code, out, _ = run_cli(
        capsys, "kernel", "--search", "--bec", "0.3", "--ell", "2", "--budget", "50",
        "--seed", "5",
    )
    assert code == 0
    doc = json.loads(out)
    kfile = tmp_path / "kern.json"
    kfile.write_text(out)
    code2, out2, _ = run_cli(
        capsys, "transform", "--bec", "0.5", "--kernel", str(kfile), "--index", "1"
    )
    assert code2 == 0
    assert doc["ell"] == 2


# ---- codec pipeline through files


@pytest.fixture()
def spec_file(tmp_path, capsys):
    code, out, _ = run_cli(
        capsys, "construct", "--bec", "0.5", "--arikan", "--ell", "2", "--depth", "3",
        "--pi", "0.2", "--seed", "42",
    )
    assert code == 0
    path = tmp_path / "spec.json"
    path.write_text(out)
    return path


def test_construct_summary(capsys):
    code, out, _ = run_cli(
        capsys, "construct", "--bec", "0.5", "--arikan", "--ell", "2", "--depth", "3",
        "--pi", "0.2", "--seed", "42", "--summary",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["rate"] == 0.375
    assert doc["union_bound"] == pytest.approx(0.158203125)
    assert doc["shaping_leaves"] == 0


def test_encode_decode_roundtrip(capsys, spec_file):
    code, out, _ = run_cli(
        capsys, "encode", "--spec", str(spec_file), "--message", "1,0,1", "--seed", "7"
    )
    assert code == 0
    cw = json.loads(out)["codeword"]
    assert len(cw) == 8
    code, out, _ = run_cli(
        capsys, "decode", "--spec", str(spec_file), "--received", ",".join(map(str, cw)),
        "--bec", "0.5", "--seed", "7",
    )
    assert code == 0
    doc = json.loads(out)
    assert doc["message"] == [1, 0, 1]
    assert doc["du_activations"] == 12
    assert not doc["failed"]


def test_decode_posterior_file(capsys, spec_file, tmp_path):
    code, out, _ = run_cli(
        capsys, "encode", "--spec", str(spec_file), "--message", "0,1,1", "--seed", "3"
    )
    cw = json.loads(out)["codeword"]
    pfile = tmp_path / "post.json"
    pfile.write_text(json.dumps([[1.0, 0.0] if s == 0 else [0.0, 1.0] for s in cw]))
    code, out, _ = run_cli(
        capsys, "decode", "--spec", str(spec_file), "--posteriors", str(pfile), "--seed", "3"
    )
    assert code == 0
    assert json.loads(out)["message"] == [0, 1, 1]


def test_simulate_matches_library_and_jobs_invariant(capsys, spec_file):
    code, out1, _ = run_cli(
        capsys, "simulate", "--spec", str(spec_file), "--bec", "0.5", "--trials", "60",
        "--seed", "11",
    )
    assert code == 0
    code, out2, _ = run_cli(
        capsys, "simulate", "--spec", str(spec_file), "--bec", "0.5", "--trials", "60",
        "--seed", "11", "--jobs", "3",
    )
    assert code == 0
    assert out1 == out2  # byte-identical regardless of sharding
    lib = simulate(
        construct(bec(0.5), 2, 3, 0.2, FixedKernel(arikan_kernel(field_make(2))), seed=42),
        bec(0.5),
        60,
        11,
    )
    doc = json.loads(out1)
    assert doc["bler"] == lib["bler"]
    assert doc["union_bound"] == lib["union_bound"]


# ---- process

def test_process_stats(capsys):
    code, out1, _ = run_cli(
        capsys, "process", "--bec", "0.5", "--arikan", "--depth", "6", "--paths", "200",
        "--seed", "2",
    )
    assert code == 0
    doc = json.loads(out1)
    assert doc["frac_low"] + doc["frac_high"] + doc["frac_middle"] == pytest.approx(1.0)
    assert "final_entropies" not in doc
    code, out2, _ = run_cli(
        capsys, "process", "--bec", "0.5", "--arikan", "--depth", "6", "--paths", "200",
        "--seed", "2",
    )
    assert out1 == out2


def test_process_trace_csv(capsys):
    code, out, _ = run_cli(
        capsys, "process", "--bec", "0.5", "--arikan", "--depth", "4", "--seed", "9",
        "--trace",
    )
    assert code == 0
    lines = out.strip().split("\n")
    assert lines[0] == "depth,position,H,Zmad,Smax,output_size,exact"
    assert len(lines) == 6  # header + root + 4 steps
    first = lines[1].split(",")
    assert first[0] == "0" and first[2] == "0.5" and first[-1] == "1"


# ---- verify battery

def test_verify_battery_passes(capsys):
    code, out, _ = run_cli(capsys, "verify", "--seed", "0")
    assert code == 0
    lines = out.strip().split("\n")
    assert len(lines) == 7
    assert all(line.startswith("PASS ") for line in lines)
    assert any("conservation" in line for line in lines)
    assert any("symmetrization-identities" in line for line in lines)


# ---- failure modes

def test_usage_errors_exit_one(capsys, spec_file):
    assert run_cli(capsys, "params")[0] == 1  # no channel
    assert run_cli(capsys, "transform", "--bec", "0.5")[0] == 1  # no kernel
    assert run_cli(capsys, "decode", "--spec", str(spec_file), "--seed", "1")[0] == 1
    assert run_cli(capsys, "encode", "--spec", "/does/not/exist", "--message", "1",
                   "--seed", "1")[0] == 1
    assert run_cli(capsys, "encode", "--spec", str(spec_file), "--message", "1,x,1",
                   "--seed", "1")[0] == 1
    code, _, err = run_cli(capsys, "construct", "--bec", "0.5", "--ell", "2")
    assert code == 1 and "error" in err


def test_module_entry_point():
    proc = subprocess.run(
        [sys.executable, "-m", "qpolar", "params", "--bec", "0.25"],
        capture_output=True,
        text=True,
    )
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["params"]["H"] == 0.25
