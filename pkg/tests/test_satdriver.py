import json
import sys

import pytest

from sortnet.encoder import EncodeOptions, encode
from sortnet.filters import complete_filter_set, first_layer_P
from sortnet.netcore import ComparatorNetwork, NetworkError, all_words, is_sorting_network, parse_network
from sortnet.prefopt import OptimizerConfig
from sortnet.satdriver import (
    ERROR,
    INCONCLUSIVE,
    NETWORK_FOUND,
    NO_NETWORK,
    SAT,
    TIMEOUT,
    UNSAT,
    SolveResult,
    SolverConfig,
    SolverError,
    campaign,
    effective_options,
    search_extension,
    solve,
    verify_witness,
)

ALL = EncodeOptions.all_on()


def fake_solver(tmp_path, body):
    script = tmp_path / "fake.py"
    script.write_text("import sys, time\n" + body + "\n")
    return SolverConfig(command=f"{sys.executable} {script} {{cnf}}", timeout=5)


# ------------------------------------------------------------ single solves

def test_sat_instance():
    inst, reg = encode(2, 1, all_words(2))
    res = solve(inst, reg)
    assert res.verdict == SAT and res.model
    assert res.wall_time > 0


def test_unsat_instance():
    inst, reg = encode(4, 2, all_words(4))
    res = solve(inst, reg)
    assert res.verdict == UNSAT and res.model is None


def test_timeout_on_large_instance():
    inst, reg = encode(8, 5, all_words(8), ALL)
    res = solve(inst, reg, SolverConfig(timeout=0.001))
    assert res.verdict == TIMEOUT and res.model is None


def test_missing_binary():
    inst, reg = encode(2, 1, all_words(2))
    with pytest.raises(SolverError):
        solve(inst, reg, SolverConfig(command="/nonexistent/solver-xyz {cnf}"))


def test_garbage_output(tmp_path):
    cfg = fake_solver(tmp_path, "print('hello'); sys.exit(0)")
    inst, reg = encode(2, 1, all_words(2))
    res = solve(inst, reg, cfg)
    assert res.verdict == ERROR and res.model is None
    assert "unrecognized" in res.stderr


def test_sat_without_model_is_error(tmp_path):
    cfg = fake_solver(tmp_path, "print('s SATISFIABLE'); sys.exit(10)")
    inst, reg = encode(2, 1, all_words(2))
    assert solve(inst, reg, cfg).verdict == ERROR


def test_competition_protocol_parsed(tmp_path):
    cfg = fake_solver(tmp_path, "print('c hi'); print('s SATISFIABLE'); print('v 1'); print('v 0'); sys.exit(10)")
    inst, reg = encode(2, 1, all_words(2))
    res = solve(inst, reg, cfg)
    assert res.verdict == SAT and res.model == [1]


def test_keep_files(tmp_path):
    inst, reg = encode(2, 1, all_words(2))
    solve(inst, reg, SolverConfig(workdir=str(tmp_path), keep_files=True))
    files = list(tmp_path.glob("*.cnf"))
    assert len(files) == 1 and "p cnf" in files[0].read_text()


def test_config_validation():
    with pytest.raises(ValueError):
        SolverConfig(command="  ")
    with pytest.raises(ValueError):
        SolverConfig(command="minisat")
    with pytest.raises(ValueError):
        SolverConfig(timeout=0)
    with pytest.raises(ValueError):
        SolveResult(SAT, None)


def test_env_override(monkeypatch):
    monkeypatch.setenv("SORTNET_SOLVER", "kissat -q {cnf}")
    assert SolverConfig().command == "kissat -q {cnf}"


# ------------------------------------------------------------- extensions

def test_verify_witness(cat):
    f6, f7 = cat["fig6"], cat["fig7"]
    assert verify_witness(f6.prefix(3), f6.suffix(3), 17)
    assert verify_witness(f7.prefix(4), f7.suffix(4), 20)
    assert not verify_witness(f6.prefix(3), ComparatorNetwork(17, ()), 17)
    with pytest.raises(NetworkError):
        verify_witness(f6.prefix(3), ComparatorNetwork(16, ()), 17)


def test_search_extension_small():
    p = ComparatorNetwork(6, (first_layer_P(6),))
    assert search_extension(p, 6, 4, ALL) is None
    net = search_extension(p, 6, 5, ALL)
    assert net is not None and net.depth == 5 and is_sorting_network(net)
    assert net.prefix(1) == p


def test_search_with_one_free_layer():
    p = parse_network("1:2 3:4; 1:3 2:4", 4)
    net = search_extension(p, 4, 3, ALL)
    assert net is not None and is_sorting_network(net)


def test_zero_free_layers(cat):
    p = cat["fig6_prefix"]
    assert search_extension(p, 17, 3) is None
    assert search_extension(cat["fig1"], 5, 5) == cat["fig1"]
    with pytest.raises(NetworkError):
        search_extension(p, 17, 2)


def test_search_raises_on_timeout():
    p = ComparatorNetwork(8, (first_layer_P(8),))
    with pytest.raises(SolverError):
        search_extension(p, 8, 6, ALL, SolverConfig(timeout=0.001))


def test_effective_options():
    assert effective_options(ALL, 1) == ALL.without_two_layer_flags()
    assert effective_options(ALL, 2) == ALL


# -------------------------------------------------------------- campaigns

@pytest.mark.parametrize("n,t", [(4, 3), (5, 5), (6, 5)])
def test_campaign_reproduces_depth(n, t):
    fs = complete_filter_set(n)
    refute = campaign(fs, n, t - 1, ALL, mode="refute")
    assert refute.aggregate == NO_NETWORK and refute.exit_code == 0
    assert all(r["verdict"] == UNSAT for r in refute.verdicts)
    found = campaign(fs, n, t, ALL, mode="find")
    assert found.aggregate == NETWORK_FOUND
    assert found.witness.depth == t and is_sorting_network(found.witness)


def test_parallel_agrees_with_sequential():
    fs = complete_filter_set(6)
    seq = campaign(fs, 6, 4, ALL, mode="refute", parallelism=1)
    par = campaign(fs, 6, 4, ALL, mode="refute", parallelism=3)
    assert seq.aggregate == par.aggregate == NO_NETWORK
    assert [r["instance"] for r in seq.verdicts] == [r["instance"] for r in par.verdicts]


def test_journal_resume(tmp_path):
    fs = complete_filter_set(5)
    journal = tmp_path / "j.jsonl"
    first = campaign(fs, 5, 4, ALL, mode="refute", journal=journal)
    lines = [json.loads(l) for l in journal.read_text().splitlines()]
    assert len(lines) == len(fs) and {l["verdict"] for l in lines} == {UNSAT}
    again = campaign(fs, 5, 4, ALL, mode="refute", journal=journal)
    assert again.aggregate == first.aggregate == NO_NETWORK
    assert again.stats["resumed"] == len(fs)


def test_journal_witness_reverified(tmp_path):
    fs = complete_filter_set(4)
    journal = tmp_path / "j.jsonl"
    found = campaign(fs, 4, 3, ALL, mode="find", journal=journal)
    assert found.aggregate == NETWORK_FOUND
    again = campaign(fs, 4, 3, ALL, mode="find", journal=journal)
    assert again.aggregate == NETWORK_FOUND and again.stats["resumed"] >= 1


def test_timeouts_are_inconclusive(tmp_path):
    cfg = fake_solver(tmp_path, "time.sleep(10)")
    cfg = SolverConfig(command=cfg.command, timeout=0.2)
    fs = complete_filter_set(5)
    res = campaign(fs, 5, 4, ALL, cfg, mode="refute", journal=tmp_path / "j.jsonl")
    assert res.aggregate == INCONCLUSIVE and res.exit_code == 2
    assert res.offending
    assert not (tmp_path / "j.jsonl").exists() or not (tmp_path / "j.jsonl").read_text().strip()


def test_find_past_errors(tmp_path):
    cfg = fake_solver(tmp_path, "print('nonsense')")
    res = campaign(complete_filter_set(4), 4, 3, ALL, cfg, mode="find")
    assert res.aggregate == INCONCLUSIVE
    assert len(res.verdicts) == 2 and {r["verdict"] for r in res.verdicts} == {ERROR}


def test_campaign_with_optimizer():
    res = campaign(complete_filter_set(5), 5, 5, ALL, mode="find", optimize=OptimizerConfig(iterations=2))
    assert res.aggregate == NETWORK_FOUND and is_sorting_network(res.witness)


def test_campaign_argument_checks():
    fs = complete_filter_set(4)
    with pytest.raises(ValueError):
        campaign(fs, 4, 3, mode="guess")
    with pytest.raises(NetworkError):
        campaign(fs, 5, 3)
    with pytest.raises(ValueError):
        campaign(fs, 4, 3, parallelism=0)


def test_result_json():
    res = campaign(complete_filter_set(4), 4, 3, ALL, mode="find")
    doc = json.loads(json.dumps(res.to_json()))
    assert doc["aggregate"] == NETWORK_FOUND and doc["witness"]
