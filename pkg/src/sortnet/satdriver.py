"""Run external SAT solvers on encoded instances, verify their witnesses and
drive campaigns over a filter set."""
from __future__ import annotations

import hashlib
import json
import logging
import os
import shlex
import subprocess
import sys
import tempfile
import threading
import time
from concurrent.futures import FIRST_COMPLETED, ThreadPoolExecutor, wait
from dataclasses import dataclass, field
from pathlib import Path

from .encoder import CnfInstance, EncodeOptions, VarRegistry, decode_model, emit_dimacs, encode
from .filters import FilterSet
from .netcore import ComparatorNetwork, NetworkError, is_sorting_network, outputs, parse_network
from .prefopt import OptimizerConfig, optimize_prefix

log = logging.getLogger(__name__)

SAT, UNSAT, TIMEOUT, ERROR = "SAT", "UNSAT", "TIMEOUT", "ERROR"
NETWORK_FOUND, NO_NETWORK, INCONCLUSIVE = "NETWORK_FOUND", "NO_NETWORK", "INCONCLUSIVE"


class SolverError(RuntimeError):
    pass


class WitnessError(RuntimeError):
    """A model the solver called satisfying does not decode to a sorter."""


def default_command() -> str:
    return os.environ.get("SORTNET_SOLVER") or f"{shlex.quote(sys.executable)} -m sortnet.pysat_solver {{cnf}}"


@dataclass(frozen=True)
class SolverConfig:
    command: str = field(default_factory=default_command)
    timeout: float = 3600.0
    sat_exit: int = 10
    unsat_exit: int = 20
    model_prefix: str = "v"
    workdir: str | None = None
    keep_files: bool = False

    def __post_init__(self):
        if not self.command.strip():
            raise ValueError("solver command is empty")
        if "{cnf}" not in self.command:
            raise ValueError("solver command needs a {cnf} placeholder")
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")


@dataclass
class SolveResult:
    verdict: str
    model: list[int] | None = None
    wall_time: float = 0.0
    stderr: str = ""

    def __post_init__(self):
        if (self.model is not None) != (self.verdict == SAT):
            raise ValueError("a model accompanies exactly the SAT verdict")


def _parse_output(stdout: str, returncode: int, config: SolverConfig) -> tuple[str, list[int] | None]:
    status = None
    lits: list[int] = []
    for line in stdout.splitlines():
        line = line.strip()
        if line.startswith("s "):
            status = line[2:].strip()
        elif line.startswith(config.model_prefix + " ") or line == config.model_prefix:
            lits.extend(int(tok) for tok in line[len(config.model_prefix):].split())
    if returncode == config.unsat_exit or status == "UNSATISFIABLE":
        return UNSAT, None
    if returncode == config.sat_exit or status == "SATISFIABLE":
        lits = [l for l in lits if l]
        if not lits:
            raise ValueError("satisfiable answer without model lines")
        return SAT, lits
    raise ValueError(f"unrecognized solver answer (exit {returncode}, status {status!r})")


def _run(cmd: list[str], config: SolverConfig, cancel: threading.Event | None) -> tuple[str, str, int] | None:
    try:
        proc = subprocess.Popen(cmd, stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True)
    except FileNotFoundError as exc:
        raise SolverError(f"solver executable not found: {cmd[0]}") from exc
    deadline = time.monotonic() + config.timeout
    while True:
        try:
            out, err = proc.communicate(timeout=min(0.05, max(deadline - time.monotonic(), 0.001)))
            return out, err, proc.returncode
        except subprocess.TimeoutExpired:
            if time.monotonic() >= deadline or (cancel is not None and cancel.is_set()):
                proc.kill()
                proc.communicate()
                return None


def solve_file(path: str, config: SolverConfig | None = None,
               cancel: threading.Event | None = None) -> SolveResult:
    """Run the configured solver on an existing DIMACS file."""
    config = config or SolverConfig()
    start = time.monotonic()
    cmd = [tok.replace("{cnf}", str(path)) for tok in shlex.split(config.command)]
    ran = _run(cmd, config, cancel)
    elapsed = time.monotonic() - start
    if ran is None:
        return SolveResult(TIMEOUT, None, elapsed)
    out, err, code = ran
    try:
        verdict, model = _parse_output(out, code, config)
    except ValueError as exc:
        return SolveResult(ERROR, None, elapsed, f"{exc}\n{err}")
    return SolveResult(verdict, model, elapsed, err)


def solve(instance: CnfInstance, registry: VarRegistry | None = None, config: SolverConfig | None = None,
          cancel: threading.Event | None = None) -> SolveResult:
    """Write DIMACS, run the configured solver and parse its answer."""
    config = config or SolverConfig()
    text = emit_dimacs(instance, registry)
    fd, path = tempfile.mkstemp(suffix=".cnf", dir=config.workdir)
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        return solve_file(path, config, cancel)
    finally:
        if not config.keep_files:
            os.unlink(path)


def verify_witness(prefix: ComparatorNetwork, suffix: ComparatorNetwork, n: int | None = None) -> bool:
    """Exhaustive zero-one check of ``prefix`` followed by ``suffix``."""
    n = prefix.n if n is None else n
    if prefix.n != n or suffix.n != n:
        raise NetworkError("prefix and suffix must both have n channels")
    return is_sorting_network(prefix + suffix)


def effective_options(opts: EncodeOptions, layers: int) -> EncodeOptions:
    """Drop the last-two-layer constraints when only one layer is searched."""
    if layers < 2 and opts.needs_two_layers:
        log.info("one free layer: last-two-layer constraints disabled")
        return opts.without_two_layer_flags()
    return opts


@dataclass
class Attempt:
    result: SolveResult
    network: ComparatorNetwork | None
    instance_digest: str = ""


def attempt_extension(prefix: ComparatorNetwork, n: int, d: int, opts: EncodeOptions, config: SolverConfig,
                      cancel: threading.Event | None = None) -> Attempt:
    if prefix.n != n:
        raise NetworkError(f"prefix has {prefix.n} channels, expected {n}")
    free = d - prefix.depth
    if free < 0:
        raise NetworkError(f"prefix depth {prefix.depth} exceeds d={d}")
    if free == 0:
        ok = is_sorting_network(prefix)
        return Attempt(SolveResult(SAT if ok else UNSAT, [] if ok else None), prefix if ok else None)
    inst, reg = encode(n, free, outputs(prefix), effective_options(opts, free),
                       meta={"prefix": prefix.to_text()})
    digest = hashlib.sha256(emit_dimacs(inst).encode()).hexdigest()[:16]
    res = solve(inst, reg, config, cancel)
    if res.verdict != SAT:
        return Attempt(res, None, digest)
    suffix = decode_model(res.model, reg)
    if not verify_witness(prefix, suffix, n):
        raise WitnessError(f"decoded extension of {prefix.to_text()!r} does not sort")
    return Attempt(res, prefix + suffix, digest)


def search_extension(prefix: ComparatorNetwork, n: int, d: int, opts: EncodeOptions = EncodeOptions(),
                     config: SolverConfig | None = None) -> ComparatorNetwork | None:
    """A verified depth-``d`` sorting network starting with ``prefix``, or
    ``None`` if the solver proves there is none."""
    att = attempt_extension(prefix, n, d, opts, config or SolverConfig())
    if att.result.verdict in (TIMEOUT, ERROR):
        raise SolverError(f"solver gave {att.result.verdict}: {att.result.stderr.strip()}")
    return att.network


# --------------------------------------------------------------- campaigns

def prefix_hash(prefix: ComparatorNetwork) -> str:
    return hashlib.sha256(prefix.to_text().encode()).hexdigest()[:16]


@dataclass
class CampaignResult:
    n: int
    d: int
    mode: str
    verdicts: list[dict]
    aggregate: str
    witness: ComparatorNetwork | None = None
    offending: list[str] = field(default_factory=list)
    stats: dict = field(default_factory=dict)

    @property
    def exit_code(self) -> int:
        return 2 if self.aggregate == INCONCLUSIVE else 0

    def to_json(self) -> dict:
        return {
            "n": self.n, "d": self.d, "mode": self.mode, "aggregate": self.aggregate,
            "witness": self.witness.to_text() if self.witness else None,
            "offending": self.offending, "verdicts": self.verdicts, "stats": self.stats,
        }


def _read_journal(path: Path) -> dict[str, dict]:
    done = {}
    if path.exists():
        for line in path.read_text().splitlines():
            if line.strip():
                rec = json.loads(line)
                if rec.get("verdict") in (SAT, UNSAT):
                    done[rec["hash"]] = rec
    return done


def campaign(filters: FilterSet, n: int, d: int, opts: EncodeOptions = EncodeOptions(),
             config: SolverConfig | None = None, parallelism: int = 1, mode: str = "find",
             journal: str | Path | None = None, optimize: OptimizerConfig | None = None) -> CampaignResult:
    """Try to extend every prefix of a complete filter set to depth ``d``.

    ``find`` stops at the first verified extension and keeps going past
    timeouts; ``refute`` stops as soon as any prefix fails to come back
    UNSAT.  Completed prefixes are appended to ``journal`` and skipped when
    the campaign is rerun.
    """
    if mode not in ("find", "refute"):
        raise ValueError("mode must be 'find' or 'refute'")
    if filters.n != n:
        raise NetworkError(f"filter set is for n={filters.n}, not {n}")
    if parallelism < 1:
        raise ValueError("parallelism must be at least 1")
    config = config or SolverConfig()
    jpath = Path(journal) if journal else None
    done = _read_journal(jpath) if jpath else {}
    lock = threading.Lock()
    cancel = threading.Event()
    started = time.monotonic()

    def record(rec: dict):
        if jpath:
            with lock, jpath.open("a") as fh:
                fh.write(json.dumps(rec, sort_keys=True) + "\n")

    def run_one(index: int, prefix: ComparatorNetwork) -> dict:
        key = prefix_hash(prefix)
        if key in done:
            rec = dict(done[key], resumed=True)
            if rec["verdict"] == SAT:
                net = parse_network(rec["witness"], n)
                if not is_sorting_network(net):
                    raise WitnessError(f"journal witness for prefix {index} does not sort")
            return rec
        work = prefix
        if optimize is not None:
            work = optimize_prefix(prefix, optimize).result
        att = attempt_extension(work, n, d, opts, config, cancel)
        rec = {
            "index": index, "hash": key, "prefix": prefix.to_text(), "searched": work.to_text(),
            "verdict": att.result.verdict, "time": round(att.result.wall_time, 4),
            "instance": att.instance_digest,
            "witness": att.network.to_text() if att.network else None,
        }
        if att.result.verdict in (SAT, UNSAT):
            record(rec)
        elif att.result.stderr:
            rec["stderr"] = att.result.stderr[-2000:]
        return rec

    results: dict[int, dict] = {}
    stop = False
    prefixes = list(enumerate(filters.prefixes))
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        pending = set()
        queue = iter(prefixes)
        while True:
            while not stop and len(pending) < parallelism:
                nxt = next(queue, None)
                if nxt is None:
                    break
                pending.add(pool.submit(run_one, *nxt))
            if not pending:
                break
            finished, pending = wait(pending, return_when=FIRST_COMPLETED)
            for fut in finished:
                rec = fut.result()
                if cancel.is_set() and rec["verdict"] == TIMEOUT:
                    rec["verdict"] = "CANCELLED"
                results[rec["index"]] = rec
                v = rec["verdict"]
                if v == SAT or (mode == "refute" and v != UNSAT and v != "CANCELLED"):
                    stop = True
                    cancel.set()

    verdicts = [results[i] for i in sorted(results)]
    witness = None
    sat = [r for r in verdicts if r["verdict"] == SAT]
    if sat:
        aggregate = NETWORK_FOUND
        witness = parse_network(sat[0]["witness"], n)
        if not is_sorting_network(witness):
            raise WitnessError("campaign witness does not sort")
    elif len(verdicts) == len(prefixes) and all(r["verdict"] == UNSAT for r in verdicts):
        aggregate = NO_NETWORK
    else:
        aggregate = INCONCLUSIVE
    offending = [r["hash"] for r in verdicts if r["verdict"] in (TIMEOUT, ERROR)]
    times = [r["time"] for r in verdicts if "time" in r]
    stats = {
        "prefixes": len(prefixes), "completed": len(verdicts),
        "resumed": sum(1 for r in verdicts if r.get("resumed")),
        "solver_time": round(sum(times), 4), "max_time": max(times, default=0.0),
        "wall_time": round(time.monotonic() - started, 4), "parallelism": parallelism,
    }
    return CampaignResult(n, d, mode, verdicts, aggregate, witness, offending, stats)
