"""Command line entry point.

Exit codes: 0 success, 1 irregular pair found by ``check`` (or a failed
``--verify``), 2 input error, 3 capacity error.  Errors print one JSON line on
stderr: ``{"error": <kind>, "reason": <message>}``.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import jsonschema
import numpy as np

from .entropy import DiscreteRV, entropy, entropy_regularize, verify_entropy_result
from .errors import CapacityError, InputError, PreconditionError, RegLabError, StructuralError
from .graph import (build_product_space, check_pair_regularity, load_graph, regularize_graph,
                    report_document)
from .growth import GrowthFunction, parse_growth
from .probability import Partition, SampleSpace
from .regularize import RegularizationConfig
from .witness import find_witness_exact, find_witness_heuristic

EXIT_OK, EXIT_IRREGULAR, EXIT_INPUT, EXIT_CAPACITY = 0, 1, 2, 3
COMMANDS = ("regularize", "check", "entropy-demo", "oracle")


@dataclass(frozen=True)
class CliConfig:
    command: str
    input: str
    epsilon: float = 0.25
    m: float | None = None
    growth: str = "linear"
    mode: str = "exact"
    restarts: int = 16
    seed: int = 0
    output: str | None = None
    format: str = "edgelist"
    verify: bool = False

    def __post_init__(self):
        if self.command not in COMMANDS:
            raise InputError(f"unknown command {self.command!r}")
        if not 0 < self.epsilon <= 1:
            raise InputError(f"epsilon must lie in (0, 1], got {self.epsilon}")
        if self.m is not None and self.m < 0:
            raise InputError("m must be nonnegative")

    def growth_function(self) -> GrowthFunction:
        return parse_growth(self.growth, self.epsilon)

    def regularization(self) -> RegularizationConfig:
        return RegularizationConfig(self.epsilon, self.m or 0.0, self.growth_function(), self.mode,
                                    self.restarts, self.seed)


def report_schema() -> dict:
    return json.loads(resources.files("reglab").joinpath("report_schema.json").read_text())


def parse_distribution(text: str) -> tuple[DiscreteRV, DiscreteRV, DiscreteRV]:
    """Header ``k1 k2 ky`` then lines ``x1 x2 y p``; probabilities sum to 1 +- 1e-9."""
    rows = [(n, line.split("#", 1)[0].split()) for n, line in enumerate(text.splitlines(), 1)]
    rows = [(n, parts) for n, parts in rows if parts]
    if not rows:
        raise InputError("empty distribution file")
    n, head = rows[0]
    try:
        sizes = tuple(int(h) for h in head)
    except ValueError:
        raise InputError(f"line {n}: expected header 'k1 k2 ky'") from None
    if len(sizes) != 3 or min(sizes) < 1:
        raise InputError(f"line {n}: expected three positive alphabet sizes")
    outcomes, probs = [], []
    for n, parts in rows[1:]:
        if len(parts) != 4:
            raise InputError(f"line {n}: expected 'x1 x2 y p'")
        try:
            sym = tuple(int(p) for p in parts[:3])
            p = float(parts[3])
        except ValueError:
            raise InputError(f"line {n}: malformed entry") from None
        if any(not 0 <= s < k for s, k in zip(sym, sizes)):
            raise InputError(f"line {n}: symbol out of range")
        if not (p >= 0 and math.isfinite(p)):
            raise InputError(f"line {n}: probability must be nonnegative")
        outcomes.append(sym)
        probs.append(p)
    total = math.fsum(probs)
    if abs(total - 1) > 1e-9:
        raise InputError(f"probabilities sum to {total!r}")
    space = SampleSpace(tuple(outcomes), np.array(probs) / total)
    return tuple(DiscreteRV(space, [o[i] for o in outcomes]) for i in range(3))


def _emit(doc: dict, output: str | None) -> None:
    text = json.dumps(doc, indent=2) + "\n"
    if output:
        Path(output).write_text(text)
    else:
        sys.stdout.write(text)


def _witness_doc(w) -> dict:
    return {"A1": sorted(w.events[0]), "A2": sorted(w.events[1]), "correlation": w.correlation}


def _fail(kind: str, reason: str) -> None:
    print(json.dumps({"error": kind, "reason": reason}), file=sys.stderr)


def _cmd_regularize(cfg: CliConfig) -> int:
    g = load_graph(cfg.input, cfg.format)
    part, report, res = regularize_graph(g, cfg.regularization())
    doc = report_document(part, report, res)
    if cfg.verify:
        jsonschema.validate(doc, report_schema())
        if res.certificate == "exact":
            space, x = build_product_space(g)
            w = find_witness_exact(x, res.fine, space)
            if abs(w.correlation) > res.threshold + 1e-12 or res.coarse_fine_distance(x) > res.epsilon + 1e-9:
                _fail("verification", "final partitions violate the regularity bounds")
                return EXIT_IRREGULAR
    _emit(doc, cfg.output)
    return EXIT_OK


def _cmd_check(cfg: CliConfig) -> int:
    g = load_graph(cfg.input, cfg.format)
    v = check_pair_regularity(g, range(g.n1), range(g.n2), cfg.epsilon, cfg.mode, cfg.seed, cfg.restarts)
    doc = {"epsilon": cfg.epsilon, "status": v.status, "mode": v.mode, "density": v.density,
           "discrepancy": v.discrepancy}
    if v.witness is not None:
        doc["witness"] = _witness_doc(v.witness)
    _emit(doc, cfg.output)
    if v.status == "unchecked":
        _fail("capacity", "graph too large for exact check; use --mode heuristic")
        return EXIT_CAPACITY
    return EXIT_IRREGULAR if v.status == "irregular" else EXIT_OK


def _cmd_oracle(cfg: CliConfig) -> int:
    g = load_graph(cfg.input, cfg.format)
    space, x = build_product_space(g)
    fine = [Partition.trivial(space, side=0), Partition.trivial(space, side=1)]
    if cfg.mode == "exact":
        w = find_witness_exact(x, fine, space)
    else:
        w = find_witness_heuristic(x, fine, space, cfg.restarts, cfg.seed)
    _emit({"mode": cfg.mode, "witness": _witness_doc(w)}, cfg.output)
    return EXIT_OK


def _named_blocks(blocks, alphabet) -> list[list]:
    return [[alphabet[c] for c in block] for block in blocks]


def _cmd_entropy(cfg: CliConfig) -> int:
    try:
        text = Path(cfg.input).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {cfg.input}: {exc.strerror}") from None
    x1, x2, y = parse_distribution(text)
    m = cfg.m if cfg.m is not None else entropy(y)
    growth = cfg.growth_function()
    res = entropy_regularize(x1, x2, y, cfg.epsilon, m, growth)
    doc = {
        "epsilon": cfg.epsilon,
        "m": m,
        "growth": cfg.growth,
        "iterations": res.iterations,
        "Z": [_named_blocks(res.coarse_blocks[i], x.alphabet) for i, x in enumerate((x1, x2))],
        "Zp": [_named_blocks(res.fine_blocks[i], x.alphabet) for i, x in enumerate((x1, x2))],
        "objective_trace": list(res.objective_trace),
        "conditional_trace": list(res.conditional_trace),
    }
    if cfg.verify:
        checks = verify_entropy_result(x1, x2, y, res, cfg.epsilon, m)
        doc["checks"] = {"determinism": checks.determinism, "coarse_entropy": checks.coarse_entropy,
                         "fine_entropy": checks.fine_entropy, "entropy_bound": checks.entropy_bound,
                         "closeness": checks.closeness, "worst_fine_gap": checks.worst_fine_gap,
                         "holds": checks.holds(cfg.epsilon)}
        if not checks.holds(cfg.epsilon):
            _emit(doc, cfg.output)
            _fail("verification", "entropy regularization conclusions do not hold")
            return EXIT_IRREGULAR
    _emit(doc, cfg.output)
    return EXIT_OK


HANDLERS = {"regularize": _cmd_regularize, "check": _cmd_check, "entropy-demo": _cmd_entropy,
            "oracle": _cmd_oracle}


def run(cfg: CliConfig) -> int:
    try:
        cfg.growth_function()  # a bad growth spec fails before any computation
        return HANDLERS[cfg.command](cfg)
    except CapacityError as exc:
        _fail("capacity", str(exc))
        return EXIT_CAPACITY
    except (InputError, StructuralError, PreconditionError) as exc:
        _fail(exc.kind, str(exc))
        return EXIT_INPUT
    except jsonschema.ValidationError as exc:
        _fail("verification", f"report does not match schema: {exc.message}")
        return EXIT_IRREGULAR


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        _fail("input", message)
        raise SystemExit(EXIT_INPUT)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--input", required=True, help="graph file, or distribution file for entropy-demo")
    common.add_argument("--format", choices=("edgelist", "matrix"), default="edgelist")
    common.add_argument("--epsilon", type=float, default=0.25)
    common.add_argument("--m", type=float, default=None)
    common.add_argument("--growth", default="linear", help="linear | poly:<k> | paper-exp | table:<path>")
    common.add_argument("--mode", choices=("exact", "heuristic"), default="exact")
    common.add_argument("--restarts", type=int, default=16)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", default=None)
    common.add_argument("--verify", action="store_true")
    parser = _Parser(prog="reglab", description="Regularity partitions of bipartite graphs and random variables.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name in COMMANDS:
        sub.add_parser(name, parents=[common])
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = CliConfig(**vars(args))
    except RegLabError as exc:
        _fail(exc.kind, str(exc))
        return EXIT_INPUT
    return run(cfg)


if __name__ == "__main__":
    sys.exit(main())
