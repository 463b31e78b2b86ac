"""Command-line entry point: ``qensemble <scenario> [flags]``.

Exit codes: 0 success, 1 scenario or I/O failure, 2 usage error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import sys
from dataclasses import dataclass, field
from typing import Optional

from . import scenarios
from .report import ScenarioReport

log = logging.getLogger("qensemble")

FORMATS = ("json-records", "csv")
CSV_COLUMNS = ("scenario_id", "quantity", "value", "oracle", "paper_value", "conformance")


@dataclass
class RunConfig:
    scenario_id: str
    parameters: dict = field(default_factory=dict)
    seed: int = 0
    output_format: str = "json-records"
    output_path: Optional[str] = None
    threads: int = 1

    def validate(self) -> None:
        if self.scenario_id not in scenarios.SCENARIOS:
            raise ValueError(f"unknown scenario {self.scenario_id!r}")
        if self.output_format not in FORMATS:
            raise ValueError(f"unknown output format {self.output_format!r}")
        fn = scenarios.SCENARIOS[self.scenario_id]
        allowed = set(fn.__code__.co_varnames[: fn.__code__.co_argcount]) - {"seed", "threads"}
        unknown = set(self.parameters) - allowed
        if unknown:
            raise ValueError(f"unknown parameters for {self.scenario_id}: {sorted(unknown)}")

    def run(self) -> ScenarioReport:
        self.validate()
        fn = scenarios.SCENARIOS[self.scenario_id]
        kwargs = dict(self.parameters, seed=self.seed)
        if "threads" in fn.__code__.co_varnames:
            kwargs["threads"] = self.threads
        return fn(**kwargs)


def _number(x: float) -> str:
    # repr is the shortest string that round-trips the double exactly
    return repr(float(x))


def render_report(report: ScenarioReport, output_format: str) -> str:
    rec = report.to_record()
    if output_format == "json-records":
        return json.dumps(rec, sort_keys=True, ensure_ascii=False, allow_nan=False) + "\n"
    if output_format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        conf = rec["conformance"]
        for q in sorted(rec["computed"]):
            paper = rec["paper_reference_values"].get(q)
            w.writerow([
                rec["scenario_id"],
                q,
                _number(rec["computed"][q]),
                rec["oracles"][q],
                "" if paper is None else _number(paper),
                conf[q],
            ])
        return buf.getvalue()
    raise ValueError(f"unknown output format {output_format!r}")


def emit_report(report: ScenarioReport, cfg: RunConfig) -> int:
    """Write the report; returns the number of bytes written."""
    data = render_report(report, cfg.output_format).encode("utf-8")
    if cfg.output_path:
        with open(cfg.output_path, "wb") as fh:
            fh.write(data)
    else:
        sys.stdout.buffer.write(data)
        sys.stdout.buffer.flush()
    return len(data)


def _positive_int(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if v < 1:
        raise argparse.ArgumentTypeError(f"{v} must be >= 1")
    return v


def _seed(text: str) -> int:
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not an integer")
    if not 0 <= v < 2**64:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _int_list(text: str) -> list:
    try:
        vals = [int(p) for p in text.split(",") if p.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"{text!r} is not a comma-separated integer list")
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qensemble",
        description="Seeded ensemble-distinguishability experiments with structured reports.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=_seed, default=0)
    common.add_argument("--format", dest="output_format", choices=FORMATS, default="json-records")
    common.add_argument("--output", dest="output_path", default=None)
    common.add_argument("--threads", type=_positive_int, default=1,
                        help="worker threads for Monte Carlo chunks; output is unchanged")
    common.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="scenario_id", required=True, metavar="SCENARIO")
    method = dict(choices=("auto", "molecule", "multinomial"), default="auto")

    p = sub.add_parser("despagnat", parents=[common], help="S1 vs S2 Sigma_z fluctuations")
    p.add_argument("--n", type=_positive_int, default=10_000)
    p.add_argument("--trials", type=_positive_int, default=10_000)
    p.add_argument("--method", **method)

    p = sub.add_parser("collapse", parents=[common], help="remote collapse of |phi+> pairs")
    p.add_argument("--n", type=_positive_int, default=10_000)
    p.add_argument("--basis", choices=("z", "x"), default="z")
    p.add_argument("--runs", type=_positive_int, default=10_000)

    p = sub.add_parser("peres", parents=[common], help="finite-assembly distinguisher")
    p.add_argument("--n-values", type=_int_list, default=[100, 400])
    p.add_argument("--trials", type=_positive_int, default=100_000)
    p.add_argument("--method", **method)

    p = sub.add_parser("preskill", parents=[common], help="correlation protocol")
    p.add_argument("--n", type=_positive_int, default=10_000)
    p.add_argument("--alice-basis", choices=("z", "x"), default="x")

    p = sub.add_parser("bellpair", parents=[common], help="same reduced state, Bell-basis test")
    p.add_argument("--trials", type=_positive_int, default=10_000)

    p = sub.add_parser("bb84", parents=[common], help="four-state vs two-state key distribution")
    p.add_argument("--photons", type=_positive_int, default=100_000)
    p.add_argument("--preparation", choices=("four_state", "two_state"), default="four_state")
    p.add_argument("--eve", choices=("none", "intercept_resend_z"), default="none")

    p = sub.add_parser("nmr", parents=[common], help="effective Bell vs product decomposition")
    p.add_argument("--n", type=_positive_int, default=1_000_000)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--trials", type=_positive_int, default=20_000)
    p.add_argument("--method", **method)
    return parser


def _parameters(ns: argparse.Namespace, parser: argparse.ArgumentParser) -> dict:
    sid = ns.scenario_id
    if sid == "despagnat":
        if ns.n % 2 or ns.n < 2:
            parser.error("argument --n: must be an even integer >= 2")
        if ns.trials < 2:
            parser.error("argument --trials: must be >= 2")
        return {"N": ns.n, "trials": ns.trials, "method": ns.method}
    if sid == "collapse":
        if ns.n < 2:
            parser.error("argument --n: must be >= 2")
        return {"N": ns.n, "basis": ns.basis, "runs": ns.runs}
    if sid == "peres":
        if any(n < 2 or n % 2 for n in ns.n_values):
            parser.error("argument --n-values: every N must be even and >= 2")
        return {"N_values": ns.n_values, "trials": ns.trials, "method": ns.method}
    if sid == "preskill":
        return {"N": ns.n, "alice_basis": ns.alice_basis}
    if sid == "bellpair":
        return {"trials": ns.trials}
    if sid == "bb84":
        return {"n_photons": ns.photons, "preparation": ns.preparation, "eve": ns.eve}
    if sid == "nmr":
        if not 0.0 < ns.epsilon <= 1.0:
            parser.error("argument --epsilon: must lie in (0, 1]")
        if ns.epsilon * ns.n < 1:
            parser.error("argument --epsilon: epsilon * n must be >= 1")
        if ns.trials < 2:
            parser.error("argument --trials: must be >= 2")
        return {"N": ns.n, "epsilon": ns.epsilon, "trials": ns.trials, "method": ns.method}
    parser.error(f"unknown scenario {sid!r}")  # pragma: no cover


def parse_and_dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        ns = parser.parse_args(argv)
        params = _parameters(ns, parser)
    except SystemExit as exc:
        return int(exc.code or 0)
    logging.basicConfig(level=logging.INFO if ns.verbose else logging.WARNING, format="%(message)s")
    cfg = RunConfig(ns.scenario_id, params, ns.seed, ns.output_format, ns.output_path, ns.threads)
    try:
        report = cfg.run()
    except Exception as exc:
        log.error("scenario %s failed: %s", cfg.scenario_id, exc)
        return 1
    try:
        n = emit_report(report, cfg)
    except OSError as exc:
        log.error("could not write report: %s", exc)
        return 1
    log.info("wrote %d bytes", n)
    return 0


def main() -> None:
    sys.exit(parse_and_dispatch())


if __name__ == "__main__":
    main()
