"""Config-driven experiment runner.

``run_scenario`` executes one scenario and writes its CSV series plus a
``report.txt`` with one ``CHECK`` line per declared check.  ``sweep`` repeats
a scenario over the values of one scalar field.  Built-in scenarios are
shipped as YAML files and listed by ``builtin_scenarios``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence

import numpy as np
import yaml

from ..bath import Lagrangian, member_seed
from ..series import MomentSeries
from .checks import CHECKS, NotApplicable
from .config import ConfigError, Scenario, load_config, parse_config, set_path
from .pipelines import RUNNERS

__all__ = [
    "CheckResult",
    "ConfigError",
    "HarnessError",
    "Report",
    "Scenario",
    "builtin_path",
    "builtin_scenarios",
    "load_builtin",
    "load_config",
    "micro_vs_gle",
    "run_scenario",
    "sweep",
]


class HarnessError(RuntimeError):
    """A module error raised while running a scenario, tagged with its id."""


@dataclass(frozen=True)
class CheckResult:
    name: str
    status: str  # pass | fail | skipped
    measured: float = math.nan
    target: float = math.nan
    tol: float = math.nan
    op: str = "abs"
    note: str = ""

    @property
    def passed(self) -> bool:
        return self.status == "pass"

    def line(self) -> str:
        target = {"abs": "", "gt": ">", "lt": "<"}[self.op] + _fmt(self.target)
        text = (f"CHECK {self.name} {self.status} measured={_fmt(self.measured)} "
                f"target={target} tol={_fmt(self.tol)}")
        return text + (f"  # {self.note}" if self.note else "")


def _fmt(v) -> str:
    return f"{v:.10g}" if isinstance(v, float) else str(v)


@dataclass
class Report:
    scenario_id: str
    series: Dict[str, Path] = field(default_factory=dict)
    checks: List[CheckResult] = field(default_factory=list)
    path: Optional[Path] = None
    master_seed: int = 0
    sweep_checks: List[CheckResult] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True when every declared check passed (skipped counts as not passed)."""
        return all(c.passed for c in self.checks)

    def check(self, name) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def lines(self) -> List[str]:
        out = [f"# scenario={self.scenario_id} master_seed={self.master_seed}"]
        out += [f"SERIES {k} {v.name}" for k, v in self.series.items()]
        out += [c.line() for c in self.checks]
        return out

    def write(self, out_dir) -> Path:
        out_dir = Path(out_dir)
        out_dir.mkdir(parents=True, exist_ok=True)
        self.path = out_dir / "report.txt"
        self.path.write_text("\n".join(self.lines()) + "\n")
        return self.path

    @classmethod
    def read(cls, path) -> "Report":
        """Parse a report file back (series paths are resolved next to it)."""
        path = Path(path)
        rep = cls("")
        for line in path.read_text().splitlines():
            if line.startswith("# scenario="):
                head = dict(tok.split("=", 1) for tok in line[2:].split())
                rep.scenario_id = head["scenario"]
                rep.master_seed = int(head.get("master_seed", 0))
            elif line.startswith("SERIES "):
                _, name, file = line.split()
                rep.series[name] = path.parent / file
            elif line.startswith("CHECK "):
                rep.checks.append(_parse_check(line))
        rep.path = path
        return rep


def _parse_check(line) -> CheckResult:
    body = line.split("  # ", 1)
    _, name, status, *kv = body[0].split()
    vals = dict(tok.split("=", 1) for tok in kv)
    t = vals["target"]
    op = {">": "gt", "<": "lt"}.get(t[:1], "abs")
    t = t[1:] if op != "abs" else t
    return CheckResult(name, status, float(vals["measured"]), float(t), float(vals["tol"]), op,
                       body[1] if len(body) > 1 else "")


def _evaluate(scn: Scenario, ctx) -> List[CheckResult]:
    results = []
    for spec in scn.checks:
        chk = CHECKS[spec.name]
        if ctx is None:
            results.append(CheckResult(spec.name, "skipped", note="no outputs requested"))
            continue
        if scn.pipeline not in chk.pipelines:
            results.append(CheckResult(spec.name, "skipped", op=chk.op,
                                       note=f"not a {scn.pipeline} check"))
            continue
        try:
            measured, target, tol = chk.func(scn, ctx, spec.params)
        except NotApplicable as exc:
            results.append(CheckResult(spec.name, "skipped", op=chk.op, note=str(exc)))
            continue
        target = float(spec.params.get("target", target))
        tol = float(spec.params.get("tol", tol))
        measured = float(measured)
        if chk.op == "abs":
            ok = abs(measured - target) <= tol
        elif chk.op == "gt":
            ok = measured > target
        else:
            ok = measured < target
        results.append(CheckResult(spec.name, "pass" if ok else "fail", measured, target, tol,
                                   chk.op))
    return results


def _write_tables(tables, outputs, out_dir: Path, scn: Scenario) -> Dict[str, Path]:
    written = {}
    for name in outputs:
        obj = tables.get(name)
        if obj is None:
            continue
        items = obj.items() if isinstance(obj, dict) else [(name, obj)]
        for key, table in items:
            if isinstance(table, MomentSeries) and not table.scenario:
                table = replace(table, scenario=scn.id)
            path = out_dir / f"{key}.csv"
            table.to_csv(path)
            written[key] = path
    return written


def run_scenario(config, out_dir=None, seed: Optional[int] = None, threads: int = 1) -> Report:
    """Run one scenario and write its series and ``report.txt`` into ``out_dir``.

    Parameters
    ----------
    config : path, mapping or Scenario
    out_dir : path, optional
        Defaults to ``./out/<scenario id>``.
    seed : int, optional
        Overrides ``ensemble.master_seed``.
    threads : int
        Worker threads for ensemble members; results do not depend on it.
    """
    scn = load_config(config)
    if seed is not None:
        scn = _with_seed(scn, seed)
    out_dir = Path(out_dir) if out_dir is not None else Path("out") / scn.id
    out_dir.mkdir(parents=True, exist_ok=True)

    ctx, series = None, {}
    if scn.outputs or scn.checks:
        try:
            result = RUNNERS[scn.pipeline](scn, threads)
        except ConfigError:
            raise
        except Exception as exc:
            raise HarnessError(f"scenario {scn.id!r} ({scn.pipeline}): {exc}") from exc
        ctx = result["ctx"]
        series = _write_tables(result["tables"], scn.outputs, out_dir, scn)
    report = Report(scn.id, series, _evaluate(scn, ctx), master_seed=scn.ensemble.master_seed)
    report.write(out_dir)
    return report


def _with_seed(scn: Scenario, seed: int) -> Scenario:
    if not 0 <= int(seed) < 2**64:
        raise ConfigError(f"seed: must be an unsigned 64-bit integer, got {seed}")
    raw = set_path(scn.raw, "ensemble.master_seed", int(seed))
    return parse_config(raw, scn.base_dir)


def micro_vs_gle(config, out_dir=None, seed: Optional[int] = None, threads: int = 1) -> Report:
    """Full-system ensemble against the GLE prediction on the same horizon.

    The default checks are the standardized mean deviation, the relative
    variance error and, for the bilinear coupling, the flag that the two
    are expected to disagree.
    """
    scn = load_config(config)
    raw = dict(scn.raw, pipeline="micro")
    if not raw.get("checks"):
        raw["checks"] = (["bilinear_flagged"] if scn.lagrangian is Lagrangian.BILINEAR
                         else ["micro_mean_z", "micro_variance", "micro_mean_error"])
    return run_scenario(parse_config(raw, scn.base_dir), out_dir, seed, threads)


def sweep(config, parameter: str, values: Sequence, out_dir=None, seed: Optional[int] = None,
          threads: int = 1) -> List[Report]:
    """Run the scenario once per value of the scalar field ``parameter``.

    Run ``i`` uses master seed ``member_seed(master_seed, i)`` and writes into
    ``out_dir/run_<i>``; ``out_dir/sweep_index.txt`` lists every run and the
    outcome of the ``sweep_checks`` declared in the config.
    """
    scn = load_config(config)
    if seed is not None:
        scn = _with_seed(scn, seed)
    out_dir = Path(out_dir) if out_dir is not None else Path("out") / f"{scn.id}-sweep"
    out_dir.mkdir(parents=True, exist_ok=True)
    reports, lines = [], [f"# sweep scenario={scn.id} param={parameter} "
                          f"master_seed={scn.ensemble.master_seed}"]
    for i, value in enumerate(values):
        raw = set_path(scn.raw, parameter, value)
        raw = set_path(raw, "ensemble.master_seed", member_seed(scn.ensemble.master_seed, i))
        run_scn = parse_config(raw, scn.base_dir)
        rep = run_scenario(run_scn, out_dir / f"run_{i:03d}", threads=threads)
        reports.append(rep)
        status = "pass" if rep.passed else "fail"
        lines.append(f"RUN {i} {parameter}={value} seed={run_scn.ensemble.master_seed} "
                     f"status={status} report=run_{i:03d}/report.txt")
    agg = _sweep_checks(scn, reports)
    lines += [c.line() for c in agg]
    (out_dir / "sweep_index.txt").write_text("\n".join(lines) + "\n")
    for r in reports:
        r.sweep_checks = agg
    return reports


def _sweep_checks(scn: Scenario, reports: List[Report]) -> List[CheckResult]:
    out = []
    for spec in scn.sweep_checks:
        of = spec.params["of"]
        try:
            vals = np.array([r.check(of).measured for r in reports])
        except KeyError:
            out.append(CheckResult(f"{spec.name}:{of}", "skipped", note=f"{of} not declared"))
            continue
        steps = np.diff(vals)
        ok = bool(np.all(steps < 0) if spec.name == "monotone_decrease" else np.all(steps > 0))
        if not np.all(np.isfinite(vals)) or len(vals) < 2:
            ok = False
        worst = float(np.max(steps) if spec.name == "monotone_decrease" else np.min(steps)) \
            if len(steps) else math.nan
        op = "lt" if spec.name == "monotone_decrease" else "gt"
        out.append(CheckResult(f"{spec.name}:{of}", "pass" if ok else "fail", worst, 0.0, 0.0,
                               op))
    return out


def builtin_scenarios() -> List[str]:
    root = resources.files("oscbath") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


def builtin_path(name: str) -> Path:
    path = Path(str(resources.files("oscbath") / "scenarios" / f"{name}.yaml"))
    if not path.exists():
        raise ConfigError(f"scenario: unknown built-in {name!r}; "
                          f"available: {', '.join(builtin_scenarios())}")
    return path


def load_builtin(name: str) -> Scenario:
    with open(builtin_path(name)) as fh:
        return parse_config(yaml.safe_load(fh), builtin_path(name).parent)
