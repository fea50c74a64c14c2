"""Replay merge scenarios with two merge tools and compare them.

A scenario directory looks like::

    <id>/
      scenario.meta        JSON: {"id": ..., "profile": ..., "test_command": ...}
      base/  left/  right/  merged/     mirrored file trees

``merged/`` is the merge the developers committed.  Files changed on both
sides are replayed.  When exactly one tool reports conflicts, the other
tool's output is judged: equal to the committed merge (up to formatting
and member order) means the conflict was spurious; otherwise the optional
test command decides.
"""

from __future__ import annotations

import json
import logging
import shlex
import shutil
import statistics
import subprocess
import sys
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Optional, Protocol, Sequence, Union

from .cst import Origin
from .langconfig import LanguageProfile, ProfileRegistry
from .matching import MatchingStore, match_trees
from .parser import ParseError, parse
from .render import normalize

log = logging.getLogger(__name__)

META_FILE = "scenario.meta"
REVISIONS = ("base", "left", "right", "merged")


class ScenarioError(ValueError):
    pass


class ToolFailure(RuntimeError):
    pass


@dataclass(frozen=True)
class Scenario:
    id: str
    root: Path
    files: tuple[str, ...]
    profile: Optional[str] = None
    test_command: Optional[Union[str, list[str]]] = None
    test_timeout: float = 120.0

    def path(self, revision: str, rel: str) -> Path:
        return self.root / revision / rel

    @property
    def expected_dir(self) -> Path:
        return self.root / "merged"


def _tree_files(directory: Path) -> set[str]:
    if not directory.is_dir():
        return set()
    return {p.relative_to(directory).as_posix() for p in directory.rglob("*") if p.is_file()}


def load_scenario(directory: Union[str, Path]) -> Scenario:
    root = Path(directory)
    meta_path = root / META_FILE
    try:
        meta = json.loads(meta_path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioError(f"{meta_path}: {exc}") from exc
    for rev in REVISIONS:
        if not (root / rev).is_dir():
            raise ScenarioError(f"{root}: missing {rev}/ directory")
    if "files" in meta:
        files = tuple(meta["files"])
    else:
        common = _tree_files(root / "base") & _tree_files(root / "left") & _tree_files(root / "right")
        files = tuple(
            rel for rel in sorted(common)
            if (root / "left" / rel).read_bytes() != (root / "base" / rel).read_bytes()
            and (root / "right" / rel).read_bytes() != (root / "base" / rel).read_bytes()
        )
    for rel in files:
        for rev in REVISIONS:
            if not (root / rev / rel).is_file():
                raise ScenarioError(f"{root}: {rev}/{rel} does not exist")
    if not files:
        raise ScenarioError(f"{root}: no file was modified by both sides")
    return Scenario(
        id=str(meta.get("id", root.name)),
        root=root,
        files=files,
        profile=meta.get("profile"),
        test_command=meta.get("test_command"),
        test_timeout=float(meta.get("test_timeout", 120.0)),
    )


def discover(directory: Union[str, Path]) -> list[Scenario]:
    """Every scenario directly below ``directory``, sorted by id."""
    out = [load_scenario(p.parent) for p in sorted(Path(directory).glob(f"*/{META_FILE}"))]
    return sorted(out, key=lambda s: s.id)


# tools -------------------------------------------------------------------


class Tool(Protocol):
    name: str

    def __call__(self, base: str, left: str, right: str, out: str) -> int:
        """Merge three files into ``out``; 0 clean, 1 conflicts, other = failure."""


class CommandTool:
    """External merge command invoked as ``CMD BASE LEFT RIGHT -o OUT``."""

    def __init__(self, command: Union[str, Sequence[str]], name: Optional[str] = None, timeout: float = 600.0):
        self.argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not self.argv:
            raise ValueError("empty tool command")
        self.name = name or " ".join(self.argv)
        self.timeout = timeout

    def __call__(self, base, left, right, out) -> int:
        try:
            proc = subprocess.run(
                [*self.argv, base, left, right, "-o", out],
                stdout=subprocess.DEVNULL, stderr=subprocess.PIPE, timeout=self.timeout,
            )
        except (OSError, subprocess.TimeoutExpired) as exc:
            raise ToolFailure(f"{self.name}: {exc}") from exc
        return proc.returncode


class FunctionTool:
    """In-process tool wrapping a callable with the same contract."""

    def __init__(self, name: str, fn: Callable[[str, str, str, str], int]):
        self.name = name
        self.fn = fn

    def __call__(self, base, left, right, out) -> int:
        return self.fn(base, left, right, out)


def builtin_tool(name: str) -> FunctionTool:
    """``line``, ``structured``, ``structured-permissive`` or ``auto``,
    all backed by :func:`structmerge.cli.run`."""
    import io

    from .cli import CliConfig, run

    settings = {
        "line": dict(mode="line"),
        "structured": dict(mode="structured"),
        "structured-permissive": dict(mode="structured", strict_delete_edit=False),
        "auto": dict(mode="auto"),
    }
    if name not in settings:
        raise ValueError(f"unknown builtin tool {name!r}; choose from {sorted(settings)}")
    kw = settings[name]

    def fn(base, left, right, out):
        return run(base, left, right, CliConfig(output=out, **kw), stderr=io.StringIO())

    return FunctionTool(name, fn)


@dataclass
class ToolOutcome:
    tool: str
    outputs: dict[str, str]  # rel path -> merged text
    conflicts: bool


def run_tool(tool: Tool, scenario: Scenario, workdir: Path) -> ToolOutcome:
    outputs = {}
    conflicts = False
    for rel in scenario.files:
        out = workdir / rel
        out.parent.mkdir(parents=True, exist_ok=True)
        code = _invoke(tool, scenario, rel, out)
        conflicts |= code == 1
        outputs[rel] = out.read_text(encoding="utf-8")
    return ToolOutcome(tool.name, outputs, conflicts)


def _invoke(tool: Tool, scenario: Scenario, rel: str, out: Path) -> int:
    try:
        code = tool(
            str(scenario.path("base", rel)),
            str(scenario.path("left", rel)),
            str(scenario.path("right", rel)),
            str(out),
        )
    except ToolFailure:
        raise
    except Exception as exc:
        raise ToolFailure(f"{tool.name} crashed on {scenario.id}/{rel}: {exc}") from exc
    if code not in (0, 1):
        raise ToolFailure(f"{tool.name} exited with {code} on {scenario.id}/{rel}")
    if not out.is_file():
        raise ToolFailure(f"{tool.name} wrote no output for {scenario.id}/{rel}")
    return code


# equivalence -------------------------------------------------------------


def syntactic_equivalent(a_text: str, b_text: str, profile: LanguageProfile) -> bool:
    """True when the normalized texts parse to trees whose roots match
    completely (unordered children may appear in any order)."""
    try:
        ta = parse(normalize(a_text, profile), profile, Origin.LEFT)
        tb = parse(normalize(b_text, profile), profile, Origin.RIGHT)
    except (ParseError, ValueError) as exc:
        log.warning("equivalence check skipped: %s", exc)
        return False
    score = match_trees(ta.root, tb.root, MatchingStore())
    return score == ta.root.size == tb.root.size


def _profile_for(scenario: Scenario, rel: str, registry: ProfileRegistry) -> Optional[LanguageProfile]:
    if scenario.profile:
        return registry.profiles.get(scenario.profile)
    return registry.for_path(rel)


def outputs_equivalent(scenario: Scenario, outputs: dict[str, str], registry: Optional[ProfileRegistry] = None) -> bool:
    registry = registry or ProfileRegistry.default()
    for rel, text in outputs.items():
        expected = scenario.path("merged", rel).read_text(encoding="utf-8")
        profile = _profile_for(scenario, rel, registry)
        if profile is None:
            same = text == expected
        else:
            same = syntactic_equivalent(text, expected, profile)
        if not same:
            return False
    return True


# classification ----------------------------------------------------------


@dataclass(frozen=True)
class Classification:
    kind: str  # none | aFP | aFN | unresolved
    tool: Optional[str] = None
    diagnostic: str = ""

    def __str__(self):
        return f"{self.kind}({self.tool})" if self.tool else self.kind


NONE = Classification("none")


def _test_argv(scenario: Scenario) -> list[str]:
    cmd = scenario.test_command
    argv = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
    return [a.replace("{scenario}", str(scenario.root)).replace("{python}", sys.executable) for a in argv]


def run_test_command(scenario: Scenario, outputs: dict[str, str]) -> tuple[Optional[bool], str]:
    """Stage the committed merge with ``outputs`` written over it and run the
    scenario's test command there.  Returns (passed, diagnostic); passed is
    None when the command could not give a verdict."""
    with tempfile.TemporaryDirectory(prefix=f"structmerge-{scenario.id}-") as tmp:
        ws = Path(tmp) / "ws"
        shutil.copytree(scenario.expected_dir, ws)
        for rel, text in outputs.items():
            target = ws / rel
            target.parent.mkdir(parents=True, exist_ok=True)
            target.write_text(text, encoding="utf-8")
        try:
            proc = subprocess.run(
                _test_argv(scenario), cwd=ws, capture_output=True, text=True,
                timeout=scenario.test_timeout,
            )
        except subprocess.TimeoutExpired:
            return None, f"test command timed out after {scenario.test_timeout}s"
        except (OSError, ValueError) as exc:
            return None, f"test command could not start: {exc}"
    code = proc.returncode
    tail = (proc.stderr or proc.stdout).strip().splitlines()[-1:] or [""]
    if code == 0:
        return True, "tests passed"
    if 1 <= code <= 125:
        return False, f"tests failed (exit {code}): {tail[0]}"
    return None, f"test command crashed (exit {code}): {tail[0]}"


def classify(
    scenario: Scenario,
    out_a: ToolOutcome,
    out_b: ToolOutcome,
    registry: Optional[ProfileRegistry] = None,
) -> Classification:
    if out_a.conflicts == out_b.conflicts:
        return NONE
    conflicting, clean = (out_a, out_b) if out_a.conflicts else (out_b, out_a)
    if outputs_equivalent(scenario, clean.outputs, registry):
        return Classification("aFP", conflicting.tool, "clean output equals the committed merge")
    if not scenario.test_command:
        return Classification("unresolved", None, "clean output differs from the committed merge and there is no test command")
    passed, diag = run_test_command(scenario, clean.outputs)
    if passed is None:
        return Classification("unresolved", None, diag)
    if passed:
        return Classification("aFP", conflicting.tool, diag)
    return Classification("aFN", clean.tool, diag)


# timing ------------------------------------------------------------------


def measure(
    tool: Tool,
    scenario: Scenario,
    runs: int = 10,
    clock: Callable[[], float] = time.perf_counter,
) -> float:
    """Milliseconds: per file, ``runs`` sequential runs with the first one
    discarded as warm-up and the rest averaged; summed over files."""
    if runs < 2:
        raise ValueError("need at least two runs (the first is discarded)")
    total = 0.0
    with tempfile.TemporaryDirectory(prefix="structmerge-time-") as tmp:
        for n, rel in enumerate(scenario.files):
            out = Path(tmp) / str(n)
            samples = []
            for _ in range(runs):
                t0 = clock()
                _invoke(tool, scenario, rel, out)
                samples.append(clock() - t0)
            total += 1000.0 * statistics.fmean(samples[1:])
    return total


# reports -----------------------------------------------------------------


@dataclass
class ScenarioReport:
    scenario_id: str
    tool_a: str
    tool_b: str
    a_conflicts: bool = False
    b_conflicts: bool = False
    classification: Classification = NONE
    a_ms: Optional[float] = None
    b_ms: Optional[float] = None
    excluded: Optional[str] = None

    @property
    def agreement(self) -> bool:
        return self.a_conflicts == self.b_conflicts


def run_scenario(
    scenario: Scenario,
    tool_a: Tool,
    tool_b: Tool,
    timing: bool = True,
    runs: int = 10,
    registry: Optional[ProfileRegistry] = None,
) -> ScenarioReport:
    rep = ScenarioReport(scenario.id, tool_a.name, tool_b.name)
    with tempfile.TemporaryDirectory(prefix=f"structmerge-{scenario.id}-") as tmp:
        try:
            out_a = run_tool(tool_a, scenario, Path(tmp) / "a")
            out_b = run_tool(tool_b, scenario, Path(tmp) / "b")
            if timing:
                rep.a_ms = measure(tool_a, scenario, runs)
                rep.b_ms = measure(tool_b, scenario, runs)
        except ToolFailure as exc:
            rep.excluded = str(exc)
            return rep
    rep.a_conflicts, rep.b_conflicts = out_a.conflicts, out_b.conflicts
    rep.classification = classify(scenario, out_a, out_b, registry)
    return rep


TSV_COLUMNS = ("scenario_id", "a_conflicts", "b_conflicts", "classification", "a_ms", "b_ms")


@dataclass
class Summary:
    text: str
    tsv: str
    counts: dict[str, int] = field(default_factory=dict)


def _fmt_ms(v: Optional[float]) -> str:
    return "" if v is None else f"{v:.3f}"


def _timing_line(label: str, values: list[float]) -> str:
    if not values:
        return f"  {label}: no timings"
    return (
        f"  {label}: min {min(values):.2f} ms, median {statistics.median(values):.2f} ms, "
        f"mean {statistics.fmean(values):.2f} ms, max {max(values):.2f} ms"
    )


def report(reports: Sequence[ScenarioReport]) -> Summary:
    kept = [r for r in reports if r.excluded is None]
    excluded = len(reports) - len(kept)
    n = len(kept)
    agree = sum(r.agreement for r in kept)
    tools: list[str] = []
    for r in kept:
        for t in (r.tool_a, r.tool_b):
            if t not in tools:
                tools.append(t)
    counts = {"scenarios": n, "excluded": excluded, "agreement": agree, "disagreement": n - agree,
              "unresolved": sum(r.classification.kind == "unresolved" for r in kept)}
    for t in tools:
        counts[f"aFP({t})"] = sum(r.classification.kind == "aFP" and r.classification.tool == t for r in kept)
        counts[f"aFN({t})"] = sum(r.classification.kind == "aFN" and r.classification.tool == t for r in kept)

    def pct(k: int) -> str:
        return f"{100.0 * k / n:.2f}%" if n else "n/a"

    lines = [
        f"scenarios: {n} (excluded: {excluded})",
        f"agreement: {agree} ({pct(agree)})",
        f"disagreement: {n - agree} ({pct(n - agree)})",
    ]
    for t in tools:
        lines.append(f"{t}: aFP {counts[f'aFP({t})']}, aFN {counts[f'aFN({t})']}")
    lines.append(f"unresolved: {counts['unresolved']}")
    if kept:
        lines.append("timing per scenario:")
        lines.append(_timing_line(kept[0].tool_a, [r.a_ms for r in kept if r.a_ms is not None]))
        lines.append(_timing_line(kept[0].tool_b, [r.b_ms for r in kept if r.b_ms is not None]))
    for r in reports:
        if r.excluded:
            lines.append(f"excluded {r.scenario_id}: {r.excluded}")

    rows = ["\t".join(TSV_COLUMNS)]
    for r in kept:
        rows.append("\t".join([
            r.scenario_id, str(r.a_conflicts).lower(), str(r.b_conflicts).lower(),
            str(r.classification), _fmt_ms(r.a_ms), _fmt_ms(r.b_ms),
        ]))
    return Summary("\n".join(lines) + "\n", "\n".join(rows) + "\n", counts)
