"""Command-line merge tool, usable as a git merge driver.

Register it with::

    # .gitattributes
    *.mini merge=structmerge

    # .git/config
    [merge "structmerge"]
        name = structured merge
        driver = structmerge %O %A %B --marker-size %L --path %P

Exit status: 0 clean, 1 conflicts written, 2 error.
"""

from __future__ import annotations

import argparse
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, TextIO

from .cst import IdentifierCollisionError, Origin
from .langconfig import LanguageProfile, ProfileError, ProfileRegistry, load_profile
from .linemerge import diff3_merge
from .matching import compute_matchings
from .merge import Conflict, MergedTree, MergeError, MergeOptions, three_way_merge
from .parser import ParseError, parse
from .render import RenderOptions, render

EXIT_CLEAN, EXIT_CONFLICT, EXIT_ERROR = 0, 1, 2
MODES = ("structured", "line", "auto")
CONFIG_FILE = ".structmerge.profile-paths"


@dataclass
class CliConfig:
    mode: str = "auto"
    profile: Optional[str] = None
    output: Optional[str] = None
    marker_size: int = 7
    strict_delete_edit: bool = True
    profile_paths: list[str] = field(default_factory=list)
    path_hint: Optional[str] = None
    labels: tuple[str, str, str] = ("left", "base", "right")
    dump_matching: bool = False
    verbose: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, not {self.mode!r}")

    @property
    def render_options(self) -> RenderOptions:
        left, base, right = self.labels
        return RenderOptions(
            marker_size=self.marker_size, left_label=left, base_label=base, right_label=right
        )


@dataclass
class StructuredResult:
    text: str
    merged: MergedTree
    stores: tuple

    @property
    def conflicts(self) -> list[Conflict]:
        return self.merged.conflicts


def structured_merge(
    base: str,
    left: str,
    right: str,
    profile: LanguageProfile,
    opts: MergeOptions = MergeOptions(),
    render_opts: RenderOptions = RenderOptions(),
) -> StructuredResult:
    """Parse, match, merge and render.  Raises ParseError,
    IdentifierCollisionError or MergeError when the structured path cannot
    be taken."""
    tb = parse(base, profile, Origin.BASE)
    tl = parse(left, profile, Origin.LEFT)
    tr = parse(right, profile, Origin.RIGHT)
    stores = compute_matchings(tb, tl, tr)
    merged = three_way_merge(tb, tl, tr, stores, opts)
    return StructuredResult(render(merged, opts=render_opts), merged, stores)


def read_text(path: str) -> str:
    with open(path, encoding="utf-8", newline="") as fh:
        return fh.read()


def write_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def config_profile_paths(start: Path) -> list[str]:
    """Directories listed in the nearest ``.structmerge.profile-paths``,
    searching from ``start`` upwards.  Relative entries are resolved against
    the file's directory; blank lines and ``#`` comments are ignored."""
    for directory in [start, *start.parents]:
        candidate = directory / CONFIG_FILE
        if candidate.is_file():
            out = []
            for line in candidate.read_text(encoding="utf-8").splitlines():
                line = line.strip()
                if line and not line.startswith("#"):
                    out.append(str((directory / line).resolve()))
            return out
    return []


def resolve_profile(cfg: CliConfig, left_path: str) -> LanguageProfile:
    """Explicit ``--profile`` (name or file) first, then file extension."""
    search = list(cfg.profile_paths) + config_profile_paths(Path.cwd())
    registry = ProfileRegistry.default(search)
    if cfg.profile:
        if cfg.profile in registry.profiles:
            return registry.profiles[cfg.profile]
        if Path(cfg.profile).is_file():
            return load_profile(cfg.profile)
        raise ProfileError(f"unknown profile {cfg.profile!r}")
    hint = cfg.path_hint or left_path
    profile = registry.for_path(hint)
    if profile is None:
        raise ProfileError(f"no profile registered for {Path(hint).name!r}")
    return profile


class _Trace:
    def __init__(self, enabled: bool, stream: TextIO):
        self.enabled = enabled
        self.stream = stream

    def __call__(self, msg: str) -> None:
        if self.enabled:
            print(f"structmerge: {msg}", file=self.stream)


def conflict_report(conflicts: list[Conflict]) -> str:
    return "".join(f"{c.kind}\t{c.location.start_line}\t{c.summary()}\n" for c in conflicts)


def line_report(res) -> str:
    return "".join(
        f"LineConflict\t{c.base_line}\t{len(c.left)} left / {len(c.right)} right line(s)\n"
        for c in res.conflicts
    )


def dump_matching(stores, stream: TextIO) -> None:
    print("pair\tid_a\tid_b\tscore", file=stream)
    for name, store in zip(("base-left", "base-right", "left-right"), stores):
        for a, b, s in store.triples():
            print(f"{name}\t{a}\t{b}\t{s}", file=stream)


def run(base_path: str, left_path: str, right_path: str, cfg: CliConfig, stderr: TextIO | None = None) -> int:
    """Merge three files; write the result and return the exit status."""
    stderr = stderr or sys.stderr
    trace = _Trace(cfg.verbose, stderr)
    try:
        base, left, right = (read_text(p) for p in (base_path, left_path, right_path))
    except (OSError, UnicodeDecodeError) as exc:
        print(f"structmerge: error: {exc}", file=stderr)
        return EXIT_ERROR
    out_path = cfg.output or left_path
    ropts = cfg.render_options
    mopts = MergeOptions(strict_delete_edit=cfg.strict_delete_edit)

    def line_merge():
        t0 = time.perf_counter()
        res = diff3_merge(base, left, right, ropts)
        trace(f"diff3: {res.conflict_count} conflict(s) in {1000 * (time.perf_counter() - t0):.1f} ms")
        return res

    text: str
    report = ""
    if cfg.mode == "line":
        res = line_merge()
        text, n = res.text, res.conflict_count
        report = line_report(res)
    else:
        diff3 = None
        if cfg.mode == "auto":
            diff3 = line_merge()
            if diff3.clean:
                trace("auto: diff3 clean, parser not invoked")
        if diff3 is not None and diff3.clean:
            text, n = diff3.text, 0
        else:
            try:
                profile = resolve_profile(cfg, left_path)
            except (ProfileError, OSError) as exc:
                if cfg.mode == "structured" or cfg.profile:
                    print(f"structmerge: error: {exc}", file=stderr)
                    return EXIT_ERROR
                print(f"structmerge: warning: {exc}; keeping line merge result", file=stderr)
                profile = None
            result = None
            if profile is not None:
                trace(f"profile: {profile.name}")
                try:
                    t0 = time.perf_counter()
                    result = structured_merge(base, left, right, profile, mopts, ropts)
                    trace(f"structured: {len(result.conflicts)} conflict(s) in {1000 * (time.perf_counter() - t0):.1f} ms")
                except (ParseError, IdentifierCollisionError, MergeError) as exc:
                    print(f"structmerge: warning: structured merge unavailable ({exc}); falling back to line merge", file=stderr)
            if result is None:
                res = diff3 or line_merge()
                text, n = res.text, res.conflict_count
                report = line_report(res)
            else:
                if cfg.dump_matching:
                    dump_matching(result.stores, stderr)
                text, n = result.text, len(result.conflicts)
                report = conflict_report(result.conflicts)
    try:
        write_text(out_path, text)
    except OSError as exc:
        print(f"structmerge: error: {exc}", file=stderr)
        return EXIT_ERROR
    if report:
        stderr.write(report)
    return EXIT_CONFLICT if n else EXIT_CLEAN


def run_batch(listfile: str, cfg: CliConfig, jobs: int = 1, stderr: TextIO | None = None) -> int:
    """Each non-blank line of ``listfile`` holds ``BASE LEFT RIGHT [OUT]``
    separated by tabs.  Returns the worst status."""
    stderr = stderr or sys.stderr
    try:
        lines = [ln for ln in Path(listfile).read_text(encoding="utf-8").splitlines() if ln.strip()]
    except OSError as exc:
        print(f"structmerge: error: {exc}", file=stderr)
        return EXIT_ERROR
    tasks = []
    for ln in lines:
        parts = ln.split("\t")
        if len(parts) not in (3, 4):
            print(f"structmerge: error: malformed batch line {ln!r}", file=stderr)
            return EXIT_ERROR
        task_cfg = CliConfig(**{**cfg.__dict__, "output": parts[3] if len(parts) == 4 else None})
        tasks.append((parts[0], parts[1], parts[2], task_cfg))

    def one(task):
        return run(*task, stderr=stderr)

    with ThreadPoolExecutor(max_workers=max(1, jobs)) as pool:
        statuses = list(pool.map(one, tasks))
    return max(statuses, default=EXIT_CLEAN)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="structmerge",
        description="Three-way structured merge with line-merge fallback.",
    )
    p.add_argument("base", nargs="?", help="common ancestor (git %%O)")
    p.add_argument("left", nargs="?", help="current version (git %%A); overwritten unless -o")
    p.add_argument("right", nargs="?", help="other version (git %%B)")
    p.add_argument("-o", "--output", help="write the result here instead of over LEFT")
    p.add_argument("--mode", choices=MODES, default="auto")
    p.add_argument("--profile", help="profile name or path to a .profile file")
    p.add_argument("--profile-path", action="append", default=[], metavar="DIR",
                   help="extra directory with .profile files (repeatable)")
    p.add_argument("--marker-size", type=int, default=7, metavar="N")
    p.add_argument("--no-strict-delete-edit", action="store_true",
                   help="drop a deleted node silently even if the other side edited it")
    p.add_argument("--dump-matching", action="store_true", help="print node matchings as TSV on stderr")
    p.add_argument("--verbose", action="store_true")
    p.add_argument("--batch", metavar="LISTFILE", help="merge every triple listed in LISTFILE")
    p.add_argument("--jobs", type=int, default=1, help="parallel merges in batch mode")
    p.add_argument("--path", dest="path_hint", help="real file name, for profile lookup (git %%P)")
    p.add_argument("-L", "--label", action="append", default=[],
                   help="marker labels in the order left, base, right")
    return p


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.marker_size < 3:
        parser.error("--marker-size must be at least 3")
    if len(args.label) > 3:
        parser.error("at most three --label values")
    labels = list(args.label) + ["left", "base", "right"][len(args.label):]
    cfg = CliConfig(
        mode=args.mode,
        profile=args.profile,
        output=args.output,
        marker_size=args.marker_size,
        strict_delete_edit=not args.no_strict_delete_edit,
        profile_paths=args.profile_path,
        path_hint=args.path_hint,
        labels=tuple(labels),
        dump_matching=args.dump_matching,
        verbose=args.verbose,
    )
    if args.batch:
        if args.base or args.output:
            parser.error("--batch takes no positional files and no -o")
        return run_batch(args.batch, cfg, args.jobs)
    if not (args.base and args.left and args.right):
        parser.error("BASE, LEFT and RIGHT are required")
    return run(args.base, args.left, args.right, cfg)


if __name__ == "__main__":
    sys.exit(main())
