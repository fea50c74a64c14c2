"""Unstructured three-way line merge (diff3).

Lines are compared exactly.  Base is aligned with each side through a
longest common subsequence; base lines kept by both sides in step are
stable, and everything between two stable lines forms one chunk.  A chunk
changed on one side takes that side, identical changes collapse, and
anything else becomes a conflict block.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

from .render import RenderOptions, newline_of


@dataclass(frozen=True)
class LineConflict:
    base_line: int  # 1-based first line of the base chunk (insertion point if empty)
    base: tuple[str, ...]
    left: tuple[str, ...]
    right: tuple[str, ...]


@dataclass
class LineMergeResult:
    text: str
    conflict_count: int
    conflicts: list[LineConflict] = field(default_factory=list)

    @property
    def clean(self) -> bool:
        return self.conflict_count == 0


def lcs_pairs(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int]]:
    """Index pairs of one longest common subsequence of ``a`` and ``b``."""
    n, m = len(a), len(b)
    pre = 0
    while pre < n and pre < m and a[pre] == b[pre]:
        pre += 1
    suf = 0
    while suf < n - pre and suf < m - pre and a[n - 1 - suf] == b[m - 1 - suf]:
        suf += 1
    mid_a = a[pre:n - suf]
    mid_b = b[pre:m - suf]
    pairs = [(i, i) for i in range(pre)]
    pairs.extend((i + pre, j + pre) for i, j in _lcs_dp(mid_a, mid_b))
    pairs.extend((n - suf + k, m - suf + k) for k in range(suf))
    return pairs


def _lcs_dp(a: Sequence[str], b: Sequence[str]) -> list[tuple[int, int]]:
    n, m = len(a), len(b)
    if n == 0 or m == 0:
        return []
    # intern lines so the inner loop compares ints
    ids: dict[str, int] = {}
    ai = [ids.setdefault(x, len(ids)) for x in a]
    bi = [ids.setdefault(x, len(ids)) for x in b]
    # suffix table: dp[i][j] = LCS length of a[i:], b[j:]
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for i in range(n - 1, -1, -1):
        row, below = dp[i], dp[i + 1]
        x = ai[i]
        for j in range(m - 1, -1, -1):
            if x == bi[j]:
                row[j] = below[j + 1] + 1
            else:
                r, d = row[j + 1], below[j]
                row[j] = r if r > d else d
    pairs = []
    i = j = 0
    while i < n and j < m:
        if ai[i] == bi[j]:
            pairs.append((i, j))
            i += 1
            j += 1
        elif dp[i + 1][j] >= dp[i][j + 1]:
            i += 1
        else:
            j += 1
    return pairs


def _split(text: str) -> list[str]:
    return text.splitlines(keepends=True)


def diff3_chunks(base: list[str], left: list[str], right: list[str]):
    """Yield ``(stable, b_range, l_range, r_range)`` chunks in order."""
    ml = dict(lcs_pairs(base, left))
    mr = dict(lcs_pairs(base, right))
    i = jl = jr = 0
    n = len(base)
    while True:
        k = i
        while k < n and not (k in ml and k in mr and ml[k] >= jl and mr[k] >= jr):
            k += 1
        if k == i and k < n and ml[k] == jl and mr[k] == jr:
            # run of stable lines
            e = k
            while e < n and ml.get(e) == jl + (e - k) and mr.get(e) == jr + (e - k):
                e += 1
            yield True, (k, e), (jl, jl + e - k), (jr, jr + e - k)
            jl += e - k
            jr += e - k
            i = e
            continue
        if k >= n:
            end_l, end_r = len(left), len(right)
        else:
            end_l, end_r = ml[k], mr[k]
        if i < k or jl < end_l or jr < end_r:
            yield False, (i, k), (jl, end_l), (jr, end_r)
        if k >= n:
            return
        i, jl, jr = k, end_l, end_r


def diff3_merge(base: str, left: str, right: str, opts: RenderOptions = RenderOptions()) -> LineMergeResult:
    b, l, r = _split(base), _split(left), _split(right)
    nl = newline_of(base)
    out: list[str] = []
    conflicts: list[LineConflict] = []
    size = opts.marker_size

    def block(lines: list[str]) -> None:
        for line in lines:
            out.append(line)
        if lines and not lines[-1].endswith("\n"):
            out.append(nl)

    for stable, (b0, b1), (l0, l1), (r0, r1) in diff3_chunks(b, l, r):
        bs, ls, rs = b[b0:b1], l[l0:l1], r[r0:r1]
        if stable:
            out.extend(ls)
        elif ls == bs:
            out.extend(rs)
        elif rs == bs or ls == rs:
            out.extend(ls)
        else:
            conflicts.append(LineConflict(b0 + 1, tuple(bs), tuple(ls), tuple(rs)))
            if out and not out[-1].endswith("\n"):
                out.append(nl)
            out.append("<" * size + " " + opts.left_label + nl)
            block(ls)
            if opts.show_base_in_conflicts:
                out.append("|" * size + " " + opts.base_label + nl)
                block(bs)
            out.append("=" * size + nl)
            block(rs)
            out.append(">" * size + " " + opts.right_label + nl)
    return LineMergeResult("".join(out), len(conflicts), conflicts)
