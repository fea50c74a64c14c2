import random
import re

import pytest

from structmerge.cli import structured_merge
from structmerge.cst import Origin
from structmerge.langconfig import bundled_profile
from structmerge.matching import MatchingStore, match_trees
from structmerge.merge import MergeOptions
from structmerge.parser import ParseError, parse_minilang
from structmerge.render import RenderError, RenderOptions, normalize, render, render_tree

from fixtures import MODIFIERS, OVERLOADS, STOPWATCH
from gen import random_triple

MINI = bundled_profile("minilang")


def test_untouched_tree_round_trips():
    for src in MODIFIERS + OVERLOADS:
        assert render_tree(parse_minilang(src)) == src


def test_modifiers_header_has_both_modifiers():
    res = structured_merge(*MODIFIERS, MINI)
    assert res.text == MODIFIERS[0].replace("    int debit", "    public static int debit")


def test_conflict_block_layout():
    res = structured_merge(*STOPWATCH, MINI)
    assert (
        "public class Stopwatch {\n"
        "<<<<<<< left\n"
        "    private double timeElapsed;\n"
        "||||||| base\n"
        "    private long timeElapsed;\n"
        "=======\n"
        ">>>>>>> right\n"
        "    private int laps;\n"
    ) in res.text


def test_marker_options():
    opts = RenderOptions(marker_size=9, left_label="ours", base_label="anc", right_label="theirs",
                         show_base_in_conflicts=False)
    res = structured_merge(*STOPWATCH, MINI, render_opts=opts)
    lines = res.text.splitlines()
    assert "<<<<<<<<< ours" in lines and "=========" in lines and ">>>>>>>>> theirs" in lines
    assert not any(ln.startswith("|||") for ln in lines)


def test_marker_size_must_be_at_least_three():
    with pytest.raises(ValueError):
        RenderOptions(marker_size=2)


def test_markers_are_exact_runs():
    res = structured_merge(*OVERLOADS, MINI)
    markers = [ln for ln in res.text.splitlines() if re.match(r"^([<|=>])\1{2,}", ln)]
    assert markers
    for ln in markers:
        run = re.match(r"^([<|=>])\1*", ln).group()
        assert len(run) == 7
    # blocks are complete and in order
    seq = "".join(ln[0] for ln in markers)
    assert re.fullmatch(r"(<\|=>)+", seq)


def test_crlf_is_preserved_in_conflicts():
    base, left, right = (s.replace("\n", "\r\n") for s in STOPWATCH)
    res = structured_merge(base, left, right, MINI)
    assert "\r\n" in res.text
    assert "\n" not in res.text.replace("\r\n", "")


def test_missing_revision_source():
    res = structured_merge(*STOPWATCH, MINI)
    with pytest.raises(RenderError):
        render(res.merged, {Origin.BASE: res.merged.revisions[Origin.BASE]})


def test_normalize_is_idempotent_and_whitespace_blind():
    left = MODIFIERS[1]
    squashed = " ".join(left.split())
    reindented = "\n".join("\t" + ln.strip() for ln in left.splitlines())
    n = normalize(left, MINI)
    assert normalize(n, MINI) == n
    assert normalize(squashed, MINI) == n == normalize(reindented, MINI)


def test_normalize_shape():
    out = normalize("import a.b;class A{int x;void f(){g( 1 );}}", MINI)
    assert out == (
        "import a . b ;\n"
        "class A {\n"
        "  int x ;\n"
        "  void f ( ) {\n"
        "    g ( 1 ) ;\n"
        "  }\n"
        "}\n"
    )


def test_normalize_drops_comments():
    assert normalize("class A { // c\n int x; }", MINI) == normalize("class A { int x; }", MINI)


def test_normalize_rejects_bad_input():
    with pytest.raises(ParseError):
        normalize("class {", MINI)


def test_clean_outputs_reparse_to_the_merged_tree():
    rng = random.Random(11)
    checked = 0
    for _ in range(80):
        res = structured_merge(*random_triple(rng), MINI, MergeOptions())
        if res.conflicts:
            continue
        merged = res.merged.root.as_node()
        reparsed = parse_minilang(res.text).root
        score = match_trees(merged, reparsed, MatchingStore())
        assert score == merged.size == reparsed.size
        checked += 1
    assert checked > 40
