"""The modal theories PL, S4, S4.2, S5: axioms, deciders, classification.

Validity is decided semantically against each theory's finite frame class:

* PL (the logic of a single reflexive point): collapse boxes and diamonds to
  their argument and truth-table the result.
* S5 (total-relation clusters): a universal model's truth values depend only
  on the set of letter profiles ("colors") present, so all models up to
  |sub(f)|+1 worlds are covered by sweeping color subsets.
* S4 (finite reflexive transitive frames) and S4.2 (additionally directed):
  exhaustive elimination over the formula's coherent truth-value types.  A
  surviving type assignment yields a refuting model of the right class; if
  none survives the bounded class cannot refute the formula.  For S4.2 the
  elimination is run relative to each realisable final-cluster modal
  pattern, which forces directedness.

Invalid verdicts carry a countermodel found by the canonical search (frame
size ascending, edge sets lexicographic, valuations lexicographic, points
ascending) so reported countermodels are reproducible byte for byte.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from typing import Optional

import numpy as np

from .errors import MixedDirections, SEARCH_BUDGET
from .formula import (
    DOWN,
    UP,
    And,
    Atom,
    Bot,
    Box,
    Dia,
    Direction,
    Formula,
    Iff,
    Imp,
    Not,
    Or,
    Top,
    directions,
    letters as formula_letters,
    subformulas,
)
from .frame import Frame, PointedModel, cluster, single_point
from .semantics import FragmentReport


class Theory(Enum):
    PL = "pl"
    S4 = "s4"
    S4_2 = "s4.2"
    S5 = "s5"


PL, S4, S4_2, S5 = Theory.PL, Theory.S4, Theory.S4_2, Theory.S5

VALID, INVALID, UNKNOWN = "valid", "invalid", "unknown"


@dataclass(frozen=True)
class Verdict:
    status: str
    countermodel: Optional[PointedModel] = None
    reason: str = ""

    @property
    def is_valid(self) -> bool:
        return self.status == VALID

    @property
    def is_invalid(self) -> bool:
        return self.status == INVALID

    @property
    def is_unknown(self) -> bool:
        return self.status == UNKNOWN

    @property
    def world(self) -> Optional[int]:
        return self.countermodel.point if self.countermodel else None


def axioms(t: Theory, dir: Direction = UP) -> list[Formula]:
    """The theory's axiom list as monomodal formulas in the given direction."""
    p, q = Atom("p0"), Atom("p1")
    b = lambda g: Box(dir, g)
    d = lambda g: Dia(dir, g)
    k = Imp(b(Imp(p, q)), Imp(b(p), b(q)))
    t_ax = Imp(b(p), p)
    four = Imp(b(p), b(b(p)))
    if t is Theory.PL:
        return [Iff(b(p), p)]
    if t is Theory.S4:
        return [k, t_ax, four]
    if t is Theory.S4_2:
        return [k, t_ax, four, Imp(d(b(p)), b(d(p)))]
    return [k, t_ax, four, Imp(d(p), b(d(p)))]


def frame_class_check(t: Theory, frame: Frame) -> bool:
    """Does the frame belong to the theory's finite frame class?"""
    props = frame.props
    if t is Theory.PL:
        return frame.n == 1 and props.reflexive
    if t is Theory.S4:
        return props.reflexive and props.transitive
    if t is Theory.S4_2:
        return props.reflexive and props.transitive and props.up_directed
    # S5: every world's successor set is exactly its connected cluster.
    return all(frame.up_masks[w] == frame.cone_mask(w, UP) ==
               frame.cone_mask(w, DOWN) for w in range(frame.n))


# ---------------------------------------------------------------------------
# Orientation and node compilation
# ---------------------------------------------------------------------------

def orient(f: Formula) -> tuple[Formula, Direction]:
    """Normalise a monomodal formula to UP; raises MixedDirections."""
    dirs = directions(f)
    if len(dirs) > 1:
        raise MixedDirections(f"formula uses both directions: {f}")
    if not dirs or UP in dirs:
        return f, (UP if not dirs else UP)
    from .controls import _orient_to
    return _orient_to(f, UP), DOWN


def _compile(f: Formula) -> tuple[list[tuple], int, list[str]]:
    """Postorder-deduplicated node list; returns (nodes, root index, letters).

    Node forms: ("atom", li) ("top",) ("bot",) ("not", i) ("and", i, j)
    ("or", i, j) ("imp", i, j) ("iff", i, j) ("box", i) ("dia", i).
    Direction is erased: callers pass oriented formulas.
    """
    lets = sorted(formula_letters(f))
    lidx = {l: i for i, l in enumerate(lets)}
    nodes: list[tuple] = []
    index: dict[Formula, int] = {}

    def go(g: Formula) -> int:
        hit = index.get(g)
        if hit is not None:
            return hit
        if isinstance(g, Atom):
            node = ("atom", lidx[g.name])
        elif isinstance(g, Top):
            node = ("top",)
        elif isinstance(g, Bot):
            node = ("bot",)
        elif isinstance(g, Not):
            node = ("not", go(g.sub))
        elif isinstance(g, Box):
            node = ("box", go(g.sub))
        elif isinstance(g, Dia):
            node = ("dia", go(g.sub))
        else:
            kind = {And: "and", Or: "or", Imp: "imp", Iff: "iff"}[type(g)]
            node = (kind, go(g.left), go(g.right))
        index[g] = len(nodes)
        nodes.append(node)
        return index[g]

    root = go(f)
    return nodes, root, lets


def _eval_nodes(nodes: list[tuple], succ: tuple[int, ...], n: int,
                letter_masks: list[int]) -> list[int]:
    """Evaluate all nodes over an n-world frame with the given valuation."""
    full = (1 << n) - 1
    vals: list[int] = []
    for node in nodes:
        op = node[0]
        if op == "atom":
            v = letter_masks[node[1]]
        elif op == "top":
            v = full
        elif op == "bot":
            v = 0
        elif op == "not":
            v = full ^ vals[node[1]]
        elif op == "and":
            v = vals[node[1]] & vals[node[2]]
        elif op == "or":
            v = vals[node[1]] | vals[node[2]]
        elif op == "imp":
            v = (full ^ vals[node[1]]) | vals[node[2]]
        elif op == "iff":
            v = full ^ (vals[node[1]] ^ vals[node[2]])
        elif op == "box":
            x = vals[node[1]]
            notx = full ^ x
            v = 0
            for w in range(n):
                if succ[w] & notx == 0:
                    v |= 1 << w
        else:  # dia
            x = vals[node[1]]
            v = 0
            for w in range(n):
                if succ[w] & x:
                    v |= 1 << w
        vals.append(v)
    return vals


# ---------------------------------------------------------------------------
# PL
# ---------------------------------------------------------------------------

def _pl_verdict(f: Formula, want_cm: bool) -> Verdict:
    nodes, root, lets = _compile(f)
    k = len(lets)
    # Boxes and diamonds collapse to their argument on a single reflexive
    # point; letter masks are single-bit.
    for assign in range(1 << k):
        vals: list[int] = []
        for node in nodes:
            op = node[0]
            if op == "atom":
                v = (assign >> node[1]) & 1
            elif op == "top":
                v = 1
            elif op == "bot":
                v = 0
            elif op == "not":
                v = 1 ^ vals[node[1]]
            elif op == "and":
                v = vals[node[1]] & vals[node[2]]
            elif op == "or":
                v = vals[node[1]] | vals[node[2]]
            elif op == "imp":
                v = (1 ^ vals[node[1]]) | vals[node[2]]
            elif op == "iff":
                v = 1 ^ (vals[node[1]] ^ vals[node[2]])
            else:  # box/dia collapse
                v = vals[node[1]]
            vals.append(v)
        if not vals[root]:
            if not want_cm:
                return Verdict(INVALID)
            val = {lets[i]: ((assign >> i) & 1) for i in range(k)}
            cm = PointedModel(single_point(), val, 0)
            return Verdict(INVALID, countermodel=cm)
    return Verdict(VALID)


# ---------------------------------------------------------------------------
# S5
# ---------------------------------------------------------------------------

def _s5_verdict(f: Formula, want_cm: bool) -> Verdict:
    nodes, root, lets = _compile(f)
    k = len(lets)
    ncolors = 1 << k
    bound = min(len(subformulas(f)) + 1, ncolors)
    # A universal model is determined up to duplicate worlds by its set of
    # letter profiles; sweeping color subsets in ascending lexicographic
    # order visits the canonical first countermodel of the full search.
    for n in range(1, bound + 1):
        for colors in itertools.combinations(range(ncolors), n):
            full = (1 << n) - 1
            vals: list[int] = []
            for node in nodes:
                op = node[0]
                if op == "atom":
                    li = node[1]
                    v = sum(1 << i for i, c in enumerate(colors) if (c >> li) & 1)
                elif op == "top":
                    v = full
                elif op == "bot":
                    v = 0
                elif op == "not":
                    v = full ^ vals[node[1]]
                elif op == "and":
                    v = vals[node[1]] & vals[node[2]]
                elif op == "or":
                    v = vals[node[1]] | vals[node[2]]
                elif op == "imp":
                    v = (full ^ vals[node[1]]) | vals[node[2]]
                elif op == "iff":
                    v = full ^ (vals[node[1]] ^ vals[node[2]])
                elif op == "box":
                    v = full if vals[node[1]] == full else 0
                else:  # dia
                    v = full if vals[node[1]] else 0
                vals.append(v)
            res = vals[root]
            if res != full:
                if not want_cm:
                    return Verdict(INVALID)
                point = (((full ^ res) & -(full ^ res)).bit_length()) - 1
                val = {lets[li]: sum(1 << i for i, c in enumerate(colors)
                                     if (c >> li) & 1)
                       for li in range(k)}
                cm = PointedModel(cluster(n), val, point)
                return Verdict(INVALID, countermodel=cm)
    return Verdict(VALID)


# ---------------------------------------------------------------------------
# S4 / S4.2 validity by type elimination
# ---------------------------------------------------------------------------

def _type_space(f: Formula):
    """All coherent truth-value assignments to the subformulas of f.

    Returns (M, boxes, dias, root) where M is a bool matrix (types x nodes),
    boxes/dias list (node index, child index) pairs.  Coherence: Boolean
    connectives are derived; box nodes imply their child (reflexivity), and
    a child implies its diamond.
    """
    nodes, root, lets = _compile(f)
    free = [i for i, nd in enumerate(nodes) if nd[0] in ("atom", "box", "dia")]
    b = len(free)
    if b > 22:
        from .errors import BudgetExceeded
        raise BudgetExceeded(f"type space has 2^{b} candidate rows")
    rows = 1 << b
    bits = np.arange(rows, dtype=np.uint32)
    cols: list[np.ndarray] = [None] * len(nodes)  # type: ignore[list-item]
    for pos, i in enumerate(free):
        cols[i] = ((bits >> pos) & 1).astype(bool)
    for i, nd in enumerate(nodes):
        op = nd[0]
        if op in ("atom", "box", "dia"):
            continue
        if op == "top":
            cols[i] = np.ones(rows, dtype=bool)
        elif op == "bot":
            cols[i] = np.zeros(rows, dtype=bool)
        elif op == "not":
            cols[i] = ~cols[nd[1]]
        elif op == "and":
            cols[i] = cols[nd[1]] & cols[nd[2]]
        elif op == "or":
            cols[i] = cols[nd[1]] | cols[nd[2]]
        elif op == "imp":
            cols[i] = ~cols[nd[1]] | cols[nd[2]]
        else:
            cols[i] = cols[nd[1]] == cols[nd[2]]
    M = np.column_stack(cols) if nodes else np.zeros((rows, 0), dtype=bool)
    boxes = [(i, nd[1]) for i, nd in enumerate(nodes) if nd[0] == "box"]
    dias = [(i, nd[1]) for i, nd in enumerate(nodes) if nd[0] == "dia"]
    ok = np.ones(rows, dtype=bool)
    for i, c in boxes:
        ok &= ~M[:, i] | M[:, c]
    for i, c in dias:
        ok &= ~M[:, c] | M[:, i]
    return M[ok], boxes, dias, root


def _succ_matrix(M: np.ndarray, boxes, dias) -> np.ndarray:
    """succ[t, s]: s is a coherent one-step successor type of t (boxes
    persist forward, diamonds persist backward)."""
    r = M.shape[0]
    succ = np.ones((r, r), dtype=bool)
    for i, _ in boxes:
        col = M[:, i]
        succ &= ~col[:, None] | col[None, :]
    for i, _ in dias:
        col = M[:, i]
        succ &= ~col[None, :] | col[:, None]
    return succ


def _eliminate(M: np.ndarray, boxes, dias, succ: np.ndarray,
               alive: np.ndarray) -> np.ndarray:
    """Remove types whose box/diamond requirements lack surviving witnesses."""
    alive = alive.copy()
    while True:
        changed = False
        for i, c in boxes:
            need = alive & ~M[:, i]
            if not need.any():
                continue
            wit = succ @ (alive & ~M[:, c])
            kill = need & ~wit
            if kill.any():
                alive &= ~kill
                changed = True
        for i, c in dias:
            need = alive & M[:, i]
            if not need.any():
                continue
            wit = succ @ (alive & M[:, c])
            kill = need & ~wit
            if kill.any():
                alive &= ~kill
                changed = True
        if not changed:
            return alive


def _s4_invalid(f: Formula) -> bool:
    """True iff some finite reflexive transitive model refutes f."""
    M, boxes, dias, root = _type_space(f)
    if M.shape[0] == 0:
        return False
    succ = _succ_matrix(M, boxes, dias)
    alive = _eliminate(M, boxes, dias, succ, np.ones(M.shape[0], dtype=bool))
    return bool((alive & ~M[:, root]).any())


def _s42_invalid(f: Formula) -> bool:
    """True iff some finite reflexive transitive directed model refutes f.

    Every such model has a unique final cluster whose worlds share one modal
    pattern; the elimination is run over the types compatible with each
    realisable pattern, with the pattern's own types as the always-available
    final cluster.
    """
    M, boxes, dias, root = _type_space(f)
    if M.shape[0] == 0:
        return False
    modal_cols = [i for i, _ in boxes] + [i for i, _ in dias]
    if not modal_cols:
        return bool((~M[:, root]).any())
    patterns = np.unique(M[:, modal_cols], axis=0)
    succ_full = _succ_matrix(M, boxes, dias)
    box_cols = [i for i, _ in boxes]
    dia_cols = [i for i, _ in dias]
    for beta in patterns:
        beta_box = beta[: len(box_cols)]
        beta_dia = beta[len(box_cols):]
        in_w = np.ones(M.shape[0], dtype=bool)
        for pos, i in enumerate(modal_cols):
            in_w &= M[:, i] == beta[pos]
        # Cluster coverage: unforced requirements need witnesses inside it.
        ok = True
        for pos, (i, c) in enumerate(boxes):
            if not beta_box[pos] and not (in_w & ~M[:, c]).any():
                ok = False
                break
        if ok:
            for pos, (i, c) in enumerate(dias):
                if beta_dia[pos] and not (in_w & M[:, c]).any():
                    ok = False
                    break
        if not ok:
            continue
        eligible = np.ones(M.shape[0], dtype=bool)
        for pos, i in enumerate(box_cols):
            if not beta_box[pos]:
                eligible &= ~M[:, i]
        for pos, i in enumerate(dia_cols):
            if beta_dia[pos]:
                eligible &= M[:, i]
        alive = _eliminate(M, boxes, dias, succ_full, eligible)
        if (alive & ~M[:, root]).any():
            return True
    return False


# ---------------------------------------------------------------------------
# Canonical countermodel search for S4 / S4.2
# ---------------------------------------------------------------------------

_MAX_SEARCH_WORLDS = 5


@lru_cache(maxsize=None)
def _rt_frames(n: int) -> tuple[tuple[tuple[int, ...], bool], ...]:
    """All reflexive transitive frames on n worlds as adjacency-mask rows,
    ascending in the row-major edge bitmap, paired with their cone
    directedness flag."""
    if n == 1:
        return (((1,), True),)
    out = []
    offdiag = [(i, j) for i in range(n) for j in range(n) if i != j]
    for combo in range(1 << len(offdiag)):
        rows = [1 << i for i in range(n)]
        for b, (i, j) in enumerate(offdiag):
            if (combo >> b) & 1:
                rows[i] |= 1 << j
        transitive = True
        for i in range(n):
            reach = 0
            m = rows[i]
            while m:
                low = m & -m
                reach |= rows[low.bit_length() - 1]
                m ^= low
            if reach & ~rows[i]:
                transitive = False
                break
        if not transitive:
            continue
        frame = Frame(n, tuple(rows))
        out.append((tuple(rows), frame.props.up_directed))
    out.sort(key=lambda item: _edge_bitmap(item[0]))
    return tuple(out)


def _edge_bitmap(rows: tuple[int, ...]) -> int:
    n = len(rows)
    bitmap = 0
    for i, row in enumerate(rows):
        for j in range(n):
            if (row >> j) & 1:
                bitmap |= 1 << (i * n + j)
    return bitmap


def _search_countermodel(f: Formula, directed_only: bool,
                         budget: int) -> tuple[Optional[PointedModel], bool]:
    """Canonical search: frame size ascending, edge bitmaps lexicographic,
    valuations lexicographic (letter-major masks), points ascending.
    Returns (countermodel or None, budget_exhausted)."""
    nodes, root, lets = _compile(f)
    k = len(lets)
    used = 0
    for n in range(1, _MAX_SEARCH_WORLDS + 1):
        for rows, directed in _rt_frames(n):
            if directed_only and not directed:
                continue
            full = (1 << n) - 1
            for v in range(1 << (k * n)):
                used += 1
                if used > budget:
                    return None, True
                masks = [(v >> (i * n)) & full for i in range(k)]
                vals = _eval_nodes(nodes, rows, n, masks)
                res = vals[root]
                if res != full:
                    point = ((full ^ res) & -(full ^ res)).bit_length() - 1
                    frame = Frame(n, rows)
                    valuation = {lets[i]: masks[i] for i in range(k)}
                    return PointedModel(frame, valuation, point), False
    return None, True


# ---------------------------------------------------------------------------
# decide / classify
# ---------------------------------------------------------------------------

def decide(t: Theory, f: Formula, budget: int = SEARCH_BUDGET,
           want_countermodel: bool = True) -> Verdict:
    """Sound and complete validity verdict over the theory's finite frame
    class, with a canonical countermodel on Invalid.  Unknown is returned
    only when a countermodel is requested but not found within the search
    budget."""
    return _decide_cached(t, f, budget, want_countermodel)


@lru_cache(maxsize=1 << 20)
def _decide_cached(t: Theory, f: Formula, budget: int,
                   want_countermodel: bool) -> Verdict:
    g, _ = orient(f)
    if t is Theory.PL:
        return _pl_verdict(g, want_countermodel)
    if t is Theory.S5:
        return _s5_verdict(g, want_countermodel)
    if t is Theory.S4:
        invalid = _s4_invalid(g)
        directed_only = False
    else:
        # S4 ⊆ S4.2 ⊆ S5 cuts both eliminations short on most formulas.
        if _s5_verdict(g, False).is_invalid:
            invalid = True
        elif not _s4_invalid(g):
            invalid = False
        else:
            invalid = _s42_invalid(g)
        directed_only = True
    if not invalid:
        return Verdict(VALID)
    if not want_countermodel:
        return Verdict(INVALID)
    cm, exhausted = _search_countermodel(g, directed_only, budget)
    if cm is None:
        return Verdict(UNKNOWN, reason="refutable, but no countermodel within "
                                       f"{_MAX_SEARCH_WORLDS} worlds / {budget} models")
    return Verdict(INVALID, countermodel=cm)


@lru_cache(maxsize=1 << 20)
def is_valid(t: Theory, f: Formula) -> bool:
    return decide(t, f, want_countermodel=False).is_valid


@dataclass
class ClassificationResult:
    matches: set[Theory]
    separators: dict[Theory, Formula]
    compared: int
    excluded: int

    def matches_label(self) -> str:
        return ",".join(sorted(t.value for t in self.matches)) or "none"


def classify(report: FragmentReport) -> ClassificationResult:
    """Compare the fragment against each theory: a theory matches when ml
    membership equals the theory verdict on every enumerated formula whose
    membership was resolved; unresolved formulas are excluded and counted."""
    separators: dict[Theory, Formula] = {}
    matches = set(Theory)
    excluded = 0
    compared = 0
    for f in report.formulas:
        status = report.status[f]
        if status is None:
            excluded += 1
            continue
        compared += 1
        for t in Theory:
            if t in separators:
                continue
            if is_valid(t, f) != status:
                separators[t] = f
                matches.discard(t)
    return ClassificationResult(matches, separators, compared, excluded)
