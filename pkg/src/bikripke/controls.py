"""Button and switch control statements.

A button (for a direction) is a statement that is necessarily possibly
necessary; it is pushed at a world when its necessitation already holds.  A
switch is a statement that together with its negation stays possible from
every reachable world.  An independent family can drive the pushed-set and
switch pattern to any legal target configuration from any reachable world;
the independence certificate materialises that witness table.

On a finite frame with a dead-end fringe (the empty set of a subset lattice,
the full set at its top) no strict switch exists: the fringe world cannot
toggle anything.  Certificates therefore carry an optional horizon: the
witness table is checked for reachable worlds within that many cover steps
of the point, and the horizon is recorded.  A horizon of None is the strict
reading.  Every substitution produced from a certificate is verified by a
direct model check before it is returned, so a truncated certificate can
never smuggle in an unsound refutation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Optional, Union

from .errors import BudgetExceeded, InsufficientControls, VerificationFailed
from .formula import (
    UP,
    And,
    Atom,
    Bot,
    Box,
    Dia,
    Direction,
    Not,
    Or,
    Top,
    enumerate_formulas,
    letters as formula_letters,
    substitute,
)
from .frame import PointedModel, WorldSet
from .semantics import eval_mask, holds_at


def is_button(m: PointedModel, w: int, f: Formula, dir: Direction) -> bool:
    """Necessarily possibly necessary at w, oriented along dir."""
    return holds_at(m, w, Box(dir, Dia(dir, Box(dir, f))))


def is_pushed(m: PointedModel, w: int, f: Formula, dir: Direction) -> bool:
    """The button's necessitation holds at w."""
    return holds_at(m, w, Box(dir, f))


def is_switch(m: PointedModel, w: int, f: Formula, dir: Direction) -> bool:
    """f and ~f are both necessarily possible at w."""
    return holds_at(m, w, Box(dir, And(Dia(dir, f), Dia(dir, Not(f)))))


@dataclass(frozen=True)
class ControlFamily:
    """Buttons and switches for one direction on a base model."""

    direction: Direction
    buttons: tuple[Formula, ...]
    switches: tuple[Formula, ...]
    base: PointedModel
    horizon: Optional[int] = None   # cover-step horizon it was certified at


@dataclass
class FailureWitness:
    """Why a family is not independent: either a control condition fails at
    a world, or a target configuration is unrealisable from a world."""

    world: int
    reason: str
    target: Optional[tuple[int, int]] = None   # (button mask, switch pattern)


@dataclass
class IndependenceCertificate:
    """Witness table: for each in-scope reachable world u and each target
    (B' ⊇ pushed(u), switch pattern T), a successor of u realising exactly
    that configuration."""

    family: ControlFamily
    horizon: Optional[int]
    point_pattern: int
    pushed_at: dict[int, int] = field(default_factory=dict)
    pattern_at: dict[int, int] = field(default_factory=dict)
    table: dict[int, dict[tuple[int, int], int]] = field(default_factory=dict)


def _cover_depths(m: PointedModel, dir: Direction) -> dict[int, int]:
    """BFS depth of every reachable world over the cover (transitive
    reduction) edges of the direction's relation."""
    n = m.frame.n
    succ = m.frame.masks(dir)
    pred = m.frame.masks(dir.converse)
    cone = m.frame.cone_mask(m.point, dir)
    depth = {m.point: 0}
    frontier = [m.point]
    while frontier:
        nxt = []
        for u in frontier:
            row = succ[u] & cone & ~(1 << u)
            for v in WorldSet(n, row):
                if v in depth:
                    continue
                mid = succ[u] & pred[v] & ~(1 << u) & ~(1 << v)
                if mid:
                    continue   # not a cover edge
                depth[v] = depth[u] + 1
                nxt.append(v)
        frontier = nxt
    return depth


def check_independent(m: PointedModel, family: ControlFamily,
                      horizon: Optional[int] = None
                      ) -> Union[IndependenceCertificate, FailureWitness]:
    """Exhaustively verify the control conditions and the witness table over
    the reachable cone (restricted to the horizon when one is given)."""
    dir = family.direction
    n = m.frame.n
    point = m.point
    cone_mask = m.frame.cone_mask(point, dir)
    if horizon is None:
        scope = sorted(WorldSet(n, cone_mask))
    else:
        depths = _cover_depths(m, dir)
        scope = sorted(u for u, d in depths.items() if d <= horizon)

    nb = len(family.buttons)
    ns = len(family.switches)
    if (len(scope) * (1 << nb) * (1 << ns)) > 2 ** 22:
        raise BudgetExceeded("independence table too large")

    for b in family.buttons:
        if not is_button(m, point, b, dir):
            return FailureWitness(point, f"not a button: {b}")
        if is_pushed(m, point, b, dir):
            return FailureWitness(point, f"button already pushed: {b}")
    for s in family.switches:
        sm = eval_mask(m, And(Dia(dir, s), Dia(dir, Not(s))))
        for u in scope:
            if not (sm >> u) & 1:
                return FailureWitness(u, f"not a switch at world {u}: {s}")

    pushed_sets = [eval_mask(m, Box(dir, b)) for b in family.buttons]
    switch_sets = [eval_mask(m, s) for s in family.switches]

    def pushed(u: int) -> int:
        return sum(1 << i for i, pm in enumerate(pushed_sets) if (pm >> u) & 1)

    def pattern(u: int) -> int:
        return sum(1 << j for j, sm in enumerate(switch_sets) if (sm >> u) & 1)

    # Configuration classes over the full cone; witnesses may lie anywhere.
    config: dict[tuple[int, int], int] = {}
    for u in WorldSet(n, cone_mask):
        config.setdefault((pushed(u), pattern(u)), 0)
        config[(pushed(u), pattern(u))] |= 1 << u

    succ = m.frame.masks(dir)
    cert = IndependenceCertificate(
        family, horizon, point_pattern=pattern(point))
    all_buttons = (1 << nb) - 1
    for u in scope:
        cert.pushed_at[u] = pushed(u)
        cert.pattern_at[u] = pattern(u)
        row: dict[tuple[int, int], int] = {}
        base = pushed(u)
        extra = all_buttons & ~base
        sub = extra
        targets_b = [base]
        while sub:
            targets_b.append(base | sub)
            sub = (sub - 1) & extra
        for bt in sorted(targets_b):
            for t in range(1 << ns):
                candidates = config.get((bt, t), 0) & succ[u]
                if not candidates:
                    return FailureWitness(u, "target unrealisable", (bt, t))
                row[(bt, t)] = (candidates & -candidates).bit_length() - 1
        cert.table[u] = row
    return cert


# ---------------------------------------------------------------------------
# Family search
# ---------------------------------------------------------------------------

def _candidates(m: PointedModel, dir: Direction, compound_size: int = 3,
                cap: int = 48) -> list[Formula]:
    """Deterministic candidate stream: valuation letters first, then compound
    shapes from the canonical enumeration instantiated over the letters."""
    out: list[Formula] = [Atom(l) for l in m.letters()]
    seen = set(out)
    if compound_size >= 2:
        for shape in enumerate_formulas(1, compound_size, {dir}):
            if len(out) >= cap:
                break
            if "p0" not in formula_letters(shape):
                continue
            for l in m.letters():
                cand = substitute(shape, {"p0": Atom(l)})
                if cand not in seen:
                    seen.add(cand)
                    out.append(cand)
                if len(out) >= cap:
                    break
    return out


def find_family(m: PointedModel, w: int, dir: Direction,
                m_count: int, n_count: int,
                horizon: Optional[int] = None,
                compound_size: int = 3) -> Optional[ControlFamily]:
    """First certified-independent family of the requested shape, searching
    valuation letters first and then small compounds in canonical order."""
    cands = _candidates(m, dir, compound_size)
    base = PointedModel(m.frame, m.valuation, w) if w != m.point else m

    sw_mask_cache: dict[Formula, int] = {}

    def switch_everywhere(c: Formula) -> int:
        if c not in sw_mask_cache:
            sw_mask_cache[c] = eval_mask(m, And(Dia(dir, c), Dia(dir, Not(c))))
        return sw_mask_cache[c]

    if horizon is None:
        scope = sorted(WorldSet(m.frame.n, m.frame.cone_mask(w, dir)))
    else:
        depths = _cover_depths(base, dir)
        scope = sorted(u for u, d in depths.items() if d <= horizon)

    buttons = [c for c in cands
               if is_button(m, w, c, dir) and not is_pushed(m, w, c, dir)]
    switches = [c for c in cands
                if all((switch_everywhere(c) >> u) & 1 for u in scope)]
    if len(buttons) < m_count or len(switches) < n_count:
        return None
    for bs in itertools.combinations(buttons[:10], m_count):
        for ss in itertools.combinations(switches[:10], n_count):
            fam = ControlFamily(dir, tuple(bs), tuple(ss), base, horizon)
            cert = check_independent(base, fam, horizon)
            if isinstance(cert, IndependenceCertificate):
                return fam
    return None


# ---------------------------------------------------------------------------
# Countermodel simulation
# ---------------------------------------------------------------------------

def _generated_submodel(cm: PointedModel) -> PointedModel:
    """Restrict cm to the up-cone of its point, reindexing worlds."""
    n = cm.frame.n
    cone = cm.frame.cone_mask(cm.point, UP)
    keep = sorted(WorldSet(n, cone))
    if len(keep) == n:
        return cm
    remap = {w: i for i, w in enumerate(keep)}

    def squash(mask: int) -> int:
        out = 0
        for w in keep:
            if (mask >> w) & 1:
                out |= 1 << remap[w]
        return out

    from .frame import Frame
    frame = Frame(len(keep), tuple(squash(cm.frame.up_masks[w]) for w in keep),
                  cm.frame.name)
    val = {l: squash(mk) for l, mk in cm.valuation.items()}
    return PointedModel(frame, val, remap[cm.point])


def _clusters(cm: PointedModel) -> tuple[list[int], list[int], list[list[int]]]:
    """Mutual-reachability clusters: returns (cluster id per world, topological
    order of cluster ids from the root upward, members per cluster)."""
    n = cm.frame.n
    cones = [cm.frame.cone_mask(w, UP) for w in range(n)]
    cluster_of = [-1] * n
    members: list[list[int]] = []
    for w in range(n):
        if cluster_of[w] >= 0:
            continue
        cid = len(members)
        group = [v for v in range(n)
                 if (cones[w] >> v) & 1 and (cones[v] >> w) & 1]
        for v in group:
            cluster_of[v] = cid
        members.append(sorted(group))
    # Larger cones mean lower clusters; the root (point) has the largest.
    order = sorted(range(len(members)),
                   key=lambda c: -bin(cones[members[c][0]]).count("1"))
    return cluster_of, order, members


def simulate_countermodel(cert: IndependenceCertificate, f: Formula,
                          cm: PointedModel) -> dict[str, Formula]:
    """Convert a finite countermodel into a refuting substitution over the
    certificate's controls; the result is verified by a direct model check
    before it is returned.

    cm refutes the up-oriented f at its point on a reflexive, transitive,
    directed frame.  Non-root clusters are encoded by pushed-prefix formulas
    over the buttons (one button per cluster along the chain), worlds within
    a cluster by switch patterns, surjectively so that every reachable
    configuration of the controls reads back as some cm world.
    """
    fam = cert.family
    d = fam.direction
    base = fam.base
    cmg = _generated_submodel(cm)
    fd = _orient_to(f, d)
    f_up = _orient_to(f, UP)
    if holds_at(cmg, cmg.point, f_up):
        raise VerificationFailed("cm does not refute f at its point")

    cluster_of, order, members = _clusters(cmg)
    r = len(order) - 1                      # non-root clusters
    if r > len(fam.buttons):
        raise InsufficientControls(
            f"{r} non-root clusters need {r} buttons, family has {len(fam.buttons)}")
    max_cluster = max(len(ms) for ms in members)
    if max_cluster > 1 << len(fam.switches):
        raise InsufficientControls(
            f"cluster of {max_cluster} worlds needs "
            f"{max(1, (max_cluster - 1).bit_length())} switches, "
            f"family has {len(fam.switches)}")
    # The chain encoding needs a linear cluster order.
    cones = [cmg.frame.cone_mask(w, UP) for w in range(cmg.frame.n)]
    for a, b in itertools.combinations(order, 2):
        wa, wb = members[a][0], members[b][0]
        if not ((cones[wa] >> wb) & 1 or (cones[wb] >> wa) & 1):
            raise InsufficientControls("cluster poset is not a chain")

    level_of = {cid: lvl for lvl, cid in enumerate(order)}

    def pushed_formula(i: int) -> Formula:
        return Box(d, fam.buttons[i])

    def level_formula(lvl: int) -> Formula:
        parts: list[Formula] = [pushed_formula(i) for i in range(lvl)]
        if lvl < r:
            parts.append(Not(pushed_formula(lvl)))
        return _conj(parts)

    ns = len(fam.switches)
    npat = 1 << ns

    def pattern_formula(t: int) -> Formula:
        parts = [fam.switches[j] if (t >> j) & 1 else Not(fam.switches[j])
                 for j in range(ns)]
        return _conj(parts)

    # Assign each world a set of switch patterns, surjectively per cluster;
    # the root world's class contains the point's current pattern.
    patterns_of: dict[int, list[int]] = {}
    for cid, ms in enumerate(members):
        ordered = list(ms)
        if cid == cluster_of[cmg.point]:
            ordered.remove(cmg.point)
            ordered.insert(0, cmg.point)
            offset = cert.point_pattern
        else:
            offset = 0
        for idx, u in enumerate(ordered):
            patterns_of[u] = [t for t in range(npat)
                              if ((t - offset) % npat) % len(ordered) == idx]

    def world_formula(u: int) -> Formula:
        lvl = level_of[cluster_of[u]]
        pats = _disj([pattern_formula(t) for t in patterns_of[u]])
        return And(level_formula(lvl), pats) if ns else level_formula(lvl)

    sigma: dict[str, Formula] = {}
    for p in sorted(formula_letters(f)):
        pm = eval_mask(cmg, Atom(p))
        worlds = [u for u in range(cmg.frame.n) if (pm >> u) & 1]
        sigma[p] = _disj([world_formula(u) for u in worlds])

    instance = substitute(fd, sigma)
    if holds_at(base, base.point, instance):
        raise VerificationFailed(
            f"substitution does not refute {f} at the point")
    return sigma


def _conj(parts: list[Formula]) -> Formula:
    if not parts:
        return Top()
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def _disj(parts: list[Formula]) -> Formula:
    if not parts:
        return Bot()
    out = parts[0]
    for p in parts[1:]:
        out = Or(out, p)
    return out


def _orient_to(f: Formula, d: Direction) -> Formula:
    """Rewrite every modal operator of the monomodal f to direction d."""
    if isinstance(f, (Atom, Top, Bot)):
        return f
    if isinstance(f, Not):
        return Not(_orient_to(f.sub, d))
    if isinstance(f, Box):
        return Box(d, _orient_to(f.sub, d))
    if isinstance(f, Dia):
        return Dia(d, _orient_to(f.sub, d))
    return type(f)(_orient_to(f.left, d), _orient_to(f.right, d))
