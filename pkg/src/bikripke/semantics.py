"""Kripke model checking and substitution-closed modal fragments.

The extension of a formula is computed bottom-up over bitmask world sets.
The definable algebra of a model is the least family of world sets containing
the valuation sets (plus the empty and full sets) closed under complement,
intersection and both box preimages; on a finite model this equals the family
of unions of two-way bisimulation classes, which is how it is computed here.

Membership in the substitution-closed fragment ml(m, f) quantifies the
letters of f over the definable algebra.  When the algebra fits the budget
the quantification is swept exactly (vectorised over assignments); otherwise
membership is resolved by certified reasoning: validity over the frame's
class implies membership, and a model-checked refuting substitution (built
from a certified control family, or from a small probe set) disproves it.
Queries that neither route resolves raise BudgetExceeded rather than guess.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

import numpy as np

from .errors import ALGEBRA_BUDGET, ASSIGNMENT_BUDGET, BadWorldIndex, BudgetExceeded
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
    enumerate_formulas,
    letters as formula_letters,
    polarity,
    substitute,
)
from .frame import Frame, PointedModel, WorldSet


# ---------------------------------------------------------------------------
# Core evaluation
# ---------------------------------------------------------------------------

def eval_mask(m: PointedModel, f: Formula,
              env: dict[str, int] | None = None,
              memo: dict[Formula, int] | None = None) -> int:
    """Extension of f as a bitmask.  env overrides the model valuation."""
    n = m.frame.n
    full = (1 << n) - 1
    if memo is None:
        memo = {}
    valuation = m.valuation if env is None else env

    def go(g: Formula) -> int:
        hit = memo.get(g)
        if hit is not None:
            return hit
        if isinstance(g, Atom):
            out = valuation.get(g.name, 0)
        elif isinstance(g, Top):
            out = full
        elif isinstance(g, Bot):
            out = 0
        elif isinstance(g, Not):
            out = full ^ go(g.sub)
        elif isinstance(g, And):
            out = go(g.left) & go(g.right)
        elif isinstance(g, Or):
            out = go(g.left) | go(g.right)
        elif isinstance(g, Imp):
            out = (full ^ go(g.left)) | go(g.right)
        elif isinstance(g, Iff):
            out = full ^ (go(g.left) ^ go(g.right))
        elif isinstance(g, Box):
            out = _box_mask(m.frame, g.dir, go(g.sub))
        elif isinstance(g, Dia):
            out = full ^ _box_mask(m.frame, g.dir, full ^ go(g.sub))
        else:  # pragma: no cover
            raise TypeError(f"not a formula: {g!r}")
        memo[g] = out
        return out

    return go(f)


def _box_mask(frame: Frame, dir: Direction, x: int) -> int:
    masks = frame.masks(dir)
    notx = ((1 << frame.n) - 1) ^ x
    out = 0
    for w in range(frame.n):
        if masks[w] & notx == 0:
            out |= 1 << w
    return out


def eval_formula(m: PointedModel, f: Formula) -> WorldSet:
    """Set of worlds where f holds, by bottom-up extension computation."""
    return WorldSet(m.frame.n, eval_mask(m, f))


evaluate = eval_formula


def holds_at(m: PointedModel, w: int, f: Formula) -> bool:
    """True iff f holds at world w."""
    if not 0 <= w < m.frame.n:
        raise BadWorldIndex(f"world {w} out of range for {m.frame.n} worlds")
    return (eval_mask(m, f) >> w) & 1 == 1


def valid_on(m: PointedModel, f: Formula) -> bool:
    """True iff f holds at every world of the model."""
    return eval_mask(m, f) == (1 << m.frame.n) - 1


def multiverse_truth(m: PointedModel, f: Formula) -> WorldSet:
    """Worlds from which f holds everywhere reachable by any alternation of
    up and down steps.  Constant per connected component: full or empty."""
    n = m.frame.n
    adj = [m.frame.up_masks[w] | m.frame.down_masks[w] | (1 << w) for w in range(n)]
    truth = eval_mask(m, f)
    seen = 0
    out = 0
    for w in range(n):
        if (seen >> w) & 1:
            continue
        comp = 1 << w
        frontier = comp
        while frontier:
            nxt = 0
            mm = frontier
            while mm:
                low = mm & -mm
                nxt |= adj[low.bit_length() - 1]
                mm ^= low
            frontier = nxt & ~comp
            comp |= nxt
        seen |= comp
        if comp & ~truth == 0:
            out |= comp
    return WorldSet(n, out)


# ---------------------------------------------------------------------------
# Definable algebra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DefinableAlgebra:
    """All world sets definable from the generator letters by Boolean
    operations and the two box preimages, as unions of the model's two-way
    bisimulation cells; listed in ascending mask order."""

    model: PointedModel
    letters: tuple[str, ...]
    cells: tuple[int, ...]
    sets: tuple[WorldSet, ...]

    def __len__(self):
        return len(self.sets)

    def masks(self) -> list[int]:
        return [s.mask for s in self.sets]


def bisimulation_cells(m: PointedModel, letters: Iterable[str] | None = None) -> list[int]:
    """Coarsest partition of the worlds stable under letter profiles and
    one-step reachability in both directions; cells as ascending masks."""
    n = m.frame.n
    gens = sorted(letters) if letters is not None else m.letters()
    profile = [tuple((m.valuation.get(l, 0) >> w) & 1 for l in gens) for w in range(n)]
    ids: dict[tuple, int] = {}
    cell = [ids.setdefault(profile[w], len(ids)) for w in range(n)]
    while True:
        sigs: dict[tuple, int] = {}
        new_cell = []
        for w in range(n):
            up_seen = frozenset(cell[v] for v in WorldSet(n, m.frame.up_masks[w]))
            down_seen = frozenset(cell[v] for v in WorldSet(n, m.frame.down_masks[w]))
            sig = (cell[w], up_seen, down_seen)
            new_cell.append(sigs.setdefault(sig, len(sigs)))
        if new_cell == cell:
            break
        cell = new_cell
    masks: dict[int, int] = {}
    for w, c in enumerate(cell):
        masks[c] = masks.get(c, 0) | (1 << w)
    return sorted(masks.values())


def definable_algebra(m: PointedModel, letters: Iterable[str] | None = None,
                      budget: int = ALGEBRA_BUDGET) -> DefinableAlgebra:
    """Least family containing the generators, closed under complement,
    intersection and both box preimages.  Raises BudgetExceeded when the
    closure has more than `budget` sets."""
    gens = tuple(sorted(letters)) if letters is not None else tuple(m.letters())
    cells = bisimulation_cells(m, gens)
    q = len(cells)
    if q > 60 or (1 << q) > budget:
        raise BudgetExceeded(
            f"definable algebra has 2^{q} sets, budget is {budget}")
    masks = []
    for combo in range(1 << q):
        acc = 0
        c = combo
        while c:
            low = c & -c
            acc |= cells[low.bit_length() - 1]
            c ^= low
        masks.append(acc)
    masks = sorted(set(masks))
    n = m.frame.n
    return DefinableAlgebra(m, gens, tuple(cells),
                            tuple(WorldSet(n, mk) for mk in masks))


# ---------------------------------------------------------------------------
# ml membership
# ---------------------------------------------------------------------------

@dataclass
class MlOutcome:
    """Three-valued membership verdict with an optional refuting witness.

    The witness maps letters either to formulas (refuting substitution) or,
    for the exact sweep, to the refuting algebra members themselves."""

    status: Optional[bool]              # True member, False not, None unresolved
    witness: Optional[dict] = None
    how: str = ""


class _DirInfo:
    def __init__(self, ctx: "_MlContext", dir: Direction):
        self.ctx = ctx
        self.dir = dir
        m = ctx.model
        frame = m.frame
        props = frame.props
        self.rt = props.reflexive and props.transitive
        self.directed = props.up_directed if dir is UP else props.down_directed
        cone = frame.cone_mask(m.point, dir)
        self.cone = cone
        self.cone_single = cone == (1 << m.point)
        self.cone_cluster = all(
            frame.masks(dir)[w] & cone == cone for w in WorldSet(frame.n, cone))
        self._family_cert = None
        self._family_done = False

    def family_cert(self):
        """Best certified control family at the point with its certificate,
        searched lazily; None when no shape certifies."""
        if self._family_done:
            return self._family_cert
        from .controls import IndependenceCertificate, check_independent, find_family
        m = self.ctx.model
        for shape in ((2, 2), (2, 1), (1, 2), (1, 1), (2, 0), (0, 2), (1, 0), (0, 1)):
            for horizon in (None, 2, 1, 0):
                fam = find_family(m, m.point, self.dir, *shape, horizon=horizon)
                if fam is not None:
                    cert = check_independent(m, fam, horizon=fam.horizon)
                    if isinstance(cert, IndependenceCertificate):
                        self._family_cert = cert
                        self._family_done = True
                        return cert
        self._family_done = True
        return None


class _MlContext:
    """Per-model cache: the definable algebra when affordable, and the
    per-direction certified reasoning machinery otherwise."""

    def __init__(self, m: PointedModel):
        self.model = m
        try:
            self.algebra = definable_algebra(m)
        except BudgetExceeded:
            self.algebra = None
        self._dirs: dict[Direction, _DirInfo] = {}
        self._letter_vectors: dict[int, list] = {}
        self.decide_cache: dict = {}

    def dir_info(self, dir: Direction) -> _DirInfo:
        if dir not in self._dirs:
            self._dirs[dir] = _DirInfo(self, dir)
        return self._dirs[dir]


def _ml_context(m: PointedModel) -> _MlContext:
    ctx = m.__dict__.get("_ml_context")
    if ctx is None:
        ctx = _MlContext(m)
        m.__dict__["_ml_context"] = ctx
    return ctx


def _assignment_vectors(ctx: _MlContext, k: int) -> list[np.ndarray] | None:
    """Per-letter algebra-mask vectors for the full k-fold assignment sweep,
    or None if the model does not fit the vectorised path."""
    if ctx.algebra is None or ctx.model.frame.n > 60:
        return None
    a = len(ctx.algebra)
    total = a ** k
    if total > ASSIGNMENT_BUDGET:
        raise BudgetExceeded(
            f"{a}^{k} assignments exceeds budget {ASSIGNMENT_BUDGET}")
    if k in ctx._letter_vectors:
        return ctx._letter_vectors[k]
    arr = np.array(ctx.algebra.masks(), dtype=np.uint64)
    idx = np.arange(total, dtype=np.int64)
    vecs = [arr[(idx // (a ** (k - 1 - i))) % a] for i in range(k)]
    ctx._letter_vectors[k] = vecs
    return vecs


def _sweep_vectorised(ctx: _MlContext, f: Formula, letters: list[str]) -> MlOutcome:
    m = ctx.model
    n = m.frame.n
    full = np.uint64((1 << n) - 1)
    vecs = _assignment_vectors(ctx, len(letters))
    assert vecs is not None
    env = dict(zip(letters, vecs))
    succ_up = [np.uint64(mask) for mask in m.frame.up_masks]
    succ_down = [np.uint64(mask) for mask in m.frame.down_masks]
    memo: dict[Formula, np.ndarray] = {}

    def box(succ, x):
        out = np.zeros(x.shape, dtype=np.uint64)
        for w in range(n):
            sm = succ[w]
            cond = (x & sm) == sm
            out |= cond.astype(np.uint64) << np.uint64(w)
        return out

    def go(g: Formula) -> np.ndarray:
        hit = memo.get(g)
        if hit is not None:
            return hit
        if isinstance(g, Atom):
            out = env[g.name]
        elif isinstance(g, Top):
            out = np.full(vecs[0].shape, full, dtype=np.uint64)
        elif isinstance(g, Bot):
            out = np.zeros(vecs[0].shape, dtype=np.uint64)
        elif isinstance(g, Not):
            out = full ^ go(g.sub)
        elif isinstance(g, And):
            out = go(g.left) & go(g.right)
        elif isinstance(g, Or):
            out = go(g.left) | go(g.right)
        elif isinstance(g, Imp):
            out = (full ^ go(g.left)) | go(g.right)
        elif isinstance(g, Iff):
            out = full ^ (go(g.left) ^ go(g.right))
        elif isinstance(g, Box):
            out = box(succ_up if g.dir is UP else succ_down, go(g.sub))
        else:
            out = full ^ box(succ_up if g.dir is UP else succ_down, full ^ go(g.sub))
        memo[g] = out
        return out

    res = go(f)
    ok = ((res >> np.uint64(m.point)) & np.uint64(1)).astype(bool)
    if ok.all():
        return MlOutcome(True, how="exact sweep")
    bad = int(np.argmin(ok))
    witness = {letter: WorldSet(n, int(vecs[i][bad]))
               for i, letter in enumerate(letters)}
    return MlOutcome(False, witness=witness, how="exact sweep")


def _sweep_plain(ctx: _MlContext, f: Formula, letters: list[str]) -> MlOutcome:
    m = ctx.model
    masks = ctx.algebra.masks()
    a = len(masks)
    k = len(letters)
    if a ** k > ASSIGNMENT_BUDGET:
        raise BudgetExceeded(f"{a}^{k} assignments exceeds budget {ASSIGNMENT_BUDGET}")
    idx = [0] * k
    while True:
        env = {letters[i]: masks[idx[i]] for i in range(k)}
        if not (eval_mask(m, f, env=env) >> m.point) & 1:
            witness = {letters[i]: WorldSet(m.frame.n, masks[idx[i]])
                       for i in range(k)}
            return MlOutcome(False, witness=witness, how="exact sweep")
        pos = k - 1
        while pos >= 0:
            idx[pos] += 1
            if idx[pos] < a:
                break
            idx[pos] = 0
            pos -= 1
        if pos < 0:
            return MlOutcome(True, how="exact sweep")


def _singleton_env(m: PointedModel, letter: str) -> dict[str, int]:
    env = dict(m.valuation)
    env[letter] = 1 << m.point
    return env


def ml_status(m: PointedModel, f: Formula) -> MlOutcome:
    """Three-valued ml membership: quantifies letters(f) over the definable
    algebra, exactly when the algebra is within budget, otherwise by sound
    certified reasoning (class validity for membership, verified refuting
    substitutions for non-membership)."""
    ctx = _ml_context(m)
    hit = ctx.decide_cache.get(("ml", f))
    if hit is not None:
        return hit
    out = _ml_status_uncached(ctx, f)
    ctx.decide_cache[("ml", f)] = out
    return out


def _ml_status_uncached(ctx: _MlContext, f: Formula) -> MlOutcome:
    m = ctx.model
    letters = sorted(formula_letters(f))
    if not letters:
        member = (eval_mask(m, f) >> m.point) & 1 == 1
        return MlOutcome(bool(member), how="closed formula")
    if ctx.algebra is not None:
        try:
            if m.frame.n <= 60:
                return _sweep_vectorised(ctx, f, letters)
            return _sweep_plain(ctx, f, letters)
        except BudgetExceeded:
            pass

    # Monotone-implication rule: p -> g with g positive in p holds under
    # every set assignment iff it holds with p := {point}.
    if (len(letters) == 1 and isinstance(f, Imp) and isinstance(f.left, Atom)
            and f.left.name == letters[0] and _positive_only(f.right, letters[0])):
        env = _singleton_env(m, letters[0])
        if (eval_mask(m, f.right, env=env) >> m.point) & 1:
            return MlOutcome(True, how="monotone rule")

    dirs = directions(f)
    if len(dirs) <= 1:
        d = next(iter(dirs)) if dirs else UP
        out = _ml_monomodal(ctx, f, d)
        if out.status is not None:
            return out
    # Last resort: small probe substitutions in every direction.
    out = _probe_refute(ctx, f, letters)
    if out is not None:
        return out
    return MlOutcome(None, how="unresolved")


def _positive_only(g: Formula, p: str) -> bool:
    return polarity(g, p) == 1 or p not in formula_letters(g)


def _ml_monomodal(ctx: _MlContext, f: Formula, d: Direction) -> MlOutcome:
    from .theories import PL, S4, S4_2, S5, decide

    m = ctx.model
    info = ctx.dir_info(d)
    # Truth of a d-monomodal formula at the point only involves the point's
    # d-cone, so validity over the cone's frame class settles membership.
    if info.cone_single:
        # One reflexive world: both point-bit values of every letter are
        # realised by algebra members (full and empty), so membership is
        # exactly PL validity.
        status = decide(PL, f, want_countermodel=False).is_valid
        return MlOutcome(status, how="single-world cone")
    if info.cone_cluster and _is_valid_cached(ctx, S5, f):
        return MlOutcome(True, how="S5 validity on cluster cone")
    if info.rt and info.directed and _is_valid_cached(ctx, S4_2, f):
        return MlOutcome(True, how="S4.2 validity on directed frame")
    if info.rt and _is_valid_cached(ctx, S4, f):
        return MlOutcome(True, how="S4 validity")

    # Refutation: simulate the decider's countermodel through the certified
    # control family, verifying the substitution by model check.
    if info.rt and (info.cone_cluster or info.directed):
        theory = S5 if info.cone_cluster else S4_2
        verdict = decide(theory, f)
        if verdict.is_invalid and verdict.countermodel is not None:
            cert = info.family_cert()
            if cert is not None:
                from .controls import simulate_countermodel
                from .errors import InsufficientControls, VerificationFailed
                try:
                    sigma = simulate_countermodel(cert, f, verdict.countermodel)
                    return MlOutcome(False, witness=sigma,
                                     how="simulated countermodel")
                except (InsufficientControls, VerificationFailed):
                    pass
    return MlOutcome(None, how="unresolved")


def _is_valid_cached(ctx: _MlContext, theory, f: Formula) -> bool:
    from .theories import decide
    key = (theory, f)
    hit = ctx.decide_cache.get(key)
    if hit is None:
        hit = decide(theory, f, want_countermodel=False).is_valid
        ctx.decide_cache[key] = hit
    return hit


def _probe_refute(ctx: _MlContext, f: Formula, letters: list[str]) -> Optional[MlOutcome]:
    m = ctx.model
    probes: list[Formula] = []
    for l in m.letters()[:4]:
        a = Atom(l)
        probes += [a, Not(a)]
        for d in (UP, DOWN):
            probes += [Box(d, a), Not(Box(d, a))]
    probes += [Top(), Bot()]
    if len(probes) ** len(letters) > 4096:
        probes = probes[: max(2, int(4096 ** (1 / len(letters))))]
    idx = [0] * len(letters)
    while True:
        sigma = {letters[i]: probes[idx[i]] for i in range(len(letters))}
        g = substitute(f, sigma)
        if not (eval_mask(m, g) >> m.point) & 1:
            return MlOutcome(False, witness=sigma, how="probe substitution")
        pos = len(letters) - 1
        while pos >= 0:
            idx[pos] += 1
            if idx[pos] < len(probes):
                break
            idx[pos] = 0
            pos -= 1
        if pos < 0:
            return None


def ml_member(m: PointedModel, f: Formula) -> bool:
    """True iff every assignment of definable-algebra members to the letters
    of f leaves f true at the point.  Raises BudgetExceeded when neither the
    exact sweep nor certified reasoning resolves the query."""
    out = ml_status(m, f)
    if out.status is None:
        raise BudgetExceeded(f"ml membership unresolved for {f}")
    return out.status


# ---------------------------------------------------------------------------
# Fragment computation
# ---------------------------------------------------------------------------

@dataclass
class FragmentReport:
    """Result of sweeping the canonical enumeration through ml membership."""

    model: PointedModel
    k: int
    max_size: int
    dirs: frozenset[Direction]
    formulas: list[Formula] = field(default_factory=list)
    status: dict[Formula, Optional[bool]] = field(default_factory=dict)
    members: list[Formula] = field(default_factory=list)
    unknown: list[Formula] = field(default_factory=list)

    @property
    def fragment_size(self) -> int:
        return len(self.members)


def ml_fragment(m: PointedModel, k: int, max_size: int,
                dirs: Iterable[Direction]) -> FragmentReport:
    """Filter the canonical enumeration through ml membership.

    Formulas the certified reasoning cannot resolve are recorded as unknown
    and excluded from classification rather than guessed."""
    dirset = frozenset(dirs)
    report = FragmentReport(m, k, max_size, dirset)
    for f in enumerate_formulas(k, max_size, dirset):
        out = ml_status(m, f)
        report.formulas.append(f)
        report.status[f] = out.status
        if out.status is True:
            report.members.append(f)
        elif out.status is None:
            report.unknown.append(f)
    return report
