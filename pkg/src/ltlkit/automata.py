"""Generalized Büchi automata for satisfiability and equivalence checking.

``build_automaton`` runs the classic tableau expansion over the negation
normal form: a state is a set of obligations that must hold from the
current position, and every way of discharging them into "now" literals
plus "next" obligations becomes a transition.  Each Finally/Until
subformula contributes one acceptance set, tracking that its eventuality
is discharged infinitely often.

Emptiness goes through the counting degeneralization and a strongly
connected component decomposition; a non-empty automaton yields an
ultimately periodic witness word.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

from .formulas import (
    And,
    Atom,
    Finally,
    Formula,
    Globally,
    LassoWord,
    Not,
    Or,
    Release,
    Until,
    atoms,
    evaluate,
    to_nnf,
    walk,
)

DEFAULT_STATE_CAP = 100_000


class ResourceLimitError(RuntimeError):
    """Automaton construction exceeded the configured state cap."""

    def __init__(self, cap: int):
        super().__init__(f"automaton construction exceeded {cap} states")
        self.cap = cap


def _show(f: Formula) -> str:
    """Fully parenthesized rendering, Release included; used for sorting
    states and for the debug dump, never as surface syntax."""
    if isinstance(f, Atom):
        return f.name
    if isinstance(f, Not):
        return "!" + _show(f.operand)
    if isinstance(f, Finally):
        return f"F({_show(f.operand)})"
    if isinstance(f, Globally):
        return f"G({_show(f.operand)})"
    if isinstance(f, And):
        return f"({_show(f.left)} & {_show(f.right)})"
    if isinstance(f, Or):
        return f"({_show(f.left)} | {_show(f.right)})"
    if isinstance(f, Until):
        return f"({_show(f.left)} U {_show(f.right)})"
    if isinstance(f, Release):
        return f"({_show(f.left)} R {_show(f.right)})"
    raise TypeError(f"not a formula node: {f!r}")


@dataclass(frozen=True)
class Label:
    """Transition constraint: atoms that must hold and atoms that must not.

    Atoms mentioned in neither set are unconstrained.
    """

    required_true: frozenset[str]
    required_false: frozenset[str]

    def __post_init__(self) -> None:
        if self.required_true & self.required_false:
            raise ValueError("contradictory transition label")

    def admits(self, letter: frozenset[str]) -> bool:
        return self.required_true <= letter and not (self.required_false & letter)

    def witness_letter(self) -> frozenset[str]:
        """The canonical letter: required atoms true, everything else false."""
        return self.required_true

    def _key(self):
        return (tuple(sorted(self.required_true)), tuple(sorted(self.required_false)))


@dataclass(frozen=True)
class BuchiAutomaton:
    alphabet: frozenset[str]
    n_states: int
    initial: int
    transitions: tuple[tuple[int, Label, int], ...]
    acceptance_sets: tuple[frozenset[int], ...]
    state_notes: tuple[str, ...]

    def successors(self, state: int) -> list[tuple[Label, int]]:
        return [(lab, dst) for src, lab, dst in self.transitions if src == state]


def _expansions(obligations: frozenset[Formula]):
    """All ways to discharge a set of obligations for one step.

    Yields (pos, neg, next_obligations, fulfilled) tuples where pos/neg are
    atom names constrained now and fulfilled collects the Finally/Until
    obligations discharged through their eventuality branch.  Contradictory
    branches are pruned.
    """
    results: set = set()

    def go(pending, seen, pos, neg, nxt, ful):
        if not pending:
            results.add((pos, neg, nxt, ful))
            return
        f, rest = pending[0], pending[1:]
        if f in seen:
            go(rest, seen, pos, neg, nxt, ful)
            return
        seen = seen | {f}
        if isinstance(f, Atom):
            if f.name not in neg:
                go(rest, seen, pos | {f.name}, neg, nxt, ful)
        elif isinstance(f, Not):
            name = f.operand.name  # NNF: operand is an atom
            if name not in pos:
                go(rest, seen, pos, neg | {name}, nxt, ful)
        elif isinstance(f, And):
            go((f.left, f.right) + rest, seen, pos, neg, nxt, ful)
        elif isinstance(f, Or):
            go((f.left,) + rest, seen, pos, neg, nxt, ful)
            go((f.right,) + rest, seen, pos, neg, nxt, ful)
        elif isinstance(f, Finally):
            go((f.operand,) + rest, seen, pos, neg, nxt, ful | {f})
            go(rest, seen, pos, neg, nxt | {f}, ful)
        elif isinstance(f, Globally):
            go((f.operand,) + rest, seen, pos, neg, nxt | {f}, ful)
        elif isinstance(f, Until):
            go((f.right,) + rest, seen, pos, neg, nxt, ful | {f})
            go((f.left,) + rest, seen, pos, neg, nxt | {f}, ful)
        elif isinstance(f, Release):
            go((f.left, f.right) + rest, seen, pos, neg, nxt, ful)
            go((f.right,) + rest, seen, pos, neg, nxt | {f}, ful)
        else:
            raise TypeError(f"not a formula node: {f!r}")

    go(
        tuple(sorted(obligations, key=_show)),
        frozenset(),
        frozenset(),
        frozenset(),
        frozenset(),
        frozenset(),
    )
    return sorted(
        results,
        key=lambda r: (
            tuple(sorted(r[0])),
            tuple(sorted(r[1])),
            tuple(sorted(_show(x) for x in r[2])),
            tuple(sorted(_show(x) for x in r[3])),
        ),
    )


def build_automaton(f: Formula, state_cap: int = DEFAULT_STATE_CAP) -> BuchiAutomaton:
    """Tableau construction; states are (obligations, fulfilled-badge) pairs.

    The badge records which eventualities the incoming transition
    discharged (or did not owe), so acceptance can be expressed over
    states: acceptance set i holds the states whose badge contains the
    i-th eventuality.
    """
    nnf = to_nnf(f)
    eventualities = sorted(
        {n for n in walk(nnf) if isinstance(n, (Finally, Until))}, key=_show
    )
    initial = (frozenset({nnf}), frozenset())
    ids: dict[tuple, int] = {initial: 0}
    queue = deque([initial])
    transitions: set[tuple[int, Label, int]] = set()
    expansion_cache: dict[frozenset, list] = {}

    while queue:
        state = queue.popleft()
        sid = ids[state]
        obligations = state[0]
        expanded = expansion_cache.get(obligations)
        if expanded is None:
            expanded = _expansions(obligations)
            expansion_cache[obligations] = expanded
        for pos, neg, nxt, ful in expanded:
            badge = frozenset(
                u for u in eventualities if u not in obligations or u in ful
            )
            target = (nxt, badge)
            tid = ids.get(target)
            if tid is None:
                tid = len(ids)
                if tid >= state_cap:
                    raise ResourceLimitError(state_cap)
                ids[target] = tid
                queue.append(target)
            transitions.add((sid, Label(pos, neg), tid))

    notes = [""] * len(ids)
    for (obls, badge), sid in ids.items():
        obl_txt = ", ".join(sorted(_show(x) for x in obls))
        badge_txt = ", ".join(sorted(_show(x) for x in badge))
        notes[sid] = "obligations={%s} fulfilled={%s}" % (obl_txt, badge_txt)

    acceptance = tuple(
        frozenset(sid for (obls, badge), sid in ids.items() if u in badge)
        for u in eventualities
    )
    return BuchiAutomaton(
        alphabet=atoms(f),
        n_states=len(ids),
        initial=0,
        transitions=tuple(
            sorted(transitions, key=lambda t: (t[0], t[1]._key(), t[2]))
        ),
        acceptance_sets=acceptance,
        state_notes=tuple(notes),
    )


@dataclass(frozen=True)
class EmptinessResult:
    empty: bool
    witness: LassoWord | None


def _degeneralized_edges(aut: BuchiAutomaton):
    """Adjacency of the counter product, plus its accepting predicate.

    Counter c means acceptance sets 0..c-1 have been visited this round;
    c == k marks a completed round and resets on the next step.
    """
    adj: dict[int, list[tuple[Label, int]]] = {s: [] for s in range(aut.n_states)}
    for src, lab, dst in aut.transitions:
        adj[src].append((lab, dst))
    k = len(aut.acceptance_sets)

    def successors(node):
        q, c = node
        base = 0 if c == k and k > 0 else c
        for lab, q2 in adj[q]:
            c2 = base
            while c2 < k and q2 in aut.acceptance_sets[c2]:
                c2 += 1
            yield lab, (q2, c2)

    def accepting(node) -> bool:
        return k == 0 or node[1] == k

    return successors, accepting


def _tarjan_sccs(start, successors):
    """Iterative Tarjan over the nodes reachable from start."""
    index: dict = {}
    lowlink: dict = {}
    on_stack: set = set()
    stack: list = []
    sccs: list[list] = []
    counter = 0
    work = [(start, iter([s for _, s in successors(start)]))]
    index[start] = lowlink[start] = counter
    counter += 1
    stack.append(start)
    on_stack.add(start)
    while work:
        node, it = work[-1]
        advanced = False
        for succ in it:
            if succ not in index:
                index[succ] = lowlink[succ] = counter
                counter += 1
                stack.append(succ)
                on_stack.add(succ)
                work.append((succ, iter([s for _, s in successors(succ)])))
                advanced = True
                break
            if succ in on_stack:
                lowlink[node] = min(lowlink[node], index[succ])
        if advanced:
            continue
        work.pop()
        if work:
            parent = work[-1][0]
            lowlink[parent] = min(lowlink[parent], lowlink[node])
        if lowlink[node] == index[node]:
            comp = []
            while True:
                member = stack.pop()
                on_stack.discard(member)
                comp.append(member)
                if member == node:
                    break
            sccs.append(comp)
    return sccs


def _bfs_path(sources, successors, goal_test, allowed=None):
    """Shortest edge path from any source to a goal node, or None.

    Returns a list of (label, node) steps.  A source satisfying goal_test
    yields the empty path.
    """
    parents: dict = {}
    queue = deque()
    for s in sources:
        if s not in parents:
            parents[s] = None
            queue.append(s)
            if goal_test(s):
                return []
    while queue:
        node = queue.popleft()
        for lab, succ in successors(node):
            if allowed is not None and succ not in allowed:
                continue
            if succ in parents:
                continue
            parents[succ] = (node, lab)
            if goal_test(succ):
                path = []
                cur = succ
                while parents[cur] is not None:
                    prev, label = parents[cur]
                    path.append((label, cur))
                    cur = prev
                path.reverse()
                return path
            queue.append(succ)
    return None


def _bfs_cycle(node, successors, allowed):
    """Shortest non-empty cycle from node back to itself inside allowed."""
    best = None
    for lab, succ in successors(node):
        if succ not in allowed:
            continue
        if succ == node:
            return [(lab, succ)]
        back = _bfs_path([succ], successors, lambda n: n == node, allowed)
        if back is not None:
            candidate = [(lab, succ)] + back
            if best is None or len(candidate) < len(best):
                best = candidate
    return best


def is_empty(aut: BuchiAutomaton) -> EmptinessResult:
    """Language emptiness; a non-empty result carries a witness lasso.

    The witness instantiates each transition label with its canonical
    letter (required atoms true, all others false).
    """
    successors, accepting = _degeneralized_edges(aut)
    start = (aut.initial, 0)
    sccs = _tarjan_sccs(start, successors)

    good: set = set()
    for comp in sccs:
        members = set(comp)
        if not any(accepting(n) for n in members):
            continue
        nontrivial = len(comp) > 1 or any(
            succ in members and succ == comp[0]
            for _, succ in successors(comp[0])
        )
        if nontrivial:
            good |= members

    if not good:
        return EmptinessResult(empty=True, witness=None)

    prefix_steps = _bfs_path([start], successors, lambda n: n in good)
    assert prefix_steps is not None  # good nodes are reachable by construction
    anchor = prefix_steps[-1][1] if prefix_steps else start
    comp = next(set(c) for c in sccs if anchor in set(c))

    to_accepting = _bfs_path([anchor], successors, accepting, allowed=comp)
    assert to_accepting is not None
    acc_node = to_accepting[-1][1] if to_accepting else anchor
    if acc_node == anchor:
        loop_steps = _bfs_cycle(anchor, successors, comp)
    else:
        back = _bfs_path([acc_node], successors, lambda n: n == anchor, allowed=comp)
        assert back is not None
        loop_steps = to_accepting + back
    assert loop_steps, "accepting component must contain a cycle"

    prefix = tuple(lab.witness_letter() for lab, _ in prefix_steps)
    loop = tuple(lab.witness_letter() for lab, _ in loop_steps)
    return EmptinessResult(empty=False, witness=LassoWord(prefix, loop))


@dataclass(frozen=True)
class SatResult:
    satisfiable: bool
    witness: LassoWord | None


def is_satisfiable(f: Formula, state_cap: int = DEFAULT_STATE_CAP) -> SatResult:
    """Satisfiability via automaton emptiness, with a semantic self-check."""
    result = is_empty(build_automaton(f, state_cap=state_cap))
    if result.empty:
        return SatResult(satisfiable=False, witness=None)
    if not evaluate(f, result.witness):
        raise RuntimeError(
            "internal error: emptiness witness failed the semantic self-check "
            f"for {_show(f)}"
        )
    return SatResult(satisfiable=True, witness=result.witness)


def equiv(f: Formula, g: Formula, state_cap: int = DEFAULT_STATE_CAP) -> bool:
    """Language equivalence: f & !g and !f & g are both unsatisfiable."""
    if f == g:
        return True
    if is_satisfiable(And(f, Not(g)), state_cap=state_cap).satisfiable:
        return False
    return not is_satisfiable(And(Not(f), g), state_cap=state_cap).satisfiable


def dump(aut: BuchiAutomaton) -> str:
    """Line-oriented text dump, one ``state``/``edge``/``accept`` line each.

    Edge constraints list required-true atoms bare and required-false atoms
    with a ``!`` prefix; ``[true]`` marks the unconstrained edge.
    """
    lines = [
        f"states: {aut.n_states}",
        f"initial: {aut.initial}",
        "alphabet: " + ", ".join(sorted(aut.alphabet)),
    ]
    for sid in range(aut.n_states):
        lines.append(f"state {sid}: {aut.state_notes[sid]}")
    for src, lab, dst in aut.transitions:
        bits = sorted(lab.required_true) + ["!" + a for a in sorted(lab.required_false)]
        lines.append(f"edge {src} -> {dst} [{', '.join(bits) if bits else 'true'}]")
    for i, acc in enumerate(aut.acceptance_sets):
        lines.append(f"accept {i}: " + ", ".join(str(s) for s in sorted(acc)))
    return "\n".join(lines) + "\n"
