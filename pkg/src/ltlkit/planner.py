"""Grid-world trajectory planning against a temporal-logic goal.

A world is a rectangular grid of cells; the agent starts on a designated
cell and may move to a 4-neighbor or stay put at every step.  Cells
carry sets of atomic propositions, and the infinite word read off a
trajectory (one letter per step, from the cell occupied at that step)
must satisfy the goal formula.  Planning searches the product of the
world graph with the goal's automaton and returns a lasso-shaped
trajectory: a finite prefix followed by a loop repeated forever.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from importlib import resources

from .automata import (
    BuchiAutomaton,
    DEFAULT_STATE_CAP,
    _degeneralized_edges,
    _tarjan_sccs,
    build_automaton,
    is_empty,
)
from .formulas import Formula, LassoWord, evaluate, is_valid_atom_name

Cell = tuple[int, int]

RESERVED_GLYPHS = {".", "#"}
BUILTIN_WORLDS = ("demo",)


class PlanningError(RuntimeError):
    """Base class for planner failures."""


class UnsatisfiableFormulaError(PlanningError):
    """The goal formula has no model at all, in any world."""


class NoPlanError(PlanningError):
    """The formula is satisfiable, but no trajectory in this world works."""


class WorldFormatError(ValueError):
    """A world file is malformed; the message carries file and line."""

    def __init__(self, origin: str, lineno: int, message: str):
        super().__init__(f"{origin}:{lineno}: {message}")
        self.origin = origin
        self.lineno = lineno


@dataclass(frozen=True, eq=False)
class GridWorld:
    """A rectangular grid with labeled cells.

    Coordinates are (x, y) with x the column growing rightward and y the
    row growing downward; (0, 0) is the top-left cell.  Movement is
    4-way plus waiting in place; blocked cells cannot be entered.
    """

    width: int
    height: int
    start: Cell
    blocked: frozenset[Cell] = frozenset()
    labels: Mapping[Cell, frozenset[str]] = field(default_factory=dict)
    glyphs: Mapping[Cell, str] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError("world dimensions must be positive")
        if not self.in_bounds(self.start):
            raise ValueError(f"start {self.start} is out of bounds")
        if self.start in self.blocked:
            raise ValueError(f"start {self.start} is a blocked cell")
        for cell in self.blocked:
            if not self.in_bounds(cell):
                raise ValueError(f"blocked cell {cell} is out of bounds")
        for cell, names in self.labels.items():
            if not self.in_bounds(cell):
                raise ValueError(f"labeled cell {cell} is out of bounds")
            if cell in self.blocked:
                raise ValueError(f"labeled cell {cell} is blocked")
            for name in names:
                if not is_valid_atom_name(name):
                    raise ValueError(f"label {name!r} is not a valid atom name")

    def in_bounds(self, cell: Cell) -> bool:
        x, y = cell
        return 0 <= x < self.width and 0 <= y < self.height

    def label(self, cell: Cell) -> frozenset[str]:
        return self.labels.get(cell, frozenset())

    def moves(self, cell: Cell) -> tuple[Cell, ...]:
        """Waiting plus the open 4-neighbors, in lexicographic order."""
        x, y = cell
        candidates = [cell, (x - 1, y), (x + 1, y), (x, y - 1), (x, y + 1)]
        return tuple(sorted(
            c for c in candidates if self.in_bounds(c) and c not in self.blocked
        ))

    def propositions(self) -> frozenset[str]:
        out: set[str] = set()
        for names in self.labels.values():
            out |= names
        return frozenset(out)


def parse_world(text: str, origin: str = "<string>") -> GridWorld:
    """Parse the world file format.

    The file has a ``legend:`` section mapping single characters to
    space-separated label names, then a ``grid:`` section whose lines
    are the rows.  ``.`` is an unlabeled cell, ``#`` is blocked, and
    ``S`` is the start cell (required exactly once); a legend entry for
    ``S`` gives the start cell labels.  Before ``grid:``, blank lines
    and lines starting with ``#`` are ignored; inside the grid every
    character is meaningful and the section ends at a blank line or the
    end of the file.
    """
    legend: dict[str, frozenset[str]] = {}
    rows: list[tuple[int, str]] = []
    section = "preamble"

    for lineno, raw in enumerate(text.splitlines(), start=1):
        if section == "grid":
            if not raw.strip():
                break
            rows.append((lineno, raw.rstrip("\n")))
            continue
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if line == "legend:":
            if section != "preamble":
                raise WorldFormatError(origin, lineno, "duplicate legend: section")
            section = "legend"
            continue
        if line == "grid:":
            section = "grid"
            continue
        if section != "legend":
            raise WorldFormatError(
                origin, lineno, f"unexpected line before legend:: {line!r}"
            )
        if "=" not in line:
            raise WorldFormatError(
                origin, lineno, f"legend entry needs 'CHAR = names': {line!r}"
            )
        glyph, _, names_part = line.partition("=")
        glyph = glyph.strip()
        names = names_part.split()
        if len(glyph) != 1:
            raise WorldFormatError(
                origin, lineno, f"legend key must be a single character: {glyph!r}"
            )
        if glyph in RESERVED_GLYPHS:
            raise WorldFormatError(
                origin, lineno, f"legend key {glyph!r} is reserved"
            )
        if glyph in legend:
            raise WorldFormatError(origin, lineno, f"duplicate legend key {glyph!r}")
        if not names:
            raise WorldFormatError(origin, lineno, "legend entry has no label names")
        for name in names:
            if not is_valid_atom_name(name):
                raise WorldFormatError(
                    origin, lineno, f"label {name!r} is not a valid atom name"
                )
        legend[glyph] = frozenset(names)

    if not rows:
        raise WorldFormatError(origin, 0, "world has no grid: section or no rows")

    width = len(rows[0][1])
    height = len(rows)
    start: Cell | None = None
    blocked: set[Cell] = set()
    labels: dict[Cell, frozenset[str]] = {}
    glyphs: dict[Cell, str] = {}

    for y, (lineno, row) in enumerate(rows):
        if len(row) != width:
            raise WorldFormatError(
                origin, lineno,
                f"row {y} has width {len(row)}, expected {width}",
            )
        for x, ch in enumerate(row):
            cell = (x, y)
            if ch == ".":
                continue
            if ch == "#":
                blocked.add(cell)
            elif ch == "S":
                if start is not None:
                    raise WorldFormatError(origin, lineno, "multiple start cells")
                start = cell
                if "S" in legend:
                    labels[cell] = legend["S"]
                    glyphs[cell] = ch
            elif ch in legend:
                labels[cell] = legend[ch]
                glyphs[cell] = ch
            else:
                raise WorldFormatError(
                    origin, lineno,
                    f"unknown grid character {ch!r} at column {x}",
                )

    if start is None:
        raise WorldFormatError(origin, 0, "world has no start cell 'S'")
    return GridWorld(
        width=width,
        height=height,
        start=start,
        blocked=frozenset(blocked),
        labels=labels,
        glyphs=glyphs,
    )


def load_world(path: str | Path) -> GridWorld:
    path = Path(path)
    return parse_world(path.read_text(encoding="utf-8"), origin=str(path))


def builtin_world(name: str) -> GridWorld:
    """Load one of the world maps shipped with the package."""
    if name not in BUILTIN_WORLDS:
        raise ValueError(f"unknown builtin world {name!r}; have {BUILTIN_WORLDS}")
    text = (
        resources.files("ltlkit.data.worlds")
        .joinpath(f"{name}.world")
        .read_text(encoding="utf-8")
    )
    return parse_world(text, origin=f"builtin:{name}")


@dataclass(frozen=True)
class Trajectory:
    """A lasso-shaped plan: walk the prefix once, then the loop forever.

    ``prefix_cells`` is never empty and starts at the world's start
    cell; the last prefix cell is adjacent (or equal, for waiting) to
    the first loop cell, and the last loop cell closes back to the
    first.  ``trace`` is the word the trajectory reads.
    """

    prefix_cells: tuple[Cell, ...]
    loop_cells: tuple[Cell, ...]
    trace: LassoWord

    def __post_init__(self) -> None:
        if not self.prefix_cells:
            raise ValueError("trajectory prefix must be non-empty")
        if not self.loop_cells:
            raise ValueError("trajectory loop must be non-empty")


def validate_trajectory(world: GridWorld, trajectory: Trajectory) -> None:
    """Raise ValueError if the trajectory is not walkable in the world."""
    cells = list(trajectory.prefix_cells) + list(trajectory.loop_cells)
    for cell in cells:
        if not world.in_bounds(cell):
            raise ValueError(f"cell {cell} is out of bounds")
        if cell in world.blocked:
            raise ValueError(f"cell {cell} is blocked")
    if trajectory.prefix_cells[0] != world.start:
        raise ValueError(
            f"trajectory starts at {trajectory.prefix_cells[0]}, "
            f"world start is {world.start}"
        )
    closed = cells + [trajectory.loop_cells[0]]
    for a, b in zip(closed, closed[1:]):
        if b not in world.moves(a):
            raise ValueError(f"illegal move {a} -> {b}")
    expected = LassoWord(
        tuple(world.label(c) for c in trajectory.prefix_cells),
        tuple(world.label(c) for c in trajectory.loop_cells),
    )
    if expected != trajectory.trace:
        raise ValueError("trace does not match the cells' labels")


def check_trace(formula: Formula, trajectory: Trajectory) -> bool:
    """Does the word this trajectory reads satisfy the formula?"""
    return evaluate(formula, trajectory.trace)


def _product_graph(world: GridWorld, aut: BuchiAutomaton):
    """Forward adjacency of (automaton-with-counter state, cell) nodes."""
    d_succ, d_accept = _degeneralized_edges(aut)
    initial = ((aut.initial, 0), world.start)

    adjacency: dict = {}
    stack = [initial]
    while stack:
        node = stack.pop()
        if node in adjacency:
            continue
        dnode, cell = node
        letter = world.label(cell)
        next_dnodes = sorted({d2 for lab, d2 in d_succ(dnode) if lab.admits(letter)})
        succs = tuple(
            (d2, c2) for c2 in world.moves(cell) for d2 in next_dnodes
        )
        adjacency[node] = succs
        stack.extend(succs)

    def accepting(node) -> bool:
        return d_accept(node[0])

    return initial, adjacency, accepting


def _distances_to(targets: Iterable, reverse_adj: Mapping) -> dict:
    """Multi-source BFS edge distances toward the target set."""
    from collections import deque

    dist = {t: 0 for t in targets}
    queue = deque(dist)
    while queue:
        node = queue.popleft()
        for pred in reverse_adj.get(node, ()):
            if pred not in dist:
                dist[pred] = dist[node] + 1
                queue.append(pred)
    return dist


def _step_key(current_cell):
    """Tie-break for equally short steps: wait in place if possible,
    otherwise take the lexicographically smallest cell.
    """
    def key(node):
        (q, c), cell = node
        return (cell != current_cell, cell, q, c)
    return key


def _greedy_descent(start, dist: Mapping, adjacency: Mapping) -> list:
    """Walk from start to a dist-0 node, always stepping to a successor
    one closer.  Returns the node path including both endpoints.
    """
    path = [start]
    node = start
    while dist[node] > 0:
        node = min(
            (s for s in adjacency[node] if dist.get(s) == dist[node] - 1),
            key=_step_key(node[1]),
        )
        path.append(node)
    return path


def plan(
    world: GridWorld,
    formula: Formula,
    state_cap: int = DEFAULT_STATE_CAP,
) -> Trajectory:
    """Find a shortest-prefix trajectory whose trace satisfies the formula.

    Raises UnsatisfiableFormulaError when the formula has no model at
    all and NoPlanError when it does but this world cannot realize one.
    Among shortest plans, ties are broken toward lexicographically
    smaller cells, so output is deterministic.
    """
    aut = build_automaton(formula, state_cap=state_cap)
    if is_empty(aut).empty:
        raise UnsatisfiableFormulaError(
            "the goal formula is unsatisfiable; no world can realize it"
        )

    initial, adjacency, accepting = _product_graph(world, aut)
    sccs = _tarjan_sccs(
        initial, lambda n: [(None, s) for s in adjacency[n]]
    )

    good: set = set()
    comp_of: dict = {}
    for comp in sccs:
        members = set(comp)
        for m in members:
            comp_of[m] = members
        if not any(accepting(n) for n in members):
            continue
        nontrivial = len(members) > 1 or any(
            s == comp[0] for s in adjacency[comp[0]]
        )
        if nontrivial:
            good |= members

    if not good:
        raise NoPlanError(
            "the goal is satisfiable but no trajectory in this world meets it"
        )

    reverse_adj: dict = {}
    for node, succs in adjacency.items():
        for s in succs:
            reverse_adj.setdefault(s, []).append(node)

    dist_to_good = _distances_to(good, reverse_adj)
    if initial not in dist_to_good:
        raise NoPlanError(
            "the goal is satisfiable but no trajectory in this world meets it"
        )
    prefix_nodes = _greedy_descent(initial, dist_to_good, adjacency)
    anchor = prefix_nodes[-1]
    comp = comp_of[anchor]

    comp_reverse = {
        node: [p for p in reverse_adj.get(node, ()) if p in comp]
        for node in comp
    }
    comp_adj = {node: [s for s in adjacency[node] if s in comp] for node in comp}

    dist_to_anchor = _distances_to([anchor], comp_reverse)

    if accepting(anchor):
        # Shortest cycle anchor -> anchor; a self-loop gives length 1.
        first = min(
            (s for s in comp_adj[anchor] if s in dist_to_anchor),
            key=lambda s: (dist_to_anchor[s],) + _step_key(anchor[1])(s),
        )
        cycle_nodes = [anchor] + _greedy_descent(first, dist_to_anchor, comp_adj)
    else:
        acc_nodes = [n for n in comp if accepting(n)]
        dist_to_acc = _distances_to(acc_nodes, comp_reverse)
        to_acc = _greedy_descent(anchor, dist_to_acc, comp_adj)
        acc = to_acc[-1]
        back = _greedy_descent(acc, dist_to_anchor, comp_adj)
        cycle_nodes = to_acc + back[1:]
    # cycle_nodes runs anchor ... anchor; drop the closing repeat.
    assert cycle_nodes[0] == anchor and cycle_nodes[-1] == anchor
    loop_nodes = cycle_nodes[:-1]

    prefix_cells = tuple(cell for _, cell in prefix_nodes[:-1])
    loop_cells = tuple(cell for _, cell in loop_nodes)
    if not prefix_cells:
        prefix_cells = (loop_cells[0],)
        loop_cells = loop_cells[1:] + loop_cells[:1]

    trace = LassoWord(
        tuple(world.label(c) for c in prefix_cells),
        tuple(world.label(c) for c in loop_cells),
    )
    trajectory = Trajectory(
        prefix_cells=prefix_cells, loop_cells=loop_cells, trace=trace
    )
    validate_trajectory(world, trajectory)
    if not evaluate(formula, trace):
        raise RuntimeError(
            "internal error: planned trajectory failed the semantic self-check"
        )
    return trajectory


def render_path(world: GridWorld, trajectory: Trajectory) -> str:
    """ASCII picture of the plan: ``*`` prefix cells, ``o`` loop cells.

    The start keeps its ``S`` and blocked cells their ``#``; labeled
    cells off the path show their legend glyph (``+`` if unknown).
    """
    grid = [["." for _ in range(world.width)] for _ in range(world.height)]
    for (x, y) in world.blocked:
        grid[y][x] = "#"
    for cell in world.labels:
        x, y = cell
        grid[y][x] = world.glyphs.get(cell, "+") if world.glyphs else "+"
    for (x, y) in trajectory.prefix_cells:
        grid[y][x] = "*"
    for (x, y) in trajectory.loop_cells:
        grid[y][x] = "o"
    sx, sy = world.start
    grid[sy][sx] = "S"
    return "\n".join("".join(row) for row in grid)
