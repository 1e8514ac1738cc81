"""
Deterministic grid worlds (the Maze and CliffWalking) compiled into exact
``MdpSpec`` tensors. Cells are numbered row-major; actions are
0 up, 1 right, 2 down, 3 left. A move blocked by a wall or the grid edge
leaves the agent in place. Every move costs -1; entering the goal ends the
episode.
"""

import collections
import dataclasses
import importlib.resources
import logging
import os
import typing

import numpy as np

from ..exceptions import LayoutError
from ..mdp import MdpSpec
from .base import DiscreteEnv


logger = logging.getLogger(__name__)

UP, RIGHT, DOWN, LEFT = range(4)
MOVES = ((-1, 0), (0, 1), (1, 0), (0, -1))

#: Discount of the compiled grid MDPs.
MDP_GAMMA = 0.99

STEP_REWARD = -1.0
CLIFF_REWARD = -100.0

LAYOUT_CHARS = frozenset("SG#.")


@dataclasses.dataclass(frozen=True, eq=False)
class GridLayout:
    walls: np.ndarray
    start: typing.Tuple[int, int]
    goal: typing.Tuple[int, int]
    cliff: typing.Optional[np.ndarray] = None

    @property
    def shape(self) -> typing.Tuple[int, int]:
        return self.walls.shape

    @property
    def n_cells(self) -> int:
        return self.walls.size

    def index(self, cell) -> int:
        return int(np.ravel_multi_index(cell, self.shape))

    def move(self, cell, action: int) -> typing.Tuple[int, int]:
        row, col = cell
        d_row, d_col = MOVES[action]
        target = (row + d_row, col + d_col)
        rows, cols = self.shape
        if not (0 <= target[0] < rows and 0 <= target[1] < cols):
            return cell
        if self.walls[target]:
            return cell
        return target

    def is_cliff(self, cell) -> bool:
        return self.cliff is not None and bool(self.cliff[cell])


def parse_layout(text: str) -> GridLayout:
    """
    Parse a text grid: ``S`` start (upper-left corner), ``G`` goal
    (lower-right corner), ``#`` wall, ``.`` free.
    Blank lines are ignored; every row must have the same width.
    """
    rows = [line.strip() for line in text.splitlines() if line.strip()]
    if not rows:
        raise LayoutError("Layout is empty")
    if len({len(row) for row in rows}) != 1:
        raise LayoutError("Layout rows have different widths")
    for row in rows:
        bad = set(row) - LAYOUT_CHARS
        if bad:
            raise LayoutError(
                "Unknown layout characters: %s" % "".join(sorted(bad))
            )
    grid = np.array([list(row) for row in rows])
    starts = np.argwhere(grid == "S")
    goals = np.argwhere(grid == "G")
    if len(starts) != 1 or len(goals) != 1:
        raise LayoutError("Layout needs exactly one S and one G")
    start = (int(starts[0][0]), int(starts[0][1]))
    goal = (int(goals[0][0]), int(goals[0][1]))
    if start != (0, 0) or goal != (grid.shape[0] - 1, grid.shape[1] - 1):
        raise LayoutError("S must be upper-left and G lower-right")
    layout = GridLayout(walls=grid == "#", start=start, goal=goal)
    shortest_path_length(layout)
    return layout


def shortest_path_length(layout: GridLayout) -> int:
    """
    Breadth-first search from start to goal.
    """
    distances = {layout.start: 0}
    queue = collections.deque([layout.start])
    while queue:
        cell = queue.popleft()
        if cell == layout.goal:
            return distances[cell]
        for action in range(len(MOVES)):
            target = layout.move(cell, action)
            if layout.is_cliff(target):
                continue
            if target not in distances:
                distances[target] = distances[cell] + 1
                queue.append(target)
    raise LayoutError("Goal is not reachable from the start")


def grid_mdp(layout: GridLayout, gamma: float = MDP_GAMMA) -> MdpSpec:
    """
    Compile a layout. Wall cells are unreachable self-loops; entering a cliff
    cell costs ``CLIFF_REWARD`` and returns the agent to the start; the goal
    is absorbing and terminal.
    """
    n = layout.n_cells
    n_actions = len(MOVES)
    transition = np.zeros((n, n_actions, n))
    reward = np.zeros((n, n_actions, n))
    start = layout.index(layout.start)
    goal = layout.index(layout.goal)
    for cell in np.ndindex(layout.shape):
        s = layout.index(cell)
        for action in range(n_actions):
            if s == goal or layout.walls[cell]:
                transition[s, action, s] = 1.0
                continue
            target = layout.move(cell, action)
            if layout.is_cliff(target):
                transition[s, action, start] = 1.0
                reward[s, action, start] = CLIFF_REWARD
            else:
                s_next = layout.index(target)
                transition[s, action, s_next] = 1.0
                reward[s, action, s_next] = STEP_REWARD
    terminal = np.zeros(n, dtype=bool)
    terminal[goal] = True
    return MdpSpec(transition, reward, gamma, terminal)


def load_layout(path=None) -> GridLayout:
    if path is None:
        resource = (
            importlib.resources.files(__package__)
            / "layouts"
            / "maze_default.txt"
        )
        return parse_layout(resource.read_text(encoding="utf-8"))
    logger.info("Loading maze layout from %s", path)
    with open(os.fspath(path), encoding="utf-8") as handle:
        return parse_layout(handle.read())


class GridEnv(DiscreteEnv):
    def __init__(self, kind, layout, max_steps, gamma):
        super().__init__(
            kind,
            grid_mdp(layout),
            layout.index(layout.start),
            max_steps,
            gamma=gamma,
        )
        self.layout = layout

    def cell(self, s: int) -> typing.Tuple[int, int]:
        return tuple(int(i) for i in np.unravel_index(s, self.layout.shape))


def maze_env(
    layout=None, path=None, gamma: float = 0.99, max_steps: int = 1000
) -> GridEnv:
    """
    The shortest-path Maze. ``layout`` may be a ``GridLayout`` or layout
    text; ``path`` names a layout file. With neither, the packaged 10x10
    default layout is used.
    """
    if layout is None:
        layout = load_layout(path)
    elif isinstance(layout, str):
        layout = parse_layout(layout)
    return GridEnv("Maze", layout, max_steps, gamma)


def cliff_layout(rows: int = 4, cols: int = 12) -> GridLayout:
    cliff = np.zeros((rows, cols), dtype=bool)
    cliff[rows - 1, 1 : cols - 1] = True
    return GridLayout(
        walls=np.zeros((rows, cols), dtype=bool),
        start=(rows - 1, 0),
        goal=(rows - 1, cols - 1),
        cliff=cliff,
    )


def cliff_walking_env(
    gamma: float = 1.0, max_steps: int = 10_000
) -> GridEnv:
    """
    4x12 CliffWalking: start bottom-left, goal bottom-right, the bottom row
    between them is the cliff.
    """
    return GridEnv("CliffWalking", cliff_layout(), max_steps, gamma)
