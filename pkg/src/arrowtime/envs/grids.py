"""Grid-world simulators: vase world, tomato world and a Sokoban variant.

Every environment is a config-only object with pure reset/step methods; all
randomness comes from the generator passed in, so identical (config, seed,
action sequence) triples give bitwise-identical trajectories. `encode` flattens
the channel planes row-major into one float vector for the learner.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

UP, DOWN, LEFT, RIGHT = 0, 1, 2, 3
_MOVES = {UP: (-1, 0), DOWN: (1, 0), LEFT: (0, -1), RIGHT: (0, 1)}


def _moved(pos, action, h, w):
    """Border-blocked single-cell move."""
    dr, dc = _MOVES[action]
    r, c = pos[0] + dr, pos[1] + dc
    if 0 <= r < h and 0 <= c < w:
        return (r, c)
    return pos


def _one_hot(pos, h, w):
    plane = np.zeros((h, w))
    plane[pos] = 1.0
    return plane


@dataclass(frozen=True)
class VaseState:
    agent: tuple
    goal: tuple
    vases: np.ndarray  # (H, W) bool

    def channels(self):
        h, w = self.vases.shape
        return [_one_hot(self.agent, h, w), self.vases.astype(float), _one_hot(self.goal, h, w)]


class VaseWorld:
    """Agent walks a board scattered with vases; entering a vase cell destroys it.

    Task reward per step: decrease in Manhattan distance to the goal (-1, 0 or
    +1) minus a 0.1 step penalty. Goal contact is not terminal.
    """

    kind = "vases"
    n_actions = 4

    def __init__(self, size: int = 7, vase_density: float = 0.5):
        self.size = size
        self.vase_density = vase_density

    @property
    def state_dim(self) -> int:
        return 3 * self.size * self.size

    @property
    def channel_names(self):
        return ["agent", "vases", "goal"]

    def reset(self, rng: np.random.Generator) -> VaseState:
        n = self.size * self.size
        agent_i, goal_i = rng.choice(n, size=2, replace=False)
        agent = divmod(int(agent_i), self.size)
        goal = divmod(int(goal_i), self.size)
        vases = rng.random((self.size, self.size)) < self.vase_density
        vases[agent] = False
        vases[goal] = False
        return VaseState(agent, goal, vases)

    def step(self, state: VaseState, action: int, rng=None):
        new_pos = _moved(state.agent, action, self.size, self.size)
        vases = state.vases
        if vases[new_pos]:
            vases = vases.copy()
            vases[new_pos] = False
        before = abs(state.agent[0] - state.goal[0]) + abs(state.agent[1] - state.goal[1])
        after = abs(new_pos[0] - state.goal[0]) + abs(new_pos[1] - state.goal[1])
        reward = float(before - after) - 0.1
        return VaseState(new_pos, state.goal, vases), reward

    def sample_action(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n_actions))

    def encode(self, state: VaseState) -> np.ndarray:
        return np.concatenate([c.ravel() for c in state.channels()])

    def vase_count(self, vec: np.ndarray) -> float:
        n = self.size * self.size
        return float(vec[n:2 * n].sum())

    def task_reward(self, vec_prev: np.ndarray, vec_next: np.ndarray) -> float:
        """Recompute the step reward from a consecutive pair of encoded states."""
        n = self.size * self.size
        a0 = divmod(int(np.argmax(vec_prev[:n])), self.size)
        a1 = divmod(int(np.argmax(vec_next[:n])), self.size)
        g = divmod(int(np.argmax(vec_prev[2 * n:3 * n])), self.size)
        before = abs(a0[0] - g[0]) + abs(a0[1] - g[1])
        after = abs(a1[0] - g[0]) + abs(a1[1] - g[1])
        return float(before - after) - 0.1


@dataclass(frozen=True)
class TomatoState:
    agent: tuple
    level: np.ndarray  # (H, W) int moisture levels, 0..full; 0 is dead
    full: int = 50

    def channels(self):
        h, w = self.level.shape
        return [_one_hot(self.agent, h, w), self.level.astype(float) / self.full]


class TomatoWorld:
    """Every cell holds a plant; the agent rewaters the cell it stands on.

    Unwatered plants lose a fixed fraction of moisture each step; a plant at
    zero moisture is dead and stays dead. Moisture is tracked as integer
    watering levels so the decay is exact (0.02 per step reaches exactly 0).
    """

    kind = "tomato"
    n_actions = 4

    def __init__(self, size: int = 7, decay: float = 0.02):
        self.size = size
        self.decay = decay
        self.full = round(1.0 / decay)

    @property
    def state_dim(self) -> int:
        return 2 * self.size * self.size

    @property
    def channel_names(self):
        return ["agent", "moisture"]

    def reset(self, rng: np.random.Generator) -> TomatoState:
        agent = divmod(int(rng.integers(self.size * self.size)), self.size)
        level = np.full((self.size, self.size), self.full, dtype=np.int64)
        return TomatoState(agent, level, self.full)

    def step(self, state: TomatoState, action: int, rng=None):
        new_pos = _moved(state.agent, action, self.size, self.size)
        level = state.level.copy()
        watered = level[new_pos]
        level -= 1
        np.maximum(level, 0, out=level)
        # occupied cell: no decay, and rewatered to full unless already dead
        level[new_pos] = self.full if watered > 0 else 0
        return TomatoState(new_pos, level, self.full), 0.0

    def sample_action(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n_actions))

    def encode(self, state: TomatoState) -> np.ndarray:
        n = self.size * self.size
        out = np.zeros(2 * n)
        out[state.agent[0] * self.size + state.agent[1]] = 1.0
        out[n:] = state.level.ravel() / self.full
        return out

    def moisture(self, vec: np.ndarray) -> np.ndarray:
        n = self.size * self.size
        return vec[n:2 * n]

    def moisture_gain(self, vec_prev: np.ndarray, vec_next: np.ndarray) -> float:
        """Total moisture restored by watering on this transition."""
        delta = self.moisture(vec_next) - self.moisture(vec_prev)
        return float(delta[delta > 0].sum())


@dataclass(frozen=True)
class SokobanState:
    agent: tuple
    boxes: np.ndarray   # (H, W) bool
    goals: np.ndarray   # (H, W) bool, constant over an episode
    walls: np.ndarray   # (H, W) bool, constant over an episode
    solution: tuple = ()  # certified solving action sequence, set at reset

    def channels(self):
        h, w = self.walls.shape
        empty = ~(self.boxes | self.walls)
        empty[self.agent] = False
        return [
            _one_hot(self.agent, h, w),
            self.boxes.astype(float),
            self.goals.astype(float),
            self.walls.astype(float),
            empty.astype(float),
        ]


_OPPOSITE = {UP: DOWN, DOWN: UP, LEFT: RIGHT, RIGHT: LEFT}


class SokobanLite:
    """Push-only Sokoban on a walled board with randomized solvable layouts.

    Maps are built by reverse play: boxes start on the goals and are dragged
    away by random pull moves (the exact inverse of pushes); replaying the
    recorded moves backwards is therefore a certified solution.
    """

    kind = "sokoban"
    n_actions = 4

    def __init__(self, size: int = 10, boxes: int = 3, wall_density: float = 0.1,
                 pull_steps: tuple = (12, 30)):
        self.size = size
        self.boxes = boxes
        self.wall_density = wall_density
        self.pull_steps = pull_steps

    @property
    def state_dim(self) -> int:
        return 5 * self.size * self.size

    @property
    def channel_names(self):
        return ["agent", "box", "goal", "wall", "empty"]

    def _draw_layout(self, rng):
        n = self.size
        walls = np.zeros((n, n), dtype=bool)
        walls[0, :] = walls[-1, :] = walls[:, 0] = walls[:, -1] = True
        interior = rng.random((n - 2, n - 2)) < self.wall_density
        walls[1:-1, 1:-1] = interior
        return walls

    def _connected(self, walls):
        floor = ~walls
        total = int(floor.sum())
        if total == 0:
            return False
        start = tuple(np.argwhere(floor)[0])
        seen = {start}
        stack = [start]
        while stack:
            r, c = stack.pop()
            for dr, dc in _MOVES.values():
                nxt = (r + dr, c + dc)
                if floor[nxt] and nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return len(seen) == total

    def reset(self, rng: np.random.Generator) -> SokobanState:
        for _ in range(200):
            state = self._try_generate(rng)
            if state is not None:
                return state
        raise RuntimeError("sokoban map generation failed; layout too constrained")

    def _try_generate(self, rng):
        walls = self._draw_layout(rng)
        if not self._connected(walls):
            return None
        floor_cells = [tuple(p) for p in np.argwhere(~walls)]
        if len(floor_cells) < self.boxes + 1:
            return None
        picks = rng.choice(len(floor_cells), size=self.boxes + 1, replace=False)
        goals = np.zeros_like(walls)
        boxes = np.zeros_like(walls)
        for i in picks[:-1]:
            goals[floor_cells[i]] = True
            boxes[floor_cells[i]] = True
        agent = floor_cells[picks[-1]]

        n_pulls = int(rng.integers(self.pull_steps[0], self.pull_steps[1] + 1))
        gen_moves = []
        for _ in range(n_pulls):
            options = []
            for action, (dr, dc) in _MOVES.items():
                dest = (agent[0] + dr, agent[1] + dc)
                if walls[dest] or boxes[dest]:
                    continue
                behind = (agent[0] - dr, agent[1] - dc)
                options.append((action, dest, None))
                if boxes[behind]:
                    options.append((action, dest, behind))
            if not options:
                break
            action, dest, pulled = options[rng.integers(len(options))]
            if pulled is not None:
                boxes[pulled] = False
                boxes[agent] = True
            agent = dest
            gen_moves.append(action)
        if not gen_moves or bool(np.all(boxes == goals)):
            return None
        solution = tuple(_OPPOSITE[a] for a in reversed(gen_moves))
        return SokobanState(agent, boxes, goals, walls, solution)

    def step(self, state: SokobanState, action: int, rng=None):
        dr, dc = _MOVES[action]
        tgt = (state.agent[0] + dr, state.agent[1] + dc)
        if not (0 <= tgt[0] < self.size and 0 <= tgt[1] < self.size) or state.walls[tgt]:
            return replace(state, solution=()), 0.0
        if state.boxes[tgt]:
            beyond = (tgt[0] + dr, tgt[1] + dc)
            if (not (0 <= beyond[0] < self.size and 0 <= beyond[1] < self.size)
                    or state.walls[beyond] or state.boxes[beyond]):
                return replace(state, solution=()), 0.0
            boxes = state.boxes.copy()
            boxes[tgt] = False
            boxes[beyond] = True
            return SokobanState(tgt, boxes, state.goals, state.walls), 0.0
        return SokobanState(tgt, state.boxes, state.goals, state.walls), 0.0

    def sample_action(self, rng: np.random.Generator) -> int:
        return int(rng.integers(self.n_actions))

    def encode(self, state: SokobanState) -> np.ndarray:
        return np.concatenate([c.ravel() for c in state.channels()])

    def solved(self, state: SokobanState) -> bool:
        return bool(np.all(state.boxes == state.goals))

    def _plane(self, vec, index):
        n = self.size * self.size
        return vec[index * n:(index + 1) * n].reshape(self.size, self.size)

    def box_pinned_push(self, vec_prev: np.ndarray, vec_next: np.ndarray) -> bool:
        """True when this transition pushed a box into a cell walled off ahead."""
        b0 = self._plane(vec_prev, 1) > 0.5
        b1 = self._plane(vec_next, 1) > 0.5
        removed = np.argwhere(b0 & ~b1)
        added = np.argwhere(~b0 & b1)
        if len(removed) != 1 or len(added) != 1:
            return False
        (r0, c0), (r1, c1) = removed[0], added[0]
        dr, dc = r1 - r0, c1 - c0
        if abs(dr) + abs(dc) != 1:
            return False
        ahead = (r1 + dr, c1 + dc)
        if not (0 <= ahead[0] < self.size and 0 <= ahead[1] < self.size):
            return True
        walls = self._plane(vec_prev, 3) > 0.5
        return bool(walls[ahead])
