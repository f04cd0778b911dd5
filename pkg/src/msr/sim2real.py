"""Gridworld environments, exact finite-horizon policy optimization, domain
randomization, reward-discrepancy correction, and adversarial feature
alignment.

Environments are small rectangular grids with an absorbing goal. A step costs
`step_reward` (also on the step that enters the goal) and entering the goal
adds `goal_reward`; with `slip_prob` the executed move is replaced by one of
the other three, uniformly. Policies are solved exactly by backward induction
over the remaining horizon, so oracle tests can compare against brute-force
enumeration. Greedy ties break in the fixed action order up, down, left,
right.
"""

from dataclasses import dataclass, replace
import functools
import math

import numpy as np
from scipy.special import expit

from .errors import ConfigError, EmptyInputError, ShapeError, StateLookupError

ACTIONS = ("up", "down", "left", "right")
_MOVES = ((0, -1), (0, 1), (-1, 0), (1, 0))
_SLIP_MAX = 0.95
_RANDOMIZABLE = ("goal_reward", "slip_prob", "step_reward")
_VARIANTS = ("keep", "swap_start_goal")


@dataclass(frozen=True)
class GridEnv:
    width: int
    height: int
    start: tuple
    goal: tuple
    step_reward: float = -1.0
    goal_reward: float = 10.0
    slip_prob: float = 0.0
    horizon: int = 4

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ConfigError(f"grid {self.width}x{self.height} is empty")
        for name, cell in (("start", self.start), ("goal", self.goal)):
            x, y = cell
            if not (0 <= x < self.width and 0 <= y < self.height):
                raise ConfigError(f"{name} {cell} out of bounds")
        if tuple(self.start) == tuple(self.goal):
            raise ConfigError("start and goal must differ")
        if not 0.0 <= self.slip_prob < 1.0:
            raise ConfigError(f"slip_prob must be in [0, 1), got {self.slip_prob}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")

    @property
    def n_states(self) -> int:
        return self.width * self.height

    def state_index(self, state) -> int:
        x, y = state
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise StateLookupError(f"state {tuple(state)} out of bounds")
        return y * self.width + x


@functools.lru_cache(maxsize=256)
def _next_table(width: int, height: int, goal_idx: int):
    nxt = np.empty((width * height, 4), dtype=np.int64)
    for y in range(height):
        for x in range(width):
            s = y * width + x
            for a, (dx, dy) in enumerate(_MOVES):
                nx, ny = x + dx, y + dy
                if not (0 <= nx < width and 0 <= ny < height):
                    nx, ny = x, y
                nxt[s, a] = ny * width + nx
    nxt[goal_idx, :] = goal_idx
    nxt.setflags(write=False)
    return nxt


def next_state_table(env: GridEnv) -> np.ndarray:
    """(n_states, 4) index table of executed moves; off-grid moves stay in
    place and the goal is absorbing."""
    return _next_table(env.width, env.height, env.state_index(env.goal))


def reward_table(env: GridEnv) -> np.ndarray:
    """(n_states, 4) reward per executed move: step_reward everywhere outside
    the goal, plus goal_reward on moves that enter the goal."""
    nxt = next_state_table(env)
    goal_idx = env.state_index(env.goal)
    r = np.full((env.n_states, 4), env.step_reward, dtype=float)
    r += np.where(nxt == goal_idx, env.goal_reward, 0.0)
    r[goal_idx, :] = 0.0
    return r


@dataclass
class PolicyTable:
    """Greedy action per (state, remaining-horizon) plus the value tables."""

    actions: np.ndarray  # (horizon, n_states) int; row h-1 = h steps remaining
    values: np.ndarray   # (horizon + 1, n_states); row h = value with h steps left
    gamma: float
    width: int
    height: int
    horizon: int

    def action(self, state, steps_remaining: int | None = None) -> int:
        x, y = state
        if not (0 <= x < self.width and 0 <= y < self.height):
            raise StateLookupError(f"state {tuple(state)} out of bounds")
        h = self.horizon if steps_remaining is None else steps_remaining
        if not 1 <= h <= self.horizon:
            raise StateLookupError(f"steps_remaining {h} outside [1, {self.horizon}]")
        return int(self.actions[h - 1, y * self.width + x])

    def value(self, state, steps_remaining: int | None = None) -> float:
        x, y = state
        h = self.horizon if steps_remaining is None else steps_remaining
        return float(self.values[h, y * self.width + x])


def _slip_mix(slip_prob: float) -> np.ndarray:
    """(4, 4) probability that intending action a executes move b."""
    p = np.full((4, 4), slip_prob / 3.0)
    np.fill_diagonal(p, 1.0 - slip_prob)
    return p


def _solve(env: GridEnv, rewards: np.ndarray, gamma: float) -> PolicyTable:
    if not 0.0 <= gamma <= 1.0:
        raise ConfigError(f"gamma must be in [0, 1], got {gamma}")
    nxt = next_state_table(env)
    mix = _slip_mix(env.slip_prob)
    n, t = env.n_states, env.horizon
    actions = np.empty((t, n), dtype=np.int64)
    values = np.zeros((t + 1, n), dtype=float)
    v = values[0]
    for h in range(1, t + 1):
        per_move = rewards + gamma * v[nxt]      # (n, 4) per executed move
        q = per_move @ mix.T                     # (n, 4) per intended action
        actions[h - 1] = np.argmax(q, axis=1)    # first max = fixed action order
        v = np.max(q, axis=1)
        values[h] = v
    return PolicyTable(actions=actions, values=values, gamma=gamma,
                       width=env.width, height=env.height, horizon=t)


def optimize_policy(env: GridEnv, gamma: float) -> PolicyTable:
    """Exact backward induction over the remaining horizon."""
    return _solve(env, reward_table(env), gamma)


@dataclass(frozen=True)
class RandomizationSpec:
    """Gaussian variation per continuous parameter plus a categorical layout
    distribution and the seed that makes the draw reproducible."""

    continuous: dict  # name -> (mu, sigma)
    variants: dict    # variant name -> probability
    seed: int = 0


def randomize_env(base: GridEnv, spec: RandomizationSpec) -> GridEnv:
    """Randomized copy of the base environment.

    Continuous parameters move by a Gaussian draw (sorted parameter order,
    then the variant draw, so the stream layout is fixed); slip_prob is
    clamped to [0, 0.95]. The categorical variant either keeps the layout or
    swaps start and goal.
    """
    for name in spec.continuous:
        if name not in _RANDOMIZABLE:
            raise ConfigError(f"unknown randomizable parameter {name!r}")
    if not spec.variants:
        raise ConfigError("randomization needs at least one variant")
    for name in spec.variants:
        if name not in _VARIANTS:
            raise ConfigError(f"unknown environment variant {name!r}")
    total = math.fsum(spec.variants.values())
    if abs(total - 1.0) > 1e-9:
        raise ConfigError(f"variant probabilities sum to {total!r}, expected 1")
    for name, (_, sigma) in spec.continuous.items():
        if sigma < 0.0:
            raise ConfigError(f"sigma for {name!r} must be >= 0")

    rng = np.random.default_rng(np.random.SeedSequence(int(spec.seed)))
    changes = {}
    for name in sorted(spec.continuous):
        mu, sigma = spec.continuous[name]
        value = getattr(base, name) + mu + sigma * rng.standard_normal()
        if name == "slip_prob":
            value = min(max(value, 0.0), _SLIP_MAX)
        changes[name] = value
    names = sorted(spec.variants)
    probs = np.asarray([spec.variants[n] for n in names], dtype=float)
    variant = names[int(rng.choice(len(names), p=probs / probs.sum()))]
    if variant == "swap_start_goal":
        changes["start"], changes["goal"] = base.goal, base.start
    return replace(base, **changes)


@dataclass(frozen=True)
class Trajectory:
    steps: tuple  # ((state, action, reward), ...)


def rollout(env: GridEnv, policy: PolicyTable, rng=None) -> Trajectory:
    """Greedy rollout from the start; stops on goal entry or horizon."""
    if env.slip_prob > 0.0 and rng is None:
        raise ConfigError("stochastic environment needs an rng for rollout")
    nxt = next_state_table(env)
    rewards = reward_table(env)
    goal_idx = env.state_index(env.goal)
    s = env.state_index(env.start)
    steps = []
    for h in range(env.horizon, 0, -1):
        x, y = s % env.width, s // env.width
        a = policy.action((x, y), h)
        move = a
        if env.slip_prob > 0.0 and rng.random() < env.slip_prob:
            move = int(rng.choice([b for b in range(4) if b != a]))
        steps.append(((x, y), a, float(rewards[s, move])))
        s = int(nxt[s, move])
        if s == goal_idx:
            break
    return Trajectory(steps=tuple(steps))


def discounted_return(traj: Trajectory, gamma: float) -> float:
    return math.fsum(r * gamma ** t for t, (_, _, r) in enumerate(traj.steps))


def reward_discrepancy(r_real, r_sim):
    """Elementwise R_real - R_sim; scalar in, scalar out."""
    if np.isscalar(r_real) and np.isscalar(r_sim):
        return float(r_real) - float(r_sim)
    a = np.asarray(r_real, dtype=float)
    b = np.asarray(r_sim, dtype=float)
    if a.shape != b.shape:
        raise ShapeError(f"reward shapes {a.shape} vs {b.shape}")
    return a - b


def refine_policy(env_real: GridEnv, delta, alpha: float, gamma: float) -> PolicyTable:
    """Re-plan on the real environment with rewards R_real + alpha * delta."""
    rewards = reward_table(env_real)
    if not np.isscalar(delta):
        d = np.asarray(delta, dtype=float)
        if d.shape != rewards.shape:
            raise ShapeError(f"delta shape {d.shape} vs reward table {rewards.shape}")
        delta = d
    return _solve(env_real, rewards + alpha * delta, gamma)


@dataclass
class AlignmentModel:
    """Linear feature encoder plus a logistic discriminator over its output."""

    encoder: np.ndarray   # (enc_dim, in_dim)
    disc_w: np.ndarray    # (enc_dim,)
    disc_b: float
    lambda_task: float = 0.1

    @classmethod
    def init(cls, in_dim: int, enc_dim: int | None = None, lambda_task: float = 0.1):
        e = in_dim if enc_dim is None else enc_dim
        return cls(encoder=np.eye(e, in_dim), disc_w=np.zeros(e), disc_b=0.0,
                   lambda_task=lambda_task)


def _adv_loss_grads(x, y, w_enc, v, b):
    """Gradients of the mean discriminator log-likelihood."""
    z = x @ w_enc.T
    p = expit(z @ v + b)
    resid = y - p
    n = x.shape[0]
    gv = resid @ z / n
    gb = float(resid.mean())
    gw = np.outer(v, resid @ x / n)
    return gv, gb, gw


def _task_grad(x, w_enc):
    """Gradient of the mean squared reconstruction error |x - W^T W x|^2."""
    z = x @ w_enc.T
    r = z @ w_enc - x
    n = x.shape[0]
    return 2.0 / n * w_enc @ (x.T @ r + r.T @ x)


def align_features(sim_features, real_features, model: AlignmentModel,
                   steps: int = 500, lr: float = 0.05, rng=0,
                   freeze_encoder: bool = False):
    """Alternating adversarial updates between discriminator and encoder.

    The discriminator ascends the logistic log-likelihood of separating
    encoded sim (label 1) from real (label 0) samples; the encoder descends
    the same objective plus lambda_task times a reconstruction loss. Half of
    each sample set is held out; returns (updated model, held-out
    discriminator accuracy).
    """
    sim = np.atleast_2d(np.asarray(sim_features, dtype=float))
    real = np.atleast_2d(np.asarray(real_features, dtype=float))
    if sim.size == 0 or real.size == 0:
        raise EmptyInputError("alignment needs nonempty sim and real samples")
    if sim.shape[1] != real.shape[1]:
        raise ShapeError(f"feature dims differ: sim {sim.shape[1]} vs real {real.shape[1]}")
    if model.encoder.shape[1] != sim.shape[1]:
        raise ShapeError(
            f"encoder expects dim {model.encoder.shape[1]}, samples have {sim.shape[1]}"
        )

    gen = rng if isinstance(rng, np.random.Generator) else np.random.default_rng(rng)
    halves = []
    for block in (sim, real):
        perm = gen.permutation(block.shape[0])
        cut = block.shape[0] // 2 if block.shape[0] > 1 else 1
        halves.append((block[perm[:cut]], block[perm[cut:]] if block.shape[0] > 1 else block))
    (sim_tr, sim_ho), (real_tr, real_ho) = halves
    x_tr = np.concatenate([sim_tr, real_tr])
    y_tr = np.concatenate([np.ones(len(sim_tr)), np.zeros(len(real_tr))])
    x_ho = np.concatenate([sim_ho, real_ho])
    y_ho = np.concatenate([np.ones(len(sim_ho)), np.zeros(len(real_ho))])

    w_enc = model.encoder.copy()
    v = model.disc_w.copy()
    b = model.disc_b
    for _ in range(steps):
        gv, gb, _ = _adv_loss_grads(x_tr, y_tr, w_enc, v, b)
        v = v + lr * gv
        b = b + lr * gb
        if not freeze_encoder:
            _, _, gw = _adv_loss_grads(x_tr, y_tr, w_enc, v, b)
            w_enc = w_enc - lr * (gw + model.lambda_task * _task_grad(x_tr, w_enc))

    p_ho = expit((x_ho @ w_enc.T) @ v + b)
    accuracy = float(np.mean((p_ho > 0.5) == (y_ho > 0.5)))
    updated = AlignmentModel(encoder=w_enc, disc_w=v, disc_b=b,
                             lambda_task=model.lambda_task)
    return updated, accuracy
