"""Desk-scale Q-learning harness with swappable squared-error / Logistic loss.

One training run is single-threaded and fully determined by its seed: every
random draw (exploration, replay sampling, network init) comes from one
Philox stream consumed sequentially.  The Q-function is either a plain table
or a two-layer perceptron (one-hot state -> tanh hidden -> per-action heads)
with a hand-written backward pass so the loss-to-parameter gradient path can
be checked by finite differences.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import DomainError, TrainingError
from .gof import ks_statistic
from .distributions import Family, SampleBatch, fit_mle
from .mdp import TERMINAL, TabularMdp

LOSS_MSE = "mse"
LOSS_LLOSS = "lloss"


@dataclass(frozen=True)
class TrainConfig:
    loss: str = LOSS_MSE
    sigma: float = 1.0
    batch_size: int = 256
    lr: float = 3e-4
    gamma: float = 0.99
    tau: float = 0.005
    reward_scale: float = 1.0
    epochs: int = 200
    steps_per_epoch: int = 64
    updates_per_epoch: int = 16
    replay_capacity: int = 10_000
    epsilon_start: float = 1.0
    epsilon_final: float = 0.05
    early_stop_patience: int = 50
    approximator: str = "tabular"  # "tabular" | "mlp"
    hidden: int = 32
    max_episode_steps: int | None = None
    seed: int = 0

    def __post_init__(self):
        if self.loss not in (LOSS_MSE, LOSS_LLOSS):
            raise DomainError(f"loss must be '{LOSS_MSE}' or '{LOSS_LLOSS}'")
        if self.batch_size < 1:
            raise DomainError("batch_size must be >= 1")
        if not self.lr > 0:
            raise DomainError("lr must be positive")
        if not 0.0 < self.tau <= 1.0:
            raise DomainError("tau must lie in (0, 1]")
        if not 0.0 < self.gamma < 1.0:
            raise DomainError("gamma must lie in (0, 1)")
        if not self.sigma > 0:
            raise DomainError("sigma must be positive")
        if not self.reward_scale > 0:
            raise DomainError("reward_scale must be positive")
        if self.approximator not in ("tabular", "mlp"):
            raise DomainError("approximator must be 'tabular' or 'mlp'")


@dataclass(frozen=True)
class Transition:
    s: int
    a: int
    r: float
    s_next: int  # TERMINAL when the episode ended
    terminal: bool


@dataclass
class TrainLog:
    config: TrainConfig
    rewards: np.ndarray = field(default_factory=lambda: np.zeros(0))
    bellman_errors: list = field(default_factory=list)  # one array per epoch
    final_policy: np.ndarray = field(default_factory=lambda: np.zeros(0, dtype=np.int64))
    final_q: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    epochs_run: int = 0

    def equals(self, other: "TrainLog") -> bool:
        return (
            self.epochs_run == other.epochs_run
            and np.array_equal(self.rewards, other.rewards)
            and len(self.bellman_errors) == len(other.bellman_errors)
            and all(
                np.array_equal(a, b)
                for a, b in zip(self.bellman_errors, other.bellman_errors)
            )
            and np.array_equal(self.final_policy, other.final_policy)
            and np.array_equal(self.final_q, other.final_q)
        )


# ---------------------------------------------------------------------------
# Q-function approximators
# ---------------------------------------------------------------------------

class TabularQ:
    def __init__(self, n_states: int, n_actions: int, rng: np.random.Generator):
        self.values = 0.01 * rng.standard_normal((n_states, n_actions))

    def q_values(self, states: np.ndarray) -> np.ndarray:
        return self.values[states]

    def all_values(self) -> np.ndarray:
        return self.values.copy()

    def apply_output_grad(self, states, actions, grad_out, lr):
        delta = np.zeros_like(self.values)
        np.add.at(delta, (states, actions), grad_out)
        self.values -= lr * delta

    def get_flat(self) -> np.ndarray:
        return self.values.reshape(-1).copy()

    def set_flat(self, flat: np.ndarray) -> None:
        self.values = flat.reshape(self.values.shape).copy()

    def mix_from(self, other: "TabularQ", tau: float) -> None:
        self.values = (1.0 - tau) * self.values + tau * other.values

    def clone(self) -> "TabularQ":
        out = object.__new__(TabularQ)
        out.values = self.values.copy()
        return out


class MlpQ:
    """One-hot state -> hidden tanh layer -> linear per-action outputs."""

    def __init__(self, n_states: int, n_actions: int, hidden: int, rng: np.random.Generator):
        self.n_states = n_states
        self.w1 = rng.standard_normal((n_states, hidden)) / math.sqrt(n_states)
        self.b1 = np.zeros(hidden)
        self.w2 = rng.standard_normal((hidden, n_actions)) / math.sqrt(hidden)
        self.b2 = np.zeros(n_actions)

    def _hidden(self, states: np.ndarray) -> np.ndarray:
        return np.tanh(self.w1[states] + self.b1)

    def q_values(self, states: np.ndarray) -> np.ndarray:
        return self._hidden(states) @ self.w2 + self.b2

    def all_values(self) -> np.ndarray:
        return self.q_values(np.arange(self.n_states))

    def apply_output_grad(self, states, actions, grad_out, lr):
        g_w1, g_b1, g_w2, g_b2 = self.output_grad_params(states, actions, grad_out)
        self.w1 -= lr * g_w1
        self.b1 -= lr * g_b1
        self.w2 -= lr * g_w2
        self.b2 -= lr * g_b2

    def output_grad_params(self, states, actions, grad_out):
        """Backprop of sum_n grad_out[n] * Q(s_n, a_n) through the network."""
        h = self._hidden(states)  # (n, H)
        dq = np.zeros((len(states), self.b2.size))
        dq[np.arange(len(states)), actions] = grad_out
        g_w2 = h.T @ dq
        g_b2 = dq.sum(axis=0)
        dh = dq @ self.w2.T
        dpre = dh * (1.0 - h * h)
        g_w1 = np.zeros_like(self.w1)
        np.add.at(g_w1, states, dpre)
        g_b1 = dpre.sum(axis=0)
        return g_w1, g_b1, g_w2, g_b2

    def get_flat(self) -> np.ndarray:
        return np.concatenate([self.w1.ravel(), self.b1, self.w2.ravel(), self.b2])

    def set_flat(self, flat: np.ndarray) -> None:
        sizes = [self.w1.size, self.b1.size, self.w2.size, self.b2.size]
        parts = np.split(np.asarray(flat, dtype=float), np.cumsum(sizes)[:-1])
        self.w1 = parts[0].reshape(self.w1.shape).copy()
        self.b1 = parts[1].copy()
        self.w2 = parts[2].reshape(self.w2.shape).copy()
        self.b2 = parts[3].copy()

    def mix_from(self, other: "MlpQ", tau: float) -> None:
        for name in ("w1", "b1", "w2", "b2"):
            mixed = (1.0 - tau) * getattr(self, name) + tau * getattr(other, name)
            setattr(self, name, mixed)

    def clone(self) -> "MlpQ":
        out = object.__new__(MlpQ)
        out.n_states = self.n_states
        for name in ("w1", "b1", "w2", "b2"):
            setattr(out, name, getattr(self, name).copy())
        return out


def make_qfunc(env: TabularMdp, cfg: TrainConfig, rng: np.random.Generator):
    if cfg.approximator == "tabular":
        return TabularQ(env.n_states, env.n_actions, rng)
    return MlpQ(env.n_states, env.n_actions, cfg.hidden, rng)


def td_errors(qnet, target_net, batch: list[Transition], cfg: TrainConfig) -> np.ndarray:
    """Target-minus-estimate residuals for a batch (rewards pre-scaled)."""
    states = np.array([tr.s for tr in batch])
    actions = np.array([tr.a for tr in batch])
    rewards = np.array([tr.r for tr in batch]) * cfg.reward_scale
    next_states = np.array([max(tr.s_next, 0) for tr in batch])
    live = np.array([0.0 if tr.terminal else 1.0 for tr in batch])
    next_max = target_net.q_values(next_states).max(axis=1)
    targets = rewards + cfg.gamma * live * next_max
    preds = qnet.q_values(states)[np.arange(len(batch)), actions]
    return targets - preds


def loss_output_grad(errors: np.ndarray, cfg: TrainConfig) -> np.ndarray:
    """d(loss)/d(prediction) per batch element; errors are target - estimate."""
    n = errors.size
    if cfg.loss == LOSS_MSE:
        return -errors / n
    return -np.tanh(errors / (2.0 * cfg.sigma)) / (n * cfg.sigma)


def greedy_return(env: TabularMdp, q_table: np.ndarray, start: int = 0, cap: int | None = None) -> float:
    """Undiscounted return of the greedy policy from ``start``."""
    cap = cap if cap is not None else 4 * env.n_states
    s, total = start, 0.0
    for _ in range(cap):
        a = int(np.argmax(q_table[s]))
        total += env.reward[s, a]
        nxt = int(env.transition[s, a])
        if nxt == TERMINAL:
            break
        s = nxt
    return total


def optimal_return(env: TabularMdp, qstar: np.ndarray, start: int = 0) -> float:
    return greedy_return(env, qstar, start=start, cap=4 * env.n_states)


def run_training(env: TabularMdp, cfg: TrainConfig) -> TrainLog:
    """Epsilon-greedy replay Q-learning; deterministic given cfg.seed."""
    rng = np.random.Generator(np.random.Philox(key=cfg.seed))
    qnet = make_qfunc(env, cfg, rng)
    target_net = qnet.clone()
    replay: list[Transition] = []
    replay_pos = 0
    cap = cfg.max_episode_steps or 4 * env.n_states

    state = 0
    episode_steps = 0
    rewards_log: list[float] = []
    errors_log: list[np.ndarray] = []
    best = -math.inf
    stale = 0
    epochs_run = 0
    last_good = None

    for epoch in range(cfg.epochs):
        frac = epoch / max(cfg.epochs - 1, 1)
        epsilon = cfg.epsilon_start + (cfg.epsilon_final - cfg.epsilon_start) * frac

        for _ in range(cfg.steps_per_epoch):
            if rng.random() < epsilon:
                action = int(rng.integers(env.n_actions))
            else:
                action = int(np.argmax(qnet.q_values(np.array([state]))[0]))
            nxt = int(env.transition[state, action])
            tr = Transition(
                s=state,
                a=action,
                r=float(env.reward[state, action]),
                s_next=nxt,
                terminal=nxt == TERMINAL,
            )
            if len(replay) < cfg.replay_capacity:
                replay.append(tr)
            else:
                replay[replay_pos] = tr
                replay_pos = (replay_pos + 1) % cfg.replay_capacity
            episode_steps += 1
            if nxt == TERMINAL or episode_steps >= cap:
                state, episode_steps = 0, 0
            else:
                state = nxt

        epoch_errors = np.zeros(0)
        if len(replay) >= cfg.batch_size:
            for _ in range(cfg.updates_per_epoch):
                idx = rng.integers(len(replay), size=cfg.batch_size)
                batch = [replay[i] for i in idx]
                errs = td_errors(qnet, target_net, batch, cfg)
                if not np.all(np.isfinite(errs)):
                    raise TrainingError("training diverged (non-finite errors)", last_good)
                grad_out = loss_output_grad(errs, cfg)
                states = np.array([tr.s for tr in batch])
                actions = np.array([tr.a for tr in batch])
                qnet.apply_output_grad(states, actions, grad_out, cfg.lr)
                target_net.mix_from(qnet, cfg.tau)
                epoch_errors = errs

        table = qnet.all_values()
        ret = greedy_return(env, table, cap=cap)
        rewards_log.append(ret)
        errors_log.append(epoch_errors)
        epochs_run = epoch + 1
        last_good = table

        if ret > best + 1e-12:
            best, stale = ret, 0
        else:
            stale += 1
            if stale >= cfg.early_stop_patience:
                break

    final_q = qnet.all_values()
    return TrainLog(
        config=cfg,
        rewards=np.array(rewards_log),
        bellman_errors=errors_log,
        final_policy=np.argmax(final_q, axis=1),
        final_q=final_q,
        epochs_run=epochs_run,
    )


@dataclass(frozen=True)
class LossComparison:
    per_seed_mse: np.ndarray
    per_seed_lloss: np.ndarray
    mean_mse: float
    mean_lloss: float
    enhancement: float
    logistic_vs_normal_wins: int
    comparisons: int


def compare_losses(env: TabularMdp, base: TrainConfig, seeds) -> LossComparison:
    """Run both loss arms per seed; report returns, the enhancement ratio
    (R_lloss - R_mse)/R_mse, and how often the per-epoch Bellman-error batch
    is fit better (two-sided KS) by a Logistic than by a Normal."""
    seeds = list(seeds)
    if len(seeds) < 2:
        raise DomainError("compare_losses needs at least 2 seeds")
    best_mse, best_ll = [], []
    wins = comps = 0
    for seed in seeds:
        for loss_name, sink in ((LOSS_MSE, best_mse), (LOSS_LLOSS, best_ll)):
            log = run_training(env, replace(base, loss=loss_name, seed=seed))
            sink.append(float(np.max(log.rewards)))
            for errs in log.bellman_errors:
                if errs.size >= 16 and np.unique(errs).size >= 2:
                    batch = SampleBatch(errs)
                    ks_log = ks_statistic(batch, fit_mle(Family.LOGISTIC, batch))
                    ks_norm = ks_statistic(batch, fit_mle(Family.NORMAL, batch))
                    comps += 1
                    wins += int(ks_log <= ks_norm)
    mean_mse = float(np.mean(best_mse))
    mean_ll = float(np.mean(best_ll))
    enhancement = (mean_ll - mean_mse) / mean_mse if mean_mse != 0 else float("nan")
    return LossComparison(
        per_seed_mse=np.array(best_mse),
        per_seed_lloss=np.array(best_ll),
        mean_mse=mean_mse,
        mean_lloss=mean_ll,
        enhancement=enhancement,
        logistic_vs_normal_wins=wins,
        comparisons=comps,
    )
