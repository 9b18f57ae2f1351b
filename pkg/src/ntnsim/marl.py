"""Actor-critic learner with a centralized critic, built on a plain MLP.

Every agent owns an actor network with one categorical head per action
component; a single critic network sees all agents' observations and
one-hot actions and produces the shared advantage that each actor trains
on. All gradients are exact reverse-mode derivations of the stated losses,
and optimization is RMSprop. Updates fire each time a fixed number of
completed transitions has been collected, so a training run is a pure
function of (config, seed).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .config import TrainSettings


class DivergenceError(RuntimeError):
    """Training produced non-finite parameters or losses."""


class CheckpointError(RuntimeError):
    """A checkpoint file is malformed or inconsistent with the config."""


# -- multilayer perceptron ----------------------------------------------------

def init_mlp(rng: np.random.Generator, sizes) -> dict[str, np.ndarray]:
    """Uniform init scaled by 1/sqrt(fan_in) for each affine layer."""
    params = {}
    for i, (f_in, f_out) in enumerate(zip(sizes[:-1], sizes[1:]), start=1):
        bound = 1.0 / np.sqrt(f_in)
        params[f"W{i}"] = rng.uniform(-bound, bound, size=(f_in, f_out))
        params[f"b{i}"] = rng.uniform(-bound, bound, size=f_out)
    return params


def mlp_layers(params: dict[str, np.ndarray]) -> int:
    return len(params) // 2


def mlp_forward(params: dict[str, np.ndarray], x: np.ndarray):
    """Forward pass with ReLU on hidden layers; returns (output, cache)."""
    n = mlp_layers(params)
    h = np.atleast_2d(x)
    pre, post = [], [h]
    for i in range(1, n + 1):
        z = h @ params[f"W{i}"] + params[f"b{i}"]
        pre.append(z)
        h = np.maximum(z, 0.0) if i < n else z
        post.append(h)
    return h, (pre, post)


def mlp_backward(params: dict[str, np.ndarray], cache, d_out: np.ndarray
                 ) -> dict[str, np.ndarray]:
    """Exact gradients of sum(d_out * output) w.r.t. every parameter."""
    pre, post = cache
    n = mlp_layers(params)
    grads = {}
    d = np.atleast_2d(d_out)
    for i in range(n, 0, -1):
        grads[f"W{i}"] = post[i - 1].T @ d
        grads[f"b{i}"] = d.sum(axis=0)
        if i > 1:
            d = (d @ params[f"W{i}"].T) * (pre[i - 2] > 0.0)
    return grads


def softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


# -- optimizer ----------------------------------------------------------------

class RmsProp:
    """Root-mean-square propagation on a named parameter dict."""

    def __init__(self, params: dict[str, np.ndarray], lr: float = 1e-4,
                 decay: float = 0.99, eps: float = 1e-8):
        self.lr = lr
        self.decay = decay
        self.eps = eps
        self.square_avg = {k: np.zeros_like(v) for k, v in params.items()}

    def step(self, params: dict[str, np.ndarray],
             grads: dict[str, np.ndarray]) -> None:
        for k, g in grads.items():
            s = self.square_avg[k]
            s *= self.decay
            s += (1.0 - self.decay) * g * g
            params[k] -= self.lr * g / (np.sqrt(s) + self.eps)


# -- actor and critic ----------------------------------------------------------

class ActorNetwork:
    """Policy over factored categorical heads."""

    def __init__(self, rng: np.random.Generator, obs_dim: int, head_sizes,
                 hidden: int = 128):
        self.head_sizes = tuple(head_sizes)
        self.obs_dim = obs_dim
        self.params = init_mlp(rng, (obs_dim, hidden, hidden,
                                     sum(self.head_sizes)))
        self._splits = np.cumsum(self.head_sizes)[:-1]

    def head_probs(self, obs: np.ndarray):
        out, cache = mlp_forward(self.params, obs)
        probs = [softmax(chunk) for chunk in np.split(out, self._splits,
                                                      axis=-1)]
        return probs, cache

    def sample(self, obs: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        probs, _ = self.head_probs(obs)
        picks = []
        for p in probs:
            u = rng.random()
            picks.append(int(np.searchsorted(np.cumsum(p[0]), u)))
        return np.array([min(p, s - 1) for p, s in zip(picks, self.head_sizes)])

    def greedy(self, obs: np.ndarray) -> np.ndarray:
        probs, _ = self.head_probs(obs)
        return np.array([int(np.argmax(p[0])) for p in probs])

    def log_prob(self, obs: np.ndarray, actions: np.ndarray) -> np.ndarray:
        """Summed per-head log-probabilities of the taken actions (batch)."""
        probs, _ = self.head_probs(obs)
        acts = np.atleast_2d(actions)
        rows = np.arange(acts.shape[0])
        total = np.zeros(acts.shape[0])
        for h, p in enumerate(probs):
            total += np.log(p[rows, acts[:, h]])
        return total

    def loss_and_grads(self, obs: np.ndarray, actions: np.ndarray,
                       coeffs: np.ndarray, entropy_coeff: float = 0.0):
        """Mean policy-gradient loss -coeff*log pi and its exact gradients."""
        probs, cache = self.head_probs(obs)
        acts = np.atleast_2d(actions)
        batch = acts.shape[0]
        rows = np.arange(batch)
        loss = 0.0
        d_chunks = []
        for h, p in enumerate(probs):
            logp = np.log(p[rows, acts[:, h]])
            loss -= float(np.mean(coeffs * logp))
            one_hot = np.zeros_like(p)
            one_hot[rows, acts[:, h]] = 1.0
            dz = (coeffs[:, None] / batch) * (p - one_hot)
            if entropy_coeff > 0.0:
                log_all = np.log(np.clip(p, 1e-300, None))
                ent = -np.sum(p * log_all, axis=1)
                loss -= entropy_coeff * float(np.mean(ent))
                dz += (entropy_coeff / batch) * p * (log_all + ent[:, None])
            d_chunks.append(dz)
        grads = mlp_backward(self.params, cache, np.concatenate(d_chunks,
                                                                axis=1))
        return loss, grads


class CriticNetwork:
    """Scalar value network over the joint observation-action vector."""

    def __init__(self, rng: np.random.Generator, input_dim: int,
                 hidden: int = 128):
        self.input_dim = input_dim
        self.params = init_mlp(rng, (input_dim, hidden, hidden, 1))

    def values(self, x: np.ndarray) -> np.ndarray:
        out, _ = mlp_forward(self.params, x)
        return out[:, 0]

    def value_grads(self, x: np.ndarray, coeffs: np.ndarray):
        """Gradients of sum(coeffs * V(x)) for an externally chosen direction."""
        out, cache = mlp_forward(self.params, x)
        grads = mlp_backward(self.params, cache, np.atleast_2d(coeffs).T)
        return out[:, 0], grads

    def loss_and_grads(self, x: np.ndarray, targets: np.ndarray):
        """Mean squared advantage with the bootstrap target held fixed."""
        out, cache = mlp_forward(self.params, x)
        v = out[:, 0]
        kappa = targets - v
        loss = float(np.mean(kappa ** 2))
        d_out = (-2.0 * kappa / kappa.size)[:, None]
        return loss, mlp_backward(self.params, cache, d_out)


def one_hot_actions(actions: np.ndarray, head_sizes) -> np.ndarray:
    """Concatenate per-head one-hot encodings; batch-first."""
    acts = np.atleast_2d(actions)
    chunks = []
    for h, size in enumerate(head_sizes):
        oh = np.zeros((acts.shape[0], size))
        oh[np.arange(acts.shape[0]), acts[:, h]] = 1.0
        chunks.append(oh)
    return np.concatenate(chunks, axis=1)


def critic_input(joint_obs: np.ndarray, joint_actions: np.ndarray,
                 head_sizes) -> np.ndarray:
    """Stack every agent's observation and one-hot action into one vector.

    ``joint_obs`` is (n_agents, obs_dim) and ``joint_actions`` is
    (n_agents, n_heads) for one time step.
    """
    parts = []
    for j in range(joint_obs.shape[0]):
        parts.append(joint_obs[j])
        parts.append(one_hot_actions(joint_actions[j], head_sizes)[0])
    return np.concatenate(parts)


# -- training ------------------------------------------------------------------

@dataclass
class EpisodeRow:
    episode: int
    reward_return: float
    mean_sum_bps: float
    mean_sum_energy_j: float
    critic_loss: float
    actor_loss: float


@dataclass
class TrainResult:
    actors: list[ActorNetwork]
    critic: CriticNetwork
    episode_rows: list[EpisodeRow] = field(default_factory=list)
    n_updates: int = 0


class A2CTrainer:
    """Synchronous advantage actor-critic over a relay-network environment.

    The environment must expose ``reset() -> [obs]``,
    ``step(actions) -> (obs, reward, done, info)``, ``obs_dim``,
    ``head_sizes`` and ``n_agents``. Transitions complete once the next
    joint action is known (or at the terminal slot), and an update runs
    every ``batch_size`` completed transitions: critic first, advantages
    recomputed, then every actor on the shared advantage.
    """

    def __init__(self, env, ts: TrainSettings):
        self.env = env
        self.ts = ts
        self.rng = np.random.default_rng(ts.seed)
        self.actors = [ActorNetwork(self.rng, env.obs_dim, env.head_sizes,
                                    ts.hidden_units)
                       for _ in range(env.n_agents)]
        joint_dim = env.n_agents * (env.obs_dim + sum(env.head_sizes))
        self.critic = CriticNetwork(self.rng, joint_dim, ts.hidden_units)
        self.critic_opt = RmsProp(self.critic.params, ts.lr_critic,
                                  ts.rmsprop_decay, ts.rmsprop_eps)
        self.actor_opts = [RmsProp(a.params, ts.lr_actor, ts.rmsprop_decay,
                                   ts.rmsprop_eps) for a in self.actors]
        self.last_critic_loss = float("nan")
        self.last_actor_loss = float("nan")
        self.n_updates = 0

    def _sample_joint(self, obs_list) -> np.ndarray:
        return np.array([self.actors[j].sample(obs_list[j], self.rng)
                         for j in range(self.env.n_agents)])

    def train(self) -> TrainResult:
        ts = self.ts
        buffer: list[dict] = []
        rows: list[EpisodeRow] = []
        for episode in range(ts.episodes):
            obs = self.env.reset()
            pending = None
            ep_return = 0.0
            ep_bits = 0.0
            ep_energy = 0.0
            done = False
            n_steps = 0
            while not done:
                joint_obs = np.array(obs)
                actions = self._sample_joint(obs)
                if pending is not None:
                    pending["next_actions"] = actions
                    buffer.append(pending)
                    pending = None
                    if len(buffer) >= ts.batch_size:
                        self._update(buffer[:ts.batch_size])
                        del buffer[:ts.batch_size]
                obs, reward, done, info = self.env.step(actions)
                n_steps += 1
                ep_return += reward
                ep_bits += info["metrics"].sum_throughput_bps
                ep_energy += info["metrics"].sum_energy_j
                transition = {
                    "obs": joint_obs,
                    "actions": actions,
                    "reward": reward,
                    "next_obs": np.array(obs),
                    "next_actions": None,
                    "done": done,
                }
                if done:
                    buffer.append(transition)
                    if len(buffer) >= ts.batch_size:
                        self._update(buffer[:ts.batch_size])
                        del buffer[:ts.batch_size]
                else:
                    pending = transition
            rows.append(EpisodeRow(
                episode=episode, reward_return=ep_return,
                mean_sum_bps=ep_bits / max(n_steps, 1),
                mean_sum_energy_j=ep_energy / max(n_steps, 1),
                critic_loss=self.last_critic_loss,
                actor_loss=self.last_actor_loss))
        return TrainResult(actors=self.actors, critic=self.critic,
                           episode_rows=rows, n_updates=self.n_updates)

    def _update(self, batch: list[dict]) -> None:
        hs = self.env.head_sizes
        x = np.array([critic_input(t["obs"], t["actions"], hs)
                      for t in batch])
        x_next = np.array([
            critic_input(t["next_obs"], t["next_actions"], hs)
            if not t["done"] else np.zeros(self.critic.input_dim)
            for t in batch])
        rewards = np.array([t["reward"] for t in batch])
        not_done = np.array([0.0 if t["done"] else 1.0 for t in batch])

        v_next = self.critic.values(x_next)
        targets = rewards + self.ts.gamma * not_done * v_next
        loss, grads = self.critic.loss_and_grads(x, targets)
        self.critic_opt.step(self.critic.params, grads)

        # advantages recomputed with the updated critic, shared by every actor
        v = self.critic.values(x)
        v_next = self.critic.values(x_next)
        kappa = rewards + self.ts.gamma * not_done * v_next - v

        actor_losses = []
        for j, (actor, opt) in enumerate(zip(self.actors, self.actor_opts)):
            obs_j = np.array([t["obs"][j] for t in batch])
            act_j = np.array([t["actions"][j] for t in batch])
            a_loss, a_grads = actor.loss_and_grads(obs_j, act_j, kappa,
                                                   self.ts.entropy_coeff)
            opt.step(actor.params, a_grads)
            actor_losses.append(a_loss)

        self.last_critic_loss = loss
        self.last_actor_loss = float(np.mean(actor_losses))
        self.n_updates += 1
        if not (np.isfinite(loss) and np.isfinite(self.last_actor_loss)):
            raise DivergenceError(
                f"non-finite loss at update {self.n_updates}")


def greedy_rollout(env, actors: list[ActorNetwork]) -> list[dict]:
    """One argmax-policy episode; returns the per-slot info records."""
    obs = env.reset()
    records = []
    done = False
    while not done:
        actions = np.array([actors[j].greedy(obs[j])
                            for j in range(env.n_agents)])
        obs, reward, done, info = env.step(actions)
        info["reward"] = reward
        info["uav_positions"] = env.uav_positions
        records.append(info)
    return records


# -- checkpoints ----------------------------------------------------------------

CHECKPOINT_MAGIC = b"NTNCKPT1\n"


def _named_arrays(actors: list[ActorNetwork], critic: CriticNetwork):
    for j, actor in enumerate(actors):
        for key in sorted(actor.params):
            yield f"actor{j}/{key}", actor.params[key]
    for key in sorted(critic.params):
        yield f"critic/{key}", critic.params[key]


def save_checkpoint(path, actors: list[ActorNetwork], critic: CriticNetwork,
                    meta: dict) -> None:
    """Persist all parameters: JSON shape manifest + little-endian f64 blob."""
    names, blobs, shapes = [], [], []
    for name, arr in _named_arrays(actors, critic):
        names.append(name)
        shapes.append(list(arr.shape))
        blobs.append(np.ascontiguousarray(arr, dtype="<f8").tobytes())
    header = {
        "format": 1,
        "meta": meta,
        "head_sizes": list(actors[0].head_sizes),
        "obs_dim": actors[0].obs_dim,
        "n_agents": len(actors),
        "arrays": [[n, s] for n, s in zip(names, shapes)],
    }
    with open(path, "wb") as fh:
        fh.write(CHECKPOINT_MAGIC)
        fh.write(json.dumps(header, sort_keys=True).encode("utf-8"))
        fh.write(b"\n")
        for blob in blobs:
            fh.write(blob)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as fh:
        magic = fh.read(len(CHECKPOINT_MAGIC))
        if magic != CHECKPOINT_MAGIC:
            raise CheckpointError(f"{path} is not a checkpoint file")
        header_line = fh.readline()
        try:
            header = json.loads(header_line.decode("utf-8"))
        except json.JSONDecodeError as e:
            raise CheckpointError("unreadable checkpoint header") from e
        arrays = {}
        for name, shape in header["arrays"]:
            count = int(np.prod(shape)) if shape else 1
            buf = fh.read(count * 8)
            if len(buf) != count * 8:
                raise CheckpointError(f"truncated blob for {name}")
            arrays[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
    return header, arrays


def restore_actors(env, header: dict, arrays: dict[str, np.ndarray]
                   ) -> list[ActorNetwork]:
    """Rebuild greedy-evaluation actors, checking shapes against the env."""
    if header["n_agents"] != env.n_agents:
        raise CheckpointError(
            f"checkpoint has {header['n_agents']} agents, config has "
            f"{env.n_agents}")
    if header["obs_dim"] != env.obs_dim or \
            tuple(header["head_sizes"]) != tuple(env.head_sizes):
        raise CheckpointError("checkpoint dimensions do not match the config")
    rng = np.random.default_rng(0)
    hidden = None
    for name in arrays:
        if name.endswith("/W1") and name.startswith("actor0"):
            hidden = arrays[name].shape[1]
    if hidden is None:
        raise CheckpointError("checkpoint misses actor0/W1")
    actors = []
    for j in range(env.n_agents):
        actor = ActorNetwork(rng, env.obs_dim, env.head_sizes, hidden)
        for key in actor.params:
            name = f"actor{j}/{key}"
            if name not in arrays:
                raise CheckpointError(f"checkpoint misses {name}")
            if arrays[name].shape != actor.params[key].shape:
                raise CheckpointError(f"shape mismatch for {name}")
            actor.params[key] = arrays[name]
        actors.append(actor)
    return actors
