"""Closed-loop receding-horizon control with a scripted visual planner.

The planner renders a short look-ahead of future frames; the translator
recovers an action chunk from adjacent frame pairs (anchored at the
current observation); the simulator executes the first K frames' worth
of actions; then the loop replans from fresh observations. Oracle,
noisy, and adversarial planner modes isolate planner-versus-translator
failure attribution.
"""

import io
from dataclasses import dataclass, field

import numpy as np

from .field import analytic_jacobians_at_pixels
from .flow import FlowField, FlowNoiseModel, add_noise, flow_between_states
from .inversion import RidgeParams, translate_chunk
from .kinematics import (
    CameraModel,
    ChainConfig,
    ChainState,
    DELTA_MAX_DEFAULT,
    clamp_state,
    jacobian_at_world_points,
    joint_world_positions,
    tip_pixel,
    unproject,
)
from .models import PatchFieldModel, evaluate_field
from .render import RenderStyle, render


@dataclass(frozen=True)
class ControllerConfig:
    context_n: int = 6          # observation history length (interface parity)
    lookahead_m: int = 4        # frames planned per call
    commit_k: int = 1           # planned frames executed per call
    actions_per_frame: int = 1  # low-level actions per committed frame
    max_steps: int = 60
    delta_max: float = DELTA_MAX_DEFAULT
    replan_noise: FlowNoiseModel | None = None

    def __post_init__(self):
        if not (1 <= self.commit_k <= self.lookahead_m):
            raise ValueError("need 1 <= commit_k <= lookahead_m")
        if self.context_n < 1 or self.actions_per_frame < 1:
            raise ValueError("context_n and actions_per_frame must be >= 1")


@dataclass(frozen=True)
class GoalSpec:
    """Geometric goal: either a joint-space target or a tip pixel target."""

    kind: str                   # "joint" | "tip_pixel"
    target: np.ndarray
    tolerance: float = 2.0      # pixels for tip goals, radians for joint goals

    def __post_init__(self):
        object.__setattr__(self, "target", np.asarray(self.target, dtype=np.float64))
        if self.kind not in ("joint", "tip_pixel"):
            raise ValueError(f"unknown goal kind {self.kind!r}")


def goal_distance(config: ChainConfig, camera: CameraModel, state: ChainState, goal: GoalSpec) -> float:
    if goal.kind == "joint":
        return float(np.linalg.norm(state.q - goal.target))
    return float(np.linalg.norm(tip_pixel(config, camera, state) - goal.target))


class ScriptedPlanner:
    """Deterministic stand-in for a generative visual planner.

    oracle: renders a resolved-rate path toward the goal (per-step joint
    move = damped pseudoinverse step, capped at delta_plan).
    noisy: perturbs the path states with Gaussian joint noise before
    rendering, modeling hallucinated but roughly goal-directed frames.
    adversarial: renders state jumps far beyond any feasible single-step
    action, for faithfulness stress tests.

    ``last_states`` records the states behind the most recent plan so a
    flow oracle can stand in for a learned flow front-end.
    """

    def __init__(
        self,
        config: ChainConfig,
        camera: CameraModel,
        style: RenderStyle,
        mode: str = "oracle",
        delta_plan: float = DELTA_MAX_DEFAULT,
        noise_sigma: float = 0.03,
        seed: int = 0,
    ):
        if mode not in ("oracle", "noisy", "adversarial"):
            raise ValueError(f"unknown planner mode {mode!r}")
        self.config = config
        self.camera = camera
        self.style = style
        self.mode = mode
        self.delta_plan = delta_plan
        self.noise_sigma = noise_sigma
        self.rng = np.random.default_rng(seed)
        self.last_states: list[ChainState] = []

    def _resolved_rate_step(self, state: ChainState, goal: GoalSpec) -> np.ndarray:
        if goal.kind == "joint":
            step = goal.target - state.q
        else:
            err = goal.target - tip_pixel(self.config, self.camera, state)
            tip = joint_world_positions(self.config, state)[-1]
            # pixel-space tip Jacobian: scale times the world Jacobian of the tip
            jw = jacobian_at_world_points(
                self.config, state, tip[None], np.array([self.config.n_joints - 1])
            )[0]
            jp = self.camera.scale * jw
            damp = 1e-2 * max(1.0, float(np.trace(jp @ jp.T)) / 2.0)
            step = jp.T @ np.linalg.solve(jp @ jp.T + damp * np.eye(2), err)
        cap = np.max(np.abs(step))
        if cap > self.delta_plan:
            step = step * (self.delta_plan / cap)
        return step

    def plan(self, state: ChainState, goal: GoalSpec, m: int) -> list[np.ndarray]:
        """M future frames; also records the underlying states."""
        if goal.kind == "tip_pixel":
            reach_world = unproject(self.camera, goal.target) - self.config.base_position
            if np.linalg.norm(reach_world) > self.config.reach:
                raise ValueError("tip target outside the reachable disc")
        states, frames = [], []
        q = state.q
        for _ in range(m):
            if self.mode == "adversarial":
                jump = self.rng.uniform(-1.0, 1.0, self.config.n_joints)
                jump *= 3.0 * self.delta_plan / max(np.max(np.abs(jump)), 1e-12)
                q = clamp_state(self.config, q + jump).q
                shown = ChainState(q)
            else:
                q = clamp_state(
                    self.config, q + self._resolved_rate_step(ChainState(q), goal)
                ).q
                shown = ChainState(q)
                if self.mode == "noisy":
                    shown = clamp_state(
                        self.config, q + self.rng.normal(0.0, self.noise_sigma, q.size)
                    )
            states.append(shown)
            frames.append(render(self.config, self.camera, self.style, shown))
        self.last_states = states
        return frames


@dataclass
class RolloutStep:
    step: int
    plan_index: int
    q_before: np.ndarray
    action: np.ndarray
    q_after: np.ndarray
    distance: float


@dataclass
class RolloutLog:
    steps: list[RolloutStep] = field(default_factory=list)
    success: bool = False
    progress: float = 0.0
    n_steps: int = 0
    plans_issued: int = 0
    failure_cause: str = ""
    initial_distance: float = 0.0
    final_distance: float = 0.0

    def to_csv(self) -> str:
        """Line-delimited per-step records, comma separated, header row."""
        buf = io.StringIO()
        n = self.steps[0].q_before.size if self.steps else 0
        cols = (
            ["step", "plan_index"]
            + [f"q{i}" for i in range(n)]
            + [f"a{i}" for i in range(n)]
            + [f"q_next{i}" for i in range(n)]
            + ["distance"]
        )
        buf.write(",".join(cols) + "\n")
        for s in self.steps:
            row = (
                [str(s.step), str(s.plan_index)]
                + [repr(v) for v in s.q_before.tolist()]
                + [repr(v) for v in s.action.tolist()]
                + [repr(v) for v in s.q_after.tolist()]
                + [repr(s.distance)]
            )
            buf.write(",".join(row) + "\n")
        return buf.getvalue()


class OracleTranslator:
    """Analytic Jacobian field at the planner's states, exact flow."""

    def __init__(self, config, camera, params: RidgeParams, delta_max: float):
        self.config, self.camera = config, camera
        self.params, self.delta_max = params, delta_max

    def translate(self, anchor_state, frames, plan_states, replan_noise=None):
        states = [anchor_state] + list(plan_states)

        def flow_fn(i, a, b):
            fl = flow_between_states(self.config, self.camera, states[i], states[i + 1])
            return add_noise(fl, replan_noise) if replan_noise else fl

        def field_fn(i, image, pixels):
            return analytic_jacobians_at_pixels(self.config, self.camera, states[i], pixels)

        return translate_chunk(frames, field_fn, flow_fn, self.params, self.delta_max)


class LearnedTranslator:
    """Trained Jacobian field on the frames themselves, exact flow."""

    def __init__(self, model: PatchFieldModel, config, camera, params: RidgeParams, delta_max: float):
        self.model = model
        self.config, self.camera = config, camera
        self.params, self.delta_max = params, delta_max

    def translate(self, anchor_state, frames, plan_states, replan_noise=None):
        states = [anchor_state] + list(plan_states)

        def flow_fn(i, a, b):
            fl = flow_between_states(self.config, self.camera, states[i], states[i + 1])
            return add_noise(fl, replan_noise) if replan_noise else fl

        def field_fn(i, image, pixels):
            return evaluate_field(self.model, np.asarray(image, np.float64), pixels)

        return translate_chunk(frames, field_fn, flow_fn, self.params, self.delta_max)


def rollout(
    planner: ScriptedPlanner,
    translator,
    config: ChainConfig,
    camera: CameraModel,
    style: RenderStyle,
    start: ChainState,
    goal: GoalSpec,
    cfg: ControllerConfig,
) -> RolloutLog:
    """Plan M frames, translate the first K, execute r*K actions, replan.

    Exactly r*K simulator actions run between consecutive plans; the
    loop stops at success (distance below goal tolerance), max_steps,
    or a planner/translator failure (recorded as the failure cause).
    """
    log = RolloutLog()
    state = ChainState(clamp_state(config, start.q).q)
    obs = render(config, camera, style, state)
    history = [obs] * cfg.context_n  # interface parity; the scripted planner uses the state
    dist = goal_distance(config, camera, state, goal)
    log.initial_distance = dist
    if dist < goal.tolerance:
        log.success = True
        log.progress = 1.0
        log.final_distance = dist
        return log

    step = 0
    max_plan_jump = 0.0
    while step < cfg.max_steps:
        try:
            frames = planner.plan(state, goal, cfg.lookahead_m)
        except ValueError as err:
            log.failure_cause = f"planner_error: {err}"
            break
        log.plans_issued += 1
        committed = frames[: cfg.commit_k]
        plan_states = planner.last_states[: cfg.commit_k]
        jumps = [state.q] + [s.q for s in plan_states]
        max_plan_jump = max(
            max_plan_jump,
            max(float(np.max(np.abs(b - a))) for a, b in zip(jumps, jumps[1:])),
        )
        try:
            actions = translator.translate(state, [obs] + committed, plan_states, cfg.replan_noise)
        except (ValueError, np.linalg.LinAlgError) as err:
            log.failure_cause = f"translator_error: {err}"
            break

        done = False
        for action in actions:
            sub = np.asarray(action) / cfg.actions_per_frame
            for _ in range(cfg.actions_per_frame):
                q_before = state.q
                state = clamp_state(config, state.q + sub)
                dist = goal_distance(config, camera, state, goal)
                log.steps.append(
                    RolloutStep(step, log.plans_issued - 1, q_before, sub, state.q, dist)
                )
                step += 1
                if dist < goal.tolerance or step >= cfg.max_steps:
                    done = True
                    break
            if done:
                break
        obs = render(config, camera, style, state)
        history.append(obs)
        del history[: -cfg.context_n]
        if dist < goal.tolerance:
            log.success = True
            break
        if done:
            break

    log.n_steps = step
    log.final_distance = dist
    log.progress = (
        1.0 if log.success else float(np.clip(1.0 - dist / max(log.initial_distance, 1e-12), 0.0, 1.0))
    )
    if not log.success and not log.failure_cause:
        if max_plan_jump > 1.5 * cfg.delta_max:
            log.failure_cause = "planner_infeasible_motion"
        else:
            log.failure_cause = "horizon_exhausted"
    return log


def sample_reach_goal(
    config: ChainConfig,
    camera: CameraModel,
    rng: np.random.Generator,
    tolerance: float = 2.0,
    margin: float = 0.75,
    min_pixels: float = 10.0,
) -> tuple[ChainState, GoalSpec]:
    """Random start state and reachable tip-pixel goal, comfortably inside limits."""
    lo, hi = config.joint_limits[:, 0] * margin, config.joint_limits[:, 1] * margin
    while True:
        q0 = rng.uniform(lo, hi)
        q_goal = rng.uniform(lo, hi)
        target = tip_pixel(config, camera, ChainState(q_goal))
        if np.linalg.norm(target - tip_pixel(config, camera, ChainState(q0))) >= min_pixels:
            return ChainState(q0), GoalSpec("tip_pixel", target, tolerance)


def chunk_sweep(
    planner_factory,
    translator,
    config: ChainConfig,
    camera: CameraModel,
    style: RenderStyle,
    base_cfg: ControllerConfig,
    k_values: list[int],
    trials: int,
    seed: int = 0,
) -> list[dict]:
    """Success rate and progress per commit length K, disjoint seeds per trial."""
    from dataclasses import replace

    rows = []
    for k in k_values:
        if k > base_cfg.lookahead_m:
            raise ValueError("commit length exceeds the look-ahead")
        cfg = replace(base_cfg, commit_k=k)
        succ, prog, plans = 0, 0.0, 0
        for trial in range(trials):
            rng = np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(k, trial)))
            start, goal = sample_reach_goal(config, camera, rng)
            planner = planner_factory(int(rng.integers(0, 2**63 - 1)))
            log = rollout(planner, translator, config, camera, style, start, goal, cfg)
            succ += int(log.success)
            prog += log.progress
            plans += log.plans_issued
        rows.append(
            {
                "k": k,
                "success_rate": succ / trials,
                "progress": prog / trials,
                "plans_issued": plans / trials,
            }
        )
    return rows
