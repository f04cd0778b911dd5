"""End-to-end runner: dataset in, per-record seven-step pipeline, confusion
tallies, trace and report files out.

Scoring is strictly two-phase so results cannot depend on worker layout:

  phase 1  every record is processed against run-constant state only (norm
           stats, the LTM prototype store, config thresholds); records are
           pure functions of (record, context) and may run in any order or
           process.
  phase 2  a single-threaded merge in record-id order applies feedback:
           decision history means, feedback-adjusted utilities, and STM
           episode appends.

Step semantics per record (predicted vs actual):
  1  kept by the trust filter            vs the stored valid flag
  2  own scenarios hold a strict majority of the top-k picked from the pool
     of m own + m neutral-reference scenarios
                                         vs the stored relevance flag
  3  summed softmax relevance of own scenarios > rel_threshold
                                         vs the stored relevance flag
  4  lower-half membership of the retrieved LTM label
                                         vs lower-half membership of mem_label
  5  lower-half membership of the selected decision id   vs that of action
  6  same for the refined policy's first action           vs that of action
  7  same for the emitted ActionCommand's action          vs that of action

Steps 4-7 compare through the half-partition view because the generator's
label noise always flips across that partition: the binary disagreement rate
equals the label flip rate exactly, which keeps all four confusion cells
populated.
"""

from dataclasses import dataclass, replace
import json
import multiprocessing
import os

import numpy as np

from . import seeding
from .attention import refine_scenario, relevance_scores, top_k_by_relevance
from .config import RunConfig
from .dataset import (
    Dataset,
    FeatureGeometry,
    GeneratorConfig,
    MODALITIES,
    generate,
    half_partition,
    load,
)
from .decision import (
    ContextWeights,
    DecisionCandidate,
    FeedbackHistory,
    Subtask,
    TaskTemplate,
    decompose,
    decision_utility,
    select_decision,
    subtask_priority,
)
from .errors import EmptyInputError
from .evaluation import N_STEPS, StepConfusion, record_outcome, report
from .executor import FeedbackRecord, route_feedback, select_optimal_action
from .ingest import extract_features, filter_by_trust, fit_norm_stats, fuse, normalize
from .memory import LTM, MemoryEntry, MemoryStore, cosine_score
from .scenario import (
    Scenario,
    feature_map,
    generate_scenarios,
    integrate,
    scenario_utility,
    semantic_features,
)
from .sim2real import (
    ACTIONS,
    AlignmentModel,
    GridEnv,
    RandomizationSpec,
    align_features,
    optimize_policy,
    randomize_env,
    refine_policy,
    reward_discrepancy,
    reward_table,
    rollout,
)

_MOVE_BY_ACTION = ((0, -1), (0, 1), (-1, 0), (1, 0))

REPORT_MD = "report.md"
TRACE_FILE = "trace.jsonl"
SUMMARY_FILE = "run_summary.json"


@dataclass(frozen=True)
class ModalityContext:
    """Run-constant state shared by every record of one modality."""

    cfg: RunConfig
    modality: str
    modality_index: int
    stats: object                  # ingest.NormStats
    geometry: FeatureGeometry
    store: MemoryStore             # LTM holds one prototype per memory class
    subtasks: tuple                # one per action, weight = action direction
    internal: np.ndarray
    instruction: np.ndarray
    neutral_map: np.ndarray        # feature map of a zero sensor channel
    context_weights: ContextWeights


@dataclass
class RecordOutcome:
    """Everything phase 1 learns about one surviving record."""

    record_id: int
    semantic: tuple
    own_in_topk: int
    relevance_mass: float
    pred_step2: bool
    pred_step3: bool
    retrieved_label: int
    readout_cosine: float
    refined_attributes: tuple
    refined_utility: float
    decision_id: int
    predicted_outcome: float
    sim_first_action: int
    policy_action: int
    command_action: int
    confidence: float


def _embed(values, dims, dim: int) -> np.ndarray:
    out = np.zeros(dim)
    out[list(dims)] = values
    return out


def goal_cell(grid, direction: int) -> tuple:
    dx, dy = _MOVE_BY_ACTION[direction]
    x, y = grid.start
    return (x + dx * grid.goal_distance, y + dy * grid.goal_distance)


def build_envs(cfg: RunConfig, direction: int, env_seed: int):
    """Per-record simulated (randomized) and real environments."""
    grid = cfg.grid
    goal = goal_cell(grid, direction)
    sim_base = GridEnv(width=grid.width, height=grid.height, start=tuple(grid.start),
                       goal=goal, step_reward=grid.step_reward,
                       goal_reward=grid.goal_reward, slip_prob=grid.slip_prob,
                       horizon=grid.horizon)
    spec = RandomizationSpec(continuous=cfg.randomization.continuous,
                             variants=cfg.randomization.variants, seed=env_seed)
    sim_env = randomize_env(sim_base, spec)
    real_env = replace(sim_base, step_reward=grid.real_step_reward)
    return sim_env, real_env


def build_context(cfg: RunConfig, gen_cfg: GeneratorConfig, modality: str,
                  records) -> ModalityContext:
    """Fit normalization stats on the filtered stream and freeze the
    prototype memory, subtask templates, and channel constants."""
    geometry = FeatureGeometry.from_config(gen_cfg)
    survivors = filter_by_trust(records, cfg.tau)
    if not survivors:
        raise EmptyInputError(
            f"no {modality} records survived the trust filter (tau={cfg.tau})"
        )
    pooled = np.concatenate([np.asarray(r.features) for r in survivors])
    stats = fit_norm_stats(pooled)

    store = MemoryStore(stm_capacity=cfg.stm_capacity,
                        sparse_readout_top_n=cfg.sparse_readout_top_n,
                        sparse_readout_threshold=cfg.sparse_readout_threshold)
    for label in range(geometry.n_memory_classes):
        proto = normalize(geometry.memory_center(label), stats)
        store.promote_to_ltm(MemoryEntry(vector=proto, label=label,
                                         timestamp=label, tier=LTM))

    directions = geometry.action_directions()
    subtasks = tuple(
        Subtask(id=f"move-{ACTIONS[a]}", weights=tuple(directions[a]))
        for a in range(geometry.n_actions)
    )
    registry = {"act": TaskTemplate(id="act", steps=subtasks)}
    ordered = tuple(decompose(registry, "act"))

    rel_width = len(geometry.relevance_dims)
    internal = np.zeros(rel_width) if cfg.internal_state is None else np.asarray(
        cfg.internal_state, dtype=float)
    instruction = np.zeros(rel_width) if cfg.instruction is None else np.asarray(
        cfg.instruction, dtype=float)
    neutral = feature_map(integrate(np.zeros(rel_width), internal, instruction,
                                    cfg.weights))
    return ModalityContext(
        cfg=cfg, modality=modality, modality_index=MODALITIES.index(modality),
        stats=stats, geometry=geometry, store=store, subtasks=ordered,
        internal=internal, instruction=instruction, neutral_map=neutral,
        context_weights=ContextWeights(tuple(cfg.context_weights),
                                       cfg.lambda_feedback),
    )


def process_record(ctx: ModalityContext, record) -> RecordOutcome:
    """Run one surviving record through steps 2-7. Pure given (ctx, record)."""
    cfg = ctx.cfg
    geom = ctx.geometry

    # ingest: normalize, extract, fuse (single live modality per record)
    fnorm = normalize(np.asarray(record.features), ctx.stats)
    extracted = extract_features(fnorm, cfg.extraction_mode, cfg.extraction_window)
    bundle = fuse([(record.modality, extracted)])
    sensor_full = bundle.entries[0][1]

    # scenario: integrate channels over the relevance block, map, perturb
    sensor = sensor_full[list(geom.relevance_dims)]
    unified = integrate(sensor, ctx.internal, ctx.instruction, cfg.weights)
    semantic = semantic_features(unified)
    fmap = feature_map(unified)

    own = generate_scenarios(
        fmap, cfg.m_count, cfg.noise_width,
        seeding.substream(cfg.seed, seeding.SCENARIO_NOISE, ctx.modality_index,
                          record.id))
    reference = generate_scenarios(
        ctx.neutral_map, cfg.m_count, cfg.noise_width,
        seeding.substream(cfg.seed, seeding.BASELINE_NOISE, ctx.modality_index,
                          record.id))
    pool = own + [Scenario(index=cfg.m_count + s.index, attributes=s.attributes,
                           utility=s.utility) for s in reference]

    # attention: softmax relevance, top-k, memory-refined winner
    utilities = np.asarray([s.utility for s in pool])
    scores = relevance_scores(utilities)
    selected = top_k_by_relevance(scores, pool, cfg.k)
    own_in_topk = sum(1 for s in selected if s.index < cfg.m_count)
    own_mass = float(scores[: cfg.m_count].sum())
    winner = selected[0]
    confidence = float(scores[winner.index])

    # memory: retrieval for step 4, readout for refinement
    retrieved = ctx.store.ltm_retrieve(fnorm)
    scenario_query = _embed(winner.attributes, geom.relevance_dims, geom.feature_dim)
    readout = ctx.store.attention_readout(scenario_query)
    readout_cos = cosine_score(readout, scenario_query)
    refined = refine_scenario(winner.attributes,
                              readout[list(geom.relevance_dims)], cfg.beta)
    refined_utility = scenario_utility(refined)

    # decision: context factors = refined utility, readout cosine, priority
    candidates = []
    for a, sub in enumerate(ctx.subtasks):
        priority = subtask_priority(sub, sensor_full)
        candidates.append(DecisionCandidate(
            id=a, context=np.asarray([refined_utility, readout_cos, priority])))
    chosen = select_decision(candidates, ctx.context_weights)
    chosen.predicted_outcome = decision_utility(chosen, ctx.context_weights)

    # sim2real: randomized sim env, exact policies, discrepancy re-plan
    env_seed = seeding.derived_seed(cfg.seed, seeding.ENV_RANDOMIZATION,
                                    ctx.modality_index, record.id)
    sim_env, real_env = build_envs(cfg, chosen.id, env_seed)
    sim_policy = optimize_policy(sim_env, cfg.gamma)
    delta = reward_discrepancy(reward_table(real_env), reward_table(sim_env))
    refined_policy = refine_policy(real_env, delta, cfg.alpha, cfg.gamma)
    policy_action = refined_policy.action(tuple(cfg.grid.start))

    # executor: emit the command with the carried relevance confidence
    command = select_optimal_action(chosen, refined_policy, tuple(cfg.grid.start),
                                    confidence, record.id)

    return RecordOutcome(
        record_id=record.id,
        semantic=tuple(semantic),
        own_in_topk=own_in_topk,
        relevance_mass=own_mass,
        pred_step2=2 * own_in_topk > len(selected),
        pred_step3=own_mass > cfg.rel_threshold,
        retrieved_label=retrieved.label,
        readout_cosine=readout_cos,
        refined_attributes=tuple(refined),
        refined_utility=refined_utility,
        decision_id=chosen.id,
        predicted_outcome=chosen.predicted_outcome,
        sim_first_action=sim_policy.action(tuple(cfg.grid.start)),
        policy_action=policy_action,
        command_action=command.action,
        confidence=confidence,
    )


_WORKER_CTX = None
_WORKER_RECORDS = None


def _worker_init(ctx, records):
    global _WORKER_CTX, _WORKER_RECORDS
    _WORKER_CTX = ctx
    _WORKER_RECORDS = records


def _worker_chunk(bounds):
    lo, hi = bounds
    return [process_record(_WORKER_CTX, _WORKER_RECORDS[i]) for i in range(lo, hi)]


def score_records(ctx: ModalityContext, survivors, workers: int):
    """Phase 1 over one modality's survivors; output order follows input."""
    if workers <= 1 or len(survivors) < 4 * workers:
        return [process_record(ctx, r) for r in survivors]
    bounds = []
    chunk = max(1, (len(survivors) + workers * 4 - 1) // (workers * 4))
    for lo in range(0, len(survivors), chunk):
        bounds.append((lo, min(lo + chunk, len(survivors))))
    with multiprocessing.Pool(processes=workers, initializer=_worker_init,
                              initargs=(ctx, survivors)) as pool:
        parts = pool.map(_worker_chunk, bounds)
    out = []
    for part in parts:
        out.extend(part)
    return out


@dataclass
class ModalityResult:
    modality: str
    confusions: dict          # step -> StepConfusion
    trace_lines: list         # (record_id, dict)
    survivor_ids: list
    outcomes: dict            # record_id -> RecordOutcome


def run_modality(cfg: RunConfig, gen_cfg: GeneratorConfig, modality: str,
                 records, workers: int) -> ModalityResult:
    ctx = build_context(cfg, gen_cfg, modality, records)
    survivors = filter_by_trust(records, cfg.tau)
    kept_ids = {r.id for r in survivors}

    confusions = {step: StepConfusion(step) for step in range(1, N_STEPS + 1)}
    for r in records:
        record_outcome(confusions[1], r.id in kept_ids, r.valid)

    outcomes = score_records(ctx, survivors, workers)
    by_id = {}
    n_act = ctx.geometry.n_actions
    n_mem = ctx.geometry.n_memory_classes
    for r, out in zip(survivors, outcomes):
        record_outcome(confusions[2], out.pred_step2, r.relevant)
        record_outcome(confusions[3], out.pred_step3, r.relevant)
        record_outcome(confusions[4], half_partition(out.retrieved_label, n_mem),
                       half_partition(r.mem_label, n_mem))
        record_outcome(confusions[5], half_partition(out.decision_id, n_act),
                       half_partition(r.action, n_act))
        record_outcome(confusions[6], half_partition(out.policy_action, n_act),
                       half_partition(r.action, n_act))
        record_outcome(confusions[7], half_partition(out.command_action, n_act),
                       half_partition(r.action, n_act))
        by_id[r.id] = out

    # phase 2: feedback merge in record-id order
    history = FeedbackHistory()
    trace_lines = []
    for r in records:
        if r.id not in by_id:
            trace_lines.append((r.id, {"id": r.id, "modality": modality,
                                       "trust": r.trust, "kept": False}))
            continue
        out = by_id[r.id]
        matched = out.command_action == r.action
        fb = FeedbackRecord(record_id=r.id, outcome=float(matched), matched=matched)
        feedback_before = history.mean(out.decision_id)
        adjusted = out.predicted_outcome + cfg.lambda_feedback * feedback_before
        episode = _embed(np.asarray(out.refined_attributes),
                         ctx.geometry.relevance_dims, ctx.geometry.feature_dim)
        route_feedback(fb, out.decision_id, history, ctx.store, episode)
        trace_lines.append((r.id, {
            "id": r.id,
            "modality": modality,
            "trust": r.trust,
            "kept": True,
            "semantic": list(out.semantic),
            "relevance_mass": out.relevance_mass,
            "own_in_topk": out.own_in_topk,
            "retrieved_label": out.retrieved_label,
            "decision": out.decision_id,
            "subtask": ctx.subtasks[out.decision_id].id,
            "sim_first_action": out.sim_first_action,
            "action": out.command_action,
            "confidence": out.confidence,
            "matched": matched,
            "outcome": fb.outcome,
            "feedback_mean": feedback_before,
            "adjusted_utility": adjusted,
            "steps": {
                "s2": out.pred_step2, "s3": out.pred_step3,
                "s4": out.retrieved_label, "s5": out.decision_id,
                "s6": out.policy_action, "s7": out.command_action,
            },
        }))
    return ModalityResult(modality=modality, confusions=confusions,
                          trace_lines=trace_lines,
                          survivor_ids=[r.id for r in survivors],
                          outcomes=by_id)


def _trajectory_features(env: GridEnv, policy) -> list:
    traj = rollout(env, policy)
    t_total = max(env.horizon, 1)
    rows = []
    for t, ((x, y), _, reward) in enumerate(traj.steps):
        rows.append([
            x / max(env.width - 1, 1),
            y / max(env.height - 1, 1),
            t / t_total,
            reward,
        ])
    return rows


def run_alignment(cfg: RunConfig, results) -> float:
    """Adversarial alignment over rollout features from the sim and real
    environments of the first `align.samples` survivors per modality."""
    sim_rows, real_rows = [], []
    for res in results:
        picked = res.survivor_ids[: cfg.align.samples]
        for rid in picked:
            out = res.outcomes[rid]
            env_seed = seeding.derived_seed(
                cfg.seed, seeding.ENV_RANDOMIZATION,
                MODALITIES.index(res.modality), rid)
            sim_env, real_env = build_envs(cfg, out.decision_id, env_seed)
            sim_rows.extend(_trajectory_features(sim_env,
                                                 optimize_policy(sim_env, cfg.gamma)))
            delta = reward_discrepancy(reward_table(real_env), reward_table(sim_env))
            refined = refine_policy(real_env, delta, cfg.alpha, cfg.gamma)
            real_rows.extend(_trajectory_features(real_env, refined))
    model = AlignmentModel.init(in_dim=4, lambda_task=cfg.align.lambda_task)
    _, accuracy = align_features(
        np.asarray(sim_rows), np.asarray(real_rows), model,
        steps=cfg.align.steps, lr=cfg.align.learning_rate,
        rng=seeding.substream(cfg.seed, seeding.ALIGNMENT))
    return accuracy


@dataclass
class RunResult:
    out_dir: str
    confusions: dict        # modality -> {step -> StepConfusion}
    report_paths: dict
    trace_path: str
    summary_path: str
    alignment_accuracy: float


def execute_run(cfg: RunConfig, dataset: Dataset | None = None,
                out_dir: str | None = None) -> RunResult:
    """Generate or load the dataset, run every configured modality, and write
    trace + report files. Byte-identical for identical seeds and any worker
    count."""
    cfg.validate()
    if dataset is None:
        dataset = load(cfg.dataset_path) if cfg.dataset_path else generate(cfg.generator)
    gen_cfg = GeneratorConfig.from_mapping(dataset.meta["generator"])

    results = []
    for modality in MODALITIES:
        if modality not in cfg.modalities:
            continue
        records = dataset.by_modality(modality)
        results.append(run_modality(cfg, gen_cfg, modality, records, cfg.workers))

    accuracy = run_alignment(cfg, results)

    target = out_dir or cfg.out_dir
    os.makedirs(target, exist_ok=True)

    confusions = {res.modality: res.confusions for res in results}
    rep = report(confusions)
    report_paths = {}
    for modality, text in rep.csv.items():
        path = os.path.join(target, f"report_{modality}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(text)
        report_paths[modality] = path
    md_path = os.path.join(target, REPORT_MD)
    with open(md_path, "w", encoding="utf-8") as fh:
        fh.write(rep.markdown)

    trace_path = os.path.join(target, TRACE_FILE)
    lines = []
    for res in results:
        lines.extend(res.trace_lines)
    lines.sort(key=lambda pair: pair[0])
    with open(trace_path, "w", encoding="utf-8") as fh:
        for _, payload in lines:
            fh.write(json.dumps(payload, separators=(",", ":"), allow_nan=False))
            fh.write("\n")

    # workers and out_dir are execution details; dropping them keeps the
    # summary byte-identical across worker counts and target directories
    config_echo = cfg.to_mapping()
    config_echo.pop("workers")
    config_echo.pop("out_dir")
    summary = {
        "config": config_echo,
        "dataset_meta": dataset.meta,
        "survivors": {res.modality: len(res.survivor_ids) for res in results},
        "alignment_holdout_accuracy": accuracy,
        "outputs": sorted(
            [os.path.basename(p) for p in report_paths.values()]
            + [REPORT_MD, TRACE_FILE]
        ),
    }
    summary_path = os.path.join(target, SUMMARY_FILE)
    with open(summary_path, "w", encoding="utf-8") as fh:
        json.dump(summary, fh, indent=2, allow_nan=False)
        fh.write("\n")

    return RunResult(out_dir=target, confusions=confusions,
                     report_paths=report_paths, trace_path=trace_path,
                     summary_path=summary_path, alignment_accuracy=accuracy)
