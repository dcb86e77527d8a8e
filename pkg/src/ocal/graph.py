"""Define the active-learning loop as a graph.

Each cycle fits the learner on the current pool, evaluates it, scores the eligible
unlabeled observations, and asks the oracle for the label of the best one.
"""

from __future__ import annotations

import logging
import time
from typing import Any, Dict, Literal

import numpy as np
from langgraph.graph import StateGraph
from langgraph.runtime import Runtime

from ocal import constants
from ocal.data import PoolState
from ocal.kernel import KernelConfig
from ocal.learners import FitRequest, audit_record, decision_function, fit, resolve_costs
from ocal.metrics import evaluate
from ocal.state import InputState, LoopState, RunContext
from ocal.strategies import ScoringInputs, informativeness, select_query

logger = logging.getLogger(__name__)


def fit_and_evaluate(state: LoopState, runtime: Runtime[RunContext]) -> Dict[str, Any]:
    """Refit the learner on the current pool and record the quality of the new model.

    Args:
        state (LoopState): The current loop state.
        runtime (Runtime[RunContext]): Dataset, split, Gram matrix and settings of the run.

    Returns:
        dict: The decision values and one new progress-curve record.
    """
    ctx = runtime.context
    started = state.started or time.perf_counter()
    pool = PoolState(state.status)
    d = ctx.dataset

    fit_idx = ctx.split.fit_indices(pool)
    costs = resolve_costs(ctx.config.learner, fit_idx.size, d.outlier_rate)
    model = fit(
        FitRequest(
            X=d.X[fit_idx],
            labels=pool.status[fit_idx],
            learner=ctx.config.learner.name,
            kernel=KernelConfig(gamma=ctx.gamma),
            costs=costs,
            train_idx=fit_idx,
            gram=ctx.gram[np.ix_(fit_idx, fit_idx)],
            tol=ctx.settings.kkt_tol,
            max_iter=ctx.settings.max_iter,
        )
    )
    decision = decision_function(model, d.X[fit_idx], d.X, K_cross=ctx.gram[:, fit_idx])

    eval_idx = ctx.split.test_idx if ctx.split.strategy == "Sh" else np.arange(d.n_obs)
    values = evaluate(
        ctx.config.metrics, decision[eval_idx], d.y[eval_idx], boundary=model.boundary_band
    )

    record = {
        "t": state.t,
        "queried_index": state.query,
        "oracle_label": state.label,
        "metrics": values,
        "exploratory": state.exploratory,
    }
    logger.debug("t=%d %s", state.t, values)

    update: Dict[str, Any] = {
        "decision": decision,
        "boundary": model.boundary_band,
        "records": [record],
        "timings": [1000.0 * (time.perf_counter() - started)],
        "warnings": [f"t={state.t}: {w}" for w in model.warnings],
    }
    if ctx.settings.audit:
        update["audit"] = [{"t": state.t, **audit_record(model)}]
    return update


def choose_query(state: LoopState, runtime: Runtime[RunContext]) -> Dict[str, Any]:
    """Score the eligible observations and pick the most informative one."""
    ctx = runtime.context
    started = time.perf_counter()
    pool = PoolState(state.status)
    eligible = ctx.split.eligible(pool)
    if eligible.size == 0:
        message = f"pool exhausted after {state.t} of {state.budget} queries"
        logger.warning("%s: %s", ctx.dataset.name, message)
        return {"stop_reason": message, "warnings": [message]}

    inputs = ScoringInputs(
        X=ctx.dataset.X,
        pool=pool,
        eligible=eligible,
        gamma=ctx.gamma,
        config=ctx.strategy,
        rng=np.random.default_rng([ctx.config.seed, ctx.strategy.rng_seed, state.t + 1]),
        decision=None if state.decision is None else state.decision[eligible],
        boundary=state.boundary,
    )
    scores = informativeness(ctx.strategy.name, inputs)

    update: Dict[str, Any] = {
        "query": select_query(scores),
        "exploratory": scores.exploratory,
        "started": started,
    }
    if scores.fallback:
        update["warnings"] = [f"t={state.t + 1}: rand_out found no predicted outlier"]
    return update


def ask_oracle(state: LoopState, runtime: Runtime[RunContext]) -> Dict[str, Any]:
    """Label the chosen observation and move it from U to L."""
    pool = PoolState(state.status.copy())
    label = runtime.context.oracle.ask(state.query)  # type: ignore[arg-type]
    pool.assign(state.query, label == constants.OUTLIER)  # type: ignore[arg-type]
    return {"status": pool.status, "label": label, "t": state.t + 1}


def route_after_fit(state: LoopState) -> Literal["__end__", "choose_query"]:
    """Stop once the budget is spent, otherwise query again."""
    if state.t >= state.budget:
        return "__end__"
    return "choose_query"


def route_after_choice(state: LoopState) -> Literal["__end__", "ask_oracle"]:
    """Stop when no observation could be chosen."""
    if state.stop_reason is not None:
        return "__end__"
    return "ask_oracle"


builder = StateGraph(LoopState, input_schema=InputState, context_schema=RunContext)

builder.add_node(fit_and_evaluate)
builder.add_node(choose_query)
builder.add_node(ask_oracle)

builder.add_edge("__start__", "fit_and_evaluate")
builder.add_conditional_edges("fit_and_evaluate", route_after_fit)
builder.add_conditional_edges("choose_query", route_after_choice)
builder.add_edge("ask_oracle", "fit_and_evaluate")

graph = builder.compile(name="Active Learning Loop")


def recursion_limit(budget: int) -> int:
    """Return a step limit that fits ``budget`` full cycles."""
    return 3 * budget + 5
