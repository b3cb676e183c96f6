"""Execute a plan against the providers and persist every call.

Cells run concurrently, one worker per cell, so each cell file has a single
writer. Calls inside a cell are issued in ``call_index`` order. Each call is
a fresh single-message conversation; nothing is carried between calls.
"""

from __future__ import annotations

import logging
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

from .errors import PlanDriftError, ProviderError, StorageError
from .parsing import Status, parse_output
from .plan import AuditConfig, Cell, expand_plan
from .providers import CompletionRequest, Gateway
from .store import CallRecord, Store, utc_now

log = logging.getLogger(__name__)


@dataclass
class RunSummary:
    cells_total: int = 0
    cells_completed: int = 0
    calls_executed: int = 0
    calls_ok: int = 0
    calls_error: int = 0
    wall_time: float = 0.0
    status_counts: dict[str, int] = field(default_factory=dict)

    def __str__(self) -> str:
        return (f"{self.cells_completed}/{self.cells_total} cells complete, "
                f"{self.calls_executed} new calls ({self.calls_ok} answered, "
                f"{self.calls_error} provider errors) in {self.wall_time:.1f}s")


def _manifest(config: AuditConfig) -> dict:
    return {"run_id": config.plan.run_id, "plan": config.plan.dimensions()}


def _check_manifest(store: Store, config: AuditConfig, *, must_exist: bool) -> None:
    found = store.read_manifest()
    if found is None:
        if must_exist:
            raise StorageError(f"{store.root} holds no run to resume")
        if store.root.exists() and any(store.root.glob("*.csv")):
            raise PlanDriftError(f"{store.root} has records but no manifest")
        store.write_manifest(_manifest(config))
        return
    expected = _manifest(config)
    if found.get("run_id") != expected["run_id"]:
        raise PlanDriftError(
            f"store belongs to run {found.get('run_id')!r}, not {expected['run_id']!r}")
    if found.get("plan") != expected["plan"]:
        raise PlanDriftError(
            f"run {expected['run_id']!r} was started with a different plan: "
            f"{found.get('plan')} != {expected['plan']}")


def _run_cell(cell: Cell, config: AuditConfig, gateway: Gateway, store: Store,
              stop: threading.Event, clock: Callable[[], str], summary: RunSummary,
              lock: threading.Lock) -> bool:
    plan = config.plan
    cf = store.cell_file(cell)
    existing = cf.prepare()
    done = {r.call_index for r in existing}
    prompt = config.catalog.render(cell.language, cell.upper)
    for idx in range(plan.calls_per_cell):
        if idx in done:
            continue
        if stop.is_set():
            return False
        request = CompletionRequest(
            model_id=config.providers[cell.provider].model_id, prompt=prompt,
            temperature=cell.temperature, max_tokens=plan.max_tokens,
            language=cell.language, upper=cell.upper, call_index=idx,
        )
        extra: dict = {}
        try:
            resp = gateway.complete(cell.provider, request)
        except ProviderError as exc:
            log.warning("%s #%d: %s", cell.key, idx, exc)
            rec = CallRecord(cell, idx, clock(), "", Status.PROVIDER_ERROR, None, False)
            extra["error"] = str(exc)
        else:
            parsed = parse_output(resp.text, cell.upper)
            rec = CallRecord(cell, idx, clock(), resp.text, parsed.status, parsed.value,
                             parsed.think_text is not None)
            extra.update(latency_ms=round(resp.latency_ms, 3), attempts=resp.attempts)
        cf.append(rec, **extra)
        with lock:
            summary.calls_executed += 1
            if rec.status is Status.PROVIDER_ERROR:
                summary.calls_error += 1
            else:
                summary.calls_ok += 1
            summary.status_counts[rec.status.value] = summary.status_counts.get(rec.status.value, 0) + 1
    return True


def _execute(config: AuditConfig, store_path: str | Path, *, resume: bool,
             gateway: Gateway | None, max_workers: int | None,
             clock: Callable[[], str]) -> RunSummary:
    config.validate()
    cells = expand_plan(config.plan)
    store = Store(store_path)
    _check_manifest(store, config, must_exist=resume)
    own_gateway = gateway is None
    if own_gateway:
        gateway = Gateway(config.providers, seed=config.plan.seed)
    if max_workers is None:
        max_workers = min(32, sum(config.providers[p].max_in_flight for p in config.plan.providers))
    summary = RunSummary(cells_total=len(cells))
    stop = threading.Event()
    lock = threading.Lock()
    t0 = time.perf_counter()
    try:
        with ThreadPoolExecutor(max_workers=max_workers) as pool:
            futures = [pool.submit(_run_cell, c, config, gateway, store, stop, clock, summary, lock)
                       for c in cells]
            first_error: BaseException | None = None
            for fut in futures:
                try:
                    fut.result()
                except BaseException as exc:  # noqa: BLE001 - re-raised below
                    stop.set()
                    first_error = first_error or exc
            if first_error is not None:
                raise first_error
    finally:
        summary.wall_time = time.perf_counter() - t0
        if own_gateway:
            gateway.close()
    summary.cells_completed = sum(
        1 for c in cells if len(store.cell_file(c).read()) >= config.plan.calls_per_cell)
    return summary


def run(config: AuditConfig, store_path: str | Path, *, gateway: Gateway | None = None,
        max_workers: int | None = None, clock: Callable[[], str] = utc_now) -> RunSummary:
    """Run every missing call of the plan.

    Starting a run on a store that already holds this run's records simply
    continues it; a store from another plan raises :class:`PlanDriftError`.
    Provider failures are recorded with status ``provider_error`` and count
    toward cell completion.
    """
    return _execute(config, store_path, resume=False, gateway=gateway,
                    max_workers=max_workers, clock=clock)


def resume(config: AuditConfig, store_path: str | Path, *, gateway: Gateway | None = None,
           max_workers: int | None = None, clock: Callable[[], str] = utc_now) -> RunSummary:
    """Like :func:`run`, but the store must already belong to this run."""
    return _execute(config, store_path, resume=True, gateway=gateway,
                    max_workers=max_workers, clock=clock)
