"""Command-line surface for scripts and CI.

Exit codes form a closed set: 0 success, 2 schema/input errors, 3 backend
failure after retries (a partial report is still written), 4 nonfinite
training state. Low pass rates are findings, not failures: `eval` exits 0
regardless of scores.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

import click

from . import __version__
from .checkers import build_registry
from .data_io import (
    DatasetFile,
    dumps_record,
    instance_to_doc,
    load_jsonl,
    report_to_doc,
    verdict_to_doc,
    write_report,
)
from .errors import (
    DatasetParseError,
    DuplicateIdError,
    NonfiniteGradient,
    NonfiniteValue,
    SchemaViolation,
    ToolkitError,
)
from .generator import GenParams, HttpGenerator
from .harness import (
    HttpResponder,
    KeyedMockResponder,
    default_builders,
    run_eval,
    run_refine,
)
from .metrics import EvalReport, ScoredRow, TaskReport, aggregate_report, ffr
from .model import TaskKind
from .reff import KlController, PolicyPair, ToyFormatEnv, ToyPolicy, TrainConfig, train
from .service import ServiceClient

EXIT_SCHEMA = 2
EXIT_BACKEND = 3
EXIT_NONFINITE = 4


def _fail(code: int, message: str) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def _load_dataset(path: str) -> DatasetFile:
    try:
        return load_jsonl(path)
    except (SchemaViolation, DatasetParseError, DuplicateIdError) as exc:
        _fail(EXIT_SCHEMA, f"{path}: {exc}")


@click.group()
@click.version_option(version=__version__, prog_name="formatkit")
def main() -> None:
    """Format checkers, faithfulness metrics, refinement, and the RL demo."""


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--responses", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--server", default=None, help="Base URL of a running checker service.")
def check(dataset: str, responses: str, out: str, server: str | None) -> None:
    """Check a file of responses against a dataset and report pass rates."""
    data = _load_dataset(dataset)
    by_id = data.by_id()

    response_map: dict[str, str] = {}
    with open(responses, encoding="utf-8") as handle:
        for lineno, raw in enumerate(handle, start=1):
            if not raw.strip():
                continue
            try:
                doc = json.loads(raw)
            except json.JSONDecodeError as exc:
                _fail(EXIT_SCHEMA, f"{responses}: line {lineno}: {exc.msg}")
            if not isinstance(doc, dict) or "id" not in doc or "response" not in doc:
                _fail(EXIT_SCHEMA, f"{responses}: line {lineno}: need id and response fields")
            if doc["id"] in response_map:
                _fail(EXIT_SCHEMA, f"{responses}: duplicate response id {doc['id']!r}")
            response_map[doc["id"]] = doc["response"]

    for rid in response_map:
        if rid not in by_id:
            _fail(EXIT_SCHEMA, f"response id {rid!r} does not match any dataset instance")
    for iid in by_id:
        if iid not in response_map:
            _fail(EXIT_SCHEMA, f"dataset instance {iid!r} has no response")

    client = ServiceClient.remote(server) if server else ServiceClient.local()
    verdicts = {}
    order = [inst.id for inst in data.records]
    batch_size = 200
    for start in range(0, len(order), batch_size):
        chunk = order[start : start + batch_size]
        items = [
            {
                "task": by_id[iid].task.value,
                "instance": instance_to_doc(by_id[iid]),
                "response": response_map[iid],
            }
            for iid in chunk
        ]
        for iid, verdict in zip(chunk, client.check_batch(items)):
            verdicts[iid] = verdict

    tasks: dict[str, TaskReport] = {}
    for task in TaskKind:
        group = [verdicts[i.id] for i in data.records if i.task is task]
        if group:
            tasks[task.value] = TaskReport(n=len(group), ffr=ffr(group))
    overall = sum(t.ffr for t in tasks.values()) / len(tasks) if tasks else None
    report = EvalReport(tasks=tasks, overall_ffr=overall)

    records = [
        {
            "id": iid,
            "task": by_id[iid].task.value,
            **verdict_to_doc(verdicts[iid]),
        }
        for iid in sorted(verdicts)
    ]
    write_report(
        report,
        out,
        records=records,
        provenance={"command": "check", "dataset": dataset, "version": __version__},
    )
    click.echo(f"checked {len(order)} responses; overall ffr {overall}")
    sys.exit(0)


def _make_responder(endpoint, model, mock_responses, max_new_tokens):
    if mock_responses and endpoint:
        _fail(EXIT_SCHEMA, "pass either --endpoint or --mock-responses, not both")
    if mock_responses:
        return KeyedMockResponder.from_file(mock_responses)
    if not endpoint or not model:
        _fail(EXIT_SCHEMA, "need --endpoint and --model (or --mock-responses)")
    params = GenParams(temperature=0.0, max_new_tokens=max_new_tokens)
    return HttpResponder(HttpGenerator(endpoint=endpoint, model=model), params)


def _eval_records(rows) -> list[dict]:
    return [
        {
            "id": row.instance.id,
            "task": row.instance.task.value,
            "response": row.response,
            **verdict_to_doc(row.verdict),
        }
        for row in sorted(rows, key=lambda r: r.instance.id)
    ]


@main.command(name="eval")
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--endpoint", default=None, help="Completions endpoint URL.")
@click.option("--model", default=None, help="Backend model name.")
@click.option("--mock-responses", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--concurrency", default=1, show_default=True)
@click.option("--max-new-tokens", default=256, show_default=True)
def eval_cmd(dataset, out, endpoint, model, mock_responses, concurrency, max_new_tokens):
    """Generate one greedy response per instance, check it, and score quality."""
    data = _load_dataset(dataset)
    responder = _make_responder(endpoint, model, mock_responses, max_new_tokens)
    outcome = run_eval(
        data.records,
        responder,
        build_registry(),
        default_builders(),
        params=GenParams(max_new_tokens=max_new_tokens),
        concurrency=concurrency,
    )
    report = aggregate_report(outcome.rows)
    write_report(
        report,
        out,
        records=_eval_records(outcome.rows),
        provenance={
            "command": "eval",
            "dataset": dataset,
            "backend": endpoint or "mock",
            "model": model,
            "version": __version__,
        },
    )
    click.echo(f"evaluated {len(outcome.rows)}/{len(data.records)} instances")
    if outcome.failures:
        for failure in outcome.failures[:5]:
            click.echo(f"backend failure on {failure.instance_id}: {failure.message}", err=True)
        sys.exit(EXIT_BACKEND)
    sys.exit(0)


@main.command()
@click.option("--dataset", required=True, type=click.Path(exists=True, dir_okay=False))
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--endpoint", default=None)
@click.option("--model", default=None)
@click.option("--mock-responses", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--concurrency", default=1, show_default=True)
@click.option("--max-new-tokens", default=256, show_default=True)
@click.option("--max-steps", default=5, show_default=True)
@click.option("--thoughts", is_flag=True, help="Ask for a short reflection before the fix.")
@click.option("--max-prompt-chars", default=8000, show_default=True)
def refine(
    dataset,
    out,
    endpoint,
    model,
    mock_responses,
    concurrency,
    max_new_tokens,
    max_steps,
    thoughts,
    max_prompt_chars,
):
    """Iteratively repair responses with checker feedback; compare FFRs."""
    data = _load_dataset(dataset)
    responder = _make_responder(endpoint, model, mock_responses, max_new_tokens)
    outcome = run_refine(
        data.records,
        responder,
        build_registry(),
        default_builders(),
        max_steps=max_steps,
        with_thoughts=thoughts,
        max_prompt_chars=max_prompt_chars,
        params=GenParams(max_new_tokens=max_new_tokens),
        concurrency=concurrency,
    )
    traced = [row for row in outcome.rows if row.trace is not None]
    first_rows = [
        ScoredRow(row.instance, row.trace.attempts[0].response, row.trace.first_verdict)
        for row in traced
    ]
    final_rows = [
        ScoredRow(row.instance, row.trace.final_response, row.trace.final_verdict)
        for row in traced
    ]
    first_report = aggregate_report(first_rows)
    final_report = aggregate_report(final_rows)

    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    summary = {
        "first_attempt": report_to_doc(first_report),
        "final": report_to_doc(final_report),
        "provenance": {
            "command": "refine",
            "dataset": dataset,
            "backend": endpoint or "mock",
            "model": model,
            "max_steps": max_steps,
            "with_thoughts": thoughts,
            "version": __version__,
        },
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    with open(out_dir / "records.jsonl", "w", encoding="utf-8") as handle:
        for row in sorted(traced, key=lambda r: r.instance.id):
            handle.write(
                dumps_record(
                    {
                        "id": row.instance.id,
                        "task": row.instance.task.value,
                        "attempts": len(row.trace.attempts),
                        "stop_reason": row.trace.stop_reason.value,
                        "first_score": row.trace.first_verdict.score,
                        "final_score": row.trace.final_verdict.score,
                        "final_response": row.trace.final_response,
                    }
                )
                + "\n"
            )
    with open(out_dir / "traces.jsonl", "w", encoding="utf-8") as handle:
        for row in sorted(traced, key=lambda r: r.instance.id):
            handle.write(
                dumps_record(
                    {
                        "id": row.instance.id,
                        "stop_reason": row.trace.stop_reason.value,
                        "final_response": row.trace.final_response,
                        "attempts": [
                            {
                                "prompt": a.prompt,
                                "response": a.response,
                                "verdict": verdict_to_doc(a.verdict),
                            }
                            for a in row.trace.attempts
                        ],
                    }
                )
                + "\n"
            )
    click.echo(
        f"refined {len(traced)}/{len(data.records)} instances; "
        f"ffr {first_report.overall_ffr} -> {final_report.overall_ffr}"
    )
    if outcome.failures():
        for failure in outcome.failures()[:5]:
            click.echo(f"backend failure on {failure.instance_id}: {failure.message}", err=True)
        sys.exit(EXIT_BACKEND)
    sys.exit(0)


@main.command(name="reff-demo")
@click.option("--out", required=True, type=click.Path(file_okay=False))
@click.option("--seed", default=7, show_default=True)
@click.option("--epochs", default=3, show_default=True)
@click.option("--batch-size", default=32, show_default=True)
@click.option("--beta-init", default=0.05, show_default=True)
@click.option("--kl-target", default=6.0, show_default=True)
@click.option("--horizon", default=1000.0, show_default=True)
@click.option(
    "--lr",
    default=0.3,
    show_default=True,
    help="Step size for the demo policy (the library default 1.41e-5 targets adapters).",
)
@click.option("--query-source", type=click.Choice(["tst", "trn"]), default="tst", show_default=True)
@click.option("--warm-start", is_flag=True, help="Supervised warm start on target strings first.")
@click.option("--freeze-beta", is_flag=True, help="Disable the adaptive weight controller.")
def reff_demo(
    out,
    seed,
    epochs,
    batch_size,
    beta_init,
    kl_target,
    horizon,
    lr,
    query_source,
    warm_start,
    freeze_beta,
):
    """Train the toy policy against the checker reward and log the run."""
    env = ToyFormatEnv()
    pair = PolicyPair.from_reference(ToyPolicy.uniform(env.seq_len, env.vocab_size))
    controller = KlController(beta=beta_init, target=kl_target, horizon=horizon)
    config = TrainConfig(
        seed=seed,
        epochs=epochs,
        batch_size=batch_size,
        learning_rate=lr,
        freeze_beta=freeze_beta,
    )
    try:
        log = train(
            env, pair, controller, config, query_source=query_source,
            warm_start_targets=warm_start,
        )
    except (NonfiniteGradient, NonfiniteValue) as exc:
        _fail(EXIT_NONFINITE, f"training diverged: {exc}")
    out_dir = Path(out)
    out_dir.mkdir(parents=True, exist_ok=True)
    log.write_jsonl(out_dir / "trainlog.jsonl")
    summary = dict(log.summary)
    summary["config"] = {
        "seed": seed,
        "epochs": epochs,
        "batch_size": batch_size,
        "beta_init": beta_init,
        "kl_target": kl_target,
        "horizon": horizon,
        "lr": lr,
        "query_source": query_source,
        "warm_start": warm_start,
        "freeze_beta": freeze_beta,
        "version": __version__,
    }
    (out_dir / "summary.json").write_text(
        json.dumps(summary, ensure_ascii=False, indent=2) + "\n", encoding="utf-8"
    )
    click.echo(f"enumerated baseline ffr: {log.summary['baseline_ffr']:.6f}")
    click.echo(f"final-epoch sampled ffr: {log.summary['final_epoch_ffr']:.6f}")
    click.echo(f"exact final ffr: {log.summary['exact_final_ffr']:.6f}")
    sys.exit(0)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=8000, show_default=True)
@click.option("--actions", default=None, type=click.Path(exists=True, dir_okay=False))
@click.option("--xdl-schema", default=None, type=click.Path(exists=True, dir_okay=False))
def serve(host, port, actions, xdl_schema):
    """Run the checker/reward service."""
    import uvicorn

    from .checkers import StructuralXdlValidator, ToyTextEnv
    from .service import create_app

    agent_validator = ToyTextEnv.from_file(actions) if actions else None
    xdl_validator = (
        StructuralXdlValidator.from_file(xdl_schema) if xdl_schema else None
    )
    registry = build_registry(agent_validator, xdl_validator)
    uvicorn.run(create_app(registry), host=host, port=port)


if __name__ == "__main__":
    main()
