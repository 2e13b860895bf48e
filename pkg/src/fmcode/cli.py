"""Operator CLI: corpus generation, file-driven client, server, experiments."""

from __future__ import annotations

import json
import secrets
from pathlib import Path

import click

from .config import ServiceConfig
from .protocol import rpc
from .signals import read_trajectory
from .store import AccountStore
from .synthgen import gen_corpus


def _load_config(path) -> ServiceConfig:
    return ServiceConfig.load(path) if path else ServiceConfig()


@click.group()
def main():
    """In-air-handwriting login framework."""


@main.command()
@click.option("--out", type=click.Path(), required=True, help="corpus output directory")
@click.option("--users", default=50, show_default=True)
@click.option("--specs-per-user", default=2, show_default=True)
@click.option("--reg", default=5, show_default=True)
@click.option("--test", default=5, show_default=True)
@click.option("--spoofers", default=7, show_default=True)
@click.option("--spoof-reps", default=5, show_default=True)
@click.option("--sessions", default=0, show_default=True)
@click.option("--session-drift", default=0.02, show_default=True)
@click.option("--seed", default=0, show_default=True)
def synth(out, users, specs_per_user, reg, test, spoofers, spoof_reps, sessions, session_drift, seed):
    """Generate a synthetic corpus on disk."""
    corpus = gen_corpus(
        users, specs_per_user, reg, test, spoofers, spoof_reps,
        sessions, session_drift, seed,
    )
    corpus.save(out)
    click.echo(f"wrote {len(corpus.accounts)} accounts to {out}")


def _client_rpc(host, port, op, payload):
    response = rpc(host, port, op, secrets.token_hex(8), payload)
    click.echo(json.dumps(response, indent=1))
    return response


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=9757, show_default=True)
@click.option("--id-signal", "id_signals", type=click.Path(exists=True), multiple=True, required=True)
@click.option("--passcode-signal", "passcode_signals", type=click.Path(exists=True), multiple=True, required=True)
def enroll(host, port, id_signals, passcode_signals):
    """Register an account from 5 ID + 5 passcode trajectory files."""
    payload = {
        "id_signals": [Path(p).read_text() for p in id_signals],
        "passcode_signals": [Path(p).read_text() for p in passcode_signals],
    }
    _client_rpc(host, port, "register", payload)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=9757, show_default=True)
@click.option("--account", required=True)
@click.option("--signal", "signal_path", type=click.Path(exists=True), required=True)
def login(host, port, account, signal_path):
    """Authenticate with a passcode trajectory file."""
    payload = {
        "account_number": account,
        "passcode_signal": Path(signal_path).read_text(),
    }
    _client_rpc(host, port, "authenticate", payload)


@main.command()
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--port", default=9757, show_default=True)
@click.option("--signal", "signal_path", type=click.Path(exists=True), required=True)
@click.option("-k", default=3, show_default=True)
def identify(host, port, signal_path, k):
    """Identify the account from an ID trajectory file."""
    payload = {"id_signal": Path(signal_path).read_text(), "k": k}
    _client_rpc(host, port, "identify", payload)


@main.command()
@click.option("--listen", default="127.0.0.1", show_default=True)
@click.option("--port", default=9757, show_default=True)
@click.option("--http-port", default=9758, show_default=True)
@click.option("--store", "store_path", type=click.Path(), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
def serve(listen, port, http_port, store_path, config_path):
    """Run the login service (TCP + HTTP bridge)."""
    from .service import LoginService, serve as _serve

    service = LoginService(AccountStore(store_path), _load_config(config_path))
    click.echo(f"serving on {listen}:{port} (http bridge :{http_port})")
    _serve(service, listen, port, http_port)


@main.command(name="train-index")
@click.option("--store", "store_path", type=click.Path(exists=True), required=True)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", default=0, show_default=True)
def train_index(store_path, config_path, seed):
    """Force a CNN retrain over the current store."""
    from .service import LoginService

    service = LoginService(AccountStore(store_path), _load_config(config_path))
    service.train_index(seed=seed)
    click.echo("identification index trained")


@main.command(name="eval")
@click.option("--corpus", "corpus_path", type=click.Path(exists=True), required=True)
@click.option("--experiment", type=click.Choice(["auth", "ident", "permanence", "exhaustive"]), default="auth", show_default=True)
@click.option("--method", type=click.Choice(["svm_ensemble", "plain_dtw"]), default="svm_ensemble", show_default=True)
@click.option("--policy", type=click.Choice(["static", "update", "update_and_retrain"]), default="static", show_default=True)
@click.option("--seed", default=0, show_default=True)
@click.option("--out", type=click.Path(), default=None, help="results JSON path")
def eval_cmd(corpus_path, experiment, method, policy, seed, out):
    """Run an evaluation protocol over a stored corpus."""
    from . import experiments
    from .synthgen import Corpus

    corpus = Corpus.load(corpus_path)
    if experiment == "auth":
        report = experiments.run_auth_experiment(corpus, method, seed=seed)
        result = report.to_dict()
        click.echo(
            f"EER {report.eer:.4f}  EER(spoof) {report.eer_spoof}  "
            f"FRR@FAR1e-4 {report.frr_at_far[1e-4]:.4f}"
        )
    elif experiment == "ident":
        report = experiments.run_ident_experiment(corpus, seed=seed)
        result = report.to_dict()
        click.echo(f"top-1 accuracy (verified): {report.accuracy_with_verify[1]:.4f}")
    elif experiment == "permanence":
        result = experiments.run_permanence(corpus, policy, seed=seed)
        click.echo(f"acceptance by session: {result['acceptance_by_session']}")
    else:
        result = experiments.run_exhaustive_ident(corpus, seed=seed)
        click.echo(f"exhaustive accuracy: {result['accuracy']:.4f}")
    if out:
        with open(out, "w") as f:
            json.dump({"experiment": experiment, "seed": seed, "result": result}, f, indent=1)
        click.echo(f"results written to {out}")


if __name__ == "__main__":
    main()
