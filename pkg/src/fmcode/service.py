"""The login server: registration, authentication, identification.

Core logic lives in `LoginService`, a plain object over an
`AccountStore`; the network layer (TCP length-prefixed JSON plus an HTTP
bridge for browsers) only translates envelopes to method calls.
"""

from __future__ import annotations

import json
import socketserver
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .alignment import align_to_template, build_template, update_template
from .config import ServiceConfig
from .errors import FmcodeError, NotFoundError, ValidationError
from .identify import UNIDENTIFIED, IdEntry, identify, identify_exhaustive
from .protocol import (
    ProtocolError,
    make_error,
    make_response,
    recv_message,
    send_message,
    validate_request,
)
from .signals import RawTrajectory, Signal, derive_kinematics, parse_trajectory, preprocess
from .store import AccountRecord, AccountStore
from .svm import calibrate_threshold, score, train_ensemble
from .synthgen import PasscodeSpec, UserStyle, gen_signal


class LoginService:
    def __init__(self, store: AccountStore, config: ServiceConfig = ServiceConfig()):
        self.store = store
        self.config = config
        self._records: dict[str, AccountRecord] = store.load_all()
        self._model, trained_on = store.load_index()
        self._index_fresh = bool(self._model) and sorted(trained_on) == sorted(self._records)
        self._write_lock = threading.Lock()

    # -- helpers -------------------------------------------------------------

    def _preprocess_batch(self, trajectories: list[RawTrajectory], label: str) -> list[Signal]:
        signals, problems = [], []
        for i, traj in enumerate(trajectories):
            try:
                signals.append(preprocess(derive_kinematics(traj)))
            except FmcodeError as exc:
                problems.append(f"{label}[{i}]: {exc}")
        if problems:
            raise ValidationError("preprocessing failed", problems)
        return signals

    def _negative_pool(self, exclude: str | None = None) -> list[Signal]:
        """Other accounts' registration signals; synthetic guessing
        signals when the store is too young to provide any."""
        pool = []
        for number, rec in self._records.items():
            if number != exclude:
                pool.extend(rec.reg_passcode_signals)
                pool.extend(rec.reg_id_signals)
        if len(self._records) - (1 if exclude in self._records else 0) >= 2 and pool:
            return pool
        rng = np.random.default_rng(self.config.cold_start_seed)
        for i in range(self.config.cold_start_negatives):
            spec = PasscodeSpec.random(rng)
            style = UserStyle.random(spec, rng)
            traj = gen_signal(spec, style, seed=int(rng.integers(2**31)))
            pool.append(preprocess(derive_kinematics(traj)))
        return pool

    def _enroll_side(self, signals: list[Signal], negatives: list[Signal], seed: int):
        tmpl = build_template(signals)
        ens = train_ensemble(signals, tmpl, negatives, self.config.ensemble, seed=seed)
        threshold = self.config.threshold_override
        if threshold is None:
            threshold = calibrate_threshold(ens, tmpl, signals, negatives, seed=seed)
        return tmpl, ens.with_threshold(threshold)

    # -- operations ----------------------------------------------------------

    def register(
        self,
        id_trajectories: list[RawTrajectory],
        passcode_trajectories: list[RawTrajectory],
    ) -> dict:
        k = self.config.registration_count
        if len(id_trajectories) != k or len(passcode_trajectories) != k:
            raise ValidationError(
                f"registration needs exactly {k} id and {k} passcode signals",
                [f"got {len(id_trajectories)} id, {len(passcode_trajectories)} passcode"],
            )
        id_signals = self._preprocess_batch(id_trajectories, "id_signals")
        passcode_signals = self._preprocess_batch(passcode_trajectories, "passcode_signals")
        number = self.store.allocate_account_number()
        seed = int.from_bytes(number.encode()[-4:], "big")
        negatives = self._negative_pool(exclude=number)
        id_template, id_ensemble = self._enroll_side(id_signals, negatives, seed)
        pc_template, pc_ensemble = self._enroll_side(passcode_signals, negatives, seed + 1)
        record = AccountRecord(
            number, id_template, pc_template, id_ensemble, pc_ensemble,
            id_signals, passcode_signals,
        )
        with self._write_lock:
            self.store.save(record)
            self._records[number] = record
            self._index_fresh = False
        if self.config.auto_train_index and len(self._records) >= 2:
            threading.Thread(target=self.train_index, daemon=True).start()
        return {"account_number": number, "index_stale": True}

    def authenticate(self, account_number: str, trajectory: RawTrajectory) -> dict:
        record = self._records.get(account_number)
        if record is None:
            raise NotFoundError(f"unknown account {account_number!r}")
        signal = self._preprocess_batch([trajectory], "passcode_signal")[0]
        value = score(
            record.passcode_ensemble, record.passcode_template, signal,
            seed=self.config.score_seed,
        )
        threshold = record.passcode_ensemble.threshold
        decision = "accept" if value < threshold else "reject"
        if decision == "accept" and self.config.update_on_accept:
            aligned = align_to_template(signal, record.passcode_template)
            with self._write_lock:
                record.passcode_template = update_template(
                    record.passcode_template, aligned, self.config.template_update_lambda
                )
                self.store.save(record)
        return {"decision": decision, "score": value, "threshold": threshold}

    def _id_entries(self) -> dict[str, IdEntry]:
        return {
            number: IdEntry(rec.id_template, rec.id_ensemble, rec.id_ensemble.threshold)
            for number, rec in self._records.items()
        }

    def identify(self, trajectory: RawTrajectory, k: int | None = None) -> dict:
        if not self._records:
            raise NotFoundError("no accounts enrolled")
        signal = self._preprocess_batch([trajectory], "id_signal")[0]
        k = k or self.config.identify_k
        entries = self._id_entries()
        stale = self._model is None or not self._index_fresh
        if stale:
            answer, scored = identify_exhaustive(entries, signal, seed=self.config.score_seed)
        else:
            answer, scored = identify(
                self._model, entries, signal, k, seed=self.config.score_seed
            )
        payload = {"account_number": answer, "stale_index": stale}
        if answer != UNIDENTIFIED:
            payload["score"] = dict((n, s) for n, s in scored)[answer]
        return payload

    def train_index(self, seed: int = 0):
        """Retrain the CNN over the whole store and swap it in atomically."""
        from .cnn import augment_registration, train_cnn

        with self._write_lock:
            records = dict(self._records)
        labeled = []
        for number, rec in records.items():
            for s in augment_registration(rec.reg_id_signals, seed=seed):
                labeled.append((s, number))
        model = train_cnn(labeled, self.config.cnn)
        with self._write_lock:
            self.store.save_index(model)
            self._model = model
            self._index_fresh = sorted(records) == sorted(self._records)
        return model

    # -- envelope dispatch ---------------------------------------------------

    def handle_envelope(self, msg: dict) -> dict:
        try:
            validate_request(msg)
        except ProtocolError as exc:
            return make_error(str(msg.get("nonce", "")), "protocol", str(exc))
        nonce, op, payload = msg["nonce"], msg["op"], msg["payload"]
        try:
            if op == "register":
                result = self.register(
                    [parse_trajectory(t, "pointer2d") for t in payload.get("id_signals", [])],
                    [parse_trajectory(t, "pointer2d") for t in payload.get("passcode_signals", [])],
                )
            elif op == "authenticate":
                result = self.authenticate(
                    payload.get("account_number", ""),
                    parse_trajectory(payload.get("passcode_signal", ""), "pointer2d"),
                )
            elif op == "identify":
                result = self.identify(
                    parse_trajectory(payload.get("id_signal", ""), "pointer2d"),
                    payload.get("k"),
                )
            else:  # status
                result = {
                    "accounts": len(self._records),
                    "index_stale": self._model is None or not self._index_fresh,
                }
            return make_response(nonce, result)
        except NotFoundError as exc:
            return make_error(nonce, "not_found", str(exc))
        except ValidationError as exc:
            return make_error(nonce, "validation", str(exc), exc.details)
        except FmcodeError as exc:
            return make_error(nonce, "validation", str(exc))


# ---------------------------------------------------------------------------
# transports
# ---------------------------------------------------------------------------

class _TcpHandler(socketserver.BaseRequestHandler):
    def handle(self):
        while True:
            try:
                msg = recv_message(self.request)
            except (ProtocolError, ConnectionError, json.JSONDecodeError):
                return
            send_message(self.request, self.server.service.handle_envelope(msg))


class TcpServer(socketserver.ThreadingTCPServer):
    allow_reuse_address = True
    daemon_threads = True

    def __init__(self, address, service: LoginService):
        super().__init__(address, _TcpHandler)
        self.service = service


def _http_handler(service: LoginService):
    class Handler(BaseHTTPRequestHandler):
        def _cors(self):
            self.send_header("Access-Control-Allow-Origin", "*")
            self.send_header("Access-Control-Allow-Headers", "Content-Type")
            self.send_header("Access-Control-Allow-Methods", "POST, OPTIONS")

        def do_OPTIONS(self):
            self.send_response(204)
            self._cors()
            self.end_headers()

        def do_POST(self):
            if self.path != "/rpc":
                self.send_response(404)
                self._cors()
                self.end_headers()
                return
            length = int(self.headers.get("Content-Length", 0))
            try:
                msg = json.loads(self.rfile.read(length).decode("utf-8"))
            except json.JSONDecodeError:
                response = make_error("", "protocol", "invalid JSON body")
            else:
                response = service.handle_envelope(msg)
            body = json.dumps(response).encode("utf-8")
            self.send_response(200)
            self._cors()
            self.send_header("Content-Type", "application/json")
            self.send_header("Content-Length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    return Handler


def serve(
    service: LoginService,
    host: str = "127.0.0.1",
    port: int = 9757,
    http_port: int | None = 9758,
):
    """Run the TCP endpoint (and HTTP bridge) until interrupted."""
    tcp = TcpServer((host, port), service)
    servers = [tcp]
    if http_port is not None:
        http = ThreadingHTTPServer((host, http_port), _http_handler(service))
        servers.append(http)
        threading.Thread(target=http.serve_forever, daemon=True).start()
    try:
        tcp.serve_forever()
    finally:
        for s in servers:
            s.shutdown()
            s.server_close()
