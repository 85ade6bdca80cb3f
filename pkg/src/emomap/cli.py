"""Operator command line.

Two ways to reach the platform: ``--store PATH`` operates on the files
directly (service stopped; mutations take the serve lock and refuse to run
against a live service), or ``--api URL --token T`` goes through a running
service. Flags win over the EMOMAP_* environment variables.

Exit codes: 0 success, 1 usage error, 2 domain error, 3 I/O or environment
error. Output goes to stdout, diagnostics to stderr; nothing ever prompts.
"""

from __future__ import annotations

import argparse
import json
import os
import socket
import sys
from pathlib import Path
from typing import Optional

from .errors import CorruptRecord, EmomapError, StorageFull, StoreLocked
from .model import Handedness, Mode, OrderingPolicy, parse_utc
from .service import Platform
from .store import FileStore, ServeLock

ENV_STORE = "EMOMAP_STORE_ROOT"
ENV_API = "EMOMAP_API"
ENV_TOKEN = "EMOMAP_TOKEN"
ENV_BIND = "EMOMAP_BIND"
ENV_BASE_URL = "EMOMAP_BASE_URL"
ENV_MAX_IMAGE = "EMOMAP_MAX_IMAGE_BYTES"
ENV_UI = "EMOMAP_UI"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DOMAIN = 2
EXIT_IO = 3


class UsageError(Exception):
    pass


class CliParser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _env(flag_value, env_name, default=None):
    if flag_value is not None:
        return flag_value
    return os.environ.get(env_name, default)


def _parse_bind(bind: str) -> tuple[str, int]:
    host, _, port = bind.rpartition(":")
    if not host or not port:
        raise UsageError(f"--bind must be HOST:PORT, got {bind!r}")
    try:
        return host, int(port)
    except ValueError:
        raise UsageError(f"invalid port in --bind {bind!r}")


# ---------------------------------------------------------------------------
# target resolution: direct store or remote API


class DirectTarget:
    def __init__(self, root: str, base_url: str, max_image_bytes: Optional[int]):
        self.root = Path(root)
        kwargs = {"base_url": base_url}
        if max_image_bytes:
            kwargs["max_image_bytes"] = int(max_image_bytes)
        self.platform = Platform(FileStore(self.root), **kwargs)

    def lock(self) -> ServeLock:
        return ServeLock(self.root).acquire()


class RemoteTarget:
    def __init__(self, url: str, token: Optional[str]):
        import requests

        self.url = url.rstrip("/")
        self.http = requests.Session()
        if token:
            self.http.headers["Authorization"] = f"Bearer {token}"

    def call(self, method: str, path: str, **kwargs):
        import requests

        try:
            response = self.http.request(method, self.url + path, timeout=30, **kwargs)
        except requests.RequestException as exc:
            raise OSError(f"cannot reach {self.url}: {exc}")
        if response.status_code >= 400:
            try:
                error = response.json()["error"]
                raise EmomapError(f"{error['code']}: {error['message']}")
            except (ValueError, KeyError):
                raise EmomapError(f"HTTP {response.status_code}: {response.text[:200]}")
        return response


def _resolve_target(args):
    store = _env(getattr(args, "store", None), ENV_STORE)
    api = _env(getattr(args, "api", None), ENV_API)
    if store and api:
        raise UsageError("pass either --store or --api, not both")
    if api:
        return RemoteTarget(api, _env(getattr(args, "token", None), ENV_TOKEN))
    if store:
        base_url = _env(getattr(args, "base_url", None), ENV_BASE_URL, "http://localhost:8000")
        return DirectTarget(store, base_url, _env(None, ENV_MAX_IMAGE))
    raise UsageError("no target: pass --store PATH or --api URL (or set EMOMAP_STORE_ROOT / EMOMAP_API)")


def _print(value):
    sys.stdout.write(f"{value}\n")


# ---------------------------------------------------------------------------
# commands


def cmd_serve(args) -> int:
    store_root = _env(args.store, ENV_STORE)
    if not store_root:
        raise UsageError("serve needs --store PATH (or EMOMAP_STORE_ROOT)")
    bind = _env(args.bind, ENV_BIND, "127.0.0.1:8000")
    host, port = _parse_bind(bind)
    base_url = _env(args.base_url, ENV_BASE_URL, None)
    max_image = _env(args.max_image_bytes, ENV_MAX_IMAGE, None)
    ui_dir = _env(args.ui, ENV_UI, None)
    if ui_dir and not Path(ui_dir).is_dir():
        sys.stderr.write(f"emomap: --ui directory {ui_dir} does not exist\n")
        return EXIT_IO

    import uvicorn

    from .api import create_app

    Path(store_root).mkdir(parents=True, exist_ok=True)
    lock = ServeLock(Path(store_root))
    lock.acquire()
    try:
        sock = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
        sock.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        try:
            sock.bind((host, port))
        except OSError as exc:
            sock.close()
            sys.stderr.write(f"emomap: cannot bind {host}:{port}: {exc}\n")
            return EXIT_IO
        actual_host, actual_port = sock.getsockname()[:2]
        if base_url is None:
            base_url = f"http://{actual_host}:{actual_port}"

        kwargs = {"base_url": base_url}
        if max_image:
            kwargs["max_image_bytes"] = int(max_image)
        platform = Platform(FileStore(store_root), **kwargs)
        app = create_app(platform, ui_dir=ui_dir)

        _print(f"emomap: listening on http://{actual_host}:{actual_port} (store: {store_root})")
        sys.stdout.flush()
        config = uvicorn.Config(app, log_level="warning", access_log=False)
        uvicorn.Server(config).run(sockets=[sock])
        return EXIT_OK
    finally:
        lock.release()


def cmd_experiment_create(args) -> int:
    target = _resolve_target(args)
    mode = args.mode.upper()
    ordering = "RANDOM_PER_PARTICIPANT" if args.ordering == "random" else "FIXED"
    if isinstance(target, RemoteTarget):
        doc = target.call(
            "POST",
            "/api/experiments",
            json={
                "mode": mode,
                "start_time": args.start,
                "finish_time": args.finish,
                "tag_map_id": args.tag_map,
                "ordering": ordering,
                "locale_default": args.locale,
            },
        ).json()
        _print(doc["id"])
        return EXIT_OK
    with target.lock():
        experiment = target.platform.create_experiment(
            mode=Mode(mode),
            start_time=parse_utc(args.start),
            finish_time=parse_utc(args.finish),
            tag_map_id=args.tag_map,
            ordering=OrderingPolicy(ordering),
            locale_default=args.locale,
        )
    _print(experiment.id)
    return EXIT_OK


def cmd_experiment_list(args) -> int:
    target = _resolve_target(args)
    if isinstance(target, RemoteTarget):
        docs = target.call("GET", "/api/experiments").json()
    else:
        docs = [e.to_doc() for e in target.platform.list_experiments()]
    for doc in docs:
        _print(
            f"{doc['id']}\t{doc['mode']}\t{doc['state']}\t{doc['start_time']}\t{doc['finish_time']}"
            f"\tpictures={len(doc['picture_ids'])}\tparticipants={len(doc['participant_ids'])}"
        )
    return EXIT_OK


def _transition(args, verb: str) -> int:
    target = _resolve_target(args)
    if isinstance(target, RemoteTarget):
        doc = target.call("POST", f"/api/experiments/{args.experiment}/{verb}").json()
    else:
        with target.lock():
            if verb == "activate":
                doc = target.platform.activate_experiment(args.experiment).to_doc()
            else:
                doc = target.platform.finish_experiment(args.experiment).to_doc()
    _print(f"{doc['id']} {doc['state']}")
    return EXIT_OK


def cmd_experiment_activate(args) -> int:
    return _transition(args, "activate")


def cmd_experiment_finish(args) -> int:
    return _transition(args, "finish")


def cmd_experiment_add_pictures(args) -> int:
    target = _resolve_target(args)
    payloads = []
    for name in args.files:
        path = Path(name)
        try:
            payloads.append((path.name, path.read_bytes()))
        except OSError as exc:
            sys.stderr.write(f"emomap: cannot read {name}: {exc}\n")
            return EXIT_IO
    if isinstance(target, RemoteTarget):
        for filename, data in payloads:
            doc = target.call(
                "POST",
                f"/api/experiments/{args.experiment}/pictures",
                files={"image": (filename, data)},
            ).json()
            _print(doc["picture_id"])
        return EXIT_OK
    with target.lock():
        for filename, data in payloads:
            picture = target.platform.add_curated_picture(
                args.experiment, data, uploaded_by="cli"
            )
            _print(picture.id)
    return EXIT_OK


def cmd_experiment_invite(args) -> int:
    target = _resolve_target(args)
    if isinstance(target, RemoteTarget):
        body = {"experiment_id": args.experiment, "participant_id": args.participant}
        if args.expires:
            body["expires_at"] = args.expires
        doc = target.call("POST", "/api/invitations", json=body).json()
        _print(doc["url_payload"])
        return EXIT_OK
    with target.lock():
        invitation = target.platform.mint_invitation(
            args.experiment,
            args.participant,
            expires_at=parse_utc(args.expires) if args.expires else None,
        )
    _print(invitation.url_payload)
    return EXIT_OK


def _write_output(text: str, out: Optional[str]) -> int:
    if out:
        try:
            with open(out, "w", encoding="utf-8", newline="") as f:
                f.write(text)
        except OSError as exc:
            sys.stderr.write(f"emomap: cannot write {out}: {exc}\n")
            return EXIT_IO
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_experiment_export(args) -> int:
    target = _resolve_target(args)
    if isinstance(target, RemoteTarget):
        text = target.call("GET", f"/api/experiments/{args.experiment}/export.csv").text
    else:
        text = target.platform.export_csv(args.experiment)
    return _write_output(text, args.out)


def cmd_experiment_map(args) -> int:
    target = _resolve_target(args)
    if isinstance(target, RemoteTarget):
        doc = target.call(
            "GET", f"/api/experiments/{args.experiment}/map", params={"cell_size": args.cell_size}
        ).json()
    else:
        doc = target.platform.emotion_map(args.experiment, args.cell_size).to_doc()
    return _write_output(json.dumps(doc, ensure_ascii=False, indent=2) + "\n", args.out)


def cmd_participant_create(args) -> int:
    target = _resolve_target(args)
    handedness = "LEFT" if args.left_handed else "RIGHT"
    if isinstance(target, RemoteTarget):
        body = {"display_name": args.name, "handedness": handedness}
        if args.username:
            body["username"] = args.username
        if args.password:
            body["password"] = args.password
        doc = target.call("POST", "/api/participants", json=body).json()
        _print(doc["id"])
        return EXIT_OK
    with target.lock():
        participant = target.platform.create_participant(
            args.name,
            username=args.username,
            password=args.password,
            handedness=Handedness(handedness),
        )
    _print(participant.id)
    return EXIT_OK


def cmd_researcher_create(args) -> int:
    if getattr(args, "api", None) or os.environ.get(ENV_API):
        raise UsageError("researcher create works only against --store (bootstrap credential)")
    target = _resolve_target(args)
    with target.lock():
        researcher = target.platform.create_researcher(args.username, args.password)
    _print(researcher.id)
    return EXIT_OK


def cmd_login(args) -> int:
    api = _env(args.api, ENV_API)
    if not api:
        raise UsageError("login needs --api URL (or EMOMAP_API)")
    target = RemoteTarget(api, None)
    doc = target.call(
        "POST", "/api/login", json={"username": args.username, "password": args.password}
    ).json()
    _print(doc["token"])
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser


def _add_target_options(parser, store_only=False):
    parser.add_argument("--store", help=f"store root directory (env {ENV_STORE})")
    if not store_only:
        parser.add_argument("--api", help=f"base URL of a running service (env {ENV_API})")
        parser.add_argument("--token", help=f"researcher bearer token for --api (env {ENV_TOKEN})")
    parser.add_argument("--base-url", dest="base_url", help=f"public base URL for invitation links (env {ENV_BASE_URL})")


def build_parser() -> CliParser:
    parser = CliParser(prog="emomap", description="emotion-tagging crowdsensing platform")
    sub = parser.add_subparsers(dest="command", metavar="COMMAND")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--store", help=f"store root directory (env {ENV_STORE})")
    serve.add_argument("--bind", help=f"HOST:PORT to listen on (env {ENV_BIND}, default 127.0.0.1:8000)")
    serve.add_argument("--base-url", dest="base_url", help=f"public base URL (env {ENV_BASE_URL})")
    serve.add_argument("--max-image-bytes", dest="max_image_bytes", type=int,
                       help=f"upload size limit (env {ENV_MAX_IMAGE})")
    serve.add_argument("--ui", help=f"directory with the built web UI to host (env {ENV_UI})")
    serve.set_defaults(func=cmd_serve)

    experiment = sub.add_parser("experiment", help="manage experiments")
    esub = experiment.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")

    create = esub.add_parser("create", help="create a draft experiment")
    _add_target_options(create)
    create.add_argument("--mode", required=True, choices=["curated", "field"])
    create.add_argument("--start", required=True, help="start time, ISO-8601")
    create.add_argument("--finish", required=True, help="finish time, ISO-8601")
    create.add_argument("--tag-map", dest="tag_map", default="plutchik")
    create.add_argument("--ordering", choices=["fixed", "random"], default="fixed")
    create.add_argument("--locale", default="en")
    create.set_defaults(func=cmd_experiment_create)

    listing = esub.add_parser("list", help="list experiments")
    _add_target_options(listing)
    listing.set_defaults(func=cmd_experiment_list)

    activate = esub.add_parser("activate", help="DRAFT -> ACTIVE")
    _add_target_options(activate)
    activate.add_argument("--experiment", required=True)
    activate.set_defaults(func=cmd_experiment_activate)

    finish = esub.add_parser("finish", help="ACTIVE -> FINISHED")
    _add_target_options(finish)
    finish.add_argument("--experiment", required=True)
    finish.set_defaults(func=cmd_experiment_finish)

    add_pictures = esub.add_parser("add-pictures", help="upload curated pictures")
    _add_target_options(add_pictures)
    add_pictures.add_argument("--experiment", required=True)
    add_pictures.add_argument("files", nargs="+", metavar="FILE")
    add_pictures.set_defaults(func=cmd_experiment_add_pictures)

    invite = esub.add_parser("invite", help="mint an invitation URL (QR payload)")
    _add_target_options(invite)
    invite.add_argument("--experiment", required=True)
    invite.add_argument("--participant", required=True)
    invite.add_argument("--expires", help="expiry time, ISO-8601")
    invite.set_defaults(func=cmd_experiment_invite)

    export = esub.add_parser("export", help="write the experiment CSV")
    _add_target_options(export)
    export.add_argument("--experiment", required=True)
    export.add_argument("--out", help="output file (default stdout)")
    export.set_defaults(func=cmd_experiment_export)

    emap = esub.add_parser("map", help="write the emotion-map cell document")
    _add_target_options(emap)
    emap.add_argument("--experiment", required=True)
    emap.add_argument("--cell-size", dest="cell_size", type=float, required=True)
    emap.add_argument("--out", help="output file (default stdout)")
    emap.set_defaults(func=cmd_experiment_map)

    participant = sub.add_parser("participant", help="manage participants")
    psub = participant.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    pcreate = psub.add_parser("create", help="register a participant")
    _add_target_options(pcreate)
    pcreate.add_argument("--name", required=True)
    pcreate.add_argument("--username")
    pcreate.add_argument("--password")
    pcreate.add_argument("--left-handed", dest="left_handed", action="store_true")
    pcreate.set_defaults(func=cmd_participant_create)

    researcher = sub.add_parser("researcher", help="manage researcher accounts")
    rsub = researcher.add_subparsers(dest="subcommand", metavar="SUBCOMMAND")
    rcreate = rsub.add_parser("create", help="create a researcher (direct store only)")
    _add_target_options(rcreate, store_only=True)
    rcreate.add_argument("--username", required=True)
    rcreate.add_argument("--password", required=True)
    rcreate.set_defaults(func=cmd_researcher_create)

    login = sub.add_parser("login", help="obtain a researcher bearer token from a service")
    login.add_argument("--api", help=f"base URL of a running service (env {ENV_API})")
    login.add_argument("--username", required=True)
    login.add_argument("--password", required=True)
    login.set_defaults(func=cmd_login)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if not getattr(args, "func", None):
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        return args.func(args)
    except UsageError as exc:
        sys.stderr.write(f"emomap: {exc}\n")
        return EXIT_USAGE
    except ValueError as exc:
        sys.stderr.write(f"emomap: {exc}\n")
        return EXIT_USAGE
    except (StoreLocked, StorageFull, CorruptRecord) as exc:
        sys.stderr.write(f"emomap: {exc}\n")
        return EXIT_IO
    except EmomapError as exc:
        sys.stderr.write(f"emomap: {exc}\n")
        return EXIT_DOMAIN
    except OSError as exc:
        sys.stderr.write(f"emomap: {exc}\n")
        return EXIT_IO
    except KeyboardInterrupt:
        return 130


if __name__ == "__main__":
    raise SystemExit(main())
