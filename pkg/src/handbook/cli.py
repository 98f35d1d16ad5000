"""Operator CLI: run the service, move fixture bundles in and out, and run
offline reports.  Exit codes: 0 success / no findings, 1 findings, 2 usage or
config errors."""

from __future__ import annotations

import json
import socket
import sys
from pathlib import Path

import click

from . import bundle as bundle_mod
from . import catalog as catalog_mod
from .config import Config, load_config
from .entities import validate_program
from .errors import HandbookError, StoreNotEmpty
from .scheduling import detect_conflicts
from .service import LocalCredentials, Service
from .store import Store

EXIT_FINDINGS = 1
EXIT_USAGE = 2


class CliError(click.ClickException):
    """Config / usage / store errors exit with the usage code."""

    exit_code = EXIT_USAGE


def _load_config(config_path: str | None) -> Config:
    try:
        return load_config(config_path)
    except HandbookError as exc:
        raise CliError(f"{exc.code}: {exc.message}")


def _open_store(cfg: Config) -> Store:
    try:
        return Store(cfg.journal_path)
    except HandbookError as exc:
        raise CliError(f"{exc.code}: {exc.message}")


def _write_output(data: bytes, out: str | None) -> None:
    if out:
        Path(out).write_bytes(data)
    else:
        sys.stdout.buffer.write(data)


@click.group()
def main():
    """Curriculum catalog service and reporting tool."""


@main.command()
@click.option("--config", "config_path", required=True, type=click.Path(exists=False),
              help="Path to the JSON config file.")
def serve(config_path):
    """Run the HTTP service until terminated."""
    import uvicorn

    from .api import create_app

    cfg = _load_config(config_path)
    if not cfg.admin_credential:
        raise CliError("CONFIG_INVALID: config key 'admin_credential' is required for serve")

    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    try:
        probe.bind((cfg.listen, cfg.port))
    except OSError:
        raise CliError(f"PORT_IN_USE: {cfg.listen}:{cfg.port} is already bound")
    finally:
        probe.close()

    store = _open_store(cfg)
    identity = LocalCredentials(cfg.credentials_path)
    service = Service(store, admin_logins=(cfg.admin_login,), identity=identity,
                      session_ttl=cfg.session_ttl)
    service.bootstrap_admin(cfg.admin_login, cfg.admin_credential)
    app = create_app(service, ui_dir=cfg.ui_dir)
    try:
        uvicorn.run(app, host=cfg.listen, port=cfg.port, log_level="warning")
    finally:
        store.close()


@main.command(name="import")
@click.option("--file", "file_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
def import_cmd(file_path, config_path):
    """Load a fixture bundle into an empty store (all or nothing)."""
    cfg = _load_config(config_path)
    try:
        loaded = bundle_mod.load_bundle(file_path)
    except HandbookError as exc:
        raise CliError(f"{exc.code}: {exc.message}")
    store = _open_store(cfg)
    try:
        result = bundle_mod.import_bundle(store, loaded)
        identity = LocalCredentials(cfg.credentials_path)
        for login, secret in result["credentials"].items():
            identity.set_credential(login, secret)
    except StoreNotEmpty as exc:
        raise CliError(f"{exc.code}: {exc.message}")
    except HandbookError as exc:
        raise CliError(f"{exc.code}: {exc.message}")
    finally:
        store.close()
    click.echo(f"imported {result['entities']} entities")


@main.command()
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
def export(out_path, config_path):
    """Write the whole store as a canonical bundle."""
    cfg = _load_config(config_path)
    store = _open_store(cfg)
    try:
        data = bundle_mod.bundle_bytes(bundle_mod.export_bundle(store.snapshot()))
    finally:
        store.close()
    Path(out_path).write_bytes(data)
    click.echo(f"exported to {out_path}")


@main.command()
@click.argument("kind", type=click.Choice(["validate", "conflicts", "catalog", "timetable", "csv"]))
@click.option("--config", "config_path", type=click.Path(), default=None)
@click.option("--term", default=None)
@click.option("--program", default=None)
@click.option("--institution", default=None)
@click.option("--person", default=None)
@click.option("--room", default=None)
@click.option("--entity", default=None, help="CSV selection: modules, lectures or persons.")
@click.option("--format", "fmt", type=click.Choice(["json", "html"]), default="json")
@click.option("--out", "out_path", type=click.Path(), default=None)
@click.pass_context
def report(ctx, kind, config_path, term, program, institution, person, room,
           entity, fmt, out_path):
    """Generate a report; exits 1 when validate/conflicts find anything."""
    cfg = _load_config(config_path)
    store = _open_store(cfg)
    try:
        snap = store.snapshot()
        if kind == "validate":
            findings = []
            for program_id, _v, _data in snap.list("program"):
                findings.extend(validate_program(snap, program_id))
            payload = {"snapshot": snap.token, "violations": findings}
            _write_output(catalog_mod.canonical_json_bytes(payload), out_path)
            ctx.exit(EXIT_FINDINGS if findings else 0)
        elif kind == "conflicts":
            if not term:
                raise click.UsageError("--term is required for conflicts")
            found = detect_conflicts(snap, term, program_id=program, room=room)
            payload = {"snapshot": snap.token,
                       "conflicts": [c.to_dict() for c in found]}
            _write_output(catalog_mod.canonical_json_bytes(payload), out_path)
            ctx.exit(EXIT_FINDINGS if found else 0)
        elif kind == "catalog":
            if not term:
                raise click.UsageError("--term is required for catalog")
            if bool(program) == bool(institution):
                raise click.UsageError("catalog needs exactly one of --program / --institution")
            if program:
                document = catalog_mod.generate_program_catalog(snap, program, term)
            else:
                document = catalog_mod.generate_institution_catalog(snap, institution, term)
            if fmt == "html":
                _write_output(catalog_mod.render_html(document).encode("utf-8"), out_path)
            else:
                _write_output(catalog_mod.canonical_json_bytes(document), out_path)
        elif kind == "timetable":
            if not (person and term):
                raise click.UsageError("--person and --term are required for timetable")
            document = catalog_mod.generate_person_timetable(snap, person, term)
            if fmt == "html":
                _write_output(catalog_mod.render_html(document).encode("utf-8"), out_path)
            else:
                _write_output(catalog_mod.canonical_json_bytes(document), out_path)
        else:  # csv
            if entity not in ("modules", "lectures", "persons"):
                raise click.UsageError("--entity must be modules, lectures or persons")
            _write_output(catalog_mod.export_csv(snap, entity), out_path)
    except click.exceptions.Exit:
        raise
    except click.UsageError:
        raise
    except HandbookError as exc:
        raise CliError(f"{exc.code}: {exc.message}")
    finally:
        store.close()


if __name__ == "__main__":
    main()
