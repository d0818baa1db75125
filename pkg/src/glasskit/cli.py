"""Command-line driver.

Exit codes are stable for CI: 0 success, 1 scenario or verification
failure, 2 usage/config errors. Every command takes --workspace; state
persists between invocations through the workspace directory.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .canonical import canonical_parse, canonical_serialize
from .chaincode import REGISTRY_CHAINCODE, CredentialSchema, TrustPolicyEntry
from .credential import (
    VerifiableCredential,
    VerifiablePresentation,
    present,
    verify_presentation,
)
from .crypto import base58_decode, base58_encode, random_bytes
from .errors import ConfigError, GlassError, WorkspaceError
from .portal import Holding
from .report import format_audit_table, write_audit_report
from .scenario import load_script, run_scenario
from .workspace import Workspace, WorkspaceConfig, workspace_lock

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2


def _print_json(payload) -> None:
    sys.stdout.write(canonical_serialize(payload).decode("utf-8") + "\n")


def _load_config(path: str | None, seed: int | None) -> WorkspaceConfig:
    record: dict = {}
    if path is not None:
        try:
            record = json.loads(Path(path).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(
                f"config {path}: invalid JSON at line {exc.lineno} column {exc.colno}"
            ) from exc
        except OSError as exc:
            raise ConfigError(f"config {path}: {exc}") from exc
        if not isinstance(record, dict):
            raise ConfigError(f"config {path}: top level must be an object")
    if seed is not None:
        record["seed"] = seed
    return WorkspaceConfig.from_dict(record)


# --- commands ------------------------------------------------------------------

def cmd_init(args) -> int:
    config = _load_config(args.config, args.seed)
    with workspace_lock(args.workspace):
        workspace = Workspace.create(args.workspace, config)
    if args.json:
        _print_json({"workspace": str(workspace.path), "seed": config.seed,
                     "orgs": sorted(workspace.channel.orgs)})
    else:
        print(f"initialized workspace at {workspace.path} (seed {config.seed})")
    return EXIT_OK


def cmd_identity(args) -> int:
    with workspace_lock(args.workspace):
        workspace = Workspace.load(args.workspace)
        if args.identity_command == "create":
            wallet = workspace.create_wallet(args.name)
            if args.onboard:
                session = workspace.session_for(args.org)
                session.onboard(wallet, args.kind)
            workspace.save()
            payload = {"name": args.name, "did": wallet.did,
                       "onboarded": bool(args.onboard)}
            _print_json(payload) if args.json else print(
                f"wallet {args.name}: {wallet.did}"
                + (" (onboarded)" if args.onboard else "")
            )
        elif args.identity_command == "list":
            payload = {name: wallet.did
                       for name, wallet in sorted(workspace.wallets.items())}
            if args.json:
                _print_json(payload)
            else:
                for name, did in payload.items():
                    print(f"{name}\t{did}")
    return EXIT_OK


def cmd_registry(args) -> int:
    with workspace_lock(args.workspace):
        workspace = Workspace.load(args.workspace)
        authority = workspace.session_for(args.as_org)
        if args.registry_command == "issuer":
            wallet = workspace.wallet(args.name)
            entry = TrustPolicyEntry(
                issuer=wallet.did,
                country_domain=args.domain,
                permitted_types=frozenset(args.types),
            )
            workspace.channel.submit(
                authority.identity, REGISTRY_CHAINCODE, "register_trusted_issuer",
                [canonical_serialize(entry.to_dict())],
            )
            result = {"issuer": wallet.did, "types": sorted(entry.permitted_types)}
        elif args.registry_command == "app":
            wallet = workspace.wallet(args.name)
            workspace.channel.submit(
                authority.identity, REGISTRY_CHAINCODE, "register_trusted_app",
                [wallet.did.encode()],
            )
            result = {"app": wallet.did}
        else:  # dump
            result = workspace.registry_dump()
        workspace.save()
    _print_json(result) if args.json else print(
        canonical_serialize(result).decode("utf-8")
    )
    return EXIT_OK


def cmd_schema(args) -> int:
    with workspace_lock(args.workspace):
        workspace = Workspace.load(args.workspace)
        if args.schema_command == "register":
            record = json.loads(Path(args.file).read_text(encoding="utf-8"))
            schema = CredentialSchema.from_dict(record)
            authority = workspace.session_for(args.as_org)
            workspace.channel.submit(
                authority.identity, REGISTRY_CHAINCODE, "register_schema",
                [canonical_serialize(schema.to_dict())],
            )
            workspace.save()
            result = {"schema_id": schema.schema_id}
        else:  # list
            result = workspace.registry_dump()["schemas"]
    _print_json(result) if args.json else print(
        canonical_serialize(result).decode("utf-8")
    )
    return EXIT_OK


def cmd_issue(args) -> int:
    claims = json.loads(
        Path(args.claims).read_text(encoding="utf-8")
        if args.claims.endswith(".json") else args.claims
    )
    with workspace_lock(args.workspace):
        workspace = Workspace.load(args.workspace)
        issuer = workspace.wallet(args.issuer)
        subject = workspace.wallet(args.subject)
        session = workspace.session_for(args.org)
        record = session.issue_and_distribute(
            issuer, subject.did, args.schema, claims
        )
        subject.holdings.append(Holding(
            credential_id=record.credential_id, cid=record.cid, uri=record.uri
        ))
        workspace.save()
    _print_json(record.to_dict())
    return EXIT_OK


def cmd_retrieve(args) -> int:
    with workspace_lock(args.workspace):
        workspace = Workspace.load(args.workspace)
        subject = workspace.wallet(args.subject)
        cid_text = args.cid or (subject.holdings[-1].cid if subject.holdings else None)
        if cid_text is None:
            raise ConfigError(f"{args.subject} holds no credentials and no --cid given")
        session = workspace.session_for(args.org)
        credential = session.retrieve_credential(subject, cid_text)
        workspace.save()
    payload = credential.to_dict()
    if args.out:
        Path(args.out).write_bytes(canonical_serialize(payload) + b"\n")
        if not args.json:
            print(f"wrote credential {credential.credential_id} to {args.out}")
            return EXIT_OK
    _print_json(payload)
    return EXIT_OK


def cmd_present(args) -> int:
    with workspace_lock(args.workspace):
        workspace = Workspace.load(args.workspace)
        holder = workspace.wallet(args.holder)
        credentials = []
        for path in args.credential:
            credentials.append(VerifiableCredential.from_dict(
                canonical_parse(Path(path).read_bytes())
            ))
        challenge = (base58_decode(args.challenge) if args.challenge
                     else random_bytes(32, workspace.rng))
        vp = present(holder.signing, holder.did, credentials, challenge)
        workspace.save()
    payload = {"presentation": vp.to_dict(),
               "challenge_b58": base58_encode(challenge)}
    if args.out:
        Path(args.out).write_bytes(canonical_serialize(payload) + b"\n")
        if not args.json:
            print(f"wrote presentation to {args.out}")
            return EXIT_OK
    _print_json(payload)
    return EXIT_OK


def cmd_verify(args) -> int:
    with workspace_lock(args.workspace):
        workspace = Workspace.load(args.workspace)
        record = canonical_parse(Path(args.vp).read_bytes())
        vp = VerifiablePresentation.from_dict(record["presentation"])
        challenge = base58_decode(args.challenge or record["challenge_b58"])
        session = workspace.session_for(args.org)
        if args.verifier:
            verifier = workspace.wallet(args.verifier)
            view = session.registry_view(audited=True)
            if not view.is_trusted_app(verifier.did):
                workspace.save()
                raise GlassError(f"verifier not a trusted app: {verifier.did}")
        report = verify_presentation(
            vp, challenge, session.registry_view(audited=True)
        )
        workspace.save()
    _print_json(report.to_dict())
    return EXIT_OK if report.overall else EXIT_FAILURE


def cmd_scenario_run(args) -> int:
    script = load_script(args.script)
    workspace_path = Path(args.workspace)
    with workspace_lock(workspace_path):
        if (workspace_path / "manifest.json").exists():
            workspace = Workspace.load(workspace_path)
        else:
            workspace = Workspace.create(
                workspace_path, WorkspaceConfig(seed=script.seed)
            )
        report = run_scenario(workspace, script)
        workspace.save()
        if args.report:
            Path(args.report).write_bytes(report.to_bytes())
    if args.json:
        sys.stdout.write(report.to_bytes().decode("utf-8"))
    else:
        for step in report.steps:
            line = f"step {step['index']:>2} {step['action']:<16} {step['status']}"
            if step["error"]:
                line += f"  ({step['error']})"
            print(line)
        print(f"final height: {report.final_height}")
        print(f"atomicity:    {'ok' if report.atomicity_ok else 'BROKEN'}")
        print(f"result:       {'PASS' if report.all_passed else 'FAIL'}")
    if not report.all_passed:
        failing = next(
            (s["index"] for s in report.steps if s["status"] == "failed"), None
        )
        if failing is not None and not args.json:
            print(f"first divergence at step {failing}", file=sys.stderr)
        return EXIT_FAILURE
    return EXIT_OK


def cmd_audit(args) -> int:
    workspace = Workspace.load(args.workspace)
    rows = workspace.channel.audit_rows()
    if args.report:
        paths = write_audit_report(rows, args.report)
        if not args.json:
            for path in paths:
                print(f"wrote {path}")
    if args.json:
        _print_json(rows)
    else:
        print(format_audit_table(rows))
    return EXIT_OK


def cmd_verify_chain(args) -> int:
    workspace = Workspace.load(args.workspace)
    ok, bad_height, reason = workspace.channel.verify_chain_report()
    if args.json:
        _print_json({"ok": ok, "first_bad_height": bad_height, "reason": reason})
    elif ok:
        print(f"chain ok: {workspace.channel.height + 1} blocks verified")
    else:
        location = f" at height {bad_height}" if bad_height is not None else ""
        print(f"chain INVALID{location}: {reason}")
    return EXIT_OK if ok else EXIT_FAILURE


# --- argument parsing -------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="glasskit",
        description="Credential data-sharing fabric: private swarm storage, "
                    "permissioned triplet ledger, trust registries.",
    )
    parser.add_argument("--workspace", default="workspace",
                        help="workspace directory (default: ./workspace)")
    parser.add_argument("--json", action="store_true",
                        help="machine-readable output")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("init", help="create a workspace: channel, orgs, swarm")
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--seed", type=int, help="override the config seed")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("identity", help="wallet management")
    idsub = p.add_subparsers(dest="identity_command", required=True)
    c = idsub.add_parser("create", help="create a wallet")
    c.add_argument("--name", required=True)
    c.add_argument("--onboard", action="store_true",
                   help="register the DID right away")
    c.add_argument("--kind", default="natural_person",
                   choices=("natural_person", "legal_person"))
    c.add_argument("--org", default="org1.org",
                   help="org whose session submits the registration")
    idsub.add_parser("list", help="list wallets")
    p.set_defaults(func=cmd_identity)

    p = sub.add_parser("registry", help="trust registry management")
    regsub = p.add_subparsers(dest="registry_command", required=True)
    c = regsub.add_parser("issuer", help="register a trusted issuer")
    c.add_argument("--name", required=True, help="issuer wallet name")
    c.add_argument("--types", nargs="+", required=True,
                   help="permitted credential types, e.g. AC")
    c.add_argument("--domain", required=True, help="country domain, e.g. PT")
    c = regsub.add_parser("app", help="register a trusted app (verifier)")
    c.add_argument("--name", required=True, help="verifier wallet name")
    regsub.add_parser("dump", help="dump the whole registry")
    p.add_argument("--as-org", default="accreditation.org",
                   help="org performing the registration")
    p.set_defaults(func=cmd_registry)

    p = sub.add_parser("schema", help="credential schema management")
    schsub = p.add_subparsers(dest="schema_command", required=True)
    c = schsub.add_parser("register", help="register a schema from a JSON file")
    c.add_argument("--file", required=True)
    schsub.add_parser("list", help="list registered schemas")
    p.add_argument("--as-org", default="accreditation.org")
    p.set_defaults(func=cmd_schema)

    p = sub.add_parser("issue", help="issue, encrypt, distribute, record")
    p.add_argument("--issuer", required=True, help="issuer wallet name")
    p.add_argument("--subject", required=True, help="subject wallet name")
    p.add_argument("--schema", required=True, help="schema id")
    p.add_argument("--claims", required=True,
                   help="claims JSON (inline or a .json file path)")
    p.add_argument("--org", default="org1.org", help="portal org")
    p.set_defaults(func=cmd_issue)

    p = sub.add_parser("retrieve", help="fetch, unwrap and decrypt a credential")
    p.add_argument("--subject", required=True)
    p.add_argument("--cid", help="content id (default: latest holding)")
    p.add_argument("--org", default="org1.org")
    p.add_argument("--out", help="write the credential JSON here")
    p.set_defaults(func=cmd_retrieve)

    p = sub.add_parser("present", help="build a holder-signed presentation")
    p.add_argument("--holder", required=True)
    p.add_argument("--credential", nargs="+", required=True,
                   help="credential JSON file(s)")
    p.add_argument("--challenge", help="base58 challenge (default: fresh)")
    p.add_argument("--out", help="write the presentation JSON here")
    p.set_defaults(func=cmd_present)

    p = sub.add_parser("verify", help="verify a presentation against the registry")
    p.add_argument("--vp", required=True, help="presentation JSON file")
    p.add_argument("--challenge", help="expected challenge (base58)")
    p.add_argument("--verifier", help="verifier wallet (must be a trusted app)")
    p.add_argument("--org", default="org1.org")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("scenario", help="scripted end-to-end runs")
    scsub = p.add_subparsers(dest="scenario_command", required=True)
    c = scsub.add_parser("run", help="run a scenario script")
    c.add_argument("script", help="scenario JSON file")
    c.add_argument("--report", help="write the RunReport JSON here")
    c.set_defaults(func=cmd_scenario_run)

    p = sub.add_parser("audit", help="print the transaction audit table")
    p.add_argument("--report", metavar="DIR",
                   help="also write audit.csv and figures to DIR")
    p.set_defaults(func=cmd_audit)

    p = sub.add_parser("verify-chain", help="verify ledger integrity")
    p.set_defaults(func=cmd_verify_chain)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code not in (0, None) else EXIT_OK
    try:
        return args.func(args)
    except (ConfigError, WorkspaceError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except GlassError as exc:
        print(f"error [{exc.code}]: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def entrypoint() -> None:
    sys.exit(main())
