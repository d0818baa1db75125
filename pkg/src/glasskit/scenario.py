"""Scenario scripts: typed step sequences run through the portal flow.

A script declares actors (citizen, issuer, verifier, authority — each
attached to an org) and ordered steps. ``expect_error`` steps pass
exactly when the named error code occurs, so negative paths are first
class. A run produces a deterministic RunReport: with a fixed workspace
seed the report bytes are identical across runs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path

from .canonical import canonical_parse, canonical_serialize
from .chaincode import (
    AUTHORITY_ORG,
    PUBLIC_COLLECTION,
    REGISTRY_CHAINCODE,
    CredentialSchema,
    TrustPolicyEntry,
)
from .cid import ContentId, reassemble
from .credential import VerifiableCredential
from .errors import ConfigError, GlassError
from .portal import TOMBSTONE, Holding
from .workspace import Workspace

ROLES = ("citizen", "issuer", "verifier", "authority")
ACTIONS = (
    "onboard", "register_schema", "register_issuer", "register_app",
    "issue", "retrieve", "present", "expect_error",
)


@dataclass(frozen=True)
class Actor:
    name: str
    role: str
    org: str


@dataclass(frozen=True)
class ScenarioScript:
    name: str
    seed: int
    actors: tuple[Actor, ...]
    steps: tuple[dict, ...]

    @classmethod
    def from_dict(cls, record: dict) -> "ScenarioScript":
        try:
            actors = tuple(
                Actor(a["name"], a["role"], a["org"]) for a in record["actors"]
            )
            steps = tuple(dict(s) for s in record["steps"])
            script = cls(
                name=record.get("name", "scenario"),
                seed=record["seed"],
                actors=actors,
                steps=steps,
            )
        except (KeyError, TypeError) as exc:
            raise ConfigError(f"malformed scenario script: {exc}") from exc
        script.validate()
        return script

    def validate(self) -> None:
        names = [a.name for a in self.actors]
        if len(set(names)) != len(names):
            raise ConfigError("actor names must be unique")
        for actor in self.actors:
            if actor.role not in ROLES:
                raise ConfigError(f"unknown role: {actor.role}")
        known = set(names)
        for i, step in enumerate(self.steps):
            self._validate_step(i, step, known)

    def _validate_step(self, index: int, step: dict, known: set[str]) -> None:
        action = step.get("action")
        if action not in ACTIONS:
            raise ConfigError(f"step {index}: unknown action {action!r}")
        if action == "expect_error":
            if "error" not in step or "step" not in step:
                raise ConfigError(f"step {index}: expect_error needs error and step")
            self._validate_step(index, step["step"], known)
            return
        for key in ("actor", "issuer", "subject", "holder", "verifier"):
            if key in step and step[key] not in known:
                raise ConfigError(
                    f"step {index}: undeclared actor {step[key]!r} in {key}"
                )

    def actor(self, name: str) -> Actor:
        for actor in self.actors:
            if actor.name == name:
                return actor
        raise ConfigError(f"undeclared actor: {name}")


def load_script(path: str | Path) -> ScenarioScript:
    return ScenarioScript.from_dict(canonical_parse(Path(path).read_bytes()))


@dataclass
class RunReport:
    script: str
    seed: int
    steps: list[dict] = field(default_factory=list)
    verifications: list[dict] = field(default_factory=list)
    final_height: int = 0
    audit: list[dict] = field(default_factory=list)
    atomicity_ok: bool = True
    all_passed: bool = True

    def to_dict(self) -> dict:
        return {
            "script": self.script,
            "seed": self.seed,
            "steps": self.steps,
            "verifications": self.verifications,
            "final_height": self.final_height,
            "audit": self.audit,
            "atomicity_ok": self.atomicity_ok,
            "all_passed": self.all_passed,
        }

    def to_bytes(self) -> bytes:
        return canonical_serialize(self.to_dict()) + b"\n"


class ScenarioRunner:
    """Drives one script against a workspace, step by step, stopping at
    the first unexpected divergence."""

    def __init__(self, workspace: Workspace, script: ScenarioScript):
        self.workspace = workspace
        self.script = script
        self.retrieved: dict[str, list[VerifiableCredential]] = {}

    def run(self) -> RunReport:
        report = RunReport(script=self.script.name, seed=self.script.seed)
        for actor in self.script.actors:
            if actor.name not in self.workspace.wallets:
                self.workspace.create_wallet(actor.name)

        for index, step in enumerate(self.script.steps):
            entry = {"index": index, "action": step["action"],
                     "status": "ok", "error": "", "detail": {}}
            try:
                if step["action"] == "expect_error":
                    self._run_expected_error(step, entry)
                else:
                    self._dispatch(step, entry)
            except GlassError as exc:
                entry["status"] = "failed"
                entry["error"] = f"{exc.code}: {exc}"
            report.steps.append(entry)
            if entry["status"] == "failed":
                report.all_passed = False
                break

        report.final_height = self.workspace.channel.height
        report.audit = self.workspace.channel.audit_rows()
        report.atomicity_ok = self._check_atomicity()
        if not report.atomicity_ok:
            report.all_passed = False
        return report

    # --- step execution -----------------------------------------------------

    def _run_expected_error(self, step: dict, entry: dict) -> None:
        expected = step["error"]
        inner = {"index": entry["index"], "action": step["step"]["action"],
                 "status": "ok", "error": "", "detail": {}}
        try:
            self._dispatch(step["step"], inner)
        except GlassError as exc:
            if exc.code == expected:
                entry["status"] = "expected-error"
                entry["detail"] = {"expected": expected, "observed": exc.code}
                return
            entry["status"] = "failed"
            entry["error"] = (
                f"expected {expected} but got {exc.code}: {exc}"
            )
            return
        entry["status"] = "failed"
        entry["error"] = f"expected {expected} but step succeeded"

    def _dispatch(self, step: dict, entry: dict) -> None:
        handler = getattr(self, f"_step_{step['action']}")
        handler(step, entry)

    def _session(self, org: str):
        return self.workspace.session_for(org)

    def _step_onboard(self, step: dict, entry: dict) -> None:
        actor = self.script.actor(step["actor"])
        wallet = self.workspace.wallet(actor.name)
        kind = "natural_person" if actor.role == "citizen" else "legal_person"
        did = self._session(actor.org).onboard(wallet, kind)
        entry["detail"] = {"did": did, "kind": kind}

    def _step_register_schema(self, step: dict, entry: dict) -> None:
        schema = CredentialSchema.from_dict(step["schema"])
        authority = self.workspace.session_for(self._authority_org())
        authority.channel.submit(
            authority.identity, REGISTRY_CHAINCODE, "register_schema",
            [canonical_serialize(schema.to_dict())],
        )
        entry["detail"] = {"schema_id": schema.schema_id}

    def _step_register_issuer(self, step: dict, entry: dict) -> None:
        actor = self.script.actor(step["actor"])
        wallet = self.workspace.wallet(actor.name)
        policy = TrustPolicyEntry(
            issuer=wallet.did,
            country_domain=step["domain"],
            permitted_types=frozenset(step["types"]),
        )
        authority = self.workspace.session_for(self._authority_org())
        authority.channel.submit(
            authority.identity, REGISTRY_CHAINCODE, "register_trusted_issuer",
            [canonical_serialize(policy.to_dict())],
        )
        entry["detail"] = {"issuer": wallet.did,
                           "types": sorted(policy.permitted_types)}

    def _step_register_app(self, step: dict, entry: dict) -> None:
        actor = self.script.actor(step["actor"])
        wallet = self.workspace.wallet(actor.name)
        authority = self.workspace.session_for(self._authority_org())
        authority.channel.submit(
            authority.identity, REGISTRY_CHAINCODE, "register_trusted_app",
            [wallet.did.encode()],
        )
        entry["detail"] = {"did": wallet.did}

    def _step_issue(self, step: dict, entry: dict) -> None:
        issuer = self.script.actor(step["issuer"])
        subject = self.script.actor(step["subject"])
        issuer_wallet = self.workspace.wallet(issuer.name)
        subject_wallet = self.workspace.wallet(subject.name)
        session = self._session(issuer.org)
        record = session.issue_and_distribute(
            issuer_wallet, subject_wallet.did, step["schema_id"], step["claims"]
        )
        subject_wallet.holdings.append(Holding(
            credential_id=record.credential_id, cid=record.cid, uri=record.uri
        ))
        entry["detail"] = {
            "credential_id": record.credential_id,
            "cid": record.cid,
            "uri": record.uri,
            "block_height": record.receipt.block_height,
            "plaintext_purged": session.staging.get(record.credential_id) == TOMBSTONE,
        }

    def _step_retrieve(self, step: dict, entry: dict) -> None:
        subject = self.script.actor(step["subject"])
        via = self.script.actor(step.get("actor", subject.name))
        wallet = self.workspace.wallet(subject.name)
        cid_text = step.get("cid")
        if cid_text is None:
            if not wallet.holdings:
                raise ConfigError(f"{subject.name} holds no credentials")
            cid_text = wallet.holdings[-1].cid
        credential = self._session(via.org).retrieve_credential(wallet, cid_text)
        self.retrieved.setdefault(subject.name, []).append(credential)
        entry["detail"] = {
            "credential_id": credential.credential_id,
            "cid": cid_text,
        }

    def _step_present(self, step: dict, entry: dict) -> None:
        holder = self.script.actor(step["holder"])
        verifier = self.script.actor(step["verifier"])
        credentials = self.retrieved.get(holder.name, [])
        if "credentials" in step:
            credentials = [credentials[i] for i in step["credentials"]]
        if not credentials:
            raise ConfigError(f"{holder.name} has no retrieved credentials")
        session = self._session(verifier.org)
        report = session.present_and_verify(
            self.workspace.wallet(holder.name), credentials,
            self.workspace.wallet(verifier.name),
        )
        entry["detail"] = {"overall": report.overall, "reason": report.reason}
        entry["verification"] = report.to_dict()

    def _authority_org(self) -> str:
        for actor in self.script.actors:
            if actor.role == "authority":
                return actor.org
        return AUTHORITY_ORG

    # --- post-scenario checks ---------------------------------------------------

    def _check_atomicity(self) -> bool:
        """Every triplet on the ledger must be fully retrievable from the
        union of swarm block stores."""
        union: dict = {}
        for state in self.workspace.network.nodes.values():
            union.update(state.blocks)
        digests = self.workspace.channel.collection_digests.get(
            PUBLIC_COLLECTION, {}
        )
        for cid_text in digests:
            try:
                reassemble(ContentId.parse(cid_text), union.get)
            except GlassError:
                return False
        return True


def run_scenario(workspace: Workspace, script: ScenarioScript) -> RunReport:
    runner = ScenarioRunner(workspace, script)
    report = runner.run()
    verifications = [
        step["verification"] for step in report.steps if "verification" in step
    ]
    report.verifications = verifications
    for step in report.steps:
        step.pop("verification", None)
    return report
