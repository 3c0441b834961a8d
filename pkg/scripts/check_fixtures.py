#!/usr/bin/env python3
"""Verify the checked-in fixtures against their frozen expectations.

Independent of the test suite so fixture drift can be caught from a
shell. Checks document arithmetic (counts and confidence sums on an
integer grid), schema conformance, the federated store contents, the
golden export, and the digest sidecar. Prints one line per check group;
exits 1 on the first failure.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from pathlib import Path

import jsonschema

from skg import (
    builtin_registry,
    compile_seo,
    emit_cypher,
    graph_hash,
    load_store,
    parse_seo,
    validate_graph,
    validate_seo,
)

FIXTURES = Path(__file__).resolve().parents[1] / "fixtures"


def fail(message: str) -> None:
    sys.stderr.write(f"FAIL: {message}\n")
    raise SystemExit(1)


def check(condition: bool, message: str) -> None:
    if not condition:
        fail(message)


def centi_sum(values) -> int:
    return sum(round(v * 100) for v in values)


def load(fixtures: Path, name: str):
    doc = parse_seo((fixtures / name).read_bytes())
    report = validate_seo(doc)
    check(report.ok, f"{name} failed validation:\n{report.to_text()}")
    return doc


def check_schema(fixtures: Path) -> None:
    schema = json.loads((fixtures / "seo.schema.json").read_text(encoding="utf-8"))
    validator = jsonschema.Draft202012Validator(schema)
    for name in ("elisa", "lcms_prm", "automation", "program"):
        raw = json.loads((fixtures / f"{name}.seo.json").read_text(encoding="utf-8"))
        errors = list(validator.iter_errors(raw))
        check(not errors, f"{name}: schema errors: {[e.message for e in errors[:3]]}")
    print("schema: 4 documents conform")


def check_documents(fixtures: Path) -> None:
    elisa = load(fixtures, "elisa.seo.json")
    fms = [fm for step in elisa.protocol.steps for fm in step.failure_modes]
    check(len(elisa.protocol.steps) == 9, "elisa: expected 9 steps")
    check(len(fms) == 18, f"elisa: expected 18 failure modes, got {len(fms)}")
    check(
        centi_sum(fm.confidence for fm in fms) == 1476,
        "elisa: confidence sum must be exactly 14.76",
    )
    check(
        sum(len(s.required_use_cases) for s in elisa.protocol.steps) == 15,
        "elisa: expected 15 use-case requirements",
    )
    check(len(elisa.decision_model.decision_points) == 6, "elisa: expected 6 decision points")

    lcms = load(fixtures, "lcms_prm.seo.json")
    fms = [fm for step in lcms.protocol.steps for fm in step.failure_modes]
    check(len(lcms.protocol.steps) == 10, "lcms: expected 10 steps")
    check(len(fms) == 23, f"lcms: expected 23 failure modes, got {len(fms)}")
    check(
        centi_sum(fm.confidence for fm in fms) == 1633,
        "lcms: confidence sum must be exactly 16.33",
    )
    check(
        sum(len(s.required_use_cases) for s in lcms.protocol.steps) == 16,
        "lcms: expected 16 use-case requirements",
    )
    check(
        sum(1 for fm in fms if round(fm.confidence * 100) == 60) == 3,
        "lcms: expected exactly 3 range-floor claims",
    )

    automation = load(fixtures, "automation.seo.json")
    check(len(automation.automation_context) == 22, "automation: expected 22 assets")
    use_cases = {uc for c in automation.automation_context for uc in c.use_case_names}
    check(len(use_cases) == 15, f"automation: expected 15 distinct use cases, got {len(use_cases)}")

    program = load(fixtures, "program.seo.json")
    milestones = program.strategic.program_milestones
    check(len(milestones) == 1 and len(milestones[0].evidentiary_inputs) == 2,
          "program: expected 1 milestone with 2 evidentiary inputs")
    print("documents: counts and confidence sums hold")


def check_store(fixtures: Path) -> None:
    store = fixtures / "stores" / "federated.skg.jsonl"
    graph = load_store(store, builtin_registry())
    check(validate_graph(graph, builtin_registry()).ok, "store: registry validation failed")
    check(not graph.pending_edges(), "store: must be fully converged")
    check(len(graph.nodes("AutomationAsset")) == 22, "store: expected 22 assets")
    check(len(graph.nodes("UseCase")) == 15, "store: expected 15 use cases")
    ra = graph.edges("REQUIRES_AUTOMATION", include_pending=False)
    check(len(ra) == 31, f"store: expected 31 automation requirements, got {len(ra)}")
    check(
        len(graph.nodes("FailureMode", "ELISA")) == 18
        and len(graph.nodes("FailureMode", "LCMS_PRM")) == 23,
        "store: failure-mode counts drifted",
    )
    digest = hashlib.sha256(store.read_bytes()).hexdigest()
    sidecar = (fixtures / "stores" / "federated.skg.sha256").read_text(encoding="utf-8")
    check(sidecar.split()[0] == digest, "store: digest sidecar does not match file bytes")
    check(graph_hash(graph) == digest, "store: content hash does not match file digest")
    print(f"store: converged, counts hold, digest {digest[:12]}...")


def check_golden(fixtures: Path) -> None:
    doc = parse_seo((fixtures / "elisa.seo.json").read_bytes())
    rendered = emit_cypher(compile_seo(doc, "ELISA"))
    golden = (fixtures / "golden" / "elisa_plan.cypher").read_text(encoding="utf-8")
    check(rendered == golden, "golden: elisa_plan.cypher no longer matches compilation output")
    print("golden: export matches byte for byte")


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--fixtures", type=Path, default=FIXTURES)
    args = parser.parse_args(argv)
    check_schema(args.fixtures)
    check_documents(args.fixtures)
    check_store(args.fixtures)
    check_golden(args.fixtures)
    print("all fixture checks passed")
    return 0


if __name__ == "__main__":
    sys.exit(main())
