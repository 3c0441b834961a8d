"""Structured extraction documents: parsing, validation, confidence scoring.

A structured extraction object (SEO) is the typed output of one
elicitation session. Parsing is strict (unknown fields are rejected,
value kinds are enforced) but deliberately does not judge content;
``validate_seo`` does that and reports issues instead of raising, so a
whole document's problems surface at once.

The session mode gates which layers may carry content. OPERATIONAL
sessions capture protocol knowledge only: their decision-model layer is
pinned to the ``operational_only`` scope stub with every knowledge
field null, and any non-null decision content is an epistemic
contamination guard violation, never silently dropped.

Scalar confidence comes from linguistic approximation of the
scientist's own phrasing against a fixed hedge lexicon (a config file,
so deployments can retune it without code changes). Three-point SHELF
frequency estimates ride alongside and never replace the scalar.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache
from importlib import resources
from pathlib import Path
import datetime
import re

from .canonical import normalize_number, render_record
from .errors import (
    NoHedgeDetected,
    RangeError,
    SeoParseError,
    UnknownField,
    ValueKindMismatch,
)
from .metrics import normalize_label
from .ontology import COMPARATORS, CONFIDENCE_CEILING, CONFIDENCE_FLOOR, CONFIDENCE_METHODS
from .validation import Issue, IssueCollector, ValidationReport

OPERATIONAL_SCOPE = "operational_only"
FULL_SCOPE = "full"

TOP_LEVEL_KEYS = (
    "session_mode",
    "protocol",
    "decision_model",
    "strategic",
    "method_alternatives",
    "automation_context",
    "twin_metadata",
)


class SessionMode(str, Enum):
    OPERATIONAL = "OPERATIONAL"
    DESIGN_EXPERT = "DESIGN_EXPERT"
    DIRECTOR = "DIRECTOR"


# -- document model ----------------------------------------------------


@dataclass(frozen=True)
class FailureModeClaim:
    name: str
    id: str | None = None
    description: str | None = None
    confidence: float | None = None
    confidence_method: str | None = None
    source_scientist: str | None = None
    source_phrase: str | None = None
    silent_failure_risk: bool | None = None
    is_critical_path: bool | None = None
    frequency_min: float | None = None
    frequency_best: float | None = None
    frequency_max: float | None = None
    cascades_to: tuple[str, ...] = ()
    masked_by_assets: tuple[str, ...] = ()
    detected_by: tuple[str, ...] = ()
    flagged_for_review: bool | None = None
    pre_extracted: bool = False


@dataclass(frozen=True)
class StepRecord:
    name: str
    step_index: int | float
    id: str | None = None
    description: str | None = None
    is_critical_path: bool | None = None
    pre_extracted: bool = False
    required_use_cases: tuple[str, ...] = ()
    failure_modes: tuple[FailureModeClaim, ...] = ()


@dataclass(frozen=True)
class ProtocolLayer:
    workflow_id: str
    workflow_name: str
    subgraph: str
    pre_extracted: bool = False
    steps: tuple[StepRecord, ...] = ()


@dataclass(frozen=True)
class DecisionPointClaim:
    step_id: str
    condition_type: str | None = None
    threshold_value: float | None = None
    comparator: str | None = None
    units: str | None = None
    pass_action: str | None = None
    fail_action: str | None = None
    escalation_action: str | None = None
    confidence: float | None = None
    confidence_method: str | None = None
    source_scientist: str | None = None
    source_phrase: str | None = None
    id: str | None = None
    name: str | None = None


@dataclass(frozen=True)
class DecisionModelLayer:
    elicitation_scope: str  # serialized as "_elicitation_scope"
    decision_points: tuple[DecisionPointClaim, ...] | None = None
    design_rationale: str | None = None


OPERATIONAL_STUB = DecisionModelLayer(
    elicitation_scope=OPERATIONAL_SCOPE, decision_points=None, design_rationale=None
)


@dataclass(frozen=True)
class EvidentiaryInputClaim:
    name: str
    id: str | None = None
    required_output: str | None = None
    quality_threshold: str | None = None
    decision_consequence: str | None = None
    sourced_from_subgraph: str | None = None
    sourced_from_workflow_id: str | None = None


@dataclass(frozen=True)
class ProgramMilestoneClaim:
    name: str
    id: str | None = None
    evidentiary_inputs: tuple[EvidentiaryInputClaim, ...] = ()


@dataclass(frozen=True)
class StrategicLayer:
    cross_domain_knowledge: tuple[str, ...] = ()
    capability_gaps: tuple[str, ...] = ()
    future_design_questions: tuple[str, ...] = ()
    program_milestones: tuple[ProgramMilestoneClaim, ...] | None = None


@dataclass(frozen=True)
class MethodAlternativeClaim:
    step_id: str
    name: str
    description: str | None = None
    tradeoff: str | None = None


@dataclass(frozen=True)
class AutomationContextClaim:
    asset_name: str
    use_case_names: tuple[str, ...] = ()
    log_scope: str | None = None


@dataclass(frozen=True)
class TwinMetadata:
    source_scientist: str | None = None
    session_mode: str | None = None
    calibration_status: str | None = None
    session_date: str | None = None
    elicitation_agent: str | None = None


@dataclass(frozen=True)
class SeoDocument:
    session_mode: SessionMode
    protocol: ProtocolLayer | None
    decision_model: DecisionModelLayer | None
    strategic: StrategicLayer | None
    method_alternatives: tuple[MethodAlternativeClaim, ...] | None
    automation_context: tuple[AutomationContextClaim, ...] | None
    twin_metadata: TwinMetadata | None


# -- strict parsing ----------------------------------------------------


def _reject_constant(literal: str):
    # NaN/Infinity have no canonical rendering; refuse them at the door
    raise SeoParseError(f"non-finite number literal: {literal}")


def _check_keys(obj: dict, path: str, allowed: tuple[str, ...]) -> None:
    for key in obj:
        if key not in allowed:
            raise UnknownField(f"{path}.{key}" if path else key)


def _get(obj: dict, key: str, path: str, kind: str, required: bool, nullable: bool):
    if key not in obj:
        if required:
            raise ValueKindMismatch(f"{path}.{key}", kind, "absent")
        return None
    value = obj[key]
    if value is None:
        if required and not nullable:
            raise ValueKindMismatch(f"{path}.{key}", kind, "null")
        return None
    return value


def _text(obj, key, path, required=False, nullable=True) -> str | None:
    value = _get(obj, key, path, "text", required, nullable)
    if value is None:
        return None
    if not isinstance(value, str):
        raise ValueKindMismatch(f"{path}.{key}", "text", type(value).__name__)
    return value


def _number(obj, key, path, required=False, nullable=True) -> float | None:
    value = _get(obj, key, path, "number", required, nullable)
    if value is None:
        return None
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ValueKindMismatch(f"{path}.{key}", "number", type(value).__name__)
    return normalize_number(value)


def _boolean(obj, key, path, required=False, nullable=True) -> bool | None:
    value = _get(obj, key, path, "boolean", required, nullable)
    if value is None:
        return None
    if not isinstance(value, bool):
        raise ValueKindMismatch(f"{path}.{key}", "boolean", type(value).__name__)
    return value


def _text_list(obj, key, path, required=False) -> tuple[str, ...] | None:
    value = _get(obj, key, path, "text list", required, nullable=True)
    if value is None:
        return None
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ValueKindMismatch(f"{path}.{key}", "text list", type(value).__name__)
    return tuple(value)


def _enum(obj, key, path, values, required=False, nullable=True) -> str | None:
    value = _text(obj, key, path, required, nullable)
    if value is None:
        return None
    if value not in values:
        raise ValueKindMismatch(f"{path}.{key}", f"one of {sorted(values)}", repr(value))
    return value


def _object(obj, key, path, required=True) -> dict | None:
    value = _get(obj, key, path, "object", required, nullable=True)
    if value is None:
        return None
    if not isinstance(value, dict):
        raise ValueKindMismatch(f"{path}.{key}" if path else key, "object", type(value).__name__)
    return value


def _array(obj, key, path, required=True) -> list | None:
    value = _get(obj, key, path, "array", required, nullable=True)
    if value is None:
        return None
    if not isinstance(value, list):
        raise ValueKindMismatch(f"{path}.{key}" if path else key, "array", type(value).__name__)
    return value


_FM_KEYS = (
    "id",
    "name",
    "description",
    "confidence",
    "confidence_method",
    "source_scientist",
    "source_phrase",
    "silent_failure_risk",
    "is_critical_path",
    "frequency_min",
    "frequency_best",
    "frequency_max",
    "cascades_to",
    "masked_by_assets",
    "detected_by",
    "flagged_for_review",
    "pre_extracted",
)


def _parse_failure_mode(obj: dict, path: str) -> FailureModeClaim:
    _check_keys(obj, path, _FM_KEYS)
    return FailureModeClaim(
        id=_text(obj, "id", path),
        name=_text(obj, "name", path, required=True, nullable=False),
        description=_text(obj, "description", path),
        confidence=_number(obj, "confidence", path),
        confidence_method=_enum(obj, "confidence_method", path, CONFIDENCE_METHODS),
        source_scientist=_text(obj, "source_scientist", path),
        source_phrase=_text(obj, "source_phrase", path),
        silent_failure_risk=_boolean(obj, "silent_failure_risk", path),
        is_critical_path=_boolean(obj, "is_critical_path", path),
        frequency_min=_number(obj, "frequency_min", path),
        frequency_best=_number(obj, "frequency_best", path),
        frequency_max=_number(obj, "frequency_max", path),
        cascades_to=_text_list(obj, "cascades_to", path) or (),
        masked_by_assets=_text_list(obj, "masked_by_assets", path) or (),
        detected_by=_text_list(obj, "detected_by", path) or (),
        flagged_for_review=_boolean(obj, "flagged_for_review", path),
        pre_extracted=_boolean(obj, "pre_extracted", path) or False,
    )


_STEP_KEYS = (
    "id",
    "name",
    "step_index",
    "description",
    "is_critical_path",
    "pre_extracted",
    "required_use_cases",
    "failure_modes",
)


def _parse_step(obj: dict, path: str) -> StepRecord:
    _check_keys(obj, path, _STEP_KEYS)
    fms = _array(obj, "failure_modes", path, required=False) or []
    return StepRecord(
        id=_text(obj, "id", path),
        name=_text(obj, "name", path, required=True, nullable=False),
        step_index=_number(obj, "step_index", path, required=True, nullable=False),
        description=_text(obj, "description", path),
        is_critical_path=_boolean(obj, "is_critical_path", path),
        pre_extracted=_boolean(obj, "pre_extracted", path) or False,
        required_use_cases=_text_list(obj, "required_use_cases", path) or (),
        failure_modes=tuple(
            _parse_failure_mode(_require_obj(fm, f"{path}.failure_modes[{i}]"), f"{path}.failure_modes[{i}]")
            for i, fm in enumerate(fms)
        ),
    )


def _require_obj(value, path: str) -> dict:
    if not isinstance(value, dict):
        raise ValueKindMismatch(path, "object", type(value).__name__)
    return value


def _parse_protocol(obj: dict, path: str) -> ProtocolLayer:
    _check_keys(obj, path, ("workflow_id", "workflow_name", "subgraph", "pre_extracted", "steps"))
    steps = _array(obj, "steps", path, required=True) or []
    return ProtocolLayer(
        workflow_id=_text(obj, "workflow_id", path, required=True, nullable=False),
        workflow_name=_text(obj, "workflow_name", path, required=True, nullable=False),
        subgraph=_text(obj, "subgraph", path, required=True, nullable=False),
        pre_extracted=_boolean(obj, "pre_extracted", path) or False,
        steps=tuple(
            _parse_step(_require_obj(s, f"{path}.steps[{i}]"), f"{path}.steps[{i}]")
            for i, s in enumerate(steps)
        ),
    )


_DP_KEYS = (
    "id",
    "step_id",
    "name",
    "condition_type",
    "threshold_value",
    "comparator",
    "units",
    "pass_action",
    "fail_action",
    "escalation_action",
    "confidence",
    "confidence_method",
    "source_scientist",
    "source_phrase",
)


def _parse_decision_point(obj: dict, path: str) -> DecisionPointClaim:
    _check_keys(obj, path, _DP_KEYS)
    return DecisionPointClaim(
        id=_text(obj, "id", path),
        step_id=_text(obj, "step_id", path, required=True, nullable=False),
        name=_text(obj, "name", path),
        condition_type=_text(obj, "condition_type", path),
        threshold_value=_number(obj, "threshold_value", path),
        comparator=_enum(obj, "comparator", path, COMPARATORS),
        units=_text(obj, "units", path),
        pass_action=_text(obj, "pass_action", path),
        fail_action=_text(obj, "fail_action", path),
        escalation_action=_text(obj, "escalation_action", path),
        confidence=_number(obj, "confidence", path),
        confidence_method=_enum(obj, "confidence_method", path, CONFIDENCE_METHODS),
        source_scientist=_text(obj, "source_scientist", path),
        source_phrase=_text(obj, "source_phrase", path),
    )


def _parse_decision_model(obj: dict, path: str) -> DecisionModelLayer:
    _check_keys(obj, path, ("_elicitation_scope", "decision_points", "design_rationale"))
    scope = _enum(
        obj,
        "_elicitation_scope",
        path,
        (FULL_SCOPE, OPERATIONAL_SCOPE),
        required=True,
        nullable=False,
    )
    points = _array(obj, "decision_points", path, required=False)
    return DecisionModelLayer(
        elicitation_scope=scope,
        decision_points=None
        if points is None
        else tuple(
            _parse_decision_point(
                _require_obj(p, f"{path}.decision_points[{i}]"), f"{path}.decision_points[{i}]"
            )
            for i, p in enumerate(points)
        ),
        design_rationale=_text(obj, "design_rationale", path),
    )


def _parse_evidentiary_input(obj: dict, path: str) -> EvidentiaryInputClaim:
    _check_keys(
        obj,
        path,
        (
            "id",
            "name",
            "required_output",
            "quality_threshold",
            "decision_consequence",
            "sourced_from",
        ),
    )
    sourced = _object(obj, "sourced_from", path, required=False)
    sg = wf = None
    if sourced is not None:
        _check_keys(sourced, f"{path}.sourced_from", ("subgraph", "workflow_id"))
        sg = _text(sourced, "subgraph", f"{path}.sourced_from", required=True, nullable=False)
        wf = _text(sourced, "workflow_id", f"{path}.sourced_from", required=True, nullable=False)
    return EvidentiaryInputClaim(
        id=_text(obj, "id", path),
        name=_text(obj, "name", path, required=True, nullable=False),
        required_output=_text(obj, "required_output", path),
        quality_threshold=_text(obj, "quality_threshold", path),
        decision_consequence=_text(obj, "decision_consequence", path),
        sourced_from_subgraph=sg,
        sourced_from_workflow_id=wf,
    )


def _parse_strategic(obj: dict, path: str) -> StrategicLayer:
    _check_keys(
        obj,
        path,
        (
            "cross_domain_knowledge",
            "capability_gaps",
            "future_design_questions",
            "program_milestones",
        ),
    )
    milestones = _array(obj, "program_milestones", path, required=False)
    parsed = None
    if milestones is not None:
        items = []
        for i, m in enumerate(milestones):
            mpath = f"{path}.program_milestones[{i}]"
            mobj = _require_obj(m, mpath)
            _check_keys(mobj, mpath, ("id", "name", "evidentiary_inputs"))
            inputs = _array(mobj, "evidentiary_inputs", mpath, required=False) or []
            items.append(
                ProgramMilestoneClaim(
                    id=_text(mobj, "id", mpath),
                    name=_text(mobj, "name", mpath, required=True, nullable=False),
                    evidentiary_inputs=tuple(
                        _parse_evidentiary_input(
                            _require_obj(e, f"{mpath}.evidentiary_inputs[{j}]"),
                            f"{mpath}.evidentiary_inputs[{j}]",
                        )
                        for j, e in enumerate(inputs)
                    ),
                )
            )
        parsed = tuple(items)
    return StrategicLayer(
        cross_domain_knowledge=_text_list(obj, "cross_domain_knowledge", path) or (),
        capability_gaps=_text_list(obj, "capability_gaps", path) or (),
        future_design_questions=_text_list(obj, "future_design_questions", path) or (),
        program_milestones=parsed,
    )


def _parse_method_alternative(obj: dict, path: str) -> MethodAlternativeClaim:
    _check_keys(obj, path, ("step_id", "name", "description", "tradeoff"))
    return MethodAlternativeClaim(
        step_id=_text(obj, "step_id", path, required=True, nullable=False),
        name=_text(obj, "name", path, required=True, nullable=False),
        description=_text(obj, "description", path),
        tradeoff=_text(obj, "tradeoff", path),
    )


def _parse_automation_context(obj: dict, path: str) -> AutomationContextClaim:
    _check_keys(obj, path, ("asset_name", "use_case_names", "log_scope"))
    return AutomationContextClaim(
        asset_name=_text(obj, "asset_name", path, required=True, nullable=False),
        use_case_names=_text_list(obj, "use_case_names", path) or (),
        log_scope=_text(obj, "log_scope", path),
    )


def _parse_metadata(obj: dict, path: str) -> TwinMetadata:
    _check_keys(
        obj,
        path,
        (
            "source_scientist",
            "session_mode",
            "calibration_status",
            "session_date",
            "elicitation_agent",
        ),
    )
    mode = _enum(obj, "session_mode", path, tuple(m.value for m in SessionMode))
    date = _text(obj, "session_date", path)
    if date is not None:
        try:
            datetime.date.fromisoformat(date)
        except ValueError:
            raise ValueKindMismatch(f"{path}.session_date", "ISO-8601 date", repr(date))
    return TwinMetadata(
        source_scientist=_text(obj, "source_scientist", path),
        session_mode=mode,
        calibration_status=_text(obj, "calibration_status", path),
        session_date=date,
        elicitation_agent=_text(obj, "elicitation_agent", path),
    )


def parse_seo(data: bytes | str) -> SeoDocument:
    """Parse a structured extraction document, strictly.

    Raises:
        SeoParseError: not UTF-8, not JSON, or empty input (with line
            and column when the decoder reports them).
        UnknownField: any field name outside the schema.
        ValueKindMismatch: wrong value kind, bad enum value, or a
            required structural field that is absent.
    """
    if isinstance(data, bytes):
        try:
            text = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SeoParseError(f"not UTF-8: {exc}") from exc
    else:
        text = data
    if not text.strip():
        raise SeoParseError("empty document")
    try:
        raw = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise SeoParseError(exc.msg, exc.lineno, exc.colno) from exc
    if not isinstance(raw, dict):
        raise ValueKindMismatch("$", "object", type(raw).__name__)

    _check_keys(raw, "", TOP_LEVEL_KEYS)
    for key in TOP_LEVEL_KEYS:
        if key not in raw:
            raise ValueKindMismatch(key, "object or null", "absent")

    mode = SessionMode(
        _enum(raw, "session_mode", "", tuple(m.value for m in SessionMode), required=True, nullable=False)
    )
    protocol_obj = _object(raw, "protocol", "")
    decision_obj = _object(raw, "decision_model", "")
    strategic_obj = _object(raw, "strategic", "")
    ma_list = _array(raw, "method_alternatives", "")
    ac_list = _array(raw, "automation_context", "")
    meta_obj = _object(raw, "twin_metadata", "")

    decision_model = (
        _parse_decision_model(decision_obj, "decision_model") if decision_obj else None
    )
    if mode is SessionMode.OPERATIONAL and decision_model is None:
        # bookkeeping stub, not elicited knowledge: the scope marker must
        # exist on every OPERATIONAL document so downstream consumers can
        # tell "not asked" from "absent by accident"
        decision_model = OPERATIONAL_STUB

    return SeoDocument(
        session_mode=mode,
        protocol=_parse_protocol(protocol_obj, "protocol") if protocol_obj else None,
        decision_model=decision_model,
        strategic=_parse_strategic(strategic_obj, "strategic") if strategic_obj else None,
        method_alternatives=None
        if ma_list is None
        else tuple(
            _parse_method_alternative(
                _require_obj(m, f"method_alternatives[{i}]"), f"method_alternatives[{i}]"
            )
            for i, m in enumerate(ma_list)
        ),
        automation_context=None
        if ac_list is None
        else tuple(
            _parse_automation_context(
                _require_obj(a, f"automation_context[{i}]"), f"automation_context[{i}]"
            )
            for i, a in enumerate(ac_list)
        ),
        twin_metadata=_parse_metadata(meta_obj, "twin_metadata") if meta_obj else None,
    )


# -- serialization -----------------------------------------------------


def _fm_jsonable(claim: FailureModeClaim) -> dict:
    return {
        "id": claim.id,
        "name": claim.name,
        "description": claim.description,
        "confidence": claim.confidence,
        "confidence_method": claim.confidence_method,
        "source_scientist": claim.source_scientist,
        "source_phrase": claim.source_phrase,
        "silent_failure_risk": claim.silent_failure_risk,
        "is_critical_path": claim.is_critical_path,
        "frequency_min": claim.frequency_min,
        "frequency_best": claim.frequency_best,
        "frequency_max": claim.frequency_max,
        "cascades_to": list(claim.cascades_to),
        "masked_by_assets": list(claim.masked_by_assets),
        "detected_by": list(claim.detected_by),
        "flagged_for_review": claim.flagged_for_review,
        "pre_extracted": claim.pre_extracted,
    }


def to_jsonable(doc: SeoDocument) -> dict:
    """Plain-data form of a document with every field explicit (null included)."""
    protocol = None
    if doc.protocol is not None:
        protocol = {
            "workflow_id": doc.protocol.workflow_id,
            "workflow_name": doc.protocol.workflow_name,
            "subgraph": doc.protocol.subgraph,
            "pre_extracted": doc.protocol.pre_extracted,
            "steps": [
                {
                    "id": step.id,
                    "name": step.name,
                    "step_index": step.step_index,
                    "description": step.description,
                    "is_critical_path": step.is_critical_path,
                    "pre_extracted": step.pre_extracted,
                    "required_use_cases": list(step.required_use_cases),
                    "failure_modes": [_fm_jsonable(fm) for fm in step.failure_modes],
                }
                for step in doc.protocol.steps
            ],
        }
    decision_model = None
    if doc.decision_model is not None:
        dm = doc.decision_model
        decision_model = {
            "_elicitation_scope": dm.elicitation_scope,
            "decision_points": None
            if dm.decision_points is None
            else [
                {
                    "id": dp.id,
                    "step_id": dp.step_id,
                    "name": dp.name,
                    "condition_type": dp.condition_type,
                    "threshold_value": dp.threshold_value,
                    "comparator": dp.comparator,
                    "units": dp.units,
                    "pass_action": dp.pass_action,
                    "fail_action": dp.fail_action,
                    "escalation_action": dp.escalation_action,
                    "confidence": dp.confidence,
                    "confidence_method": dp.confidence_method,
                    "source_scientist": dp.source_scientist,
                    "source_phrase": dp.source_phrase,
                }
                for dp in dm.decision_points
            ],
            "design_rationale": dm.design_rationale,
        }
    strategic = None
    if doc.strategic is not None:
        strategic = {
            "cross_domain_knowledge": list(doc.strategic.cross_domain_knowledge),
            "capability_gaps": list(doc.strategic.capability_gaps),
            "future_design_questions": list(doc.strategic.future_design_questions),
            "program_milestones": None
            if doc.strategic.program_milestones is None
            else [
                {
                    "id": pm.id,
                    "name": pm.name,
                    "evidentiary_inputs": [
                        {
                            "id": ei.id,
                            "name": ei.name,
                            "required_output": ei.required_output,
                            "quality_threshold": ei.quality_threshold,
                            "decision_consequence": ei.decision_consequence,
                            "sourced_from": None
                            if ei.sourced_from_subgraph is None
                            else {
                                "subgraph": ei.sourced_from_subgraph,
                                "workflow_id": ei.sourced_from_workflow_id,
                            },
                        }
                        for ei in pm.evidentiary_inputs
                    ],
                }
                for pm in doc.strategic.program_milestones
            ],
        }
    return {
        "session_mode": doc.session_mode.value,
        "protocol": protocol,
        "decision_model": decision_model,
        "strategic": strategic,
        "method_alternatives": None
        if doc.method_alternatives is None
        else [
            {
                "step_id": ma.step_id,
                "name": ma.name,
                "description": ma.description,
                "tradeoff": ma.tradeoff,
            }
            for ma in doc.method_alternatives
        ],
        "automation_context": None
        if doc.automation_context is None
        else [
            {
                "asset_name": ac.asset_name,
                "use_case_names": list(ac.use_case_names),
                "log_scope": ac.log_scope,
            }
            for ac in doc.automation_context
        ],
        "twin_metadata": None
        if doc.twin_metadata is None
        else {
            "source_scientist": doc.twin_metadata.source_scientist,
            "session_mode": doc.twin_metadata.session_mode,
            "calibration_status": doc.twin_metadata.calibration_status,
            "session_date": doc.twin_metadata.session_date,
            "elicitation_agent": doc.twin_metadata.elicitation_agent,
        },
    }


def serialize_seo(doc: SeoDocument) -> bytes:
    """Canonical bytes for a document; parse(serialize(doc)) == doc."""
    return (render_record(to_jsonable(doc)) + "\n").encode("utf-8")


# -- validation --------------------------------------------------------


def validate_shelf(
    frequency_min: float, frequency_best: float, frequency_max: float
) -> Issue | None:
    """Check a three-point estimate; returns a ShelfOrderViolation issue or None.

    Raises:
        RangeError: any value outside [0, 1].
    """
    for name, value in (
        ("frequency_min", frequency_min),
        ("frequency_best", frequency_best),
        ("frequency_max", frequency_max),
    ):
        if not 0.0 <= value <= 1.0:
            raise RangeError(f"{name} {value} outside [0, 1]")
    if not frequency_min <= frequency_best <= frequency_max:
        return Issue(
            "ShelfOrderViolation",
            "shelf",
            f"{frequency_min} <= {frequency_best} <= {frequency_max} fails",
        )
    return None


def _validate_claim_confidence(
    out: IssueCollector,
    path: str,
    confidence: float | None,
    confidence_method: str | None,
    source_scientist: str | None,
) -> None:
    for name, value in (
        ("confidence", confidence),
        ("confidence_method", confidence_method),
        ("source_scientist", source_scientist),
    ):
        if value is None:
            out.add("MissingMandatoryField", path, f"{name} is mandatory on every claim")
    if confidence is not None and not CONFIDENCE_FLOOR <= confidence <= CONFIDENCE_CEILING:
        out.add(
            "ConfidenceOutOfRange",
            path,
            f"confidence {confidence} outside [{CONFIDENCE_FLOOR}, {CONFIDENCE_CEILING}]",
        )


def _validate_shelf_fields(out: IssueCollector, path: str, claim: FailureModeClaim) -> None:
    triple = (claim.frequency_min, claim.frequency_best, claim.frequency_max)
    present = [v for v in triple if v is not None]
    if claim.confidence_method == "SHELF_elicited":
        for name, value in zip(("frequency_min", "frequency_best", "frequency_max"), triple):
            if value is None:
                out.add(
                    "MissingMandatoryField",
                    path,
                    f"{name} is mandatory when confidence_method is SHELF_elicited",
                )
    if not present:
        return
    if not (claim.silent_failure_risk or claim.is_critical_path):
        out.add(
            "ShelfEligibilityViolation",
            path,
            "frequency estimates need silent_failure_risk or is_critical_path",
        )
    for name, value in zip(("frequency_min", "frequency_best", "frequency_max"), triple):
        if value is not None and not 0.0 <= value <= 1.0:
            out.add("FrequencyOutOfRange", path, f"{name} {value} outside [0, 1]")
    if all(v is not None and 0.0 <= v <= 1.0 for v in triple):
        issue = validate_shelf(*triple)
        if issue is not None:
            out.add("ShelfOrderViolation", path, issue.detail)


def _stub_violations(dm: DecisionModelLayer) -> list[str]:
    problems = []
    if dm.elicitation_scope != OPERATIONAL_SCOPE:
        problems.append(f"_elicitation_scope is {dm.elicitation_scope!r}")
    if dm.decision_points is not None:
        problems.append(f"decision_points holds {len(dm.decision_points)} record(s)")
    if dm.design_rationale is not None:
        problems.append("design_rationale is non-null")
    return problems


def validate_seo(doc: SeoDocument) -> ValidationReport:
    """Content validation: mode gates, contamination guard, mandatory fields.

    Issue codes: ContaminationGuardViolation, ModeGateViolation,
    MissingMandatoryField, ConfidenceOutOfRange, ShelfOrderViolation,
    ShelfEligibilityViolation, FrequencyOutOfRange, MetadataMissing,
    MetadataInconsistent, StepIndexViolation, DuplicateId.
    """
    out = IssueCollector()
    mode = doc.session_mode

    if doc.twin_metadata is None:
        out.add("MetadataMissing", "twin_metadata", "twin_metadata layer is required")
    else:
        meta = doc.twin_metadata
        if not meta.source_scientist:
            out.add("MetadataMissing", "twin_metadata.source_scientist", "must be non-empty")
        if meta.session_mode is None:
            out.add("MetadataMissing", "twin_metadata.session_mode", "must be present")
        elif meta.session_mode != mode.value:
            out.add(
                "MetadataInconsistent",
                "twin_metadata.session_mode",
                f"{meta.session_mode} disagrees with document mode {mode.value}",
            )

    # session-mode layer gates
    if mode is SessionMode.OPERATIONAL:
        if doc.decision_model is not None:
            problems = _stub_violations(doc.decision_model)
            if problems:
                out.add(
                    "ContaminationGuardViolation",
                    "decision_model",
                    "OPERATIONAL sessions must not carry decision-model content: "
                    + "; ".join(problems),
                )
        if doc.strategic is not None:
            out.add("ModeGateViolation", "strategic", "OPERATIONAL sessions cannot populate it")
        if doc.method_alternatives is not None:
            out.add(
                "ModeGateViolation",
                "method_alternatives",
                "OPERATIONAL sessions cannot populate it",
            )
        if doc.automation_context is not None:
            out.add(
                "ModeGateViolation",
                "automation_context",
                "OPERATIONAL sessions cannot populate it",
            )
    elif mode is SessionMode.DESIGN_EXPERT:
        if doc.strategic is not None:
            out.add("ModeGateViolation", "strategic", "reserved for DIRECTOR sessions")
    elif mode is SessionMode.DIRECTOR:
        if doc.protocol is not None:
            out.add("ModeGateViolation", "protocol", "DIRECTOR sessions carry no protocol layer")
        if doc.method_alternatives is not None:
            out.add(
                "ModeGateViolation", "method_alternatives", "reserved for DESIGN_EXPERT sessions"
            )
        if doc.automation_context is not None:
            out.add(
                "ModeGateViolation", "automation_context", "reserved for DESIGN_EXPERT sessions"
            )

    seen_ids: dict[str, str] = {}

    def check_id(claim_id: str | None, path: str) -> None:
        if claim_id is None:
            return
        if claim_id in seen_ids:
            out.add("DuplicateId", path, f"id {claim_id} already used at {seen_ids[claim_id]}")
        else:
            seen_ids[claim_id] = path

    if doc.protocol is not None:
        indexes = [step.step_index for step in doc.protocol.steps]
        if sorted(indexes) != list(range(1, len(indexes) + 1)):
            out.add(
                "StepIndexViolation",
                "protocol.steps",
                f"step_index must be unique and contiguous from 1, got {indexes}",
            )
        seen_fm_names: dict[str, str] = {}
        for i, step in enumerate(doc.protocol.steps):
            spath = f"protocol.steps[{i}]"
            check_id(step.id, spath)
            for j, fm in enumerate(step.failure_modes):
                fpath = f"{spath}.failure_modes[{j}]"
                check_id(fm.id, fpath)
                norm = normalize_label(fm.name)
                if norm in seen_fm_names:
                    out.add(
                        "DuplicateId",
                        fpath,
                        f"failure mode name {fm.name!r} collides with {seen_fm_names[norm]}"
                        " after normalization",
                    )
                else:
                    seen_fm_names[norm] = fpath
                _validate_claim_confidence(
                    out, fpath, fm.confidence, fm.confidence_method, fm.source_scientist
                )
                _validate_shelf_fields(out, fpath, fm)

    if doc.decision_model is not None and doc.decision_model.decision_points is not None:
        for i, dp in enumerate(doc.decision_model.decision_points):
            dpath = f"decision_model.decision_points[{i}]"
            check_id(dp.id, dpath)
            _validate_claim_confidence(
                out, dpath, dp.confidence, dp.confidence_method, dp.source_scientist
            )
            for name in (
                "condition_type",
                "threshold_value",
                "comparator",
                "units",
                "pass_action",
                "fail_action",
                "escalation_action",
            ):
                if getattr(dp, name) is None:
                    out.add(
                        "MissingMandatoryField", dpath, f"{name} is required on decision points"
                    )

    if doc.strategic is not None and doc.strategic.program_milestones is not None:
        for i, pm in enumerate(doc.strategic.program_milestones):
            ppath = f"strategic.program_milestones[{i}]"
            check_id(pm.id, ppath)
            for j, ei in enumerate(pm.evidentiary_inputs):
                epath = f"{ppath}.evidentiary_inputs[{j}]"
                check_id(ei.id, epath)
                for name in ("required_output", "quality_threshold", "decision_consequence"):
                    if getattr(ei, name) is None:
                        out.add(
                            "MissingMandatoryField",
                            epath,
                            f"{name} is required on evidentiary inputs",
                        )

    return out.report()


# -- linguistic confidence --------------------------------------------


@dataclass(frozen=True)
class HedgeBand:
    name: str
    low: float
    high: float
    terms: tuple[str, ...]

    @property
    def score(self) -> float:
        return round((self.low + self.high) / 2, 3)


@dataclass(frozen=True)
class HedgeLexicon:
    bands: tuple[HedgeBand, ...]


def load_lexicon(path: Path | str) -> HedgeLexicon:
    raw = json.loads(Path(path).read_text(encoding="utf-8"))
    bands = []
    for band in raw["bands"]:
        low, high = float(band["low"]), float(band["high"])
        if not (CONFIDENCE_FLOOR <= low <= high <= CONFIDENCE_CEILING):
            raise RangeError(f"band {band['name']}: [{low}, {high}] outside confidence range")
        bands.append(
            HedgeBand(band["name"], low, high, tuple(t.casefold() for t in band["terms"]))
        )
    return HedgeLexicon(tuple(bands))


@lru_cache(maxsize=1)
def default_lexicon() -> HedgeLexicon:
    with resources.as_file(resources.files("skg.data") / "hedge_lexicon.json") as path:
        return load_lexicon(path)


def score_linguistic(phrase: str, lexicon: HedgeLexicon | None = None) -> tuple[float, str]:
    """Map a source phrase to (confidence, band name) by longest hedge match.

    Matching is case-insensitive on word boundaries; when several terms
    occur, the longest one wins, with lexicon band order breaking ties.

    Raises:
        NoHedgeDetected: nothing in the lexicon matched.
    """
    lexicon = lexicon or default_lexicon()
    haystack = phrase.casefold()
    best: tuple[int, int, HedgeBand] | None = None
    for rank, band in enumerate(lexicon.bands):
        for term in band.terms:
            if re.search(rf"(?<![0-9a-z]){re.escape(term)}(?![0-9a-z])", haystack):
                candidate = (len(term), -rank, band)
                if best is None or candidate[:2] > best[:2]:
                    best = candidate
    if best is None:
        raise NoHedgeDetected(f"no hedge term found in {phrase!r}")
    band = best[2]
    return (band.score, band.name)
