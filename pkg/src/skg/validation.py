"""Issue records shared by graph and document validation."""

from __future__ import annotations

from dataclasses import dataclass, field


@dataclass(frozen=True)
class Issue:
    code: str
    subject: str  # node key, edge description, or document path
    detail: str

    def __str__(self) -> str:
        return f"{self.code}\t{self.subject}\t{self.detail}"


@dataclass(frozen=True)
class ValidationReport:
    issues: tuple[Issue, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "issues", tuple(self.issues))

    @property
    def ok(self) -> bool:
        return not self.issues

    def codes(self) -> list[str]:
        return [issue.code for issue in self.issues]

    def has(self, code: str) -> bool:
        return any(issue.code == code for issue in self.issues)

    def to_text(self) -> str:
        if self.ok:
            return "OK\n"
        return "".join(f"{issue}\n" for issue in self.issues)


class IssueCollector:
    """Accumulates issues in traversal order."""

    def __init__(self):
        self._issues: list[Issue] = []

    def add(self, code: str, subject: str, detail: str) -> None:
        self._issues.append(Issue(code, subject, detail))

    def report(self) -> ValidationReport:
        return ValidationReport(tuple(self._issues))
