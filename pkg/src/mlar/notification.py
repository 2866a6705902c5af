"""Acceptance messages for selected candidates and their delivery.

Dry-run mode appends each message to a JSON-lines outbox. SMTP mode submits
each message once; there is no retry, a failure becomes a ``Failed`` receipt.
"""

from __future__ import annotations

import json
import os
import smtplib
import threading
from dataclasses import dataclass, field
from datetime import datetime
from email.message import EmailMessage
from email.utils import formatdate, make_msgid
from enum import Enum
from pathlib import Path
from typing import Any, Mapping

from .domain import (
    JobFeatures,
    MlarError,
    NotificationMessage,
    ResumeFeatures,
    format_ts,
    is_email,
    parse_ts,
    utcnow,
)
from .store import canonical_json

BODY_TEMPLATE = """\
Dear {name},

Thank you for applying for the {title} position in our {department} department.
We are pleased to let you know that your application has been shortlisted.

About the role:
{details}

Next steps:
1. Reply to this email within five business days to confirm your interest.
2. Include your availability for a first interview over the next two weeks.
3. Have copies of your certificates ready for the interview.

Kind regards,
The {department} hiring team
"""


class UnnotifiableCandidate(MlarError):
    def __init__(self, resume_id: str):
        super().__init__(f"unnotifiable candidate: resume {resume_id} has no email")
        self.resume_id = resume_id


class TransportMode(str, Enum):
    DRY_RUN = "DryRun"
    SMTP = "Smtp"


class DeliveryStatus(str, Enum):
    SENT = "Sent"
    DRY_RUN = "DryRun"
    FAILED = "Failed"


@dataclass(frozen=True)
class MailTransportConfig:
    mode: TransportMode = TransportMode.DRY_RUN
    from_address: str = "recruiting@localhost"
    host: str | None = None
    port: int | None = None
    username: str | None = None
    password_env_var: str | None = None
    starttls: bool = False
    timeout: float = 30.0
    outbox_path: str | None = None

    def __post_init__(self) -> None:
        if not is_email(self.from_address):
            raise ValueError(f"invalid from_address: {self.from_address!r}")
        if self.mode is TransportMode.SMTP and not (self.host and self.port):
            raise ValueError("Smtp transport requires host and port")

    def to_dict(self) -> dict[str, Any]:
        return {
            "mode": self.mode.value,
            "from_address": self.from_address,
            "host": self.host,
            "port": self.port,
            "username": self.username,
            "password_env_var": self.password_env_var,
            "starttls": self.starttls,
            "timeout": self.timeout,
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "MailTransportConfig":
        return cls(
            mode=TransportMode(d.get("mode", "DryRun")),
            from_address=d.get("from_address", "recruiting@localhost"),
            host=d.get("host"),
            port=None if d.get("port") is None else int(d["port"]),
            username=d.get("username"),
            password_env_var=d.get("password_env_var"),
            starttls=bool(d.get("starttls", False)),
            timeout=float(d.get("timeout", 30.0)),
        )


@dataclass(frozen=True)
class DeliveryReceipt:
    message: NotificationMessage
    status: DeliveryStatus
    detail: str = ""
    at: datetime = field(default_factory=utcnow)

    def to_dict(self) -> dict[str, Any]:
        return {
            "message": self.message.to_dict(),
            "status": self.status.value,
            "detail": self.detail,
            "at": format_ts(self.at),
        }

    @classmethod
    def from_dict(cls, d: Mapping[str, Any]) -> "DeliveryReceipt":
        return cls(
            NotificationMessage.from_dict(d["message"]),
            DeliveryStatus(d["status"]),
            d.get("detail", ""),
            parse_ts(d["at"]),
        )


def _job_details(job: JobFeatures) -> str:
    lines = []
    if job.required_skills:
        lines.append("- Key skills: " + ", ".join(sorted(job.required_skills)))
    if job.experience_level:
        lines.append(f"- Experience: {job.experience_level}")
    if job.education:
        lines.append(f"- Education: {job.education}")
    if job.preferences:
        lines.append("- Nice to have: " + ", ".join(job.preferences))
    return "\n".join(lines) or "- Details will be shared at the interview."


def generate_response(resume: ResumeFeatures, job: JobFeatures, *, dry_run: bool = True) -> NotificationMessage:
    if not resume.email:
        raise UnnotifiableCandidate(resume.resume_id)
    body = BODY_TEMPLATE.format(
        name=resume.candidate_name,
        title=job.title,
        department=job.department.value,
        details=_job_details(job),
    )
    return NotificationMessage(
        job_id=job.job_id,
        resume_id=resume.resume_id,
        recipient=resume.email,
        subject=f"Application update: {job.title}",
        body=body,
        dry_run=dry_run,
    )


def generate_hr_posting(job: JobFeatures, posting_text: str, *, dry_run: bool = True) -> NotificationMessage:
    """Forward a job posting to the HR address given on the posting."""
    if not job.hr_notify_email:
        raise MlarError(f"job {job.job_id} has no HR notification address")
    return NotificationMessage(
        job_id=job.job_id,
        resume_id=None,
        recipient=job.hr_notify_email,
        subject=f"Job posting: {job.title}",
        body=posting_text.rstrip() + "\n",
        dry_run=dry_run,
    )


def to_email(message: NotificationMessage, from_address: str) -> EmailMessage:
    em = EmailMessage()
    em["From"] = from_address
    em["To"] = message.recipient
    em["Subject"] = message.subject
    em["Date"] = formatdate(localtime=False, usegmt=True)
    em["Message-ID"] = make_msgid(domain=from_address.split("@", 1)[1])
    em.set_content(message.body, subtype="plain", charset="utf-8")
    return em


_outbox_lock = threading.Lock()


def _append_outbox(path: Path, message: NotificationMessage) -> None:
    line = canonical_json(message.to_dict()) + "\n"
    with _outbox_lock, open(path, "a", encoding="utf-8") as fh:
        fh.write(line)
        fh.flush()
        os.fsync(fh.fileno())


def read_outbox(path: str | os.PathLike) -> list[NotificationMessage]:
    try:
        lines = Path(path).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError:
        return []
    return [NotificationMessage.from_dict(json.loads(line)) for line in lines if line.strip()]


def open_connection(transport: MailTransportConfig) -> smtplib.SMTP:
    """Connected, authenticated SMTP session for sequential submissions."""
    password = os.environ.get(transport.password_env_var) if transport.password_env_var else None
    smtp = smtplib.SMTP(transport.host, transport.port, timeout=transport.timeout)
    try:
        if transport.starttls:
            smtp.starttls()
        if transport.username and password:
            smtp.login(transport.username, password)
    except BaseException:
        smtp.close()
        raise
    return smtp


def send(
    message: NotificationMessage,
    transport: MailTransportConfig,
    connection: smtplib.SMTP | None = None,
) -> DeliveryReceipt:
    """Deliver ``message``; failures come back as a ``Failed`` receipt, never as an exception.

    In SMTP mode an open ``connection`` is reused; without one a connection
    is opened for this message alone.
    """
    if transport.mode is TransportMode.DRY_RUN:
        if not transport.outbox_path:
            return DeliveryReceipt(message, DeliveryStatus.FAILED, "dry-run transport has no outbox path")
        try:
            _append_outbox(Path(transport.outbox_path), message)
        except OSError as exc:
            return DeliveryReceipt(message, DeliveryStatus.FAILED, f"outbox write failed: {exc}")
        return DeliveryReceipt(message, DeliveryStatus.DRY_RUN, f"appended to {transport.outbox_path}")

    try:
        if connection is not None:
            refused = connection.send_message(to_email(message, transport.from_address))
        else:
            with open_connection(transport) as smtp:
                refused = smtp.send_message(to_email(message, transport.from_address))
    except (smtplib.SMTPException, OSError) as exc:
        return DeliveryReceipt(message, DeliveryStatus.FAILED, f"{type(exc).__name__}: {exc}")
    if refused:
        return DeliveryReceipt(message, DeliveryStatus.FAILED, f"recipient refused: {refused}")
    return DeliveryReceipt(message, DeliveryStatus.SENT, "accepted by server")
