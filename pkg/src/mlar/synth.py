"""Synthetic labeled job/resume corpus with ground-truth records.

Documents use the rules-extractor grammar with deliberate noise (label case,
skill casing and spacing, duplicate skills, department spelling variants,
ignorable prose), and each carries the feature record a correct parser must
produce, minus the document id.
"""

from __future__ import annotations

import os
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from .domain import Department, DocumentKind

_PROFILES: dict[Department, tuple[list[str], list[str]]] = {
    Department.HR: (["HR Generalist", "Talent Acquisition Specialist", "HR Manager"],
                    ["recruiting", "onboarding", "payroll", "employee relations", "hris", "labor law",
                     "performance management", "compensation"]),
    Department.DESIGNER: (["Graphic Designer", "UX Designer", "Product Designer"],
                          ["figma", "photoshop", "illustrator", "typography", "wireframing", "prototyping",
                           "user research", "branding"]),
    Department.INFORMATION_TECHNOLOGY: (["Systems Administrator", "IT Support Engineer", "Network Engineer"],
                                        ["linux", "active directory", "networking", "python", "sql", "aws",
                                         "troubleshooting", "itil"]),
    Department.TEACHER: (["Mathematics Teacher", "Primary School Teacher", "English Teacher"],
                         ["lesson planning", "classroom management", "curriculum design", "assessment",
                          "tutoring", "special education", "e-learning", "mentoring"]),
    Department.ADVOCATE: (["Legal Advocate", "Litigation Associate", "Corporate Counsel"],
                          ["litigation", "contract law", "legal research", "drafting", "negotiation",
                           "compliance", "case management", "arbitration"]),
    Department.BUSINESS_DEVELOPMENT: (["Business Development Manager", "Partnerships Lead", "Sales Development Representative"],
                                      ["lead generation", "negotiation", "crm", "market research", "pipeline management",
                                       "partnerships", "presentations", "forecasting"]),
    Department.HEALTHCARE: (["Registered Nurse", "Medical Assistant", "Healthcare Administrator"],
                            ["patient care", "emr", "phlebotomy", "triage", "medical billing", "cpr",
                             "infection control", "hipaa"]),
    Department.FITNESS: (["Personal Trainer", "Fitness Instructor", "Strength Coach"],
                         ["personal training", "nutrition", "strength training", "cpr", "group fitness",
                          "program design", "injury prevention", "yoga"]),
    Department.AGRICULTURE: (["Farm Manager", "Agronomist", "Agricultural Technician"],
                             ["crop management", "irrigation", "soil science", "pest control", "farm machinery",
                              "livestock", "gis", "sustainability"]),
    Department.BPO: (["Customer Service Representative", "Call Center Agent", "BPO Team Lead"],
                     ["customer service", "call handling", "crm", "data entry", "escalation management",
                      "sla", "typing", "conflict resolution"]),
    Department.SALES: (["Sales Associate", "Account Executive", "Sales Manager"],
                       ["prospecting", "closing", "crm", "negotiation", "cold calling", "account management",
                        "salesforce", "forecasting"]),
    Department.CONSULTANT: (["Management Consultant", "Strategy Consultant", "IT Consultant"],
                            ["stakeholder management", "process improvement", "excel", "powerpoint",
                             "business analysis", "change management", "strategy", "data analysis"]),
    Department.DIGITAL_MEDIA: (["Digital Marketing Specialist", "Content Creator", "Social Media Manager"],
                               ["seo", "social media", "content writing", "google analytics", "video editing",
                                "adobe premiere", "copywriting", "email marketing"]),
    Department.AUTOMOBILE: (["Automotive Technician", "Service Advisor", "Auto Body Repairer"],
                            ["engine diagnostics", "brake systems", "electrical systems", "welding",
                             "vehicle inspection", "obd-ii", "transmission repair", "customer service"]),
    Department.CHEF: (["Sous Chef", "Line Cook", "Executive Chef"],
                      ["menu planning", "food safety", "knife skills", "inventory management", "baking",
                       "haccp", "kitchen management", "plating"]),
    Department.FINANCE: (["Financial Analyst", "Finance Manager", "Investment Analyst"],
                         ["financial modeling", "excel", "budgeting", "forecasting", "valuation",
                          "accounting", "sql", "risk analysis"]),
    Department.APPAREL: (["Fashion Designer", "Merchandiser", "Apparel Production Manager"],
                         ["pattern making", "textiles", "merchandising", "sewing", "trend analysis",
                          "sourcing", "adobe illustrator", "quality control"]),
    Department.ENGINEERING: (["Data Engineer", "Mechanical Engineer", "Software Engineer"],
                             ["python", "sql", "spark", "cad", "matlab", "c++", "machine learning", "git"]),
    Department.ACCOUNTANT: (["Staff Accountant", "Senior Accountant", "Tax Accountant"],
                            ["accounts payable", "reconciliation", "gaap", "quickbooks", "tax preparation",
                             "excel", "auditing", "financial reporting"]),
    Department.CONSTRUCTION: (["Site Supervisor", "Construction Manager", "Civil Foreman"],
                              ["project scheduling", "osha", "blueprint reading", "cost estimation",
                               "autocad", "concrete", "site safety", "contract management"]),
    Department.PUBLIC_RELATIONS: (["PR Specialist", "Communications Manager", "Media Relations Officer"],
                                  ["press releases", "media relations", "crisis communication", "copywriting",
                                   "event planning", "social media", "storytelling", "stakeholder management"]),
    Department.BANKING: (["Bank Teller", "Relationship Manager", "Loan Officer"],
                         ["cash handling", "kyc", "credit analysis", "customer service", "loan processing",
                          "aml", "financial products", "sales"]),
    Department.ARTS: (["Art Director", "Illustrator", "Gallery Coordinator"],
                      ["painting", "drawing", "art history", "curation", "photoshop", "sculpture",
                       "digital art", "exhibition design"]),
    Department.AVIATION: (["Aircraft Maintenance Technician", "Flight Dispatcher", "Aviation Safety Officer"],
                          ["aircraft maintenance", "faa regulations", "flight planning", "avionics",
                           "safety management", "airframe", "crew resource management", "meteorology"]),
}

_GENERAL_SKILLS = ["communication", "teamwork", "leadership", "problem solving", "time management",
                   "microsoft office", "project management", "attention to detail"]
_FIRST = ["Ada", "Grace", "Alan", "Omar", "Mai", "Ali", "Lina", "Yusuf", "Sara", "Karim", "Nour", "Hana",
          "Tarek", "Mona", "Ziad", "Laila", "Samir", "Dina", "Amir", "Rania", "Jonas", "Priya", "Chen", "Ivo"]
_LAST = ["Lovelace", "Hopper", "Turing", "Hassan", "Walid", "Hamdi", "Younes", "Farouk", "Mansour",
         "Khalil", "Nasser", "Saleh", "Okafor", "Larsen", "Novak", "Silva", "Tanaka", "Kumar"]
_DEGREES = ["BSc", "BA", "MSc", "MBA", "Diploma", "PhD", "BEng", "Associate Degree"]
_FIELDS = ["Computer Science", "Business Administration", "Education", "Nursing", "Design", "Law",
           "Finance", "Mechanical Engineering", "Agriculture", "Fine Arts", "Hospitality", "Aviation"]
_SCHOOLS = ["Cairo University", "MSA University", "State College", "Technical Institute", "City University",
            "Open University", "National Academy"]
_PROSE = [
    "Motivated professional with a track record of delivering results.",
    "random prose",
    "Summary: reliable, curious and eager to learn.",
    "References available on request.",
    "Hobbies: chess, running and photography.",
    "Languages: English, Arabic",
]
_SENIORITY = ["Junior", "Senior", "Lead", "", ""]
_EXPERIENCE_LEVELS = ["0-1 years", "1+ years", "2+ years", "3+ years", "5+ years", "7+ years"]
_PREFERENCES = ["remote friendly", "willing to travel", "night shifts", "bilingual", "immediate start",
                "driving license"]


@dataclass
class SyntheticDocument:
    kind: DocumentKind
    filename: str
    text: str
    expected: dict[str, Any]
    department: Department
    meta: dict[str, Any] = field(default_factory=dict)


def _noisy_skill(rng: random.Random, skill: str) -> str:
    style = rng.randrange(4)
    if style == 1:
        skill = skill.upper()
    elif style == 2:
        skill = skill.title()
    elif style == 3:
        skill = skill.replace(" ", "  ")
    return " " * rng.randrange(2) + skill + " " * rng.randrange(3)


def _skills_line(rng: random.Random, skills: list[str]) -> str:
    noisy = [_noisy_skill(rng, s) for s in skills]
    if skills and rng.random() < 0.3:
        noisy.append(_noisy_skill(rng, rng.choice(skills)))
    return ",".join(noisy)


def _label(rng: random.Random, name: str) -> str:
    return rng.choice([name, name.lower(), name.upper()])


def _department_spelling(rng: random.Random, d: Department) -> str:
    return rng.choice([d.value, d.value.lower(), d.value.replace("-", " "), d.value.upper().replace("-", " ")])


def generate_job(rng: random.Random, department: Department, index: int) -> SyntheticDocument:
    roles, pool = _PROFILES[department]
    title = " ".join(filter(None, [rng.choice(_SENIORITY), rng.choice(roles)]))
    skills = rng.sample(pool, rng.randint(2, 6)) + rng.sample(_GENERAL_SKILLS, rng.randint(0, 2))
    experience = rng.choice(_EXPERIENCE_LEVELS)
    education = f"{rng.choice(_DEGREES)} in {rng.choice(_FIELDS)}"
    prefs = rng.sample(_PREFERENCES, rng.randint(1, 2)) if rng.random() < 0.5 else None
    hr_email = f"hr-{department.value.lower()}@example.com" if rng.random() < 0.7 else None

    lines = [
        f"{_label(rng, 'Title')}: {title}",
        f"{_label(rng, 'Department')}: {_department_spelling(rng, department)}",
        f"Reference: JOB-{index:05d}",
    ]
    if hr_email:
        lines.append(f"{_label(rng, 'Email')}: {hr_email}")
    lines.append(f"{_label(rng, 'Skills')}: {_skills_line(rng, skills)}")
    lines.append(f"{_label(rng, 'Experience')}: {experience}")
    lines.append(f"{_label(rng, 'Education')}: {education}")
    if prefs:
        lines.append(f"{_label(rng, 'Preferences')}: {', '.join(prefs)}")
    lines.insert(rng.randrange(1, len(lines) + 1), rng.choice(_PROSE))

    expected = {
        "title": title,
        "required_skills": sorted(set(skills)),
        "experience_level": experience,
        "education": education,
        "preferences": prefs,
        "department": department.value,
        "hr_notify_email": hr_email,
    }
    slug = department.value.lower()
    return SyntheticDocument(DocumentKind.JOB, f"job_{index:05d}_{slug}.txt", "\n".join(lines) + "\n", expected,
                             department)


def generate_resume(
    rng: random.Random, department: Department, index: int, email_rate: float = 1.0
) -> SyntheticDocument:
    roles, pool = _PROFILES[department]
    name = f"{rng.choice(_FIRST)} {rng.choice(_LAST)}"
    email = None
    if rng.random() < email_rate:
        email = f"{name.lower().replace(' ', '.')}.{index}@example.com"
    phone = f"+20 1{rng.randrange(10**8, 10**9)}" if rng.random() < 0.8 else None
    # Mostly in-department skills, with the odd stray from another department.
    other = _PROFILES[rng.choice(list(Department))][1]
    skills = rng.sample(pool, rng.randint(1, 6)) + rng.sample(_GENERAL_SKILLS, rng.randint(0, 3))
    if rng.random() < 0.3:
        skills.append(rng.choice(other))

    experience = []
    for _ in range(rng.randint(0, 3)):
        if rng.random() < 0.6:
            role = rng.choice(roles)
        else:
            role = rng.choice(_PROFILES[rng.choice(list(Department))][0])
        years = rng.choice([None, float(rng.randint(0, 12)), round(rng.uniform(0, 15), 1)])
        desc = rng.choice(["", "Day to day operations", "Led a team of five", "Improved throughput by 20%"])
        experience.append({"role_title": role, "description": desc, "years": years})
    education = []
    for _ in range(rng.randint(0, 2)):
        degree = f"{rng.choice(_DEGREES)} {rng.choice(_FIELDS)}"
        inst = rng.choice(_SCHOOLS + [None])
        education.append({"degree": degree, "institution": inst})

    lines = [f"{_label(rng, 'Name')}: {name}"]
    if email:
        lines.append(f"{_label(rng, 'Email')}: {email}")
    if phone:
        lines.append(f"{_label(rng, 'Phone')}: {phone}")
    lines.append(f"{_label(rng, 'Department')}: {_department_spelling(rng, department)}")
    lines.append(f"Reference: CV-{index:05d}")
    lines.append(rng.choice(_PROSE))
    lines.append(f"{_label(rng, 'Skills')}: {_skills_line(rng, skills)}")
    for e in experience:
        years = "" if e["years"] is None else rng.choice([f"{e['years']:g}", f"{e['years']:g} years"])
        lines.append(f"{_label(rng, 'Experience')}: {e['role_title']} | {years} | {e['description']}")
    for ed in education:
        inst = ed["institution"] or ""
        lines.append(f"{_label(rng, 'Education')}: {ed['degree']}" + (f" | {inst}" if inst else ""))

    expected = {
        "candidate_name": name,
        "email": email,
        "phone": phone,
        "skills": sorted(set(skills)),
        "experience": experience,
        "education": education,
        "predicted_department": department.value,
    }
    return SyntheticDocument(DocumentKind.RESUME, f"resume_{index:05d}.txt", "\n".join(lines) + "\n", expected,
                             department, {"has_email": email is not None})


@dataclass
class Corpus:
    jobs: list[SyntheticDocument]
    resumes: list[SyntheticDocument]


def generate_corpus(
    seed: int = 0,
    jobs_per_department: int = 1,
    resumes_per_department: int = 10,
    email_rate: float = 1.0,
    departments: list[Department] | None = None,
) -> Corpus:
    rng = random.Random(seed)
    departments = list(departments or Department)
    jobs = [generate_job(rng, d, i * len(departments) + n)
            for i in range(jobs_per_department) for n, d in enumerate(departments)]
    resumes = []
    for i in range(resumes_per_department):
        for d in departments:
            resumes.append(generate_resume(rng, d, len(resumes), email_rate))
    rng.shuffle(resumes)
    return Corpus(jobs, resumes)


def write_corpus(root: str | os.PathLike, corpus: Corpus, base_mtime: float | None = 1_700_000_000.0) -> Path:
    """Write ``root/jobs`` and ``root/resumes``.

    With ``base_mtime`` each file gets a distinct whole-second modification
    time in list order, so ingestion order and receipt times are reproducible.
    """
    root = Path(root)
    for sub, docs in (("jobs", corpus.jobs), ("resumes", corpus.resumes)):
        d = root / sub
        d.mkdir(parents=True, exist_ok=True)
        for i, doc in enumerate(docs):
            path = d / doc.filename
            path.write_text(doc.text, encoding="utf-8")
            if base_mtime is not None:
                t = base_mtime + i
                os.utime(path, (t, t))
    return root
