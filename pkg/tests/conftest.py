"""Shared fixtures: demo stores seeded with the experimental-hall scenario."""

from __future__ import annotations

import random
from datetime import datetime, timedelta, timezone

import pytest

from reqbase import core
from reqbase.core import AttributeDef, AttributeSchema, Requirement, RequirementId
from reqbase.store import Snapshot, Store

FIXED_TIME = datetime(2002, 7, 15, 9, 0, 0, tzinfo=timezone.utc)


def fixed_clock():
    return FIXED_TIME


class SteppingClock:
    """Deterministic clock advancing one second per call."""

    def __init__(self, start: datetime = FIXED_TIME, step_seconds: int = 1):
        self.now = start
        self.step = timedelta(seconds=step_seconds)

    def __call__(self) -> datetime:
        current = self.now
        self.now = current + self.step
        return current


CONSOLES_TEXT = (
    "During installation, consoles at beam height are needed in the "
    "experimental hall for measuring."
)

SURVEY_SOURCE = """#document survey-spec
#title Survey Requirements
#group survey

= Experimental Hall

#req
type: technical infrastructure, floor space
building: experimental hall
location: site-01
phase: installation
---
During installation, consoles at beam height are needed in the experimental hall for measuring.

##req
type: technical infrastructure
building: experimental hall
location: site-01
phase: installation
---
Consoles must be accessible by gangways.
"""

ELECTRICAL_SOURCE = """#document electrical-spec
#title Electrical Infrastructure Requirements
#group electrical

= Experimental Hall

#req
type: floor space
building: experimental hall
location: site-01
phase: operation
---
A storage room for electrical equipment of about 80 m² is needed.

##req
type: usage
building: experimental hall
location: site-01
phase: operation
---
It must be accessible by car.
"""

# three records that must NOT match building~"experimental hall" type~"floor space"
MISC_SOURCE = """#document misc-spec
#title Assorted Requirements
#group civil engineering

#req
type: floor space
building: tunnel
---
The tunnel needs a continuous walkway of 1.2 m width.

#req
type: safety
building: experimental hall
---
Emergency lighting is required in the experimental hall.

#req
type: cost
building: access hall
---
The access hall finish must stay within the standard cost envelope.
"""


def seed_consoles(store: Store) -> Store:
    store.import_document("survey-grm", "survey-spec", SURVEY_SOURCE.split("##req")[0])
    return store


def seed_retrieval(store: Store) -> Store:
    seed_consoles(store)
    store.import_document("reviewer", "misc-spec", MISC_SOURCE)
    return store


def seed_demo(store: Store) -> Store:
    """Checklist Experimental Hall: R1 storage room (fulfilled), R2 car access
    (fulfilled), R3 consoles (blank), R4 gangways (blank)."""
    store.import_document("electrical-grm", "electrical-spec", ELECTRICAL_SOURCE)
    store.import_document("survey-grm", "survey-spec", SURVEY_SOURCE)
    store.record_approvals(
        "reviewer",
        "experimental hall",
        [
            (RequirementId(1), "fulfilled", None),
            (RequirementId(2), "fulfilled", None),
        ],
    )
    return store


@pytest.fixture
def consoles_store():
    with seed_consoles(Store.in_memory(clock=SteppingClock())) as store:
        yield store


@pytest.fixture
def retrieval_store():
    with seed_retrieval(Store.in_memory(clock=SteppingClock())) as store:
        yield store


@pytest.fixture
def demo_store():
    with seed_demo(Store.in_memory(clock=SteppingClock())) as store:
        yield store


# --- randomized snapshots for oracle tests ----------------------------------

TEST_BUILDINGS = tuple(f"building-{i:02d}" for i in range(1, 21))
TEST_GROUPS = ("survey", "civil engineering", "electrical", "safety", "cryogenics")
TEST_TYPES = ("usage", "technical infrastructure", "floor space", "safety", "cost")
TEST_PHASES = ("construction", "installation", "operation", "maintenance")
TEST_STATUSES = ("in progress", "approved", "rejected")
_WORDS = (
    "hall", "tunnel", "Consoles", "beam", "light", "access", "width",
    "storage", "supply", "detector", "crane", "escape", "cooling",
)


def oracle_schema() -> AttributeSchema:
    return AttributeSchema(
        (
            AttributeDef("type", core.ENUM_MULTI, TEST_TYPES),
            AttributeDef("group", core.ENUM_SINGLE, TEST_GROUPS),
            AttributeDef("building", core.ENUM_MULTI, TEST_BUILDINGS),
            AttributeDef("location", core.ENUM_MULTI),
            AttributeDef("phase", core.ENUM_SINGLE, TEST_PHASES),
            AttributeDef(
                "status", core.ENUM_SINGLE, TEST_STATUSES, required=True, default="in progress"
            ),
            AttributeDef("note", core.TEXT),
            AttributeDef("due", core.DATE),
        )
    )


def random_requirement(rng: random.Random, rid: int, max_buildings: int = 20) -> Requirement:
    attrs: dict[str, object] = {"status": rng.choice(TEST_STATUSES)}
    if rng.random() < 0.9:
        attrs["group"] = rng.choice(TEST_GROUPS)
    if rng.random() < 0.8:
        attrs["type"] = tuple(
            sorted(rng.sample(TEST_TYPES, rng.randint(1, 3)))
        )
    if rng.random() < 0.85:
        attrs["building"] = tuple(
            sorted(rng.sample(TEST_BUILDINGS[:max_buildings], rng.randint(1, 4)))
        )
    if rng.random() < 0.5:
        attrs["phase"] = rng.choice(TEST_PHASES)
    if rng.random() < 0.3:
        attrs["note"] = " ".join(rng.sample(_WORDS, 2))
    if rng.random() < 0.3:
        attrs["due"] = f"200{rng.randint(2, 5)}-0{rng.randint(1, 9)}-1{rng.randint(0, 9)}"
    created = FIXED_TIME + timedelta(minutes=rng.randint(0, 5000))
    change_log = []
    revision = 1
    for _ in range(rng.randint(0, 2)):
        change_log.append(
            core.ChangeLogEntry(
                created + timedelta(minutes=rng.randint(1, 5000)),
                "editor",
                "note",
                None,
                "edited",
            )
        )
        revision += 1
    text = " ".join(rng.choice(_WORDS) for _ in range(rng.randint(3, 12))) + "."
    return Requirement(
        id=RequirementId(rid),
        text=text,
        attributes=attrs,
        revision=revision,
        created_at=created,
        created_by="seed",
        document=f"doc-{rng.randint(1, 4)}",
        outline=str(rng.randint(1, 30)),
        change_log=tuple(change_log),
    )


def random_snapshot(rng: random.Random, size: int, max_buildings: int = 20) -> Snapshot:
    requirements = {}
    for i in range(1, size + 1):
        req = random_requirement(rng, i, max_buildings)
        requirements[req.id] = req
    return Snapshot(
        as_of=size,
        schema=oracle_schema(),
        requirements=requirements,
        documents={},
        views={},
        approvals=(),
    )
