"""
Sharing indicators without sharing data
=======================================

Tenants never exchange raw telemetry. Each keeps a local knowledge base of
salted attribute hashes harvested from confirmed-suspicious decisions, and
periodically publishes a digest — hashes, counts, confidences — to a
federation view. An indicator is promoted to shared intelligence only when
independent tenants corroborate it, and confidences combine with a
noisy-or, so the merged view equals what a centralized pool would compute
while each node only ever ships eight-byte hashes.

Run it:  python3 demos/03_federated_intel.py
"""

from sentinelsim.config import IntelConfig
from sentinelsim.events import (
    DetectorView,
    Domain,
    EntityKind,
    EntityRef,
    EventKind,
)
from sentinelsim.intel import (
    GlobalKnowledgeBase,
    LocalKnowledgeBase,
    active_threat_level,
    hash_value,
    match,
    merge_digests,
    publish_digest,
    record_local,
)

cfg = IntelConfig()


def login_view(tenant, user, credential, geo):
    return DetectorView(
        id=f"e-{tenant}-{user}",
        ts=600_000,
        entity=EntityRef(kind=EntityKind.User, id=user, tenant=tenant),
        domain=Domain.Api,
        kind=EventKind.Login,
        numeric={"request_rate": 40.0, "payload_bytes": 200.0},
        categorical={"geo": geo, "hour_of_day": "3",
                     "device_fingerprint": "fp-rented-box",
                     "credential_hash": credential},
    )


# ----------------------------------------------------------------------------
# The same stolen credential shows up at two tenants
# ----------------------------------------------------------------------------
# A credential-stuffing run sprays "cred-breach-77" against acme and globex.
# High-risk, mitigated decisions at each tenant file the event's attributes
# into that tenant's local knowledge base.

acme = LocalKnowledgeBase(tenant="acme")
globex = LocalKnowledgeBase(tenant="globex")

for attempt in range(3):
    record_local(acme, login_view("acme", f"victim-{attempt}", "cred-breach-77", "geo-xx"),
                 risk=0.85, action_severity=0.5, clock=600_000 + attempt, cfg=cfg)
for attempt in range(4):
    record_local(globex, login_view("globex", f"user-{attempt}", "cred-breach-77", "geo-xx"),
                 risk=0.92, action_severity=0.7, clock=610_000 + attempt, cfg=cfg)

# A below-threshold decision contributes nothing, no matter what it saw.
record_local(acme, login_view("acme", "fyi", "cred-benign", "geo-us"),
             risk=0.40, action_severity=0.0, clock=620_000, cfg=cfg)

print(f"acme holds {len(acme.indicators)} local indicators, "
      f"globex holds {len(globex.indicators)}")

# ----------------------------------------------------------------------------
# Digests carry hashes, never values
# ----------------------------------------------------------------------------

digest = publish_digest(acme, clock=700_000, cfg=cfg)
print(f"\nacme's published digest ({len(digest.entries)} entries):")
for entry in digest.entries:
    print(f"  {entry.itype.value:<16} hash={entry.value_hash:<22} "
          f"count={entry.local_count} conf={entry.confidence:.2f} "
          f"sev={entry.severity:.2f}")
print('note: the string "cred-breach-77" appears nowhere above')

# ----------------------------------------------------------------------------
# Corroboration promotes, a single voice does not
# ----------------------------------------------------------------------------

federation = GlobalKnowledgeBase(promotion_k=cfg.promotion_k)
merge_digests(federation, [digest, publish_digest(globex, 700_000, cfg)])

promoted = {(e.itype.value, e.value_hash) for e in federation.promoted()}
print(f"\nfederation entries: {len(federation.entries)}, "
      f"promoted (seen by >= {cfg.promotion_k} tenants): {len(promoted)}")
for entry in federation.promoted():
    print(f"  {entry.itype.value:<16} nodes={sorted(entry.node_set)} "
          f"count={entry.total_count} conf={entry.confidence:.3f} "
          f"sev={entry.severity:.2f}")

# Noisy-or: acme's 3 sightings give conf 0.6, globex's 4 give 0.8;
# together 1 - (1 - 0.6)(1 - 0.8) = 0.92 — more certain than either alone.

# ----------------------------------------------------------------------------
# A third tenant benefits before it is ever hit hard
# ----------------------------------------------------------------------------
# initech has no local history of this credential, but the promoted
# indicator lifts the intel score of its very first sighting.

initech = LocalKnowledgeBase(tenant="initech")
first_sighting = login_view("initech", "newhire", "cred-breach-77", "geo-xx")
score = match(initech, federation, first_sighting, cfg)
print(f"\ninitech's first sighting scores intel match {score:.3f} "
      "with zero local history")
print(f"federation threat level: {active_threat_level(federation):.3f}")

# Re-publication is idempotent — the merge keeps each node's latest word
# instead of double counting.
merge_digests(federation, [publish_digest(acme, 710_000, cfg)])
cred_entry = federation.entries[
    (digest.entries[0].itype, hash_value("cred-breach-77", cfg.salt))
]
print(f"\nafter acme re-publishes: conf still {cred_entry.confidence:.3f} "
      "(no double counting)")
