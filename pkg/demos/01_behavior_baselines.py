"""
Learning what "normal" looks like, one event at a time
======================================================

Every entity gets a behavioral baseline: exponentially weighted statistics
for its numeric features and frequency tables for its categorical habits.
Scoring blends both with a maturity ramp, so a brand-new profile stays
quiet instead of screaming about everything it has never seen.

Run it:  python3 demos/01_behavior_baselines.py
"""

import numpy as np

from sentinelsim.config import ProfilingConfig
from sentinelsim.events import (
    DetectorView,
    Domain,
    EntityKind,
    EntityRef,
    EventKind,
)
from sentinelsim.profiling import BehaviorProfile, assess, update_profile

cfg = ProfilingConfig()
rng = np.random.default_rng(11)

entity = EntityRef(kind=EntityKind.Service, id="billing-svc", tenant="acme")
profile = BehaviorProfile(entity=entity)
peer = BehaviorProfile(entity=EntityRef(kind=EntityKind.Service, id="*", tenant="acme"))


def view(ts, rate, payload, geo="geo-us", hour="9", fingerprint="fp-prod-1"):
    return DetectorView(
        id=f"e-{ts}",
        ts=ts,
        entity=entity,
        domain=Domain.Api,
        kind=EventKind.ApiCall,
        numeric={"request_rate": rate, "payload_bytes": payload},
        categorical={"geo": geo, "hour_of_day": hour, "device_fingerprint": fingerprint},
    )


def routine(ts):
    return view(ts, rate=float(rng.normal(10, 2)), payload=float(rng.normal(500, 100)))


# A probe that is wrong on every axis: a traffic burst, a huge payload, and
# a country this service has never called from.
def probe(ts):
    return view(ts, rate=320.0, payload=52_000.0, geo="geo-kp", hour="3",
                fingerprint="fp-unknown")


# ----------------------------------------------------------------------------
# The same probe, scored as the baseline matures
# ----------------------------------------------------------------------------
# Anomaly scores are damped by min(event_count / maturity, 1), so the probe
# barely registers against an empty profile and stands out once the habit
# book is established.

print("probe anomaly score as the baseline matures")
print(f"{'events seen':>12}  {'probe score':>11}")
checkpoints = {0, 5, 10, 20, 50}
ts = 0
for count in range(51):
    if count in checkpoints:
        score = assess(profile, peer, probe(ts), cfg).score
        print(f"{count:>12}  {score:>11.3f}")
    update_profile(profile, routine(ts), cfg)
    ts += 60_000

# ----------------------------------------------------------------------------
# Why a single odd feature is not an incident
# ----------------------------------------------------------------------------
# The combined score is the mean of the top three per-feature scores. One
# novel value among several routine ones is diluted by design; it takes a
# pattern of deviations to leave the low-risk band.

routine_now = routine(ts)
one_odd = view(ts, rate=10.0, payload=500.0, geo="geo-kp")

for label, v in [("fully routine event", routine_now),
                 ("novel geo only", one_odd),
                 ("burst + payload + novel geo", probe(ts))]:
    result = assess(profile, peer, v, cfg)
    print(f"\n{label}: score {result.score:.3f}")
    for factor in result.factors[:3]:
        print(f"    {factor.feature:<22} {factor.score:>6.3f}  ({factor.observed})")

# ----------------------------------------------------------------------------
# Habits are probabilities, not allowlists
# ----------------------------------------------------------------------------
# The categorical tables hold decayed frequencies. A value the entity uses
# every day scores near zero; a value seen once long ago scores high again
# as its weight decays.

geo_stat = profile.categorical["geo"]
print("\nlearned geo habit weights (decayed frequencies):")
for value, weight in sorted(geo_stat.counts.items(), key=lambda kv: -kv[1]):
    print(f"    {value:<10} {weight:8.2f}")
print(f"profile covers {profile.event_count} events")
