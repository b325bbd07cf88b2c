"""
Three security models, one hostile scenario
===========================================

The flagship scenario throws six injected campaigns — API abuse,
credential stuffing (which later returns for a second wave), lateral
movement, and a zero-day-style anomaly that matches no signature — at
three tenants over two simulated hours. The identical event stream, seed
for seed, is answered by three models:

* static  -- fixed thresholds plus a signature pack, no learning
* ml      -- behavioral anomaly scoring with a hard-coded response map
* agentic -- baselines + trust + shared indicators + learning response
             agents + autonomous rule synthesis

Every number below is deterministic given the seed list.

Run it:  python3 demos/06_model_comparison.py
"""

import textwrap
import time
from importlib import resources

from sentinelsim.config import EngineConfig
from sentinelsim.events import load_scenario
from sentinelsim.sim import comparison_report, run, run_report

MODELS = ("static", "ml", "agentic")
SEEDS = (1, 2, 3)

spec = load_scenario(resources.files("sentinelsim").joinpath("scenarios/default.json").read_text())
cfg = EngineConfig()

t0 = time.perf_counter()
logs = {(m, s): run(spec, model=m, seed=s, cfg=cfg) for m in MODELS for s in SEEDS}
reports = {key: run_report(log, cfg) for key, log in logs.items()}
wall = time.perf_counter() - t0
events = reports[("agentic", 1)]["events"]
print(f"{len(logs)} runs x {events} events in {wall:.1f}s wall\n")

# ----------------------------------------------------------------------------
# Headline detection table (mean over seeds)
# ----------------------------------------------------------------------------

comparison = comparison_report(list(logs.values()), cfg)
models_out = comparison["models"]

print(f"{'model':<8} {'precision':>9} {'recall':>7} {'f1':>6} {'adapt':>6} {'rules':>6} {'lat ms':>7}")
for m in MODELS:
    agg = models_out[m]
    adapt = agg["mean_adaptability"]
    rules = sum(reports[(m, s)]["learned_rules"] for s in SEEDS) / len(SEEDS)
    print(f"{m:<8} {agg['mean_precision']:>9.3f} {agg['mean_recall']:>7.3f} "
          f"{agg['mean_f1']:>6.3f} {adapt if adapt is not None else 0.0:>6.2f} "
          f"{rules:>6.1f} {agg['latency']['mean']:>7.0f}")

# ----------------------------------------------------------------------------
# Where the recall comes from: per-family breakdown
# ----------------------------------------------------------------------------
# The baselines hold their own against campaigns they were tuned for. The
# zero-day row is the separator: nothing in a signature pack or a fixed
# threshold fires on an attack that is only *different*, while a model
# judging events against each entity's own learned routine does.

print(f"\n{'attack family':<20}" + "".join(f"{m:>9}" for m in MODELS))
families = sorted(models_out["agentic"]["per_family_recall"])
for fam in families:
    row = "".join(f"{models_out[m]['per_family_recall'][fam]:>9.2f}" for m in MODELS)
    print(f"{fam:<20}{row}")

# ----------------------------------------------------------------------------
# The second wave, and who was ready for it
# ----------------------------------------------------------------------------
# The credential-stuffing campaign comes back 45 simulated minutes after
# its first wave ends. Adaptability scores the fraction of second-wave
# events answered at mitigation strength by a rule synthesized *before*
# the wave began. Models that cannot write rules score zero by definition.

for m in MODELS:
    a = models_out[m]["mean_adaptability"]
    print(f"{m:<8} adaptability {a if a is not None else 0.0:.2f}")

agentic_rep = reports[("agentic", 1)]
rule_lat = agentic_rep["latency"].get("rule")
agent_lat = agentic_rep["latency"]["agent"]
print(f"\nseed 1, agentic decision paths: "
      f"agent {agent_lat['count']} @ {agent_lat['mean']:.0f}ms, "
      f"rule {rule_lat['count']} @ {rule_lat['mean']:.0f}ms")
# Matching a synthesized rule skips profiling, fusion, and the bandit —
# that is the latency dividend of writing the rule down.

# ----------------------------------------------------------------------------
# What the comparison report is willing to claim
# ----------------------------------------------------------------------------

comp = comparison["comparisons"]
print(f"\nf1 ranking       : {' > '.join(comp['f1_ranking'])}")
print(f"latency ranking  : {' < '.join(comp['latency_ranking'])}")
print(f"ordinal ordering agentic > ml > static holds on "
      f"{comp['ordinal_seed_fraction']:.0%} of seeds")
print(f"f1 delta (agentic - static): {comp['f1_delta_agentic_minus_static']:+.3f}")
print(f"\n{comp['adaptability_note']}")

print("\ncaveats:")
for caveat in comparison["caveats"]:
    print(textwrap.fill(caveat, width=74, initial_indent="  - ", subsequent_indent="    "))
