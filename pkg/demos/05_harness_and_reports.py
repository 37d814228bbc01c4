"""Run verification suites from a config string and render the reports.

Run:  python3 demos/05_harness_and_reports.py
"""

from __future__ import annotations

from tuplewise_clt.harness import emit_report, parse_config, verify_suite

config = parse_config("""
# quick scale; the defaults are 10^6 reps
suites = marginal, binomial, gaussian_mixture
reps = 100000
seed = 1729
""")

result = verify_suite(config)
for record in result.records:
    print(emit_report(record, "text").decode())
print("summary:", result.summary, "status:", result.status)
print("\nCSV for the first suite:\n" + emit_report(result.records[0], "csv").decode())
