#!/usr/bin/env python3
# Score an indistinguishability survey (here synthesized with failure
# counts mirroring a plausible study) and an n-gram overlap example.

from versecraft.evalharness import (
    SurveyRecord,
    bleu,
    chi_square_test,
    contingency_table,
    failure_ratios,
    rating_summary,
)

records = []
for i in range(100):
    records.append(SurveyRecord(
        f"p{i % 31}", f"human-{i}", "human",
        "machine" if i < 41 else "human", 4, 3, 4))
for i in range(100):
    records.append(SurveyRecord(
        f"p{i % 31}", f"machine-{i}", "machine",
        "human" if i < 48 else "machine", 4, 3, 3))

human_fail, machine_fail = failure_ratios(records)
print(f"failure ratio on human poems:   {human_fail:.2f}")
print(f"failure ratio on machine poems: {machine_fail:.2f}")

table = contingency_table(records)
stat, dof, p = chi_square_test(table)
print(f"contingency table (identified, missed): {table}")
print(f"chi-square {stat:.3f}, dof {dof}, p {p:.3f}")
if p > 0.05:
    print("-> judges could not tell the sources apart at the 0.05 level")

print("\nratings (mean +/- sd):")
for source, measures in rating_summary(records).items():
    row = ", ".join(f"{m} {v[0]:.2f}+/-{v[1]:.2f}" for m, v in measures.items())
    print(f"  {source}: {row}")

print("\nn-gram overlap:")
refs = ["the tyger burns in forests of the night"]
for cand in (refs[0], "the tyger burns bright", "a lamb sleeps in the snow"):
    print(f"  bleu {bleu(cand, refs):.3f}  {cand!r}")
