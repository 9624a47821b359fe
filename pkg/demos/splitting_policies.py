"""Compare the two splitting policies on a skewed BOOKS-shaped dataset.

    python demos/splitting_policies.py [ntuples]
"""

import sys

from gridrel.experiment import ATTR_NAMES, DatasetSpec, run_experiment


def main():
    n = int(sys.argv[1]) if len(sys.argv) > 1 else 2000
    report = run_experiment(DatasetSpec(ntuples=n))
    print(f"{'relation':<11}{'policy':<12}{'occupancy':>10}{'redundancy':>12}  partitions")
    for s in report.structure:
        parts = " ".join(f"{a}={s['partitions'][a]}" for a in ATTR_NAMES if a in s["partitions"])
        print(f"{s['relation']:<11}{s['policy']:<12}{s['occupancy']:>10.0%}"
              f"{s['redundancy']:>12.2f}  {parts}")
    print()
    for q in report.queries:
        print(f"{q['relation']:<11}{q['policy']:<12}{q['dir_reads'] + q['data_reads']:>4} reads  "
              f"{q['query']}")


if __name__ == "__main__":
    main()
