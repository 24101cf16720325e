"""Print the derived columns for the ten-repository study from its raw counts.

Fork percentages, the diversification index and the unmerged/merged ratio are
recomputed from counts and rendered with the package formatter, so the output
can be compared line by line with the published numbers.
"""

from waste_radar.backlog_analysis import PrRejectionReport
from waste_radar.fork_analysis import DiversificationReport, ForkClass, ForkDistribution
from waste_radar.reporting import fmt4, text_table

# (active, backup, potentially stale, stale), (contributing, independent), (merged, unmerged)
STUDY = {
    "R0": ((1653, 140646, 2440, 3157), (23, 1605), (8712, 6302)),
    "R1": ((1331, 36550, 1707, 2576), (132, 1066), (816, 15795)),
    "R2": ((315, 8900, 694, 541), (64, 187), (58194, 20381)),
    "R3": ((275, 18692, 738, 456), (14, 246), (825, 632)),
    "R4": ((837, 41674, 1685, 1527), (114, 609), (3549, 23409)),
    "R5": ((951, 12738, 2937, 1766), (387, 177), (54913, 16570)),
    "R6": ((257, 16132, 480, 415), (22, 213), (4488, 1108)),
    "R7": ((902, 101316, 2027, 1522), (74, 753), (12050, 2732)),
    "R8": ((712, 7790, 3477, 1335), (32, 648), (861, 505)),
    "R9": ((318, 11938, 1030, 564), (58, 202), (2447, 1550)),
}
ORDER = (ForkClass.ACTIVE, ForkClass.BACKUP, ForkClass.POTENTIALLY_STALE, ForkClass.STALE)


def main() -> None:
    forks, pdi, prr, summary = [], [], [], []
    for name, (fork_counts, (contributing, independent), (merged, unmerged)) in STUDY.items():
        dist = ForkDistribution.from_counts(*fork_counts)
        div = DiversificationReport(contributing, independent)
        rej = PrRejectionReport(merged, unmerged)
        forks.append((name, *(fmt4(dist.fraction(c)) for c in ORDER)))
        pdi.append((name, str(contributing), str(independent), fmt4(div.pdi)))
        prr.append((name, str(merged), str(unmerged), fmt4(rej.ratio)))
        summary.append((name, fmt4(dist.stale_and_potentially_stale), fmt4(div.pdi), fmt4(rej.ratio)))
    print(text_table(("Project", "Active %", "Backup %", "Potentially Stale %", "Stale %"), forks))
    print(text_table(("Project", "Contributing", "Independent", "PDI"), pdi))
    print(text_table(("Project", "Merged", "Unmerged", "Ratio"), prr))
    print(text_table(("Project", "Stale & Potentially Stale %", "PDI", "Unmerged / Merged"), summary))


if __name__ == "__main__":
    main()
