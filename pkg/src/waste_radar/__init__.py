"""Software development waste measures computed from GitHub repository metadata."""

from .backlog_analysis import backlog_inversion, ffr_bins, inflow_outflow, pr_rejection_rate
from .fork_analysis import classify_forks, is_active, is_backup, kmeans_two, split_contribution
from .snapshot import (
    ForkRecord,
    IssueKind,
    IssueRecord,
    LabelMapping,
    Priority,
    PullRecord,
    RepoRef,
    RepoSnapshot,
    classify_issue,
    load_snapshot,
    save_snapshot,
)

__version__ = "0.1.0"
