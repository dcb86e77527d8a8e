"""Help texts of the command line.

Each subcommand gets a short summary and a longer description with examples.
"""

PROGRAM_DESCRIPTION = """One-class active learning benchmark.

Runs SVDD, SVDDneg and SSAD with ten query strategies over grids of datasets,
initial pools and split strategies, and summarizes the resulting progress curves.
Settings can be overridden with OCAL_* environment variables or a .env file."""


RUN_DESCRIPTION = """Run every feasible cell of a grid document and write the result store.

Inputs:
- config: JSON grid document (datasets, pools, splits, learners, strategies, ...)
- --results-dir: where to write cells; defaults to OCAL_RESULTS_DIR or ./results
- --workers: cells run in parallel; defaults to OCAL_WORKERS or 1
- --audit: store alphas, R², costs and the KKT residual of every fit

Writes one <fingerprint>.jsonl curve and one <fingerprint>.summary.json per cell,
plus manifest.json. Exits with status 1 when any cell failed.

Examples:
- ocal run grids/example.json
- OCAL_WORKERS=4 ocal run grids/example.json --results-dir results/example"""


VALIDATE_DESCRIPTION = """Expand a grid document and report which cells are feasible.

Prints one line per cell: "ok" or "excluded" with the reason (for example a data-based
strategy without labeled inliers, or Pu combined with Si). Exits with status 1 when
any cell is excluded."""


SUMMARIZE_DESCRIPTION = """Aggregate the summaries of a result store into a table.

Inputs:
- results_dir: directory written by "ocal run"
- --group-by: cell attributes to group by (dataset, pool, split, learner, strategy, ...)
- --stat: median or mean
- --summary: summaries to show, e.g. qr,aeq:5,ru:5,ls:5,roq,sq
- --metric: metric the summaries are taken from (mcc, kappa, auc, pauc:<fpr>)

Failed or infeasible groups are shown as "-".

Examples:
- ocal summarize results --group-by strategy --stat median --summary qr
- ocal summarize results --group-by pool strategy --summary aeq:5,roq --metric kappa"""


CURVES_DESCRIPTION = """Write plot-ready progress curves.

One CSV per cell and metric with the columns iteration, value and queried_label,
plus summary.csv with one row per cell."""


LIST_STRATEGIES_DESCRIPTION = "List the query strategies with a one-line description."

LIST_LEARNERS_DESCRIPTION = "List the base learners with a one-line description."
