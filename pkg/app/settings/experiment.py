# Experiment-level constants: file formats, default file names and the published presets

SPLIT_FORMAT_TAG = "DKSE-SPLIT v1"
CHECKPOINT_FORMAT_TAG = "DKSE-CKPT v1"
CONFIG_FORMAT_TAG = "DKSE-CONFIG v1"

# Files inside a prepared dataset directory
SPLIT_FILENAME = "split.tsv"
IDMAP_FILENAME = "idmaps.tsv"
KG_CACHE_FILENAME = "kg.tsv"
STATS_FILENAME = "stats.txt"

# Files inside a run directory
CHECKPOINT_FILENAME = "model.ckpt"
CONFIG_FILENAME = "run.cfg"
TRAIN_LOG_FILENAME = "train.log"
REPORT_FILENAME = "report.txt"
VALIDATION_REPORT_FILENAME = "validation_report.txt"
TOPK_CSV_FILENAME = "topk.csv"
ABLATION_FILENAME = "ablation.csv"
SWEEP_FILENAME = "sweep.csv"
BENCH_FILENAME = "bench.csv"

# Synthetic generator output
SYNTH_INTERACTIONS_FILENAME = "ratings.tsv"
SYNTH_KG_FILENAME = "kg.tsv"
SYNTH_ALIGNMENT_FILENAME = "alignment.tsv"

# Hyper-parameter rows published for the three benchmark datasets, plus a desk-scale row for
# the default synthetic generator
PRESETS = {
    "lfm-1b": {"l_u": 2, "n_u": 64, "l_v": 1, "n_v": 32, "d": 64, "l2": 1e-6, "n_queries": 6},
    "movielens-1m": {"l_u": 1, "n_u": 32, "l_v": 2, "n_v": 32, "d": 32, "l2": 1e-5, "n_queries": 4},
    "amazon-book": {"l_u": 2, "n_u": 8, "l_v": 3, "n_v": 32, "d": 64, "l2": 1e-5, "n_queries": 4},
    "synthetic": {
        "l_u": 1, "n_u": 8, "l_v": 1, "n_v": 8, "d": 16, "l2": 1e-5, "n_queries": 2,
        "learning_rate": 1e-2, "batch_size": 256, "epochs": 30,
    },
}

# Sensitivity grids
SWEEP_DEPTHS = [1, 2, 3, 4]
SWEEP_FANOUTS = [4, 8, 16, 32, 64]
SWEEP_QUERIES = [1, 2, 4, 6, 8]
SWEEP_L2 = [1e-3, 1e-4, 1e-5, 1e-6, 5e-6, 1e-7]
SWEEP_DIMS = [4, 8, 16, 32, 64]

# Complexity benchmark grid: (depth, fan-out) pairs and embedding sizes
BENCH_SAMPLING = [(1, 4), (1, 16), (2, 8)]
BENCH_DIMS = [8, 16, 32]
