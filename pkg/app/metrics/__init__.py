from .ranking import acc_f1, auc, ndcg_at_k, precision_at_k, topk_rank
from .report import MetricsReport
from .evaluation import EnrichedTables, evaluate_ctr, evaluate_model, evaluate_topk
