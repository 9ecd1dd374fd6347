from .hyper import ContrastiveLogit, HyperParams
from .losses import LossTerms, bce_loss, contrastive_loss, l2_penalty, total_loss
from .optimizer import AdamState, adam_step, backward
from .gradcheck import GradientCheckReport, gradient_check, relative_error
from .loop import EpochRecord, FitResult, fit, initial_params, train_step
