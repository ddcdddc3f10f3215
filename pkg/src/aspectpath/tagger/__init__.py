from .crf import (LABELS, CRFError, CRFModel, forward_backward, load_model, save_model, train_crf,
                  viterbi_decode)
from .templates import baseline_templates, stem

__all__ = ["LABELS", "CRFError", "CRFModel", "baseline_templates", "forward_backward", "load_model",
           "save_model", "stem", "train_crf", "viterbi_decode"]
