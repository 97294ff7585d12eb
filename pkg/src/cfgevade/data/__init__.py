# Init for cfgevade.data package
from .loaders import CorpusLoader, load_cfg, load_corpus, save_corpus, linearize_corpus
from .dataset_stats import function_frequency, function_frequency_by_label
