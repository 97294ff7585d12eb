# Init for cfgevade.attribution package
from .integrated_gradients import (
    AttributionReport, TokenScore, WordScore,
    integrated_gradients, word_attributions, positive_words, explain, target_delta,
)
