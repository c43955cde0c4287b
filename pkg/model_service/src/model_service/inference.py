"""Prediction over a loaded artifact.

Texts are tokenized without special tokens, truncated with the shared
kept-index arithmetic against a budget of max_len minus the two special
positions, then wrapped in [CLS] ... [SEP]. Probabilities are a softmax
over the classifier logits; the label is the argmax with ties broken
toward the lowest label id. Inference runs single-threaded in eval mode so
identical batches yield identical probabilities.
"""

from __future__ import annotations

import torch

from .modeling import CLS, PAD, SEP
from .truncation import TRUNCATION_METHODS, kept_indices

DEFAULT_MAX_LEN = 512
SPECIAL_POSITIONS = 2


class Predictor:
    def __init__(self, model, tokenizer, deterministic: bool = True):
        self.model = model
        self.tokenizer = tokenizer
        self.model.eval()
        if deterministic:
            torch.set_num_threads(1)
        self._cls_id = tokenizer.token_to_id(CLS)
        self._sep_id = tokenizer.token_to_id(SEP)
        self._pad_id = tokenizer.token_to_id(PAD)
        if None in (self._cls_id, self._sep_id, self._pad_id):
            raise ValueError("tokenizer lacks [CLS]/[SEP]/[PAD] entries")

    def encode(self, text: str, truncation: str, max_len: int) -> list[int]:
        if truncation not in TRUNCATION_METHODS:
            raise ValueError(f"unknown truncation method {truncation!r}")
        if max_len < SPECIAL_POSITIONS + 1:
            raise ValueError(f"max_len must be > {SPECIAL_POSITIONS}")
        ids = self.tokenizer.encode(text).ids
        budget = max_len - SPECIAL_POSITIONS
        if len(ids) > budget:
            ids = [ids[i] for i in kept_indices(len(ids), budget, truncation)]
        return [self._cls_id] + ids + [self._sep_id]

    @torch.no_grad()
    def predict(
        self,
        texts: list[str],
        truncation: str = "tail",
        max_len: int = DEFAULT_MAX_LEN,
        batch_size: int = 32,
    ) -> tuple[list[int], list[list[float]]]:
        labels: list[int] = []
        probs: list[list[float]] = []
        for start in range(0, len(texts), batch_size):
            chunk = texts[start : start + batch_size]
            encoded = [self.encode(t, truncation, max_len) for t in chunk]
            width = max(len(e) for e in encoded)
            input_ids = torch.full((len(encoded), width), self._pad_id, dtype=torch.long)
            attention = torch.zeros((len(encoded), width), dtype=torch.long)
            for row, ids in enumerate(encoded):
                input_ids[row, : len(ids)] = torch.tensor(ids, dtype=torch.long)
                attention[row, : len(ids)] = 1
            logits = self.model(input_ids=input_ids, attention_mask=attention).logits
            softmax = torch.softmax(logits.double(), dim=-1)
            for row in softmax:
                values = row.tolist()
                total = sum(values)
                values = [v / total for v in values]
                best = 0
                for i in range(1, len(values)):
                    if values[i] > values[best]:
                        best = i
                labels.append(best)
                probs.append(values)
        return labels, probs
