"""Whitespace word-level tokenizer over a closed vocabulary.

Unknown words map to <unk>; encode wraps every sequence in <bos>...<eos>
and pads batches with <pad>.  The closed toy vocabulary makes generation
exactly checkable.
"""

import torch

SPECIAL_TOKENS = ("<pad>", "<bos>", "<eos>", "<unk>")
PAD_ID, BOS_ID, EOS_ID, UNK_ID = 0, 1, 2, 3


class WordTokenizer:
    def __init__(self, words):
        seen = []
        for w in words:
            if w not in seen and w not in SPECIAL_TOKENS:
                seen.append(w)
        self.vocab = list(SPECIAL_TOKENS) + seen
        self.token_to_id = {tok: i for i, tok in enumerate(self.vocab)}

    @property
    def vocab_size(self):
        return len(self.vocab)

    def word_ids(self, text):
        return [self.token_to_id.get(w, UNK_ID) for w in text.split()]

    def encode(self, text, max_len):
        """[BOS] + word ids + [EOS], truncated to max_len total tokens."""
        ids = self.word_ids(text)[: max_len - 2]
        return [BOS_ID] + ids + [EOS_ID]

    def encode_batch(self, texts, max_len):
        """Returns (ids (B,L) long, mask (B,L) bool); mask is True on real tokens."""
        encoded = [self.encode(t, max_len) for t in texts]
        length = max(len(e) for e in encoded)
        ids = torch.full((len(encoded), length), PAD_ID, dtype=torch.long)
        mask = torch.zeros((len(encoded), length), dtype=torch.bool)
        for i, e in enumerate(encoded):
            ids[i, : len(e)] = torch.tensor(e, dtype=torch.long)
            mask[i, : len(e)] = True
        return ids, mask

    def decode(self, ids):
        words = []
        for i in ids:
            i = int(i)
            if i == EOS_ID:
                break
            if i in (PAD_ID, BOS_ID):
                continue
            words.append(self.vocab[i])
        return " ".join(words)
