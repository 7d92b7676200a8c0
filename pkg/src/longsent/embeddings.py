"""CBOW word embeddings trained with negative sampling.

`CbowEmbedder` follows the fit/transform estimator protocol: fit trains
token vectors on an iterable of token sequences (each cleaned post is
one sentence; contexts never cross posts), transform averages a
sentence's in-vocabulary input vectors into a document vector.

Training is plain SGD over (context, target) positions. For each target
the up-to-`window` tokens on each side (truncated at sentence edges) are
averaged into a hidden vector h, and the target plus k noise tokens
drawn proportionally to count^0.75 are trained as a binary
discrimination with sigmoid losses. Single-worker mode is bit-for-bit
deterministic for a fixed seed; multi-worker mode updates the shared
matrices lock-free and waives determinism.
"""

import hashlib
import logging
import threading
from collections import Counter

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.exceptions import NotFittedError

from .errors import DataError, ModelFormatError
from .validation import check_positive_int

logger = logging.getLogger(__name__)

MODEL_FORMAT_VERSION = 1

#: Exponent flattening the unigram distribution for noise draws.
NOISE_POWER = 0.75


def _as_token_lists(sentences):
    out = []
    for s in sentences:
        tokens = s.tokens if hasattr(s, "tokens") else s
        out.append(list(tokens))
    return out


def build_vocab(sentences, min_count=1):
    """Vocabulary of tokens with frequency >= min_count.

    Ordered by descending frequency, ties broken lexicographically.
    Returns (tokens, counts). Fatal if nothing survives the threshold.
    """
    sentences = _as_token_lists(sentences)
    if not sentences:
        raise DataError("cannot build a vocabulary from an empty corpus")
    freq = Counter()
    for tokens in sentences:
        freq.update(tokens)
    kept = sorted(
        ((t, c) for t, c in freq.items() if c >= min_count),
        key=lambda tc: (-tc[1], tc[0]),
    )
    if not kept:
        raise DataError(
            f"vocabulary is empty after applying min_count={min_count}"
        )
    tokens = [t for t, _ in kept]
    counts = np.array([c for _, c in kept], dtype=np.int64)
    return tokens, counts


def _sigmoid(x):
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def cbow_loss_grad(input_vectors, output_vectors, context_ids, target_id, negative_ids):
    """Loss and analytic gradients for one training position.

    h is the mean of the context rows of `input_vectors`; the loss is
    -log sigma(u_target . h) - sum_k log sigma(-u_k . h).

    Returns (loss, grad_context, grad_out) where `grad_context` (dim,)
    is the gradient w.r.t. each context row individually (a row listed
    twice in `context_ids` accumulates it twice) and `grad_out`
    (1+k, dim) holds gradients for the rows [target_id, *negative_ids],
    likewise accumulated on duplicates.
    """
    context_ids = np.asarray(context_ids, dtype=np.int64)
    h = input_vectors[context_ids].mean(axis=0)
    out_ids = np.concatenate(([target_id], np.asarray(negative_ids, dtype=np.int64)))
    u = output_vectors[out_ids]
    scores = u @ h
    # -log sigma(s0) - sum log(1 - sigma(sk)), in a stable form
    loss = np.logaddexp(0.0, -scores[0]) + np.logaddexp(0.0, scores[1:]).sum()
    g = _sigmoid(scores)
    g[0] -= 1.0
    grad_out = g[:, None] * h[None, :]
    grad_context = (g @ u) / len(context_ids)
    return loss, grad_context, grad_out


class CbowEmbedder(BaseEstimator, TransformerMixin):
    """Word-embedding trainer and document-vector transformer.

    Parameters follow common word2vec defaults: 100-dim vectors, a
    5-token window, 5 noise samples, 5 epochs, and a learning rate
    decayed linearly from `initial_lr` to `final_lr` over all positions.
    """

    def __init__(
        self,
        dim=100,
        window=5,
        min_count=1,
        negative_samples=5,
        epochs=5,
        initial_lr=0.025,
        final_lr=0.0001,
        seed=0,
        workers=1,
    ):
        self.dim = dim
        self.window = window
        self.min_count = min_count
        self.negative_samples = negative_samples
        self.epochs = epochs
        self.initial_lr = initial_lr
        self.final_lr = final_lr
        self.seed = seed
        self.workers = workers

    def _validate_params(self):
        check_positive_int(self.dim, "dim")
        check_positive_int(self.window, "window")
        check_positive_int(self.min_count, "min_count")
        check_positive_int(self.negative_samples, "negative_samples")
        check_positive_int(self.epochs, "epochs")
        check_positive_int(self.workers, "workers")
        if not 0 < self.final_lr <= self.initial_lr:
            raise DataError(
                f"need 0 < final_lr <= initial_lr, got "
                f"{self.final_lr} / {self.initial_lr}"
            )

    def fit(self, sentences, y=None):
        self._validate_params()
        sentences = _as_token_lists(sentences)
        self.vocab_, self.counts_ = build_vocab(sentences, self.min_count)
        self.token_index_ = {t: i for i, t in enumerate(self.vocab_)}

        # noise distribution: count^0.75, as a cumulative table
        weights = self.counts_.astype(np.float64) ** NOISE_POWER
        self._noise_cum = np.cumsum(weights / weights.sum())

        rng = np.random.default_rng(self.seed)
        scale = 0.5 / self.dim
        self.input_vectors_ = rng.uniform(
            -scale, scale, size=(len(self.vocab_), self.dim)
        )
        self.output_vectors_ = np.zeros((len(self.vocab_), self.dim))

        id_sentences = [
            np.array([self.token_index_[t] for t in s if t in self.token_index_],
                     dtype=np.int64)
            for s in sentences
        ]
        id_sentences = [ids for ids in id_sentences if len(ids) > 0]
        total_positions = self.epochs * sum(len(ids) for ids in id_sentences)
        if total_positions == 0:
            raise DataError("no trainable positions in the corpus")

        self.epoch_losses_ = []
        if self.workers == 1:
            self._train_single(id_sentences, total_positions, rng)
        else:
            self._train_threaded(id_sentences, total_positions)
        for epoch, loss in enumerate(self.epoch_losses_):
            logger.debug("epoch %d mean loss %.6f", epoch, loss)
        return self

    def _lr_at(self, processed, total):
        lr = self.initial_lr * (1.0 - processed / total)
        return max(self.final_lr, lr)

    def _draw_negatives(self, rng, target_id):
        negs = np.searchsorted(
            self._noise_cum, rng.random(self.negative_samples)
        )
        for slot in range(len(negs)):
            tries = 0
            while negs[slot] == target_id and tries < 10:
                negs[slot] = np.searchsorted(self._noise_cum, rng.random())
                tries += 1
        return negs[negs != target_id]

    def _train_sentences(self, id_sentences, total, rng, counter):
        """One worker's pass over its sentences for all epochs.

        `counter` is a single-element list used as a shared processed-
        positions count; racy under threads, which multi-worker mode
        accepts by contract.
        """
        inp, out = self.input_vectors_, self.output_vectors_
        window = self.window
        for epoch in range(self.epochs):
            loss_sum = 0.0
            n_positions = 0
            for ids in id_sentences:
                n = len(ids)
                for i in range(n):
                    lr = self._lr_at(counter[0], total)
                    counter[0] += 1
                    lo = i - window if i >= window else 0
                    ctx = np.concatenate((ids[lo:i], ids[i + 1 : i + 1 + window]))
                    if len(ctx) == 0:
                        continue
                    target = ids[i]
                    negs = self._draw_negatives(rng, target)
                    loss, grad_ctx, grad_out = cbow_loss_grad(
                        inp, out, ctx, target, negs
                    )
                    if not np.isfinite(loss):
                        raise DataError(
                            f"non-finite training loss at epoch {epoch}, "
                            f"position {n_positions}"
                        )
                    out_ids = np.concatenate(([target], negs))
                    np.add.at(out, out_ids, -lr * grad_out)
                    np.add.at(inp, ctx, -lr * grad_ctx)
                    loss_sum += loss
                    n_positions += 1
            yield loss_sum, n_positions

    def _train_single(self, id_sentences, total, rng):
        counter = [0]
        for loss_sum, n_positions in self._train_sentences(
            id_sentences, total, rng, counter
        ):
            self.epoch_losses_.append(loss_sum / max(n_positions, 1))

    def _train_threaded(self, id_sentences, total):
        shards = [id_sentences[w :: self.workers] for w in range(self.workers)]
        shards = [s for s in shards if s]
        counter = [0]
        per_worker = [[] for _ in shards]

        def run(worker_id, shard):
            rng = np.random.default_rng(self.seed + 1 + worker_id)
            for stats in self._train_sentences(shard, total, rng, counter):
                per_worker[worker_id].append(stats)

        threads = [
            threading.Thread(target=run, args=(w, shard))
            for w, shard in enumerate(shards)
        ]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        for epoch in range(self.epochs):
            loss = sum(pw[epoch][0] for pw in per_worker)
            count = sum(pw[epoch][1] for pw in per_worker)
            self.epoch_losses_.append(loss / max(count, 1))

    def _check_fitted(self):
        if not hasattr(self, "input_vectors_"):
            raise NotFittedError("CbowEmbedder is not fitted yet")

    def doc_vector(self, tokens):
        """Mean input vector over in-vocabulary tokens (zeros if none)."""
        self._check_fitted()
        rows = [self.token_index_[t] for t in tokens if t in self.token_index_]
        if not rows:
            return np.zeros(self.dim)
        return self.input_vectors_[rows].mean(axis=0)

    def transform(self, sentences):
        self._check_fitted()
        sentences = _as_token_lists(sentences)
        if not sentences:
            return np.zeros((0, self.dim))
        return np.stack([self.doc_vector(s) for s in sentences])

    # -- serialization ---------------------------------------------------

    def _serialize_lines(self):
        cfg = self.get_params()
        cfg_text = " ".join(f"{k}={cfg[k]!r}" for k in sorted(cfg))
        lines = [
            "# longsent cbow model",
            f"# config {cfg_text}",
            "# counts " + " ".join(str(int(c)) for c in self.counts_),
            f"W2V {len(self.vocab_)} {self.dim} {MODEL_FORMAT_VERSION}",
        ]
        for token, row in zip(self.vocab_, self.input_vectors_):
            lines.append(token + " " + " ".join(repr(float(v)) for v in row))
        lines.append("# output-vectors")
        for token, row in zip(self.vocab_, self.output_vectors_):
            lines.append("# " + token + " " + " ".join(repr(float(v)) for v in row))
        return lines

    def save(self, path):
        self._check_fitted()
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(self._serialize_lines()) + "\n")

    def content_hash(self):
        self._check_fitted()
        h = hashlib.sha256()
        for line in self._serialize_lines():
            h.update(line.encode("utf-8") + b"\n")
        return h.hexdigest()

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding="utf-8") as fh:
                lines = fh.read().splitlines()
        except OSError as exc:
            raise ModelFormatError(f"cannot read model file {path}: {exc}") from exc

        config = {}
        counts_line = None
        header = None
        body_start = None
        for lineno, line in enumerate(lines):
            if line.startswith("# config "):
                config = _parse_config_comment(line[len("# config ") :], path, lineno + 1)
            elif line.startswith("# counts "):
                counts_line = line[len("# counts ") :]
            elif line.startswith("#") or not line.strip():
                continue
            else:
                header = line
                body_start = lineno + 1
                break
        if header is None or not header.startswith("W2V "):
            raise ModelFormatError(f"{path}: missing 'W2V' header line")
        parts = header.split()
        if len(parts) != 4:
            raise ModelFormatError(f"{path}: malformed header {header!r}")
        try:
            vocab_size, dim, version = int(parts[1]), int(parts[2]), int(parts[3])
        except ValueError as exc:
            raise ModelFormatError(f"{path}: malformed header {header!r}") from exc
        if version != MODEL_FORMAT_VERSION:
            raise ModelFormatError(
                f"{path}: unsupported format version {version} "
                f"(expected {MODEL_FORMAT_VERSION})"
            )

        model = cls(**config) if config else cls(dim=dim)
        model._validate_params()
        if model.dim != dim:
            raise ModelFormatError(
                f"{path}: header dim {dim} disagrees with config dim {model.dim}"
            )

        vocab = []
        vectors = np.zeros((vocab_size, dim))
        row = 0
        lineno = body_start
        while row < vocab_size:
            if lineno >= len(lines):
                raise ModelFormatError(
                    f"{path}: truncated at line {lineno + 1}: expected "
                    f"{vocab_size} vector rows, found {row}"
                )
            line = lines[lineno]
            lineno += 1
            if not line.strip():
                continue
            if line.startswith("#"):
                raise ModelFormatError(
                    f"{path}: truncated at line {lineno}: expected "
                    f"{vocab_size} vector rows, found {row}"
                )
            fields = line.split(" ")
            token, values = fields[0], fields[1:]
            if len(values) != dim:
                raise ModelFormatError(
                    f"{path}: row {row + 1} (token {token!r}, line {lineno}) "
                    f"has {len(values)} values, expected dim {dim}"
                )
            try:
                vectors[row] = [float(v) for v in values]
            except ValueError as exc:
                raise ModelFormatError(
                    f"{path}: row {row + 1} (line {lineno}): {exc}"
                ) from exc
            if token in vocab[:row]:
                raise ModelFormatError(f"{path}: duplicate token {token!r}")
            vocab.append(token)
            row += 1

        output_vectors = np.zeros((vocab_size, dim))
        out_row = 0
        in_output_section = False
        for line in lines[lineno:]:
            if line.strip() == "# output-vectors":
                in_output_section = True
                continue
            if not in_output_section or not line.startswith("# "):
                continue
            fields = line[2:].split(" ")
            token, values = fields[0], fields[1:]
            if out_row >= vocab_size or token != vocab[out_row]:
                raise ModelFormatError(
                    f"{path}: output-vector row for {token!r} does not match "
                    f"vocabulary order"
                )
            if len(values) != dim:
                raise ModelFormatError(
                    f"{path}: output-vector row {out_row + 1} has "
                    f"{len(values)} values, expected dim {dim}"
                )
            output_vectors[out_row] = [float(v) for v in values]
            out_row += 1
        if in_output_section and out_row != vocab_size:
            raise ModelFormatError(
                f"{path}: truncated output-vector section: expected "
                f"{vocab_size} rows, found {out_row}"
            )

        counts = np.ones(vocab_size, dtype=np.int64)
        if counts_line is not None:
            values = counts_line.split()
            if len(values) != vocab_size:
                raise ModelFormatError(
                    f"{path}: counts comment has {len(values)} entries, "
                    f"expected {vocab_size}"
                )
            counts = np.array([int(v) for v in values], dtype=np.int64)

        model.vocab_ = vocab
        model.counts_ = counts
        model.token_index_ = {t: i for i, t in enumerate(vocab)}
        model.input_vectors_ = vectors
        model.output_vectors_ = output_vectors
        weights = counts.astype(np.float64) ** NOISE_POWER
        model._noise_cum = np.cumsum(weights / weights.sum())
        model.epoch_losses_ = []
        return model


def _parse_config_comment(text, path, lineno):
    config = {}
    for item in text.split():
        if "=" not in item:
            raise ModelFormatError(
                f"{path}:{lineno}: malformed config entry {item!r}"
            )
        key, raw = item.split("=", 1)
        try:
            if raw in ("True", "False"):
                value = raw == "True"
            elif any(c in raw for c in ".eE") and not raw.lstrip("-").isdigit():
                value = float(raw)
            else:
                value = int(raw)
        except ValueError as exc:
            raise ModelFormatError(
                f"{path}:{lineno}: malformed config value {item!r}"
            ) from exc
        config[key] = value
    return config
