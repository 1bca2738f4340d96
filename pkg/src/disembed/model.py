"""Embedding networks, the per-tag centroid/proxy bank, and score variants.

The backbone is a relu MLP.  The head is either one dense layer of width d
("dense") or one sub-dense layer of width d/G per notion ("subdense"); with
the subdense head the full embedding is the concatenation of the sub-dense
outputs in notion order.  The centroid bank holds one bias-free weight vector
of length d per tag and serves as proxy and classification centroid
interchangeably.
"""

from __future__ import annotations

import logging
import struct
from dataclasses import dataclass

import numpy as np

from . import autodiff as ad
from .autodiff import Tensor
from .errors import ConfigurationError, GraphError
from .labelspace import LabelSpace

log = logging.getLogger(__name__)

SCORE_VARIANTS = (
    "proxy",
    "proxy-disentangled",
    "classification-plain",
    "classification-normalized",
    "classification-disentangled",
)


@dataclass
class NetConfig:
    input_dim: int
    embedding_dim: int
    hidden: tuple[int, ...] = (128, 128)
    head: str = "dense"  # "dense" | "subdense"
    normalize_output: bool = False

    def __post_init__(self):
        if self.head not in ("dense", "subdense"):
            raise ConfigurationError(f"unknown head kind: {self.head!r}")
        if self.input_dim <= 0 or self.embedding_dim <= 0:
            raise ConfigurationError("dimensions must be positive")


class EmbeddingNet:
    """MLP backbone plus dense or per-notion sub-dense embedding head."""

    def __init__(self, config: NetConfig, space: LabelSpace):
        if config.embedding_dim != space.embedding_dim:
            raise ConfigurationError(
                "net embedding_dim must match the label space"
            )
        self.config = config
        self.space = space
        self.params: dict[str, Tensor] = {}
        dims = [config.input_dim, *config.hidden]
        for i in range(len(dims) - 1):
            self.params[f"W{i}"] = Tensor(
                np.zeros((dims[i], dims[i + 1])), requires_grad=True
            )
            self.params[f"b{i}"] = Tensor(np.zeros(dims[i + 1]), requires_grad=True)
        width = dims[-1]
        if config.head == "dense":
            self.params["H"] = Tensor(
                np.zeros((width, config.embedding_dim)), requires_grad=True
            )
        else:
            block = space.block_size
            for g in range(space.num_notions):
                self.params[f"H{g}"] = Tensor(
                    np.zeros((width, block)), requires_grad=True
                )

    @property
    def n_hidden(self) -> int:
        return len(self.config.hidden)

    def backbone(self, x) -> Tensor:
        """f_{n-1}: graph forward through the relu MLP."""
        h = ad.as_tensor(x)
        for i in range(self.n_hidden):
            h = ad.relu(ad.matmul(h, self.params[f"W{i}"]) + self.params[f"b{i}"])
        return h

    def head_blocks(self, fnm1: Tensor) -> list[Tensor]:
        """Per-notion relu head outputs, each of width d/G, in notion order."""
        if self.config.head == "dense":
            raise ConfigurationError("head_blocks requires the subdense head")
        return [
            ad.relu(ad.matmul(fnm1, self.params[f"H{g}"]))
            for g in range(self.space.num_notions)
        ]

    def full_embedding(self, x) -> Tensor:
        """Pre-normalization full-space embedding as a graph tensor.

        Only the dense head supports an in-graph full embedding; the subdense
        head is consumed block-wise (see score_blocks) and concatenated only
        in the numpy forward.
        """
        if self.config.head != "dense":
            raise ConfigurationError(
                "in-graph full embedding requires the dense head"
            )
        return ad.relu(ad.matmul(self.backbone(x), self.params["H"]))

    # numpy-only forward used by evaluation -------------------------------

    def _np_backbone(self, X: np.ndarray) -> np.ndarray:
        h = np.asarray(X, dtype=np.float64)
        for i in range(self.n_hidden):
            h = np.maximum(
                h @ self.params[f"W{i}"].values + self.params[f"b{i}"].values, 0.0
            )
        return h

    def _np_pre_embedding(self, X: np.ndarray) -> np.ndarray:
        h = self._np_backbone(X)
        if self.config.head == "dense":
            return np.maximum(h @ self.params["H"].values, 0.0)
        blocks = [
            np.maximum(h @ self.params[f"H{g}"].values, 0.0)
            for g in range(self.space.num_notions)
        ]
        return np.concatenate(blocks, axis=-1)


class CentroidBank:
    """One weight vector of length d per tag; no bias terms."""

    def __init__(self, space: LabelSpace):
        self.space = space
        self.weights = Tensor(
            np.zeros((space.num_tags, space.embedding_dim)), requires_grad=True
        )


def init_params(net: EmbeddingNet, bank: CentroidBank | None, seed: int) -> None:
    """Deterministic scaled-uniform init: weights in +-1/sqrt(fan_in)."""
    rng = np.random.default_rng(np.uint64(seed))
    for name in sorted(net.params):
        p = net.params[name]
        if name.startswith("b"):
            p.values = np.zeros_like(p.values)
            continue
        fan_in = p.values.shape[0]
        bound = 1.0 / np.sqrt(fan_in)
        p.values = rng.uniform(-bound, bound, size=p.values.shape)
    if bank is not None:
        fan_in = bank.space.embedding_dim
        bound = 1.0 / np.sqrt(fan_in)
        bank.weights.values = rng.uniform(
            -bound, bound, size=bank.weights.values.shape
        )


def embed(net: EmbeddingNet, x) -> np.ndarray:
    """Forward pass; L2-normalized iff the net was configured to normalize."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    if x.shape[-1] != net.config.input_dim:
        raise ConfigurationError(
            f"input width {x.shape[-1]} != net input_dim {net.config.input_dim}"
        )
    X = x[None, :] if single else x
    E = net._np_pre_embedding(X)
    if net.config.normalize_output:
        norms = np.linalg.norm(E, axis=1, keepdims=True)
        degenerate = norms[:, 0] < ad.NORM_EPS
        if degenerate.any():
            log.warning(
                "%d embedding(s) have (near-)zero norm; guarded normalization "
                "returns them unscaled toward zero",
                int(degenerate.sum()),
            )
        E = E / np.maximum(norms, ad.NORM_EPS)
    return E[0] if single else E


def masked_embed(net: EmbeddingNet, x, notion: str) -> np.ndarray:
    """Pre-normalization embedding Hadamard-multiplied with the notion mask."""
    mask = net.space.mask(notion).vector
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = x[None, :] if single else x
    E = net._np_pre_embedding(X) * mask
    return E[0] if single else E


def _selector(indices: np.ndarray, width: int) -> np.ndarray:
    """One-hot selection matrix S with S[i, indices[i]] = 1."""
    S = np.zeros((len(indices), width))
    S[np.arange(len(indices)), indices] = 1.0
    return S


def score_blocks(
    net: EmbeddingNet, bank: CentroidBank, x, variant: str
) -> list[tuple[np.ndarray, Tensor]]:
    """Graph-tensors of per-tag sigmoid scores, grouped into column blocks.

    Returns (tag_indices, scores) pairs whose indices partition the tag set.
    Non-disentangled variants yield a single block; disentangled variants
    yield one block per notion so that each tag is scored in the subspace of
    its own notion.
    """
    if variant not in SCORE_VARIANTS:
        raise ConfigurationError(f"unknown score variant: {variant!r}")
    space = net.space
    C = bank.weights
    needs_subdense = variant == "classification-disentangled"
    if needs_subdense and net.config.head != "subdense":
        raise ConfigurationError(f"{variant} requires the subdense head")
    if not needs_subdense and net.config.head != "dense":
        raise ConfigurationError(f"{variant} requires the dense head")

    x = ad.as_tensor(np.atleast_2d(np.asarray(x, dtype=np.float64)))
    all_tags = np.arange(space.num_tags)

    if variant == "classification-plain":
        F = net.full_embedding(x)
        return [(all_tags, ad.sigmoid(ad.matmul(F, C, transpose_b=True)))]

    if variant in ("proxy", "classification-normalized"):
        U = ad.l2_normalize(net.full_embedding(x))
        return [(all_tags, ad.sigmoid(ad.matmul(U, C, transpose_b=True)))]

    if variant == "proxy-disentangled":
        F = net.full_embedding(x)
        blocks = []
        for notion in space.notions:
            mask = space.mask(notion.name).vector
            tag_idx = space.tag_indices_of_notion(notion.name)
            Um = ad.l2_normalize(ad.mul(F, Tensor(mask)))
            rows = Tensor(_selector(tag_idx, space.num_tags))
            Cm = ad.mul(ad.matmul(rows, C), Tensor(mask))
            blocks.append((tag_idx, ad.sigmoid(ad.matmul(Um, Cm, transpose_b=True))))
        return blocks

    # classification-disentangled: sub-dense route (the canonical path)
    fnm1 = net.backbone(x)
    head = net.head_blocks(fnm1)
    blocks = []
    for g, notion in enumerate(space.notions):
        tag_idx = space.tag_indices_of_notion(notion.name)
        U = ad.l2_normalize(head[g])
        rows = Tensor(_selector(tag_idx, space.num_tags))
        cols = Tensor(
            _selector(
                np.arange(space.block_slice(notion.name).start,
                          space.block_slice(notion.name).stop),
                space.embedding_dim,
            )
        )
        # restrict each centroid to its notion's mask support
        Csub = ad.matmul(ad.matmul(rows, C), cols, transpose_b=True)
        blocks.append((tag_idx, ad.sigmoid(ad.matmul(U, Csub, transpose_b=True))))
    return blocks


def class_scores(
    net: EmbeddingNet, bank: CentroidBank, x, variant: str
) -> np.ndarray:
    """Per-tag scores in (0, 1), assembled into a (N, tags) array."""
    x = np.asarray(x, dtype=np.float64)
    single = x.ndim == 1
    X = np.atleast_2d(x)
    out = np.zeros((X.shape[0], net.space.num_tags))
    for tag_idx, block in score_blocks(net, bank, X, variant):
        out[:, tag_idx] = block.values
    return out[0] if single else out


# ---------------------------------------------------------------------------
# flat binary parameter files: magic, version, named shapes, little-endian
# row-major float64 payload in header order.

_MAGIC = b"DEMB"
_VERSION = 1


def save_params(path, params: dict[str, np.ndarray | Tensor]) -> None:
    names = sorted(params)
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<II", _VERSION, len(names)))
        arrays = []
        for name in names:
            a = params[name]
            a = np.ascontiguousarray(
                a.values if isinstance(a, Tensor) else a, dtype="<f8"
            )
            arrays.append(a)
            enc = name.encode("utf-8")
            fh.write(struct.pack("<H", len(enc)))
            fh.write(enc)
            fh.write(struct.pack("<B", a.ndim))
            fh.write(struct.pack(f"<{a.ndim}I", *a.shape))
        for a in arrays:
            fh.write(a.tobytes())


def load_params(path) -> dict[str, np.ndarray]:
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ConfigurationError(f"{path}: not a parameter file")
        version, count = struct.unpack("<II", fh.read(8))
        if version != _VERSION:
            raise ConfigurationError(f"{path}: unsupported version {version}")
        shapes = []
        for _ in range(count):
            (nlen,) = struct.unpack("<H", fh.read(2))
            name = fh.read(nlen).decode("utf-8")
            (ndim,) = struct.unpack("<B", fh.read(1))
            shape = struct.unpack(f"<{ndim}I", fh.read(4 * ndim))
            shapes.append((name, shape))
        out = {}
        for name, shape in shapes:
            n = int(np.prod(shape)) if shape else 1
            buf = fh.read(8 * n)
            if len(buf) != 8 * n:
                raise ConfigurationError(f"{path}: truncated payload for {name!r}")
            out[name] = np.frombuffer(buf, dtype="<f8").reshape(shape).copy()
        return out
