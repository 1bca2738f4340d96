"""Experiment configuration: label space, data source, variants, evaluation."""

from __future__ import annotations

import json
from dataclasses import dataclass, field

from .data import SyntheticSpec
from .errors import ConfigurationError
from .labelspace import LabelSpace
from .trainer import VariantConfig, paper_variants

DEFAULT_KS = (1, 2, 4, 8)
DEFAULT_FRACTIONS = (0.8, 0.05, 0.15)
# desk-scale cap: with patience 10 the schedule rarely stops earlier, and the
# qualitative benchmark orderings are established well before convergence
DEFAULT_MAX_EPOCHS = 25
# desk-scale learning rate for the default benchmark.  At this dataset size a
# model sees very few optimizer steps, so the per-variant default of 0.005
# leaves every variant close to its initialization and the benchmark cannot
# separate them; 0.08 is large enough that the magnitude-unconstrained
# classification variant destabilizes while the normalized variants, whose
# scores are invariant to the embedding scale, stay well-behaved.
DEFAULT_LR = 0.08


def default_label_space() -> LabelSpace:
    return LabelSpace(
        [
            ("genre", ["rock", "pop", "jazz", "classical", "metal", "folk",
                       "electronic", "hiphop"]),
            ("mood", ["happy", "sad", "calm", "angry", "tense", "dreamy"]),
            ("instrument", ["guitar", "piano", "strings", "synth"]),
            ("era", ["sixties", "seventies", "eighties", "nineties"]),
        ],
        embedding_dim=64,
    )


@dataclass
class ExperimentConfig:
    space: LabelSpace
    synthetic: SyntheticSpec | None = None
    dataset_paths: dict | None = None  # {"train": ..., "valid": ..., "test": ...}
    variants: list = field(default_factory=list)
    eval_ks: tuple = DEFAULT_KS
    triplets_per_notion: int = 2000
    fractions: tuple = DEFAULT_FRACTIONS
    output_dir: str = "out"
    seed: int = 0

    def __post_init__(self):
        if not self.variants:
            raise ConfigurationError("need at least one variant")
        ks = list(self.eval_ks)
        if any(k <= 0 for k in ks) or ks != sorted(ks) or len(set(ks)) != len(ks):
            raise ConfigurationError("eval_ks must be positive and ascending")
        if self.synthetic is None and self.dataset_paths is None:
            raise ConfigurationError("need a synthetic spec or dataset paths")
        if self.triplets_per_notion < 1:
            raise ConfigurationError("triplets_per_notion must be >= 1")

    def with_seed(self, seed: int) -> "ExperimentConfig":
        """Rebuild with a new global seed pushed into data and variants."""
        d = self.to_dict()
        d["seed"] = int(seed)
        return ExperimentConfig.from_dict(d)

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "output_dir": self.output_dir,
            "eval_ks": list(self.eval_ks),
            "triplets_per_notion": self.triplets_per_notion,
            "fractions": list(self.fractions),
            "label_space": self.space.to_dict(),
            "synthetic": None
            if self.synthetic is None
            else {
                k: v
                for k, v in self.synthetic.to_dict().items()
                if k not in ("space", "seed")
            },
            "dataset": self.dataset_paths,
            "variants": [
                {k: v for k, v in v.to_dict().items() if k != "seed"}
                for v in self.variants
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        try:
            space = LabelSpace.from_dict(d["label_space"])
        except KeyError as exc:
            raise ConfigurationError("config is missing 'label_space'") from exc
        seed = int(d.get("seed", 0))
        synthetic = None
        if d.get("synthetic") is not None:
            syn = dict(d["synthetic"])
            syn["space"] = space.to_dict()
            syn.setdefault("seed", seed)
            synthetic = SyntheticSpec.from_dict(syn)
        variants_d = d.get("variants")
        if variants_d is None:
            variants = paper_variants(
                seed=seed, max_epochs=DEFAULT_MAX_EPOCHS, lr=DEFAULT_LR
            )
        else:
            variants = []
            for vd in variants_d:
                vd = dict(vd)
                vd.setdefault("seed", seed)
                try:
                    variants.append(VariantConfig.from_dict(vd))
                except TypeError as exc:
                    raise ConfigurationError(f"bad variant entry: {exc}") from exc
        return cls(
            space=space,
            synthetic=synthetic,
            dataset_paths=d.get("dataset"),
            variants=variants,
            eval_ks=tuple(d.get("eval_ks", DEFAULT_KS)),
            triplets_per_notion=int(d.get("triplets_per_notion", 2000)),
            fractions=tuple(d.get("fractions", DEFAULT_FRACTIONS)),
            output_dir=d.get("output_dir", "out"),
            seed=seed,
        )

    @classmethod
    def from_json(cls, path) -> "ExperimentConfig":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                d = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigurationError(f"cannot read config {path}: {exc}") from exc
        return cls.from_dict(d)


def default_config(seed: int = 0, max_epochs: int = DEFAULT_MAX_EPOCHS) -> ExperimentConfig:
    """Desk-scale default: 4 notions, 64-d features and embeddings, 600x4 items."""
    space = default_label_space()
    return ExperimentConfig(
        space=space,
        synthetic=SyntheticSpec(space=space, seed=seed),
        variants=paper_variants(seed=seed, max_epochs=max_epochs, lr=DEFAULT_LR),
        seed=seed,
    )
