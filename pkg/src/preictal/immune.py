"""Immune-inspired early prediction: negative selection, clonal refinement,
and the priority-stacked signature lookup table (SLT).

Detectors (antibodies) are 12-dimensional unit vectors kept strictly away
from the self set (normal inter-ictal signatures). An incoming signature
fires a prediction when some detector sits within the remove threshold of it
in squared distance and the similarity score clears the prediction
threshold. Winners rise to the top of the stack; novel signatures confirmed
by a detection are appended; a mutation pass fires on a fixed window cycle
or on sustained wins and breeds censored clones around the current top
detector so the table tracks drifting pre-ictal patterns instead of locking
into early matches.

All vectors are kept on the signature quantization grid, so populations
serialize losslessly through the packed 165-bit codec. Mutation steps are
multiples of 1/GENE_LEVELS, which is what the gene count parameter controls.
"""

from __future__ import annotations

import hashlib
import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import BundleError, CoverageError, NotTrainedError, ValidationError
from .signature import DIM, RunningRanges, dequantize, pack, quantize_vector, unpack

GENE_LEVELS = 255
MUTATION_SIGMA_MAX = 0.3
MUTATION_DECAY = 3.0  # similarity exponent: best matches mutate least
PRIORITY_INCREMENT = 1.0
BUNDLE_MAGIC = b"AIS1"
BUNDLE_VERSION = 1


@dataclass(frozen=True)
class AisParams:
    antibody_count: int = 50
    clone_count: int = 25
    genes: int = GENE_LEVELS
    mutation_cycle: int = 83
    remove_threshold: float = 0.3
    selection_threshold: float = 0.01
    diversity: float = 0.64
    tp: float = 0.09

    def validate(self) -> None:
        if min(self.antibody_count, self.clone_count, self.genes,
               self.mutation_cycle) < 1:
            raise ValidationError("counts and cycle must be positive")
        if self.remove_threshold <= self.selection_threshold:
            raise ValidationError("remove_threshold must exceed selection_threshold")
        if not (0.0 < self.tp < 1.0):
            raise ValidationError("tp must be in (0,1)")
        if not (0.0 < self.diversity <= 1.0):
            raise ValidationError("diversity must be in (0,1]")


@dataclass(eq=False)
class Antibody:
    vector: np.ndarray
    priority: float = 0.0
    age_windows: int = 0
    wins: int = 0
    touch: int = 0

    def __post_init__(self):
        self.vector = np.asarray(self.vector, dtype=np.float64)
        if self.vector.shape != (DIM,):
            raise ValidationError(f"antibody vector must have dimension {DIM}")
        if self.priority < 0:
            raise ValidationError("priority must be >= 0")


@dataclass
class MatchResult:
    score: float
    winner: int | None
    min_affinity: float
    fired: bool


@dataclass
class Population:
    slt: list[Antibody]
    self_set: list[np.ndarray]
    params: AisParams
    rng_seed: int = 0
    rng: np.random.Generator = None  # type: ignore[assignment]
    touch_counter: int = 0
    top_streak: int = 0

    def __post_init__(self):
        if self.rng is None:
            self.rng = np.random.default_rng(self.rng_seed)

    def _touch(self) -> int:
        self.touch_counter += 1
        return self.touch_counter

    def slt_matrix(self) -> np.ndarray:
        return np.array([a.vector for a in self.slt])

    def self_matrix(self) -> np.ndarray:
        return np.array(self.self_set)

    def tick_age(self) -> None:
        for a in self.slt:
            a.age_windows += 1


def affinity(s: np.ndarray, d: np.ndarray) -> float:
    """Squared Euclidean distance between two signature vectors."""
    a = np.asarray(s, dtype=np.float64)
    b = np.asarray(d, dtype=np.float64)
    if a.shape != b.shape:
        raise ValidationError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = a - b
    return float(np.dot(diff, diff))


def _affinities_to_set(vec: np.ndarray, mat: np.ndarray) -> np.ndarray:
    diff = mat - vec[None, :]
    return np.einsum("ij,ij->i", diff, diff)


def canonical_vector(vec: np.ndarray) -> np.ndarray:
    """Snap a vector to the exact grid doubles the codec round-trips."""
    return dequantize(quantize_vector(np.clip(np.asarray(vec, float), 0.0, 1.0)))


def _random_grid_vector(rng: np.random.Generator, genes: int) -> np.ndarray:
    levels = rng.integers(0, genes + 1, size=DIM)
    return canonical_vector(levels / genes)


def _binds_self(vec: np.ndarray, self_mat: np.ndarray, remove_threshold: float) -> bool:
    if self_mat.size == 0:
        return False
    return bool(_affinities_to_set(vec, self_mat).min() < remove_threshold)


def negative_selection_train(
    self_set: list[np.ndarray],
    params: AisParams | None = None,
    seed: int = 0,
) -> Population:
    """Draw random detectors and censor every one that binds the self set.

    Deterministic for a given seed. Raises CoverageError when fewer than one
    in 10^4 candidates survives censoring over a million draws, meaning the
    self set saturates the space at this remove threshold.
    """
    params = params or AisParams()
    params.validate()
    if not self_set:
        raise ValidationError("self_set must be non-empty")
    self_vecs = [canonical_vector(v) for v in self_set]
    self_mat = np.array(self_vecs)
    rng = np.random.default_rng(seed)

    accepted: list[Antibody] = []
    draws = 0
    while len(accepted) < params.antibody_count:
        draws += 1
        cand = _random_grid_vector(rng, params.genes)
        if not _binds_self(cand, self_mat, params.remove_threshold):
            accepted.append(Antibody(vector=cand))
        if draws >= 1_000_000 and len(accepted) / draws < 1e-4:
            raise CoverageError(
                f"acceptance rate {len(accepted)}/{draws} below 1e-4; "
                "self set saturates the space"
            )
    pop = Population(slt=accepted, self_set=self_vecs, params=params, rng_seed=seed,
                     rng=rng)
    for a in pop.slt:
        a.touch = pop._touch()
    return pop


def match(pop: Population, incoming: np.ndarray) -> MatchResult:
    """Nearest detector in stack order; ties keep the lower index.

    score = 1/(1 + min_affinity); fires when the score clears tp and the
    distance sits inside the remove threshold.
    """
    if not pop.slt:
        raise NotTrainedError("population has no detectors")
    vec = np.asarray(incoming, dtype=np.float64)
    if vec.shape != (DIM,):
        raise ValidationError(f"incoming vector must have dimension {DIM}")
    dists = _affinities_to_set(vec, pop.slt_matrix())
    winner = int(np.argmin(dists))
    min_aff = float(dists[winner])
    score = 1.0 / (1.0 + min_aff)
    fired = score > pop.params.tp and min_aff < pop.params.remove_threshold
    return MatchResult(score=score, winner=winner, min_affinity=min_aff, fired=fired)


def promote(pop: Population, winner: int) -> Population:
    """Move the winner to the top of the stack and reward it."""
    if not (0 <= winner < len(pop.slt)):
        raise ValidationError(f"winner index {winner} out of range")
    ab = pop.slt.pop(winner)
    ab.wins += 1
    ab.priority += PRIORITY_INCREMENT
    ab.touch = pop._touch()
    pop.slt.insert(0, ab)
    pop.top_streak = pop.top_streak + 1 if winner == 0 else 1
    return pop


def append_new(pop: Population, incoming: np.ndarray) -> Population:
    """Append a confirmed novel signature at the bottom of the stack.

    Candidates that would bind the self set are refused outright; tolerance
    outranks recall. At capacity the lowest-priority antibody goes, oldest
    first among ties.
    """
    vec = canonical_vector(incoming)
    if _binds_self(vec, pop.self_matrix(), pop.params.remove_threshold):
        return pop
    pop.slt.append(Antibody(vector=vec, priority=0.0, touch=pop._touch()))
    while len(pop.slt) > pop.params.antibody_count:
        evict = min(
            range(len(pop.slt)),
            key=lambda i: (pop.slt[i].priority, -pop.slt[i].age_windows),
        )
        pop.slt.pop(evict)
    return pop


def clonal_step(pop: Population, antigen: np.ndarray) -> Population:
    """One round of affinity maturation around the given antigen.

    The best-affinity antibody seeds clone_count clones; mutation magnitude
    shrinks as the seed's match improves. Clones are censored against the
    self set, and each surviving clone that improves on the seed by more
    than the selection threshold replaces the worst current member. The seed
    itself is immune to replacement, which preserves the best match found.
    """
    if not pop.slt:
        raise NotTrainedError("population has no detectors")
    antigen = np.asarray(antigen, dtype=np.float64)
    self_mat = pop.self_matrix()
    dists = _affinities_to_set(antigen, pop.slt_matrix())
    source_idx = int(np.argmin(dists))
    source = pop.slt[source_idx]
    d_source = float(dists[source_idx])
    similarity = 1.0 / (1.0 + d_source)
    sigma = MUTATION_SIGMA_MAX * np.exp(-MUTATION_DECAY * similarity)

    genes = pop.params.genes
    for _ in range(pop.params.clone_count):
        steps = np.rint(pop.rng.normal(0.0, sigma, size=DIM) * genes) / genes
        clone_vec = canonical_vector(source.vector + steps)
        if _binds_self(clone_vec, self_mat, pop.params.remove_threshold):
            continue
        d_clone = affinity(antigen, clone_vec)
        if d_source - d_clone > pop.params.selection_threshold:
            worst = max(
                (i for i in range(len(pop.slt)) if pop.slt[i] is not source),
                key=lambda i: affinity(antigen, pop.slt[i].vector),
                default=None,
            )
            if worst is None:
                break
            pop.slt[worst] = Antibody(vector=clone_vec, touch=pop._touch())
    return pop


def _distinct_flags(vectors: np.ndarray, min_separation: float) -> np.ndarray:
    """Member i is distinct when no earlier member sits within
    min_separation of it."""
    n = len(vectors)
    flags = np.ones(n, dtype=bool)
    for i in range(1, n):
        diff = vectors[:i] - vectors[i]
        if np.min(np.einsum("ij,ij->i", diff, diff)) <= min_separation:
            flags[i] = False
    return flags


def enforce_diversity(pop: Population) -> Population:
    """Replace near-duplicate detectors with fresh censored candidates until
    the distinct fraction meets the diversity parameter."""
    params = pop.params
    self_mat = pop.self_matrix()
    for _ in range(20):  # bounded retries; duplicates are rare
        vectors = pop.slt_matrix()
        flags = _distinct_flags(vectors, params.selection_threshold)
        if flags.mean() >= params.diversity:
            return pop
        for i in np.flatnonzero(~flags):
            for _ in range(1000):
                cand = _random_grid_vector(pop.rng, params.genes)
                if not _binds_self(cand, self_mat, params.remove_threshold):
                    pop.slt[i] = Antibody(vector=cand, touch=pop._touch())
                    break
    return pop


def mutation_tick(pop: Population, window_id: int, duration_required: int = 3) -> bool:
    """Run scheduled maintenance when due; returns whether it fired.

    Fires on the mutation cycle boundary or when the top of the stack has
    won that many consecutive windows. Maintenance is a clonal step around
    the top detector, priority renormalization to a max of 1, diversity
    enforcement, and a stack re-sort by priority (ties to the most recently
    touched).
    """
    due_cycle = window_id > 0 and window_id % pop.params.mutation_cycle == 0
    due_streak = pop.top_streak >= duration_required and len(pop.slt) > 0
    if not (due_cycle or due_streak):
        return False
    if not pop.slt:
        return False
    clonal_step(pop, pop.slt[0].vector)
    top_priority = max(a.priority for a in pop.slt)
    if top_priority > 0:
        for a in pop.slt:
            a.priority /= top_priority
    enforce_diversity(pop)
    pop.slt.sort(key=lambda a: (-a.priority, -a.touch))
    pop.top_streak = 0
    return True


def self_tolerance_violations(pop: Population) -> list[int]:
    """Indexes of detectors binding any self exemplar; empty means tolerant."""
    self_mat = pop.self_matrix()
    if self_mat.size == 0 or not pop.slt:
        return []
    bad = []
    for i, ab in enumerate(pop.slt):
        if _affinities_to_set(ab.vector, self_mat).min() < pop.params.remove_threshold:
            bad.append(i)
    return bad


# ---------------------------------------------------------------------------
# bundle serialization

_PARAMS_FMT = "<IIII dddd"


def save_bundle(
    pop: Population,
    path,
    ranges: RunningRanges | None = None,
) -> None:
    """Versioned binary bundle: params, stack, self set, quantization ranges
    and RNG state, with a trailing content hash."""
    p = pop.params
    out = bytearray()
    out += BUNDLE_MAGIC
    out += struct.pack("<H", BUNDLE_VERSION)
    out += struct.pack(
        _PARAMS_FMT,
        p.antibody_count, p.clone_count, p.genes, p.mutation_cycle,
        p.remove_threshold, p.selection_threshold, p.diversity, p.tp,
    )
    out += struct.pack("<IIQ q", len(pop.slt), len(pop.self_set),
                       pop.touch_counter, pop.rng_seed)
    for ab in pop.slt:
        out += pack(quantize_vector(ab.vector))
        out += struct.pack("<dIIQ", ab.priority, ab.age_windows, ab.wins, ab.touch)
    for vec in pop.self_set:
        out += pack(quantize_vector(vec))
    if ranges is not None:
        blob = json.dumps(ranges.snapshot()).encode()
        out += struct.pack("<BI", 1, len(blob)) + blob
    else:
        out += struct.pack("<BI", 0, 0)
    rng_blob = json.dumps(pop.rng.bit_generator.state).encode()
    out += struct.pack("<I", len(rng_blob)) + rng_blob
    out += hashlib.sha256(bytes(out)).digest()
    with open(path, "wb") as fh:
        fh.write(bytes(out))


def load_bundle(path) -> tuple[Population, RunningRanges | None]:
    with open(path, "rb") as fh:
        blob = fh.read()
    if len(blob) < 38:
        raise BundleError("bundle truncated")
    body, digest = blob[:-32], blob[-32:]
    if hashlib.sha256(body).digest() != digest:
        raise BundleError("bundle checksum mismatch")
    if body[:4] != BUNDLE_MAGIC:
        raise BundleError(f"bad magic {body[:4]!r}")
    off = 4
    (version,) = struct.unpack_from("<H", body, off)
    off += 2
    if version != BUNDLE_VERSION:
        raise BundleError(f"unsupported bundle version {version}")
    vals = struct.unpack_from(_PARAMS_FMT, body, off)
    off += struct.calcsize(_PARAMS_FMT)
    params = AisParams(
        antibody_count=vals[0], clone_count=vals[1], genes=vals[2],
        mutation_cycle=vals[3], remove_threshold=vals[4],
        selection_threshold=vals[5], diversity=vals[6], tp=vals[7],
    )
    n_slt, n_self, touch_counter, rng_seed = struct.unpack_from("<IIQ q", body, off)
    off += struct.calcsize("<IIQ q")
    slt = []
    for _ in range(n_slt):
        vec = dequantize_or_zero(body[off:off + 21])
        off += 21
        priority, age, wins, touch = struct.unpack_from("<dIIQ", body, off)
        off += struct.calcsize("<dIIQ")
        slt.append(Antibody(vector=vec, priority=priority, age_windows=age,
                            wins=wins, touch=touch))
    self_set = []
    for _ in range(n_self):
        self_set.append(dequantize_or_zero(body[off:off + 21]))
        off += 21
    has_ranges, blob_len = struct.unpack_from("<BI", body, off)
    off += struct.calcsize("<BI")
    ranges = None
    if has_ranges:
        ranges = RunningRanges.from_snapshot(
            json.loads(body[off:off + blob_len].decode())
        )
        off += blob_len
    (rng_len,) = struct.unpack_from("<I", body, off)
    off += 4
    rng_state = json.loads(body[off:off + rng_len].decode())
    rng = np.random.default_rng(0)
    rng.bit_generator.state = rng_state
    pop = Population(slt=slt, self_set=self_set, params=params,
                     rng_seed=rng_seed, rng=rng, touch_counter=touch_counter)
    return pop, ranges


def dequantize_or_zero(blob: bytes) -> np.ndarray:
    """Packed word to vector, mapping the sentinel to the origin."""
    sig = unpack(blob)
    if sig.is_sentinel:
        return np.zeros(DIM)
    return dequantize(sig)
