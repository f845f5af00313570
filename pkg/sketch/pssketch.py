"""PSSketch: a two-layer sketch for persistent-and-sparse flows.

The Competition Layer (CL) is X buckets of Y entries, each holding a
fingerprint, narrow frequency/persistence counters and two flag bits
(W: seen this window, OF: protected). Flows whose CL persistence counter
overflows are protected: the Protection Layer (PL) stores their full ID and
counts the CL overflows, so full values reconstruct as

    f_e = f_of * 2^L_f + f
    p_e = p_of * T + p        (T = p_overflow_threshold)

Unprotected entries compete for slots; a full bucket replaces its
minimum-persistence unprotected entry with probability 1/p_min.
"""

import logging
import random
from collections.abc import Callable, Iterator
from fractions import Fraction

import numpy as np

from flows.errors import ConsistencyError
from flows.types import FlowKey, FlowStats, ReportSet

from .base import Detector
from .hashing import Fingerprinter
from .types import (
    CompetitionEntry,
    InsertOutcome,
    Overflow,
    ProtectionEntry,
    ReportOutcome,
    ScanResult,
    SketchConfig,
    SketchCounters,
)

logger = logging.getLogger(__name__)


class PSSketch(Detector):
    """Persistent-and-sparse flow detector.

    A single-writer object: mutating calls need exclusive access. Queries on
    a quiescent sketch do not mutate it.
    """

    def __init__(
        self,
        config: SketchConfig,
        fingerprint: Callable[[int], int] | None = None,
        rng: random.Random | None = None,
    ):
        """Create an empty sketch.

        Args:
            config: Sizes, widths, criterion, seeds and toggles
            fingerprint: Optional raw hash replacing the seeded hash (masked to
                L_fp bits, zero remapped to 1)
            rng: Optional uniform source for contention; defaults to
                random.Random(config.rng_seed)
        """
        self.config = config
        self.widths = config.widths
        self.criterion = config.criterion
        self._x = config.x
        self._y = config.y

        self._fingerprint = Fingerprinter(self.widths.fp_bits, config.hash_seed, fingerprint)
        self._rng = rng if rng is not None else random.Random(config.rng_seed)

        shape = (config.x, config.y)
        self._fp = np.zeros(shape, dtype=np.uint64)
        self._f = np.zeros(shape, dtype=np.uint32)
        self._p = np.zeros(shape, dtype=np.uint32)
        self._flag_w = np.zeros(shape, dtype=np.uint8)
        self._flag_of = np.zeros(shape, dtype=np.uint8)

        # One-time traversal registers: first empty slot, replacement slot, min p
        self._ep = np.full(config.x, -1, dtype=np.int64)
        self._rp = np.full(config.x, -1, dtype=np.int64)
        self._minp = np.full(config.x, -1, dtype=np.int64)

        self._pl: dict[FlowKey, ProtectionEntry] = {}
        # (bucket, fp) -> owning PL key; CL slots only know their fingerprint
        self._owner: dict[tuple[int, int], FlowKey] = {}
        self._retired: dict[FlowKey, FlowStats] = {}

        self._scan = self.scan_vectorized if config.vectorized_scan else self.scan

        self.window = 0
        self.counters = SketchCounters()

    # ------------------------------------------------------------------
    # Detector interface
    # ------------------------------------------------------------------

    @property
    def name(self) -> str:
        return "pssketch"

    @property
    def memory_bits(self) -> int:
        return self.config.memory_bits

    def new_window(self) -> None:
        """Clear every W flag and the per-window burst bookkeeping."""
        self._flag_w.fill(0)
        for entry in self._pl.values():
            entry.window_fof_increments = 0
        self.window += 1

    def insert(self, key: FlowKey) -> InsertOutcome:
        """Process one packet of flow key and report which path ran."""
        self.counters.inserts += 1
        fp = self._fingerprint(key)
        m = fp % self._x
        scanned = self._scan(m, fp)

        if scanned.found >= 0:
            outcome = self.update_entry(m, scanned.found, key)
        elif scanned.empty >= 0:
            self._write_new(m, scanned.empty, fp)
            outcome = InsertOutcome.CREATED
        else:
            outcome = self.contend(m, key, scanned)

        counter = outcome.value
        setattr(self.counters, counter, getattr(self.counters, counter) + 1)
        return outcome

    def query(self) -> ReportSet:
        """Reconstruct every protected flow and classify it.

        Unprotected CL entries are not reported. Flows retired at PL counter
        saturation keep the statistics they had when retired.

        Raises:
            ConsistencyError: If a protected CL entry has no PL entry
        """
        stats: dict[FlowKey, FlowStats] = dict(self._retired)
        for m, n in zip(*np.nonzero(self._flag_of), strict=True):
            m, n = int(m), int(n)
            key = self._owner.get((m, int(self._fp[m, n])))
            if key is None:
                raise ConsistencyError(f"protected entry ({m}, {n}) has no Protection Layer entry")
            reconstructed = self._reconstruct(self._pl[key], m, n)
            stats[key] = stats[key] + reconstructed if key in stats else reconstructed
        return ReportSet.classify(stats, self.criterion)

    def metadata(self) -> dict:
        return {"window": self.window, **self.counters.to_dict()}

    # ------------------------------------------------------------------
    # Bucket scans
    # ------------------------------------------------------------------

    def scan(self, m: int, fp: int) -> ScanResult:
        """Single pass over bucket m computing (found, first empty, min-p).

        min-p ranges over occupied unprotected entries; ties go to the lowest
        index. The result is also stored in the bucket's Ep/Rp/MinP registers.
        """
        fps = self._fp[m].tolist()
        ps = self._p[m].tolist()
        ofs = self._flag_of[m].tolist()

        found = empty = rp = minp = -1
        for n in range(self._y):
            value = fps[n]
            if value == 0:
                if empty < 0:
                    empty = n
                continue
            if value == fp and found < 0:
                found = n
            if ofs[n] == 0 and (rp < 0 or ps[n] < minp):
                rp = n
                minp = ps[n]

        self._ep[m] = empty
        self._rp[m] = rp
        self._minp[m] = minp
        return ScanResult(found, empty, rp, minp)

    def scan_naive(self, m: int, fp: int) -> ScanResult:
        """Three separate passes; reference for the single-pass scan."""
        fps = self._fp[m].tolist()
        ps = self._p[m].tolist()
        ofs = self._flag_of[m].tolist()

        found = next((n for n in range(self._y) if fps[n] == fp and fp != 0), -1)
        empty = next((n for n in range(self._y) if fps[n] == 0), -1)

        candidates = [n for n in range(self._y) if fps[n] != 0 and ofs[n] == 0]
        if not candidates:
            return ScanResult(found, empty, -1, -1)
        minp = min(ps[n] for n in candidates)
        rp = next(n for n in candidates if ps[n] == minp)
        return ScanResult(found, empty, rp, minp)

    def scan_vectorized(self, m: int, fp: int) -> ScanResult:
        """numpy rendition of the single-pass scan."""
        row = self._fp[m]
        matches = np.flatnonzero(row == np.uint64(fp))
        empties = np.flatnonzero(row == 0)
        found = int(matches[0]) if matches.size else -1
        empty = int(empties[0]) if empties.size else -1

        candidates = (row != 0) & (self._flag_of[m] == 0)
        rp = minp = -1
        if candidates.any():
            masked = np.where(candidates, self._p[m].astype(np.int64), np.iinfo(np.int64).max)
            rp = int(np.argmin(masked))
            minp = int(masked[rp])

        self._ep[m] = empty
        self._rp[m] = rp
        self._minp[m] = minp
        return ScanResult(found, empty, rp, minp)

    # ------------------------------------------------------------------
    # Competition Layer paths
    # ------------------------------------------------------------------

    def update_entry(self, m: int, n: int, key: FlowKey) -> InsertOutcome:
        """Update slot n of bucket m, which holds key's fingerprint.

        Returns:
            UPDATED, ELIMINATED (unprotected f overflow), PROTECTED (unprotected
            p overflow) or PRUNED (the flow left both layers)
        """
        if self._flag_w[m, n] == 0:
            self._p[m, n] += 1
            self._flag_w[m, n] = 1
        self._f[m, n] += 1

        f = int(self._f[m, n])
        p = int(self._p[m, n])
        fp = int(self._fp[m, n])

        if self._flag_of[m, n] == 0:
            if f >= self.widths.f_limit:
                self._clear(m, n)
                return InsertOutcome.ELIMINATED
            if p >= self.widths.p_limit:
                self._flag_of[m, n] = 1
                self._p[m, n] = 0
                self.protect(key, Overflow.P_OVERFLOW, m, fp)
                return InsertOutcome.PROTECTED
            return InsertOutcome.UPDATED

        if f >= self.widths.f_limit:
            self._f[m, n] = 0
            if self.protect(key, Overflow.F_OVERFLOW, m, fp) is ReportOutcome.PRUNED_SELF:
                return InsertOutcome.PRUNED
        if p >= self.widths.p_limit:
            self._p[m, n] = 0
            if self.protect(key, Overflow.P_OVERFLOW, m, fp) is ReportOutcome.PRUNED_SELF:
                return InsertOutcome.PRUNED
        return InsertOutcome.UPDATED

    def contend(self, m: int, key: FlowKey, scanned: ScanResult | None = None) -> InsertOutcome:
        """Compete for a slot in full bucket m.

        The minimum-p unprotected entry is replaced with probability 1/p_min,
        one uniform draw per contention. A bucket of protected entries drops
        the arrival without drawing.
        """
        fp = self._fingerprint(key)
        if scanned is None:
            scanned = self._scan(m, fp)
        if scanned.min_p_index < 0:
            return InsertOutcome.DROPPED
        if self._rng.random() < 1.0 / scanned.min_p:
            self._write_new(m, scanned.min_p_index, fp)
            return InsertOutcome.REPLACED
        return InsertOutcome.DROPPED

    # ------------------------------------------------------------------
    # Protection Layer
    # ------------------------------------------------------------------

    def protect(self, key: FlowKey, which: Overflow, m: int, fp: int) -> ReportOutcome:
        """Report a CL counter overflow of the entry (m, fp) to the PL.

        A P_OVERFLOW from an unprotected entry creates a PL entry for key with
        f_of=0, p_of=1; a full PL first evicts its densest flow. Reports from
        protected entries update the owning PL entry, which may prune it.
        """
        owner = self._owner.get((m, fp))
        if owner is None:
            if which is not Overflow.P_OVERFLOW:
                raise ConsistencyError(f"frequency overflow for unprotected flow {key}")
            return self._create(key, m, fp)

        entry = self._pl[owner]
        if which is Overflow.F_OVERFLOW:
            return self._report_f_overflow(entry)
        return self._report_p_overflow(entry)

    def _create(self, key: FlowKey, m: int, fp: int) -> ReportOutcome:
        if key in self._pl:
            raise ConsistencyError(f"flow {key} is already protected")
        outcome = ReportOutcome.CREATED
        if len(self._pl) >= self.config.r:
            self._evict_densest()
            outcome = ReportOutcome.EVICTED_OTHER
        self._pl[key] = ProtectionEntry(key, m, fp)
        self._owner[(m, fp)] = key
        return outcome

    def _report_f_overflow(self, entry: ProtectionEntry) -> ReportOutcome:
        if (
            self.config.burst_elimination
            and entry.window_fof_increments >= SketchConfig.BURST_CAP
        ):
            self.counters.burst_suppressed += 1
            return ReportOutcome.UPDATED
        if entry.f_of >= self.widths.fof_max:
            logger.warning(f"f_of saturated for flow {entry.id}; removing it")
            self.counters.saturated += 1
            self._remove(entry)
            return ReportOutcome.PRUNED_SELF

        entry.f_of += 1
        entry.window_fof_increments += 1
        if self.config.prune and entry.f_of > entry.p_of:
            self.prune(entry.id)
            return ReportOutcome.PRUNED_SELF
        return ReportOutcome.UPDATED

    def _report_p_overflow(self, entry: ProtectionEntry) -> ReportOutcome:
        if entry.p_of >= self.widths.pof_max:
            n = self._slot_of(entry)
            # p was just reset, so this overflow completes one more block of T
            retired = FlowStats(
                entry.f_of * self.widths.f_limit + int(self._f[entry.bucket, n]),
                (entry.p_of + 1) * self.widths.p_limit,
            )
            previous = self._retired.get(entry.id)
            self._retired[entry.id] = previous + retired if previous else retired
            logger.warning(
                f"p_of saturated for flow {entry.id}; retiring it with f={retired.frequency}, "
                f"p={retired.persistence}"
            )
            self.counters.saturated += 1
            self._remove(entry)
            return ReportOutcome.PRUNED_SELF

        entry.p_of += 1
        return ReportOutcome.UPDATED

    def prune(self, key: FlowKey) -> FlowStats:
        """Remove a protected flow from both layers.

        Returns:
            The flow's reconstructed statistics at pruning time
        """
        entry = self._pl[key]
        stats = self._reconstruct(entry, entry.bucket, self._slot_of(entry))
        logger.debug(
            f"Pruned flow {key}: f_of={entry.f_of} > p_of={entry.p_of}, "
            f"f={stats.frequency}, p={stats.persistence}"
        )
        self._remove(entry)
        return stats

    def _evict_densest(self) -> None:
        def density(entry: ProtectionEntry) -> Fraction:
            stats = self._reconstruct(entry, entry.bucket, self._slot_of(entry))
            return Fraction(stats.frequency, stats.persistence)

        victim = max(self._pl.values(), key=density)
        logger.debug(f"Protection Layer full; evicting flow {victim.id}")
        self.counters.pl_evictions += 1
        self._remove(victim)

    # ------------------------------------------------------------------
    # Helpers
    # ------------------------------------------------------------------

    def _write_new(self, m: int, n: int, fp: int) -> None:
        self._fp[m, n] = fp
        self._f[m, n] = 1
        self._p[m, n] = 1
        self._flag_w[m, n] = 1
        self._flag_of[m, n] = 0

    def _clear(self, m: int, n: int) -> None:
        self._fp[m, n] = 0
        self._f[m, n] = 0
        self._p[m, n] = 0
        self._flag_w[m, n] = 0
        self._flag_of[m, n] = 0

    def _slot_of(self, entry: ProtectionEntry) -> int:
        slots = np.flatnonzero(self._fp[entry.bucket] == np.uint64(entry.fp))
        if not slots.size:
            raise ConsistencyError(f"protected flow {entry.id} has no Competition Layer entry")
        return int(slots[0])

    def _remove(self, entry: ProtectionEntry) -> None:
        self._clear(entry.bucket, self._slot_of(entry))
        del self._pl[entry.id]
        del self._owner[(entry.bucket, entry.fp)]

    def _reconstruct(self, entry: ProtectionEntry, m: int, n: int) -> FlowStats:
        return FlowStats(
            entry.f_of * self.widths.f_limit + int(self._f[m, n]),
            entry.p_of * self.widths.p_limit + int(self._p[m, n]),
        )

    # ------------------------------------------------------------------
    # Inspection
    # ------------------------------------------------------------------

    def entry(self, m: int, n: int) -> CompetitionEntry:
        """Snapshot of CL slot n in bucket m."""
        return CompetitionEntry(
            int(self._fp[m, n]),
            int(self._f[m, n]),
            int(self._p[m, n]),
            int(self._flag_w[m, n]),
            int(self._flag_of[m, n]),
        )

    def entries(self) -> Iterator[tuple[int, int, CompetitionEntry]]:
        """Occupied CL slots in (bucket, slot) order."""
        for m, n in zip(*np.nonzero(self._fp), strict=True):
            yield int(m), int(n), self.entry(int(m), int(n))

    def protection_entry(self, key: FlowKey) -> ProtectionEntry | None:
        return self._pl.get(key)

    def protection_entries(self) -> list[ProtectionEntry]:
        """PL entries sorted by flow ID."""
        return sorted(self._pl.values(), key=lambda e: e.id)

    @property
    def retired(self) -> dict[FlowKey, FlowStats]:
        return dict(self._retired)

    def fingerprint(self, key: FlowKey) -> tuple[int, int]:
        """(bucket, fingerprint) of a flow key."""
        fp = self._fingerprint(key)
        return fp % self._x, fp

    def scan_registers(self, m: int) -> tuple[int, int, int]:
        """(Ep, Rp, MinP) left by the latest scan of bucket m."""
        return int(self._ep[m]), int(self._rp[m]), int(self._minp[m])

    def check_invariants(self) -> None:
        """Verify width containment and flag_of <-> PL membership.

        Raises:
            ConsistencyError: On the first violation found
        """
        widths = self.widths
        if int(self._f.max(initial=0)) >= widths.f_limit:
            raise ConsistencyError("CL frequency counter out of range")
        if int(self._p.max(initial=0)) >= widths.p_limit:
            raise ConsistencyError("CL persistence counter out of range")
        if int(self._fp.max(initial=0)) > widths.fp_mask:
            raise ConsistencyError("fingerprint wider than L_fp")

        empty = self._fp == 0
        if (
            self._f[empty].any()
            or self._p[empty].any()
            or self._flag_w[empty].any()
            or self._flag_of[empty].any()
        ):
            raise ConsistencyError("empty CL entry carries state")

        for m in range(self._x):
            row = self._fp[m][self._fp[m] != 0]
            if np.unique(row).size != row.size:
                raise ConsistencyError(f"duplicate fingerprint in bucket {m}")

        if len(self._pl) > self.config.r:
            raise ConsistencyError(f"{len(self._pl)} PL entries exceed capacity {self.config.r}")
        protected = {
            (int(m), int(self._fp[m, n])) for m, n in zip(*np.nonzero(self._flag_of), strict=True)
        }
        if protected != set(self._owner):
            raise ConsistencyError("flag_of does not match Protection Layer membership")
        for (m, fp), key in self._owner.items():
            entry = self._pl.get(key)
            if entry is None or (entry.bucket, entry.fp) != (m, fp):
                raise ConsistencyError(f"PL index out of sync for flow {key}")
            if not 0 <= entry.f_of <= widths.fof_max or not 1 <= entry.p_of <= widths.pof_max:
                raise ConsistencyError(f"PL counters out of range for flow {key}")
        if len(self._owner) != len(self._pl):
            raise ConsistencyError("PL index and entries differ in size")
