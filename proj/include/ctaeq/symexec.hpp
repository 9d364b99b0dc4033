#pragma once

// Checked symbolic execution of elaborated programs. Every memory access is
// guarded by race predicates over a per-address event context; sync releases
// are barrier-style over explicit thread sets. Because programs are
// structured (addresses, branches and sync sets are value-independent), one
// scheduled run decides the error class for all schedules; an exhaustive
// schedule enumerator and a definition-level race oracle back that up in
// tests.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ctaeq/expr.hpp"
#include "ctaeq/ir.hpp"

namespace ctaeq {

struct TraceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// --- Memory-event context -------------------------------------------------

// readers[i] = threads that have not synced with i since i last read the
// address; writer = last writer and the threads that have not synced with it
// since. Locations and step indices are report provenance only.
struct ReadEvent {
  TidSet pending;
  SrcLoc loc;
  uint64_t step = 0;
};

struct WriteEvent {
  Tid tid = 0;
  TidSet pending;
  SrcLoc loc;
  uint64_t step = 0;
};

struct AddrEvents {
  std::map<Tid, ReadEvent> readers;
  std::optional<WriteEvent> writer;
};

// Absent addresses behave as "never accessed": empty readers, no writer.
using MemEvents = std::map<Addr, AddrEvents>;

// true iff i may write past these readers: forall j, i = j or i not in
// readers[j].
bool no_racing_rd(Tid i, const std::map<Tid, TidSet> &readers);
bool no_racing_rd(Tid i, const AddrEvents &x);

// true iff i may access past this writer: no writer yet, i is the writer, or
// i is not in the writer's pending set.
bool no_racing_wr(Tid i, const std::optional<std::pair<Tid, TidSet>> &writer);
bool no_racing_wr(Tid i, const AddrEvents &x);

// Barrier effect on the event context: members of I drop I from their own
// pending sets (readers keyed by a member, writer owned by a member);
// everything else is untouched. Entries whose pending sets empty out are
// erased so equal contexts compare equal.
void sync_mem(const TidSet &I, MemEvents &x);

// --- Machine --------------------------------------------------------------

enum class ThreadState : uint8_t { Runnable, Blocked, Returned };

std::string thread_state_str(ThreadState s);

struct Machine {
  MemEvents mem_events;
  SharedMem shared;
  std::vector<RegFile> regs;   // indexed by tid
  std::vector<size_t> pcs;     // statement index per tid
  std::vector<ThreadState> status;
  std::vector<TidSet> blocked_on; // meaningful only when status is Blocked
  uint64_t steps = 0;             // statements executed + releases applied

  static Machine initial(const Program &p, const SharedMem &init_shared);

  bool all_returned() const;
  bool any_runnable() const;
  // Deterministic dump of the complete state (pcs, statuses, events, values);
  // used for visited-state dedup in the schedule enumerator.
  std::string state_key() const;
};

// --- Reports and outcomes --------------------------------------------------

enum class AccessKind : uint8_t { Read, Write };

std::string access_kind_str(AccessKind k);

struct AccessRef {
  Tid tid = 0;
  AccessKind kind = AccessKind::Read;
  SrcLoc loc;
  uint64_t step = 0;
};

// first is the access recorded in the event context, second the access whose
// race check failed; at least one of the two is a write.
struct RaceReport {
  Addr addr;
  AccessRef first;
  AccessRef second;
  std::string str() const;
};

struct ThreadStatusReport {
  Tid tid = 0;
  ThreadState state = ThreadState::Runnable;
  std::optional<TidSet> waiting; // blocked threads only
  SrcLoc loc;                    // blocked threads only
};

struct DeadlockReport {
  std::vector<ThreadStatusReport> threads;
  // A pair i1 at sync I1, i2 at sync I2 with I1 != I2 and i1, i2 both in
  // I1 n I2, when one exists.
  std::optional<std::pair<Tid, Tid>> conflict_tids;
  std::optional<std::pair<TidSet, TidSet>> conflict_sets;
  std::string str() const;
};

enum class SafetyKind : uint8_t {
  UninitRegisterRead,
  UninitMemoryRead,
  OutOfBounds,
  InvalidArithmetic,
};

std::string safety_kind_str(SafetyKind k);

struct SafetyReport {
  SafetyKind kind = SafetyKind::UninitRegisterRead;
  Tid tid = 0;
  SrcLoc loc;
  std::optional<Addr> addr; // memory kinds
  std::string reg;          // register kinds
  bool is_store = false;    // out-of-bounds: write side
  std::string detail;       // invalid arithmetic: underlying message
  uint64_t step = 0;
  std::string str() const;
};

struct Outcome {
  enum class Kind : uint8_t { Final, Race, Deadlock, Safety };
  Kind kind = Kind::Final;
  // Final payload:
  SharedMem shared;
  std::vector<RegFile> regs;
  // Error payloads:
  std::optional<RaceReport> race;
  std::optional<DeadlockReport> deadlock;
  std::optional<SafetyReport> safety;

  static Outcome of_final(SharedMem shared, std::vector<RegFile> regs);
  static Outcome of_race(RaceReport r);
  static Outcome of_deadlock(DeadlockReport r);
  static Outcome of_safety(SafetyReport r);

  std::string str() const;
};

// Deterministic identity for outcome-set comparisons. Final keys cover the
// whole environment; error keys cover the report minus step indices (the
// same defect found at different scheduler steps is one outcome).
std::string outcome_key(const Outcome &o);

// --- Single-step interface (strict: first fault is terminal) ---------------

// Executes one statement of a runnable thread. Returns an error Outcome and
// leaves the machine untouched when a check fails; otherwise mutates m and
// returns nothing.
std::optional<Outcome> step(Machine &m, const Program &p, Tid tid);

// Releases the releasable sync set with the smallest minimum tid, if any:
// set I is releasable when every member is blocked at sync I or returned and
// at least one member is blocked. Distinct releasable sets are disjoint, so
// the tie-break is total. Returns the released set.
std::optional<TidSet> try_release_sync(Machine &m, const Program &p);

// Returns every currently releasable set, ascending by minimum tid.
std::vector<TidSet> releasable_syncs(const Machine &m);

// --- Scheduled runs (collecting: faults are recorded, execution continues) --

struct TraceItem {
  bool is_sync = false;
  Tid tid = 0; // !is_sync
  TidSet set;  // is_sync
};

// One directive per line: a bare thread id, or `SYNC <tid...>`. Blank lines
// and `#` comments are skipped. Throws TraceError on malformed input.
std::vector<TraceItem> parse_trace(const std::string &text);

struct SchedulePolicy {
  enum class Kind : uint8_t { RoundRobin, Random, Trace };
  Kind kind = Kind::RoundRobin;
  uint64_t seed = 0;            // Random
  std::vector<TraceItem> trace; // Trace

  static SchedulePolicy round_robin();
  static SchedulePolicy random(uint64_t seed);
  static SchedulePolicy replay(std::vector<TraceItem> items);
};

struct RunResult {
  // Precedence: first race, else first safety fault, else deadlock, else the
  // final environment.
  Outcome outcome;
  std::vector<RaceReport> races;      // all distinct races observed
  std::vector<SafetyReport> safeties; // all distinct safety faults observed
  // Present whenever the run ended stuck, even if a race or safety fault
  // takes precedence in `outcome`.
  std::optional<DeadlockReport> deadlock;
  uint64_t steps = 0;
  uint64_t releases = 0;
};

// Drives the checked dynamics under the policy until all threads returned or
// nothing can advance. Faults do not stop the run: races perform the access
// anyway, uninitialized reads are seeded with fresh `!undef<k>` symbols,
// out-of-bounds stores are skipped, out-of-bounds loads yield fresh symbols.
// This keeps the access and sync streams identical to the fault-free
// projection, so one run classifies the program for every schedule.
// init_shared seeds input cells; Trace policies must drive the program to
// completion or a deadlocked state, otherwise TraceError.
RunResult run(const Program &p, const SharedMem &init_shared,
              const SchedulePolicy &policy);

// --- Exhaustive-schedule oracle (strict dynamics) ---------------------------

struct EnumStats {
  uint64_t states = 0;      // distinct states visited
  uint64_t transitions = 0; // steps + releases explored
  bool limit_exceeded = false;
};

struct EnumResult {
  std::vector<Outcome> outcomes; // distinct by outcome_key, first-seen order
  EnumStats stats;
};

// Explores every schedule of the strict checked dynamics: from each state,
// one branch per runnable thread plus one canonical sync release (smallest
// minimum tid; releases of distinct sets commute, so one order suffices).
// Visited states are deduplicated by full state key. Stops with
// limit_exceeded once more than `limit` states are visited.
EnumResult enumerate_schedules(const Program &p, const SharedMem &init_shared,
                               uint64_t limit = 1000000);

// --- Definition-level race oracle -------------------------------------------

// A pair of conflicting accesses (same address, at least one write, distinct
// threads) that some trace of the unchecked dynamics schedules adjacently in
// both orders. tid_a < tid_b.
struct RacingPair {
  Addr addr;
  Tid tid_a = 0;
  size_t pc_a = 0;
  AccessKind kind_a = AccessKind::Read;
  SrcLoc loc_a;
  Tid tid_b = 0;
  size_t pc_b = 0;
  AccessKind kind_b = AccessKind::Read;
  SrcLoc loc_b;
  std::string str() const;
};

struct RacingPairsResult {
  std::vector<RacingPair> pairs;
  uint64_t states = 0;
  bool limit_exceeded = false;
};

// Decides the definition of a data race directly: explores all control
// states of the unchecked dynamics (memory ops never block, syncs block and
// release as usual; values are irrelevant because control is
// value-independent) and reports every conflicting pair that is co-enabled
// at some reachable state. Two co-enabled conflicting accesses can be
// scheduled adjacently in either order, and conversely adjacent accesses in
// a trace were co-enabled just before the first of them ran, so co-enabling
// is exactly the both-orders criterion.
RacingPairsResult find_racing_pairs(const Program &p, uint64_t limit = 1000000);

} // namespace ctaeq
