#pragma once

// Elaborated kernel representation. After front-end elaboration every thread
// is a straight-line statement list; addresses and sync sets are concrete, so
// the memory and synchronization behaviour of a program is independent of the
// symbolic data values flowing through it.

#include <compare>
#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "ctaeq/expr.hpp"

namespace ctaeq {

using Tid = uint32_t;

struct SrcLoc {
  uint32_t line = 0; // 1-based; 0 means synthetic
  uint32_t col = 0;
  std::string str() const;
};

struct StructuredCtaError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Set of thread ids, bit-packed. Unbounded capacity, value semantics.
class TidSet {
public:
  TidSet() = default;
  static TidSet full(Tid n);
  static TidSet single(Tid t);

  void insert(Tid t);
  void erase(Tid t);
  bool contains(Tid t) const;
  bool empty() const;
  size_t count() const;
  Tid min_tid() const; // requires non-empty
  Tid max_tid() const; // requires non-empty

  bool is_subset_of(const TidSet &o) const;
  bool intersects(const TidSet &o) const;
  void subtract(const TidSet &o);

  std::vector<Tid> to_vector() const;
  uint64_t hash() const;
  std::string str() const; // "{0, 1, 3}"

  bool operator==(const TidSet &o) const;
  bool operator!=(const TidSet &o) const { return !(*this == o); }

private:
  void trim();
  std::vector<uint64_t> words_;
};

enum class Role : uint8_t { In, Out, Scratch };

std::string role_str(Role r);

struct ArrayDecl {
  std::string name;
  uint64_t size = 0;
  Role role = Role::Scratch;
};

// Shared-memory address. Offsets keep their sign so out-of-bounds access by
// underflow is representable and checkable.
struct Addr {
  std::string array;
  int64_t offset = 0;
  auto operator<=>(const Addr &) const = default;
  std::string str() const; // "a[3]"
};

enum class Bin : uint8_t { Add, Mul, Div, Max };
enum class Un : uint8_t { Neg, Exp };

std::string bin_str(Bin b);
std::string un_str(Un u);

struct SetConst {
  std::string dst;
  Rat value;
  bool neg_infinity = false; // value ignored when set
};
struct BinOp {
  std::string dst;
  Bin op;
  std::string a, b;
};
struct UnOp {
  std::string dst;
  Un op;
  std::string a;
};
struct Copy {
  std::string dst, src;
};
struct Load {
  std::string dst;
  Addr addr;
};
struct Store {
  Addr addr;
  std::string src;
};
struct SyncStmt {
  TidSet set;
};

enum class StmtKind : uint8_t { SetConst, BinOp, UnOp, Copy, Load, Store, Sync };

struct Stmt {
  StmtKind kind;
  SrcLoc loc;
  // Exactly the member for `kind` is meaningful.
  SetConst set_const;
  BinOp bin_op;
  UnOp un_op;
  Copy copy;
  Load load;
  Store store;
  SyncStmt sync;

  static Stmt mk_const(std::string dst, Rat v, SrcLoc loc = {});
  static Stmt mk_neg_inf(std::string dst, SrcLoc loc = {});
  static Stmt mk_bin(std::string dst, Bin op, std::string a, std::string b,
                     SrcLoc loc = {});
  static Stmt mk_un(std::string dst, Un op, std::string a, SrcLoc loc = {});
  static Stmt mk_copy(std::string dst, std::string src, SrcLoc loc = {});
  static Stmt mk_load(std::string dst, Addr addr, SrcLoc loc = {});
  static Stmt mk_store(Addr addr, std::string src, SrcLoc loc = {});
  static Stmt mk_sync(TidSet set, SrcLoc loc = {});

  std::string str() const;
};

struct ThreadProg {
  std::vector<Stmt> stmts;
};

struct Program {
  std::string name;
  Tid n_threads = 0;
  Tid warp_size = 0; // 0 means no warp structure declared
  std::vector<ArrayDecl> arrays;
  std::vector<ThreadProg> threads; // size == n_threads

  const ArrayDecl *find_array(const std::string &name) const;
};

// Machine-state value types shared with the executor.
using RegFile = std::map<std::string, Expr>;
using SharedMem = std::map<Addr, Expr>;

// Structural validity: thread list matches n_threads; statements reference
// declared arrays; every sync set is nonempty, within the thread set, and
// either the full set or contained in a single warp window
// [k*warp_size, (k+1)*warp_size). Throws StructuredCtaError.
void validate_structured(const Program &p);

// Deterministic human-readable dump (locations omitted so dumps are stable
// golden-test material).
std::string program_to_string(const Program &p);

} // namespace ctaeq
