#include "ctaeq/ir.hpp"

#include <bit>
#include <sstream>

namespace ctaeq {

std::string SrcLoc::str() const {
  if (line == 0)
    return "<synthetic>";
  return std::to_string(line) + ":" + std::to_string(col);
}

// --- TidSet ----------------------------------------------------------------

TidSet TidSet::full(Tid n) {
  TidSet s;
  for (Tid t = 0; t < n; t++)
    s.insert(t);
  return s;
}

TidSet TidSet::single(Tid t) {
  TidSet s;
  s.insert(t);
  return s;
}

void TidSet::insert(Tid t) {
  size_t w = t / 64;
  if (words_.size() <= w)
    words_.resize(w + 1, 0);
  words_[w] |= uint64_t(1) << (t % 64);
}

void TidSet::erase(Tid t) {
  size_t w = t / 64;
  if (w < words_.size()) {
    words_[w] &= ~(uint64_t(1) << (t % 64));
    trim();
  }
}

bool TidSet::contains(Tid t) const {
  size_t w = t / 64;
  return w < words_.size() && (words_[w] >> (t % 64)) & 1;
}

bool TidSet::empty() const { return words_.empty(); }

size_t TidSet::count() const {
  size_t n = 0;
  for (uint64_t w : words_)
    n += std::popcount(w);
  return n;
}

Tid TidSet::min_tid() const {
  for (size_t i = 0; i < words_.size(); i++)
    if (words_[i])
      return Tid(i * 64 + std::countr_zero(words_[i]));
  throw StructuredCtaError("min_tid of empty set");
}

Tid TidSet::max_tid() const {
  for (size_t i = words_.size(); i-- > 0;)
    if (words_[i])
      return Tid(i * 64 + 63 - std::countl_zero(words_[i]));
  throw StructuredCtaError("max_tid of empty set");
}

bool TidSet::is_subset_of(const TidSet &o) const {
  for (size_t i = 0; i < words_.size(); i++) {
    uint64_t other = i < o.words_.size() ? o.words_[i] : 0;
    if (words_[i] & ~other)
      return false;
  }
  return true;
}

bool TidSet::intersects(const TidSet &o) const {
  size_t n = std::min(words_.size(), o.words_.size());
  for (size_t i = 0; i < n; i++)
    if (words_[i] & o.words_[i])
      return true;
  return false;
}

void TidSet::subtract(const TidSet &o) {
  size_t n = std::min(words_.size(), o.words_.size());
  for (size_t i = 0; i < n; i++)
    words_[i] &= ~o.words_[i];
  trim();
}

std::vector<Tid> TidSet::to_vector() const {
  std::vector<Tid> out;
  for (size_t i = 0; i < words_.size(); i++) {
    uint64_t w = words_[i];
    while (w) {
      int b = std::countr_zero(w);
      out.push_back(Tid(i * 64 + b));
      w &= w - 1;
    }
  }
  return out;
}

uint64_t TidSet::hash() const {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (uint64_t w : words_) {
    h ^= w;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string TidSet::str() const {
  std::string s = "{";
  bool first = true;
  for (Tid t : to_vector()) {
    if (!first)
      s += ", ";
    first = false;
    s += std::to_string(t);
  }
  return s + "}";
}

bool TidSet::operator==(const TidSet &o) const { return words_ == o.words_; }

void TidSet::trim() {
  while (!words_.empty() && words_.back() == 0)
    words_.pop_back();
}

// --- statements ------------------------------------------------------------

std::string role_str(Role r) {
  switch (r) {
  case Role::In:
    return "in";
  case Role::Out:
    return "out";
  case Role::Scratch:
    return "scratch";
  }
  return "?";
}

std::string bin_str(Bin b) {
  switch (b) {
  case Bin::Add:
    return "add";
  case Bin::Mul:
    return "mul";
  case Bin::Div:
    return "div";
  case Bin::Max:
    return "max";
  }
  return "?";
}

std::string un_str(Un u) {
  switch (u) {
  case Un::Neg:
    return "neg";
  case Un::Exp:
    return "exp";
  }
  return "?";
}

std::string Addr::str() const {
  return array + "[" + std::to_string(offset) + "]";
}

Stmt Stmt::mk_const(std::string dst, Rat v, SrcLoc loc) {
  Stmt s;
  s.kind = StmtKind::SetConst;
  s.loc = loc;
  s.set_const = {std::move(dst), std::move(v), false};
  return s;
}

Stmt Stmt::mk_neg_inf(std::string dst, SrcLoc loc) {
  Stmt s;
  s.kind = StmtKind::SetConst;
  s.loc = loc;
  s.set_const = {std::move(dst), Rat(0), true};
  return s;
}

Stmt Stmt::mk_bin(std::string dst, Bin op, std::string a, std::string b,
                  SrcLoc loc) {
  Stmt s;
  s.kind = StmtKind::BinOp;
  s.loc = loc;
  s.bin_op = {std::move(dst), op, std::move(a), std::move(b)};
  return s;
}

Stmt Stmt::mk_un(std::string dst, Un op, std::string a, SrcLoc loc) {
  Stmt s;
  s.kind = StmtKind::UnOp;
  s.loc = loc;
  s.un_op = {std::move(dst), op, std::move(a)};
  return s;
}

Stmt Stmt::mk_copy(std::string dst, std::string src, SrcLoc loc) {
  Stmt s;
  s.kind = StmtKind::Copy;
  s.loc = loc;
  s.copy = {std::move(dst), std::move(src)};
  return s;
}

Stmt Stmt::mk_load(std::string dst, Addr addr, SrcLoc loc) {
  Stmt s;
  s.kind = StmtKind::Load;
  s.loc = loc;
  s.load = {std::move(dst), std::move(addr)};
  return s;
}

Stmt Stmt::mk_store(Addr addr, std::string src, SrcLoc loc) {
  Stmt s;
  s.kind = StmtKind::Store;
  s.loc = loc;
  s.store = {std::move(addr), std::move(src)};
  return s;
}

Stmt Stmt::mk_sync(TidSet set, SrcLoc loc) {
  Stmt s;
  s.kind = StmtKind::Sync;
  s.loc = loc;
  s.sync = {std::move(set)};
  return s;
}

std::string Stmt::str() const {
  switch (kind) {
  case StmtKind::SetConst:
    if (set_const.neg_infinity)
      return set_const.dst + " := -inf";
    return set_const.dst + " := " + set_const.value.get_str();
  case StmtKind::BinOp:
    return bin_op.dst + " := " + bin_op.a + " " + bin_str(bin_op.op) + " " +
           bin_op.b;
  case StmtKind::UnOp:
    return un_op.dst + " := " + un_str(un_op.op) + " " + un_op.a;
  case StmtKind::Copy:
    return copy.dst + " := " + copy.src;
  case StmtKind::Load:
    return load.dst + " := load " + load.addr.str();
  case StmtKind::Store:
    return "store " + store.addr.str() + " := " + store.src;
  case StmtKind::Sync:
    return "sync " + sync.set.str();
  }
  return "?";
}

// --- program ---------------------------------------------------------------

const ArrayDecl *Program::find_array(const std::string &name) const {
  for (const auto &a : arrays)
    if (a.name == name)
      return &a;
  return nullptr;
}

void validate_structured(const Program &p) {
  if (p.n_threads == 0)
    throw StructuredCtaError("program has no threads");
  if (p.threads.size() != p.n_threads)
    throw StructuredCtaError("thread list size does not match n_threads");
  for (size_t i = 0; i + 1 < p.arrays.size(); i++)
    for (size_t j = i + 1; j < p.arrays.size(); j++)
      if (p.arrays[i].name == p.arrays[j].name)
        throw StructuredCtaError("duplicate array " + p.arrays[i].name);
  TidSet all = TidSet::full(p.n_threads);
  for (Tid t = 0; t < p.n_threads; t++) {
    for (const Stmt &s : p.threads[t].stmts) {
      auto where = [&](const std::string &what) {
        return "thread " + std::to_string(t) + " at " + s.loc.str() + ": " +
               what;
      };
      switch (s.kind) {
      case StmtKind::Load:
      case StmtKind::Store: {
        const Addr &a = s.kind == StmtKind::Load ? s.load.addr : s.store.addr;
        if (!p.find_array(a.array))
          throw StructuredCtaError(where("unknown array " + a.array));
        break;
      }
      case StmtKind::Sync: {
        const TidSet &set = s.sync.set;
        if (set.empty())
          throw StructuredCtaError(where("empty sync set"));
        if (!set.is_subset_of(all))
          throw StructuredCtaError(
              where("sync set " + set.str() + " exceeds thread set"));
        if (set == all)
          break;
        if (p.warp_size == 0)
          throw StructuredCtaError(
              where("partial sync set " + set.str() +
                    " requires a declared warp size"));
        Tid w = set.min_tid() / p.warp_size;
        if (set.max_tid() / p.warp_size != w)
          throw StructuredCtaError(
              where("sync set " + set.str() +
                    " spans more than one warp window"));
        break;
      }
      default:
        break;
      }
    }
  }
}

std::string program_to_string(const Program &p) {
  std::ostringstream os;
  os << "program " << p.name << " threads=" << p.n_threads;
  if (p.warp_size)
    os << " warp=" << p.warp_size;
  os << "\n";
  for (const auto &a : p.arrays)
    os << "array " << a.name << " " << role_str(a.role) << " size=" << a.size
       << "\n";
  for (Tid t = 0; t < p.threads.size(); t++) {
    os << "thread " << t << ":\n";
    const auto &stmts = p.threads[t].stmts;
    for (size_t i = 0; i < stmts.size(); i++)
      os << "  " << i << ": " << stmts[i].str() << "\n";
  }
  return os.str();
}

} // namespace ctaeq
