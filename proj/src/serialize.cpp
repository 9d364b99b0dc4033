#include "ctaeq/serialize.hpp"

#include <charconv>
#include <sstream>

namespace ctaeq {

namespace {

class Writer {
public:
  uint32_t index_of(const Expr &e) {
    auto it = memo_.find(e.node());
    if (it != memo_.end())
      return it->second;
    std::vector<uint32_t> kid_idx;
    kid_idx.reserve(e.kids().size());
    for (const Expr &k : e.kids())
      kid_idx.push_back(index_of(k));
    uint32_t idx = next_++;
    out_ += std::to_string(idx);
    switch (e.kind()) {
    case Kind::Var:
      out_ += " VAR ";
      out_ += e.name();
      break;
    case Kind::Const:
      out_ += " CONST ";
      out_ += e.value().get_num().get_str();
      out_ += '/';
      out_ += e.value().get_den().get_str();
      break;
    case Kind::NegInf:
      out_ += " NEGINF";
      break;
    case Kind::Add:
      out_ += " ADD";
      break;
    case Kind::Mul:
      out_ += " MUL";
      break;
    case Kind::Neg:
      out_ += " NEG";
      break;
    case Kind::Div:
      out_ += " DIV";
      break;
    case Kind::Exp:
      out_ += " EXP";
      break;
    case Kind::Max:
      out_ += " MAX";
      break;
    }
    for (uint32_t k : kid_idx) {
      out_ += ' ';
      out_ += std::to_string(k);
    }
    out_ += '\n';
    memo_.emplace(e.node(), idx);
    return idx;
  }

  std::string &text() { return out_; }

private:
  std::unordered_map<const ExprNode *, uint32_t> memo_;
  std::string out_;
  uint32_t next_ = 0;
};

std::vector<std::string> split_ws(const std::string &line) {
  std::vector<std::string> toks;
  std::istringstream is(line);
  std::string t;
  while (is >> t)
    toks.push_back(t);
  return toks;
}

struct Reader {
  std::vector<Expr> nodes;

  const Expr &at(const std::string &tok, int lineno) {
    uint32_t idx = 0;
    auto [p, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), idx);
    if (ec != std::errc() || p != tok.data() + tok.size())
      throw SerializeError("line " + std::to_string(lineno) +
                           ": bad node index '" + tok + "'");
    if (idx >= nodes.size())
      throw SerializeError("line " + std::to_string(lineno) +
                           ": node index " + tok + " not yet defined");
    return nodes[idx];
  }

  // Parses one node line (already split). toks[0] is the index.
  void node_line(const std::vector<std::string> &toks, int lineno) {
    uint32_t idx = 0;
    {
      const std::string &t = toks[0];
      auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), idx);
      if (ec != std::errc() || p != t.data() + t.size())
        throw SerializeError("line " + std::to_string(lineno) +
                             ": bad node index '" + t + "'");
    }
    if (idx != nodes.size())
      throw SerializeError("line " + std::to_string(lineno) +
                           ": expected node index " +
                           std::to_string(nodes.size()));
    const std::string &kind = toks[1];
    auto need = [&](size_t n) {
      if (toks.size() - 2 != n)
        throw SerializeError("line " + std::to_string(lineno) + ": " + kind +
                             " expects " + std::to_string(n) + " arguments");
    };
    auto kids_from = [&](size_t first) {
      std::vector<Expr> kids;
      for (size_t i = first; i < toks.size(); i++)
        kids.push_back(at(toks[i], lineno));
      return kids;
    };
    Expr e;
    try {
      if (kind == "VAR") {
        need(1);
        e = var(toks[2]);
      } else if (kind == "CONST") {
        need(1);
        const std::string &v = toks[2];
        auto slash = v.find('/');
        if (slash == std::string::npos)
          throw SerializeError("line " + std::to_string(lineno) +
                               ": CONST wants <num>/<den>");
        Rat q;
        if (mpq_set_str(q.get_mpq_t(), v.c_str(), 10) != 0)
          throw SerializeError("line " + std::to_string(lineno) +
                               ": bad rational '" + v + "'");
        if (q.get_den() == 0)
          throw SerializeError("line " + std::to_string(lineno) +
                               ": zero denominator");
        q.canonicalize();
        e = cst(q);
      } else if (kind == "NEGINF") {
        need(0);
        e = neg_inf();
      } else if (kind == "ADD") {
        e = add(kids_from(2));
      } else if (kind == "MUL") {
        e = mul(kids_from(2));
      } else if (kind == "NEG") {
        need(1);
        e = neg(at(toks[2], lineno));
      } else if (kind == "DIV") {
        need(2);
        e = div(at(toks[2], lineno), at(toks[3], lineno));
      } else if (kind == "EXP") {
        need(1);
        e = exp_e(at(toks[2], lineno));
      } else if (kind == "MAX") {
        e = max_of(kids_from(2));
      } else {
        throw SerializeError("line " + std::to_string(lineno) +
                             ": unknown node kind '" + kind + "'");
      }
    } catch (const ExprError &ex) {
      throw SerializeError("line " + std::to_string(lineno) + ": " +
                           ex.what());
    }
    nodes.push_back(e);
  }
};

} // namespace

std::string serialize_expr(const Expr &root) {
  Writer w;
  uint32_t idx = w.index_of(root);
  w.text() += "ROOT " + std::to_string(idx) + "\n";
  return std::move(w.text());
}

Expr deserialize_expr(const std::string &text) {
  Reader rd;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  Expr root;
  bool have_root = false;
  while (std::getline(is, line)) {
    lineno++;
    auto toks = split_ws(line);
    if (toks.empty())
      continue;
    if (toks[0] == "ROOT") {
      if (toks.size() != 2)
        throw SerializeError("line " + std::to_string(lineno) +
                             ": ROOT wants one index");
      root = rd.at(toks[1], lineno);
      have_root = true;
    } else {
      if (have_root)
        throw SerializeError("line " + std::to_string(lineno) +
                             ": node after ROOT");
      if (toks.size() < 2)
        throw SerializeError("line " + std::to_string(lineno) +
                             ": truncated node line");
      rd.node_line(toks, lineno);
    }
  }
  if (!have_root)
    throw SerializeError("missing ROOT line");
  return root;
}

std::string serialize_env(const std::vector<EnvEntry> &entries) {
  Writer w;
  std::vector<uint32_t> idx;
  idx.reserve(entries.size());
  for (const EnvEntry &e : entries)
    idx.push_back(w.index_of(e.value));
  std::string out = std::move(w.text());
  for (size_t i = 0; i < entries.size(); i++) {
    out += "ROOT " + entries[i].array + "[" + std::to_string(entries[i].index) +
           "] " + std::to_string(idx[i]) + "\n";
  }
  return out;
}

std::vector<EnvEntry> deserialize_env(const std::string &text) {
  Reader rd;
  std::vector<EnvEntry> out;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    lineno++;
    auto toks = split_ws(line);
    if (toks.empty())
      continue;
    if (toks[0] == "ROOT") {
      if (toks.size() != 3)
        throw SerializeError("line " + std::to_string(lineno) +
                             ": ROOT wants <name>[<elem>] <idx>");
      const std::string &nm = toks[1];
      auto lb = nm.find('[');
      auto rb = nm.find(']');
      if (lb == std::string::npos || rb == std::string::npos || rb < lb ||
          rb != nm.size() - 1)
        throw SerializeError("line " + std::to_string(lineno) +
                             ": bad ROOT name '" + nm + "'");
      uint64_t elem = 0;
      const char *b = nm.data() + lb + 1, *e = nm.data() + rb;
      auto [p, ec] = std::from_chars(b, e, elem);
      if (ec != std::errc() || p != e)
        throw SerializeError("line " + std::to_string(lineno) +
                             ": bad element index in '" + nm + "'");
      out.push_back({nm.substr(0, lb), elem, rd.at(toks[2], lineno)});
    } else {
      if (toks.size() < 2)
        throw SerializeError("line " + std::to_string(lineno) +
                             ": truncated node line");
      rd.node_line(toks, lineno);
    }
  }
  if (out.empty())
    throw SerializeError("no ROOT lines");
  return out;
}

} // namespace ctaeq
