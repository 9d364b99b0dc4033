#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ctaeq/expr.hpp"

namespace ctaeq {

struct SerializeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Line format, one node per line, children defined before use:
//   <idx> VAR <name>
//   <idx> CONST <num>/<den>
//   <idx> ADD <idx>...
//   <idx> MUL <idx>...
//   <idx> NEG <idx>
//   <idx> DIV <idx> <idx>
//   <idx> EXP <idx>
//   <idx> MAX <idx>...
//   <idx> NEGINF
// A single-expression file ends with "ROOT <idx>". An environment file ends
// with one "ROOT <name>[<elem>] <idx>" line per tensor element, sharing one
// node table.

std::string serialize_expr(const Expr &root);
Expr deserialize_expr(const std::string &text);

struct EnvEntry {
  std::string array;
  uint64_t index;
  Expr value;
};

std::string serialize_env(const std::vector<EnvEntry> &entries);
std::vector<EnvEntry> deserialize_env(const std::string &text);

} // namespace ctaeq
